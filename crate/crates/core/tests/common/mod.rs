//! Independent oracles and property checks shared by the invariant tests and
//! the acceptance runner.

#![allow(dead_code)]

use std::f64::consts::PI;

use flattop::design::{LinearDesign, TemplateParams};
use flattop::energy::{amaf_ris_dc_power, PowerBudget, SplitterStage};
use flattop::footprint::{ground_footprint, DeploymentScenario};
use flattop::geometry::AmafRisLayout;
use flattop::optimizer::{optimize_phases, FlatTopSpec, OptimizerConfig};
use flattop::pattern::{linear_pattern, AngularGrid, Normalization};
use flattop::propagation::{coupling_matrix, ElementPattern};
use flattop::shaping::{group_size, BinaryGrouping, PhaseProfile, ProfileKind};
use flattop::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const SIZES: [usize; 3] = [8, 16, 40];

/// Array factor by direct summation over centered element positions. The
/// library sums from element 0 in Horner form; the two differ by a pure
/// phase factor, so their magnitudes must agree.
pub fn direct_power(w: &[Complex64], theta: f64) -> f64 {
    let n = w.len() as f64;
    let s = theta.sin();
    w.iter()
        .enumerate()
        .map(|(k, wk)| wk * Complex64::from_polar(1.0, -PI * (k as f64 - (n - 1.0) / 2.0) * s))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Dominant right singular vector and value of `t` by power iteration on
/// `T^H T`, independent of any library SVD.
pub fn power_iteration(
    t: &DMatrix<Complex64>,
    iters: usize,
) -> (f64, Vec<Complex64>, Vec<Complex64>) {
    let (rows, cols) = t.shape();
    let mut v: Vec<Complex64> = (0..cols)
        .map(|m| Complex64::new(1.0 + 0.1 * m as f64, 0.05 * m as f64))
        .collect();
    let mut u = vec![Complex64::new(0.0, 0.0); rows];
    let mut sigma = 0.0;
    for _ in 0..iters {
        for (n, un) in u.iter_mut().enumerate() {
            *un = (0..cols).map(|m| t[(n, m)] * v[m]).sum();
        }
        sigma = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        u.iter_mut().for_each(|z| *z /= sigma);
        for (m, vm) in v.iter_mut().enumerate() {
            *vm = (0..rows).map(|n| t[(n, m)].conj() * u[n]).sum();
        }
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nv);
    }
    (sigma, u, v)
}

/// Friis entry written out from the ray distance and angle.
pub fn friis_oracle(x_ris: f64, x_amaf: f64, f: f64) -> Complex64 {
    let lateral = x_ris - x_amaf;
    let r = (lateral * lateral + f * f).sqrt();
    let cos_psi = f / r;
    let g = 4.0 * cos_psi * cos_psi;
    Complex64::from_polar(g / (2.0 * PI * r), -PI * r)
}

pub fn db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn size() -> impl Strategy<Value = usize> {
    prop::sample::select(SIZES.to_vec())
}

fn weights(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.05f64..1.0, -PI..PI), n).prop_map(|v| {
        v.into_iter()
            .map(|(m, p)| Complex64::from_polar(m, p))
            .collect()
    })
}

fn sized_weights() -> impl Strategy<Value = Vec<Complex64>> {
    size().prop_flat_map(weights)
}

/// Weights with `w_k = w_{N-1-k}`.
fn symmetric_weights() -> impl Strategy<Value = Vec<Complex64>> {
    size().prop_flat_map(|n| {
        weights(n.div_ceil(2))
            .prop_map(move |half| (0..n).map(|k| half[k.min(n - 1 - k)]).collect())
    })
}

fn design_params() -> impl Strategy<Value = (usize, usize, f64, f64, f64, f64)> {
    (
        size(),
        1usize..=3,
        2.0f64..20.0,
        0.0f64..0.24,
        0.0f64..3.0,
        0.5f64..2.0,
    )
}

fn build_design(
    (n, na, f, frac, c, p): (usize, usize, f64, f64, f64, f64),
) -> Result<LinearDesign, TestCaseError> {
    let layout = AmafRisLayout::linear(n, na, f).map_err(fail)?;
    let params = TemplateParams {
        grouping: if group_size(n, frac) == 0 {
            BinaryGrouping::empty(n)
        } else {
            BinaryGrouping::from_fraction(n, frac).map_err(fail)?
        },
        c,
        p,
    };
    LinearDesign::new(
        layout,
        &ElementPattern::patch(),
        &ElementPattern::patch(),
        &params,
    )
    .map_err(fail)
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn check_unit(p: &PhaseProfile) -> Result<(), TestCaseError> {
    for z in p.values() {
        prop_assert!((z.norm() - 1.0).abs() <= 1e-12, "{:?} entry {z}", p.kind());
    }
    Ok(())
}

pub fn prop_unit_modulus(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&design_params(), |params| {
            let d = build_design(params)?;
            for p in [&d.binary, &d.ppf, &d.template, &d.binary_template] {
                check_unit(p)?;
            }
            check_unit(&PhaseProfile::from(&d.cophase))?;
            check_unit(&d.template_aperture())?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn prop_global_phase(runner: &mut TestRunner) -> Result<(), String> {
    let grid = AngularGrid::degrees(-90.0, 90.0, 0.5).unwrap();
    runner
        .run(&(sized_weights(), -PI..PI), |(w, alpha)| {
            let rot = Complex64::from_polar(1.0, alpha);
            let wr: Vec<Complex64> = w.iter().map(|z| z * rot).collect();
            let el = ElementPattern::patch();
            let a = linear_pattern(&w, &grid, &el, Normalization::Absolute).map_err(fail)?;
            let b = linear_pattern(&wr, &grid, &el, Normalization::Absolute).map_err(fail)?;
            let peak = a.peak_db();
            for (x, y) in a.power_db().iter().zip(b.power_db()) {
                if *x > peak - 100.0 {
                    prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn prop_peak_bound(runner: &mut TestRunner) -> Result<(), String> {
    let grid = AngularGrid::degrees(-90.0, 90.0, 0.25).unwrap();
    runner
        .run(&sized_weights(), |w| {
            let bound = w.len() as f64 * w.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let p = linear_pattern(
                &w,
                &grid,
                &ElementPattern::isotropic(),
                Normalization::Absolute,
            )
            .map_err(fail)?;
            prop_assert!(p.peak_db() <= db(bound) + 1e-9);
            // Equality at broadside for a co-phased uniform amplitude.
            let m = w[0].norm();
            let flat: Vec<Complex64> = w.iter().map(|_| Complex64::new(m, 0.0)).collect();
            let q = linear_pattern(
                &flat,
                &grid,
                &ElementPattern::isotropic(),
                Normalization::Absolute,
            )
            .map_err(fail)?;
            let n = w.len() as f64;
            prop_assert!((q.peak_db() - db(n * n * m * m)).abs() <= 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn mirror_check(w: &[Complex64]) -> Result<(), TestCaseError> {
    let grid = AngularGrid::degrees(-90.0, 90.0, 0.5).unwrap();
    let p =
        linear_pattern(w, &grid, &ElementPattern::patch(), Normalization::Peak).map_err(fail)?;
    let v = p.power_db();
    for i in 0..v.len() {
        let (a, b) = (v[i], v[v.len() - 1 - i]);
        if a.max(b) > -100.0 {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b} at index {i}");
        }
    }
    Ok(())
}

/// Pattern mirror symmetry for symmetric and for real weights, plus the
/// geometric mirror symmetries of rays, `|u1|` and the binary vector.
pub fn prop_mirror(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&symmetric_weights(), |w| mirror_check(&w))
        .map_err(|e| e.to_string())?;
    runner
        .run(&sized_weights(), |w| {
            let real: Vec<Complex64> = w.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
            mirror_check(&real)
        })
        .map_err(|e| e.to_string())?;
    runner
        .run(&design_params(), |params| {
            let d = build_design(params)?;
            let (np, na) = (d.layout.ris().len(), d.layout.amaf().len());
            for m in 0..na {
                for n in 0..np {
                    let a = d.layout.ray_geometry(m, n).map_err(fail)?;
                    let b = d
                        .layout
                        .ray_geometry(na - 1 - m, np - 1 - n)
                        .map_err(fail)?;
                    prop_assert!((a.distance - b.distance).abs() <= 1e-12);
                    prop_assert_eq!(a.departure_angle, a.arrival_angle);
                }
            }
            let u = d.eigenmode.u1_magnitude();
            let peak = u.iter().copied().fold(0.0, f64::max);
            for n in 0..np {
                prop_assert!((u[n] - u[np - 1 - n]).abs() <= 1e-9 * peak.max(1.0));
            }
            for n in np / 2..np - 1 {
                prop_assert!(u[n + 1] <= u[n] + 1e-12, "not unimodal at {n}");
            }
            for n in 0..np {
                prop_assert_eq!(d.binary.values()[n], d.binary.values()[np - 1 - n]);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Accepted iterates never increase the objective; the result stays unit
/// modulus and does not end above the starting grid ripple.
pub fn prop_monotone_trace(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = size().prop_flat_map(|n| {
        (
            prop::collection::vec(0.2f64..1.0, n),
            prop::collection::vec(-PI..PI, n),
            any::<u64>(),
        )
    });
    runner
        .run(&strategy, |(modulus, phases, seed)| {
            let init = PhaseProfile::from_phases(&phases, ProfileKind::Composed);
            let spec = FlatTopSpec::symmetric_deg(15.0, 35.0, 7);
            let config = OptimizerConfig {
                max_iterations: 120,
                seed,
                ..OptimizerConfig::default()
            };
            let r = optimize_phases(&modulus, &init, &spec, &ElementPattern::patch(), &config)
                .map_err(fail)?;
            for pair in r.objective_trace.windows(2) {
                prop_assert!(pair[1] <= pair[0], "trace rose {} -> {}", pair[0], pair[1]);
            }
            prop_assert!(r.grid_ripple_db <= r.initial_grid_ripple_db);
            check_unit(&r.phases)?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Coupling phase identity and taper monotonicity.
pub fn prop_coupling(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&(size(), 1usize..=3, 1.0f64..20.0), |(n, na, f)| {
            let l = AmafRisLayout::linear(n, na, f).map_err(fail)?;
            let t = coupling_matrix(&l, &ElementPattern::patch(), &ElementPattern::patch());
            for m in 0..na {
                let xa = l.amaf().position_xy(m)[0];
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    let da = (l.ris().position_xy(a)[0] - xa).abs();
                    let db = (l.ris().position_xy(b)[0] - xa).abs();
                    da.total_cmp(&db)
                });
                for pair in order.windows(2) {
                    prop_assert!(
                        t.get(pair[1], m).norm() <= t.get(pair[0], m).norm() * (1.0 + 1e-12)
                    );
                }
                for k in 0..n {
                    let r = l.ray_geometry(m, k).map_err(fail)?.distance;
                    let d = (t.get(k, m).arg() + PI * r).rem_euclid(2.0 * PI);
                    prop_assert!(d.min(2.0 * PI - d) <= 1e-9, "phase off by {d}");
                    let o = friis_oracle(l.ris().position_xy(k)[0], xa, f);
                    prop_assert!((t.get(k, m) - o).norm() <= 1e-12 * o.norm().max(1e-300));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Footprint peak normalization and, for a single isotropic element,
/// strictly decreasing power with ground distance.
pub fn prop_footprint(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&(2.0f64..20.0, 0.0f64..1.2), |(h, tilt)| {
            let s = DeploymentScenario {
                mount_height: h,
                downtilt: tilt,
                x_range: (-20.0, 20.0),
                y_range: (-20.0, 20.0),
                resolution: 2.0,
                ..DeploymentScenario::default()
            };
            let w = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            let g = ground_footprint(&w, &ElementPattern::isotropic(), &s).map_err(fail)?;
            let peak = g
                .power_db()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(peak, 0.0);
            let mut cells: Vec<(f64, f64)> = Vec::new();
            for (i, y) in g.y().iter().enumerate() {
                for (j, x) in g.x().iter().enumerate() {
                    let p = g.power_db()[(i, j)];
                    if p > flattop::pattern::DB_FLOOR {
                        cells.push((x.hypot(*y), p));
                    }
                }
            }
            cells.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in cells.windows(2) {
                if pair[1].0 > pair[0].0 + 1e-9 {
                    prop_assert!(pair[1].1 < pair[0].1);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Energy: global-phase invariance, monotonicity in efficiency and loss,
/// and the single-PA conservation floor.
pub fn prop_energy(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (
        prop::collection::vec((0.01f64..1.0, -PI..PI), 1..6),
        -PI..PI,
        0.05f64..0.9,
        0.0f64..3.0,
    );
    runner
        .run(&strategy, |(feed, alpha, eta, loss)| {
            let v1: Vec<Complex64> = feed
                .iter()
                .map(|&(m, p)| Complex64::from_polar(m, p))
                .collect();
            let rot: Vec<Complex64> = v1
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, alpha))
                .collect();
            let budget = |eta: f64, loss: f64| PowerBudget {
                pa_efficiency: eta,
                splitter_stages: vec![
                    SplitterStage {
                        ways: 4,
                        insertion_loss_db: loss,
                    },
                    SplitterStage {
                        ways: 10,
                        insertion_loss_db: loss,
                    },
                ],
                ..PowerBudget::default()
            };
            let a = amaf_ris_dc_power(&v1, &budget(eta, loss)).map_err(fail)?;
            let b = amaf_ris_dc_power(&rot, &budget(eta, loss)).map_err(fail)?;
            prop_assert!((a.total_dc_mw - b.total_dc_mw).abs() <= 1e-12 * a.total_dc_mw);
            let c = amaf_ris_dc_power(&v1, &budget(eta + 0.05, loss)).map_err(fail)?;
            prop_assert!(c.total_dc_mw <= a.total_dc_mw);

            let act =
                flattop::energy::active_array_dc_power(40, &budget(eta, loss)).map_err(fail)?;
            let act_lossier = flattop::energy::active_array_dc_power(40, &budget(eta, loss + 0.5))
                .map_err(fail)?;
            let act_eff = flattop::energy::active_array_dc_power(40, &budget(eta + 0.05, loss))
                .map_err(fail)?;
            prop_assert!(act_lossier.total_dc_mw >= act.total_dc_mw);
            prop_assert!(act_eff.total_dc_mw <= act.total_dc_mw);
            prop_assert!(act.per_pa_mw >= flattop::energy::dbm_to_mw(20.0) * (1.0 - 1e-12));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every property with the given number of cases each; names the first
/// failure.
pub fn invariant_suite(cases: u32) -> Result<(), String> {
    type Prop = fn(&mut TestRunner) -> Result<(), String>;
    let props: [(&str, Prop); 8] = [
        ("unit modulus", prop_unit_modulus),
        ("global phase", prop_global_phase),
        ("peak bound", prop_peak_bound),
        ("mirror symmetry", prop_mirror),
        ("monotone trace", prop_monotone_trace),
        ("coupling", prop_coupling),
        ("footprint", prop_footprint),
        ("energy", prop_energy),
    ];
    for (name, prop) in props {
        prop(&mut runner(cases)).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

//! Phase-only refinement of a flat-top template under the fixed eigenmode
//! taper.
//!
//! Weights are `modulus . exp(j phi)` with `phi` the free aperture phases. The
//! objective, in dB, is
//!
//! ```text
//! J = a * smax_tau(|P_i - mean(P)|)  +  b * smax0_tau(Q_k - mean(P) - target)
//! ```
//!
//! where `P_i` is the pattern on the passband grid, `Q_k` on the stopband
//! samples, `smax_tau` a log-sum-exp soft maximum and `smax0_tau` the same
//! with an extra zero entry. It is minimized by gradient descent with
//! Armijo backtracking, so accepted iterates never increase `J`. The
//! temperature `tau` is halved on a fixed schedule; lowering `tau` can only
//! lower `J`, which keeps the recorded trace nonincreasing.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{
    flat_top_metrics, linear_pattern, AngularGrid, FlatTopMetrics, Normalization,
};
use crate::propagation::ElementPattern;
use crate::shaping::{PhaseProfile, ProfileKind};

/// Dense-grid ripple above which a flat-top result is not considered useful.
pub const USEFUL_RIPPLE_DB: f64 = 3.0;

const DB: f64 = 10.0 / LN_10;
const POWER_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTopSpec {
    /// Radians.
    pub passband: (f64, f64),
    /// Radians; must not intersect the passband.
    pub stopbands: Vec<(f64, f64)>,
    /// Samples over the passband, both edges included.
    pub grid_points: usize,
    /// Stopband sampling step, radians.
    pub stopband_step: f64,
    /// Allowed stopband level relative to the passband mean, dB.
    pub sidelobe_target_db: f64,
    pub ripple_weight: f64,
    pub sidelobe_weight: f64,
}

impl FlatTopSpec {
    /// Symmetric sector `[-half, half]` with stopbands from `stop` out to
    /// 90 degrees. Angles in degrees.
    pub fn symmetric_deg(half: f64, stop: f64, grid_points: usize) -> Self {
        Self {
            passband: (-half.to_radians(), half.to_radians()),
            stopbands: vec![
                (-90f64.to_radians(), -stop.to_radians()),
                (stop.to_radians(), 90f64.to_radians()),
            ],
            grid_points,
            stopband_step: 0.5f64.to_radians(),
            sidelobe_target_db: -15.0,
            ripple_weight: 1.0,
            sidelobe_weight: 1.0,
        }
    }

    /// Wide sector used for the 40-element reference design.
    pub fn wide() -> Self {
        Self::symmetric_deg(21.0, 31.0, 15)
    }

    /// Narrow sector used for the 40-element reference design.
    pub fn narrow() -> Self {
        Self {
            sidelobe_target_db: -12.0,
            sidelobe_weight: 0.3,
            ..Self::symmetric_deg(10.0, 22.0, 15)
        }
    }

    pub fn with_grid_points(&self, grid_points: usize) -> Self {
        Self {
            grid_points,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.passband;
        if !(lo < hi) {
            return Err(Error::Passband(format!("empty passband [{lo}, {hi}]")));
        }
        let lim = std::f64::consts::FRAC_PI_2 + 1e-12;
        if lo < -lim || hi > lim {
            return Err(Error::Passband("passband outside [-90, 90] degrees".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Passband(format!(
                "grid_points must be at least 2, got {}",
                self.grid_points
            )));
        }
        for &(a, b) in &self.stopbands {
            if !(a < b) || a < -lim || b > lim {
                return Err(Error::Passband(format!("invalid stopband [{a}, {b}]")));
            }
            if a < hi && b > lo {
                return Err(Error::Passband(format!(
                    "stopband [{a}, {b}] overlaps the passband"
                )));
            }
        }
        if !(self.stopband_step > 0.0) {
            return Err(Error::Passband("stopband_step must be positive".into()));
        }
        if !(self.ripple_weight >= 0.0 && self.sidelobe_weight >= 0.0) {
            return Err(Error::Passband("weights must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn passband_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.passband;
        let n = self.grid_points;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n as f64 - 1.0))
            .collect()
    }

    pub fn stopband_grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for &(a, b) in &self.stopbands {
            let n = ((b - a) / self.stopband_step).floor() as usize;
            out.extend((0..=n).map(|i| a + self.stopband_step * i as f64));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Objective change, dB, below which a window of iterations counts as
    /// stalled.
    pub tolerance: f64,
    pub stall_window: usize,
    pub initial_step: f64,
    pub step_growth: f64,
    pub step_shrink: f64,
    pub min_step: f64,
    pub armijo: f64,
    /// Soft-max temperature, dB.
    pub temperature: f64,
    pub temperature_decay: f64,
    pub anneal_every: usize,
    pub min_temperature: f64,
    pub seed: u64,
    /// Start from uniformly random phases instead of the template.
    pub random_init: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-4,
            stall_window: 10,
            initial_step: 1e-3,
            step_growth: 2.0,
            step_shrink: 0.5,
            min_step: 1e-14,
            armijo: 1e-4,
            temperature: 0.1,
            temperature_decay: 0.5,
            anneal_every: 50,
            min_temperature: 0.1 / 64.0,
            seed: 0,
            random_init: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("tolerance", self.tolerance),
            ("initial_step", self.initial_step),
            ("min_step", self.min_step),
            ("armijo", self.armijo),
            ("temperature", self.temperature),
            ("min_temperature", self.min_temperature),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Optimizer(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iterations == 0 || self.stall_window == 0 || self.anneal_every == 0 {
            return Err(Error::Optimizer(
                "max_iterations, stall_window and anneal_every must be positive".into(),
            ));
        }
        if !(self.step_growth >= 1.0) {
            return Err(Error::Optimizer("step_growth must be >= 1".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::Optimizer("step_shrink must lie in (0, 1)".into()));
        }
        if !(self.temperature_decay > 0.0 && self.temperature_decay <= 1.0) {
            return Err(Error::Optimizer(
                "temperature_decay must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Log-sum-exp soft maximum and its weights (the softmax).
fn soft_max(values: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = values.iter().map(|v| ((v - m) / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    (m + tau * s.ln(), e.into_iter().map(|x| x / s).collect())
}

/// Precomputed objective for a fixed modulus, spec and element pattern.
#[derive(Debug, Clone)]
pub struct FlatTopObjective {
    modulus: Vec<f64>,
    passband: Vec<f64>,
    stopband: Vec<f64>,
    passband_element_db: Vec<f64>,
    stopband_element_db: Vec<f64>,
    target_db: f64,
    ripple_weight: f64,
    sidelobe_weight: f64,
}

impl FlatTopObjective {
    pub fn new(modulus: &[f64], spec: &FlatTopSpec, element: &ElementPattern) -> Result<Self> {
        spec.validate()?;
        let gain = |t: f64| element.gain(t.abs()).unwrap_or(0.0);
        let passband = spec.passband_grid();
        if passband.iter().any(|&t| gain(t) <= 0.0) {
            return Err(Error::Passband(
                "element pattern vanishes inside the passband".into(),
            ));
        }
        let stopband: Vec<f64> = spec
            .stopband_grid()
            .into_iter()
            .filter(|&t| gain(t) > 0.0)
            .collect();
        Ok(Self {
            modulus: modulus.to_vec(),
            passband_element_db: passband.iter().map(|&t| DB * gain(t).ln()).collect(),
            stopband_element_db: stopband.iter().map(|&t| DB * gain(t).ln()).collect(),
            passband,
            stopband,
            target_db: spec.sidelobe_target_db,
            ripple_weight: spec.ripple_weight,
            sidelobe_weight: spec.sidelobe_weight,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.modulus.len()
    }

    fn weights(&self, phases: &[f64]) -> Vec<Complex64> {
        self.modulus
            .iter()
            .zip(phases)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect()
    }

    /// Pattern in dB at each angle and its gradient with respect to the phases.
    fn levels(
        &self,
        w: &[Complex64],
        angles: &[f64],
        element_db: &[f64],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut levels = Vec::with_capacity(angles.len());
        let mut grads = Vec::with_capacity(angles.len());
        for (&t, &e) in angles.iter().zip(element_db) {
            let step = Complex64::from_polar(1.0, -PI * t.sin());
            let mut phasor = Complex64::new(1.0, 0.0);
            let terms: Vec<Complex64> = w
                .iter()
                .map(|wk| {
                    let c = wk * phasor;
                    phasor *= step;
                    c
                })
                .collect();
            let af: Complex64 = terms.iter().sum();
            let p = af.norm_sqr().max(POWER_FLOOR);
            levels.push(DB * p.ln() + e);
            let afc = af.conj();
            grads.push(terms.iter().map(|c| -2.0 * DB * (afc * c).im / p).collect());
        }
        (levels, grads)
    }

    /// Objective value and gradient at `phases` for temperature `tau`.
    pub fn evaluate(&self, phases: &[f64], tau: f64) -> (f64, Vec<f64>) {
        let n = self.n_elements();
        let w = self.weights(phases);
        let (pl, pg) = self.levels(&w, &self.passband, &self.passband_element_db);
        let np = pl.len() as f64;
        let mean = pl.iter().sum::<f64>() / np;
        let mut mean_grad = vec![0.0; n];
        for g in &pg {
            for k in 0..n {
                mean_grad[k] += g[k] / np;
            }
        }

        let dev: Vec<f64> = pl.iter().flat_map(|p| [p - mean, mean - p]).collect();
        let (ripple, soft) = soft_max(&dev, tau);
        let mut grad = vec![0.0; n];
        for (i, g) in pg.iter().enumerate() {
            let s = soft[2 * i] - soft[2 * i + 1];
            for k in 0..n {
                grad[k] += self.ripple_weight * s * (g[k] - mean_grad[k]);
            }
        }

        let mut value = self.ripple_weight * ripple;
        if !self.stopband.is_empty() && self.sidelobe_weight > 0.0 {
            let (sl, sg) = self.levels(&w, &self.stopband, &self.stopband_element_db);
            let mut excess: Vec<f64> = sl.iter().map(|q| q - mean - self.target_db).collect();
            excess.push(0.0);
            let (side, soft) = soft_max(&excess, tau);
            value += self.sidelobe_weight * side;
            for (kk, g) in sg.iter().enumerate() {
                let s = soft[kk];
                for k in 0..n {
                    grad[k] += self.sidelobe_weight * s * (g[k] - mean_grad[k]);
                }
            }
        }
        (value, grad)
    }

    /// Max minus min of the pattern over the passband grid, dB.
    pub fn grid_ripple(&self, phases: &[f64]) -> f64 {
        let w = self.weights(phases);
        let (pl, _) = self.levels(&w, &self.passband, &self.passband_element_db);
        let max = pl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = pl.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// Aperture phases relative to the co-phased eigenmode.
    pub phases: PhaseProfile,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub initial_grid_ripple_db: f64,
    pub grid_ripple_db: f64,
    /// Metrics on the dense verification grid.
    pub initial_metrics: FlatTopMetrics,
    pub metrics: FlatTopMetrics,
    /// The final iterate had more passband ripple than the start and was
    /// replaced by the initial phases.
    pub reverted_to_init: bool,
    pub grid_points: usize,
}

impl OptimizationReport {
    pub fn useful(&self) -> bool {
        self.metrics.passband_ripple_db <= USEFUL_RIPPLE_DB
    }

    /// Line-oriented `key = value` text followed by phase and trace sections.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x}"));
        let mut s = String::new();
        s.push_str("[summary]\n");
        s.push_str(&format!("converged = {}\n", self.converged));
        s.push_str(&format!("useful = {}\n", self.useful()));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s.push_str(&format!("grid_points = {}\n", self.grid_points));
        s.push_str(&format!("reverted_to_init = {}\n", self.reverted_to_init));
        s.push_str(&format!(
            "initial_grid_ripple_db = {}\n",
            self.initial_grid_ripple_db
        ));
        s.push_str(&format!("grid_ripple_db = {}\n", self.grid_ripple_db));
        s.push_str(&format!(
            "initial_dense_ripple_db = {}\n",
            self.initial_metrics.passband_ripple_db
        ));
        s.push_str(&format!(
            "dense_ripple_db = {}\n",
            self.metrics.passband_ripple_db
        ));
        s.push_str(&format!(
            "passband_mean_db = {}\n",
            self.metrics.passband_mean_db
        ));
        s.push_str(&format!(
            "max_sidelobe_db = {}\n",
            opt(self.metrics.max_sidelobe_db)
        ));
        s.push_str(&format!(
            "transition_width_deg = {}\n",
            opt(self.metrics.transition_width_deg)
        ));
        s.push_str(&format!(
            "final_objective = {}\n",
            self.objective_trace.last().copied().unwrap_or(f64::NAN)
        ));
        s.push_str("\n[phases]\n");
        s.push_str(&self.phases.to_csv());
        s.push_str("\n[trace]\n");
        for (i, v) in self.objective_trace.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        s
    }
}

/// Reference passband metrics on the dense 0.1 degree grid.
pub fn dense_metrics(
    modulus: &[f64],
    phases: &[f64],
    passband: (f64, f64),
    element: &ElementPattern,
) -> Result<FlatTopMetrics> {
    let w: Vec<Complex64> = modulus
        .iter()
        .zip(phases)
        .map(|(&m, &p)| Complex64::from_polar(m, p))
        .collect();
    let p = linear_pattern(&w, &AngularGrid::dense(), element, Normalization::Peak)?;
    flat_top_metrics(&p, passband)
}

pub fn optimize_phases(
    modulus: &[f64],
    init: &PhaseProfile,
    spec: &FlatTopSpec,
    element: &ElementPattern,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    config.validate()?;
    if modulus.len() != init.len() {
        return Err(Error::LengthMismatch {
            expected: modulus.len(),
            actual: init.len(),
        });
    }
    if modulus.is_empty() {
        return Err(Error::Optimizer("no elements to optimize".into()));
    }
    let objective = FlatTopObjective::new(modulus, spec, element)?;
    let n = modulus.len();

    let start: Vec<f64> = if config.random_init {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
    } else {
        init.phases()
    };

    let initial_grid_ripple = objective.grid_ripple(&start);
    let initial_metrics = dense_metrics(modulus, &start, spec.passband, element)?;

    let mut phi = start.clone();
    let mut tau = config.temperature;
    let (mut value, mut grad) = objective.evaluate(&phi, tau);
    // Element 0 is pinned to fix the global phase.
    grad[0] = 0.0;
    let mut trace = vec![value];
    let mut step = config.initial_step;
    let mut iterations = 0;
    let mut accepted_at_tau = 0;
    let mut converged = false;

    let anneal = |tau: &mut f64| -> bool {
        if *tau <= config.min_temperature {
            return false;
        }
        *tau = (*tau * config.temperature_decay).max(config.min_temperature);
        true
    };

    while iterations < config.max_iterations {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        let stalled = if gnorm2 <= 1e-24 {
            true
        } else {
            // Backtracking line search on the current temperature.
            let mut accepted = None;
            while step >= config.min_step {
                let trial: Vec<f64> = phi.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
                let (v, g) = objective.evaluate(&trial, tau);
                if v <= value - config.armijo * step * gnorm2 {
                    accepted = Some((trial, v, g));
                    break;
                }
                step *= config.step_shrink;
            }
            match accepted {
                None => {
                    step = config.initial_step;
                    true
                }
                Some((trial, v, g)) => {
                    phi = trial;
                    value = v;
                    grad = g;
                    grad[0] = 0.0;
                    trace.push(value);
                    iterations += 1;
                    accepted_at_tau += 1;
                    step *= config.step_growth;
                    let w = config.stall_window;
                    accepted_at_tau >= w && trace[trace.len() - 1 - w] - value < config.tolerance
                }
            }
        };

        let scheduled = accepted_at_tau > 0 && accepted_at_tau % config.anneal_every == 0;
        if stalled || scheduled {
            if anneal(&mut tau) {
                let (v, g) = objective.evaluate(&phi, tau);
                value = v.min(value);
                grad = g;
                grad[0] = 0.0;
                trace.push(value);
                accepted_at_tau = 0;
            } else if stalled {
                converged = true;
                break;
            }
        }
    }

    let mut grid_ripple = objective.grid_ripple(&phi);
    let mut reverted = false;
    if grid_ripple > initial_grid_ripple {
        phi = start;
        grid_ripple = initial_grid_ripple;
        reverted = true;
    }
    let metrics = dense_metrics(modulus, &phi, spec.passband, element)?;
    Ok(OptimizationReport {
        phases: PhaseProfile::from_phases(&phi, ProfileKind::Optimized),
        iterations,
        objective_trace: trace,
        converged,
        initial_grid_ripple_db: initial_grid_ripple,
        grid_ripple_db: grid_ripple,
        initial_metrics,
        metrics,
        reverted_to_init: reverted,
        grid_points: spec.grid_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSensitivityRow {
    pub grid_points: usize,
    pub converged: bool,
    pub iterations: usize,
    pub grid_ripple_db: f64,
    pub dense_ripple_db: f64,
    pub max_sidelobe_db: Option<f64>,
    pub useful: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSensitivityReport {
    pub rows: Vec<GridSensitivityRow>,
    pub reports: Vec<OptimizationReport>,
}

impl GridSensitivityReport {
    pub fn to_table(&self) -> String {
        let mut s = String::from(
            "grid_points,converged,iterations,grid_ripple_db,dense_ripple_db,max_sidelobe_db,useful\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:.4},{:.4},{},{}\n",
                r.grid_points,
                r.converged,
                r.iterations,
                r.grid_ripple_db,
                r.dense_ripple_db,
                r.max_sidelobe_db
                    .map_or("none".into(), |v| format!("{v:.4}")),
                r.useful
            ));
        }
        s
    }
}

/// Runs the same spec at each passband sampling density; only the grid
/// point count differs between runs.
pub fn grid_sensitivity_experiment(
    modulus: &[f64],
    init: &PhaseProfile,
    spec: &FlatTopSpec,
    grid_points: &[usize],
    element: &ElementPattern,
    config: &OptimizerConfig,
) -> Result<GridSensitivityReport> {
    let reports: Vec<OptimizationReport> = grid_points
        .par_iter()
        .map(|&g| optimize_phases(modulus, init, &spec.with_grid_points(g), element, config))
        .collect::<Result<_>>()?;
    let rows = reports
        .iter()
        .map(|r| GridSensitivityRow {
            grid_points: r.grid_points,
            converged: r.converged,
            iterations: r.iterations,
            grid_ripple_db: r.grid_ripple_db,
            dense_ripple_db: r.metrics.passband_ripple_db,
            max_sidelobe_db: r.metrics.max_sidelobe_db,
            useful: r.useful(),
        })
        .collect();
    Ok(GridSensitivityReport { rows, reports })
}

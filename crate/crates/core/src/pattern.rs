//! Far-field power patterns by array factor times element factor, and
//! flat-top quality metrics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::propagation::ElementPattern;

/// Value used for zero power in dB outputs.
pub const DB_FLOOR: f64 = -300.0;

/// Guard band excluded on each side of the passband when looking for
/// sidelobes.
pub const SIDELOBE_GUARD_DEG: f64 = 2.0;

pub fn to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Sorted angles from broadside, radians within [-pi/2, pi/2].
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    angles: Vec<f64>,
}

impl AngularGrid {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Grid("grid is empty".into()));
        }
        if angles.iter().any(|a| !(a.abs() <= FRAC_PI_2 + 1e-12)) {
            return Err(Error::Grid("angles must lie within [-pi/2, pi/2]".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("angles must be strictly increasing".into()));
        }
        Ok(Self { angles })
    }

    /// `n` evenly spaced angles from `lo` to `hi` inclusive, radians.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::Grid("grid is empty".into())),
            1 => Self::new(vec![lo]),
            _ => {
                let step = (hi - lo) / (n as f64 - 1.0);
                Self::new((0..n).map(|i| lo + step * i as f64).collect())
            }
        }
    }

    /// Evenly spaced grid in degrees, `step_deg` apart, both ends included.
    pub fn degrees(lo_deg: f64, hi_deg: f64, step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0) || hi_deg < lo_deg {
            return Err(Error::Grid(format!(
                "bad degree grid {lo_deg}..{hi_deg} step {step_deg}"
            )));
        }
        let n = ((hi_deg - lo_deg) / step_deg).round() as usize + 1;
        Self::new(
            (0..n)
                .map(|i| (lo_deg + step_deg * i as f64).to_radians())
                .collect(),
        )
    }

    /// 1801 points over [-90, 90] degrees.
    pub fn dense() -> Self {
        Self::degrees(-90.0, 90.0, 0.1).expect("static grid")
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Peak at 0 dB.
    #[default]
    Peak,
    /// `10 log10(|a^H w|^2 E)` with no rescaling.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    grid: AngularGrid,
    power_db: Vec<f64>,
    normalization: Normalization,
}

impl RadiationPattern {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn power_db(&self) -> &[f64] {
        &self.power_db
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn peak_db(&self) -> f64 {
        self.power_db
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Angular extent in radians between the outermost samples at or above
    /// `peak + level_db` (`level_db` negative, e.g. -3).
    pub fn beamwidth(&self, level_db: f64) -> f64 {
        let threshold = self.peak_db() + level_db;
        let a = self.grid.angles();
        let above: Vec<usize> = (0..a.len())
            .filter(|&i| self.power_db[i] >= threshold)
            .collect();
        match (above.first(), above.last()) {
            (Some(&lo), Some(&hi)) => a[hi] - a[lo],
            _ => 0.0,
        }
    }

    /// `angle_deg,power_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,power_db\n");
        for (a, p) in self.grid.angles().iter().zip(&self.power_db) {
            out.push_str(&format!("{},{}\n", a.to_degrees(), p));
        }
        out
    }
}

/// `a(theta)` with entries `conj(exp(-j pi k sin theta))`.
pub fn steering_vector(theta: f64, n: usize) -> Vec<Complex64> {
    let s = theta.sin();
    (0..n)
        .map(|k| Complex64::from_polar(1.0, -PI * k as f64 * s).conj())
        .collect()
}

/// `a^H(theta) w`.
pub fn array_factor(weights: &[Complex64], theta: f64) -> Complex64 {
    sine_space_factor(weights, theta.sin())
}

/// Array factor at direction cosine `u = sin(theta)`.
pub(crate) fn sine_space_factor(weights: &[Complex64], u: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -PI * u);
    // Horner form of sum_k w_k step^k.
    weights
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, w| acc * step + w)
}

fn normalize(power: Vec<f64>, normalization: Normalization) -> Vec<f64> {
    match normalization {
        Normalization::Absolute => power.into_iter().map(to_db).collect(),
        Normalization::Peak => {
            let peak = power.iter().copied().fold(0.0, f64::max);
            if peak > 0.0 {
                power.into_iter().map(|p| to_db(p / peak)).collect()
            } else {
                vec![DB_FLOOR; power.len()]
            }
        }
    }
}

/// Linear array power at each grid angle, `|a^H w|^2 E(theta)`.
pub fn linear_power(
    weights: &[Complex64],
    grid: &AngularGrid,
    element: &ElementPattern,
) -> Vec<f64> {
    let bound = weights.len() as f64 * weights.iter().map(|w| w.norm_sqr()).sum::<f64>();
    grid.angles()
        .iter()
        .map(|&t| {
            let af = array_factor(weights, t).norm_sqr();
            debug_assert!(
                af <= bound * (1.0 + 1e-12) + 1e-300,
                "array gain bound violated"
            );
            af * element.gain_unchecked(t.abs())
        })
        .collect()
}

pub fn linear_pattern(
    weights: &[Complex64],
    grid: &AngularGrid,
    element: &ElementPattern,
    normalization: Normalization,
) -> Result<RadiationPattern> {
    if grid.is_empty() {
        return Err(Error::Grid("grid is empty".into()));
    }
    if weights.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let power = linear_power(weights, grid, element);
    Ok(RadiationPattern {
        grid: grid.clone(),
        power_db: normalize(power, normalization),
        normalization,
    })
}

/// Planar weight matrix indexed `(el_row, az_col)`.
pub type PlanarWeights = DMatrix<Complex64>;

/// Outer product `W = w_el w_az^H`; rows follow elevation, columns azimuth.
pub fn planar_weights(w_el: &[Complex64], w_az: &[Complex64]) -> PlanarWeights {
    DMatrix::from_fn(w_el.len(), w_az.len(), |r, c| w_el[r] * w_az[c].conj())
}

/// `a_el^H W a_az` at direction cosines `(u, v)` along azimuth and elevation.
pub fn planar_response(w: &DMatrix<Complex64>, u: f64, v: f64) -> Complex64 {
    let row_weights: Vec<Complex64> = (0..w.ncols())
        .map(|c| {
            let col: Vec<Complex64> = w.column(c).iter().copied().collect();
            sine_space_factor(&col, v)
        })
        .collect();
    // Columns combine with conj(exp(-j pi c u)) = exp(+j pi c u).
    sine_space_factor(&row_weights, -u)
}

/// Planar power map indexed `(el, az)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPattern {
    az: AngularGrid,
    el: AngularGrid,
    power_db: DMatrix<f64>,
    normalization: Normalization,
}

impl PlanarPattern {
    pub fn az(&self) -> &AngularGrid {
        &self.az
    }

    pub fn el(&self) -> &AngularGrid {
        &self.el
    }

    pub fn power_db(&self) -> &DMatrix<f64> {
        &self.power_db
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `az_deg,el_deg,power_db` triplets, elevation-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("az_deg,el_deg,power_db\n");
        for (i, e) in self.el.angles().iter().enumerate() {
            for (j, a) in self.az.angles().iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    a.to_degrees(),
                    e.to_degrees(),
                    self.power_db[(i, j)]
                ));
            }
        }
        out
    }
}

/// Array-factor power `|a_el^H W a_az|^2` with `u = sin(az)`, `v = sin(el)`,
/// indexed `(el, az)`.
pub fn planar_array_factor_power(
    w: &DMatrix<Complex64>,
    az: &AngularGrid,
    el: &AngularGrid,
) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = el
        .angles()
        .par_iter()
        .map(|&e| {
            let v = e.sin();
            let row_weights: Vec<Complex64> = (0..w.ncols())
                .map(|c| {
                    let col: Vec<Complex64> = w.column(c).iter().copied().collect();
                    sine_space_factor(&col, v)
                })
                .collect();
            az.angles()
                .iter()
                .map(|&a| sine_space_factor(&row_weights, -a.sin()).norm_sqr())
                .collect()
        })
        .collect();
    DMatrix::from_fn(el.len(), az.len(), |i, j| rows[i][j])
}

/// Planar pattern with the element factor at the true 3D angle off boresight.
/// Directions with `sin(az)^2 + sin(el)^2 > 1` are invisible and get zero power.
pub fn planar_pattern(
    w: &DMatrix<Complex64>,
    az: &AngularGrid,
    el: &AngularGrid,
    element: &ElementPattern,
    normalization: Normalization,
) -> Result<PlanarPattern> {
    if w.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let af = planar_array_factor_power(w, az, el);
    let mut power = Vec::with_capacity(af.len());
    for i in 0..el.len() {
        let v = el.angles()[i].sin();
        for j in 0..az.len() {
            let u = az.angles()[j].sin();
            let cos2 = 1.0 - u * u - v * v;
            let e = if cos2 < 0.0 {
                0.0
            } else {
                element.gain_from_cos(cos2.sqrt())
            };
            power.push(af[(i, j)] * e);
        }
    }
    let db = normalize(power, normalization);
    Ok(PlanarPattern {
        az: az.clone(),
        el: el.clone(),
        power_db: DMatrix::from_row_slice(el.len(), az.len(), &db),
        normalization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatTopMetrics {
    /// Max minus min over the passband samples, dB.
    pub passband_ripple_db: f64,
    /// Mean passband level, dB in the pattern's normalization.
    pub passband_mean_db: f64,
    /// Highest local peak outside the guarded passband, relative to the
    /// passband mean. `None` when there is no such peak.
    pub max_sidelobe_db: Option<f64>,
    /// Worst of the two sides: distance from the passband edge to the first
    /// sample below `passband min - 10 dB`, degrees. `None` if the pattern
    /// never drops that far.
    pub transition_width_deg: Option<f64>,
    pub passband_samples: usize,
}

pub fn flat_top_metrics(
    pattern: &RadiationPattern,
    passband: (f64, f64),
) -> Result<FlatTopMetrics> {
    let (lo, hi) = passband;
    let a = pattern.grid().angles();
    let p = pattern.power_db();
    if !(lo < hi) {
        return Err(Error::Passband(format!("empty passband [{lo}, {hi}]")));
    }
    let eps = 1e-9;
    if lo < a[0] - eps || hi > a[a.len() - 1] + eps {
        return Err(Error::Passband("passband outside the grid span".into()));
    }
    let inside: Vec<usize> = (0..a.len())
        .filter(|&i| a[i] >= lo - eps && a[i] <= hi + eps)
        .collect();
    if inside.len() < 10 {
        return Err(Error::Passband(format!(
            "only {} grid samples in the passband, need at least 10",
            inside.len()
        )));
    }
    let vals: Vec<f64> = inside.iter().map(|&i| p[i]).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;

    let guard = SIDELOBE_GUARD_DEG.to_radians();
    let sidelobe = (1..a.len().saturating_sub(1))
        .filter(|&i| a[i] < lo - guard - eps || a[i] > hi + guard + eps)
        .filter(|&i| p[i] >= p[i - 1] && p[i] >= p[i + 1] && p[i] > DB_FLOOR)
        .map(|i| p[i] - mean)
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |m| m.max(x)))
        });

    let floor = min - 10.0;
    let first = *inside.first().unwrap();
    let last = *inside.last().unwrap();
    let upper = (last + 1..a.len())
        .find(|&i| p[i] < floor)
        .map(|i| a[i] - hi);
    let lower = (0..first).rev().find(|&i| p[i] < floor).map(|i| lo - a[i]);
    let transition = match (lower, upper) {
        (Some(l), Some(u)) => Some(l.max(u).max(0.0).to_degrees()),
        _ => None,
    };

    Ok(FlatTopMetrics {
        passband_ripple_db: max - min,
        passband_mean_db: mean,
        max_sidelobe_db: sidelobe,
        transition_width_deg: transition,
        passband_samples: inside.len(),
    })
}

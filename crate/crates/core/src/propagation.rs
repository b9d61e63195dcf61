//! Friis-model coupling between the AMAF elements and the RIS elements.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AmafRisLayout;

/// Axisymmetric power pattern `peak_gain * cos^exponent(psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    pub peak_gain: f64,
    pub exponent: f64,
}

impl ElementPattern {
    pub fn new(peak_gain: f64, exponent: f64) -> Result<Self> {
        let p = Self {
            peak_gain,
            exponent,
        };
        p.validate()?;
        Ok(p)
    }

    /// Microstrip patch: 6 dBi peak, 90 degree half-power beamwidth.
    pub fn patch() -> Self {
        Self {
            peak_gain: 4.0,
            exponent: 2.0,
        }
    }

    pub fn isotropic() -> Self {
        Self {
            peak_gain: 1.0,
            exponent: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_gain.is_finite() && self.peak_gain > 0.0) {
            return Err(Error::ElementPattern(format!(
                "peak_gain must be positive, got {}",
                self.peak_gain
            )));
        }
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return Err(Error::ElementPattern(format!(
                "exponent must be nonnegative, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    /// Linear power gain at `psi` radians off boresight. Zero beyond the
    /// hemisphere edge.
    pub fn gain(&self, psi: f64) -> Result<f64> {
        if psi < 0.0 {
            return Err(Error::NegativeAngle(psi));
        }
        Ok(self.gain_unchecked(psi))
    }

    pub(crate) fn gain_unchecked(&self, psi: f64) -> f64 {
        let psi = psi.abs();
        if psi >= FRAC_PI_2 {
            return if self.exponent == 0.0 && psi == FRAC_PI_2 {
                self.peak_gain
            } else {
                0.0
            };
        }
        self.gain_from_cos(psi.cos())
    }

    /// Gain given the direction cosine with respect to boresight.
    pub(crate) fn gain_from_cos(&self, cos_psi: f64) -> f64 {
        if cos_psi <= 0.0 {
            return if self.exponent == 0.0 && cos_psi == 0.0 {
                self.peak_gain
            } else {
                0.0
            };
        }
        self.peak_gain * cos_psi.powf(self.exponent)
    }
}

/// Complex N_p x N_a matrix mapping AMAF excitations to RIS incident fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn from_entries(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn n_ris(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_amaf(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    /// Row-major CSV, one RIS element per line, `re_m,im_m` column pairs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_amaf())
            .map(|m| format!("re_{m},im_{m}"))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for n in 0..self.n_ris() {
            let cells: Vec<String> = (0..self.n_amaf())
                .map(|m| {
                    let z = self.entries[(n, m)];
                    format!("{},{}", z.re, z.im)
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Single Friis coupling coefficient for a ray of length `r` (half-wavelength
/// units) with the two element power gains along the ray.
pub fn friis_coefficient(r: f64, gain_amaf: f64, gain_ris: f64) -> Complex64 {
    let amplitude = (gain_amaf * gain_ris).sqrt() / (2.0 * PI * r);
    Complex64::from_polar(amplitude, -PI * r)
}

pub fn coupling_matrix(
    layout: &AmafRisLayout,
    amaf_pattern: &ElementPattern,
    ris_pattern: &ElementPattern,
) -> CouplingMatrix {
    let n_ris = layout.ris().len();
    let n_amaf = layout.amaf().len();
    let rows: Vec<Vec<Complex64>> = (0..n_ris)
        .into_par_iter()
        .map(|n| {
            (0..n_amaf)
                .map(|m| {
                    let ray = layout.ray_unchecked(m, n);
                    friis_coefficient(
                        ray.distance,
                        amaf_pattern.gain_unchecked(ray.departure_angle),
                        ris_pattern.gain_unchecked(ray.arrival_angle),
                    )
                })
                .collect()
        })
        .collect();
    let entries = DMatrix::from_fn(n_ris, n_amaf, |n, m| rows[n][m]);
    CouplingMatrix { entries }
}

//! Ground footprints: planar patterns projected onto flat ground with
//! free-space spreading.
//!
//! World frame: array phase center at the origin, ground at z = -height,
//! X is the lateral (array azimuth) axis and Y the forward range axis.
//! Downtilt is measured from nadir, so zero tilt points the boresight
//! straight down and tilt `atan(y0 / height)` aims it at ground range `y0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{planar_response, to_db, DB_FLOOR};
use crate::propagation::ElementPattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentScenario {
    /// Meters above ground.
    pub mount_height: f64,
    /// Radians from nadir.
    pub downtilt: f64,
    /// Lateral ground range, meters.
    pub x_range: (f64, f64),
    /// Forward ground range, meters.
    pub y_range: (f64, f64),
    /// Meters per cell.
    pub resolution: f64,
    /// Meters. Kept for reference; free-space spreading is frequency
    /// independent once peak-normalized.
    pub wavelength: f64,
}

impl Default for DeploymentScenario {
    /// Illustrative picocell: 10 m mount, boresight meeting the ground 20 m
    /// out, 80 m x 80 m at 0.5 m, 28 GHz.
    fn default() -> Self {
        Self {
            mount_height: 10.0,
            downtilt: (20.0f64 / 10.0).atan(),
            x_range: (-40.0, 40.0),
            y_range: (-20.0, 60.0),
            resolution: 0.5,
            wavelength: 299_792_458.0 / 28e9,
        }
    }
}

impl DeploymentScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.mount_height.is_finite() && self.mount_height > 0.0) {
            return Err(Error::Scenario("mount_height must be positive".into()));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::Scenario("resolution must be positive".into()));
        }
        if !(self.x_range.0 <= self.x_range.1 && self.y_range.0 <= self.y_range.1) {
            return Err(Error::Scenario("ground extent is empty".into()));
        }
        if !self.downtilt.is_finite() {
            return Err(Error::Scenario("downtilt must be finite".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Scenario("wavelength must be positive".into()));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), resolution: f64) -> Vec<f64> {
        let n = ((range.1 - range.0) / resolution + 1e-9).floor() as usize + 1;
        (0..n).map(|i| range.0 + resolution * i as f64).collect()
    }

    pub fn x_axis(&self) -> Vec<f64> {
        Self::axis(self.x_range, self.resolution)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        Self::axis(self.y_range, self.resolution)
    }
}

/// Peak-normalized received power, indexed `(y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintGrid {
    x: Vec<f64>,
    y: Vec<f64>,
    power_db: DMatrix<f64>,
}

impl FootprintGrid {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn power_db(&self) -> &DMatrix<f64> {
        &self.power_db
    }

    /// `(row, col)` of the strongest cell.
    pub fn peak_index(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for i in 0..self.power_db.nrows() {
            for j in 0..self.power_db.ncols() {
                if self.power_db[(i, j)] > v {
                    v = self.power_db[(i, j)];
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Extent in meters along X (through the peak row) and along Y (through
    /// the peak column) of cells at or above `level_db`.
    pub fn extents(&self, level_db: f64) -> (f64, f64) {
        let (pr, pc) = self.peak_index();
        let run = |vals: &[f64], coords: &[f64], start: usize| {
            let mut lo = start;
            while lo > 0 && vals[lo - 1] >= level_db {
                lo -= 1;
            }
            let mut hi = start;
            while hi + 1 < vals.len() && vals[hi + 1] >= level_db {
                hi += 1;
            }
            coords[hi] - coords[lo]
        };
        let row: Vec<f64> = (0..self.x.len()).map(|j| self.power_db[(pr, j)]).collect();
        let col: Vec<f64> = (0..self.y.len()).map(|i| self.power_db[(i, pc)]).collect();
        (run(&row, &self.x, pc), run(&col, &self.y, pr))
    }

    /// `x_m,y_m,power_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m,power_db\n");
        for (i, y) in self.y.iter().enumerate() {
            for (j, x) in self.x.iter().enumerate() {
                out.push_str(&format!("{x},{y},{}\n", self.power_db[(i, j)]));
            }
        }
        out
    }

    /// Header lines with georeferencing, then one whitespace-separated line
    /// per Y row (increasing Y), values rounded to 0.01 dB.
    pub fn to_raster(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("ncols {}\n", self.x.len()));
        out.push_str(&format!("nrows {}\n", self.y.len()));
        out.push_str(&format!("x0 {}\n", self.x.first().copied().unwrap_or(0.0)));
        out.push_str(&format!("y0 {}\n", self.y.first().copied().unwrap_or(0.0)));
        let res = if self.x.len() > 1 {
            self.x[1] - self.x[0]
        } else {
            0.0
        };
        out.push_str(&format!("cellsize {res}\n"));
        out.push_str(&format!("nodata {DB_FLOOR}\n"));
        for i in 0..self.y.len() {
            let row: Vec<String> = (0..self.x.len())
                .map(|j| format!("{:.2}", self.power_db[(i, j)]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn ground_footprint(
    w: &DMatrix<Complex64>,
    element: &ElementPattern,
    scenario: &DeploymentScenario,
) -> Result<FootprintGrid> {
    scenario.validate()?;
    if w.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let (st, ct) = scenario.downtilt.sin_cos();
    let boresight = [0.0, st, -ct];
    let el_axis = [0.0, ct, st];
    let h = scenario.mount_height;
    let xs = scenario.x_axis();
    let ys = scenario.y_axis();

    let rows: Vec<Vec<f64>> = ys
        .par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    let d2 = x * x + y * y + h * h;
                    let d = d2.sqrt();
                    let dir = [x / d, y / d, -h / d];
                    let cos_psi = dir[1] * boresight[1] + dir[2] * boresight[2];
                    if cos_psi <= 0.0 {
                        return 0.0;
                    }
                    let u = dir[0];
                    let v = dir[1] * el_axis[1] + dir[2] * el_axis[2];
                    planar_response(w, u, v).norm_sqr() * element.gain_from_cos(cos_psi) / d2
                })
                .collect()
        })
        .collect();

    let peak = rows.iter().flatten().copied().fold(0.0, f64::max);
    let power_db = DMatrix::from_fn(ys.len(), xs.len(), |i, j| {
        if peak > 0.0 {
            to_db(rows[i][j] / peak)
        } else {
            DB_FLOOR
        }
    });
    Ok(FootprintGrid {
        x: xs,
        y: ys,
        power_db,
    })
}

/// Checks that `w` fits the planar RIS `(n_el, n_az)` before projecting.
pub fn ground_footprint_for_layout(
    w: &DMatrix<Complex64>,
    n_el: usize,
    n_az: usize,
    element: &ElementPattern,
    scenario: &DeploymentScenario,
) -> Result<FootprintGrid> {
    if w.nrows() != n_el {
        return Err(Error::LengthMismatch {
            expected: n_el,
            actual: w.nrows(),
        });
    }
    if w.ncols() != n_az {
        return Err(Error::LengthMismatch {
            expected: n_az,
            actual: w.ncols(),
        });
    }
    ground_footprint(w, element, scenario)
}

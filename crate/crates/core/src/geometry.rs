//! Element positions of the feed (AMAF) and surface (RIS) arrays.
//!
//! Frame: RIS plane at z = 0 spanning x (azimuth) and y (elevation), AMAF
//! plane at z = -F, boresight along +z. All lengths are in half-wavelength
//! units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform line of elements centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearLayout {
    n_elements: usize,
    spacing: f64,
}

impl LinearLayout {
    pub fn new(n_elements: usize, spacing: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::Layout("n_elements must be at least 1".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Layout(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            n_elements,
            spacing,
        })
    }

    /// Half-wavelength spaced line.
    pub fn half_wave(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 1.0)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Aperture length `n_elements * spacing`.
    pub fn aperture(&self) -> f64 {
        self.n_elements as f64 * self.spacing
    }

    pub fn position(&self, i: usize) -> f64 {
        self.spacing * (i as f64 - (self.n_elements as f64 - 1.0) / 2.0)
    }

    pub fn element_positions(&self) -> Vec<f64> {
        (0..self.n_elements).map(|i| self.position(i)).collect()
    }
}

/// Either a line along x or a Cartesian product of an azimuth (x) line and an
/// elevation (y) line. Planar elements are indexed row-major by
/// `(el_row, az_col)`, i.e. flat index `row * n_az + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrayGeometry {
    Linear(LinearLayout),
    Planar { az: LinearLayout, el: LinearLayout },
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        match self {
            ArrayGeometry::Linear(l) => l.n_elements(),
            ArrayGeometry::Planar { az, el } => az.n_elements() * el.n_elements(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-plane (x, y) position of the element with flat index `i`.
    pub fn position_xy(&self, i: usize) -> [f64; 2] {
        match self {
            ArrayGeometry::Linear(l) => [l.position(i), 0.0],
            ArrayGeometry::Planar { az, el } => {
                let row = i / az.n_elements();
                let col = i % az.n_elements();
                [az.position(col), el.position(row)]
            }
        }
    }

    /// Azimuth-axis line, the one whose size defines the aperture D.
    pub fn azimuth(&self) -> &LinearLayout {
        match self {
            ArrayGeometry::Linear(l) => l,
            ArrayGeometry::Planar { az, .. } => az,
        }
    }
}

impl From<LinearLayout> for ArrayGeometry {
    fn from(l: LinearLayout) -> Self {
        ArrayGeometry::Linear(l)
    }
}

/// Center-fed AMAF-RIS arrangement with parallel planes a focal length apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmafRisLayout {
    ris: ArrayGeometry,
    amaf: ArrayGeometry,
    focal_length: f64,
}

/// Distance and angles of the ray from AMAF element `m` to RIS element `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayGeometry {
    pub distance: f64,
    /// From the AMAF element boresight (+z), radians.
    pub departure_angle: f64,
    /// From the RIS element boresight (-z, facing the feed), radians.
    pub arrival_angle: f64,
}

impl AmafRisLayout {
    pub fn new(
        ris: impl Into<ArrayGeometry>,
        amaf: impl Into<ArrayGeometry>,
        focal_length: f64,
    ) -> Result<Self> {
        if !(focal_length.is_finite() && focal_length > 0.0) {
            return Err(Error::Layout(format!(
                "focal_length must be positive, got {focal_length}"
            )));
        }
        Ok(Self {
            ris: ris.into(),
            amaf: amaf.into(),
            focal_length,
        })
    }

    /// Linear RIS and AMAF, both half-wavelength spaced.
    pub fn linear(n_ris: usize, n_amaf: usize, focal_length: f64) -> Result<Self> {
        Self::new(
            LinearLayout::half_wave(n_ris)?,
            LinearLayout::half_wave(n_amaf)?,
            focal_length,
        )
    }

    /// Square planar RIS and AMAF, both half-wavelength spaced.
    pub fn planar(n_ris: usize, n_amaf: usize, focal_length: f64) -> Result<Self> {
        let ris = LinearLayout::half_wave(n_ris)?;
        let amaf = LinearLayout::half_wave(n_amaf)?;
        Self::new(
            ArrayGeometry::Planar { az: ris, el: ris },
            ArrayGeometry::Planar { az: amaf, el: amaf },
            focal_length,
        )
    }

    pub fn ris(&self) -> &ArrayGeometry {
        &self.ris
    }

    pub fn amaf(&self) -> &ArrayGeometry {
        &self.amaf
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    /// Focal length over the RIS azimuth aperture.
    pub fn f_over_d(&self) -> Result<f64> {
        let d = self.ris.azimuth().aperture();
        if d <= 0.0 {
            return Err(Error::Layout("zero RIS aperture".into()));
        }
        Ok(self.focal_length / d)
    }

    pub fn ray_geometry(&self, m: usize, n: usize) -> Result<RayGeometry> {
        if m >= self.amaf.len() {
            return Err(Error::Index {
                what: "AMAF",
                index: m,
                len: self.amaf.len(),
            });
        }
        if n >= self.ris.len() {
            return Err(Error::Index {
                what: "RIS",
                index: n,
                len: self.ris.len(),
            });
        }
        Ok(self.ray_unchecked(m, n))
    }

    pub(crate) fn ray_unchecked(&self, m: usize, n: usize) -> RayGeometry {
        let [xa, ya] = self.amaf.position_xy(m);
        let [xr, yr] = self.ris.position_xy(n);
        let lateral = (xr - xa).hypot(yr - ya);
        let distance = lateral.hypot(self.focal_length);
        // Parallel planes: departure and arrival angles coincide.
        let angle = lateral.atan2(self.focal_length);
        RayGeometry {
            distance,
            departure_angle: angle,
            arrival_angle: angle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn positions_are_centered() {
        let l = LinearLayout::half_wave(2).unwrap();
        assert_eq!(l.element_positions(), vec![-0.5, 0.5]);
        let l = LinearLayout::half_wave(40).unwrap();
        let p = l.element_positions();
        assert_eq!(p[0], -19.5);
        assert_eq!(p[39], 19.5);
        assert_abs_diff_eq!(p.iter().sum::<f64>() / 40.0, 0.0, epsilon = 1e-12);
        assert_eq!(
            LinearLayout::half_wave(1).unwrap().element_positions(),
            vec![0.0]
        );
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(LinearLayout::new(0, 1.0).is_err());
        assert!(LinearLayout::new(3, 0.0).is_err());
        assert!(LinearLayout::new(3, -1.0).is_err());
        assert!(AmafRisLayout::linear(40, 2, 0.0).is_err());
    }

    #[test]
    fn f_over_d_values() {
        assert_abs_diff_eq!(
            AmafRisLayout::linear(40, 2, 9.4)
                .unwrap()
                .f_over_d()
                .unwrap(),
            0.235,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            AmafRisLayout::linear(20, 2, 9.4)
                .unwrap()
                .f_over_d()
                .unwrap(),
            0.47,
            epsilon = 1e-15
        );
        assert_eq!(
            AmafRisLayout::linear(10, 2, 10.0)
                .unwrap()
                .f_over_d()
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn ray_examples() {
        let on_axis = AmafRisLayout::linear(1, 1, 9.4).unwrap();
        let r = on_axis.ray_geometry(0, 0).unwrap();
        assert_eq!(r.distance, 9.4);
        assert_eq!(r.departure_angle, 0.0);

        let l = AmafRisLayout::linear(40, 2, 9.4).unwrap();
        // RIS coordinate +0.5 is index 20, AMAF +0.5 is index 1.
        let r = l.ray_geometry(1, 20).unwrap();
        assert_abs_diff_eq!(r.distance, 9.4, epsilon = 1e-12);
        assert_eq!(r.departure_angle, 0.0);

        let r = l.ray_geometry(1, 0).unwrap();
        let expected = (20.0f64 * 20.0 + 9.4 * 9.4).sqrt();
        assert_abs_diff_eq!(r.distance, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.distance, 22.099, epsilon = 5e-4);
        assert_abs_diff_eq!(r.departure_angle, 20.0f64.atan2(9.4), epsilon = 1e-12);
        assert_abs_diff_eq!(r.departure_angle, 1.131435, epsilon = 1e-6);
        assert_eq!(r.departure_angle, r.arrival_angle);
    }

    #[test]
    fn ray_index_checked() {
        let l = AmafRisLayout::linear(4, 2, 3.0).unwrap();
        assert!(matches!(
            l.ray_geometry(2, 0),
            Err(Error::Index { what: "AMAF", .. })
        ));
        assert!(matches!(
            l.ray_geometry(0, 4),
            Err(Error::Index { what: "RIS", .. })
        ));
    }

    #[test]
    fn mirror_symmetry_and_nearest_minimum() {
        for (np, na) in [(40, 2), (17, 3), (8, 1)] {
            let l = AmafRisLayout::linear(np, na, 9.4).unwrap();
            for m in 0..na {
                let mut best = (f64::INFINITY, 0);
                for n in 0..np {
                    let a = l.ray_geometry(m, n).unwrap();
                    let b = l.ray_geometry(na - 1 - m, np - 1 - n).unwrap();
                    assert!((a.distance - b.distance).abs() <= 1e-12);
                    assert!(a.distance >= l.focal_length());
                    assert!(
                        a.departure_angle >= 0.0 && a.departure_angle < std::f64::consts::FRAC_PI_2
                    );
                    if a.distance < best.0 {
                        best = (a.distance, n);
                    }
                }
                let xm = l.amaf().position_xy(m)[0];
                let nearest = (0..np)
                    .map(|n| (l.ris().position_xy(n)[0] - xm).abs())
                    .fold(f64::INFINITY, f64::min);
                let xb = l.ris().position_xy(best.1)[0];
                assert!(((xb - xm).abs() - nearest).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn planar_indexing_is_row_major() {
        let l = AmafRisLayout::planar(3, 2, 1.0).unwrap();
        assert_eq!(l.ris().len(), 9);
        assert_eq!(l.ris().position_xy(0), [-1.0, -1.0]);
        assert_eq!(l.ris().position_xy(1), [0.0, -1.0]);
        assert_eq!(l.ris().position_xy(3), [-1.0, 0.0]);
        assert_eq!(l.amaf().position_xy(3), [0.5, 0.5]);
    }
}

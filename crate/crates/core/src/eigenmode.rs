//! Principal eigenmode of the coupling matrix and the co-phasing vector that
//! flattens its phase across the RIS.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagation::CouplingMatrix;

/// Dominant singular triple `(sigma1, u1, v1)` of `T = U S V^H`.
///
/// The global phase of `(u1, v1)` is fixed so that `sum(v1)` is real
/// positive. When that sum vanishes, the mean of the central pair of `u1` is
/// made real positive instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalEigenmode {
    pub sigma1: f64,
    pub u1: Vec<Complex64>,
    pub v1: Vec<Complex64>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
}

impl PrincipalEigenmode {
    pub fn u1_magnitude(&self) -> Vec<f64> {
        self.u1.iter().map(|z| z.norm()).collect()
    }

    pub fn v1_magnitude(&self) -> Vec<f64> {
        self.v1.iter().map(|z| z.norm()).collect()
    }

    /// `||T v1 - sigma1 u1||`.
    pub fn residual(&self, t: &CouplingMatrix) -> f64 {
        let e = t.entries();
        (0..e.nrows())
            .map(|n| {
                let tv: Complex64 = (0..e.ncols()).map(|m| e[(n, m)] * self.v1[m]).sum();
                (tv - self.u1[n] * self.sigma1).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `index,magnitude` rows of `|u1|`.
    pub fn u1_csv(&self) -> String {
        let mut out = String::from("index,magnitude\n");
        for (i, m) in self.u1_magnitude().iter().enumerate() {
            out.push_str(&format!("{i},{m}\n"));
        }
        out
    }
}

pub fn principal_eigenmode(t: &CouplingMatrix) -> Result<PrincipalEigenmode> {
    let svd = t.entries().clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let Some(&k) = order.first() else {
        return Err(Error::DegenerateMatrix(0.0));
    };
    let sigma1 = svd.singular_values[k];
    let scale = t.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(sigma1.is_finite() && sigma1 > 0.0) || sigma1 <= scale * 1e-14 || scale == 0.0 {
        return Err(Error::DegenerateMatrix(sigma1));
    }

    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut u1: Vec<Complex64> = u.column(k).iter().copied().collect();
    let mut v1: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();

    let rotation = gauge_rotation(&u1, &v1);
    u1.iter_mut().for_each(|z| *z *= rotation);
    v1.iter_mut().for_each(|z| *z *= rotation);

    Ok(PrincipalEigenmode {
        sigma1,
        u1,
        v1,
        singular_values,
    })
}

fn gauge_rotation(u1: &[Complex64], v1: &[Complex64]) -> Complex64 {
    let sum: Complex64 = v1.iter().sum();
    if sum.norm() > 1e-12 {
        return (sum / sum.norm()).conj();
    }
    let n = u1.len();
    let center: Complex64 = if n.is_multiple_of(2) {
        (u1[n / 2 - 1] + u1[n / 2]) / 2.0
    } else {
        u1[n / 2]
    };
    if center.norm() > 0.0 {
        (center / center.norm()).conj()
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Unit-modulus `exp(-j angle(u1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CophaseVector {
    pub values: Vec<Complex64>,
    /// Entries of `u1` that were exactly zero; their phase was set to 1.
    pub zero_entries: Vec<usize>,
}

pub fn cophase_vector(eigenmode: &PrincipalEigenmode) -> CophaseVector {
    let mut zero_entries = Vec::new();
    let values = eigenmode
        .u1
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if z.norm() == 0.0 {
                zero_entries.push(i);
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -z.arg())
            }
        })
        .collect();
    CophaseVector {
        values,
        zero_entries,
    }
}

//! Flat-top phase template: binary grouping, phase-perturbation widening and
//! their composition with the co-phasing vector.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigenmode::{CophaseVector, PrincipalEigenmode};
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Binary,
    Ppf,
    Cophase,
    Composed,
    Optimized,
}

/// Unit-modulus complex phase per RIS element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    values: Vec<Complex64>,
    kind: ProfileKind,
}

impl PhaseProfile {
    pub fn new(values: Vec<Complex64>, kind: ProfileKind) -> Result<Self> {
        if let Some((i, z)) = values
            .iter()
            .enumerate()
            .find(|(_, z)| !((z.norm() - 1.0).abs() <= UNIT_TOL))
        {
            return Err(Error::Shaping(format!(
                "entry {i} has modulus {}, expected 1",
                z.norm()
            )));
        }
        Ok(Self { values, kind })
    }

    pub fn from_phases(phases: &[f64], kind: ProfileKind) -> Self {
        Self {
            values: phases
                .iter()
                .map(|&p| Complex64::from_polar(1.0, p))
                .collect(),
            kind,
        }
    }

    pub fn ones(n: usize, kind: ProfileKind) -> Self {
        Self {
            values: vec![Complex64::new(1.0, 0.0); n],
            kind,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Phases in radians, wrapped to (-pi, pi].
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.arg()).collect()
    }

    pub fn hadamard(&self, other: &PhaseProfile, kind: ProfileKind) -> Result<PhaseProfile> {
        check_len(self.len(), other.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| renormalize(a * b))
            .collect();
        Ok(PhaseProfile { values, kind })
    }

    /// `index,phase_rad` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,phase_rad\n");
        for (i, p) in self.phases().iter().enumerate() {
            out.push_str(&format!("{i},{p}\n"));
        }
        out
    }
}

impl From<&CophaseVector> for PhaseProfile {
    fn from(c: &CophaseVector) -> Self {
        PhaseProfile {
            values: c.values.clone(),
            kind: ProfileKind::Cophase,
        }
    }
}

fn renormalize(z: Complex64) -> Complex64 {
    z / z.norm()
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Contiguous index ranges carrying a pi phase, placed symmetrically about
/// the array center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrouping {
    n_elements: usize,
    ranges: Vec<Range<usize>>,
}

impl BinaryGrouping {
    pub fn new(n_elements: usize, mut ranges: Vec<Range<usize>>) -> Result<Self> {
        ranges.retain(|r| !r.is_empty());
        ranges.sort_by_key(|r| r.start);
        for r in &ranges {
            if r.end > n_elements {
                return Err(Error::Grouping(format!(
                    "range {}..{} exceeds {} elements",
                    r.start, r.end, n_elements
                )));
            }
        }
        for w in ranges.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::Grouping(format!(
                    "ranges {}..{} and {}..{} overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        let g = Self { n_elements, ranges };
        let flipped = g.flags();
        if (0..n_elements).any(|n| flipped[n] != flipped[n_elements - 1 - n]) {
            return Err(Error::Grouping(
                "grouping is not symmetric about the array center".into(),
            ));
        }
        Ok(g)
    }

    pub fn empty(n_elements: usize) -> Self {
        Self {
            n_elements,
            ranges: Vec::new(),
        }
    }

    /// Two interior groups of `round(fraction * n)` elements. The center gap
    /// is twice the group size and the outer margins take the rest.
    pub fn from_fraction(n_elements: usize, fraction: f64) -> Result<Self> {
        if !(fraction.is_finite() && fraction > 0.0) {
            return Err(Error::Grouping(format!(
                "fraction must be positive, got {fraction}"
            )));
        }
        let size = group_size(n_elements, fraction);
        if size == 0 || 4 * size > n_elements {
            return Err(Error::Grouping(format!(
                "group size {size} does not fit {n_elements} elements"
            )));
        }
        let outer = (n_elements - 4 * size) / 2;
        let center = n_elements - 2 * size - 2 * outer;
        let first = outer..outer + size;
        let second = outer + size + center..outer + 2 * size + center;
        Self::new(n_elements, vec![first, second])
    }

    /// The 40-element grouping with pi groups at 6..13 and 27..34.
    pub fn reference_40() -> Self {
        Self::new(40, vec![6..13, 27..34]).expect("reference grouping is symmetric")
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    fn flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.n_elements];
        for r in &self.ranges {
            f[r.clone()].iter_mut().for_each(|x| *x = true);
        }
        f
    }
}

/// `round(fraction * n)`.
pub fn group_size(n_elements: usize, fraction: f64) -> usize {
    (fraction * n_elements as f64).round() as usize
}

pub fn binary_vector(grouping: &BinaryGrouping) -> PhaseProfile {
    let values = grouping
        .flags()
        .into_iter()
        .map(|pi| Complex64::new(if pi { -1.0 } else { 1.0 }, 0.0))
        .collect();
    PhaseProfile {
        values,
        kind: ProfileKind::Binary,
    }
}

fn check_ppf_params(n_elements: usize, c: f64, p: f64) -> Result<()> {
    if n_elements < 2 {
        return Err(Error::Shaping(format!(
            "phase perturbation needs at least 2 elements, got {n_elements}"
        )));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::Shaping(format!(
            "scaling c must be nonnegative, got {c}"
        )));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Shaping(format!(
            "exponent p must be positive, got {p}"
        )));
    }
    Ok(())
}

fn ppf_unchecked(n: usize, n_elements: usize, c: f64, p: f64) -> f64 {
    let len = n_elements as f64 - 1.0;
    let x = 0.5 / len + (n as f64 - 0.5 * n_elements as f64) / len;
    // Sign-preserving power keeps f well defined for non-integer p.
    let s = x.signum() * x.abs().powf(p);
    (4.0 * PI * c * s).abs()
}

/// Phase perturbation `f(n)` in radians.
pub fn ppf_value(n: usize, n_elements: usize, c: f64, p: f64) -> Result<f64> {
    check_ppf_params(n_elements, c, p)?;
    if n >= n_elements {
        return Err(Error::Index {
            what: "RIS",
            index: n,
            len: n_elements,
        });
    }
    Ok(ppf_unchecked(n, n_elements, c, p))
}

/// Beam-widening vector `exp(j f(n))`.
pub fn widening_vector(n_elements: usize, c: f64, p: f64) -> Result<PhaseProfile> {
    check_ppf_params(n_elements, c, p)?;
    let phases: Vec<f64> = (0..n_elements)
        .map(|n| ppf_unchecked(n, n_elements, c, p))
        .collect();
    Ok(PhaseProfile::from_phases(&phases, ProfileKind::Ppf))
}

/// RIS phase configuration `w_ppf . w_binary . w_cophase`.
pub fn compose_template(
    cophase: &CophaseVector,
    binary: &PhaseProfile,
    ppf: &PhaseProfile,
) -> Result<PhaseProfile> {
    let c = PhaseProfile::from(cophase);
    ppf.hadamard(binary, ProfileKind::Composed)?
        .hadamard(&c, ProfileKind::Composed)
}

/// Aperture weights seen by the far field: phase-only control applied on top
/// of the eigenmode taper.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveWeights {
    weights: Vec<Complex64>,
}

impl EffectiveWeights {
    pub fn new(weights: Vec<Complex64>) -> Self {
        Self { weights }
    }

    /// `phase . modulus`, for phases expressed relative to the co-phased mode.
    pub fn from_modulus(phase: &PhaseProfile, modulus: &[f64]) -> Result<Self> {
        check_len(modulus.len(), phase.len())?;
        Ok(Self {
            weights: phase
                .values()
                .iter()
                .zip(modulus)
                .map(|(p, &m)| p * m)
                .collect(),
        })
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Phase of each weight; entries with zero amplitude get phase 0.
    pub fn aperture_phase(&self) -> PhaseProfile {
        let values = self
            .weights
            .iter()
            .map(|z| {
                if z.norm() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    renormalize(*z)
                }
            })
            .collect();
        PhaseProfile {
            values,
            kind: ProfileKind::Composed,
        }
    }
}

/// `phase . u1`, for a RIS phase configuration that includes co-phasing.
pub fn effective_weights(
    phase: &PhaseProfile,
    eigenmode: &PrincipalEigenmode,
) -> Result<EffectiveWeights> {
    check_len(eigenmode.u1.len(), phase.len())?;
    Ok(EffectiveWeights {
        weights: phase
            .values()
            .iter()
            .zip(&eigenmode.u1)
            .map(|(p, u)| p * u)
            .collect(),
    })
}

/// RIS phases realizing the given aperture phases on top of the eigenmode.
pub fn ris_phases_from_aperture(
    aperture: &PhaseProfile,
    cophase: &CophaseVector,
    kind: ProfileKind,
) -> Result<PhaseProfile> {
    aperture.hadamard(&PhaseProfile::from(cophase), kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenmode::{cophase_vector, principal_eigenmode};
    use crate::geometry::AmafRisLayout;
    use crate::propagation::{coupling_matrix, ElementPattern};

    const REFERENCE_SIGNS: [i8; 40] = [
        1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, -1,
        -1, -1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1,
    ];

    fn reference_mode() -> PrincipalEigenmode {
        let l = AmafRisLayout::linear(40, 2, 9.4).unwrap();
        let t = coupling_matrix(&l, &ElementPattern::patch(), &ElementPattern::patch());
        principal_eigenmode(&t).unwrap()
    }

    #[test]
    fn reference_grouping_matches_expected_signs() {
        let b = binary_vector(&BinaryGrouping::reference_40());
        let re: Vec<i8> = b.values().iter().map(|z| z.re as i8).collect();
        assert_eq!(re, REFERENCE_SIGNS.to_vec());
        assert!(b.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn fraction_placement_reproduces_reference() {
        assert_eq!(group_size(40, 0.175), 7);
        assert_eq!(group_size(40, 0.15), 6);
        assert_eq!(group_size(40, 0.18), 7);
        assert_eq!(
            BinaryGrouping::from_fraction(40, 0.175).unwrap(),
            BinaryGrouping::reference_40()
        );
        let g = BinaryGrouping::from_fraction(41, 0.175).unwrap();
        let b = binary_vector(&g);
        for n in 0..41 {
            assert_eq!(b.values()[n], b.values()[40 - n]);
        }
        assert!(BinaryGrouping::from_fraction(8, 0.5).is_err());
    }

    #[test]
    fn empty_grouping_is_all_ones() {
        let b = binary_vector(&BinaryGrouping::empty(9));
        assert!(b.values().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn grouping_validation() {
        assert!(matches!(
            BinaryGrouping::new(10, vec![Range { start: 0, end: 3 }]),
            Err(Error::Grouping(_))
        ));
        assert!(BinaryGrouping::new(10, vec![0..3, 2..5]).is_err());
        assert!(BinaryGrouping::new(10, vec![Range { start: 8, end: 11 }]).is_err());
        assert!(BinaryGrouping::new(10, vec![0..3, 7..10]).is_ok());
        assert!(BinaryGrouping::new(10, vec![Range { start: 3, end: 7 }]).is_ok());
    }

    #[test]
    fn ppf_examples() {
        for n in 0..40 {
            assert_eq!(ppf_value(n, 40, 0.0, 1.0).unwrap(), 0.0);
        }
        assert!((ppf_value(0, 40, 2.0, 1.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        for n in 0..40 {
            let a = ppf_value(n, 40, 2.0, 1.0).unwrap();
            let b = ppf_value(39 - n, 40, 2.0, 1.0).unwrap();
            assert!((a - b).abs() < 1e-12);
            let direct = (8.0 * PI * (n as f64 - 19.5) / 39.0).abs();
            assert!((a - direct).abs() < 1e-12);
        }
        assert!(ppf_value(0, 1, 1.0, 1.0).is_err());
        assert!(ppf_value(40, 40, 1.0, 1.0).is_err());
        assert!(ppf_value(0, 40, -1.0, 1.0).is_err());
        assert!(ppf_value(0, 40, 1.0, 0.0).is_err());
        // Non-integer exponent stays finite and symmetric.
        let a = ppf_value(3, 40, 1.0, 0.5).unwrap();
        let b = ppf_value(36, 40, 1.0, 0.5).unwrap();
        assert!(a.is_finite() && (a - b).abs() < 1e-12);
    }

    #[test]
    fn widening_vector_examples() {
        assert!(widening_vector(12, 0.0, 1.0)
            .unwrap()
            .values()
            .iter()
            .all(|z| *z == Complex64::new(1.0, 0.0)));
        let w = widening_vector(40, 2.0, 1.0).unwrap();
        for (n, z) in w.values().iter().enumerate() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            let expected = Complex64::from_polar(1.0, (8.0 * PI * (n as f64 - 19.5) / 39.0).abs());
            assert!((z - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_examples() {
        let n = 6;
        let ones = PhaseProfile::ones(n, ProfileKind::Binary);
        let c1 = CophaseVector {
            values: vec![Complex64::new(1.0, 0.0); n],
            zero_entries: vec![],
        };
        let t = compose_template(&c1, &ones, &ones).unwrap();
        assert!(t
            .values()
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let pem = reference_mode();
        let cph = cophase_vector(&pem);
        let bin = binary_vector(&BinaryGrouping::reference_40());
        let ppf = widening_vector(40, 2.0, 1.0).unwrap();
        let step2 =
            compose_template(&cph, &bin, &PhaseProfile::ones(40, ProfileKind::Ppf)).unwrap();
        for i in 0..40 {
            assert!((step2.values()[i] - bin.values()[i] * cph.values[i]).norm() < 1e-12);
        }

        let a = compose_template(&cph, &bin, &ppf).unwrap();
        let b = PhaseProfile::from(&cph)
            .hadamard(&ppf, ProfileKind::Composed)
            .unwrap()
            .hadamard(&bin, ProfileKind::Composed)
            .unwrap();
        for i in 0..40 {
            assert!((a.values()[i] - b.values()[i]).norm() < 1e-12);
        }

        let short = PhaseProfile::ones(39, ProfileKind::Ppf);
        assert!(matches!(
            compose_template(&cph, &bin, &short),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn effective_weight_examples() {
        let pem = reference_mode();
        let cph = cophase_vector(&pem);
        let mag = pem.u1_magnitude();

        let w = effective_weights(&PhaseProfile::from(&cph), &pem).unwrap();
        for (z, m) in w.as_slice().iter().zip(&mag) {
            assert!((z - Complex64::new(*m, 0.0)).norm() < 1e-12);
        }

        let bin = binary_vector(&BinaryGrouping::reference_40());
        let step2 =
            compose_template(&cph, &bin, &PhaseProfile::ones(40, ProfileKind::Ppf)).unwrap();
        let w = effective_weights(&step2, &pem).unwrap();
        let alt = EffectiveWeights::from_modulus(&bin, &mag).unwrap();
        for (i, z) in w.as_slice().iter().enumerate() {
            assert!((z.norm() - mag[i]).abs() < 1e-12);
            assert!((z - alt.as_slice()[i]).norm() < 1e-12);
        }
        assert!((w.norm() - 1.0).abs() < 1e-12);

        let short = PhaseProfile::ones(3, ProfileKind::Composed);
        assert!(effective_weights(&short, &pem).is_err());
    }

    #[test]
    fn aperture_phase_roundtrip() {
        let pem = reference_mode();
        let cph = cophase_vector(&pem);
        let ppf = widening_vector(40, 2.0, 1.0).unwrap();
        let ris = ris_phases_from_aperture(&ppf, &cph, ProfileKind::Optimized).unwrap();
        let w = effective_weights(&ris, &pem).unwrap();
        let ap = w.aperture_phase();
        for i in 0..40 {
            assert!((ap.values()[i] - ppf.values()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_unit_values() {
        assert!(PhaseProfile::new(vec![Complex64::new(0.5, 0.0)], ProfileKind::Binary).is_err());
        assert!(PhaseProfile::new(vec![Complex64::new(0.0, 1.0)], ProfileKind::Binary).is_ok());
    }
}

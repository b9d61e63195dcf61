//! End-to-end linear design: coupling, eigenmode, template and the aperture
//! weights of each shaping stage.

use crate::eigenmode::{cophase_vector, principal_eigenmode, CophaseVector, PrincipalEigenmode};
use crate::error::Result;
use crate::geometry::AmafRisLayout;
use crate::propagation::{coupling_matrix, CouplingMatrix, ElementPattern};
use crate::shaping::{
    binary_vector, compose_template, widening_vector, BinaryGrouping, EffectiveWeights,
    PhaseProfile, ProfileKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateParams {
    pub grouping: BinaryGrouping,
    pub c: f64,
    pub p: f64,
}

impl TemplateParams {
    /// Groups of 7 at 6..13 and 27..34 on 40 elements, c = 2, p = 1.
    pub fn reference() -> Self {
        Self {
            grouping: BinaryGrouping::reference_40(),
            c: 2.0,
            p: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearDesign {
    pub layout: AmafRisLayout,
    pub coupling: CouplingMatrix,
    pub eigenmode: PrincipalEigenmode,
    pub cophase: CophaseVector,
    pub binary: PhaseProfile,
    pub ppf: PhaseProfile,
    /// RIS phases `w_ppf . w_binary . w_cophase`.
    pub template: PhaseProfile,
    /// RIS phases `w_binary . w_cophase`.
    pub binary_template: PhaseProfile,
}

impl LinearDesign {
    pub fn new(
        layout: AmafRisLayout,
        amaf_element: &ElementPattern,
        ris_element: &ElementPattern,
        params: &TemplateParams,
    ) -> Result<Self> {
        let coupling = coupling_matrix(&layout, amaf_element, ris_element);
        let eigenmode = principal_eigenmode(&coupling)?;
        let cophase = cophase_vector(&eigenmode);
        let n = layout.ris().len();
        let binary = binary_vector(&params.grouping);
        let ppf = if n >= 2 {
            widening_vector(n, params.c, params.p)?
        } else {
            PhaseProfile::ones(n, ProfileKind::Ppf)
        };
        let template = compose_template(&cophase, &binary, &ppf)?;
        let binary_template =
            compose_template(&cophase, &binary, &PhaseProfile::ones(n, ProfileKind::Ppf))?;
        Ok(Self {
            layout,
            coupling,
            eigenmode,
            cophase,
            binary,
            ppf,
            template,
            binary_template,
        })
    }

    /// 40-element RIS, 2-element AMAF at F = 9.4, patch elements, reference
    /// template.
    pub fn reference() -> Result<Self> {
        Self::new(
            AmafRisLayout::linear(40, 2, 9.4)?,
            &ElementPattern::patch(),
            &ElementPattern::patch(),
            &TemplateParams::reference(),
        )
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.eigenmode.u1_magnitude()
    }

    /// Co-phased eigenmode `|u1|`: the pencil beam.
    pub fn pencil_weights(&self) -> EffectiveWeights {
        let ones = PhaseProfile::ones(self.modulus().len(), ProfileKind::Cophase);
        EffectiveWeights::from_modulus(&ones, &self.modulus()).expect("matching lengths")
    }

    /// `w_binary . |u1|`.
    pub fn binary_weights(&self) -> EffectiveWeights {
        EffectiveWeights::from_modulus(&self.binary, &self.modulus()).expect("matching lengths")
    }

    /// `w_ppf . w_binary . |u1|`.
    pub fn template_weights(&self) -> EffectiveWeights {
        EffectiveWeights::from_modulus(&self.template_aperture(), &self.modulus())
            .expect("matching lengths")
    }

    /// Aperture phases of the full template, i.e. `w_ppf . w_binary`; the
    /// optimizer's starting point.
    pub fn template_aperture(&self) -> PhaseProfile {
        self.ppf
            .hadamard(&self.binary, ProfileKind::Composed)
            .expect("matching lengths")
    }
}

//! DC power of the AMAF-RIS feed versus a large constant-modulus active
//! array driven through a splitter network.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// One splitter stage: `ways`-way split with `insertion_loss_db` loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterStage {
    pub ways: u32,
    pub insertion_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    pub p_rf_dbm: f64,
    pub pa_efficiency: f64,
    pub splitter_stages: Vec<SplitterStage>,
}

impl Default for PowerBudget {
    /// 20 dBm RF, InP PAs at 30 % efficiency, two 4-way and two 10-way
    /// stages at 1 dB each.
    fn default() -> Self {
        let stage = |ways| SplitterStage {
            ways,
            insertion_loss_db: 1.0,
        };
        Self {
            p_rf_dbm: 20.0,
            pa_efficiency: 0.3,
            splitter_stages: vec![stage(4), stage(4), stage(10), stage(10)],
        }
    }
}

impl PowerBudget {
    pub fn validate(&self) -> Result<()> {
        if !self.p_rf_dbm.is_finite() {
            return Err(Error::Budget("p_rf_dbm must be finite".into()));
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return Err(Error::Budget(format!(
                "pa_efficiency must lie in (0, 1], got {}",
                self.pa_efficiency
            )));
        }
        validate_stages(&self.splitter_stages)
    }

    /// Product of the stage way counts.
    pub fn fan_out(&self) -> u64 {
        self.splitter_stages.iter().map(|s| s.ways as u64).product()
    }
}

fn validate_stages(stages: &[SplitterStage]) -> Result<()> {
    for s in stages {
        if s.ways < 2 {
            return Err(Error::Budget(format!(
                "splitter stage needs at least 2 ways, got {}",
                s.ways
            )));
        }
        if !(s.insertion_loss_db >= 0.0) {
            return Err(Error::Budget(format!(
                "insertion loss must be nonnegative, got {}",
                s.insertion_loss_db
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    AmafRis,
    ConstantModulusArray,
}

impl Architecture {
    pub fn label(&self) -> &'static str {
        match self {
            Architecture::AmafRis => "AMAF-RIS",
            Architecture::ConstantModulusArray => "constant-modulus active array",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcPowerReport {
    pub architecture: Architecture,
    pub pa_count: usize,
    pub per_pa_dbm: f64,
    pub per_pa_mw: f64,
    pub total_dc_mw: f64,
}

impl DcPowerReport {
    /// Values rounded to 0.1 for display.
    pub fn to_text(&self) -> String {
        format!(
            "architecture = {}\npa_count = {}\nper_pa_dbm = {:.1}\nper_pa_mw = {:.1}\ntotal_dc_mw = {:.1}\n",
            self.architecture.label(),
            self.pa_count,
            self.per_pa_dbm,
            self.per_pa_mw,
            self.total_dc_mw
        )
    }
}

/// Every AMAF PA is biased for the largest requested output,
/// `max |v1_i|^2 P_RF`.
pub fn amaf_ris_dc_power(v1: &[Complex64], budget: &PowerBudget) -> Result<DcPowerReport> {
    if !(budget.pa_efficiency > 0.0 && budget.pa_efficiency <= 1.0) {
        return Err(Error::Budget("pa_efficiency must lie in (0, 1]".into()));
    }
    let norm2: f64 = v1.iter().map(|z| z.norm_sqr()).sum();
    if v1.is_empty() || norm2 == 0.0 {
        return Err(Error::Budget("feed vector has zero norm".into()));
    }
    let max_share = v1.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max) / norm2;
    let per_pa_mw = max_share * dbm_to_mw(budget.p_rf_dbm);
    Ok(DcPowerReport {
        architecture: Architecture::AmafRis,
        pa_count: v1.len(),
        per_pa_dbm: mw_to_dbm(per_pa_mw),
        per_pa_mw,
        total_dc_mw: v1.len() as f64 * per_pa_mw / budget.pa_efficiency,
    })
}

/// Input-to-per-output-port power ratio of a splitter cascade, dB.
pub fn splitter_loss(stages: &[SplitterStage]) -> Result<f64> {
    if stages.is_empty() {
        return Err(Error::Budget("splitter needs at least one stage".into()));
    }
    validate_stages(stages)?;
    Ok(stages
        .iter()
        .map(|s| 10.0 * (s.ways as f64).log10() + s.insertion_loss_db)
        .sum())
}

/// A single PA drives `n_elements` equal-weight elements through the
/// budget's splitter network.
pub fn active_array_dc_power(n_elements: usize, budget: &PowerBudget) -> Result<DcPowerReport> {
    budget.validate()?;
    if n_elements == 0 {
        return Err(Error::Budget("array needs at least one element".into()));
    }
    if budget.fan_out() < n_elements as u64 {
        return Err(Error::Budget(format!(
            "splitter fan-out {} is smaller than {} elements",
            budget.fan_out(),
            n_elements
        )));
    }
    let per_element_dbm = budget.p_rf_dbm - 10.0 * (n_elements as f64).log10();
    let per_pa_dbm = per_element_dbm + splitter_loss(&budget.splitter_stages)?;
    let per_pa_mw = dbm_to_mw(per_pa_dbm);
    Ok(DcPowerReport {
        architecture: Architecture::ConstantModulusArray,
        pa_count: 1,
        per_pa_dbm,
        per_pa_mw,
        total_dc_mw: per_pa_mw / budget.pa_efficiency,
    })
}

//! Run configuration: a TOML document with one table per pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use flattop::design::TemplateParams;
use flattop::energy::{PowerBudget, SplitterStage};
use flattop::footprint::DeploymentScenario;
use flattop::geometry::{AmafRisLayout, ArrayGeometry, LinearLayout};
use flattop::optimizer::{FlatTopSpec, OptimizerConfig};
use flattop::pattern::Normalization;
use flattop::propagation::ElementPattern;
use flattop::shaping::{group_size, BinaryGrouping};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub layout: LayoutConfig,
    #[serde(default)]
    pub elements: ElementsConfig,
    #[serde(default)]
    pub template: TemplateConfig,
    #[serde(default = "default_flat_tops")]
    pub flat_top: Vec<FlatTopConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub pattern: PatternConfig,
    #[serde(default)]
    pub planar: PlanarConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_flat_tops() -> Vec<FlatTopConfig> {
    vec![
        FlatTopConfig::from_spec("wide", &FlatTopSpec::wide()),
        FlatTopConfig::from_spec("narrow", &FlatTopSpec::narrow()),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            layout: LayoutConfig::default(),
            elements: ElementsConfig::default(),
            template: TemplateConfig::default(),
            flat_top: default_flat_tops(),
            optimizer: OptimizerConfig::default(),
            sensitivity: SensitivityConfig::default(),
            pattern: PatternConfig::default(),
            planar: PlanarConfig::default(),
            scenario: ScenarioConfig::default(),
            energy: EnergyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub n_ris: usize,
    pub n_amaf: usize,
    /// Half-wavelength units.
    pub focal_length: f64,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default = "one")]
    pub amaf_spacing: f64,
    /// Also solve the square planar feed (n_amaf x n_amaf onto n_ris x n_ris).
    #[serde(default = "yes")]
    pub planar_feed: bool,
    /// Write the coupling matrix as coupling.csv.
    #[serde(default)]
    pub write_coupling: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            n_ris: 40,
            n_amaf: 2,
            focal_length: 9.4,
            spacing: 1.0,
            amaf_spacing: 1.0,
            planar_feed: true,
            write_coupling: false,
        }
    }
}

impl LayoutConfig {
    pub fn linear(&self) -> Result<AmafRisLayout, CliError> {
        let ris = LinearLayout::new(self.n_ris, self.spacing).map_err(field("layout"))?;
        let amaf = LinearLayout::new(self.n_amaf, self.amaf_spacing).map_err(field("layout"))?;
        AmafRisLayout::new(ris, amaf, self.focal_length).map_err(field("layout.focal_length"))
    }

    pub fn planar(&self) -> Result<AmafRisLayout, CliError> {
        let ris = LinearLayout::new(self.n_ris, self.spacing).map_err(field("layout"))?;
        let amaf = LinearLayout::new(self.n_amaf, self.amaf_spacing).map_err(field("layout"))?;
        AmafRisLayout::new(
            ArrayGeometry::Planar { az: ris, el: ris },
            ArrayGeometry::Planar { az: amaf, el: amaf },
            self.focal_length,
        )
        .map_err(field("layout.focal_length"))
    }
}

fn field(name: &'static str) -> impl Fn(flattop::Error) -> CliError {
    move |e| CliError::Config(format!("{name}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementsConfig {
    pub amaf: ElementPattern,
    pub ris: ElementPattern,
}

impl Default for ElementsConfig {
    fn default() -> Self {
        Self {
            amaf: ElementPattern::patch(),
            ris: ElementPattern::patch(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    /// Half-open `[start, end)` element ranges set to phase pi. Takes
    /// precedence over `group_fraction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<[usize; 2]>>,
    /// Group size as a fraction of the RIS length, placed as two symmetric
    /// interior groups. A fraction that rounds to zero elements means no
    /// groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_fraction: Option<f64>,
    pub c: f64,
    pub p: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            groups: None,
            group_fraction: Some(0.175),
            c: 2.0,
            p: 1.0,
        }
    }
}

impl TemplateConfig {
    pub fn params(&self, n_ris: usize) -> Result<TemplateParams, CliError> {
        let grouping = match (&self.groups, self.group_fraction) {
            (Some(g), _) => BinaryGrouping::new(n_ris, g.iter().map(|[a, b]| *a..*b).collect())
                .map_err(field("template.groups"))?,
            (None, Some(f)) if f >= 0.0 && group_size(n_ris, f) == 0 => {
                BinaryGrouping::empty(n_ris)
            }
            (None, Some(f)) => {
                BinaryGrouping::from_fraction(n_ris, f).map_err(field("template.group_fraction"))?
            }
            (None, None) => BinaryGrouping::empty(n_ris),
        };
        if n_ris >= 2 {
            flattop::shaping::ppf_value(0, n_ris, self.c, self.p).map_err(field("template"))?;
        }
        Ok(TemplateParams {
            grouping,
            c: self.c,
            p: self.p,
        })
    }
}

/// Flat-top target in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatTopConfig {
    pub name: String,
    pub passband_deg: [f64; 2],
    pub stopbands_deg: Vec<[f64; 2]>,
    pub grid_points: usize,
    pub stopband_step_deg: f64,
    pub sidelobe_target_db: f64,
    pub ripple_weight: f64,
    pub sidelobe_weight: f64,
}

fn round_deg(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

impl FlatTopConfig {
    pub fn from_spec(name: &str, s: &FlatTopSpec) -> Self {
        Self {
            name: name.to_string(),
            passband_deg: [round_deg(s.passband.0), round_deg(s.passband.1)],
            stopbands_deg: s
                .stopbands
                .iter()
                .map(|&(a, b)| [round_deg(a), round_deg(b)])
                .collect(),
            grid_points: s.grid_points,
            stopband_step_deg: round_deg(s.stopband_step),
            sidelobe_target_db: s.sidelobe_target_db,
            ripple_weight: s.ripple_weight,
            sidelobe_weight: s.sidelobe_weight,
        }
    }

    pub fn spec(&self) -> Result<FlatTopSpec, CliError> {
        let s = FlatTopSpec {
            passband: (
                self.passband_deg[0].to_radians(),
                self.passband_deg[1].to_radians(),
            ),
            stopbands: self
                .stopbands_deg
                .iter()
                .map(|[a, b]| (a.to_radians(), b.to_radians()))
                .collect(),
            grid_points: self.grid_points,
            stopband_step: self.stopband_step_deg.to_radians(),
            sidelobe_target_db: self.sidelobe_target_db,
            ripple_weight: self.ripple_weight,
            sidelobe_weight: self.sidelobe_weight,
        };
        s.validate()
            .map_err(|e| CliError::Config(format!("flat_top '{}': {e}", self.name)))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    /// Passband sample counts compared on the first flat-top spec.
    pub grid_points: Vec<usize>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            grid_points: vec![5, 15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    pub step_deg: f64,
    pub planar_span_deg: f64,
    pub planar_step_deg: f64,
    pub normalization: Normalization,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            step_deg: 0.1,
            planar_span_deg: 60.0,
            planar_step_deg: 0.5,
            normalization: Normalization::Peak,
        }
    }
}

/// Which linear weight set drives each planar axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisWeights {
    /// `w_binary . w_cophase`.
    Binary,
    /// `w_ppf . w_binary . w_cophase`.
    Template,
    /// Optimizer output for the first flat-top spec.
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarConfig {
    pub el: AxisWeights,
    pub az: AxisWeights,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        Self {
            el: AxisWeights::Template,
            az: AxisWeights::Optimized,
        }
    }
}

impl PlanarConfig {
    pub fn needs_optimizer(&self) -> bool {
        self.el == AxisWeights::Optimized || self.az == AxisWeights::Optimized
    }
}

/// Illustrative picocell defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mount_height_m: f64,
    pub downtilt_deg: f64,
    pub x_range_m: [f64; 2],
    pub y_range_m: [f64; 2],
    pub resolution_m: f64,
    pub wavelength_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let d = DeploymentScenario::default();
        Self {
            mount_height_m: d.mount_height,
            downtilt_deg: round_deg(d.downtilt),
            x_range_m: [d.x_range.0, d.x_range.1],
            y_range_m: [d.y_range.0, d.y_range.1],
            resolution_m: d.resolution,
            wavelength_m: d.wavelength,
        }
    }
}

impl ScenarioConfig {
    pub fn scenario(&self) -> Result<DeploymentScenario, CliError> {
        let s = DeploymentScenario {
            mount_height: self.mount_height_m,
            downtilt: self.downtilt_deg.to_radians(),
            x_range: (self.x_range_m[0], self.x_range_m[1]),
            y_range: (self.y_range_m[0], self.y_range_m[1]),
            resolution: self.resolution_m,
            wavelength: self.wavelength_m,
        };
        s.validate().map_err(field("scenario"))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub p_rf_dbm: f64,
    pub pa_efficiency: f64,
    pub splitter_stages: Vec<SplitterStage>,
    /// Element count of the constant-modulus comparison array.
    pub active_elements: usize,
    /// AMAF feed magnitudes used by the standalone `energy` command.
    pub feed_magnitudes: Vec<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let b = PowerBudget::default();
        Self {
            p_rf_dbm: b.p_rf_dbm,
            pa_efficiency: b.pa_efficiency,
            splitter_stages: b.splitter_stages,
            active_elements: 1600,
            feed_magnitudes: vec![0.5; 4],
        }
    }
}

impl EnergyConfig {
    pub fn budget(&self) -> Result<PowerBudget, CliError> {
        let b = PowerBudget {
            p_rf_dbm: self.p_rf_dbm,
            pa_efficiency: self.pa_efficiency,
            splitter_stages: self.splitter_stages.clone(),
        };
        b.validate().map_err(field("energy"))?;
        Ok(b)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every section against the invariants of the types it builds.
    pub fn validate(&self) -> Result<(), CliError> {
        self.layout.linear()?;
        self.elements
            .amaf
            .validate()
            .map_err(field("elements.amaf"))?;
        self.elements
            .ris
            .validate()
            .map_err(field("elements.ris"))?;
        self.template.params(self.layout.n_ris)?;
        if self.flat_top.is_empty() {
            return Err(CliError::Config(
                "at least one [[flat_top]] spec is required".into(),
            ));
        }
        for (i, f) in self.flat_top.iter().enumerate() {
            let ok = !f.name.is_empty()
                && f.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(CliError::Config(format!(
                    "flat_top name '{}' must be non-empty ASCII letters, digits, '_' or '-'",
                    f.name
                )));
            }
            if self.flat_top[..i].iter().any(|g| g.name == f.name) {
                return Err(CliError::Config(format!(
                    "duplicate flat_top name '{}'",
                    f.name
                )));
            }
            f.spec()?;
        }
        self.optimizer.validate().map_err(field("optimizer"))?;
        if self.sensitivity.grid_points.iter().any(|&g| g < 2) {
            return Err(CliError::Config(
                "sensitivity.grid_points entries must be >= 2".into(),
            ));
        }
        if !(self.pattern.step_deg > 0.0 && self.pattern.planar_step_deg > 0.0) {
            return Err(CliError::Config("pattern steps must be positive".into()));
        }
        if !(self.pattern.planar_span_deg > 0.0 && self.pattern.planar_span_deg <= 90.0) {
            return Err(CliError::Config(
                "pattern.planar_span_deg must lie in (0, 90]".into(),
            ));
        }
        self.scenario.scenario()?;
        self.energy.budget()?;
        if self.energy.feed_magnitudes.is_empty() {
            return Err(CliError::Config("energy.feed_magnitudes is empty".into()));
        }
        Ok(())
    }
}

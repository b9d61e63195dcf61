//! Pipeline stages. Each command writes a fixed set of files into the output
//! directory and returns their paths.

use std::fs;
use std::path::{Path, PathBuf};

use flattop::design::LinearDesign;
use flattop::eigenmode::principal_eigenmode;
use flattop::energy::{active_array_dc_power, amaf_ris_dc_power, splitter_loss};
use flattop::footprint::ground_footprint_for_layout;
use flattop::optimizer::{grid_sensitivity_experiment, optimize_phases, OptimizationReport};
use flattop::pattern::{
    linear_pattern, planar_pattern, planar_weights, AngularGrid, PlanarWeights, RadiationPattern,
};
use flattop::propagation::coupling_matrix;
use flattop::shaping::{ris_phases_from_aperture, EffectiveWeights, PhaseProfile, ProfileKind};
use flattop::Complex64;

use crate::config::{AxisWeights, RunConfig};
use crate::error::CliError;

/// Lazily computed intermediate results shared between stages of one run.
pub struct Session {
    cfg: RunConfig,
    out: PathBuf,
    written: Vec<PathBuf>,
    design: Option<LinearDesign>,
    optimized: Option<Vec<(String, OptimizationReport)>>,
}

impl Session {
    pub fn new(cfg: RunConfig, out: impl Into<PathBuf>) -> Result<Self, CliError> {
        cfg.validate()?;
        let out = out.into();
        fs::create_dir_all(&out).map_err(|source| CliError::Io {
            path: out.display().to_string(),
            source,
        })?;
        Ok(Self {
            cfg,
            out,
            written: Vec::new(),
            design: None,
            optimized: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn design(&mut self) -> Result<&LinearDesign, CliError> {
        if self.design.is_none() {
            let params = self.cfg.template.params(self.cfg.layout.n_ris)?;
            let d = LinearDesign::new(
                self.cfg.layout.linear()?,
                &self.cfg.elements.amaf,
                &self.cfg.elements.ris,
                &params,
            )?;
            self.design = Some(d);
        }
        Ok(self.design.as_ref().expect("just set"))
    }

    fn linear_grid(&self) -> Result<AngularGrid, CliError> {
        Ok(AngularGrid::degrees(
            -90.0,
            90.0,
            self.cfg.pattern.step_deg,
        )?)
    }

    fn pattern_of(&self, w: &EffectiveWeights) -> Result<RadiationPattern, CliError> {
        Ok(linear_pattern(
            w.as_slice(),
            &self.linear_grid()?,
            &self.cfg.elements.ris,
            self.cfg.pattern.normalization,
        )?)
    }

    /// Coupling matrix, principal eigenmode and its summary.
    pub fn eigenmode(&mut self) -> Result<(), CliError> {
        let d = self.design()?.clone();
        let mut s = String::new();
        s.push_str(&format!("n_ris = {}\n", d.layout.ris().len()));
        s.push_str(&format!("n_amaf = {}\n", d.layout.amaf().len()));
        s.push_str(&format!("focal_length = {}\n", d.layout.focal_length()));
        s.push_str(&format!("f_over_d = {}\n", d.layout.f_over_d()?));
        s.push_str(&format!("sigma1 = {}\n", d.eigenmode.sigma1));
        s.push_str(&format!(
            "residual = {:e}\n",
            d.eigenmode.residual(&d.coupling)
        ));
        s.push_str(&format!(
            "singular_values = {}\n",
            join(&d.eigenmode.singular_values)
        ));
        s.push_str(&format!(
            "v1_magnitude = {}\n",
            join(&d.eigenmode.v1_magnitude())
        ));
        if !d.cophase.zero_entries.is_empty() {
            s.push_str(&format!("zero_u1_entries = {:?}\n", d.cophase.zero_entries));
        }
        if self.cfg.layout.planar_feed {
            let p = self.planar_feed()?;
            s.push_str(&format!("planar_sigma1 = {}\n", p.0));
            s.push_str(&format!("planar_v1_magnitude = {}\n", join(&p.1)));
        }
        self.write("u1.csv", &d.eigenmode.u1_csv())?;
        self.write("v1.csv", &complex_csv(&d.eigenmode.v1))?;
        self.write("eigenmode_summary.txt", &s)?;
        if self.cfg.layout.write_coupling {
            self.write("coupling.csv", &d.coupling.to_csv())?;
        }
        Ok(())
    }

    /// `(sigma1, |v1|)` of the square planar feed.
    fn planar_feed(&self) -> Result<(f64, Vec<f64>), CliError> {
        let layout = self.cfg.layout.planar()?;
        let t = coupling_matrix(&layout, &self.cfg.elements.amaf, &self.cfg.elements.ris);
        let e = principal_eigenmode(&t)?;
        Ok((e.sigma1, e.v1_magnitude()))
    }

    /// Binary, widening and template phase vectors with the step-by-step
    /// linear patterns.
    pub fn template(&mut self) -> Result<(), CliError> {
        let d = self.design()?.clone();
        self.write(
            "cophase_phases.csv",
            &PhaseProfile::from(&d.cophase).to_csv(),
        )?;
        self.write("binary_phases.csv", &d.binary.to_csv())?;
        self.write("ppf_phases.csv", &d.ppf.to_csv())?;
        self.write("template_phases.csv", &d.template.to_csv())?;

        let pencil = self.pattern_of(&d.pencil_weights())?;
        let step2 = self.pattern_of(&d.binary_weights())?;
        let step3 = self.pattern_of(&d.template_weights())?;
        let mut s = String::from("pattern,beamwidth_3db_deg,beamwidth_10db_deg\n");
        for (name, p) in [
            ("pencil", &pencil),
            ("binary", &step2),
            ("template", &step3),
        ] {
            s.push_str(&format!(
                "{name},{:.2},{:.2}\n",
                p.beamwidth(-3.0).to_degrees(),
                p.beamwidth(-10.0).to_degrees()
            ));
        }
        self.write("pattern_pencil.csv", &pencil.to_csv())?;
        self.write("pattern_step2.csv", &step2.to_csv())?;
        self.write("pattern_linear.csv", &step3.to_csv())?;
        self.write("template_summary.txt", &s)
    }

    fn run_optimizer(&mut self) -> Result<&[(String, OptimizationReport)], CliError> {
        if self.optimized.is_none() {
            let d = self.design()?.clone();
            let modulus = d.modulus();
            let init = d.template_aperture();
            let mut out = Vec::new();
            for f in &self.cfg.flat_top {
                let spec = f.spec()?;
                let r = optimize_phases(
                    &modulus,
                    &init,
                    &spec,
                    &self.cfg.elements.ris,
                    &self.cfg.optimizer,
                )?;
                out.push((f.name.clone(), r));
            }
            self.optimized = Some(out);
        }
        Ok(self.optimized.as_deref().expect("just set"))
    }

    /// Refines the template for every configured flat-top spec and runs the
    /// passband sampling comparison on the first one.
    pub fn optimize(&mut self) -> Result<(), CliError> {
        let d = self.design()?.clone();
        let runs = self.run_optimizer()?.to_vec();
        let mut report = String::new();
        for (name, r) in &runs {
            report.push_str(&format!("## {name}\n"));
            report.push_str(&r.to_text());
            report.push('\n');
            let ris = ris_phases_from_aperture(&r.phases, &d.cophase, ProfileKind::Optimized)?;
            self.write(&format!("optimized_phases_{name}.csv"), &ris.to_csv())?;
            let w = EffectiveWeights::from_modulus(&r.phases, &d.modulus())?;
            let p = self.pattern_of(&w)?;
            self.write(&format!("pattern_optimized_{name}.csv"), &p.to_csv())?;
        }
        self.write("optimize_report.txt", &report)?;

        if !self.cfg.sensitivity.grid_points.is_empty() {
            let f = &self.cfg.flat_top[0];
            let g = grid_sensitivity_experiment(
                &d.modulus(),
                &d.template_aperture(),
                &f.spec()?,
                &self.cfg.sensitivity.grid_points,
                &self.cfg.elements.ris,
                &self.cfg.optimizer,
            )?;
            let text = format!("spec = {}\n{}", f.name, g.to_table());
            self.write("grid_sensitivity.txt", &text)?;
        }
        Ok(())
    }

    fn axis_weights(&mut self, which: AxisWeights) -> Result<Vec<Complex64>, CliError> {
        let d = self.design()?.clone();
        let w = match which {
            AxisWeights::Binary => d.binary_weights(),
            AxisWeights::Template => d.template_weights(),
            AxisWeights::Optimized => {
                let phases = self.run_optimizer()?[0].1.phases.clone();
                EffectiveWeights::from_modulus(&phases, &d.modulus())?
            }
        };
        Ok(w.as_slice().to_vec())
    }

    fn planar_matrix(&mut self) -> Result<PlanarWeights, CliError> {
        let el = self.axis_weights(self.cfg.planar.el)?;
        let az = self.axis_weights(self.cfg.planar.az)?;
        Ok(planar_weights(&el, &az))
    }

    /// Linear step patterns plus the planar pattern of the configured axis
    /// combination.
    pub fn pattern(&mut self) -> Result<(), CliError> {
        self.template()?;
        let w = self.planar_matrix()?;
        let span = self.cfg.pattern.planar_span_deg;
        let step = self.cfg.pattern.planar_step_deg;
        let grid = AngularGrid::degrees(-span, span, step)?;
        let p = planar_pattern(
            &w,
            &grid,
            &grid,
            &self.cfg.elements.ris,
            self.cfg.pattern.normalization,
        )?;
        self.write("pattern_planar.csv", &p.to_csv())
    }

    /// Ground projection of the configured planar beam.
    pub fn footprint(&mut self) -> Result<(), CliError> {
        let w = self.planar_matrix()?;
        let n = self.cfg.layout.n_ris;
        let scenario = self.cfg.scenario.scenario()?;
        let g = ground_footprint_for_layout(&w, n, n, &self.cfg.elements.ris, &scenario)?;
        let (pr, pc) = g.peak_index();
        let mut s = String::new();
        s.push_str(&format!("el_weights = {:?}\n", self.cfg.planar.el).to_lowercase());
        s.push_str(&format!("az_weights = {:?}\n", self.cfg.planar.az).to_lowercase());
        s.push_str(&format!("peak_x_m = {}\n", g.x()[pc]));
        s.push_str(&format!("peak_y_m = {}\n", g.y()[pr]));
        for level in [-3.0, -10.0] {
            let (ex, ey) = g.extents(level);
            s.push_str(&format!("extent_x_m_{} = {ex}\n", -level as i32));
            s.push_str(&format!("extent_y_m_{} = {ey}\n", -level as i32));
        }
        self.write("footprint.csv", &g.to_csv())?;
        self.write("footprint_raster.txt", &g.to_raster())?;
        self.write("footprint_summary.txt", &s)
    }

    /// DC power comparison. Uses the configured feed magnitudes unless
    /// `feed` is given, so no decomposition is needed.
    pub fn energy(&mut self, feed: Option<&[f64]>) -> Result<(), CliError> {
        let budget = self.cfg.energy.budget()?;
        let mags = feed.unwrap_or(&self.cfg.energy.feed_magnitudes);
        let v1: Vec<Complex64> = mags.iter().map(|&m| Complex64::new(m, 0.0)).collect();
        let amaf = amaf_ris_dc_power(&v1, &budget)?;
        let active = active_array_dc_power(self.cfg.energy.active_elements, &budget)?;
        let mut s = String::from("[amaf_ris]\n");
        s.push_str(&amaf.to_text());
        s.push_str("\n[active_array]\n");
        s.push_str(&active.to_text());
        s.push_str(&format!(
            "splitter_loss_db = {:.1}\n",
            splitter_loss(&budget.splitter_stages)?
        ));
        s.push_str("\n[comparison]\n");
        s.push_str(&format!(
            "saving_factor = {:.2}\n",
            active.total_dc_mw / amaf.total_dc_mw
        ));
        self.write("energy_report.txt", &s)
    }

    /// Every stage in order. Energy uses the planar feed eigenmode when it
    /// is enabled.
    pub fn pipeline(&mut self) -> Result<(), CliError> {
        self.eigenmode()?;
        self.optimize()?;
        self.pattern()?;
        self.footprint()?;
        let feed = if self.cfg.layout.planar_feed {
            Some(self.planar_feed()?.1)
        } else {
            None
        };
        self.energy(feed.as_deref())
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn complex_csv(v: &[Complex64]) -> String {
    let mut s = String::from("index,re,im,magnitude\n");
    for (i, z) in v.iter().enumerate() {
        s.push_str(&format!("{i},{},{},{}\n", z.re, z.im, z.norm()));
    }
    s
}

/// Resolves the output directory: command-line override, else the config.
pub fn output_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone())
}

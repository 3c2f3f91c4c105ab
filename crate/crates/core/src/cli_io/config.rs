//! Run configuration, read from TOML.
//!
//! ```toml
//! format-version = 1
//! mode = "coupled-linear-I"      # free | external | coupled-linear-I | coupled-linear-II | coupled-nonlinear
//! z-index = 0
//! n_steps = 2000
//! sample_every = 20
//!
//! [grid]
//! n_sites = 128
//! dx = 0.1
//! dt = 0.025                     # or omit and let dt = cfl_factor * dx
//! cfl_factor = 0.5
//!
//! [params]
//! kappa = 1.0
//! e = 0.05
//!
//! [initial]
//! kind = "gaussian"              # plane-wave | gaussian | snapshot
//! center = 6.4
//! width = 1.0
//! carrier_k = 1.0
//! amplitude = 1.0
//! branch = 1
//! ```
//!
//! Optional tables: `[external]` (required for mode = "external"),
//! `[output]`, `[dispersion]`, `[convergence]`, `[reduce]`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algebra::{find_z, EtaSet, FourVector, ZStructure};
use crate::dynamics::{EvolutionMode, ExternalProfile, Potential};
use crate::error::{DiracError, Result};
use crate::lattice::{impose_lorenz_gauge, init_gaussian, init_plane_wave, Case, FieldState, GridSpec, ModeTag, PhysicalParams, DEFAULT_CFL};

use super::snapshot::read_snapshot;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "format-version")]
    pub format_version: u32,
    pub mode: ModeTag,
    #[serde(rename = "z-index", default)]
    pub z_index: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub initial: InitialCondition,
    pub external: Option<ExternalConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub reduce: ReduceConfig,
}

fn default_steps() -> usize {
    1000
}

fn default_sample_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_sites: usize,
    pub dx: f64,
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        let dt = self.dt.unwrap_or(self.cfl_factor * self.dx);
        GridSpec::new(self.n_sites, self.dx, dt, self.cfl_factor)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub kappa: f64,
    #[serde(default)]
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    PlaneWave {
        mode_number: i64,
        #[serde(default = "default_branch")]
        branch: i8,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        carrier_k: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_branch")]
        branch: i8,
    },
    Snapshot {
        path: PathBuf,
    },
}

fn default_branch() -> i8 {
    1
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExternalConfig {
    Constant { a: [f64; 4] },
    StandingSine { amplitude: f64, mode_number: i64, component: usize },
}

impl ExternalConfig {
    pub fn profile(&self) -> ExternalProfile {
        match *self {
            ExternalConfig::Constant { a } => ExternalProfile::Constant(FourVector(a)),
            ExternalConfig::StandingSine {
                amplitude,
                mode_number,
                component,
            } => ExternalProfile::StandingSine {
                amplitude,
                mode_number,
                component,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_diagnostics")]
    pub diagnostics: String,
    #[serde(default = "default_snapshot")]
    pub snapshot: String,
}

fn default_diagnostics() -> String {
    "diagnostics.csv".into()
}

fn default_snapshot() -> String {
    "final.snap".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            diagnostics: default_diagnostics(),
            snapshot: default_snapshot(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    #[serde(default = "default_dispersion_modes")]
    pub mode_numbers: Vec<i64>,
    /// Number of oscillation periods to time.
    #[serde(default = "default_periods")]
    pub periods: f64,
    #[serde(default)]
    pub site: usize,
}

fn default_dispersion_modes() -> Vec<i64> {
    vec![0, 1, 2, 4, 8]
}

fn default_periods() -> f64 {
    10.0
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            mode_numbers: default_dispersion_modes(),
            periods: default_periods(),
            site: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
}

fn default_resolutions() -> Vec<usize> {
    vec![16, 32, 64, 128]
}

fn default_t_final() -> f64 {
    1.0
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            resolutions: default_resolutions(),
            t_final: default_t_final(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceConfig {
    /// Offset added to one momentum component per site, to push the state
    /// off the case-I constraint.
    #[serde(default)]
    pub perturbation: f64,
}

/// Everything a command needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub z: ZStructure,
    pub mode: EvolutionMode,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| DiracError::Config(e.to_string()))?;
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            return Err(DiracError::Config(format!(
                "unsupported format-version {} (expected {CONFIG_FORMAT_VERSION})",
                cfg.format_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DiracError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn evolution_mode(&self) -> Result<EvolutionMode> {
        Ok(match self.mode {
            ModeTag::Free => EvolutionMode::Free,
            ModeTag::External => {
                let ext = self.external.as_ref().ok_or_else(|| {
                    DiracError::Validation("mode \"external\" requires an [external] table".into())
                })?;
                EvolutionMode::External(ext.profile())
            }
            ModeTag::CoupledLinearI => EvolutionMode::CoupledLinear(Case::I),
            ModeTag::CoupledLinearII => EvolutionMode::CoupledLinear(Case::II),
            ModeTag::CoupledNonlinear => EvolutionMode::CoupledNonlinear,
        })
    }

    /// Checks every precondition that does not need the initial state.
    pub fn prepare(&self, eta: &EtaSet) -> Result<Prepared> {
        let grid = self.grid.build()?;
        let params = PhysicalParams::new(self.params.kappa, self.params.e)?;
        let z = find_z(eta, self.z_index).map_err(|e| match e {
            DiracError::IndexOutOfRange { index, bound } => {
                DiracError::Validation(format!("z-index {index} out of range (expected < {bound})"))
            }
            other => other,
        })?;
        let mode = self.evolution_mode()?;
        if let Some(ExternalConfig::StandingSine { component, mode_number, .. }) = &self.external {
            if *component >= 4 {
                return Err(DiracError::Validation(format!("external component {component} out of range")));
            }
            if mode_number.unsigned_abs() as usize >= grid.n_sites / 2 {
                return Err(DiracError::Validation(format!(
                    "external mode number {mode_number} is not resolved"
                )));
            }
        }
        match &self.initial {
            InitialCondition::PlaneWave { branch, .. } | InitialCondition::Gaussian { branch, .. }
                if *branch != 1 && *branch != -1 =>
            {
                return Err(DiracError::Validation(format!("branch must be ±1, got {branch}")));
            }
            InitialCondition::Gaussian { width, .. } if !(*width >= 4.0 * grid.dx) => {
                return Err(DiracError::Validation(format!("gaussian width {width} is below 4*dx")));
            }
            _ => {}
        }
        Ok(Prepared { grid, params, z, mode })
    }

    /// Validates the run-length settings used by `evolve`.
    pub fn check_run_length(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(DiracError::Validation("n_steps must be at least 1".into()));
        }
        if self.sample_every == 0 {
            return Err(DiracError::Validation("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Initial state, with the external potential applied when the mode or
    /// config supplies one.
    pub fn initial_state(&self, prepared: &Prepared, eta: &EtaSet) -> Result<FieldState> {
        let Prepared { grid, params, z, mode } = prepared;
        let mut state = match &self.initial {
            InitialCondition::PlaneWave {
                mode_number,
                branch,
                amplitude,
            } => init_plane_wave(grid, params, eta, z, *mode_number, *branch, *amplitude)?,
            InitialCondition::Gaussian {
                center,
                width,
                carrier_k,
                amplitude,
                branch,
            } => init_gaussian(grid, params, eta, z, *center, *width, *carrier_k, *amplitude, *branch)?,
            InitialCondition::Snapshot { path } => {
                let (header, state) = read_snapshot(path)?;
                if header.n_sites != grid.n_sites {
                    return Err(DiracError::Validation(format!(
                        "snapshot has {} sites, config grid has {}",
                        header.n_sites, grid.n_sites
                    )));
                }
                state
            }
        };
        let fresh = !matches!(self.initial, InitialCondition::Snapshot { .. });
        if let (Some(ext), true) = (&self.external, fresh) {
            state.a = ext.profile().fill(grid)?;
        }
        if fresh && mode.potential() == Potential::Dynamic {
            state = impose_lorenz_gauge(state, grid);
        }
        state.mode = mode.tag();
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_eta;

    const BASE: &str = r#"
format-version = 1
mode = "coupled-linear-I"
z-index = 0
n_steps = 10
sample_every = 5

[grid]
n_sites = 64
dx = 0.1
dt = 0.025

[params]
kappa = 1.0
e = 0.05

[initial]
kind = "plane-wave"
mode_number = 2
branch = 1
amplitude = 1.0
"#;

    #[test]
    fn parses_base_config() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.mode, ModeTag::CoupledLinearI);
        let eta = build_eta();
        let p = cfg.prepare(&eta).unwrap();
        assert_eq!(p.mode, EvolutionMode::CoupledLinear(Case::I));
        let s = cfg.initial_state(&p, &eta).unwrap();
        assert_eq!(s.n_sites(), 64);
    }

    #[test]
    fn dynamic_runs_start_in_lorenz_gauge() {
        let text = format!(
            "{BASE}\n[external]\nkind = \"standing-sine\"\namplitude = 0.4\nmode_number = 2\ncomponent = 3\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let eta = build_eta();
        let p = cfg.prepare(&eta).unwrap();
        let s = cfg.initial_state(&p, &eta).unwrap();
        assert!(s.a.iter().any(|a| a[3] != 0.0));
        assert!(crate::observables::gauge_residual(&s, &p.grid) <= 1e-15);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("sample_every = 5", "sample_every = 5\nbogus = 1");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(DiracError::Config(_))));
        let text = BASE.replace("amplitude = 1.0", "amplitude = 1.0\nwidth = 2.0");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn rejects_bad_version_and_preconditions() {
        let eta = build_eta();
        assert!(RunConfig::from_toml_str(&BASE.replace("format-version = 1", "format-version = 2")).is_err());
        let cfg = RunConfig::from_toml_str(&BASE.replace("dt = 0.025", "dt = 0.2")).unwrap();
        assert!(cfg.prepare(&eta).is_err());
        let cfg = RunConfig::from_toml_str(&BASE.replace("z-index = 0", "z-index = 9")).unwrap();
        assert!(matches!(cfg.prepare(&eta), Err(DiracError::Validation(_))));
        let cfg = RunConfig::from_toml_str(&BASE.replace("n_steps = 10", "n_steps = 0")).unwrap();
        assert!(cfg.check_run_length().is_err());
        let cfg = RunConfig::from_toml_str(&BASE.replace("mode = \"coupled-linear-I\"", "mode = \"external\"")).unwrap();
        assert!(cfg.prepare(&eta).is_err());
    }

    #[test]
    fn dt_defaults_to_cfl_fraction() {
        let cfg = RunConfig::from_toml_str(&BASE.replace("dt = 0.025", "cfl_factor = 0.25")).unwrap();
        assert_eq!(cfg.grid.build().unwrap().dt, 0.025);
    }
}

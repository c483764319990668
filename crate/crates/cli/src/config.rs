//! Run configuration (TOML). Every table rejects unknown keys.
//!
//! ```toml
//! seed = 7
//! threads = 1
//!
//! [model]                 # exactly one of builtin / file / inline
//! builtin = "spin-half"   # spin-half | spin1 | nonreproducible | destructive
//!
//! [simulate]
//! runs = 10000
//! state = [0.6, 0.8]      # real amplitudes, or [[re, im], ...]
//! mass_density = true     # write the mass density of run 0
//!
//! [simulate.free_packet]  # replaces the model: one packet, no collapses
//! n_points = 512
//! spacing = 0.1
//! width = 1.0
//! mass = 1.0
//! t_final = 4.0
//! samples = 8
//!
//! [extract_povm]
//! source = "spin1"        # spin1 | malus | stern-gerlach | experiment
//! mode = "exact"          # exact | monte_carlo (experiment only)
//!
//! [verify]
//! criteria = ["theorem1-paper-bound", "born-linearity"]
//!
//! [sweep]
//! kind = "stern-gerlach"  # stern-gerlach | malus
//! ```

use std::path::{Path, PathBuf};

use collapse_core::hilbert::{CVector, SpaceSpec, StateVector, C64};
use collapse_core::measurement::{load_model, ModelFile};
use collapse_core::models::desk;
use collapse_core::ExperimentModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract_povm: Option<ExtractBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<ModelFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub mass_density: bool,
    /// Free packet without collapses instead of the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_packet: Option<FreePacketBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreePacketBlock {
    pub n_points: usize,
    pub spacing: f64,
    pub width: f64,
    pub mass: f64,
    pub t_final: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractBlock {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ExtractMode>,
    /// Runs per probe state in Monte Carlo mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_runs: Option<usize>,
    /// Master-equation step in exact mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Filter angle in degrees (malus).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    /// Branch means and spread (stern-gerlach).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(default = "default_povm_tol")]
    pub povm_tol: f64,
    #[serde(default = "default_pvm_tol")]
    pub pvm_tol: f64,
}

fn default_povm_tol() -> f64 {
    1e-8
}

fn default_pvm_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    /// Criterion names, or `["all"]`.
    pub criteria: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

pub fn config_error(path: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config error at `{path}`: {reason}"))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(&path.display().to_string(), e))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("field"))
            .unwrap_or("<document>");
        config_error(field, e.to_string().trim())
    })
}

impl RunConfig {
    pub fn section<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        block.as_ref().ok_or_else(|| config_error(name, "missing table"))
    }

    pub fn experiment_model(&self, base: &Path) -> Result<ExperimentModel, CliError> {
        let m = Self::section(&self.model, "model")?;
        let file = match (&m.builtin, &m.file, &m.inline) {
            (Some(name), None, None) => {
                return match name.as_str() {
                    "spin-half" => Ok(desk::spin_half_model()),
                    "spin1" => Ok(desk::spin1_model()),
                    "nonreproducible" => Ok(desk::nonreproducible_model()),
                    "destructive" => Ok(desk::destructive_model()),
                    other => Err(config_error("model.builtin", format!("unknown model `{other}`"))),
                }
            }
            (None, Some(path), None) => load_model(base.join(path))?,
            (None, None, Some(inline)) => inline.clone(),
            _ => return Err(config_error("model", "give exactly one of `builtin`, `file`, `inline`")),
        };
        Ok(file.build()?)
    }
}

impl StateSpec {
    pub fn state(&self) -> Result<StateVector, CliError> {
        let amps: Vec<C64> = match self {
            StateSpec::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
            StateSpec::Complex(v) => v.iter().map(|&[a, b]| C64::new(a, b)).collect(),
        };
        if amps.is_empty() {
            return Err(config_error("simulate.state", "empty state"));
        }
        let space = SpaceSpec::spin(amps.len())?;
        let psi = StateVector::new(space, CVector::from_vec(amps))?;
        if !psi.is_normalized(1e-9) {
            return Err(config_error("simulate.state", format!("squared norm {} is not 1", psi.norm_sqr())));
        }
        Ok(psi)
    }
}

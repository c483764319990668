//! TOML model files.
//!
//! ```toml
//! t_final = 1.0
//!
//! [system]
//! dim = 2
//! observable = "sigma_z"        # or { re = [[..]], im = [[..]] }
//!
//! [pointer]
//! n_points = 256
//! spacing = 0.05
//! width = 0.1                   # or packets = [{ center, width, weight }, ..]
//! mass = 1.0e4                  # omit for a pointer without kinetic energy
//!
//! [coupling]
//! strength = 50.0
//! duration = 0.05
//!
//! [grw]
//! lambda = 0.0
//! alpha = 4.0
//! pointer_rate = 15.0
//!
//! [calibration]
//! outcomes = [1.0, -1.0]
//! centers = [2.5, -2.5]
//! inner_width = 1.0
//! outer_width = 4.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ExperimentModel, PointerPacket, PointerSpec, SystemFate, POINTER};
use super::{Calibration, Label};
use crate::error::{Error, Result};
use crate::grw::GrwParams;
use crate::hilbert::{spin_matrices, CMatrix, CVector, Grid, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub t_final: f64,
    pub system: SystemBlock,
    pub pointer: PointerBlock,
    pub coupling: CouplingBlock,
    pub grw: GrwBlock,
    pub calibration: CalibrationBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub dim: usize,
    pub observable: ObservableSpec,
    /// Real amplitudes of the state that replaces the system after a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced_by: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    /// `sx`, `sy`, `sz` (spin matrices) or `sigma_x`, `sigma_y`, `sigma_z` (twice those).
    Named(String),
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerBlock {
    pub n_points: usize,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<Vec<PointerPacket>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingBlock {
    pub strength: f64,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrwBlock {
    #[serde(default)]
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBlock {
    pub outcomes: Vec<Label>,
    pub centers: Vec<f64>,
    pub inner_width: f64,
    pub outer_width: f64,
}

fn config_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: e.to_string(),
    }
}

/// Convert a TOML deserialization error, naming the offending key when
/// the parser reports one.
pub(crate) fn toml_error(e: &toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let path = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .unwrap_or("<document>")
        .to_string();
    Error::Config {
        path,
        reason: e.to_string().trim().to_string(),
    }
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    toml::from_str(text).map_err(|e| toml_error(&e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let p = path.as_ref();
    let text = std::fs::read_to_string(p).map_err(|e| config_err(&p.display().to_string(), e))?;
    parse_model(&text)
}

impl ObservableSpec {
    pub fn matrix(&self, dim: usize) -> Result<CMatrix> {
        match self {
            ObservableSpec::Named(name) => {
                let [sx, sy, sz] = spin_matrices(dim).map_err(|e| config_err("system.dim", e))?;
                let m = match name.as_str() {
                    "sx" => sx,
                    "sy" => sy,
                    "sz" => sz,
                    "sigma_x" => sx.scale(2.0),
                    "sigma_y" => sy.scale(2.0),
                    "sigma_z" => sz.scale(2.0),
                    other => return Err(config_err("system.observable", format!("unknown observable `{other}`"))),
                };
                Ok(m)
            }
            ObservableSpec::Matrix { re, im } => {
                let shape_ok = |m: &Vec<Vec<f64>>| m.len() == dim && m.iter().all(|r| r.len() == dim);
                if !shape_ok(re) || im.as_ref().is_some_and(|m| !shape_ok(m)) {
                    return Err(config_err("system.observable", format!("expected a {dim}x{dim} matrix")));
                }
                Ok(CMatrix::from_fn(dim, dim, |i, j| {
                    C64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
                }))
            }
        }
    }
}

impl ModelFile {
    pub fn build(&self) -> Result<ExperimentModel> {
        let p = &self.pointer;
        let grid = match p.origin {
            Some(o) => Grid::new(p.n_points, p.spacing, o),
            None => Grid::centered(p.n_points, p.spacing),
        }
        .map_err(|e| config_err("pointer", e))?;
        let packets = match (&p.packets, p.width) {
            (Some(pk), None) => pk.clone(),
            (None, Some(w)) => vec![PointerPacket {
                center: p.center.unwrap_or(0.0),
                width: w,
                weight: 1.0,
            }],
            _ => return Err(config_err("pointer", "give exactly one of `width` or `packets`")),
        };
        let mut grw = GrwParams::new(self.grw.lambda, self.grw.alpha).map_err(|e| config_err("grw", e))?;
        if let Some(r) = self.grw.pointer_rate {
            grw = grw.with_rate(POINTER, r).map_err(|e| config_err("grw.pointer_rate", e))?;
        }
        let c = &self.calibration;
        let calibration = Calibration::new(c.outcomes.clone(), c.centers.clone(), c.inner_width, c.outer_width)
            .map_err(|e| config_err("calibration", e))?;
        let fate = match &self.system.replaced_by {
            None => SystemFate::Preserved,
            Some(v) => SystemFate::Replaced(CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))),
        };
        let model = ExperimentModel {
            system_dim: self.system.dim,
            observable: self.system.observable.matrix(self.system.dim)?,
            strength: self.coupling.strength,
            coupling_duration: self.coupling.duration,
            pointer: PointerSpec {
                grid,
                packets,
                mass: p.mass,
            },
            grw,
            calibration,
            t_final: self.t_final,
            fate,
        };
        model.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => config_err("model", other),
        })?;
        Ok(model)
    }
}

//! Spontaneous-localization dynamics.
//!
//! Each particle (a grid factor) is hit by Gaussian localizations at the
//! times of an independent Poisson process; the state evolves unitarily in
//! between. [`master`] integrates the ensemble-averaged evolution of the
//! statistical operator, and [`mass`] builds the mass-density field.

mod collapse;
mod density;
pub mod linearity;
pub mod mass;
pub mod master;
mod propagator;
mod trajectory;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use collapse::{
    apply_collapse, collapse_density, sample_collapse_center, sample_collapse_schedule,
    CenterLattice,
};
pub(crate) use collapse::marginal_of;
pub use density::DensityMatrix;
pub use linearity::{averaged_jump, linearity_probe, CollapseRule, LinearityReport};
pub use mass::{mass_density, MassDensityField};
pub use master::master_equation_evolve;
pub use propagator::{Coupling, GridHamiltonian, Hamiltonian, KineticTerm, PotentialTerm, Propagator};
pub use trajectory::{evolve_trajectory, Dynamics, Snapshot, Trajectory};

use crate::error::{Error, Result};
use crate::hilbert::{Factor, SpaceSpec};

/// Collapse rate `lambda` per particle and localization strength `alpha`
/// (inverse length squared). Individual particles may carry an amplified
/// rate, which is how a macroscopic pointer of many constituents is
/// represented by a single grid coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrwParams {
    lambda: f64,
    alpha: f64,
    per_particle_rates: BTreeMap<usize, f64>,
}

impl GrwParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be finite and non-negative"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        Ok(GrwParams {
            lambda,
            alpha,
            per_particle_rates: BTreeMap::new(),
        })
    }

    /// Override the rate of the particle living on grid factor `factor`.
    pub fn with_rate(mut self, factor: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid("per_particle_rates", "overrides must be positive"));
        }
        self.per_particle_rates.insert(factor, rate);
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn per_particle_rates(&self) -> &BTreeMap<usize, f64> {
        &self.per_particle_rates
    }

    pub fn rate_of(&self, factor: usize) -> f64 {
        self.per_particle_rates
            .get(&factor)
            .copied()
            .unwrap_or(self.lambda)
    }

    /// Collapse rate of every factor of `space`; spin factors never collapse.
    pub fn rates_for(&self, space: &SpaceSpec) -> Vec<f64> {
        space
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                Factor::Grid(_) => self.rate_of(i),
                Factor::Spin { .. } => 0.0,
            })
            .collect()
    }
}

/// One spontaneous localization: when, which particle, and where.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub time: f64,
    pub particle: usize,
    pub center: f64,
}

//! Numerical laboratory for GRW-type spontaneous-localization dynamics.
//!
//! * [`hilbert`]: tensor-product spaces of spins and 1D grids, localization
//!   operators, interval projectors and position moments.
//! * [`grw`]: Poisson-timed collapses interleaved with unitary evolution,
//!   the averaged master equation, and the mass-density field.
//! * [`measurement`]: pointer-based experiments, calibration, the outcome
//!   measures `P` and `Q` and the gap bound between them.
//! * [`povm`]: reconstruction of effects from quadratic probability
//!   functionals, POVM/PVM validation and reproducibility tests.
//! * [`models`]: spin-1, Stern-Gerlach and Malus-law examples.
//! * [`verification`]: named end-to-end criteria shared by the CLI and the
//!   acceptance suite.

pub mod error;
pub mod grw;
pub mod hilbert;
pub mod measurement;
pub mod models;
pub mod povm;
pub mod seeds;
pub mod verification;

pub use error::{Error, Result};
pub use grw::{CollapseEvent, DensityMatrix, GrwParams, Hamiltonian, Trajectory};
pub use hilbert::{Factor, Grid, Operator, SpaceSpec, StateVector, C64};
pub use measurement::{Calibration, ExperimentModel, Label, OutcomeDistribution};
pub use povm::{EffectSet, ProbabilityFunctional, PvmReport};

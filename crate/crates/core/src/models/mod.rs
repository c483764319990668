//! Worked examples: spin-1 along `x`, Stern-Gerlach with Gaussian tails,
//! Malus's law, and small pointer experiments for the simulation pipeline.

pub mod desk;
mod malus;
mod spin1;
mod stern_gerlach;

pub use malus::{axis, malus_commutator, malus_formula, malus_functional, malus_intensity, polarizer, MalusFunctional, MalusParams};
pub use spin1::{
    spin1_eigenvectors, spin1_functional, spin1_labels, spin1_operator, spin1_probabilities, Spin1Functional,
    Spin1Params,
};
pub use stern_gerlach::{
    sg_effects, sg_effects_for, sg_effects_on_grid, sg_final_packets, sg_probabilities, Packet, SternGerlachParams,
};

//! Fixtures shared by the benchmarks in `benches/`.

use collapse_core::hilbert::{c, SpaceSpec, StateVector};
use collapse_core::measurement::Experiment;
use collapse_core::models::desk;

/// The desk spin-1/2 experiment, prepared.
pub fn spin_half_experiment() -> Experiment {
    Experiment::new(desk::spin_half_model()).expect("desk model")
}

/// `0.6 |up> + 0.8 |down>`.
pub fn spin_half_state() -> StateVector {
    let space = SpaceSpec::spin(2).expect("spin space");
    StateVector::from_vec(space, vec![c(0.6, 0.0), c(0.8, 0.0)]).expect("normalized")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let exp = spin_half_experiment();
        assert_eq!(exp.system_dim(), spin_half_state().dim());
    }
}

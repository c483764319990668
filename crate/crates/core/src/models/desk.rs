//! Small pointer experiments that run in milliseconds.
//!
//! The pointer is static (no kinetic term) so only the coupling window and
//! the collapses cost time. Collapse rates are chosen so that a run sees
//! about `rate * t_final` localizations of the pointer.

use crate::grw::GrwParams;
use crate::hilbert::{spin_matrices, CMatrix, CVector, Grid, C64};
use crate::measurement::{Calibration, ExperimentModel, Label, PointerPacket, PointerSpec, SystemFate, POINTER};

fn grw(alpha: f64, rate: f64) -> GrwParams {
    GrwParams::new(0.0, alpha)
        .and_then(|p| p.with_rate(POINTER, rate))
        .expect("valid desk parameters")
}

fn pauli_z() -> CMatrix {
    spin_matrices(2).expect("spin-1/2").map(|m| m.scale(2.0))[2].clone()
}

/// Spin-1/2 measured along `z`: pointer shifts to `+-2.5`, outcome
/// intervals of half-width 2 around those.
pub fn spin_half_model() -> ExperimentModel {
    let grid = Grid::centered(256, 0.05).expect("grid");
    ExperimentModel {
        system_dim: 2,
        observable: pauli_z(),
        strength: 50.0,
        coupling_duration: 0.05,
        pointer: PointerSpec::gaussian(grid, 0.0, 0.1, None),
        grw: grw(4.0, 15.0),
        calibration: Calibration::new(vec![Label::Value(1.0), Label::Value(-1.0)], vec![2.5, -2.5], 1.0, 4.0)
            .expect("calibration"),
        t_final: 1.0,
        fate: SystemFate::Preserved,
    }
}

/// Spin-1 measured along `x`: pointer shifts by `2 m_x`.
pub fn spin1_model() -> ExperimentModel {
    let grid = Grid::centered(64, 0.1).expect("grid");
    let [sx, _, _] = spin_matrices(3).expect("spin-1");
    ExperimentModel {
        system_dim: 3,
        observable: sx,
        strength: 40.0,
        coupling_duration: 0.05,
        pointer: PointerSpec::gaussian(grid, 0.0, 0.2, None),
        grw: grw(9.0, 25.0),
        calibration: Calibration::new(
            vec![Label::Value(1.0), Label::Value(0.0), Label::Value(-1.0)],
            vec![2.0, 0.0, -2.0],
            0.6,
            1.8,
        )
        .expect("calibration"),
        t_final: 1.0,
        fate: SystemFate::Preserved,
    }
}

/// Uncoupled pointer prepared in two packets with weights 0.3 and 0.7:
/// the outcome ignores the system, giving effects `0.3 I` and `0.7 I`.
pub fn nonreproducible_model() -> ExperimentModel {
    let mut m = spin_half_model();
    m.strength = 0.0;
    m.pointer.packets = vec![
        PointerPacket {
            center: 2.5,
            width: 0.1,
            weight: 0.3,
        },
        PointerPacket {
            center: -2.5,
            width: 0.1,
            weight: 0.7,
        },
    ];
    m
}

/// The spin-1/2 model with the system replaced by `|+>` after each run.
pub fn destructive_model() -> ExperimentModel {
    let mut m = spin_half_model();
    m.fate = SystemFate::Replaced(CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]));
    m
}

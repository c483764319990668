use serde::{Deserialize, Serialize};

use crate::hilbert::linalg::{commutator, spectral_norm};
use crate::hilbert::{CMatrix, CVector, C64};
use crate::measurement::Label;
use crate::povm::FnFunctional;

/// Linearly polarized light through a sequence of ideal polarizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MalusParams {
    pub epsilon: [f64; 2],
    /// Transmission axes in radians.
    pub filter_angles: Vec<f64>,
}

pub fn axis(theta: f64) -> CVector {
    CVector::from_vec(vec![C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)])
}

/// `|eta><eta|` for the axis at `theta`.
pub fn polarizer(theta: f64) -> CMatrix {
    let e = axis(theta);
    &e * e.adjoint()
}

/// Intensity after each filter, by applying the projectors in order.
pub fn malus_intensity(p: &MalusParams) -> Vec<f64> {
    let mut field = CVector::from_vec(vec![C64::new(p.epsilon[0], 0.0), C64::new(p.epsilon[1], 0.0)]);
    p.filter_angles
        .iter()
        .map(|&t| {
            field = polarizer(t) * &field;
            field.norm_squared()
        })
        .collect()
}

/// Intensity after each filter from `I cos^2` of successive angle differences.
pub fn malus_formula(p: &MalusParams) -> Vec<f64> {
    let [ex, ey] = p.epsilon;
    let mut intensity = ex * ex + ey * ey;
    let mut previous = ey.atan2(ex);
    p.filter_angles
        .iter()
        .map(|&t| {
            intensity *= (t - previous).cos().powi(2);
            previous = t;
            intensity
        })
        .collect()
}

/// `|| [O_1, O_2] ||` for polarizers at `theta1`, `theta2`.
pub fn malus_commutator(theta1: f64, theta2: f64) -> f64 {
    spectral_norm(&commutator(&polarizer(theta1), &polarizer(theta2)))
}

pub type MalusFunctional = FnFunctional<Box<dyn Fn(&CVector) -> Vec<f64> + Sync>>;

/// Transmitted and absorbed fractions `I_f / I_i` for one filter.
pub fn malus_functional(theta: f64) -> MalusFunctional {
    let eta = axis(theta);
    FnFunctional::new(
        2,
        vec![Label::Named("transmitted".into()), Label::Named("absorbed".into())],
        Box::new(move |eps: &CVector| {
            let t = eta.dotc(eps).norm_sqr();
            vec![t, 1.0 - t]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn single_filter() {
        let p = |t: f64| MalusParams {
            epsilon: [2.0, 0.0],
            filter_angles: vec![t],
        };
        assert!((malus_intensity(&p(0.0))[0] - 4.0).abs() < 1e-15);
        assert!((malus_intensity(&p(FRAC_PI_4))[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn order_matters() {
        let run = |a: f64, b: f64| {
            malus_intensity(&MalusParams {
                epsilon: [1.0, 0.0],
                filter_angles: vec![a, b],
            })[1]
        };
        assert!((run(0.0, FRAC_PI_4) - 0.5).abs() < 1e-15);
        assert!((run(FRAC_PI_4, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn commutator_closed_form() {
        assert!(malus_commutator(0.3, 0.3) < 1e-15);
        assert!(malus_commutator(0.3, 0.3 + std::f64::consts::FRAC_PI_2) < 1e-15);
        assert!((malus_commutator(0.0, FRAC_PI_4) - 0.5).abs() < 1e-15);
    }
}

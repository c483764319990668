use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, C64};
use crate::measurement::Label;
use crate::povm::FnFunctional;

/// Spin-1 state `a|+1> + b|0> + c|-1>` in the `S_z` basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spin1Params {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl Spin1Params {
    pub fn new(a: C64, b: C64, c: C64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr() + c.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Spin1Params { a, b, c })
    }

    pub fn real(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0))
    }

    pub fn vector(&self) -> CVector {
        CVector::from_vec(vec![self.a, self.b, self.c])
    }

    pub fn from_vector(v: &CVector) -> Result<Self> {
        if v.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, found: v.len() });
        }
        Self::new(v[0], v[1], v[2])
    }
}

/// `(P(+1), P(0), P(-1))` of an `S_x` measurement.
pub fn spin1_probabilities(p: &Spin1Params) -> [f64; 3] {
    let r2 = std::f64::consts::SQRT_2;
    [
        (p.a + p.b * r2 + p.c).norm_sqr() / 4.0,
        (p.a - p.c).norm_sqr() / 2.0,
        (p.a - p.b * r2 + p.c).norm_sqr() / 4.0,
    ]
}

/// Eigenvectors of `S_x` for eigenvalues `+1, 0, -1`.
pub fn spin1_eigenvectors() -> [CVector; 3] {
    let h = 0.5;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = |x: [f64; 3]| CVector::from_iterator(3, x.iter().map(|&t| C64::new(t, 0.0)));
    [v([h, r, h]), v([r, 0.0, -r]), v([h, -r, h])]
}

/// `S_x` for spin 1: `1/sqrt 2` on the first off-diagonals.
pub fn spin1_operator() -> CMatrix {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(3, 3, &[z, r, z, r, z, r, z, r, z])
}

pub fn spin1_labels() -> Vec<Label> {
    vec![Label::Value(1.0), Label::Value(0.0), Label::Value(-1.0)]
}

pub type Spin1Functional = FnFunctional<fn(&CVector) -> Vec<f64>>;

fn spin1_eval(psi: &CVector) -> Vec<f64> {
    let p = Spin1Params {
        a: psi[0],
        b: psi[1],
        c: psi[2],
    };
    spin1_probabilities(&p).to_vec()
}

/// The exact outcome probabilities as a functional of `(a, b, c)`.
pub fn spin1_functional() -> Spin1Functional {
    FnFunctional::new(3, spin1_labels(), spin1_eval as fn(&CVector) -> Vec<f64>)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_examples() {
        let close = |x: [f64; 3], y: [f64; 3]| x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(spin1_probabilities(&Spin1Params::real(1.0, 0.0, 0.0).unwrap()), [0.25, 0.5, 0.25]));
        assert!(close(spin1_probabilities(&Spin1Params::real(0.0, 1.0, 0.0).unwrap()), [0.5, 0.0, 0.5]));
        assert!(close(spin1_probabilities(&Spin1Params::real(0.5, r, 0.5).unwrap()), [1.0, 0.0, 0.0]));
    }

    #[test]
    fn eigenvectors_diagonalize_operator() {
        let s = spin1_operator();
        for (v, lambda) in spin1_eigenvectors().iter().zip([1.0, 0.0, -1.0]) {
            assert!((&s * v - v.scale(lambda)).norm() < 1e-15);
        }
    }

    #[test]
    fn unnormalized_rejected() {
        assert!(Spin1Params::real(1.0, 1.0, 0.0).is_err());
    }
}

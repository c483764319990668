use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::linalg::{hermitian_eigenvalues, hermiticity_defect, spectral_norm, trace};
use crate::hilbert::{CMatrix, Operator, SpaceSpec, StateVector};

/// Statistical operator on a [`SpaceSpec`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix {
    #[serde(skip)]
    space: SpaceSpec,
    #[serde(skip)]
    matrix: CMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validating constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(space: SpaceSpec, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let h = hermiticity_defect(&matrix);
        if h > Self::HERMITIAN_TOL {
            return Err(Error::NonHermitian(h));
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::TraceDrift((tr - 1.0).abs()));
        }
        let min = hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::invalid("density matrix", format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { space, matrix })
    }

    pub(crate) fn from_parts_unchecked(space: SpaceSpec, matrix: CMatrix) -> Self {
        DensityMatrix { space, matrix }
    }

    pub fn from_state(psi: &StateVector) -> Self {
        DensityMatrix {
            space: psi.space().clone(),
            matrix: psi.density(),
        }
    }

    /// Convex combination `sum_k w_k |psi_k><psi_k|`.
    pub fn mixture(parts: &[(f64, &StateVector)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyTensor)?;
        let space = first.1.space().clone();
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        for (w, psi) in parts {
            if psi.dim() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    found: psi.dim(),
                });
            }
            m += psi.density().scale(*w);
        }
        DensityMatrix::new(space, m)
    }

    /// `c1 rho1 + (1 - c1) rho2`.
    pub fn convex(c1: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        DensityMatrix::new(a.space.clone(), a.matrix.scale(c1) + b.matrix.scale(1.0 - c1))
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `Re Tr(rho O)`.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        let m = op.matrix();
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.matrix[(i, j)] * m[(j, i)]).re;
            }
        }
        Ok(acc)
    }

    /// Half the trace norm of `rho - sigma`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn distance_spectral(&self, other: &DensityMatrix) -> f64 {
        spectral_norm(&(&self.matrix - &other.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{c, StateVector};

    #[test]
    fn validation_and_trace_distance() {
        let space = SpaceSpec::spin(2).unwrap();
        let up = StateVector::basis(space.clone(), 0).unwrap();
        let down = StateVector::basis(space.clone(), 1).unwrap();
        let a = DensityMatrix::from_state(&up);
        let b = DensityMatrix::from_state(&down);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
        let mix = DensityMatrix::convex(0.5, &a, &b).unwrap();
        assert!((mix.purity() - 0.5).abs() < 1e-14);

        let bad = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(DensityMatrix::new(space.clone(), bad).is_err());
        let nonherm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0., 0.), c(0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(space, nonherm), Err(Error::NonHermitian(_))));
    }
}

//! Finite-dimensional state spaces: tensor products of spin levels and
//! one-dimensional position grids.
//!
//! Amplitudes are stored in row-major Kronecker order, the first factor
//! being the most significant index. On a grid factor the computational
//! basis is the position basis and a state's squared amplitudes are the
//! probability masses of the grid cells (no `spacing` weight).

pub mod linalg;
mod ops;

pub use linalg::{c, CMatrix, CVector, C64};
pub use ops::{
    expectation, gaussian_packet, grid_indicator, interval_projector, localization_amplitude,
    localization_operator, marginal, position_moments, reduced_density, spin_matrices, Interval,
    Moments,
};
pub(crate) use ops::moments_of;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1D grid of `n_points` cells starting at `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

impl Grid {
    pub fn new(n_points: usize, spacing: f64, origin: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid("n_points", "a grid needs at least two points"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("origin", "must be finite"));
        }
        Ok(Grid {
            n_points,
            spacing,
            origin,
        })
    }

    /// Grid symmetric about zero with no point exactly at the origin
    /// when `n_points` is even.
    pub fn centered(n_points: usize, spacing: f64) -> Result<Self> {
        Grid::new(n_points, spacing, -0.5 * (n_points as f64 - 1.0) * spacing)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn point(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.point(k))
    }

    pub fn length(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    pub fn last(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    /// The grid must be longer than the localization width `1/sqrt(alpha)`.
    pub fn check_localization_width(&self, alpha: f64) -> Result<()> {
        if self.length() <= 1.0 / alpha.sqrt() {
            return Err(Error::invalid(
                "alpha",
                format!(
                    "localization width {} exceeds grid length {}",
                    1.0 / alpha.sqrt(),
                    self.length()
                ),
            ));
        }
        Ok(())
    }

    /// Angular wave numbers in FFT order.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * self.spacing);
        (0..n)
            .map(|k| {
                let signed = if k < n.div_ceil(2) { k as isize } else { k as isize - n as isize };
                signed as f64 * dk
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Spin { dim: usize },
    Grid(Grid),
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Spin { dim } => *dim,
            Factor::Grid(g) => g.n_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    factors: Vec<Factor>,
}

impl SpaceSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("factors", "a space needs at least one factor"));
        }
        if factors.iter().any(|f| f.dim() == 0) {
            return Err(Error::invalid("factors", "factor dimensions must be positive"));
        }
        Ok(SpaceSpec { factors })
    }

    pub fn spin(dim: usize) -> Result<Self> {
        SpaceSpec::new(vec![Factor::Spin { dim }])
    }

    pub fn grid(grid: Grid) -> Self {
        SpaceSpec {
            factors: vec![Factor::Grid(grid)],
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    pub fn factor(&self, index: usize) -> Result<&Factor> {
        self.factors.get(index).ok_or(Error::FactorOutOfRange {
            index,
            len: self.factors.len(),
        })
    }

    pub fn grid_of(&self, index: usize) -> Result<&Grid> {
        match self.factor(index)? {
            Factor::Grid(g) => Ok(g),
            Factor::Spin { .. } => Err(Error::NotAGridFactor(index)),
        }
    }

    pub fn grid_factors(&self) -> impl Iterator<Item = (usize, &Grid)> {
        self.factors.iter().enumerate().filter_map(|(i, f)| match f {
            Factor::Grid(g) => Some((i, g)),
            Factor::Spin { .. } => None,
        })
    }

    pub fn concat(&self, other: &SpaceSpec) -> SpaceSpec {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        SpaceSpec { factors }
    }

    pub(crate) fn layout(&self, factor: usize) -> Result<FactorLayout> {
        self.factor(factor)?;
        let dims = self.dims();
        let inner: usize = dims[factor + 1..].iter().product();
        let outer: usize = dims[..factor].iter().product();
        Ok(FactorLayout {
            outer,
            n: dims[factor],
            inner,
        })
    }
}

/// Index arithmetic for one factor of a Kronecker-ordered vector:
/// `index = o * n * inner + k * inner + i`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FactorLayout {
    pub outer: usize,
    pub n: usize,
    pub inner: usize,
}

impl FactorLayout {
    /// Base offsets of every line running along the factor; stride is `inner`.
    pub fn line_bases(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.outer).flat_map(move |o| (0..self.inner).map(move |i| o * self.n * self.inner + i))
    }

    /// Factor-local index of a global index.
    #[inline]
    pub fn local(&self, global: usize) -> usize {
        (global / self.inner) % self.n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceSpec,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(space: SpaceSpec, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(StateVector { space, amplitudes })
    }

    pub fn from_vec(space: SpaceSpec, amplitudes: Vec<C64>) -> Result<Self> {
        StateVector::new(space, CVector::from_vec(amplitudes))
    }

    pub fn basis(space: SpaceSpec, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector {
            space,
            amplitudes: amps,
        })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut CVector {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::NotNormalized(n2));
        }
        self.amplitudes.unscale_mut(n2.sqrt());
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized(1e-9) {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_sqr()))
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|^2` for normalized inputs.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn with_global_phase(&self, phase: f64) -> StateVector {
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.map(|a| a * C64::from_polar(1.0, phase)),
        }
    }

    pub fn tensor(parts: &[&StateVector]) -> Result<StateVector> {
        let (first, rest) = parts.split_first().ok_or(Error::EmptyTensor)?;
        let mut space = first.space.clone();
        let mut amps = first.amplitudes.clone();
        for p in rest {
            space = space.concat(&p.space);
            amps = amps.kronecker(&p.amplitudes);
        }
        Ok(StateVector {
            space,
            amplitudes: amps,
        })
    }

    pub fn density(&self) -> CMatrix {
        linalg::outer(&self.amplitudes, &self.amplitudes)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SpaceSpec,
    matrix: CMatrix,
    hermitian: bool,
}

/// Threshold for the validated Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

impl Operator {
    pub fn new(space: SpaceSpec, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let hermitian = linalg::hermiticity_defect(&matrix) < HERMITIAN_TOL;
        Ok(Operator {
            space,
            matrix,
            hermitian,
        })
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let d = space.dim();
        Operator {
            space,
            matrix: CMatrix::identity(d, d),
            hermitian: true,
        }
    }

    pub fn diagonal(space: SpaceSpec, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: diag.len(),
            });
        }
        let d = diag.len();
        let mut m = CMatrix::zeros(d, d);
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = C64::new(v, 0.0);
        }
        Ok(Operator {
            space,
            matrix: m,
            hermitian: true,
        })
    }

    /// Lift a matrix acting on one factor to the whole space.
    pub fn on_factor(space: SpaceSpec, factor: usize, local: &CMatrix) -> Result<Self> {
        let fd = space.factor(factor)?.dim();
        if local.nrows() != fd || local.ncols() != fd {
            return Err(Error::DimensionMismatch {
                expected: fd,
                found: local.nrows(),
            });
        }
        let dims = space.dims();
        let before: usize = dims[..factor].iter().product();
        let after: usize = dims[factor + 1..].iter().product();
        let m = CMatrix::identity(before, before)
            .kronecker(local)
            .kronecker(&CMatrix::identity(after, after));
        Operator::new(space, m)
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

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        StateVector::new(state.space.clone(), &self.matrix * &state.amplitudes)
    }

    pub fn tensor(parts: &[&Operator]) -> Result<Operator> {
        let (first, rest) = parts.split_first().ok_or(Error::EmptyTensor)?;
        let mut space = first.space.clone();
        let mut m = first.matrix.clone();
        for p in rest {
            space = space.concat(&p.space);
            m = m.kronecker(&p.matrix);
        }
        Operator::new(space, m)
    }
}

/// Either kind of object accepted by [`tensor`].
#[derive(Clone, Debug, PartialEq)]
pub enum HilbertObject {
    State(StateVector),
    Operator(Operator),
}

/// Kronecker product in the given factor order. All items must be of the
/// same kind.
pub fn tensor(items: &[HilbertObject]) -> Result<HilbertObject> {
    match items.first() {
        None => Err(Error::EmptyTensor),
        Some(HilbertObject::State(_)) => {
            let states = items
                .iter()
                .map(|it| match it {
                    HilbertObject::State(s) => Ok(s),
                    HilbertObject::Operator(_) => Err(Error::MixedKinds),
                })
                .collect::<Result<Vec<_>>>()?;
            StateVector::tensor(&states).map(HilbertObject::State)
        }
        Some(HilbertObject::Operator(_)) => {
            let ops = items
                .iter()
                .map(|it| match it {
                    HilbertObject::Operator(o) => Ok(o),
                    HilbertObject::State(_) => Err(Error::MixedKinds),
                })
                .collect::<Result<Vec<_>>>()?;
            Operator::tensor(&ops).map(HilbertObject::Operator)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> SpaceSpec {
        SpaceSpec::spin(2).unwrap()
    }

    fn ket(a: f64, b: f64) -> StateVector {
        StateVector::from_vec(qubit(), vec![c(a, 0.), c(b, 0.)]).unwrap()
    }

    #[test]
    fn basis_kronecker() {
        let e0 = StateVector::basis(qubit(), 0).unwrap();
        let out = StateVector::tensor(&[&e0, &e0]).unwrap();
        assert_eq!(out, StateVector::basis(SpaceSpec::new(vec![Factor::Spin { dim: 2 }, Factor::Spin { dim: 2 }]).unwrap(), 0).unwrap());
    }

    #[test]
    fn identity_kronecker() {
        let id = Operator::identity(qubit());
        let HilbertObject::Operator(i4) =
            tensor(&[HilbertObject::Operator(id.clone()), HilbertObject::Operator(id)]).unwrap()
        else {
            panic!("expected operator")
        };
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
        assert!(i4.is_hermitian());
    }

    #[test]
    fn orthogonal_products() {
        let a = StateVector::tensor(&[&ket(1., 0.), &ket(0., 1.)]).unwrap();
        let b = StateVector::tensor(&[&ket(0., 1.), &ket(1., 0.)]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), c(0., 0.));
    }

    #[test]
    fn tensor_rejects_mixed_and_empty() {
        let s = HilbertObject::State(ket(1., 0.));
        let o = HilbertObject::Operator(Operator::identity(qubit()));
        assert_eq!(tensor(&[s, o]), Err(Error::MixedKinds));
        assert_eq!(tensor(&[]), Err(Error::EmptyTensor));
    }

    #[test]
    fn tensor_is_associative_on_basis() {
        let e = |i| StateVector::basis(qubit(), i).unwrap();
        let left = StateVector::tensor(&[&StateVector::tensor(&[&e(0), &e(1)]).unwrap(), &e(1)]).unwrap();
        let right = StateVector::tensor(&[&e(0), &StateVector::tensor(&[&e(1), &e(1)]).unwrap()]).unwrap();
        assert_eq!(left.amplitudes(), right.amplitudes());
    }

    #[test]
    fn dimension_checks() {
        assert!(matches!(
            StateVector::from_vec(qubit(), vec![c(1., 0.)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Operator::new(qubit(), CMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn hermitian_flag_is_validated() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(!Operator::new(qubit(), m).unwrap().is_hermitian());
    }

    #[test]
    fn grid_invariants() {
        assert!(Grid::new(1, 0.1, 0.0).is_err());
        assert!(Grid::new(4, 0.0, 0.0).is_err());
        let g = Grid::centered(4, 1.0).unwrap();
        assert_eq!(g.points().collect::<Vec<_>>(), vec![-1.5, -0.5, 0.5, 1.5]);
        assert!(g.check_localization_width(0.01).is_err());
        assert!(g.check_localization_width(1.0).is_ok());
    }

    #[test]
    fn momenta_follow_fft_order() {
        let g = Grid::new(4, 0.5, 0.0).unwrap();
        let dk = 2.0 * std::f64::consts::PI / 2.0;
        assert_eq!(g.momenta(), vec![0.0, dk, -2.0 * dk, -dk]);
    }
}

use serde::{Deserialize, Serialize};

use super::linalg::{CMatrix, CVector, C64};
use super::{Grid, Operator, SpaceSpec, StateVector};
use crate::error::{Error, Result};

/// Amplitude of the 1D localization kernel at distance `dq` from its center:
/// `(alpha/pi)^{1/4} exp(-alpha dq^2 / 2)`.
#[inline]
pub fn localization_amplitude(alpha: f64, dq: f64) -> f64 {
    (alpha / std::f64::consts::PI).powf(0.25) * (-0.5 * alpha * dq * dq).exp()
}

/// Dense localization operator `L(x)` acting on grid factor `particle`.
pub fn localization_operator(
    space: &SpaceSpec,
    particle: usize,
    center: f64,
    alpha: f64,
) -> Result<Operator> {
    let grid = space.grid_of(particle)?;
    let layout = space.layout(particle)?;
    let profile: Vec<f64> = grid
        .points()
        .map(|q| localization_amplitude(alpha, q - center))
        .collect();
    let diag: Vec<f64> = (0..space.dim()).map(|g| profile[layout.local(g)]).collect();
    Operator::diagonal(space.clone(), &diag)
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Indicator of the grid points lying in a union of closed intervals.
pub fn grid_indicator(grid: &Grid, intervals: &[Interval]) -> Result<Vec<bool>> {
    let (first, last) = (grid.point(0), grid.last());
    let mut clipped: Vec<Interval> = intervals
        .iter()
        .filter(|iv| iv.hi >= first && iv.lo <= last && iv.lo <= iv.hi)
        .map(|iv| Interval::new(iv.lo.max(first), iv.hi.min(last)))
        .collect();
    clipped.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for pair in clipped.windows(2) {
        if pair[1].lo <= pair[0].hi {
            return Err(Error::OverlappingIntervals(pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi));
        }
    }
    Ok(grid
        .points()
        .map(|q| clipped.iter().any(|iv| iv.contains(q)))
        .collect())
}

/// Projector onto pointer positions inside the interval union.
pub fn interval_projector(
    space: &SpaceSpec,
    factor: usize,
    intervals: &[Interval],
) -> Result<Operator> {
    let grid = space.grid_of(factor)?;
    let layout = space.layout(factor)?;
    let inside = grid_indicator(grid, intervals)?;
    let diag: Vec<f64> = (0..space.dim())
        .map(|g| if inside[layout.local(g)] { 1.0 } else { 0.0 })
        .collect();
    Operator::diagonal(space.clone(), &diag)
}

/// Marginal probability of each grid cell of `factor`.
pub fn marginal(state: &StateVector, factor: usize) -> Result<Vec<f64>> {
    let layout = state.space().layout(factor)?;
    let mut out = vec![0.0; layout.n];
    for (g, a) in state.amplitudes().iter().enumerate() {
        out[layout.local(g)] += a.norm_sqr();
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub spread: f64,
}

/// Mean and standard deviation of the position of a grid factor,
/// marginalized over every other factor.
pub fn position_moments(state: &StateVector, factor: usize) -> Result<Moments> {
    let grid = state.space().grid_of(factor)?;
    state.require_normalized()?;
    let m = marginal(state, factor)?;
    Ok(moments_of(grid, &m))
}

pub(crate) fn moments_of(grid: &Grid, marginal: &[f64]) -> Moments {
    let total: f64 = marginal.iter().sum();
    let mean = grid
        .points()
        .zip(marginal)
        .map(|(q, p)| q * p)
        .sum::<f64>()
        / total;
    let var = grid
        .points()
        .zip(marginal)
        .map(|(q, p)| (q - mean).powi(2) * p)
        .sum::<f64>()
        / total;
    Moments {
        mean,
        spread: var.max(0.0).sqrt(),
    }
}

/// `<psi|O|psi>`.
pub fn expectation(state: &StateVector, op: &Operator) -> Result<C64> {
    if state.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.dim(),
        });
    }
    let psi = state.amplitudes();
    Ok(psi.dotc(&(op.matrix() * psi)))
}

/// Reduced density matrix on the factors listed in `keep` (in ascending
/// order), tracing out the rest.
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<CMatrix> {
    let space = state.space();
    let dims = space.dims();
    for &k in keep {
        space.factor(k)?;
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let d_keep: usize = keep_sorted.iter().map(|&k| dims[k]).product();
    let d_rest = space.dim() / d_keep;

    // Reshape psi into a (kept x traced) matrix, then rho = Psi Psi^dagger.
    let mut psi = CMatrix::zeros(d_keep, d_rest);
    let mut digits = vec![0usize; dims.len()];
    for (g, &a) in state.amplitudes().iter().enumerate() {
        let mut rem = g;
        for f in (0..dims.len()).rev() {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        let (mut row, mut col) = (0usize, 0usize);
        for f in 0..dims.len() {
            if keep_sorted.binary_search(&f).is_ok() {
                row = row * dims[f] + digits[f];
            } else {
                col = col * dims[f] + digits[f];
            }
        }
        psi[(row, col)] = a;
    }
    Ok(&psi * psi.adjoint())
}

/// Gaussian packet with position standard deviation `width` and mean
/// momentum `momentum`, normalized on the grid.
pub fn gaussian_packet(grid: &Grid, center: f64, width: f64, momentum: f64) -> CVector {
    let mut v = CVector::from_iterator(
        grid.n_points(),
        grid.points().map(|q| {
            let env = (-(q - center).powi(2) / (4.0 * width * width)).exp();
            C64::from_polar(env, momentum * q)
        }),
    );
    let n = v.norm();
    if n > 0.0 {
        v.unscale_mut(n);
    }
    v
}

/// Spin matrices `(S_x, S_y, S_z)` for spin `j = (dim - 1)/2` in the basis
/// `m = j, j - 1, ..., -j` (hbar = 1).
pub fn spin_matrices(dim: usize) -> Result<[CMatrix; 3]> {
    if dim < 2 {
        return Err(Error::invalid("dim", "spin dimension must be at least 2"));
    }
    let j = (dim as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    let mut sx = CMatrix::zeros(dim, dim);
    let mut sy = CMatrix::zeros(dim, dim);
    let mut sz = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        sz[(k, k)] = C64::new(m(k), 0.0);
        if k + 1 < dim {
            // <m + 1| S_+ |m> between rows k and k + 1.
            let mk = m(k + 1);
            let up = (j * (j + 1.0) - mk * (mk + 1.0)).sqrt();
            sx[(k, k + 1)] = C64::new(0.5 * up, 0.0);
            sx[(k + 1, k)] = C64::new(0.5 * up, 0.0);
            sy[(k, k + 1)] = C64::new(0.0, -0.5 * up);
            sy[(k + 1, k)] = C64::new(0.0, 0.5 * up);
        }
    }
    Ok([sx, sy, sz])
}

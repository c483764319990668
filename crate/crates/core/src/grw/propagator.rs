//! Unitary evolution between collapses.
//!
//! Grid Hamiltonians are sums of kinetic terms `p^2/2m`, position
//! potentials, and an optional impulsive measurement coupling
//! `g * A (x) p_pointer` switched on during `[start, end]`. Kinetic and
//! coupling terms are simultaneously diagonal in (eigenbasis of `A`) x
//! (momentum), so without potentials every segment is propagated exactly;
//! potentials are handled with Strang splitting. Dense Hamiltonians are
//! propagated through their eigen-decomposition.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hilbert::linalg::{hermitian_eigen, hermiticity_defect, CMatrix, CVector, C64};
use crate::hilbert::{FactorLayout, Operator, SpaceSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct KineticTerm {
    pub factor: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm {
    pub factor: usize,
    pub values: Vec<f64>,
}

/// Von Neumann coupling `strength * observable (x) p` between a system
/// factor and a pointer grid, active for `start <= t <= end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub system_factor: usize,
    pub observable: CMatrix,
    pub pointer_factor: usize,
    pub strength: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridHamiltonian {
    pub kinetic: Vec<KineticTerm>,
    pub potentials: Vec<PotentialTerm>,
    pub coupling: Option<Coupling>,
    /// Largest Strang step when potentials are present.
    pub max_step: f64,
}

impl GridHamiltonian {
    pub fn free(factor: usize, mass: f64) -> Self {
        GridHamiltonian {
            kinetic: vec![KineticTerm { factor, mass }],
            potentials: Vec::new(),
            coupling: None,
            max_step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Hamiltonian {
    Zero,
    Dense(Operator),
    Grid(GridHamiltonian),
}

impl Hamiltonian {
    pub fn prepare(&self, space: &SpaceSpec) -> Result<Propagator> {
        let dim = space.dim();
        let kind = match self {
            Hamiltonian::Zero => Kind::Identity,
            Hamiltonian::Dense(op) => {
                if op.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: op.dim(),
                    });
                }
                if !op.is_hermitian() {
                    return Err(Error::NonHermitian(hermiticity_defect(op.matrix())));
                }
                let (values, vectors) = hermitian_eigen(op.matrix());
                Kind::Dense { values, vectors }
            }
            Hamiltonian::Grid(h) => Kind::Grid(Box::new(GridPropagator::new(space, h)?)),
        };
        Ok(Propagator { dim, kind })
    }
}

/// A Hamiltonian prepared for repeated propagation (FFT plans, eigenbases).
pub struct Propagator {
    dim: usize,
    kind: Kind,
}

enum Kind {
    Identity,
    Dense { values: Vec<f64>, vectors: CMatrix },
    Grid(Box<GridPropagator>),
}

struct FftAxis {
    layout: FactorLayout,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct CouplingPrep {
    system: FactorLayout,
    eigvecs: CMatrix,
    eigvecs_adj: CMatrix,
    strength: f64,
    start: f64,
    end: f64,
    /// `a_s * p_pointer` per global index, in the (eigenbasis x momentum) frame.
    drift: Vec<f64>,
}

struct GridPropagator {
    axes: Vec<FftAxis>,
    kinetic: Vec<f64>,
    has_kinetic: bool,
    potential: Option<Vec<f64>>,
    coupling: Option<CouplingPrep>,
    max_step: f64,
}

impl GridPropagator {
    fn new(space: &SpaceSpec, h: &GridHamiltonian) -> Result<Self> {
        let dim = space.dim();
        let mut planner = FftPlanner::<f64>::new();
        let mut axis_factors: Vec<usize> = h.kinetic.iter().map(|k| k.factor).collect();
        if let Some(c) = &h.coupling {
            axis_factors.push(c.pointer_factor);
        }
        axis_factors.sort_unstable();
        axis_factors.dedup();

        let mut axes = Vec::new();
        for &f in &axis_factors {
            let grid = space.grid_of(f)?;
            axes.push(FftAxis {
                layout: space.layout(f)?,
                forward: planner.plan_fft_forward(grid.n_points()),
                inverse: planner.plan_fft_inverse(grid.n_points()),
            });
        }

        let mut kinetic = vec![0.0; dim];
        for term in &h.kinetic {
            if !(term.mass > 0.0) {
                return Err(Error::invalid("mass", "must be positive"));
            }
            let p = space.grid_of(term.factor)?.momenta();
            let layout = space.layout(term.factor)?;
            for (g, t) in kinetic.iter_mut().enumerate() {
                let pk = p[layout.local(g)];
                *t += pk * pk / (2.0 * term.mass);
            }
        }

        let potential = if h.potentials.is_empty() {
            None
        } else {
            let mut v = vec![0.0; dim];
            for term in &h.potentials {
                let grid = space.grid_of(term.factor)?;
                if term.values.len() != grid.n_points() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.n_points(),
                        found: term.values.len(),
                    });
                }
                let layout = space.layout(term.factor)?;
                for (g, vg) in v.iter_mut().enumerate() {
                    *vg += term.values[layout.local(g)];
                }
            }
            if !(h.max_step > 0.0) {
                return Err(Error::invalid("max_step", "must be positive"));
            }
            Some(v)
        };

        let coupling = match &h.coupling {
            None => None,
            Some(c) => {
                let system = space.layout(c.system_factor)?;
                if c.observable.nrows() != system.n || c.observable.ncols() != system.n {
                    return Err(Error::DimensionMismatch {
                        expected: system.n,
                        found: c.observable.nrows(),
                    });
                }
                let defect = hermiticity_defect(&c.observable);
                if defect > 1e-12 {
                    return Err(Error::NonHermitian(defect));
                }
                if c.end < c.start {
                    return Err(Error::invalid("coupling", "end precedes start"));
                }
                let (vals, vecs) = hermitian_eigen(&c.observable);
                let p = space.grid_of(c.pointer_factor)?.momenta();
                let pointer = space.layout(c.pointer_factor)?;
                let drift = (0..dim)
                    .map(|g| vals[system.local(g)] * p[pointer.local(g)])
                    .collect();
                Some(CouplingPrep {
                    system,
                    eigvecs_adj: vecs.adjoint(),
                    eigvecs: vecs,
                    strength: c.strength,
                    start: c.start,
                    end: c.end,
                    drift,
                })
            }
        };

        Ok(GridPropagator {
            axes,
            has_kinetic: !h.kinetic.is_empty(),
            kinetic,
            potential,
            coupling,
            max_step: h.max_step,
        })
    }

    fn propagate(&self, amps: &mut [C64], t0: f64, t1: f64) {
        let mut cuts = vec![t0];
        if let Some(c) = &self.coupling {
            for b in [c.start, c.end] {
                if b > t0 && b < t1 {
                    cuts.push(b);
                }
            }
        }
        cuts.push(t1);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let active = self
                .coupling
                .as_ref()
                .is_some_and(|c| c.start <= mid && mid <= c.end);
            match &self.potential {
                None => self.momentum_step(amps, b - a, active),
                Some(v) => {
                    let n = ((b - a) / self.max_step).ceil().max(1.0) as usize;
                    let dt = (b - a) / n as f64;
                    let half: Vec<C64> = v.iter().map(|&x| C64::from_polar(1.0, -0.5 * x * dt)).collect();
                    for _ in 0..n {
                        amps.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
                        self.momentum_step(amps, dt, active);
                        amps.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
                    }
                }
            }
        }
    }

    fn momentum_step(&self, amps: &mut [C64], dt: f64, active: bool) {
        let coupling = self.coupling.as_ref().filter(|_| active);
        if coupling.is_none() && !self.has_kinetic {
            return;
        }
        if let Some(c) = coupling {
            apply_local(amps, &c.system, &c.eigvecs_adj);
        }
        for axis in &self.axes {
            fft_along(amps, &axis.layout, axis.forward.as_ref(), 1.0);
        }
        match coupling {
            Some(c) => {
                for ((a, t), d) in amps.iter_mut().zip(&self.kinetic).zip(&c.drift) {
                    *a *= C64::from_polar(1.0, -(t + c.strength * d) * dt);
                }
            }
            None => {
                for (a, t) in amps.iter_mut().zip(&self.kinetic) {
                    *a *= C64::from_polar(1.0, -t * dt);
                }
            }
        }
        for axis in &self.axes {
            fft_along(amps, &axis.layout, axis.inverse.as_ref(), 1.0 / axis.layout.n as f64);
        }
        if let Some(c) = coupling {
            apply_local(amps, &c.system, &c.eigvecs);
        }
    }
}

fn fft_along(amps: &mut [C64], layout: &FactorLayout, fft: &dyn Fft<f64>, scale: f64) {
    let n = layout.n;
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    if layout.inner == 1 {
        for chunk in amps.chunks_exact_mut(n) {
            fft.process_with_scratch(chunk, &mut scratch);
            if scale != 1.0 {
                chunk.iter_mut().for_each(|a| *a *= scale);
            }
        }
        return;
    }
    let mut line = vec![C64::new(0.0, 0.0); n];
    for base in layout.line_bases() {
        for (k, v) in line.iter_mut().enumerate() {
            *v = amps[base + k * layout.inner];
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        for (k, v) in line.iter().enumerate() {
            amps[base + k * layout.inner] = v * scale;
        }
    }
}

/// Apply a factor-local matrix to every line along that factor.
pub(crate) fn apply_local(amps: &mut [C64], layout: &FactorLayout, m: &CMatrix) {
    let n = layout.n;
    let mut line = vec![C64::new(0.0, 0.0); n];
    for base in layout.line_bases() {
        for (k, v) in line.iter_mut().enumerate() {
            *v = amps[base + k * layout.inner];
        }
        for r in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (k, v) in line.iter().enumerate() {
                acc += m[(r, k)] * v;
            }
            amps[base + r * layout.inner] = acc;
        }
    }
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    /// Evolve amplitudes from `t0` to `t1`.
    pub fn propagate(&self, amps: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        if amps.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: amps.len(),
            });
        }
        if t1 < t0 {
            return Err(Error::invalid("time", "propagation backwards in time"));
        }
        if t1 == t0 {
            return Ok(());
        }
        match &self.kind {
            Kind::Identity => {}
            Kind::Dense { values, vectors } => {
                let psi = CVector::from_column_slice(amps);
                let mut coeffs = vectors.adjoint() * psi;
                for (c, e) in coeffs.iter_mut().zip(values) {
                    *c *= C64::from_polar(1.0, -e * (t1 - t0));
                }
                amps.copy_from_slice((vectors * coeffs).as_slice());
            }
            Kind::Grid(g) => g.propagate(amps, t0, t1),
        }
        Ok(())
    }

    /// `rho -> U rho U^dagger` for the evolution from `t0` to `t1`.
    pub fn propagate_density(&self, rho: &mut CMatrix, t0: f64, t1: f64) -> Result<()> {
        if self.is_identity() || t1 == t0 {
            return Ok(());
        }
        let n = rho.nrows();
        for j in 0..n {
            self.propagate(rho.column_mut(j).as_mut_slice(), t0, t1)?;
        }
        let mut b = rho.adjoint();
        for j in 0..n {
            self.propagate(b.column_mut(j).as_mut_slice(), t0, t1)?;
        }
        *rho = b.adjoint();
        Ok(())
    }
}

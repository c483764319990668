use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, SpaceSpec, StateVector};
use crate::measurement::{Estimate, Experiment, Label};
use crate::seeds::derive_seed;

/// How a functional produces its numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalMode {
    Exact,
    MonteCarlo { n_runs: usize, seed: u64 },
}

/// Outcome probabilities as a function of the initial system state.
pub trait ProbabilityFunctional: Sync {
    fn dim(&self) -> usize;

    /// Outcome labels, in the order of [`evaluate`](Self::evaluate).
    fn labels(&self) -> Vec<Label>;

    fn mode(&self) -> FunctionalMode;

    /// Probability of every outcome for the normalized state `psi`.
    /// `stream` selects an independent random stream in Monte Carlo mode.
    fn evaluate(&self, psi: &CVector, stream: u64) -> Result<Vec<Estimate>>;

    /// Probability of a union of outcomes.
    fn probability(&self, psi: &CVector, subset: &[usize], stream: u64) -> Result<Estimate> {
        let all = self.evaluate(psi, stream)?;
        if subset.iter().any(|&i| i >= all.len()) {
            return Err(Error::invalid("V", "outcome index out of range"));
        }
        let p: f64 = subset.iter().map(|&i| all[i].value).sum();
        Ok(match self.mode() {
            FunctionalMode::Exact => Estimate::exact(p),
            FunctionalMode::MonteCarlo { n_runs, .. } => Estimate {
                value: p,
                se: (p * (1.0 - p) / n_runs as f64).max(0.0).sqrt(),
            },
        })
    }
}

fn check_state(psi: &CVector, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi.len(),
        });
    }
    let n = psi.norm_squared();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// `psi -> <psi|K_v|psi>` for fixed Hermitian kernels.
#[derive(Clone, Debug)]
pub struct QuadraticFunctional {
    labels: Vec<Label>,
    kernels: Vec<CMatrix>,
}

impl QuadraticFunctional {
    pub fn new(labels: Vec<Label>, kernels: Vec<CMatrix>) -> Result<Self> {
        if labels.is_empty() || labels.len() != kernels.len() {
            return Err(Error::invalid("kernels", "need one kernel per label"));
        }
        let d = kernels[0].nrows();
        if kernels.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::invalid("kernels", "kernels must be square of equal size"));
        }
        Ok(QuadraticFunctional { labels, kernels })
    }

    /// `{K, I - K}` labelled "in" and "out".
    pub fn with_complement(kernel: CMatrix) -> Result<Self> {
        let d = kernel.nrows();
        let rest = CMatrix::identity(d, d) - &kernel;
        Self::new(vec![Label::Named("in".into()), Label::Named("out".into())], vec![kernel, rest])
    }
}

impl ProbabilityFunctional for QuadraticFunctional {
    fn dim(&self) -> usize {
        self.kernels[0].nrows()
    }

    fn labels(&self) -> Vec<Label> {
        self.labels.clone()
    }

    fn mode(&self) -> FunctionalMode {
        FunctionalMode::Exact
    }

    fn evaluate(&self, psi: &CVector, _stream: u64) -> Result<Vec<Estimate>> {
        check_state(psi, self.dim())?;
        Ok(self
            .kernels
            .iter()
            .map(|k| Estimate::exact(psi.dotc(&(k * psi)).re))
            .collect())
    }
}

/// An exact functional given by a closure.
pub struct FnFunctional<F> {
    dim: usize,
    labels: Vec<Label>,
    f: F,
}

impl<F> FnFunctional<F>
where
    F: Fn(&CVector) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, labels: Vec<Label>, f: F) -> Self {
        FnFunctional { dim, labels, f }
    }
}

impl<F> ProbabilityFunctional for FnFunctional<F>
where
    F: Fn(&CVector) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn labels(&self) -> Vec<Label> {
        self.labels.clone()
    }

    fn mode(&self) -> FunctionalMode {
        FunctionalMode::Exact
    }

    fn evaluate(&self, psi: &CVector, _stream: u64) -> Result<Vec<Estimate>> {
        check_state(psi, self.dim)?;
        let v = (self.f)(psi);
        if v.len() != self.labels.len() {
            return Err(Error::invalid("functional", "wrong number of outcomes"));
        }
        Ok(v.into_iter().map(Estimate::exact).collect())
    }
}

/// How an experiment is turned into outcome probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentMode {
    /// Label frequencies over `n_runs` trajectories per probe.
    MonteCarlo { n_runs: usize, seed: u64 },
    /// Region traces of the master-equation state at `t_final`.
    Exact { dt: f64 },
}

/// The outcome probabilities of an [`Experiment`], null outcome included.
pub struct ExperimentFunctional<'a> {
    experiment: &'a Experiment,
    mode: ExperimentMode,
}

impl<'a> ExperimentFunctional<'a> {
    pub fn new(experiment: &'a Experiment, mode: ExperimentMode) -> Self {
        ExperimentFunctional { experiment, mode }
    }
}

impl ProbabilityFunctional for ExperimentFunctional<'_> {
    fn dim(&self) -> usize {
        self.experiment.system_dim()
    }

    fn labels(&self) -> Vec<Label> {
        self.experiment.labels()
    }

    fn mode(&self) -> FunctionalMode {
        match self.mode {
            ExperimentMode::MonteCarlo { n_runs, seed } => FunctionalMode::MonteCarlo { n_runs, seed },
            ExperimentMode::Exact { .. } => FunctionalMode::Exact,
        }
    }

    fn evaluate(&self, psi: &CVector, stream: u64) -> Result<Vec<Estimate>> {
        check_state(psi, self.dim())?;
        let space = SpaceSpec::new(vec![crate::hilbert::Factor::Spin { dim: self.dim() }])?;
        let state = StateVector::new(space, psi.clone())?;
        match self.mode {
            ExperimentMode::MonteCarlo { n_runs, seed } => {
                let dist = self.experiment.distribution(derive_seed(seed, stream), &state, n_runs)?;
                Ok((0..dist.labels.len()).map(|i| dist.estimate(i)).collect())
            }
            ExperimentMode::Exact { dt } => {
                let rho = self.experiment.final_density(&state, dt)?;
                Ok(self
                    .experiment
                    .region_traces(&rho)?
                    .into_iter()
                    .map(Estimate::exact)
                    .collect())
            }
        }
    }
}

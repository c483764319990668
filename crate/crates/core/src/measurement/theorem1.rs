//! Gap between the empirical outcome distribution `P` and the measure `Q`.

use serde::Serialize;

use super::model::{Experiment, RunSummary};
use super::{Estimate, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::seeds::derive_seed;

/// `2 [(sigma_q / l)^2 + eta]`.
pub fn gap_bound(sigma_over_ell: f64, eta: f64) -> f64 {
    2.0 * (sigma_over_ell * sigma_over_ell + eta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub subset: Vec<usize>,
    pub p_hat: Estimate,
    pub q_hat: Estimate,
    pub gap: f64,
    pub sigma_q: f64,
    pub ell: f64,
    pub eta_hat: f64,
    pub bound: f64,
    /// `3 (SE_P + SE_Q)`.
    pub allowance: f64,
    pub pass: bool,
}

/// Ensembles for `P` (labels) and `Q` (interval probabilities), drawn
/// independently, from which every outcome subset can be checked.
#[derive(Clone, Debug)]
pub struct Theorem1Data {
    pub distribution: OutcomeDistribution,
    /// Per-run region probabilities of the `Q` ensemble.
    pub q_region_probs: Vec<Vec<f64>>,
    pub sigma_q: f64,
    pub eta_hat: f64,
    pub ell: f64,
}

impl Theorem1Data {
    pub fn from_runs(experiment: &Experiment, p_runs: &[RunSummary], q_runs: &[RunSummary]) -> Result<Self> {
        if p_runs.is_empty() || q_runs.is_empty() {
            return Err(Error::invalid("n_runs", "both ensembles need at least one run"));
        }
        let distribution = experiment.distribution_of(p_runs);
        let sigma_q = p_runs
            .iter()
            .chain(q_runs)
            .map(|r| r.pointer_spread)
            .fold(0.0, f64::max);
        // Upper confidence bound on the null probability; the binomial SE is
        // floored at p = 1/n so an empty null bin still carries an error.
        let n = distribution.total as f64;
        let p_null = distribution.frequency(distribution.null_index());
        let p_floor = p_null.max(1.0 / n);
        let eta_hat = p_null + 3.0 * (p_floor * (1.0 - p_floor) / n).sqrt();
        Ok(Theorem1Data {
            distribution,
            q_region_probs: q_runs.iter().map(|r| r.region_probs.clone()).collect(),
            sigma_q,
            eta_hat,
            ell: experiment.calibration().ell(),
        })
    }

    pub fn evaluate(&self, subset: &[usize]) -> Theorem1Report {
        let p_hat = self.distribution.estimate_subset(subset);
        let xs: Vec<f64> = self
            .q_region_probs
            .iter()
            .map(|r| subset.iter().map(|&i| r[i]).sum())
            .collect();
        let q_hat = Estimate::mean_of(&xs);
        let gap = (p_hat.value - q_hat.value).abs();
        let bound = gap_bound(self.sigma_q / self.ell, self.eta_hat);
        let allowance = 3.0 * (p_hat.se + q_hat.se);
        Theorem1Report {
            subset: subset.to_vec(),
            p_hat,
            q_hat,
            gap,
            sigma_q: self.sigma_q,
            ell: self.ell,
            eta_hat: self.eta_hat,
            bound,
            allowance,
            pass: gap <= bound + allowance,
        }
    }

    /// Every non-empty subset of the (non-null) outcomes.
    pub fn all_subsets(&self) -> Vec<Theorem1Report> {
        let k = self.distribution.labels.len() - 1;
        (1u32..(1 << k))
            .map(|mask| {
                let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
                self.evaluate(&subset)
            })
            .collect()
    }
}

/// Estimate `P[V]` from `n_runs` labels and `Q[V]` from `m` independent
/// runs, and compare the gap with the bound.
pub fn theorem1_gap(
    seed: u64,
    experiment: &Experiment,
    system: &StateVector,
    subset: &[usize],
    n_runs: usize,
    m: usize,
) -> Result<Theorem1Report> {
    let data = theorem1_data(seed, experiment, system, n_runs, m)?;
    if subset.iter().any(|&i| i >= experiment.calibration().len()) {
        return Err(Error::invalid("V", "outcome index out of range"));
    }
    Ok(data.evaluate(subset))
}

pub(crate) fn theorem1_data(
    seed: u64,
    experiment: &Experiment,
    system: &StateVector,
    n_runs: usize,
    m: usize,
) -> Result<Theorem1Data> {
    let p_runs = experiment.ensemble(derive_seed(seed, 0), system, n_runs)?;
    let q_runs = experiment.ensemble(derive_seed(seed, 1), system, m)?;
    Theorem1Data::from_runs(experiment, &p_runs, &q_runs)
}

impl Theorem1Data {
    pub fn collect(seed: u64, experiment: &Experiment, system: &StateVector, n_runs: usize, m: usize) -> Result<Self> {
        theorem1_data(seed, experiment, system, n_runs, m)
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::ProbabilityFunctional;
use super::reconstruct::{reconstruct_effects, MC_ASYMMETRY_SIGMAS};
use super::{pvm_check, validate_povm, EffectSet, PovmValidity, PvmReport};
use crate::error::{Error, Result};
use crate::hilbert::linalg::numerical_rank;
use crate::hilbert::{CMatrix, StateVector};
use crate::measurement::{Estimate, Experiment};
use crate::seeds::derive_path;

/// Relative singular-value threshold of the span check.
pub const SPAN_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproducibilityReport {
    /// Pairs whose first outcome was not null.
    pub pairs: u64,
    pub null_first: u64,
    /// Second run null after a non-null first outcome (counted as disagreement).
    pub null_second: u64,
    /// Frequency of equal first and second outcomes.
    pub agreement: Estimate,
    /// Rank of the post-measurement states, from their frame operator.
    pub span_rank: usize,
    pub dim: usize,
    pub spans: bool,
    pub min_agreement: f64,
    pub reproducible: bool,
}

/// Measure, hand the system to a fresh apparatus, measure again.
///
/// Pair `k` prepares `probes[k % probes.len()]` and runs with seeds
/// `derive_path(seed, [k, 0])` and `derive_path(seed, [k, 1])`.
pub fn reproducibility_test(
    seed: u64,
    experiment: &Experiment,
    probes: &[StateVector],
    n_pairs: usize,
    min_agreement: f64,
) -> Result<ReproducibilityReport> {
    if probes.is_empty() || n_pairs == 0 {
        return Err(Error::invalid("probes", "need at least one probe and one pair"));
    }
    let d = experiment.system_dim();
    let null = experiment.calibration().len();
    let results: Vec<Option<(bool, bool, CMatrix)>> = (0..n_pairs as u64)
        .into_par_iter()
        .map(|k| {
            let probe = &probes[k as usize % probes.len()];
            let first = experiment.run(derive_path(seed, &[k, 0]), probe)?;
            if first.summary.outcome == null {
                return Ok(None);
            }
            let post = experiment.post_measurement_state(&first)?;
            let second = experiment.run(derive_path(seed, &[k, 1]), &post)?;
            let s = post.amplitudes();
            Ok(Some((
                second.summary.outcome == first.summary.outcome,
                second.summary.outcome == null,
                s * s.adjoint(),
            )))
        })
        .collect::<Result<_>>()?;

    let mut frame = CMatrix::zeros(d, d);
    let (mut pairs, mut agree, mut null_second) = (0u64, 0u64, 0u64);
    for (same, second_null, proj) in results.iter().flatten() {
        pairs += 1;
        agree += *same as u64;
        null_second += *second_null as u64;
        frame += proj;
    }
    let null_first = n_pairs as u64 - pairs;
    let agreement = if pairs > 0 {
        Estimate::binomial(agree, pairs)
    } else {
        Estimate::exact(0.0)
    };
    let span_rank = if pairs > 0 { numerical_rank(&frame, SPAN_THRESHOLD) } else { 0 };
    let spans = span_rank == d;
    Ok(ReproducibilityReport {
        pairs,
        null_first,
        null_second,
        agreement,
        span_rank,
        dim: d,
        spans,
        min_agreement,
        reproducible: spans && pairs > 0 && agreement.value >= min_agreement,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Tolerances {
    /// POVM axiom tolerance (raised to 5 SE for Monte Carlo effects).
    pub povm: f64,
    /// Largest idempotency/orthogonality defect of a PVM.
    pub pvm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem3Verdict {
    pub effects: EffectSet,
    pub validity: PovmValidity,
    pub pvm: PvmReport,
    pub reproducible: Option<bool>,
    /// Valid POVM, and a PVM whenever the experiment is reproducible.
    pub holds: bool,
}

pub fn theorem3_pipeline(
    functional: &dyn ProbabilityFunctional,
    reproducibility: Option<&ReproducibilityReport>,
    tols: Theorem3Tolerances,
) -> Result<Theorem3Verdict> {
    let effects = reconstruct_effects(functional)?;
    let povm_tol = effects
        .max_entry_se()
        .map_or(tols.povm, |se| tols.povm.max(MC_ASYMMETRY_SIGMAS * se));
    let validity = validate_povm(&effects, povm_tol);
    let pvm = pvm_check(&effects, tols.pvm);
    let reproducible = reproducibility.map(|r| r.reproducible);
    let holds = validity.valid && (reproducible != Some(true) || pvm.is_pvm);
    Ok(Theorem3Verdict {
        effects,
        validity,
        pvm,
        reproducible,
        holds,
    })
}

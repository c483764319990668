//! Effects from outcome probabilities that are quadratic in the state.
//!
//! A [`ProbabilityFunctional`] is evaluated on a fixed set of probe states;
//! polarization turns the numbers into one Hermitian matrix per outcome.
//! The resulting [`EffectSet`] is then checked as a POVM and as a PVM.

mod functional;
mod reconstruct;
mod reproducibility;

use serde::{Deserialize, Serialize};

pub use functional::{
    ExperimentFunctional, ExperimentMode, FnFunctional, FunctionalMode, ProbabilityFunctional,
    QuadraticFunctional,
};
pub use reconstruct::{reconstruct_effects, EXACT_ASYMMETRY_TOL, MC_ASYMMETRY_SIGMAS};
pub use reproducibility::{
    reproducibility_test, theorem3_pipeline, ReproducibilityReport, Theorem3Tolerances, Theorem3Verdict,
};

use crate::error::{Error, Result};
use crate::hilbert::linalg::{hermitian_eigenvalues, hermiticity_defect, spectral_norm};
use crate::hilbert::{CMatrix, C64};
use crate::measurement::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One effect per outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "EffectSetRepr", try_from = "EffectSetRepr")]
pub struct EffectSet {
    pub labels: Vec<Label>,
    pub effects: Vec<CMatrix>,
    /// Standard error of each entry (real and imaginary parts separately),
    /// Monte Carlo reconstructions only.
    pub entry_se: Option<Vec<CMatrix>>,
    /// Largest mismatch between the two imaginary probes of a pair.
    pub max_asymmetry: f64,
    pub provenance: Provenance,
}

impl EffectSet {
    /// Effects given directly, as from an analytic model.
    pub fn exact(labels: Vec<Label>, effects: Vec<CMatrix>) -> Result<Self> {
        if labels.is_empty() || labels.len() != effects.len() {
            return Err(Error::invalid("effects", "need one effect per label"));
        }
        let d = effects[0].nrows();
        if effects.iter().any(|e| e.nrows() != d || e.ncols() != d) {
            return Err(Error::invalid("effects", "effects must be square of equal size"));
        }
        Ok(EffectSet {
            labels,
            effects,
            entry_se: None,
            max_asymmetry: 0.0,
            provenance: Provenance {
                mode: "analytic".into(),
                n_runs: None,
                seed: None,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `O_V` as the sum of the effects in `subset`.
    pub fn union(&self, subset: &[usize]) -> CMatrix {
        let d = self.dim();
        subset.iter().fold(CMatrix::zeros(d, d), |acc, &i| acc + &self.effects[i])
    }

    /// `sum_v v O_v` over the numeric labels.
    pub fn observable(&self) -> CMatrix {
        let d = self.dim();
        self.labels
            .iter()
            .zip(&self.effects)
            .fold(CMatrix::zeros(d, d), |acc, (l, e)| match l {
                Label::Value(v) => acc + e.scale(*v),
                _ => acc,
            })
    }

    /// Largest entry SE over all effects, if known.
    pub fn max_entry_se(&self) -> Option<f64> {
        self.entry_se.as_ref().map(|ses| {
            ses.iter()
                .flat_map(|m| m.iter().map(|z| z.re.max(z.im)))
                .fold(0.0, f64::max)
        })
    }

    /// Drop an outcome (for completeness diagnostics).
    pub fn without(&self, index: usize) -> EffectSet {
        let mut out = self.clone();
        out.labels.remove(index);
        out.effects.remove(index);
        if let Some(se) = out.entry_se.as_mut() {
            se.remove(index);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("effect sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            path: "effects".into(),
            reason: e.to_string(),
        })
    }
}

type Rows = Vec<Vec<[f64; 2]>>;

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_rows(rows: &Rows) -> std::result::Result<CMatrix, String> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err("effect matrices must be square".into());
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectSetRepr {
    labels: Vec<Label>,
    dim: usize,
    effects: Vec<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_se: Option<Vec<Rows>>,
    max_asymmetry: f64,
    provenance: Provenance,
}

impl From<EffectSet> for EffectSetRepr {
    fn from(e: EffectSet) -> Self {
        EffectSetRepr {
            dim: e.dim(),
            labels: e.labels,
            effects: e.effects.iter().map(to_rows).collect(),
            entry_se: e.entry_se.map(|v| v.iter().map(to_rows).collect()),
            max_asymmetry: e.max_asymmetry,
            provenance: e.provenance,
        }
    }
}

impl TryFrom<EffectSetRepr> for EffectSet {
    type Error = String;

    fn try_from(r: EffectSetRepr) -> std::result::Result<Self, String> {
        let effects = r.effects.iter().map(from_rows).collect::<std::result::Result<Vec<_>, _>>()?;
        if effects.len() != r.labels.len() || effects.iter().any(|e| e.nrows() != r.dim) {
            return Err("effects do not match labels and dim".into());
        }
        let entry_se = r
            .entry_se
            .map(|v| v.iter().map(from_rows).collect::<std::result::Result<Vec<_>, _>>())
            .transpose()?;
        Ok(EffectSet {
            labels: r.labels,
            effects,
            entry_se,
            max_asymmetry: r.max_asymmetry,
            provenance: r.provenance,
        })
    }
}

/// POVM axioms: hermiticity, positivity and completeness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmValidity {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// `|| sum_v O_v - I ||` (spectral norm).
    pub completeness_defect: f64,
    pub tolerance: f64,
    pub valid: bool,
}

pub fn validate_povm(effects: &EffectSet, tol: f64) -> PovmValidity {
    let d = effects.dim();
    let hermiticity_defect = effects.effects.iter().map(hermiticity_defect).fold(0.0, f64::max);
    let min_eigenvalue = effects
        .effects
        .iter()
        .flat_map(hermitian_eigenvalues)
        .fold(f64::INFINITY, f64::min);
    let all: Vec<usize> = (0..effects.len()).collect();
    let completeness_defect = spectral_norm(&(effects.union(&all) - CMatrix::identity(d, d)));
    PovmValidity {
        hermiticity_defect,
        min_eigenvalue,
        completeness_defect,
        tolerance: tol,
        valid: hermiticity_defect <= tol && min_eigenvalue >= -tol && completeness_defect <= tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvmReport {
    /// `|| O_v^2 - O_v ||` per outcome.
    pub idempotency: Vec<f64>,
    /// `(v, w, || O_v O_w ||)` for `v < w`.
    pub orthogonality: Vec<(usize, usize, f64)>,
    pub max_defect: f64,
    pub tolerance: f64,
    pub is_pvm: bool,
}

pub fn pvm_check(effects: &EffectSet, tol: f64) -> PvmReport {
    let e = &effects.effects;
    let idempotency: Vec<f64> = e.iter().map(|o| spectral_norm(&(o * o - o))).collect();
    let mut orthogonality = Vec::new();
    for v in 0..e.len() {
        for w in v + 1..e.len() {
            orthogonality.push((v, w, spectral_norm(&(&e[v] * &e[w]))));
        }
    }
    let max_defect = idempotency
        .iter()
        .copied()
        .chain(orthogonality.iter().map(|t| t.2))
        .fold(0.0, f64::max);
    PvmReport {
        idempotency,
        orthogonality,
        max_defect,
        tolerance: tol,
        is_pvm: max_defect <= tol,
    }
}

//! Pointer-based experiments.
//!
//! A system (one spin factor) is coupled impulsively to a pointer (one grid
//! factor) and then left to the GRW dynamics until `t_final`. The pointer's
//! final mean position is mapped to an outcome label by a [`Calibration`].

mod config;
mod model;
mod theorem1;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{load_model, parse_model, ModelFile};
pub use model::{
    empirical_distribution, factorization_check, q_measure, run_experiment, Experiment,
    ExperimentModel, PointerPacket, PointerSpec, QMode, RunRecord, RunSummary, SystemFate, POINTER,
    SYSTEM,
};
pub use theorem1::{gap_bound, theorem1_gap, Theorem1Data, Theorem1Report};

use crate::error::{Error, Result};
use crate::hilbert::{Grid, Interval};

/// Outcome label: a number, a symbol, or the null outcome of a pointer
/// outside every calibrated interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Value(f64),
    Named(String),
    Null,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Value(v) => write!(f, "{v}"),
            Label::Named(s) => f.write_str(s),
            Label::Null => f.write_str("null"),
        }
    }
}

/// Map from final pointer position to outcome.
///
/// Outcome `n` owns the closed intervals `delta_n = x_n +- d/2` and
/// `Delta_n = x_n +- (d + l)/2`; positions outside every `Delta_n` give the
/// null label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    outcomes: Vec<Label>,
    centers: Vec<f64>,
    inner_width: f64,
    outer_width: f64,
}

impl Calibration {
    pub fn new(outcomes: Vec<Label>, centers: Vec<f64>, inner_width: f64, outer_width: f64) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != centers.len() {
            return Err(Error::invalid("calibration", "need one center per outcome, at least one outcome"));
        }
        if outcomes.contains(&Label::Null) {
            return Err(Error::invalid("calibration.outcomes", "null is reserved"));
        }
        if !(inner_width > 0.0) {
            return Err(Error::invalid("calibration.inner_width", "must be positive"));
        }
        if !(outer_width > inner_width) {
            return Err(Error::invalid("calibration.outer_width", "must exceed inner_width (l > 0)"));
        }
        let cal = Calibration {
            outcomes,
            centers,
            inner_width,
            outer_width,
        };
        let mut outer: Vec<Interval> = (0..cal.len()).map(|n| cal.outer_interval(n)).collect();
        outer.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in outer.windows(2) {
            if w[1].lo <= w[0].hi {
                return Err(Error::OverlappingIntervals(w[0].lo, w[0].hi, w[1].lo, w[1].hi));
            }
        }
        Ok(cal)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[Label] {
        &self.outcomes
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn inner_width(&self) -> f64 {
        self.inner_width
    }

    pub fn outer_width(&self) -> f64 {
        self.outer_width
    }

    /// Margin `l` between `delta_n` and `Delta_n` (total over both sides).
    pub fn ell(&self) -> f64 {
        self.outer_width - self.inner_width
    }

    pub fn inner_interval(&self, n: usize) -> Interval {
        Interval::new(self.centers[n] - 0.5 * self.inner_width, self.centers[n] + 0.5 * self.inner_width)
    }

    pub fn outer_interval(&self, n: usize) -> Interval {
        Interval::new(self.centers[n] - 0.5 * self.outer_width, self.centers[n] + 0.5 * self.outer_width)
    }

    /// Index of the outcome whose `Delta_n` contains `q`; `len()` for null.
    pub fn classify(&self, q: f64) -> usize {
        (0..self.len())
            .find(|&n| self.outer_interval(n).contains(q))
            .unwrap_or(self.len())
    }

    pub fn calibrate(&self, q: f64) -> Label {
        self.label(self.classify(q))
    }

    /// Label of outcome index `n`, `len()` being null.
    pub fn label(&self, n: usize) -> Label {
        self.outcomes.get(n).cloned().unwrap_or(Label::Null)
    }

    /// Outcome labels followed by the null label.
    pub fn labels_with_null(&self) -> Vec<Label> {
        let mut v = self.outcomes.clone();
        v.push(Label::Null);
        v
    }

    /// `Delta_V` for a set of outcome indices.
    pub fn region(&self, subset: &[usize]) -> Vec<Interval> {
        subset.iter().filter(|&&n| n < self.len()).map(|&n| self.outer_interval(n)).collect()
    }

    /// Outcome index of every grid point (`len()` outside all `Delta_n`).
    pub fn classify_grid(&self, grid: &Grid) -> Vec<usize> {
        grid.points().map(|q| self.classify(q)).collect()
    }
}

/// A probability estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }

    /// Binomial frequency `k/n` with `SE = sqrt(p(1 - p)/n)`.
    pub fn binomial(k: u64, n: u64) -> Self {
        let p = k as f64 / n as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// Sample mean of bounded values with its standard error.
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            se: (var / n).sqrt(),
        }
    }
}

/// Outcome counts of repeated runs; the last entry is the null outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub labels: Vec<Label>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl OutcomeDistribution {
    pub fn from_indices(labels: Vec<Label>, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0u64; labels.len()];
        let mut total = 0;
        for i in indices {
            counts[i] += 1;
            total += 1;
        }
        OutcomeDistribution { labels, counts, total }
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate::binomial(self.counts[i], self.total)
    }

    /// Frequency of a union of outcomes.
    pub fn estimate_subset(&self, subset: &[usize]) -> Estimate {
        Estimate::binomial(subset.iter().map(|&i| self.counts[i]).sum(), self.total)
    }

    pub fn null_index(&self) -> usize {
        self.labels.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> Calibration {
        Calibration::new(
            vec![Label::Value(1.0), Label::Value(-1.0)],
            vec![2.5, -2.5],
            1.0,
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn calibrate_examples() {
        let c = cal();
        assert_eq!(c.calibrate(-2.5), Label::Value(-1.0));
        assert_eq!(c.calibrate(0.0), Label::Null);
        let edge = 2.5 + 2.0;
        assert_eq!(c.calibrate(edge - 1e-9), Label::Value(1.0));
        assert_eq!(c.calibrate(edge), Label::Value(1.0));
        assert_eq!(c.calibrate(edge + 1e-9), Label::Null);
        assert!((c.ell() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_outer_intervals_rejected() {
        let r = Calibration::new(vec![Label::Value(1.0), Label::Value(0.0)], vec![1.0, 0.0], 0.2, 1.0);
        assert!(matches!(r, Err(Error::OverlappingIntervals(..))));
        let r = Calibration::new(vec![Label::Value(1.0)], vec![0.0], 1.0, 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn labels_round_trip_through_json() {
        let v = vec![Label::Value(0.5), Label::Named("up".into()), Label::Null];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.5,"up",null]"#);
        let back: Vec<Label> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}

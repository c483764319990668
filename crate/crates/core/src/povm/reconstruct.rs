use rayon::prelude::*;

use super::functional::{FunctionalMode, ProbabilityFunctional};
use super::{EffectSet, Provenance};
use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, C64};
use crate::measurement::Estimate;

/// Tolerance on probe asymmetry for exact functionals.
pub const EXACT_ASYMMETRY_TOL: f64 = 1e-8;
/// Asymmetry allowance in standard errors for Monte Carlo functionals.
pub const MC_ASYMMETRY_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Probe {
    Basis(usize),
    /// `(e_i + e_j)/sqrt 2`, `i < j`.
    Real(usize, usize),
    /// `(e_i + i e_j)/sqrt 2`, `i != j`.
    Imag(usize, usize),
}

impl Probe {
    pub(crate) fn vector(self, dim: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Probe::Basis(i) => v[i] = C64::new(1.0, 0.0),
            Probe::Real(i, j) => {
                v[i] = C64::new(r, 0.0);
                v[j] = C64::new(r, 0.0);
            }
            Probe::Imag(i, j) => {
                v[i] = C64::new(r, 0.0);
                v[j] = C64::new(0.0, r);
            }
        }
        v
    }
}

/// Basis states, then real mixtures `i < j`, then imaginary mixtures over
/// ordered pairs.
pub(crate) fn probe_set(dim: usize) -> Vec<Probe> {
    let mut probes: Vec<Probe> = (0..dim).map(Probe::Basis).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            probes.push(Probe::Real(i, j));
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                probes.push(Probe::Imag(i, j));
            }
        }
    }
    probes
}

/// Effects `O_v` recovered from the functional by polarization.
///
/// For `d = (O_ii + O_jj)/2`, the real probe gives `d + Re O_ij` and the
/// imaginary probe `(i, j)` gives `d - Im O_ij`. Both orderings of the
/// imaginary probe are evaluated; their mismatch measures how far the data
/// are from a quadratic form.
pub fn reconstruct_effects(functional: &dyn ProbabilityFunctional) -> Result<EffectSet> {
    let dim = functional.dim();
    let labels = functional.labels();
    let probes = probe_set(dim);
    let values: Vec<Vec<Estimate>> = probes
        .par_iter()
        .enumerate()
        .map(|(k, p)| functional.evaluate(&p.vector(dim), k as u64))
        .collect::<Result<_>>()?;
    if values.iter().any(|v| v.len() != labels.len()) {
        return Err(Error::invalid("functional", "wrong number of outcomes"));
    }
    let index = |p: Probe| probes.iter().position(|&q| q == p).expect("probe in set");
    let monte_carlo = matches!(functional.mode(), FunctionalMode::MonteCarlo { .. });

    let mut effects = Vec::with_capacity(labels.len());
    let mut entry_se = Vec::with_capacity(labels.len());
    let mut max_asymmetry: f64 = 0.0;
    for (v, label) in labels.iter().enumerate() {
        let at = |p: Probe| values[index(p)][v];
        let mut m = CMatrix::zeros(dim, dim);
        let mut se = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let q = at(Probe::Basis(i));
            m[(i, i)] = C64::new(q.value, 0.0);
            se[(i, i)] = C64::new(q.se, 0.0);
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let (qi, qj) = (at(Probe::Basis(i)), at(Probe::Basis(j)));
                let d = 0.5 * (qi.value + qj.value);
                let r = at(Probe::Real(i, j));
                let (s_ij, s_ji) = (at(Probe::Imag(i, j)), at(Probe::Imag(j, i)));
                let asym = (2.0 * d - s_ij.value - s_ji.value).abs();
                let threshold = if monte_carlo {
                    let sd = (qi.se.powi(2) + qj.se.powi(2) + s_ij.se.powi(2) + s_ji.se.powi(2)).sqrt();
                    MC_ASYMMETRY_SIGMAS * sd + 1e-12
                } else {
                    EXACT_ASYMMETRY_TOL
                };
                if asym > threshold {
                    return Err(Error::InconsistentProbes {
                        outcome: label.to_string(),
                        asymmetry: asym,
                        threshold,
                    });
                }
                max_asymmetry = max_asymmetry.max(asym);
                let o = C64::new(r.value - d, 0.5 * (s_ji.value - s_ij.value));
                m[(i, j)] = o;
                m[(j, i)] = o.conj();
                let se_re = (r.se.powi(2) + 0.25 * (qi.se.powi(2) + qj.se.powi(2))).sqrt();
                let se_im = 0.5 * (s_ij.se.powi(2) + s_ji.se.powi(2)).sqrt();
                se[(i, j)] = C64::new(se_re, se_im);
                se[(j, i)] = C64::new(se_re, se_im);
            }
        }
        effects.push(m);
        entry_se.push(se);
    }
    let provenance = match functional.mode() {
        FunctionalMode::Exact => Provenance {
            mode: "exact".into(),
            n_runs: None,
            seed: None,
        },
        FunctionalMode::MonteCarlo { n_runs, seed } => Provenance {
            mode: "monte_carlo".into(),
            n_runs: Some(n_runs),
            seed: Some(seed),
        },
    };
    Ok(EffectSet {
        labels,
        effects,
        entry_se: monte_carlo.then_some(entry_se),
        max_asymmetry,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::functional::{FnFunctional, QuadraticFunctional};
    use crate::hilbert::linalg::max_abs_diff;
    use crate::measurement::Label;

    #[test]
    fn probe_count_and_norms() {
        let p = probe_set(3);
        assert_eq!(p.len(), 3 + 3 + 6);
        for q in p {
            assert!((q.vector(3).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_functional_gives_scaled_identity() {
        let f = FnFunctional::new(3, vec![Label::Named("a".into()), Label::Named("b".into())], |_| vec![0.3, 0.7]);
        let e = reconstruct_effects(&f).unwrap();
        assert!(max_abs_diff(&e.effects[0], &CMatrix::identity(3, 3).scale(0.3)) < 1e-15);
        assert!(e.entry_se.is_none());
    }

    #[test]
    fn complex_kernel_recovered() {
        let k = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.1, -0.2), C64::new(0.1, 0.2), C64::new(0.3, 0.0)],
        );
        let f = QuadraticFunctional::with_complement(k.clone()).unwrap();
        let e = reconstruct_effects(&f).unwrap();
        assert!(max_abs_diff(&e.effects[0], &k) < 1e-14);
    }

    #[test]
    fn non_quadratic_data_rejected() {
        let f = FnFunctional::new(2, vec![Label::Value(1.0)], |psi| vec![psi[0].norm().powi(4) + psi[1].norm()]);
        assert!(matches!(reconstruct_effects(&f), Err(Error::InconsistentProbes { .. })));
    }
}

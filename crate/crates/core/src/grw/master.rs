//! Ensemble-averaged evolution
//! `d rho/dt = -i[H, rho] + sum_n lambda_n (sum_x dx L_n(x) rho L_n(x) - rho)`.
//!
//! In the position basis of particle `n` the jump average is a Hadamard
//! product with the overlap kernel `K_n(q_i - q_j)`, so the dissipative
//! part is integrated exactly and combined with the unitary part by Strang
//! splitting. The kernel is normalized by `K_n(0)`, the same constant that
//! normalizes the discretized collapse density, which keeps the equation
//! identical to the average over sampled trajectories.

use super::collapse::CenterLattice;
use super::density::DensityMatrix;
use super::propagator::Hamiltonian;
use super::GrwParams;
use crate::error::{Error, Result};
use crate::hilbert::linalg::trace;
use crate::hilbert::{CMatrix, SpaceSpec};

/// Largest tolerated `|Tr rho - 1|` at the end of an integration.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

/// Exponent of the dissipator: `rate(i, j) = sum_n lambda_n (K_n/K_n(0) - 1)`.
pub(crate) struct Dissipator {
    rate: CMatrix,
}

impl Dissipator {
    pub(crate) fn new(space: &SpaceSpec, params: &GrwParams) -> Result<Self> {
        let dim = space.dim();
        let mut rate = CMatrix::zeros(dim, dim);
        for (n, lambda) in params.rates_for(space).into_iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let grid = space.grid_of(n)?;
            grid.check_localization_width(params.alpha())?;
            let layout = space.layout(n)?;
            let ratio = overlap_ratio(grid.n_points(), grid.spacing(), params.alpha());
            for i in 0..dim {
                let li = layout.local(i);
                for j in 0..dim {
                    let d = li.abs_diff(layout.local(j));
                    rate[(i, j)].re += lambda * (ratio[d] - 1.0);
                }
            }
        }
        Ok(Dissipator { rate })
    }

    /// Hadamard factor `exp(tau * rate)`.
    pub(crate) fn factor(&self, tau: f64) -> CMatrix {
        self.rate.map(|r| (r * tau).exp())
    }
}

/// `K(d)/K(0)` for grid offsets `d = 0..n`, where
/// `K(d) = sum_c h sqrt(alpha/pi) exp(-alpha h^2 (c^2 + (c - d)^2) / 2)`
/// over the padded center lattice.
pub(crate) fn overlap_ratio(n: usize, h: f64, alpha: f64) -> Vec<f64> {
    let reach = (n + CenterLattice::pad_for(h, alpha)) as i64;
    let k = |d: i64| -> f64 {
        (-reach..=reach + d)
            .map(|c| {
                let (a, b) = (c as f64 * h, (c - d) as f64 * h);
                (-0.5 * alpha * (a * a + b * b)).exp()
            })
            .sum::<f64>()
    };
    let k0 = k(0);
    (0..n as i64).map(|d| k(d) / k0).collect()
}

/// Integrate the master equation from `0` to `horizon` with steps no longer
/// than `dt`, aligned to the start and end of any measurement coupling.
pub fn master_equation_evolve(
    rho0: &DensityMatrix,
    hamiltonian: &Hamiltonian,
    params: &GrwParams,
    horizon: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let space = rho0.space();
    let prop = hamiltonian.prepare(space)?;
    let diss = Dissipator::new(space, params)?;
    let no_jumps = params.rates_for(space).iter().all(|&r| r <= 0.0);

    let mut cuts = vec![0.0];
    if let Hamiltonian::Grid(g) = hamiltonian {
        if let Some(c) = &g.coupling {
            for b in [c.start, c.end] {
                if b > 0.0 && b < horizon {
                    cuts.push(b);
                }
            }
        }
    }
    cuts.push(horizon);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut rho = rho0.matrix().clone();
    let mut cache: Vec<(f64, CMatrix)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = ((b - a) / dt).ceil().max(1.0) as usize;
        let tau = (b - a) / steps as f64;
        let half = if no_jumps {
            None
        } else {
            if !cache.iter().any(|(t, _)| *t == tau) {
                cache.push((tau, diss.factor(0.5 * tau)));
            }
            cache.iter().find(|(t, _)| *t == tau).map(|(_, f)| f.clone())
        };
        for s in 0..steps {
            let t0 = a + s as f64 * tau;
            let t1 = if s + 1 == steps { b } else { t0 + tau };
            if let Some(f) = &half {
                rho.component_mul_assign(f);
            }
            prop.propagate_density(&mut rho, t0, t1)?;
            if let Some(f) = &half {
                rho.component_mul_assign(f);
            }
        }
    }
    let drift = (trace(&rho).re - 1.0).abs();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::TraceDrift(drift));
    }
    Ok(DensityMatrix::from_parts_unchecked(space.clone(), rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grw::collapse::collapse_density;
    use crate::grw::GridHamiltonian;
    use crate::hilbert::linalg::{hermiticity_defect, max_abs_diff};
    use crate::hilbert::{gaussian_packet, Grid, StateVector};

    fn two_peak_rho(grid: &Grid, a: f64) -> DensityMatrix {
        let v = gaussian_packet(grid, -a, 0.2, 0.0) + gaussian_packet(grid, a, 0.2, 0.0);
        let psi = StateVector::new(SpaceSpec::grid(grid.clone()), v).unwrap().normalized().unwrap();
        DensityMatrix::from_state(&psi)
    }

    #[test]
    fn no_dynamics_leaves_rho_unchanged() {
        let grid = Grid::centered(32, 0.25).unwrap();
        let rho = two_peak_rho(&grid, 2.0);
        let p = GrwParams::new(0.0, 1.0).unwrap();
        let out = master_equation_evolve(&rho, &Hamiltonian::Zero, &p, 3.0, 0.1).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn kernel_matches_collapse_average() {
        // sum_c h L_c rho L_c / K(0) equals the Hadamard kernel form.
        let grid = Grid::centered(24, 0.2).unwrap();
        let alpha = 3.0;
        let rho = two_peak_rho(&grid, 1.0);
        let lattice = CenterLattice::new(&grid, alpha);
        let mut avg = CMatrix::zeros(24, 24);
        for c in 0..lattice.len() {
            avg += collapse_density(&rho, 0, lattice.center(c), alpha).unwrap().scale(0.2);
        }
        avg.unscale_mut(trace(&avg).re);
        let ratio = overlap_ratio(24, 0.2, alpha);
        let kern = CMatrix::from_fn(24, 24, |i, j| rho.matrix()[(i, j)] * ratio[i.abs_diff(j)]);
        assert!(max_abs_diff(&avg, &kern) < 1e-14);
    }

    #[test]
    fn coherence_decays_at_rate_lambda() {
        // Peaks at +-a with a sqrt(alpha) = 10: K(2a)/K(0) ~ exp(-alpha a^2)
        // vanishes, so the cross term decays as exp(-lambda t).
        let grid = Grid::centered(64, 0.1).unwrap();
        let lambda = 0.7;
        let p = GrwParams::new(lambda, 25.0).unwrap();
        let rho = two_peak_rho(&grid, 2.0);
        let probe = |r: &DensityMatrix| -> f64 {
            let (i, j) = (grid_index(&grid, -2.0), grid_index(&grid, 2.0));
            r.matrix()[(i, j)].norm()
        };
        let t = 1.5;
        let out = master_equation_evolve(&rho, &Hamiltonian::Zero, &p, t, 0.01).unwrap();
        let fitted = -(probe(&out) / probe(&rho)).ln() / t;
        assert!((fitted / lambda - 1.0).abs() < 0.05, "{fitted}");
        assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_agrees_with_superoperator_diagonalization() {
        // Oracle: build the dissipator as a d^2 x d^2 superoperator from
        // dense collapse averages and exponentiate by eigen-decomposition.
        let grid = Grid::centered(6, 0.5).unwrap();
        let alpha = 1.0;
        let lambda = 1.3;
        let p = GrwParams::new(lambda, alpha).unwrap();
        let lattice = CenterLattice::new(&grid, alpha);
        let space = SpaceSpec::grid(grid.clone());
        let d = 6;
        let mut s = nalgebra::DMatrix::<f64>::zeros(d * d, d * d);
        let mut k0 = 0.0;
        for c in 0..lattice.len() {
            let prof = super::super::collapse::localization_profile(&space, 0, lattice.center(c), alpha).unwrap();
            k0 += 0.5 * prof[0] * prof[0];
        }
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for c in 0..lattice.len() {
                    let prof = super::super::collapse::localization_profile(&space, 0, lattice.center(c), alpha).unwrap();
                    acc += 0.5 * prof[i] * prof[j];
                }
                s[(i * d + j, i * d + j)] = lambda * (acc / k0 - 1.0);
            }
        }
        let eig = s.symmetric_eigen();
        let rho = two_peak_rho(&grid, 1.0);
        let t = 0.9;
        let out = master_equation_evolve(&rho, &Hamiltonian::Zero, &p, t, 0.05).unwrap();
        for i in 0..d {
            for j in 0..d {
                let mut g = 0.0;
                for k in 0..d * d {
                    let v = eig.eigenvectors[(i * d + j, k)];
                    g += v * v * (eig.eigenvalues[k] * t).exp();
                }
                let expected = rho.matrix()[(i, j)] * g;
                assert!((out.matrix()[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved_with_kinetics() {
        let grid = Grid::centered(32, 0.25).unwrap();
        let rho = two_peak_rho(&grid, 1.5);
        let p = GrwParams::new(2.0, 1.0).unwrap();
        let h = Hamiltonian::Grid(GridHamiltonian::free(0, 0.5));
        let out = master_equation_evolve(&rho, &h, &p, 1.0, 0.01).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-9);
        assert!(hermiticity_defect(out.matrix()) < 1e-10);
        assert!(DensityMatrix::new(out.space().clone(), out.matrix().clone()).is_ok());
    }

    fn grid_index(grid: &Grid, x: f64) -> usize {
        ((x - grid.origin()) / grid.spacing()).round() as usize
    }
}

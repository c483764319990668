use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{density::DensityMatrix, GrwParams};
use crate::error::{Error, Result};
use crate::hilbert::{localization_amplitude, CMatrix, Grid, SpaceSpec, StateVector, C64};
use crate::hilbert::FactorLayout;

/// Lattice of admissible collapse centers for one grid: the grid points
/// themselves, extended by `pad` points of the same spacing on each side so
/// that the localization kernel is fully resolved near the edges.
#[derive(Clone, Debug)]
pub struct CenterLattice {
    origin: f64,
    spacing: f64,
    n_grid: usize,
    pad: usize,
    /// `h sqrt(alpha/pi) exp(-alpha (j h)^2)` for `j = -pad..=pad`.
    kernel: Vec<f64>,
}

impl CenterLattice {
    pub fn new(grid: &Grid, alpha: f64) -> Self {
        let h = grid.spacing();
        let pad = Self::pad_for(h, alpha);
        let norm = h * (alpha / std::f64::consts::PI).sqrt();
        let kernel = (0..=2 * pad)
            .map(|j| {
                let d = (j as f64 - pad as f64) * h;
                norm * (-alpha * d * d).exp()
            })
            .collect();
        CenterLattice {
            origin: grid.origin(),
            spacing: h,
            n_grid: grid.n_points(),
            pad,
            kernel,
        }
    }

    /// Padding covering eight kernel widths `1/sqrt(alpha)`.
    pub fn pad_for(spacing: f64, alpha: f64) -> usize {
        (8.0 / (alpha.sqrt() * spacing)).ceil() as usize
    }

    pub fn len(&self) -> usize {
        self.n_grid + 2 * self.pad
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn center(&self, c: usize) -> f64 {
        self.origin + (c as f64 - self.pad as f64) * self.spacing
    }

    /// Unnormalized collapse probabilities `h ||L(x_c) psi||^2` of every
    /// center, given the position marginal of the particle.
    pub fn weights(&self, marginal: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        // Entries this small cannot move any weight at double precision.
        let floor = 1e-20 * marginal.iter().sum::<f64>();
        for (k, &m) in marginal.iter().enumerate() {
            if m <= floor {
                continue;
            }
            // Grid point k sits at lattice index k + pad.
            for (wc, &kern) in w[k..k + self.kernel.len()].iter_mut().zip(&self.kernel) {
                *wc += m * kern;
            }
        }
        w
    }

    /// Inverse-CDF draw of a center; plateaus resolve to the lower index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, marginal: &[f64]) -> Result<f64> {
        let w = self.weights(marginal);
        let mut cdf = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for x in &w {
            acc += x;
            cdf.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        let u = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&v| v <= u).min(w.len() - 1);
        Ok(self.center(idx))
    }
}

/// Merged Poisson schedule for particles with the given rates.
pub(crate) fn schedule_from_rates<R: Rng + ?Sized>(
    rng: &mut R,
    rates: &[f64],
    horizon: f64,
) -> Result<Vec<(f64, usize)>> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let total: f64 = rates.iter().sum();
    let mut out = Vec::new();
    if total <= 0.0 {
        return Ok(out);
    }
    let exp = Exp::new(total).map_err(|e| Error::invalid("rate", e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut who = rates.len() - 1;
        for (i, &r) in rates.iter().enumerate() {
            if u < r {
                who = i;
                break;
            }
            u -= r;
        }
        // Guard against a rounding fall-through landing on a zero-rate slot.
        while rates[who] <= 0.0 {
            who -= 1;
        }
        out.push((t, who));
    }
    Ok(out)
}

/// Collapse times and particles on `[0, horizon]` for particles
/// `0..n_particles`, each at its own rate.
pub fn sample_collapse_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    params: &GrwParams,
    n_particles: usize,
    horizon: f64,
) -> Result<Vec<(f64, usize)>> {
    let rates: Vec<f64> = (0..n_particles).map(|i| params.rate_of(i)).collect();
    schedule_from_rates(rng, &rates, horizon)
}

pub(crate) fn marginal_of(amps: &[C64], layout: &FactorLayout) -> Vec<f64> {
    let mut m = vec![0.0; layout.n];
    if layout.inner == 1 && layout.outer == 1 {
        for (k, a) in amps.iter().enumerate() {
            m[k] = a.norm_sqr();
        }
        return m;
    }
    for (g, a) in amps.iter().enumerate() {
        m[layout.local(g)] += a.norm_sqr();
    }
    m
}

/// Draw a collapse center for `particle` from the density `||L(x) psi||^2`.
pub fn sample_collapse_center<R: Rng + ?Sized>(
    rng: &mut R,
    state: &StateVector,
    particle: usize,
    params: &GrwParams,
) -> Result<f64> {
    let grid = state.space().grid_of(particle)?;
    let layout = state.space().layout(particle)?;
    let lattice = CenterLattice::new(grid, params.alpha());
    lattice.sample(rng, &marginal_of(state.amplitudes().as_slice(), &layout))
}

pub(crate) fn collapse_in_place(
    amps: &mut [C64],
    layout: &FactorLayout,
    grid: &Grid,
    alpha: f64,
    center: f64,
) -> Result<()> {
    let profile: Vec<f64> = grid
        .points()
        .map(|q| localization_amplitude(alpha, q - center))
        .collect();
    let mut n2 = 0.0;
    for (g, a) in amps.iter_mut().enumerate() {
        *a *= profile[layout.local(g)];
        n2 += a.norm_sqr();
    }
    if !(n2 >= f64::MIN_POSITIVE) || !n2.is_finite() {
        return Err(Error::VanishingNorm(center));
    }
    let inv = n2.sqrt().recip();
    amps.iter_mut().for_each(|a| *a *= inv);
    Ok(())
}

/// `L(center) psi / ||L(center) psi||`.
pub fn apply_collapse(
    state: &StateVector,
    particle: usize,
    center: f64,
    params: &GrwParams,
) -> Result<StateVector> {
    state.require_normalized()?;
    let grid = state.space().grid_of(particle)?.clone();
    let layout = state.space().layout(particle)?;
    let mut amps = state.amplitudes().clone();
    collapse_in_place(amps.as_mut_slice(), &layout, &grid, params.alpha(), center)?;
    StateVector::new(state.space().clone(), amps)
}

/// Unnormalized `L(center) rho L(center)`.
pub fn collapse_density(
    rho: &DensityMatrix,
    particle: usize,
    center: f64,
    alpha: f64,
) -> Result<CMatrix> {
    let profile = localization_profile(rho.space(), particle, center, alpha)?;
    let m = rho.matrix();
    Ok(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] * (profile[i] * profile[j])
    }))
}

/// Diagonal of `L(center)` over the full space.
pub(crate) fn localization_profile(
    space: &SpaceSpec,
    particle: usize,
    center: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    let grid = space.grid_of(particle)?;
    let layout = space.layout(particle)?;
    let local: Vec<f64> = grid
        .points()
        .map(|q| localization_amplitude(alpha, q - center))
        .collect();
    Ok((0..space.dim()).map(|g| local[layout.local(g)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gaussian_packet, localization_operator, CVector};
    use crate::seeds::rng_from_seed;

    fn two_peaks(grid: &Grid, a: f64, w: f64, amp_left: f64, amp_right: f64) -> CVector {
        let l = gaussian_packet(grid, -a, w, 0.0);
        let r = gaussian_packet(grid, a, w, 0.0);
        let mut v = l.scale(amp_left) + r.scale(amp_right);
        let n = v.norm();
        v.unscale_mut(n);
        v
    }

    #[test]
    fn zero_rates_give_empty_schedule() {
        let p = GrwParams::new(0.0, 1.0).unwrap();
        let mut rng = rng_from_seed(1);
        assert!(sample_collapse_schedule(&mut rng, &p, 3, 10.0).unwrap().is_empty());
    }

    #[test]
    fn poisson_count_within_four_sigma() {
        let p = GrwParams::new(1.0, 1.0).unwrap();
        let mut rng = rng_from_seed(2);
        let s = sample_collapse_schedule(&mut rng, &p, 1, 1e4).unwrap();
        assert!((s.len() as f64 - 1e4).abs() <= 400.0, "{}", s.len());
        assert!(s.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn thinning_fraction() {
        let p = GrwParams::new(1.0, 1.0).unwrap().with_rate(1, 9.0).unwrap();
        let mut rng = rng_from_seed(3);
        let s = sample_collapse_schedule(&mut rng, &p, 2, 1e4).unwrap();
        let n = s.len() as f64;
        assert!(n > 9.5e4);
        let frac = s.iter().filter(|e| e.1 == 1).count() as f64 / n;
        assert!((frac - 0.9).abs() < 0.01, "{frac}");
    }

    #[test]
    fn weights_match_dense_operator_norms() {
        let grid = Grid::centered(40, 0.1).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let alpha = 9.0;
        let psi = StateVector::new(space.clone(), gaussian_packet(&grid, 0.3, 0.4, 1.0)).unwrap();
        let lattice = CenterLattice::new(&grid, alpha);
        let w = lattice.weights(&marginal_of(psi.amplitudes().as_slice(), &space.layout(0).unwrap()));
        for c in (0..lattice.len()).step_by(7) {
            let l = localization_operator(&space, 0, lattice.center(c), alpha).unwrap();
            let direct = 0.1 * l.apply(&psi).unwrap().norm_sqr();
            assert!((w[c] - direct).abs() < 1e-14, "{c}");
        }
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn narrow_packet_center_mean() {
        // p(x) is the packet density convolved with a Gaussian of variance
        // 1/(2 alpha): mean x0, variance w^2 + 1/(2 alpha).
        let grid = Grid::centered(200, 0.05).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let (x0, w, alpha) = (0.7, 0.1, 4.0);
        let psi = StateVector::new(space, gaussian_packet(&grid, x0, w, 0.0)).unwrap();
        let p = GrwParams::new(1.0, alpha).unwrap();
        let mut rng = rng_from_seed(4);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_collapse_center(&mut rng, &psi, 0, &p).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = (w * w + 0.5 / alpha).sqrt() / (n as f64).sqrt();
        assert!((mean - x0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn branch_fractions_and_uniform_symmetry() {
        let grid = Grid::centered(256, 0.05).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let p = GrwParams::new(1.0, 16.0).unwrap();
        let psi = StateVector::new(space.clone(), two_peaks(&grid, 3.0, 0.2, 0.5, 0.75f64.sqrt())).unwrap();
        let mut rng = rng_from_seed(5);
        let n = 10_000;
        let left = (0..n)
            .filter(|_| sample_collapse_center(&mut rng, &psi, 0, &p).unwrap() < 0.0)
            .count() as f64
            / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((left - 0.25).abs() < 3.0 * se, "{left}");

        let flat = CVector::from_element(256, C64::new(1.0 / 16.0, 0.0));
        let psi = StateVector::new(space, flat).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| sample_collapse_center(&mut rng, &psi, 0, &p).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn chi_square_against_quadrature() {
        let grid = Grid::centered(64, 0.1).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let alpha = 4.0;
        let psi = StateVector::new(space.clone(), two_peaks(&grid, 1.0, 0.3, 0.6, 0.8)).unwrap();
        let p = GrwParams::new(1.0, alpha).unwrap();

        // Quadrature oracle on 16 bins of width 0.5 spanning [-4, 4].
        let pdf = |x: f64| -> f64 {
            let l = localization_operator(&space, 0, x, alpha).unwrap();
            l.apply(&psi).unwrap().norm_sqr()
        };
        let lattice = CenterLattice::new(&grid, alpha);
        let lo = lattice.center(0);
        let hi = lattice.center(lattice.len() - 1);
        let edges: Vec<f64> = (0..=16).map(|i| -4.0 + 0.5 * i as f64).collect();
        let mut expected = [0.0; 16];
        let mut x = lo;
        while x <= hi + 1e-9 {
            if let Some(b) = edges.windows(2).position(|e| e[0] <= x && x < e[1]) {
                expected[b] += 0.1 * pdf(x);
            }
            x += 0.1;
        }
        let total: f64 = expected.iter().sum();

        let mut rng = rng_from_seed(6);
        let n = 10_000;
        let mut counts = [0usize; 16];
        for _ in 0..n {
            let x = sample_collapse_center(&mut rng, &psi, 0, &p).unwrap();
            if let Some(b) = edges.windows(2).position(|e| e[0] <= x && x < e[1]) {
                counts[b] += 1;
            }
        }
        let mut chi2 = 0.0;
        let mut dof = 0;
        for b in 0..16 {
            let e = n as f64 * expected[b] / total;
            if e >= 5.0 {
                chi2 += (counts[b] as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        // 99.9% quantile of chi-square with <= 15 degrees of freedom.
        assert!(dof >= 8);
        assert!(chi2 < 37.7, "chi2 = {chi2} with {dof} bins");
    }

    #[test]
    fn collapse_examples() {
        let grid = Grid::centered(512, 0.025).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let alpha = 1.0;
        let p = GrwParams::new(1.0, alpha).unwrap();
        let psi = StateVector::new(space.clone(), two_peaks(&grid, 3.0, 0.3, 1.0, 1.0)).unwrap();
        let once = apply_collapse(&psi, 0, 3.0, &p).unwrap();
        let twice = apply_collapse(&once, 0, 3.0, &p).unwrap();
        // Oracle: dense L(x)^2 applied to psi.
        let l = localization_operator(&space, 0, 3.0, alpha).unwrap();
        let direct = l.apply(&l.apply(&psi).unwrap()).unwrap().normalized().unwrap();
        assert!(1.0 - twice.fidelity(&direct).unwrap() < 1e-12);
        assert!(once.norm_sqr() - 1.0 < 1e-12);

        let far = StateVector::basis(space, 0).unwrap();
        assert!(matches!(apply_collapse(&far, 0, 1e6, &p), Err(Error::VanishingNorm(_))));
    }

    #[test]
    fn collapse_density_matches_operator_product() {
        let grid = Grid::centered(16, 0.2).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let psi = StateVector::new(space.clone(), gaussian_packet(&grid, 0.2, 0.5, 0.3)).unwrap();
        let rho = DensityMatrix::from_state(&psi);
        let l = localization_operator(&space, 0, 0.4, 2.0).unwrap();
        let direct = l.matrix() * rho.matrix() * l.matrix();
        let got = collapse_density(&rho, 0, 0.4, 2.0).unwrap();
        assert!(crate::hilbert::linalg::max_abs_diff(&got, &direct) < 1e-15);
    }
}

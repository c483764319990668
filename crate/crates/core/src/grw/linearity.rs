//! Affinity of one averaged collapse.
//!
//! Averaging `L(x) rho L(x) / Tr[L(x) rho L(x)]` over centers drawn from the
//! Born density `Tr[L(x) rho L(x)]` cancels the normalizing denominator and
//! yields a map linear in `rho`. Any other center distribution leaves the
//! denominator in place; [`linearity_probe`] measures the resulting defect.

use serde::{Deserialize, Serialize};

use super::collapse::{localization_profile, CenterLattice};
use super::density::DensityMatrix;
use super::GrwParams;
use crate::error::{Error, Result};
use crate::hilbert::linalg::{spectral_norm, trace};
use crate::hilbert::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseRule {
    /// Centers weighted by `h Tr[L(x) rho L(x)]` on the padded lattice.
    Born,
    /// Equal weight on every grid point.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearityReport {
    pub rule: CollapseRule,
    pub c1: f64,
    /// `|| Phi(c1 rho1 + c2 rho2) - c1 Phi(rho1) - c2 Phi(rho2) ||`, spectral norm.
    pub defect: f64,
}

/// Averaged post-jump state `Phi(rho)` for one collapse of `particle`.
pub fn averaged_jump(
    rho: &DensityMatrix,
    particle: usize,
    alpha: f64,
    rule: CollapseRule,
) -> Result<CMatrix> {
    let space = rho.space();
    let grid = space.grid_of(particle)?;
    let m = rho.matrix();
    let dim = rho.dim();
    let mut out = CMatrix::zeros(dim, dim);
    let centers: Vec<f64> = match rule {
        CollapseRule::Born => {
            let lattice = CenterLattice::new(grid, alpha);
            (0..lattice.len()).map(|c| lattice.center(c)).collect()
        }
        CollapseRule::Uniform => grid.points().collect(),
    };
    let mut total_weight = 0.0;
    for x in centers {
        let l = localization_profile(space, particle, x, alpha)?;
        let jumped = CMatrix::from_fn(dim, dim, |i, j| m[(i, j)] * (l[i] * l[j]));
        let p = trace(&jumped).re;
        match rule {
            CollapseRule::Born => {
                out += jumped;
                total_weight += p;
            }
            CollapseRule::Uniform => {
                if p < 1e-250 {
                    continue;
                }
                out += jumped.unscale(p);
                total_weight += 1.0;
            }
        }
    }
    if !(total_weight > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    Ok(out.unscale(total_weight))
}

/// Compare `Phi` on the mixture `c1 rho1 + (1 - c1) rho2` with the same
/// mixture of `Phi(rho1)` and `Phi(rho2)`. The first grid factor collapses.
pub fn linearity_probe(
    params: &GrwParams,
    rule: CollapseRule,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    c1: f64,
) -> Result<LinearityReport> {
    if !(0.0..=1.0).contains(&c1) {
        return Err(Error::invalid("c1", "mixture weight must lie in [0, 1]"));
    }
    let particle = rho1
        .space()
        .grid_factors()
        .next()
        .map(|(i, _)| i)
        .ok_or(Error::NotAGridFactor(0))?;
    let alpha = params.alpha();
    let mix = DensityMatrix::convex(c1, rho1, rho2)?;
    let lhs = averaged_jump(&mix, particle, alpha, rule)?;
    let rhs = averaged_jump(rho1, particle, alpha, rule)?.scale(c1)
        + averaged_jump(rho2, particle, alpha, rule)?.scale(1.0 - c1);
    Ok(LinearityReport {
        rule,
        c1,
        defect: spectral_norm(&(lhs - rhs)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gaussian_packet, Grid, SpaceSpec, StateVector};

    fn peaks(grid: &Grid, wl: f64) -> DensityMatrix {
        let v = gaussian_packet(grid, -2.0, 0.5, 0.0).scale(wl.sqrt())
            + gaussian_packet(grid, 2.0, 0.5, 0.0).scale((1.0 - wl).sqrt());
        let psi = StateVector::new(SpaceSpec::grid(grid.clone()), v).unwrap().normalized().unwrap();
        DensityMatrix::from_state(&psi)
    }

    #[test]
    fn born_is_affine_uniform_is_not() {
        let grid = Grid::centered(41, 0.2).unwrap();
        let p = GrwParams::new(1.0, 1.0).unwrap();
        let (r1, r2) = (peaks(&grid, 0.8), peaks(&grid, 0.3));
        let born = linearity_probe(&p, CollapseRule::Born, &r1, &r2, 0.35).unwrap();
        let uni = linearity_probe(&p, CollapseRule::Uniform, &r1, &r2, 0.35).unwrap();
        assert!(born.defect <= 1e-10, "{}", born.defect);
        assert!(uni.defect >= 1e-3, "{}", uni.defect);
        assert!(uni.defect > 10.0 * born.defect);
    }

    #[test]
    fn identical_states_have_no_defect() {
        let grid = Grid::centered(41, 0.2).unwrap();
        let p = GrwParams::new(1.0, 1.0).unwrap();
        let r = peaks(&grid, 0.6);
        for rule in [CollapseRule::Born, CollapseRule::Uniform] {
            assert!(linearity_probe(&p, rule, &r, &r, 0.4).unwrap().defect < 1e-14);
        }
    }

    #[test]
    fn born_jump_preserves_trace() {
        let grid = Grid::centered(41, 0.2).unwrap();
        let out = averaged_jump(&peaks(&grid, 0.5), 0, 1.0, CollapseRule::Born).unwrap();
        assert!((trace(&out).re - 1.0).abs() < 1e-13);
    }
}

//! Mass density `m(x) = sum_n m_n * (position marginal of particle n)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{marginal, Grid, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassDensityField {
    pub grid: Grid,
    pub masses: Vec<f64>,
    /// Density per unit length at every grid point.
    pub values: Vec<f64>,
    pub time: f64,
}

impl MassDensityField {
    /// `sum values * spacing`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }
}

/// Mass density of `state`. `masses[k]` belongs to the `k`-th grid factor.
pub fn mass_density(state: &StateVector, masses: &[f64], time: f64) -> Result<MassDensityField> {
    let grids: Vec<(usize, &Grid)> = state.space().grid_factors().collect();
    if grids.len() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: grids.len(),
            found: masses.len(),
        });
    }
    let (_, grid) = *grids.first().ok_or(Error::NotAGridFactor(0))?;
    if grids.iter().any(|(_, g)| *g != grid) {
        return Err(Error::MismatchedGrids);
    }
    if masses.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::invalid("masses", "must be non-negative"));
    }
    let norm = state.norm_sqr();
    let h = grid.spacing();
    let mut values = vec![0.0; grid.n_points()];
    for (&(factor, _), &m) in grids.iter().zip(masses) {
        for (v, p) in values.iter_mut().zip(marginal(state, factor)?) {
            *v += m * p / (norm * h);
        }
    }
    Ok(MassDensityField {
        grid: grid.clone(),
        masses: masses.to_vec(),
        values,
        time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grw::DensityMatrix;
    use crate::hilbert::{gaussian_packet, CVector, Factor, SpaceSpec};

    #[test]
    fn delta_state_gives_single_column() {
        let grid = Grid::centered(10, 0.5).unwrap();
        let psi = StateVector::basis(SpaceSpec::grid(grid), 3).unwrap();
        let f = mass_density(&psi, &[1.0], 0.0).unwrap();
        assert_eq!(f.values[3], 2.0);
        assert_eq!(f.values.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn two_particles_two_bumps() {
        let grid = Grid::centered(80, 0.1).unwrap();
        let a = StateVector::new(SpaceSpec::grid(grid.clone()), gaussian_packet(&grid, -2.0, 0.2, 0.0)).unwrap();
        let b = StateVector::new(SpaceSpec::grid(grid.clone()), gaussian_packet(&grid, 2.0, 0.2, 0.0)).unwrap();
        let psi = StateVector::tensor(&[&a, &b]).unwrap();
        let f = mass_density(&psi, &[1.0, 1.0], 0.0).unwrap();
        assert!((f.total() - 2.0).abs() < 1e-12);
        let left: f64 = f.values[..40].iter().sum::<f64>() * 0.1;
        assert!((left - 1.0).abs() < 1e-10);
    }

    #[test]
    fn superposition_and_mixture_agree() {
        let grid = Grid::centered(60, 0.1).unwrap();
        let space = SpaceSpec::grid(grid.clone());
        let l = gaussian_packet(&grid, -1.5, 0.2, 0.0);
        let r = gaussian_packet(&grid, 1.5, 0.2, 0.0);
        let sup: CVector = (&l + &r).unscale(2f64.sqrt());
        let sup = StateVector::new(space.clone(), sup).unwrap();
        let f = mass_density(&sup, &[3.0], 0.0).unwrap();
        // Mixture: diagonal of rho equals the average of the two marginals.
        let rho = DensityMatrix::mixture(&[
            (0.5, &StateVector::new(space.clone(), l).unwrap()),
            (0.5, &StateVector::new(space, r).unwrap()),
        ])
        .unwrap();
        for (k, v) in f.values.iter().enumerate() {
            let mix = 3.0 * rho.matrix()[(k, k)].re / 0.1;
            assert!((v - mix).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let space = SpaceSpec::new(vec![
            Factor::Grid(Grid::centered(8, 0.1).unwrap()),
            Factor::Grid(Grid::centered(8, 0.2).unwrap()),
        ])
        .unwrap();
        let psi = StateVector::basis(space, 0).unwrap();
        assert_eq!(mass_density(&psi, &[1.0, 1.0], 0.0), Err(Error::MismatchedGrids));
    }
}

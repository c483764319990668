use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::hilbert::{interval_projector, gaussian_packet, CMatrix, Grid, Interval, SpaceSpec, StateVector, C64};
use crate::measurement::Label;
use crate::povm::EffectSet;

/// Spin-1/2 particle in a Gaussian packet crossing the field
/// `(B0 - b z) z_hat` for a time `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SternGerlachParams {
    pub c_plus: C64,
    pub c_minus: C64,
    pub x0: [f64; 3],
    pub p0: [f64; 3],
    /// Position spread of the packet (each axis).
    pub packet_spread: f64,
    pub field: f64,
    pub gradient: f64,
    /// Coupling constant of the spin to the field.
    pub k: f64,
    pub mass: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub x: [f64; 3],
    pub p: [f64; 3],
}

impl SternGerlachParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.c_plus.norm_sqr() + self.c_minus.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n));
        }
        if !(self.packet_spread > 0.0) {
            return Err(Error::invalid("packet_spread", "must be positive"));
        }
        if !(self.mass > 0.0) || !(self.tau >= 0.0) {
            return Err(Error::invalid("mass/tau", "mass must be positive and tau non-negative"));
        }
        Ok(())
    }

    /// `tau k b / |p0|`; the impulsive treatment needs this to be small.
    pub fn impulse_ratio(&self) -> f64 {
        let p = self.p0.iter().map(|x| x * x).sum::<f64>().sqrt();
        (self.tau * self.k * self.gradient).abs() / p
    }

    /// z coordinate of the packet in free flight.
    pub fn reference_z(&self) -> f64 {
        self.x0[2] + self.p0[2] * self.tau / self.mass
    }
}

/// Final packets of the `+` and `-` spin branches.
pub fn sg_final_packets(p: &SternGerlachParams) -> (Packet, Packet) {
    let kick = p.k * p.gradient * p.tau;
    let shift = p.k * p.gradient * p.tau * p.tau / p.mass;
    let branch = |sign: f64| {
        let mut x: [f64; 3] = std::array::from_fn(|i| p.x0[i] + p.p0[i] * p.tau / p.mass);
        let mut q = p.p0;
        x[2] += sign * shift;
        q[2] += sign * kick;
        Packet { x, p: q }
    };
    (branch(1.0), branch(-1.0))
}

/// Gaussian mass beyond `delta` standard deviations on the far side.
fn tail(delta: f64) -> f64 {
    0.5 * erfc(delta / std::f64::consts::SQRT_2)
}

/// Mass of `N(mean, spread^2)` in the upper half-line `z > 0` as
/// `(upper, lower)`, the smaller of the two taken from `erfc` directly.
fn half_masses(mean: f64, spread: f64) -> (f64, f64) {
    let t = tail(mean.abs() / spread);
    if mean >= 0.0 {
        (1.0 - t, t)
    } else {
        (t, 1.0 - t)
    }
}

/// Effects `O_+`, `O_-` of a detector split at `z = 0` for branch means
/// `z_plus`, `z_minus` and common spread.
pub fn sg_effects_for(z_plus: f64, z_minus: f64, spread: f64) -> Result<EffectSet> {
    if !(spread > 0.0) {
        return Err(Error::invalid("spread", "must be positive"));
    }
    let (pu, pl) = half_masses(z_plus, spread);
    let (mu, ml) = half_masses(z_minus, spread);
    let diag = |x: f64, y: f64| CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(x, 0.0), C64::new(y, 0.0)]));
    EffectSet::exact(vec![Label::Value(1.0), Label::Value(-1.0)], vec![diag(pu, mu), diag(pl, ml)])
}

pub fn sg_effects(p: &SternGerlachParams) -> Result<EffectSet> {
    p.validate()?;
    let (plus, minus) = sg_final_packets(p);
    let z0 = p.reference_z();
    sg_effects_for(plus.x[2] - z0, minus.x[2] - z0, p.packet_spread)
}

/// `(P(+1), P(-1))`.
pub fn sg_probabilities(p: &SternGerlachParams) -> Result<(f64, f64)> {
    let e = sg_effects(p)?;
    let w = [p.c_plus.norm_sqr(), p.c_minus.norm_sqr()];
    let prob = |o: &CMatrix| w[0] * o[(0, 0)].re + w[1] * o[(1, 1)].re;
    Ok((prob(&e.effects[0]), prob(&e.effects[1])))
}

/// The same effects from packets sampled on `grid` and half-line
/// projectors, for cross-checking the closed form.
pub fn sg_effects_on_grid(z_plus: f64, z_minus: f64, spread: f64, grid: &Grid) -> Result<EffectSet> {
    let space = SpaceSpec::grid(grid.clone());
    let upper = interval_projector(&space, 0, &[Interval::new(0.0, grid.last() + 1.0)])?;
    let mass = |mean: f64| -> Result<f64> {
        let psi = StateVector::new(space.clone(), gaussian_packet(grid, mean, spread, 0.0))?;
        Ok(crate::hilbert::expectation(&psi, &upper)?.re)
    };
    let (pu, mu) = (mass(z_plus)?, mass(z_minus)?);
    let diag = |x: f64, y: f64| CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(x, 0.0), C64::new(y, 0.0)]));
    EffectSet::exact(
        vec![Label::Value(1.0), Label::Value(-1.0)],
        vec![diag(pu, mu), diag(1.0 - pu, 1.0 - mu)],
    )
}

use serde::Serialize;

use super::collapse::{collapse_in_place, marginal_of, schedule_from_rates, CenterLattice};
use super::propagator::{Hamiltonian, Propagator};
use super::{CollapseEvent, GrwParams};
use crate::error::{Error, Result};
use crate::hilbert::{FactorLayout, Grid, SpaceSpec, StateVector, C64};
use crate::seeds::rng_from_seed;

/// Per-segment tolerance on `| ||psi||^2 - 1 |` after unitary evolution.
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    #[serde(skip)]
    pub state: StateVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub events: Vec<CollapseEvent>,
    pub final_state: StateVector,
    pub samples: Vec<Snapshot>,
    /// Largest `| ||psi||^2 - 1 |` seen at any segment boundary.
    pub max_norm_defect: f64,
}

struct Collapser {
    layout: FactorLayout,
    grid: Grid,
    lattice: CenterLattice,
}

/// A Hamiltonian and collapse parameters prepared for repeated trajectories
/// on one space.
pub struct Dynamics {
    space: SpaceSpec,
    params: GrwParams,
    propagator: Propagator,
    rates: Vec<f64>,
    collapsers: Vec<Option<Collapser>>,
}

impl Dynamics {
    pub fn new(space: &SpaceSpec, hamiltonian: &Hamiltonian, params: &GrwParams) -> Result<Self> {
        let rates = params.rates_for(space);
        let mut collapsers = Vec::with_capacity(rates.len());
        for (i, &r) in rates.iter().enumerate() {
            if r > 0.0 {
                let grid = space.grid_of(i)?.clone();
                grid.check_localization_width(params.alpha())?;
                collapsers.push(Some(Collapser {
                    layout: space.layout(i)?,
                    lattice: CenterLattice::new(&grid, params.alpha()),
                    grid,
                }));
            } else {
                collapsers.push(None);
            }
        }
        Ok(Dynamics {
            space: space.clone(),
            params: params.clone(),
            propagator: hamiltonian.prepare(space)?,
            rates,
            collapsers,
        })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn params(&self) -> &GrwParams {
        &self.params
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// One realization on `[0, horizon]`. Snapshots requested at a jump time
    /// are taken before the jump.
    pub fn run(
        &self,
        seed: u64,
        initial: &StateVector,
        horizon: f64,
        sample_times: &[f64],
    ) -> Result<Trajectory> {
        if initial.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: initial.dim(),
            });
        }
        initial.require_normalized()?;
        let mut samples_at = sample_times.to_vec();
        if samples_at.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) {
            return Err(Error::invalid("sample_times", "must lie in [0, horizon]"));
        }
        samples_at.sort_by(f64::total_cmp);

        let mut rng = rng_from_seed(seed);
        let schedule = schedule_from_rates(&mut rng, &self.rates, horizon)?;

        let mut amps: Vec<C64> = initial.amplitudes().iter().copied().collect();
        let mut t = 0.0;
        let mut max_defect = (initial.norm_sqr() - 1.0).abs();
        let mut samples = Vec::with_capacity(samples_at.len());
        let mut next_sample = samples_at.iter().peekable();
        let mut events = Vec::with_capacity(schedule.len());

        let advance = |amps: &mut Vec<C64>, t: &mut f64, to: f64, max_defect: &mut f64| -> Result<()> {
            if to > *t {
                self.propagator.propagate(amps, *t, to)?;
                let d = (amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
                if d > UNITARITY_TOL {
                    return Err(Error::UnitarityViolation(d));
                }
                *max_defect = max_defect.max(d);
                *t = to;
            }
            Ok(())
        };

        for &(time, particle) in &schedule {
            while let Some(&&ts) = next_sample.peek() {
                if ts > time {
                    break;
                }
                advance(&mut amps, &mut t, ts, &mut max_defect)?;
                samples.push(self.snapshot(ts, &amps)?);
                next_sample.next();
            }
            advance(&mut amps, &mut t, time, &mut max_defect)?;
            let c = self.collapsers[particle]
                .as_ref()
                .expect("scheduled particle has a collapser");
            let center = c.lattice.sample(&mut rng, &marginal_of(&amps, &c.layout))?;
            collapse_in_place(&mut amps, &c.layout, &c.grid, self.params.alpha(), center)?;
            events.push(CollapseEvent {
                time,
                particle,
                center,
            });
        }
        for &ts in next_sample {
            advance(&mut amps, &mut t, ts, &mut max_defect)?;
            samples.push(self.snapshot(ts, &amps)?);
        }
        advance(&mut amps, &mut t, horizon, &mut max_defect)?;

        Ok(Trajectory {
            seed,
            events,
            final_state: StateVector::from_vec(self.space.clone(), amps)?,
            samples,
            max_norm_defect: max_defect,
        })
    }

    fn snapshot(&self, time: f64, amps: &[C64]) -> Result<Snapshot> {
        Ok(Snapshot {
            time,
            state: StateVector::from_vec(self.space.clone(), amps.to_vec())?,
        })
    }
}

/// Evolve `initial` under `hamiltonian` with GRW jumps up to `horizon`.
pub fn evolve_trajectory(
    seed: u64,
    initial: &StateVector,
    hamiltonian: &Hamiltonian,
    params: &GrwParams,
    horizon: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    Dynamics::new(initial.space(), hamiltonian, params)?.run(seed, initial, horizon, sample_times)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Calibration, Estimate, Label, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::grw::marginal_of;
use crate::grw::{
    master_equation_evolve, Coupling, DensityMatrix, Dynamics, GridHamiltonian, GrwParams,
    Hamiltonian, KineticTerm, Trajectory,
};
use crate::hilbert::linalg::{hermitian_eigen, hermiticity_defect};
use crate::hilbert::{
    gaussian_packet, reduced_density, CMatrix, CVector, Factor, Grid, SpaceSpec, StateVector,
};
use crate::seeds::derive_seed;

/// Factor index of the measured system.
pub const SYSTEM: usize = 0;
/// Factor index of the pointer.
pub const POINTER: usize = 1;

/// One Gaussian component of the initial pointer wave function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointerPacket {
    pub center: f64,
    pub width: f64,
    /// Probability weight of this component.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointerSpec {
    pub grid: Grid,
    pub packets: Vec<PointerPacket>,
    /// Pointer mass; `None` for a pointer without kinetic energy.
    pub mass: Option<f64>,
}

impl PointerSpec {
    pub fn gaussian(grid: Grid, center: f64, width: f64, mass: Option<f64>) -> Self {
        PointerSpec {
            grid,
            packets: vec![PointerPacket {
                center,
                width,
                weight: 1.0,
            }],
            mass,
        }
    }

    /// In-phase superposition of the packets with amplitudes `sqrt(weight)`.
    pub fn state(&self) -> Result<StateVector> {
        if self.packets.is_empty() {
            return Err(Error::invalid("pointer.packets", "at least one packet required"));
        }
        let mut v = CVector::zeros(self.grid.n_points());
        for p in &self.packets {
            if !(p.width > 0.0) || !(p.weight > 0.0) {
                return Err(Error::invalid("pointer.packets", "width and weight must be positive"));
            }
            v += gaussian_packet(&self.grid, p.center, p.width, 0.0).scale(p.weight.sqrt());
        }
        StateVector::new(SpaceSpec::grid(self.grid.clone()), v)?.normalized()
    }
}

/// What the apparatus leaves of the system after a run.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemFate {
    /// The system keeps its post-measurement state.
    Preserved,
    /// The system is absorbed and replaced by a fixed state.
    Replaced(CVector),
}

/// A system of dimension `system_dim` coupled to a pointer by
/// `strength * observable (x) p` during `[0, coupling_duration]`, then
/// evolving under GRW until `t_final`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentModel {
    pub system_dim: usize,
    pub observable: CMatrix,
    pub strength: f64,
    pub coupling_duration: f64,
    pub pointer: PointerSpec,
    pub grw: GrwParams,
    pub calibration: Calibration,
    pub t_final: f64,
    pub fate: SystemFate,
}

impl ExperimentModel {
    pub fn validate(&self) -> Result<()> {
        let d = self.system_dim;
        if d < 1 {
            return Err(Error::invalid("system.dim", "must be positive"));
        }
        if self.observable.nrows() != d || self.observable.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.observable.nrows(),
            });
        }
        let h = hermiticity_defect(&self.observable);
        if h > 1e-12 {
            return Err(Error::NonHermitian(h));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if !(self.coupling_duration >= 0.0 && self.coupling_duration <= self.t_final) {
            return Err(Error::invalid("coupling.duration", "must lie in [0, t_final]"));
        }
        if let Some(m) = self.pointer.mass {
            if !(m > 0.0) {
                return Err(Error::invalid("pointer.mass", "must be positive"));
            }
        }
        if let SystemFate::Replaced(v) = &self.fate {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        self.pointer.state()?;
        Ok(())
    }

    pub fn system_space(&self) -> SpaceSpec {
        SpaceSpec::new(vec![Factor::Spin { dim: self.system_dim }]).expect("one factor")
    }

    pub fn apparatus_space(&self) -> SpaceSpec {
        SpaceSpec::grid(self.pointer.grid.clone())
    }

    pub fn space(&self) -> SpaceSpec {
        self.system_space().concat(&self.apparatus_space())
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        let coupling = (self.coupling_duration > 0.0 && self.strength != 0.0).then(|| Coupling {
            system_factor: SYSTEM,
            observable: self.observable.clone(),
            pointer_factor: POINTER,
            strength: self.strength,
            start: 0.0,
            end: self.coupling_duration,
        });
        Hamiltonian::Grid(GridHamiltonian {
            kinetic: self
                .pointer
                .mass
                .map(|mass| KineticTerm {
                    factor: POINTER,
                    mass,
                })
                .into_iter()
                .collect(),
            potentials: Vec::new(),
            coupling,
            max_step: 1e-3,
        })
    }

    pub fn prepare(&self) -> Result<Experiment> {
        Experiment::new(self.clone())
    }
}

/// Compact per-run record kept for ensembles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Outcome index; `calibration.len()` is null.
    pub outcome: usize,
    pub pointer_mean: f64,
    pub pointer_spread: f64,
    /// `<psi_tF| P_Delta_n |psi_tF>` per outcome, null region last.
    pub region_probs: Vec<f64>,
    pub n_events: usize,
    pub norm_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub summary: RunSummary,
    pub label: Label,
    pub trajectory: Trajectory,
}

/// An [`ExperimentModel`] with its dynamics prepared for repeated runs.
pub struct Experiment {
    model: ExperimentModel,
    dynamics: Dynamics,
    pointer_state: StateVector,
    region_of_point: Vec<usize>,
}

impl Experiment {
    pub fn new(model: ExperimentModel) -> Result<Self> {
        model.validate()?;
        let dynamics = Dynamics::new(&model.space(), &model.hamiltonian(), &model.grw)?;
        let pointer_state = model.pointer.state()?;
        let region_of_point = model.calibration.classify_grid(&model.pointer.grid);
        Ok(Experiment {
            model,
            dynamics,
            pointer_state,
            region_of_point,
        })
    }

    pub fn model(&self) -> &ExperimentModel {
        &self.model
    }

    pub fn calibration(&self) -> &Calibration {
        &self.model.calibration
    }

    pub fn system_dim(&self) -> usize {
        self.model.system_dim
    }

    /// Outcome labels followed by null.
    pub fn labels(&self) -> Vec<Label> {
        self.model.calibration.labels_with_null()
    }

    pub fn initial_state(&self, system: &StateVector) -> Result<StateVector> {
        if system.dim() != self.model.system_dim {
            return Err(Error::DimensionMismatch {
                expected: self.model.system_dim,
                found: system.dim(),
            });
        }
        system.require_normalized()?;
        let sys = StateVector::new(self.model.system_space(), system.amplitudes().clone())?;
        StateVector::tensor(&[&sys, &self.pointer_state])
    }

    fn summarize(&self, traj: &Trajectory) -> Result<RunSummary> {
        let layout = traj.final_state.space().layout(POINTER)?;
        let marginal = marginal_of(traj.final_state.amplitudes().as_slice(), &layout);
        let moments = crate::hilbert::moments_of(&self.model.pointer.grid, &marginal);
        let mut region_probs = vec![0.0; self.model.calibration.len() + 1];
        for (m, &r) in marginal.iter().zip(&self.region_of_point) {
            region_probs[r] += m;
        }
        Ok(RunSummary {
            seed: traj.seed,
            outcome: self.model.calibration.classify(moments.mean),
            pointer_mean: moments.mean,
            pointer_spread: moments.spread,
            region_probs,
            n_events: traj.events.len(),
            norm_defect: traj.max_norm_defect,
        })
    }

    /// One run from `system` with a fresh pointer.
    pub fn run(&self, seed: u64, system: &StateVector) -> Result<RunRecord> {
        let psi0 = self.initial_state(system)?;
        let trajectory = self.dynamics.run(seed, &psi0, self.model.t_final, &[])?;
        let summary = self.summarize(&trajectory)?;
        Ok(RunRecord {
            label: self.model.calibration.label(summary.outcome),
            summary,
            trajectory,
        })
    }

    /// System state handed to a subsequent measurement.
    pub fn post_measurement_state(&self, record: &RunRecord) -> Result<StateVector> {
        let v = match &self.model.fate {
            SystemFate::Replaced(v) => v.clone(),
            SystemFate::Preserved => {
                let rho = reduced_density(&record.trajectory.final_state, &[SYSTEM])?;
                let (vals, vecs) = hermitian_eigen(&rho);
                let top = vals.len() - 1;
                vecs.column(top).into_owned()
            }
        };
        StateVector::new(self.model.system_space(), v)?.normalized()
    }

    /// `n` independent runs; run `i` uses `derive_seed(seed, i)`.
    pub fn ensemble(&self, seed: u64, system: &StateVector, n: usize) -> Result<Vec<RunSummary>> {
        let psi0 = self.initial_state(system)?;
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let traj = self.dynamics.run(derive_seed(seed, i), &psi0, self.model.t_final, &[])?;
                self.summarize(&traj)
            })
            .collect()
    }

    pub fn distribution_of(&self, runs: &[RunSummary]) -> OutcomeDistribution {
        OutcomeDistribution::from_indices(self.labels(), runs.iter().map(|r| r.outcome))
    }

    pub fn distribution(&self, seed: u64, system: &StateVector, n: usize) -> Result<OutcomeDistribution> {
        if n == 0 {
            return Err(Error::invalid("n_runs", "must be at least 1"));
        }
        Ok(self.distribution_of(&self.ensemble(seed, system, n)?))
    }

    /// Final statistical operator from the master equation.
    pub fn final_density(&self, system: &StateVector, dt: f64) -> Result<DensityMatrix> {
        let rho0 = DensityMatrix::from_state(&self.initial_state(system)?);
        master_equation_evolve(&rho0, &self.model.hamiltonian(), &self.model.grw, self.model.t_final, dt)
    }

    /// `Tr[rho (I (x) P_Delta_V)]` per region (outcomes, then null).
    pub fn region_traces(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let layout = rho.space().layout(POINTER)?;
        let mut out = vec![0.0; self.model.calibration.len() + 1];
        for g in 0..rho.dim() {
            out[self.region_of_point[layout.local(g)]] += rho.matrix()[(g, g)].re;
        }
        Ok(out)
    }
}

/// How [`q_measure`] evaluates `Q_tF[V]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    Trajectories { runs: usize, seed: u64 },
    MasterEquation { dt: f64 },
}

/// One experiment run: outcome label and the full trajectory.
pub fn run_experiment(seed: u64, experiment: &Experiment, system: &StateVector) -> Result<RunRecord> {
    experiment.run(seed, system)
}

pub fn empirical_distribution(
    seed: u64,
    experiment: &Experiment,
    system: &StateVector,
    n_runs: usize,
) -> Result<OutcomeDistribution> {
    experiment.distribution(seed, system, n_runs)
}

/// `Q_tF[V] = E[<psi_tF| P_Delta_V |psi_tF>]`; `subset` holds outcome
/// indices and may include the null index.
pub fn q_measure(
    experiment: &Experiment,
    system: &StateVector,
    subset: &[usize],
    mode: QMode,
) -> Result<Estimate> {
    let n_regions = experiment.calibration().len() + 1;
    if subset.iter().any(|&i| i >= n_regions) {
        return Err(Error::invalid("V", "outcome index out of range"));
    }
    if subset.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    match mode {
        QMode::Trajectories { runs, seed } => {
            let runs = experiment.ensemble(seed, system, runs)?;
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| subset.iter().map(|&i| r.region_probs[i]).sum())
                .collect();
            Ok(Estimate::mean_of(&xs))
        }
        QMode::MasterEquation { dt } => {
            let rho = experiment.final_density(system, dt)?;
            let tr = experiment.region_traces(&rho)?;
            Ok(Estimate::exact(subset.iter().map(|&i| tr[i]).sum()))
        }
    }
}

/// Purity defect `1 - Tr[rho_S^2]` of the reduced state on `system_factors`.
pub fn factorization_check(state: &StateVector, system_factors: &[usize]) -> Result<f64> {
    let rho = reduced_density(state, system_factors)?;
    let n2 = state.norm_sqr();
    let purity = (&rho * &rho).trace().re / (n2 * n2);
    Ok((1.0 - purity).max(0.0))
}

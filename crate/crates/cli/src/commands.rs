use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use collapse_core::grw::{Dynamics, GridHamiltonian, Hamiltonian};
use collapse_core::hilbert::{gaussian_packet, position_moments, Grid, SpaceSpec, StateVector};
use collapse_core::measurement::Experiment;
use collapse_core::models::{self, malus_functional, sg_effects_for, spin1_functional};
use collapse_core::povm::{
    pvm_check, reconstruct_effects, validate_povm, ExperimentFunctional, ExperimentMode, ProbabilityFunctional,
    MC_ASYMMETRY_SIGMAS,
};
use collapse_core::seeds::derive_seed;
use collapse_core::verification::{run_named, Criterion};
use collapse_core::{EffectSet, GrwParams, Label};
use rayon::prelude::*;
use serde_json::{json, Value};
use libm::erfc;

use crate::config::{self, config_error, ExtractMode, FreePacketBlock, RunConfig};
use crate::output::{format_matrix, write_json, Table};
use crate::{Cli, CliError, Command, Format};

pub const DEFAULT_SEED: u64 = 0;
/// Entry standard error above which a Monte Carlo reconstruction is flagged.
pub const SE_WARNING: f64 = 0.1;
const MATRIX_PRECISION: usize = 8;

/// What a subcommand hands back for `report.json`.
struct Outcome {
    results: Value,
    passed: bool,
    warnings: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    base: PathBuf,
    seed: u64,
    out: &'a Path,
    format: Format,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => (
            config::load(path)?,
            path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(config_error("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    }
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    fs::create_dir_all(&cli.out)?;

    let start = Instant::now();
    let ctx = Ctx {
        cfg: &cfg,
        base,
        seed,
        out: &cli.out,
        format: cli.format,
    };
    let outcome = match cli.command {
        Command::Simulate => simulate(&ctx)?,
        Command::ExtractPovm => extract_povm(&ctx)?,
        Command::Verify => verify(&ctx)?,
        Command::Sweep => sweep(&ctx)?,
    };
    let wall = start.elapsed().as_secs_f64();

    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let report = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "results": outcome.results,
        "passed": outcome.passed,
        "warnings": outcome.warnings,
    });
    write_json(&cli.out.join("report.json"), &report)?;
    write_json(
        &cli.out.join("timing.json"),
        &json!({ "command": cli.command.name(), "wall_seconds": wall }),
    )?;
    if outcome.passed {
        Ok(())
    } else {
        Err(CliError::Failed("one or more checks failed; see report.json".into()))
    }
}

fn simulate(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sim = RunConfig::section(&ctx.cfg.simulate, "simulate")?;
    if let Some(fp) = &sim.free_packet {
        return free_packet(ctx, fp);
    }
    let experiment = Experiment::new(ctx.cfg.experiment_model(&ctx.base)?)?;
    let runs = sim.runs.ok_or_else(|| config_error("simulate.runs", "missing field"))?;
    if runs == 0 {
        return Err(config_error("simulate.runs", "must be at least 1"));
    }
    let psi = sim
        .state
        .as_ref()
        .ok_or_else(|| config_error("simulate.state", "missing field"))?
        .state()?;
    if psi.dim() != experiment.system_dim() {
        return Err(config_error(
            "simulate.state",
            format!("{} amplitudes for a system of dimension {}", psi.dim(), experiment.system_dim()),
        ));
    }

    let labels = experiment.labels();
    let records: Vec<(usize, f64, Value)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let rec = experiment.run(derive_seed(ctx.seed, i), &psi)?;
            let s = rec.summary;
            let line = json!({
                "index": i,
                "seed": s.seed,
                "outcome": labels[s.outcome],
                "pointer_mean": s.pointer_mean,
                "pointer_spread": s.pointer_spread,
                "norm_defect": s.norm_defect,
                "events": rec.trajectory.events,
            });
            Ok((s.outcome, s.norm_defect, line))
        })
        .collect::<Result<_, collapse_core::Error>>()?;

    let mut counts = vec![0u64; labels.len()];
    let mut max_norm_defect: f64 = 0.0;
    let mut jsonl = std::io::BufWriter::new(fs::File::create(ctx.out.join("trajectories.jsonl"))?);
    for (outcome, defect, line) in &records {
        counts[*outcome] += 1;
        max_norm_defect = max_norm_defect.max(*defect);
        writeln!(jsonl, "{}", serde_json::to_string(line)?)?;
    }
    jsonl.flush()?;

    let dist = collapse_core::OutcomeDistribution {
        labels: labels.clone(),
        counts,
        total: runs as u64,
    };
    let mut table = Table::new(vec!["outcome", "count", "frequency", "se"]);
    let mut rows = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        let e = dist.estimate(i);
        table.push(vec![json!(l.to_string()), json!(dist.counts[i]), json!(e.value), json!(e.se)]);
        rows.push(json!({ "outcome": l, "count": dist.counts[i], "frequency": e.value, "se": e.se }));
    }
    table.write(ctx.out, "outcomes", ctx.format)?;

    if sim.mass_density {
        let rec = experiment.run(derive_seed(ctx.seed, 0), &psi)?;
        let mass = experiment.model().pointer.mass.unwrap_or(1.0);
        let field = collapse_core::grw::mass_density(&rec.trajectory.final_state, &[mass], experiment.model().t_final)?;
        let mut t = Table::new(vec!["x", "density"]);
        for (x, v) in field.grid.points().zip(&field.values) {
            t.push(vec![json!(x), json!(v)]);
        }
        t.write(ctx.out, "mass_density", ctx.format)?;
    }

    let norm_ok = max_norm_defect <= 1e-10;
    let mut warnings = Vec::new();
    if !norm_ok {
        warnings.push(format!("norm defect {max_norm_defect:e} exceeds 1e-10"));
    }
    Ok(Outcome {
        results: json!({
            "runs": runs,
            "distribution": rows,
            "max_norm_defect": max_norm_defect,
            "norm_within_1e-10": norm_ok,
        }),
        passed: norm_ok,
        warnings,
    })
}

/// Position spread of a free Gaussian packet (hbar = 1).
pub fn free_spread(width: f64, mass: f64, t: f64) -> f64 {
    width * (1.0 + (t / (2.0 * mass * width * width)).powi(2)).sqrt()
}

fn free_packet(ctx: &Ctx, fp: &FreePacketBlock) -> Result<Outcome, CliError> {
    if fp.samples == 0 || !(fp.t_final > 0.0) {
        return Err(config_error("simulate.free_packet", "need samples >= 1 and t_final > 0"));
    }
    let grid = Grid::centered(fp.n_points, fp.spacing)?;
    let space = SpaceSpec::grid(grid.clone());
    let psi = StateVector::new(space.clone(), gaussian_packet(&grid, 0.0, fp.width, 0.0))?;
    let dynamics = Dynamics::new(
        &space,
        &Hamiltonian::Grid(GridHamiltonian::free(0, fp.mass)),
        &GrwParams::new(0.0, 1.0)?,
    )?;
    let times: Vec<f64> = (0..=fp.samples).map(|k| fp.t_final * k as f64 / fp.samples as f64).collect();
    let traj = dynamics.run(ctx.seed, &psi, fp.t_final, &times)?;

    let mut table = Table::new(vec!["time", "mean", "spread", "analytic_spread", "relative_error"]);
    let mut worst: f64 = 0.0;
    for snap in &traj.samples {
        let m = position_moments(&snap.state, 0)?;
        let a = free_spread(fp.width, fp.mass, snap.time);
        let rel = (m.spread - a).abs() / a;
        worst = worst.max(rel);
        table.push(vec![json!(snap.time), json!(m.mean), json!(m.spread), json!(a), json!(rel)]);
    }
    table.write(ctx.out, "moments", ctx.format)?;
    let ok = worst <= 0.01;
    Ok(Outcome {
        results: json!({ "max_relative_spread_error": worst, "within_1_percent": ok }),
        passed: ok,
        warnings: Vec::new(),
    })
}

fn print_effects(effects: &EffectSet) {
    let numeric = effects.labels.iter().any(|l| matches!(l, Label::Value(_)));
    if numeric {
        println!("observable =");
        print!("{}", format_matrix(&effects.observable(), MATRIX_PRECISION));
    }
    for (l, e) in effects.labels.iter().zip(&effects.effects) {
        println!("O[{l}] =");
        print!("{}", format_matrix(e, MATRIX_PRECISION));
    }
}

fn extract_povm(ctx: &Ctx) -> Result<Outcome, CliError> {
    let block = RunConfig::section(&ctx.cfg.extract_povm, "extract_povm")?;
    let mode = block.mode.unwrap_or(ExtractMode::Exact);
    if mode == ExtractMode::MonteCarlo && block.source != "experiment" {
        return Err(config_error("extract_povm.mode", "monte_carlo needs source = \"experiment\""));
    }
    let reconstruct = |f: &dyn ProbabilityFunctional| reconstruct_effects(f);
    let effects = match block.source.as_str() {
        "spin1" => reconstruct(&spin1_functional())?,
        "malus" => {
            let theta = block
                .theta_deg
                .ok_or_else(|| config_error("extract_povm.theta_deg", "missing field for source malus"))?;
            reconstruct(&malus_functional(theta.to_radians()))?
        }
        "stern-gerlach" => sg_effects_for(
            block.z_plus.unwrap_or(0.6),
            block.z_minus.unwrap_or(-0.6),
            block.spread.unwrap_or(0.3),
        )?,
        "experiment" => {
            let experiment = Experiment::new(ctx.cfg.experiment_model(&ctx.base)?)?;
            let m = match mode {
                ExtractMode::Exact => ExperimentMode::Exact { dt: block.dt.unwrap_or(0.01) },
                ExtractMode::MonteCarlo => ExperimentMode::MonteCarlo {
                    n_runs: block.n_runs.unwrap_or(10_000),
                    seed: ctx.seed,
                },
            };
            reconstruct(&ExperimentFunctional::new(&experiment, m))?
        }
        other => {
            return Err(config_error(
                "extract_povm.source",
                format!("unknown source `{other}` (spin1, malus, stern-gerlach, experiment)"),
            ))
        }
    };

    let max_se = effects.max_entry_se();
    let povm_tol = max_se.map_or(block.povm_tol, |se| block.povm_tol.max(MC_ASYMMETRY_SIGMAS * se));
    let validity = validate_povm(&effects, povm_tol);
    let pvm = pvm_check(&effects, block.pvm_tol);
    let se_warning = max_se.is_some_and(|se| se > SE_WARNING);
    let mut warnings = Vec::new();
    if se_warning {
        warnings.push(format!(
            "largest entry standard error {:.3} exceeds {SE_WARNING}; raise n_runs",
            max_se.unwrap_or(0.0)
        ));
    }
    let ranks: Vec<usize> = effects
        .effects
        .iter()
        .map(|e| collapse_core::hilbert::linalg::numerical_rank(e, 1e-8))
        .collect();

    print_effects(&effects);
    fs::write(ctx.out.join("effects.json"), effects.to_json() + "\n")?;
    Ok(Outcome {
        results: json!({
            "source": block.source,
            "labels": effects.labels,
            "ranks": ranks,
            "max_asymmetry": effects.max_asymmetry,
            "max_entry_se": max_se,
            "se_warning": se_warning,
            "validity": validity,
            "pvm": pvm,
        }),
        passed: validity.valid,
        warnings,
    })
}

fn verify(ctx: &Ctx) -> Result<Outcome, CliError> {
    let block = RunConfig::section(&ctx.cfg.verify, "verify")?;
    let names: Vec<String> = if block.criteria.iter().any(|n| n == "all") {
        Criterion::ALL.iter().map(|c| c.name().to_string()).collect()
    } else {
        block.criteria.clone()
    };
    let results = run_named(&names, ctx.seed)?;
    let mut table = Table::new(vec!["criterion", "passed", "quantity", "value"]);
    for r in &results {
        println!("{}", r.summary_line());
        for (k, v) in &r.values {
            table.push(vec![json!(r.name), json!(r.passed), json!(k), json!(v)]);
        }
    }
    table.write(ctx.out, "criteria", ctx.format)?;
    // Timings live in timing.json so that report.json is reproducible.
    let echoed: Vec<Value> = results
        .iter()
        .map(|r| json!({ "name": r.name, "passed": r.passed, "values": r.values, "failures": r.failures }))
        .collect();
    Ok(Outcome {
        passed: results.iter().all(|r| r.passed),
        results: json!({ "criteria": echoed }),
        warnings: Vec::new(),
    })
}

fn sweep(ctx: &Ctx) -> Result<Outcome, CliError> {
    let block = RunConfig::section(&ctx.cfg.sweep, "sweep")?;
    let (from, to, steps) = match block.kind.as_str() {
        "stern-gerlach" => (0.5, 12.0, 24),
        "malus" => (0.0, 180.0, 37),
        other => {
            return Err(config_error(
                "sweep.kind",
                format!("unknown sweep `{other}` (stern-gerlach, malus)"),
            ))
        }
    };
    let from = block.from.unwrap_or(from);
    let to = block.to.unwrap_or(to);
    let steps = block.steps.unwrap_or(steps);
    if steps < 2 || !(to > from) {
        return Err(config_error("sweep", "need steps >= 2 and to > from"));
    }
    let params: Vec<f64> = (0..steps)
        .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
        .collect();

    let mut table = Table::new(vec!["parameter", "value", "analytic", "defect"]);
    if block.kind == "stern-gerlach" {
        // Branch separation over spread; value is the crossed-branch entry.
        let spread = 1.0;
        for &r in &params {
            if !(r > 0.0) {
                return Err(config_error("sweep.from", "separation ratio must be positive"));
            }
            let e = sg_effects_for(0.5 * r * spread, -0.5 * r * spread, spread)?;
            let crossed = e.effects[1][(0, 0)].re;
            let analytic = 0.5 * erfc(r / (2.0 * std::f64::consts::SQRT_2));
            table.push(vec![json!(r), json!(crossed), json!(analytic), json!(pvm_check(&e, 0.0).max_defect)]);
        }
    } else {
        for &deg in &params {
            let t = deg.to_radians();
            let p = models::MalusParams {
                epsilon: [1.0, 0.0],
                filter_angles: vec![t],
            };
            let value = models::malus_intensity(&p)[0];
            let analytic = t.cos().powi(2);
            table.push(vec![json!(deg), json!(value), json!(analytic), json!((value - analytic).abs())]);
        }
    }
    table.write(ctx.out, "sweep", ctx.format)?;
    Ok(Outcome {
        results: json!({ "kind": block.kind, "points": params.len() }),
        passed: true,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_spread_doubles_at_the_right_time() {
        // sigma(t) = 2 sigma0 when t = 2 sqrt(3) m sigma0^2.
        let t = 2.0 * 3f64.sqrt() * 1.5 * 0.7 * 0.7;
        assert!((free_spread(0.7, 1.5, t) - 1.4).abs() < 1e-12);
    }
}

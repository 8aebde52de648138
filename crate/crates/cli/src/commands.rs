//! The four subcommands. Each writes its files into `out` and returns their paths.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hetrdme_core::analysis::{
    convergence_study, decay_study, level_seed, martingale_suite, ConvergenceReport, MartingaleReport,
};
use hetrdme_core::discretization::drift;
use hetrdme_core::pde::{
    check_contraction, check_self_adjoint, energy_series, integrate, mass_series, max_relative_increase,
    neumann_asymmetry, PdeError,
};
use hetrdme_core::rdme::{mean_drift_check, replicate_rng, ssa_run, RateConvention, RecordGrid, SsaConfig};

use crate::output::{fmt_f64, write_field, Header, Table, FIELD_COLUMNS};
use crate::scenario::LoadedScenario;
use crate::CliError;

const RESOLVED_FILE: &str = "scenario.resolved.toml";

/// Tolerances of the `check` suite.
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const NEUMANN_MIN: f64 = 1e-6;
pub const DRIFT_TOL: f64 = 1e-12;
pub const CONTRACTION_TOL: f64 = 1e-10;
pub const MONOTONE_TOL: f64 = 1e-10;

const CHECK_TRIALS: usize = 20;
const CONTRACTION_TIMES: [f64; 3] = [0.01, 0.1, 1.0];
const SERIES_POINTS: usize = 41;

fn prepare(loaded: &LoadedScenario, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join(RESOLVED_FILE);
    std::fs::write(&path, loaded.echo()).map_err(|e| CliError::io(&path, e))
}

fn check_level(loaded: &LoadedScenario, level: usize) -> Result<(), CliError> {
    let levels = loaded.scenario.schedule.len();
    if level >= levels {
        return Err(CliError::Usage(format!("level {level} is outside the schedule ({levels} levels)")));
    }
    Ok(())
}

/// One SSA trajectory recorded every `record_dt` up to `t_end`.
pub fn simulate(loaded: &LoadedScenario, level: usize, replicate: u64, out: &Path) -> Result<PathBuf, CliError> {
    check_level(loaded, level)?;
    prepare(loaded, out)?;
    let sc = &loaded.scenario;
    let seed = level_seed(sc.master_seed, level);
    let rho = sc.stopping_radius(level, sc.t_end)?;
    let kernel = sc.kernel(level)?;
    let sampler = sc.sampler(level)?;
    let config = SsaConfig::new(sc.t_end, RecordGrid::Uniform(sc.record_dt)).with_rho(rho);
    let mut rng = replicate_rng(seed, replicate);
    let state = sampler.sample(&mut rng);
    let traj = ssa_run(&state, &kernel, &config, &mut rng).map_err(|e| CliError::Analysis(e.into()))?;
    if let Some(t) = traj.exit_time {
        log::warn!("replicate {replicate} left the ball of radius {rho} at t = {t}");
    }
    log::info!("{} events", traj.events);

    let header = Header::new(loaded, sc.master_seed, format!("simulate level={level} replicate={replicate}"));
    let path = out.join(format!("simulate_level{level}_rep{replicate}.csv"));
    let mut table = Table::create(&path, &header, &FIELD_COLUMNS)?;
    let rep = replicate.to_string();
    for (i, &t) in traj.times().iter().enumerate() {
        write_field(&mut table, "ssa", &rep, t, &sc.species_names, &traj.concentration(i))?;
    }
    table.finish()
}

/// Deterministic solution on the lattice of `level`, sampled every `record_dt`.
pub fn solve(loaded: &LoadedScenario, level: usize, out: &Path) -> Result<PathBuf, CliError> {
    check_level(loaded, level)?;
    prepare(loaded, out)?;
    let sc = &loaded.scenario;
    let times = SsaConfig::new(sc.t_end, RecordGrid::Uniform(sc.record_dt))
        .record_times()
        .map_err(|e| CliError::Analysis(e.into()))?;
    let sol = integrate(
        &sc.initial_field(level)?,
        &sc.coefficients(level)?,
        &times,
        sc.dt,
        sc.scheme,
    )
    .map_err(|e| CliError::Analysis(e.into()))?;
    if sol.clamped > 0 {
        log::warn!("{} negative entries clamped to zero", sol.clamped);
    }
    let header = Header::new(loaded, sc.master_seed, format!("solve level={level}"));
    let path = out.join(format!("solve_level{level}.csv"));
    let mut table = Table::create(&path, &header, &FIELD_COLUMNS)?;
    for (t, u) in sol.times().iter().zip(sol.snapshots()) {
        write_field(&mut table, "pde", "", *t, &sc.species_names, u)?;
    }
    table.finish()
}

/// Result of [`converge`].
pub struct ConvergeOutput {
    pub report: ConvergenceReport,
    pub martingale: MartingaleReport,
    pub files: Vec<PathBuf>,
}

/// Ensemble-versus-PDE statistics on every level plus the martingale
/// diagnostics on the configured level.
pub fn converge(loaded: &LoadedScenario, out: &Path) -> Result<ConvergeOutput, CliError> {
    prepare(loaded, out)?;
    let sc = &loaded.scenario;
    let start = Instant::now();
    let report = convergence_study(sc)?;
    for l in &report.levels {
        eprintln!("level {} (N = {}, w = {}): {:.2} s", l.level, l.n, l.w, l.runtime_secs);
    }
    let m = &sc.martingale;
    let mstart = Instant::now();
    let martingale = martingale_suite(sc, m.level, m.replicates, m.t, level_seed(sc.master_seed, m.level))?;
    eprintln!("martingale suite: {:.2} s", mstart.elapsed().as_secs_f64());
    eprintln!("converge total: {:.2} s", start.elapsed().as_secs_f64());

    let header = Header::new(loaded, sc.master_seed, "converge");
    let mut files = Vec::new();

    let path = out.join("convergence.csv");
    let mut table = Table::create(
        &path,
        &header,
        &[
            "level",
            "n",
            "w",
            "seed",
            "rho",
            "replicates",
            "exit_fraction",
            "mean_events",
            "t",
            "delta",
            "count",
            "phat",
            "lo",
            "hi",
            "mean_distance",
            "median_distance",
            "max_distance",
        ],
    )?;
    for l in &report.levels {
        let prefix = [
            l.level.to_string(),
            l.n.to_string(),
            fmt_f64(l.w),
            l.seed.to_string(),
            fmt_f64(l.rho),
            l.replicates.to_string(),
            fmt_f64(l.exit_fraction),
            fmt_f64(l.mean_events),
        ];
        for c in &l.checkpoints {
            for e in &c.exceedance {
                let mut row = prefix.to_vec();
                row.extend([
                    fmt_f64(c.t),
                    fmt_f64(e.delta),
                    e.count.to_string(),
                    fmt_f64(e.phat),
                    fmt_f64(e.lo),
                    fmt_f64(e.hi),
                    fmt_f64(c.mean_distance),
                    fmt_f64(c.median_distance),
                    fmt_f64(c.max_distance),
                ]);
                table.row(row)?;
            }
        }
        for e in &l.any_checkpoint {
            let mut row = prefix.to_vec();
            row.extend([
                "any".to_string(),
                fmt_f64(e.delta),
                e.count.to_string(),
                fmt_f64(e.phat),
                fmt_f64(e.lo),
                fmt_f64(e.hi),
                String::new(),
                String::new(),
                String::new(),
            ]);
            table.row(row)?;
        }
    }
    files.push(table.finish()?);

    let path = out.join("plot_data.csv");
    let mut table = Table::create(&path, &header, &["level", "t", "delta", "phat", "lo", "hi"])?;
    for l in &report.levels {
        for c in &l.checkpoints {
            for e in &c.exceedance {
                table.row([
                    l.level.to_string(),
                    fmt_f64(c.t),
                    fmt_f64(e.delta),
                    fmt_f64(e.phat),
                    fmt_f64(e.lo),
                    fmt_f64(e.hi),
                ])?;
            }
        }
    }
    files.push(table.finish()?);

    let path = out.join("martingale.csv");
    let mut table = Table::create(
        &path,
        &header,
        &[
            "level",
            "n",
            "w",
            "t",
            "rho",
            "seed",
            "replicates",
            "mean_projection",
            "projection_se",
            "mean_sq_norm",
            "sq_norm_se",
            "bound",
            "exit_fraction",
        ],
    )?;
    let mr = &martingale;
    table.row([
        mr.level.to_string(),
        mr.n.to_string(),
        fmt_f64(mr.w),
        fmt_f64(mr.t),
        fmt_f64(mr.rho),
        mr.seed.to_string(),
        mr.replicates.to_string(),
        fmt_f64(mr.mean_projection),
        fmt_f64(mr.projection_se),
        fmt_f64(mr.mean_sq_norm),
        fmt_f64(mr.sq_norm_se),
        fmt_f64(mr.bound),
        fmt_f64(mr.exit_fraction),
    ])?;
    files.push(table.finish()?);

    Ok(ConvergeOutput {
        report,
        martingale,
        files,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Reported but not asserted.
    Info,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Info => "info",
            Self::Skipped => "skipped",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub level: usize,
    pub value: f64,
    /// `value <= threshold` passes, except for `neumann_control` where it
    /// must exceed it.
    pub threshold: f64,
    pub status: Status,
}

pub struct CheckOutput {
    pub results: Vec<CheckResult>,
    pub file: PathBuf,
}

impl CheckOutput {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.results.iter().filter(|r| r.status == Status::Fail).collect()
    }
}

/// Relative sup-norm gap between the event-table mean drift and `L_N + R_N`
/// over sampled initial states.
fn drift_gap(loaded: &LoadedScenario, level: usize, seed: u64) -> Result<f64, CliError> {
    let sc = &loaded.scenario;
    let kernel = sc.kernel(level)?;
    let sampler = sc.sampler(level)?;
    let mut worst = 0.0f64;
    for r in 0..CHECK_TRIALS as u64 {
        let state = sampler.sample(&mut replicate_rng(seed, r));
        let table = mean_drift_check(&state, &kernel).map_err(|e| CliError::Analysis(e.into()))?;
        let direct = drift(kernel.coefficients(), &state.concentration()).map_err(|e| CliError::Analysis(e.into()))?;
        let scale = direct.sup_norm().max(f64::MIN_POSITIVE);
        let gap = table.difference(&direct).map_err(|e| CliError::Analysis(e.into()))?.sup_norm();
        worst = worst.max(gap / scale);
    }
    Ok(worst)
}

/// Invariant suite on every level of the schedule.
pub fn check(loaded: &LoadedScenario, out: &Path) -> Result<CheckOutput, CliError> {
    prepare(loaded, out)?;
    let sc = &loaded.scenario;
    let mut results = Vec::new();
    let mut push = |name, level, value: f64, threshold, status| {
        results.push(CheckResult {
            name,
            level,
            value,
            threshold,
            status,
        })
    };
    let equilibrium = sc
        .network
        .factored()
        .filter(|_| sc.network.is_weakly_reversible())
        .and_then(|f| f.generator.equilibrium().ok());
    for level in 0..sc.schedule.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(level_seed(sc.master_seed, level));
        let coef = sc.coefficients(level)?;

        let asym = check_self_adjoint(&coef, CHECK_TRIALS, &mut rng);
        push("self_adjoint", level, asym, SYMMETRY_TOL, Status::from_bool(asym <= SYMMETRY_TOL));
        let neumann = neumann_asymmetry(&coef, CHECK_TRIALS, &mut rng);
        let heterogeneous = (0..coef.species())
            .any(|l| (1..coef.lattice().voxels()).any(|j| coef.diffusion(l, j) != coef.diffusion(l, 0)));
        let status = if !heterogeneous {
            Status::Info
        } else {
            Status::from_bool(neumann > NEUMANN_MIN)
        };
        push("neumann_control", level, neumann, NEUMANN_MIN, status);

        let gap = drift_gap(loaded, level, level_seed(sc.master_seed, level))?;
        let status = match sc.convention {
            RateConvention::Interface => Status::from_bool(gap <= DRIFT_TOL),
            RateConvention::SourceVoxel => Status::Info,
        };
        push("drift_identity", level, gap, DRIFT_TOL, status);

        match check_contraction(&coef.without_reactions(), &CONTRACTION_TIMES, CHECK_TRIALS, &mut rng) {
            Ok(r) => {
                let excess = r.overall_max() - 1.0;
                push("contraction", level, excess, CONTRACTION_TOL, Status::from_bool(excess <= CONTRACTION_TOL));
            }
            Err(PdeError::TooLarge { .. }) => push("contraction", level, f64::NAN, CONTRACTION_TOL, Status::Skipped),
            Err(e) => return Err(CliError::Analysis(e.into())),
        }
        match check_contraction(&coef, &CONTRACTION_TIMES, CHECK_TRIALS, &mut rng) {
            Ok(r) => push("growth_bound_omega", level, r.omega, 0.0, Status::Info),
            Err(PdeError::TooLarge { .. }) => push("growth_bound_omega", level, f64::NAN, 0.0, Status::Skipped),
            Err(e) => return Err(CliError::Analysis(e.into())),
        }

        let horizon = sc.decay.t_end.max(sc.t_end);
        let times: Vec<f64> = (0..SERIES_POINTS)
            .map(|i| horizon * i as f64 / (SERIES_POINTS - 1) as f64)
            .collect();
        let sol = integrate(&sc.initial_field(level)?, &coef, &times, sc.dt, sc.scheme)
            .map_err(|e| CliError::Analysis(e.into()))?;
        let mass = max_relative_increase(&mass_series(&sol));
        push("mass_dissipation", level, mass, MONOTONE_TOL, Status::from_bool(mass <= MONOTONE_TOL));
        match &equilibrium {
            Some(eq) => {
                let energy = energy_series(&sol, eq).map_err(|e| CliError::Analysis(e.into()))?;
                let inc = max_relative_increase(&energy);
                push("energy_monotone", level, inc, MONOTONE_TOL, Status::from_bool(inc <= MONOTONE_TOL));
            }
            None => push("energy_monotone", level, f64::NAN, MONOTONE_TOL, Status::Skipped),
        }
    }
    if equilibrium.is_some() {
        let d = &sc.decay;
        let report = decay_study(sc, d.level, &d.times())?;
        push("decay_rate_positive", d.level, report.norm_fit.alpha, 0.0, Status::from_bool(report.norm_fit.alpha > 0.0));
        push("decay_rate_relative_error", d.level, report.relative_rate_error(), 0.2, Status::Info);
    }

    let header = Header::new(loaded, sc.master_seed, "check");
    let path = out.join("check.csv");
    let mut table = Table::create(&path, &header, &["check", "level", "value", "threshold", "status"])?;
    for r in &results {
        table.row([
            r.name.to_string(),
            r.level.to_string(),
            fmt_f64(r.value),
            fmt_f64(r.threshold),
            r.status.as_str().to_string(),
        ])?;
    }
    let file = table.finish()?;
    Ok(CheckOutput { results, file })
}

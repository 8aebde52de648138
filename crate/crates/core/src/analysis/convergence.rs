use std::time::Instant;

use super::stats::{median, sorted_mean, Exceedance};
use super::{resolve_rho, total_sup, AnalysisError, DeltaRule, Scenario};
use crate::discretization::norm;
use crate::pde::integrate;
use crate::rdme::{ensemble_map, RecordGrid, SsaConfig};

/// Number of extra uniform samples used to estimate the PDE sup-norm over time.
const SUP_SAMPLES: usize = 100;

/// Seed of level `level`; level 0 uses the master seed itself.
pub fn level_seed(master_seed: u64, level: usize) -> u64 {
    master_seed.wrapping_add((level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Raw per-replicate distances `|u~(t) - u(t)|` of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDistances {
    pub level: usize,
    pub n: usize,
    pub w: f64,
    pub seed: u64,
    pub rho: f64,
    /// Largest [`total_sup`] of the reference solution over `[0, last checkpoint]`.
    pub pde_sup: f64,
    pub checkpoints: Vec<f64>,
    /// `distances[c][r]`: checkpoint `c`, replicate `r`.
    pub distances: Vec<Vec<f64>>,
    /// Replicates stopped by leaving the ball of radius `rho`.
    pub exited: Vec<bool>,
    pub events: Vec<u64>,
    pub runtime_secs: f64,
}

/// Runs `replicates` stopped trajectories on level `level` and measures
/// their distance to the deterministic solution on the same lattice.
pub fn ensemble_distances(
    scenario: &Scenario,
    level: usize,
    replicates: usize,
    checkpoints: &[f64],
    master_seed: u64,
) -> Result<LevelDistances, AnalysisError> {
    let start = Instant::now();
    if checkpoints.is_empty() || checkpoints[0] <= 0.0 || checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AnalysisError::InvalidScenario(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    let lattice = scenario.lattice(level)?;
    let coef = scenario.coefficients(level)?;
    let u0 = scenario.initial_field(level)?;
    let t_last = *checkpoints.last().unwrap();

    let mut times: Vec<f64> = (0..=SUP_SAMPLES).map(|i| t_last * i as f64 / SUP_SAMPLES as f64).collect();
    times.extend_from_slice(checkpoints);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let pde = integrate(&u0, &coef, &times, scenario.dt, scenario.scheme)?;
    let pde_sup = pde.snapshots().iter().map(total_sup).fold(0.0, f64::max);
    let rho = resolve_rho(scenario.rho, pde_sup);
    let references: Vec<_> = checkpoints
        .iter()
        .map(|t| {
            let i = pde.times().iter().position(|s| s == t).expect("checkpoint on the PDE grid");
            pde.snapshots()[i].clone()
        })
        .collect();

    let kernel = scenario.kernel(level)?;
    let sampler = scenario.sampler(level)?;
    let config = SsaConfig::new(t_last, RecordGrid::Times(checkpoints.to_vec())).with_rho(rho);
    let per_replicate = ensemble_map(&sampler, &kernel, &config, master_seed, replicates, |traj| {
        let d: Vec<f64> = references
            .iter()
            .enumerate()
            .map(|(c, u)| norm(&traj.concentration(c).difference(u).expect("same lattice")))
            .collect();
        Ok((d, traj.exited(), traj.events))
    })?;

    let mut distances = vec![Vec::with_capacity(replicates); checkpoints.len()];
    let mut exited = Vec::with_capacity(replicates);
    let mut events = Vec::with_capacity(replicates);
    for (d, e, n) in per_replicate {
        for (c, v) in d.into_iter().enumerate() {
            distances[c].push(v);
        }
        exited.push(e);
        events.push(n);
    }
    Ok(LevelDistances {
        level,
        n: lattice.per_axis(),
        w: lattice.density(),
        seed: master_seed,
        rho,
        pde_sup,
        checkpoints: checkpoints.to_vec(),
        distances,
        exited,
        events,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointStats {
    pub t: f64,
    pub mean_distance: f64,
    pub median_distance: f64,
    pub max_distance: f64,
    pub exceedance: Vec<Exceedance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub n: usize,
    pub w: f64,
    pub seed: u64,
    pub rho: f64,
    pub pde_sup: f64,
    pub replicates: usize,
    pub exit_fraction: f64,
    pub mean_events: f64,
    pub checkpoints: Vec<CheckpointStats>,
    /// Per threshold index: replicates exceeding their threshold at any
    /// checkpoint. `delta` holds the largest threshold over the checkpoints.
    pub any_checkpoint: Vec<Exceedance>,
    pub runtime_secs: f64,
}

/// Exceedance statistics with `deltas[c]` the thresholds at checkpoint `c`.
/// Every checkpoint must carry the same number of thresholds.
pub fn level_statistics(d: &LevelDistances, deltas: &[Vec<f64>]) -> Result<LevelStats, AnalysisError> {
    if deltas.len() != d.checkpoints.len() || deltas.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(AnalysisError::InvalidScenario(
            "need the same number of thresholds at every checkpoint".into(),
        ));
    }
    let replicates = d.exited.len();
    let checkpoints = d
        .checkpoints
        .iter()
        .zip(&d.distances)
        .zip(deltas)
        .map(|((&t, dist), ds)| CheckpointStats {
            t,
            mean_distance: sorted_mean(dist),
            median_distance: median(dist),
            max_distance: dist.iter().copied().fold(0.0, f64::max),
            exceedance: ds
                .iter()
                .map(|&delta| Exceedance::from_flags(delta, dist.iter().map(|&v| v > delta)))
                .collect(),
        })
        .collect();
    let n_deltas = deltas.first().map_or(0, Vec::len);
    let any_checkpoint = (0..n_deltas)
        .map(|k| {
            let flags = (0..replicates).map(|r| (0..d.checkpoints.len()).any(|c| d.distances[c][r] > deltas[c][k]));
            let largest = deltas.iter().map(|d| d[k]).fold(f64::NEG_INFINITY, f64::max);
            Exceedance::from_flags(largest, flags)
        })
        .collect();
    let exits = d.exited.iter().filter(|&&e| e).count();
    let events: Vec<f64> = d.events.iter().map(|&e| e as f64).collect();
    Ok(LevelStats {
        level: d.level,
        n: d.n,
        w: d.w,
        seed: d.seed,
        rho: d.rho,
        pde_sup: d.pde_sup,
        replicates,
        exit_fraction: if replicates == 0 { 0.0 } else { exits as f64 / replicates as f64 },
        mean_events: sorted_mean(&events),
        checkpoints,
        any_checkpoint,
        runtime_secs: d.runtime_secs,
    })
}

/// One level against fixed thresholds `deltas` (the same at every checkpoint).
pub fn ensemble_vs_pde(
    scenario: &Scenario,
    level: usize,
    replicates: usize,
    checkpoints: &[f64],
    deltas: &[f64],
    master_seed: u64,
) -> Result<LevelStats, AnalysisError> {
    let d = ensemble_distances(scenario, level, replicates, checkpoints, master_seed)?;
    level_statistics(&d, &vec![deltas.to_vec(); checkpoints.len()])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub master_seed: u64,
    pub checkpoints: Vec<f64>,
    /// `deltas[c]`: thresholds used at checkpoint `c`.
    pub deltas: Vec<Vec<f64>>,
    pub levels: Vec<LevelStats>,
}

impl ConvergenceReport {
    /// `P^` at checkpoint `c` and threshold `k` across levels.
    pub fn phat_series(&self, c: usize, k: usize) -> Vec<f64> {
        self.levels.iter().map(|l| l.checkpoints[c].exceedance[k].phat).collect()
    }

    pub fn strictly_decreasing(&self, c: usize, k: usize) -> bool {
        self.phat_series(c, k).windows(2).all(|w| w[1] < w[0])
    }

    /// Exit fractions never grow from one level to the next.
    pub fn exits_non_increasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].exit_fraction <= w[0].exit_fraction)
    }
}

/// Every level of the scenario's schedule with the scenario's convergence
/// settings. Thresholds come from level 0 when the rule is a median fraction.
pub fn convergence_study(scenario: &Scenario) -> Result<ConvergenceReport, AnalysisError> {
    scenario.validate()?;
    let settings = &scenario.convergence;
    let cps = &settings.checkpoints;
    let mut raw = Vec::with_capacity(scenario.schedule.len());
    for level in 0..scenario.schedule.len() {
        let seed = level_seed(scenario.master_seed, level);
        let d = ensemble_distances(scenario, level, settings.replicates, cps, seed)?;
        log::info!(
            "level {level}: N = {}, w = {}, {:.1} s",
            d.n,
            d.w,
            d.runtime_secs
        );
        raw.push(d);
    }
    let deltas: Vec<Vec<f64>> = match &settings.delta {
        DeltaRule::MedianFraction(f) => raw[0].distances.iter().map(|d| vec![f * median(d)]).collect(),
        DeltaRule::Explicit(ds) => vec![ds.clone(); cps.len()],
    };
    let levels = raw
        .iter()
        .map(|d| level_statistics(d, &deltas))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceReport {
        scenario: scenario.name.clone(),
        master_seed: scenario.master_seed,
        checkpoints: cps.clone(),
        deltas,
        levels,
    })
}

//! Ensembles over scaling schedules and the statistics that test the
//! macroscopic limit empirically.

mod convergence;
mod decay;
mod martingale;
mod stats;

use thiserror::Error;

use crate::discretization::{project_fields, ConcField, DiscretizationError, GhostCoefficient, Lattice, VoxelCoefficients};
use crate::network::{ReactionNetwork, SpatialField};
use crate::pde::{integrate, PdeError, Scheme};
use crate::rdme::{InitialMode, InitialSampler, RateConvention, RateKernel, RdmeError};

pub use convergence::{
    convergence_study, ensemble_distances, ensemble_vs_pde, level_seed, level_statistics, CheckpointStats,
    ConvergenceReport, LevelDistances, LevelStats,
};
pub use decay::{decay_study, DecayReport};
pub use martingale::{martingale_bound, martingale_suite, test_field, MartingaleReport};
pub use stats::{median, sorted_mean, wilson_interval, Exceedance, WILSON_Z};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("level {level} is outside the schedule ({levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error(transparent)]
    Rdme(#[from] RdmeError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

/// `max_j sum_l u_j^l`, the quantity the stopping rule compares with `rho`.
pub fn total_sup(u: &ConcField<f64>) -> f64 {
    let k = u.species();
    u.values().chunks(k).map(|c| c.iter().sum::<f64>()).fold(0.0, f64::max)
}

/// Stopping radius: the scenario's value or twice the largest [`total_sup`]
/// of the reference solution.
pub(crate) fn resolve_rho(explicit: Option<f64>, reference_sup: f64) -> f64 {
    explicit.unwrap_or(if reference_sup > 0.0 { 2.0 * reference_sup } else { 1.0 })
}

/// Lattice levels `(N, w)` with `N` and `w` strictly increasing and
/// `N^2 / w^n` strictly decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSchedule {
    dimension: usize,
    levels: Vec<(usize, f64)>,
}

impl ScalingSchedule {
    pub fn new(dimension: usize, levels: Vec<(usize, f64)>) -> Result<Self, AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidSchedule(m));
        if dimension == 0 {
            return bad("dimension must be positive".into());
        }
        if levels.is_empty() {
            return bad("schedule has no levels".into());
        }
        for &(n, w) in &levels {
            if n == 0 || !(w > 0.0 && w.is_finite()) {
                return bad(format!("level ({n}, {w}) needs N >= 1 and finite w > 0"));
            }
        }
        let ratio = |(n, w): (usize, f64)| (n * n) as f64 / w.powi(dimension as i32);
        for pair in levels.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.0 <= a.0 {
                return bad(format!("N must increase strictly, got {} then {}", a.0, b.0));
            }
            if b.1 <= a.1 {
                return bad(format!("w must increase strictly, got {} then {}", a.1, b.1));
            }
            if ratio(b) >= ratio(a) {
                return bad(format!(
                    "N^2/w^n must decrease strictly, got {} then {}",
                    ratio(a),
                    ratio(b)
                ));
            }
        }
        Ok(Self { dimension, levels })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn levels(&self) -> &[(usize, f64)] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `N^2 / w^n` of every level.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|&(n, w)| (n * n) as f64 / w.powi(self.dimension as i32))
            .collect()
    }

    pub fn lattice(&self, level: usize) -> Result<Lattice, AnalysisError> {
        let &(n, w) = self.levels.get(level).ok_or(AnalysisError::LevelOutOfRange {
            level,
            levels: self.levels.len(),
        })?;
        Ok(Lattice::new(self.dimension, n, w)?)
    }
}

/// How `w` follows `N` in [`make_schedule`].
#[derive(Clone, Debug, PartialEq)]
pub enum WRule {
    /// `w = N^p`.
    Power(f64),
    /// One `w` per level.
    Explicit(Vec<f64>),
}

impl Default for WRule {
    fn default() -> Self {
        Self::Power(3.0)
    }
}

/// `N = base_n * 2^i` for `i < levels`, `w` from `rule`.
pub fn make_schedule(base_n: usize, levels: usize, dimension: usize, rule: &WRule) -> Result<ScalingSchedule, AnalysisError> {
    let ns: Vec<usize> = (0..levels).map(|i| base_n << i).collect();
    let ws: Vec<f64> = match rule {
        WRule::Power(p) => ns.iter().map(|&n| (n as f64).powf(*p)).collect(),
        WRule::Explicit(ws) => {
            if ws.len() != levels {
                return Err(AnalysisError::InvalidSchedule(format!(
                    "{} values of w for {levels} levels",
                    ws.len()
                )));
            }
            ws.clone()
        }
    };
    ScalingSchedule::new(dimension, ns.into_iter().zip(ws).collect())
}

/// How the exceedance thresholds are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum DeltaRule {
    /// `delta = factor * median` of the level-0 distances at each checkpoint.
    MedianFraction(f64),
    /// The same thresholds at every checkpoint.
    Explicit(Vec<f64>),
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self::MedianFraction(0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSettings {
    pub checkpoints: Vec<f64>,
    pub replicates: usize,
    pub delta: DeltaRule,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            checkpoints: vec![0.05, 0.1, 0.2],
            replicates: 200,
            delta: DeltaRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleSettings {
    pub level: usize,
    pub t: f64,
    pub replicates: usize,
}

impl Default for MartingaleSettings {
    fn default() -> Self {
        Self {
            level: 0,
            t: 1.0,
            replicates: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecaySettings {
    pub level: usize,
    /// Fit window start, end and number of samples.
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            level: 0,
            t_start: 0.2,
            t_end: 1.0,
            points: 17,
        }
    }
}

impl DecaySettings {
    pub fn times(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// A validated model together with every numerical knob needed to run it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub species_names: Vec<String>,
    pub network: ReactionNetwork,
    pub initial: Vec<SpatialField>,
    pub schedule: ScalingSchedule,
    /// Horizon and output spacing of single runs.
    pub t_end: f64,
    pub record_dt: f64,
    pub master_seed: u64,
    /// Stopping radius; `None` means twice the PDE sup-norm.
    pub rho: Option<f64>,
    pub ghost: GhostCoefficient,
    pub convention: RateConvention,
    pub initial_mode: InitialMode,
    pub scheme: Scheme,
    /// Time step for the implicit schemes; `None` uses the default rule.
    pub dt: Option<f64>,
    pub convergence: ConvergenceSettings,
    pub martingale: MartingaleSettings,
    pub decay: DecaySettings,
}

impl Scenario {
    /// Scenario with every knob at its default: the master seed is 0,
    /// `t_end` the last convergence checkpoint, records every `t_end / 20`.
    pub fn new(name: impl Into<String>, network: ReactionNetwork, initial: Vec<SpatialField>, schedule: ScalingSchedule) -> Self {
        let convergence = ConvergenceSettings::default();
        let t_end = *convergence.checkpoints.last().unwrap();
        let species_names = (0..network.species()).map(|l| format!("S{}", l + 1)).collect();
        Self {
            name: name.into(),
            species_names,
            network,
            initial,
            schedule,
            t_end,
            record_dt: t_end / 20.0,
            master_seed: 0,
            rho: None,
            ghost: GhostCoefficient::default(),
            convention: RateConvention::default(),
            initial_mode: InitialMode::default(),
            scheme: Scheme::default(),
            dt: None,
            convergence,
            martingale: MartingaleSettings::default(),
            decay: DecaySettings::default(),
        }
    }

    pub fn species(&self) -> usize {
        self.network.species()
    }

    pub fn dimension(&self) -> usize {
        self.network.dimension()
    }

    pub fn lattice(&self, level: usize) -> Result<Lattice, AnalysisError> {
        self.schedule.lattice(level)
    }

    pub fn coefficients(&self, level: usize) -> Result<VoxelCoefficients<f64>, AnalysisError> {
        Ok(VoxelCoefficients::from_network(&self.network, self.lattice(level)?, self.ghost)?)
    }

    pub fn kernel(&self, level: usize) -> Result<RateKernel, AnalysisError> {
        Ok(RateKernel::new(self.coefficients(level)?, self.convention))
    }

    pub fn sampler(&self, level: usize) -> Result<InitialSampler, AnalysisError> {
        Ok(InitialSampler::new(&self.initial, self.lattice(level)?, self.initial_mode)?)
    }

    /// Cell averages of the initial profiles.
    pub fn initial_field(&self, level: usize) -> Result<ConcField<f64>, AnalysisError> {
        Ok(project_fields(&self.initial, self.lattice(level)?)?)
    }

    /// The scenario's `rho`, or twice the largest [`total_sup`] of the
    /// reference solution sampled at 101 points of `[0, horizon]`.
    pub fn stopping_radius(&self, level: usize, horizon: f64) -> Result<f64, AnalysisError> {
        if let Some(r) = self.rho {
            return Ok(r);
        }
        let times: Vec<f64> = (0..=100).map(|i| horizon * i as f64 / 100.0).collect();
        let sol = integrate(
            &self.initial_field(level)?,
            &self.coefficients(level)?,
            &times,
            self.dt,
            self.scheme,
        )?;
        Ok(resolve_rho(None, sol.snapshots().iter().map(total_sup).fold(0.0, f64::max)))
    }

    /// Consistency checks that do not need a run.
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidScenario(m));
        if self.initial.len() != self.species() {
            return bad(format!(
                "{} initial profiles for {} species",
                self.initial.len(),
                self.species()
            ));
        }
        if self.species_names.len() != self.species() {
            return bad(format!(
                "{} species names for {} species",
                self.species_names.len(),
                self.species()
            ));
        }
        if self.schedule.dimension() != self.dimension() {
            return bad("schedule dimension differs from the network dimension".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.record_dt > 0.0 && self.record_dt <= self.t_end) {
            return bad(format!("record_dt must lie in (0, t_end], got {}", self.record_dt));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return bad(format!("rho must be positive, got {rho}"));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        let cp = &self.convergence.checkpoints;
        if cp.is_empty() || cp[0] <= 0.0 || cp.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("checkpoints must be positive and strictly increasing".into());
        }
        if self.convergence.replicates == 0 || self.martingale.replicates == 0 {
            return bad("ensemble sizes must be positive".into());
        }
        match &self.convergence.delta {
            DeltaRule::MedianFraction(f) if !(*f > 0.0) => return bad(format!("delta fraction must be positive, got {f}")),
            DeltaRule::Explicit(d) if d.is_empty() || d.iter().any(|v| !(*v > 0.0)) => {
                return bad("explicit deltas must be positive".into())
            }
            _ => {}
        }
        if !(self.martingale.t > 0.0) || self.martingale.level >= self.schedule.len() {
            return bad("martingale settings need t > 0 and a level inside the schedule".into());
        }
        let d = &self.decay;
        if !(d.t_start >= 0.0 && d.t_end > d.t_start) || d.points < 3 || d.level >= self.schedule.len() {
            return bad("decay window needs 0 <= t_start < t_end, at least 3 points and a valid level".into());
        }
        Ok(())
    }
}

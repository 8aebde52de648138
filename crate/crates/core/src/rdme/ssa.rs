use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_event_rates, concentration, CountState, InitialSampler, RateConvention, RateKernel, RdmeError};
use crate::discretization::{ConcField, Lattice};

/// Events between two full recomputations of the per-voxel rates.
pub const DEFAULT_REBUILD_INTERVAL: u64 = 1 << 20;

/// Times at which a trajectory is recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordGrid {
    /// `0, dt, 2 dt, ...` up to `t_end` (and `t_end` itself).
    Uniform(f64),
    /// Explicit strictly increasing times in `[0, t_end]`.
    Times(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsaConfig {
    pub t_end: f64,
    pub record: RecordGrid,
    /// Exit level of the stopped process; `None` never stops.
    pub rho: Option<f64>,
    pub rebuild_interval: u64,
}

impl SsaConfig {
    pub fn new(t_end: f64, record: RecordGrid) -> Self {
        Self {
            t_end,
            record,
            rho: None,
            rebuild_interval: DEFAULT_REBUILD_INTERVAL,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    /// Validated snapshot times.
    pub fn record_times(&self) -> Result<Vec<f64>, RdmeError> {
        let bad = |m: String| Err(RdmeError::InvalidConfig(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return bad(format!("rho must be positive, got {rho}"));
            }
        }
        if self.rebuild_interval == 0 {
            return bad("rebuild interval must be positive".into());
        }
        match &self.record {
            RecordGrid::Uniform(dt) => {
                if !(*dt > 0.0 && dt.is_finite()) {
                    return bad(format!("record interval must be positive, got {dt}"));
                }
                let steps = (self.t_end / dt * (1.0 + 1e-12)).floor() as usize;
                let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
                let last = *times.last().unwrap();
                if self.t_end - last > 1e-12 * self.t_end {
                    times.push(self.t_end);
                } else {
                    *times.last_mut().unwrap() = last.min(self.t_end);
                }
                Ok(times)
            }
            RecordGrid::Times(times) => {
                if times.is_empty() {
                    return bad("no record times".into());
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("record times must be strictly increasing".into());
                }
                if !(times[0] >= 0.0) || *times.last().unwrap() > self.t_end {
                    return bad(format!("record times must lie in [0, {}]", self.t_end));
                }
                Ok(times.clone())
            }
        }
    }
}

/// Recorded realization of the (possibly stopped) jump process.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub master_seed: u64,
    pub replicate: u64,
    pub convention: RateConvention,
    lattice: Lattice,
    species: usize,
    initial: Vec<u64>,
    times: Vec<f64>,
    counts: Vec<Vec<u64>>,
    /// `int_0^t X(s) ds` per entry at each snapshot, frozen at the exit time.
    integrals: Vec<Vec<f64>>,
    pub events: u64,
    /// First time `sup_x sum_l C_l(x)` exceeded `rho`.
    pub exit_time: Option<f64>,
}

impl Trajectory {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn exited(&self) -> bool {
        self.exit_time.is_some()
    }

    pub fn counts(&self, snapshot: usize) -> &[u64] {
        &self.counts[snapshot]
    }

    pub fn initial_counts(&self) -> &[u64] {
        &self.initial
    }

    /// Time integral of the counts up to snapshot `i` (stopped at the exit time).
    pub fn count_integral(&self, snapshot: usize) -> &[f64] {
        &self.integrals[snapshot]
    }

    /// `C = X / w^n` at snapshot `i`.
    pub fn concentration(&self, snapshot: usize) -> ConcField<f64> {
        concentration(&self.lattice, self.species, &self.counts[snapshot])
    }

    pub fn initial_concentration(&self) -> ConcField<f64> {
        concentration(&self.lattice, self.species, &self.initial)
    }
}

/// Random stream of one replicate: ChaCha8 keyed by the master seed, with the
/// replicate index as stream id.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

struct LazyIntegral {
    value: Vec<f64>,
    since: Vec<f64>,
}

impl LazyIntegral {
    fn new(len: usize) -> Self {
        Self {
            value: vec![0.0; len],
            since: vec![0.0; len],
        }
    }

    #[inline]
    fn advance(&mut self, idx: usize, count: u64, t: f64) {
        self.value[idx] += count as f64 * (t - self.since[idx]);
        self.since[idx] = t;
    }

    fn snapshot(&self, counts: &[u64], t: f64) -> Vec<f64> {
        self.value
            .iter()
            .zip(&self.since)
            .zip(counts)
            .map(|((&v, &s), &c)| v + c as f64 * (t - s))
            .collect()
    }
}

/// Direct-method simulation of the jump process from `initial` up to `t_end`.
///
/// Snapshots hold the state just before any jump at the same instant. Once
/// the total concentration in some voxel exceeds `rho`, the process is
/// frozen: later snapshots repeat the state at the exit time and the count
/// integrals stop growing.
pub fn ssa_run<R: Rng + ?Sized>(
    initial: &CountState,
    kernel: &RateKernel,
    config: &SsaConfig,
    rng: &mut R,
) -> Result<Trajectory, RdmeError> {
    let times = config.record_times()?;
    let mut table = build_event_rates(initial, kernel)?;
    let lattice = *kernel.lattice();
    let k = kernel.species();
    let wn = lattice.molecules_per_unit();
    let threshold = config.rho.map(|rho| rho * wn);
    let exceeds = |count: u64| threshold.is_some_and(|th| count as f64 > th);

    let mut integral = LazyIntegral::new(initial.counts().len());
    let mut exit_time = (0..lattice.voxels())
        .any(|j| exceeds(table.voxel_count(j)))
        .then_some(0.0);
    let mut snap_counts = Vec::with_capacity(times.len());
    let mut snap_integrals = Vec::with_capacity(times.len());
    let mut next = 0;
    let mut t = 0.0;
    let mut events = 0u64;

    loop {
        let total = table.total_rate();
        let t_next = if exit_time.is_some() || !(total > 0.0) {
            f64::INFINITY
        } else {
            let e: f64 = rng.sample(Exp1);
            t + e / total
        };
        while next < times.len() && times[next] < t_next {
            let s = exit_time.map_or(times[next], |te: f64| te.min(times[next]));
            snap_counts.push(table.counts().to_vec());
            snap_integrals.push(integral.snapshot(table.counts(), s));
            next += 1;
        }
        if t_next > config.t_end {
            break;
        }
        let event = table.sample_event(rng)?;
        let touched = touched_entries(event, &lattice, k);
        for idx in touched.iter().flatten() {
            integral.advance(*idx, table.counts()[*idx], t_next);
        }
        let (src, dst) = table.apply(event);
        events += 1;
        t = t_next;
        if exceeds(table.voxel_count(src)) || dst.is_some_and(|d| exceeds(table.voxel_count(d))) {
            exit_time = Some(t);
        }
        if events % config.rebuild_interval == 0 {
            table.rebuild();
        }
    }

    Ok(Trajectory {
        master_seed: 0,
        replicate: 0,
        convention: kernel.convention(),
        lattice,
        species: k,
        initial: initial.counts().to_vec(),
        times,
        counts: snap_counts,
        integrals: snap_integrals,
        events,
        exit_time,
    })
}

/// Count-vector entries changed by `event`.
fn touched_entries(event: super::Event, lattice: &Lattice, k: usize) -> [Option<usize>; 2] {
    match event {
        super::Event::Reaction { voxel, from, to } => [Some(voxel * k + from), Some(voxel * k + to)],
        super::Event::Hop {
            voxel,
            species,
            axis,
            forward,
        } => [
            Some(voxel * k + species),
            lattice.neighbor(voxel, axis, forward).map(|t| t * k + species),
        ],
    }
}

/// Independent replicates `0..replicates`, each on its own stream of
/// `master_seed`; initial counts are drawn from the same stream first.
/// Results come back in replicate order regardless of scheduling.
pub fn run_ensemble(
    initial: &InitialSampler,
    kernel: &RateKernel,
    config: &SsaConfig,
    master_seed: u64,
    replicates: usize,
) -> Result<Vec<Trajectory>, RdmeError> {
    ensemble_map(initial, kernel, config, master_seed, replicates, |traj| Ok(traj))
}

/// Like [`run_ensemble`] but reduces every trajectory with `f` as soon as it
/// is finished, so only the reduced values are kept.
pub fn ensemble_map<U, F>(
    initial: &InitialSampler,
    kernel: &RateKernel,
    config: &SsaConfig,
    master_seed: u64,
    replicates: usize,
    f: F,
) -> Result<Vec<U>, RdmeError>
where
    U: Send,
    F: Fn(Trajectory) -> Result<U, RdmeError> + Sync,
{
    config.record_times()?;
    if initial.means().len() != kernel.lattice().voxels() * kernel.species()
        || !initial.lattice().same_geometry(kernel.lattice())
    {
        return Err(RdmeError::LatticeMismatch);
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(master_seed, r);
            let state = initial.sample(&mut rng);
            let mut traj = ssa_run(&state, kernel, config, &mut rng)?;
            traj.master_seed = master_seed;
            traj.replicate = r;
            f(traj)
        })
        .collect()
}

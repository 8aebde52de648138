//! Method-of-lines solver for `u' = L_N u + R_N u` on the voxel lattice and
//! the dissipation diagnostics that go with it.

mod diagnostics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{assemble_generator, ConcField, DiscretizationError, Lattice, VoxelCoefficients};
use crate::linalg::{expm_action, BandedSolver, CsrMatrix, DenseMatrix, LinalgError};
use crate::Real;

pub use diagnostics::{
    apply_neumann_control, check_contraction, check_self_adjoint, neumann_asymmetry, smallest_decay_rate,
    ContractionReport,
};

/// Largest system handled by the `expm` scheme.
pub const EXPM_MAX_DIM: usize = 4096;
/// Above this size the exponential is applied by a Taylor series instead of
/// being formed densely.
pub const DENSE_EXPM_MAX_DIM: usize = 512;
/// Entries of a Crank–Nicolson snapshot below `-NEGATIVE_CLAMP` are reset to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("linear solve failed: {0}")]
    SolverFailure(#[from] LinalgError),
    #[error("expm scheme supports at most {max} unknowns, got {dim}")]
    TooLarge { dim: usize, max: usize },
    #[error("invalid time grid: {0}")]
    InvalidTimes(String),
    #[error("initial data must be non-negative, found {0}")]
    NegativeInitialData(f64),
    #[error("series must have at least 3 positive values")]
    NonPositiveSeries,
    #[error("equilibrium entries must be positive")]
    NonPositiveEquilibrium,
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    CrankNicolson,
    ImplicitEuler,
    Expm,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CrankNicolson => "crank-nicolson",
            Self::ImplicitEuler => "implicit-euler",
            Self::Expm => "expm",
        }
    }
}

/// Deterministic solution sampled at the requested times.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSolution<T: Real = f64> {
    pub scheme: Scheme,
    /// Nominal step (for `expm`, the largest interval between snapshots).
    pub dt: T,
    pub steps: usize,
    /// Largest relative residual of any implicit solve.
    pub max_residual: f64,
    /// Snapshot entries clamped to zero.
    pub clamped: usize,
    times: Vec<f64>,
    snapshots: Vec<ConcField<T>>,
}

impl<T: Real> PdeSolution<T> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[ConcField<T>] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn lattice(&self) -> &Lattice {
        self.snapshots[0].lattice()
    }

    /// Largest entry over all snapshots.
    pub fn sup_norm(&self) -> T {
        self.snapshots.iter().fold(T::zero(), |m, s| m.max(s.sup_norm()))
    }
}

/// `min(1e-3, 0.1 / ||A||_inf)`.
pub fn default_time_step<T: Real>(coef: &VoxelCoefficients<T>) -> T {
    let norm = assemble_generator(coef).norm_inf();
    let cap = T::lit(1e-3);
    if norm > T::zero() {
        cap.min(T::lit(0.1) / norm)
    } else {
        cap
    }
}

fn validate_times(times: &[f64]) -> Result<(), PdeError> {
    if times.is_empty() {
        return Err(PdeError::InvalidTimes("no output times".into()));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(PdeError::InvalidTimes("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PdeError::InvalidTimes("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Integrates from `t = 0` and records the solution at every entry of `times`.
///
/// `dt` defaults to [`default_time_step`]; each interval between output times
/// is split into equal steps no longer than `dt`. Implicit schemes factor the
/// banded system once per distinct step length.
pub fn integrate<T: Real>(
    u0: &ConcField<T>,
    coef: &VoxelCoefficients<T>,
    times: &[f64],
    dt: Option<T>,
    scheme: Scheme,
) -> Result<PdeSolution<T>, PdeError> {
    validate_times(times)?;
    if coef.species() != u0.species() || !coef.lattice().same_geometry(u0.lattice()) {
        return Err(DiscretizationError::LatticeMismatch.into());
    }
    let min = u0.min_value();
    if min < T::zero() {
        return Err(PdeError::NegativeInitialData(min.as_f64()));
    }
    let a = assemble_generator(coef);
    let dt = dt.unwrap_or_else(|| default_time_step(coef));
    if !(dt > T::zero()) {
        return Err(PdeError::InvalidTimes(format!("dt must be positive, got {dt}")));
    }
    let lattice = *u0.lattice();
    let k = u0.species();
    let mut state = u0.values().to_vec();
    let mut snapshots = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut steps = 0;
    let mut max_residual = 0.0f64;
    let mut clamped = 0;
    let mut stepper = Stepper::new(&a, scheme)?;
    let mut max_interval = T::zero();

    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let span_t = T::lit(span);
            let n = match scheme {
                Scheme::Expm => 1,
                _ => (span_t / dt).ceil().to_usize().unwrap_or(1).max(1),
            };
            let h = span_t / T::lit(n as f64);
            max_interval = max_interval.max(h);
            for _ in 0..n {
                let res = stepper.step(&a, &mut state, h)?;
                max_residual = max_residual.max(res);
            }
            steps += n;
            t = target;
        }
        let mut snap = state.clone();
        if scheme == Scheme::CrankNicolson {
            for v in snap.iter_mut() {
                if *v < T::lit(-NEGATIVE_CLAMP) {
                    *v = T::zero();
                    clamped += 1;
                }
            }
        }
        snapshots.push(ConcField::from_values(lattice, k, snap)?);
    }
    if clamped > 0 {
        log::warn!("crank-nicolson: clamped {clamped} snapshot entries below -{NEGATIVE_CLAMP:e}");
    }
    Ok(PdeSolution {
        scheme,
        dt: if scheme == Scheme::Expm { max_interval } else { dt },
        steps,
        max_residual,
        clamped,
        times: times.to_vec(),
        snapshots,
    })
}

/// Advances a state by one step of a fixed scheme, caching the last
/// factorisation or exponential.
struct Stepper<T: Real> {
    scheme: Scheme,
    cached: Option<(T, Cached<T>)>,
    scratch: Vec<T>,
}

enum Cached<T: Real> {
    Solver(BandedSolver<T>, CsrMatrix<T>),
    Dense(DenseMatrix<T>),
    Action,
}

impl<T: Real> Stepper<T> {
    fn new(a: &CsrMatrix<T>, scheme: Scheme) -> Result<Self, PdeError> {
        if scheme == Scheme::Expm && a.rows() > EXPM_MAX_DIM {
            return Err(PdeError::TooLarge {
                dim: a.rows(),
                max: EXPM_MAX_DIM,
            });
        }
        Ok(Self {
            scheme,
            cached: None,
            scratch: vec![T::zero(); a.rows()],
        })
    }

    fn prepare(&mut self, a: &CsrMatrix<T>, h: T) -> Result<(), PdeError> {
        if matches!(&self.cached, Some((cached_h, _)) if *cached_h == h) {
            return Ok(());
        }
        let tol = T::solve_tolerance();
        let entry = match self.scheme {
            Scheme::CrankNicolson | Scheme::ImplicitEuler => {
                let theta = if self.scheme == Scheme::CrankNicolson { h / T::lit(2.0) } else { h };
                let m = a.shifted(-theta, T::one());
                Cached::Solver(BandedSolver::new(m.clone(), tol)?, m)
            }
            Scheme::Expm if a.rows() <= DENSE_EXPM_MAX_DIM => Cached::Dense(DenseMatrix::from_csr(a).scale(h).expm()?),
            Scheme::Expm => Cached::Action,
        };
        self.cached = Some((h, entry));
        Ok(())
    }

    /// Returns the relative residual of the implicit solve (zero for `expm`).
    fn step(&mut self, a: &CsrMatrix<T>, u: &mut Vec<T>, h: T) -> Result<f64, PdeError> {
        self.prepare(a, h)?;
        let (_, cached) = self.cached.as_ref().expect("prepared");
        match cached {
            Cached::Solver(solver, m) => {
                let rhs = if self.scheme == Scheme::CrankNicolson {
                    a.matvec(u, &mut self.scratch);
                    let half = h / T::lit(2.0);
                    u.iter().zip(&self.scratch).map(|(&x, &ax)| x + half * ax).collect()
                } else {
                    u.clone()
                };
                let x = solver.solve(&rhs)?;
                m.matvec(&x, &mut self.scratch);
                let mut worst = 0.0f64;
                let mut scale = 1.0f64;
                for (r, b) in self.scratch.iter().zip(&rhs) {
                    worst = worst.max((*r - *b).abs().as_f64());
                    scale = scale.max(b.abs().as_f64());
                }
                *u = x;
                Ok(worst / scale)
            }
            Cached::Dense(e) => {
                *u = e.matvec(u);
                Ok(0.0)
            }
            Cached::Action => {
                *u = expm_action(a, h, u);
                Ok(0.0)
            }
        }
    }
}

/// `h^n sum_{l,j} u_j^l`.
pub fn total_mass<T: Real>(u: &ConcField<T>) -> T {
    u.total_mass()
}

/// `(t, total mass)` for every snapshot.
pub fn mass_series<T: Real>(sol: &PdeSolution<T>) -> Vec<(f64, T)> {
    sol.times.iter().zip(&sol.snapshots).map(|(&t, u)| (t, u.total_mass())).collect()
}

/// `h^n sum_{l,j} (u_j^l)^2 / u_inf^l`.
pub fn relative_energy<T: Real>(u: &ConcField<T>, u_inf: &[f64]) -> Result<T, PdeError> {
    if u_inf.len() != u.species() {
        return Err(DiscretizationError::LatticeMismatch.into());
    }
    if u_inf.iter().any(|&v| !(v > 0.0)) {
        return Err(PdeError::NonPositiveEquilibrium);
    }
    let k = u.species();
    let s: T = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * v / T::lit(u_inf[i % k]))
        .sum();
    Ok(s * T::lit(u.lattice().cell_volume()))
}

/// `(t, relative energy)` for every snapshot.
pub fn energy_series<T: Real>(sol: &PdeSolution<T>, u_inf: &[f64]) -> Result<Vec<(f64, T)>, PdeError> {
    sol.times
        .iter()
        .zip(&sol.snapshots)
        .map(|(&t, u)| Ok((t, relative_energy(u, u_inf)?)))
        .collect()
}

/// `(t, L^2 norm)` for every snapshot.
pub fn norm_series<T: Real>(sol: &PdeSolution<T>) -> Vec<(f64, T)> {
    sol.times
        .iter()
        .zip(&sol.snapshots)
        .map(|(&t, u)| (t, crate::discretization::norm(u)))
        .collect()
}

/// Largest relative increase between consecutive values; non-positive when
/// the series is non-increasing.
pub fn max_relative_increase<T: Real>(series: &[(f64, T)]) -> f64 {
    series
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].1.as_f64(), w[1].1.as_f64());
            (b - a) / a.abs().max(f64::MIN_POSITIVE)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares fit of `log v = c - alpha t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub rms_residual: f64,
}

pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<DecayFit, PdeError> {
    if series.len() < 3 || series.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(PdeError::NonPositiveSeries);
    }
    let n = series.len() as f64;
    let mt = series.iter().map(|p| p.0).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = series.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = series.iter().map(|p| (p.0 - mt) * (p.1.ln() - my)).sum();
    if sxx == 0.0 {
        return Err(PdeError::InvalidTimes("decay fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let rss: f64 = series
        .iter()
        .map(|p| (p.1.ln() - intercept - slope * p.0).powi(2))
        .sum();
    Ok(DecayFit {
        alpha: -slope,
        intercept,
        rms_residual: (rss / n).sqrt(),
    })
}

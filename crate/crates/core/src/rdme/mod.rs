//! Exact stochastic simulation of the reaction–diffusion master equation.
//!
//! Molecule counts live on the interior voxels of a [`Lattice`]; the ghost
//! layer absorbs every molecule that hops into it. Concentrations are counts
//! divided by `w^n` (see [`Lattice::molecules_per_unit`]).

mod kernel;
mod martingale;
mod ssa;
mod table;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{project_fields, ConcField, DiscretizationError, Lattice};
use crate::network::SpatialField;

pub use kernel::{Event, RateConvention, RateKernel};
pub use martingale::{martingale_residual, mean_drift_check};
pub use ssa::{ensemble_map, replicate_rng, run_ensemble, ssa_run, RecordGrid, SsaConfig, Trajectory, DEFAULT_REBUILD_INTERVAL};
pub use table::{build_event_rates, EventTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RdmeError {
    #[error("initial data for species {species} is negative ({value}) in voxel {voxel}")]
    NegativeInitialData { species: usize, voxel: usize, value: f64 },
    #[error("no event is enabled")]
    NoEventEnabled,
    #[error("state and rate kernel disagree on lattice or species count")]
    LatticeMismatch,
    #[error("invalid simulation settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

/// Molecule counts per species and interior voxel, voxel-major like [`ConcField`].
#[derive(Clone, Debug, PartialEq)]
pub struct CountState {
    lattice: Lattice,
    species: usize,
    counts: Vec<u64>,
}

impl CountState {
    pub fn zeros(lattice: Lattice, species: usize) -> Self {
        Self {
            lattice,
            species,
            counts: vec![0; lattice.voxels() * species],
        }
    }

    pub fn from_counts(lattice: Lattice, species: usize, counts: Vec<u64>) -> Result<Self, RdmeError> {
        if species == 0 || counts.len() != lattice.voxels() * species {
            return Err(RdmeError::LatticeMismatch);
        }
        Ok(Self {
            lattice,
            species,
            counts,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, species: usize, voxel: usize) -> u64 {
        self.counts[voxel * self.species + species]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `C = X / w^n`.
    pub fn concentration(&self) -> ConcField<f64> {
        concentration(&self.lattice, self.species, &self.counts)
    }
}

pub(crate) fn concentration(lattice: &Lattice, species: usize, counts: &[u64]) -> ConcField<f64> {
    let wn = lattice.molecules_per_unit();
    ConcField::from_values(*lattice, species, counts.iter().map(|&c| c as f64 / wn).collect())
        .expect("count vector matches lattice")
}

/// How initial counts are drawn from a concentration profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// `X = round(w^n * cell average)`.
    #[default]
    Round,
    /// `X ~ Poisson(w^n * cell average)`.
    Poisson,
}

/// Expected initial counts per voxel, ready for repeated sampling.
#[derive(Clone, Debug)]
pub struct InitialSampler {
    lattice: Lattice,
    species: usize,
    means: Vec<f64>,
    mode: InitialMode,
}

impl InitialSampler {
    pub fn new(u0: &[SpatialField], lattice: Lattice, mode: InitialMode) -> Result<Self, RdmeError> {
        let projected: ConcField<f64> = project_fields(u0, lattice)?;
        let k = projected.species();
        for j in 0..lattice.voxels() {
            for l in 0..k {
                let v = projected.get(l, j);
                if !(v >= 0.0) {
                    return Err(RdmeError::NegativeInitialData {
                        species: l,
                        voxel: j,
                        value: v,
                    });
                }
            }
        }
        let wn = lattice.molecules_per_unit();
        Ok(Self {
            lattice,
            species: k,
            means: projected.values().iter().map(|v| v * wn).collect(),
            mode,
        })
    }

    pub fn mode(&self) -> InitialMode {
        self.mode
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Expected count per voxel and species (voxel-major).
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CountState {
        let counts = self
            .means
            .iter()
            .map(|&m| match self.mode {
                InitialMode::Round => m.round() as u64,
                InitialMode::Poisson if m > 0.0 => Poisson::new(m).expect("positive mean").sample(rng) as u64,
                InitialMode::Poisson => 0,
            })
            .collect();
        CountState {
            lattice: self.lattice,
            species: self.species,
            counts,
        }
    }
}

/// Draws initial counts for the profiles `u0` (one per species).
pub fn initial_counts<R: Rng + ?Sized>(
    u0: &[SpatialField],
    lattice: Lattice,
    mode: InitialMode,
    rng: &mut R,
) -> Result<CountState, RdmeError> {
    Ok(InitialSampler::new(u0, lattice, mode)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_mode_scales_by_density() {
        let lat = Lattice::new(1, 4, 100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = initial_counts(&[SpatialField::constant(1, 2.0)], lat, InitialMode::Round, &mut rng).unwrap();
        assert_eq!(s.counts(), &[200, 200, 200, 200]);
    }

    #[test]
    fn zero_profile_gives_zero_counts() {
        let lat = Lattice::new(2, 3, 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for mode in [InitialMode::Round, InitialMode::Poisson] {
            let s = initial_counts(&[SpatialField::zero(2), SpatialField::zero(2)], lat, mode, &mut rng).unwrap();
            assert_eq!(s.total(), 0);
        }
    }

    #[test]
    fn negative_profile_rejected() {
        let lat = Lattice::new(1, 2, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u0 = SpatialField::steps_1d(vec![0.5], vec![1.0, -1.0]).unwrap();
        assert!(matches!(
            initial_counts(&[u0], lat, InitialMode::Round, &mut rng),
            Err(RdmeError::NegativeInitialData { species: 0, voxel: 1, .. })
        ));
    }

    #[test]
    fn round_mode_error_is_half_a_molecule() {
        let lat = Lattice::new(1, 7, 13.0).unwrap();
        let u0 = SpatialField::steps_1d(vec![0.31], vec![0.77, 0.123]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = initial_counts(std::slice::from_ref(&u0), lat, InitialMode::Round, &mut rng).unwrap();
        let exact: ConcField = project_fields(&[u0], lat).unwrap();
        let diff = s.concentration().difference(&exact).unwrap();
        assert!(diff.sup_norm() <= 0.5 / 13.0 + 1e-15);
    }

    #[test]
    fn poisson_mode_moments() {
        let lat = Lattice::new(1, 2, 30.0).unwrap();
        let sampler = InitialSampler::new(&[SpatialField::constant(1, 0.5)], lat, InitialMode::Poisson).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 10_000;
        let mut sum = [0.0; 2];
        for _ in 0..draws {
            let s = sampler.sample(&mut rng);
            sum[0] += s.counts()[0] as f64;
            sum[1] += s.counts()[1] as f64;
        }
        let mean = 15.0;
        let sigma = (mean / draws as f64).sqrt();
        for s in sum {
            assert!((s / draws as f64 - mean).abs() <= 3.0 * sigma);
        }
    }
}

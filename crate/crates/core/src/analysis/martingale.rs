use std::f64::consts::PI;

use super::stats::{sorted_mean, sorted_variance};
use super::{AnalysisError, Scenario};
use crate::discretization::{inner_product, norm, ConcField, Lattice};
use crate::rdme::{ensemble_map, martingale_residual, RecordGrid, SsaConfig};

/// Fixed test field `e^l(x) = (1 + l) prod_a sin(pi x_a)` at cell centres.
pub fn test_field(lattice: Lattice, species: usize) -> ConcField<f64> {
    ConcField::from_fn(lattice, species, |l, j| {
        let x = lattice.coordinates(j);
        let h = lattice.spacing();
        (1.0 + l as f64) * x.iter().map(|&i| (PI * (i as f64 + 0.5) * h).sin()).product::<f64>()
    })
}

/// `(t rho / w^n) (K^2 lambda* + 4 K n D* N^2)`.
#[allow(clippy::too_many_arguments)]
pub fn martingale_bound(
    t: f64,
    rho: f64,
    w: f64,
    dimension: usize,
    species: usize,
    per_axis: usize,
    lambda_upper: f64,
    d_upper: f64,
) -> f64 {
    let k = species as f64;
    let n2 = (per_axis * per_axis) as f64;
    t * rho / w.powi(dimension as i32) * (k * k * lambda_upper + 4.0 * k * dimension as f64 * d_upper * n2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    pub level: usize,
    pub n: usize,
    pub w: f64,
    pub t: f64,
    pub rho: f64,
    pub seed: u64,
    pub replicates: usize,
    /// Ensemble mean and standard error of `<z(t), e>`.
    pub mean_projection: f64,
    pub projection_se: f64,
    /// Ensemble mean and standard error of `|z(t)|^2`.
    pub mean_sq_norm: f64,
    pub sq_norm_se: f64,
    pub bound: f64,
    pub exit_fraction: f64,
}

impl MartingaleReport {
    /// Mean projection within three standard errors of zero.
    pub fn projection_ok(&self) -> bool {
        self.mean_projection.abs() <= 3.0 * self.projection_se
    }

    pub fn bound_ok(&self) -> bool {
        self.mean_sq_norm <= self.bound
    }
}

/// Martingale residual statistics at time `t` over `replicates` stopped runs.
pub fn martingale_suite(
    scenario: &Scenario,
    level: usize,
    replicates: usize,
    t: f64,
    master_seed: u64,
) -> Result<MartingaleReport, AnalysisError> {
    if !(t > 0.0) || replicates == 0 {
        return Err(AnalysisError::InvalidScenario("martingale suite needs t > 0 and replicates > 0".into()));
    }
    let lattice = scenario.lattice(level)?;
    let rho = scenario.stopping_radius(level, t)?;
    let kernel = scenario.kernel(level)?;
    let sampler = scenario.sampler(level)?;
    let e = test_field(lattice, scenario.species());
    let config = SsaConfig::new(t, RecordGrid::Times(vec![t])).with_rho(rho);
    let samples = ensemble_map(&sampler, &kernel, &config, master_seed, replicates, |traj| {
        let z = martingale_residual(&traj, &kernel)?.pop().expect("one snapshot");
        let projection = inner_product(&z, &e)?;
        let sq = norm(&z).powi(2);
        Ok((projection, sq, traj.exited()))
    })?;
    let proj: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let sq: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let m = replicates as f64;
    let net = &scenario.network;
    Ok(MartingaleReport {
        level,
        n: lattice.per_axis(),
        w: lattice.density(),
        t,
        rho,
        seed: master_seed,
        replicates,
        mean_projection: sorted_mean(&proj),
        projection_se: (sorted_variance(&proj) / m).sqrt(),
        mean_sq_norm: sorted_mean(&sq),
        sq_norm_se: (sorted_variance(&sq) / m).sqrt(),
        bound: martingale_bound(
            t,
            rho,
            lattice.density(),
            lattice.dimension(),
            scenario.species(),
            lattice.per_axis(),
            net.lambda_upper(),
            net.d_upper(),
        ),
        exit_fraction: samples.iter().filter(|s| s.2).count() as f64 / m,
    })
}

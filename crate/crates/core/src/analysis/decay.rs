use super::{AnalysisError, Scenario};
use crate::pde::{
    energy_series, fit_decay_rate, integrate, mass_series, max_relative_increase, norm_series, smallest_decay_rate,
    DecayFit,
};

/// Relative tolerance on monotonicity per step.
const MONOTONE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub level: usize,
    pub n: usize,
    pub equilibrium: Vec<f64>,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    pub masses: Vec<f64>,
    /// Fit of the L2 norm over the requested window.
    pub norm_fit: DecayFit,
    /// Fit of the relative energy over the requested window.
    pub energy_fit: DecayFit,
    pub energy_max_increase: f64,
    pub mass_max_increase: f64,
    /// Smallest eigenvalue of `-(L_N + R_N)`.
    pub generator_rate: f64,
}

impl DecayReport {
    pub fn energy_monotone(&self) -> bool {
        self.energy_max_increase <= MONOTONE_TOL
    }

    pub fn mass_monotone(&self) -> bool {
        self.mass_max_increase <= MONOTONE_TOL
    }

    /// `|alpha - mu| / mu` for the norm fit.
    pub fn relative_rate_error(&self) -> f64 {
        (self.norm_fit.alpha - self.generator_rate).abs() / self.generator_rate
    }
}

/// Deterministic decay of a weakly reversible `gamma * phi` network.
///
/// `window` holds the fit times; the solution is also sampled at `t = 0` so
/// the monotonicity checks start from the initial data.
pub fn decay_study(scenario: &Scenario, level: usize, window: &[f64]) -> Result<DecayReport, AnalysisError> {
    let net = &scenario.network;
    let factored = net
        .factored()
        .ok_or_else(|| AnalysisError::StructureMismatch("rates are not declared as gamma * phi".into()))?;
    if !net.is_weakly_reversible() {
        return Err(AnalysisError::StructureMismatch("network is not weakly reversible".into()));
    }
    let equilibrium = factored
        .generator
        .equilibrium()
        .map_err(|e| AnalysisError::StructureMismatch(e.to_string()))?;
    if window.len() < 3 {
        return Err(AnalysisError::InvalidScenario("decay fit needs at least 3 times".into()));
    }
    let mut times = window.to_vec();
    if times[0] > 0.0 {
        times.insert(0, 0.0);
    }
    let coef = scenario.coefficients(level)?;
    let sol = integrate(&scenario.initial_field(level)?, &coef, &times, scenario.dt, scenario.scheme)?;
    let norms = norm_series(&sol);
    let energies = energy_series(&sol, &equilibrium)?;
    let masses = mass_series(&sol);
    let skip = times.len() - window.len();
    let norm_fit = fit_decay_rate(&norms[skip..])?;
    let energy_fit = fit_decay_rate(&energies[skip..])?;
    let (generator_rate, _) = smallest_decay_rate(&coef)?;
    Ok(DecayReport {
        level,
        n: coef.lattice().per_axis(),
        equilibrium,
        times,
        norms: norms.iter().map(|p| p.1).collect(),
        energies: energies.iter().map(|p| p.1).collect(),
        masses: masses.iter().map(|p| p.1).collect(),
        norm_fit,
        energy_fit,
        energy_max_increase: max_relative_increase(&energies),
        mass_max_increase: max_relative_increase(&masses),
        generator_rate,
    })
}

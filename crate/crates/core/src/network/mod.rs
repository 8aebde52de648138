//! First-order reaction networks with spatially heterogeneous coefficients.
//!
//! Species `S_1..S_K` convert through `S_i -> S_j` at rate `lambda_ji(x)` and
//! diffuse with coefficient `D_i(x)`. Rate matrices follow the column
//! convention: entry `(to, from)` is the rate of `S_from -> S_to`, and the
//! diagonal is the negative column sum, so every column of the reaction
//! matrix sums to zero.

mod field;
mod generator;

use std::fmt;

use thiserror::Error;

pub use field::{FieldError, FieldShape, Smoothness, SpatialField, WeightedShape};
pub use generator::{is_strongly_connected, EquilibriumError, HomogeneousGenerator};
pub(crate) use field::{horner as horner_eval, region_index as field_region_index};

/// Default number of grid intervals per axis for sampled bound checks.
pub const DEFAULT_VALIDATION_GRID: usize = 64;

/// Identifies a coefficient field of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldId {
    Diffusion(usize),
    Rate { to: usize, from: usize },
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldId::Diffusion(l) => write!(f, "diffusion[{l}]"),
            FieldId::Rate { to, from } => write!(f, "rate[{from}->{to}]"),
        }
    }
}

/// One violated bound found while validating a network.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("{field}: {source}")]
    Field { field: FieldId, source: FieldError },
    #[error("diffusion of species {species} is {value} <= 0 at {point:?}")]
    NonPositiveDiffusion {
        species: usize,
        point: Vec<f64>,
        value: f64,
    },
    #[error("diffusion of species {species} is {value} outside [{lower}, {upper}] at {point:?}")]
    DiffusionOutOfBounds {
        species: usize,
        point: Vec<f64>,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("rate {from}->{to} is negative ({value}) at {point:?}")]
    NegativeRate {
        to: usize,
        from: usize,
        point: Vec<f64>,
        value: f64,
    },
    #[error("rate {from}->{to} = {value} exceeds the declared bound {bound} at {point:?}")]
    RateAboveBound {
        to: usize,
        from: usize,
        point: Vec<f64>,
        value: f64,
        bound: f64,
    },
    #[error("{0} is not finite")]
    UnboundedField(FieldId),
    #[error("declared bounds are inconsistent: {0}")]
    InconsistentBounds(String),
}

/// Every violation found on the validation grid.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("network validation failed: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

/// Rates of the form `lambda_ij(x) = gamma_ij * phi(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredRates {
    pub generator: HomogeneousGenerator,
    pub profile: SpatialField,
}

/// Unvalidated network description.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCandidate {
    pub dimension: usize,
    pub diffusion: Vec<SpatialField>,
    /// `rates[to][from]`; `None` for absent reactions. Diagonal entries must be `None`.
    pub rates: Vec<Vec<Option<SpatialField>>>,
    pub d_star: Option<f64>,
    pub d_upper: Option<f64>,
    pub lambda_upper: Option<f64>,
    pub factored: Option<FactoredRates>,
}

impl NetworkCandidate {
    pub fn new(dimension: usize, diffusion: Vec<SpatialField>) -> Self {
        let k = diffusion.len();
        Self {
            dimension,
            diffusion,
            rates: vec![vec![None; k]; k],
            d_star: None,
            d_upper: None,
            lambda_upper: None,
            factored: None,
        }
    }

    /// Sets the rate of `S_from -> S_to`.
    pub fn with_rate(mut self, from: usize, to: usize, field: SpatialField) -> Self {
        self.rates[to][from] = Some(field);
        self
    }

    /// Builds the rate matrix `gamma * phi`.
    pub fn with_factored_rates(mut self, generator: HomogeneousGenerator, profile: SpatialField) -> Self {
        let k = self.diffusion.len();
        for to in 0..k {
            for from in 0..k {
                self.rates[to][from] = if to != from && generator.rate(from, to) != 0.0 {
                    Some(profile.scaled(generator.rate(from, to)))
                } else {
                    None
                };
            }
        }
        self.factored = Some(FactoredRates {
            generator,
            profile,
        });
        self
    }

    pub fn with_bounds(mut self, d_star: f64, d_upper: f64, lambda_upper: f64) -> Self {
        self.d_star = Some(d_star);
        self.d_upper = Some(d_upper);
        self.lambda_upper = Some(lambda_upper);
        self
    }

    pub fn species(&self) -> usize {
        self.diffusion.len()
    }

    pub fn validate(self) -> Result<ReactionNetwork, ValidationReport> {
        validate_network(self, DEFAULT_VALIDATION_GRID)
    }
}

/// A validated network: all bounds hold on the validation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    dimension: usize,
    diffusion: Vec<SpatialField>,
    rates: Vec<SpatialField>,
    d_star: f64,
    d_upper: f64,
    lambda_upper: f64,
    factored: Option<FactoredRates>,
}

impl ReactionNetwork {
    pub fn species(&self) -> usize {
        self.diffusion.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn diffusion(&self, species: usize) -> &SpatialField {
        &self.diffusion[species]
    }

    /// Rate field of `S_from -> S_to` (zero field when absent or `from == to`).
    pub fn rate(&self, from: usize, to: usize) -> &SpatialField {
        &self.rates[to * self.species() + from]
    }

    pub fn d_star(&self) -> f64 {
        self.d_star
    }

    pub fn d_upper(&self) -> f64 {
        self.d_upper
    }

    pub fn lambda_upper(&self) -> f64 {
        self.lambda_upper
    }

    pub fn factored(&self) -> Option<&FactoredRates> {
        self.factored.as_ref()
    }

    /// Adjacency of the species graph: `adj[from][to]` when the rate is not identically zero.
    pub fn reaction_graph(&self) -> Vec<Vec<bool>> {
        let k = self.species();
        (0..k)
            .map(|from| {
                (0..k)
                    .map(|to| from != to && !self.rate(from, to).is_identically_zero())
                    .collect()
            })
            .collect()
    }

    pub fn is_weakly_reversible(&self) -> bool {
        is_strongly_connected(&self.reaction_graph())
    }
}

/// `lambda_ii(x) = -sum_{j != i} lambda_ji(x)`.
pub fn diagonal_rate_field(net: &ReactionNetwork, i: usize) -> SpatialField {
    let k = net.species();
    let terms: Vec<(f64, &SpatialField)> = (0..k)
        .filter(|&j| j != i)
        .map(|j| (-1.0, net.rate(i, j)))
        .collect();
    SpatialField::linear_combination(net.dimension(), &terms)
}

/// Checks a candidate network on a grid of `grid + 1` nodes per axis.
///
/// Undeclared bounds are filled from the sampled infimum/supremum. Declared
/// bounds are checked against every sample.
pub fn validate_network(
    candidate: NetworkCandidate,
    grid: usize,
) -> Result<ReactionNetwork, ValidationReport> {
    let k = candidate.species();
    let dim = candidate.dimension;
    let mut violations = Vec::new();

    if k == 0 {
        violations.push(Violation::InconsistentBounds("network has no species".into()));
        return Err(ValidationReport { violations });
    }
    if candidate.rates.len() != k || candidate.rates.iter().any(|r| r.len() != k) {
        violations.push(Violation::InconsistentBounds(format!(
            "rate matrix must be {k}x{k}"
        )));
        return Err(ValidationReport { violations });
    }

    let field_problem = |id: FieldId, f: &SpatialField| -> Option<Violation> {
        if f.dimension() != dim {
            Some(Violation::Field {
                field: id,
                source: FieldError::DimensionMismatch {
                    expected: dim,
                    found: f.dimension(),
                },
            })
        } else if !f.is_finite() {
            Some(Violation::UnboundedField(id))
        } else {
            None
        }
    };
    let mut fields_ok = true;
    for (l, d) in candidate.diffusion.iter().enumerate() {
        if let Some(v) = field_problem(FieldId::Diffusion(l), d) {
            violations.push(v);
            fields_ok = false;
        }
    }
    for to in 0..k {
        for from in 0..k {
            if let Some(f) = &candidate.rates[to][from] {
                let problem = if to == from {
                    Some(Violation::InconsistentBounds(format!(
                        "diagonal rate for species {to} is derived, not given"
                    )))
                } else {
                    field_problem(FieldId::Rate { to, from }, f)
                };
                if let Some(v) = problem {
                    violations.push(v);
                    fields_ok = false;
                }
            }
        }
    }
    if !fields_ok {
        return Err(ValidationReport { violations });
    }

    if let (Some(lo), Some(hi)) = (candidate.d_star, candidate.d_upper) {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            violations.push(Violation::InconsistentBounds(format!(
                "need 0 < D_star <= D_upper < inf, got [{lo}, {hi}]"
            )));
        }
    }

    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for (l, d) in candidate.diffusion.iter().enumerate() {
        let mut first_nonpos: Option<(Vec<f64>, f64)> = None;
        let mut first_out: Option<(Vec<f64>, f64)> = None;
        d.scan_grid(grid, |x, v| {
            if !v.is_finite() {
                return;
            }
            d_min = d_min.min(v);
            d_max = d_max.max(v);
            if v <= 0.0 && first_nonpos.is_none() {
                first_nonpos = Some((x.to_vec(), v));
            }
            let lo = candidate.d_star.unwrap_or(f64::NEG_INFINITY);
            let hi = candidate.d_upper.unwrap_or(f64::INFINITY);
            if (v < lo || v > hi) && first_out.is_none() {
                first_out = Some((x.to_vec(), v));
            }
        });
        if let Some((point, value)) = first_nonpos {
            violations.push(Violation::NonPositiveDiffusion {
                species: l,
                point,
                value,
            });
        } else if let Some((point, value)) = first_out {
            violations.push(Violation::DiffusionOutOfBounds {
                species: l,
                point,
                value,
                lower: candidate.d_star.unwrap_or(f64::NEG_INFINITY),
                upper: candidate.d_upper.unwrap_or(f64::INFINITY),
            });
        }
    }

    let mut lambda_max: f64 = 0.0;
    for to in 0..k {
        for from in 0..k {
            let Some(f) = &candidate.rates[to][from] else {
                continue;
            };
            let mut negative: Option<(Vec<f64>, f64)> = None;
            let mut above: Option<(Vec<f64>, f64)> = None;
            f.scan_grid(grid, |x, v| {
                lambda_max = lambda_max.max(v.abs());
                if v < 0.0 && negative.is_none() {
                    negative = Some((x.to_vec(), v));
                }
                if let Some(bound) = candidate.lambda_upper {
                    if v.abs() > bound && above.is_none() {
                        above = Some((x.to_vec(), v));
                    }
                }
            });
            if let Some((point, value)) = negative {
                violations.push(Violation::NegativeRate {
                    to,
                    from,
                    point,
                    value,
                });
            }
            if let Some((point, value)) = above {
                violations.push(Violation::RateAboveBound {
                    to,
                    from,
                    point,
                    value,
                    bound: candidate.lambda_upper.unwrap_or(f64::NAN),
                });
            }
        }
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    let rates = (0..k * k)
        .map(|idx| {
            let (to, from) = (idx / k, idx % k);
            candidate.rates[to][from]
                .clone()
                .unwrap_or_else(|| SpatialField::zero(dim))
        })
        .collect();

    Ok(ReactionNetwork {
        dimension: dim,
        diffusion: candidate.diffusion,
        rates,
        d_star: candidate.d_star.unwrap_or(d_min),
        d_upper: candidate.d_upper.unwrap_or(d_max),
        lambda_upper: candidate.lambda_upper.unwrap_or(lambda_max),
        factored: candidate.factored,
    })
}

//! Scenario files: TOML schema, defaults, validation and the resolved echo.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use hetrdme_core::analysis::{
    make_schedule, ConvergenceSettings, DecaySettings, DeltaRule, MartingaleSettings, ScalingSchedule, Scenario, WRule,
};
use hetrdme_core::discretization::GhostCoefficient;
use hetrdme_core::network::{
    FieldError, FieldId, FieldShape, HomogeneousGenerator, NetworkCandidate, ReactionNetwork, Smoothness, SpatialField,
    Violation,
};
use hetrdme_core::pde::Scheme;
use hetrdme_core::rdme::{InitialMode, RateConvention};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Either a number or the keyword `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoValue {
    Value(f64),
    Keyword(Auto),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

impl AutoValue {
    fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Keyword(_) => None,
        }
    }
}

impl Default for AutoValue {
    fn default() -> Self {
        Self::Keyword(Auto::Auto)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub d_star: f64,
    pub d_upper: f64,
    pub lambda_upper: f64,
}

/// One reaction channel `from -> to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub from: String,
    pub to: String,
    /// Constant rate, or the factor `gamma` when a profile is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Spatially varying rate (not allowed together with a profile).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldShape>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionsSpec {
    /// Common spatial factor `phi`; defaults to 1 when every channel is a
    /// plain number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<FieldShape>,
    #[serde(default)]
    pub channel: Vec<ChannelSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Explicit `[N, w]` pairs; overrides the generated schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<(usize, f64)>>,
    #[serde(default = "default_base_n")]
    pub base_n: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    /// `w = N^w_power`.
    #[serde(default = "default_w_power")]
    pub w_power: f64,
}

fn default_base_n() -> usize {
    8
}
fn default_count() -> usize {
    3
}
fn default_w_power() -> f64 {
    3.0
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            levels: None,
            base_n: default_base_n(),
            count: default_count(),
            w_power: default_w_power(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub t_end: f64,
    pub record_dt: f64,
    pub rho: AutoValue,
    pub rate_convention: RateConvention,
    pub ghost_coeff: GhostCoefficient,
    pub initial_mode: InitialMode,
    pub scheme: Scheme,
    pub dt: AutoValue,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            t_end: 0.2,
            record_dt: 0.01,
            rho: AutoValue::default(),
            rate_convention: RateConvention::default(),
            ghost_coeff: GhostCoefficient::default(),
            initial_mode: InitialMode::default(),
            scheme: Scheme::default(),
            dt: AutoValue::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSpec {
    pub checkpoints: Vec<f64>,
    pub replicates: usize,
    /// Thresholds as a fraction of the level-0 median distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_fraction: Option<f64>,
    /// Fixed thresholds; exclusive with `delta_fraction`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        let d = ConvergenceSettings::default();
        Self {
            checkpoints: d.checkpoints,
            replicates: d.replicates,
            delta_fraction: None,
            deltas: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MartingaleSpec {
    pub level: usize,
    pub t: f64,
    pub replicates: usize,
}

impl Default for MartingaleSpec {
    fn default() -> Self {
        let d = MartingaleSettings::default();
        Self {
            level: d.level,
            t: d.t,
            replicates: d.replicates,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySpec {
    pub level: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

impl Default for DecaySpec {
    fn default() -> Self {
        let d = DecaySettings::default();
        Self {
            level: d.level,
            t_start: d.t_start,
            t_end: d.t_end,
            points: d.points,
        }
    }
}

/// The on-disk scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub dimension: usize,
    pub species: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Diffusion coefficient per species.
    pub diffusion: Vec<FieldShape>,
    /// Initial concentration per species.
    pub initial: Vec<FieldShape>,
    #[serde(default)]
    pub reactions: ReactionsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub martingale: MartingaleSpec,
    #[serde(default)]
    pub decay: DecaySpec,
}

/// A parsed scenario with its resolved echo.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// The file with every default written out.
    pub resolved: ScenarioFile,
}

impl LoadedScenario {
    /// Canonical TOML of the resolved scenario.
    pub fn echo(&self) -> String {
        toml::to_string(&self.resolved).expect("scenario serializes")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.master_seed = seed;
        self.resolved.seed = seed;
    }

    /// SHA-256 of [`Self::echo`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_scenario(path: &Path) -> Result<LoadedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<LoadedScenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    resolve(file)
}

fn field(dimension: usize, shape: &FieldShape, name: &str) -> Result<SpatialField, ScenarioError> {
    match SpatialField::new(dimension, shape.clone(), Smoothness::C1) {
        Err(FieldError::NotSmooth) => SpatialField::new(dimension, shape.clone(), Smoothness::LInfinity),
        other => other,
    }
    .map_err(|e| invalid(name, e.to_string()))
}

fn violation_field(v: &Violation, names: &[String]) -> String {
    let id = match v {
        Violation::Field { field, .. } | Violation::UnboundedField(field) => *field,
        Violation::NonPositiveDiffusion { species, .. } | Violation::DiffusionOutOfBounds { species, .. } => {
            FieldId::Diffusion(*species)
        }
        Violation::NegativeRate { to, from, .. } | Violation::RateAboveBound { to, from, .. } => {
            FieldId::Rate { to: *to, from: *from }
        }
        Violation::InconsistentBounds(_) => return "bounds".into(),
    };
    match id {
        FieldId::Diffusion(l) => format!("diffusion[{l}] ({})", names[l]),
        FieldId::Rate { to, from } => format!("reactions.channel {} -> {}", names[from], names[to]),
    }
}

fn build_network(file: &ScenarioFile) -> Result<ReactionNetwork, ScenarioError> {
    let dim = file.dimension;
    let k = file.species.len();
    let diffusion = file
        .diffusion
        .iter()
        .enumerate()
        .map(|(l, s)| field(dim, s, &format!("diffusion[{l}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut candidate = NetworkCandidate::new(dim, diffusion);
    let index = |name: &str, what: &str| {
        file.species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| invalid(format!("reactions.channel.{what}"), format!("unknown species `{name}`")))
    };
    let reactions = &file.reactions;
    let mut gamma = vec![vec![0.0; k]; k];
    let mut seen = vec![vec![false; k]; k];
    let factored = reactions.channel.iter().all(|c| c.field.is_none());
    for c in &reactions.channel {
        let (from, to) = (index(&c.from, "from")?, index(&c.to, "to")?);
        let name = format!("reactions.channel {} -> {}", c.from, c.to);
        if from == to {
            return Err(invalid(name, "a species cannot convert into itself"));
        }
        if seen[to][from] {
            return Err(invalid(name, "channel listed twice"));
        }
        seen[to][from] = true;
        match (c.rate, &c.field) {
            (Some(r), None) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(invalid(format!("{name}.rate"), format!("must be finite and >= 0, got {r}")));
                }
                gamma[to][from] = r;
            }
            (None, Some(shape)) => {
                if reactions.profile.is_some() {
                    return Err(invalid(name, "a spatial `field` cannot be combined with `reactions.profile`"));
                }
                candidate = candidate.with_rate(from, to, field(dim, shape, &name)?);
            }
            _ => return Err(invalid(name, "give exactly one of `rate` or `field`")),
        }
    }
    if factored {
        let generator = HomogeneousGenerator::new(gamma).map_err(|e| invalid("reactions.channel", e.to_string()))?;
        let profile = match &reactions.profile {
            Some(p) => field(dim, p, "reactions.profile")?,
            None => SpatialField::constant(dim, 1.0),
        };
        candidate = candidate.with_factored_rates(generator, profile);
    } else {
        for c in reactions.channel.iter().filter(|c| c.rate.is_some()) {
            let (from, to) = (index(&c.from, "from")?, index(&c.to, "to")?);
            candidate = candidate.with_rate(from, to, SpatialField::constant(dim, c.rate.unwrap()));
        }
    }
    if let Some(b) = &file.bounds {
        candidate = candidate.with_bounds(b.d_star, b.d_upper, b.lambda_upper);
    }
    candidate.validate().map_err(|report| {
        let first = &report.violations[0];
        ScenarioError::Validation {
            field: violation_field(first, &file.species),
            message: report.to_string(),
        }
    })
}

/// Validates a parsed file, fills every default and builds the core scenario.
pub fn resolve(mut file: ScenarioFile) -> Result<LoadedScenario, ScenarioError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    if file.dimension == 0 {
        return Err(invalid("dimension", "must be at least 1"));
    }
    let k = file.species.len();
    if k == 0 {
        return Err(invalid("species", "at least one species is required"));
    }
    for (i, s) in file.species.iter().enumerate() {
        if s.is_empty() || file.species[..i].contains(s) {
            return Err(invalid("species", format!("names must be non-empty and unique, got `{s}`")));
        }
    }
    if file.diffusion.len() != k {
        return Err(invalid("diffusion", format!("{} entries for {k} species", file.diffusion.len())));
    }
    if file.initial.len() != k {
        return Err(invalid("initial", format!("{} entries for {k} species", file.initial.len())));
    }
    let network = build_network(&file)?;
    let initial = file
        .initial
        .iter()
        .enumerate()
        .map(|(l, s)| field(file.dimension, s, &format!("initial[{l}]")))
        .collect::<Result<Vec<_>, _>>()?;

    let schedule = match &file.schedule.levels {
        Some(levels) => ScalingSchedule::new(file.dimension, levels.clone()),
        None => make_schedule(
            file.schedule.base_n,
            file.schedule.count,
            file.dimension,
            &WRule::Power(file.schedule.w_power),
        ),
    }
    .map_err(|e| invalid("schedule", e.to_string()))?;

    let sim = &file.simulation;
    let delta = match (file.convergence.delta_fraction, &file.convergence.deltas) {
        (Some(_), Some(_)) => {
            return Err(invalid("convergence", "give either `delta_fraction` or `deltas`, not both"));
        }
        (_, Some(d)) => DeltaRule::Explicit(d.clone()),
        (f, None) => DeltaRule::MedianFraction(f.unwrap_or(0.5)),
    };

    // materialize every default in the echo
    if let DeltaRule::MedianFraction(f) = delta {
        file.convergence.delta_fraction = Some(f);
    }
    file.schedule.levels = Some(schedule.levels().to_vec());
    file.bounds = Some(BoundsSpec {
        d_star: network.d_star(),
        d_upper: network.d_upper(),
        lambda_upper: network.lambda_upper(),
    });
    if network.factored().is_some() && file.reactions.profile.is_none() && !file.reactions.channel.is_empty() {
        file.reactions.profile = Some(FieldShape::Constant { value: 1.0 });
    }

    let scenario = Scenario {
        name: file.name.clone(),
        species_names: file.species.clone(),
        network,
        initial,
        schedule,
        t_end: sim.t_end,
        record_dt: sim.record_dt,
        master_seed: file.seed,
        rho: sim.rho.value(),
        ghost: sim.ghost_coeff,
        convention: sim.rate_convention,
        initial_mode: sim.initial_mode,
        scheme: sim.scheme,
        dt: sim.dt.value(),
        convergence: ConvergenceSettings {
            checkpoints: file.convergence.checkpoints.clone(),
            replicates: file.convergence.replicates,
            delta,
        },
        martingale: MartingaleSettings {
            level: file.martingale.level,
            t: file.martingale.t,
            replicates: file.martingale.replicates,
        },
        decay: DecaySettings {
            level: file.decay.level,
            t_start: file.decay.t_start,
            t_end: file.decay.t_end,
            points: file.decay.points,
        },
    };
    scenario.validate().map_err(|e| invalid("simulation", e.to_string()))?;
    Ok(LoadedScenario {
        scenario,
        resolved: file,
    })
}

//! Seeded Monte Carlo experiments.
//!
//! Trial `t` of an experiment draws its channel and optimizer randomness from
//! independent streams keyed by `(master_seed, t)`, so every configuration
//! sharing a master seed and channel model sees the same realizations and
//! results do not depend on the worker count.

mod output;
mod suites;
mod training;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_fully, bound_group, bound_single};
use crate::channels::{normalize, ChannelGenerator, ChannelModel, ChannelModelConfig, Polarization};
use crate::codebook::{phase_codebook, Codebook, PhaseCodebook, ScalarCodebook};
use crate::grouping::{correlated_grouping, optimal_grouping_from, rho, uncorrelated_grouping, GroupingStrategy};
use crate::netmodel::{ChannelRealization, DEFAULT_Z0};
use crate::optimize::{
    alignment_eta, optimize_group_continuous, optimize_group_scalar_discrete, optimize_group_vector_prepared,
    optimize_single_discrete, AoOptions, Configuration, ContinuousOptions, OptimizeResult, PreparedVectorCodebook,
    DEFAULT_MAX_SWEEPS,
};
use crate::rng::{stream, trial_seed, Purpose};
use crate::{Error, Result};

pub use output::{read_rows, write_csv, CSV_HEADER};
pub use suites::{experiment_suite, SUITES};
pub use training::{train_codebook, TrainingOptions};

/// Slack allowed between a trial's power and its architecture's bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Single,
    Group,
    Fully,
}

/// Value set of the surface's tunable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Discretization {
    Continuous,
    /// Uniform phases with the given bits (single connected only).
    Phase(u32),
    /// Symmetric scalar reactance codebook with the given bits per entry.
    Scalar(u32),
    /// Block codebook with the given bits per block.
    Vector(u32),
}

impl Discretization {
    pub fn needs_codebook(self) -> bool {
        matches!(self, Discretization::Scalar(_) | Discretization::Vector(_))
    }

    /// Short tag used in identifiers, e.g. `scalar3`.
    pub fn tag(self) -> String {
        match self {
            Discretization::Continuous => "cont".into(),
            Discretization::Phase(b) => format!("phase{b}"),
            Discretization::Scalar(b) => format!("scalar{b}"),
            Discretization::Vector(b) => format!("vector{b}"),
        }
    }
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discretization::Continuous => f.write_str("continuous"),
            Discretization::Phase(b) => write!(f, "phase:{b}"),
            Discretization::Scalar(b) => write!(f, "scalar:{b}"),
            Discretization::Vector(b) => write!(f, "vector:{b}"),
        }
    }
}

impl FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "continuous" {
            return Ok(Discretization::Continuous);
        }
        let (kind, bits) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("discretization {s:?} is not continuous, phase:B, scalar:B or vector:B")))?;
        let bits: u32 = bits
            .parse()
            .map_err(|_| Error::Parse(format!("bad resolution in discretization {s:?}")))?;
        if bits == 0 {
            return Err(Error::Parse("resolution must be at least one bit".into()));
        }
        match kind {
            "phase" => Ok(Discretization::Phase(bits)),
            "scalar" => Ok(Discretization::Scalar(bits)),
            "vector" => Ok(Discretization::Vector(bits)),
            _ => Err(Error::Parse(format!("unknown discretization kind {kind:?}"))),
        }
    }
}

impl TryFrom<String> for Discretization {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Discretization> for String {
    fn from(d: Discretization) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GroupingChoice {
    Correlated,
    Uncorrelated,
    /// Re-optimized for every realization, starting from uncorrelated grouping.
    Optimal,
    Explicit(GroupingStrategy),
}

impl GroupingChoice {
    pub fn tag(&self) -> String {
        match self {
            GroupingChoice::Correlated => "cg".into(),
            GroupingChoice::Uncorrelated => "ug".into(),
            GroupingChoice::Optimal => "og".into(),
            GroupingChoice::Explicit(g) => format!("ex{}", g.assignment().iter().map(|a| a.to_string()).collect::<String>()),
        }
    }
}

impl fmt::Display for GroupingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupingChoice::Correlated => f.write_str("correlated"),
            GroupingChoice::Uncorrelated => f.write_str("uncorrelated"),
            GroupingChoice::Optimal => f.write_str("optimal"),
            GroupingChoice::Explicit(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for GroupingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "correlated" | "cg" => Ok(GroupingChoice::Correlated),
            "uncorrelated" | "ug" => Ok(GroupingChoice::Uncorrelated),
            "optimal" | "og" => Ok(GroupingChoice::Optimal),
            other => other.parse().map(GroupingChoice::Explicit),
        }
    }
}

impl TryFrom<String> for GroupingChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupingChoice> for String {
    fn from(g: GroupingChoice) -> String {
        g.to_string()
    }
}

fn default_suite() -> String {
    "custom".into()
}
fn default_z0() -> f64 {
    DEFAULT_Z0
}
fn default_grouping() -> GroupingChoice {
    GroupingChoice::Uncorrelated
}
fn default_trials() -> usize {
    200
}
fn default_sweeps() -> usize {
    DEFAULT_MAX_SWEEPS
}

/// One experiment: a surface design evaluated over seeded channel draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_suite")]
    pub suite: String,
    #[serde(default = "default_z0")]
    pub z0: f64,
    pub channel: ChannelModelConfig,
    pub architecture: Architecture,
    pub n_g: usize,
    #[serde(default = "default_grouping")]
    pub grouping: GroupingChoice,
    pub discretization: Discretization,
    #[serde(default)]
    pub codebook_path: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Report raw power including the removed large-scale factors.
    #[serde(default)]
    pub include_pathloss: bool,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

impl SimConfig {
    pub fn new(channel: ChannelModelConfig, architecture: Architecture, n_g: usize, discretization: Discretization) -> Self {
        Self {
            suite: default_suite(),
            z0: DEFAULT_Z0,
            channel,
            architecture,
            n_g,
            grouping: default_grouping(),
            discretization,
            codebook_path: None,
            trials: default_trials(),
            master_seed: 0,
            include_pathloss: false,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let n_i = self.channel.n_i;
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(Error::invalid(format!("characteristic impedance must be positive, got {}", self.z0)));
        }
        if self.n_g == 0 || !n_i.is_multiple_of(self.n_g) {
            return Err(Error::invalid(format!("group size {} must divide n_i = {n_i}", self.n_g)));
        }
        match self.architecture {
            Architecture::Single if self.n_g != 1 => return Err(Error::invalid("single connected surfaces have n_g = 1")),
            Architecture::Fully if self.n_g != n_i => return Err(Error::invalid("fully connected surfaces have n_g = n_i")),
            _ => {}
        }
        if matches!(self.discretization, Discretization::Phase(_)) && self.architecture != Architecture::Single {
            return Err(Error::invalid("phase codebooks only apply to single connected surfaces"));
        }
        if let GroupingChoice::Explicit(g) = &self.grouping {
            if g.n_i() != n_i || g.n_g() != self.n_g {
                return Err(Error::invalid(format!("explicit grouping {g} does not match n_i = {n_i}, n_g = {}", self.n_g)));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }

    fn channel_tag(&self) -> String {
        let model = match self.channel.model {
            ChannelModel::IidRayleigh => "iid",
            ChannelModel::Correlated => "corr",
        };
        let pol = match self.channel.polarization {
            Polarization::Uni => "up",
            Polarization::Dual => "dp",
        };
        format!("{model}-{pol}-ni{}-ng{}-{}", self.channel.n_i, self.n_g, self.grouping.tag())
    }

    /// Identifier of the configuration, e.g. `iid-up-ni16-ng2-ug-scalar1`.
    pub fn config_id(&self) -> String {
        let mut id = format!("{}-{}", self.channel_tag(), self.discretization.tag());
        if self.include_pathloss {
            id.push_str("-pl");
        }
        id
    }

    /// File name under which the learned codebook of this configuration is stored.
    pub fn codebook_name(&self) -> Option<String> {
        self.discretization
            .needs_codebook()
            .then(|| format!("{}-{}.json", self.channel_tag(), self.discretization.tag()))
    }

    /// Total configuration bits of the surface.
    pub fn bits_total(&self) -> u64 {
        let n_i = self.channel.n_i as u64;
        let n_g = self.n_g as u64;
        let groups = n_i / n_g;
        match self.discretization {
            Discretization::Continuous => 0,
            Discretization::Phase(b) => n_i * b as u64,
            Discretization::Scalar(b) => groups * n_g * (n_g + 1) / 2 * b as u64,
            Discretization::Vector(b) => groups * b as u64,
        }
    }

    /// Normalization to `‖h‖² = N_I` applies to the correlated model, whose
    /// realizations carry large-scale factors.
    pub fn normalizes(&self) -> bool {
        self.channel.model == ChannelModel::Correlated
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Vec<SimConfig>,
}

/// Parses a TOML config file holding an `[[experiment]]` array of configurations.
pub fn parse_config(text: &str) -> Result<Vec<SimConfig>> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    for c in &file.experiment {
        c.validate()?;
    }
    Ok(file.experiment)
}

/// One trial's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub suite: String,
    pub config_id: String,
    pub n_i: usize,
    pub n_g: usize,
    pub grouping: String,
    pub discretization: String,
    pub bits_total: u64,
    pub trial: usize,
    pub seed: u64,
    pub power: f64,
    pub bound_single: f64,
    pub bound_group: f64,
    pub bound_fully: f64,
    pub rho: f64,
    pub eta: f64,
    pub iterations: usize,
    pub search_evals: u64,
    pub wall_ms: f64,
}

impl ResultRow {
    /// Bound of the architecture this row was optimized for.
    pub fn matching_bound(&self, architecture: Architecture) -> f64 {
        match architecture {
            Architecture::Single => self.bound_single,
            Architecture::Group => self.bound_group,
            Architecture::Fully => self.bound_fully,
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            0.0
        } else {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { n, mean, std_err }
    }
}

/// Summary metrics, in output order.
pub const SUMMARY_METRICS: [&str; 8] = [
    "power",
    "bound_single",
    "bound_group",
    "bound_fully",
    "rho",
    "eta",
    "iterations",
    "search_evals",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: SimConfig,
    pub rows: Vec<ResultRow>,
    /// Diagnostics of trials dropped for violating an invariant.
    pub violations: Vec<String>,
}

impl ExperimentOutput {
    pub fn metric(&self, name: &str) -> Stat {
        let pick = |r: &ResultRow| -> f64 {
            match name {
                "power" => r.power,
                "bound_single" => r.bound_single,
                "bound_group" => r.bound_group,
                "bound_fully" => r.bound_fully,
                "rho" => r.rho,
                "eta" => r.eta,
                "iterations" => r.iterations as f64,
                "search_evals" => r.search_evals as f64,
                _ => f64::NAN,
            }
        };
        Stat::of(self.rows.iter().map(pick))
    }

    pub fn summary(&self) -> Vec<(&'static str, Stat)> {
        SUMMARY_METRICS.iter().map(|&m| (m, self.metric(m))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record per-trial wall time; disabled runs write `wall_ms = 0` so output is reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_timing: true }
    }
}

/// Sizes the global worker pool from `BDRIS_THREADS` once per process.
pub fn configure_threads() {
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Some(n) = std::env::var("BDRIS_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            // A pool that already exists keeps its size.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    });
}

enum Solver {
    Phase(PhaseCodebook),
    Scalar(ScalarCodebook),
    Vector(PreparedVectorCodebook),
    Continuous,
}

fn prepare_solver(config: &SimConfig, codebook: Option<&Codebook>) -> Result<Solver> {
    let missing = || Error::MissingCodebook(config.codebook_path.clone().unwrap_or_else(|| config.codebook_name().unwrap_or_default().into()));
    let check_z0 = |z0: f64| {
        if z0 != config.z0 {
            Err(Error::invalid(format!("codebook was learned for Z0 = {z0}, experiment uses {}", config.z0)))
        } else {
            Ok(())
        }
    };
    match config.discretization {
        Discretization::Continuous => Ok(Solver::Continuous),
        Discretization::Phase(b) => Ok(Solver::Phase(phase_codebook(b)?)),
        Discretization::Scalar(b) => match codebook.ok_or_else(missing)? {
            Codebook::Scalar(cb) if cb.bits() == b && cb.n_g() == config.n_g => {
                check_z0(cb.provenance().z0)?;
                Ok(Solver::Scalar(cb.clone()))
            }
            _ => Err(Error::invalid(format!("codebook does not hold {b}-bit scalar values for n_g = {}", config.n_g))),
        },
        Discretization::Vector(b) => match codebook.ok_or_else(missing)? {
            Codebook::Vector(cb) if cb.bits() == b && cb.n_g() == config.n_g => {
                check_z0(cb.provenance().z0)?;
                Ok(Solver::Vector(PreparedVectorCodebook::new(cb, config.z0)?))
            }
            _ => Err(Error::invalid(format!("codebook does not hold {b}-bit blocks for n_g = {}", config.n_g))),
        },
    }
}

/// Grouping used for one realization.
pub fn resolve_grouping(config: &SimConfig, ch: &ChannelRealization) -> Result<GroupingStrategy> {
    let n_i = config.channel.n_i;
    let pol = config.channel.polarization;
    match &config.grouping {
        _ if config.n_g == 1 => GroupingStrategy::singletons(n_i),
        _ if config.n_g == n_i => GroupingStrategy::single_group(n_i),
        GroupingChoice::Correlated => correlated_grouping(n_i, config.n_g, pol),
        GroupingChoice::Uncorrelated => uncorrelated_grouping(n_i, config.n_g, pol),
        GroupingChoice::Optimal => optimal_grouping_from(ch, &uncorrelated_grouping(n_i, config.n_g, pol)?),
        GroupingChoice::Explicit(g) => Ok(g.clone()),
    }
}

/// Channel of trial `trial`, normalized when the model calls for it.
pub fn trial_channel(
    config: &SimConfig,
    generator: &ChannelGenerator,
    seed: u64,
) -> Result<(ChannelRealization, f64)> {
    let raw = generator.generate(&mut stream(seed, Purpose::Channel));
    if config.normalizes() {
        let (ch, factors) = normalize(&raw)?;
        Ok((ch, factors.power_scale()))
    } else {
        Ok((raw, 1.0))
    }
}

fn solve(config: &SimConfig, solver: &Solver, ch: &ChannelRealization, grouping: &GroupingStrategy, seed: u64) -> Result<OptimizeResult> {
    let mut rng = stream(seed, Purpose::Optimizer);
    let ao = AoOptions {
        max_sweeps: config.max_sweeps,
        z0: config.z0,
    };
    match solver {
        Solver::Phase(cb) => optimize_single_discrete(ch, cb, config.max_sweeps),
        Solver::Scalar(cb) => optimize_group_scalar_discrete(ch, grouping, cb, &ao, &mut rng),
        Solver::Vector(cb) => optimize_group_vector_prepared(ch, grouping, cb, &ao, &mut rng),
        Solver::Continuous if grouping.n_g() == 1 => {
            // Co-phasing every element is the exact single connected optimum.
            let phases: Vec<f64> = ch
                .h_ri()
                .iter()
                .zip(ch.h_it())
                .map(|(a, b)| (-(a * b).arg()).rem_euclid(std::f64::consts::TAU))
                .collect();
            co_phased(ch, phases)
        }
        Solver::Continuous => {
            let opts = ContinuousOptions {
                z0: config.z0,
                ..ContinuousOptions::default()
            };
            optimize_group_continuous(ch, grouping, &opts, &mut rng)
        }
    }
}

enum TrialOutcome {
    Row(ResultRow),
    Violation(String),
}

fn run_trial(config: &SimConfig, generator: &ChannelGenerator, solver: &Solver, trial: usize, opts: &RunOptions) -> Result<TrialOutcome> {
    let started = Instant::now();
    let seed = trial_seed(config.master_seed, trial as u64);
    let (ch, scale) = trial_channel(config, generator, seed)?;
    let grouping = resolve_grouping(config, &ch)?;
    let result = solve(config, solver, &ch, &grouping, seed)?;
    let theta = result.configuration.scattering(config.z0)?;
    let (sym, uni) = (theta.symmetry_error(), theta.unitarity_error());
    let eta = alignment_eta(&ch, &theta)?;
    let scale = if config.include_pathloss { scale } else { 1.0 };
    let row = ResultRow {
        suite: config.suite.clone(),
        config_id: config.config_id(),
        n_i: config.channel.n_i,
        n_g: config.n_g,
        grouping: config.grouping.to_string(),
        discretization: config.discretization.to_string(),
        bits_total: config.bits_total(),
        trial,
        seed,
        power: result.power * scale,
        bound_single: bound_single(&ch) * scale,
        bound_group: bound_group(&ch, &grouping)? * scale,
        bound_fully: bound_fully(&ch) * scale,
        rho: rho(&ch, &grouping)?,
        eta,
        iterations: result.iterations,
        search_evals: result.search_evaluations,
        wall_ms: if opts.record_timing {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        },
    };
    let bound = row.matching_bound(config.architecture);
    if !(sym <= 1e-12 && uni <= 1e-10) {
        return Ok(TrialOutcome::Violation(format!(
            "{} trial {trial}: scattering matrix symmetry error {sym:e}, unitarity error {uni:e}",
            row.config_id
        )));
    }
    if !(row.power <= bound * (1.0 + BOUND_SLACK) + 1e-300) {
        return Ok(TrialOutcome::Violation(format!(
            "{} trial {trial}: power {} exceeds bound {bound}",
            row.config_id, row.power
        )));
    }
    if result.objective_trace.windows(2).any(|w| w[1] < w[0]) {
        return Ok(TrialOutcome::Violation(format!("{} trial {trial}: objective trace decreased", row.config_id)));
    }
    Ok(TrialOutcome::Row(row))
}

/// Runs an experiment, loading its codebook from `codebook_path` when needed.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentOutput> {
    let codebook = match (&config.codebook_path, config.discretization.needs_codebook()) {
        (Some(path), true) => Some(Codebook::load(path)?),
        _ => None,
    };
    run_experiment_with(config, codebook.as_ref(), &RunOptions::default())
}

/// Runs an experiment with an already loaded codebook.
pub fn run_experiment_with(config: &SimConfig, codebook: Option<&Codebook>, opts: &RunOptions) -> Result<ExperimentOutput> {
    config.validate()?;
    configure_threads();
    let solver = prepare_solver(config, codebook)?;
    let generator = ChannelGenerator::new(config.channel.clone())?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, &generator, &solver, t, opts))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut violations = Vec::new();
    for o in outcomes {
        match o {
            TrialOutcome::Row(r) => rows.push(r),
            TrialOutcome::Violation(v) => violations.push(v),
        }
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        rows,
        violations,
    })
}

fn co_phased(ch: &ChannelRealization, phases: Vec<f64>) -> Result<OptimizeResult> {
    let mut r = OptimizeResult::finish(ch, Configuration::Phases(phases), 1.0, 0, Vec::new(), 0)?;
    r.objective_trace.push(r.power);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(disc: Discretization, arch: Architecture, n_i: usize, n_g: usize) -> SimConfig {
        SimConfig::new(ChannelModelConfig::new(n_i, ChannelModel::IidRayleigh, Polarization::Uni), arch, n_g, disc)
    }

    #[test]
    fn discretization_text() {
        for s in ["continuous", "phase:4", "scalar:1", "vector:9"] {
            assert_eq!(s.parse::<Discretization>().unwrap().to_string(), s);
        }
        assert!("scalar:0".parse::<Discretization>().is_err());
        assert!("bogus:2".parse::<Discretization>().is_err());
        assert_eq!("og".parse::<GroupingChoice>().unwrap(), GroupingChoice::Optimal);
        assert!(matches!("0,1,0,1".parse::<GroupingChoice>().unwrap(), GroupingChoice::Explicit(_)));
    }

    #[test]
    fn validation_and_ids() {
        assert!(cfg(Discretization::Phase(1), Architecture::Group, 8, 2).validate().is_err());
        assert!(cfg(Discretization::Continuous, Architecture::Fully, 8, 4).validate().is_err());
        assert!(cfg(Discretization::Continuous, Architecture::Single, 8, 2).validate().is_err());
        assert!(cfg(Discretization::Continuous, Architecture::Group, 8, 3).validate().is_err());
        let c = cfg(Discretization::Scalar(1), Architecture::Group, 16, 2);
        c.validate().unwrap();
        assert_eq!(c.config_id(), "iid-up-ni16-ng2-ug-scalar1");
        assert_eq!(c.codebook_name().unwrap(), "iid-up-ni16-ng2-ug-scalar1.json");
        assert_eq!(c.bits_total(), 8 * 3);
        assert_eq!(cfg(Discretization::Phase(4), Architecture::Single, 16, 1).bits_total(), 64);
        assert_eq!(cfg(Discretization::Vector(9), Architecture::Group, 16, 2).bits_total(), 72);
    }

    #[test]
    fn config_file() {
        let text = r#"
            [[experiment]]
            architecture = "group"
            n_g = 2
            grouping = "0,1,0,1"
            discretization = "scalar:1"
            codebook_path = "cb.json"
            trials = 10
            master_seed = 7
            [experiment.channel]
            n_i = 4
            model = "correlated"

            [[experiment]]
            architecture = "fully"
            n_g = 4
            discretization = "continuous"
            [experiment.channel]
            n_i = 4
            model = "iid_rayleigh"
            polarization = "dual"
        "#;
        let cs = parse_config(text).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].grouping.tag(), "ex0101");
        assert_eq!(cs[0].z0, DEFAULT_Z0);
        assert_eq!(cs[1].trials, 200);
        assert_eq!(cs[1].channel.polarization, Polarization::Dual);
        assert!(parse_config("[[experiment]]\nbogus = 1").is_err());
        assert!(parse_config(&text.replace("n_g = 4", "n_g = 2")).is_err());
    }

    #[test]
    fn stats() {
        let s = Stat::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of([7.0]).std_err, 0.0);
        assert!(Stat::of(std::iter::empty()).mean.is_nan());
    }

    #[test]
    fn zero_trials_is_empty() {
        let mut c = cfg(Discretization::Continuous, Architecture::Fully, 4, 4);
        c.trials = 0;
        let out = run_experiment(&c).unwrap();
        assert!(out.rows.is_empty() && out.violations.is_empty());
    }

    #[test]
    fn missing_codebook_is_reported() {
        let mut c = cfg(Discretization::Scalar(1), Architecture::Group, 4, 2);
        assert!(matches!(run_experiment(&c), Err(Error::MissingCodebook(_))));
        c.codebook_path = Some("/nonexistent/cb.json".into());
        assert!(matches!(run_experiment(&c), Err(Error::MissingCodebook(_))));
    }
}

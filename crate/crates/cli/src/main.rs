//! `bdris`: batch front end for codebook learning, optimization and experiments.
//!
//! Exit status is 0 on success, 1 on usage or runtime errors and 2 when a
//! trial violates a structural invariant.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bdris_core::harness::{
    parse_config, run_experiment_with, train_codebook, write_csv, RunOptions, TrainingOptions,
};
use bdris_core::grouping::optimal_grouping_from;
use bdris_core::rng::{stream, Purpose};
use bdris_core::{
    correlated_grouping, experiment_suite, expected_bound_rayleigh,
    uncorrelated_grouping, Architecture, ChannelGenerator, ChannelModel, ChannelModelConfig, Codebook,
    Discretization, Error, GroupingChoice, Polarization, SimConfig,
};

#[derive(Parser)]
#[command(name = "bdris", version, about = "Discrete-value reactance surfaces: codebooks, optimization and Monte Carlo experiments")]
struct Cli {
    /// Master seed (experiments), training seed (learn-codebook) or channel seed (optimize, group).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for learn-codebook.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with an [[experiment]] array.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the codebooks a suite or config needs, one JSON file per configuration.
    LearnCodebook(LearnArgs),
    /// Optimize a surface for seeded channel draws and print the trial rows.
    Optimize(OptimizeArgs),
    /// Print a grouping as a comma-separated group assignment.
    Group(GroupArgs),
    /// Run a suite or config and write the CSV table.
    Experiment(ExperimentArgs),
    /// Print the expected group connected bound under i.i.d. Rayleigh fading.
    Bounds(BoundsArgs),
}

#[derive(Args, Clone)]
struct DesignArgs {
    #[arg(long)]
    n_i: Option<usize>,
    #[arg(long, default_value_t = 1)]
    n_g: usize,
    /// iid_rayleigh or correlated.
    #[arg(long, default_value = "iid_rayleigh", value_parser = parse_model)]
    model: ChannelModel,
    /// uni or dual.
    #[arg(long, default_value = "uni", value_parser = parse_polarization)]
    polarization: Polarization,
    /// correlated, uncorrelated, optimal, or an explicit assignment such as 0,1,0,1.
    #[arg(long, default_value = "uncorrelated")]
    grouping: String,
    /// continuous, phase:B, scalar:B or vector:B.
    #[arg(long, default_value = "continuous")]
    discretization: String,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long, conflicts_with = "n_i")]
    suite: Option<String>,
    #[command(flatten)]
    design: DesignArgs,
    /// Training realizations, overriding the per-method default.
    #[arg(long)]
    training_size: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    codebook: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long)]
    pathloss: bool,
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long)]
    n_i: usize,
    #[arg(long)]
    n_g: usize,
    /// correlated, uncorrelated or optimal (for one seeded channel draw).
    #[arg(long, default_value = "uncorrelated")]
    strategy: String,
    #[arg(long, default_value = "uni", value_parser = parse_polarization)]
    polarization: Polarization,
    #[arg(long, default_value = "correlated", value_parser = parse_model)]
    model: ChannelModel,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    suite: Option<String>,
    /// Trials per configuration, overriding the suite or config value.
    #[arg(long)]
    trials: Option<usize>,
    /// Directory holding learned codebooks, looked up by configuration name.
    #[arg(long, default_value = "codebooks")]
    codebook_dir: PathBuf,
    /// Write wall_ms = 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n_i: usize,
    #[arg(long)]
    n_g: usize,
}

fn parse_model(s: &str) -> Result<ChannelModel, String> {
    match s {
        "iid_rayleigh" | "iid" | "rayleigh" => Ok(ChannelModel::IidRayleigh),
        "correlated" | "corr" => Ok(ChannelModel::Correlated),
        _ => Err(format!("unknown channel model {s:?}")),
    }
}

fn parse_polarization(s: &str) -> Result<Polarization, String> {
    match s {
        "uni" => Ok(Polarization::Uni),
        "dual" => Ok(Polarization::Dual),
        _ => Err(format!("unknown polarization {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
    Invariant(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(m) => Failure::Invariant(vec![m]),
            other => Failure::Runtime(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult = Result<(), Failure>;

fn design_config(d: &DesignArgs) -> Result<SimConfig, Failure> {
    let n_i = d.n_i.ok_or_else(|| Failure::Usage("--n-i is required without --suite or --config".into()))?;
    let disc: Discretization = d.discretization.parse()?;
    let arch = if d.n_g == 1 {
        Architecture::Single
    } else if d.n_g == n_i {
        Architecture::Fully
    } else {
        Architecture::Group
    };
    let mut c = SimConfig::new(ChannelModelConfig::new(n_i, d.model, d.polarization), arch, d.n_g, disc);
    c.grouping = d.grouping.parse::<GroupingChoice>()?;
    c.validate()?;
    Ok(c)
}

fn load_configs(cli: &Cli, suite: Option<&str>) -> Result<Option<Vec<SimConfig>>, Failure> {
    match (suite, &cli.config) {
        (Some(_), Some(_)) => Err(Failure::Usage("give either --suite or --config, not both".into())),
        (Some(name), None) => Ok(Some(experiment_suite(name)?)),
        (None, Some(path)) => Ok(Some(parse_config(&fs::read_to_string(path).map_err(|e| {
            Failure::Runtime(Error::Parse(format!("cannot read {}: {e}", path.display())))
        })?)?)),
        (None, None) => Ok(None),
    }
}

fn output(cli: &Cli) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn apply_seed(cli: &Cli, configs: &mut [SimConfig]) {
    if let Some(s) = cli.seed {
        for c in configs {
            c.master_seed = s;
        }
    }
}

fn learn(cli: &Cli, args: &LearnArgs) -> CliResult {
    let configs = match load_configs(cli, args.suite.as_deref())? {
        Some(cs) => cs,
        None => vec![design_config(&args.design)?],
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("codebooks"));
    fs::create_dir_all(&dir)?;
    let mut opts = TrainingOptions {
        seed: cli.seed.unwrap_or(0),
        ..TrainingOptions::default()
    };
    if let Some(n) = args.training_size {
        opts.b1_realizations = n;
        opts.scalar_realizations = n;
        opts.vector_realizations = n;
    }
    let mut learned = 0;
    for c in &configs {
        let Some(name) = c.codebook_name() else { continue };
        let path = dir.join(&name);
        if path.exists() {
            eprintln!("keeping existing {}", path.display());
            continue;
        }
        let cb = train_codebook(c, &opts)?;
        cb.save(&path)?;
        eprintln!("learned {}", path.display());
        learned += 1;
    }
    if learned == 0 && configs.iter().all(|c| c.codebook_name().is_none()) {
        eprintln!("no configuration needs a learned codebook");
    }
    Ok(())
}

fn codebook_for(c: &SimConfig, dir: &Path) -> Result<Option<Codebook>, Failure> {
    let Some(name) = c.codebook_name() else { return Ok(None) };
    let path = c.codebook_path.clone().unwrap_or_else(|| dir.join(name));
    Ok(Some(Codebook::load(&path)?))
}

fn run_all(cli: &Cli, configs: &[SimConfig], codebook: impl Fn(&SimConfig) -> Result<Option<Codebook>, Failure>, timing: bool) -> CliResult {
    // Resolve every codebook before spending time on trials.
    let codebooks = configs.iter().map(&codebook).collect::<Result<Vec<_>, _>>()?;
    let opts = RunOptions { record_timing: timing };
    let mut outputs = Vec::with_capacity(configs.len());
    let mut violations = Vec::new();
    for (c, cb) in configs.iter().zip(&codebooks) {
        let out = run_experiment_with(c, cb.as_ref(), &opts)?;
        violations.extend(out.violations.iter().cloned());
        outputs.push(out);
    }
    let mut w = output(cli)?;
    write_csv(&mut w, &outputs)?;
    w.flush()?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(violations))
    }
}

fn experiment(cli: &Cli, args: &ExperimentArgs) -> CliResult {
    let mut configs = load_configs(cli, args.suite.as_deref())?
        .ok_or_else(|| Failure::Usage("experiment needs --suite or --config".into()))?;
    apply_seed(cli, &mut configs);
    if let Some(t) = args.trials {
        for c in &mut configs {
            c.trials = t;
        }
    }
    run_all(cli, &configs, |c| codebook_for(c, &args.codebook_dir), !args.no_timing)
}

fn optimize(cli: &Cli, args: &OptimizeArgs) -> CliResult {
    let mut c = design_config(&args.design)?;
    c.suite = "optimize".into();
    c.trials = args.trials;
    c.include_pathloss = args.pathloss;
    c.codebook_path = args.codebook.clone();
    apply_seed(cli, std::slice::from_mut(&mut c));
    if c.discretization.needs_codebook() && c.codebook_path.is_none() {
        return Err(Failure::Usage(format!("{} needs --codebook", c.discretization)));
    }
    run_all(cli, &[c], |c| codebook_for(c, Path::new(".")), true)
}

fn group(cli: &Cli, args: &GroupArgs) -> CliResult {
    let g = match args.strategy.as_str() {
        "correlated" | "cg" => correlated_grouping(args.n_i, args.n_g, args.polarization)?,
        "uncorrelated" | "ug" => uncorrelated_grouping(args.n_i, args.n_g, args.polarization)?,
        "optimal" | "og" => {
            let cfg = ChannelModelConfig::new(args.n_i, args.model, args.polarization);
            let ch = ChannelGenerator::new(cfg)?.generate(&mut stream(cli.seed.unwrap_or(0), Purpose::Channel));
            optimal_grouping_from(&ch, &uncorrelated_grouping(args.n_i, args.n_g, args.polarization)?)?
        }
        other => return Err(Failure::Usage(format!("unknown grouping strategy {other:?}"))),
    };
    let mut w = output(cli)?;
    writeln!(w, "{g}")?;
    w.flush()?;
    Ok(())
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> CliResult {
    let e = expected_bound_rayleigh(args.n_i, args.n_g)?;
    let mut w = output(cli)?;
    writeln!(w, "{e:.2}")?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::LearnCodebook(a) => learn(&cli, a),
        Command::Optimize(a) => optimize(&cli, a),
        Command::Group(a) => group(&cli, a),
        Command::Experiment(a) => experiment(&cli, a),
        Command::Bounds(a) => bounds(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(v)) => {
            for m in &v {
                eprintln!("invariant violation: {m}");
            }
            ExitCode::from(2)
        }
    }
}

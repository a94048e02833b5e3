//! `rankone`: command-line front end.
//!
//! Every subcommand computes one artifact (CSV by default, JSON with
//! `--format json`). With `--out DIR` (or `RANKONE_OUT`) the artifacts are
//! written to `DIR` together with `manifest.json`, which `rankone replay`
//! re-runs and checks byte for byte. Without an output directory the primary
//! artifact goes to stdout.
//!
//! Exit codes: 0 success, 1 replay mismatch, 2 malformed input or usage,
//! 3 refusal (well-formed request whose preconditions do not hold).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankone::construction::ConstructionConfig;
use rankone::{Error, Execution};
use serde::{Deserialize, Serialize};

use crate::manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "rankone", version, about = "Rank-one cutting-and-stacking systems: invariants and experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Construction JSON (`{"family": "chacon", "depth": 20}` and so on).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in family instead of a config file: chacon, vnk,
    /// generalized_chacon, katok.
    #[arg(long, global = true, conflicts_with = "config")]
    family: Option<String>,
    /// Number of stages; overrides the config.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, env = "RANKONE_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Run the data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Tower heights h_1..h_{n+1}.
    Heights(commands::HeightsArgs),
    /// Materialize B_n, or decompose a word as A B C.
    Blocks(commands::BlocksArgs),
    /// Exact word frequencies in B_n.
    Freq(commands::FreqArgs),
    /// Law of the cocycle at stage n over r coordinates.
    Cocycle(commands::CocycleArgs),
    /// Limit law P_j of a limit profile.
    Pj(commands::PjArgs),
    /// Stabilizing parameter windows and their invariants.
    Profile(commands::ProfileArgs),
    /// Spectral disjointness certificates for pairs of powers.
    Certify(commands::CertifyArgs),
    /// Odometer / rational eigenvalues / weak mixing candidate.
    Classify(commands::ClassifyArgs),
    /// Rational eigenvalue candidates.
    Eigen(commands::EigenArgs),
    /// One correlation, or the P_j weak-limit prediction check.
    Correlate(commands::CorrelateArgs),
    /// Rigid generalized Chacon weak-limit check.
    RigidChacon(commands::RigidArgs),
    /// Katok weak-limit check.
    Katok(commands::KatokArgs),
    /// Möbius averages along an orbit.
    Sarnak(commands::SarnakArgs),
    /// Möbius averages on a K-floor suspension.
    Suspend(commands::SuspendArgs),
    /// Re-run a manifest and compare output digests.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Heights(_) => "heights",
            Command::Blocks(_) => "blocks",
            Command::Freq(_) => "freq",
            Command::Cocycle(_) => "cocycle",
            Command::Pj(_) => "pj",
            Command::Profile(_) => "profile",
            Command::Certify(_) => "certify",
            Command::Classify(_) => "classify",
            Command::Eigen(_) => "eigen",
            Command::Correlate(_) => "correlate",
            Command::RigidChacon(_) => "rigid-chacon",
            Command::Katok(_) => "katok",
            Command::Sarnak(_) => "sarnak",
            Command::Suspend(_) => "suspend",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    manifest: PathBuf,
}

/// What a subcommand runs against.
pub struct Ctx {
    pub construction: Option<ConstructionConfig>,
    pub seed: u64,
    pub format: Format,
    pub exec: Execution,
}

/// Files produced by a run, primary artifact first.
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub notes: Vec<String>,
}

fn load_construction(g: &Global) -> Result<Option<ConstructionConfig>, Error> {
    let mut cfg = match (&g.config, &g.family) {
        (Some(path), _) => Some(serde_json::from_str::<ConstructionConfig>(&std::fs::read_to_string(path)?)?),
        (None, Some(family)) => Some(ConstructionConfig {
            family: family.clone(),
            depth: 20,
            cuts: Vec::new(),
            spacers: Vec::new(),
            generator: None,
        }),
        (None, None) => None,
    };
    if let (Some(c), Some(d)) = (cfg.as_mut(), g.depth) {
        c.depth = d;
    }
    Ok(cfg)
}

enum Failure {
    Lib(Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn write_outputs(dir: &PathBuf, out: &Output) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.global.sequential { Execution::Sequential } else { Execution::Parallel };
    if let Command::Replay(args) = &cli.command {
        let text = std::fs::read_to_string(&args.manifest).map_err(Error::from)?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(Error::from)?;
        let ctx = Ctx {
            construction: manifest.construction.clone(),
            seed: manifest.seed,
            format: manifest.format,
            exec,
        };
        let out = commands::dispatch(&manifest.command, &ctx)?;
        if let Some(dir) = &cli.global.out {
            write_outputs(dir, &out)?;
        }
        let report = manifest.compare(&out);
        for line in &report.lines {
            println!("{line}");
        }
        return if report.ok {
            Ok(())
        } else {
            Err(Failure::Mismatch(format!("{} of {} outputs differ", report.mismatches, report.lines.len())))
        };
    }

    let ctx = Ctx {
        construction: load_construction(&cli.global)?,
        seed: cli.global.seed,
        format: cli.global.format,
        exec,
    };
    let out = commands::dispatch(&cli.command, &ctx)?;
    for note in &out.notes {
        eprintln!("{note}");
    }
    match &cli.global.out {
        Some(dir) => {
            write_outputs(dir, &out)?;
            let manifest = Manifest::new(cli.command.clone(), &ctx, &out);
            std::fs::write(dir.join("manifest.json"), manifest.to_json()?).map_err(Error::from)?;
            for (name, bytes) in &out.files {
                println!("{}\t{}", dir.join(name).display(), manifest::digest(bytes));
            }
            eprintln!("{}: manifest written to {}", cli.command.name(), dir.join("manifest.json").display());
        }
        None => {
            let (_, bytes) = &out.files[0];
            print!("{}", String::from_utf8_lossy(bytes));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(msg)) => {
            eprintln!("replay mismatch: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_refusal() { 3 } else { 2 })
        }
    }
}

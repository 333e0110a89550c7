use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use food_compass::config::PipelineConfig;
use food_compass::model::{lookup_target, TargetKey};
use food_compass::pipeline::{cmd_ingest, cmd_predict, cmd_score, cmd_train, cmd_validate, Overrides, ScoreInput};
use food_compass::{Error, Result};

#[derive(Parser)]
#[command(name = "fcs", version, about = "Food descriptions to nutrient profiles to Food Compass scores")]
struct Cli {
    /// Pipeline config (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated target keys, e.g. fiber_g,protein_g
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_target)]
    targets: Option<Vec<TargetKey>>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// -v info, -vv debug
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the canonical dataset from the raw tables.
    Ingest,
    /// Train per-target models and write the bundle.
    Train,
    /// Predict a profile for each description (JSON lines on stdout).
    Predict {
        /// Descriptions; read from --input (or stdin) when none are given.
        text: Vec<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a profile JSON, or a description via the models.
    Score {
        /// Profile JSON file, `-` for stdin.
        #[arg(long, conflicts_with = "description")]
        profile: Option<PathBuf>,
        #[arg(long)]
        description: Option<String>,
    },
    /// Compare predicted scores with published ones.
    Validate,
}

fn parse_target(s: &str) -> std::result::Result<TargetKey, String> {
    lookup_target(s.trim()).map_err(|e| e.to_string())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::parse("", Path::new("."))?,
    };
    Overrides { seed: cli.seed, targets: cli.targets.clone(), jobs: cli.jobs }.apply(&mut cfg);
    Ok(cfg)
}

fn read_all(path: &Path) -> Result<String> {
    let mut s = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut s).map_err(|e| Error::Io { path: path.into(), source: e })?;
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut s)).map_err(|e| Error::Io { path: path.into(), source: e })?;
    }
    Ok(s)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    writeln!(io::stdout().lock(), "{json}").map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let stdout = io::stdout();
    match cli.cmd {
        Cmd::Ingest => print_json(&cmd_ingest(&cfg)?),
        Cmd::Train => print_json(&cmd_train(&cfg)?),
        Cmd::Predict { text, input } => {
            let mut out = stdout.lock();
            if !text.is_empty() {
                let joined = text.join("\n");
                cmd_predict(&cfg, &mut joined.as_bytes(), &mut out)?;
            } else {
                match input.as_deref() {
                    Some(p) if p != Path::new("-") => {
                        let f = File::open(p).map_err(|e| Error::Io { path: p.into(), source: e })?;
                        cmd_predict(&cfg, &mut BufReader::new(f), &mut out)?;
                    }
                    _ => {
                        cmd_predict(&cfg, &mut io::stdin().lock(), &mut out)?;
                    }
                }
            }
            Ok(())
        }
        Cmd::Score { profile, description } => {
            let input = match (profile, description) {
                (_, Some(d)) => ScoreInput::Description { description: d },
                (Some(p), None) => ScoreInput::parse(&read_all(&p)?, &p.display().to_string())?,
                (None, None) => ScoreInput::parse(&read_all(Path::new("-"))?, "<stdin>")?,
            };
            print_json(&cmd_score(&cfg, input)?)
        }
        Cmd::Validate => print_json(&cmd_validate(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).target(env_logger::Target::Stderr).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

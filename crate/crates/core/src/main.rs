use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weyl_lab::cli::{run, Config, Experiment, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "weyl-lab",
    version,
    about = "Weyl-law, heat-trace and Tauberian experiments for Schrodinger operators"
)]
struct Cli {
    /// List the experiments and the statement each one measures.
    #[arg(long)]
    list: bool,

    /// Worker threads (defaults to all cores).
    #[arg(long, env = "WEYL_LAB_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Configuration file: `key = value` lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for CSV, verdict and measure files (overrides `output_dir`).
    #[arg(long, short)]
    output_dir: Option<PathBuf>,

    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    WeylClassical(RunArgs),
    WeylSemiclassical(RunArgs),
    HeatTrace(RunArgs),
    Tauberian(RunArgs),
    TauberianSemi(RunArgs),
    OscillationScan(RunArgs),
    SigmaScan(RunArgs),
    NonregularDemo(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::WeylClassical(a) => (Experiment::WeylClassical, a),
            Command::WeylSemiclassical(a) => (Experiment::WeylSemiclassical, a),
            Command::HeatTrace(a) => (Experiment::HeatTrace, a),
            Command::Tauberian(a) => (Experiment::Tauberian, a),
            Command::TauberianSemi(a) => (Experiment::TauberianSemi, a),
            Command::OscillationScan(a) => (Experiment::OscillationScan, a),
            Command::SigmaScan(a) => (Experiment::SigmaScan, a),
            Command::NonregularDemo(a) => (Experiment::NonregularDemo, a),
        }
    }
}

fn execute(experiment: Experiment, args: RunArgs) -> weyl_lab::Result<i32> {
    let mut config = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| weyl_lab::Error::config(kv.as_str(), "expected KEY=VALUE"))?;
        config.set(k.trim(), v.trim());
    }
    if let Some(dir) = &args.output_dir {
        config.set("output_dir", &dir.to_string_lossy());
    }
    let cfg = RunConfig::from_config(experiment, &config)?;
    let outcome = run(&cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for r in &outcome.reports {
        let v = &r.verdict;
        println!(
            "{} {}: final ratio {:.6}, drift {:.3e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.experiment_id,
            v.final_ratio,
            v.drift_slope
        );
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        for e in Experiment::ALL {
            println!("{:<20} {}", e.name(), e.claim());
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no experiment given (see --list or --help)");
        return ExitCode::from(1);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let (experiment, args) = command.split();
    match execute(experiment, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

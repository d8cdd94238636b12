//! `viko`: run the contact pipeline over recorded or simulated frames,
//! generate synthetic data, fit shear calibrations and run the grasp demo.

mod bench;
mod calibrate;
mod run;
mod source;
mod stub;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use viko_core::PipelineConfig;
use viko_sim::{generate_dataset, run_demo, DatasetProtocol, GraspPolicy, GraspScenario, Scenario};

#[derive(Parser)]
#[command(name = "viko", version, about = "Contact area, shear and incipient slip from marker-based tactile images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a frame sequence and write one JSON line per frame.
    Run(run::RunArgs),
    /// Render a scenario to frames, labels and per-frame ground truth.
    Simulate {
        /// Scenario JSON file.
        #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
        scenario: Option<PathBuf>,
        /// Built-in scenario instead of a file.
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
        /// Frame count for a built-in scenario.
        #[arg(long, default_value_t = 120)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the labeled standard-shape dataset.
    Dataset {
        /// Protocol JSON file; the standard protocol when omitted.
        #[arg(long)]
        protocol: Option<PathBuf>,
        /// Overrides the protocol seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the shear cubic to a CSV of (x, force) pairs.
    Calibrate(calibrate::CalibrateArgs),
    /// Measure pipeline throughput on the benchmark scenario.
    Bench(bench::BenchArgs),
    /// Run the closed-loop grasp demo against the simulator.
    Demo {
        /// Grasp scenario JSON; the egg scenario when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Policy JSON; defaults when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Pipeline config (TOML or JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for trace.csv, trace.json and summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Stand-in external segmenter for integration tests.
    #[command(hide = true)]
    SegmentStub(stub::StubArgs),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Builtin {
    Benchmark,
    Rest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => run::run(&args)?,
        Command::Simulate { scenario, builtin, frames, seed, out } => {
            let scenario = match (scenario, builtin) {
                (Some(path), _) => Scenario::load(&path).with_context(|| format!("loading {}", path.display()))?,
                (None, Some(Builtin::Benchmark)) => Scenario::benchmark(frames, seed),
                (None, Some(Builtin::Rest)) => Scenario::no_contact(frames, seed),
                (None, None) => unreachable!("clap requires one of --scenario and --builtin"),
            };
            let n = scenario.write(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {n} frames to {}", out.display());
        }
        Command::Dataset { protocol, seed, out } => {
            let mut protocol = match protocol {
                Some(path) => load_json::<DatasetProtocol>(&path)?,
                None => DatasetProtocol::default(),
            };
            if let Some(seed) = seed {
                protocol.seed = seed;
            }
            let manifest = generate_dataset(&protocol, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} frames to {} (train {}, val {}, test {})",
                manifest.count,
                out.display(),
                manifest.split.train.len(),
                manifest.split.val.len(),
                manifest.split.test.len()
            );
        }
        Command::Calibrate(args) => calibrate::calibrate(&args)?,
        Command::Bench(args) => bench::bench(&args)?,
        Command::Demo { scenario, policy, config, out } => {
            let scenario = match scenario {
                Some(path) => GraspScenario::load(&path).with_context(|| format!("loading {}", path.display()))?,
                None => GraspScenario::egg(),
            };
            let policy = match policy {
                Some(path) => load_json::<GraspPolicy>(&path)?,
                None => GraspPolicy::default(),
            };
            let cfg = load_config(config.as_deref())?;
            let outcome = run_demo(&scenario, &policy, &cfg)?;
            outcome.write(&out).with_context(|| format!("writing {}", out.display()))?;
            let s = &outcome.summary;
            let areas: Vec<String> = s.approach_areas.iter().map(|a| format!("{a:.2}")).collect();
            println!(
                "{}: terminal {}, approach areas [{}]%, {} adjust, {} tighten, slip frames {} inside / {} outside disturbance, post-release shear {:.4} N",
                if s.pass { "PASS" } else { "FAIL" },
                s.terminal.as_str(),
                areas.join(", "),
                s.adjusts,
                s.tightens,
                s.slip_frames_inside_window,
                s.slip_frames_outside_window,
                s.post_release_shear
            );
            if !s.pass {
                return Ok(ExitCode::from(2));
            }
        }
        Command::SegmentStub(args) => stub::serve(&args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub(crate) fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

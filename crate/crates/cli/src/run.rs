use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use viko_core::imaging::io::{load_frame_png, save_frame_png};
use viko_core::pipeline::{annotate, ReferenceSource};
use viko_core::{Frame, Pipeline};

use crate::source;

#[derive(clap::Args)]
pub struct RunArgs {
    /// Directory of PNG frames, a scenario JSON file, or `-` for raw RGB24 on stdin.
    #[arg(long)]
    input: String,
    /// Pipeline config (TOML or JSON); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON-lines output file, or `-` for stdout.
    #[arg(long)]
    out: String,
    /// Write annotated frames to this directory.
    #[arg(long)]
    annotate: Option<PathBuf>,
    /// Print throughput and mean per-stage latency at the end.
    #[arg(long)]
    fps_report: bool,
    /// Include per-stage timings in every line.
    #[arg(long)]
    timing: bool,
    /// Frame width for raw input.
    #[arg(long, default_value_t = 480)]
    width: u32,
    /// Frame height for raw input.
    #[arg(long, default_value_t = 480)]
    height: u32,
}

pub fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = crate::load_config(args.config.as_deref())?;
    cfg.output.timing |= args.timing;
    let (with_timing, with_field, gain) = (cfg.output.timing, cfg.output.field, cfg.output.vector_gain);

    let mut frames = source::open(&args.input, args.width, args.height)?;
    // Reference frames taken from the input are processed like any other.
    let (reference, replay): (Vec<Frame>, Vec<Frame>) = match &cfg.reference.source {
        ReferenceSource::FirstN { count } => {
            let head: Vec<Frame> = frames.by_ref().take(*count).collect::<viko_core::Result<_>>()?;
            if head.len() < *count {
                bail!("input ended after {} frames; {count} are needed for the reference", head.len());
            }
            (head.clone(), head)
        }
        ReferenceSource::File { path } => {
            let f = load_frame_png(path, 0).with_context(|| format!("loading reference {}", path.display()))?;
            (vec![f], Vec::new())
        }
    };
    let mut pipeline = Pipeline::new(cfg, &reference).context("initializing reference")?;
    drop(reference);

    let mut out: Box<dyn Write> = if args.out == "-" {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        let f = File::create(&args.out).with_context(|| format!("creating {}", args.out))?;
        Box::new(BufWriter::new(f))
    };
    if let Some(dir) = &args.annotate {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let all = replay.into_iter().map(Ok).chain(frames);
    let summary = pipeline.run_sequence(all, |frame, report| {
        writeln!(out, "{}", report.to_json_line(with_timing, with_field))?;
        if let Some(dir) = &args.annotate {
            save_frame_png(&annotate(frame, report, gain), &dir.join(format!("{:05}.png", frame.index)))?;
        }
        Ok(())
    })?;
    out.flush()?;

    eprintln!(
        "{} frames in {:.2} s ({:.1} FPS): {} with contact, {} with slip, {} flagged",
        summary.frames,
        summary.wall_seconds,
        summary.fps(),
        summary.contact_frames,
        summary.slip_frames,
        summary.flagged_frames
    );
    if args.fps_report {
        for (stage, us) in summary.mean_stage_us() {
            eprintln!("  {stage:<13} {us:>9.1} us/frame");
        }
    }
    Ok(())
}

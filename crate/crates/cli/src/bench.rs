use std::time::Instant;

use anyhow::{Context, Result};
use viko_core::{Pipeline, PipelineConfig};
use viko_sim::Scenario;

/// Camera rate the pipeline has to keep up with.
const TARGET_FPS: f64 = 24.0;

#[derive(clap::Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    frames: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Renders the benchmark scenario up front, then times the pipeline one
/// frame at a time and again in parallel batches.
pub fn bench(args: &BenchArgs) -> Result<()> {
    let scenario = Scenario::benchmark(args.frames.max(6), args.seed);
    let frames = scenario.render_range(0..scenario.len())?;
    let cfg = PipelineConfig::default();
    let n_ref = 5;
    let mut pipeline = Pipeline::new(cfg.clone(), &frames[..n_ref]).context("initializing reference")?;

    let start = Instant::now();
    let reports: Vec<_> = frames.iter().map(|f| pipeline.process_frame(f)).collect();
    let sequential = start.elapsed().as_secs_f64();

    let mut batched = Pipeline::new(cfg, &frames[..n_ref])?;
    let start = Instant::now();
    let summary = batched.run_sequence(frames.iter().cloned().map(Ok), |_, _| Ok(()))?;
    let parallel = start.elapsed().as_secs_f64();

    let n = frames.len() as f64;
    let fps = n / sequential;
    println!("{} frames of {}x{}", frames.len(), frames[0].width(), frames[0].height());
    println!("sequential: {fps:.1} FPS ({:.2} ms/frame)", 1e3 * sequential / n);
    println!("batched:    {:.1} FPS on {} threads", n / parallel, available_threads());
    println!("mean stage latency (sequential):");
    let mean = |f: fn(&viko_core::pipeline::StageTiming) -> u64| reports.iter().map(|r| f(&r.timing) as f64).sum::<f64>() / n;
    println!("  segmentation {:>9.1} us", mean(|t| t.segmentation));
    println!("  blobs        {:>9.1} us", mean(|t| t.blobs));
    println!("  matching     {:>9.1} us", mean(|t| t.matching));
    println!("  shear        {:>9.1} us", mean(|t| t.shear));
    println!("  slip         {:>9.1} us", mean(|t| t.slip));
    println!("  total        {:>9.1} us", mean(|t| t.total));
    println!("contact frames {}, slip frames {}", summary.contact_frames, summary.slip_frames);
    let verdict = if fps >= TARGET_FPS { "meets" } else { "misses" };
    println!("sequential throughput {verdict} the {TARGET_FPS} FPS target");
    Ok(())
}

fn available_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

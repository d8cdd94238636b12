use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use viko_core::shear::fit_calibration;

/// Below this many samples the fit is accepted with a warning.
const RECOMMENDED_SAMPLES: usize = 10;

#[derive(clap::Args)]
pub struct CalibrateArgs {
    /// CSV of `x,force` rows; a non-numeric first row is taken as a header.
    #[arg(long)]
    samples: PathBuf,
    /// Calibration JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Sensor scale recorded in the calibration.
    #[arg(long)]
    px_per_mm: Option<f64>,
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let samples = read_samples(&args.samples)?;
    if samples.len() < RECOMMENDED_SAMPLES {
        log::warn!("only {} samples; at least {RECOMMENDED_SAMPLES} spanning the range are recommended", samples.len());
    }
    let mut cal = fit_calibration(&samples)?;
    if let Some(s) = args.px_per_mm {
        if !(s > 0.0 && s.is_finite()) {
            bail!("--px-per-mm must be positive");
        }
        cal.px_per_mm = s;
    }
    cal.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "F(x) = {:.6}x {:+.6}x^2 {:+.6}x^3 over [{}, {}], rms residual {:.4} N, {} samples",
        cal.coeffs[0],
        cal.coeffs[1],
        cal.coeffs[2],
        cal.valid_range[0],
        cal.valid_range[1],
        cal.rms_residual.unwrap_or(0.0),
        samples.len()
    );
    Ok(())
}

fn read_samples(path: &std::path::Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            bail!("{}: row {} has {} columns, expected x,force", path.display(), i + 1, record.len());
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(f)) => samples.push((x, f)),
            _ if i == 0 => continue,
            _ => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    Ok(samples)
}

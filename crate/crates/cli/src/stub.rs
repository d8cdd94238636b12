//! A minimal external segmenter that answers every request with a constant
//! mask. It exercises both exchange modes and can be told to exit early to
//! simulate a crashed model process.

use std::fs;
use std::io::{self, BufReader, ErrorKind};
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use anyhow::Result;
use viko_core::imaging::io::{decode_frame_png, encode_mask_png};
use viko_core::segmentation::external::{read_message, write_message};
use viko_core::BinaryMask;

#[derive(clap::Args)]
pub struct StubArgs {
    /// Reply with an all-contact mask instead of an empty one.
    #[arg(long)]
    full: bool,
    /// Exit after answering this many requests.
    #[arg(long)]
    max_requests: Option<u64>,
    /// Serve a request directory instead of stdin/stdout.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn reply(frame_png: &[u8], full: bool) -> Result<Vec<u8>> {
    let frame = decode_frame_png(frame_png, 0)?;
    let mut mask = BinaryMask::new(frame.width(), frame.height());
    if full {
        mask.as_mut_slice().fill(1);
    }
    Ok(encode_mask_png(&mask)?)
}

pub fn serve(args: &StubArgs) -> Result<()> {
    let limit = args.max_requests.unwrap_or(u64::MAX);
    match &args.dir {
        None => {
            let mut input = BufReader::new(io::stdin().lock());
            let mut output = io::stdout().lock();
            for _ in 0..limit {
                let request = match read_message(&mut input) {
                    Ok(r) => r,
                    Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
                    Err(e) => return Err(e.into()),
                };
                write_message(&mut output, &reply(&request, args.full)?)?;
            }
        }
        Some(dir) => {
            let mut served = 0;
            while served < limit {
                let mut pending: Vec<PathBuf> = fs::read_dir(dir)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("req_") && n.ends_with(".png")))
                    .collect();
                pending.sort();
                for req in pending {
                    let name = req.file_name().and_then(|n| n.to_str()).unwrap_or_default().replacen("req_", "resp_", 1);
                    let resp = dir.join(&name);
                    if resp.exists() {
                        continue;
                    }
                    let Ok(bytes) = fs::read(&req) else { continue };
                    let tmp = dir.join(format!(".{name}.part"));
                    fs::write(&tmp, reply(&bytes, args.full)?)?;
                    fs::rename(&tmp, &resp)?;
                    served += 1;
                }
                thread::sleep(Duration::from_micros(500));
            }
        }
    }
    Ok(())
}

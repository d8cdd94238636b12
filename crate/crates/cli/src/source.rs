//! Frame sources for `viko run`: a directory of PNGs, raw RGB24 on standard
//! input, or a simulator scenario file rendered on the fly.

use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use viko_core::imaging::io::{load_frame_png, read_raw_frame};
use viko_core::{Error, Frame};
use viko_sim::Scenario;

/// Frames rendered per parallel batch when the input is a scenario.
const RENDER_CHUNK: usize = 32;

pub type Frames = Box<dyn Iterator<Item = viko_core::Result<Frame>>>;

pub fn open(input: &str, width: u32, height: u32) -> Result<Frames> {
    if input == "-" {
        let mut reader = BufReader::with_capacity(1 << 20, io::stdin());
        let mut index = 0u64;
        let iter = std::iter::from_fn(move || {
            let next = read_raw_frame(&mut reader, width, height, index).transpose();
            index += 1;
            next
        });
        return Ok(Box::new(iter));
    }
    let path = Path::new(input);
    if path.is_dir() {
        let files = png_files(path)?;
        let iter = files.into_iter().enumerate().map(|(i, f)| load_frame_png(&f, i as u64));
        return Ok(Box::new(iter));
    }
    if path.is_file() {
        let scenario = Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
        log::info!("rendering {} scenario frames", scenario.len());
        let iter = ScenarioFrames { scenario, next: 0, buffer: Vec::new().into_iter() };
        return Ok(Box::new(iter));
    }
    bail!("input {input} is neither a directory, a scenario file nor -")
}

/// PNG files of `dir` in name order. A directory holding a `frames/`
/// subdirectory and no PNGs of its own (as written by `viko simulate`) is
/// read from that subdirectory.
fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let list = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(d).with_context(|| format!("reading {}", d.display()))? {
            let p = entry?.path();
            if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                files.push(p);
            }
        }
        files.sort();
        Ok(files)
    };
    let mut files = list(dir)?;
    if files.is_empty() && dir.join("frames").is_dir() {
        files = list(&dir.join("frames"))?;
    }
    if files.is_empty() {
        bail!("no PNG frames in {}", dir.display());
    }
    Ok(files)
}

struct ScenarioFrames {
    scenario: Scenario,
    next: usize,
    buffer: std::vec::IntoIter<viko_core::Result<Frame>>,
}

impl Iterator for ScenarioFrames {
    type Item = viko_core::Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(f) = self.buffer.next() {
            return Some(f);
        }
        let total = self.scenario.len();
        if self.next >= total {
            return None;
        }
        let end = (self.next + RENDER_CHUNK).min(total);
        let chunk: Vec<_> = self
            .scenario
            .render_range(self.next..end)
            .map(|v| v.into_iter().map(Ok).collect())
            .unwrap_or_else(|e| vec![Err(Error::Input(e.to_string()))]);
        self.next = end;
        self.buffer = chunk.into_iter();
        self.buffer.next()
    }
}

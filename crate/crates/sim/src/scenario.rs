//! Scripted frame sequences: piecewise segments with linearly interpolated
//! shear, preceded by no-contact frames for reference initialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use viko_core::imaging::io::{encode_frame_png, encode_mask_png};
use viko_core::Frame;

use crate::error::{SimError, SimResult};
use crate::model::SensorModel;
use crate::render::{render_frame, GroundTruth};
use crate::scene::{Contact, SceneSpec, Shape, SlipPatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub frames: usize,
    #[serde(default)]
    pub contact: Option<Contact>,
    /// Shear at the first and last frame of the segment, millimeters.
    #[serde(default)]
    pub shear_from_mm: [f64; 2],
    #[serde(default)]
    pub shear_to_mm: [f64; 2],
    #[serde(default)]
    pub slip_patch: Option<SlipPatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub model: SensorModel,
    #[serde(default)]
    pub seed: u64,
    pub segments: Vec<Segment>,
}

fn render_scenes(model: &SensorModel, scenes: &[SceneSpec], first_index: usize) -> SimResult<Vec<(Frame, GroundTruth)>> {
    use rayon::prelude::*;
    scenes
        .par_iter()
        .enumerate()
        .map(|(i, s)| render_frame(model, s).map(|(f, gt)| (f.with_index((first_index + i) as u64), gt)))
        .collect()
}

/// SplitMix64 finalizer; decorrelates per-frame noise seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Scenario {
    pub fn load(path: &Path) -> SimResult<Self> {
        let s: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> SimResult<()> {
        self.model.validate()?;
        if self.segments.iter().all(|s| s.frames == 0) {
            return Err(SimError::Scenario("scenario has no frames".into()));
        }
        for s in self.scenes() {
            s.validate(&self.model, false)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.frames).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scenes(&self) -> Vec<SceneSpec> {
        let mut out = Vec::with_capacity(self.len());
        for seg in &self.segments {
            for k in 0..seg.frames {
                let u = if seg.frames > 1 { k as f64 / (seg.frames - 1) as f64 } else { 0.0 };
                let lerp = |a: f64, b: f64| a + (b - a) * u;
                out.push(SceneSpec {
                    contact: seg.contact.clone(),
                    shear_mm: [lerp(seg.shear_from_mm[0], seg.shear_to_mm[0]), lerp(seg.shear_from_mm[1], seg.shear_to_mm[1])],
                    slip_patch: seg.slip_patch.clone(),
                    seed: mix_seed(self.seed, out.len() as u64),
                });
            }
        }
        out
    }

    pub fn render(&self, index: usize) -> SimResult<(Frame, GroundTruth)> {
        let scenes = self.scenes();
        let scene = scenes.get(index).ok_or_else(|| SimError::Scenario(format!("no frame {index}")))?;
        let (f, gt) = render_frame(&self.model, scene)?;
        Ok((f.with_index(index as u64), gt))
    }

    /// Renders every frame in order, in parallel.
    pub fn render_all(&self) -> SimResult<Vec<(Frame, GroundTruth)>> {
        render_scenes(&self.model, &self.scenes(), 0)
    }

    /// Frames `range` in order, rendered in parallel. Lets long scenarios
    /// be streamed a chunk at a time.
    pub fn render_range(&self, range: std::ops::Range<usize>) -> SimResult<Vec<Frame>> {
        let scenes = self.scenes();
        let slice = scenes
            .get(range.clone())
            .ok_or_else(|| SimError::Scenario(format!("frames {range:?} out of {}", scenes.len())))?;
        Ok(render_scenes(&self.model, slice, range.start)?.into_iter().map(|(f, _)| f).collect())
    }

    /// `frames/%05d.png`, `labels/%05d.png` and `truth.jsonl` under `root`.
    pub fn write(&self, root: &Path) -> SimResult<usize> {
        self.validate()?;
        fs::create_dir_all(root.join("frames"))?;
        fs::create_dir_all(root.join("labels"))?;
        let mut truth = std::io::BufWriter::new(fs::File::create(root.join("truth.jsonl"))?);
        let rendered = self.render_all()?;
        for (i, (frame, gt)) in rendered.iter().enumerate() {
            fs::write(root.join(format!("frames/{i:05}.png")), encode_frame_png(frame)?)?;
            fs::write(root.join(format!("labels/{i:05}.png")), encode_mask_png(&gt.mask)?)?;
            let line = serde_json::json!({
                "frame": i,
                "area_pct": gt.area_fraction,
                "slip": gt.slip,
                "slipping": gt.slipping,
                "displacement": gt.displacement.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
            });
            writeln!(truth, "{line}")?;
        }
        truth.flush()?;
        Ok(rendered.len())
    }

    /// `n` frames without contact.
    pub fn no_contact(n: usize, seed: u64) -> Self {
        Self {
            model: SensorModel::default(),
            seed,
            segments: vec![Segment { frames: n, contact: None, shear_from_mm: [0.0; 2], shear_to_mm: [0.0; 2], slip_patch: None }],
        }
    }

    /// Rest frames, then a press that shears, slips locally and releases.
    /// Used for throughput measurement and as a CLI example.
    pub fn benchmark(n: usize, seed: u64) -> Self {
        let press = Contact { shape: Shape::Circle { radius_mm: 9.0 }, center_mm: [0.0, 0.0], rotation_rad: 0.0, depth_mm: 0.6 };
        let rest = 5.min(n);
        let active = n - rest;
        let q = active / 4;
        let seg = |frames, from, to, patch: Option<SlipPatch>| Segment {
            frames,
            contact: Some(press.clone()),
            shear_from_mm: from,
            shear_to_mm: to,
            slip_patch: patch,
        };
        let patch = SlipPatch { center_mm: [3.75, 1.25], radius_mm: 3.6, extra_mm: [0.0, 0.6] };
        Self {
            model: SensorModel::default(),
            seed,
            segments: vec![
                Segment { frames: rest, contact: None, shear_from_mm: [0.0; 2], shear_to_mm: [0.0; 2], slip_patch: None },
                seg(q, [0.0, 0.0], [0.0, 0.0], None),
                seg(q, [0.0, 0.0], [0.3, 0.2], None),
                seg(q, [0.3, 0.2], [0.3, 0.2], Some(patch)),
                seg(active - 3 * q, [0.3, 0.2], [0.0, 0.0], None),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_shear() {
        let mut s = Scenario::benchmark(25, 1);
        s.segments[2].frames = 5;
        let scenes = s.scenes();
        let ramp = &scenes[s.segments[0].frames + s.segments[1].frames..][..5];
        assert_eq!(ramp[0].shear_mm, [0.0, 0.0]);
        assert!((ramp[2].shear_mm[0] - 0.15).abs() < 1e-12);
        assert!((ramp[4].shear_mm[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lengths_and_seeds() {
        let s = Scenario::benchmark(500, 9);
        assert_eq!(s.len(), 500);
        s.validate().unwrap();
        let scenes = s.scenes();
        assert_ne!(scenes[0].seed, scenes[1].seed);
        assert_eq!(Scenario::no_contact(7, 0).scenes().len(), 7);
    }

    #[test]
    fn chunked_frames_match_render() {
        let s = Scenario::benchmark(12, 4);
        let chunked: Vec<Frame> = [0..5, 5..10, 10..12].into_iter().flat_map(|r| s.render_range(r).unwrap()).collect();
        assert_eq!(chunked.len(), 12);
        assert!(s.render_range(10..13).is_err());
        let (f7, _) = s.render(7).unwrap();
        assert_eq!(chunked[7], f7);
        assert_eq!(chunked[11].index, 11);
    }

    #[test]
    fn json_round_trip() {
        let s = Scenario::benchmark(40, 3);
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}

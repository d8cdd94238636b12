//! Labelled standard-shape dataset: each shape is stepped over an XY raster
//! at random indent depths, and the frames are split into train/val/test.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use viko_core::imaging::io::{encode_frame_png, encode_mask_png};

use crate::error::{SimError, SimResult};
use crate::model::SensorModel;
use crate::render::render_frame;
use crate::scene::{Contact, SceneSpec, Shape};

const WRITE_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetProtocol {
    pub model: SensorModel,
    pub shapes: Vec<Shape>,
    pub frames_per_shape: usize,
    /// Raster columns and rows the object center visits.
    pub raster: [usize; 2],
    pub step_mm: f64,
    pub depth_range_mm: [f64; 2],
    /// Draw a random in-plane rotation per frame.
    pub random_rotation: bool,
    /// Relative train/val/test weights.
    pub split: [usize; 3],
    pub seed: u64,
}

impl Default for DatasetProtocol {
    fn default() -> Self {
        Self {
            model: SensorModel::default(),
            shapes: standard_shapes(),
            frames_per_shape: 100,
            raster: [10, 10],
            step_mm: 2.0,
            depth_range_mm: [0.1, 1.0],
            random_rotation: true,
            split: [7, 2, 1],
            seed: 2024,
        }
    }
}

/// Cross, circle, hexagon and rectangle sized to stay inside the sensing
/// area anywhere on the default raster.
pub fn standard_shapes() -> Vec<Shape> {
    vec![
        Shape::Cross { span_mm: 13.0, arm_width_mm: 4.5 },
        Shape::Circle { radius_mm: 6.0 },
        Shape::Hexagon { radius_mm: 6.5 },
        Shape::Rectangle { width_mm: 10.0, height_mm: 7.0 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: usize,
    pub seed: u64,
    pub model: SensorModel,
    pub protocol: DatasetProtocol,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub index: usize,
    pub shape: String,
    pub contact: Contact,
    pub area_fraction: f64,
    pub markers: Vec<[f64; 2]>,
    pub displacement: Vec<[f64; 2]>,
    pub seed: u64,
}

impl DatasetProtocol {
    pub fn validate(&self) -> SimResult<()> {
        self.model.validate()?;
        let bad = |m: &str| Err(SimError::Scenario(m.to_string()));
        if self.shapes.is_empty() || self.frames_per_shape == 0 {
            return bad("dataset needs at least one shape and one frame per shape");
        }
        if self.raster[0] == 0 || self.raster[1] == 0 {
            return bad("raster must be non-empty");
        }
        let [d0, d1] = self.depth_range_mm;
        let [m0, m1] = self.model.depth_range_mm;
        if !(d0 > 0.0 && d0 <= d1 && d0 >= m0 && d1 <= m1) {
            return bad("depth range must lie inside the model's depth range");
        }
        if self.split.iter().sum::<usize>() == 0 {
            return bad("split weights are all zero");
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.shapes.len() * self.frames_per_shape
    }

    /// Scenes in index order. Parameters are drawn sequentially from one
    /// seeded stream, so the list depends only on the protocol.
    pub fn scenes(&self) -> Vec<SceneSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [cols, rows] = self.raster;
        let mut out = Vec::with_capacity(self.count());
        for shape in &self.shapes {
            for k in 0..self.frames_per_shape {
                let cell = k % (cols * rows);
                let (c, r) = (cell % cols, cell / cols);
                let center_mm = [
                    (c as f64 - (cols as f64 - 1.0) / 2.0) * self.step_mm,
                    (r as f64 - (rows as f64 - 1.0) / 2.0) * self.step_mm,
                ];
                let depth_mm = rng.random_range(self.depth_range_mm[0]..=self.depth_range_mm[1]);
                let rotation_rad =
                    if self.random_rotation { rng.random_range(0.0..std::f64::consts::TAU) } else { 0.0 };
                let seed = rng.random::<u64>();
                out.push(SceneSpec {
                    contact: Some(Contact { shape: shape.clone(), center_mm, rotation_rad, depth_mm }),
                    seed,
                    ..Default::default()
                });
            }
        }
        out
    }

    /// Seeded shuffle cut by the split weights; each list sorted.
    pub fn split_indices(&self) -> Split {
        let n = self.count();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_5eed);
        idx.shuffle(&mut rng);
        let total: usize = self.split.iter().sum();
        let n_train = n * self.split[0] / total;
        let n_val = n * self.split[1] / total;
        let mut train = idx[..n_train].to_vec();
        let mut val = idx[n_train..n_train + n_val].to_vec();
        let mut test = idx[n_train + n_val..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Split { train, val, test }
    }
}

/// Frame PNG, mask PNG and label JSON of one sample.
type EncodedSample = (Vec<u8>, Vec<u8>, String);

/// Renders the protocol to `root` as `frames/%05d.png`, `labels/%05d.png`,
/// `labels/%05d.json` and `manifest.json`. Frames render in parallel and are
/// written in index order.
pub fn generate_dataset(protocol: &DatasetProtocol, root: &Path) -> SimResult<Manifest> {
    protocol.validate()?;
    let scenes = protocol.scenes();
    for s in &scenes {
        s.validate(&protocol.model, true)?;
    }
    let frames_dir = root.join("frames");
    let labels_dir = root.join("labels");
    fs::create_dir_all(&frames_dir)?;
    fs::create_dir_all(&labels_dir)?;

    for (chunk_no, chunk) in scenes.chunks(WRITE_CHUNK).enumerate() {
        let base = chunk_no * WRITE_CHUNK;
        let encoded: Vec<SimResult<EncodedSample>> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, scene)| {
                let index = base + k;
                let (frame, gt) = render_frame(&protocol.model, scene)?;
                let contact = scene.contact.clone().expect("dataset scenes have contact");
                let sidecar = LabelSidecar {
                    index,
                    shape: contact.shape.name().to_string(),
                    contact,
                    area_fraction: gt.area_fraction,
                    markers: gt.positions().iter().map(|p| [p.x, p.y]).collect(),
                    displacement: gt.displacement.iter().map(|p| [p.x, p.y]).collect(),
                    seed: scene.seed,
                };
                let frame_png = encode_frame_png(&frame.with_index(index as u64))?;
                let mask_png = encode_mask_png(&gt.mask)?;
                Ok((frame_png, mask_png, serde_json::to_string_pretty(&sidecar)?))
            })
            .collect();
        for (k, item) in encoded.into_iter().enumerate() {
            let (frame_png, mask_png, json) = item?;
            let name = format!("{:05}", base + k);
            fs::write(frames_dir.join(format!("{name}.png")), frame_png)?;
            fs::write(labels_dir.join(format!("{name}.png")), mask_png)?;
            fs::write(labels_dir.join(format!("{name}.json")), json + "\n")?;
        }
    }

    let manifest = Manifest {
        count: scenes.len(),
        seed: protocol.seed,
        model: protocol.model.clone(),
        protocol: protocol.clone(),
        split: protocol.split_indices(),
    };
    fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_split_counts() {
        let p = DatasetProtocol::default();
        let s = p.split_indices();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (280, 80, 40));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..400).collect::<Vec<_>>());
    }

    #[test]
    fn scenes_follow_protocol() {
        let p = DatasetProtocol::default();
        let scenes = p.scenes();
        assert_eq!(scenes.len(), 400);
        for s in &scenes {
            s.validate(&p.model, true).unwrap();
            let d = s.contact.as_ref().unwrap().depth_mm;
            assert!((0.1..=1.0).contains(&d));
        }
        let c0 = scenes[0].contact.as_ref().unwrap().center_mm;
        let c1 = scenes[1].contact.as_ref().unwrap().center_mm;
        assert!(((c1[0] - c0[0]) - 2.0).abs() < 1e-12);
        assert_eq!(scenes, p.scenes());
    }

    #[test]
    fn small_dataset_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = DatasetProtocol { frames_per_shape: 3, ..Default::default() };
        let m = generate_dataset(&p, dir.path()).unwrap();
        assert_eq!(m.count, 12);
        for i in 0..12 {
            assert!(dir.path().join(format!("frames/{i:05}.png")).exists());
            assert!(dir.path().join(format!("labels/{i:05}.png")).exists());
            assert!(dir.path().join(format!("labels/{i:05}.json")).exists());
        }
        assert!(dir.path().join("manifest.json").exists());
    }
}

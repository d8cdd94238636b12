use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use viko_core::segmentation::area_fraction;
use viko_core::{BinaryMask, Frame, Point2};

use crate::error::SimResult;
use crate::model::SensorModel;
use crate::scene::{Footprint, SceneSpec};

/// Supersampling factor per axis for dot coverage.
const AA: usize = 4;
/// In-contact markers of the slip patch must move at least this far beyond
/// the rigid motion to count toward ground-truth slip, pixels.
pub const SLIP_EXTRA_MIN_PX: f64 = 3.0;
/// Ground-truth slip needs strictly more slipping markers than this.
pub const SLIP_COUNT: usize = 6;

/// Exact labels for one rendered frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    #[serde(skip)]
    pub mask: BinaryMask,
    pub area_fraction: f64,
    /// Rest positions, row-major grid order.
    pub rest: Vec<Point2>,
    /// Displacement of each marker, pixels.
    pub displacement: Vec<Point2>,
    pub in_contact: Vec<bool>,
    /// Indices of in-contact markers moved by the slip patch.
    pub slipping: Vec<usize>,
    pub slip: bool,
}

impl GroundTruth {
    pub fn positions(&self) -> Vec<Point2> {
        self.rest.iter().zip(&self.displacement).map(|(&r, &d)| r + d).collect()
    }
}

/// Membrane displacement at `p`, pixels. Shear applies fully inside the
/// contact and decays as `exp(-d²/2σ²)` with distance `d` outside; points
/// in the slip patch move by its extra amount on top. No contact, no motion.
pub fn deformation_field(model: &SensorModel, scene: &SceneSpec, p: Point2) -> Point2 {
    let Some(contact) = &scene.contact else { return Point2::zero() };
    deformation_with(model, scene, &Footprint::new(model, contact), p)
}

fn deformation_with(model: &SensorModel, scene: &SceneSpec, fp: &Footprint, p: Point2) -> Point2 {
    let shear = Point2::new(scene.shear_mm[0], scene.shear_mm[1]) * model.px_per_mm;
    let d = fp.distance(p);
    let s = model.falloff_sigma_px;
    let mut v = shear * (-(d * d) / (2.0 * s * s)).exp();
    if let Some(patch) = &scene.slip_patch {
        if in_patch(model, patch, p) {
            v += Point2::new(patch.extra_mm[0], patch.extra_mm[1]) * model.px_per_mm;
        }
    }
    v
}

fn in_patch(model: &SensorModel, patch: &crate::scene::SlipPatch, p: Point2) -> bool {
    let r = patch.radius_mm * model.px_per_mm;
    p.distance_squared(model.mm_to_px(patch.center_mm)) <= r * r
}

/// Contact mask with pixel centers tested against the footprint.
pub fn contact_mask(model: &SensorModel, scene: &SceneSpec) -> BinaryMask {
    let mut mask = BinaryMask::new(model.width, model.height);
    if let Some(c) = &scene.contact {
        let fp = Footprint::new(model, c);
        if let Some((x0, y0, x1, y1)) = fp.pixel_bounds(model.width, model.height) {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if fp.contains(Point2::new(x as f64, y as f64)) {
                        mask.set(x, y, true);
                    }
                }
            }
        }
    }
    mask
}

/// Renders `scene` and its ground truth. Deterministic in `scene.seed`.
pub fn render_frame(model: &SensorModel, scene: &SceneSpec) -> SimResult<(Frame, GroundTruth)> {
    model.validate()?;
    scene.validate(model, false)?;
    let (w, h) = (model.width as usize, model.height as usize);
    let mask = contact_mask(model, scene);

    let bg = model.background.map(f64::from);
    let mut buf: Vec<f64> = Vec::with_capacity(w * h * 3);
    for _ in 0..w * h {
        buf.extend_from_slice(&bg);
    }
    if let Some(c) = &scene.contact {
        let s = model.tint_strength(c.depth_mm);
        let tint = model.contact_tint.map(f64::from);
        for (i, &m) in mask.as_slice().iter().enumerate() {
            if m != 0 {
                for ch in 0..3 {
                    buf[i * 3 + ch] = bg[ch] * (1.0 - s) + tint[ch] * s;
                }
            }
        }
    }

    let rest = model.rest_markers();
    let footprint = scene.contact.as_ref().map(|c| Footprint::new(model, c));
    let displacement: Vec<Point2> = match &footprint {
        Some(fp) => rest.iter().map(|&p| deformation_with(model, scene, fp, p)).collect(),
        None => vec![Point2::zero(); rest.len()],
    };
    let in_contact: Vec<bool> = match &footprint {
        Some(fp) => rest.iter().map(|&p| fp.contains(p)).collect(),
        None => vec![false; rest.len()],
    };
    let marker = model.marker.map(f64::from);
    for (p, d) in rest.iter().zip(&displacement) {
        draw_dot(&mut buf, w, h, *p + *d, model.dot_radius_px, marker);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = (model.noise_sigma > 0.0).then(|| Normal::new(0.0, model.noise_sigma).expect("valid sigma"));
    let data: Vec<u8> = buf
        .iter()
        .map(|&v| {
            let n = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            (v + n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let frame = Frame::new(model.width, model.height, data, 0)?;

    let slipping: Vec<usize> = match (&scene.slip_patch, &footprint) {
        (Some(patch), Some(_)) => {
            let extra = Point2::new(patch.extra_mm[0], patch.extra_mm[1]) * model.px_per_mm;
            (0..rest.len())
                .filter(|&i| in_contact[i] && in_patch(model, patch, rest[i]) && extra.norm() > SLIP_EXTRA_MIN_PX)
                .collect()
        }
        _ => Vec::new(),
    };
    let area = area_fraction(&mask, &model.roi())?;
    let truth = GroundTruth {
        area_fraction: area,
        slip: slipping.len() > SLIP_COUNT,
        mask,
        rest,
        displacement,
        in_contact,
        slipping,
    };
    Ok((frame, truth))
}

/// Alpha-blends an anti-aliased disk of `color` at `center`.
fn draw_dot(buf: &mut [f64], w: usize, h: usize, center: Point2, radius: f64, color: [f64; 3]) {
    let r2 = radius * radius;
    let x0 = (center.x - radius - 1.0).floor().max(0.0) as usize;
    let y0 = (center.y - radius - 1.0).floor().max(0.0) as usize;
    let x1 = ((center.x + radius + 1.0).ceil() as usize).min(w - 1);
    let y1 = ((center.y + radius + 1.0).ceil() as usize).min(h - 1);
    let step = 1.0 / AA as f64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let mut hits = 0;
            for sy in 0..AA {
                let py = y as f64 - 0.5 + (sy as f64 + 0.5) * step - center.y;
                for sx in 0..AA {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) * step - center.x;
                    hits += usize::from(px * px + py * py <= r2);
                }
            }
            if hits > 0 {
                let a = hits as f64 / (AA * AA) as f64;
                let i = (y * w + x) * 3;
                for ch in 0..3 {
                    buf[i + ch] = buf[i + ch] * (1.0 - a) + color[ch] * a;
                }
            }
        }
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use viko_core::geometry::{distance_to_polygon, on_polygon_boundary, polygon_contains};
use viko_core::Point2;

use crate::error::{SimError, SimResult};
use crate::model::SensorModel;

/// Contact footprint in millimeters, centered on the origin before posing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Circle { radius_mm: f64 },
    Rectangle { width_mm: f64, height_mm: f64 },
    /// Regular hexagon with the given circumradius.
    Hexagon { radius_mm: f64 },
    /// Plus sign: two bars of `arm_width_mm` spanning `span_mm`.
    Cross { span_mm: f64, arm_width_mm: f64 },
    /// Simple polygon, vertices in order.
    Polygon { vertices_mm: Vec<[f64; 2]> },
}

impl Shape {
    /// Vertices in millimeters before pose, or `None` for the circle.
    pub fn outline_mm(&self) -> Option<Vec<[f64; 2]>> {
        match self {
            Shape::Circle { .. } => None,
            Shape::Rectangle { width_mm: w, height_mm: h } => {
                let (a, b) = (w / 2.0, h / 2.0);
                Some(vec![[-a, -b], [a, -b], [a, b], [-a, b]])
            }
            Shape::Hexagon { radius_mm: r } => {
                Some((0..6).map(|k| k as f64 * PI / 3.0).map(|t| [r * t.cos(), r * t.sin()]).collect())
            }
            Shape::Cross { span_mm, arm_width_mm } => {
                let (s, a) = (span_mm / 2.0, arm_width_mm / 2.0);
                Some(vec![
                    [-a, -s], [a, -s], [a, -a], [s, -a], [s, a], [a, a],
                    [a, s], [-a, s], [-a, a], [-s, a], [-s, -a], [-a, -a],
                ])
            }
            Shape::Polygon { vertices_mm } => Some(vertices_mm.clone()),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let ok = match self {
            Shape::Circle { radius_mm } => *radius_mm > 0.0,
            Shape::Rectangle { width_mm, height_mm } => *width_mm > 0.0 && *height_mm > 0.0,
            Shape::Hexagon { radius_mm } => *radius_mm > 0.0,
            Shape::Cross { span_mm, arm_width_mm } => *arm_width_mm > 0.0 && span_mm > arm_width_mm,
            Shape::Polygon { vertices_mm } => {
                vertices_mm.len() >= 3 && vertices_mm.iter().all(|v| v[0].is_finite() && v[1].is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Scene(format!("degenerate shape {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Circle { .. } => "circle",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Hexagon { .. } => "hexagon",
            Shape::Cross { .. } => "cross",
            Shape::Polygon { .. } => "polygon",
        }
    }
}

/// Indenting object and its pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub shape: Shape,
    #[serde(default)]
    pub center_mm: [f64; 2],
    #[serde(default)]
    pub rotation_rad: f64,
    pub depth_mm: f64,
}

/// Region whose markers move by an extra amount on top of the global shear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipPatch {
    pub center_mm: [f64; 2],
    pub radius_mm: f64,
    pub extra_mm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SceneSpec {
    pub contact: Option<Contact>,
    /// Membrane shear inside the contact, millimeters.
    pub shear_mm: [f64; 2],
    pub slip_patch: Option<SlipPatch>,
    pub seed: u64,
}

/// A contact posed in pixel coordinates, ready for point queries.
#[derive(Debug, Clone)]
pub enum Footprint {
    Circle { center: Point2, radius: f64 },
    Polygon(Vec<Point2>),
}

impl Footprint {
    pub fn new(model: &SensorModel, contact: &Contact) -> Self {
        let center = model.mm_to_px(contact.center_mm);
        match contact.shape.outline_mm() {
            None => {
                let Shape::Circle { radius_mm } = contact.shape else { unreachable!() };
                Footprint::Circle { center, radius: radius_mm * model.px_per_mm }
            }
            Some(vs) => Footprint::Polygon(
                vs.iter()
                    .map(|v| center + Point2::new(v[0], v[1]).rotate(contact.rotation_rad) * model.px_per_mm)
                    .collect(),
            ),
        }
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Footprint::Circle { center, radius } => p.distance_squared(*center) <= radius * radius,
            Footprint::Polygon(poly) => polygon_contains(poly, p) || on_polygon_boundary(poly, p, 1e-9),
        }
    }

    /// Distance to the region, 0 inside.
    pub fn distance(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        match self {
            Footprint::Circle { center, radius } => (p.distance(*center) - radius).max(0.0),
            Footprint::Polygon(poly) => distance_to_polygon(poly, p),
        }
    }

    /// Pixel-aligned bounding box `(x0, y0, x1, y1)`, inclusive, clipped.
    pub fn pixel_bounds(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        let (lo, hi) = match self {
            Footprint::Circle { center, radius } => {
                (Point2::new(center.x - radius, center.y - radius), Point2::new(center.x + radius, center.y + radius))
            }
            Footprint::Polygon(poly) => poly.iter().fold(
                (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
                |(lo, hi), p| (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y))),
            ),
        };
        let x0 = lo.x.ceil().max(0.0);
        let y0 = lo.y.ceil().max(0.0);
        let x1 = hi.x.floor().min(width as f64 - 1.0);
        let y1 = hi.y.floor().min(height as f64 - 1.0);
        (x0 <= x1 && y0 <= y1).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}

impl SceneSpec {
    pub fn empty(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }

    pub fn validate(&self, model: &SensorModel, dataset_mode: bool) -> SimResult<()> {
        if !(self.shear_mm[0].is_finite() && self.shear_mm[1].is_finite()) {
            return Err(SimError::Scene("non-finite shear".into()));
        }
        if let Some(c) = &self.contact {
            c.shape.validate()?;
            if !(c.depth_mm > 0.0) || !c.rotation_rad.is_finite() {
                return Err(SimError::Scene("indent depth must be positive".into()));
            }
            let [d0, d1] = model.depth_range_mm;
            if dataset_mode && !(d0..=d1).contains(&c.depth_mm) {
                return Err(SimError::Scene(format!("depth {} mm outside [{d0}, {d1}]", c.depth_mm)));
            }
            let roi = model.roi();
            const EPS: f64 = 1e-6;
            let (lo_x, lo_y) = (roi.x as f64 - 0.5 - EPS, roi.y as f64 - 0.5 - EPS);
            let (hi_x, hi_y) = ((roi.x + roi.width) as f64 - 0.5 + EPS, (roi.y + roi.height) as f64 - 0.5 + EPS);
            let within = |p: Point2| p.x >= lo_x && p.y >= lo_y && p.x <= hi_x && p.y <= hi_y;
            // the ROI is convex, so checking the circle's extremes or the
            // polygon's vertices suffices
            let inside = match Footprint::new(model, c) {
                Footprint::Circle { center, radius } => {
                    within(center - Point2::new(radius, radius)) && within(center + Point2::new(radius, radius))
                }
                Footprint::Polygon(poly) => poly.iter().all(|&p| within(p)),
            };
            if !inside {
                return Err(SimError::Scene("contact shape extends outside the sensing area".into()));
            }
        }
        if let Some(p) = &self.slip_patch {
            if !(p.radius_mm > 0.0) || !p.extra_mm.iter().all(|v| v.is_finite()) {
                return Err(SimError::Scene("slip patch needs a positive radius".into()));
            }
        }
        Ok(())
    }
}

//! Crack-following boundary tracing.
//!
//! Contours run along pixel edges, so vertices sit on the pixel-corner
//! lattice: vertex `(u, v)` is the top-left corner of pixel `(u, v)`, which in
//! pixel-center coordinates is `(u - 0.5, v - 0.5)`. Outer boundaries are
//! clockwise on screen (positive shoelace area with y pointing down), holes
//! counter-clockwise. Even-odd filling of all loops of a component reproduces
//! that component exactly.

use serde::{Deserialize, Serialize};

use crate::geometry::{on_polygon_boundary, polygon_contains, Point2};
use crate::imaging::components::{label_components, Connectivity, Labeling};
use crate::imaging::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    /// 1-based label of the 4-connected component this loop bounds.
    pub component: u32,
    pub is_hole: bool,
    /// Corner-lattice vertices; only direction changes are kept.
    pub vertices: Vec<[i32; 2]>,
}

impl Contour {
    /// Twice the signed area; positive for outer loops.
    pub fn signed_area2(&self) -> i64 {
        let n = self.vertices.len();
        let mut acc = 0i64;
        for i in 0..n {
            let [x0, y0] = self.vertices[i];
            let [x1, y1] = self.vertices[(i + 1) % n];
            acc += x0 as i64 * y1 as i64 - x1 as i64 * y0 as i64;
        }
        acc
    }

    /// Vertices converted to pixel-center coordinates.
    pub fn to_points<T: crate::Real>(&self) -> Vec<Point2<T>> {
        let half = T::lit(0.5);
        self.vertices
            .iter()
            .map(|&[u, v]| Point2::new(T::lit(u as f64) - half, T::lit(v as f64) - half))
            .collect()
    }
}

// Directions on the corner lattice, y down.
const RIGHT: usize = 0;
const DOWN: usize = 1;
const LEFT: usize = 2;
const UP: usize = 3;
const STEP: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[inline]
fn turn_right(d: usize) -> usize {
    (d + 1) % 4
}

#[inline]
fn turn_left(d: usize) -> usize {
    (d + 3) % 4
}

/// Traces every boundary loop of every 4-connected component.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Contour> {
    let lab = label_components(mask, Connectivity::Four);
    trace_labeled(&lab)
}

pub fn trace_labeled(lab: &Labeling) -> Vec<Contour> {
    let mut out = Vec::new();
    for comp in &lab.components {
        trace_component(lab, comp.label, comp.min_x, comp.min_y, comp.max_x, comp.max_y, &mut out);
    }
    out
}

fn trace_component(lab: &Labeling, label: u32, x0: u32, y0: u32, x1: u32, y1: u32, out: &mut Vec<Contour>) {
    // Local corner lattice covering the component's bounding box.
    let (ox, oy) = (x0 as i32, y0 as i32);
    let lw = (x1 - x0 + 2) as usize;
    let lh = (y1 - y0 + 2) as usize;
    let inside = |px: i32, py: i32| -> bool {
        px >= 0
            && py >= 0
            && (px as u32) < lab.width
            && (py as u32) < lab.height
            && lab.label(px as u32, py as u32) == label
    };
    // Outgoing-edge bitmask per lattice vertex.
    let mut out_edges = vec![0u8; lw * lh];
    for lv in 0..lh {
        for lu in 0..lw {
            let (u, v) = (ox + lu as i32, oy + lv as i32);
            let a = inside(u - 1, v - 1);
            let b = inside(u, v - 1);
            let c = inside(u - 1, v);
            let d = inside(u, v);
            let mut bits = 0u8;
            if d && !b {
                bits |= 1 << RIGHT;
            }
            if c && !d {
                bits |= 1 << DOWN;
            }
            if a && !c {
                bits |= 1 << LEFT;
            }
            if b && !a {
                bits |= 1 << UP;
            }
            out_edges[lv * lw + lu] = bits;
        }
    }

    for start in 0..lw * lh {
        while out_edges[start] != 0 {
            let first_dir = out_edges[start].trailing_zeros() as usize;
            let (mut lu, mut lv) = ((start % lw) as i32, (start / lw) as i32);
            let mut dir = first_dir;
            let mut verts: Vec<[i32; 2]> = Vec::new();
            let mut prev_dir = usize::MAX;
            loop {
                let idx = lv as usize * lw + lu as usize;
                out_edges[idx] &= !(1 << dir);
                if dir != prev_dir {
                    verts.push([ox + lu, oy + lv]);
                }
                prev_dir = dir;
                lu += STEP[dir].0;
                lv += STEP[dir].1;
                let nidx = lv as usize * lw + lu as usize;
                let mut avail = out_edges[nidx];
                let at_start = nidx == start;
                if at_start {
                    avail |= 1 << first_dir;
                }
                // Tightest turn first keeps diagonal neighbours apart.
                let next = [turn_right(dir), dir, turn_left(dir)]
                    .into_iter()
                    .find(|&d| avail & (1 << d) != 0)
                    .expect("boundary edges form closed loops");
                if at_start && next == first_dir {
                    break;
                }
                dir = next;
            }
            // Closing vertex coincides with the start; drop it if the loop
            // re-enters along the starting direction.
            if prev_dir == first_dir && verts.len() > 1 {
                verts.remove(0);
            }
            let mut contour = Contour { component: label, is_hole: false, vertices: verts };
            contour.is_hole = contour.signed_area2() < 0;
            out.push(contour);
        }
    }
}

/// Even-odd fill of all loops at pixel centers.
pub fn rasterize_contours(contours: &[Contour], width: u32, height: u32) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    let mut xs: Vec<i32> = Vec::new();
    for y in 0..height as i32 {
        xs.clear();
        for c in contours {
            let n = c.vertices.len();
            for i in 0..n {
                let [ax, ay] = c.vertices[i];
                let [bx, by] = c.vertices[(i + 1) % n];
                if ax == bx && ay.min(by) <= y && y < ay.max(by) {
                    xs.push(ax);
                }
            }
        }
        xs.sort_unstable();
        for pair in xs.chunks(2) {
            if let [a, b] = *pair {
                for x in a.max(0)..b.min(width as i32) {
                    mask.set(x as u32, y as u32, true);
                }
            }
        }
    }
    mask
}

/// Whether a pixel-center point lies inside or on the loops of `contours`,
/// evaluated per component with even-odd parity.
pub fn contours_contain<T: crate::Real>(contours: &[Contour], p: Point2<T>) -> bool {
    let eps = T::lit(1e-9);
    let mut polys: Vec<(u32, Vec<Point2<T>>)> = contours.iter().map(|c| (c.component, c.to_points())).collect();
    polys.sort_by_key(|(l, _)| *l);
    if polys.iter().any(|(_, poly)| on_polygon_boundary(poly, p, eps)) {
        return true;
    }
    let mut i = 0;
    while i < polys.len() {
        let label = polys[i].0;
        let mut parity = false;
        while i < polys.len() && polys[i].0 == label {
            if polygon_contains(&polys[i].1, p) {
                parity = !parity;
            }
            i += 1;
        }
        if parity {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pixel_square() {
        let mut m = BinaryMask::new(3, 3);
        m.set(1, 1, true);
        let c = trace_contours(&m);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices, vec![[1, 1], [2, 1], [2, 2], [1, 2]]);
        assert!(!c[0].is_hole);
        assert_eq!(c[0].signed_area2(), 2);
    }

    #[test]
    fn ring_has_hole() {
        let m = BinaryMask::from_fn(7, 7, |x, y| (1..=5).contains(&x) && (1..=5).contains(&y) && !(x == 3 && y == 3));
        let c = trace_contours(&m);
        assert_eq!(c.len(), 2);
        assert_eq!(c.iter().filter(|c| c.is_hole).count(), 1);
        assert_eq!(rasterize_contours(&c, 7, 7), m);
        assert!(!contours_contain(&c, Point2::new(3.0, 3.0)));
        assert!(contours_contain(&c, Point2::new(2.0, 3.0)));
        // on the hole boundary
        assert!(contours_contain(&c, Point2::new(2.5, 3.0)));
    }

    #[test]
    fn diagonal_touch_stays_separate() {
        let m = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (1, 1) || (x, y) == (2, 2));
        let c = trace_contours(&m);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.vertices.len() == 4));
    }

    proptest! {
        #[test]
        fn rasterize_round_trip(w in 1u32..20, h in 1u32..20, bits in prop::collection::vec(any::<bool>(), 400)) {
            let m = BinaryMask::from_fn(w, h, |x, y| bits[(y * 20 + x) as usize]);
            let contours = trace_contours(&m);
            prop_assert_eq!(rasterize_contours(&contours, w, h), m.clone());
            // component-wise round trip
            let lab = label_components(&m, Connectivity::Four);
            for comp in &lab.components {
                let own: Vec<Contour> = contours.iter().filter(|c| c.component == comp.label).cloned().collect();
                let r = rasterize_contours(&own, w, h);
                prop_assert_eq!(r.count() as u32, comp.area);
                for y in 0..h { for x in 0..w {
                    prop_assert_eq!(r.get(x, y), lab.label(x, y) == comp.label);
                }}
            }
        }
    }
}

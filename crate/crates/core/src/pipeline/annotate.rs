//! Overlay drawing: contact contours in green, marker displacement vectors in
//! red, the fitted rigid motion of in-contact markers in blue.

use crate::imaging::Frame;
use crate::pipeline::ContactReport;

pub const CONTOUR_COLOR: [u8; 3] = [0, 255, 0];
pub const VECTOR_COLOR: [u8; 3] = [255, 0, 0];
pub const RIGID_COLOR: [u8; 3] = [0, 0, 255];

/// Draws `report` over a copy of `frame`; vectors are scaled by `gain`.
pub fn annotate(frame: &Frame, report: &ContactReport, gain: f64) -> Frame {
    let mut out = frame.clone();
    for c in &report.contours {
        let n = c.vertices.len();
        for i in 0..n {
            let [x0, y0] = c.vertices[i];
            let [x1, y1] = c.vertices[(i + 1) % n];
            // corner lattice to the pixel inside the boundary
            draw_line(&mut out, (x0 as f64 - 0.5, y0 as f64 - 0.5), (x1 as f64 - 0.5, y1 as f64 - 0.5), CONTOUR_COLOR);
        }
    }
    if let Some(tf) = &report.slip.transform {
        let pts = crate::slip::markers_inside(&report.contours, &report.field);
        for p in pts {
            let rigid = tf.apply(p.origin) - p.origin;
            let end = p.origin + rigid * gain;
            draw_line(&mut out, (p.origin.x, p.origin.y), (end.x, end.y), RIGID_COLOR);
        }
    }
    for p in &report.field.pairs {
        let end = p.origin + p.vector * gain;
        draw_line(&mut out, (p.origin.x, p.origin.y), (end.x, end.y), VECTOR_COLOR);
    }
    out
}

/// Bresenham between rounded endpoints, clipped to the frame.
pub fn draw_line(frame: &mut Frame, a: (f64, f64), b: (f64, f64), rgb: [u8; 3]) {
    if !(a.0.is_finite() && a.1.is_finite() && b.0.is_finite() && b.1.is_finite()) {
        return;
    }
    let (mut x, mut y) = (a.0.round() as i64, a.1.round() as i64);
    let (x1, y1) = (b.0.round() as i64, b.1.round() as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let (sx, sy) = (if x < x1 { 1 } else { -1 }, if y < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    loop {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            frame.set_pixel(x as u32, y as u32, rgb);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

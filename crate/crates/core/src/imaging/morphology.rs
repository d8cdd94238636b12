//! Binary morphology with a digital disk structuring element
//! `{(dx, dy) : dx² + dy² ≤ r²}`.
//!
//! Dilation is evaluated row by row: for each offset row `dy` the disk is a
//! horizontal run of half-width `⌊√(r² − dy²)⌋`, answered in O(1) from per-row
//! prefix counts. Erosion is the dual `¬dilate(¬m)`, so pixels outside the
//! image behave as set during erosion and unset during dilation. That pair
//! forms an adjunction on the image domain, which makes opening and closing
//! idempotent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

pub fn morphology(mask: &BinaryMask, op: MorphOp, radius: u32) -> Result<BinaryMask> {
    check_radius(mask, radius)?;
    Ok(match op {
        MorphOp::Dilate => dilate(mask, radius),
        MorphOp::Erode => erode(mask, radius),
        MorphOp::Open => dilate(&erode(mask, radius), radius),
        MorphOp::Close => erode(&dilate(mask, radius), radius),
    })
}

fn check_radius(mask: &BinaryMask, radius: u32) -> Result<()> {
    if radius < 1 {
        return Err(Error::Config("morphology radius must be at least 1".into()));
    }
    let limit = mask.width().min(mask.height()) / 2;
    if radius >= limit {
        return Err(Error::Config(format!(
            "morphology radius {radius} too large for {}x{} mask",
            mask.width(),
            mask.height()
        )));
    }
    Ok(())
}

fn half_widths(radius: u32) -> Vec<usize> {
    let r2 = (radius * radius) as i64;
    (0..=radius as i64)
        .map(|dy| {
            let rem = r2 - dy * dy;
            let mut w = (rem as f64).sqrt() as i64;
            while w * w > rem {
                w -= 1;
            }
            while (w + 1) * (w + 1) <= rem {
                w += 1;
            }
            w as usize
        })
        .collect()
}

fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let src = mask.as_slice();
    // prefix[y * (w + 1) + x] = set pixels in row y strictly left of x
    let mut prefix = vec![0u32; h * (w + 1)];
    let mut row_any = vec![false; h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let p = &mut prefix[y * (w + 1)..(y + 1) * (w + 1)];
        let mut acc = 0u32;
        for x in 0..w {
            p[x] = acc;
            acc += row[x] as u32;
        }
        p[w] = acc;
        row_any[y] = acc > 0;
    }
    let hw = half_widths(radius);
    let r = radius as isize;
    let mut out = BinaryMask::new(mask.width(), mask.height());
    let dst = out.as_mut_slice();
    for y in 0..h {
        let y0 = (y as isize - r).max(0) as usize;
        let y1 = (y as isize + r).min(h as isize - 1) as usize;
        if !(y0..=y1).any(|yy| row_any[yy]) {
            continue;
        }
        for x in 0..w {
            let mut hit = false;
            for yy in y0..=y1 {
                if !row_any[yy] {
                    continue;
                }
                let k = hw[(yy as isize - y as isize).unsigned_abs()];
                let lo = x.saturating_sub(k);
                let hi = (x + k).min(w - 1);
                let p = &prefix[yy * (w + 1)..];
                if p[hi + 1] > p[lo] {
                    hit = true;
                    break;
                }
            }
            dst[y * w + x] = hit as u8;
        }
    }
    out
}

fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    dilate(&mask.complement(), radius).complement()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_dilate(m: &BinaryMask, r: i64) -> BinaryMask {
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy <= r * r && m.get_signed(x as i64 + dx, y as i64 + dy) {
                        return true;
                    }
                }
            }
            false
        })
    }

    fn brute_erode(m: &BinaryMask, r: i64) -> BinaryMask {
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    let inside = xx >= 0 && yy >= 0 && xx < m.width() as i64 && yy < m.height() as i64;
                    if dx * dx + dy * dy <= r * r && inside && !m.get(xx as u32, yy as u32) {
                        return false;
                    }
                }
            }
            true
        })
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::new(20, 20);
        for op in [MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close] {
            assert!(morphology(&m, op, 2).unwrap().is_empty());
        }
    }

    #[test]
    fn open_removes_speckle() {
        let mut m = BinaryMask::new(20, 20);
        m.set(10, 10, true);
        assert!(morphology(&m, MorphOp::Open, 2).unwrap().is_empty());
    }

    #[test]
    fn radius_limits() {
        let m = BinaryMask::new(20, 12);
        assert!(morphology(&m, MorphOp::Open, 0).is_err());
        assert!(morphology(&m, MorphOp::Open, 6).is_err());
        assert!(morphology(&m, MorphOp::Open, 5).is_ok());
    }

    #[test]
    fn disk_shape() {
        let mut m = BinaryMask::new(21, 21);
        m.set(10, 10, true);
        let d = morphology(&m, MorphOp::Dilate, 3).unwrap();
        // 3² disk has 29 lattice points
        assert_eq!(d.count(), 29);
        assert!(d.get(13, 10) && !d.get(13, 11) && d.get(12, 12));
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (8u32..24, 8u32..24, prop::collection::vec(0u8..3, 24 * 24))
            .prop_map(|(w, h, v)| BinaryMask::from_fn(w, h, |x, y| v[(y * 24 + x) as usize] == 0))
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in arb_mask(), r in 1u32..4) {
            prop_assume!(r < m.width().min(m.height()) / 2);
            prop_assert_eq!(morphology(&m, MorphOp::Dilate, r).unwrap(), brute_dilate(&m, r as i64));
            prop_assert_eq!(morphology(&m, MorphOp::Erode, r).unwrap(), brute_erode(&m, r as i64));
        }

        #[test]
        fn open_close_idempotent(m in arb_mask(), r in 1u32..4) {
            prop_assume!(r < m.width().min(m.height()) / 2);
            let o = morphology(&m, MorphOp::Open, r).unwrap();
            prop_assert_eq!(morphology(&o, MorphOp::Open, r).unwrap(), o.clone());
            let c = morphology(&m, MorphOp::Close, r).unwrap();
            prop_assert_eq!(morphology(&c, MorphOp::Close, r).unwrap(), c.clone());
            prop_assert!(o.is_subset_of(&m));
            prop_assert!(m.is_subset_of(&c));
        }
    }
}

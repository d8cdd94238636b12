use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::frame::{Frame, Roi};
use crate::imaging::mask::BinaryMask;

/// Red-marker color rule: a pixel is marker material when
/// `R - max(G, B) > t_red`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    pub t_red: u8,
    /// Restrict detection to this rectangle; pixels outside are never set.
    pub roi: Option<Roi>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { t_red: 40, roi: None }
    }
}

#[inline]
pub(crate) fn red_excess(rgb: &[u8]) -> i16 {
    rgb[0] as i16 - rgb[1].max(rgb[2]) as i16
}

pub fn threshold(frame: &Frame, cfg: &ThresholdConfig) -> Result<BinaryMask> {
    let (w, h) = (frame.width(), frame.height());
    let roi = match cfg.roi {
        Some(r) => {
            r.validate(w, h)?;
            r
        }
        None => Roi::full(w, h),
    };
    let t = cfg.t_red as i16;
    let mut mask = BinaryMask::new(w, h);
    let data = frame.data();
    let bits = mask.as_mut_slice();
    for y in roi.y..roi.y + roi.height {
        let row = y as usize * w as usize;
        for x in roi.x..roi.x + roi.width {
            let i = row + x as usize;
            bits[i] = (red_excess(&data[i * 3..i * 3 + 3]) > t) as u8;
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_frame_has_no_markers() {
        let f = Frame::filled(32, 32, [128, 128, 128]);
        for t in [0u8, 40, 200] {
            let m = threshold(&f, &ThresholdConfig { t_red: t, roi: None }).unwrap();
            assert!(m.is_empty());
        }
    }

    #[test]
    fn red_pixel_detected_inside_roi_only() {
        let mut f = Frame::filled(16, 16, [180, 180, 180]);
        f.set_pixel(3, 3, [220, 40, 40]);
        f.set_pixel(12, 12, [220, 40, 40]);
        let m = threshold(&f, &ThresholdConfig::default()).unwrap();
        assert_eq!(m.count(), 2);
        let roi = Roi { x: 0, y: 0, width: 8, height: 8 };
        let m = threshold(&f, &ThresholdConfig { roi: Some(roi), ..Default::default() }).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(3, 3));
    }

    #[test]
    fn oversized_roi_is_config_error() {
        let f = Frame::filled(16, 16, [0, 0, 0]);
        let roi = Roi { x: 8, y: 0, width: 16, height: 4 };
        let err = threshold(&f, &ThresholdConfig { roi: Some(roi), ..Default::default() }).unwrap_err();
        assert!(matches!(err, crate::Error::Config(_)));
    }
}

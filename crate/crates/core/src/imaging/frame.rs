use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default sensor stream resolution (square).
pub const DEFAULT_FRAME_SIZE: u32 = 480;

/// One RGB24 sensor image.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
    /// Sequence number within the stream.
    pub index: u64,
    /// Capture time in seconds, when the source provides one.
    pub timestamp: Option<f64>,
}

impl Frame {
    pub fn new(width: u32, height: u32, data: Vec<u8>, index: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input(format!("frame dimensions must be positive, got {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::Input(format!(
                "frame buffer has {} bytes, expected {expected} for {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Self { width, height, data, index, timestamp: None })
    }

    /// Uniformly colored frame.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data, 0).expect("filled frame dimensions")
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn len_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_dimensions(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Per-pixel rounded mean of equally sized frames.
    pub fn mean(frames: &[Frame]) -> Result<Frame> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Precondition("mean of zero frames".into()))?;
        if frames.iter().any(|f| !f.same_dimensions(first)) {
            return Err(Error::Input("frames differ in dimensions".into()));
        }
        let n = frames.len() as u32;
        let mut acc = vec![0u32; first.data.len()];
        for f in frames {
            for (a, &v) in acc.iter_mut().zip(&f.data) {
                *a += v as u32;
            }
        }
        let data = acc.into_iter().map(|a| ((a + n / 2) / n) as u8).collect();
        let mut out = Frame::new(first.width, first.height, data, first.index)?;
        out.timestamp = first.timestamp;
        Ok(out)
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Roi {
    pub fn full(width: u32, height: u32) -> Self {
        Self { x: 0, y: 0, width, height }
    }

    /// Full frame minus `border` pixels on each side.
    pub fn inset(width: u32, height: u32, border: u32) -> Self {
        let bw = border.min(width / 2);
        let bh = border.min(height / 2);
        Self { x: bw, y: bh, width: width - 2 * bw, height: height - 2 * bh }
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Input("empty ROI".into()));
        }
        if self.x as u64 + self.width as u64 > width as u64 || self.y as u64 + self.height as u64 > height as u64 {
            return Err(Error::Config(format!(
                "ROI {}x{}+{}+{} exceeds {width}x{height} frame",
                self.width, self.height, self.x, self.y
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(Frame::new(0, 4, vec![], 0).is_err());
        assert!(Frame::new(2, 2, vec![0; 11], 0).is_err());
        assert!(Frame::new(2, 2, vec![0; 12], 0).is_ok());
    }

    #[test]
    fn mean_rounds() {
        let a = Frame::filled(2, 1, [0, 10, 255]);
        let b = Frame::filled(2, 1, [1, 11, 255]);
        let m = Frame::mean(&[a, b]).unwrap();
        assert_eq!(m.pixel(1, 0), [1, 11, 255]);
    }

    #[test]
    fn roi_inset_and_bounds() {
        let r = Roi::inset(480, 480, 10);
        assert_eq!((r.x, r.width, r.area()), (10, 460, 460 * 460));
        assert!(r.validate(480, 480).is_ok());
        assert!(Roi { x: 400, y: 0, width: 100, height: 10 }.validate(480, 480).is_err());
    }
}

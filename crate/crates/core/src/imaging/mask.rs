use crate::error::{Error, Result};
use crate::imaging::frame::Roi;

/// One bit of information per pixel, stored as a 0/1 byte for fast
/// row arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![0; width as usize * height as usize] }
    }

    /// Builds a mask from any per-pixel byte buffer; nonzero means set.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width as usize * height as usize {
            return Err(Error::Input(format!(
                "mask buffer has {} bytes, expected {}",
                bytes.len(),
                width as usize * height as usize
            )));
        }
        Ok(Self { width, height, bits: bytes.iter().map(|&b| (b != 0) as u8).collect() })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major 0/1 bytes.
    #[inline]
    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize] != 0
    }

    /// Like [`get`](Self::get) but false outside the image.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v as u8;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn count_in(&self, roi: &Roi) -> u64 {
        let mut n = 0u64;
        for y in roi.y..roi.y + roi.height {
            let row = &self.bits[y as usize * self.width as usize..][..self.width as usize];
            n += row[roi.x as usize..(roi.x + roi.width) as usize].iter().map(|&b| b as u64).sum::<u64>();
        }
        n
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn same_dimensions(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn complement(&self) -> Self {
        Self { width: self.width, height: self.height, bits: self.bits.iter().map(|&b| b ^ 1).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        assert!(self.same_dimensions(other), "mask dimensions differ");
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a | b).collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert!(self.same_dimensions(other), "mask dimensions differ");
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a & b).collect(),
        }
    }

    /// Every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.same_dimensions(other) && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }

    /// Intersection over union; two empty masks score 1.
    pub fn iou(&self, other: &Self) -> f64 {
        assert!(self.same_dimensions(other), "mask dimensions differ");
        let (mut inter, mut uni) = (0u64, 0u64);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a & b) as u64;
            uni += (a | b) as u64;
        }
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }

    /// Clears everything outside `roi`.
    pub fn restrict_to(&mut self, roi: &Roi) {
        for y in 0..self.height {
            for x in 0..self.width {
                if !roi.contains(x, y) {
                    self.set(x, y, false);
                }
            }
        }
    }

    /// 8-bit grayscale rendering (0 / 255).
    pub fn to_gray8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b * 255).collect()
    }
}

//! PNG and raw RGB24 frame I/O.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::frame::Frame;
use crate::imaging::mask::BinaryMask;

fn image_err(e: impl std::fmt::Display) -> Error {
    Error::Image(e.to_string())
}

/// Decodes any PNG into an RGB24 frame.
pub fn decode_frame_png(bytes: &[u8], index: u64) -> Result<Frame> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(image_err)?;
    let rgb = img.to_rgb8();
    Frame::new(rgb.width(), rgb.height(), rgb.into_raw(), index)
}

pub fn load_frame_png(path: &Path, index: u64) -> Result<Frame> {
    let bytes = std::fs::read(path)?;
    decode_frame_png(&bytes, index)
}

fn encode_png(width: u32, height: u32, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().map_err(image_err)?;
        writer.write_image_data(data).map_err(image_err)?;
    }
    Ok(out)
}

pub fn encode_frame_png(frame: &Frame) -> Result<Vec<u8>> {
    encode_png(frame.width(), frame.height(), png::ColorType::Rgb, png::BitDepth::Eight, frame.data())
}

pub fn save_frame_png(frame: &Frame, path: &Path) -> Result<()> {
    std::fs::write(path, encode_frame_png(frame)?)?;
    Ok(())
}

/// 8-bit grayscale PNG with values 0 / 255.
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>> {
    encode_png(mask.width(), mask.height(), png::ColorType::Grayscale, png::BitDepth::Eight, &mask.to_gray8())
}

pub fn save_mask_png(mask: &BinaryMask, path: &Path) -> Result<()> {
    std::fs::write(path, encode_mask_png(mask)?)?;
    Ok(())
}

/// 1-bit grayscale PNG, rows packed MSB first.
pub fn encode_mask_png_1bit(mask: &BinaryMask) -> Result<Vec<u8>> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    let bits = mask.as_slice();
    for y in 0..h {
        for x in 0..w {
            if bits[y * w + x] != 0 {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    encode_png(mask.width(), mask.height(), png::ColorType::Grayscale, png::BitDepth::One, &packed)
}

pub fn save_mask_png_1bit(mask: &BinaryMask, path: &Path) -> Result<()> {
    std::fs::write(path, encode_mask_png_1bit(mask)?)?;
    Ok(())
}

/// Decodes a mask image of any PNG flavor; luma ≥ 128 counts as set.
pub fn decode_mask_png(bytes: &[u8]) -> Result<BinaryMask> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(image_err)?;
    let luma = img.to_luma8();
    let (w, h) = (luma.width(), luma.height());
    let bytes: Vec<u8> = luma.into_raw().into_iter().map(|v| (v >= 128) as u8).collect();
    BinaryMask::from_bytes(w, h, &bytes)
}

pub fn load_mask_png(path: &Path) -> Result<BinaryMask> {
    decode_mask_png(&std::fs::read(path)?)
}

/// Reads one raw RGB24 frame. Returns `Ok(None)` on a clean end of stream.
pub fn read_raw_frame(reader: &mut impl Read, width: u32, height: u32, index: u64) -> Result<Option<Frame>> {
    let len = width as usize * height as usize * 3;
    let mut buf = vec![0u8; len];
    let mut filled = 0;
    while filled < len {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::Input(format!("truncated raw frame: {filled} of {len} bytes")));
        }
        filled += n;
    }
    Frame::new(width, height, buf, index).map(Some)
}

pub fn write_raw_frame(writer: &mut impl Write, frame: &Frame) -> Result<()> {
    writer.write_all(frame.data())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_png_round_trip() {
        let mut f = Frame::filled(5, 3, [1, 2, 3]);
        f.set_pixel(4, 2, [200, 10, 20]);
        let g = decode_frame_png(&encode_frame_png(&f).unwrap(), 0).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn one_bit_mask_round_trip() {
        let m = BinaryMask::from_fn(13, 4, |x, y| (x + y) % 3 == 0);
        assert_eq!(decode_mask_png(&encode_mask_png_1bit(&m).unwrap()).unwrap(), m);
        assert_eq!(decode_mask_png(&encode_mask_png(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn raw_stream() {
        let f = Frame::filled(4, 2, [9, 8, 7]);
        let mut buf = Vec::new();
        write_raw_frame(&mut buf, &f).unwrap();
        write_raw_frame(&mut buf, &f).unwrap();
        let mut cur = std::io::Cursor::new(&buf[..buf.len() - 1]);
        assert!(read_raw_frame(&mut cur, 4, 2, 0).unwrap().is_some());
        assert!(read_raw_frame(&mut cur, 4, 2, 1).is_err());
        let mut cur = std::io::Cursor::new(&buf[..]);
        read_raw_frame(&mut cur, 4, 2, 0).unwrap();
        read_raw_frame(&mut cur, 4, 2, 1).unwrap();
        assert!(read_raw_frame(&mut cur, 4, 2, 2).unwrap().is_none());
    }
}

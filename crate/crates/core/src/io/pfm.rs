//! PFM color images: "PF\n{w} {h}\n-1.0\n" then f32 RGB rows stored
//! bottom-up. A negative scale marks little-endian data.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub fn image_to_pfm(image: &Image) -> Vec<u8> {
    let mut out = format!("PF\n{} {}\n-1.0\n", image.width, image.height).into_bytes();
    for y in (0..image.height).rev() {
        for x in 0..image.width {
            let p = image.pixel(x, y);
            for c in 0..3 {
                out.extend_from_slice(&(p[c] as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn image_from_pfm(bytes: &[u8]) -> Result<Image> {
    let bad = |reason: &str| Error::InvalidManifest { reason: format!("pfm: {reason}") };

    // Header: three whitespace-terminated tokens, then one byte of whitespace
    // before the raster.
    fn token(bytes: &[u8], pos: &mut usize) -> Option<String> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start != *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    }

    let mut pos = 0;
    let next = |p: &mut usize| token(bytes, p).ok_or_else(|| bad("missing header token"));
    if next(&mut pos)? != "PF" {
        return Err(bad("not a color PFM"));
    }
    let width: usize = next(&mut pos)?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = next(&mut pos)?.parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = next(&mut pos)?.parse().map_err(|_| bad("bad scale"))?;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    let little_endian = scale < 0.0;
    let data_start = pos + 1;
    let expected = width * height * 12;
    if bytes.len() < data_start + expected {
        return Err(bad("raster truncated"));
    }

    let mut image = Image::zeros(width, height);
    let mut off = data_start;
    for y in (0..height).rev() {
        for x in 0..width {
            let mut p = [0.0f64; 3];
            for slot in &mut p {
                let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(raw)
                } else {
                    f32::from_be_bytes(raw)
                };
                *slot = v as f64;
                off += 4;
            }
            image.set_pixel(x, y, nalgebra::Vector3::new(p[0], p[1], p[2]));
        }
    }
    Ok(image)
}

pub fn save_pfm(path: &Path, image: &Image) -> Result<()> {
    fs::write(path, image_to_pfm(image))?;
    Ok(())
}

pub fn load_pfm(path: &Path) -> Result<Image> {
    image_from_pfm(&fs::read(path)?)
}

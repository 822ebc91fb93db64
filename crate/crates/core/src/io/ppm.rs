//! 8-bit P6 PPM previews. Lossy by design; PFM stays the canonical format.

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::image::Image;

pub fn image_to_ppm(image: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn save_ppm(path: &Path, image: &Image) -> Result<()> {
    fs::write(path, image_to_ppm(image))?;
    Ok(())
}

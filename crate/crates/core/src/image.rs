use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Row-major RGB image with interleaved f64 channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height * 3] }
    }

    pub fn filled(width: usize, height: usize, rgb: Vector3<f64>) -> Self {
        let mut img = Self::zeros(width, height);
        for px in img.data.chunks_exact_mut(3) {
            px[0] = rgb.x;
            px[1] = rgb.y;
            px[2] = rgb.z;
        }
        img
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {width}x{height} rgb", width * height * 3),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Vector3<f64> {
        let i = (y * self.width + x) * 3;
        Vector3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: Vector3<f64>) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb.x;
        self.data[i + 1] = rgb.y;
        self.data[i + 2] = rgb.z;
    }

    /// Mean over non-overlapping factor x factor blocks. Dimensions must divide evenly.
    pub fn box_downsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("dimensions divisible by {factor}"),
                got: format!("{}x{}", self.width, self.height),
            });
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let inv_area = 1.0 / (factor * factor) as f64;
        let mut out = Image::zeros(w, h);
        for oy in 0..h {
            for ox in 0..w {
                let mut acc = Vector3::zeros();
                for dy in 0..factor {
                    for dx in 0..factor {
                        acc += self.pixel(ox * factor + dx, oy * factor + dy);
                    }
                }
                out.set_pixel(ox, oy, acc * inv_area);
            }
        }
        Ok(out)
    }

    /// Central crop of the given size; the size must not exceed the image.
    pub fn center_crop(&self, width: usize, height: usize) -> Result<Self> {
        if width > self.width || height > self.height {
            return Err(Error::ShapeMismatch {
                expected: format!("crop within {}x{}", self.width, self.height),
                got: format!("{width}x{height}"),
            });
        }
        let x0 = (self.width - width) / 2;
        let y0 = (self.height - height) / 2;
        let mut out = Image::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                out.set_pixel(x, y, self.pixel(x0 + x, y0 + y));
            }
        }
        Ok(out)
    }

    /// Round-trip every sample through f32, the on-disk image precision.
    pub fn quantize_f32(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_averages_blocks() {
        let mut img = Image::zeros(4, 2);
        for y in 0..2 {
            for x in 0..4 {
                let v = (y * 4 + x) as f64;
                img.set_pixel(x, y, Vector3::new(v, 2.0 * v, 0.5));
            }
        }
        let down = img.box_downsample(2).unwrap();
        assert_eq!(down.width, 2);
        assert_eq!(down.height, 1);
        // Block {0,1,4,5} averages to 2.5.
        assert_eq!(down.pixel(0, 0), Vector3::new(2.5, 5.0, 0.5));
        assert_eq!(down.pixel(1, 0), Vector3::new(4.5, 9.0, 0.5));
    }

    #[test]
    fn downsample_rejects_uneven_dimensions() {
        let img = Image::zeros(5, 4);
        assert!(img.box_downsample(2).is_err());
    }

    #[test]
    fn center_crop_takes_middle() {
        let mut img = Image::zeros(4, 4);
        img.set_pixel(1, 1, Vector3::new(1.0, 0.0, 0.0));
        let crop = img.center_crop(2, 2).unwrap();
        assert_eq!(crop.pixel(0, 0), Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn quantize_rounds_to_f32_grid() {
        let img = Image::from_data(1, 1, vec![0.1, 0.2, 0.3]).unwrap();
        let q = img.quantize_f32();
        assert_eq!(q.data[0], 0.1f32 as f64);
        assert_eq!(q.quantize_f32(), q);
    }
}

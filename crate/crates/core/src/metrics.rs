//! Image quality metrics over [0, 1] RGB images: PSNR and windowed SSIM,
//! the latter with an analytic per-pixel gradient for use as a training loss.

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR against a peak value of 1. Zero error has no finite dB value and is
/// reported as its own case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Identical,
    Db(f64),
}

impl Psnr {
    pub fn as_db(&self) -> Option<f64> {
        match *self {
            Psnr::Identical => None,
            Psnr::Db(v) => Some(v),
        }
    }
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", a.width, a.height),
            got: format!("{}x{}", b.width, b.height),
        });
    }
    Ok(())
}

pub fn metric_psnr(a: &Image, b: &Image) -> Result<Psnr> {
    check_shapes(a, b)?;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(Psnr::Identical);
    }
    Ok(Psnr::Db(-10.0 * mse.log10()))
}

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn window_weights() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid horizontal convolution: (w, h) -> (w - 10, h).
fn conv_h(src: &[f64], w: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - (SSIM_WINDOW - 1);
    let mut out = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * src[y * w + x + k];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Valid vertical convolution: (w, h) -> (w, h - 10).
fn conv_v(src: &[f64], w: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oh = h - (SSIM_WINDOW - 1);
    let mut out = vec![0.0; w * oh];
    for y in 0..oh {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * src[(y + k) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn conv2(src: &[f64], w: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    conv_v(&conv_h(src, w, h, win), w - (SSIM_WINDOW - 1), h, win)
}

/// Adjoint of `conv_v`: spreads map values back up to (w, mh + 10).
fn adj_conv_v(map: &[f64], w: usize, mh: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let mut out = vec![0.0; w * (mh + SSIM_WINDOW - 1)];
    for y in 0..mh {
        for x in 0..w {
            let v = map[y * w + x];
            for (k, &wk) in win.iter().enumerate() {
                out[(y + k) * w + x] += wk * v;
            }
        }
    }
    out
}

/// Adjoint of `conv_h`: spreads map values back out to (mw + 10, h).
fn adj_conv_h(map: &[f64], mw: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let w = mw + SSIM_WINDOW - 1;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..mw {
            let v = map[y * mw + x];
            for (k, &wk) in win.iter().enumerate() {
                out[y * w + x + k] += wk * v;
            }
        }
    }
    out
}

fn adj_conv2(map: &[f64], mw: usize, mh: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    adj_conv_h(&adj_conv_v(map, mw, mh, win), mw, mh + SSIM_WINDOW - 1, win)
}

fn channel_plane(image: &Image, c: usize) -> Vec<f64> {
    image.data.iter().skip(c).step_by(3).copied().collect()
}

fn ssim_impl(a: &Image, b: &Image, with_grad: bool) -> Result<(f64, Option<Image>)> {
    check_shapes(a, b)?;
    let (w, h) = (a.width, a.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall { min: SSIM_WINDOW, got: w.min(h) });
    }
    let win = window_weights();
    let mw = w - (SSIM_WINDOW - 1);
    let mh = h - (SSIM_WINDOW - 1);
    let count = (mw * mh * 3) as f64;

    let mut total = 0.0;
    let mut grad = with_grad.then(|| Image::zeros(w, h));

    for c in 0..3 {
        let pa = channel_plane(a, c);
        let pb = channel_plane(b, c);
        let paa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let pbb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();

        let mu_a = conv2(&pa, w, h, &win);
        let mu_b = conv2(&pb, w, h, &win);
        let m_aa = conv2(&paa, w, h, &win);
        let m_bb = conv2(&pbb, w, h, &win);
        let m_ab = conv2(&pab, w, h, &win);

        let mut bar_mu_a = with_grad.then(|| vec![0.0; mw * mh]);
        let mut bar_m_aa = with_grad.then(|| vec![0.0; mw * mh]);
        let mut bar_m_ab = with_grad.then(|| vec![0.0; mw * mh]);

        for p in 0..mw * mh {
            let (ua, ub) = (mu_a[p], mu_b[p]);
            let va = m_aa[p] - ua * ua;
            let vb = m_bb[p] - ub * ub;
            let vab = m_ab[p] - ua * ub;
            let n1 = 2.0 * ua * ub + SSIM_C1;
            let n2 = 2.0 * vab + SSIM_C2;
            let d1 = ua * ua + ub * ub + SSIM_C1;
            let d2 = va + vb + SSIM_C2;
            let inv = 1.0 / (d1 * d2);
            let s = n1 * n2 * inv;
            total += s;

            if with_grad {
                // Raw-moment partials: s depends on mu_a through n1, d1, n2
                // (via vab) and d2 (via va).
                let ds_dn1 = n2 * inv;
                let ds_dn2 = n1 * inv;
                let ds_dd1 = -s / d1;
                let ds_dd2 = -s / d2;
                bar_mu_a.as_mut().unwrap()[p] = (ds_dn1 * 2.0 * ub
                    + ds_dd1 * 2.0 * ua
                    + ds_dn2 * (-2.0 * ub)
                    + ds_dd2 * (-2.0 * ua))
                    / count;
                bar_m_aa.as_mut().unwrap()[p] = ds_dd2 / count;
                bar_m_ab.as_mut().unwrap()[p] = ds_dn2 * 2.0 / count;
            }
        }

        if let Some(g) = grad.as_mut() {
            let g_mu = adj_conv2(&bar_mu_a.unwrap(), mw, mh, &win);
            let g_aa = adj_conv2(&bar_m_aa.unwrap(), mw, mh, &win);
            let g_ab = adj_conv2(&bar_m_ab.unwrap(), mw, mh, &win);
            for x in 0..w * h {
                g.data[x * 3 + c] = g_mu[x] + 2.0 * pa[x] * g_aa[x] + pb[x] * g_ab[x];
            }
        }
    }

    Ok((total / count, grad))
}

/// Mean SSIM over all valid 11x11 windows and channels.
///
/// Errors with `TooSmall` when either dimension is under the window size.
pub fn metric_ssim(a: &Image, b: &Image) -> Result<f64> {
    ssim_impl(a, b, false).map(|(s, _)| s)
}

/// SSIM plus d(mean SSIM)/d(a) per pixel and channel.
pub fn ssim_with_pixel_gradient(a: &Image, b: &Image) -> Result<(f64, Image)> {
    ssim_impl(a, b, true).map(|(s, g)| (s, g.expect("gradient requested")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = Image::zeros(w, h);
        for v in &mut img.data {
            *v = rng.random_range(0.0..1.0);
        }
        img
    }

    #[test]
    fn psnr_of_identical_images_is_the_identical_case() {
        let a = random_image(8, 8, 1);
        assert_eq!(metric_psnr(&a, &a.clone()).unwrap(), Psnr::Identical);
        assert_eq!(metric_psnr(&a, &a).unwrap().as_db(), None);
    }

    #[test]
    fn psnr_of_uniform_offset_is_exact() {
        let a = Image::filled(6, 4, Vector3::repeat(0.4));
        let b = Image::filled(6, 4, Vector3::repeat(0.5));
        // MSE 0.01 against peak 1 is exactly 20 dB.
        let Psnr::Db(db) = metric_psnr(&a, &b).unwrap() else { panic!("not identical") };
        assert_relative_eq!(db, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn psnr_rejects_shape_mismatch() {
        let a = Image::zeros(4, 4);
        let b = Image::zeros(4, 5);
        assert!(matches!(metric_psnr(&a, &b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn ssim_of_an_image_with_itself_is_exactly_one() {
        let a = random_image(16, 13, 2);
        assert_eq!(metric_ssim(&a, &a.clone()).unwrap(), 1.0);
    }

    #[test]
    fn ssim_rejects_images_smaller_than_the_window() {
        let a = Image::zeros(10, 16);
        assert!(matches!(
            metric_ssim(&a, &a.clone()),
            Err(Error::TooSmall { min: 11, got: 10 })
        ));
    }

    #[test]
    fn ssim_of_constant_images_matches_the_closed_form() {
        // Zero variance leaves only the luminance term (2ab + C1)/(a^2 + b^2 + C1).
        let a = Image::filled(16, 16, Vector3::repeat(0.5));
        let b = Image::filled(16, 16, Vector3::repeat(0.6));
        let expected = (2.0 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
        assert_relative_eq!(metric_ssim(&a, &b).unwrap(), expected, epsilon = 1e-9);
        assert_relative_eq!(expected, 0.983_609_244, epsilon = 1e-9);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = random_image(14, 12, 3);
        let b = random_image(14, 12, 4);
        assert_eq!(metric_ssim(&a, &b).unwrap(), metric_ssim(&b, &a).unwrap());
    }

    #[test]
    fn ssim_matches_a_direct_nested_loop_implementation() {
        let a = random_image(14, 13, 5);
        let b = random_image(14, 13, 6);

        let win1 = window_weights();
        let mut win2 = [[0.0; SSIM_WINDOW]; SSIM_WINDOW];
        for i in 0..SSIM_WINDOW {
            for j in 0..SSIM_WINDOW {
                win2[i][j] = win1[i] * win1[j];
            }
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for c in 0..3 {
            for y0 in 0..=a.height - SSIM_WINDOW {
                for x0 in 0..=a.width - SSIM_WINDOW {
                    let (mut ua, mut ub, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..SSIM_WINDOW {
                        for j in 0..SSIM_WINDOW {
                            let pa = a.pixel(x0 + j, y0 + i)[c];
                            let pb = b.pixel(x0 + j, y0 + i)[c];
                            ua += win2[i][j] * pa;
                            ub += win2[i][j] * pb;
                            aa += win2[i][j] * pa * pa;
                            bb += win2[i][j] * pb * pb;
                            ab += win2[i][j] * pa * pb;
                        }
                    }
                    let (va, vb, vab) = (aa - ua * ua, bb - ub * ub, ab - ua * ub);
                    total += ((2.0 * ua * ub + SSIM_C1) * (2.0 * vab + SSIM_C2))
                        / ((ua * ua + ub * ub + SSIM_C1) * (va + vb + SSIM_C2));
                    count += 1;
                }
            }
        }
        let direct = total / count as f64;
        assert_relative_eq!(metric_ssim(&a, &b).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn ssim_pixel_gradient_matches_finite_differences() {
        let a = random_image(12, 12, 7);
        let b = random_image(12, 12, 8);
        let (_, grad) = ssim_with_pixel_gradient(&a, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..12 {
            let idx = rng.random_range(0..a.data.len());
            let mut plus = a.clone();
            plus.data[idx] += h;
            let mut minus = a.clone();
            minus.data[idx] -= h;
            let numeric = (metric_ssim(&plus, &b).unwrap() - metric_ssim(&minus, &b).unwrap())
                / (2.0 * h);
            assert_relative_eq!(grad.data[idx], numeric, epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    #[test]
    fn ssim_degrades_monotonically_with_noise() {
        let a = random_image(20, 20, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise: Vec<f64> = (0..a.data.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noisy = |amp: f64| {
            let mut out = a.clone();
            for (v, n) in out.data.iter_mut().zip(&noise) {
                *v = (*v + amp * n).clamp(0.0, 1.0);
            }
            out
        };
        let s_small = metric_ssim(&a, &noisy(0.02)).unwrap();
        let s_big = metric_ssim(&a, &noisy(0.2)).unwrap();
        assert!(s_small > s_big);
        assert!(s_big > 0.0 && s_small < 1.0);
    }
}

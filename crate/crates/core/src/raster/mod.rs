//! Differentiable tile rasterizer with switchable screen-space and
//! world-space anti-aliasing filters.

mod pipeline;

use nalgebra::{Matrix2, Vector3};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::image::Image;
use crate::scene::Scene;

pub(crate) use pipeline::{bin_splats, prepare_splats, walk_pixel, PreparedSplat, TILE};

/// Screen-space footprint treatment applied after projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode2d {
    /// Dilate the footprint and renormalize opacity by the determinant ratio,
    /// preserving total splat energy.
    Ewa,
    /// Dilate the footprint only; small splats gain energy as they shrink.
    Dilation,
    None,
}

/// World-space covariance treatment applied before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode3d {
    /// Learned rate-dependent filter from each primitive's basis.
    Lod,
    /// Fixed smoothing sized by the maximum training-view sampling rate.
    MipFixed,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub mode_2d: Mode2d,
    pub mode_3d: Mode3d,
    /// Screen-space dilation variance, pixel^2.
    pub s2d: f64,
    /// Strength of the fixed 3D smoothing mode.
    pub s3d: f64,
    /// Contributions below this alpha are skipped; splats whose peak alpha
    /// falls below it are culled outright.
    pub alpha_cutoff: f64,
    /// Blending stops once transmittance drops below this floor.
    pub transmittance_floor: f64,
    /// Footprint bounding boxes extend this many standard deviations.
    pub sigma_cutoff: f64,
    pub background: Vector3<f64>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            mode_2d: Mode2d::Ewa,
            mode_3d: Mode3d::Lod,
            s2d: 0.1,
            s3d: 0.5,
            alpha_cutoff: 1.0 / 255.0,
            transmittance_floor: 1e-4,
            sigma_cutoff: 3.0,
            background: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub image: Image,
    /// Per-pixel transmittance left after blending, row-major.
    pub final_transmittance: Vec<f64>,
    /// Splats that survived culling for this view.
    pub splat_count: usize,
}

/// Screen-space anti-aliasing: dilate by `s2d` and rescale opacity by the
/// determinant ratio so the splat's integrated energy is unchanged.
pub fn ewa_2d(cov2d: &Matrix2<f64>, opacity: f64, s2d: f64) -> (Matrix2<f64>, f64) {
    let (dilated, k) = ewa_detail(cov2d, s2d);
    (dilated, opacity * k)
}

pub(crate) fn ewa_detail(cov2d: &Matrix2<f64>, s2d: f64) -> (Matrix2<f64>, f64) {
    let dilated = cov2d + Matrix2::identity() * s2d;
    let k = (det2(cov2d) / det2(&dilated)).sqrt();
    (dilated, k)
}

/// Classic footprint dilation with no opacity compensation.
pub fn dilation_2d(cov2d: &Matrix2<f64>, opacity: f64, s2d: f64) -> (Matrix2<f64>, f64) {
    (cov2d + Matrix2::identity() * s2d, opacity)
}

#[inline]
pub(crate) fn det2(m: &Matrix2<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Forward state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) splats: Vec<PreparedSplat>,
    pub(crate) bins: Vec<Vec<u32>>,
    pub(crate) prim_count: usize,
    pub(crate) basis_size: usize,
    pub(crate) camera: Camera,
    pub(crate) config: RenderConfig,
}

struct TileRect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

fn tile_rects(width: usize, height: usize) -> Vec<TileRect> {
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let mut rects = Vec::with_capacity(tiles_x * tiles_y);
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            rects.push(TileRect {
                x0: tx * TILE,
                y0: ty * TILE,
                x1: ((tx + 1) * TILE).min(width),
                y1: ((ty + 1) * TILE).min(height),
            });
        }
    }
    rects
}

fn composite_tile(
    splats: &[PreparedSplat],
    order: &[u32],
    rect: &TileRect,
    config: &RenderConfig,
) -> (Vec<Vector3<f64>>, Vec<f64>) {
    let w = rect.x1 - rect.x0;
    let h = rect.y1 - rect.y0;
    let mut pixels = vec![Vector3::zeros(); w * h];
    let mut trans = vec![1.0; w * h];
    for py in rect.y0..rect.y1 {
        for px in rect.x0..rect.x1 {
            let mut acc = Vector3::zeros();
            let t = walk_pixel(splats, order.iter(), px, py, config, |i, _g, a, t_before| {
                acc += splats[i].color * (t_before * a);
            });
            let idx = (py - rect.y0) * w + (px - rect.x0);
            pixels[idx] = acc + config.background * t;
            trans[idx] = t;
        }
    }
    (pixels, trans)
}

fn assemble(
    camera: &Camera,
    rects: &[TileRect],
    tiles: Vec<(Vec<Vector3<f64>>, Vec<f64>)>,
    splat_count: usize,
) -> RenderOutput {
    let mut image = Image::zeros(camera.width, camera.height);
    let mut final_transmittance = vec![1.0; camera.width * camera.height];
    for (rect, (pixels, trans)) in rects.iter().zip(tiles) {
        let w = rect.x1 - rect.x0;
        for py in rect.y0..rect.y1 {
            for px in rect.x0..rect.x1 {
                let idx = (py - rect.y0) * w + (px - rect.x0);
                image.set_pixel(px, py, pixels[idx]);
                final_transmittance[py * camera.width + px] = trans[idx];
            }
        }
    }
    RenderOutput { image, final_transmittance, splat_count }
}

/// Render with tile-level parallelism. Pixels are independent, so the result
/// is identical to `render_serial` bit for bit regardless of thread count.
pub fn render(scene: &Scene, camera: &Camera, config: &RenderConfig) -> RenderOutput {
    render_with_cache(scene, camera, config).0
}

/// Render and keep the prepared forward state for a backward pass.
pub fn render_with_cache(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
) -> (RenderOutput, ForwardCache) {
    let splats = prepare_splats(scene, camera, config);
    let bins = bin_splats(&splats, camera.width, camera.height);
    let rects = tile_rects(camera.width, camera.height);
    let tiles: Vec<(Vec<Vector3<f64>>, Vec<f64>)> = rects
        .par_iter()
        .enumerate()
        .map(|(t, rect)| composite_tile(&splats, &bins[t], rect, config))
        .collect();
    let output = assemble(camera, &rects, tiles, splats.len());
    let cache = ForwardCache {
        splats,
        bins,
        prim_count: scene.len(),
        basis_size: scene.basis_size(),
        camera: camera.clone(),
        config: config.clone(),
    };
    (output, cache)
}

/// Single-threaded reference path: every pixel walks the full sorted splat
/// list. Produces the same output as `render`.
pub fn render_serial(scene: &Scene, camera: &Camera, config: &RenderConfig) -> RenderOutput {
    let splats = prepare_splats(scene, camera, config);
    let all: Vec<u32> = (0..splats.len() as u32).collect();
    let mut image = Image::zeros(camera.width, camera.height);
    let mut final_transmittance = vec![1.0; camera.width * camera.height];
    for py in 0..camera.height {
        for px in 0..camera.width {
            let mut acc = Vector3::zeros();
            let t = walk_pixel(&splats, all.iter(), px, py, config, |i, _g, a, t_before| {
                acc += splats[i].color * (t_before * a);
            });
            image.set_pixel(px, py, acc + config.background * t);
            final_transmittance[py * camera.width + px] = t;
        }
    }
    RenderOutput { image, final_transmittance, splat_count: splats.len() }
}

/// Ground-truth oracle: render at `factor` times the resolution with both
/// filtering modes off, then box-average each factor x factor block.
pub fn supersample_render(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
    factor: usize,
) -> RenderOutput {
    assert!(factor >= 1, "supersampling factor must be at least 1");
    let mut hi_config = config.clone();
    hi_config.mode_2d = Mode2d::None;
    hi_config.mode_3d = Mode3d::None;
    let hi_camera = camera.scaled(factor as f64);
    let hi = render(scene, &hi_camera, &hi_config);
    if factor == 1 {
        return hi;
    }
    let image = hi.image.box_downsample(factor).expect("scaled dimensions divide evenly");
    let inv_area = 1.0 / (factor * factor) as f64;
    let mut final_transmittance = vec![0.0; camera.width * camera.height];
    for oy in 0..camera.height {
        for ox in 0..camera.width {
            let mut acc = 0.0;
            for dy in 0..factor {
                for dx in 0..factor {
                    acc += hi.final_transmittance[(oy * factor + dy) * hi_camera.width + ox * factor + dx];
                }
            }
            final_transmittance[oy * camera.width + ox] = acc * inv_area;
        }
    }
    RenderOutput { image, final_transmittance, splat_count: hi.splat_count }
}

/// Sum of (1 - final transmittance) weighted by pixel area, a resolution-
/// comparable measure of total blended opacity.
pub fn alpha_mass(output: &RenderOutput, pixel_area: f64) -> f64 {
    output.final_transmittance.iter().map(|t| 1.0 - t).sum::<f64>() * pixel_area
}

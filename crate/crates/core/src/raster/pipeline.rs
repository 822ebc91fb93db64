use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::camera::Camera;
use crate::lod::{lod_filter_detailed, sampling_rate_pass, LodFilterDetail};
use crate::math::clamp01;
use crate::primitive::build_covariance;
use crate::projection::project_camera_space;
use crate::scene::Scene;

use super::{dilation_2d, Mode2d, Mode3d, RenderConfig};

pub(crate) const TILE: usize = 16;

/// One primitive after culling, filtering and projection, ready to blend.
#[derive(Debug, Clone)]
pub(crate) struct PreparedSplat {
    pub prim: usize,
    pub t_cam: Vector3<f64>,
    pub depth: f64,
    pub nu: f64,
    pub lod: Option<LodFilterDetail>,
    pub cov3d: Matrix3<f64>,
    pub cov3d_f: Matrix3<f64>,
    /// Determinant-ratio opacity factor of the fixed 3D smoothing mode (1 otherwise).
    pub mip_k: f64,
    pub alpha_base: f64,
    pub alpha3: f64,
    pub color: Vector3<f64>,
    pub mean2d: Vector2<f64>,
    pub cov2d_raw: Matrix2<f64>,
    pub inv_cov2d: Matrix2<f64>,
    /// Determinant-ratio opacity factor of the EWA 2D filter (1 otherwise).
    pub ewa_k: f64,
    pub opacity: f64,
    // Half-open pixel bounds of the sigma_cutoff footprint, clipped to the image.
    pub x_lo: usize,
    pub x_hi: usize,
    pub y_lo: usize,
    pub y_hi: usize,
}

impl PreparedSplat {
    #[inline]
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x_lo && px < self.x_hi && py >= self.y_lo && py < self.y_hi
    }
}

/// Cull, filter, project and depth-sort every primitive for one camera.
///
/// The fixed smoothing mode requires `scene.max_rates`; call
/// `Scene::compute_max_rates` with the training cameras first.
pub(crate) fn prepare_splats(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
) -> Vec<PreparedSplat> {
    let positions = scene.positions();
    let rates = match config.mode_3d {
        Mode3d::Lod => sampling_rate_pass(camera, &positions),
        _ => Vec::new(),
    };
    let max_rates = match config.mode_3d {
        Mode3d::MipFixed => Some(
            scene
                .max_rates
                .as_deref()
                .expect("MipFixed rendering requires Scene::compute_max_rates"),
        ),
        _ => None,
    };

    let mut splats = Vec::new();
    for (k, prim) in scene.primitives.iter().enumerate() {
        let t_cam = camera.world_to_camera(&prim.position);
        if t_cam.z <= camera.near {
            continue;
        }
        let cov3d = build_covariance(prim);
        let alpha_base = prim.opacity();

        let (nu, lod, cov3d_f, mip_k, alpha3, color) = match config.mode_3d {
            Mode3d::Lod => {
                let nu = match rates[k] {
                    Some(nu) => nu,
                    None => continue,
                };
                let (detail, alpha3, color) =
                    match lod_filter_detailed(&scene.bases[k], alpha_base, &prim.color, nu, scene.nu_ref) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                let cov3d_f = cov3d + Matrix3::identity() * detail.inflation;
                (nu, Some(detail), cov3d_f, 1.0, alpha3, color)
            }
            Mode3d::MipFixed => {
                let nu_hat = max_rates.unwrap()[k];
                let cov3d_f = cov3d + Matrix3::identity() * (config.s3d / nu_hat);
                let mip_k = (cov3d.determinant() / cov3d_f.determinant()).sqrt();
                let alpha3 = alpha_base * mip_k;
                (0.0, None, cov3d_f, mip_k, alpha3, prim.color.map(clamp01))
            }
            Mode3d::None => (0.0, None, cov3d, 1.0, alpha_base, prim.color.map(clamp01)),
        };

        let geom = project_camera_space(camera, &t_cam, &cov3d_f);
        let (cov2d, opacity, ewa_k) = match config.mode_2d {
            Mode2d::Ewa => {
                let (cov2d, k) = super::ewa_detail(&geom.cov2d, config.s2d);
                (cov2d, alpha3 * k, k)
            }
            Mode2d::Dilation => {
                let (cov2d, op) = dilation_2d(&geom.cov2d, alpha3, config.s2d);
                (cov2d, op, 1.0)
            }
            Mode2d::None => (geom.cov2d, alpha3, 1.0),
        };

        if !(opacity >= config.alpha_cutoff) {
            continue;
        }
        let det = cov2d[(0, 0)] * cov2d[(1, 1)] - cov2d[(0, 1)] * cov2d[(1, 0)];
        if !(det > 0.0) || !det.is_finite() || !geom.mean2d.x.is_finite() || !geom.mean2d.y.is_finite() {
            continue;
        }
        let inv_cov2d = Matrix2::new(
            cov2d[(1, 1)] / det,
            -cov2d[(0, 1)] / det,
            -cov2d[(1, 0)] / det,
            cov2d[(0, 0)] / det,
        );

        // Largest footprint eigenvalue bounds the sigma_cutoff ellipse.
        let half_tr = 0.5 * (cov2d[(0, 0)] + cov2d[(1, 1)]);
        let disc = (0.5 * (cov2d[(0, 0)] - cov2d[(1, 1)])).powi(2) + cov2d[(0, 1)] * cov2d[(1, 0)];
        let lambda_max = half_tr + disc.max(0.0).sqrt();
        let radius = config.sigma_cutoff * lambda_max.sqrt();

        // Pixel x covers center x + 0.5; include pixels whose center lies in the box.
        let x_lo = (geom.mean2d.x - radius - 0.5).ceil().max(0.0) as i64;
        let x_hi = ((geom.mean2d.x + radius - 0.5).floor() as i64 + 1).min(camera.width as i64);
        let y_lo = (geom.mean2d.y - radius - 0.5).ceil().max(0.0) as i64;
        let y_hi = ((geom.mean2d.y + radius - 0.5).floor() as i64 + 1).min(camera.height as i64);
        if x_lo >= x_hi || y_lo >= y_hi {
            continue;
        }

        splats.push(PreparedSplat {
            prim: k,
            t_cam,
            depth: geom.depth,
            nu,
            lod,
            cov3d,
            cov3d_f,
            mip_k,
            alpha_base,
            alpha3,
            color,
            mean2d: geom.mean2d,
            cov2d_raw: geom.cov2d,
            inv_cov2d,
            ewa_k,
            opacity,
            x_lo: x_lo as usize,
            x_hi: x_hi as usize,
            y_lo: y_lo as usize,
            y_hi: y_hi as usize,
        });
    }

    // Front-to-back order; equal depths keep primitive-index order.
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.prim.cmp(&b.prim)));
    splats
}

/// Indices into the sorted splat list per image tile, in splat order.
pub(crate) fn bin_splats(splats: &[PreparedSplat], width: usize, height: usize) -> Vec<Vec<u32>> {
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let mut bins = vec![Vec::new(); tiles_x * tiles_y];
    for (i, s) in splats.iter().enumerate() {
        let tx_lo = s.x_lo / TILE;
        let tx_hi = (s.x_hi - 1) / TILE;
        let ty_lo = s.y_lo / TILE;
        let ty_hi = (s.y_hi - 1) / TILE;
        for ty in ty_lo..=ty_hi {
            for tx in tx_lo..=tx_hi {
                bins[ty * tiles_x + tx].push(i as u32);
            }
        }
    }
    bins
}

/// Walk the blend sequence of one pixel in front-to-back order, invoking
/// `visit(splat_index, g, a, transmittance_before)` for every kept contribution.
/// Returns the final transmittance. Both render paths and the backward pass
/// share this loop, so contribution sequences are identical everywhere.
#[inline]
pub(crate) fn walk_pixel<'a, I, F>(
    splats: &[PreparedSplat],
    order: I,
    px: usize,
    py: usize,
    config: &RenderConfig,
    mut visit: F,
) -> f64
where
    I: Iterator<Item = &'a u32>,
    F: FnMut(usize, f64, f64, f64),
{
    let cx = px as f64 + 0.5;
    let cy = py as f64 + 0.5;
    let mut transmittance = 1.0;
    for &i in order {
        if transmittance < config.transmittance_floor {
            break;
        }
        let s = &splats[i as usize];
        if !s.contains(px, py) {
            continue;
        }
        let dx = cx - s.mean2d.x;
        let dy = cy - s.mean2d.y;
        let q = s.inv_cov2d[(0, 0)] * dx * dx
            + (s.inv_cov2d[(0, 1)] + s.inv_cov2d[(1, 0)]) * dx * dy
            + s.inv_cov2d[(1, 1)] * dy * dy;
        let g = (-0.5 * q).exp();
        let a = s.opacity * g;
        if a < config.alpha_cutoff {
            continue;
        }
        visit(i as usize, g, a, transmittance);
        transmittance *= 1.0 - a;
    }
    transmittance
}

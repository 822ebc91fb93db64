//! Hand-written reverse-mode gradients for the full render pipeline.
//!
//! The pixel phase mirrors the forward blend walk per tile in parallel and
//! accumulates screen-space gradients per splat; tile buffers are reduced in
//! tile order so results are bit-identical across thread counts. The splat
//! phase then chains those through the 2D filter, projection, 3D filter and
//! parameter mappings serially.

mod fd;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::lod::LodBasis;
use crate::math::{clamp01_grad_mask, sigmoid, softplus};
use crate::primitive::{build_covariance, quat_normalize, quat_rotation_jacobian, quat_to_rotation};
use crate::projection::projection_jacobian;
use crate::raster::{det2, walk_pixel, ForwardCache, Mode2d, Mode3d, PreparedSplat, RenderConfig};
use crate::scene::Scene;

pub use fd::{fd_check, FdCheckConfig, FdReport, FdSample, GroupStats, ParamGroup};

/// Loss gradients for every scene parameter, indexed like the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub position: Vec<Vector3<f64>>,
    pub rotation: Vec<[f64; 4]>,
    pub log_scales: Vec<Vector3<f64>>,
    pub opacity_logit: Vec<f64>,
    pub color: Vec<Vector3<f64>>,
    pub lod_centers: Vec<Vec<f64>>,
    pub lod_log_widths: Vec<Vec<f64>>,
    pub lod_weights_scale: Vec<Vec<f64>>,
    pub lod_weights_opacity: Vec<Vec<f64>>,
    pub lod_weights_color: Vec<Vec<Vector3<f64>>>,
}

impl GradientBundle {
    pub fn zeros(prim_count: usize, basis_size: usize) -> Self {
        Self {
            position: vec![Vector3::zeros(); prim_count],
            rotation: vec![[0.0; 4]; prim_count],
            log_scales: vec![Vector3::zeros(); prim_count],
            opacity_logit: vec![0.0; prim_count],
            color: vec![Vector3::zeros(); prim_count],
            lod_centers: vec![vec![0.0; basis_size]; prim_count],
            lod_log_widths: vec![vec![0.0; basis_size]; prim_count],
            lod_weights_scale: vec![vec![0.0; basis_size]; prim_count],
            lod_weights_opacity: vec![vec![0.0; basis_size]; prim_count],
            lod_weights_color: vec![vec![Vector3::zeros(); basis_size]; prim_count],
        }
    }

    pub fn prim_count(&self) -> usize {
        self.position.len()
    }

    /// Keep only the rows selected by the mask, mirroring `Scene::retain_mask`.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.prim_count());
        fn rows<T>(v: &mut Vec<T>, keep: &[bool]) {
            let mut i = 0;
            v.retain(|_| {
                i += 1;
                keep[i - 1]
            });
        }
        rows(&mut self.position, keep);
        rows(&mut self.rotation, keep);
        rows(&mut self.log_scales, keep);
        rows(&mut self.opacity_logit, keep);
        rows(&mut self.color, keep);
        rows(&mut self.lod_centers, keep);
        rows(&mut self.lod_log_widths, keep);
        rows(&mut self.lod_weights_scale, keep);
        rows(&mut self.lod_weights_opacity, keep);
        rows(&mut self.lod_weights_color, keep);
    }

    /// Largest absolute entry across every parameter group.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.prim_count() {
            m = m.max(self.position[i].abs().max());
            m = m.max(self.rotation[i].iter().fold(0.0f64, |a, &v| a.max(v.abs())));
            m = m.max(self.log_scales[i].abs().max());
            m = m.max(self.opacity_logit[i].abs());
            m = m.max(self.color[i].abs().max());
            for c in 0..self.lod_centers[i].len() {
                m = m.max(self.lod_centers[i][c].abs());
                m = m.max(self.lod_log_widths[i][c].abs());
                m = m.max(self.lod_weights_scale[i][c].abs());
                m = m.max(self.lod_weights_opacity[i][c].abs());
                m = m.max(self.lod_weights_color[i][c].abs().max());
            }
        }
        m
    }
}

/// Screen-space gradient accumulator for one prepared splat.
#[derive(Debug, Clone)]
struct ScreenGrad {
    color: Vector3<f64>,
    opacity: f64,
    mean2d: Vector2<f64>,
    cov2d: Matrix2<f64>,
}

impl ScreenGrad {
    fn zero() -> Self {
        Self {
            color: Vector3::zeros(),
            opacity: 0.0,
            mean2d: Vector2::zeros(),
            cov2d: Matrix2::zeros(),
        }
    }

    fn is_zero(&self) -> bool {
        self.color == Vector3::zeros()
            && self.opacity == 0.0
            && self.mean2d == Vector2::zeros()
            && self.cov2d == Matrix2::zeros()
    }

    fn add(&mut self, other: &ScreenGrad) {
        self.color += other.color;
        self.opacity += other.opacity;
        self.mean2d += other.mean2d;
        self.cov2d += other.cov2d;
    }
}

fn mismatch(reason: &str) -> Error {
    Error::MismatchedForward { reason: reason.to_string() }
}

/// Backward pass for `loss_grad` = dL/dpixel of the cached forward render.
///
/// `scene`, `camera` and `config` must be the exact values the cache was built
/// from; cheap recomputation checks reject mutated inputs.
pub fn backward(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
    cache: &ForwardCache,
    loss_grad: &Image,
) -> Result<GradientBundle> {
    if scene.len() != cache.prim_count || scene.basis_size() != cache.basis_size {
        return Err(mismatch("scene shape differs from the cached forward pass"));
    }
    if *camera != cache.camera {
        return Err(mismatch("camera differs from the cached forward pass"));
    }
    if *config != cache.config {
        return Err(mismatch("render config differs from the cached forward pass"));
    }
    if loss_grad.width != camera.width || loss_grad.height != camera.height {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} loss gradient", camera.width, camera.height),
            got: format!("{}x{}", loss_grad.width, loss_grad.height),
        });
    }

    let screen = pixel_phase(cache, loss_grad);
    splat_phase(scene, camera, config, &cache.splats, &screen)
}

/// Accumulate per-splat screen-space gradients, tile-parallel.
fn pixel_phase(cache: &ForwardCache, loss_grad: &Image) -> Vec<ScreenGrad> {
    let splats = &cache.splats;
    let config = &cache.config;
    let width = cache.camera.width;
    let height = cache.camera.height;
    let tile = crate::raster::TILE;
    let tiles_x = width.div_ceil(tile);
    let tiles_y = height.div_ceil(tile);

    let locals: Vec<Vec<ScreenGrad>> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let x0 = (t % tiles_x) * tile;
            let y0 = (t / tiles_x) * tile;
            let x1 = (x0 + tile).min(width);
            let y1 = (y0 + tile).min(height);
            let mut local = vec![ScreenGrad::zero(); splats.len()];
            let mut visited: Vec<(usize, f64, f64, f64)> = Vec::new();
            for py in y0..y1 {
                for px in x0..x1 {
                    visited.clear();
                    walk_pixel(splats, cache.bins[t].iter(), px, py, config, |i, g, a, tb| {
                        visited.push((i, g, a, tb));
                    });
                    let p_bar = loss_grad.pixel(px, py);
                    blend_backward(splats, &visited, px, py, &p_bar, config, &mut local);
                }
            }
            local
        })
        .collect();

    // Reduce in tile index order: addition order is fixed, so the result does
    // not depend on thread scheduling.
    let mut screen = vec![ScreenGrad::zero(); splats.len()];
    for local in &locals {
        for (acc, l) in screen.iter_mut().zip(local) {
            acc.add(l);
        }
    }
    screen
}

/// Reverse walk over one pixel's blended contributions.
///
/// With suffix_k = sum_{m>k} c_m a_m prod_{k<j<m}(1-a_j) + bg prod_{j>k}(1-a_j),
/// the alpha gradient is T_k (c_k - suffix_k) . p_bar, which needs no division
/// and stays exact even for fully opaque contributions.
fn blend_backward(
    splats: &[PreparedSplat],
    visited: &[(usize, f64, f64, f64)],
    px: usize,
    py: usize,
    p_bar: &Vector3<f64>,
    config: &RenderConfig,
    local: &mut [ScreenGrad],
) {
    let cx = px as f64 + 0.5;
    let cy = py as f64 + 0.5;
    let mut suffix = config.background;
    for &(i, g, a, t_before) in visited.iter().rev() {
        let s = &splats[i];
        let w = t_before * a;
        let grad = &mut local[i];
        grad.color += p_bar * w;

        let a_bar = t_before * p_bar.dot(&(s.color - suffix));
        grad.opacity += a_bar * g;
        let g_bar = a_bar * s.opacity;
        let q_bar = -0.5 * g * g_bar;

        let dx = cx - s.mean2d.x;
        let dy = cy - s.mean2d.y;
        let b = &s.inv_cov2d;
        let bsum = b[(0, 1)] + b[(1, 0)];
        grad.mean2d.x -= q_bar * (2.0 * b[(0, 0)] * dx + bsum * dy);
        grad.mean2d.y -= q_bar * (bsum * dx + 2.0 * b[(1, 1)] * dy);
        // dq/dC = -C^-1 d d^T C^-1 for the quadratic form q = d^T C^-1 d.
        let ux = b[(0, 0)] * dx + b[(0, 1)] * dy;
        let uy = b[(1, 0)] * dx + b[(1, 1)] * dy;
        grad.cov2d[(0, 0)] -= q_bar * ux * ux;
        grad.cov2d[(0, 1)] -= q_bar * ux * uy;
        grad.cov2d[(1, 0)] -= q_bar * uy * ux;
        grad.cov2d[(1, 1)] -= q_bar * uy * uy;

        suffix = s.color * a + suffix * (1.0 - a);
    }
}

fn inv2(m: &Matrix2<f64>, det: f64) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)] / det, -m[(0, 1)] / det, -m[(1, 0)] / det, m[(0, 0)] / det)
}

/// Chain screen gradients through filters, projection and parameter mappings.
fn splat_phase(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
    splats: &[PreparedSplat],
    screen: &[ScreenGrad],
) -> Result<GradientBundle> {
    let mut out = GradientBundle::zeros(scene.len(), scene.basis_size());
    let w_mat = camera.rotation;

    for (s, sg) in splats.iter().zip(screen) {
        let i = s.prim;
        let prim = &scene.primitives[i];
        if camera.world_to_camera(&prim.position) != s.t_cam
            || prim.opacity() != s.alpha_base
            || build_covariance(prim) != s.cov3d
        {
            return Err(mismatch("primitive values differ from the cached forward pass"));
        }
        if sg.is_zero() {
            continue;
        }

        // 2D filter stage.
        let (cov2d_raw_bar, alpha3_bar) = match config.mode_2d {
            Mode2d::Ewa => {
                let alpha3_bar = sg.opacity * s.ewa_k;
                let k_bar = sg.opacity * s.alpha3;
                let det_raw = det2(&s.cov2d_raw);
                let mut raw_bar = sg.cov2d;
                if det_raw > 0.0 {
                    // dk/dA = k/2 (A^-1 - B^-1) for k = sqrt(det A / det B), B = A + s I.
                    raw_bar += (inv2(&s.cov2d_raw, det_raw) - s.inv_cov2d)
                        * (0.5 * s.ewa_k * k_bar);
                }
                (raw_bar, alpha3_bar)
            }
            Mode2d::Dilation | Mode2d::None => (sg.cov2d, sg.opacity),
        };

        // Projection stage: cov2d_raw = A Sigma_f A^T with A = J W.
        let t = s.t_cam;
        let inv_z = 1.0 / t.z;
        let inv_z2 = inv_z * inv_z;
        let j = projection_jacobian(camera, &t);
        let a_mat = j * w_mat;
        let sigma_f_bar = a_mat.transpose() * cov2d_raw_bar * a_mat;
        let a_bar = (cov2d_raw_bar + cov2d_raw_bar.transpose()) * a_mat * s.cov3d_f;
        let j_bar = a_bar * w_mat.transpose();

        let mut t_bar = Vector3::new(
            sg.mean2d.x * camera.fx * inv_z,
            sg.mean2d.y * camera.fy * inv_z,
            -(sg.mean2d.x * camera.fx * t.x + sg.mean2d.y * camera.fy * t.y) * inv_z2,
        );
        t_bar.x += j_bar[(0, 2)] * (-camera.fx * inv_z2);
        t_bar.y += j_bar[(1, 2)] * (-camera.fy * inv_z2);
        t_bar.z += j_bar[(0, 0)] * (-camera.fx * inv_z2)
            + j_bar[(1, 1)] * (-camera.fy * inv_z2)
            + j_bar[(0, 2)] * (2.0 * camera.fx * t.x * inv_z2 * inv_z)
            + j_bar[(1, 2)] * (2.0 * camera.fy * t.y * inv_z2 * inv_z);

        // 3D filter stage.
        let mut cov3d_bar = sigma_f_bar;
        let mut alpha_base_bar = 0.0;
        let mut color_prim_bar = Vector3::zeros();
        match config.mode_3d {
            Mode3d::Lod => {
                let detail = s.lod.as_ref().expect("Lod splats carry filter detail");
                let basis: &LodBasis = &scene.bases[i];

                let inflation_bar = sigma_f_bar.trace();
                // inflation = max(softplus(g) - softplus(0), 0); take the right
                // derivative at the kink so training can leave the identity init.
                let g_scale_bar = if detail.g_scale >= 0.0 {
                    inflation_bar * sigmoid(detail.g_scale)
                } else {
                    0.0
                };

                let pre_opacity_bar = alpha3_bar * clamp01_grad_mask(detail.pre_opacity);
                alpha_base_bar += pre_opacity_bar;
                let g_opacity_bar = pre_opacity_bar;

                let pre_color_bar = Vector3::new(
                    sg.color.x * clamp01_grad_mask(detail.pre_color.x),
                    sg.color.y * clamp01_grad_mask(detail.pre_color.y),
                    sg.color.z * clamp01_grad_mask(detail.pre_color.z),
                );
                color_prim_bar += pre_color_bar;
                let g_color_bar = pre_color_bar;

                let mut x_bar = 0.0;
                for c in 0..basis.len() {
                    let sigma_c = softplus(basis.log_widths[c]);
                    let z = (detail.x - basis.centers[c]) / sigma_c;
                    let e = detail.bumps[c];
                    out.lod_weights_scale[i][c] += g_scale_bar * e;
                    out.lod_weights_opacity[i][c] += g_opacity_bar * e;
                    out.lod_weights_color[i][c] += g_color_bar * e;
                    let e_bar = g_scale_bar * basis.weights_scale[c]
                        + g_opacity_bar * basis.weights_opacity[c]
                        + g_color_bar.dot(&basis.weights_color[c]);
                    let z_bar = e_bar * e * (-z);
                    out.lod_centers[i][c] += z_bar * (-1.0 / sigma_c);
                    let sigma_bar = z_bar * (-z / sigma_c);
                    out.lod_log_widths[i][c] += sigma_bar * sigmoid(basis.log_widths[c]);
                    x_bar += z_bar / sigma_c;
                }

                // x = log2(nu / nu_ref), nu = f_eff / |t|.
                let nu_bar = x_bar / (s.nu * std::f64::consts::LN_2);
                let d2 = t.norm_squared();
                t_bar += t * (nu_bar * (-s.nu / d2));
            }
            Mode3d::MipFixed => {
                // nu_hat is a training-set constant, not differentiated.
                alpha_base_bar += alpha3_bar * s.mip_k;
                let k_bar = alpha3_bar * s.alpha_base;
                if let (Some(inv_raw), Some(inv_f)) =
                    (s.cov3d.try_inverse(), s.cov3d_f.try_inverse())
                {
                    cov3d_bar += (inv_raw - inv_f) * (0.5 * s.mip_k * k_bar);
                }
                color_prim_bar += Vector3::new(
                    sg.color.x * clamp01_grad_mask(prim.color.x),
                    sg.color.y * clamp01_grad_mask(prim.color.y),
                    sg.color.z * clamp01_grad_mask(prim.color.z),
                );
            }
            Mode3d::None => {
                alpha_base_bar += alpha3_bar;
                color_prim_bar += Vector3::new(
                    sg.color.x * clamp01_grad_mask(prim.color.x),
                    sg.color.y * clamp01_grad_mask(prim.color.y),
                    sg.color.z * clamp01_grad_mask(prim.color.z),
                );
            }
        }

        // Covariance build: Sigma = M M^T, M = R diag(s).
        let qn = quat_normalize(&prim.rotation);
        let rot = quat_to_rotation(&qn);
        let scales = prim.scales();
        let m = Matrix3::from_columns(&[
            rot.column(0) * scales.x,
            rot.column(1) * scales.y,
            rot.column(2) * scales.z,
        ]);
        let m_bar = (cov3d_bar + cov3d_bar.transpose()) * m;
        let mut rot_bar = Matrix3::zeros();
        let mut s_bar = Vector3::zeros();
        for col in 0..3 {
            for row in 0..3 {
                rot_bar[(row, col)] = m_bar[(row, col)] * scales[col];
                s_bar[col] += m_bar[(row, col)] * rot[(row, col)];
            }
        }
        out.log_scales[i] += s_bar.component_mul(&scales);

        let jacs = quat_rotation_jacobian(&qn);
        let mut ghat = [0.0; 4];
        for c in 0..4 {
            ghat[c] = rot_bar.component_mul(&jacs[c]).sum();
        }
        // Through normalization: (I - qn qn^T) / |q|.
        let norm_raw = (prim.rotation.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let dot = (0..4).map(|c| qn[c] * ghat[c]).sum::<f64>();
        for c in 0..4 {
            out.rotation[i][c] += (ghat[c] - qn[c] * dot) / norm_raw;
        }

        out.opacity_logit[i] += alpha_base_bar * s.alpha_base * (1.0 - s.alpha_base);
        out.color[i] += color_prim_bar;
        out.position[i] += w_mat.transpose() * t_bar;
    }

    Ok(out)
}

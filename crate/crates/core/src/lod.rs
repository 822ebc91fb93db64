use nalgebra::{Matrix3, Vector3};

use crate::camera::{sampling_rate, Camera};
use crate::error::{Error, Result};
use crate::math::{clamp01, softplus};
use crate::primitive::GaussianPrimitive;

/// Per-primitive Gaussian-mixture basis over normalized log sampling rate.
///
/// Three heads (scale, opacity, color) share the same centers and widths and
/// differ only in their mixture weights. `log_widths` maps to positive widths
/// through a softplus.
#[derive(Debug, Clone, PartialEq)]
pub struct LodBasis {
    pub centers: Vec<f64>,
    pub log_widths: Vec<f64>,
    pub weights_scale: Vec<f64>,
    pub weights_opacity: Vec<f64>,
    pub weights_color: Vec<Vector3<f64>>,
}

/// Normalized log rates covered by the default basis placement.
pub const BASIS_RANGE: (f64, f64) = (-4.0, 1.0);

impl LodBasis {
    /// Basis with evenly spaced centers, widths chosen so neighboring bumps
    /// cross at half height, and all weights zero (an exact identity filter).
    pub fn identity(count: usize) -> Self {
        assert!(count > 0, "basis needs at least one component");
        let (lo, hi) = BASIS_RANGE;
        let spacing = if count > 1 { (hi - lo) / (count - 1) as f64 } else { hi - lo };
        let centers: Vec<f64> = (0..count)
            .map(|i| if count > 1 { lo + spacing * i as f64 } else { 0.5 * (lo + hi) })
            .collect();
        // Two unit Gaussians spaced `spacing` apart evaluate to 1/2 at their midpoint
        // when sigma = spacing / (2 sqrt(2 ln 2)).
        let sigma = spacing / (2.0 * (2.0 * 2.0_f64.ln()).sqrt());
        let log_width = crate::math::inverse_softplus(sigma);
        Self {
            centers,
            log_widths: vec![log_width; count],
            weights_scale: vec![0.0; count],
            weights_opacity: vec![0.0; count],
            weights_color: vec![Vector3::zeros(); count],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Positive mixture widths.
    pub fn widths(&self) -> Vec<f64> {
        self.log_widths.iter().map(|&lw| softplus(lw)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.centers.len();
        let ok = self.log_widths.len() == l
            && self.weights_scale.len() == l
            && self.weights_opacity.len() == l
            && self.weights_color.len() == l;
        if !ok {
            return Err(Error::ShapeMismatch {
                expected: format!("all basis arrays of length {l}"),
                got: format!(
                    "log_widths {}, weights_scale {}, weights_opacity {}, weights_color {}",
                    self.log_widths.len(),
                    self.weights_scale.len(),
                    self.weights_opacity.len(),
                    self.weights_color.len()
                ),
            });
        }
        Ok(())
    }
}

/// Gaussian primitive attributes after rate-dependent filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGaussian {
    pub cov3d: Matrix3<f64>,
    pub opacity: f64,
    pub color: Vector3<f64>,
}

/// Sum of weighted Gaussian bumps: sum_i w_i exp(-(x - mu_i)^2 / (2 sigma_i^2)).
pub fn gmm_eval(centers: &[f64], widths: &[f64], weights: &[f64], x: f64) -> f64 {
    debug_assert_eq!(centers.len(), widths.len());
    debug_assert_eq!(centers.len(), weights.len());
    let mut acc = 0.0;
    for i in 0..centers.len() {
        let z = (x - centers[i]) / widths[i];
        acc += weights[i] * (-0.5 * z * z).exp();
    }
    acc
}

/// Log2 of the sampling rate relative to the scene reference rate.
pub fn normalize_rate(nu: f64, nu_ref: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::DomainError { what: format!("sampling rate {nu} must be positive") });
    }
    if !(nu_ref > 0.0) {
        return Err(Error::DomainError {
            what: format!("reference rate {nu_ref} must be positive"),
        });
    }
    Ok((nu / nu_ref).log2())
}

/// All intermediates of one LOD filter evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LodFilterDetail {
    pub x: f64,
    /// exp(-(x - mu_i)^2 / (2 sigma_i^2)) per component.
    pub bumps: Vec<f64>,
    pub g_scale: f64,
    // Per-head responses; the backward pass rebuilds them, tests compare them.
    #[cfg_attr(not(test), allow(dead_code))]
    pub g_opacity: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub g_color: Vector3<f64>,
    pub inflation: f64,
    pub pre_opacity: f64,
    pub pre_color: Vector3<f64>,
}

pub(crate) fn lod_filter_detailed(
    basis: &LodBasis,
    base_opacity: f64,
    base_color: &Vector3<f64>,
    nu: f64,
    nu_ref: f64,
) -> Result<(LodFilterDetail, f64, Vector3<f64>)> {
    let x = normalize_rate(nu, nu_ref)?;
    let l = basis.len();
    let mut bumps = vec![0.0; l];
    let mut g_scale = 0.0;
    let mut g_opacity = 0.0;
    let mut g_color = Vector3::zeros();
    for i in 0..l {
        let sigma = softplus(basis.log_widths[i]);
        let z = (x - basis.centers[i]) / sigma;
        let e = (-0.5 * z * z).exp();
        bumps[i] = e;
        g_scale += basis.weights_scale[i] * e;
        g_opacity += basis.weights_opacity[i] * e;
        g_color += basis.weights_color[i] * e;
    }
    // Zero weights give g_scale = 0 and softplus(0) - softplus(0) = 0 exactly,
    // so the identity basis adds literally nothing.
    let inflation = (softplus(g_scale) - softplus(0.0)).max(0.0);
    let pre_opacity = base_opacity + g_opacity;
    let pre_color = base_color + g_color;
    let detail = LodFilterDetail {
        x,
        bumps,
        g_scale,
        g_opacity,
        g_color,
        inflation,
        pre_opacity,
        pre_color,
    };
    let opacity = clamp01(pre_opacity);
    let color = pre_color.map(clamp01);
    Ok((detail, opacity, color))
}

/// Rate-dependent filter: inflates the 3D covariance isotropically by a learned
/// non-negative amount and adds learned residuals to opacity and color, both
/// hard-clamped to [0, 1]. With all-zero weights this is an exact identity.
pub fn lod_filter(
    prim: &GaussianPrimitive,
    cov3d: &Matrix3<f64>,
    basis: &LodBasis,
    nu: f64,
    nu_ref: f64,
) -> Result<FilteredGaussian> {
    let (detail, opacity, color) =
        lod_filter_detailed(basis, prim.opacity(), &prim.color, nu, nu_ref)?;
    Ok(FilteredGaussian {
        cov3d: cov3d + Matrix3::identity() * detail.inflation,
        opacity,
        color,
    })
}

/// Fixed low-pass baseline: adds (s / nu_hat) to the covariance diagonal and
/// rescales opacity by the determinant ratio so total splat energy is preserved.
pub fn mip_smoothing_filter(
    cov3d: &Matrix3<f64>,
    opacity: f64,
    nu_hat: f64,
    s: f64,
) -> (Matrix3<f64>, f64) {
    let filtered = cov3d + Matrix3::identity() * (s / nu_hat);
    let scale = (cov3d.determinant() / filtered.determinant()).sqrt();
    (filtered, opacity * scale)
}

/// Largest sampling rate of `position` over the given cameras.
///
/// Errors with `NoVisibleView` when every camera has the point at or behind
/// its near plane.
pub fn max_sampling_rate(cameras: &[Camera], position: &Vector3<f64>) -> Result<f64> {
    let mut best: Option<f64> = None;
    for cam in cameras {
        if let Ok(nu) = sampling_rate(cam, position) {
            best = Some(best.map_or(nu, |b| b.max(nu)));
        }
    }
    best.ok_or(Error::NoVisibleView)
}

/// Per-primitive sampling rates for one camera in a single linear pass.
/// Positions at or behind the near plane yield `None`.
pub fn sampling_rate_pass(camera: &Camera, positions: &[Vector3<f64>]) -> Vec<Option<f64>> {
    positions
        .iter()
        .map(|p| sampling_rate(camera, p).ok())
        .collect()
}

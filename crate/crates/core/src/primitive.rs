use nalgebra::{Matrix3, Vector3};

use crate::math::sigmoid;

/// One anisotropic Gaussian primitive.
///
/// `rotation` is a quaternion in (w, x, y, z) order; it is renormalized before
/// covariance construction, so the stored value need not stay unit length.
/// `color` is RGB in [0, 1], `opacity_logit` maps to opacity through a sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub position: Vector3<f64>,
    pub rotation: [f64; 4],
    pub log_scales: Vector3<f64>,
    pub opacity_logit: f64,
    pub color: Vector3<f64>,
}

impl GaussianPrimitive {
    #[inline]
    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    #[inline]
    pub fn scales(&self) -> Vector3<f64> {
        self.log_scales.map(f64::exp)
    }
}

/// Rotation matrix of the unit quaternion (w, x, y, z).
pub fn quat_to_rotation(q: &[f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = *q;
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Partial derivatives of `quat_to_rotation` with respect to each unit-quaternion
/// component, in (w, x, y, z) order.
pub fn quat_rotation_jacobian(q: &[f64; 4]) -> [Matrix3<f64>; 4] {
    let [w, x, y, z] = *q;
    let dw = Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0) * 2.0;
    let dx = Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x) * 2.0;
    let dy = Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y) * 2.0;
    let dz = Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0) * 2.0;
    [dw, dx, dy, dz]
}

#[inline]
pub fn quat_normalize(q: &[f64; 4]) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// World-space covariance R S S^T R^T from the primitive's quaternion and log scales.
pub fn build_covariance(prim: &GaussianPrimitive) -> Matrix3<f64> {
    let rot = quat_to_rotation(&quat_normalize(&prim.rotation));
    let s = prim.scales();
    // M = R * diag(s); covariance = M M^T.
    let m = Matrix3::from_columns(&[
        rot.column(0) * s.x,
        rot.column(1) * s.y,
        rot.column(2) * s.z,
    ]);
    m * m.transpose()
}

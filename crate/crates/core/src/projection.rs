use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::primitive::GaussianPrimitive;

/// Screen-space footprint of a projected Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGeometry {
    /// Pixel coordinates of the projected mean.
    pub mean2d: Vector2<f64>,
    /// 2x2 screen-space covariance in pixel^2 units.
    pub cov2d: Matrix2<f64>,
    /// Camera-space depth of the mean.
    pub depth: f64,
}

/// Jacobian of the pinhole projection at camera-space point `t`.
#[inline]
pub fn projection_jacobian(camera: &Camera, t: &Vector3<f64>) -> Matrix2x3<f64> {
    let inv_z = 1.0 / t.z;
    let inv_z2 = inv_z * inv_z;
    Matrix2x3::new(
        camera.fx * inv_z,
        0.0,
        -camera.fx * t.x * inv_z2,
        0.0,
        camera.fy * inv_z,
        -camera.fy * t.y * inv_z2,
    )
}

#[inline]
pub(crate) fn project_mean(camera: &Camera, t: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(
        camera.fx * t.x / t.z + camera.cx,
        camera.fy * t.y / t.z + camera.cy,
    )
}

/// Projection given an already-transformed camera-space mean.
pub(crate) fn project_camera_space(
    camera: &Camera,
    t: &Vector3<f64>,
    sigma3d: &Matrix3<f64>,
) -> ProjectedGeometry {
    let j = projection_jacobian(camera, t);
    let a = j * camera.rotation;
    ProjectedGeometry {
        mean2d: project_mean(camera, t),
        cov2d: a * sigma3d * a.transpose(),
        depth: t.z,
    }
}

/// Perspective projection of a Gaussian with world covariance `sigma3d` through
/// the local affine approximation J W Sigma W^T J^T, keeping the upper-left 2x2 block.
///
/// Errors with `CulledBehindCamera` when the mean sits at or behind the near plane.
pub fn project(
    prim: &GaussianPrimitive,
    sigma3d: &Matrix3<f64>,
    camera: &Camera,
) -> Result<ProjectedGeometry> {
    let t = camera.world_to_camera(&prim.position);
    if t.z <= camera.near {
        return Err(Error::CulledBehindCamera);
    }
    Ok(project_camera_space(camera, &t, sigma3d))
}

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Pinhole camera with a world-to-camera rigid transform.
///
/// Camera space is x right, y down, z forward; a world point p maps to
/// `rotation * p + translation` and projects to pixel
/// `(fx * x / z + cx, fy * y / z + cy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
}

pub const DEFAULT_NEAR: f64 = 0.01;

/// Rotation rows must be orthonormal to within this tolerance.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

impl Camera {
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        near: f64,
    ) -> Result<Self> {
        let cam = Self { rotation, translation, fx, fy, cx, cy, width, height, near };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |reason: &str| Error::InvalidCamera { reason: reason.to_string() };
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(err("focal lengths must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(err("image dimensions must be positive"));
        }
        if !(self.near > 0.0) {
            return Err(err("near plane must be positive"));
        }
        let gram = self.rotation * self.rotation.transpose();
        let drift = (gram - Matrix3::identity()).abs().max();
        if !(drift <= ORTHONORMAL_TOL) {
            return Err(err("rotation is not orthonormal"));
        }
        Ok(())
    }

    /// Camera placed at `eye` looking at `target`, world up = +z, image y pointing down.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        near: f64,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera { reason: "eye coincides with target".into() })?;
        let up = Vector3::new(0.0, 0.0, 1.0);
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera { reason: "view direction parallel to up".into() })?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -rotation * eye;
        Self::new(rotation, translation, fx, fy, cx, cy, width, height, near)
    }

    #[inline]
    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Effective focal length: geometric mean of fx and fy, in pixels.
    #[inline]
    pub fn f_eff(&self) -> f64 {
        (self.fx * self.fy).sqrt()
    }

    /// Same pose with resolution, focals and principal point scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rotation: self.rotation,
            translation: self.translation,
            fx: self.fx * s,
            fy: self.fy * s,
            cx: self.cx * s,
            cy: self.cy * s,
            width: ((self.width as f64) * s).round() as usize,
            height: ((self.height as f64) * s).round() as usize,
            near: self.near,
        }
    }
}

/// Sampling rate of `position` under `camera`: effective focal length over
/// Euclidean distance from the camera center, in pixels per world unit.
///
/// Errors with `CulledBehindCamera` when the point sits at or behind the near plane.
pub fn sampling_rate(camera: &Camera, position: &Vector3<f64>) -> Result<f64> {
    let t = camera.world_to_camera(position);
    if t.z <= camera.near {
        return Err(Error::CulledBehindCamera);
    }
    Ok(camera.f_eff() / t.norm())
}

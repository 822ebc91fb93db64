use nalgebra::Vector3;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::lod::{max_sampling_rate, LodBasis};
use crate::primitive::GaussianPrimitive;

/// A splatting scene: primitives, their per-primitive filter bases, and the
/// reference sampling rate the bases are normalized against.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub primitives: Vec<GaussianPrimitive>,
    pub bases: Vec<LodBasis>,
    pub nu_ref: f64,
    /// Per-primitive maximum training-view sampling rate, used by the fixed
    /// smoothing mode. Populated by `compute_max_rates`.
    pub max_rates: Option<Vec<f64>>,
}

impl Scene {
    pub fn new(primitives: Vec<GaussianPrimitive>, bases: Vec<LodBasis>, nu_ref: f64) -> Result<Self> {
        let scene = Self { primitives, bases, nu_ref, max_rates: None };
        scene.validate()?;
        Ok(scene)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Number of basis components per primitive (0 for an empty scene).
    pub fn basis_size(&self) -> usize {
        self.bases.first().map_or(0, LodBasis::len)
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.primitives.iter().map(|p| p.position).collect()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        if self.primitives.is_empty() {
            return Vector3::zeros();
        }
        let sum: Vector3<f64> = self.primitives.iter().map(|p| p.position).sum();
        sum / self.primitives.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidScene { reason };
        if self.primitives.len() != self.bases.len() {
            return Err(invalid(format!(
                "{} primitives but {} bases",
                self.primitives.len(),
                self.bases.len()
            )));
        }
        if !(self.nu_ref > 0.0) {
            return Err(invalid(format!("reference rate {} must be positive", self.nu_ref)));
        }
        let l = self.basis_size();
        for (i, (prim, basis)) in self.primitives.iter().zip(&self.bases).enumerate() {
            basis.validate()?;
            if basis.len() != l {
                return Err(invalid(format!("basis {i} has {} components, expected {l}", basis.len())));
            }
            let finite = prim.position.iter().all(|v| v.is_finite())
                && prim.rotation.iter().all(|v| v.is_finite())
                && prim.log_scales.iter().all(|v| v.is_finite())
                && prim.opacity_logit.is_finite()
                && prim.color.iter().all(|v| v.is_finite())
                && basis.centers.iter().all(|v| v.is_finite())
                && basis.log_widths.iter().all(|v| v.is_finite())
                && basis.weights_scale.iter().all(|v| v.is_finite())
                && basis.weights_opacity.iter().all(|v| v.is_finite())
                && basis.weights_color.iter().all(|w| w.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(invalid(format!("primitive {i} has non-finite parameters")));
            }
            let qn = prim.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
            if qn < 1e-6 {
                return Err(invalid(format!("primitive {i} has a near-zero quaternion")));
            }
            if prim.color.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
                return Err(invalid(format!("primitive {i} has color outside [0, 1]")));
            }
        }
        if let Some(rates) = &self.max_rates {
            if rates.len() != self.primitives.len() {
                return Err(invalid("max_rates length does not match primitives".into()));
            }
        }
        Ok(())
    }

    /// Fill `max_rates` from the given (training) cameras. Primitives seen by
    /// no camera get an infinite rate, which disables their fixed smoothing;
    /// such primitives are invisible during training anyway.
    pub fn compute_max_rates(&mut self, cameras: &[Camera]) {
        let rates = self
            .primitives
            .iter()
            .map(|p| max_sampling_rate(cameras, &p.position).unwrap_or(f64::INFINITY))
            .collect();
        self.max_rates = Some(rates);
    }

    /// Keep only primitives (and their bases, optimizer-aligned rows) selected
    /// by the mask. Returns the retained original indices.
    pub fn retain_mask(&mut self, keep: &[bool]) -> Vec<usize> {
        assert_eq!(keep.len(), self.primitives.len());
        let kept: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
        self.primitives = kept.iter().map(|&i| self.primitives[i].clone()).collect();
        self.bases = kept.iter().map(|&i| self.bases[i].clone()).collect();
        if let Some(rates) = &self.max_rates {
            self.max_rates = Some(kept.iter().map(|&i| rates[i]).collect());
        }
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::DEFAULT_NEAR;

    fn small_scene() -> Scene {
        let prims = vec![
            GaussianPrimitive {
                position: Vector3::new(0.0, 0.0, 0.0),
                rotation: [1.0, 0.0, 0.0, 0.0],
                log_scales: Vector3::new(-2.0, -2.0, -2.0),
                opacity_logit: 1.0,
                color: Vector3::new(0.8, 0.2, 0.1),
            },
            GaussianPrimitive {
                position: Vector3::new(0.4, 0.0, 0.0),
                rotation: [1.0, 0.0, 0.0, 0.0],
                log_scales: Vector3::new(-2.0, -2.0, -2.0),
                opacity_logit: 0.5,
                color: Vector3::new(0.1, 0.7, 0.3),
            },
        ];
        let bases = vec![LodBasis::identity(4), LodBasis::identity(4)];
        Scene::new(prims, bases, 40.0).unwrap()
    }

    #[test]
    fn centroid_averages_positions() {
        let scene = small_scene();
        let c = scene.centroid();
        assert_eq!(c, Vector3::new(0.2, 0.0, 0.0));
    }

    #[test]
    fn mismatched_basis_length_is_rejected() {
        let mut scene = small_scene();
        scene.bases[1] = LodBasis::identity(5);
        assert!(matches!(scene.validate(), Err(Error::InvalidScene { .. })));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut scene = small_scene();
        scene.primitives[0].position.x = f64::NAN;
        assert!(matches!(scene.validate(), Err(Error::InvalidScene { .. })));
    }

    #[test]
    fn max_rates_use_nearest_camera_and_mark_unseen() {
        let mut scene = small_scene();
        let cams = vec![
            Camera::look_at(
                Vector3::new(2.0, 0.0, 0.5),
                Vector3::zeros(),
                100.0,
                100.0,
                32.0,
                32.0,
                64,
                64,
                DEFAULT_NEAR,
            )
            .unwrap(),
        ];
        scene.compute_max_rates(&cams);
        let rates = scene.max_rates.clone().unwrap();
        assert_eq!(rates.len(), 2);
        assert!(rates.iter().all(|r| r.is_finite() && *r > 0.0));

        // A primitive behind the only camera gets an infinite rate.
        scene.primitives[0].position = Vector3::new(5.0, 0.0, 0.5);
        scene.compute_max_rates(&cams);
        assert!(scene.max_rates.unwrap()[0].is_infinite());
    }

    #[test]
    fn retain_mask_keeps_rows_aligned() {
        let mut scene = small_scene();
        scene.max_rates = Some(vec![10.0, 20.0]);
        let kept = scene.retain_mask(&[false, true]);
        assert_eq!(kept, vec![1]);
        assert_eq!(scene.len(), 1);
        assert_eq!(scene.primitives[0].opacity_logit, 0.5);
        assert_eq!(scene.max_rates.unwrap(), vec![20.0]);
    }
}

//! Toy scene construction and multi-scale / multi-level dataset generation.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{sampling_rate, Camera, DEFAULT_NEAR};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::lod::LodBasis;
use crate::math::logit;
use crate::primitive::GaussianPrimitive;
use crate::raster::{supersample_render, RenderConfig};
use crate::scene::Scene;

/// Basis components per primitive for toy scenes.
pub const DEFAULT_BASIS_SIZE: usize = 20;

/// Orbit elevation above the scene plane, radians.
pub const ORBIT_ELEVATION: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyKind {
    /// n x n grid of small alternating-color splats, the aliasing stress case.
    CheckerPlane,
    /// n splats on a circle with scales graded around it.
    Ring,
    /// n splats with random pose, scale, opacity and color.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// One generated view: camera, ground-truth image and its dataset coordinates.
#[derive(Debug, Clone)]
pub struct GeneratedView {
    pub camera: Camera,
    pub image: Image,
    pub scale: u32,
    pub level: u32,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub views: Vec<GeneratedView>,
    pub scene_extent: f64,
    pub nu_ref: f64,
}

fn light_dark(even: bool) -> Vector3<f64> {
    if even {
        Vector3::new(0.92, 0.88, 0.82)
    } else {
        Vector3::new(0.12, 0.14, 0.18)
    }
}

/// Deterministic toy scene; a pure function of kind, size and seed.
pub fn build_toy_scene(kind: ToyKind, n: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut primitives = Vec::new();
    match kind {
        ToyKind::CheckerPlane => {
            let n = n.max(2);
            let spacing = 1.0 / (n - 1) as f64;
            let sigma = 0.3 * spacing;
            for i in 0..n {
                for j in 0..n {
                    let jitter: f64 = rng.random_range(-0.02..0.02);
                    primitives.push(GaussianPrimitive {
                        position: Vector3::new(
                            i as f64 * spacing - 0.5,
                            j as f64 * spacing - 0.5,
                            jitter * spacing,
                        ),
                        rotation: [1.0, 0.0, 0.0, 0.0],
                        log_scales: Vector3::repeat(sigma.ln()),
                        opacity_logit: logit(0.95),
                        color: light_dark((i + j) % 2 == 0),
                    });
                }
            }
        }
        ToyKind::Ring => {
            let n = n.max(3);
            for i in 0..n {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let frac = i as f64 / n as f64;
                let sigma = 0.015 + 0.045 * frac;
                let jitter: f64 = rng.random_range(-0.01..0.01);
                let color = Vector3::new(
                    0.5 + 0.45 * angle.sin(),
                    0.5 + 0.45 * (angle + 2.1).sin(),
                    0.5 + 0.45 * (angle + 4.2).sin(),
                );
                primitives.push(GaussianPrimitive {
                    position: Vector3::new(0.4 * angle.cos(), 0.4 * angle.sin(), jitter),
                    rotation: [1.0, 0.0, 0.0, 0.0],
                    log_scales: Vector3::repeat(sigma.ln()),
                    opacity_logit: logit(0.9),
                    color,
                });
            }
        }
        ToyKind::Random => {
            for _ in 0..n.max(1) {
                let mut q = [0.0; 4];
                loop {
                    for c in q.iter_mut() {
                        *c = rng.random_range(-1.0..1.0);
                    }
                    if q.iter().map(|v| v * v).sum::<f64>().sqrt() > 0.1 {
                        break;
                    }
                }
                primitives.push(GaussianPrimitive {
                    position: Vector3::new(
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ),
                    rotation: q,
                    log_scales: Vector3::new(
                        rng.random_range(0.02f64.ln()..0.09f64.ln()),
                        rng.random_range(0.02f64.ln()..0.09f64.ln()),
                        rng.random_range(0.02f64.ln()..0.09f64.ln()),
                    ),
                    opacity_logit: rng.random_range(logit(0.2)..logit(0.95)),
                    color: Vector3::new(
                        rng.random_range(0.05..0.95),
                        rng.random_range(0.05..0.95),
                        rng.random_range(0.05..0.95),
                    ),
                });
            }
        }
    }
    let count = primitives.len();
    Scene {
        primitives,
        bases: vec![LodBasis::identity(DEFAULT_BASIS_SIZE); count],
        nu_ref: 1.0,
        max_rates: None,
    }
}

/// Cameras evenly spaced in azimuth on a tilted orbit, looking at the origin.
pub fn orbit_cameras(count: usize, radius: f64, f: f64, resolution: usize) -> Vec<Camera> {
    (0..count)
        .map(|i| {
            let azimuth = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let eye = Vector3::new(
                radius * ORBIT_ELEVATION.cos() * azimuth.cos(),
                radius * ORBIT_ELEVATION.cos() * azimuth.sin(),
                radius * ORBIT_ELEVATION.sin(),
            );
            Camera::look_at(
                eye,
                Vector3::zeros(),
                f,
                f,
                resolution as f64 / 2.0,
                resolution as f64 / 2.0,
                resolution,
                resolution,
                DEFAULT_NEAR,
            )
            .expect("orbit pose is always valid")
        })
        .collect()
}

/// Focal length that maps a half-extent at the orbit distance to roughly 80%
/// of the half image.
pub fn fit_focal(resolution: usize, radius: f64, extent: f64) -> f64 {
    0.8 * resolution as f64 * radius / (2.0 * extent)
}

/// Largest primitive distance from the scene centroid.
pub fn scene_extent(scene: &Scene) -> f64 {
    let c = scene.centroid();
    scene
        .primitives
        .iter()
        .map(|p| (p.position - c).norm())
        .fold(0.0, f64::max)
}

fn split_for(index: usize) -> Split {
    if index % 8 == 0 {
        Split::Test
    } else {
        Split::Train
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Reference rate rounded through f32 so scene files and manifests agree exactly.
fn reference_rate(cameras: &[&Camera], center: &Vector3<f64>) -> Result<f64> {
    let rates: Vec<f64> = cameras
        .iter()
        .filter_map(|cam| sampling_rate(cam, center).ok())
        .collect();
    if rates.is_empty() {
        return Err(Error::NoVisibleView);
    }
    Ok(median(rates) as f32 as f64)
}

/// Multi-scale dataset: each camera is emitted at every downscale factor with
/// a supersampled ground-truth image. Every 8th camera is held out for testing.
pub fn make_multiscale(
    gt_scene: &Scene,
    cameras: &[Camera],
    factors: &[u32],
    ss_factor: usize,
    config: &RenderConfig,
) -> Result<GeneratedDataset> {
    if ss_factor < 4 {
        return Err(Error::DomainError {
            what: format!("supersampling factor {ss_factor} is below the oracle minimum of 4"),
        });
    }
    if factors.is_empty() {
        return Err(Error::DomainError { what: "no scale factors given".into() });
    }
    for cam in cameras {
        for &k in factors {
            if k == 0 || cam.width % k as usize != 0 || cam.height % k as usize != 0 {
                return Err(Error::DomainError {
                    what: format!(
                        "resolution {}x{} is not divisible by scale factor {k}",
                        cam.width, cam.height
                    ),
                });
            }
        }
    }

    let mut views = Vec::new();
    for (i, cam) in cameras.iter().enumerate() {
        let split = split_for(i);
        for &k in factors {
            let cam_k = cam.scaled(1.0 / k as f64);
            let image = supersample_render(gt_scene, &cam_k, config, ss_factor).image;
            views.push(GeneratedView { camera: cam_k, image, scale: k, level: 1, split });
        }
    }

    let center = gt_scene.centroid();
    let reference_factor = *factors.iter().min().unwrap();
    let ref_cams: Vec<&Camera> = views
        .iter()
        .filter(|v| v.scale == reference_factor && v.split == Split::Train)
        .map(|v| &v.camera)
        .collect();
    let nu_ref = reference_rate(&ref_cams, &center)?;
    Ok(GeneratedDataset { views, scene_extent: scene_extent(gt_scene), nu_ref })
}

/// Multi-level dataset: orbits at increasing radii with shared intrinsics.
/// Radii must increase so the sampling rate strictly drops per level.
pub fn make_multilevel(
    gt_scene: &Scene,
    radii: &[f64],
    f: f64,
    count: usize,
    resolution: usize,
    ss_factor: usize,
    config: &RenderConfig,
) -> Result<GeneratedDataset> {
    if radii.is_empty() {
        return Err(Error::DomainError { what: "no orbit radii given".into() });
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) || !(radii[0] > 0.0) {
        return Err(Error::DomainError {
            what: "orbit radii must be positive and strictly increasing".into(),
        });
    }
    let mut views = Vec::new();
    for (li, &radius) in radii.iter().enumerate() {
        for (j, camera) in orbit_cameras(count, radius, f, resolution).into_iter().enumerate() {
            let image = supersample_render(gt_scene, &camera, config, ss_factor).image;
            views.push(GeneratedView {
                camera,
                image,
                scale: 1,
                level: (li + 1) as u32,
                split: split_for(j),
            });
        }
    }
    let center = gt_scene.centroid();
    let train_cams: Vec<&Camera> = views
        .iter()
        .filter(|v| v.split == Split::Train)
        .map(|v| &v.camera)
        .collect();
    let nu_ref = reference_rate(&train_cams, &center)?;
    Ok(GeneratedDataset { views, scene_extent: scene_extent(gt_scene), nu_ref })
}

/// Add uniform position and color noise, keeping colors in [0, 1].
pub fn perturb_scene(scene: &Scene, position_amp: f64, color_amp: f64, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = scene.clone();
    for prim in &mut out.primitives {
        for c in 0..3 {
            prim.position[c] += rng.random_range(-position_amp..position_amp);
        }
        for c in 0..3 {
            prim.color[c] =
                (prim.color[c] + rng.random_range(-color_amp..color_amp)).clamp(0.0, 1.0);
        }
    }
    out
}

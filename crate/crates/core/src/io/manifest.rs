//! Dataset manifest: one JSON document naming every view's camera (4x4
//! world-to-camera matrix, row-major, plus intrinsics), its ground-truth
//! image path relative to the manifest, and the scene constants.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, DEFAULT_NEAR};
use crate::dataset::{GeneratedDataset, GeneratedView, Split};
use crate::error::{Error, Result};
use crate::io::pfm::{load_pfm, save_pfm};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct ViewJson {
    world_to_camera: [[f64; 4]; 4],
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    scale: u32,
    level: u32,
    split: String,
    image_path: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestJson {
    scene_extent: f64,
    nu_ref: f64,
    views: Vec<ViewJson>,
}

fn camera_to_matrix(camera: &Camera) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = camera.rotation[(r, c)];
        }
        m[r][3] = camera.translation[r];
    }
    m[3][3] = 1.0;
    m
}

fn camera_from_view(v: &ViewJson) -> Result<Camera> {
    let bad = |reason: String| Error::InvalidManifest { reason };
    let m = &v.world_to_camera;
    let bottom_ok = m[3][0] == 0.0 && m[3][1] == 0.0 && m[3][2] == 0.0 && m[3][3] == 1.0;
    if !bottom_ok {
        return Err(bad("world_to_camera bottom row must be [0, 0, 0, 1]".into()));
    }
    let rotation = Matrix3::from_fn(|r, c| m[r][c]);
    let translation = Vector3::new(m[0][3], m[1][3], m[2][3]);
    Camera::new(
        rotation,
        translation,
        v.fx,
        v.fy,
        v.cx,
        v.cy,
        v.width,
        v.height,
        DEFAULT_NEAR,
    )
}

fn split_to_str(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

fn split_from_str(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(Error::InvalidManifest { reason: format!("unknown split '{other}'") }),
    }
}

/// Writes the dataset under `dir`: PFM images in `images/` and a manifest
/// beside them. Returns the manifest path.
pub fn save_dataset(dir: &Path, dataset: &GeneratedDataset) -> Result<PathBuf> {
    let images = dir.join("images");
    fs::create_dir_all(&images)?;
    let mut views = Vec::with_capacity(dataset.views.len());
    for (i, view) in dataset.views.iter().enumerate() {
        let name = format!(
            "images/view_{i:04}_s{}_l{}_{}.pfm",
            view.scale,
            view.level,
            split_to_str(view.split)
        );
        save_pfm(&dir.join(&name), &view.image)?;
        views.push(ViewJson {
            world_to_camera: camera_to_matrix(&view.camera),
            fx: view.camera.fx,
            fy: view.camera.fy,
            cx: view.camera.cx,
            cy: view.camera.cy,
            width: view.camera.width,
            height: view.camera.height,
            scale: view.scale,
            level: view.level,
            split: split_to_str(view.split).to_string(),
            image_path: name,
        });
    }
    let manifest = ManifestJson {
        scene_extent: dataset.scene_extent,
        nu_ref: dataset.nu_ref,
        views,
    };
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializable"))?;
    Ok(path)
}

/// Loads a manifest and every referenced image. Paths resolve relative to the
/// manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<GeneratedDataset> {
    let bad = |reason: String| Error::InvalidManifest { reason };
    let text = fs::read_to_string(manifest_path)?;
    let manifest: ManifestJson =
        serde_json::from_str(&text).map_err(|e| bad(format!("json: {e}")))?;
    if !(manifest.nu_ref > 0.0) {
        return Err(bad(format!("nu_ref {} must be positive", manifest.nu_ref)));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut views = Vec::with_capacity(manifest.views.len());
    for v in &manifest.views {
        let camera = camera_from_view(v)?;
        let image = load_pfm(&base.join(&v.image_path))?;
        if image.width != camera.width || image.height != camera.height {
            return Err(bad(format!(
                "{}: image is {}x{} but camera expects {}x{}",
                v.image_path, image.width, image.height, camera.width, camera.height
            )));
        }
        views.push(GeneratedView {
            camera,
            image,
            scale: v.scale,
            level: v.level,
            split: split_from_str(&v.split)?,
        });
    }
    Ok(GeneratedDataset {
        views,
        scene_extent: manifest.scene_extent,
        nu_ref: manifest.nu_ref,
    })
}

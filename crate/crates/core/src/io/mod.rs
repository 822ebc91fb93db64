//! On-disk formats: binary scene checkpoints, PFM/PPM images, and the JSON
//! dataset manifest.

pub mod manifest;
pub mod pfm;
pub mod ppm;
pub mod scene_file;

pub use manifest::{load_dataset, save_dataset, MANIFEST_NAME};
pub use pfm::{image_from_pfm, image_to_pfm, load_pfm, save_pfm};
pub use ppm::{image_to_ppm, save_ppm};
pub use scene_file::{
    load_scene, save_scene, scene_from_bytes, scene_record_floats, scene_to_bytes, SCENE_MAGIC,
    SCENE_VERSION,
};

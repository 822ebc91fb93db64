use std::fs;
use std::path::PathBuf;

use lodgs_core::dataset::{
    build_toy_scene, fit_focal, make_multilevel, make_multiscale, orbit_cameras, scene_extent,
};
use lodgs_core::io::scene_file::{scene_from_bytes, scene_to_bytes};
use lodgs_core::io::{save_dataset, save_ppm, save_scene};
use lodgs_core::raster::RenderConfig;
use lodgs_core::{Error, Result};

use crate::common::KindArg;

#[derive(clap::Args)]
pub struct Args {
    /// Scene family to synthesize.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Size parameter: grid side for checker_plane, primitive count otherwise.
    #[arg(long, default_value_t = 12)]
    n: usize,
    /// Number of orbit viewpoints.
    #[arg(long, default_value_t = 8)]
    views: usize,
    /// Downscale factors for a multi-scale dataset.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    scales: Vec<u32>,
    /// Orbit radii as multiples of the scene extent; selects a multi-level
    /// dataset instead of a multi-scale one.
    #[arg(long, value_delimiter = ',', conflicts_with = "scales")]
    levels: Option<Vec<f64>>,
    /// Output directory for the manifest, images and ground-truth scene.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Image side length in pixels at scale 1.
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    /// Supersampling factor for ground-truth rendering.
    #[arg(long, default_value_t = 8)]
    ss_factor: usize,
    /// Camera orbit radius as a multiple of the scene extent.
    #[arg(long, default_value_t = 2.5)]
    radius: f64,
    /// Also write 8-bit PPM previews next to the float images.
    #[arg(long)]
    previews: bool,
}

pub fn run(args: Args) -> Result<()> {
    let built = build_toy_scene(args.kind.to_core(), args.n, args.seed);
    // Quantize to checkpoint precision before rendering so the saved scene
    // reproduces the ground-truth images exactly.
    let mut scene = scene_from_bytes(&scene_to_bytes(&built))?;
    let extent = scene_extent(&scene);
    let config = RenderConfig::default();

    let dataset = if let Some(mults) = &args.levels {
        if mults.is_empty() {
            return Err(Error::DomainError { what: "--levels needs at least one radius".into() });
        }
        let radii: Vec<f64> = mults.iter().map(|m| m * extent).collect();
        let f = fit_focal(args.resolution, radii[0], extent);
        make_multilevel(&scene, &radii, f, args.views, args.resolution, args.ss_factor, &config)?
    } else {
        let radius = args.radius * extent;
        let f = fit_focal(args.resolution, radius, extent);
        let cameras = orbit_cameras(args.views, radius, f, args.resolution);
        make_multiscale(&scene, &cameras, &args.scales, args.ss_factor, &config)?
    };

    scene.nu_ref = dataset.nu_ref;
    fs::create_dir_all(&args.out)?;
    let manifest = save_dataset(&args.out, &dataset)?;
    let scene_path = args.out.join("scene.lodgs");
    save_scene(&scene_path, &scene)?;

    if args.previews {
        let dir = args.out.join("previews");
        fs::create_dir_all(&dir)?;
        for (i, view) in dataset.views.iter().enumerate() {
            save_ppm(&dir.join(format!("view_{i:04}.ppm")), &view.image)?;
        }
    }

    println!(
        "wrote {} views, scene with {} primitives (extent {:.4}, nu_ref {:.4})",
        dataset.views.len(),
        scene.len(),
        extent,
        dataset.nu_ref
    );
    println!("manifest: {}", manifest.display());
    println!("scene: {}", scene_path.display());
    Ok(())
}

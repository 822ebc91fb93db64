use std::path::PathBuf;

use lodgs_core::io::{load_dataset, load_scene, save_pfm, save_ppm};
use lodgs_core::raster::{render, supersample_render, RenderConfig};
use lodgs_core::{Error, Result};

use crate::common::{ensure_mip_rates, Mode2dArg, Mode3dArg};

#[derive(clap::Args)]
pub struct Args {
    /// Scene checkpoint.
    #[arg(long)]
    scene: PathBuf,
    /// Dataset manifest providing the cameras.
    #[arg(long)]
    data: PathBuf,
    /// Index into the manifest's view list.
    #[arg(long, default_value_t = 0)]
    camera_index: usize,
    /// Output image; .pfm or .ppm by extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode2dArg::Ewa)]
    mode2d: Mode2dArg,
    #[arg(long, value_enum, default_value_t = Mode3dArg::Lod)]
    mode3d: Mode3dArg,
    /// Render with the supersampling oracle at this factor instead of the
    /// filtering pipeline.
    #[arg(long)]
    supersample: Option<usize>,
    #[arg(long)]
    s2d: Option<f64>,
    #[arg(long)]
    s3d: Option<f64>,
}

pub fn run(args: Args) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let mut scene = load_scene(&args.scene)?;
    let view = dataset.views.get(args.camera_index).ok_or_else(|| Error::DomainError {
        what: format!(
            "camera index {} out of range ({} views in manifest)",
            args.camera_index,
            dataset.views.len()
        ),
    })?;

    let mut config = RenderConfig::default();
    config.mode_2d = args.mode2d.to_core();
    config.mode_3d = args.mode3d.to_core();
    if let Some(v) = args.s2d {
        config.s2d = v;
    }
    if let Some(v) = args.s3d {
        config.s3d = v;
    }
    ensure_mip_rates(&mut scene, &dataset.views, config.mode_3d)?;

    let output = match args.supersample {
        Some(factor) => {
            if factor == 0 {
                return Err(Error::DomainError { what: "--supersample must be at least 1".into() });
            }
            supersample_render(&scene, &view.camera, &config, factor)
        }
        None => render(&scene, &view.camera, &config),
    };

    match args.out.extension().and_then(|e| e.to_str()) {
        Some("pfm") => save_pfm(&args.out, &output.image)?,
        Some("ppm") => save_ppm(&args.out, &output.image)?,
        _ => {
            return Err(Error::DomainError {
                what: format!("unsupported image extension in {}", args.out.display()),
            })
        }
    }
    println!(
        "rendered view {} ({}x{}, {} splats drawn) to {}",
        args.camera_index,
        view.camera.width,
        view.camera.height,
        output.splat_count,
        args.out.display()
    );
    Ok(())
}

use std::path::PathBuf;

use lodgs_core::grad::{fd_check, FdCheckConfig};
use lodgs_core::io::{load_dataset, load_scene};
use lodgs_core::raster::RenderConfig;
use lodgs_core::{Error, Result};

use crate::common::{ensure_mip_rates, AblationArg};

/// Thresholds the check must meet to pass.
const MIN_PASS_FRACTION: f64 = 0.95;
const MAX_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(clap::Args)]
pub struct Args {
    /// Scene checkpoint.
    #[arg(long)]
    scene: PathBuf,
    /// Dataset manifest providing the probe camera.
    #[arg(long)]
    data: PathBuf,
    /// Relative finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    /// Number of parameters to probe.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative error bound per parameter.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    camera_index: usize,
    #[arg(long, value_enum, default_value_t = AblationArg::Full)]
    ablation: AblationArg,
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
    let (mode_2d, mode_3d) = args.ablation.to_core().modes();
    let mut config = RenderConfig::default();
    config.mode_2d = mode_2d;
    config.mode_3d = mode_3d;
    ensure_mip_rates(&mut scene, &dataset.views, config.mode_3d)?;

    let fd = FdCheckConfig { samples: args.samples, step: args.h, tolerance: args.tolerance, seed: args.seed };
    let report = fd_check(&scene, &view.camera, &config, &fd)?;

    println!("{:<18} {:>7} {:>8} {:>7} {:>12}", "group", "checked", "excluded", "within", "worst_rel");
    for (group, stats) in report.group_stats() {
        if stats.checked + stats.excluded == 0 {
            continue;
        }
        println!(
            "{:<18} {:>7} {:>8} {:>7} {:>12.3e}",
            group.name(),
            stats.checked,
            stats.excluded,
            stats.within,
            stats.worst
        );
    }
    println!(
        "pass fraction {:.4} (need >= {MIN_PASS_FRACTION}), excluded fraction {:.4} (need <= {MAX_EXCLUDED_FRACTION}), worst rel err {:.3e}",
        report.pass_fraction(),
        report.excluded_fraction(),
        report.worst_rel_err()
    );

    let ok = report.pass_fraction() >= MIN_PASS_FRACTION
        && report.excluded_fraction() <= MAX_EXCLUDED_FRACTION;
    println!("{}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        return Err(Error::DomainError {
            what: "analytic gradients disagree with finite differences".into(),
        });
    }
    Ok(())
}

use std::path::PathBuf;
use std::time::Instant;

use lodgs_core::io::{load_dataset, load_scene, save_scene};
use lodgs_core::train::{train, TrainConfig};
use lodgs_core::Result;

use crate::common::{write_text, AblationArg};

#[derive(clap::Args)]
pub struct Args {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    /// Initial scene checkpoint.
    #[arg(long)]
    init: PathBuf,
    /// Output scene checkpoint.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = AblationArg::Full)]
    ablation: AblationArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// D-SSIM weight in the photometric loss.
    #[arg(long, default_value_t = 0.2)]
    lambda_ssim: f64,
    #[arg(long)]
    lr_position: Option<f64>,
    #[arg(long)]
    lr_rotation: Option<f64>,
    #[arg(long)]
    lr_log_scales: Option<f64>,
    #[arg(long)]
    lr_opacity: Option<f64>,
    #[arg(long)]
    lr_color: Option<f64>,
    #[arg(long)]
    lr_lod_weights: Option<f64>,
    #[arg(long)]
    lr_lod_centers: Option<f64>,
    #[arg(long)]
    lr_lod_widths: Option<f64>,
    /// Remove primitives below the opacity threshold every N iterations
    /// (0 disables).
    #[arg(long, default_value_t = 0)]
    prune_interval: usize,
    #[arg(long, default_value_t = 0.005)]
    prune_threshold: f64,
    /// Report held-out PSNR every N iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    eval_interval: usize,
    /// Write an iteration,loss,eval_psnr CSV here.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    /// Screen-space dilation variance override.
    #[arg(long)]
    s2d: Option<f64>,
    /// Fixed 3D smoothing strength override.
    #[arg(long)]
    s3d: Option<f64>,
}

pub fn run(args: Args) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let mut scene = load_scene(&args.init)?;

    let mut config = TrainConfig::new(args.iters, args.ablation.to_core(), args.seed, dataset.scene_extent);
    config.lambda_ssim = args.lambda_ssim;
    config.prune_interval = args.prune_interval;
    config.prune_opacity_threshold = args.prune_threshold;
    config.eval_interval = args.eval_interval;
    if let Some(v) = args.lr_position {
        config.rates.position = v;
    }
    if let Some(v) = args.lr_rotation {
        config.rates.rotation = v;
    }
    if let Some(v) = args.lr_log_scales {
        config.rates.log_scales = v;
    }
    if let Some(v) = args.lr_opacity {
        config.rates.opacity_logit = v;
    }
    if let Some(v) = args.lr_color {
        config.rates.color = v;
    }
    if let Some(v) = args.lr_lod_weights {
        config.rates.lod_weights = v;
    }
    if let Some(v) = args.lr_lod_centers {
        config.rates.lod_centers = v;
    }
    if let Some(v) = args.lr_lod_widths {
        config.rates.lod_widths = v;
    }
    if let Some(v) = args.s2d {
        config.render.s2d = v;
    }
    if let Some(v) = args.s3d {
        config.render.s3d = v;
    }

    let start = Instant::now();
    let report = train(&mut scene, &dataset, &config)?;
    let elapsed = start.elapsed().as_secs_f64();

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_scene(&args.out, &scene)?;

    if let Some(csv) = &args.loss_csv {
        let mut text = String::from("iteration,loss,eval_psnr\n");
        let eval: std::collections::HashMap<usize, f64> =
            report.eval_history.iter().copied().collect();
        for (i, loss) in report.loss_history.iter().enumerate() {
            let iter = i + 1;
            match eval.get(&iter) {
                Some(p) => text.push_str(&format!("{iter},{loss:.8},{p:.4}\n")),
                None => text.push_str(&format!("{iter},{loss:.8},\n")),
            }
        }
        write_text(csv, &text)?;
    }

    let tail = if report.loss_history.is_empty() {
        0.0
    } else {
        let k = report.loss_history.len().min(10);
        report.loss_history[report.loss_history.len() - k..].iter().sum::<f64>() / k as f64
    };
    println!(
        "trained {} iterations ({}) in {elapsed:.1}s; final loss (tail mean) {tail:.6}; {} primitives ({} pruned)",
        report.loss_history.len(),
        args.ablation.to_core().name(),
        scene.len(),
        report.pruned
    );
    for (iter, psnr) in &report.eval_history {
        println!("eval @ {iter}: {psnr:.3} dB");
    }
    println!("scene: {}", args.out.display());
    Ok(())
}

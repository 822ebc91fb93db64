use std::collections::BTreeMap;
use std::path::PathBuf;

use lodgs_core::io::{load_dataset, load_scene};
use lodgs_core::metrics::metric_ssim;
use lodgs_core::raster::{render, supersample_render, RenderConfig};
use lodgs_core::{Error, Result};

use crate::common::{ensure_mip_rates, write_text, AblationArg, SplitArg};

#[derive(clap::Args)]
pub struct Args {
    /// Scene checkpoint.
    #[arg(long)]
    scene: PathBuf,
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = AblationArg::Full)]
    ablation: AblationArg,
    /// Evaluate the supersampling oracle at this factor instead of the
    /// filtering pipeline.
    #[arg(long)]
    supersample: Option<usize>,
    #[arg(long)]
    s2d: Option<f64>,
    #[arg(long)]
    s3d: Option<f64>,
}

#[derive(Default)]
struct Group {
    views: usize,
    se: f64,
    samples: usize,
    ssim_sum: f64,
    ssim_count: usize,
}

impl Group {
    fn add(&mut self, other: &Group) {
        self.views += other.views;
        self.se += other.se;
        self.samples += other.samples;
        self.ssim_sum += other.ssim_sum;
        self.ssim_count += other.ssim_count;
    }

    fn psnr_cell(&self) -> String {
        let mse = self.se / self.samples as f64;
        if mse == 0.0 {
            "identical".to_string()
        } else {
            format!("{:.4}", -10.0 * mse.log10())
        }
    }

    fn ssim_cell(&self) -> String {
        if self.ssim_count == 0 {
            "na".to_string()
        } else {
            format!("{:.6}", self.ssim_sum / self.ssim_count as f64)
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let mut scene = load_scene(&args.scene)?;
    let (mode_2d, mode_3d) = args.ablation.to_core().modes();
    let mut config = RenderConfig::default();
    config.mode_2d = mode_2d;
    config.mode_3d = mode_3d;
    if let Some(v) = args.s2d {
        config.s2d = v;
    }
    if let Some(v) = args.s3d {
        config.s3d = v;
    }
    if let Some(0) = args.supersample {
        return Err(Error::DomainError { what: "--supersample must be at least 1".into() });
    }
    ensure_mip_rates(&mut scene, &dataset.views, config.mode_3d)?;

    let selected: Vec<_> =
        dataset.views.iter().filter(|v| args.split.keeps(v.split)).collect();
    if selected.is_empty() {
        return Err(Error::DomainError { what: "no views match the requested split".into() });
    }

    let mut groups: BTreeMap<(u32, u32), Group> = BTreeMap::new();
    for view in &selected {
        let output = match args.supersample {
            Some(factor) => supersample_render(&scene, &view.camera, &config, factor),
            None => render(&scene, &view.camera, &config),
        };
        // Ground truth lives at f32 precision; quantize the render so the
        // comparison is apples to apples.
        let image = output.image.quantize_f32();
        let group = groups.entry((view.scale, view.level)).or_default();
        group.views += 1;
        group.se += image
            .data
            .iter()
            .zip(&view.image.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        group.samples += image.data.len();
        if let Ok(s) = metric_ssim(&image, &view.image) {
            group.ssim_sum += s;
            group.ssim_count += 1;
        }
    }

    let mut text = String::from("scale,level,views,psnr_db,ssim\n");
    let mut all = Group::default();
    for ((scale, level), group) in &groups {
        text.push_str(&format!(
            "{scale},{level},{},{},{}\n",
            group.views,
            group.psnr_cell(),
            group.ssim_cell()
        ));
        all.add(group);
    }
    text.push_str(&format!(
        "all,all,{},{},{}\n",
        all.views,
        all.psnr_cell(),
        all.ssim_cell()
    ));

    write_text(&args.out, &text)?;
    print!("{text}");
    println!("csv: {}", args.out.display());
    Ok(())
}

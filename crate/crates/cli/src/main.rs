//! `lodgs`: dataset generation, training, rendering, evaluation and gradient
//! checking for the sampling-rate-filtered Gaussian splatting renderer.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or check failure.

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod common;
mod eval;
mod generate;
mod gradcheck;
mod render;
mod train;

#[derive(Parser)]
#[command(
    name = "lodgs",
    version,
    about = "Differentiable Gaussian splatting with sampling-rate-dependent filtering"
)]
enum Cli {
    /// Synthesize a toy scene and a multi-scale or multi-level dataset.
    Generate(generate::Args),
    /// Optimize a scene against a dataset.
    Train(train::Args),
    /// Render one dataset view to an image file.
    Render(render::Args),
    /// Report per-scale/per-level PSNR and SSIM against ground truth.
    Eval(eval::Args),
    /// Compare analytic gradients against finite differences.
    Gradcheck(gradcheck::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli {
        Cli::Generate(args) => generate::run(args),
        Cli::Train(args) => train::run(args),
        Cli::Render(args) => render::run(args),
        Cli::Eval(args) => eval::run(args),
        Cli::Gradcheck(args) => gradcheck::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! Flag enums and helpers shared by the subcommands.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use lodgs_core::dataset::{GeneratedView, Split, ToyKind};
use lodgs_core::raster::{Mode2d, Mode3d};
use lodgs_core::train::Ablation;
use lodgs_core::{Camera, Error, Result, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    CheckerPlane,
    Ring,
    Random,
}

impl KindArg {
    pub fn to_core(self) -> ToyKind {
        match self {
            KindArg::CheckerPlane => ToyKind::CheckerPlane,
            KindArg::Ring => ToyKind::Ring,
            KindArg::Random => ToyKind::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AblationArg {
    Full,
    NoLod,
    NoEwa,
    Mip,
    Vanilla,
}

impl AblationArg {
    pub fn to_core(self) -> Ablation {
        match self {
            AblationArg::Full => Ablation::Full,
            AblationArg::NoLod => Ablation::NoLod,
            AblationArg::NoEwa => Ablation::NoEwa,
            AblationArg::Mip => Ablation::Mip,
            AblationArg::Vanilla => Ablation::Vanilla,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode2dArg {
    Ewa,
    Dilation,
    None,
}

impl Mode2dArg {
    pub fn to_core(self) -> Mode2d {
        match self {
            Mode2dArg::Ewa => Mode2d::Ewa,
            Mode2dArg::Dilation => Mode2d::Dilation,
            Mode2dArg::None => Mode2d::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode3dArg {
    Lod,
    Mip,
    None,
}

impl Mode3dArg {
    pub fn to_core(self) -> Mode3d {
        match self {
            Mode3dArg::Lod => Mode3d::Lod,
            Mode3dArg::Mip => Mode3d::MipFixed,
            Mode3dArg::None => Mode3d::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    pub fn keeps(self, split: Split) -> bool {
        match self {
            SplitArg::Train => split == Split::Train,
            SplitArg::Test => split == Split::Test,
            SplitArg::All => true,
        }
    }
}

/// The fixed smoothing mode reads per-primitive peak sampling rates; derive
/// them from the dataset's training cameras.
pub fn ensure_mip_rates(scene: &mut Scene, views: &[GeneratedView], mode_3d: Mode3d) -> Result<()> {
    if mode_3d != Mode3d::MipFixed {
        return Ok(());
    }
    let cams: Vec<Camera> = views
        .iter()
        .filter(|v| v.split == Split::Train)
        .map(|v| v.camera.clone())
        .collect();
    if cams.is_empty() {
        return Err(Error::DomainError {
            what: "fixed smoothing needs training views to size its filter".into(),
        });
    }
    scene.compute_max_rates(&cams);
    Ok(())
}

/// Writes text, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, content)?;
    Ok(())
}

//! Central-difference verification of the analytic gradients.
//!
//! The loss is a fixed random weighting of the rendered pixels. Parameters are
//! sampled uniformly across all groups; one-sided differences flag parameters
//! sitting on a clamp or cull boundary, which are excluded rather than judged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::Camera;
use crate::error::Result;
use crate::image::Image;
use crate::raster::{render, render_with_cache, RenderConfig};
use crate::scene::Scene;

use super::{backward, GradientBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Position,
    Rotation,
    LogScales,
    OpacityLogit,
    Color,
    LodCenters,
    LodLogWidths,
    LodWeightsScale,
    LodWeightsOpacity,
    LodWeightsColor,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 10] = [
        ParamGroup::Position,
        ParamGroup::Rotation,
        ParamGroup::LogScales,
        ParamGroup::OpacityLogit,
        ParamGroup::Color,
        ParamGroup::LodCenters,
        ParamGroup::LodLogWidths,
        ParamGroup::LodWeightsScale,
        ParamGroup::LodWeightsOpacity,
        ParamGroup::LodWeightsColor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Position => "position",
            ParamGroup::Rotation => "rotation",
            ParamGroup::LogScales => "log_scales",
            ParamGroup::OpacityLogit => "opacity_logit",
            ParamGroup::Color => "color",
            ParamGroup::LodCenters => "lod_centers",
            ParamGroup::LodLogWidths => "lod_log_widths",
            ParamGroup::LodWeightsScale => "lod_weights_scale",
            ParamGroup::LodWeightsOpacity => "lod_weights_opacity",
            ParamGroup::LodWeightsColor => "lod_weights_color",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdCheckConfig {
    /// Number of parameters to sample (capped at the parameter count).
    pub samples: usize,
    /// Relative step; the actual step is `step * max(1, |theta|)`.
    pub step: f64,
    /// Relative error bound a checked parameter must meet.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FdCheckConfig {
    fn default() -> Self {
        Self { samples: 200, step: 1e-5, tolerance: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct FdSample {
    pub group: ParamGroup,
    pub prim: usize,
    /// Component index within the group for this primitive.
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    /// One-sided differences disagreed: the parameter sits on a kink
    /// (clamp boundary, cull threshold) where no two-sided derivative exists.
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GroupStats {
    pub checked: usize,
    pub excluded: usize,
    pub within: usize,
    pub worst: f64,
}

#[derive(Debug, Clone)]
pub struct FdReport {
    pub samples: Vec<FdSample>,
    pub tolerance: f64,
}

impl FdReport {
    pub fn total(&self) -> usize {
        self.samples.len()
    }

    pub fn excluded(&self) -> usize {
        self.samples.iter().filter(|s| s.excluded).count()
    }

    pub fn checked(&self) -> usize {
        self.total() - self.excluded()
    }

    pub fn within(&self) -> usize {
        self.samples.iter().filter(|s| !s.excluded && s.rel_err <= self.tolerance).count()
    }

    /// Fraction of checked (non-excluded) parameters within tolerance.
    pub fn pass_fraction(&self) -> f64 {
        match self.checked() {
            0 => 1.0,
            n => self.within() as f64 / n as f64,
        }
    }

    pub fn excluded_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.excluded() as f64 / n as f64,
        }
    }

    pub fn worst_rel_err(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| !s.excluded)
            .map(|s| s.rel_err)
            .fold(0.0, f64::max)
    }

    pub fn group_stats(&self) -> Vec<(ParamGroup, GroupStats)> {
        ParamGroup::ALL
            .iter()
            .map(|&group| {
                let mut stats = GroupStats::default();
                for s in self.samples.iter().filter(|s| s.group == group) {
                    if s.excluded {
                        stats.excluded += 1;
                    } else {
                        stats.checked += 1;
                        if s.rel_err <= self.tolerance {
                            stats.within += 1;
                        }
                        stats.worst = stats.worst.max(s.rel_err);
                    }
                }
                (group, stats)
            })
            .filter(|(_, s)| s.checked + s.excluded > 0)
            .collect()
    }
}

/// Flat parameter layout per primitive: position 3, rotation 4, log_scales 3,
/// opacity 1, color 3, then per-basis centers, widths and the three weight heads.
fn classify(offset: usize, l: usize) -> (ParamGroup, usize) {
    match offset {
        0..=2 => (ParamGroup::Position, offset),
        3..=6 => (ParamGroup::Rotation, offset - 3),
        7..=9 => (ParamGroup::LogScales, offset - 7),
        10 => (ParamGroup::OpacityLogit, 0),
        11..=13 => (ParamGroup::Color, offset - 11),
        _ => {
            let o = offset - 14;
            match o / l {
                0 => (ParamGroup::LodCenters, o),
                1 => (ParamGroup::LodLogWidths, o - l),
                2 => (ParamGroup::LodWeightsScale, o - 2 * l),
                3 => (ParamGroup::LodWeightsOpacity, o - 3 * l),
                _ => (ParamGroup::LodWeightsColor, o - 4 * l),
            }
        }
    }
}

fn slot_ref(scene: &mut Scene, prim: usize, offset: usize, l: usize) -> &mut f64 {
    let (group, idx) = classify(offset, l);
    let p = &mut scene.primitives[prim];
    let b = &mut scene.bases[prim];
    match group {
        ParamGroup::Position => &mut p.position[idx],
        ParamGroup::Rotation => &mut p.rotation[idx],
        ParamGroup::LogScales => &mut p.log_scales[idx],
        ParamGroup::OpacityLogit => &mut p.opacity_logit,
        ParamGroup::Color => &mut p.color[idx],
        ParamGroup::LodCenters => &mut b.centers[idx],
        ParamGroup::LodLogWidths => &mut b.log_widths[idx],
        ParamGroup::LodWeightsScale => &mut b.weights_scale[idx],
        ParamGroup::LodWeightsOpacity => &mut b.weights_opacity[idx],
        ParamGroup::LodWeightsColor => &mut b.weights_color[idx / 3][idx % 3],
    }
}

fn read_slot(scene: &Scene, prim: usize, offset: usize, l: usize) -> f64 {
    let (group, idx) = classify(offset, l);
    let p = &scene.primitives[prim];
    let b = &scene.bases[prim];
    match group {
        ParamGroup::Position => p.position[idx],
        ParamGroup::Rotation => p.rotation[idx],
        ParamGroup::LogScales => p.log_scales[idx],
        ParamGroup::OpacityLogit => p.opacity_logit,
        ParamGroup::Color => p.color[idx],
        ParamGroup::LodCenters => b.centers[idx],
        ParamGroup::LodLogWidths => b.log_widths[idx],
        ParamGroup::LodWeightsScale => b.weights_scale[idx],
        ParamGroup::LodWeightsOpacity => b.weights_opacity[idx],
        ParamGroup::LodWeightsColor => b.weights_color[idx / 3][idx % 3],
    }
}

fn bundle_slot(bundle: &GradientBundle, prim: usize, offset: usize, l: usize) -> f64 {
    let (group, idx) = classify(offset, l);
    match group {
        ParamGroup::Position => bundle.position[prim][idx],
        ParamGroup::Rotation => bundle.rotation[prim][idx],
        ParamGroup::LogScales => bundle.log_scales[prim][idx],
        ParamGroup::OpacityLogit => bundle.opacity_logit[prim],
        ParamGroup::Color => bundle.color[prim][idx],
        ParamGroup::LodCenters => bundle.lod_centers[prim][idx],
        ParamGroup::LodLogWidths => bundle.lod_log_widths[prim][idx],
        ParamGroup::LodWeightsScale => bundle.lod_weights_scale[prim][idx],
        ParamGroup::LodWeightsOpacity => bundle.lod_weights_opacity[prim][idx],
        ParamGroup::LodWeightsColor => bundle.lod_weights_color[prim][idx / 3][idx % 3],
    }
}

fn weighted(image: &Image, weights: &Image) -> f64 {
    image.data.iter().zip(&weights.data).map(|(a, b)| a * b).sum()
}

/// Compare analytic gradients against central differences of the rendered loss.
pub fn fd_check(
    scene: &Scene,
    camera: &Camera,
    config: &RenderConfig,
    fd: &FdCheckConfig,
) -> Result<FdReport> {
    let l = scene.basis_size();
    let stride = 14 + 7 * l;
    let total = scene.len() * stride;

    let mut rng = ChaCha8Rng::seed_from_u64(fd.seed);
    let mut loss_grad = Image::zeros(camera.width, camera.height);
    for v in &mut loss_grad.data {
        *v = rng.random_range(-1.0..1.0);
    }

    let (out0, cache) = render_with_cache(scene, camera, config);
    let l0 = weighted(&out0.image, &loss_grad);
    let bundle = backward(scene, camera, config, &cache, &loss_grad)?;

    let count = fd.samples.min(total);
    let picks = rand::seq::index::sample(&mut rng, total, count);
    let mut samples = Vec::with_capacity(count);
    for slot in picks {
        let prim = slot / stride;
        let offset = slot % stride;
        let (group, index) = classify(offset, l);

        let theta = read_slot(scene, prim, offset, l);
        let h = fd.step * theta.abs().max(1.0);

        let mut plus = scene.clone();
        *slot_ref(&mut plus, prim, offset, l) = theta + h;
        let lp = weighted(&render(&plus, camera, config).image, &loss_grad);

        let mut minus = scene.clone();
        *slot_ref(&mut minus, prim, offset, l) = theta - h;
        let lm = weighted(&render(&minus, camera, config).image, &loss_grad);

        let d_plus = (lp - l0) / h;
        let d_minus = (l0 - lm) / h;
        let asym = (d_plus - d_minus).abs() / d_plus.abs().max(d_minus.abs()).max(1e-8);
        let excluded = asym > 0.1;

        let numeric = (lp - lm) / (2.0 * h);
        let analytic = bundle_slot(&bundle, prim, offset, l);
        // Central differences resolve ~eps*|L|/(2h) ~ 1e-10; below the floor the
        // comparison is effectively absolute rather than noise-to-noise.
        let rel_err =
            (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5);
        samples.push(FdSample { group, prim, index, analytic, numeric, rel_err, excluded });
    }
    Ok(FdReport { samples, tolerance: fd.tolerance })
}

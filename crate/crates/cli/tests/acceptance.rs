//! Release acceptance suite. Every criterion runs sequentially inside one
//! test so the timing measurements are not disturbed by sibling threads;
//! each prints a single PASS/FAIL line (visible with --nocapture).

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lodgs_core::dataset::{
    build_toy_scene, fit_focal, make_multiscale, orbit_cameras, perturb_scene, scene_extent,
    Split, ToyKind,
};
use lodgs_core::grad::{fd_check, FdCheckConfig};
use lodgs_core::io::scene_file::{scene_from_bytes, scene_to_bytes};
use lodgs_core::io::{load_dataset, load_scene, save_scene};
use lodgs_core::lod::{max_sampling_rate, sampling_rate_pass};
use lodgs_core::metrics::{metric_psnr, metric_ssim, Psnr};
use lodgs_core::raster::{alpha_mass, render, render_serial, Mode2d, Mode3d, RenderConfig};
use lodgs_core::scene::Scene;
use lodgs_core::train::Ablation;
use lodgs_core::{Camera, GaussianPrimitive, Image, LodBasis};

type CheckResult = Result<String, String>;

const MIP_S3D: f64 = 0.005;

fn lodgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lodgs")).args(args).output().unwrap()
}

fn lodgs_ok(args: &[&str]) -> Result<String, String> {
    let out = lodgs(args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`lodgs {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// Shared fixture: one multi-scale and one multi-level dataset, generated
/// once through the binary exactly as a user would.
struct Ctx {
    _dir: tempfile::TempDir,
    ms_dir: PathBuf,
    ml_dir: PathBuf,
}

impl Ctx {
    fn build() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ms_dir = dir.path().join("ms");
        let ml_dir = dir.path().join("ml");
        for (out, extra) in [
            (&ms_dir, vec!["--kind", "checker_plane", "--n", "8", "--scales", "1,2,4,8", "--seed", "42"]),
            (&ml_dir, vec!["--kind", "ring", "--n", "24", "--levels", "2.5,5,10,20", "--seed", "9"]),
        ] {
            let mut args = vec![
                "generate",
                "--views",
                "6",
                "--resolution",
                "96",
                "--ss-factor",
                "8",
                "--out",
                out.to_str().unwrap(),
            ];
            args.extend(extra);
            lodgs_ok(&args).unwrap();
        }
        Self { _dir: dir, ms_dir, ml_dir }
    }

    fn manifest(&self, multiscale: bool) -> PathBuf {
        (if multiscale { &self.ms_dir } else { &self.ml_dir }).join("manifest.json")
    }

    fn scene(&self, multiscale: bool) -> PathBuf {
        (if multiscale { &self.ms_dir } else { &self.ml_dir }).join("scene.lodgs")
    }
}

fn psnr_db(a: &Image, b: &Image) -> f64 {
    match metric_psnr(a, b).unwrap() {
        Psnr::Identical => f64::INFINITY,
        Psnr::Db(v) => v,
    }
}

/// Pooled-MSE PSNR of rendered (and f32-quantized) test views at one scale.
fn test_psnr_at_scale(
    scene: &Scene,
    views: &[(Camera, Image, u32)],
    config: &RenderConfig,
    scale: u32,
) -> f64 {
    let mut se = 0.0;
    let mut n = 0usize;
    for (camera, image, s) in views {
        if *s != scale {
            continue;
        }
        let rendered = render(scene, camera, config).image.quantize_f32();
        se += rendered
            .data
            .iter()
            .zip(&image.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        n += rendered.data.len();
    }
    assert!(n > 0, "no test views at scale {scale}");
    let mse = se / n as f64;
    if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() }
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients match central differences on a random scene.

fn gradient_correctness(_ctx: &Ctx) -> CheckResult {
    let start = Instant::now();
    let built = build_toy_scene(ToyKind::Random, 20, 11);
    let mut scene = scene_from_bytes(&scene_to_bytes(&built)).unwrap();
    let extent = scene_extent(&scene);
    let radius = 2.5 * extent;
    let cameras = orbit_cameras(4, radius, fit_focal(16, radius, extent), 16);
    let config = RenderConfig::default();
    let ds = make_multiscale(&scene, &cameras, &[1], 4, &config).map_err(|e| e.to_string())?;
    scene.nu_ref = ds.nu_ref;

    let fd = FdCheckConfig { samples: 200, step: 1e-5, tolerance: 1e-4, seed: 0 };
    let report =
        fd_check(&scene, &ds.views[0].camera, &config, &fd).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let groups = report.group_stats().len();
    let detail = format!(
        "{} of {} checked within 1e-4 (worst {:.1e}), {} excluded, {} groups, {:.1}s",
        report.within(),
        report.checked(),
        report.worst_rel_err(),
        report.excluded(),
        groups,
        elapsed.as_secs_f64()
    );
    if groups != 10 {
        return Err(format!("only {groups} of 10 parameter groups sampled"));
    }
    if report.pass_fraction() < 0.95 {
        return Err(format!("pass fraction {:.4} < 0.95 ({detail})", report.pass_fraction()));
    }
    if report.excluded_fraction() >= 0.05 {
        return Err(format!("excluded fraction {:.4} >= 0.05", report.excluded_fraction()));
    }
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {:.1}s > 60s", elapsed.as_secs_f64()));
    }
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 2. Per-pixel blend weights plus final transmittance sum to one.

fn partition_of_unity(_ctx: &Ctx) -> CheckResult {
    let ablations =
        [Ablation::Full, Ablation::NoLod, Ablation::NoEwa, Ablation::Mip, Ablation::Vanilla];
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut scene = build_toy_scene(ToyKind::Random, 16, seed);
        for p in &mut scene.primitives {
            p.color = Vector3::new(1.0, 1.0, 1.0);
        }
        let extent = scene_extent(&scene);
        let radius = 2.0 * extent;
        let cameras =
            orbit_cameras(3, radius, fit_focal(32, radius, extent), 32);
        let camera = &cameras[(seed % 3) as usize];
        scene.compute_max_rates(std::slice::from_ref(camera));

        let (mode_2d, mode_3d) = ablations[(seed % 5) as usize].modes();
        let config = RenderConfig { mode_2d, mode_3d, ..RenderConfig::default() };
        let out = render(&scene, camera, &config);
        for (i, t) in out.final_transmittance.iter().enumerate() {
            for c in 0..3 {
                let dev = (out.image.data[3 * i + c] + t - 1.0).abs();
                worst = worst.max(dev);
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max |weights+transmittance-1| = {worst:.2e} over 100 seeds, all mode pairs"))
    } else {
        Err(format!("deviation {worst:.2e} > 1e-12"))
    }
}

// ---------------------------------------------------------------------------
// 3. Screen-space handling: EWA preserves alpha mass across resolutions,
//    plain dilation does not.

fn alpha_mass_contrast(_ctx: &Ctx) -> CheckResult {
    let sigma = 0.0625f64;
    let prim = GaussianPrimitive {
        position: Vector3::zeros(),
        rotation: [1.0, 0.0, 0.0, 0.0],
        log_scales: Vector3::new(sigma.ln(), sigma.ln(), sigma.ln()),
        opacity_logit: 0.4,
        color: Vector3::new(1.0, 1.0, 1.0),
    };
    let scene = Scene::new(vec![prim], vec![LodBasis::identity(4)], 1.0).unwrap();
    let camera = Camera::look_at(
        Vector3::new(3.0, 0.0, 0.0),
        Vector3::zeros(),
        96.0,
        96.0,
        64.0,
        64.0,
        128,
        128,
        0.01,
    )
    .unwrap();
    let quarter = camera.scaled(0.25);

    let mut changes = Vec::new();
    for mode_2d in [Mode2d::Ewa, Mode2d::Dilation] {
        let config = RenderConfig { mode_2d, mode_3d: Mode3d::None, ..RenderConfig::default() };
        let full = alpha_mass(&render(&scene, &camera, &config), 1.0);
        let low = alpha_mass(&render(&scene, &quarter, &config), 16.0);
        changes.push((low - full).abs() / full);
    }
    let (ewa, dilation) = (changes[0], changes[1]);
    let detail = format!(
        "alpha mass change full-res vs quarter-res: ewa {:.2}%, dilation {:.2}%",
        100.0 * ewa,
        100.0 * dilation
    );
    if ewa < 0.05 && dilation > 0.20 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 4. A zero-weight basis renders identically to bypassing the filter.

fn identity_ablation(_ctx: &Ctx) -> CheckResult {
    let mut scene = build_toy_scene(ToyKind::Random, 24, 3);
    for b in &mut scene.bases {
        let l = b.len();
        b.weights_scale = vec![0.0; l];
        b.weights_opacity = vec![0.0; l];
        b.weights_color = vec![Vector3::zeros(); l];
    }
    let extent = scene_extent(&scene);
    let radius = 2.0 * extent;
    let camera = &orbit_cameras(2, radius, fit_focal(64, radius, extent), 64)[0];

    let filtered = render(
        &scene,
        camera,
        &RenderConfig { mode_3d: Mode3d::Lod, ..RenderConfig::default() },
    );
    let bypassed = render(
        &scene,
        camera,
        &RenderConfig { mode_3d: Mode3d::None, ..RenderConfig::default() },
    );
    let worst = filtered
        .image
        .data
        .iter()
        .zip(&bypassed.image.data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if worst <= 1e-12 {
        let exact = if filtered.image == bypassed.image { "bit-identical" } else { "within 1e-12" };
        Ok(format!("zero-weight basis vs bypass: {exact} (max diff {worst:.1e})"))
    } else {
        Err(format!("max channel difference {worst:.2e} > 1e-12"))
    }
}

// ---------------------------------------------------------------------------
// 5. After multi-scale training the filtered coarse-scale render beats the
//    supersampled oracle threshold and the unfiltered render.

fn antialiasing_oracle(ctx: &Ctx) -> CheckResult {
    let trained_path = ctx.ms_dir.join("aa_full.lodgs");
    lodgs_ok(&[
        "train",
        "--data",
        ctx.manifest(true).to_str().unwrap(),
        "--init",
        ctx.scene(true).to_str().unwrap(),
        "--out",
        trained_path.to_str().unwrap(),
        "--iters",
        "3000",
        "--ablation",
        "full",
        "--seed",
        "1",
    ])?;

    let ds = load_dataset(&ctx.manifest(true)).map_err(|e| e.to_string())?;
    let mut scene = load_scene(&trained_path).map_err(|e| e.to_string())?;
    let train_cams: Vec<Camera> = ds
        .views
        .iter()
        .filter(|v| v.split == Split::Train)
        .map(|v| v.camera.clone())
        .collect();
    scene.compute_max_rates(&train_cams);

    let view = ds
        .views
        .iter()
        .find(|v| v.split == Split::Test && v.scale == 8)
        .ok_or("no scale-8 test view")?;
    let filtered_cfg = RenderConfig::default();
    let unfiltered_cfg = RenderConfig {
        mode_2d: Mode2d::Dilation,
        mode_3d: Mode3d::None,
        ..RenderConfig::default()
    };
    let filtered = psnr_db(
        &render(&scene, &view.camera, &filtered_cfg).image.quantize_f32(),
        &view.image,
    );
    let unfiltered = psnr_db(
        &render(&scene, &view.camera, &unfiltered_cfg).image.quantize_f32(),
        &view.image,
    );
    let detail = format!(
        "scale-8 vs 8x supersampled oracle: filtered {filtered:.2} dB, unfiltered {unfiltered:.2} dB"
    );
    if filtered >= 30.0 && filtered - unfiltered >= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 6. Averaged test PSNR orders full > fixed mip > dilation-only on both
//    dataset styles.

fn ablation_ordering(ctx: &Ctx) -> CheckResult {
    let mut details = Vec::new();
    for multiscale in [true, false] {
        let name = if multiscale { "multi-scale" } else { "multi-level" };
        let manifest = ctx.manifest(multiscale);
        let init = ctx.scene(multiscale);
        let dir = manifest.parent().unwrap().to_path_buf();
        let mut scores = Vec::new();
        for ablation in ["full", "mip", "vanilla"] {
            let trained = dir.join(format!("ord_{ablation}.lodgs"));
            let csv = dir.join(format!("ord_{ablation}.csv"));
            let s3d = format!("{MIP_S3D}");
            let mut train_args = vec![
                "train",
                "--data",
                manifest.to_str().unwrap(),
                "--init",
                init.to_str().unwrap(),
                "--out",
                trained.to_str().unwrap(),
                "--iters",
                "1500",
                "--seed",
                "1",
                "--ablation",
                ablation,
            ];
            let mut eval_args = vec![
                "eval",
                "--scene",
                trained.to_str().unwrap(),
                "--data",
                manifest.to_str().unwrap(),
                "--split",
                "test",
                "--ablation",
                ablation,
                "--out",
                csv.to_str().unwrap(),
            ];
            if ablation == "mip" {
                train_args.extend(["--s3d", &s3d]);
                eval_args.extend(["--s3d", &s3d]);
            }
            lodgs_ok(&train_args)?;
            lodgs_ok(&eval_args)?;
            let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
            let row = text
                .lines()
                .find(|l| l.starts_with("all,all"))
                .ok_or("missing average row in eval csv")?;
            let psnr: f64 = row.split(',').nth(3).unwrap().parse().map_err(|_| {
                format!("unexpected average psnr cell in: {row}")
            })?;
            scores.push(psnr);
        }
        details.push(format!(
            "{name}: full {:.2} > mip {:.2} > dilation-only {:.2}",
            scores[0], scores[1], scores[2]
        ));
        if !(scores[0] > scores[1] && scores[1] > scores[2]) {
            return Err(format!("ordering violated on {name}: {scores:?}"));
        }
    }
    Ok(details.join("; "))
}

// ---------------------------------------------------------------------------
// 7. A perturbed scene retrains to a sharp held-out reconstruction.

fn recovery(ctx: &Ctx) -> CheckResult {
    let start = Instant::now();
    let ds = load_dataset(&ctx.manifest(true)).map_err(|e| e.to_string())?;
    let gt = load_scene(&ctx.scene(true)).map_err(|e| e.to_string())?;
    let extent = ds.scene_extent;
    let perturbed = perturb_scene(&gt, 0.02 * extent, 0.1, 7);

    let test_views: Vec<(Camera, Image, u32)> = ds
        .views
        .iter()
        .filter(|v| v.split == Split::Test)
        .map(|v| (v.camera.clone(), v.image.clone(), v.scale))
        .collect();
    let config = RenderConfig::default();
    let before = test_psnr_at_scale(&perturbed, &test_views, &config, 1);

    let mut scene = perturbed;
    let train_config =
        lodgs_core::train::TrainConfig::new(2000, Ablation::Full, 1, extent);
    lodgs_core::train::train(&mut scene, &ds, &train_config).map_err(|e| e.to_string())?;
    let after = test_psnr_at_scale(&scene, &test_views, &config, 1);
    let elapsed = start.elapsed();

    let detail = format!(
        "held-out scale-1 PSNR {before:.2} dB -> {after:.2} dB after 2000 iterations in {:.0}s",
        elapsed.as_secs_f64()
    );
    if after >= 35.0 && elapsed < Duration::from_secs(600) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 8. The per-view rate pass is linear in the primitive count, and the
//    per-primitive max-rate scan is linear in the camera count.

fn median_secs(mut sample: impl FnMut() -> ()) -> f64 {
    for _ in 0..2 {
        sample();
    }
    let mut times: Vec<f64> = (0..9)
        .map(|_| {
            let t = Instant::now();
            sample();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn complexity(_ctx: &Ctx) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let positions: Vec<Vector3<f64>> = (0..40_000)
        .map(|_| {
            Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let cameras = orbit_cameras(32, 3.0, 80.0, 64);

    let pass_time = |k: usize| {
        let slice = &positions[..k];
        let camera = &cameras[0];
        median_secs(|| {
            for _ in 0..20 {
                std::hint::black_box(sampling_rate_pass(camera, std::hint::black_box(slice)));
            }
        })
    };
    let t10 = pass_time(10_000);
    let t20 = pass_time(20_000);
    let t40 = pass_time(40_000);
    let pass_ratios = [t20 / t10, t40 / t20];

    let scan_time = |n: usize| {
        let cams = &cameras[..n];
        let points = &positions[..2_000];
        median_secs(|| {
            for p in points {
                std::hint::black_box(max_sampling_rate(std::hint::black_box(cams), p).ok());
            }
        })
    };
    let s8 = scan_time(8);
    let s16 = scan_time(16);
    let s32 = scan_time(32);
    let scan_ratios = [s16 / s8, s32 / s16];

    let detail = format!(
        "rate-pass doubling ratios {:.2}/{:.2}, camera-scan doubling ratios {:.2}/{:.2}",
        pass_ratios[0], pass_ratios[1], scan_ratios[0], scan_ratios[1]
    );
    let in_band = |r: f64| (1.6..=2.6).contains(&r);
    if pass_ratios.iter().chain(&scan_ratios).all(|&r| in_band(r)) {
        Ok(detail)
    } else {
        Err(format!("ratio outside [1.6, 2.6]: {detail}"))
    }
}

// ---------------------------------------------------------------------------
// 9. Metric identities.

fn direct_ssim(a: &Image, b: &Image) -> f64 {
    // Independent oracle: brute-force 11x11 windows, no separability tricks.
    let side = 11usize;
    let sigma = 1.5f64;
    let mut w = vec![0.0f64; side * side];
    let mut sum = 0.0;
    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 - 5.0;
            let dy = y as f64 - 5.0;
            let v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            w[y * side + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }

    let (c1, c2) = (0.01f64 * 0.01, 0.03f64 * 0.03);
    let ow = a.width - side + 1;
    let oh = a.height - side + 1;
    let mut total = 0.0;
    for c in 0..3 {
        for oy in 0..oh {
            for ox in 0..ow {
                let (mut ma, mut mb, mut maa, mut mbb, mut mab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for ky in 0..side {
                    for kx in 0..side {
                        let idx = 3 * ((oy + ky) * a.width + (ox + kx)) + c;
                        let (va, vb) = (a.data[idx], b.data[idx]);
                        let wk = w[ky * side + kx];
                        ma += wk * va;
                        mb += wk * vb;
                        maa += wk * va * va;
                        mbb += wk * vb * vb;
                        mab += wk * va * vb;
                    }
                }
                let (sa, sb, sab) = (maa - ma * ma, mbb - mb * mb, mab - ma * mb);
                total += ((2.0 * ma * mb + c1) * (2.0 * sab + c2))
                    / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
            }
        }
    }
    total / (3 * ow * oh) as f64
}

fn metric_identities(_ctx: &Ctx) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut a = Image::zeros(20, 20);
    for v in &mut a.data {
        *v = rng.random_range(0.0..0.8);
    }

    let self_ssim = metric_ssim(&a, &a).map_err(|e| e.to_string())?;
    if self_ssim != 1.0 {
        return Err(format!("SSIM(a,a) = {self_ssim} != 1"));
    }

    let mut b = a.clone();
    for v in &mut b.data {
        *v += 0.1;
    }
    let db = psnr_db(&a, &b);
    if (db - 20.0).abs() > 0.1 {
        return Err(format!("uniform 0.1 offset gave {db:.4} dB, expected 20 dB"));
    }

    let mut c = a.clone();
    for v in &mut c.data {
        *v = (*v + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0);
    }
    let fast = metric_ssim(&a, &c).map_err(|e| e.to_string())?;
    let oracle = direct_ssim(&a, &c);
    let diff = (fast - oracle).abs();
    if diff > 1e-8 {
        return Err(format!("SSIM {fast} vs direct oracle {oracle}, diff {diff:.2e} > 1e-8"));
    }
    Ok(format!(
        "SSIM(a,a) = 1 exactly; offset PSNR {db:.3} dB; oracle diff {diff:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 10. Scene files round-trip bit-exactly and corruption is rejected.

fn serialization(ctx: &Ctx) -> CheckResult {
    let original = std::fs::read(ctx.scene(true)).map_err(|e| e.to_string())?;
    let scene = load_scene(&ctx.scene(true)).map_err(|e| e.to_string())?;
    let resaved_path = ctx.ms_dir.join("resaved.lodgs");
    save_scene(&resaved_path, &scene).map_err(|e| e.to_string())?;
    let resaved = std::fs::read(&resaved_path).map_err(|e| e.to_string())?;
    if original != resaved {
        return Err("save/load round-trip changed the file bytes".into());
    }

    let corrupt_path = ctx.ms_dir.join("corrupt.lodgs");
    let mut bytes = original.clone();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    std::fs::write(&corrupt_path, &bytes).map_err(|e| e.to_string())?;
    let out = lodgs(&[
        "render",
        "--scene",
        corrupt_path.to_str().unwrap(),
        "--data",
        ctx.manifest(true).to_str().unwrap(),
        "--out",
        ctx.ms_dir.join("corrupt.ppm").to_str().unwrap(),
    ]);
    if out.status.code() != Some(2) {
        return Err(format!(
            "corrupted scene exited {:?}, expected 2",
            out.status.code()
        ));
    }
    Ok(format!(
        "round-trip bit-exact ({} bytes); corrupted checksum rejected with exit 2",
        original.len()
    ))
}

// ---------------------------------------------------------------------------
// 11. Same seed, same bits: loss history, eval CSV, and the tile-parallel
//     renderer against its serial twin.

fn determinism(ctx: &Ctx) -> CheckResult {
    let manifest = ctx.manifest(true);
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let scene = ctx.ms_dir.join(format!("det_{run}.lodgs"));
        let csv = ctx.ms_dir.join(format!("det_{run}.csv"));
        lodgs_ok(&[
            "train",
            "--data",
            manifest.to_str().unwrap(),
            "--init",
            ctx.scene(true).to_str().unwrap(),
            "--out",
            scene.to_str().unwrap(),
            "--iters",
            "150",
            "--seed",
            "4",
            "--loss-csv",
            csv.to_str().unwrap(),
        ])?;
        let eval = ctx.ms_dir.join(format!("det_eval_{run}.csv"));
        lodgs_ok(&[
            "eval",
            "--scene",
            scene.to_str().unwrap(),
            "--data",
            manifest.to_str().unwrap(),
            "--out",
            eval.to_str().unwrap(),
        ])?;
        artifacts.push((
            std::fs::read(&scene).map_err(|e| e.to_string())?,
            std::fs::read(&csv).map_err(|e| e.to_string())?,
            std::fs::read(&eval).map_err(|e| e.to_string())?,
        ));
    }
    if artifacts[0].0 != artifacts[1].0 {
        return Err("trained scenes differ between identical runs".into());
    }
    if artifacts[0].1 != artifacts[1].1 {
        return Err("loss histories differ between identical runs".into());
    }
    if artifacts[0].2 != artifacts[1].2 {
        return Err("eval CSVs differ between identical runs".into());
    }

    let scene = load_scene(&ctx.ms_dir.join("det_0.lodgs")).map_err(|e| e.to_string())?;
    let ds = load_dataset(&manifest).map_err(|e| e.to_string())?;
    let camera = &ds.views[0].camera;
    let config = RenderConfig::default();
    let parallel = render(&scene, camera, &config);
    let serial = render_serial(&scene, camera, &config);
    if parallel.image != serial.image {
        return Err("tile-parallel render differs from serial render".into());
    }
    Ok("scene, loss history and eval CSV bit-identical across runs; parallel == serial".into())
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let ctx = Ctx::build();
    let criteria: [(&str, fn(&Ctx) -> CheckResult); 11] = [
        ("gradient correctness", gradient_correctness),
        ("partition of unity", partition_of_unity),
        ("alpha-mass contrast", alpha_mass_contrast),
        ("identity ablation", identity_ablation),
        ("anti-aliasing oracle", antialiasing_oracle),
        ("ablation ordering", ablation_ordering),
        ("recovery", recovery),
        ("complexity scaling", complexity),
        ("metric identities", metric_identities),
        ("serialization", serialization),
        ("determinism", determinism),
    ];

    let mut failures = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check(&ctx) {
            Ok(detail) => println!("[{:>2}/11] {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                println!("[{:>2}/11] {name}: FAIL ({detail})", i + 1);
                failures.push(format!("{name}: {detail}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}

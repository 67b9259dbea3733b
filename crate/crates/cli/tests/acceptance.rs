//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;
use spstyle_core::gsas::{self, Averaging, GsasParams};
use spstyle_core::losses::{
    feature_matching_loss, hinge_d_loss, hinge_g_loss, perceptual_loss, total_loss, FeatureStack,
    LossWeights,
};
use spstyle_core::mask_slic::{
    assign_pixels, cluster, cluster_label, init_centers, update_centers, LabelPixels,
};
use spstyle_core::spse::resample_code;
use spstyle_core::{
    lab_to_rgb, mixer, pipeline, rgb_to_lab, rgb_to_labxy, RgbImage, SemanticMask, SlicParams,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Case {
    img: RgbImage,
    mask: SemanticMask,
    k: usize,
}

/// 50 random 16x16 images with 2-3 label masks, cycling k through 2, 4, 8.
fn clustering_corpus() -> Vec<Case> {
    let mut r = rng(1);
    (0..50)
        .map(|i| {
            let labels = r.random_range(2..=3);
            Case {
                img: random_image(16, 16, &mut r),
                mask: random_mask(16, 16, labels, false, &mut r),
                k: [2, 4, 8][i % 3],
            }
        })
        .collect()
}

fn params(k: usize) -> SlicParams {
    SlicParams {
        k,
        ..SlicParams::default()
    }
}

fn brute_force(pixels: &LabelPixels, centers: &[[f64; 5]]) -> Vec<u32> {
    pixels
        .features()
        .iter()
        .map(|f| {
            let mut best = (f64::INFINITY, 0u32);
            for (c, center) in centers.iter().enumerate() {
                let d: f64 = (0..5)
                    .map(|i| (f[i] - center[i]) * (f[i] - center[i]))
                    .sum();
                if d < best.0 {
                    best = (d, c as u32);
                }
            }
            best.1
        })
        .collect()
}

fn c1_assignment_oracle(corpus: &[Case]) -> Outcome {
    let start = Instant::now();
    let (mut mismatches, mut compared) = (0usize, 0usize);
    for case in corpus {
        let labxy = rgb_to_labxy(&case.img, 1.0);
        let p = params(case.k);
        for label in 0..case.mask.label_count() {
            if case.mask.histogram()[label] == 0 {
                continue;
            }
            let pixels =
                LabelPixels::gather(&labxy, &case.mask, label, p.k, p.compactness).unwrap();
            let mut centers = init_centers(&pixels, p.k);
            for _ in 0..=p.iterations {
                let fast = assign_pixels(&pixels, &centers);
                let slow = brute_force(&pixels, &centers);
                compared += fast.len();
                mismatches += fast.iter().zip(&slow).filter(|(a, b)| a != b).count();
                centers = update_centers(&pixels, &fast, centers.len());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches in {compared} assignments, {elapsed:.2?} (limit 5s)"),
    )
}

fn c2_objective_monotone(corpus: &[Case]) -> Outcome {
    let (mut worst, mut runs, mut violations) = (f64::NEG_INFINITY, 0usize, 0usize);
    for case in corpus {
        let labxy = rgb_to_labxy(&case.img, 1.0);
        for label in 0..case.mask.label_count() {
            if case.mask.histogram()[label] == 0 {
                continue;
            }
            let (_, _, summary) =
                cluster_label(&labxy, &case.mask, label, &params(case.k)).unwrap();
            runs += 1;
            for w in summary.objective.windows(2) {
                let rise = w[1] - w[0];
                worst = worst.max(rise);
                if rise > 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} increases over {runs} runs, largest step {worst:.3e} (tolerance 1e-9)"
        ),
    )
}

fn c3_partition(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut failures = Vec::new();
    for case in 0..200 {
        let (w, h) = (r.random_range(4..=20), r.random_range(4..=20));
        let labels = r.random_range(1..=4);
        let mask = random_mask(w, h, labels, case % 2 == 0, &mut r);
        let img = random_image(w, h, &mut r);
        let k = r.random_range(1..=12);
        let spmap = match cluster(&rgb_to_labxy(&img, 1.0), &mask, &params(k)) {
            Ok(m) => m,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let ids = spmap.global_ids();
        let offsets = spmap.offsets();
        let hist = mask.histogram();
        for label in 0..mask.label_count() {
            let count = spmap.cluster_count(label);
            if (hist[label] == 0) != (count == 0) || count > k.max(1) {
                failures.push(format!("case {case}: label {label} has {count} clusters"));
            }
            let mut members = vec![0usize; count];
            for i in mask.pixels_of(label) {
                match spmap.cluster_of(label, i) {
                    Some(c) if c < count => {
                        members[c] += 1;
                        if ids[i] as usize != offsets[label] + c {
                            failures.push(format!("case {case}: pixel {i} has a foreign id"));
                        }
                    }
                    other => failures.push(format!("case {case}: pixel {i} -> {other:?}")),
                }
            }
            if members.contains(&0) {
                failures.push(format!("case {case}: label {label} has an empty cluster"));
            }
        }
        // Ids never cross labels.
        for (i, &id) in ids.iter().enumerate() {
            let l = mask.label(i);
            if (id as usize) < offsets[l] || id as usize >= offsets[l] + spmap.cluster_count(l) {
                failures.push(format!("case {case}: pixel {i} id {id} outside label {l}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        match failures.first() {
            None => "200 masks, clusters disjoint and covering".into(),
            Some(f) => format!("{} violations, first: {f}", failures.len()),
        },
    )
}

fn c4_constant_color() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..60 {
        let (w, h) = (r.random_range(3..=24), r.random_range(3..=24));
        let color = [r.random::<u8>(), r.random::<u8>(), r.random::<u8>()];
        let img = RgbImage::filled(w, h, color).unwrap();
        let labels = r.random_range(1..=4);
        let mask = random_mask(w, h, labels, r.random_bool(0.3), &mut r);
        let k = r.random_range(1..=16);
        let n = r.random_range(3..=200);
        let (spmap, codes) = pipeline::encode(&img, &mask, &params(k), n).unwrap();
        let unit = color.map(|c| f64::from(c) / 255.0);
        for l in codes.present_labels() {
            let code = codes.get(l).unwrap();
            let tiled: Vec<f64> = (0..3 * spmap.cluster_count(l))
                .map(|i| unit[i % 3])
                .collect();
            for (got, want) in code.raw.iter().zip(&tiled) {
                worst = worst.max((got - want).abs());
            }
            for (got, want) in code.code.iter().zip(resample_code(&tiled, n)) {
                worst = worst.max((got - want).abs());
            }
            if code.code.len() != n || code.raw.len() != tiled.len() {
                worst = f64::INFINITY;
            }
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-6,
        format!("{checked} label codes, max deviation {worst:.3e} (limit 1e-6)"),
    )
}

fn loss_at(a: &[f64], p: &GsasParams, g: &[f64]) -> f64 {
    let out = gsas::forward(a, p, Averaging::Mean).unwrap().output;
    out.iter().zip(g).map(|(o, g)| o * g).sum()
}

// The floor keeps gradients that vanish exactly from turning rounding noise
// in the difference quotient into a large relative error.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

// True when no pre-activation lies within reach of the difference stencil of
// the LeakyReLU kink, where the loss is not differentiable.
fn clear_of_kink(a: &[f64], p: &GsasParams, eps: f64) -> bool {
    let margin = 2.0 * eps * (1.0 + p.w1.abs() + p.w2.abs());
    a.iter().all(|ai| {
        a.iter()
            .all(|aj| (p.w1 * ai + p.w2 * aj + p.bias).abs() > margin)
    })
}

type Field = fn(&mut GsasParams) -> &mut f64;

fn c5_gradient_check(row_sums: &mut f64) -> Outcome {
    let start = Instant::now();
    let eps = 1e-5;
    let mut r = rng(5);
    let (mut worst, mut redrawn) = (0.0f64, 0usize);
    for &n in &[2usize, 16, 64] {
        for _ in 0..100 {
            let (a, p) = loop {
                let a: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
                let p = GsasParams {
                    w1: r.random_range(-1.0..1.0),
                    w2: r.random_range(-1.0..1.0),
                    bias: r.random_range(-0.5..0.5),
                    ..GsasParams::zeros()
                };
                if clear_of_kink(&a, &p, eps) {
                    break (a, p);
                }
                redrawn += 1;
            };
            let g: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            track_rows(&a, &p, row_sums);
            let grads = gsas::backward(&a, &p, Averaging::Mean, &g).unwrap();
            for i in 0..n {
                let (mut hi, mut lo) = (a.clone(), a.clone());
                hi[i] += eps;
                lo[i] -= eps;
                let numeric = (loss_at(&hi, &p, &g) - loss_at(&lo, &p, &g)) / (2.0 * eps);
                worst = worst.max(rel_err(grads.a[i], numeric));
            }
            let tweaks: [(f64, Field); 3] = [
                (grads.w1, |p| &mut p.w1),
                (grads.w2, |p| &mut p.w2),
                (grads.bias, |p| &mut p.bias),
            ];
            for (analytic, field) in tweaks {
                let (mut hi, mut lo) = (p, p);
                *field(&mut hi) += eps;
                *field(&mut lo) -= eps;
                let numeric = (loss_at(&a, &hi, &g) - loss_at(&a, &lo, &g)) / (2.0 * eps);
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-5 && elapsed < Duration::from_secs(10),
        format!(
            "300 cases ({redrawn} draws too close to the kink redrawn), max relative error {worst:.3e} (limit 1e-5), {elapsed:.2?} (limit 10s)"
        ),
    )
}

fn c6_zero_params(row_sums: &mut f64) -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(1..=64);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let mean = a.iter().sum::<f64>() / n as f64;
        let p = GsasParams::zeros();
        track_rows(&a, &p, row_sums);
        let out = gsas::forward(&a, &p, Averaging::Mean).unwrap().output;
        for (o, x) in out.iter().zip(&a) {
            worst = worst.max((o - (x + mean / n as f64)).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("100 vectors, max error {worst:.3e} (limit 1e-12)"),
    )
}

fn track_rows(a: &[f64], p: &GsasParams, worst: &mut f64) {
    let t = gsas::forward(a, p, Averaging::Mean).unwrap();
    for i in 0..t.n {
        *worst = worst.max((t.score_row(i).iter().sum::<f64>() - 1.0).abs());
    }
}

fn c7_softmax_rows(mut worst: f64) -> Outcome {
    // Extends the corpus from the two previous criteria with large weights.
    let mut r = rng(7);
    for _ in 0..200 {
        let n = r.random_range(1..=128);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let p = GsasParams {
            w1: r.random_range(-50.0..50.0),
            w2: r.random_range(-50.0..50.0),
            bias: r.random_range(-50.0..50.0),
            leaky_slope: r.random_range(0.01..0.99),
        };
        track_rows(&a, &p, &mut worst);
    }
    outcome(
        worst <= 1e-12,
        format!("max |row sum - 1| {worst:.3e} (limit 1e-12)"),
    )
}

fn c8_losses() -> Outcome {
    let stack = |v: Vec<Array3<f64>>| FeatureStack::new(v).unwrap();
    let real = stack(vec![
        Array3::from_shape_vec((1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
        Array3::from_elem((2, 1, 3), 0.5),
    ]);
    let fake = stack(vec![Array3::zeros((1, 2, 2)), Array3::zeros((2, 1, 3))]);
    let single_real = stack(vec![Array3::from_shape_vec(
        (1, 2, 2),
        vec![1.0, 2.0, 3.0, 4.0],
    )
    .unwrap()]);
    let single_fake = stack(vec![Array3::zeros((1, 2, 2))]);
    let w = LossWeights::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-12 {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };
    check(
        "perceptual 1 layer",
        perceptual_loss(&single_real, &single_fake).unwrap(),
        2.5,
    );
    check(
        "perceptual 2 layers",
        perceptual_loss(&real, &fake).unwrap(),
        1.5,
    );
    let fm =
        feature_matching_loss(&[single_real.clone(), real.clone()], &[single_fake, fake]).unwrap();
    check("feature matching scale 0", fm[0], 2.5);
    check("feature matching scale 1", fm[1], 1.5);
    check(
        "hinge d saturated",
        hinge_d_loss(&[1.0, 3.0], &[-1.0, -7.0]).unwrap(),
        0.0,
    );
    check("hinge d", hinge_d_loss(&[0.5], &[-0.5]).unwrap(), 1.0);
    check("hinge g", hinge_g_loss(&[2.0, -4.0]).unwrap(), 1.0);
    check(
        "total",
        total_loss(0.1, &[0.2, 0.3], &[1.0, -1.0], w).unwrap(),
        6.0,
    );

    let zeros_exact = perceptual_loss(&real, &real).unwrap() == 0.0
        && feature_matching_loss(std::slice::from_ref(&real), std::slice::from_ref(&real)).unwrap()
            == vec![0.0]
        && total_loss(0.0, &[0.0, 0.0], &[0.0, 0.0], w).unwrap() == 0.0;
    if !zeros_exact {
        failures.push("identical inputs are not exactly zero".into());
    }
    if (w.alpha, w.beta) != (10.0, 10.0) {
        failures.push(format!("default weights {} / {}", w.alpha, w.beta));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "examples match, identical inputs give 0, default weights 10/10".into()
        } else {
            failures.join("; ")
        },
    )
}

fn c9_color_round_trip() -> Outcome {
    let mut r = rng(9);
    let mut worst = 0i16;
    for _ in 0..10_000 {
        let c = [r.random::<u8>(), r.random::<u8>(), r.random::<u8>()];
        let back = lab_to_rgb(rgb_to_lab(c));
        for i in 0..3 {
            worst = worst.max((i16::from(back[i]) - i16::from(c[i])).abs());
        }
    }
    let white = rgb_to_lab([255, 255, 255])[0];
    outcome(
        worst <= 1 && (white - 100.0).abs() <= 1e-3,
        format!("max channel error {worst} (limit 1), white L* = {white:.6}"),
    )
}

fn mae(a: &RgbImage, b: &RgbImage) -> f64 {
    let total: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(x, y)| u64::from(x.abs_diff(*y)))
        .sum();
    total as f64 / a.as_raw().len() as f64
}

fn c10_round_trip() -> Outcome {
    let (w, h) = (64, 64);
    let img = test_photo(w, h, 10);
    let mask = SemanticMask::from_labels(
        w,
        h,
        (0..w * h)
            .map(|i| u32::from(i / w >= h / 2) + u32::from(i % w >= w / 2))
            .collect(),
    )
    .unwrap();
    let mut errors = Vec::new();
    let mut worst_mean = 0.0f64;
    for k in [4, 16, 64, 256] {
        let (spmap, codes) = pipeline::encode(&img, &mask, &params(k), 512).unwrap();
        let recon = mixer::coarse_reconstruct(&codes, &spmap, &mask).unwrap();
        for l in codes.present_labels() {
            let raw = &codes.get(l).unwrap().raw;
            let mut sums = vec![[0.0f64; 3]; spmap.cluster_count(l)];
            let mut counts = vec![0usize; spmap.cluster_count(l)];
            for i in mask.pixels_of(l) {
                let c = spmap.cluster_of(l, i).unwrap();
                counts[c] += 1;
                for (ch, v) in recon.pixel(i).into_iter().enumerate() {
                    sums[c][ch] += f64::from(v);
                }
            }
            for c in 0..counts.len() {
                for ch in 0..3 {
                    let got = sums[c][ch] / counts[c] as f64;
                    worst_mean = worst_mean.max((got - raw[3 * c + ch] * 255.0).abs());
                }
            }
        }
        errors.push(mae(&img, &recon));
    }
    let monotone = errors.windows(2).all(|p| p[1] <= p[0]);
    outcome(
        worst_mean <= 1.0 && monotone,
        format!(
            "superpixel means within {worst_mean:.3} (limit 1), MAE over k=4/16/64/256: {}",
            errors
                .iter()
                .map(|e| format!("{e:.3}"))
                .collect::<Vec<_>>()
                .join(" / ")
        ),
    )
}

fn c11_determinism(r: &mut ChaCha8Rng) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mask = random_mask(40, 32, 3, true, r);
    let (image, m) = write_inputs(dir.path(), &test_photo(40, 32, 11), &mask);
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run_id in 0..3 {
        let d = dir.path().join(format!("run{run_id}"));
        fs::create_dir_all(&d).unwrap();
        let (codes, map, overlay, map2) = (
            d.join("codes.json"),
            d.join("map.png"),
            d.join("overlay.png"),
            d.join("sp.png"),
        );
        let a = run([
            "encode",
            "--image",
            p(&image),
            "--mask",
            p(&m),
            "--out",
            p(&codes),
            "--map-out",
            p(&map),
            "--k",
            "24",
            "--n",
            "100",
        ]);
        let b = run([
            "superpixels",
            "--image",
            p(&image),
            "--mask",
            p(&m),
            "--out",
            p(&overlay),
            "--map-out",
            p(&map2),
            "--k",
            "24",
        ]);
        if code(&a) != 0 || code(&b) != 0 {
            return outcome(
                false,
                format!(
                    "run {run_id} failed: {}{}",
                    String::from_utf8_lossy(&a.stderr),
                    String::from_utf8_lossy(&b.stderr)
                ),
            );
        }
        let files = [
            &codes,
            &map,
            &spstyle_core::io::centers_path(&map),
            &overlay,
            &map2,
        ];
        outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("3 runs x 5 output files, identical: {same}"))
}

fn main() -> ExitCode {
    let corpus = clustering_corpus();
    let mut row_sums = 0.0;
    let results = [
        (
            "C1",
            "clustering oracle equivalence",
            c1_assignment_oracle(&corpus),
        ),
        (
            "C2",
            "objective monotonicity",
            c2_objective_monotone(&corpus),
        ),
        ("C3", "partition invariant", c3_partition(3)),
        ("C4", "constant-color style codes", c4_constant_color()),
        (
            "C5",
            "attention gradient check",
            c5_gradient_check(&mut row_sums),
        ),
        (
            "C6",
            "zero-parameter attention closed form",
            c6_zero_params(&mut row_sums),
        ),
        ("C7", "softmax normalization", c7_softmax_rows(row_sums)),
        ("C8", "loss formulas", c8_losses()),
        ("C9", "color round trip", c9_color_round_trip()),
        ("C10", "encode/reconstruct round trip", c10_round_trip()),
        ("C11", "determinism", c11_determinism(&mut rng(11))),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "[{}] {id} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gstk::analysis::{accuracy, classify, fit_classes, oif_rank, ClassificationMap, FeatureStack, Roi, TrainingMode};
use gstk::convolve::{convolve_with, BoundaryMode, ConvolveOptions};
use gstk::kernels::{derive_quadrant_template, laplacian_template, symmetrize};
use gstk::raster::{bsq, pgm};
use gstk::synth::{oif_forced_scene, synth_scene, three_class_scene};
use gstk::{Band, Dtype, Kernel, MultibandImage, ResponseField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference 5x5 smoothing template, anchor at the centre.
const SMOOTH5: [[i32; 5]; 5] =
    [[0, 0, 1, 0, 0], [0, 2, -4, 2, 0], [1, -4, 4, -4, 1], [0, 2, -4, 2, 0], [0, 0, 1, 0, 0]];

/// Reference 3x3 Laplacian template.
const LAPLACIAN3: [[i32; 3]; 3] = [[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]];

const BOUNDARIES: [BoundaryMode; 3] = [BoundaryMode::Replicate, BoundaryMode::Reflect, BoundaryMode::Zero];

type Outcome = Result<String, String>;
type Field = fn(i64, i64) -> i64;
type Symmetry = fn(i64, i64) -> (i64, i64);
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, budget: Duration, what: &str) -> Result<(), String> {
    if elapsed < budget {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, budget {budget:?}"))
    }
}

fn grid(k: &Kernel) -> Vec<Vec<i32>> {
    (0..k.rows()).map(|r| (0..k.cols()).map(|c| k.get(r, c)).collect()).collect()
}

fn template_fidelity() -> Outcome {
    let t = Instant::now();
    let full = symmetrize(&derive_quadrant_template()).map_err(|e| e.to_string())?;
    let lap = laplacian_template();
    let elapsed = t.elapsed();

    ensure!(full.anchor() == (2, 2), "symmetrized anchor {:?}", full.anchor());
    ensure!(grid(&full) == SMOOTH5.map(Vec::from).to_vec(), "5x5 template differs: {:?}", grid(&full));
    ensure!(lap.anchor() == (1, 1), "laplacian anchor {:?}", lap.anchor());
    ensure!(grid(&lap) == LAPLACIAN3.map(Vec::from).to_vec(), "laplacian differs: {:?}", grid(&lap));
    within(elapsed, Duration::from_millis(1), "derivation")?;
    Ok(format!("25/25 and 9/9 cells match in {elapsed:?}"))
}

fn kernel_invariants() -> Outcome {
    let t = Instant::now();
    let k = symmetrize(&derive_quadrant_template()).map_err(|e| e.to_string())?;
    let lib = (k.sum(), k.moment(1, 0), k.moment(0, 1), k.nonzero_count(), k.is_d4_symmetric());
    let elapsed = t.elapsed();

    // Brute force over the literal grid, offsets relative to the centre.
    let (mut sum, mut mx, mut my, mut nz) = (0i64, 0i64, 0i64, 0usize);
    for (r, row) in SMOOTH5.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let (x, y) = (c as i64 - 2, r as i64 - 2);
            sum += i64::from(v);
            mx += i64::from(v) * x;
            my += i64::from(v) * y;
            nz += usize::from(v != 0);
        }
    }
    let at = |x: i64, y: i64| SMOOTH5[(y + 2) as usize][(x + 2) as usize];
    let maps: [Symmetry; 8] = [
        |x, y| (x, y),
        |x, y| (-y, x),
        |x, y| (-x, -y),
        |x, y| (y, -x),
        |x, y| (-x, y),
        |x, y| (x, -y),
        |x, y| (y, x),
        |x, y| (-y, -x),
    ];
    let d4 = maps.iter().all(|m| {
        (-2..=2).all(|y| {
            (-2..=2).all(|x| {
                let (u, v) = m(x, y);
                at(u, v) == at(x, y)
            })
        })
    });

    ensure!((sum, mx, my, nz, d4) == (0, 0, 0, 13, true), "oracle disagrees with reference grid: {:?}", (sum, mx, my, nz, d4));
    ensure!(lib == (sum, mx, my, nz, d4), "library invariants {lib:?}");
    within(elapsed, Duration::from_millis(1), "invariant evaluation")?;
    Ok(format!("sum 0, first moments 0, 13 nonzero, D4 symmetric in {elapsed:?}"))
}

/// Σ k(dc,dr) · f(x + dc, y + dr) by direct summation over the template grid.
fn brute_response(k: &Kernel, f: impl Fn(i64, i64) -> i64, x: i64, y: i64) -> i64 {
    let (ar, ac) = k.anchor();
    let mut acc = 0;
    for r in 0..k.rows() {
        for c in 0..k.cols() {
            acc += i64::from(k.get(r, c)) * f(x + c as i64 - ac as i64, y + r as i64 - ar as i64);
        }
    }
    acc
}

fn field(w: usize, h: usize, f: impl Fn(i64, i64) -> i64) -> Band {
    Band::from_fn(w, h, Dtype::U16, |c, r| u16::try_from(f(c as i64, r as i64)).expect("field fits u16")).unwrap()
}

fn interior_values(resp: &ResponseField, margin: usize) -> Vec<i32> {
    let mut v = Vec::new();
    for r in margin..resp.height() - margin {
        for c in margin..resp.width() - margin {
            v.push(resp.get(c, r));
        }
    }
    v
}

fn annihilation() -> Outcome {
    let t = Instant::now();
    let k = symmetrize(&derive_quadrant_template()).map_err(|e| e.to_string())?;
    let opts = ConvolveOptions::single_threaded();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (w, h) = (32usize, 32usize);

    for case in 0..50 {
        let (a, b) = (rng.gen_range(-40i64..=40), rng.gen_range(-40i64..=40));
        let c = rng.gen_range(3000i64..=6000);
        let f = move |x: i64, y: i64| a * x + b * y + c;
        let resp = convolve_with(&field(w, h, f), &k, BoundaryMode::Replicate, &opts).map_err(|e| e.to_string())?;
        ensure!(brute_response(&k, f, 10, 10) == 0, "oracle response to affine case {case} is nonzero");
        ensure!(interior_values(&resp, 2).iter().all(|&v| v == 0), "affine case {case} ({a},{b},{c}) not annihilated");
    }

    let quadratics: [(&str, Field); 3] = [("x^2", |x, _| x * x), ("y^2", |_, y| y * y), ("xy", |x, y| x * y)];
    let mut got = Vec::new();
    for (name, f) in quadratics {
        let resp = convolve_with(&field(w, h, f), &k, BoundaryMode::Replicate, &opts).map_err(|e| e.to_string())?;
        let expected = brute_response(&k, f, 0, 0);
        ensure!(
            (2..30).all(|p| brute_response(&k, f, p, 31 - p) == expected),
            "oracle response to {name} is not constant"
        );
        ensure!(
            interior_values(&resp, 2).iter().all(|&v| i64::from(v) == expected),
            "{name} interior response differs from oracle value {expected}"
        );
        got.push(expected);
    }
    ensure!(got == [8, 8, 0], "quadratic responses {got:?}");
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_millis(100), "annihilation checks")?;
    Ok(format!("50 affine fields -> 0; x^2, y^2, xy -> 8, 8, 0 in {elapsed:?}"))
}

/// Half-sample symmetric fold, applied until the index lands inside.
fn fold(mut i: i64, n: i64) -> i64 {
    while !(0..n).contains(&i) {
        i = if i < 0 { -i - 1 } else { 2 * n - 1 - i };
    }
    i
}

fn oracle_convolve(band: &Band, k: &Kernel, mode: BoundaryMode) -> Vec<i32> {
    let (w, h) = (band.width() as i64, band.height() as i64);
    let (ar, ac) = k.anchor();
    let mut out = Vec::with_capacity(band.samples().len());
    for y in 0..h {
        for x in 0..w {
            let mut acc: i64 = 0;
            for kr in 0..k.rows() {
                for kc in 0..k.cols() {
                    let (sx, sy) = (x + kc as i64 - ac as i64, y + kr as i64 - ar as i64);
                    let v = match mode {
                        BoundaryMode::Replicate => band.get(sx.clamp(0, w - 1) as usize, sy.clamp(0, h - 1) as usize),
                        BoundaryMode::Reflect => band.get(fold(sx, w) as usize, fold(sy, h) as usize),
                        BoundaryMode::Zero => {
                            if (0..w).contains(&sx) && (0..h).contains(&sy) {
                                band.get(sx as usize, sy as usize)
                            } else {
                                0
                            }
                        }
                    };
                    acc += i64::from(k.get(kr, kc)) * i64::from(v);
                }
            }
            out.push(i32::try_from(acc).expect("oracle sum fits i32"));
        }
    }
    out
}

fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel {
    let (rows, cols) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
    let anchor = (rng.gen_range(0..rows), rng.gen_range(0..cols));
    let coeffs = (0..rows * cols).map(|_| rng.gen_range(-60..=60)).collect();
    Kernel::new(rows, cols, anchor, coeffs).unwrap()
}

fn random_band(rng: &mut ChaCha8Rng, max_side: usize) -> Band {
    let (w, h) = (rng.gen_range(1..=max_side), rng.gen_range(1..=max_side));
    let dtype = if rng.gen_bool(0.5) { Dtype::U8 } else { Dtype::U16 };
    let top = dtype.max_value();
    Band::from_fn(w, h, dtype, |_, _| match rng.gen_range(0..10) {
        0 => 0,
        1 => top,
        _ => rng.gen_range(0..=top),
    })
    .unwrap()
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fixed = [
        ("quadrant", derive_quadrant_template()),
        ("smooth5", Kernel::centered(&SMOOTH5).unwrap()),
        ("laplacian3", Kernel::centered(&LAPLACIAN3).unwrap()),
    ];
    let mut runs = 0;
    for case in 0..200 {
        let band = random_band(&mut rng, 32);
        let (name, kernel) = match case % 4 {
            3 => ("random".to_string(), random_kernel(&mut rng)),
            i => (fixed[i].0.to_string(), fixed[i].1.clone()),
        };
        for mode in BOUNDARIES {
            let expected = oracle_convolve(&band, &kernel, mode);
            for workers in [1, 2, 8] {
                let opts = ConvolveOptions { workers, tile_rows: rng.gen_range(1..=8) };
                let got = convolve_with(&band, &kernel, mode, &opts).map_err(|e| format!("case {case}: {e}"))?;
                ensure!(
                    got.samples() == expected.as_slice(),
                    "case {case}: {name} kernel on {}x{} band, {} boundary, {workers} workers",
                    band.width(),
                    band.height(),
                    mode.name()
                );
                runs += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(10), "oracle comparison")?;
    Ok(format!("200 cases x 3 boundaries x 3 worker counts = {runs} runs bit-identical in {elapsed:?}"))
}

/// Scores every triple from exact integer moments.
fn oracle_oif(image: &MultibandImage) -> Vec<([usize; 3], f64)> {
    let n = image.band_count();
    let px = (image.width() * image.height()) as i128;
    let s: Vec<&[u16]> = image.bands().iter().map(Band::samples).collect();
    let sum: Vec<i128> = s.iter().map(|b| b.iter().map(|&v| i128::from(v)).sum()).collect();
    let cross = |i: usize, j: usize| -> i128 {
        let sxy: i128 = s[i].iter().zip(s[j]).map(|(&a, &b)| i128::from(a) * i128::from(b)).sum();
        px * sxy - sum[i] * sum[j]
    };
    let var: Vec<i128> = (0..n).map(|i| cross(i, i)).collect();
    let sd: Vec<f64> = var.iter().map(|&v| (v as f64).sqrt() / px as f64).collect();
    let r = |i: usize, j: usize| (cross(i, j) as f64 / ((var[i] as f64).sqrt() * (var[j] as f64).sqrt())).abs();

    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push(([i, j, k], (sd[i] + sd[j] + sd[k]) / (r(i, j) + r(i, k) + r(j, k))));
            }
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

fn random_image(rng: &mut ChaCha8Rng) -> MultibandImage {
    let bands = rng.gen_range(5..=7);
    let (w, h) = (rng.gen_range(8..=48), rng.gen_range(8..=48));
    let dtype = if rng.gen_bool(0.5) { Dtype::U8 } else { Dtype::U16 };
    let top = f64::from(dtype.max_value());
    // Each band mixes two shared latent fields with its own noise.
    let latent: Vec<(f64, f64)> = (0..w * h).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let list = (0..bands)
        .map(|_| {
            let (a, b, e) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen_range(0.05..1.0));
            let total = a + b + e;
            let samples = latent
                .iter()
                .map(|&(u, v)| ((a * u + b * v + e * rng.gen::<f64>()) / total * top).floor().min(top) as u16)
                .collect();
            Band::new(w, h, dtype, samples).unwrap()
        })
        .collect();
    MultibandImage::new(list, None).unwrap()
}

fn oif_correctness() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..40 {
        let image = random_image(&mut rng);
        let got = oif_rank(&image).map_err(|e| format!("case {case}: {e}"))?;
        let expected = oracle_oif(&image);
        ensure!(got.len() == expected.len(), "case {case}: {} triples, oracle {}", got.len(), expected.len());
        for (g, (triple, score)) in got.iter().zip(&expected) {
            ensure!(g.triple == *triple, "case {case}: ordering differs at {:?} vs {:?}", g.triple, triple);
            let rel = ((g.score - score) / score).abs();
            worst = worst.max(rel);
            ensure!(rel <= 1e-9, "case {case}: score of {triple:?} off by {rel:e} relative");
        }
    }
    let (image, _) = synth_scene(&oif_forced_scene(1)).map_err(|e| e.to_string())?;
    let top = oif_rank(&image).map_err(|e| e.to_string())?[0];
    ensure!(top.band_numbers() == [1, 4, 5], "forced scene top triple {:?}", top.band_numbers());
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(5), "OIF checks")?;
    Ok(format!("40 random images match exhaustive scorer (max rel err {worst:.1e}); forced scene top triple (1,4,5) in {elapsed:?}"))
}

fn classification() -> Outcome {
    let t = Instant::now();
    let spec = three_class_scene(7);
    for b in 0..spec.band_count() {
        for (i, p) in spec.classes.iter().enumerate() {
            for q in &spec.classes[i + 1..] {
                let (x, y) = (p.bands[b], q.bands[b]);
                let sigma = x.noise.max(y.noise);
                ensure!(
                    (x.mean - y.mean).abs() >= 10.0 * sigma,
                    "scene classes {} and {} closer than 10 sigma",
                    p.name,
                    q.name
                );
            }
        }
    }
    let (image, truth) = synth_scene(&spec).map_err(|e| e.to_string())?;

    // Checkerboard split: even (col + row) trains, odd is held out.
    let mut rois: Vec<Roi> = spec.class_names().into_iter().map(|name| Roi { name, pixels: Vec::new() }).collect();
    let mut held_out = truth.labels().to_vec();
    for r in 0..truth.height() {
        for c in 0..truth.width() {
            if (c + r) % 2 == 0 {
                rois[usize::from(truth.get(c, r)) - 1].pixels.push((c, r));
                held_out[r * truth.width() + c] = 0;
            }
        }
    }
    let held_out = ClassificationMap::new(truth.width(), truth.height(), held_out).unwrap();

    let features = FeatureStack::from_image(&image);
    let specs = fit_classes(&features, &rois, TrainingMode::MinMax).map_err(|e| e.to_string())?;
    let map = classify(&features, &specs).map_err(|e| e.to_string())?;
    let cm = accuracy(&map, &held_out).map_err(|e| e.to_string())?;
    let self_acc = accuracy(&map, &map).map_err(|e| e.to_string())?.overall_accuracy;
    let elapsed = t.elapsed();

    ensure!(cm.total as usize == truth.labels().len() / 2, "evaluated {} pixels", cm.total);
    ensure!(cm.overall_accuracy >= 0.99, "held-out accuracy {:.4}", cm.overall_accuracy);
    ensure!(self_acc == 1.0, "accuracy(map, map) = {self_acc}");
    within(elapsed, Duration::from_secs(5), "classification")?;
    Ok(format!(
        "held-out accuracy {:.4} over {} pixels; accuracy(map, map) = 1.0 in {elapsed:?}",
        cm.overall_accuracy, cm.total
    ))
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_gstk"))
            .args(["pipeline", "--seed", "11", "--out-dir"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "pipeline run {run} failed: {}", String::from_utf8_lossy(&status.stderr));
        let mut files = BTreeMap::new();
        collect_files(&out, &out, &mut files);
        trees.push(files);
    }
    ensure!(trees[0].len() >= 10, "pipeline wrote only {} files", trees[0].len());
    ensure!(
        trees[0].keys().eq(trees[1].keys()),
        "file sets differ: {:?} vs {:?}",
        trees[0].keys().collect::<Vec<_>>(),
        trees[1].keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &trees[0] {
        ensure!(trees[1][name] == *bytes, "{name} differs between runs");
    }
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(30), "two pipeline runs")?;
    Ok(format!(
        "{} files ({bytes} bytes) identical across two runs in {elapsed:?}; cross-platform identity not checked on a single host",
        trees[0].len()
    ))
}

fn best_of(n: usize, mut f: impl FnMut() -> Duration) -> Duration {
    (0..n).map(|_| f()).min().unwrap()
}

fn performance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let band = Band::from_fn(2048, 2048, Dtype::U16, |_, _| rng.gen()).unwrap();
    let k = Kernel::centered(&SMOOTH5).unwrap();
    let time = |workers: usize| {
        let opts = ConvolveOptions::with_workers(workers);
        best_of(3, || {
            let t = Instant::now();
            let r = convolve_with(&band, &k, BoundaryMode::Replicate, &opts).unwrap();
            let e = t.elapsed();
            assert_eq!(r.samples().len(), 2048 * 2048);
            e
        })
    };
    let single = time(1);
    within(single, Duration::from_millis(250), "single-threaded 2048x2048 u16 5x5 convolution")?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut line = format!("single-threaded best of 3: {single:?}");
    if threads >= 4 {
        let four = time(4);
        ensure!(four < single, "4 workers {four:?} not faster than 1 worker {single:?}");
        let _ = write!(line, "; 4 workers: {four:?}");
    } else {
        let _ = write!(line, "; 4-worker speedup SKIPPED: host exposes {threads} hardware thread(s)");
    }
    Ok(line)
}

fn random_names(rng: &mut ChaCha8Rng, n: usize) -> Option<Vec<String>> {
    rng.gen_bool(0.5).then(|| (0..n).map(|i| format!("band_{i}_{}", rng.gen_range(0..1000))).collect())
}

fn round_trips() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for case in 0..100 {
        let first = random_band(&mut rng, 64);
        let (w, h, dtype) = (first.width(), first.height(), first.dtype());
        let count = rng.gen_range(1..=8);
        let mut bands = vec![first];
        while bands.len() < count {
            let top = dtype.max_value();
            bands.push(Band::from_fn(w, h, dtype, |_, _| rng.gen_range(0..=top)).unwrap());
        }
        let names = random_names(&mut rng, count);
        let image = MultibandImage::new(bands, names).unwrap();

        for band in image.bands() {
            let back = pgm::read_pgm(&pgm::write_pgm(band)).map_err(|e| format!("case {case}: {e}"))?;
            ensure!(back == *band, "case {case}: PGM round trip changed the band");
        }
        let (header, payload) = bsq::write_bsq(&image).map_err(|e| e.to_string())?;
        ensure!(payload.len() == w * h * count * dtype.bytes(), "case {case}: payload is {} bytes", payload.len());
        let back = bsq::read_bsq(&header, &payload).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == image, "case {case}: BSQ round trip changed the image");

        let stem = tmp.path().join(format!("img{case}"));
        bsq::save_image(&stem, &image).map_err(|e| e.to_string())?;
        ensure!(
            bsq::load_image(&stem).map_err(|e| e.to_string())? == image,
            "case {case}: BSQ file round trip differs"
        );
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(5), "round trips")?;
    Ok(format!("100 fuzzed images: PGM per band, BSQ in memory and on disk identical in {elapsed:?}"))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("template fidelity", template_fidelity),
        ("kernel invariants", kernel_invariants),
        ("annihilation", annihilation),
        ("convolution oracle equivalence", oracle_equivalence),
        ("OIF correctness", oif_correctness),
        ("classification", classification),
        ("end-to-end determinism", determinism),
        ("performance", performance),
        ("I/O round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

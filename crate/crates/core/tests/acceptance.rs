//! Acceptance checks, one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sauna_core::io::{decode_field, encode_field};
use sauna_core::losses::{self, LossConfig};
use sauna_core::metrics::{binarize, metrics_from_confusion, ConfusionCounts};
use sauna_core::synth;
use sauna_core::trainer::{self, ExperimentConfig, ExperimentReport, Objective, PixelModel, Variant};
use sauna_core::transforms::oracle;
use sauna_core::{sauna_maps, sauna_transform, BinaryMask, FieldKind, SaunaParams, ScalarField};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn field(v: &[f64]) -> ScalarField {
    ScalarField::from_vec(v.to_vec(), FieldKind::Generic).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng) -> BinaryMask {
    let h = rng.random_range(1..=48);
    let w = rng.random_range(1..=48);
    let mut bits = vec![0u8; h * w];
    match rng.random_range(0..3) {
        0 => {
            let p = rng.random_range(0.05..0.6);
            bits.iter_mut().for_each(|b| *b = rng.random_bool(p) as u8);
        }
        1 => {
            for _ in 0..rng.random_range(1..6) {
                let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
                let (r1, c1) = (rng.random_range(r0..h), rng.random_range(c0..w));
                for r in r0..=r1 {
                    for c in c0..=c1 {
                        bits[r * w + c] = 1;
                    }
                }
            }
        }
        _ => {
            for _ in 0..rng.random_range(1..5) {
                let (cy, cx) = (rng.random_range(0.0..h as f64), rng.random_range(0.0..w as f64));
                let rad: f64 = rng.random_range(0.5..12.0);
                for r in 0..h {
                    for c in 0..w {
                        if (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) <= rad * rad {
                            bits[r * w + c] = 1;
                        }
                    }
                }
            }
        }
    }
    BinaryMask::new(h, w, bits).unwrap()
}

fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = SaunaParams::default();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for i in 0..500 {
        let mask = random_mask(&mut rng);
        match (sauna_maps(&mask, &params), oracle::brute_force_maps(&mask, &params)) {
            (Ok(fast), Ok(slow)) => {
                let pairs = [
                    (&fast.distance, &slow.distance),
                    (&fast.thickness, &slow.thickness),
                    (&fast.sauna, &slow.sauna),
                ];
                for (a, b) in pairs {
                    worst = worst.max(max_abs_diff(a, b));
                }
                ensure(worst < 1e-9, || format!("mask {i}: difference {worst:e}"))?;
                compared += 1;
            }
            (Err(a), Err(b)) => ensure(a.to_string() == b.to_string(), || format!("mask {i}: {a} vs {b}"))?,
            (a, b) => return Err(format!("mask {i}: fast ok = {}, oracle ok = {}", a.is_ok(), b.is_ok())),
        }
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "{compared} masks, max |diff| {worst:.1e}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn row_golden() -> Check {
    let bits = [0, 0, 1, 1, 1, 0, 0];
    let mask = BinaryMask::new(1, 7, bits.to_vec()).unwrap();
    let sauna = sauna_transform(&mask, &SaunaParams::default()).map_err(|e| e.to_string())?;
    let reloaded = decode_field(&encode_field(&sauna).unwrap()).unwrap();
    let expected = [-1.0, -0.5, 0.5, 1.0, 0.5, -0.5, -1.0];
    ensure(reloaded.as_slice() == expected, || {
        format!("got {:?}", reloaded.as_slice())
    })?;
    let raw = sauna_transform(
        &mask,
        &SaunaParams {
            clamp_output: false,
            ..SaunaParams::default()
        },
    )
    .unwrap();
    ensure(raw.as_slice()[0] < -1.0, || {
        format!("raw column 0 = {}", raw.as_slice()[0])
    })?;
    ensure(binarize(&reloaded, 0.0) == mask, || {
        "binarize does not recover the mask".into()
    })?;
    Ok(format!(
        "payload exact, column 0 clamped from {}, binarize recovers the mask",
        raw.as_slice()[0]
    ))
}

fn semi_metric() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (lo, hi) in [(0.0, 1.0), (-1.0, 1.0), (-3.0, 2.0)] {
        let cfg = LossConfig::with_bounds(lo, hi);
        for trial in 0..10_000 {
            let dim = rng.random_range(1..=64);
            let a: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..=hi)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..=hi)).collect();
            let (fa, fb) = (field(&a), field(&b));
            let aa = losses::gjml(&fa, &fa, &cfg).unwrap();
            let ab = losses::gjml(&fa, &fb, &cfg).unwrap();
            let ba = losses::gjml(&fb, &fa, &cfg).unwrap();
            let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            let tag = || format!("[{lo}, {hi}] trial {trial}");
            ensure(aa.abs() <= 1e-12, || format!("{}: reflexivity {aa}", tag()))?;
            ensure(ab >= 0.0, || format!("{}: positivity {ab}", tag()))?;
            ensure(ab == ba, || format!("{}: symmetry {ab} vs {ba}", tag()))?;
            ensure(ab >= 1e-9 || l1 < 1e-6, || {
                format!("{}: zero loss at distance {l1}", tag())
            })?;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("3 x 10000 trials, {:.2}s", start.elapsed().as_secs_f64()))
}

fn sfl1_scalar(x: f64, y: f64, gamma: f64) -> f64 {
    let cfg = LossConfig {
        gamma,
        ..LossConfig::default()
    };
    losses::stable_focal_l1(&field(&[x]), &field(&[y]), &cfg).unwrap()
}

fn unique_minimum() -> Check {
    let xs: Vec<f64> = (0..=2000).map(|j| -1.0 + j as f64 * 1e-3).collect();
    for gamma in [1.0, 2.0] {
        for k in 0..=32 {
            let y0 = -1.0 + k as f64 / 16.0;
            let ls: Vec<f64> = xs.iter().map(|&x| sfl1_scalar(x, y0, gamma)).collect();
            let argmin = (0..ls.len()).fold(0, |best, j| if ls[j] < ls[best] { j } else { best });
            ensure((xs[argmin] - y0).abs() <= 1e-3 + 1e-12, || {
                format!("gamma {gamma}, y0 {y0}: minimum at {}", xs[argmin])
            })?;
            for j in 1..ls.len() - 1 {
                if ls[j] < ls[j - 1] && ls[j] < ls[j + 1] {
                    ensure((xs[j] - y0).abs() <= 1e-3 + 1e-12, || {
                        format!("gamma {gamma}, y0 {y0}: local minimum at {}", xs[j])
                    })?;
                }
            }
        }
    }
    Ok("33 targets x gamma {1, 2}, single minimum at the target".into())
}

fn lower_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = LossConfig::default();
    for trial in 0..10_000 {
        let dim = rng.random_range(1..=32);
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let t: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let stable = losses::stable_focal_l1(&field(&p), &field(&t), &cfg).unwrap();
        let reference = losses::focal_l1_reference(&field(&p), &field(&t), &cfg).unwrap();
        ensure(stable <= reference + 1e-12, || {
            format!("trial {trial}: {stable} > {reference}")
        })?;
    }
    Ok("10000 random pairs".into())
}

fn spurious_minimum() -> Check {
    let cfg = LossConfig::default();
    let reference = |x: f64| losses::focal_l1_reference(&field(&[x]), &field(&[0.5]), &cfg).unwrap();
    let at_edge = reference(-1.0);
    ensure(at_edge == 1.5, || format!("reference(-1) = {at_edge}"))?;
    let inside = reference(-1.0 + 1e-3);
    ensure(inside > 1.5, || format!("reference(-0.999) = {inside}"))?;
    let xs: Vec<f64> = (0..=1500).map(|j| -1.0 + j as f64 * 1e-3).collect();
    for w in xs.windows(2) {
        let (a, b) = (sfl1_scalar(w[0], 0.5, 1.0), sfl1_scalar(w[1], 0.5, 1.0));
        ensure(b < a, || format!("stable loss not decreasing at {}", w[1]))?;
    }
    Ok(format!(
        "reference(-1) = 1.5, reference(-0.999) = {inside:.6}; stable strictly decreasing"
    ))
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-8 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

fn kink_free(p: &[f64], t: &[f64]) -> bool {
    p.iter()
        .zip(t)
        .all(|(&p, &t)| (p - t).abs() > 1e-3 && (p + t).abs() > 1e-3 && p.abs() > 1e-3)
}

type FieldLoss = fn(&ScalarField, &ScalarField, &LossConfig) -> f64;
type FieldGrad = fn(&ScalarField, &ScalarField, &LossConfig) -> ScalarField;

fn loss_gradient(rng: &mut ChaCha8Rng, value: FieldLoss, grad: FieldGrad) -> Result<f64, String> {
    let cfg = LossConfig::default();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let dim = rng.random_range(1..=16);
        let mut p: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.99..0.99)).collect();
        let t: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if !kink_free(&p, &t) {
            continue;
        }
        done += 1;
        let target = field(&t);
        let analytic = grad(&field(&p), &target, &cfg);
        for i in 0..dim {
            let orig = p[i];
            p[i] = orig + h;
            let up = value(&field(&p), &target, &cfg);
            p[i] = orig - h;
            let down = value(&field(&p), &target, &cfg);
            p[i] = orig;
            let e = rel_err(analytic.as_slice()[i], (up - down) / (2.0 * h));
            worst = worst.max(e);
        }
    }
    ensure(worst < 1e-4, || format!("relative error {worst:e}"))?;
    Ok(worst)
}

fn end_to_end_gradient(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let objective = Objective::Combined(LossConfig::default());
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let image: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..=1.0)).collect();
        let bank = trainer::featurize(&ScalarField::new(8, 8, image, FieldKind::Image).unwrap()).unwrap();
        let t: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let target = ScalarField::new(8, 8, t, FieldKind::Sauna).unwrap();
        let model = PixelModel::new(std::array::from_fn(|_| rng.random_range(-1.0..=1.0)));
        if !kink_free(model.predict(&bank).as_slice(), target.as_slice()) {
            continue;
        }
        done += 1;
        let (_, analytic) = trainer::image_loss_and_grad(&model, &bank, &target, &objective);
        for (k, &a) in analytic.iter().enumerate() {
            let (mut up, mut down) = (model, model);
            up.weights[k] += h;
            down.weights[k] -= h;
            let lu = trainer::image_loss_and_grad(&up, &bank, &target, &objective).0;
            let ld = trainer::image_loss_and_grad(&down, &bank, &target, &objective).0;
            worst = worst.max(rel_err(a, (lu - ld) / (2.0 * h)));
        }
    }
    ensure(worst < 1e-3, || format!("end-to-end relative error {worst:e}"))?;
    Ok(worst)
}

fn gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = loss_gradient(
        &mut rng,
        |p, t, c| losses::gjml(p, t, c).unwrap(),
        |p, t, c| losses::gjml_grad(p, t, c).unwrap(),
    )?;
    let s = loss_gradient(
        &mut rng,
        |p, t, c| losses::stable_focal_l1(p, t, c).unwrap(),
        |p, t, c| losses::stable_focal_l1_grad(p, t, c).unwrap(),
    )?;
    let c = loss_gradient(
        &mut rng,
        |p, t, c| losses::combined_loss(p, t, c).unwrap().0,
        |p, t, c| losses::combined_loss_grad(p, t, c).unwrap(),
    )?;
    let e = end_to_end_gradient(&mut rng)?;
    Ok(format!(
        "max relative error gjml {g:.1e}, sfl1 {s:.1e}, combined {c:.1e}, end-to-end {e:.1e}"
    ))
}

fn metrics_golden() -> Check {
    let (s, _) = metrics_from_confusion(&ConfusionCounts {
        tp: 1,
        fp: 1,
        fn_: 1,
        tn: 1,
    });
    ensure(
        format!("{:.6}", s.iou) == "0.333333" && s.dice == 0.5 && s.ba == 0.5,
        || format!("{s:?}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let c = ConfusionCounts {
            tp: rng.random_range(0..1000),
            fp: rng.random_range(0..1000),
            fn_: rng.random_range(0..1000),
            tn: rng.random_range(0..1000),
        };
        if c.tp + c.fp + c.fn_ == 0 {
            continue;
        }
        let (s, _) = metrics_from_confusion(&c);
        let identity = 2.0 * s.iou / (1.0 + s.iou);
        ensure((s.dice - identity).abs() < 1e-12, || {
            format!("{c:?}: dice {} vs {identity}", s.dice)
        })?;
    }
    Ok("golden confusion and dice/iou identity on 1000 confusions".into())
}

fn parse_csv(text: &str) -> Vec<(String, Vec<f64>)> {
    text.lines()
        .skip(1)
        .map(|line| {
            let mut cells = line.split(',');
            let key = cells.next().unwrap().to_string();
            (key, cells.map(|c| c.parse().unwrap()).collect())
        })
        .collect()
}

fn matches_fixture(actual: &str, fixture: &Path) -> Result<(), String> {
    let expected = std::fs::read_to_string(fixture).map_err(|e| format!("{}: {e}", fixture.display()))?;
    ensure(actual.lines().next() == expected.lines().next(), || {
        "header differs".into()
    })?;
    let (a, e) = (parse_csv(actual), parse_csv(&expected));
    ensure(a.len() == e.len(), || {
        format!("{} rows vs {} in fixture", a.len(), e.len())
    })?;
    for ((ka, va), (ke, ve)) in a.iter().zip(&e) {
        ensure(ka == ke && va.len() == ve.len(), || format!("row {ka} vs {ke}"))?;
        for (x, y) in va.iter().zip(ve) {
            ensure((x - y).abs() <= 1.5e-6, || format!("row {ka}: {x} vs fixture {y}"))?;
        }
    }
    Ok(())
}

fn experiment() -> (Check, Option<ExperimentReport>) {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let cfg = ExperimentConfig::with_seed(7);
    let report = match pool.install(|| trainer::run_experiment(&cfg, &Variant::ALL)) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let elapsed = start.elapsed();
    let check = (|| {
        let iou = |v| report.get(v).unwrap().iou;
        let full = iou(Variant::Full);
        ensure(full.mean > iou(Variant::HardL1).mean, || "full <= hard-l1".into())?;
        ensure(full.mean > iou(Variant::NoBoundary).mean, || {
            "full <= no-boundary".into()
        })?;
        for single in [Variant::OnlyGjml, Variant::OnlySfl1] {
            let s = iou(single);
            ensure(full.mean >= s.mean - s.se, || {
                format!("full {} < {single} {} - {}", full.mean, s.mean, s.se)
            })?;
        }
        within(elapsed, 300.0)?;
        let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/experiment_seed7");
        matches_fixture(&report.table_csv(), &fixtures.join("table.csv"))?;
        matches_fixture(&report.curves_csv(), &fixtures.join("curves.csv"))?;
        Ok(format!(
            "iou full {:.4}, hard-l1 {:.4}, no-boundary {:.4}, only-gjml {:.4}, only-sfl1 {:.4} +- {:.4}; {:.1}s single-threaded",
            full.mean,
            iou(Variant::HardL1).mean,
            iou(Variant::NoBoundary).mean,
            iou(Variant::OnlyGjml).mean,
            iou(Variant::OnlySfl1).mean,
            iou(Variant::OnlySfl1).se,
            elapsed.as_secs_f64()
        ))
    })();
    (check, Some(report))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn determinism(first: Option<&ExperimentReport>) -> Check {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let cfg = synth::SynthConfig::with_seed(7);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    synth::write_corpus(&a, &cfg, 12).map_err(|e| e.to_string())?;
    pool.install(|| synth::write_corpus(&b, &cfg, 12))
        .map_err(|e| e.to_string())?;
    ensure(dir_bytes(&a) == dir_bytes(&b), || "synth outputs differ".into())?;

    let first = first.ok_or("experiment did not run")?;
    let second = pool
        .install(|| trainer::run_experiment(&ExperimentConfig::with_seed(7), &Variant::ALL))
        .map_err(|e| e.to_string())?;
    ensure(first.table_csv() == second.table_csv(), || "table CSV differs".into())?;
    ensure(first.curves_csv() == second.curves_csv(), || {
        "curves CSV differs".into()
    })?;
    Ok("synth corpus and experiment CSVs byte-identical across runs and thread counts".into())
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Check)> = vec![
        (1, "transform oracle equivalence", oracle_equivalence()),
        (2, "1x7 golden vector", row_golden()),
        (3, "GJML semi-metric properties", semi_metric()),
        (4, "stable focal-L1 unique minimum", unique_minimum()),
        (5, "stable focal-L1 lower bound", lower_bound()),
        (6, "focal-L1 spurious boundary minimum", spurious_minimum()),
        (7, "gradient checks", gradients()),
        (8, "metrics golden", metrics_golden()),
    ];
    let (exp, report) = experiment();
    results.push((9, "directional experiment", exp));
    results.push((10, "determinism", determinism(report.as_ref())));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

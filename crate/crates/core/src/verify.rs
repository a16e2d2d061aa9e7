//! Self-check suites run by `sauna verify`.
//!
//! Each randomized suite derives one seed per trial as
//! `splitmix64(suite_seed ^ trial)`, and a failure reports that seed so the
//! trial can be replayed in isolation with [`replay_seed`].

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{BinaryMask, FieldKind, ScalarField};
use crate::losses::{self, LossConfig};
use crate::synth::splitmix64;
use crate::trainer::{self, FeatureBank, Objective, PixelModel, NUM_FEATURES};
use crate::transforms::{self, oracle, SaunaParams};

/// Deliberate defects for checking that the suites catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// GJML returns the negated value.
    FlipGjmlSign,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Overrides the trial count of every randomized suite.
    pub trials: Option<usize>,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub trials: usize,
    pub detail: String,
    /// Trial seed reproducing the first failure.
    pub failing_seed: Option<u64>,
    pub elapsed: Duration,
}

pub fn replay_seed(suite_seed: u64, trial: usize) -> u64 {
    splitmix64(suite_seed ^ trial as u64)
}

const HYPERCUBES: [(f64, f64); 3] = [(0.0, 1.0), (-1.0, 1.0), (-3.0, 2.0)];
const GRAD_STEP: f64 = 1e-5;
const KINK_MARGIN: f64 = 1e-3;

struct Runner {
    opts: VerifyOptions,
    results: Vec<SuiteResult>,
}

enum Outcome {
    Pass(String),
    Fail { detail: String, seed: Option<u64> },
}

impl Runner {
    fn trials(&self, default: usize) -> usize {
        self.opts.trials.unwrap_or(default)
    }

    fn suite_seed(&self, name: &str) -> u64 {
        name.bytes().fold(self.opts.seed, |acc, b| splitmix64(acc ^ b as u64))
    }

    fn run(&mut self, name: &'static str, trials: usize, body: impl FnOnce(u64) -> Outcome) {
        let start = Instant::now();
        let outcome = body(self.suite_seed(name));
        let (passed, detail, failing_seed) = match outcome {
            Outcome::Pass(d) => (true, d, None),
            Outcome::Fail { detail, seed } => (false, detail, seed),
        };
        self.results.push(SuiteResult {
            name,
            passed,
            trials,
            detail,
            failing_seed,
            elapsed: start.elapsed(),
        });
    }

    fn gjml(&self, a: &[f64], b: &[f64], guard: f64) -> f64 {
        let v = losses::gjml_raw(a, b, guard);
        match self.opts.fault {
            Some(Fault::FlipGjmlSign) => -v,
            None => v,
        }
    }
}

/// Runs every suite in a fixed order.
pub fn run_all(opts: VerifyOptions) -> Vec<SuiteResult> {
    let mut r = Runner {
        opts,
        results: Vec::new(),
    };
    oracle_suite(&mut r);
    semi_metric_suites(&mut r);
    jml_identity_suite(&mut r);
    unique_minimum_suite(&mut r);
    opposite_sign_suite(&mut r);
    lower_bound_suite(&mut r);
    spurious_minimum_suite(&mut r);
    gradient_suites(&mut r);
    r.results
}

pub fn random_mask(rng: &mut ChaCha8Rng, max_side: usize) -> BinaryMask {
    let h = rng.random_range(1..=max_side);
    let w = rng.random_range(if h == 1 { 2 } else { 1 }..=max_side);
    let density = rng.random_range(0.05..=0.60);
    let mut data: Vec<u8> = (0..h * w).map(|_| rng.random_bool(density) as u8).collect();
    // force both classes
    let n = data.len();
    if !data.contains(&1) {
        data[rng.random_range(0..n)] = 1;
    }
    if !data.contains(&0) {
        data[rng.random_range(0..n)] = 0;
    }
    BinaryMask::new(h, w, data).expect("valid random mask")
}

fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn oracle_suite(r: &mut Runner) {
    let trials = r.trials(500);
    r.run("oracle-equivalence", trials, |seed| {
        let params = SaunaParams::default();
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let ts = replay_seed(seed, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let mask = random_mask(&mut rng, 48);
            let fast = transforms::sauna_maps(&mask, &params);
            let slow = oracle::brute_force_maps(&mask, &params);
            let (fast, slow) = match (fast, slow) {
                (Ok(f), Ok(s)) => (f, s),
                (f, s) => {
                    return Outcome::Fail {
                        detail: format!("transform error: fast {:?} oracle {:?}", f.err(), s.err()),
                        seed: Some(ts),
                    }
                }
            };
            let diff = max_abs_diff(&fast.distance, &slow.distance)
                .max(max_abs_diff(&fast.thickness, &slow.thickness))
                .max(max_abs_diff(&fast.sauna, &slow.sauna))
                .max((fast.m - slow.m).abs());
            worst = worst.max(diff);
            if !(diff < 1e-9) {
                return Outcome::Fail {
                    detail: format!("max |fast - oracle| = {diff:.2e} on {}x{}", mask.height(), mask.width()),
                    seed: Some(ts),
                };
            }
        }
        Outcome::Pass(format!("max |fast - oracle| = {worst:.2e}"))
    });
}

fn random_pair(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let dim = rng.random_range(1..=64);
    let a = (0..dim).map(|_| rng.random_range(lo..=hi)).collect();
    let b = (0..dim).map(|_| rng.random_range(lo..=hi)).collect();
    (a, b)
}

fn semi_metric_suites(r: &mut Runner) {
    let trials = r.trials(10_000);
    let guard = LossConfig::default().denom_guard;

    type Check = fn(&Runner, &[f64], &[f64], f64) -> Result<(), String>;
    let checks: [(&'static str, Check); 3] = [
        ("reflexivity", |r, a, b, guard| {
            let self_dist = r.gjml(a, a, guard);
            if self_dist.abs() > 1e-12 {
                return Err(format!("gjml(a, a) = {self_dist:e}"));
            }
            let v = r.gjml(a, b, guard);
            let l1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            if v < 1e-9 && l1 >= 1e-6 {
                return Err(format!("gjml(a, b) = {v:e} but |a - b|_1 = {l1:e}"));
            }
            Ok(())
        }),
        ("positivity", |r, a, b, guard| {
            let v = r.gjml(a, b, guard);
            if v < 0.0 {
                return Err(format!("gjml(a, b) = {v:e} < 0"));
            }
            Ok(())
        }),
        ("symmetry", |r, a, b, guard| {
            let (ab, ba) = (r.gjml(a, b, guard), r.gjml(b, a, guard));
            if ab.to_bits() != ba.to_bits() {
                return Err(format!("gjml(a, b) = {ab:e} != gjml(b, a) = {ba:e}"));
            }
            Ok(())
        }),
    ];

    for (name, check) in checks {
        let start = Instant::now();
        let seed = r.suite_seed(name);
        let mut failure = None;
        'outer: for (bi, &(lo, hi)) in HYPERCUBES.iter().enumerate() {
            for trial in 0..trials {
                let ts = replay_seed(seed ^ bi as u64, trial);
                let mut rng = ChaCha8Rng::seed_from_u64(ts);
                let (a, b) = random_pair(&mut rng, lo, hi);
                if let Err(e) = check(r, &a, &b, guard) {
                    failure = Some((format!("[{lo}, {hi}]^{}: {e}", a.len()), ts));
                    break 'outer;
                }
            }
        }
        r.results.push(SuiteResult {
            name,
            passed: failure.is_none(),
            trials: trials * HYPERCUBES.len(),
            detail: failure
                .as_ref()
                .map_or_else(|| "all hypercubes".to_string(), |(d, _)| d.clone()),
            failing_seed: failure.map(|(_, s)| s),
            elapsed: start.elapsed(),
        });
    }
}

fn jml_identity_suite(r: &mut Runner) {
    let trials = r.trials(1_000);
    r.run("jml-unit-cube-identity", trials, |seed| {
        for trial in 0..trials {
            let ts = replay_seed(seed, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let (a, b) = random_pair(&mut rng, 0.0, 1.0);
            let s: f64 = a.iter().zip(&b).map(|(x, y)| (x + y).abs()).sum();
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            let classic = 1.0 - (s - d) / (s + d);
            let got = losses::gjml_raw(&a, &b, 1e-12);
            if (got - classic).abs() > 1e-12 {
                return Outcome::Fail {
                    detail: format!("gjml {got} vs classic {classic}"),
                    seed: Some(ts),
                };
            }
        }
        Outcome::Pass("matches 1 - (S - D) / (S + D)".into())
    });
}

/// `x_j = -1 + j / 1000` for `j = 0..=2000`.
pub fn scan_grid() -> Vec<f64> {
    (0..=2000).map(|j| (j as f64 - 1000.0) / 1000.0).collect()
}

/// `y0 = -1 + k / 16` for `k = 0..=32`.
pub fn y0_grid() -> Vec<f64> {
    (0..=32).map(|k| (k as f64 - 16.0) / 16.0).collect()
}

fn pixel_sfl1(x: f64, y0: f64, gamma: f64) -> f64 {
    losses::sfl1_raw(&[x], &[y0], gamma)
}

fn unique_minimum_suite(r: &mut Runner) {
    r.run("unique-minimum", 66, |_| {
        let xs = scan_grid();
        for gamma in [1.0, 2.0] {
            for y0 in y0_grid() {
                let vals: Vec<f64> = xs.iter().map(|&x| pixel_sfl1(x, y0, gamma)).collect();
                let argmin = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
                if (xs[argmin] - y0).abs() > 1e-3 + 1e-12 {
                    return Outcome::Fail {
                        detail: format!("gamma {gamma}, y0 {y0}: minimum at {}", xs[argmin]),
                        seed: None,
                    };
                }
                for j in 1..vals.len() - 1 {
                    let local = vals[j] < vals[j - 1] && vals[j] < vals[j + 1];
                    if local && (xs[j] - y0).abs() > 1e-3 + 1e-12 {
                        return Outcome::Fail {
                            detail: format!("gamma {gamma}, y0 {y0}: extra local minimum at {}", xs[j]),
                            seed: None,
                        };
                    }
                }
            }
        }
        Outcome::Pass("33 targets x gamma in {1, 2}".into())
    });
}

fn opposite_sign_suite(r: &mut Runner) {
    r.run("opposite-sign-monotone", 66, |_| {
        let xs = scan_grid();
        for gamma in [1.0, 2.0] {
            for y0 in y0_grid().into_iter().filter(|&y| y > 0.0) {
                // on [-1, 0) the loss must strictly decrease toward 0; mirrored for y0 < 0
                let neg: Vec<f64> = xs.iter().copied().filter(|&x| x < 0.0).collect();
                for w in neg.windows(2) {
                    let (a, b) = (pixel_sfl1(w[0], y0, gamma), pixel_sfl1(w[1], y0, gamma));
                    if !(b < a) {
                        return Outcome::Fail {
                            detail: format!("gamma {gamma}, y0 {y0}: not decreasing at x = {}", w[1]),
                            seed: None,
                        };
                    }
                    let (a, b) = (pixel_sfl1(-w[0], -y0, gamma), pixel_sfl1(-w[1], -y0, gamma));
                    if !(b < a) {
                        return Outcome::Fail {
                            detail: format!("gamma {gamma}, y0 {}: not increasing at x = {}", -y0, -w[1]),
                            seed: None,
                        };
                    }
                }
            }
        }
        Outcome::Pass("strictly monotone on the opposite-sign half".into())
    });
}

fn focal_reference_pixel(x: f64, y0: f64, cfg: &LossConfig) -> f64 {
    let p = ScalarField::from_vec(vec![x], FieldKind::Generic).unwrap();
    let t = ScalarField::from_vec(vec![y0], FieldKind::Generic).unwrap();
    losses::focal_l1_reference(&p, &t, cfg).expect("inputs in [-1, 1]")
}

fn lower_bound_suite(r: &mut Runner) {
    let trials = r.trials(10_000);
    r.run("lower-bound", trials, |seed| {
        let cfg = LossConfig::default();
        for trial in 0..trials {
            let ts = replay_seed(seed, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let (a, b) = random_pair(&mut rng, -1.0, 1.0);
            let p = ScalarField::from_vec(a, FieldKind::Generic).unwrap();
            let t = ScalarField::from_vec(b, FieldKind::Generic).unwrap();
            let stable = losses::stable_focal_l1(&p, &t, &cfg).unwrap();
            let reference = losses::focal_l1_reference(&p, &t, &cfg).unwrap();
            if stable > reference + 1e-12 {
                return Outcome::Fail {
                    detail: format!("stable {stable} > reference {reference}"),
                    seed: Some(ts),
                };
            }
        }
        Outcome::Pass("stable <= reference".into())
    });
}

fn spurious_minimum_suite(r: &mut Runner) {
    r.run("spurious-minimum", 1, |_| {
        let cfg = LossConfig::default();
        let y0 = 0.5;
        let at_edge = focal_reference_pixel(-1.0, y0, &cfg);
        let inside = focal_reference_pixel(-1.0 + 1e-3, y0, &cfg);
        if at_edge != 1.5 || !(inside > at_edge) {
            return Outcome::Fail {
                detail: format!("reference: l(-1) = {at_edge}, l(-0.999) = {inside}"),
                seed: None,
            };
        }
        let xs: Vec<f64> = scan_grid().into_iter().filter(|&x| x <= y0).collect();
        for w in xs.windows(2) {
            if !(pixel_sfl1(w[1], y0, 1.0) < pixel_sfl1(w[0], y0, 1.0)) {
                return Outcome::Fail {
                    detail: format!("stable loss not decreasing at x = {}", w[1]),
                    seed: None,
                };
            }
        }
        Outcome::Pass("reference has a minimum at -1; stable loss does not".into())
    });
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-8 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn kink_free(pred: &[f64], target: &[f64]) -> bool {
    pred.iter()
        .zip(target)
        .all(|(&p, &t)| (p - t).abs() > KINK_MARGIN && (p + t).abs() > KINK_MARGIN && p.abs() > KINK_MARGIN)
}

type LossFn = fn(&[f64], &[f64], &LossConfig) -> f64;
type GradFn = fn(&[f64], &[f64], &LossConfig) -> Vec<f64>;

fn loss_gradient_suite(r: &mut Runner, name: &'static str, trials: usize, value: LossFn, grad: GradFn) {
    let fault = r.opts.fault;
    r.run(name, trials, |seed| {
        let cfg = LossConfig::default();
        let mut worst: f64 = 0.0;
        let mut trial = 0;
        let mut attempt = 0;
        while trial < trials {
            let ts = replay_seed(seed, attempt);
            attempt += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let dim = rng.random_range(1..=16);
            let mut pred: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.99..0.99)).collect();
            let target: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if !kink_free(&pred, &target) {
                continue;
            }
            trial += 1;
            let analytic = grad(&pred, &target, &cfg);
            let sign = if fault == Some(Fault::FlipGjmlSign) && name == "gradient-gjml" {
                -1.0
            } else {
                1.0
            };
            for i in 0..dim {
                let orig = pred[i];
                pred[i] = orig + GRAD_STEP;
                let up = sign * value(&pred, &target, &cfg);
                pred[i] = orig - GRAD_STEP;
                let down = sign * value(&pred, &target, &cfg);
                pred[i] = orig;
                let numeric = (up - down) / (2.0 * GRAD_STEP);
                let err = relative_error(analytic[i], numeric);
                worst = worst.max(err);
                if !(err < 1e-4) {
                    return Outcome::Fail {
                        detail: format!("component {i}: analytic {} vs numeric {numeric}", analytic[i]),
                        seed: Some(ts),
                    };
                }
            }
        }
        Outcome::Pass(format!("max relative error {worst:.2e}"))
    });
}

/// Random 8x8 problem for the end-to-end parameter gradient.
pub fn random_model_problem(rng: &mut ChaCha8Rng) -> (FeatureBank, ScalarField, PixelModel) {
    let image: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..=1.0)).collect();
    let image = ScalarField::new(8, 8, image, FieldKind::Image).unwrap();
    let bank = trainer::featurize(&image).unwrap();
    let target: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let target = ScalarField::new(8, 8, target, FieldKind::Sauna).unwrap();
    let weights: [f64; NUM_FEATURES] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
    (bank, target, PixelModel::new(weights))
}

fn end_to_end_suite(r: &mut Runner) {
    let trials = r.trials(1_000);
    r.run("gradient-end-to-end", trials, |seed| {
        let objective = Objective::Combined(LossConfig::default());
        let mut worst: f64 = 0.0;
        let mut trial = 0;
        let mut attempt = 0;
        while trial < trials {
            let ts = replay_seed(seed, attempt);
            attempt += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let (bank, target, model) = random_model_problem(&mut rng);
            let pred = model.predict(&bank);
            if !kink_free(pred.as_slice(), target.as_slice()) {
                continue;
            }
            trial += 1;
            let (_, analytic) = trainer::image_loss_and_grad(&model, &bank, &target, &objective);
            for k in 0..NUM_FEATURES {
                let mut up = model;
                up.weights[k] += GRAD_STEP;
                let mut down = model;
                down.weights[k] -= GRAD_STEP;
                let lu = trainer::image_loss_and_grad(&up, &bank, &target, &objective).0;
                let ld = trainer::image_loss_and_grad(&down, &bank, &target, &objective).0;
                let numeric = (lu - ld) / (2.0 * GRAD_STEP);
                let err = relative_error(analytic[k], numeric);
                worst = worst.max(err);
                if !(err < 1e-3) {
                    return Outcome::Fail {
                        detail: format!("weight {k}: analytic {} vs numeric {numeric}", analytic[k]),
                        seed: Some(ts),
                    };
                }
            }
        }
        Outcome::Pass(format!("max relative error {worst:.2e}"))
    });
}

fn gradient_suites(r: &mut Runner) {
    let trials = r.trials(1_000);
    loss_gradient_suite(
        r,
        "gradient-gjml",
        trials,
        |p, t, c| losses::gjml_raw(p, t, c.denom_guard),
        |p, t, c| losses::gjml_grad_raw(p, t, c.denom_guard),
    );
    loss_gradient_suite(
        r,
        "gradient-sfl1",
        trials,
        |p, t, c| losses::sfl1_raw(p, t, c.gamma),
        |p, t, c| losses::sfl1_grad_raw(p, t, c.gamma),
    );
    loss_gradient_suite(
        r,
        "gradient-combined",
        trials,
        losses::combined_raw,
        losses::combined_grad_raw,
    );
    end_to_end_suite(r);
}

/// Fixed-width pass/fail table.
pub fn format_table(results: &[SuiteResult]) -> String {
    let mut out = format!(
        "{:<26} {:<6} {:>7} {:>9}  detail\n",
        "suite", "status", "trials", "time"
    );
    for r in results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let mut detail = r.detail.clone();
        if let Some(s) = r.failing_seed {
            detail.push_str(&format!(" (seed {s})"));
        }
        out.push_str(&format!(
            "{:<26} {:<6} {:>7} {:>8.2}s  {}\n",
            r.name,
            status,
            r.trials,
            r.elapsed.as_secs_f64(),
            detail
        ));
    }
    out
}

use std::path::Path;

use serde::Serialize;

use sauna_core::io::{self, write_atomic};
use sauna_core::losses::{self, LossConfig};
use sauna_core::metrics::{self, ImageMetrics};
use sauna_core::render::render_heatmap;
use sauna_core::synth::{self, SynthConfig};
use sauna_core::trainer::{self, ExperimentConfig, Variant};
use sauna_core::verify::{self, Fault, VerifyOptions};
use sauna_core::SaunaParams;

use crate::args::{EvalArgs, FaultArg, LossArgs, RenderArgs, SynthArgs, TrainDemoArgs, TransformArgs, VerifyArgs};
use crate::error::CliError;

pub struct Ctx {
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

pub fn transform(ctx: &Ctx, a: &TransformArgs) -> Result<(), CliError> {
    let params = match (a.no_thickness, a.no_boundary) {
        (true, true) => return Err(CliError::invalid("--no-thickness and --no-boundary cannot both be set")),
        (true, false) => SaunaParams::without_thickness(),
        (false, true) => SaunaParams::without_boundary(),
        (false, false) => SaunaParams::default(),
    };
    let mask = io::load_mask(&a.mask, a.threshold)?;
    let field = sauna_core::sauna_transform(&mask, &params)?;
    io::save_field(&field, &a.out)?;
    if let Some(png) = &a.render {
        render_heatmap(&field, png)?;
    }
    ctx.note(format!(
        "{}: {}x{} mask, {} foreground pixels",
        a.out.display(),
        mask.height(),
        mask.width(),
        mask.fg_count()
    ));
    Ok(())
}

#[derive(Serialize)]
struct LossRecord {
    gjml: f64,
    sfl1: f64,
    focal_l1: f64,
    total: f64,
}

pub fn loss(a: &LossArgs) -> Result<(), CliError> {
    let cfg = LossConfig {
        gamma: a.gamma,
        ..LossConfig::with_weights(a.weight_gjml, a.weight_sfl1)
    };
    cfg.validate()?;
    let pred = io::load_field(&a.pred)?;
    let target = io::load_field(&a.target)?;
    let (total, parts) = losses::combined_loss(&pred, &target, &cfg)?;
    let focal = losses::focal_l1_reference(&pred, &target, &cfg)?;
    let record = LossRecord {
        gjml: round6(parts.gjml),
        sfl1: round6(parts.sfl1),
        focal_l1: round6(focal),
        total: round6(total),
    };
    let mut json = serde_json::to_string(&record).expect("record serializes");
    json.push('\n');
    emit(a.out.as_deref(), &json)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    if a.pred.len() != a.gt.len() {
        return Err(CliError::invalid(format!(
            "{} --pred files but {} --gt files",
            a.pred.len(),
            a.gt.len()
        )));
    }
    let mut per_image: Vec<ImageMetrics> = Vec::with_capacity(a.pred.len());
    for (p, g) in a.pred.iter().zip(&a.gt) {
        let pred = io::load_field(p)?;
        let gt = io::load_mask(g, a.mask_threshold)?;
        let id = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string());
        per_image.push(metrics::evaluate_image(id, &pred, &gt, a.threshold)?);
    }
    let report = metrics::aggregate(per_image)?;
    emit(a.out.as_deref(), &report.to_csv())
}

pub fn render(a: &RenderArgs) -> Result<(), CliError> {
    let field = io::load_field(&a.field)?;
    Ok(render_heatmap(&field, &a.out)?)
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        seed: ctx.seed.unwrap_or(0),
        size: a.size,
        n_branches: (a.min_branches, a.max_branches),
        thickness_range: (a.min_thickness, a.max_thickness),
        noise_sigma: a.noise_sigma,
        blur_radius: a.blur_radius,
    };
    cfg.validate()?;
    synth::write_corpus(&a.out, &cfg, a.count)?;
    ctx.note(format!("wrote {} samples to {}", a.count, a.out.display()));
    Ok(())
}

pub fn train_demo(ctx: &Ctx, a: &TrainDemoArgs) -> Result<(), CliError> {
    let variants = a
        .variants
        .iter()
        .map(|s| Variant::parse(s.trim()).ok_or_else(|| CliError::invalid(format!("unknown variant {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if variants.is_empty() {
        return Err(CliError::invalid("no variants selected"));
    }
    let mut cfg = ExperimentConfig::with_seed(ctx.seed.unwrap_or(7));
    cfg.synth.size = a.size;
    cfg.n_train = a.n_train;
    cfg.n_test = a.n_test;
    cfg.train.epochs = a.epochs;
    cfg.train.learning_rate = a.lr;
    cfg.synth.validate()?;

    ctx.note(format!(
        "training {} variants for {} epochs on {} images",
        variants.len(),
        a.epochs,
        a.n_train
    ));
    let report = trainer::run_experiment(&cfg, &variants)?;

    std::fs::create_dir_all(&a.out).map_err(|source| io::IoError::Io {
        path: a.out.display().to_string(),
        source,
    })?;
    write_atomic(&a.out.join("table.csv"), report.table_csv().as_bytes())?;
    write_atomic(&a.out.join("curves.csv"), report.curves_csv().as_bytes())?;
    if !ctx.quiet {
        eprint!("{}", report.table_csv());
    }
    Ok(())
}

pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<(), CliError> {
    let opts = VerifyOptions {
        seed: ctx.seed.unwrap_or(0),
        trials: a.trials,
        fault: a.inject_fault.map(|f| match f {
            FaultArg::GjmlSign => Fault::FlipGjmlSign,
        }),
    };
    let results = verify::run_all(opts);
    print!("{}", verify::format_table(&results));
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| match r.failing_seed {
            Some(s) => format!("{} (seed {s})", r.name),
            None => r.name.to_string(),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::verify(format!("failed: {}", failed.join(", "))))
    }
}

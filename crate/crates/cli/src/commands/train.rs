use std::io::Write;
use std::path::Path;

use vigil::model::{build_model, save_weights, ModelSpec};
use vigil::train::{fit_with, split_dataset, Dataset, Loss, TrainConfig, DEFAULT_TRAIN_FRACTION};

use super::{load_batch, Context};
use crate::args::{Arch, TrainArgs};
use crate::error::{AtPath, CliError, CliResult};
use crate::manifest::Manifest;

pub const DEFAULT_EPOCHS: usize = 30;
pub const DEFAULT_LR: f64 = 0.5;
pub const DEFAULT_SCHEDULE: &str = "exponential 0.95";
pub const DEFAULT_ALPHA: f64 = 0.25;

/// The model described by the config's model keys, or an `arch` preset
/// sized to the manifest's first image.
fn model_spec(ctx: &Context, args: &TrainArgs, manifest: &Manifest) -> CliResult<ModelSpec> {
    let doc = &ctx.config;
    if doc.get("layers").is_some() {
        if args.alpha.is_some() {
            return Err(CliError::Usage("--alpha cannot override a model defined in --config".into()));
        }
        return Ok(ModelSpec::from_config(doc)?);
    }
    let labels = match doc.get("classes") {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => manifest.class_labels(),
    };
    let first = manifest.resolve(&manifest.entries[0]);
    let img = vigil::vision::read_pnm(&first).at(&first)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => doc.parsed_or("width_multiplier", DEFAULT_ALPHA)?,
    };
    let (h, w) = (img.height(), img.width());
    let spec = match args.arch {
        Arch::Desk => ModelSpec::desk(labels, h, w, alpha),
        Arch::Mobilenet => ModelSpec::mobilenet_v1(labels, h, w, alpha),
    };
    spec.plan()?;
    Ok(spec)
}

/// Config keys, then flags, then the command's defaults.
fn train_config(ctx: &Context, args: &TrainArgs, seed: u64, spec: &ModelSpec) -> CliResult<TrainConfig> {
    let mut doc = ctx.config.clone();
    let flags: [(&str, Option<String>); 7] = [
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("base_lr", args.lr.map(|v| v.to_string())),
        ("batch_size", args.batch_size.map(|v| v.to_string())),
        ("schedule", args.schedule.clone()),
        ("l1_lambda", args.l1.map(|v| v.to_string())),
        ("l2_lambda", args.l2.map(|v| v.to_string())),
        ("loss", args.loss.clone()),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            doc.set(key, v);
        }
    }
    let defaults = [
        ("epochs", DEFAULT_EPOCHS.to_string()),
        ("base_lr", DEFAULT_LR.to_string()),
        ("schedule", DEFAULT_SCHEDULE.to_string()),
        ("loss", Loss::for_head(spec.head).to_string()),
    ];
    for (key, value) in defaults {
        if doc.get(key).is_none() {
            doc.set(key, value);
        }
    }
    doc.set("seed", seed);
    Ok(TrainConfig::from_config(&doc)?)
}

pub fn train(ctx: &Context, args: &TrainArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let seed = ctx.require_seed("train")?;
    let manifest = Manifest::read(&args.manifest)?;
    if manifest.is_empty() {
        return Err(CliError::Validation(format!("{}: manifest has no entries", args.manifest.display())));
    }
    let spec = model_spec(ctx, args, &manifest)?;
    let cfg = train_config(ctx, args, seed, &spec)?;
    let labels = manifest.label_indices(&spec.class_labels)?;

    let all: Vec<usize> = (0..manifest.len()).collect();
    let data = Dataset::new(load_batch(&manifest, &all, spec.input)?, labels)?;
    let plan = split_dataset(data.len(), DEFAULT_TRAIN_FRACTION, seed)?;
    let train_set = data.subset(&plan.train);
    let val_set = (!plan.val.is_empty()).then(|| data.subset(&plan.val));

    let weights = build_model::<f32>(&spec, seed)?;
    let quiet = args.quiet;
    let (weights, log) = fit_with(&spec, weights, &train_set, val_set.as_ref(), &cfg, |r| {
        if !quiet {
            let val = r.val_acc.map_or(String::from("-"), |v| format!("{v:.4}"));
            eprintln!("epoch {:>3}  lr {:.3e}  loss {:.4}  acc {:.4}  val_acc {val}", r.epoch, r.lr, r.train_loss, r.train_acc);
        }
    })?;

    save_weights(&spec, &weights, &args.out).at(&args.out)?;
    let log_path = args.log.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    std::fs::write(&log_path, log.to_csv()).at(&log_path)?;

    let summary = match log.last().and_then(|r| r.val_acc) {
        Some(acc) => format!("validation accuracy {acc:.4}"),
        None => "no validation split".to_string(),
    };
    writeln!(
        stdout,
        "trained {} epochs on {} images ({summary}); weights {}, log {}",
        log.records.len(),
        train_set.len(),
        args.out.display(),
        log_path.display()
    )
    .at(Path::new("<stdout>"))
}

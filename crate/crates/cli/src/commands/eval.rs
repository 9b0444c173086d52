use std::io::Write;

use vigil::metrics::{confusion, metrics_csv, per_class_metrics};
use vigil::model::{load_weights, Network};
use vigil::train::{evaluate, split_dataset, Dataset, Loss, DEFAULT_TRAIN_FRACTION};

use super::{emit, load_batch, Context};
use crate::args::EvalArgs;
use crate::error::{AtPath, CliError, CliResult};
use crate::manifest::Manifest;

/// Scores the validation split that `train` held out (same manifest, same
/// seed), or every entry with `--all`. The seed defaults to the one stored
/// in the weight file.
pub fn eval(ctx: &Context, args: &EvalArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (spec, weights) = load_weights(&args.weights).at(&args.weights)?;
    let manifest = Manifest::read(&args.manifest)?;
    let labels = manifest.label_indices(&spec.class_labels)?;
    let indices: Vec<usize> = if args.all {
        (0..manifest.len()).collect()
    } else {
        let seed = ctx.seed()?.unwrap_or(weights.seed);
        split_dataset(manifest.len(), DEFAULT_TRAIN_FRACTION, seed)?.val
    };
    if indices.is_empty() {
        return Err(CliError::Validation("nothing to evaluate: the selected split is empty".into()));
    }
    let truth: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    let data = Dataset::new(load_batch(&manifest, &indices, spec.input)?, truth.clone())?;
    let net = Network::new(&spec)?;
    let result = evaluate(&net, &weights, &data, Loss::for_head(spec.head))?;
    let cm = confusion(&truth, &result.predicted, spec.num_classes())?;
    let csv = metrics_csv(&per_class_metrics(&cm), &spec.class_labels)?;
    emit(args.out.as_deref(), stdout, &csv)?;
    eprintln!("accuracy {:.4} on {} images", cm.accuracy(), indices.len());
    Ok(())
}

use std::io::Write;
use std::path::Path;

use vigil::metrics::bench_inference;
use vigil::model::{build_model, load_weights, ModelSpec};
use vigil::synth::default_labels;
use vigil::tensor::Shape;

use super::Context;
use crate::args::BenchArgs;
use crate::error::{AtPath, CliError, CliResult};

/// Per-frame latency budget in milliseconds.
pub const REFERENCE_MS: f64 = 80.0;

pub const BENCH_CSV_HEADER: &str = "count,mean_ms,p50_ms,p95_ms,min_ms,max_ms,reference_ms";

/// Times batch-1 inference. Runs on one thread unless `--threads` says
/// otherwise.
pub fn bench(ctx: &Context, args: &BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.iterations == 0 {
        return Err(CliError::Usage("--iterations must be at least 1".into()));
    }
    let (spec, weights) = match &args.weights {
        Some(p) => load_weights(p).at(p)?,
        None => {
            let seed = ctx.require_seed("bench")?;
            let spec = ModelSpec::desk(default_labels(5), args.size, args.size, args.alpha);
            let w = build_model::<f32>(&spec, seed)?;
            (spec, w)
        }
    };
    let threads = ctx.global.threads.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build a {threads}-thread pool: {e}")))?;
    let input = Shape::new(1, spec.input.c, spec.input.h, spec.input.w);
    let r = pool.install(|| bench_inference(&spec, &weights, input, args.iterations, args.warmup))?;

    let console = Path::new("<stdout>");
    writeln!(
        stdout,
        "model input {}, width multiplier {}, {threads} thread(s), {} iterations after {} warmup",
        spec.input, spec.width_multiplier, r.count, args.warmup
    )
    .at(console)?;
    writeln!(
        stdout,
        "mean {:.3} ms  p50 {:.3} ms  p95 {:.3} ms  min {:.3} ms  max {:.3} ms",
        r.mean_ms, r.p50_ms, r.p95_ms, r.min_ms, r.max_ms
    )
    .at(console)?;
    let verdict = if r.mean_ms < REFERENCE_MS { "within" } else { "over" };
    writeln!(stdout, "measured mean {:.3} ms vs reference {REFERENCE_MS} ms per frame: {verdict} budget", r.mean_ms).at(console)?;

    if let Some(path) = &args.csv {
        let csv = format!(
            "{BENCH_CSV_HEADER}\n{},{},{},{},{},{},{}\n",
            r.count, r.mean_ms, r.p50_ms, r.p95_ms, r.min_ms, r.max_ms, REFERENCE_MS
        );
        std::fs::write(path, csv).at(path)?;
    }
    Ok(())
}

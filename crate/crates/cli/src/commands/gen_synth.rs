use std::io::Write;

use vigil::fatigue::write_landmarks;
use vigil::synth::{default_labels, synth_corpus, synth_landmark_trace, TraceParams};
use vigil::vision::write_pnm;

use super::Context;
use crate::args::GenSynthArgs;
use crate::error::{AtPath, CliError, CliResult};
use crate::manifest::{Manifest, ManifestEntry};

pub const IMAGE_DIR: &str = "images";
pub const MANIFEST_NAME: &str = "manifest.csv";
pub const LANDMARKS_NAME: &str = "landmarks.txt";

pub fn gen_synth(ctx: &Context, args: &GenSynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let seed = ctx.require_seed("gen-synth")?;
    if args.classes == 0 || args.per_class == 0 || args.size == 0 {
        return Err(CliError::Usage("--classes, --per-class and --size must be positive".into()));
    }
    if !(0.0..=1.0).contains(&args.closed_prob) {
        return Err(CliError::Usage(format!("--closed-prob {} outside [0, 1]", args.closed_prob)));
    }
    let image_dir = args.out.join(IMAGE_DIR);
    std::fs::create_dir_all(&image_dir).at(&image_dir)?;
    let labels = default_labels(args.classes);
    let corpus = synth_corpus(args.classes, args.per_class, args.size, seed)?;
    let mut entries = Vec::with_capacity(corpus.len());
    for (i, (img, class)) in corpus.iter().enumerate() {
        let rel = format!("{IMAGE_DIR}/{i:05}.ppm");
        let path = args.out.join(&rel);
        write_pnm(img, &path).at(&path)?;
        entries.push(ManifestEntry {
            path: rel,
            label: labels[*class].clone(),
        });
    }
    let manifest = Manifest::new(&args.out, entries)?;
    let manifest_path = args.out.join(MANIFEST_NAME);
    manifest.write(&manifest_path)?;
    writeln!(stdout, "wrote {} images and {}", manifest.len(), manifest_path.display()).at(&args.out)?;

    if let Some(frames) = args.landmark_frames {
        let params = TraceParams {
            frames,
            closed_prob: args.closed_prob,
            ..Default::default()
        };
        let trace = synth_landmark_trace(&params, seed)?;
        let path = args.out.join(LANDMARKS_NAME);
        std::fs::write(&path, write_landmarks(&trace)).at(&path)?;
        writeln!(stdout, "wrote {frames} landmark frames to {}", path.display()).at(&args.out)?;
    }
    Ok(())
}

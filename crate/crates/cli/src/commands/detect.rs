use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use vigil::fatigue::{classify_frame, FatigueConfig, FatigueState, LandmarkReader};
use vigil::model::{load_weights, predict, ModelSpec, ModelWeights};

use super::{load_image, to_tensor, Context};
use crate::args::DetectArgs;
use crate::error::{AtPath, CliError, CliResult};
use crate::record::DetectionRecord;

fn frame_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("ppm" | "pgm" | "pnm")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn alignment(images: usize, landmarks: &str) -> CliError {
    CliError::Validation(format!("frame count mismatch: {images} images vs {landmarks} landmark frames"))
}

/// Streams one JSON line per frame. Frames come from the landmark file when
/// given (its indices and timestamps are used), otherwise from the image
/// directory at `--frame-ms` spacing; with both, the counts must agree.
pub fn detect(ctx: &Context, args: &DetectArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.frames.is_none() && args.landmarks.is_none() {
        return Err(CliError::Usage("detect needs --frames and/or --landmarks".into()));
    }
    if args.frames.is_some() != args.weights.is_some() {
        return Err(CliError::Usage("--frames and --weights must be given together".into()));
    }
    if args.frame_ms <= 0 {
        return Err(CliError::Usage("--frame-ms must be positive".into()));
    }
    let fatigue = FatigueConfig::from_config(&ctx.config)?;
    let model: Option<(ModelSpec, ModelWeights<f32>)> = match &args.weights {
        Some(p) => Some(load_weights(p).at(p)?),
        None => None,
    };
    let images = match &args.frames {
        Some(dir) => frame_files(dir)?,
        None => Vec::new(),
    };
    let mut landmarks = match &args.landmarks {
        Some(p) => Some((p.clone(), LandmarkReader::new(BufReader::new(File::open(p).at(p)?)))),
        None => None,
    };

    let mut file_out;
    let mut std_out;
    let sink: &mut dyn Write = match &args.out {
        Some(p) => {
            file_out = BufWriter::new(File::create(p).at(p)?);
            &mut file_out
        }
        None => {
            std_out = BufWriter::new(stdout);
            &mut std_out
        }
    };
    let out_path = args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));

    let mut state = FatigueState::new();
    let mut count = 0usize;
    loop {
        let landmark = match landmarks.as_mut() {
            Some((path, reader)) => match reader.next() {
                Some(frame) => Some(frame.at(path)?),
                None => None,
            },
            None => None,
        };
        let more_images = count < images.len();
        match (&landmarks, &landmark) {
            (Some(_), None) if more_images => return Err(alignment(images.len(), &count.to_string())),
            (Some(_), Some(_)) if !images.is_empty() && !more_images => {
                return Err(alignment(images.len(), &format!("more than {}", images.len())))
            }
            (Some(_), None) | (None, _) if !more_images => break,
            _ => {}
        }

        let mut record = match &landmark {
            Some(f) => DetectionRecord::new(f.frame_index, f.timestamp_ms),
            None => DetectionRecord::new(count as u64, count as i64 * args.frame_ms),
        };
        if let Some(f) = &landmark {
            let s = classify_frame(f, &fatigue);
            let reading = state.update(f.timestamp_ms, s.eye_closed, s.mouth_open, &fatigue).at(args.landmarks.as_deref().unwrap())?;
            record.eye_closed = Some(s.eye_closed);
            record.mouth_open = Some(s.mouth_open);
            record.perclos_pct = Some(reading.perclos_pct);
            record.drowsy = Some(reading.drowsy);
            record.yawns = Some(reading.yawns);
        }
        if let Some((spec, weights)) = &model {
            let path = &images[count];
            let img = load_image(path, spec.input)?;
            let p = predict(spec, weights, &to_tensor(&[img], spec.input.c)?).at(path)?;
            record.label = Some(p.label);
            record.probs = Some(p.probabilities);
        }
        writeln!(sink, "{}", record.to_json_line()).at(&out_path)?;
        count += 1;
    }
    sink.flush().at(&out_path)?;
    if count == 0 {
        return Err(CliError::Usage("no frames in the given inputs".into()));
    }
    Ok(())
}

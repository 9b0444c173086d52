use std::io::Write;
use std::path::Path;

use vigil::config::ConfigText;
use vigil::vision::{augment_sample, read_pnm, write_pnm, AugmentPolicy, AUGMENT_KEYS};

use super::Context;
use crate::args::AugmentArgs;
use crate::error::{AtPath, CliError, CliResult};
use crate::manifest::{Manifest, ManifestEntry};

/// Seed of variant `j` of image `i`: a SplitMix64 finalizer over the pair,
/// so neighbouring variants draw unrelated chains.
pub fn variant_seed(seed: u64, image: usize, variant: usize) -> u64 {
    let mut z = seed ^ ((image as u64) << 20 | variant as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn policy(ctx: &Context, args: &AugmentArgs) -> CliResult<AugmentPolicy> {
    match &args.policy {
        Some(path) => {
            let text = std::fs::read_to_string(path).at(path)?;
            AugmentPolicy::from_config(&ConfigText::parse(&text).at(path)?).at(path)
        }
        None => {
            let mut doc = ConfigText::new();
            for key in AUGMENT_KEYS {
                if let Some(v) = ctx.config.get(key) {
                    doc.set(key, v);
                }
            }
            Ok(AugmentPolicy::from_config(&doc)?)
        }
    }
}

fn variant_path(rel: &str, j: usize) -> String {
    let p = Path::new(rel);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let ext = p.extension().and_then(|s| s.to_str()).unwrap_or("ppm");
    let name = format!("{stem}_aug{j}.{ext}");
    match p.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => format!("{}/{name}", dir.to_string_lossy()),
        None => name,
    }
}

/// Copies every source image into `--out` and adds `--multiplier`
/// augmented variants of each, with a manifest listing both.
pub fn augment(ctx: &Context, args: &AugmentArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let seed = ctx.require_seed("augment")?;
    let policy = policy(ctx, args)?;
    let manifest = Manifest::read(&args.manifest)?;
    std::fs::create_dir_all(&args.out).at(&args.out)?;
    let same_dir = match (manifest.root.canonicalize(), args.out.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same_dir {
        return Err(CliError::Usage("--out must differ from the manifest's directory".into()));
    }

    let mut entries = Vec::with_capacity(manifest.len() * (args.multiplier + 1));
    for (i, entry) in manifest.entries.iter().enumerate() {
        let src = manifest.resolve(entry);
        let img = read_pnm(&src).at(&src)?;
        let dst = args.out.join(&entry.path);
        if let Some(dir) = dst.parent() {
            std::fs::create_dir_all(dir).at(dir)?;
        }
        std::fs::copy(&src, &dst).at(&dst)?;
        entries.push(entry.clone());
        for j in 0..args.multiplier {
            let rel = variant_path(&entry.path, j);
            let out = augment_sample(&img, &policy, variant_seed(seed, i, j));
            let path = args.out.join(&rel);
            write_pnm(&out, &path).at(&path)?;
            entries.push(ManifestEntry {
                path: rel,
                label: entry.label.clone(),
            });
        }
    }
    let expanded = Manifest::new(&args.out, entries)?;
    let path = args.out.join(super::gen_synth::MANIFEST_NAME);
    expanded.write(&path)?;
    writeln!(stdout, "wrote {} entries to {}", expanded.len(), path.display()).at(&path)
}

mod augment;
mod bench;
mod detect;
mod eval;
mod gen_synth;
mod train;

pub use augment::augment;
pub use bench::{bench, REFERENCE_MS};
pub use detect::detect;
pub use eval::eval;
pub use gen_synth::gen_synth;
pub use train::train;

use std::fs::File;
use std::io::Write;
use std::path::Path;

use vigil::config::ConfigText;
use vigil::model::FeatureShape;
use vigil::tensor::Tensor;
use vigil::vision::{images_to_tensor, read_pnm, Image, DEFAULT_MEAN, DEFAULT_STD};

use crate::args::Global;
use crate::error::{AtPath, CliError, CliResult};
use crate::manifest::Manifest;

/// Global flags plus the parsed `--config` file.
pub struct Context {
    pub global: Global,
    pub config: ConfigText,
}

impl Context {
    pub fn load(global: Global) -> CliResult<Self> {
        let config = match &global.config {
            None => ConfigText::new(),
            Some(path) => {
                let text = std::fs::read_to_string(path).at(path)?;
                ConfigText::parse(&text).at(path)?
            }
        };
        Ok(Self { global, config })
    }

    /// `--seed`, else the config's `seed` key.
    pub fn seed(&self) -> CliResult<Option<u64>> {
        match self.global.seed {
            Some(s) => Ok(Some(s)),
            None => Ok(self.config.parsed("seed")?),
        }
    }

    pub fn require_seed(&self, command: &str) -> CliResult<u64> {
        self.seed()?
            .ok_or_else(|| CliError::Usage(format!("`{command}` needs --seed (or `seed` in --config)")))
    }
}

/// Reads an image and adapts it to `input`: gray images are widened to RGB
/// when the model expects three channels. Extents must match exactly.
pub fn load_image(path: &Path, input: FeatureShape) -> CliResult<Image> {
    let img = read_pnm(path).at(path)?;
    let img = if img.channels() == 1 && input.c == 3 { img.to_rgb() } else { img };
    if (img.channels(), img.height(), img.width()) != (input.c, input.h, input.w) {
        return Err(CliError::Validation(format!(
            "{}: image is {}x{}x{}, the model expects {}",
            path.display(),
            img.channels(),
            img.height(),
            img.width(),
            input
        )));
    }
    Ok(img)
}

pub fn to_tensor(images: &[Image], channels: usize) -> CliResult<Tensor<f32>> {
    Ok(images_to_tensor(images, &DEFAULT_MEAN[..channels], &DEFAULT_STD[..channels])?)
}

/// Loads the manifest entries at `indices` as one normalized batch.
pub fn load_batch(manifest: &Manifest, indices: &[usize], input: FeatureShape) -> CliResult<Tensor<f32>> {
    let images = indices
        .iter()
        .map(|&i| load_image(&manifest.resolve(&manifest.entries[i]), input))
        .collect::<CliResult<Vec<_>>>()?;
    to_tensor(&images, input.c)
}

/// Writes to `path`, or to `stdout` when no path is given.
pub fn emit(path: Option<&Path>, stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    match path {
        Some(p) => File::create(p).and_then(|mut f| f.write_all(text.as_bytes())).at(p),
        None => stdout.write_all(text.as_bytes()).at(Path::new("<stdout>")),
    }
}

//! The `vigil` command line: synthetic data generation, training,
//! evaluation, offline detection, augmentation and benchmarking.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod record;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
pub use error::{CliError, CliResult, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

pub fn run(cli: Cli, stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    if cli.global.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let ctx = Context::load(cli.global)?;
    let dispatch = |stdout: &mut dyn Write| match &cli.command {
        Command::GenSynth(a) => commands::gen_synth(&ctx, a, stdout),
        Command::Train(a) => commands::train(&ctx, a, stdout),
        Command::Eval(a) => commands::eval(&ctx, a, stdout),
        Command::Detect(a) => commands::detect(&ctx, a, stdout),
        Command::Augment(a) => commands::augment(&ctx, a, stdout),
        Command::Bench(a) => commands::bench(&ctx, a, stdout),
    };
    match (ctx.global.threads, &cli.command) {
        (Some(n), cmd) if !matches!(cmd, Command::Bench(_)) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build a {n}-thread pool: {e}")))?;
            pool.install(|| dispatch(stdout))
        }
        _ => dispatch(stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Errors go to stderr; argument errors exit with the usage code.
pub fn main_with_args<I, T>(args: I, stdout: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("vigil: {e}");
            e.exit_code()
        }
    }
}

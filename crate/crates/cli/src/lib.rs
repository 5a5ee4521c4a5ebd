//! The `chapterfn` command line: argument parsing, configuration and
//! dispatch to the library crates.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use chapterfn_core::corpus::ParseMode;
use chapterfn_core::{Error, ErrorKind, Result};
use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;
use config::CliConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Invariant => EXIT_INVARIANT,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn context(cli: &Cli) -> Result<Ctx> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        // A second in-process call finds the pool already built.
        if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            log::debug!("global thread pool already initialised");
        }
    }
    let mode = if g.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    eprintln!("seed: {}", cfg.seed());
    Ok(Ctx { cfg, mode, out: g.out.clone() })
}

fn dispatch(cli: Cli) -> Result<()> {
    let ctx = context(&cli)?;
    match &cli.command {
        Command::Synth { articles, format } => commands::synth(&ctx, *articles, format),
        Command::Ingest(c) => commands::ingest(&ctx, c),
        Command::Stats(c) => commands::stats(&ctx, c),
        Command::Kappa { a, b } => commands::kappa(&ctx, a, b),
        Command::Featurize { corpus, field, chars } => commands::featurize(&ctx, corpus, field, chars),
        Command::Train { corpus, model } => commands::train(&ctx, corpus, model),
        Command::Evaluate { model, corpus } => commands::evaluate(&ctx, model, corpus),
        Command::Cv { corpus, model, protocol } => commands::cv(&ctx, corpus, model, protocol.as_deref()),
        Command::Experiment { id, corpus, window, direction, row, protocol } => {
            commands::experiment(&ctx, id, corpus, *window, direction.as_deref(), row, protocol.as_deref())
        }
        Command::Predict { model, corpus, force } => commands::predict(&ctx, model, corpus, *force),
        Command::Opentest { train, test, model } => commands::opentest(&ctx, train, test, model),
        Command::Timeseries(c) => commands::timeseries(&ctx, c),
        Command::ChiAnalysis { corpus, top_k, drop_top, field, context_top } => {
            commands::chi_analysis(&ctx, corpus, *top_k, *drop_top, field, *context_top)
        }
        Command::AblateOrder { corpus, neural } => commands::ablate_order(&ctx, corpus, neural),
        Command::Gradcheck { trials, eps, tol } => commands::gradcheck(&ctx, *trials, *eps, *tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Unlabeled(vec!["a".into()])), EXIT_DATA);
        assert_eq!(exit_code(&Error::Invariant("x".into())), EXIT_INVARIANT);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["chapterfn", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["chapterfn", "stats", "--bogus"]), EXIT_CONFIG);
        assert_eq!(run(["chapterfn", "--help"]), EXIT_OK);
    }
}

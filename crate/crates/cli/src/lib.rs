//! Command-line experiments for gradient-based competitive learning.

pub mod args;
pub mod commands;
pub mod settings;
pub mod svg;

use std::path::PathBuf;

use args::{Cli, Command};
use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dualcl::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 usage, 3 data or file error, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(dualcl::Error::InvalidArgument(_)) => 2,
            CliError::Core(dualcl::Error::Diverged { .. }) => 4,
            CliError::Core(_) | CliError::Io { .. } => 3,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let jobs = match cli.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be positive".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => commands::generate(&settings, a),
        Command::Train(a) => commands::train_cmd(&settings, a),
        Command::Compare(a) => commands::compare(&settings, a),
        Command::Highdim(a) => commands::highdim(&settings, a).map(|_| ()),
        Command::Analyze(a) => commands::analyze(a),
        Command::GridSearch(a) => commands::grid(&settings, a),
    })
}

//! Command-line harness around the `collexp` library: config resolution,
//! subcommands, deterministic CSV payloads and hashed run manifests.

pub mod commands;
pub mod config;
pub mod numfmt;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use collexp::asymptotics::DomainError;
use collexp::equilibrium::SolveError;
use collexp::model::ValidationError;
use collexp::simulator::SimError;
use thiserror::Error;

use crate::config::Resolved;
use crate::output::{input_hash, write_manifest, write_outputs, Manifest, OutputRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Solve,
    Sweep,
    Converge,
    Simulate,
    Reversible,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Converge => "converge",
            Command::Simulate => "simulate",
            Command::Reversible => "reversible",
        }
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_ASSUMPTION: u8 = 2;
pub const EXIT_COMPUTE: u8 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Assumptions(#[from] ValidationError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("chart: {0}")]
    Render(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Assumptions(_) => EXIT_ASSUMPTION,
            _ => EXIT_COMPUTE,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub exit_code: u8,
    pub summary: String,
    pub outputs: Vec<OutputRecord>,
}

/// Runs `command` on a worker pool of the requested size, writes its outputs
/// and the manifest into the output directory.
pub fn run(command: Command, resolved: &Resolved) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(resolved.workers).build()?;
    let result = pool.install(|| commands::execute(command, &resolved.config))?;
    let outputs = write_outputs(&resolved.out, &result.files)?;
    let (config, input_sha256) = input_hash(command.as_str(), &resolved.config);
    let manifest = Manifest {
        schema_version: output::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command.as_str(),
        config,
        defaulted: &resolved.defaulted,
        input_sha256,
        workers: pool.current_num_threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
    };
    write_manifest(&resolved.out, &manifest)?;
    Ok(RunReport {
        exit_code: if result.assumptions_hold { EXIT_OK } else { EXIT_ASSUMPTION },
        summary: result.summary,
        outputs,
    })
}

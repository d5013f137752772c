use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use collexp_cli::config::{resolve, ConfigFile, Overrides};
use collexp_cli::{run, Command, EXIT_CONFIG, EXIT_OK};

/// Equilibrium cut-offs, limit sweeps and Monte Carlo studies for collective experimentation.
#[derive(Debug, Parser)]
#[command(name = "collexp", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// TOML config file; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Quorum share in (0, 1].
    #[arg(long, global = true)]
    k: Option<f64>,

    /// Population size.
    #[arg(long, global = true)]
    n: Option<u64>,

    /// Reversible game: time of the first S vote.
    #[arg(long, global = true)]
    t1: Option<f64>,

    /// Replicates per state.
    #[arg(long, global = true)]
    replicates: Option<u64>,

    /// Relative solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Also render SVG charts (sweep).
    #[arg(long, global = true)]
    svg: bool,

    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn execute(cli: Cli) -> Result<u8, (u8, anyhow::Error)> {
    let config_err = |e: String| (EXIT_CONFIG, anyhow::anyhow!(e));
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(config_err)?,
        None => ConfigFile::default(),
    };
    let flags = Overrides {
        out: cli.out,
        seed: cli.seed,
        k: cli.k,
        n: cli.n,
        t1: cli.t1,
        replicates: cli.replicates,
        tol: cli.tol,
        svg: cli.svg,
        workers: cli.workers,
    };
    let resolved = resolve(file, flags).map_err(config_err)?;
    let report = run(cli.command, &resolved).map_err(|e| (e.exit_code(), anyhow::Error::new(e)))?;
    print!("{}", report.summary);
    for o in &report.outputs {
        println!("wrote {} ({} bytes, sha256 {})", resolved.out.join(&o.file).display(), o.bytes, o.sha256);
    }
    Ok(report.exit_code)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qglab::cli::{dispatch, error_exit_code, parse_config, RunRequest, Subcommand, EXIT_FAILURE, EXIT_VALIDATION};

/// Pseudo-spectral laboratory for dissipative dispersive quasi-geostrophic flow.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// simulate | picard | strichartz-scan | decay-curve | verify-estimates |
    /// threshold-scan | critical-family | vanishing-viscosity | norms
    /// (taken from the manifest with --resume)
    command: Option<String>,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; QGLAB_OUT takes precedence.
    #[arg(long, default_value = "qglab-out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Re-run the experiment recorded in a manifest.
    #[arg(long, conflicts_with_all = ["config", "command"])]
    resume: Option<PathBuf>,
}

fn request(args: &Args, out: PathBuf) -> qglab::Result<RunRequest> {
    if let Some(m) = &args.resume {
        return RunRequest::from_manifest(m, out);
    }
    let command: Subcommand = args
        .command
        .as_deref()
        .ok_or_else(|| qglab::Error::Config("a subcommand or --resume is required".into()))?
        .parse()?;
    let config = args.config.as_ref().ok_or_else(|| qglab::Error::Config("--config is required".into()))?;
    Ok(RunRequest { command, params: parse_config(config)?, seed: args.seed, out })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out = std::env::var_os("QGLAB_OUT").map(PathBuf::from).unwrap_or_else(|| args.out.clone());
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(EXIT_FAILURE as u8);
    }
    let req = match request(&args, out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if matches!(e, qglab::Error::Io(_)) { EXIT_FAILURE } else { EXIT_VALIDATION };
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(&req) {
        Ok(outcome) => {
            for (k, v) in &outcome.manifest.results {
                println!("{k} = {v}");
            }
            if let Some(why) = &outcome.blowup {
                eprintln!("blow-up: {why}");
            }
            println!("wrote {} artifacts to {}", outcome.manifest.artifacts.len() + 1, req.out.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}

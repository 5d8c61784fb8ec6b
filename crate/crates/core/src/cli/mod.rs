//! Experiment runner: configuration, subcommand dispatch, manifests and CSV output.

mod commands;
pub mod config;
pub mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

pub use config::{parse_config, Config, ParamSet, KNOWN_KEYS};
pub use manifest::RunManifest;

use crate::error::{Error, Result};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status of an unexpected failure (I/O, format).
pub const EXIT_FAILURE: i32 = 1;
/// Exit status of a rejected configuration.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status of a run that flagged blow-up; partial artifacts are still written.
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subcommand {
    Simulate,
    Picard,
    StrichartzScan,
    DecayCurve,
    VerifyEstimates,
    ThresholdScan,
    CriticalFamily,
    VanishingViscosity,
    Norms,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Self::Simulate,
        Self::Picard,
        Self::StrichartzScan,
        Self::DecayCurve,
        Self::VerifyEstimates,
        Self::ThresholdScan,
        Self::CriticalFamily,
        Self::VanishingViscosity,
        Self::Norms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Picard => "picard",
            Self::StrichartzScan => "strichartz-scan",
            Self::DecayCurve => "decay-curve",
            Self::VerifyEstimates => "verify-estimates",
            Self::ThresholdScan => "threshold-scan",
            Self::CriticalFamily => "critical-family",
            Self::VanishingViscosity => "vanishing-viscosity",
            Self::Norms => "norms",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|c| c.as_str()).collect();
            Error::Config(format!("unknown subcommand `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// Everything needed to run (or re-run) one experiment.
#[derive(Clone, Debug)]
pub struct RunRequest {
    pub command: Subcommand,
    pub params: ParamSet,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunRequest {
    /// Rebuilds the request recorded in a manifest, writing into `out`.
    pub fn from_manifest(path: &Path, out: PathBuf) -> Result<Self> {
        let m = RunManifest::read(path)?;
        Ok(Self { command: m.subcommand, params: ParamSet::from_config(m.config)?, seed: m.seed, out })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// Set when the run stopped on a blow-up flag.
    pub blowup: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.blowup.is_some() {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }
}

/// Exit status for a failed run.
pub fn error_exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_FAILURE
    }
}

/// Runs the pipeline of `req.command` and writes its CSVs, snapshots and `manifest.txt` into `req.out`.
pub fn dispatch(req: &RunRequest) -> Result<RunOutcome> {
    std::fs::create_dir_all(&req.out)?;
    let start = Instant::now();
    let mut sink = commands::Sink::new(&req.out);
    let blowup = commands::run(req, &mut sink)?;
    let mut manifest = RunManifest::new(req.command, req.seed, req.params.config.clone());
    manifest.artifacts = sink.artifacts;
    manifest.results = sink.results;
    manifest.timings.push(("total_s".into(), start.elapsed().as_secs_f64()));
    manifest.write(&req.out.join(manifest::MANIFEST_NAME))?;
    Ok(RunOutcome { manifest, blowup })
}

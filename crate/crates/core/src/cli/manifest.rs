use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::Config;
use super::Subcommand;
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Record of one run: enough to reproduce every artifact it lists.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub subcommand: Subcommand,
    pub seed: u64,
    pub config: Config,
    pub config_hash: String,
    /// File names relative to the output directory, in creation order.
    pub artifacts: Vec<String>,
    /// Scalar summaries (fitted exponents, thresholds).
    pub results: Vec<(String, String)>,
    pub timings: Vec<(String, f64)>,
}

/// SHA-256 of the subcommand, seed and canonical configuration.
pub fn config_hash(subcommand: Subcommand, seed: u64, config: &Config) -> String {
    let mut h = Sha256::new();
    h.update(format!("subcommand = {subcommand}\nseed = {seed}\n"));
    h.update(config.canonical());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(subcommand: Subcommand, seed: u64, config: Config) -> Self {
        Self {
            config_hash: config_hash(subcommand, seed, &config),
            subcommand,
            seed,
            config,
            artifacts: Vec::new(),
            results: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Line-oriented `key = value` text; parameters carry a `param.` prefix.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("subcommand = {}\nseed = {}\nconfig_hash = {}\n", self.subcommand, self.seed, self.config_hash));
        for (k, v) in self.config.iter() {
            out.push_str(&format!("param.{k} = {v}\n"));
        }
        for a in &self.artifacts {
            out.push_str(&format!("artifact = {a}\n"));
        }
        for (k, v) in &self.results {
            out.push_str(&format!("result.{k} = {v}\n"));
        }
        for (k, v) in &self.timings {
            out.push_str(&format!("timing.{k} = {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut subcommand = None;
        let mut seed = None;
        let mut hash = None;
        let mut params = Vec::new();
        let mut artifacts = Vec::new();
        let mut results = Vec::new();
        let mut timings = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Format(format!("manifest line {}: expected `key = value`", no + 1)))?;
            match k {
                "subcommand" => subcommand = Some(v.parse::<Subcommand>()?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::Format(format!("manifest seed `{v}`")))?),
                "config_hash" => hash = Some(v.to_string()),
                "artifact" => artifacts.push(v.to_string()),
                _ => {
                    if let Some(p) = k.strip_prefix("param.") {
                        params.push((p, v.to_string()));
                    } else if let Some(r) = k.strip_prefix("result.") {
                        results.push((r.to_string(), v.to_string()));
                    } else if let Some(t) = k.strip_prefix("timing.") {
                        timings.push((t.to_string(), v.parse().unwrap_or(f64::NAN)));
                    } else {
                        return Err(Error::Format(format!("manifest line {}: unknown key `{k}`", no + 1)));
                    }
                }
            }
        }
        let subcommand = subcommand.ok_or_else(|| Error::Format("manifest has no subcommand".into()))?;
        let seed = seed.ok_or_else(|| Error::Format("manifest has no seed".into()))?;
        let config = Config::from_pairs(params)?;
        let config_hash = config_hash(subcommand, seed, &config);
        if let Some(h) = hash {
            if h != config_hash {
                return Err(Error::Format(format!("manifest hash {h} does not match its parameters ({config_hash})")));
            }
        }
        Ok(Self { subcommand, seed, config, config_hash, artifacts, results, timings })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_order_and_comments() {
        let a = Config::parse_str("n = 32\nkappa = 1\n").unwrap();
        let b = Config::parse_str("# x\nkappa = 1\nn = 32").unwrap();
        assert_eq!(config_hash(Subcommand::Simulate, 1, &a), config_hash(Subcommand::Simulate, 1, &b));
        assert_ne!(config_hash(Subcommand::Simulate, 1, &a), config_hash(Subcommand::Simulate, 2, &a));
        assert_ne!(config_hash(Subcommand::Simulate, 1, &a), config_hash(Subcommand::Norms, 1, &a));
    }

    #[test]
    fn text_round_trip() {
        let mut m = RunManifest::new(Subcommand::Picard, 7, Config::parse_str("alpha = 1\np = 3\ns = 21/20").unwrap());
        m.artifacts.push("contraction.csv".into());
        m.results.push(("max_ratio".into(), "0.25".into()));
        m.timings.push(("total_s".into(), 1.5));
        assert_eq!(RunManifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn tampered_hash_rejected() {
        let m = RunManifest::new(Subcommand::Norms, 0, Config::parse_str("n = 32").unwrap());
        let text = m.to_text().replace("param.n = 32", "param.n = 64");
        assert!(RunManifest::parse(&text).unwrap_err().to_string().contains("does not match"));
    }
}

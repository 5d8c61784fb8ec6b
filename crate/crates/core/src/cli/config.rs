use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::picard::{admissible_indices, parse_rational, IndexSet, Q};

/// Every key the runner understands, with a one-line description.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("n", "grid points per side"),
    ("length", "side of the periodic box"),
    ("alpha", "dissipation order, rational"),
    ("kappa", "dissipation coefficient"),
    ("A", "dispersion parameter"),
    ("p", "Lebesgue exponent, rational"),
    ("s", "regularity index, rational"),
    ("r", "time exponent, rational (Strichartz scans)"),
    ("critical", "use critical indices s = 2 - alpha"),
    ("init", "initial data: zero | bump | ensemble | snapshot"),
    ("amplitude", "initial amplitude"),
    ("width", "bump width"),
    ("band", "dyadic band j_min,j_max of ensembles"),
    ("slope", "ensemble spectral slope"),
    ("members", "ensemble size"),
    ("snapshot", "snapshot path for init = snapshot"),
    ("snapshots", "comma-separated snapshot paths (norms)"),
    ("t_end", "final time"),
    ("dt", "fixed or maximal step"),
    ("cfl", "CFL factor; adaptive stepping when set"),
    ("snapshot_count", "number of stored states"),
    ("linear", "drop the nonlinearity"),
    ("iterations", "successive approximations after the linear one"),
    ("norm_stride", "evaluate time norms every k steps"),
    ("amplitudes", "amplitude sweep"),
    ("A_grid", "dispersion grid"),
    ("kappa_grid", "viscosity grid (Strichartz scans)"),
    ("N_grid", "cutoff grid (critical family)"),
    ("constant", "constant of the predicted threshold"),
    ("c0", "constant of the size condition"),
    ("beta", "viscosity exponent kappa = A^-beta, rational"),
    ("lattice_radius", "packet radius in lattice units (Strichartz scans)"),
    ("radii", "packet radii min,max,points_per_octave (Strichartz scans)"),
    ("At_min", "smallest |A| t of the decay curve"),
    ("At_max", "largest |A| t of the decay curve"),
    ("points", "samples of the decay curve"),
    ("q", "Besov summability (estimates), rational"),
    ("s1", "first regularity (estimates), rational"),
    ("s2", "second regularity (estimates), rational"),
];

/// Parsed `key = value` configuration; lines keep their numbers for messages.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut unknown = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
                unknown.push(key.to_string());
                continue;
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(Error::Config(format!("line {line_no}: duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key.to_string(), (value.to_string(), line_no));
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(Self { entries })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Result<Self> {
        let text: Vec<String> = pairs.into_iter().map(|(k, v)| format!("{k} = {v}")).collect();
        Self::parse_str(&text.join("\n"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        let (v, line) = &self.entries[key];
        Error::Config(format!("line {line}: `{key} = {v}` is not {what}"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    /// Required float; rationals such as `1/2` are accepted.
    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        if let Ok(x) = v.parse::<f64>() {
            if x.is_finite() {
                return Ok(x);
            }
        }
        parse_rational(v).map(|q| crate::picard::to_f64(&q)).map_err(|_| self.bad(key, "a finite number"))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.bad(key, "a nonnegative integer")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(_) => Err(self.bad(key, "a boolean")),
        }
    }

    pub fn rational(&self, key: &str) -> Result<Q> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        parse_rational(v).map_err(|_| self.bad(key, "a rational number"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        v.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .or_else(|| parse_rational(t).ok().map(|q| crate::picard::to_f64(&q)))
                    .ok_or_else(|| self.bad(key, "a comma-separated list of numbers"))
            })
            .collect()
    }

    pub fn i32_list(&self, key: &str) -> Result<Vec<i32>> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        v.split(',').map(|t| t.trim().parse().map_err(|_| self.bad(key, "a comma-separated list of integers"))).collect()
    }

    /// Canonical `key = value` text, sorted by key.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, (v, _))| format!("{k} = {v}\n")).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    /// Index set from `alpha`, `p` and `s` (or the critical pair when `critical = true`).
    pub fn index_set(&self) -> Result<IndexSet> {
        let (alpha, p) = (self.rational("alpha")?, self.rational("p")?);
        if self.bool_or("critical", false)? {
            IndexSet::critical(&alpha, &p)
        } else {
            IndexSet::subcritical(&alpha, &p, &self.rational("s")?)
        }
    }
}

/// Configuration file plus the validated index set, when the file names one.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub config: Config,
    pub indices: Option<IndexSet>,
}

impl ParamSet {
    pub fn from_config(config: Config) -> Result<Self> {
        let indices = if config.contains("alpha") && config.contains("p") && (config.contains("s") || config.bool_or("critical", false)?) {
            Some(config.index_set()?)
        } else {
            if config.contains("alpha") && config.contains("p") {
                let w = admissible_indices(&config.rational("alpha")?, &config.rational("p")?)?;
                if let Some(why) = w.empty {
                    return Err(Error::IndexWindow(format!("empty window: {why}")));
                }
            }
            None
        };
        Ok(Self { config, indices })
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ParamSet> {
    ParamSet::from_config(Config::parse_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_indices_accepted() {
        let ps = ParamSet::from_config(Config::parse_str("alpha = 1\np = 3\ns = 21/20\n").unwrap()).unwrap();
        assert_eq!(ps.indices.unwrap().r, parse_rational("60/23").unwrap());
    }

    #[test]
    fn p_bound_named() {
        let e = ParamSet::from_config(Config::parse_str("alpha = 1\np = 4\n").unwrap()).unwrap_err().to_string();
        assert!(e.contains("p < 4/(2-alpha)"), "{e}");
    }

    #[test]
    fn duplicate_key_names_line() {
        let e = Config::parse_str("n = 32\n# comment\nn = 64\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("line 1"), "{e}");
    }

    #[test]
    fn unknown_keys_listed() {
        let e = Config::parse_str("n = 32\nfoo = 1\nbar = 2\n").unwrap_err().to_string();
        assert!(e.contains("foo, bar"), "{e}");
    }

    #[test]
    fn typed_getters() {
        let c = Config::parse_str("A_grid = 1, 2.5, 1/2\nlinear = yes\nkappa = 1/4").unwrap();
        assert_eq!(c.f64_list("A_grid").unwrap(), vec![1.0, 2.5, 0.5]);
        assert!(c.bool_or("linear", false).unwrap());
        assert_eq!(c.f64("kappa").unwrap(), 0.25);
        assert!(c.f64("n").unwrap_err().to_string().contains("missing required key `n`"));
        let bad = Config::parse_str("kappa = fast").unwrap();
        assert!(bad.f64("kappa").unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn canonical_is_sorted() {
        let a = Config::parse_str("n = 32\nalpha = 1\n").unwrap();
        let b = Config::parse_str("alpha = 1\n\nn = 32 # same\n").unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }
}

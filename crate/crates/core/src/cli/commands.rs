use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use super::config::Config;
use super::{RunRequest, Subcommand};
use crate::error::{Error, Result};
use crate::estimates::{
    check_advection_product, check_commutator_estimate, check_product_estimate, check_strichartz, dilated_packet_family, RatioStats,
};
use crate::evolution::{self, DtPolicy, SimConfig};
use crate::littlewood_paley::DyadicProfile;
use crate::operators::PhysParams;
use crate::picard::{
    critical_family_experiment, iterate, threshold_scan, vanishing_viscosity_scenario, CriticalConfig, IndexSet, PicardConfig, ScanConfig,
};
use crate::propagator::{dispersive_decay_curve, linear_fit};
use crate::spectral::{gaussian_ensemble_spectral, read_snapshot, write_snapshot, EnsembleSpec, Grid, RealField, SpectralField};

/// Output directory plus the bookkeeping that ends up in the manifest.
pub(super) struct Sink {
    dir: PathBuf,
    pub artifacts: Vec<String>,
    pub results: Vec<(String, String)>,
}

impl Sink {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), artifacts: Vec::new(), results: Vec::new() }
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn snapshot(&mut self, name: &str, f: &SpectralField, params: &PhysParams, t: f64) -> Result<()> {
        let w = BufWriter::new(File::create(self.dir.join(name))?);
        write_snapshot(w, &f.inverse()?, params.alpha, params.kappa, params.dispersion, t)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(num).unwrap_or_default()
}

/// Runs one subcommand; returns the blow-up message when the run was cut short.
pub(super) fn run(req: &RunRequest, sink: &mut Sink) -> Result<Option<String>> {
    let c = &req.params.config;
    match req.command {
        Subcommand::Simulate => simulate(c, req.seed, sink),
        Subcommand::Picard => picard(c, indices(req)?, req.seed, sink),
        Subcommand::StrichartzScan => strichartz_scan(c, sink).map(|_| None),
        Subcommand::DecayCurve => decay_curve(c, req.seed, sink).map(|_| None),
        Subcommand::VerifyEstimates => verify_estimates(c, req.seed, sink).map(|_| None),
        Subcommand::ThresholdScan => threshold(c, indices(req)?, req.seed, sink).map(|_| None),
        Subcommand::CriticalFamily => critical(c, indices(req)?, req.seed, sink).map(|_| None),
        Subcommand::VanishingViscosity => viscosity(c, indices(req)?, req.seed, sink),
        Subcommand::Norms => norms(c, req.seed, sink).map(|_| None),
    }
}

fn indices(req: &RunRequest) -> Result<&IndexSet> {
    req.params
        .indices
        .as_ref()
        .ok_or_else(|| Error::Config(format!("`{}` needs alpha, p and s (or critical = true)", req.command)))
}

fn grid(c: &Config) -> Result<Grid> {
    Grid::new(c.usize_or("n", 64)?, c.f64_or("length", TAU)?)
}

fn params(c: &Config) -> Result<PhysParams> {
    PhysParams::new(c.f64_or("alpha", 1.0)?, c.f64_or("kappa", 1.0)?, c.f64_or("A", 0.0)?)
}

fn band(c: &Config) -> Result<(i32, i32)> {
    if !c.contains("band") {
        return Ok((1, 2));
    }
    match c.i32_list("band")?.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => Err(Error::Config("`band` takes two integers j_min,j_max".into())),
    }
}

fn ensemble(c: &Config, g: &Grid, seed: u64, default_count: usize) -> Result<Vec<SpectralField>> {
    let spec = EnsembleSpec {
        count: c.usize_or("members", default_count)?,
        seed,
        spectrum_slope: c.f64_or("slope", -1.0)?,
        band: band(c)?,
    };
    let amp = c.f64_or("amplitude", 1.0)?;
    Ok(gaussian_ensemble_spectral(&spec, g)?.into_iter().map(|f| f.scale(amp)).collect())
}

/// Gaussian bump at the centre of the box, dealiased.
pub fn bump(g: &Grid, amplitude: f64, width: f64) -> Result<SpectralField> {
    if !(width > 0.0) {
        return Err(crate::error::invalid(format!("bump width {width} must be positive")));
    }
    let c = g.length() / 2.0;
    let f = RealField::from_fn(g, |x, y| amplitude * (-((x - c).powi(2) + (y - c).powi(2)) / (2.0 * width * width)).exp())?;
    Ok(f.forward().dealias())
}

fn load_snapshot(path: &str) -> Result<(SpectralField, f64)> {
    let s = read_snapshot(BufReader::new(File::open(path)?))?;
    Ok((s.field.forward(), s.header.time))
}

fn initial(c: &Config, seed: u64) -> Result<SpectralField> {
    match c.get("init").unwrap_or("bump") {
        "zero" => Ok(SpectralField::zeros(&grid(c)?)),
        "bump" => {
            let g = grid(c)?;
            bump(&g, c.f64_or("amplitude", 1.0)?, c.f64_or("width", g.length() / 12.0)?)
        }
        "ensemble" => Ok(ensemble(c, &grid(c)?, seed, 1)?.swap_remove(0)),
        "snapshot" => {
            let path = c.get("snapshot").ok_or_else(|| Error::Config("init = snapshot needs `snapshot`".into()))?;
            Ok(load_snapshot(path)?.0.dealias())
        }
        other => Err(Error::Config(format!("init = {other}: expected zero, bump, ensemble or snapshot"))),
    }
}

fn picard_config(c: &Config) -> Result<PicardConfig> {
    Ok(PicardConfig::new(c.usize_or("iterations", 6)?, c.f64("t_end")?, c.f64_or("dt", 0.02)?)?.with_stride(c.usize_or("norm_stride", 1)?))
}

fn simulate(c: &Config, seed: u64, sink: &mut Sink) -> Result<Option<String>> {
    let theta0 = initial(c, seed)?;
    let p = params(c)?;
    let dt = c.f64_or("dt", 0.01)?;
    let policy = match c.get("cfl") {
        Some(_) => DtPolicy::Cfl { factor: c.f64("cfl")?, dt_max: dt },
        None => DtPolicy::Fixed(dt),
    };
    let mut cfg = SimConfig::new(p, theta0.grid().clone(), policy, c.f64("t_end")?)?.with_uniform_snapshots(c.usize_or("snapshot_count", 10)?)?;
    if c.bool_or("linear", false)? {
        cfg = cfg.linear();
    }
    let traj = evolution::run(&theta0, &cfg)?;
    sink.csv(
        "diagnostics.csv",
        &["t", "l2", "hs", "hs_minus1", "dt", "max_u"],
        traj.diagnostics.iter().map(|d| vec![num(d.t), num(d.l2), num(d.hs), num(d.hs_minus1), num(d.dt), num(d.max_u)]),
    )?;
    for (k, (t, f)) in traj.times.iter().zip(&traj.states).enumerate() {
        sink.snapshot(&format!("state_{k:04}.qgf"), f, &p, *t)?;
    }
    Ok(traj.blowup.map(|b| format!("t = {}: {}", b.t, b.reason)))
}

fn picard(c: &Config, idx: &IndexSet, seed: u64, sink: &mut Sink) -> Result<Option<String>> {
    let theta0 = initial(c, seed)?;
    let p = params(c)?;
    let profile = DyadicProfile::new(theta0.grid());
    let rep = iterate(&theta0, idx, &p, &profile, &picard_config(c)?)?;
    sink.csv(
        "contraction.csv",
        &["n", "d_n", "ratio", "x_norm"],
        rep.x_norms.iter().enumerate().map(|(n, x)| {
            vec![n.to_string(), opt(rep.d.get(n).copied()), opt(rep.ratios.get(n).copied()), num(*x)]
        }),
    )?;
    sink.result("r", &idx.r);
    sink.result("contracts", rep.contracts());
    sink.result("max_ratio", rep.max_ratio());
    Ok(rep.blowup.map(|(n, b)| format!("iterate {n} at t = {}: {}", b.t, b.reason)))
}

fn radii(c: &Config) -> Result<Vec<f64>> {
    let spec = if c.contains("radii") { c.f64_list("radii")? } else { vec![1.0, 64.0, 2.0] };
    match spec.as_slice() {
        &[lo, hi, per] if lo > 0.0 && hi >= lo && per > 0.0 => {
            let steps = ((hi / lo).log2() * per).round() as i32;
            Ok((0..=steps).map(|k| lo * (k as f64 / per).exp2()).collect())
        }
        _ => Err(Error::Config("`radii` takes min,max,points_per_octave with 0 < min <= max".into())),
    }
}

fn strichartz_scan(c: &Config, sink: &mut Sink) -> Result<()> {
    let (alpha, p, r) = (c.rational("alpha")?, c.rational("p")?, c.rational("r")?);
    let s = c.f64_or("s", 0.0)?;
    let kappa_grid = if c.contains("kappa_grid") { c.f64_list("kappa_grid")? } else { vec![c.f64_or("kappa", 1.0)?] };
    let a_grid = c.f64_list("A_grid")?;
    let family = dilated_packet_family(c.usize_or("n", 128)?, c.f64_or("lattice_radius", 16.0)?, &radii(c)?)?;
    let st = check_strichartz(&family, &alpha, &kappa_grid, &p, &r, s, &a_grid)?;
    let (a_s, p_s, r_s) = (alpha.to_string(), p.to_string(), r.to_string());
    sink.csv(
        "strichartz.csv",
        &["member", "A", "kappa", "alpha", "r", "p", "s", "t_max", "norm", "quadrature_err"],
        st.evaluations.iter().map(|e| {
            vec![
                e.member.to_string(),
                num(e.dispersion),
                num(e.kappa),
                a_s.clone(),
                r_s.clone(),
                p_s.clone(),
                num(s),
                num(e.t_max),
                opt(e.norm),
                num(e.quadrature_err),
            ]
        }),
    )?;
    sink.result("a_exponent", opt(st.a_exponent));
    sink.result("a_exponent_predicted", st.a_exponent_predicted);
    sink.result("kappa_exponent", opt(st.kappa_exponent));
    sink.result("kappa_exponent_predicted", st.kappa_exponent_predicted);
    sink.result("ratio_max", st.stats.max());
    sink.result("torus_limited", st.n_torus_limited);
    Ok(())
}

fn decay_curve(c: &Config, seed: u64, sink: &mut Sink) -> Result<()> {
    let theta0 = initial(c, seed)?;
    let a = c.f64("A")?;
    if a == 0.0 {
        return Err(crate::error::invalid("decay-curve needs A != 0"));
    }
    let (lo, hi, m) = (c.f64_or("At_min", 10.0)?, c.f64_or("At_max", 1000.0)?, c.usize_or("points", 25)?);
    if !(lo > 0.0 && hi > lo && m >= 2) {
        return Err(Error::Config("need 0 < At_min < At_max and points >= 2".into()));
    }
    let at: Vec<f64> = (0..m).map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64)).collect();
    let times: Vec<f64> = at.iter().map(|x| x / a.abs()).collect();
    let curve = dispersive_decay_curve(&theta0, &DyadicProfile::new(theta0.grid()), a, &times)?;
    sink.csv(
        "decay.csv",
        &["t", "At", "sup_norm", "boundary_mass"],
        curve.samples.iter().zip(&at).map(|(s, x)| vec![num(s.t), num(*x), num(s.sup_norm), num(s.boundary_mass)]),
    )?;
    let (x, y): (Vec<f64>, Vec<f64>) = curve.samples.iter().map(|s| ((1.0 + a.abs() * s.t).ln(), s.sup_norm.ln())).unzip();
    sink.result("slope", linear_fit(&x, &y).0);
    sink.result("wrap_time", curve.wrap_time);
    Ok(())
}

fn estimate_rows(c: &Config, family: &[SpectralField]) -> Result<Vec<RatioStats>> {
    let profile = DyadicProfile::new(family[0].grid());
    let p = c.rational("p")?;
    let mut out = Vec::new();
    if c.contains("s1") || c.contains("s2") {
        let q = if c.contains("q") { c.rational("q")? } else { crate::picard::parse_rational("2")? };
        out.push(check_product_estimate(family, &profile, &p, &q, &c.rational("s1")?, &c.rational("s2")?)?);
    }
    if c.contains("s") {
        let s = c.rational("s")?;
        out.push(check_advection_product(family, &profile, &p, &s)?);
        let one = crate::picard::parse_rational("1")?;
        out.push(check_commutator_estimate(family, &profile, &p, &s, &(&s - &one))?);
    }
    if c.contains("r") {
        let kappa = [c.f64_or("kappa", 1.0)?];
        let a_grid = c.f64_list("A_grid")?;
        let s = c.f64_or("s", 0.0)?;
        out.push(check_strichartz(family, &c.rational("alpha")?, &kappa, &p, &c.rational("r")?, s, &a_grid)?.stats);
    }
    if out.is_empty() {
        return Err(Error::Config("verify-estimates needs s1,s2 (product), s (advection, commutator) or r (Strichartz)".into()));
    }
    Ok(out)
}

fn verify_estimates(c: &Config, seed: u64, sink: &mut Sink) -> Result<()> {
    let g = grid(c)?;
    let base = estimate_rows(c, &ensemble(c, &g, seed, 6)?)?;
    let reseeded = estimate_rows(c, &ensemble(c, &g, seed.wrapping_add(1), 6)?)?;
    let rows: Vec<RatioStats> = base.into_iter().zip(&reseeded).map(|(a, b)| a.with_stability(b)).collect();
    sink.csv(
        "estimates.csv",
        &["estimate_id", "params", "n_samples", "n_degenerate", "ratio_max", "ratio_p95", "ratio_median", "stability"],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.params.clone(),
                r.n_samples().to_string(),
                r.n_degenerate.to_string(),
                num(r.max()),
                num(r.p95()),
                num(r.median()),
                opt(r.stability),
            ]
        }),
    )
}

fn threshold(c: &Config, idx: &IndexSet, seed: u64, sink: &mut Sink) -> Result<()> {
    let theta0 = initial(c, seed)?;
    let profile = DyadicProfile::new(theta0.grid());
    let cfg = ScanConfig { a_grid: c.f64_list("A_grid")?, picard: picard_config(c)?, constant: c.f64_or("constant", 1.0)? };
    let scan = threshold_scan(&theta0, &c.f64_list("amplitudes")?, idx, c.f64_or("kappa", 1.0)?, &profile, &cfg)?;
    sink.csv(
        "threshold.csv",
        &["c", "A0_measured", "A0_predicted", "first_branch", "hs", "hs_minus1", "anomaly"],
        scan.rows.iter().map(|r| {
            vec![
                num(r.amplitude),
                opt(r.a0_measured),
                num(r.a0_predicted),
                r.first_branch.to_string(),
                num(r.hs),
                num(r.hs_minus1),
                r.anomaly.clone().unwrap_or_default(),
            ]
        }),
    )?;
    sink.result("monotone", scan.monotone);
    sink.result("exponent_measured", opt(scan.exponent_measured));
    sink.result("exponent_predicted", scan.exponent_predicted);
    Ok(())
}

fn critical(c: &Config, idx: &IndexSet, seed: u64, sink: &mut Sink) -> Result<()> {
    let family = ensemble(c, &grid(c)?, seed, 5)?;
    let profile = DyadicProfile::new(family[0].grid());
    let cfg = CriticalConfig { a_grid: c.f64_list("A_grid")?, n_grid: c.i32_list("N_grid")?, picard: picard_config(c)? };
    let rep = critical_family_experiment(&family, idx, c.f64_or("kappa", 1.0)?, &profile, &cfg)?;
    let mut rows = Vec::new();
    let members = rep.member_tails.iter().zip(&rep.member_strichartz).enumerate().map(|(m, (t, s))| (m.to_string(), t, s));
    for (id, tails, strich) in members.chain(std::iter::once(("sup".to_string(), &rep.sup_tails, &rep.sup_strichartz))) {
        for (n, tail) in cfg.n_grid.iter().zip(tails) {
            rows.push(vec![id.clone(), n.to_string(), num(*tail), String::new(), String::new()]);
        }
        for (a, v) in cfg.a_grid.iter().zip(strich) {
            rows.push(vec![id.clone(), String::new(), String::new(), num(*a), num(*v)]);
        }
    }
    sink.csv("critical.csv", &["member_id", "N", "tail", "A", "strichartz_sup"], rows)?;
    sink.result("common_A0", opt(rep.common_a0));
    sink.result("tails_decreasing", rep.tails_decreasing);
    sink.result("strichartz_decreasing", rep.strichartz_decreasing);
    Ok(())
}

fn viscosity(c: &Config, idx: &IndexSet, seed: u64, sink: &mut Sink) -> Result<Option<String>> {
    let theta0 = initial(c, seed)?;
    let profile = DyadicProfile::new(theta0.grid());
    let rows = vanishing_viscosity_scenario(
        &theta0,
        idx,
        &c.rational("beta")?,
        &c.f64_list("A_grid")?,
        &profile,
        &picard_config(c)?,
        c.f64_or("c0", 1.0)?,
    )?;
    sink.csv(
        "viscosity.csv",
        &["A", "kappa", "bound_hs", "bound_hs_minus1", "conditions_hold", "contracts", "max_ratio", "blowup"],
        rows.iter().map(|r| {
            vec![
                num(r.dispersion),
                num(r.kappa),
                num(r.bound_hs),
                num(r.bound_hs_minus1),
                r.conditions_hold.to_string(),
                r.contracts.to_string(),
                num(r.max_ratio),
                r.blowup.to_string(),
            ]
        }),
    )?;
    let blown: Vec<String> = rows.iter().filter(|r| r.blowup).map(|r| num(r.dispersion)).collect();
    Ok((!blown.is_empty()).then(|| format!("blow-up at A = {}", blown.join(", "))))
}

fn norms(c: &Config, seed: u64, sink: &mut Sink) -> Result<()> {
    let p = c.f64_or("p", 2.0)?;
    let fields: Vec<(String, SpectralField, f64)> = match c.get("snapshots") {
        Some(list) => list
            .split(',')
            .map(|path| {
                let path = path.trim();
                let (f, t) = load_snapshot(path)?;
                let id = Path::new(path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.to_string());
                Ok((id, f, t))
            })
            .collect::<Result<_>>()?,
        None => vec![("initial".to_string(), initial(c, seed)?, 0.0)],
    };
    let mut rows = Vec::new();
    for (id, f, t) in &fields {
        let profile = DyadicProfile::new(f.grid());
        for (j, v) in profile.block_indices().zip(profile.block_lp_norms(f, p)?) {
            rows.push(vec![id.clone(), num(*t), j.to_string(), num(p), num(v)]);
        }
    }
    sink.csv("norms.csv", &["run_id", "t", "j", "p", "block_lp_norm"], rows)
}

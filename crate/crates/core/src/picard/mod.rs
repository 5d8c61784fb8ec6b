//! Successive approximation with frozen velocity, size thresholds and the
//! parameter-scan experiments built on it.

mod decomposition;
mod experiments;
mod indices;
mod threshold;

pub use decomposition::{default_cutoff, regularized_linear_decomposition, DecompositionReport};
pub use experiments::{
    critical_family_experiment, threshold_scan, vanishing_viscosity_scenario, viscosity_conditions, ContractionGrid, ScanCell,
    CriticalConfig, CriticalReport, ScanConfig, ThresholdRow, ThresholdScan, ViscosityRow,
};
pub use indices::{
    admissible_indices, parse_rational, to_f64, IndexSet, IndexWindow, BOUND_UPPER_A, BOUND_UPPER_B, Q,
};
pub use threshold::{a0_formula, size_condition, size_threshold, SizeCondition, ThresholdReport};

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::evolution::{run_frozen, BlowUp, FieldSeries, FrozenVelocity};
use crate::littlewood_paley::{time_lr, weighted_lq, DyadicProfile};
use crate::operators::PhysParams;
use crate::propagator::Semigroup;
use crate::spectral::SpectralField;

/// Horizon, step and iteration count for [`iterate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    /// Number of iterates computed after the linear one.
    pub iterations: usize,
    pub t_end: f64,
    /// Upper bound on the uniform step.
    pub dt: f64,
    /// Norms are evaluated at every `norm_stride`-th step (and the last).
    pub norm_stride: usize,
}

impl PicardConfig {
    pub fn new(iterations: usize, t_end: f64, dt: f64) -> Result<Self> {
        let cfg = Self { iterations, t_end, dt, norm_stride: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.norm_stride = stride.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt = {} must be positive", self.dt)));
        }
        Ok(())
    }

    /// Uniform grid `0 = t_0 < ... < t_m = t_end` with step at most `dt`.
    pub fn time_grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let m = (self.t_end / self.dt).ceil().max(1.0) as usize;
        Ok((0..=m).map(|k| self.t_end * k as f64 / m as f64).collect())
    }

    /// Time after which the slowest mode of `theta0` has lost a factor 100
    /// to dissipation.
    pub fn dissipation_horizon(theta0: &SpectralField, params: &PhysParams) -> f64 {
        let (kmin, _) = crate::propagator::support_radii(theta0);
        let k = kmin.max(theta0.grid().k0());
        100f64.ln() / (params.kappa * k.powf(params.alpha))
    }
}

/// Diagnostics of a successive-approximation run.
#[derive(Clone, Debug)]
pub struct PicardReport {
    pub times: Vec<f64>,
    /// `d[n] = ||theta^{n+1} - theta^n||` in `L^r(0, t_end; B^{s-1}_{p,2})`.
    pub d: Vec<f64>,
    /// `ratios[n] = d[n] / d[n-1]` for `n >= 1`; `ratios[0]` is NaN.
    pub ratios: Vec<f64>,
    /// `||theta^n||_{L^r B^s_{p,2}} + ||theta^n||_{L^r B^{s-1}_{p,2}}` for every computed iterate.
    pub x_norms: Vec<f64>,
    /// `sup_t ||theta^n(t)||_2` for every computed iterate.
    pub l2_max: Vec<f64>,
    /// Iterate index and event, if some iterate blew up.
    pub blowup: Option<(usize, BlowUp)>,
    /// The linear iterate.
    pub first: FieldSeries,
    /// The last completed iterate.
    pub last: FieldSeries,
}

impl PicardReport {
    /// Ratios from `n = from` on.
    pub fn ratios_from(&self, from: usize) -> &[f64] {
        &self.ratios[from.min(self.ratios.len())..]
    }

    /// No blow-up and every ratio (n >= 1) below one.
    pub fn contracts(&self) -> bool {
        self.blowup.is_none()
            && self.d.iter().all(|v| v.is_finite())
            && self.ratios_from(1).iter().all(|&q| q < 1.0)
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios_from(1).iter().copied().fold(0.0, f64::max)
    }

    pub fn last_difference(&self) -> f64 {
        self.d.last().copied().unwrap_or(0.0)
    }
}

fn sampled(len: usize, stride: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (0..len).step_by(stride.max(1)).collect();
    if ks.last() != Some(&(len - 1)) {
        ks.push(len - 1);
    }
    ks
}

/// Block `L^p` norms of `f(k)` at the sampled indices.
fn block_rows(
    len: usize,
    stride: usize,
    profile: &DyadicProfile,
    p: f64,
    f: impl Fn(usize) -> Result<SpectralField> + Sync,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let ks = sampled(len, stride);
    let rows = ks.par_iter().map(|&k| profile.block_lp_norms(&f(k)?, p)).collect::<Result<Vec<_>>>()?;
    Ok((ks, rows))
}

fn lr_of_rows(times: &[f64], ks: &[usize], rows: &[Vec<f64>], j_lo: i32, sigma: f64, r: f64) -> f64 {
    let ts: Vec<f64> = ks.iter().map(|&k| times[k]).collect();
    let vals: Vec<f64> = rows.iter().map(|row| weighted_lq(row, j_lo, sigma, 2.0)).collect();
    time_lr(&ts, &vals, r, *ts.last().unwrap_or(&0.0))
}

/// `||a - b||_{L^r(0, T; B^sigma_{p,2})}` for two series on the same time grid.
pub fn series_difference_norm(
    a: &FieldSeries,
    b: &FieldSeries,
    profile: &DyadicProfile,
    p: f64,
    sigma: f64,
    r: f64,
    stride: usize,
) -> Result<f64> {
    if a.times() != b.times() {
        return Err(invalid("series are sampled at different times"));
    }
    let (ks, rows) = block_rows(a.len(), stride, profile, p, |k| a.get(k).sub(&b.get(k)))?;
    Ok(lr_of_rows(a.times(), &ks, &rows, profile.j_lo(), sigma, r))
}

/// `||a||_{L^r(0, T; B^sigma_{p,2})}` for every `sigma` in `sigmas`.
pub fn series_norms(
    a: &FieldSeries,
    profile: &DyadicProfile,
    p: f64,
    sigmas: &[f64],
    r: f64,
    stride: usize,
) -> Result<Vec<f64>> {
    let (ks, rows) = block_rows(a.len(), stride, profile, p, |k| Ok(a.get(k)))?;
    Ok(sigmas.iter().map(|&s| lr_of_rows(a.times(), &ks, &rows, profile.j_lo(), s, r)).collect())
}

fn l2_max(a: &FieldSeries) -> f64 {
    (0..a.len()).map(|k| a.get(k).l2_norm()).fold(0.0, f64::max)
}

/// Runs the successive approximation
/// `theta^0 = T_A(t) theta0`, `theta^{n+1}` = frozen-velocity solve with `u = R^perp theta^n`,
/// all on the uniform grid of `cfg`.
///
/// A blow-up halts the iteration; the report then covers the completed iterates.
pub fn iterate(
    theta0: &SpectralField,
    idx: &IndexSet,
    params: &PhysParams,
    profile: &DyadicProfile,
    cfg: &PicardConfig,
) -> Result<PicardReport> {
    if theta0.grid() != profile.grid() {
        return Err(crate::Error::GridMismatch);
    }
    let times = cfg.time_grid()?;
    let (p, s, r) = (idx.p_f(), idx.s_f(), idx.r_f());
    let sg = Semigroup::from(*params);
    let base = theta0.dealias();
    let linear = times.par_iter().map(|&t| sg.apply(&base, t)).collect::<Result<Vec<_>>>()?;
    let first = FieldSeries::from_fields(&times, &linear, params.dispersion)?;
    drop(linear);

    let norms = |a: &FieldSeries| -> Result<f64> {
        let v = series_norms(a, profile, p, &[s, s - 1.0], r, cfg.norm_stride)?;
        Ok(v[0] + v[1])
    };
    let mut report = PicardReport {
        times: times.clone(),
        d: Vec::new(),
        ratios: Vec::new(),
        x_norms: vec![norms(&first)?],
        l2_max: vec![l2_max(&first)],
        blowup: None,
        first: first.clone(),
        last: first,
    };
    for n in 0..cfg.iterations {
        let velocity = FrozenVelocity::Riesz(report.last);
        let run = run_frozen(&base, &times, &velocity, None, sg);
        let FrozenVelocity::Riesz(prev) = velocity else { unreachable!() };
        report.last = prev;
        let run = run?;
        if let Some(b) = run.blowup {
            report.blowup = Some((n + 1, b));
            break;
        }
        let d = series_difference_norm(&run.series, &report.last, profile, p, s - 1.0, r, cfg.norm_stride)?;
        let ratio = match report.d.last() {
            None => f64::NAN,
            Some(&prev) if prev == 0.0 && d == 0.0 => 0.0,
            Some(&prev) => d / prev,
        };
        report.d.push(d);
        report.ratios.push(ratio);
        report.x_norms.push(norms(&run.series)?);
        report.l2_max.push(l2_max(&run.series));
        report.last = run.series;
    }
    Ok(report)
}

//! Integrating-factor fourth-order Runge-Kutta time stepping.
//!
//! The linear part (dissipation plus dispersion) is diagonal in Fourier
//! space and is applied exactly; only advection is integrated by the
//! Runge-Kutta stages.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::littlewood_paley::{BlockNormTable, DyadicProfile};
use crate::operators::{advection, max_speed, perp_velocity, transport, PhysParams};
use crate::propagator::Semigroup;
use crate::spectral::{CompactSpectrum, Grid, SpectralField};

/// Growth of `||theta||_{H^{2-alpha}}` over its initial value flagged as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = min(dt_max, factor / (max|u| * k_max))` with `k_max` the dealiasing cutoff.
    Cfl { factor: f64, dt_max: f64 },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: PhysParams,
    pub grid: Grid,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    /// Output times in `(0, t_end]`; `t_end` is always included.
    pub snapshot_times: Vec<f64>,
    /// When false the advection term is dropped.
    pub nonlinear: bool,
    /// Regularity of the `hs` diagnostic column; `hs_minus1` uses `hs_order - 1`.
    pub hs_order: f64,
}

impl SimConfig {
    pub fn new(params: PhysParams, grid: Grid, dt_policy: DtPolicy, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid(format!("t_end = {t_end} must be positive")));
        }
        match dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(invalid(format!("fixed dt = {dt} must be positive")));
            }
            DtPolicy::Cfl { factor, dt_max } if !(factor > 0.0 && factor <= 1.0 && dt_max > 0.0) => {
                return Err(invalid(format!("CFL factor {factor} must lie in (0, 1] and dt_max {dt_max} must be positive")));
            }
            _ => {}
        }
        Ok(Self {
            params,
            grid,
            dt_policy,
            t_end,
            snapshot_times: vec![t_end],
            nonlinear: true,
            hs_order: 2.0 - params.alpha,
        })
    }

    pub fn with_snapshots(mut self, mut times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !(*t > 0.0 && *t <= self.t_end)) {
            return Err(invalid("snapshot times must lie in (0, t_end]"));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        if times.last() != Some(&self.t_end) {
            times.push(self.t_end);
        }
        self.snapshot_times = times;
        Ok(self)
    }

    /// `count` equally spaced snapshots ending at `t_end`.
    pub fn with_uniform_snapshots(self, count: usize) -> Result<Self> {
        let count = count.max(1);
        let t_end = self.t_end;
        self.with_snapshots((1..=count).map(|k| t_end * k as f64 / count as f64).collect())
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }
}

/// One row of the per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
    pub hs_minus1: f64,
    pub dt: f64,
    pub max_u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowUp {
    /// Last time at which the state was valid.
    pub t: f64,
    pub reason: String,
}

/// Sampled solution of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub diagnostics: Vec<Diagnostics>,
    pub blowup: Option<BlowUp>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&SpectralField> {
        self.states.last()
    }

    pub fn block_norms(&self, profile: &DyadicProfile, p: f64) -> Result<BlockNormTable> {
        BlockNormTable::from_fields(profile, p, &self.times, &self.states)
    }
}

/// Reusable integrating-factor RK4 stepper; tables are rebuilt only when `dt` changes.
pub struct Stepper {
    grid: Grid,
    semigroup: Semigroup,
    dt: f64,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: &Grid, semigroup: Semigroup) -> Self {
        Self { grid: grid.clone(), semigroup, dt: f64::NAN, full: Vec::new(), half: Vec::new() }
    }

    fn set_dt(&mut self, dt: f64) {
        if dt != self.dt {
            self.full = self.semigroup.table(&self.grid, dt);
            self.half = self.semigroup.table(&self.grid, 0.5 * dt);
            self.dt = dt;
        }
    }

    /// Advances `theta` from `t` to `t + dt` for `d theta/dt = L theta + rhs(t, theta)`.
    pub fn step(
        &mut self,
        theta: &SpectralField,
        t: f64,
        dt: f64,
        rhs: &mut dyn FnMut(f64, &SpectralField) -> Result<SpectralField>,
    ) -> Result<SpectralField> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step {dt} must be positive")));
        }
        self.set_dt(dt);
        let (e, e2) = (&self.full, &self.half);
        let h = 0.5 * dt;
        let th = theta.coeffs();
        let grid = theta.grid();
        let build = |f: &(dyn Fn(usize) -> Complex64 + Sync)| -> SpectralField {
            SpectralField::from_raw(grid, (0..th.len()).into_par_iter().map(f).collect())
        };

        let a = rhs(t, theta)?;
        let (ac, e2r, er) = (a.coeffs(), e2, e);
        let s1 = build(&|i| e2r[i] * (th[i] + ac[i] * h));
        let b = rhs(t + h, &s1)?;
        let bc = b.coeffs();
        let s2 = build(&|i| e2r[i] * th[i] + bc[i] * h);
        let c = rhs(t + h, &s2)?;
        let cc = c.coeffs();
        let s3 = build(&|i| er[i] * th[i] + e2r[i] * cc[i] * dt);
        let d = rhs(t + dt, &s3)?;
        let dc = d.coeffs();
        let w = dt / 6.0;
        let next = build(&|i| er[i] * th[i] + (er[i] * ac[i] + e2r[i] * (bc[i] + cc[i]) * 2.0 + dc[i]) * w);
        if !next.coeffs().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::BlowUp { t, reason: "non-finite coefficients".into() });
        }
        Ok(next)
    }
}

/// `-(u . grad theta)` with `u` the Riesz velocity of `theta`, dealiased.
pub fn nonlinear_term(theta: &SpectralField) -> SpectralField {
    advection(theta).scale(-1.0)
}

/// One integrating-factor RK4 step of the full equation.
pub fn step_nonlinear(state: &SpectralField, cfg: &SimConfig, dt: f64) -> Result<SpectralField> {
    let mut stepper = Stepper::new(state.grid(), cfg.params.into());
    if cfg.nonlinear {
        stepper.step(state, 0.0, dt, &mut |_, th| Ok(nonlinear_term(th)))
    } else {
        stepper.step(state, 0.0, dt, &mut |_, th| Ok(SpectralField::zeros(th.grid())))
    }
}

/// Time-sampled fields with 4-point Lagrange interpolation between samples.
///
/// With a nonzero dispersion each node is carried to the evaluation time
/// by the dispersive multiplier before weighting, so only the slow part of
/// the motion is interpolated.
#[derive(Clone, Debug)]
pub struct FieldSeries {
    grid: Grid,
    times: Vec<f64>,
    data: Vec<CompactSpectrum>,
    dispersion: f64,
}

impl FieldSeries {
    pub fn new(grid: &Grid) -> Self {
        Self::dispersive(grid, 0.0)
    }

    pub fn dispersive(grid: &Grid, dispersion: f64) -> Self {
        Self { grid: grid.clone(), times: Vec::new(), data: Vec::new(), dispersion }
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    /// Appends a sample; the field is stored in dealiased half-plane form.
    pub fn push(&mut self, t: f64, f: &SpectralField) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if self.times.last().is_some_and(|&last| t <= last) {
            return Err(invalid("series times must be strictly increasing"));
        }
        self.times.push(t);
        self.data.push(CompactSpectrum::pack(f));
        Ok(())
    }

    pub fn from_fields(times: &[f64], fields: &[SpectralField], dispersion: f64) -> Result<Self> {
        let grid = fields.first().ok_or_else(|| invalid("empty series"))?.grid().clone();
        let mut s = Self::dispersive(&grid, dispersion);
        for (t, f) in times.iter().zip(fields) {
            s.push(*t, f)?;
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, k: usize) -> SpectralField {
        self.data[k].unpack(&self.grid)
    }

    /// Value at time `t`, exact on sample times.
    pub fn at(&self, t: f64) -> Result<SpectralField> {
        let m = self.times.len();
        if m == 0 {
            return Err(invalid("empty series"));
        }
        let (t0, t1) = (self.times[0], self.times[m - 1]);
        let slack = 1e-9 * (t1 - t0).abs().max(1e-300);
        if t < t0 - slack || t > t1 + slack {
            return Err(invalid(format!("time {t} outside stored range [{t0}, {t1}]")));
        }
        let k = self.times.partition_point(|&s| s < t);
        if k < m && (self.times[k] - t).abs() <= slack {
            return Ok(self.get(k));
        }
        if k > 0 && (self.times[k - 1] - t).abs() <= slack {
            return Ok(self.get(k - 1));
        }
        if m == 1 {
            return Ok(self.get(0));
        }
        let width = m.min(4);
        let start = k.saturating_sub(2).min(m - width);
        let nodes: Vec<usize> = (start..start + width).collect();
        let weight = |a: usize| {
            nodes.iter().filter(|&&b| b != a).map(|&b| (t - self.times[b]) / (self.times[a] - self.times[b])).product::<f64>()
        };
        let combined = if self.dispersion == 0.0 {
            let parts: Vec<(&CompactSpectrum, f64)> = nodes.iter().map(|&a| (&self.data[a], weight(a))).collect();
            CompactSpectrum::combine(&parts)
        } else {
            let parts: Vec<(&CompactSpectrum, f64, f64)> = nodes.iter().map(|&a| (&self.data[a], weight(a), t - self.times[a])).collect();
            CompactSpectrum::combine_dispersed(&parts, self.dispersion)
        };
        Ok(combined.unpack(&self.grid))
    }
}

/// Advecting velocity for frozen-velocity problems.
#[derive(Clone, Debug)]
pub enum FrozenVelocity {
    Zero,
    /// `u = R^perp theta(t)` for a stored scalar series.
    Riesz(FieldSeries),
    /// Explicit components.
    Explicit(FieldSeries, FieldSeries),
}

impl FrozenVelocity {
    pub fn at(&self, grid: &Grid, t: f64) -> Result<Option<(SpectralField, SpectralField)>> {
        match self {
            Self::Zero => {
                let _ = grid;
                Ok(None)
            }
            Self::Riesz(s) => Ok(Some(perp_velocity(&s.at(t)?))),
            Self::Explicit(a, b) => Ok(Some((a.at(t)?, b.at(t)?))),
        }
    }
}

fn frozen_rhs(
    velocity: &FrozenVelocity,
    forcing: Option<&FieldSeries>,
    t: f64,
    theta: &SpectralField,
) -> Result<SpectralField> {
    let g = theta.grid();
    let mut out = match velocity.at(g, t)? {
        Some((u1, u2)) => transport(&u1, &u2, theta)?.scale(-1.0),
        None => SpectralField::zeros(g),
    };
    if let Some(f) = forcing {
        out = out.add(&f.at(t)?)?;
    }
    Ok(out)
}

/// One step of `d theta/dt = L theta - u(t) . grad theta + forcing(t)`.
pub fn step_frozen(
    state: &SpectralField,
    t: f64,
    dt: f64,
    velocity: &FrozenVelocity,
    forcing: Option<&FieldSeries>,
    semigroup: Semigroup,
) -> Result<SpectralField> {
    Stepper::new(state.grid(), semigroup).step(state, t, dt, &mut |tau, th| frozen_rhs(velocity, forcing, tau, th))
}

/// Outcome of a frozen-velocity run on a fixed step grid.
#[derive(Clone, Debug)]
pub struct FrozenRun {
    pub series: FieldSeries,
    pub blowup: Option<BlowUp>,
}

/// Integrates a frozen-velocity problem over `times` (the step grid),
/// storing the state at every grid time.
pub fn run_frozen(
    theta0: &SpectralField,
    times: &[f64],
    velocity: &FrozenVelocity,
    forcing: Option<&FieldSeries>,
    semigroup: Semigroup,
) -> Result<FrozenRun> {
    run_on_grid(theta0, times, semigroup, &mut |tau, th| frozen_rhs(velocity, forcing, tau, th))
}

/// Integrates the full nonlinear equation over the fixed step grid `times`.
pub fn run_nonlinear_on_grid(theta0: &SpectralField, times: &[f64], semigroup: Semigroup) -> Result<FrozenRun> {
    run_on_grid(theta0, times, semigroup, &mut |_, th| Ok(nonlinear_term(th)))
}

fn run_on_grid(
    theta0: &SpectralField,
    times: &[f64],
    semigroup: Semigroup,
    rhs: &mut dyn FnMut(f64, &SpectralField) -> Result<SpectralField>,
) -> Result<FrozenRun> {
    if times.is_empty() {
        return Err(invalid("empty time grid"));
    }
    let mut series = FieldSeries::dispersive(theta0.grid(), semigroup.dispersion);
    let mut stepper = Stepper::new(theta0.grid(), semigroup);
    let mut theta = theta0.dealias();
    series.push(times[0], &theta)?;
    let h0 = theta.sobolev_norm(2.0 - semigroup.alpha);
    for w in times.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        match stepper.step(&theta, t, dt, rhs) {
            Ok(next) => theta = next,
            Err(Error::BlowUp { reason, .. }) => return Ok(FrozenRun { series, blowup: Some(BlowUp { t, reason }) }),
            Err(e) => return Err(e),
        }
        if let Some(reason) = regularity_loss(&theta, h0, semigroup.alpha) {
            return Ok(FrozenRun { series, blowup: Some(BlowUp { t, reason }) });
        }
        series.push(w[1], &theta)?;
    }
    Ok(FrozenRun { series, blowup: None })
}

fn regularity_loss(theta: &SpectralField, h0: f64, alpha: f64) -> Option<String> {
    let h = theta.sobolev_norm(2.0 - alpha);
    if !h.is_finite() {
        return Some("non-finite norm".into());
    }
    if h0 > 0.0 && h > BLOWUP_FACTOR * h0 {
        return Some(format!("H^(2-alpha) norm grew by {:.3e}", h / h0));
    }
    None
}

fn diagnostics(theta: &SpectralField, t: f64, dt: f64, max_u: f64, s: f64) -> Diagnostics {
    Diagnostics { t, l2: theta.l2_norm(), hs: theta.sobolev_norm(s), hs_minus1: theta.sobolev_norm(s - 1.0), dt, max_u }
}

/// Evolves `theta0` to `cfg.t_end`, storing states at the snapshot times.
///
/// A blow-up ends the run early; the trajectory up to the last valid
/// snapshot is returned with [`Trajectory::blowup`] set.
pub fn run(theta0: &SpectralField, cfg: &SimConfig) -> Result<Trajectory> {
    if theta0.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    let sg = Semigroup::from(cfg.params);
    let mut stepper = Stepper::new(&cfg.grid, sg);
    let mut theta = if cfg.nonlinear { theta0.dealias() } else { theta0.clone() };
    let kmax = cfg.grid.dealias_cutoff();
    let speed = |th: &SpectralField| {
        let (u1, u2) = perp_velocity(th);
        max_speed(&u1, &u2)
    };
    let mut max_u = speed(&theta);
    let h0 = theta.sobolev_norm(2.0 - cfg.params.alpha);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![theta.clone()],
        diagnostics: vec![diagnostics(&theta, 0.0, 0.0, max_u, cfg.hs_order)],
        blowup: None,
        config_hash: None,
        seed: None,
    };
    let mut t = 0.0;
    for &target in &cfg.snapshot_times {
        while t < target {
            let mut dt = match cfg.dt_policy {
                DtPolicy::Fixed(dt) => dt,
                DtPolicy::Cfl { factor, dt_max } => {
                    if cfg.nonlinear && max_u > 0.0 {
                        dt_max.min(factor / (max_u * kmax))
                    } else {
                        dt_max
                    }
                }
            };
            let landing = target - t <= dt * (1.0 + 1e-9);
            if landing {
                dt = target - t;
            }
            let stepped = if cfg.nonlinear {
                stepper.step(&theta, t, dt, &mut |_, th| Ok(nonlinear_term(th)))
            } else {
                stepper.step(&theta, t, dt, &mut |_, th| Ok(SpectralField::zeros(th.grid())))
            };
            match stepped {
                Ok(next) => theta = next,
                Err(Error::BlowUp { reason, .. }) => {
                    traj.blowup = Some(BlowUp { t, reason });
                    return Ok(traj);
                }
                Err(e) => return Err(e),
            }
            if let Some(reason) = regularity_loss(&theta, h0, cfg.params.alpha) {
                traj.blowup = Some(BlowUp { t, reason });
                return Ok(traj);
            }
            t = if landing { target } else { t + dt };
            max_u = speed(&theta);
            traj.diagnostics.push(diagnostics(&theta, t, dt, max_u, cfg.hs_order));
        }
        traj.times.push(t);
        traj.states.push(theta.clone());
    }
    Ok(traj)
}

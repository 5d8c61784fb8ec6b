//! The linear semigroup `exp(-kappa t |xi|^alpha) exp(-i A t xi_1/|xi|)` and
//! measurements built on it: dispersive decay, heat-block decay and
//! space-time Strichartz norms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::littlewood_paley::{time_besov_norm, time_lr, BesovSpec, BlockNormTable, DyadicProfile, TimeBesovSpec, TimeNormMode};
use crate::operators::PhysParams;
use crate::spectral::field::check_exponent;
use crate::spectral::{Grid, SpectralField};

/// Linear part of the equation with unchecked coefficients.
///
/// Unlike [`PhysParams`] this accepts `kappa = 0`, which the frozen-velocity
/// tests use to reduce the stepper to plain quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Semigroup {
    pub alpha: f64,
    pub kappa: f64,
    pub dispersion: f64,
}

impl From<PhysParams> for Semigroup {
    fn from(p: PhysParams) -> Self {
        Self { alpha: p.alpha, kappa: p.kappa, dispersion: p.dispersion }
    }
}

impl Semigroup {
    pub fn symbol(&self, t: f64, xi1: f64, xi2: f64) -> Complex64 {
        let r = xi1.hypot(xi2);
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let damp = if self.kappa == 0.0 { 1.0 } else { (-self.kappa * t * r.powf(self.alpha)).exp() };
        let phase = -self.dispersion * t * xi1 / r;
        Complex64::from_polar(damp, phase)
    }

    /// Symbol sampled on the grid (zero at the zero mode and on Nyquist lines).
    pub fn table(&self, grid: &Grid, t: f64) -> Vec<Complex64> {
        let n = grid.n();
        let k = grid.axis_wavenumbers();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            if iy == n / 2 {
                return;
            }
            for (ix, v) in row.iter_mut().enumerate() {
                if ix != n / 2 {
                    *v = self.symbol(t, k[ix], k[iy]);
                }
            }
        });
        out
    }

    pub fn apply(&self, f: &SpectralField, t: f64) -> Result<SpectralField> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("propagation time t = {t} must be nonnegative")));
        }
        Ok(f.apply(|a, b| self.symbol(t, a, b)))
    }
}

/// `T_A(t) f`.
pub fn apply_propagator(f: &SpectralField, params: &PhysParams, t: f64) -> Result<SpectralField> {
    Semigroup::from(*params).apply(f, t)
}

/// Parameters plus a sampling schedule for the linear evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorSpec {
    pub params: PhysParams,
    pub times: Vec<f64>,
}

impl PropagatorSpec {
    pub fn new(params: PhysParams, times: Vec<f64>) -> Result<Self> {
        check_times(&times)?;
        Ok(Self { params, times })
    }

    pub fn sample(&self, f: &SpectralField) -> Result<Vec<SpectralField>> {
        self.times.par_iter().map(|&t| apply_propagator(f, &self.params, t)).collect()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("time schedule is empty"));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must be strictly increasing"));
    }
    Ok(())
}

/// `0` followed by `t_min * rho^k` up to and including `t_max`.
pub fn geometric_times(t_min: f64, t_max: f64, rho: f64) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && rho > 1.0) {
        return Err(invalid(format!("geometric grid needs 0 < t_min < t_max and rho > 1 (got {t_min}, {t_max}, {rho})")));
    }
    let mut out = vec![0.0];
    let mut t = t_min;
    while t < t_max * (1.0 - 1e-12) {
        out.push(t);
        t *= rho;
    }
    out.push(t_max);
    Ok(out)
}

/// One sample of a dispersive decay curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    pub sup_norm: f64,
    /// Fraction of `L^2` mass in the outer tenth of the box on each side.
    pub boundary_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    pub dispersion: f64,
    pub samples: Vec<DecaySample>,
    /// `L / (2 v)` with `v = 4|A|` the largest group speed on the band.
    pub wrap_time: f64,
}

/// Sup norm of the pure dispersive flow applied to `(Delta_{-1} + Delta_0 + Delta_1) g`.
pub fn dispersive_decay_curve(g: &SpectralField, profile: &DyadicProfile, dispersion: f64, times: &[f64]) -> Result<DecayCurve> {
    check_times(times)?;
    let band = profile.band(g, -1, 1)?;
    let e = band.l2_norm();
    if !(e > 1e-12 * g.l2_norm()) || e == 0.0 {
        return Err(invalid("band-projected field vanishes; input has no energy near |xi| = 1"));
    }
    let grid = g.grid().clone();
    let flow = Semigroup { alpha: 1.0, kappa: 0.0, dispersion };
    let samples = times
        .iter()
        .map(|&t| {
            let r = flow.apply(&band, t)?.to_real_unchecked();
            let sup_norm = r.max_abs();
            Ok(DecaySample { t, sup_norm, boundary_mass: boundary_fraction(&grid, r.samples()) })
        })
        .collect::<Result<Vec<_>>>()?;
    let wrap_time = if dispersion == 0.0 { f64::INFINITY } else { grid.length() / (8.0 * dispersion.abs()) };
    Ok(DecayCurve { dispersion, samples, wrap_time })
}

fn boundary_fraction(grid: &Grid, samples: &[f64]) -> f64 {
    let n = grid.n();
    let edge = n / 10;
    let near = |i: usize| i < edge || i >= n - edge;
    let (mut outer, mut total) = (0.0, 0.0);
    for (idx, v) in samples.iter().enumerate() {
        let w = v * v;
        total += w;
        if near(idx % n) || near(idx / n) {
            outer += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatDecay {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of `-ln(norm)` against `t`.
    pub rate: f64,
}

/// `L^p` decay of `exp(-kappa t Lambda^alpha) Delta_j f` and its fitted exponential rate.
pub fn heat_block_decay(
    f: &SpectralField,
    profile: &DyadicProfile,
    j: i32,
    kappa: f64,
    alpha: f64,
    times: &[f64],
    p: f64,
) -> Result<HeatDecay> {
    check_times(times)?;
    check_exponent(p)?;
    let block = profile.block(f, j)?;
    if block.l2_norm() <= 1e-12 * f.l2_norm() {
        return Err(invalid(format!("block {j} of the input is empty")));
    }
    let heat = Semigroup { alpha, kappa, dispersion: 0.0 };
    let norms = times
        .iter()
        .map(|&t| heat.apply(&block, t)?.to_real_unchecked().lp_norm(p))
        .collect::<Result<Vec<_>>>()?;
    let logs: Vec<f64> = norms.iter().map(|v| -v.ln()).collect();
    let rate = linear_fit(times, &logs).0;
    Ok(HeatDecay { times: times.to_vec(), norms, rate })
}

/// Least-squares `(slope, intercept)` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// True when `(1/alpha)(1 - 2/p) <= 1/r < (1/alpha + 1/4)(1 - 2/p)`.
pub fn strichartz_admissible(alpha: f64, p: f64, r: f64) -> bool {
    let gap = 1.0 - 2.0 / p;
    let inv_r = 1.0 / r;
    gap / alpha <= inv_r * (1.0 + 1e-14) && inv_r < (1.0 / alpha + 0.25) * gap
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrichartzReport {
    pub norm: f64,
    /// Trapezoid error estimate from halving the time grid.
    pub quadrature_err: f64,
    /// Bound on the truncated part beyond `t_max`.
    pub tail_bound: f64,
    pub admissible: bool,
    pub samples: usize,
}

/// Growth factor of the geometric time grid.
pub const TIME_GRID_RATIO: f64 = 1.15;

/// `||T_A(.) f||` in the tilde space `L^r(0, t_max; B^s_{p,2})`.
pub fn strichartz_norm(
    f: &SpectralField,
    profile: &DyadicProfile,
    params: &PhysParams,
    r: f64,
    p: f64,
    s: f64,
    t_max: f64,
) -> Result<StrichartzReport> {
    let besov = BesovSpec::new(p, 2.0, s)?;
    let spec = TimeBesovSpec::new(r, besov, t_max, TimeNormMode::Tilde)?;
    let admissible = strichartz_admissible(params.alpha, p, r);
    let (kmin, kmax) = support_radii(f);
    if kmax == 0.0 {
        return Ok(StrichartzReport { norm: 0.0, quadrature_err: 0.0, tail_bound: 0.0, admissible, samples: 0 });
    }
    let mut fast = 1.0 / (params.kappa * kmax.powf(params.alpha));
    if params.dispersion != 0.0 {
        fast = fast.min(1.0 / params.dispersion.abs());
    }
    let t_min = (1e-4 * fast).min(0.5 * t_max);
    let times = geometric_times(t_min, t_max, TIME_GRID_RATIO)?;
    let sg = Semigroup::from(*params);
    let rows = times
        .iter()
        .map(|&t| profile.block_lp_norms(&sg.apply(f, t)?, p))
        .collect::<Result<Vec<_>>>()?;
    let table = BlockNormTable { p, j_lo: profile.j_lo(), times: times.clone(), norms: rows };
    let norm = time_besov_norm(&table, &spec)?;

    let coarse_idx: Vec<usize> = (0..times.len()).filter(|k| k % 2 == 0 || *k == times.len() - 1).collect();
    let coarse = BlockNormTable {
        p,
        j_lo: table.j_lo,
        times: coarse_idx.iter().map(|&k| times[k]).collect(),
        norms: coarse_idx.iter().map(|&k| table.norms[k].clone()).collect(),
    };
    let quadrature_err = (time_besov_norm(&coarse, &spec)? - norm).abs() / 3.0;
    let tail_bound = table.tail_estimate(&spec, params.kappa, params.alpha, kmin);
    Ok(StrichartzReport { norm, quadrature_err, tail_bound, admissible, samples: times.len() })
}

/// Horizon after which every mode of `f` has decayed by `exp(-decades * ln 10)` in `L^r`.
pub fn dissipative_horizon(f: &SpectralField, params: &PhysParams, r: f64, decades: f64) -> f64 {
    let (kmin, _) = support_radii(f);
    let rate = params.kappa * kmin.max(f.grid().k0()).powf(params.alpha);
    decades * std::f64::consts::LN_10 / (rate * if r.is_finite() { r } else { 1.0 })
}

/// Smallest and largest `|xi|` with a nonzero coefficient.
pub fn support_radii(f: &SpectralField) -> (f64, f64) {
    let g = f.grid();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (idx, c) in f.coeffs().iter().enumerate() {
        if c.norm_sqr() > 0.0 {
            let (a, b) = g.wavevector(idx);
            let r = a.hypot(b);
            if r > 0.0 {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    if hi == 0.0 {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// `(int_0^{t_max} ||Delta_j T(t) f||_2^r dt)^{1/r}` on a time grid, via Plancherel.
pub fn block_l2_time_norm(f: &SpectralField, profile: &DyadicProfile, sg: &Semigroup, j: i32, r: f64, times: &[f64]) -> Result<f64> {
    let block = profile.block(f, j)?;
    let values = times.iter().map(|&t| Ok(sg.apply(&block, t)?.l2_norm())).collect::<Result<Vec<_>>>()?;
    Ok(time_lr(times, &values, r, *times.last().unwrap_or(&0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(32, 2.0 * PI).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        let f = RealField::from_fn(&grid(), |x, y| (x + 2.0 * y).sin()).unwrap().forward();
        let p = PhysParams::new(1.0, 0.7, 3.0).unwrap();
        let out = apply_propagator(&f, &p, 0.0).unwrap();
        assert!(out.sub(&f).unwrap().max_abs() <= 1e-14 * f.max_abs());
        assert!(apply_propagator(&f, &p, -1.0).is_err());
    }

    #[test]
    fn unit_mode_multiplier() {
        let f = RealField::from_fn(&grid(), |x, _| x.cos()).unwrap().forward();
        let (k, a, t) = (0.3, 2.0, 0.8);
        let out = apply_propagator(&f, &PhysParams::new(1.0, k, a).unwrap(), t).unwrap();
        let expect = f.mode(1, 0) * Complex64::from_polar((-k * t).exp(), -a * t);
        assert!((out.mode(1, 0) - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn semigroup_and_unitarity() {
        let f = RealField::from_fn(&grid(), |x, y| (x - y).sin() * (2.0 * y).cos()).unwrap().forward();
        let p = PhysParams::new(0.6, 0.5, 7.0).unwrap();
        let ab = apply_propagator(&f, &p, 0.7).unwrap();
        let two = apply_propagator(&apply_propagator(&f, &p, 0.3).unwrap(), &p, 0.4).unwrap();
        assert!(ab.sub(&two).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
        let q = PhysParams { dispersion: -40.0, ..p };
        let other = apply_propagator(&f, &q, 0.7).unwrap();
        assert!((ab.l2_norm() - other.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn time_grid_shape() {
        let t = geometric_times(1e-3, 1.0, 2.0).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 1e-3);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(geometric_times(1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn single_mode_heat_rate() {
        let g = grid();
        let prof = DyadicProfile::new(&g);
        let f = RealField::from_fn(&g, |x, _| (4.0 * x).sin()).unwrap().forward();
        let times: Vec<f64> = (0..10).map(|k| 0.05 * k as f64).collect();
        let d = heat_block_decay(&f, &prof, 2, 0.5, 1.3, &times, 3.0).unwrap();
        let expect = 0.5 * 4f64.powf(1.3);
        assert!((d.rate - expect).abs() < 1e-6 * expect);
        assert!(heat_block_decay(&f, &prof, 0, 0.5, 1.3, &times, 3.0).is_err());
    }

    #[test]
    fn zero_strichartz() {
        let g = grid();
        let prof = DyadicProfile::new(&g);
        let p = PhysParams::new(1.0, 1.0, 100.0).unwrap();
        let rep = strichartz_norm(&SpectralField::zeros(&g), &prof, &p, 2.5, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(rep.norm, 0.0);
    }

    #[test]
    fn admissibility_window() {
        // alpha = 1, p = 3: 1/3 <= 1/r < 5/12.
        assert!(strichartz_admissible(1.0, 3.0, 3.0));
        assert!(strichartz_admissible(1.0, 3.0, 2.5));
        assert!(!strichartz_admissible(1.0, 3.0, 2.39));
        assert!(!strichartz_admissible(1.0, 3.0, 4.0));
    }
}

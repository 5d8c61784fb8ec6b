use crate::error::Result;
use crate::evolution::FieldSeries;
use crate::littlewood_paley::{time_lr, BesovSpec, DyadicProfile};
use crate::operators::PhysParams;
use crate::propagator::{geometric_times, support_radii, Semigroup};
use crate::spectral::SpectralField;

use super::IndexSet;

/// Split of a trajectory into the regularized linear part
/// `T_A(t) S_{N+3} theta0` and the remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    pub cutoff: i32,
    /// `||(1 - S_{N+3}) theta0||_{H^s}`.
    pub tail_hs: f64,
    /// `||exp(-kappa t Lambda^alpha) (1 - S_{N+3}) theta0||_{L^r(0, inf; H^{s+1-2/p})}`.
    pub initial_gap: f64,
    /// `max_t ||T_A S_{N+3} theta0||_{B^{s+1}_{p,2}} / (2^N ||T_A theta0||_{B^s_{p,2}})` over the probe times.
    pub frequency_ratio: f64,
    /// `||theta(t) - T_A(t) S_{N+3} theta0||_{H^{s+1-2/p}}` at each trajectory sample.
    pub perturbation: Option<Vec<f64>>,
}

/// Largest `N` with `2^N <= (|A|/kappa)^{(s+alpha-2)/(alpha (s+alpha-1))}`, clamped so
/// that `N` is a resolved block; the flag reports whether clamping happened.
pub fn default_cutoff(params: &PhysParams, idx: &IndexSet, profile: &DyadicProfile) -> (i32, bool) {
    let (a, s) = (idx.alpha_f(), idx.s_f());
    let e = (s + a - 2.0) / (a * (s + a - 1.0));
    let raw = (e * (params.dispersion.abs() / params.kappa).log2() + 1e-9).floor();
    let (lo, hi) = (profile.j_lo() as f64, profile.j_hi() as f64);
    let n = raw.clamp(lo, hi);
    (n as i32, n != raw)
}

/// `||exp(-kappa t Lambda^alpha) g||_{L^r(0, inf; H^sigma)}` by Plancherel on a geometric grid.
fn dissipated_lr(g: &SpectralField, params: &PhysParams, sigma: f64, r: f64) -> Result<f64> {
    let (kmin, kmax) = support_radii(g);
    if kmax == 0.0 {
        return Ok(0.0);
    }
    let (a, k) = (params.alpha, params.kappa);
    let t_min = 1e-4 / (k * kmax.powf(a));
    let t_max = 40.0 / (k * kmin.powf(a) * r);
    let times = geometric_times(t_min, t_max, 1.05)?;
    let values: Vec<f64> = times
        .iter()
        .map(|&t| {
            g.weighted_energy(|x, y| {
                let rr = x * x + y * y;
                if rr == 0.0 {
                    0.0
                } else {
                    rr.powf(sigma) * (-2.0 * k * t * rr.powf(0.5 * a)).exp()
                }
            })
            .sqrt()
        })
        .collect();
    Ok(time_lr(&times, &values, r, t_max))
}

/// Regularized linear decomposition at cutoff `n`, with the frequency ratio
/// probed at `probe_times` and the perturbation measured along `trajectory`.
pub fn regularized_linear_decomposition(
    trajectory: Option<&FieldSeries>,
    theta0: &SpectralField,
    n: i32,
    params: &PhysParams,
    idx: &IndexSet,
    profile: &DyadicProfile,
    probe_times: &[f64],
) -> Result<DecompositionReport> {
    let (p, s, r) = (idx.p_f(), idx.s_f(), idx.r_f());
    let sigma = s + 1.0 - 2.0 / p;
    let low = profile.low_pass(theta0, n + 3)?;
    let tail = theta0.sub(&low)?;
    let tail_hs = tail.sobolev_norm(s);
    let initial_gap = dissipated_lr(&tail, params, sigma, r)?;

    let sg = Semigroup::from(*params);
    let (hi_spec, lo_spec) = (BesovSpec::new(p, 2.0, s + 1.0)?, BesovSpec::new(p, 2.0, s)?);
    let mut frequency_ratio: f64 = 0.0;
    for &t in probe_times {
        let num = profile.besov_norm(&sg.apply(&low, t)?, &hi_spec)?;
        let den = (n as f64).exp2() * profile.besov_norm(&sg.apply(theta0, t)?, &lo_spec)?;
        if den > 0.0 {
            frequency_ratio = frequency_ratio.max(num / den);
        }
    }

    let perturbation = trajectory
        .map(|traj| {
            traj.times()
                .iter()
                .enumerate()
                .map(|(k, &t)| Ok(traj.get(k).sub(&sg.apply(&low, t)?.dealias())?.sobolev_norm(sigma)))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(DecompositionReport { cutoff: n, tail_hs, initial_gap, frequency_ratio, perturbation })
}

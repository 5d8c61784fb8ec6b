//! Empirical left-to-right ratios of the bilinear, commutator and
//! Strichartz estimates over field ensembles.
//!
//! Hypotheses are checked in exact rational arithmetic before any field is
//! touched; ratios are reported, never compared against a constant.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::littlewood_paley::{weighted_lq, BesovSpec, DyadicProfile};
use crate::operators::{perp_velocity, product, transport, PhysParams};
use crate::paraproduct::commutator_with_product;
use crate::picard::to_f64;
use crate::propagator::{dissipative_horizon, linear_fit, strichartz_norm, support_radii};
use crate::spectral::{Grid, SpectralField};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn violated(what: &str, value: impl std::fmt::Display) -> Error {
    Error::IndexWindow(format!("hypothesis violated: {what} (got {value})"))
}

/// `2(2/p - 1/2)`, the Sobolev gap between `B_p` and `B_2` in two dimensions.
fn gap(p: &Q) -> Q {
    q(2, 1) * (q(2, 1) / p - q(1, 2))
}

fn check_p(p: &Q) -> Result<()> {
    if p < &q(2, 1) || p > &q(4, 1) {
        return Err(violated("2 <= p <= 4", p));
    }
    Ok(())
}

/// Bilinear product estimate hypotheses.
pub fn check_product_hypotheses(p: &Q, q_: &Q, s1: &Q, s2: &Q) -> Result<()> {
    check_p(p)?;
    if q_ < &Q::one() {
        return Err(violated("q >= 1", q_));
    }
    let e = gap(p);
    if s1 >= &e {
        return Err(violated(&format!("s1 < 2(2/p-1/2) = {e}"), s1));
    }
    if s2 >= &e {
        return Err(violated(&format!("s2 < 2(2/p-1/2) = {e}"), s2));
    }
    if !(s1 + s2).is_positive() {
        return Err(violated("s1 + s2 > 0", s1 + s2));
    }
    Ok(())
}

/// Advection product estimate hypotheses.
pub fn check_advection_hypotheses(p: &Q, s: &Q) -> Result<()> {
    check_p(p)?;
    let (lo, hi) = (q(2, 1) / p, q(4, 1) / p);
    if s <= &lo {
        return Err(violated(&format!("s > 2/p = {lo}"), s));
    }
    if s >= &hi {
        return Err(violated(&format!("s < 4/p = {hi}"), s));
    }
    Ok(())
}

/// Commutator estimate hypotheses.
pub fn check_commutator_hypotheses(p: &Q, s1: &Q, s2: &Q) -> Result<()> {
    check_p(p)?;
    let e = gap(p);
    if s1 <= &e {
        return Err(violated(&format!("s1 > 2(2/p-1/2) = {e}"), s1));
    }
    if s1 >= &(&e + Q::one()) {
        return Err(violated(&format!("s1 < 1 + 2(2/p-1/2) = {}", &e + Q::one()), s1));
    }
    if s2 >= &e {
        return Err(violated(&format!("s2 < 2(2/p-1/2) = {e}"), s2));
    }
    if !(s1 + s2).is_positive() {
        return Err(violated("s1 + s2 > 0", s1 + s2));
    }
    Ok(())
}

/// Strichartz window `(1/alpha)(1-2/p) <= 1/r < (1/alpha + 1/4)(1-2/p)`, `2 < p, r < inf`.
pub fn check_strichartz_hypotheses(alpha: &Q, p: &Q, r: &Q) -> Result<()> {
    if !alpha.is_positive() || alpha > &q(2, 1) {
        return Err(violated("0 < alpha <= 2", alpha));
    }
    if p <= &q(2, 1) {
        return Err(violated("p > 2", p));
    }
    if r <= &q(2, 1) {
        return Err(violated("r > 2", r));
    }
    let d = Q::one() - q(2, 1) / p;
    let lo = &d / alpha;
    let hi = (Q::one() / alpha + q(1, 4)) * &d;
    let inv = r.recip();
    if inv < lo {
        return Err(violated(&format!("1/r >= (1/alpha)(1-2/p) = {lo}"), &inv));
    }
    if inv >= hi {
        return Err(violated(&format!("1/r < (1/alpha+1/4)(1-2/p) = {hi}"), &inv));
    }
    Ok(())
}

/// Summary of left-to-right ratios for one estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioStats {
    pub id: String,
    /// Index tuple rendered as `key=value` pairs.
    pub params: String,
    /// Sorted ratios of the nondegenerate samples.
    pub samples: Vec<f64>,
    /// Pairs skipped because the right-hand side vanished.
    pub n_degenerate: usize,
    /// `max(a/b, b/a)` of the maxima of two runs, once compared.
    pub stability: Option<f64>,
}

impl RatioStats {
    pub fn new(id: &str, params: String, mut samples: Vec<f64>, n_degenerate: usize) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { id: id.into(), params, samples, n_degenerate, stability: None }
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn max(&self) -> f64 {
        self.samples.last().copied().unwrap_or(f64::NAN)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn p95(&self) -> f64 {
        self.quantile(0.95)
    }

    /// Nearest-rank quantile.
    pub fn quantile(&self, level: f64) -> f64 {
        let n = self.samples.len();
        if n == 0 {
            return f64::NAN;
        }
        let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
        self.samples[rank - 1]
    }

    pub fn all_finite_positive(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite() && *v > 0.0)
    }

    /// Pools the samples of two runs of the same estimate.
    pub fn merge(&self, other: &Self) -> Self {
        let mut s = Self::new(&self.id, self.params.clone(), [&self.samples[..], &other.samples[..]].concat(), self.n_degenerate + other.n_degenerate);
        s.stability = match (self.stability, other.stability) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        s
    }

    /// Records the drift of the maximum against another run.
    pub fn with_stability(mut self, other: &Self) -> Self {
        let (a, b) = (self.max(), other.max());
        self.stability = Some((a / b).max(b / a));
        self
    }
}

fn ensemble_grid(ensemble: &[SpectralField], profile: &DyadicProfile) -> Result<()> {
    if ensemble.is_empty() {
        return Err(crate::error::invalid("empty ensemble"));
    }
    if ensemble.iter().any(|f| f.grid() != profile.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn collect(id: &str, params: String, values: Vec<Option<f64>>) -> RatioStats {
    let n_degenerate = values.iter().filter(|v| v.is_none()).count();
    RatioStats::new(id, params, values.into_iter().flatten().collect(), n_degenerate)
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then_some(lhs / rhs)
}

fn besov(profile: &DyadicProfile, f: &SpectralField, p: f64, q: f64, s: f64) -> Result<f64> {
    profile.besov_norm(f, &BesovSpec::new(p, q, s)?)
}

/// `||fg||_{B^{s1+s2-2(2/p-1/2)}_{2,q}} / (||f||_{B^{s1}_{p,q}} ||g||_{B^{s2}_{p,q}})` over all pairs.
pub fn check_product_estimate(
    ensemble: &[SpectralField],
    profile: &DyadicProfile,
    p: &Q,
    q_: &Q,
    s1: &Q,
    s2: &Q,
) -> Result<RatioStats> {
    check_product_hypotheses(p, q_, s1, s2)?;
    ensemble_grid(ensemble, profile)?;
    let (pf, qf, a, b) = (to_f64(p), to_f64(q_), to_f64(s1), to_f64(s2));
    let target = a + b - to_f64(&gap(p));
    let rows = ensemble
        .par_iter()
        .map(|f| Ok((profile.block_lp_norms(f, pf)?, f)))
        .collect::<Result<Vec<_>>>()?;
    let values = pairs(ensemble.len())
        .par_iter()
        .map(|&(i, j)| {
            let rhs = weighted_lq(&rows[i].0, profile.j_lo(), a, qf) * weighted_lq(&rows[j].0, profile.j_lo(), b, qf);
            if rhs == 0.0 {
                return Ok(None);
            }
            let lhs = besov(profile, &product(rows[i].1, rows[j].1)?, 2.0, qf, target)?;
            Ok(ratio(lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect("product", format!("p={p} q={q_} s1={s1} s2={s2}"), values))
}

/// Ratio of `||v . grad f||_{H^{2s-4/p}}` to
/// `||v||_{B^{s-1}_{p,2}} ||f||_{B^{s+1}_{p,2}} + ||v||_{B^s_{p,2}} ||f||_{B^s_{p,2}}`
/// with `v = R^perp theta` over all pairs `(theta, f)` of the ensemble.
pub fn check_advection_product(ensemble: &[SpectralField], profile: &DyadicProfile, p: &Q, s: &Q) -> Result<RatioStats> {
    check_advection_hypotheses(p, s)?;
    ensemble_grid(ensemble, profile)?;
    let (pf, sf) = (to_f64(p), to_f64(s));
    let j0 = profile.j_lo();
    let vec_norm = |a: &[f64], b: &[f64], sigma: f64| weighted_lq(a, j0, sigma, 2.0).hypot(weighted_lq(b, j0, sigma, 2.0));
    let members = ensemble
        .par_iter()
        .map(|f| {
            let (v1, v2) = perp_velocity(f);
            let (n1, n2) = (profile.block_lp_norms(&v1, pf)?, profile.block_lp_norms(&v2, pf)?);
            let nf = profile.block_lp_norms(f, pf)?;
            Ok((v1, v2, vec_norm(&n1, &n2, sf - 1.0), vec_norm(&n1, &n2, sf), nf))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = ensemble.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            let (v1, v2, v_lo, v_hi, _) = &members[i];
            let nf = &members[j].4;
            let rhs = v_lo * weighted_lq(nf, j0, sf + 1.0, 2.0) + v_hi * weighted_lq(nf, j0, sf, 2.0);
            if rhs == 0.0 {
                return Ok(None);
            }
            let lhs = transport(v1, v2, &ensemble[j])?.sobolev_norm(2.0 * sf - 4.0 / pf);
            Ok(ratio(lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect("advection", format!("p={p} s={s}"), values))
}

/// `(sum_j (2^{(s1+s2-2(2/p-1/2)) j} ||[f, Delta_j] g||_2)^2)^{1/2}` for one pair.
pub fn commutator_sum(profile: &DyadicProfile, f: &SpectralField, g: &SpectralField, weight: f64) -> Result<f64> {
    let fg = product(f, g)?;
    let norms = profile
        .block_indices()
        .map(|j| Ok(commutator_with_product(profile, f, j, g, &fg)?.l2_norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_lq(&norms, profile.j_lo(), weight, 2.0))
}

/// Commutator sum over `||f||_{B^{s1}_{p,2}} ||g||_{B^{s2}_{p,2}}` over all pairs.
pub fn check_commutator_estimate(
    ensemble: &[SpectralField],
    profile: &DyadicProfile,
    p: &Q,
    s1: &Q,
    s2: &Q,
) -> Result<RatioStats> {
    check_commutator_hypotheses(p, s1, s2)?;
    ensemble_grid(ensemble, profile)?;
    let (pf, a, b) = (to_f64(p), to_f64(s1), to_f64(s2));
    let weight = a + b - to_f64(&gap(p));
    let rows = ensemble.par_iter().map(|f| profile.block_lp_norms(f, pf)).collect::<Result<Vec<_>>>()?;
    let n = ensemble.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            let rhs = weighted_lq(&rows[i], profile.j_lo(), a, 2.0) * weighted_lq(&rows[j], profile.j_lo(), b, 2.0);
            if rhs == 0.0 {
                return Ok(None);
            }
            Ok(ratio(commutator_sum(profile, &ensemble[i], &ensemble[j], weight)?, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect("commutator", format!("p={p} s1={s1} s2={s2}"), values))
}

/// One Strichartz evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct StrichartzEval {
    pub member: usize,
    pub kappa: f64,
    pub dispersion: f64,
    pub t_max: f64,
    /// `None` when the evaluation was skipped as torus-limited.
    pub norm: Option<f64>,
    pub quadrature_err: f64,
    /// `norm / ||f||_{H^s}`.
    pub normalized: Option<f64>,
    /// `norm` over the right-hand side of the estimate.
    pub ratio: Option<f64>,
    /// Dispersion carries the packet a quarter period before it dissipates,
    /// so the periodic box no longer stands in for the plane.
    pub torus_limited: bool,
}

/// Ratios and fitted exponents of the Strichartz estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct StrichartzStats {
    pub stats: RatioStats,
    pub evaluations: Vec<StrichartzEval>,
    /// `(A, sup_f ||T_A f|| / ||f||_{H^s})` at the first `kappa`, over evaluations that are not torus-limited.
    pub sup_by_a: Vec<(f64, f64)>,
    /// `(kappa, sup_f ||T_A f|| / ||f||_{H^s})` at the first `A`.
    pub sup_by_kappa: Vec<(f64, f64)>,
    pub a_exponent: Option<f64>,
    pub kappa_exponent: Option<f64>,
    /// `(1/alpha)(1-2/p) - 1/r`.
    pub a_exponent_predicted: f64,
    /// `-(1/alpha)(1-2/p)`.
    pub kappa_exponent_predicted: f64,
    /// Largest relative quadrature error estimate over all evaluations.
    pub quadrature_err: f64,
    pub n_torus_limited: usize,
}

/// True when the slowest mode of `f` is displaced by at most a quarter period
/// before its `L^r` contribution has decayed a hundredfold.
pub fn plane_like(f: &SpectralField, params: &PhysParams, r: f64) -> bool {
    let (kmin, kmax) = support_radii(f);
    if kmax == 0.0 || params.dispersion == 0.0 {
        return true;
    }
    let t_h = 100f64.ln() / (r * params.kappa * kmin.powf(params.alpha));
    params.dispersion.abs() * t_h / kmin <= 0.25 * f.grid().length()
}

/// Strichartz ratios `||T_A f||_{L~^r B^s_{p,2}} / (kappa^{-(1/alpha)(1-2/p)} |A|^{(1/alpha)(1-2/p)-1/r} ||f||_{H^s})`.
///
/// Members may live on different grids. Ratios are evaluated at
/// `kappa_grid[0]` over `a_grid` and at `a_grid[0]` over `kappa_grid`; the
/// family suprema are fitted against `A` and `kappa` in log-log scale.
/// Evaluations failing [`plane_like`] are skipped and counted.
pub fn check_strichartz(
    ensemble: &[SpectralField],
    alpha: &Q,
    kappa_grid: &[f64],
    p: &Q,
    r: &Q,
    s: f64,
    a_grid: &[f64],
) -> Result<StrichartzStats> {
    check_strichartz_hypotheses(alpha, p, r)?;
    if ensemble.is_empty() || kappa_grid.is_empty() || a_grid.is_empty() {
        return Err(crate::error::invalid("empty ensemble, kappa grid or A grid"));
    }
    let (af, pf, rf) = (to_f64(alpha), to_f64(p), to_f64(r));
    let d = (1.0 - 2.0 / pf) / af;
    let mut profiles: Vec<(Grid, DyadicProfile)> = Vec::new();
    for f in ensemble {
        if !profiles.iter().any(|(g, _)| g == f.grid()) {
            profiles.push((f.grid().clone(), DyadicProfile::new(f.grid())));
        }
    }
    let profile_of = |g: &Grid| &profiles.iter().find(|(h, _)| h == g).expect("profile built above").1;

    let mut cells: Vec<(f64, f64)> = a_grid.iter().map(|&a| (kappa_grid[0], a)).collect();
    cells.extend(kappa_grid.iter().skip(1).map(|&k| (k, a_grid[0])));
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..ensemble.len()).map(move |m| (c, m))).collect();
    let evaluations = jobs
        .par_iter()
        .map(|&(c, m)| {
            let (kappa, a) = cells[c];
            let f = &ensemble[m];
            let params = PhysParams::new(af, kappa, a)?;
            let t_max = dissipative_horizon(f, &params, rf, 12.0);
            let mut ev = StrichartzEval {
                member: m,
                kappa,
                dispersion: a,
                t_max,
                norm: None,
                quadrature_err: 0.0,
                normalized: None,
                ratio: None,
                torus_limited: !plane_like(f, &params, rf),
            };
            let hs = f.sobolev_norm(s);
            if ev.torus_limited || hs == 0.0 {
                return Ok(ev);
            }
            let rep = strichartz_norm(f, profile_of(f.grid()), &params, rf, pf, s, t_max)?;
            let bound = kappa.powf(-d) * a.abs().powf(d - 1.0 / rf) * hs;
            ev.norm = Some(rep.norm);
            ev.quadrature_err = rep.quadrature_err;
            ev.normalized = Some(rep.norm / hs);
            ev.ratio = Some(rep.norm / bound);
            Ok(ev)
        })
        .collect::<Result<Vec<StrichartzEval>>>()?;

    let per_member = ensemble.len();
    let sup: Vec<f64> = (0..cells.len())
        .map(|c| evaluations[c * per_member..(c + 1) * per_member].iter().filter_map(|e| e.normalized).fold(0.0, f64::max))
        .collect();
    let quadrature_err = evaluations
        .iter()
        .filter_map(|e| e.norm.filter(|&v| v > 0.0).map(|v| e.quadrature_err / v))
        .fold(0.0, f64::max);
    let n_torus_limited = evaluations.iter().filter(|e| e.torus_limited).count();
    let sup_by_a: Vec<(f64, f64)> = a_grid.iter().zip(&sup).map(|(&a, &v)| (a, v)).collect();
    let mut sup_by_kappa = vec![(kappa_grid[0], sup[0])];
    sup_by_kappa.extend(kappa_grid.iter().skip(1).zip(&sup[a_grid.len()..]).map(|(&k, &v)| (k, v)));
    let fit = |pts: &[(f64, f64)]| -> Option<f64> {
        let pts: Vec<(f64, f64)> = pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.abs().ln(), y.ln())).collect();
        (pts.len() >= 2).then(|| {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            linear_fit(&x, &y).0
        })
    };
    let ratios: Vec<Option<f64>> = evaluations.iter().filter(|e| !e.torus_limited).map(|e| e.ratio).collect();
    let params = format!("alpha={alpha} p={p} r={r} s={s}");
    Ok(StrichartzStats {
        a_exponent: fit(&sup_by_a),
        kappa_exponent: fit(&sup_by_kappa),
        sup_by_a,
        sup_by_kappa,
        a_exponent_predicted: d - 1.0 / rf,
        kappa_exponent_predicted: -d,
        quadrature_err,
        n_torus_limited,
        stats: collect("strichartz", params, ratios),
        evaluations,
    })
}

/// A spatially localized annular packet: real spectrum `phi(|m| / radius)` in
/// lattice units, `phi` the dyadic block profile (support
/// `radius/2 <= |m| <= 2 radius`), centred at the origin, unit `L^2` norm.
pub fn ring_packet(grid: &Grid, radius: f64) -> Result<SpectralField> {
    if !(radius > 0.0) || 2.0 * radius > grid.dealias_cutoff_mode() as f64 {
        return Err(crate::error::invalid(format!(
            "packet radius {radius} needs 2 radius <= {} lattice units",
            grid.dealias_cutoff_mode()
        )));
    }
    let n = grid.n();
    let reach = (2.0 * radius).ceil() as i64;
    let mut coeffs = vec![num_complex::Complex64::zero(); grid.len()];
    for m2 in 0..=reach {
        for m1 in -reach..=reach {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let amp = crate::littlewood_paley::block_profile((m1 as f64).hypot(m2 as f64) / radius);
            if amp == 0.0 {
                continue;
            }
            let c = num_complex::Complex64::new(amp, 0.0);
            let flat = |a: i64, b: i64| -> Option<usize> { Some(grid.index_of_mode(b)? * n + grid.index_of_mode(a)?) };
            if let (Some(i), Some(j)) = (flat(m1, m2), flat(-m1, -m2)) {
                coeffs[i] = c;
                coeffs[j] = c.conj();
            }
        }
    }
    let f = SpectralField::new(grid, coeffs)?;
    let norm = f.l2_norm();
    Ok(f.scale(1.0 / norm))
}

/// One ring packet of lattice radius `lattice_radius` placed on tori of
/// side `2 pi lattice_radius / radius` for each physical `radius`, so the
/// members are exact dilations of one another.
pub fn dilated_packet_family(n: usize, lattice_radius: f64, radii: &[f64]) -> Result<Vec<SpectralField>> {
    radii
        .iter()
        .map(|&rho| {
            let grid = Grid::new(n, std::f64::consts::TAU * lattice_radius / rho)?;
            ring_packet(&grid, lattice_radius)
        })
        .collect()
}

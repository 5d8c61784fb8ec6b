use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::littlewood_paley::DyadicProfile;
use crate::operators::PhysParams;
use crate::propagator::{geometric_times, linear_fit, support_radii, Semigroup};
use crate::spectral::SpectralField;

use super::{a0_formula, iterate, lr_of_rows, to_f64, IndexSet, PicardConfig, Q};

/// Contraction outcome of one `(field, A)` cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanCell {
    pub dispersion: f64,
    pub contracts: bool,
    pub max_ratio: f64,
}

/// Cells evaluated for one field, in increasing `A`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContractionGrid {
    pub cells: Vec<ScanCell>,
}

impl ContractionGrid {
    /// Smallest evaluated `A` that contracts together with its successor
    /// (the last grid point only needs to contract itself).
    pub fn threshold(&self, grid_len: usize) -> Option<f64> {
        let c = &self.cells;
        (0..c.len()).find_map(|k| {
            let next_ok = match c.get(k + 1) {
                Some(n) => n.contracts,
                None => k + 1 == grid_len,
            };
            (c[k].contracts && next_ok).then_some(c[k].dispersion)
        })
    }

    /// Describes a contracting cell followed by a failing one, if any.
    pub fn non_monotone(&self) -> Option<String> {
        self.cells.windows(2).find(|w| w[0].contracts && !w[1].contracts).map(|w| {
            format!("contracts at A={} but not at A={}", w[0].dispersion, w[1].dispersion)
        })
    }
}

fn check_grid(a_grid: &[f64]) -> Result<()> {
    if a_grid.is_empty() || a_grid.windows(2).any(|w| w[1] <= w[0]) || a_grid.iter().any(|a| !(a.abs() > 0.0)) {
        return Err(invalid("A grid must be nonempty, nonzero and strictly increasing"));
    }
    Ok(())
}

fn evaluate(
    theta0: &SpectralField,
    idx: &IndexSet,
    params: PhysParams,
    profile: &DyadicProfile,
    picard: &PicardConfig,
) -> Result<ScanCell> {
    let rep = iterate(theta0, idx, &params, profile, picard)?;
    Ok(ScanCell { dispersion: params.dispersion, contracts: rep.contracts(), max_ratio: rep.max_ratio() })
}

/// Scans `A` upwards, stopping once two consecutive grid points contract.
fn scan_until_stable(
    theta0: &SpectralField,
    idx: &IndexSet,
    alpha: f64,
    kappa: f64,
    a_grid: &[f64],
    profile: &DyadicProfile,
    picard: &PicardConfig,
) -> Result<ContractionGrid> {
    let mut grid = ContractionGrid::default();
    for &a in a_grid {
        grid.cells.push(evaluate(theta0, idx, PhysParams::new(alpha, kappa, a)?, profile, picard)?);
        if grid.threshold(usize::MAX).is_some() {
            break;
        }
    }
    Ok(grid)
}

/// Evaluates every grid point.
fn scan_full(
    theta0: &SpectralField,
    idx: &IndexSet,
    alpha: f64,
    kappa: f64,
    a_grid: &[f64],
    profile: &DyadicProfile,
    picard: &PicardConfig,
) -> Result<ContractionGrid> {
    let cells = a_grid
        .par_iter()
        .map(|&a| evaluate(theta0, idx, PhysParams::new(alpha, kappa, a)?, profile, picard))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractionGrid { cells })
}

/// Settings shared by the scans.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub a_grid: Vec<f64>,
    pub picard: PicardConfig,
    /// Constant in front of the predicted threshold.
    pub constant: f64,
}

/// One amplitude of a threshold scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRow {
    pub amplitude: f64,
    pub hs: f64,
    pub hs_minus1: f64,
    pub a0_measured: Option<f64>,
    pub a0_predicted: f64,
    pub first_branch: bool,
    pub anomaly: Option<String>,
    pub grid: ContractionGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Slope of `log A0_measured` against `log c` over first-branch rows.
    pub exponent_measured: Option<f64>,
    /// `alpha (s+alpha-1) / (s+alpha-2)^2`.
    pub exponent_predicted: f64,
    pub monotone: bool,
}

/// Measured threshold of the amplitude family `c theta0`, `c` in `amplitudes`.
pub fn threshold_scan(
    theta0: &SpectralField,
    amplitudes: &[f64],
    idx: &IndexSet,
    kappa: f64,
    profile: &DyadicProfile,
    cfg: &ScanConfig,
) -> Result<ThresholdScan> {
    if idx.critical {
        return Err(invalid("threshold scans need subcritical indices"));
    }
    check_grid(&cfg.a_grid)?;
    let (alpha, s) = (idx.alpha_f(), idx.s_f());
    let mut rows = amplitudes
        .par_iter()
        .map(|&c| {
            let field = theta0.scale(c);
            let grid = scan_until_stable(&field, idx, alpha, kappa, &cfg.a_grid, profile, &cfg.picard)?;
            let (hs, hs_minus1) = (field.sobolev_norm(s), field.sobolev_norm(s - 1.0));
            let (a0_predicted, first_branch) = a0_formula(hs, hs_minus1, idx, cfg.constant);
            let a0_measured = grid.threshold(cfg.a_grid.len());
            let anomaly = grid.non_monotone().or_else(|| a0_measured.is_none().then(|| "no contracting A in grid".into()));
            Ok(ThresholdRow { amplitude: c, hs, hs_minus1, a0_measured, a0_predicted, first_branch, anomaly, grid })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));

    let mut monotone = true;
    for k in 1..rows.len() {
        if let (Some(prev), Some(cur)) = (rows[k - 1].a0_measured, rows[k].a0_measured) {
            if cur < prev {
                monotone = false;
                let note = format!("threshold decreased from {prev} at the previous amplitude");
                rows[k].anomaly = Some(match rows[k].anomaly.take() {
                    Some(a) => format!("{a}; {note}"),
                    None => note,
                });
            }
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.first_branch && r.amplitude > 0.0)
        .filter_map(|r| r.a0_measured.map(|a| (r.amplitude.ln(), a.abs().ln())))
        .collect();
    let exponent_measured = (pts.len() >= 2).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&x, &y).0
    });
    let g = s + alpha - 2.0;
    Ok(ThresholdScan { rows, exponent_measured, exponent_predicted: alpha * (s + alpha - 1.0) / (g * g), monotone })
}

/// Settings of the finite-family experiment in the critical space.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalConfig {
    pub a_grid: Vec<f64>,
    pub n_grid: Vec<i32>,
    pub picard: PicardConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalReport {
    /// `member_tails[m][i] = ||(1 - S_{N_i+3}) f_m||_{H^{2-alpha}}`.
    pub member_tails: Vec<Vec<f64>>,
    pub sup_tails: Vec<f64>,
    /// `member_strichartz[m][i] = ||T_{A_i} f_m||_{L^rho(0, inf; B^{2-alpha}_{p,2})}`.
    pub member_strichartz: Vec<Vec<f64>>,
    pub sup_strichartz: Vec<f64>,
    pub grids: Vec<ContractionGrid>,
    pub member_thresholds: Vec<Option<f64>>,
    /// Smallest `A` at which every member contracts together with the next grid point.
    pub common_a0: Option<f64>,
    pub tails_decreasing: bool,
    pub strichartz_decreasing: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `||T_A(.) f||_{L^r(0, inf; B^sigma_{p,2})}` (plain) on a geometric grid
/// reaching ten e-foldings of the slowest mode.
fn plain_strichartz(f: &SpectralField, params: &PhysParams, profile: &DyadicProfile, p: f64, sigma: f64, r: f64) -> Result<f64> {
    let (kmin, kmax) = support_radii(f);
    if kmax == 0.0 {
        return Ok(0.0);
    }
    let fast = (1.0 / (params.kappa * kmax.powf(params.alpha))).min(1.0 / params.dispersion.abs().max(1e-300));
    let t_max = 10.0 / (params.kappa * kmin.powf(params.alpha));
    let times = geometric_times((1e-3 * fast).min(0.5 * t_max), t_max, 1.1)?;
    let sg = Semigroup::from(*params);
    let rows = times.par_iter().map(|&t| profile.block_lp_norms(&sg.apply(f, t)?, p)).collect::<Result<Vec<_>>>()?;
    let ks: Vec<usize> = (0..times.len()).collect();
    Ok(lr_of_rows(&times, &ks, &rows, profile.j_lo(), sigma, r))
}

/// Tail and Strichartz curves of a finite family, and a common contracting `A`.
pub fn critical_family_experiment(
    family: &[SpectralField],
    idx: &IndexSet,
    kappa: f64,
    profile: &DyadicProfile,
    cfg: &CriticalConfig,
) -> Result<CriticalReport> {
    if !idx.critical {
        return Err(invalid("the finite-family experiment needs critical indices"));
    }
    if family.is_empty() {
        return Err(invalid("empty family"));
    }
    check_grid(&cfg.a_grid)?;
    let (alpha, p, s, rho) = (idx.alpha_f(), idx.p_f(), idx.s_f(), idx.r_f());
    let member_tails = family
        .iter()
        .map(|f| {
            cfg.n_grid
                .iter()
                .map(|&n| Ok(f.sub(&profile.low_pass(f, n + 3)?)?.sobolev_norm(s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let member_strichartz = family
        .iter()
        .map(|f| {
            cfg.a_grid
                .iter()
                .map(|&a| plain_strichartz(f, &PhysParams::new(alpha, kappa, a)?, profile, p, s, rho))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = |m: &Vec<Vec<f64>>, len: usize| -> Vec<f64> {
        (0..len).map(|i| m.iter().map(|row| row[i]).fold(0.0, f64::max)).collect()
    };
    let sup_tails = sup(&member_tails, cfg.n_grid.len());
    let sup_strichartz = sup(&member_strichartz, cfg.a_grid.len());

    let grids = family
        .iter()
        .map(|f| scan_full(f, idx, alpha, kappa, &cfg.a_grid, profile, &cfg.picard))
        .collect::<Result<Vec<_>>>()?;
    let member_thresholds = grids.iter().map(|g| g.threshold(cfg.a_grid.len())).collect();
    let all_contract = |k: usize| grids.iter().all(|g| g.cells[k].contracts);
    let n = cfg.a_grid.len();
    let common_a0 = (0..n).find(|&k| all_contract(k) && (k + 1 == n || all_contract(k + 1))).map(|k| cfg.a_grid[k]);
    Ok(CriticalReport {
        tails_decreasing: strictly_decreasing(&sup_tails),
        strichartz_decreasing: strictly_decreasing(&sup_strichartz),
        member_tails,
        sup_tails,
        member_strichartz,
        sup_strichartz,
        grids,
        member_thresholds,
        common_a0,
    })
}

/// One dispersion value of the vanishing-viscosity scan, with `kappa = A^{-beta}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViscosityRow {
    pub dispersion: f64,
    pub kappa: f64,
    pub bound_hs: f64,
    pub bound_hs_minus1: f64,
    pub conditions_hold: bool,
    pub contracts: bool,
    pub max_ratio: f64,
    pub blowup: bool,
}

/// Bounds `(c0 min{A^{e1}, A^{e2}}, c0 A^{e1})` on `||theta0||_{H^s}` and
/// `||theta0||_{H^{s-1}}` when `kappa = A^{-beta}`, with
/// `e1 = (s+alpha-2-(2-s) beta)/alpha` and
/// `e2 = ((s+alpha-2)^2 - ((2-s)(s+alpha-2)+alpha) beta) / (alpha (s+alpha-1))`.
pub fn viscosity_conditions(idx: &IndexSet, beta: f64, dispersion: f64, c0: f64) -> (f64, f64) {
    let (a, s) = (idx.alpha_f(), idx.s_f());
    let g = s + a - 2.0;
    let e1 = (g - (2.0 - s) * beta) / a;
    let e2 = (g * g - ((2.0 - s) * g + a) * beta) / (a * (s + a - 1.0));
    let amp = dispersion.abs();
    (c0 * amp.powf(e1).min(amp.powf(e2)), c0 * amp.powf(e1))
}

/// Contraction diagnostics along `a_grid` with `kappa = A^{-beta}`.
///
/// `beta = 0` is accepted as the constant-viscosity limit `kappa = 1`.
pub fn vanishing_viscosity_scenario(
    theta0: &SpectralField,
    idx: &IndexSet,
    beta: &Q,
    a_grid: &[f64],
    profile: &DyadicProfile,
    picard: &PicardConfig,
    c0: f64,
) -> Result<Vec<ViscosityRow>> {
    if !beta.is_zero() {
        idx.check_beta(beta)?;
    } else if idx.critical {
        return Err(invalid("the vanishing-viscosity scenario needs subcritical indices"));
    }
    check_grid(a_grid)?;
    let b = to_f64(beta);
    let (alpha, s) = (idx.alpha_f(), idx.s_f());
    let (hs, hs_minus1) = (theta0.sobolev_norm(s), theta0.sobolev_norm(s - 1.0));
    a_grid
        .par_iter()
        .map(|&a| {
            let kappa = a.abs().powf(-b);
            let params = PhysParams::new(alpha, kappa, a)?;
            let rep = iterate(theta0, idx, &params, profile, picard)?;
            let (bound_hs, bound_hs_minus1) = viscosity_conditions(idx, b, a, c0);
            Ok(ViscosityRow {
                dispersion: a,
                kappa,
                bound_hs,
                bound_hs_minus1,
                conditions_hold: hs <= bound_hs && hs_minus1 <= bound_hs_minus1,
                contracts: rep.contracts(),
                max_ratio: rep.max_ratio(),
                blowup: rep.blowup.is_some(),
            })
        })
        .collect()
}

use crate::error::{invalid, Result};
use crate::spectral::SpectralField;

use super::IndexSet;

/// Evaluation of the two-line smallness condition at a given `(kappa, A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeCondition {
    /// Bound that `||theta0||_{H^s}` must not exceed.
    pub bound_hs: f64,
    /// Bound that `||theta0||_{H^{s-1}}` must not exceed.
    pub bound_hs_minus1: f64,
    pub holds: bool,
}

/// Predicted and (optionally) measured dispersion thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub hs: f64,
    pub hs_minus1: f64,
    /// Condition at the requested `A`, if one was given.
    pub condition: Option<SizeCondition>,
    pub a0_predicted: f64,
    /// True when `||theta0||_{H^s}^{(s+alpha-1)/(s+alpha-2)}` is the largest term of the max.
    pub first_branch: bool,
    pub a0_measured: Option<f64>,
    pub exponent: Option<f64>,
}

/// Evaluates
/// `||.||_{H^s} <= c0 kappa^{(2-s)/alpha} min{|A|, kappa^{1/(s+alpha-1)} |A|^{(s+alpha-2)/(s+alpha-1)}}^{(s+alpha-2)/alpha}` and
/// `||.||_{H^{s-1}} <= c0 kappa^{(2-s)/alpha} |A|^{(s+alpha-2)/alpha}`.
pub fn size_condition(hs: f64, hs_minus1: f64, kappa: f64, dispersion: f64, idx: &IndexSet, c0: f64) -> SizeCondition {
    let (a, s) = (idx.alpha_f(), idx.s_f());
    let g = s + a - 2.0;
    let amp = dispersion.abs();
    let pre = c0 * kappa.powf((2.0 - s) / a);
    let inner = amp.min(kappa.powf(1.0 / (s + a - 1.0)) * amp.powf(g / (s + a - 1.0)));
    let bound_hs = pre * inner.powf(g / a);
    let bound_hs_minus1 = pre * amp.powf(g / a);
    SizeCondition { bound_hs, bound_hs_minus1, holds: hs <= bound_hs && hs_minus1 <= bound_hs_minus1 }
}

/// `c * max{H^{(s+alpha-1)/(s+alpha-2)}, H, H_{-1}}^{alpha/(s+alpha-2)}` with
/// `H = ||theta0||_{H^s}` and `H_{-1} = ||theta0||_{H^{s-1}}`; also reports
/// whether the first term attains the max.
pub fn a0_formula(hs: f64, hs_minus1: f64, idx: &IndexSet, c: f64) -> (f64, bool) {
    let (a, s) = (idx.alpha_f(), idx.s_f());
    let g = s + a - 2.0;
    let first = hs.powf((s + a - 1.0) / g);
    let m = first.max(hs).max(hs_minus1);
    (c * m.powf(a / g), m > 0.0 && first >= hs.max(hs_minus1))
}

/// Predicted part of the threshold report; `dispersion` selects an `A` at
/// which the size condition is also evaluated.
pub fn size_threshold(
    theta0: &SpectralField,
    kappa: f64,
    dispersion: Option<f64>,
    idx: &IndexSet,
    c0: f64,
    c: f64,
) -> Result<ThresholdReport> {
    if idx.critical {
        return Err(invalid("size thresholds are defined for subcritical indices"));
    }
    let s = idx.s_f();
    let (hs, hs_minus1) = (theta0.sobolev_norm(s), theta0.sobolev_norm(s - 1.0));
    let (a0_predicted, first_branch) = a0_formula(hs, hs_minus1, idx, c);
    Ok(ThresholdReport {
        hs,
        hs_minus1,
        condition: dispersion.map(|a| size_condition(hs, hs_minus1, kappa, a, idx, c0)),
        a0_predicted,
        first_branch,
        a0_measured: None,
        exponent: None,
    })
}

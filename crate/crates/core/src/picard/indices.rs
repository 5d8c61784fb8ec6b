//! Exact-rational index windows for the well-posedness theory.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a/b"`, an integer, or a plain decimal such as `"1.05"`, exactly.
pub fn parse_rational(text: &str) -> Result<Q> {
    let t = text.trim();
    let bad = || Error::Config(format!("cannot parse {t:?} as a rational number"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(Error::Config(format!("zero denominator in {t:?}")));
        }
        return Ok(Q::new(a, b));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let value = Q::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Open interval of admissible regularities for given `(alpha, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexWindow {
    pub alpha: Q,
    pub p: Q,
    /// Exclusive lower end `2 - alpha`.
    pub s_lower: Q,
    /// Exclusive upper end.
    pub s_upper: Q,
    /// Which of the two upper bounds is active.
    pub upper_bound: &'static str,
    /// `alpha / (1 - 2/p)`.
    pub rho: Q,
    /// Set when the window is empty, naming the bound that closes it.
    pub empty: Option<String>,
}

pub const BOUND_UPPER_A: &str = "s < 1 + 2/p - alpha/2";
pub const BOUND_UPPER_B: &str = "s < 2 - (3/4 + 1/(2p)) alpha";

impl IndexWindow {
    pub fn contains(&self, s: &Q) -> bool {
        s > &self.s_lower && s < &self.s_upper
    }

    /// Time exponent `r = alpha / (s - (1 + 2/p - alpha))`.
    pub fn r_of(&self, s: &Q) -> Q {
        let shift = Q::one() + q(2, 1) / &self.p - &self.alpha;
        &self.alpha / (s - shift)
    }
}

fn check_alpha(alpha: &Q) -> Result<()> {
    if !alpha.is_positive() || alpha > &Q::one() {
        return Err(Error::IndexWindow(format!("alpha = {alpha} violates 0 < alpha <= 1")));
    }
    Ok(())
}

/// Exact admissible `s`-window for `(alpha, p)`.
pub fn admissible_indices(alpha: &Q, p: &Q) -> Result<IndexWindow> {
    check_alpha(alpha)?;
    let two = q(2, 1);
    let p_lo = q(8, 1) / (q(4, 1) - alpha);
    let p_hi = q(4, 1) / (&two - alpha);
    if p < &p_lo {
        return Err(Error::IndexWindow(format!("p = {p} violates p >= 8/(4-alpha) = {p_lo}")));
    }
    if p >= &p_hi {
        return Err(Error::IndexWindow(format!("p = {p} violates p < 4/(2-alpha) = {p_hi}")));
    }
    let s_lower = &two - alpha;
    let a = Q::one() + &two / p - alpha / &two;
    let b = &two - (q(3, 4) + Q::one() / (&two * p)) * alpha;
    let (s_upper, upper_bound) = if a <= b { (a, BOUND_UPPER_A) } else { (b, BOUND_UPPER_B) };
    let rho = alpha / (Q::one() - &two / p);
    let empty = (s_upper <= s_lower).then(|| format!("{upper_bound} = {s_upper} does not exceed 2 - alpha = {s_lower}"));
    Ok(IndexWindow { alpha: alpha.clone(), p: p.clone(), s_lower, s_upper, upper_bound, rho, empty })
}

/// Admissible `(alpha, p, s)` with derived time exponent `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    pub alpha: Q,
    pub p: Q,
    pub s: Q,
    pub r: Q,
    pub critical: bool,
}

impl IndexSet {
    /// Subcritical indices; `s` must lie strictly inside the window.
    pub fn subcritical(alpha: &Q, p: &Q, s: &Q) -> Result<Self> {
        let w = admissible_indices(alpha, p)?;
        if let Some(why) = &w.empty {
            return Err(Error::IndexWindow(format!("empty window: {why}")));
        }
        if s <= &w.s_lower {
            return Err(Error::IndexWindow(format!("s = {s} violates s > 2 - alpha = {}", w.s_lower)));
        }
        if s >= &w.s_upper {
            return Err(Error::IndexWindow(format!("s = {s} violates {} = {}", w.upper_bound, w.s_upper)));
        }
        Ok(Self { alpha: alpha.clone(), p: p.clone(), s: s.clone(), r: w.r_of(s), critical: false })
    }

    /// Critical indices `s = 2 - alpha`, `r = rho`, for `0 < alpha < 1`
    /// and `8/(4-alpha) < p < 4/(2-alpha)`.
    pub fn critical(alpha: &Q, p: &Q) -> Result<Self> {
        check_alpha(alpha)?;
        if alpha >= &Q::one() {
            return Err(Error::IndexWindow(format!("alpha = {alpha} violates alpha < 1 (critical case)")));
        }
        let p_lo = q(8, 1) / (q(4, 1) - alpha);
        if p <= &p_lo {
            return Err(Error::IndexWindow(format!("p = {p} violates p > 8/(4-alpha) = {p_lo} (critical case)")));
        }
        let w = admissible_indices(alpha, p)?;
        Ok(Self { alpha: alpha.clone(), p: p.clone(), s: &q(2, 1) - alpha, r: w.rho, critical: true })
    }

    pub fn alpha_f(&self) -> f64 {
        to_f64(&self.alpha)
    }

    pub fn p_f(&self) -> f64 {
        to_f64(&self.p)
    }

    pub fn s_f(&self) -> f64 {
        to_f64(&self.s)
    }

    pub fn r_f(&self) -> f64 {
        to_f64(&self.r)
    }

    /// `s + alpha - 2`, positive in the subcritical case.
    pub fn gap(&self) -> Q {
        &self.s + &self.alpha - q(2, 1)
    }

    /// Exclusive upper end of the admissible `beta` for `kappa = A^{-beta}`:
    /// `(s+alpha-2)^2 / ((2-s)(s+alpha-2) + alpha)`.
    pub fn beta_upper(&self) -> Q {
        let g = self.gap();
        &g * &g / ((q(2, 1) - &self.s) * &g + &self.alpha)
    }

    pub fn check_beta(&self, beta: &Q) -> Result<()> {
        if self.critical {
            return Err(Error::IndexWindow("the vanishing-viscosity window needs subcritical indices".into()));
        }
        if !beta.is_positive() {
            return Err(Error::IndexWindow(format!("beta = {beta} violates beta > 0")));
        }
        let hi = self.beta_upper();
        if beta >= &hi {
            return Err(Error::IndexWindow(format!(
                "beta = {beta} violates beta < (s+alpha-2)^2/((2-s)(s+alpha-2)+alpha) = {hi}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha={} p={} s={} r={}", self.alpha, self.p, self.s, self.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parsing() {
        assert_eq!(r("21/20"), q(21, 20));
        assert_eq!(r("1.05"), q(21, 20));
        assert_eq!(r("-3"), q(-3, 1));
        assert_eq!(r(" 8/3 "), q(8, 3));
        assert_eq!(r(".5"), q(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn window_alpha_one_p_three() {
        let w = admissible_indices(&r("1"), &r("3")).unwrap();
        assert_eq!(w.s_lower, q(1, 1));
        assert_eq!(w.s_upper, q(13, 12));
        assert_eq!(w.upper_bound, BOUND_UPPER_B);
        assert_eq!(w.r_of(&q(21, 20)), q(60, 23));
        assert_eq!(w.rho, q(3, 1));
        let idx = IndexSet::subcritical(&r("1"), &r("3"), &r("21/20")).unwrap();
        assert_eq!(idx.r, q(60, 23));
    }

    #[test]
    fn left_endpoint_admissible() {
        let w = admissible_indices(&r("1"), &r("8/3")).unwrap();
        assert_eq!(w.s_upper, q(17, 16));
        assert!(w.empty.is_none());
    }

    #[test]
    fn p_bounds_named() {
        let e = admissible_indices(&r("1"), &r("4")).unwrap_err().to_string();
        assert!(e.contains("p < 4/(2-alpha)"), "{e}");
        let e = admissible_indices(&r("1"), &r("5/2")).unwrap_err().to_string();
        assert!(e.contains("p >= 8/(4-alpha)"), "{e}");
        let e = admissible_indices(&r("3/2"), &r("3")).unwrap_err().to_string();
        assert!(e.contains("alpha <= 1"), "{e}");
    }

    #[test]
    fn s_bounds_named() {
        let e = IndexSet::subcritical(&r("1"), &r("3"), &r("1")).unwrap_err().to_string();
        assert!(e.contains("s > 2 - alpha"), "{e}");
        let e = IndexSet::subcritical(&r("1"), &r("3"), &r("13/12")).unwrap_err().to_string();
        assert!(e.contains(BOUND_UPPER_B), "{e}");
    }

    #[test]
    fn critical_indices() {
        let c = IndexSet::critical(&r("1/2"), &r("5/2")).unwrap();
        assert_eq!(c.s, q(3, 2));
        assert_eq!(c.r, q(5, 2));
        assert!(IndexSet::critical(&r("1"), &r("3")).is_err());
        assert!(IndexSet::critical(&r("1/2"), &r("16/7")).is_err());
    }

    #[test]
    fn beta_window() {
        let idx = IndexSet::subcritical(&r("1"), &r("3"), &r("21/20")).unwrap();
        assert_eq!(idx.beta_upper(), q(1, 419));
        assert!(idx.check_beta(&q(1, 500)).is_ok());
        let e = idx.check_beta(&q(1, 419)).unwrap_err().to_string();
        assert!(e.contains("beta <"), "{e}");
        assert!(idx.check_beta(&Q::zero()).is_err());
    }
}

//! Fourier multipliers of the equation: fractional Laplacian, Riesz
//! transforms, the perpendicular velocity and dealiased advection.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::spectral::field::{forward_samples, inverse_pair};
use crate::spectral::SpectralField;

/// Physical parameters: dissipation order, dissipation strength and dispersion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    pub alpha: f64,
    pub kappa: f64,
    pub dispersion: f64,
}

impl PhysParams {
    pub fn new(alpha: f64, kappa: f64, dispersion: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid(format!("alpha = {alpha} must lie in (0, 2]")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa = {kappa} must be positive")));
        }
        if !dispersion.is_finite() {
            return Err(invalid(format!("dispersion A = {dispersion} must be finite")));
        }
        Ok(Self { alpha, kappa, dispersion })
    }

    /// True when `alpha <= 1`, the range covered by the well-posedness theory.
    pub fn in_theory_window(&self) -> bool {
        self.alpha <= 1.0
    }

    /// Parameters of the rescaled solution `lambda^{alpha-1} theta(lambda^alpha t, lambda x)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self { dispersion: self.dispersion * lambda.powf(self.alpha), ..*self }
    }
}

fn radius(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Multiplies by `|xi|^alpha`.
pub fn fractional_laplacian(f: &SpectralField, alpha: f64) -> Result<SpectralField> {
    if !(alpha >= 0.0) {
        return Err(invalid(format!("fractional order {alpha} must be nonnegative")));
    }
    if alpha == 0.0 {
        return Ok(f.apply_real(|_, _| 1.0));
    }
    Ok(f.apply_real(|a, b| radius(a, b).powf(alpha)))
}

/// Riesz transform along `axis` (1 or 2): multiplier `i xi_k / |xi|`.
pub fn riesz(f: &SpectralField, axis: u8) -> Result<SpectralField> {
    match axis {
        1 => Ok(f.apply(|a, b| riesz_symbol(a, a, b))),
        2 => Ok(f.apply(|a, b| riesz_symbol(b, a, b))),
        _ => Err(invalid(format!("axis {axis} must be 1 or 2"))),
    }
}

fn riesz_symbol(k: f64, a: f64, b: f64) -> Complex64 {
    let r = radius(a, b);
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, k / r)
    }
}

/// Velocity `u = (-R_2 theta, R_1 theta)`.
pub fn perp_velocity(theta: &SpectralField) -> (SpectralField, SpectralField) {
    let u1 = theta.apply(|a, b| -riesz_symbol(b, a, b));
    let u2 = theta.apply(|a, b| riesz_symbol(a, a, b));
    (u1, u2)
}

/// Largest `|i xi . u^(xi)|` over the lattice.
pub fn spectral_divergence(u1: &SpectralField, u2: &SpectralField) -> Result<f64> {
    if u1.grid() != u2.grid() {
        return Err(Error::GridMismatch);
    }
    let g = u1.grid();
    Ok((0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (a, b) = g.wavevector(idx);
            (Complex64::new(0.0, a) * u1.coeffs()[idx] + Complex64::new(0.0, b) * u2.coeffs()[idx]).norm()
        })
        .reduce(|| 0.0, f64::max))
}

/// Partial derivative along `axis`: multiplier `i xi_k`.
pub fn derivative(f: &SpectralField, axis: u8) -> Result<SpectralField> {
    match axis {
        1 => Ok(f.apply(|a, _| Complex64::new(0.0, a))),
        2 => Ok(f.apply(|_, b| Complex64::new(0.0, b))),
        _ => Err(invalid(format!("axis {axis} must be 1 or 2"))),
    }
}

/// Pseudo-spectral product of two real fields, dealiased by the two-thirds rule.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if f.max_abs() == 0.0 || g.max_abs() == 0.0 {
        return Ok(SpectralField::zeros(f.grid()));
    }
    let (a, b) = inverse_pair(f, g);
    let prod: Vec<f64> = a.par_iter().zip(&b).map(|(x, y)| x * y).collect();
    let mut out = forward_samples(f.grid(), &prod);
    out.dealias_in_place();
    Ok(out)
}

/// `v . grad f`, dealiased, for an arbitrary velocity `v`.
pub fn transport(v1: &SpectralField, v2: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
    if v1.grid() != f.grid() || v2.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    let d1 = derivative(f, 1)?;
    let d2 = derivative(f, 2)?;
    let (u1, u2) = inverse_pair(v1, v2);
    let (g1, g2) = inverse_pair(&d1, &d2);
    let prod: Vec<f64> = (0..u1.len()).into_par_iter().map(|i| u1[i] * g1[i] + u2[i] * g2[i]).collect();
    let mut out = forward_samples(f.grid(), &prod);
    out.dealias_in_place();
    Ok(out)
}

/// `u . grad theta` with `u` the perpendicular Riesz velocity of `theta`.
pub fn advection(theta: &SpectralField) -> SpectralField {
    let (u1, u2) = perp_velocity(theta);
    transport(&u1, &u2, theta).expect("velocity shares the grid of theta")
}

/// `max |u|` in physical space.
pub fn max_speed(u1: &SpectralField, u2: &SpectralField) -> f64 {
    let (a, b) = inverse_pair(u1, u2);
    a.par_iter().zip(&b).map(|(x, y)| x.hypot(*y)).reduce(|| 0.0, f64::max)
}

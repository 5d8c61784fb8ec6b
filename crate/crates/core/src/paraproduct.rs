//! Bony paraproducts, the remainder and the commutator `[f, Delta_j] g`.
//!
//! Inputs are assumed free of Nyquist content so that the resolved
//! blocks sum to the identity. All products are dealiased.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicProfile;
use crate::operators::product;
use crate::spectral::field::{forward_samples, inverse_pair};
use crate::spectral::SpectralField;

fn check(profile: &DyadicProfile, f: &SpectralField, g: &SpectralField) -> Result<()> {
    if f.grid() != profile.grid() || g.grid() != profile.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `sum_l (sum_{k in window(l)} Delta_k f) * Delta_l g`, dealiased.
fn banded_sum(
    profile: &DyadicProfile,
    f: &SpectralField,
    g: &SpectralField,
    window: impl Fn(i32) -> (i32, i32),
) -> Result<SpectralField> {
    check(profile, f, g)?;
    let grid = profile.grid();
    let fl2 = profile.block_l2_norms(f)?;
    let gl2 = profile.block_l2_norms(g)?;
    let j_lo = profile.j_lo();
    let mut acc = vec![0.0; grid.len()];
    for l in profile.block_indices() {
        if gl2[(l - j_lo) as usize] == 0.0 {
            continue;
        }
        let (lo, hi) = window(l);
        let any = (lo.max(j_lo)..=hi.min(profile.j_hi())).any(|k| fl2[(k - j_lo) as usize] > 0.0);
        if !any {
            continue;
        }
        let low = profile.band(f, lo, hi)?;
        let high = profile.block(g, l)?;
        let (a, b) = inverse_pair(&low, &high);
        acc.par_iter_mut().zip(a.par_iter().zip(&b)).for_each(|(s, (x, y))| *s += x * y);
    }
    let mut out = forward_samples(grid, &acc);
    out.dealias_in_place();
    Ok(out)
}

/// `T_f g = sum_l S_l f Delta_l g`.
pub fn para_low_high(profile: &DyadicProfile, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    banded_sum(profile, f, g, |l| (i32::MIN / 2, l - 3))
}

/// `R(f, g) = sum_l sum_{|k-l| <= 2} Delta_k f Delta_l g`.
pub fn remainder(profile: &DyadicProfile, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    banded_sum(profile, f, g, |l| (l - 2, l + 2))
}

/// `T_f g + R(f, g) + T_g f` and its relative `L^2` distance to the
/// dealiased product `fg`.
pub fn bony_reconstruct(profile: &DyadicProfile, f: &SpectralField, g: &SpectralField) -> Result<(SpectralField, f64)> {
    let sum = para_low_high(profile, f, g)?.add(&remainder(profile, f, g)?)?.add(&para_low_high(profile, g, f)?)?;
    let direct = product(f, g)?;
    let diff = sum.sub(&direct)?.l2_norm();
    let scale = direct.l2_norm();
    let residual = if scale == 0.0 { diff } else { diff / scale };
    Ok((sum, residual))
}

/// `[f, Delta_j] g = f Delta_j g - Delta_j (f g)`.
pub fn commutator(profile: &DyadicProfile, f: &SpectralField, j: i32, g: &SpectralField) -> Result<SpectralField> {
    check(profile, f, g)?;
    let fg = product(f, g)?;
    commutator_with_product(profile, f, j, g, &fg)
}

/// [`commutator`] reusing a precomputed dealiased `fg`.
pub fn commutator_with_product(
    profile: &DyadicProfile,
    f: &SpectralField,
    j: i32,
    g: &SpectralField,
    fg: &SpectralField,
) -> Result<SpectralField> {
    let djg = profile.block(g, j)?;
    product(f, &djg)?.sub(&profile.block(fg, j)?)
}

/// Right-hand side of the five-term paraproduct splitting of the commutator:
/// `[T_f, Delta_j] g + R(f, Delta_j g) + T_{Delta_j g} f - Delta_j R(f, g) - Delta_j T_g f`.
pub fn commutator_pieces(profile: &DyadicProfile, f: &SpectralField, j: i32, g: &SpectralField) -> Result<SpectralField> {
    check(profile, f, g)?;
    let djg = profile.block(g, j)?;
    let tf_djg = para_low_high(profile, f, &djg)?;
    let dj_tf_g = profile.block(&para_low_high(profile, f, g)?, j)?;
    let r_djg = remainder(profile, f, &djg)?;
    let t_djg_f = para_low_high(profile, &djg, f)?;
    let dj_r = profile.block(&remainder(profile, f, g)?, j)?;
    let dj_tg_f = profile.block(&para_low_high(profile, g, f)?, j)?;
    tf_djg.sub(&dj_tf_g)?.add(&r_djg)?.add(&t_djg_f)?.sub(&dj_r)?.sub(&dj_tg_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, RealField};
    use std::f64::consts::PI;

    fn setup() -> (Grid, DyadicProfile) {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let p = DyadicProfile::new(&g);
        (g, p)
    }

    #[test]
    fn sine_square_reconstructs() {
        let (g, prof) = setup();
        let f = RealField::from_fn(&g, |x, _| x.sin()).unwrap().forward();
        let (sum, res) = bony_reconstruct(&prof, &f, &f).unwrap();
        assert!(res < 1e-10);
        let expect = RealField::from_fn(&g, |x, _| x.sin().powi(2)).unwrap().forward();
        assert!(sum.sub(&expect).unwrap().l2_norm() < 1e-10 * expect.l2_norm());
    }

    #[test]
    fn zero_inputs() {
        let (g, prof) = setup();
        let f = RealField::from_fn(&g, |x, y| (x + y).sin()).unwrap().forward();
        let z = SpectralField::zeros(&g);
        assert_eq!(para_low_high(&prof, &f, &z).unwrap().max_abs(), 0.0);
        assert_eq!(commutator(&prof, &f, 2, &z).unwrap().max_abs(), 0.0);
        assert_eq!(bony_reconstruct(&prof, &z, &f).unwrap().1, 0.0);
    }

    #[test]
    fn remainder_of_separated_shells_vanishes() {
        let (g, prof) = setup();
        // |xi| = 1 lives in block 0; |xi| = 16 in block 4 only.
        let f = RealField::from_fn(&g, |x, _| x.cos()).unwrap().forward();
        let h = RealField::from_fn(&g, |_, y| (16.0 * y).sin()).unwrap().forward();
        assert!(remainder(&prof, &f, &h).unwrap().max_abs() <= 1e-12 * f.max_abs() * h.max_abs());
    }

    #[test]
    fn low_high_of_separated_shells_is_full_product() {
        let (g, prof) = setup();
        let f = RealField::from_fn(&g, |x, _| x.cos()).unwrap().forward();
        let h = RealField::from_fn(&g, |_, y| (16.0 * y).sin()).unwrap().forward();
        let t = para_low_high(&prof, &f, &h).unwrap();
        let direct = product(&f, &h).unwrap();
        assert!(t.sub(&direct).unwrap().l2_norm() < 1e-12 * direct.l2_norm());
    }
}

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Grid, RealField, SpectralField};
use crate::error::{invalid, Result};
use crate::littlewood_paley::block_weight;

/// Recipe for a seeded family of random band-limited fields.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    /// Power-law exponent of the expected `|f^(xi)|`.
    pub spectrum_slope: f64,
    /// Dyadic band `(j_min, j_max)`; support is `2^{j_min-1} <= |xi| <= 2^{j_max+1}`.
    pub band: (i32, i32),
}

impl EnsembleSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let (lo, hi) = self.band;
        if self.count == 0 {
            return Err(invalid("ensemble count must be at least 1"));
        }
        if lo > hi {
            return Err(invalid(format!("band ({lo}, {hi}) has j_min > j_max")));
        }
        if !self.spectrum_slope.is_finite() {
            return Err(invalid("spectrum slope must be finite"));
        }
        let outer = (hi as f64 + 1.0).exp2();
        if outer > grid.max_axis_wavenumber() {
            return Err(invalid(format!(
                "band top shell 2^{} = {outer} exceeds the largest resolved wavenumber {}",
                hi + 1,
                grid.max_axis_wavenumber()
            )));
        }
        if outer <= grid.k0() {
            return Err(invalid(format!("band lies entirely below the lattice spacing {}", grid.k0())));
        }
        Ok(())
    }
}

/// Spectral form of [`gaussian_ensemble`].
///
/// Modes are drawn in a fixed lattice order that depends only on the band
/// and the period, so the same seed yields the same functions on any grid
/// fine enough to hold the band.
pub fn gaussian_ensemble_spectral(spec: &EnsembleSpec, grid: &Grid) -> Result<Vec<SpectralField>> {
    spec.validate(grid)?;
    let (lo, hi) = spec.band;
    let k0 = grid.k0();
    let n = grid.n();
    let reach = ((hi as f64 + 1.0).exp2() / k0).ceil() as i64;
    let scale = (n * n) as f64 / std::f64::consts::SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for m2 in 0..=reach {
            for m1 in -reach..=reach {
                if m2 == 0 && m1 <= 0 {
                    continue;
                }
                let r = k0 * (m1 as f64).hypot(m2 as f64);
                let w: f64 = (lo..=hi).map(|j| block_weight(j, r)).sum();
                if w <= 0.0 {
                    continue;
                }
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let c = Complex64::new(a, b) * (scale * w * r.powf(spec.spectrum_slope));
                let (Some(ix), Some(iy)) = (grid.index_of_mode(m1), grid.index_of_mode(m2)) else {
                    continue;
                };
                let (cx, cy) = (grid.index_of_mode(-m1).unwrap_or(0), grid.index_of_mode(-m2).unwrap_or(0));
                coeffs[iy * n + ix] = c;
                coeffs[cy * n + cx] = c.conj();
            }
        }
        out.push(SpectralField::from_raw(grid, coeffs));
    }
    Ok(out)
}

/// Seeded Gaussian random fields with a power-law spectrum in a dyadic band.
pub fn gaussian_ensemble(spec: &EnsembleSpec, grid: &Grid) -> Result<Vec<RealField>> {
    Ok(gaussian_ensemble_spectral(spec, grid)?.iter().map(|f| f.to_real_unchecked()).collect())
}

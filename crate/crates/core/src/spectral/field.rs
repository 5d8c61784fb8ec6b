use num_complex::Complex64;
use rayon::prelude::*;

use super::fft;
use super::grid::Grid;
use crate::error::{invalid, Error, Result};

/// Relative tolerance for the Hermitian check in [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real samples of a mean-zero periodic function.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Grid,
    samples: Vec<f64>,
}

/// Fourier coefficients, unnormalized: `F(xi) = sum_x f(x) e^{-i xi.x}`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl RealField {
    /// Wraps samples, rejecting non-finite values. A mean larger than
    /// `1e-13 * max|samples|` is subtracted; smaller ones are roundoff and
    /// left alone so stored fields round-trip bitwise.
    pub fn new(grid: &Grid, mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mean = row_sums(&samples, grid.n(), |v| v).iter().sum::<f64>() / samples.len() as f64;
        if mean.abs() > 1e-13 * max_abs(&samples) {
            samples.par_iter_mut().for_each(|v| *v -= mean);
        }
        Ok(Self { grid: grid.clone(), samples })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), samples: vec![0.0; grid.len()] }
    }

    /// Samples `f(x1, x2)` at the grid points (mean removed).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (x1, x2) = grid.point(idx);
                f(x1, x2)
            })
            .collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.samples)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_samples(&self.samples, &self.grid, p)
    }

    pub fn forward(&self) -> SpectralField {
        forward_transform(self)
    }

    pub(crate) fn from_raw(grid: &Grid, samples: Vec<f64>) -> Self {
        Self { grid: grid.clone(), samples }
    }
}

impl SpectralField {
    /// Wraps coefficients; the zero mode is cleared.
    pub fn new(grid: &Grid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if let Some(index) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        coeffs[0] = ZERO;
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![ZERO; grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub(crate) fn from_raw(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        Self { grid: grid.clone(), coeffs }
    }

    /// Coefficient at signed lattice mode `(m1, m2)`, zero if not representable.
    pub fn mode(&self, m1: i64, m2: i64) -> Complex64 {
        match (self.grid.index_of_mode(m1), self.grid.index_of_mode(m2)) {
            (Some(ix), Some(iy)) => self.coeffs[iy * self.grid.n() + ix],
            _ => ZERO,
        }
    }

    /// Largest `|F(xi) - conj F(-xi)|` divided by the largest `|F|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let worst = (0..self.coeffs.len())
            .into_par_iter()
            .map(|i| (self.coeffs[i] - self.coeffs[g.conjugate_index(i)].conj()).norm())
            .reduce(|| 0.0, f64::max);
        worst / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.par_iter().map(|c| c.norm()).reduce(|| 0.0, f64::max)
    }

    /// Applies `m(xi1, xi2)` coefficient-wise, then clears the zero mode
    /// and the Nyquist row and column.
    pub fn apply(&self, m: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let mut out = self.clone();
        out.apply_in_place(m);
        out
    }

    pub fn apply_in_place(&mut self, m: impl Fn(f64, f64) -> Complex64 + Sync) {
        let g = self.grid.clone();
        let n = g.n();
        let k = g.axis_wavenumbers();
        self.coeffs.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            if iy == n / 2 {
                row.fill(ZERO);
                return;
            }
            let xi2 = k[iy];
            for (ix, c) in row.iter_mut().enumerate() {
                *c = if ix == n / 2 { ZERO } else { *c * m(k[ix], xi2) };
            }
        });
        self.coeffs[0] = ZERO;
    }

    /// Real-valued multiplier variant of [`apply`](Self::apply).
    pub fn apply_real(&self, m: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        self.apply(|a, b| Complex64::new(m(a, b), 0.0))
    }

    /// Two-thirds rule: zero modes with `max(|m1|, |m2|) > n/3`.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let g = self.grid.clone();
        let n = g.n();
        let cut = g.dealias_cutoff_mode();
        let keep: Vec<bool> = (0..n).map(|i| g.mode(i).is_some_and(|m| m.abs() <= cut)).collect();
        self.coeffs.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            if !keep[iy] {
                row.fill(ZERO);
                return;
            }
            for (ix, c) in row.iter_mut().enumerate() {
                if !keep[ix] {
                    *c = ZERO;
                }
            }
        });
        self.coeffs[0] = ZERO;
    }

    /// True when no coefficient lies outside the two-thirds box.
    pub fn is_dealiased(&self) -> bool {
        self.dealias().coeffs == self.coeffs
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(&self.grid, self.coeffs.par_iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b * c)
    }

    pub(crate) fn zip(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.par_iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self::from_raw(&self.grid, coeffs))
    }

    /// Plancherel-weighted sum `(L^2/n^4) sum w(xi) |F(xi)|^2`.
    pub(crate) fn weighted_energy(&self, w: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let k = g.axis_wavenumbers();
        let rows: Vec<f64> = self
            .coeffs
            .par_chunks(n)
            .enumerate()
            .map(|(iy, row)| {
                row.iter().enumerate().map(|(ix, c)| w(k[ix], k[iy]) * c.norm_sqr()).sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>() * plancherel_constant(g)
    }

    /// `||f||_2` computed from coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_energy(|_, _| 1.0).sqrt()
    }

    /// Homogeneous Sobolev seminorm `(sum |xi|^{2s} |f^|^2)^{1/2}` with Plancherel weights.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.weighted_energy(|a, b| {
            let r2 = a * a + b * b;
            if r2 == 0.0 {
                0.0
            } else {
                r2.powf(s)
            }
        })
        .sqrt()
    }

    /// Real `L^2` inner product of the represented functions.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let rows: Vec<f64> = self
            .coeffs
            .par_chunks(n)
            .zip(other.coeffs.par_chunks(n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
            .collect();
        Ok(rows.iter().sum::<f64>() * plancherel_constant(&self.grid))
    }

    /// Inverse transform without the Hermitian check; keeps the real part.
    pub(crate) fn to_real_unchecked(&self) -> RealField {
        let n = self.grid.n();
        let mut data = self.coeffs.clone();
        fft::plan(n).inverse(&mut data);
        let norm = 1.0 / (n * n) as f64;
        RealField::from_raw(&self.grid, data.par_iter().map(|c| c.re * norm).collect())
    }

    pub fn inverse(&self) -> Result<RealField> {
        inverse_transform(self)
    }
}

/// Plancherel constant: `||f||_2^2 = (L^2 / n^4) sum |F|^2`.
pub fn plancherel_constant(grid: &Grid) -> f64 {
    let n2 = (grid.n() * grid.n()) as f64;
    grid.length() * grid.length() / (n2 * n2)
}

/// Forward transform; the output is made exactly Hermitian by averaging
/// each coefficient with the conjugate of its mirror.
pub fn forward_transform(f: &RealField) -> SpectralField {
    forward_samples(&f.grid, &f.samples)
}

/// Inverse transform; fails if the spectrum is not Hermitian to [`HERMITIAN_TOL`].
pub fn inverse_transform(f: &SpectralField) -> Result<RealField> {
    let asym = f.hermitian_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: asym, scale: f.max_abs() });
    }
    Ok(f.to_real_unchecked())
}

/// Inverts two Hermitian spectra with one complex FFT.
pub(crate) fn inverse_pair(a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
    let n = a.grid.n();
    let i = Complex64::new(0.0, 1.0);
    let mut data: Vec<Complex64> = a.coeffs.par_iter().zip(&b.coeffs).map(|(x, y)| x + i * y).collect();
    fft::plan(n).inverse(&mut data);
    let norm = 1.0 / (n * n) as f64;
    data.par_iter().map(|c| (c.re * norm, c.im * norm)).unzip()
}

/// Forward transform of raw real samples (no mean removal, zero mode cleared).
pub(crate) fn forward_samples(grid: &Grid, samples: &[f64]) -> SpectralField {
    let mut data: Vec<Complex64> = samples.par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::plan(grid.n()).forward(&mut data);
    let sym = (0..data.len())
        .into_par_iter()
        .map(|i| 0.5 * (data[i] + data[grid.conjugate_index(i)].conj()))
        .collect::<Vec<_>>();
    let mut out = SpectralField::from_raw(grid, sym);
    out.coeffs[0] = ZERO;
    out
}

/// Composite rectangle rule for `(int |f|^p)^{1/p}`; `p = inf` gives `max |f|`.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("Lebesgue exponent p = {p} must be >= 1")));
    }
    Ok(())
}

pub(crate) fn lp_norm_samples(samples: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let m = max_abs(samples);
    if p.is_infinite() || m == 0.0 {
        return Ok(m);
    }
    let sum: f64 = if p == 2.0 {
        row_sums(samples, grid.n(), |v| (v / m) * (v / m)).iter().sum()
    } else {
        row_sums(samples, grid.n(), |v| (v.abs() / m).powf(p)).iter().sum()
    };
    Ok(m * (sum * grid.cell_area()).powf(1.0 / p))
}

fn max_abs(v: &[f64]) -> f64 {
    v.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max)
}

// Row-wise partial sums in parallel, combined sequentially so the result
// does not depend on the thread count.
fn row_sums(v: &[f64], n: usize, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    v.par_chunks(n).map(|row| row.iter().map(|&x| f(x)).sum()).collect()
}

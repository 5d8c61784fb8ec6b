use num_complex::Complex64;

use super::{Grid, SpectralField};

/// Half-plane storage of a dealiased Hermitian spectrum.
///
/// Keeps modes with `0 <= m2 <= n/3` and `|m1| <= n/3`, about a fifth of
/// the full array; the rest follows from the two-thirds rule and symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSpectrum {
    cut: i64,
    data: Vec<Complex64>,
}

impl CompactSpectrum {
    pub fn pack(f: &SpectralField) -> Self {
        let g = f.grid();
        let cut = g.dealias_cutoff_mode();
        let width = (2 * cut + 1) as usize;
        let mut data = Vec::with_capacity(width * (cut as usize + 1));
        for m2 in 0..=cut {
            for m1 in -cut..=cut {
                data.push(f.mode(m1, m2));
            }
        }
        Self { cut, data }
    }

    pub fn unpack(&self, grid: &Grid) -> SpectralField {
        let n = grid.n();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        let width = (2 * self.cut + 1) as usize;
        for m2 in 0..=self.cut {
            for m1 in -self.cut..=self.cut {
                if m2 == 0 && m1 <= 0 {
                    continue;
                }
                let v = self.data[m2 as usize * width + (m1 + self.cut) as usize];
                let (ix, iy) = (m1.rem_euclid(n as i64) as usize, m2 as usize);
                let (cx, cy) = ((-m1).rem_euclid(n as i64) as usize, (-m2).rem_euclid(n as i64) as usize);
                coeffs[iy * n + ix] = v;
                coeffs[cy * n + cx] = v.conj();
            }
        }
        SpectralField::from_raw(grid, coeffs)
    }

    /// `sum_k w_k * parts_k` over compact arrays of the same grid.
    pub fn combine(parts: &[(&CompactSpectrum, f64)]) -> Self {
        let first = parts[0].0;
        let mut data = vec![Complex64::new(0.0, 0.0); first.data.len()];
        for (p, w) in parts {
            for (d, v) in data.iter_mut().zip(&p.data) {
                *d += v * *w;
            }
        }
        Self { cut: first.cut, data }
    }

    /// `sum_k w_k * D(s_k) parts_k` with `D(s)` the dispersive multiplier
    /// `exp(-i dispersion s xi_1 / |xi|)`, which depends on the mode direction only.
    pub fn combine_dispersed(parts: &[(&CompactSpectrum, f64, f64)], dispersion: f64) -> Self {
        let first = parts[0].0;
        let cut = first.cut;
        let width = (2 * cut + 1) as usize;
        let mut data = vec![Complex64::new(0.0, 0.0); first.data.len()];
        for (i, d) in data.iter_mut().enumerate() {
            let (m1, m2) = ((i % width) as i64 - cut, (i / width) as i64);
            let r = (m1 as f64).hypot(m2 as f64);
            let omega = if r == 0.0 { 0.0 } else { -dispersion * m1 as f64 / r };
            for (p, w, s) in parts {
                *d += p.data[i] * Complex64::from_polar(*w, omega * s);
            }
        }
        Self { cut, data }
    }
}

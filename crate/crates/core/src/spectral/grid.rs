use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Square periodic grid on `[0, L)^2` with `n` points per axis.
///
/// Flat storage is row-major: index `iy * n + ix`, where `ix` runs along
/// the first coordinate `x1 = ix * L / n`. Spectral arrays use the same
/// layout, with index `i` mapped to the signed lattice mode
/// `i` for `i < n/2`, `i - n` for `i > n/2`. The Nyquist index `n/2`
/// is kept at zero by every multiplier.
#[derive(Clone, Debug)]
pub struct Grid {
    inner: Arc<GridInner>,
}

#[derive(Debug)]
struct GridInner {
    n: usize,
    length: f64,
    /// Wavenumber along one axis for every index (Nyquist entry is 0).
    axis_k: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and at least 4")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length = {length} must be positive")));
        }
        let k0 = 2.0 * PI / length;
        let axis_k = (0..n).map(|i| mode_of(i, n).map_or(0.0, |m| k0 * m as f64)).collect();
        Ok(Self { inner: Arc::new(GridInner { n, length, axis_k }) })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Area of one quadrature cell, `(L/n)^2`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    /// Lattice spacing in wavenumber space, `2*pi/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Signed lattice mode for an axis index, `None` at Nyquist.
    pub fn mode(&self, i: usize) -> Option<i64> {
        mode_of(i, self.inner.n)
    }

    /// Axis index holding signed mode `m`, if it is representable.
    pub fn index_of_mode(&self, m: i64) -> Option<usize> {
        let n = self.inner.n as i64;
        if m.abs() >= n / 2 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    /// Wavenumbers along one axis; entry `i` is `k0 * mode(i)` (0 at Nyquist).
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.inner.axis_k
    }

    /// `(xi1, xi2)` at flat index `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let n = self.inner.n;
        (self.inner.axis_k[idx % n], self.inner.axis_k[idx / n])
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let n = self.inner.n;
        idx % n == n / 2 || idx / n == n / 2
    }

    /// Flat index of the mode `-xi`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let (iy, ix) = (idx / n, idx % n);
        ((n - iy) % n) * n + (n - ix) % n
    }

    /// Largest retained signed mode under the two-thirds rule.
    pub fn dealias_cutoff_mode(&self) -> i64 {
        (self.inner.n / 3) as i64
    }

    /// Largest retained wavenumber magnitude along an axis after dealiasing.
    pub fn dealias_cutoff(&self) -> f64 {
        self.k0() * self.dealias_cutoff_mode() as f64
    }

    /// Largest representable axis wavenumber, `k0 * (n/2 - 1)`.
    pub fn max_axis_wavenumber(&self) -> f64 {
        self.k0() * (self.inner.n / 2 - 1) as f64
    }

    /// Physical coordinate `(x1, x2)` of flat index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.inner.n;
        let dx = self.dx();
        ((idx % n) as f64 * dx, (idx / n) as f64 * dx)
    }
}

fn mode_of(i: usize, n: usize) -> Option<i64> {
    let half = n / 2;
    match i.cmp(&half) {
        std::cmp::Ordering::Less => Some(i as i64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(i as i64 - n as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(2, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn mode_layout() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let modes: Vec<_> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(
            modes,
            vec![Some(0), Some(1), Some(2), Some(3), None, Some(-3), Some(-2), Some(-1)]
        );
        assert_eq!(g.index_of_mode(-1), Some(7));
        assert_eq!(g.index_of_mode(4), None);
        assert_eq!(g.axis_wavenumbers()[5], -3.0);
    }

    #[test]
    fn conjugate_is_involution() {
        let g = Grid::new(8, 1.0).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.conjugate_index(g.conjugate_index(idx)), idx);
        }
        assert_eq!(g.conjugate_index(1), 7);
        assert_eq!(g.conjugate_index(0), 0);
    }

    #[test]
    fn dealias_cutoff() {
        let g = Grid::new(256, 2.0 * PI).unwrap();
        assert_eq!(g.dealias_cutoff_mode(), 85);
    }
}

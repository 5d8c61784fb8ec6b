//! Two-dimensional complex FFT on square grids.
//!
//! Rows are transformed in parallel, the array is transposed blockwise,
//! rows are transformed again and the result is transposed back. Plans are
//! cached per size and shared; scratch buffers are per call and per worker.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const TRANSPOSE_BLOCK: usize = 32;

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) fn plan(n: usize) -> Arc<Fft2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Fft2 {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Fft2 {
    /// Unnormalized forward transform, `sum_x f(x) e^{-i k x}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.process(&self.forward, data);
    }

    /// Unnormalized inverse transform (no `1/n^2` factor).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.process(&self.inverse, data);
    }

    fn process(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        rows(fft, n, data);
        transpose(data, &mut buf, n);
        rows(fft, n, &mut buf);
        transpose(&buf, data, n);
    }
}

fn rows(fft: &Arc<dyn Fft<f64>>, n: usize, data: &mut [Complex64]) {
    let rows_per_task = (4096 / n).max(1);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n * rows_per_task).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, chunk| fft.process_with_scratch(chunk, scratch),
    );
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    let block = TRANSPOSE_BLOCK.min(n);
    dst.par_chunks_mut(n * block).enumerate().for_each(|(b, out)| {
        let j0 = b * block;
        let rows = out.len() / n;
        for i in 0..n {
            let row = &src[i * n + j0..i * n + j0 + rows];
            for (dj, v) in row.iter().enumerate() {
                out[dj * n + i] = *v;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Direct O(n^4) DFT used as the reference.
    fn naive(data: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for ky in 0..n {
            for kx in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..n {
                    for x in 0..n {
                        let ph = sign * 2.0 * PI * ((kx * x + ky * y) % n) as f64 / n as f64;
                        acc += data[y * n + x] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[ky * n + kx] = acc;
            }
        }
        out
    }

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n * n)
            .map(|i| Complex64::new(((i * 37 % 11) as f64).sin(), ((i * 13 % 7) as f64).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[4usize, 6, 12, 40] {
            let data = sample(n);
            let mut fast = data.clone();
            plan(n).forward(&mut fast);
            let slow = naive(&data, n, -1.0);
            let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * (n * n) as f64, "n={n} err={err}");

            let mut back = data.clone();
            plan(n).inverse(&mut back);
            let slow = naive(&data, n, 1.0);
            let err = back.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * (n * n) as f64, "n={n} err={err}");
        }
    }

    #[test]
    fn transpose_roundtrip_non_multiple_of_block() {
        let n = 70;
        let data = sample(n);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(&data, &mut t, n);
        assert_eq!(t[3 * n + 5], data[5 * n + 3]);
        let mut back = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(&t, &mut back, n);
        assert_eq!(back, data);
    }
}

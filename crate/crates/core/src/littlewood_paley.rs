//! Dyadic decomposition, Besov norms and space-time Besov norms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::spectral::field::{check_exponent, inverse_pair, lp_norm_samples, plancherel_constant};
use crate::spectral::{Grid, SpectralField};

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, `C^inf` in between.
pub fn smooth_step(r: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let a = h(2.0 - r);
    a / (a + h(r - 1.0))
}

/// Radial block profile supported on `[1/2, 2]`; its dyadic dilates sum to one.
pub fn block_profile(r: f64) -> f64 {
    smooth_step(r) - smooth_step(2.0 * r)
}

/// Weight of block `j` at radius `r`.
pub fn block_weight(j: i32, r: f64) -> f64 {
    block_profile(r * (-j as f64).exp2())
}

/// Spatial Besov exponents `(p, q, s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovSpec {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl BesovSpec {
    pub fn new(p: f64, q: f64, s: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        if !s.is_finite() {
            return Err(invalid(format!("regularity s = {s} must be finite")));
        }
        Ok(Self { p, q, s })
    }

    /// `H^s` as `B^s_{2,2}`.
    pub fn sobolev(s: f64) -> Self {
        Self { p: 2.0, q: 2.0, s }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeNormMode {
    /// `L^r` in time of the Besov norm.
    Plain,
    /// Time `L^r` per block first, then `l^q` over blocks.
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBesovSpec {
    pub r: f64,
    pub besov: BesovSpec,
    pub t_max: f64,
    pub mode: TimeNormMode,
}

impl TimeBesovSpec {
    pub fn new(r: f64, besov: BesovSpec, t_max: f64, mode: TimeNormMode) -> Result<Self> {
        check_exponent(r)?;
        if !(t_max > 0.0) {
            return Err(invalid(format!("t_max = {t_max} must be positive")));
        }
        Ok(Self { r, besov, t_max, mode })
    }
}

#[derive(Clone, Debug)]
struct Block {
    idx: Vec<u32>,
    weight: Vec<f64>,
}

/// Dyadic blocks restricted to the wavevectors a grid resolves.
///
/// Each block stores the flat indices where its weight is nonzero, so
/// projections and `L^2` block norms cost the size of the block.
#[derive(Clone, Debug)]
pub struct DyadicProfile {
    grid: Grid,
    j_lo: i32,
    blocks: Vec<Block>,
}

impl DyadicProfile {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let kmin = grid.k0();
        let kmax = grid.max_axis_wavenumber() * std::f64::consts::SQRT_2;
        let scan_lo = kmin.log2().floor() as i32 - 1;
        let scan_hi = kmax.log2().ceil() as i32 + 1;
        let width = (scan_hi - scan_lo + 1) as usize;

        let per_row: Vec<Vec<Vec<(u32, f64)>>> = (0..n)
            .into_par_iter()
            .map(|iy| {
                let mut local = vec![Vec::new(); width];
                if iy == n / 2 {
                    return local;
                }
                let k = grid.axis_wavenumbers();
                for ix in 0..n {
                    if ix == n / 2 || (ix == 0 && iy == 0) {
                        continue;
                    }
                    let r = k[ix].hypot(k[iy]);
                    let c = r.log2().floor() as i32;
                    for j in (c - 1)..=(c + 1) {
                        let w = block_weight(j, r);
                        if w > 0.0 {
                            local[(j - scan_lo) as usize].push(((iy * n + ix) as u32, w));
                        }
                    }
                }
                local
            })
            .collect();

        let mut blocks: Vec<Block> = (0..width).map(|_| Block { idx: Vec::new(), weight: Vec::new() }).collect();
        for row in per_row {
            for (b, entries) in row.into_iter().enumerate() {
                for (i, w) in entries {
                    blocks[b].idx.push(i);
                    blocks[b].weight.push(w);
                }
            }
        }
        let first = blocks.iter().position(|b| !b.idx.is_empty()).unwrap_or(0);
        let last = blocks.iter().rposition(|b| !b.idx.is_empty()).unwrap_or(0);
        let blocks = blocks.drain(first..=last).collect();
        Self { grid: grid.clone(), j_lo: scan_lo + first as i32, blocks }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Lowest block index with resolved support.
    pub fn j_lo(&self) -> i32 {
        self.j_lo
    }

    /// Highest block index with resolved support.
    pub fn j_hi(&self) -> i32 {
        self.j_lo + self.blocks.len() as i32 - 1
    }

    pub fn block_indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_lo()..=self.j_hi()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn block_at(&self, j: i32) -> Option<&Block> {
        if j < self.j_lo {
            return None;
        }
        self.blocks.get((j - self.j_lo) as usize)
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Delta_j f`. Blocks outside the resolved range give the zero field.
    pub fn block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        if let Some(block) = self.block_at(j) {
            let src = f.coeffs();
            for (&i, &w) in block.idx.iter().zip(&block.weight) {
                out[i as usize] = src[i as usize] * w;
            }
        }
        Ok(SpectralField::from_raw(&self.grid, out))
    }

    /// `S_j f`, the sum of `Delta_k f` over `k <= j - 3`.
    pub fn low_pass(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.combine(f, |k| if k <= j - 3 { 1.0 } else { 0.0 })
    }

    /// Sum of `Delta_k f` over `lo <= k <= hi`.
    pub fn band(&self, f: &SpectralField, lo: i32, hi: i32) -> Result<SpectralField> {
        self.combine(f, |k| if (lo..=hi).contains(&k) { 1.0 } else { 0.0 })
    }

    /// Applies the multiplier `sum_k c(k) phi_k(xi)`.
    pub fn combine(&self, f: &SpectralField, c: impl Fn(i32) -> f64) -> Result<SpectralField> {
        self.check_grid(f)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let src = f.coeffs();
        for (b, block) in self.blocks.iter().enumerate() {
            let ck = c(self.j_lo + b as i32);
            if ck == 0.0 {
                continue;
            }
            for (&i, &w) in block.idx.iter().zip(&block.weight) {
                out[i as usize] += src[i as usize] * (ck * w);
            }
        }
        Ok(SpectralField::from_raw(&self.grid, out))
    }

    /// Pointwise `sum_j phi_j(xi)` over resolved blocks at flat index `idx`.
    pub fn partition_sum(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.grid.len()];
        for block in &self.blocks {
            for (&i, &w) in block.idx.iter().zip(&block.weight) {
                total[i as usize] += w;
            }
        }
        total
    }

    /// `||Delta_j f||_2` for every resolved block, via Plancherel.
    pub fn block_l2_norms(&self, f: &SpectralField) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        let c = plancherel_constant(&self.grid);
        let src = f.coeffs();
        Ok(self
            .blocks
            .par_iter()
            .map(|b| {
                let e: f64 = b.idx.iter().zip(&b.weight).map(|(&i, &w)| w * w * src[i as usize].norm_sqr()).sum();
                (e * c).sqrt()
            })
            .collect())
    }

    /// `||Delta_j f||_p` for every resolved block.
    pub fn block_lp_norms(&self, f: &SpectralField, p: f64) -> Result<Vec<f64>> {
        check_exponent(p)?;
        if p == 2.0 {
            return self.block_l2_norms(f);
        }
        let l2 = self.block_l2_norms(f)?;
        let live: Vec<usize> = (0..l2.len()).filter(|&b| l2[b] > 0.0).collect();
        let mut norms = vec![0.0; l2.len()];
        for pair in live.chunks(2) {
            let a = self.block(f, self.j_lo + pair[0] as i32)?;
            let b = match pair.get(1) {
                Some(&k) => self.block(f, self.j_lo + k as i32)?,
                None => SpectralField::zeros(&self.grid),
            };
            let (ra, rb) = inverse_pair(&a, &b);
            norms[pair[0]] = lp_norm_samples(&ra, &self.grid, p)?;
            if let Some(&k) = pair.get(1) {
                norms[k] = lp_norm_samples(&rb, &self.grid, p)?;
            }
        }
        Ok(norms)
    }

    pub fn besov_norm(&self, f: &SpectralField, spec: &BesovSpec) -> Result<f64> {
        let norms = self.block_lp_norms(f, spec.p)?;
        Ok(weighted_lq(&norms, self.j_lo, spec.s, spec.q))
    }

    /// `H^s` seminorm computed through the blocks.
    pub fn sobolev_norm(&self, f: &SpectralField, s: f64) -> Result<f64> {
        self.besov_norm(f, &BesovSpec::sobolev(s))
    }
}

/// `l^q` norm over blocks of `2^{js} * norms[j - j_lo]`.
pub fn weighted_lq(norms: &[f64], j_lo: i32, s: f64, q: f64) -> f64 {
    let terms = norms.iter().enumerate().map(|(b, v)| ((j_lo + b as i32) as f64 * s).exp2() * v);
    lq(terms, q)
}

fn lq(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else if q == 2.0 {
        terms.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        terms.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Per-block `L^p` norms sampled in time.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockNormTable {
    pub p: f64,
    pub j_lo: i32,
    pub times: Vec<f64>,
    /// `norms[k][b]` is `||Delta_{j_lo + b} f(times[k])||_p`.
    pub norms: Vec<Vec<f64>>,
}

impl BlockNormTable {
    pub fn new(profile: &DyadicProfile, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self { p, j_lo: profile.j_lo(), times: Vec::new(), norms: Vec::new() })
    }

    pub fn from_fields(profile: &DyadicProfile, p: f64, times: &[f64], fields: &[SpectralField]) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(invalid("times and fields differ in length"));
        }
        let mut table = Self::new(profile, p)?;
        for (t, f) in times.iter().zip(fields) {
            table.push(profile, *t, f)?;
        }
        Ok(table)
    }

    pub fn push(&mut self, profile: &DyadicProfile, t: f64, f: &SpectralField) -> Result<()> {
        if self.times.last().is_some_and(|&last| t < last) {
            return Err(invalid("sample times must be nondecreasing"));
        }
        self.norms.push(profile.block_lp_norms(f, self.p)?);
        self.times.push(t);
        Ok(())
    }

    pub fn push_norms(&mut self, t: f64, norms: Vec<f64>) {
        self.times.push(t);
        self.norms.push(norms);
    }

    /// Spatial Besov norm at every sample time.
    pub fn besov_series(&self, s: f64, q: f64) -> Vec<f64> {
        self.norms.iter().map(|row| weighted_lq(row, self.j_lo, s, q)).collect()
    }

    /// Bound for the part of the time integral beyond `spec.t_max`,
    /// assuming every block decays at least like `exp(-kappa kmin^alpha t)`.
    pub fn tail_estimate(&self, spec: &TimeBesovSpec, kappa: f64, alpha: f64, kmin: f64) -> f64 {
        let rate = kappa * kmin.powf(alpha);
        let last = self.besov_series(spec.besov.s, spec.besov.q).last().copied().unwrap_or(0.0);
        if spec.r.is_infinite() || rate <= 0.0 {
            return last;
        }
        last * (spec.r * rate).powf(-1.0 / spec.r)
    }
}

/// `L^r(0, t_max; B^s_{p,q})` (plain) or its tilde variant from a table.
pub fn time_besov_norm(table: &BlockNormTable, spec: &TimeBesovSpec) -> Result<f64> {
    if table.times.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    if spec.besov.p != table.p {
        return Err(invalid(format!("table holds L^{} block norms, spec asks for L^{}", table.p, spec.besov.p)));
    }
    let last = *table.times.last().unwrap_or(&0.0);
    if spec.t_max > last * (1.0 + 1e-12) {
        return Err(invalid(format!("t_max = {} beyond last sample {last}", spec.t_max)));
    }
    let (s, q, r) = (spec.besov.s, spec.besov.q, spec.r);
    match spec.mode {
        TimeNormMode::Plain => {
            let series = table.besov_series(s, q);
            Ok(time_lr(&table.times, &series, r, spec.t_max))
        }
        TimeNormMode::Tilde => {
            let nb = table.norms.first().map_or(0, Vec::len);
            let per_block: Vec<f64> = (0..nb)
                .map(|b| {
                    let series: Vec<f64> = table.norms.iter().map(|row| row[b]).collect();
                    time_lr(&table.times, &series, r, spec.t_max)
                })
                .collect();
            Ok(weighted_lq(&per_block, table.j_lo, s, q))
        }
    }
}

/// Trapezoid rule for `(int_0^{t_max} v^r dt)^{1/r}` on a sampled series;
/// `r = inf` takes the sup over samples with `t <= t_max`.
pub fn time_lr(times: &[f64], values: &[f64], r: f64, t_max: f64) -> f64 {
    if r.is_infinite() {
        return times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t <= t_max * (1.0 + 1e-12))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        let (t0, t1) = (times[k - 1], times[k]);
        if t0 >= t_max {
            break;
        }
        let (f0, mut f1) = (values[k - 1].powf(r), values[k].powf(r));
        let mut hi = t1;
        if t1 > t_max {
            let w = (t_max - t0) / (t1 - t0);
            f1 = f0 + w * (f1 - f0);
            hi = t_max;
        }
        acc += 0.5 * (hi - t0) * (f0 + f1);
    }
    acc.powf(1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn profile_support_and_range() {
        assert_eq!(block_profile(0.5), 0.0);
        assert_eq!(block_profile(2.0), 0.0);
        assert_eq!(block_profile(0.3), 0.0);
        assert_eq!(block_profile(1.0), 1.0);
        for k in 1..400 {
            let r = k as f64 * 0.01;
            let v = block_profile(r);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let g = grid(64);
        let prof = DyadicProfile::new(&g);
        let sum = prof.partition_sum();
        for (i, s) in sum.iter().enumerate() {
            if i == 0 || g.is_nyquist(i) {
                continue;
            }
            assert!((s - 1.0).abs() <= 1e-10, "idx {i}: {s}");
        }
    }

    #[test]
    fn resolved_range_for_unit_torus() {
        let prof = DyadicProfile::new(&grid(64));
        // |xi| runs from 1 to 31 sqrt 2 ~ 43.8.
        assert_eq!(prof.j_lo(), 0);
        assert_eq!(prof.j_hi(), 6);
    }

    #[test]
    fn unit_mode_block_values() {
        let g = grid(16);
        let prof = DyadicProfile::new(&g);
        let f = RealField::from_fn(&g, |x, _| x.cos()).unwrap().forward();
        let d0 = prof.block(&f, 0).unwrap();
        assert!((d0.mode(1, 0) - f.mode(1, 0)).norm() < 1e-12);
        assert!(prof.block(&f, 1).unwrap().l2_norm() < 1e-13);
        assert_eq!(prof.block(&f, 40).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn low_pass_limits() {
        let g = grid(32);
        let prof = DyadicProfile::new(&g);
        let f = RealField::from_fn(&g, |x, y| (x + 2.0 * y).sin() + (5.0 * x).cos()).unwrap().forward();
        let all = prof.low_pass(&f, prof.j_hi() + 3).unwrap();
        assert!(all.sub(&f).unwrap().l2_norm() <= 1e-10 * f.l2_norm());
        assert_eq!(prof.low_pass(&f, prof.j_lo() + 2).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn cosine_besov_matches_l2() {
        let g = grid(32);
        let prof = DyadicProfile::new(&g);
        let f = RealField::from_fn(&g, |x, _| x.cos()).unwrap();
        let b = prof.besov_norm(&f.forward(), &BesovSpec::new(2.0, 2.0, 0.0).unwrap()).unwrap();
        let ratio = b / f.lp_norm(2.0).unwrap();
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn lp_blocks_match_direct_inverse() {
        let g = grid(32);
        let prof = DyadicProfile::new(&g);
        let f = RealField::from_fn(&g, |x, y| (x + y).sin() + (3.0 * x - 2.0 * y).cos() + (7.0 * y).sin()).unwrap().forward();
        let norms = prof.block_lp_norms(&f, 3.0).unwrap();
        for (b, j) in prof.block_indices().enumerate() {
            let direct = prof.block(&f, j).unwrap().inverse().unwrap().lp_norm(3.0).unwrap();
            assert!((norms[b] - direct).abs() <= 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn constant_trajectory_norms() {
        let table = BlockNormTable { p: 2.0, j_lo: 0, times: vec![0.0, 0.5, 2.0], norms: vec![vec![1.0, 2.0]; 3] };
        let besov = BesovSpec::new(2.0, 2.0, 1.0).unwrap();
        let spatial = (1.0f64 + 16.0).sqrt();
        let plain = time_besov_norm(&table, &TimeBesovSpec::new(3.0, besov, 2.0, TimeNormMode::Plain).unwrap()).unwrap();
        assert!((plain - 2f64.powf(1.0 / 3.0) * spatial).abs() < 1e-12);
        let sup = time_besov_norm(&table, &TimeBesovSpec::new(f64::INFINITY, besov, 2.0, TimeNormMode::Tilde).unwrap()).unwrap();
        assert!((sup - spatial).abs() < 1e-12);
        let cut = time_besov_norm(&table, &TimeBesovSpec::new(1.0, besov, 1.0, TimeNormMode::Plain).unwrap()).unwrap();
        assert!((cut - spatial).abs() < 1e-12);
    }

    #[test]
    fn empty_and_out_of_range_tables_fail() {
        let table = BlockNormTable { p: 2.0, j_lo: 0, times: vec![], norms: vec![] };
        let besov = BesovSpec::sobolev(0.0);
        let spec = TimeBesovSpec::new(2.0, besov, 1.0, TimeNormMode::Plain).unwrap();
        assert!(time_besov_norm(&table, &spec).is_err());
        let table = BlockNormTable { p: 2.0, j_lo: 0, times: vec![0.0, 0.5], norms: vec![vec![1.0]; 2] };
        assert!(time_besov_norm(&table, &spec).is_err());
    }
}

//! Dense row-major matrix kernels, the power-method spectral bound, and
//! row-block partitioning.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::Range;

/// Dense row-major design matrix.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidSpec {
                what: "design matrix",
                why: format!("dimensions must be at least 1x1, got {n}x{p}"),
            });
        }
        if data.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{p} matrix, got {}",
                n * p,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec {
                what: "design matrix",
                why: "entries must all be finite".into(),
            });
        }
        Ok(Self { n, p, data })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    /// View of a contiguous block of rows.
    pub fn shard(&self, rows: Range<usize>) -> Shard<'_> {
        assert!(rows.end <= self.n && rows.start <= rows.end);
        Shard { mat: self, rows }
    }

    /// Full-matrix product `X v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.shard(0..self.n).matvec(v)
    }

    /// Full-matrix product `X' u`.
    pub fn matvec_t(&self, u: &[f64]) -> Vec<f64> {
        self.shard(0..self.n).matvec_t(u)
    }
}

/// A read-only contiguous row block of a design matrix.
#[derive(Debug, Clone)]
pub struct Shard<'a> {
    mat: &'a DesignMatrix,
    rows: Range<usize>,
}

impl<'a> Shard<'a> {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.mat.p
    }

    pub fn row_range(&self) -> Range<usize> {
        self.rows.clone()
    }

    /// `X_m v`, one output entry per shard row.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.mat.p, "matvec dimension mismatch");
        self.rows
            .clone()
            .map(|i| {
                let row = self.mat.row(i);
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `X_m' u` with `u` indexed by shard-local row.
    pub fn matvec_t(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.rows.len(), "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.mat.p];
        for (local, i) in self.rows.clone().enumerate() {
            let row = self.mat.row(i);
            let ui = u[local];
            for (o, a) in out.iter_mut().zip(row) {
                *o += ui * a;
            }
        }
        out
    }

    /// Conservative spectral bound: mu * ||X||_1 * ||X||_inf dominates the
    /// largest eigenvalue of mu X'X. Used only when the power method fails
    /// to converge.
    pub fn norm_product_bound(&self, mu: f64) -> f64 {
        let mut col_sums = vec![0.0f64; self.mat.p];
        let mut max_row = 0.0f64;
        for i in self.rows.clone() {
            let row = self.mat.row(i);
            let mut row_sum = 0.0;
            for (cs, a) in col_sums.iter_mut().zip(row) {
                let aa = a.abs();
                *cs += aa;
                row_sum += aa;
            }
            max_row = max_row.max(row_sum);
        }
        let max_col = col_sums.iter().cloned().fold(0.0f64, f64::max);
        mu * max_row * max_col
    }
}

#[derive(Debug, Clone)]
pub struct PowerMethodOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_METHOD_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
pub const POWER_METHOD_TOL: f64 = 1e-6;
pub const POWER_METHOD_MAX_ITER: usize = 1000;

/// Power iteration for the largest eigenvalue of a symmetric PSD operator,
/// given as `v -> A v`. The start vector is pseudo-random from `seed` so
/// repeated runs are identical.
pub fn power_method_max_eig_seeded<F>(
    apply: F,
    p: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> PowerMethodOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(tol > 0.0 && p > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut lambda = 0.0f64;
    for k in 0..max_iter {
        let mut w = apply(&v);
        // Rayleigh quotient with v normalized
        let new_lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            // A v = 0: v lies in the null space, the bound is 0 for this
            // start vector; treat as converged at 0
            return PowerMethodOutcome { value: 0.0, iterations: k + 1, converged: true };
        }
        v = w;
        // stop well inside the requested tolerance since the Rayleigh
        // estimate converges at the squared gap rate
        if k > 0 && (new_lambda - lambda).abs() <= 0.01 * tol * new_lambda.abs().max(1e-300) {
            return PowerMethodOutcome { value: new_lambda, iterations: k + 1, converged: true };
        }
        lambda = new_lambda;
    }
    PowerMethodOutcome { value: lambda, iterations: max_iter, converged: false }
}

pub fn power_method_max_eig<F>(apply: F, p: usize, tol: f64, max_iter: usize) -> PowerMethodOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    power_method_max_eig_seeded(apply, p, tol, max_iter, POWER_METHOD_SEED)
}

/// Largest eigenvalue of `mu X_m' X_m` for a shard, with the norm-product
/// fallback if the iteration stalls.
pub fn shard_spectral_bound(shard: &Shard<'_>, mu: f64) -> f64 {
    let p = shard.ncols();
    let out = power_method_max_eig(
        |v| {
            let w = shard.matvec(v);
            let mut t = shard.matvec_t(&w);
            for x in t.iter_mut() {
                *x *= mu;
            }
            t
        },
        p,
        POWER_METHOD_TOL,
        POWER_METHOD_MAX_ITER,
    );
    if out.converged {
        out.value
    } else {
        shard.norm_product_bound(mu)
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Row-block decomposition of the sample index range `[0, n)`.
#[derive(Debug, Clone)]
pub struct Partition {
    ranges: Vec<Range<usize>>,
}

impl Partition {
    pub fn from_ranges(n: usize, ranges: Vec<Range<usize>>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::BadPartition("no shards".into()));
        }
        let mut cursor = 0usize;
        for r in &ranges {
            if r.start != cursor || r.is_empty() {
                return Err(Error::BadPartition(format!(
                    "ranges must be contiguous, nonempty and exhaustive; got {r:?} at offset {cursor}"
                )));
            }
            cursor = r.end;
        }
        if cursor != n {
            return Err(Error::BadPartition(format!(
                "ranges cover [0, {cursor}) but n = {n}"
            )));
        }
        Ok(Self { ranges })
    }

    pub fn num_shards(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }
}

/// Balanced contiguous split of `n` rows into `M` shards; the first
/// `n mod M` shards take the extra row. Explicit `sizes` override the
/// balanced rule.
pub fn partition_rows(n: usize, m: usize, sizes: Option<&[usize]>) -> Result<Partition> {
    if m == 0 || m > n {
        return Err(Error::BadPartition(format!("need 1 <= M <= n, got M = {m}, n = {n}")));
    }
    let sizes: Vec<usize> = match sizes {
        Some(s) => {
            if s.len() != m {
                return Err(Error::BadPartition(format!(
                    "expected {m} sizes, got {}",
                    s.len()
                )));
            }
            if s.iter().sum::<usize>() != n {
                return Err(Error::BadPartition(format!("sizes must sum to n = {n}")));
            }
            if s.iter().any(|&x| x == 0) {
                return Err(Error::BadPartition("every shard must be nonempty".into()));
            }
            s.to_vec()
        }
        None => {
            let base = n / m;
            let extra = n % m;
            (0..m).map(|i| base + usize::from(i < extra)).collect()
        }
    };
    let mut ranges = Vec::with_capacity(m);
    let mut start = 0;
    for s in sizes {
        ranges.push(start..start + s);
        start += s;
    }
    Partition::from_ranges(n, ranges)
}

/// Per-shard spectral bounds eta_m = eigen(mu X_m' X_m).
pub fn shard_bounds(x: &DesignMatrix, partition: &Partition, mu: f64) -> Vec<f64> {
    partition
        .ranges()
        .iter()
        .map(|r| shard_spectral_bound(&x.shard(r.clone()), mu))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> DesignMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DesignMatrix::new(n, n, data).unwrap()
    }

    #[test]
    fn matvec_identity_and_ones() {
        let x = identity(4);
        let v = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(x.matvec(&v), v);
        let ones = DesignMatrix::new(2, 3, vec![1.0; 6]).unwrap();
        assert_eq!(ones.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0]);
    }

    #[test]
    fn shard_products_match_full_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, p) = (13, 5);
        let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = DesignMatrix::new(n, p, data).unwrap();
        let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let full = x.matvec(&v);
        let shard = x.shard(4..9);
        let local = shard.matvec(&v);
        for (k, i) in (4..9).enumerate() {
            assert!((local[k] - full[i]).abs() <= 1e-14);
        }
        // assembling X' u from shards equals the full product
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let full_t = x.matvec_t(&u);
        let part = partition_rows(n, 3, None).unwrap();
        let mut acc = vec![0.0; p];
        for r in part.ranges() {
            let t = x.shard(r.clone()).matvec_t(&u[r.clone()]);
            for (a, b) in acc.iter_mut().zip(&t) {
                *a += b;
            }
        }
        for (a, b) in acc.iter().zip(&full_t) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_method_on_identity_and_diagonal() {
        let x = identity(5);
        let out = power_method_max_eig(
            |v| {
                let w = x.matvec(v);
                x.matvec_t(&w).iter().map(|t| 2.0 * t).collect()
            },
            5,
            1e-6,
            1000,
        );
        assert!((out.value - 2.0).abs() < 1e-9);

        let d = DesignMatrix::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let out = shard_spectral_bound(&d.shard(0..3), 1.0);
        assert!((out - 9.0).abs() / 9.0 < 1e-6);
    }

    #[test]
    fn power_method_seed_invariance_with_gap() {
        let d = DesignMatrix::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let apply = |v: &[f64]| {
            let w = d.matvec(v);
            d.matvec_t(&w)
        };
        let a = power_method_max_eig_seeded(apply, 3, 1e-6, 1000, 1);
        let b = power_method_max_eig_seeded(apply, 3, 1e-6, 1000, 2);
        assert!((a.value - b.value).abs() / a.value < 1e-6);
    }

    #[test]
    fn balanced_partitions() {
        let p = partition_rows(10, 1, None).unwrap();
        assert_eq!(p.ranges(), &[0..10]);
        let p = partition_rows(10, 3, None).unwrap();
        let sizes: Vec<usize> = p.ranges().iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let p = partition_rows(7, 7, None).unwrap();
        assert_eq!(p.num_shards(), 7);
        assert!(p.ranges().iter().all(|r| r.len() == 1));
        assert!(partition_rows(3, 4, None).is_err());
        assert!(partition_rows(10, 3, Some(&[5, 5, 1])).is_err());
        assert!(partition_rows(10, 3, Some(&[5, 5, 0])).is_err());
        let p = partition_rows(10, 3, Some(&[1, 8, 1])).unwrap();
        assert_eq!(p.ranges()[1], 1..9);
    }

    #[test]
    fn norm_product_bound_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, p) = (20, 6);
        let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = DesignMatrix::new(n, p, data).unwrap();
        let shard = x.shard(0..n);
        let lam = shard_spectral_bound(&shard, 1.7);
        assert!(shard.norm_product_bound(1.7) >= lam);
    }
}

//! Pfaffians of skew-symmetric matrices and the closed-form constants that
//! accompany them: double factorials, sphere volumes and Gaussian moments.
//!
//! Two evaluation paths are provided. The permutation sum follows the
//! definition directly and is limited to dimension 6. The first-row minor
//! expansion handles everything up to [`MAX_EXPANSION_DIM`].

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Absolute skewness tolerance applied at construction.
pub const SKEW_TOL: f64 = 1e-12;
/// Largest dimension evaluated by the permutation sum.
pub const MAX_PERMUTATION_DIM: usize = 6;
/// Largest dimension evaluated by minor expansion.
pub const MAX_EXPANSION_DIM: usize = 16;

/// Even-dimensional real skew-symmetric matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SkewMatrix {
    /// Validates skewness; the matrix is never symmetrized on the caller's behalf.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry {bad}")));
        }
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((entries[i * dim + j] + entries[j * dim + i]).abs());
            }
        }
        if worst > SKEW_TOL {
            return Err(Error::NotSkew(worst));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix rows must all have length equal to the row count".into()));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    /// Block-diagonal matrix with blocks `[[0, a_k], [-a_k, 0]]`.
    pub fn block_diagonal(blocks: &[f64]) -> Self {
        let dim = 2 * blocks.len();
        let mut entries = vec![0.0; dim * dim];
        for (k, &a) in blocks.iter().enumerate() {
            entries[(2 * k) * dim + 2 * k + 1] = a;
            entries[(2 * k + 1) * dim + 2 * k] = -a;
        }
        Self { dim, entries }
    }

    /// Skew part `(M - M^T)/2` of an arbitrary square matrix; exact by construction.
    pub fn skew_part(dim: usize, m: &[f64]) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = 0.5 * (m[i * dim + j] - m[j * dim + i]);
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `B A B^T` for a square `B` given row-major. The result is re-skewed
    /// exactly, since rounding in the product breaks antisymmetry at 1e-16.
    pub fn conjugate(&self, b: &[f64]) -> Self {
        let n = self.dim;
        let mut ba = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let bik = b[i * n + k];
                if bik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    ba[i * n + j] += bik * self.entries[k * n + j];
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| ba[i * n + k] * b[j * n + k]).sum();
            }
        }
        Self::skew_part(n, &out)
    }
}

/// Minimal commutative ring interface, so the same expansion serves real
/// matrices and matrices of even-degree differential forms.
pub trait CommutingRing<T> {
    fn zero(&self) -> T;
    fn one(&self) -> T;
    fn add(&self, a: &T, b: &T) -> T;
    fn mul(&self, a: &T, b: &T) -> T;
    fn neg(&self, a: &T) -> T;
}

/// The real numbers.
pub struct Reals;

impl CommutingRing<f64> for Reals {
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
}

/// Pfaffian by first-row minor expansion over entries from any commuting ring.
/// `entry(i, j)` is consulted only for `i < j`.
pub fn pfaffian_expand<T, R: CommutingRing<T>>(
    dim: usize,
    entry: &dyn Fn(usize, usize) -> T,
    ring: &R,
) -> Result<T> {
    if dim % 2 == 1 {
        return Err(Error::Dimension(format!("Pfaffian needs even dimension, got {dim}")));
    }
    if dim > MAX_EXPANSION_DIM {
        return Err(Error::Dimension(format!(
            "dimension {dim} exceeds expansion limit {MAX_EXPANSION_DIM}"
        )));
    }
    let idx: Vec<usize> = (0..dim).collect();
    Ok(expand_rec(&idx, entry, ring))
}

fn expand_rec<T, R: CommutingRing<T>>(
    idx: &[usize],
    entry: &dyn Fn(usize, usize) -> T,
    ring: &R,
) -> T {
    if idx.is_empty() {
        return ring.one();
    }
    let first = idx[0];
    let mut acc = ring.zero();
    for pos in 1..idx.len() {
        let rest: Vec<usize> = idx[1..].iter().copied().filter(|&k| k != idx[pos]).collect();
        let minor = expand_rec(&rest, entry, ring);
        let term = ring.mul(&entry(first, idx[pos]), &minor);
        // 1-based column position pos+1 carries sign (-1)^(pos+1).
        acc = if pos % 2 == 1 {
            ring.add(&acc, &term)
        } else {
            ring.add(&acc, &ring.neg(&term))
        };
    }
    acc
}

/// Pfaffian of a real skew matrix.
pub fn pfaffian(a: &SkewMatrix) -> Result<f64> {
    if a.dim % 2 == 1 {
        return Err(Error::Dimension(format!("Pfaffian needs even dimension, got {}", a.dim)));
    }
    pfaffian_expand(a.dim, &|i, j| a.get(i, j), &Reals)
}

/// Definition sum `1/(2^m m!) Σ_σ sgn σ Π a_{σ(2k-1)σ(2k)}` over all permutations.
pub fn pfaffian_by_permutations(a: &SkewMatrix) -> Result<f64> {
    let n = a.dim;
    if n % 2 == 1 {
        return Err(Error::Dimension(format!("Pfaffian needs even dimension, got {n}")));
    }
    if n > MAX_PERMUTATION_DIM {
        return Err(Error::Dimension(format!(
            "permutation sum limited to dimension {MAX_PERMUTATION_DIM}, got {n}"
        )));
    }
    let m = n / 2;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for_each_permutation(&mut perm, &mut |p, sign| {
        let mut prod = sign;
        for k in 0..m {
            prod *= a.get(p[2 * k], p[2 * k + 1]);
        }
        total += prod;
    });
    let norm = (1u64 << m) as f64 * factorial(m as u64) as f64;
    Ok(total / norm)
}

/// Heap's algorithm, reporting each permutation with its sign.
fn for_each_permutation(p: &mut [usize], f: &mut dyn FnMut(&[usize], f64)) {
    let n = p.len();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    f(p, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            sign = -sign;
            f(p, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn factorial(k: u64) -> u64 {
    (1..=k).product()
}

/// `c_m = (2m)!/(2^m m!) = (2m-1)(2m-3)...3·1`.
pub fn double_factorial_c(m: i64) -> Result<u64> {
    if m <= 0 {
        return Err(Error::Domain(format!("c_m needs m >= 1, got {m}")));
    }
    if m > 33 {
        return Err(Error::Domain(format!("c_m overflows u64 for m = {m}")));
    }
    Ok((1..=m as u64).map(|k| 2 * k - 1).product())
}

/// `(2k-1)!!` with the empty-product convention `(-1)!! = 1`.
pub fn odd_double_factorial(k: u64) -> f64 {
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

/// `Γ(n/2)` for positive integers `n`, exact up to rounding.
pub fn gamma_half(n: u64) -> f64 {
    assert!(n >= 1, "gamma_half needs n >= 1");
    let (mut x, mut g) = if n % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit sphere `S^{n-1}`: `2 (√π)^n / Γ(n/2)`.
pub fn sphere_volume(n: i64) -> Result<f64> {
    if n <= 0 {
        return Err(Error::Domain(format!("sphere volume needs n >= 1, got {n}")));
    }
    Ok(2.0 * PI.sqrt().powi(n as i32) / gamma_half(n as u64))
}

/// `∫_{-∞}^{∞} t^{2k} e^{-t²} dt = (√π / 2^k)(2k-1)!!`.
pub fn gaussian_moment(k: u32) -> f64 {
    PI.sqrt() / 2f64.powi(k as i32) * odd_double_factorial(k as u64)
}

/// `∫_0^∞ t^j e^{-t²} dt = Γ((j+1)/2)/2`.
pub fn half_line_moment(j: u32) -> f64 {
    gamma_half(j as u64 + 1) / 2.0
}

//! Flat symmetric bilinear maps `β: V × V → W` with `dim V = dim W = n` and
//! their diagonalization into rank-one directions.
//!
//! Components are `h[λ][i][j]`, so `β(x, y)_λ = Σ h[λ][i][j] x_i y_j`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const FLATNESS_GATE: f64 = 1e-8;
pub const COMMUTATION_LIMIT: f64 = 1e-5;
pub const REGULAR_SAMPLES: usize = 200;
pub const CLUSTER_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 0x5EED;
const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct FlatBilinearTensor {
    n: usize,
    h: Vec<f64>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for FlatBilinearTensor {
    type Error = Error;
    fn try_from(h: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::new(&h)
    }
}

impl From<FlatBilinearTensor> for Vec<Vec<Vec<f64>>> {
    fn from(t: FlatBilinearTensor) -> Self {
        t.to_nested()
    }
}

impl FlatBilinearTensor {
    /// Requires `h[λ][i][j] = h[λ][j][i]` exactly.
    pub fn new(h: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = h.len();
        if n == 0 {
            return Err(Error::Dimension("empty tensor".into()));
        }
        let mut flat = Vec::with_capacity(n * n * n);
        for (l, m) in h.iter().enumerate() {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("slice {l} is not {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    if m[i][j] != m[j][i] {
                        return Err(Error::Input(format!("h[{l}] is not symmetric at ({i}, {j})")));
                    }
                    if !m[i][j].is_finite() {
                        return Err(Error::Input("non-finite entry".into()));
                    }
                }
                flat.extend_from_slice(&m[i]);
            }
        }
        Ok(Self { n, h: flat })
    }

    /// `Σ_k a_{λk} φ_k ⊗ φ_k`, with `phi` holding the `φ_k` as rows and `a`
    /// the `n × m` coefficient matrix.
    pub fn from_rank_one(phi: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let n = phi.ncols();
        if a.nrows() != n || a.ncols() != phi.nrows() {
            return Err(Error::Dimension("coefficient matrix must be n x (number of forms)".into()));
        }
        let mut h = vec![0.0; n * n * n];
        for l in 0..n {
            for k in 0..phi.nrows() {
                let c = a[(l, k)];
                for i in 0..n {
                    for j in i..n {
                        let v = c * phi[(k, i)] * phi[(k, j)];
                        h[(l * n + i) * n + j] += v;
                        if i != j {
                            h[(l * n + j) * n + i] += v;
                        }
                    }
                }
            }
        }
        Ok(Self { n, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize, i: usize, j: usize) -> f64 {
        self.h[(l * self.n + i) * self.n + j]
    }

    pub fn slice(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(l, i, j))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n).map(|l| (0..self.n).map(|i| (0..self.n).map(|j| self.get(l, i, j)).collect()).collect()).collect()
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |l, _| (x.transpose() * self.slice(l) * y)[(0, 0)])
    }

    /// The linear map `β(x) = β(x, ·)` as an `n × n` matrix.
    pub fn partial(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |l, j| (0..n).map(|i| self.get(l, i, j) * x[i]).sum())
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Max violation of `⟨β(x,x),β(y,y)⟩ = |β(x,y)|²` and of its polarized form
/// `⟨β(x,z),β(y,w)⟩ = ⟨β(x,w),β(y,z)⟩` over `pairs` random unit samples.
pub fn flatness_residual_with(beta: &FlatBilinearTensor, pairs: usize, seed: u64) -> f64 {
    let n = beta.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let basis: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (&basis[a], &basis[b]);
            let lhs = beta.eval(x, x).dot(&beta.eval(y, y));
            let rhs = beta.eval(x, y).norm_squared();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    for _ in 0..pairs {
        let x = random_unit(n, &mut rng);
        let y = random_unit(n, &mut rng);
        let lhs = beta.eval(&x, &x).dot(&beta.eval(&y, &y));
        let rhs = beta.eval(&x, &y).norm_squared();
        worst = worst.max((lhs - rhs).abs());
        let z = random_unit(n, &mut rng);
        let w = random_unit(n, &mut rng);
        let p = beta.eval(&x, &z).dot(&beta.eval(&y, &w)) - beta.eval(&x, &w).dot(&beta.eval(&y, &z));
        worst = worst.max(p.abs());
    }
    worst
}

pub fn flatness_residual(beta: &FlatBilinearTensor) -> f64 {
    flatness_residual_with(beta, 1000, DEFAULT_SEED)
}

fn rank_and_conditioning(m: &DMatrix<f64>) -> (usize, f64) {
    let sv = m.singular_values();
    let hi = sv.max();
    if hi == 0.0 {
        return (0, 0.0);
    }
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * hi).count();
    (rank, sv.min() / hi)
}

/// An element of maximal rank among coordinate directions and
/// [`REGULAR_SAMPLES`] random unit vectors, best conditioned among ties.
pub fn find_regular_element(beta: &FlatBilinearTensor, seed: u64) -> Result<DVector<f64>> {
    let n = beta.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    candidates.extend((0..REGULAR_SAMPLES).map(|_| random_unit(n, &mut rng)));
    let mut best: Option<(usize, f64, DVector<f64>)> = None;
    for x in candidates {
        let (r, c) = rank_and_conditioning(&beta.partial(&x));
        if best.as_ref().is_none_or(|b| (r, c) > (b.0, b.1)) {
            best = Some((r, c, x));
        }
    }
    let (rank, _, x) = best.expect("at least one candidate");
    if rank < n {
        return Err(Error::Kernel { rank, n });
    }
    Ok(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub flatness: f64,
    /// `max ‖B(y) - B(y)ᵀ‖` over the sampled `y`.
    pub symmetry: f64,
    /// `max ‖[B(y_a), B(y_b)]‖` over sampled pairs.
    pub commutation: f64,
    /// `max_i σ_2/σ_1` of `β(v_i)`.
    pub rank_one_defect: f64,
    /// `max |⟨v_i, v_j⟩ - δ_ij|`.
    pub orthonormality_defect: f64,
    /// `max |AᵀA - I|`.
    pub orthogonality_defect: f64,
    /// `max |h[λ] - Σ_j a_λj φ_j φ_jᵀ|`.
    pub reconstruction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagonalization {
    /// Unit rank-one directions `v_i`.
    pub basis: Vec<Vec<f64>>,
    /// One-forms `φ_i` as row vectors.
    pub phi: Vec<Vec<f64>>,
    /// `a[λ][j]`, so that `Φ_λ = Σ_j a_λj φ_j ⊗ φ_j`.
    pub a: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Orthonormal eigenbasis of `W` shared by the `B(y)` family. Clusters of
/// close eigenvalues are split with random combinations of the family
/// restricted to the cluster.
fn joint_eigenbasis(bs: &[DMatrix<f64>], rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let n = bs[0].nrows();
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut pending: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut done: Vec<DVector<f64>> = Vec::new();
    let mut rounds = 0;
    while let Some(cols) = pending.pop() {
        if cols.len() == 1 {
            done.push(q.column(cols[0]).into_owned());
            continue;
        }
        rounds += 1;
        if rounds > 16 * n {
            return Err(Error::Domain(format!("eigenvalue cluster of size {} did not split", cols.len())));
        }
        let sub = DMatrix::from_fn(n, cols.len(), |i, j| q[(i, cols[j])]);
        let mut m = DMatrix::<f64>::zeros(cols.len(), cols.len());
        for b in bs {
            let c: f64 = rng.random_range(-1.0..1.0);
            m += (sub.transpose() * b * &sub) * c;
        }
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = eig.eigenvalues.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let vecs = &sub * &eig.eigenvectors;
        let mut group: Vec<usize> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (pos, &k) in order.iter().enumerate() {
            if pos > 0 && eig.eigenvalues[k] - eig.eigenvalues[order[pos - 1]] > CLUSTER_TOL * scale {
                groups.push(std::mem::take(&mut group));
            }
            group.push(k);
        }
        groups.push(group);
        for (j, &c) in cols.iter().enumerate() {
            q.set_column(c, &vecs.column(j));
        }
        for g in groups {
            pending.push(g.iter().map(|&k| cols[k]).collect());
        }
    }
    Ok(DMatrix::from_columns(&done))
}

pub fn diagonalize(beta: &FlatBilinearTensor) -> Result<Diagonalization> {
    diagonalize_with_seed(beta, DEFAULT_SEED)
}

/// Rank-one diagonalization: pick a regular `x`, build `B(y) = β(y)β(x)^{-1}`,
/// diagonalize the family on `W`, and pull the common eigenvectors `w_k`
/// back to `v_k ∝ β(x)^{-1} w_k`.
pub fn diagonalize_with_seed(beta: &FlatBilinearTensor, seed: u64) -> Result<Diagonalization> {
    let n = beta.n;
    let flatness = flatness_residual(beta);
    if flatness > FLATNESS_GATE {
        return Err(Error::Domain(format!("flatness residual {flatness:e} exceeds {FLATNESS_GATE:e}")));
    }
    let x = find_regular_element(beta, seed)?;
    let bx = beta.partial(&x);
    let bx_inv = bx.clone().try_inverse().ok_or(Error::Kernel { rank: n - 1, n })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut ys: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    ys.extend((0..n).map(|_| random_unit(n, &mut rng)));
    let bs: Vec<DMatrix<f64>> = ys.iter().map(|y| beta.partial(y) * &bx_inv).collect();
    let mut symmetry = 0.0f64;
    let mut commutation = 0.0f64;
    for (a, ba) in bs.iter().enumerate() {
        symmetry = symmetry.max(max_abs(&(ba - ba.transpose())));
        for bb in &bs[a + 1..] {
            commutation = commutation.max(max_abs(&(ba * bb - bb * ba)));
        }
    }
    if commutation > COMMUTATION_LIMIT {
        return Err(Error::Commutation(commutation));
    }
    let sym: Vec<DMatrix<f64>> = bs.iter().map(|b| (b + b.transpose()) * 0.5).collect();
    let w = joint_eigenbasis(&sym, &mut rng)?;

    let mut basis = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rank_one_defect = 0.0f64;
    for k in 0..n {
        let mut wk = w.column(k).into_owned();
        let v = &bx_inv * &wk;
        let v = v.normalize();
        let sv = beta.partial(&v).singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|p, q| q.total_cmp(p));
        if n > 1 && s[0] > 0.0 {
            rank_one_defect = rank_one_defect.max(s[1] / s[0]);
        }
        // ⟨β(·,·), w_k⟩ = c ψψᵀ; orient w_k so that c > 0
        let mut m = DMatrix::<f64>::zeros(n, n);
        for l in 0..n {
            m += beta.slice(l) * wk[l];
        }
        let eig = SymmetricEigen::new((&m + m.transpose()) * 0.5);
        let top = (0..n).max_by(|&p, &q| eig.eigenvalues[p].abs().total_cmp(&eig.eigenvalues[q].abs())).expect("n > 0");
        let mut c = eig.eigenvalues[top];
        if c < 0.0 {
            wk = -wk;
            c = -c;
        }
        let mut f = eig.eigenvectors.column(top).into_owned() * c.sqrt();
        if f.dot(&v) < 0.0 {
            f = -f;
        }
        a.set_column(k, &wk);
        basis.push(v.iter().copied().collect::<Vec<_>>());
        phi.push(f.iter().copied().collect::<Vec<_>>());
    }
    let vb = DMatrix::from_fn(n, n, |i, j| basis[j][i]);
    let orthonormality_defect = max_abs(&(vb.transpose() * &vb - DMatrix::identity(n, n)));
    let orthogonality_defect = max_abs(&(a.transpose() * &a - DMatrix::identity(n, n)));
    let pm = DMatrix::from_fn(n, n, |k, i| phi[k][i]);
    let recon = FlatBilinearTensor::from_rank_one(&pm, &a)?;
    let reconstruction = beta.h.iter().zip(&recon.h).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    Ok(Diagonalization {
        basis,
        phi,
        a: (0..n).map(|l| (0..n).map(|j| a[(l, j)]).collect()).collect(),
        diagnostics: Diagnostics {
            flatness,
            symmetry,
            commutation,
            rank_one_defect,
            orthonormality_defect,
            orthogonality_defect,
            reconstruction,
        },
    })
}

/// Largest total `|cos|` assignment between two direction sets, by dynamic
/// programming over subsets; returns the smallest matched `|cos|`.
pub fn match_directions(planted: &[Vec<f64>], recovered: &[Vec<f64>]) -> Result<f64> {
    let n = planted.len();
    if recovered.len() != n || n > 20 {
        return Err(Error::Dimension("direction sets must have equal size <= 20".into()));
    }
    let cosine = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (d / (na * nb)).abs()
    };
    let c: Vec<Vec<f64>> = planted.iter().map(|p| recovered.iter().map(|r| cosine(p, r)).collect()).collect();
    let size = 1usize << n;
    let mut best = vec![(f64::NEG_INFINITY, f64::INFINITY); size];
    best[0] = (0.0, f64::INFINITY);
    for mask in 0..size {
        let i = mask.count_ones() as usize;
        if i >= n || best[mask].0 == f64::NEG_INFINITY {
            continue;
        }
        for j in 0..n {
            if mask >> j & 1 == 0 {
                let next = mask | 1 << j;
                let cand = (best[mask].0 + c[i][j], best[mask].1.min(c[i][j]));
                if cand.0 > best[next].0 {
                    best[next] = cand;
                }
            }
        }
    }
    Ok(best[size - 1].1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// Orthogonal rank-one directions with random scales.
    Orthogonal,
    /// Arbitrary invertible one-forms.
    General,
    /// Only `n - 1` rank-one terms, so `N(β) ≠ 0`.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub tensor: FlatBilinearTensor,
    /// Planted rank-one directions (unit vectors), one per term.
    pub directions: Vec<Vec<f64>>,
    pub phi: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j).into_owned();
            q.set_column(j, &col);
        }
    }
    q
}

/// `h[λ] = Σ_k a_λk φ_k φ_kᵀ` with `A` random orthogonal.
pub fn synthetic_instance(n: usize, kind: InstanceKind, rng: &mut ChaCha8Rng) -> Result<SyntheticInstance> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let a = random_orthogonal(n, rng);
    let phi = match kind {
        InstanceKind::Orthogonal | InstanceKind::Degenerate => {
            let u = random_orthogonal(n, rng);
            let mut p = u.transpose();
            for k in 0..n {
                let s: f64 = rng.random_range(0.5..2.0);
                p.row_mut(k).scale_mut(s);
            }
            p
        }
        InstanceKind::General => loop {
            let p = DMatrix::from_fn(n, n, |i, j| if i == j { 1.5 } else { 0.0 } + rng.random_range(-0.5..0.5));
            let sv = p.singular_values();
            if sv.min() / sv.max() > 0.05 {
                break p;
            }
        },
    };
    let terms = if kind == InstanceKind::Degenerate { n - 1 } else { n };
    let phi = phi.rows(0, terms).into_owned();
    let a = a.columns(0, terms).into_owned();
    let tensor = FlatBilinearTensor::from_rank_one(&phi, &a)?;
    let directions = if terms == n {
        let inv = phi.clone().try_inverse().ok_or_else(|| Error::Domain("singular planted forms".into()))?;
        (0..n).map(|k| inv.column(k).normalize().iter().copied().collect()).collect()
    } else {
        Vec::new()
    };
    Ok(SyntheticInstance { tensor, directions, phi, a })
}

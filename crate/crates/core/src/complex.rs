//! Reflection group of the coordinate hyperplanes, the triangulation of the
//! cross-polytope boundary, its dual cubical decomposition of the sphere,
//! the product fundamental cycle, solid angles of dual cells and integer
//! homology.
//!
//! Indices are 1-based in the public API. A cell is stored as a pair of bit
//! masks: the index set `I` and the flips of `g` restricted to `I`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub type Mask = u32;

/// Largest `n` accepted by the combinatorial routines.
pub const MAX_N: usize = 16;

fn full(n: usize) -> Mask {
    if n >= 32 {
        Mask::MAX
    } else {
        (1 << n) - 1
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::Domain(format!("n = {n} outside 1..={MAX_N}")));
    }
    Ok(())
}

fn parity(m: Mask) -> i64 {
    if m.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn bits(m: Mask) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| m >> i & 1 == 1)
}

/// Element of `G`, the group generated by the coordinate reflections `g_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    n: usize,
    flips: Mask,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { n, flips: 0 }
    }

    /// The reflection `g_i`, `1 <= i <= n`.
    pub fn generator(n: usize, i: usize) -> Result<Self> {
        check_n(n)?;
        if i == 0 || i > n {
            return Err(Error::Domain(format!("generator index {i} outside 1..={n}")));
        }
        Ok(Self { n, flips: 1 << (i - 1) })
    }

    pub fn from_flips(n: usize, flips: Mask) -> Result<Self> {
        check_n(n)?;
        if flips & !full(n) != 0 {
            return Err(Error::Domain("flip mask has bits beyond n".into()));
        }
        Ok(Self { n, flips })
    }

    /// From the values `g(1), ..., g(n)`, each `±1`.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        check_n(signs.len())?;
        let mut flips = 0;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => flips |= 1 << i,
                _ => return Err(Error::Domain(format!("sign {s} is not ±1"))),
            }
        }
        Ok(Self { n: signs.len(), flips })
    }

    /// The antipodal map `g_1 ⋯ g_n`.
    pub fn antipodal(n: usize) -> Self {
        Self { n, flips: full(n) }
    }

    pub fn all(n: usize) -> impl Iterator<Item = GroupElement> {
        (0..(1u64 << n)).map(move |f| GroupElement { n, flips: f as Mask })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flips(&self) -> Mask {
        self.flips
    }

    /// `g(i)`.
    pub fn sign(&self, i: usize) -> i64 {
        if self.flips >> (i - 1) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (1..=self.n).map(|i| self.sign(i) as i8).collect()
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { n: self.n, flips: self.flips ^ other.flips }
    }

    /// `ε(g) = g(1) ⋯ g(n)`.
    pub fn epsilon(&self) -> i64 {
        parity(self.flips)
    }

    /// `ε_I(g) = Π_{i ∈ I} g(i)`.
    pub fn epsilon_on(&self, subset: Mask) -> i64 {
        parity(self.flips & subset)
    }
}

/// `ε(g)` as a free function.
pub fn epsilon(g: &GroupElement) -> i64 {
    g.epsilon()
}

/// Sorts 1-based indices into a mask with the sign of the sorting
/// permutation; `None` when an index repeats.
pub fn normalize_indices(n: usize, indices: &[usize]) -> Result<Option<(Mask, i64)>> {
    let mut mask: Mask = 0;
    let mut sign = 1;
    for &i in indices {
        if i == 0 || i > n {
            return Err(Error::Domain(format!("index {i} outside 1..={n}")));
        }
        let b = 1 << (i - 1);
        if mask & b != 0 {
            return Ok(None);
        }
        // inversions against indices already placed
        if (mask & !(b | (b - 1))).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= b;
    }
    Ok(Some((mask, sign)))
}

pub fn mask_indices(m: Mask) -> Vec<usize> {
    bits(m).map(|i| i + 1).collect()
}

macro_rules! cell_type {
    ($name:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name {
            indices: Mask,
            flips: Mask,
        }

        impl $name {
            /// `g·X(indices)` in canonical form with its orientation sign, or
            /// `None` for a repeated index.
            pub fn new(g: &GroupElement, indices: &[usize]) -> Result<Option<(Self, i64)>> {
                if indices.is_empty() {
                    return Err(Error::Domain("cells need at least one index".into()));
                }
                Ok(normalize_indices(g.n, indices)?.map(|(m, s)| (Self { indices: m, flips: g.flips & m }, s)))
            }

            pub fn from_masks(indices: Mask, flips: Mask) -> Self {
                Self { indices, flips: flips & indices }
            }

            pub fn index_mask(&self) -> Mask {
                self.indices
            }

            pub fn flip_mask(&self) -> Mask {
                self.flips
            }

            pub fn indices(&self) -> Vec<usize> {
                mask_indices(self.indices)
            }

            pub fn order(&self) -> usize {
                self.indices.count_ones() as usize
            }

            pub fn group_element(&self, n: usize) -> GroupElement {
                GroupElement { n, flips: self.flips }
            }
        }
    };
}

cell_type!(SimplexCell);
cell_type!(CubeCell);

impl SimplexCell {
    pub fn dim(&self) -> usize {
        self.order() - 1
    }

    /// `h·(gΔ(I))`; `G(I^*)` fixes `Δ(I)` pointwise.
    pub fn act(&self, h: &GroupElement) -> (Self, i64) {
        (Self::from_masks(self.indices, self.flips ^ h.flips), 1)
    }
}

impl CubeCell {
    pub fn dim(&self, n: usize) -> usize {
        n - self.order()
    }

    /// `h·(g□(I))`; each `g_j`, `j ∉ I`, reflects `□(I)` onto itself with
    /// reversed orientation.
    pub fn act(&self, h: &GroupElement) -> (Self, i64) {
        (Self::from_masks(self.indices, self.flips ^ h.flips), parity(h.flips & !self.indices))
    }
}

/// Finitely supported integer chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain<C: Ord> {
    terms: BTreeMap<C, i64>,
}

impl<C: Ord + Copy> Default for Chain<C> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<C: Ord + Copy> Chain<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cell(c: C, coeff: i64) -> Self {
        let mut ch = Self::new();
        ch.add_term(c, coeff);
        ch
    }

    pub fn add_term(&mut self, c: C, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let e = self.terms.entry(c).or_insert(0);
        *e += coeff;
        if *e == 0 {
            self.terms.remove(&c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&c, &v) in &other.terms {
            out.add_term(c, v);
        }
        out
    }

    pub fn scale(&self, s: i64) -> Self {
        let mut out = Self::new();
        for (&c, &v) in &self.terms {
            out.add_term(c, s * v);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, c: &C) -> i64 {
        self.terms.get(c).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&C, &i64)> {
        self.terms.iter()
    }
}

pub type SimplexChain = Chain<SimplexCell>;
pub type CubeChain = Chain<CubeCell>;

/// Builds `coeff · gΔ(indices)`, zero for repeated indices.
pub fn simplex(g: &GroupElement, indices: &[usize], coeff: i64) -> Result<SimplexChain> {
    Ok(match SimplexCell::new(g, indices)? {
        Some((c, s)) => Chain::from_cell(c, s * coeff),
        None => Chain::new(),
    })
}

/// Builds `coeff · g□(indices)`, zero for repeated indices. Components of
/// `g` outside `indices` contribute their orientation sign.
pub fn cube(g: &GroupElement, indices: &[usize], coeff: i64) -> Result<CubeChain> {
    Ok(match CubeCell::new(g, indices)? {
        Some((c, s)) => Chain::from_cell(c, s * parity(g.flips & !c.indices) * coeff),
        None => Chain::new(),
    })
}

/// One cell of a chain in interchange form: `coeff · gX(I)` with 1-based `I`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CellTerm {
    pub g: Vec<i8>,
    #[serde(rename = "I")]
    pub indices: Vec<usize>,
    pub coeff: i64,
}

/// Interchange form `{cells: [{g, I, coeff}, ...]}` of a simplicial or cubical chain.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
pub struct ChainRecords {
    pub cells: Vec<CellTerm>,
}

impl ChainRecords {
    fn from_iter<'a, C: 'a>(n: usize, terms: impl Iterator<Item = (&'a C, &'a i64)>, masks: impl Fn(&C) -> (Mask, Mask)) -> Self {
        let cells = terms
            .map(|(c, &coeff)| {
                let (m, f) = masks(c);
                CellTerm { g: GroupElement { n, flips: f }.signs(), indices: mask_indices(m), coeff }
            })
            .collect();
        Self { cells }
    }

    pub fn from_simplices(n: usize, c: &SimplexChain) -> Self {
        Self::from_iter(n, c.iter(), |s| (s.indices, s.flips))
    }

    pub fn from_cubes(n: usize, c: &CubeChain) -> Self {
        Self::from_iter(n, c.iter(), |s| (s.indices, s.flips))
    }

    fn element(n: usize, t: &CellTerm) -> Result<GroupElement> {
        let g = GroupElement::from_signs(&t.g)?;
        if g.n != n {
            return Err(Error::Input(format!("sign vector has length {}, expected {n}", g.n)));
        }
        Ok(g)
    }

    pub fn to_simplices(&self, n: usize) -> Result<SimplexChain> {
        let mut out = Chain::new();
        for t in &self.cells {
            out = out.add(&simplex(&Self::element(n, t)?, &t.indices, t.coeff)?);
        }
        Ok(out)
    }

    pub fn to_cubes(&self, n: usize) -> Result<CubeChain> {
        let mut out = Chain::new();
        for t in &self.cells {
            out = out.add(&cube(&Self::element(n, t)?, &t.indices, t.coeff)?);
        }
        Ok(out)
    }
}

pub fn act_simplices(h: &GroupElement, c: &SimplexChain) -> SimplexChain {
    let mut out = Chain::new();
    for (cell, &v) in c.iter() {
        let (d, s) = cell.act(h);
        out.add_term(d, s * v);
    }
    out
}

pub fn act_cubes(h: &GroupElement, c: &CubeChain) -> CubeChain {
    let mut out = Chain::new();
    for (cell, &v) in c.iter() {
        let (d, s) = cell.act(h);
        out.add_term(d, s * v);
    }
    out
}

/// Alternating face sum, extended equivariantly.
pub fn boundary_delta(c: &SimplexChain) -> SimplexChain {
    let mut out = Chain::new();
    for (cell, &v) in c.iter() {
        if cell.order() == 1 {
            continue;
        }
        for (j, b) in bits(cell.indices).enumerate() {
            let face = cell.indices & !(1 << b);
            let s = if j % 2 == 0 { 1 } else { -1 };
            out.add_term(SimplexCell::from_masks(face, cell.flips), s * v);
        }
    }
    out
}

/// `∂□(I) = Σ_{i ∉ I} (1 - g_i) □(i, I)`, extended equivariantly.
pub fn boundary_box(n: usize, c: &CubeChain) -> CubeChain {
    let mut out = Chain::new();
    for (cell, &v) in c.iter() {
        for i in 0..n {
            let b = 1 << i;
            if cell.indices & b != 0 {
                continue;
            }
            let s = if (cell.indices & (b - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
            let j = cell.indices | b;
            out.add_term(CubeCell::from_masks(j, cell.flips), s * v);
            out.add_term(CubeCell::from_masks(j, cell.flips | b), -s * v);
        }
    }
    out
}

/// `⟨g□(I), hΔ(J)⟩ = ε(g)` when `I = J` and `g = h` in `G(I)`, else 0.
pub fn duality_pairing(a: &CubeCell, b: &SimplexCell) -> i64 {
    if a.indices == b.indices && a.flips == b.flips {
        parity(a.flips)
    } else {
        0
    }
}

pub fn pair_chains(a: &CubeChain, b: &SimplexChain) -> i64 {
    a.iter()
        .map(|(ca, &va)| {
            let sb = SimplexCell::from_masks(ca.indices, ca.flips);
            va * b.coefficient(&sb) * duality_pairing(ca, &sb)
        })
        .sum()
}

fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = Mask> {
    (0..(1u64 << n)).map(|m| m as Mask).filter(move |m| m.count_ones() as usize == k)
}

fn submasks(m: Mask) -> impl Iterator<Item = Mask> {
    let mut next = Some(m);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & m) };
        Some(cur)
    })
}

/// All `gΔ(I)` with `dim = k`.
pub fn simplices(n: usize, k: usize) -> Vec<SimplexCell> {
    let mut out: Vec<SimplexCell> = subsets_of_size(n, k + 1)
        .flat_map(|i| submasks(i).map(move |g| SimplexCell::from_masks(i, g)))
        .collect();
    out.sort();
    out
}

/// All `g□(I)` with `dim = d`.
pub fn cubes(n: usize, d: usize) -> Vec<CubeCell> {
    if d >= n {
        return Vec::new();
    }
    let mut out: Vec<CubeCell> = subsets_of_size(n, n - d)
        .flat_map(|i| submasks(i).map(move |g| CubeCell::from_masks(i, g)))
        .collect();
    out.sort();
    out
}

/// Chain on the product complex `Δ_*(∂P) × □_*(S^{n-1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleChain {
    n: usize,
    terms: BTreeMap<(SimplexCell, CubeCell), i64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CellRecord {
    #[serde(rename = "I")]
    pub indices: Vec<usize>,
    #[serde(rename = "g")]
    pub signs: Vec<i8>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DoubleChainTerm {
    pub simplex: CellRecord,
    pub cube: CellRecord,
    #[serde(rename = "coeff")]
    pub coefficient: i64,
}

impl DoubleChain {
    pub fn new(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, a: SimplexCell, b: CubeCell, v: i64) {
        if v == 0 {
            return;
        }
        let e = self.terms.entry((a, b)).or_insert(0);
        *e += v;
        if *e == 0 {
            self.terms.remove(&(a, b));
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SimplexCell, CubeCell), &i64)> {
        self.terms.iter()
    }

    /// Terms whose simplex has dimension `k`.
    pub fn level(&self, k: usize) -> Self {
        let mut out = Self::new(self.n);
        for (&(a, b), &v) in &self.terms {
            if a.dim() == k {
                out.add_term(a, b, v);
            }
        }
        out
    }

    fn record(n: usize, indices: Mask, flips: Mask) -> CellRecord {
        CellRecord { indices: mask_indices(indices), signs: GroupElement { n, flips }.signs() }
    }

    pub fn to_records(&self) -> Vec<DoubleChainTerm> {
        self.terms
            .iter()
            .map(|(&(a, b), &v)| DoubleChainTerm {
                simplex: Self::record(self.n, a.indices, a.flips),
                cube: Self::record(self.n, b.indices, b.flips),
                coefficient: v,
            })
            .collect()
    }

    /// Inverse of [`DoubleChain::to_records`]; signs outside a cell's index
    /// set act through the group action.
    pub fn from_records(n: usize, records: &[DoubleChainTerm]) -> Result<Self> {
        let mut out = Self::new(n);
        for r in records {
            let ga = GroupElement::from_signs(&r.simplex.signs)?;
            let gb = GroupElement::from_signs(&r.cube.signs)?;
            if ga.n != n || gb.n != n {
                return Err(Error::Input("sign vectors must have length n".into()));
            }
            let (Some((a, sa)), Some((b, sb))) = (
                SimplexCell::new(&GroupElement::identity(n), &r.simplex.indices)?,
                CubeCell::new(&GroupElement::identity(n), &r.cube.indices)?,
            ) else {
                continue;
            };
            let (a, ta) = a.act(&ga);
            let (b, tb) = b.act(&gb);
            out.add_term(a, b, sa * sb * ta * tb * r.coefficient);
        }
        Ok(out)
    }
}

/// `∂(a × b) = ∂_Δ a × b + (-1)^{dim a + 1} a × ∂_□ b`.
pub fn boundary_double(z: &DoubleChain) -> DoubleChain {
    let n = z.n;
    let mut out = DoubleChain::new(n);
    for (&(a, b), &v) in &z.terms {
        for (fa, &s) in boundary_delta(&Chain::from_cell(a, 1)).iter() {
            out.add_term(*fa, b, s * v);
        }
        let sign = if a.dim() % 2 == 0 { -1 } else { 1 };
        for (fb, &s) in boundary_box(n, &Chain::from_cell(b, 1)).iter() {
            out.add_term(a, *fb, sign * s * v);
        }
    }
    out
}

/// `(-1)^{k(k-1)/2}`.
pub fn level_sign(k: usize) -> i64 {
    if (k * k.saturating_sub(1) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `z = Σ_k (-1)^{k(k-1)/2} Σ_{|I| = k+1} Σ_{g ∈ G(I)} ε(g) gΔ(I) × g□(I)`.
pub fn fundamental_cycle(n: usize) -> Result<DoubleChain> {
    if n < 2 {
        return Err(Error::Domain(format!("fundamental cycle needs n >= 2, got {n}")));
    }
    check_n(n)?;
    let mut z = DoubleChain::new(n);
    for k in 0..n {
        for a in simplices(n, k) {
            z.add_term(a, CubeCell::from_masks(a.indices, a.flips), level_sign(k) * parity(a.flips));
        }
    }
    Ok(z)
}

/// `β(h, ·)`: `gΔ(I) × b ↦ ε(h) gΔ(I) × h b`.
pub fn beta_action(h: &GroupElement, z: &DoubleChain) -> DoubleChain {
    let mut out = DoubleChain::new(z.n);
    let e = h.epsilon();
    for (&(a, b), &v) in &z.terms {
        let (hb, s) = b.act(h);
        out.add_term(a, hb, e * s * v);
    }
    out
}

/// Collapses the vertex terms of `z` onto the fiber over the center.
pub fn fiber_limit(z: &DoubleChain) -> CubeChain {
    let mut out = Chain::new();
    for (&(a, b), &v) in &z.terms {
        if a.dim() == 0 {
            out.add_term(b, v);
        }
    }
    out
}

/// `Σ_i (□(i) + (-1)^n A □(i))` with `A` the antipodal map.
pub fn fiber_fundamental_class(n: usize) -> CubeChain {
    let a = GroupElement::antipodal(n);
    let sign = if n % 2 == 0 { 1 } else { -1 };
    let mut out = Chain::new();
    for i in 0..n {
        let c = CubeCell::from_masks(1 << i, 0);
        out.add_term(c, 1);
        let (ac, s) = c.act(&a);
        out.add_term(ac, sign * s);
    }
    out
}

/// `Σ_g ε(g) ε_I(g)`; `subset` holds 1-based indices.
pub fn character_sum(subset: &[usize], n: usize) -> Result<i64> {
    check_n(n)?;
    let (m, _) = normalize_indices(n, subset)?.ok_or_else(|| Error::Domain("repeated index in subset".into()))?;
    Ok(GroupElement::all(n).map(|g| g.epsilon() * g.epsilon_on(m)).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Homology {
    /// Betti numbers by dimension.
    pub betti: Vec<usize>,
    /// Torsion coefficients (invariant factors > 1) by dimension.
    pub torsion: Vec<Vec<i64>>,
}

/// Invariant factors of an integer matrix.
pub fn smith_normal_form(rows: usize, cols: usize, data: &[i64]) -> Result<Vec<i64>> {
    if data.len() != rows * cols {
        return Err(Error::Dimension("matrix data does not match shape".into()));
    }
    let mut a: Vec<Vec<i128>> = (0..rows).map(|r| data[r * cols..(r + 1) * cols].iter().map(|&x| x as i128).collect()).collect();
    let mut diag = Vec::new();
    let overflow = || Error::Domain("integer overflow in Smith normal form".into());
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize, i128)> = None;
        for (r, row) in a.iter().enumerate().skip(t) {
            for (c, &v) in row.iter().enumerate().skip(t) {
                if v != 0 && best.is_none_or(|b| v.abs() < b.2) {
                    best = Some((r, c, v.abs()));
                }
            }
        }
        let Some((pr, pc, _)) = best else { break };
        a.swap(t, pr);
        for row in a.iter_mut() {
            row.swap(t, pc);
        }
        loop {
            let p = a[t][t];
            let mut dirty = false;
            for r in t + 1..rows {
                if a[r][t] != 0 {
                    let q = a[r][t] / p;
                    let (head, tail) = a.split_at_mut(r);
                    for c in t..cols {
                        tail[0][c] = tail[0][c].checked_sub(q.checked_mul(head[t][c]).ok_or_else(overflow)?).ok_or_else(overflow)?;
                    }
                    dirty |= a[r][t] != 0;
                }
            }
            for c in t + 1..cols {
                if a[t][c] != 0 {
                    let q = a[t][c] / p;
                    for row in a.iter_mut().skip(t) {
                        row[c] = row[c].checked_sub(q.checked_mul(row[t]).ok_or_else(overflow)?).ok_or_else(overflow)?;
                    }
                    dirty |= a[t][c] != 0;
                }
            }
            if !dirty {
                let bad = (t + 1..rows).find(|&r| a[r][t + 1..].iter().any(|&v| v % p != 0));
                match bad {
                    None => break,
                    Some(r) => {
                        for c in t..cols {
                            a[t][c] += a[r][c];
                        }
                        continue;
                    }
                }
            }
            let mut m: Option<(usize, usize, i128)> = None;
            for (r, row) in a.iter().enumerate().skip(t) {
                for (c, &v) in row.iter().enumerate().skip(t) {
                    if (r == t || c == t) && v != 0 && m.is_none_or(|b| v.abs() < b.2) {
                        m = Some((r, c, v.abs()));
                    }
                }
            }
            let (mr, mc, _) = m.expect("pivot row or column is nonzero");
            a.swap(t, mr);
            for row in a.iter_mut() {
                row.swap(t, mc);
            }
        }
        diag.push(i64::try_from(a[t][t].abs()).map_err(|_| overflow())?);
        t += 1;
    }
    Ok(diag)
}

fn homology_from(dims: &[usize], boundaries: &[(usize, usize, Vec<i64>)]) -> Result<Homology> {
    // boundaries[d] maps C_{d+1} -> C_d
    let mut ranks = Vec::new();
    let mut tors = Vec::new();
    for (r, c, m) in boundaries {
        let f = smith_normal_form(*r, *c, m)?;
        ranks.push(f.len());
        tors.push(f.into_iter().filter(|&x| x > 1).collect::<Vec<_>>());
    }
    let top = dims.len();
    let mut betti = Vec::with_capacity(top);
    let mut torsion = Vec::with_capacity(top);
    for d in 0..top {
        let out_rank = if d > 0 { ranks[d - 1] } else { 0 };
        let in_rank = if d < ranks.len() { ranks[d] } else { 0 };
        betti.push(dims[d] - out_rank - in_rank);
        torsion.push(if d < tors.len() { tors[d].clone() } else { Vec::new() });
    }
    Ok(Homology { betti, torsion })
}

fn index_of<C: Ord>(cells: &[C]) -> BTreeMap<&C, usize> {
    cells.iter().enumerate().map(|(i, c)| (c, i)).collect()
}

/// Integer homology of `□_*(S^{n-1})`.
pub fn homology_box(n: usize) -> Result<Homology> {
    check_n(n)?;
    let levels: Vec<Vec<CubeCell>> = (0..n).map(|d| cubes(n, d)).collect();
    let mut bds = Vec::new();
    for d in 1..n {
        let rows = &levels[d - 1];
        let idx = index_of(rows);
        let cols = &levels[d];
        let mut m = vec![0i64; rows.len() * cols.len()];
        for (j, c) in cols.iter().enumerate() {
            for (f, &v) in boundary_box(n, &Chain::from_cell(*c, 1)).iter() {
                m[idx[f] * cols.len() + j] = v;
            }
        }
        bds.push((rows.len(), cols.len(), m));
    }
    homology_from(&levels.iter().map(Vec::len).collect::<Vec<_>>(), &bds)
}

/// Integer homology of `Δ_*(∂P)`.
pub fn homology_delta(n: usize) -> Result<Homology> {
    check_n(n)?;
    let levels: Vec<Vec<SimplexCell>> = (0..n).map(|k| simplices(n, k)).collect();
    let mut bds = Vec::new();
    for k in 1..n {
        let rows = &levels[k - 1];
        let idx = index_of(rows);
        let cols = &levels[k];
        let mut m = vec![0i64; rows.len() * cols.len()];
        for (j, c) in cols.iter().enumerate() {
            for (f, &v) in boundary_delta(&Chain::from_cell(*c, 1)).iter() {
                m[idx[f] * cols.len() + j] = v;
            }
        }
        bds.push((rows.len(), cols.len(), m));
    }
    homology_from(&levels.iter().map(Vec::len).collect::<Vec<_>>(), &bds)
}

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolidAngleReport {
    /// Fractions ordered `□(1)+, □(1)-, □(2)+, ...`.
    pub fractions: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

fn coframe_matrix(coframe: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = coframe.len();
    if n == 0 || coframe.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("coframe must be a nonempty square matrix".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| coframe[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Frame("coframe has non-finite entries".into()));
    }
    let sv = m.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if hi == 0.0 || lo / hi < 1e-12 {
        return Err(Error::Frame(format!("singular coframe (condition {:e})", if lo == 0.0 { f64::INFINITY } else { hi / lo })));
    }
    Ok(m)
}

/// Monte Carlo estimate of the fraction of `S^{n-1}` in each dual cell
/// `{v : ±dy_i(v) >= |dy_j(v)|}`, where row `j` of `coframe` holds `dy_j` on
/// an orthonormal frame. Streams are seeded per chunk, so the result does not
/// depend on the thread count.
pub fn solid_angles(coframe: &[Vec<f64>], samples: usize, seed: u64) -> Result<SolidAngleReport> {
    let m = coframe_matrix(coframe)?;
    let n = m.nrows();
    if samples == 0 {
        return Err(Error::Input("sample count must be positive".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut cnt = vec![0u64; 2 * n];
            let mut v = vec![0.0; n];
            for _ in 0..len {
                for x in v.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                let mut best = 0;
                let mut bv = 0.0f64;
                for j in 0..n {
                    let w: f64 = (0..n).map(|k| m[(j, k)] * v[k]).sum();
                    if w.abs() > bv.abs() {
                        best = j;
                        bv = w;
                    }
                }
                cnt[2 * best + usize::from(bv < 0.0)] += 1;
            }
            cnt
        })
        .collect();
    let mut total = vec![0u64; 2 * n];
    for c in &counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    Ok(SolidAngleReport { fractions: total.iter().map(|&c| c as f64 / samples as f64).collect(), samples, seed })
}

/// Fraction of the sphere in `□(i)±` for a 1-based axis `i`.
pub fn solid_angle(i: usize, side: Side, coframe: &[Vec<f64>], samples: usize, seed: u64) -> Result<f64> {
    let n = coframe.len();
    if i == 0 || i > n {
        return Err(Error::Domain(format!("axis {i} outside 1..={n}")));
    }
    let r = solid_angles(coframe, samples, seed)?;
    Ok(r.fractions[2 * (i - 1) + usize::from(side == Side::Minus)])
}

/// Correctly rounded sum of floats.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &x0 in xs {
        let mut x = x0;
        let mut k = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[k] = lo;
                k += 1;
            }
            x = hi;
        }
        partials.truncate(k);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else { return 0.0 };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // half-way correction
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// `1 - Σ fractions` with the sum correctly rounded, so fractions that
/// are the nearest floats to an exact tiling give exactly 0.
pub fn hazzidakis_rhs(fractions: &[f64]) -> Result<f64> {
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Domain(format!("angle fraction {f} outside [0, 1]")));
    }
    Ok(1.0 - exact_sum(fractions))
}

/// Dual-cell fractions `(π - α_i)/2π` of a polygon with interior angles `α_i`.
pub fn fractions_from_interior_angles(angles: &[f64]) -> Vec<f64> {
    angles.iter().map(|a| (PI - a) / (2.0 * PI)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: usize) -> GroupElement {
        GroupElement::identity(n)
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(id(3).epsilon(), 1);
        assert_eq!(GroupElement::generator(3, 1).unwrap().epsilon(), -1);
        assert_eq!(GroupElement::antipodal(4).epsilon(), 1);
        assert_eq!(GroupElement::antipodal(5).epsilon(), -1);
        assert_eq!(GroupElement::all(4).count(), 16);
    }

    #[test]
    fn reorder_and_repeat() {
        assert_eq!(normalize_indices(4, &[3, 1, 2]).unwrap(), Some((0b111, 1)));
        assert_eq!(normalize_indices(4, &[2, 1]).unwrap(), Some((0b11, -1)));
        assert_eq!(normalize_indices(4, &[4, 3, 2, 1]).unwrap(), Some((0b1111, 1)));
        assert_eq!(normalize_indices(4, &[1, 1]).unwrap(), None);
        assert!(normalize_indices(4, &[5]).is_err());
    }

    #[test]
    fn delta_boundary_example() {
        let d = boundary_delta(&simplex(&id(3), &[1, 2], 1).unwrap());
        let want = simplex(&id(3), &[2], 1).unwrap().add(&simplex(&id(3), &[1], -1).unwrap());
        assert_eq!(d, want);
        assert!(boundary_delta(&boundary_delta(&simplex(&id(3), &[1, 2, 3], 1).unwrap())).is_zero());
    }

    #[test]
    fn box_boundary_example() {
        let n = 2;
        let d = boundary_box(n, &cube(&id(n), &[1], 1).unwrap());
        let g2 = GroupElement::generator(n, 2).unwrap();
        let mut want = cube(&id(n), &[2, 1], 1).unwrap();
        want = want.add(&act_cubes(&g2, &cube(&id(n), &[2, 1], -1).unwrap()));
        assert_eq!(d, want);
        assert_eq!(d.coefficient(&CubeCell::from_masks(0b11, 0)), -1);
        assert!(boundary_box(3, &boundary_box(3, &cube(&id(3), &[1], 1).unwrap())).is_zero());
        assert!(boundary_box(3, &cube(&id(3), &[1, 2, 3], 1).unwrap()).is_zero());
    }

    #[test]
    fn pairing_examples() {
        let c = CubeCell::from_masks(0b11, 0);
        let (s, _) = SimplexCell::new(&id(2), &[1, 2]).unwrap().unwrap();
        assert_eq!(duality_pairing(&c, &s), 1);
        let b = simplex(&id(2), &[2, 1], 1).unwrap();
        assert_eq!(pair_chains(&Chain::from_cell(c, 1), &b), -1);
    }

    #[test]
    fn complexes_square_to_zero_and_commute_with_g() {
        for n in 1..=6 {
            for d in 0..n {
                for c in cubes(n, d) {
                    let ch = Chain::from_cell(c, 1);
                    assert!(boundary_box(n, &boundary_box(n, &ch)).is_zero());
                }
                for s in simplices(n, d) {
                    let ch = Chain::from_cell(s, 1);
                    assert!(boundary_delta(&boundary_delta(&ch)).is_zero());
                }
            }
        }
        for n in 1..=5 {
            for h in GroupElement::all(n) {
                for d in 0..n {
                    for c in cubes(n, d) {
                        let ch = Chain::from_cell(c, 1);
                        assert_eq!(boundary_box(n, &act_cubes(&h, &ch)), act_cubes(&h, &boundary_box(n, &ch)));
                    }
                    for s in simplices(n, d) {
                        let ch = Chain::from_cell(s, 1);
                        assert_eq!(boundary_delta(&act_simplices(&h, &ch)), act_simplices(&h, &boundary_delta(&ch)));
                    }
                }
            }
        }
    }

    #[test]
    fn adjointness_exhaustive() {
        for n in 2..=5 {
            for k in 0..n - 1 {
                for a in cubes(n, n - 1 - k) {
                    let da = boundary_box(n, &Chain::from_cell(a, 1));
                    for b in simplices(n, k + 1) {
                        let db = boundary_delta(&Chain::from_cell(b, 1));
                        let lhs = pair_chains(&da, &Chain::from_cell(b, 1));
                        let rhs = pair_chains(&Chain::from_cell(a, 1), &db);
                        assert_eq!(lhs, rhs, "n={n} {a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn cell_counts() {
        assert_eq!(simplices(3, 2).len(), 8);
        for n in 2..=6 {
            for k in 0..n {
                let want = (1usize << (k + 1)) * binom(n, k + 1);
                assert_eq!(simplices(n, k).len(), want);
                assert_eq!(cubes(n, n - 1 - k).len(), want);
            }
        }
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn fundamental_cycle_is_closed() {
        assert!(fundamental_cycle(1).is_err());
        let z2 = fundamental_cycle(2).unwrap();
        assert_eq!(z2.level(0).len(), 4);
        assert_eq!(z2.level(1).len(), 4);
        for n in 2..=6 {
            let z = fundamental_cycle(n).unwrap();
            assert!(boundary_double(&z).is_empty(), "n={n}");
            for h in GroupElement::all(n) {
                assert!(boundary_double(&beta_action(&h, &z)).is_empty(), "n={n} h={h:?}");
            }
        }
    }

    #[test]
    fn level_signs_forced() {
        // with ∂ = ∂_1 + (-1)^{k+1} ∂_2 the only closed combination of the
        // ε-weighted levels has the sign pattern above, up to overall sign
        for n in 2..=5 {
            for pattern in 0u32..(1 << n) {
                let mut z = DoubleChain::new(n);
                for k in 0..n {
                    let s = if pattern >> k & 1 == 1 { -1 } else { 1 };
                    for a in simplices(n, k) {
                        z.add_term(a, CubeCell::from_masks(a.indices, a.flips), s * parity(a.flips));
                    }
                }
                let closed = boundary_double(&z).is_empty();
                let matches = (0..n).all(|k| {
                    let s = if pattern >> k & 1 == 1 { -1 } else { 1 };
                    s == level_sign(k)
                }) || (0..n).all(|k| {
                    let s = if pattern >> k & 1 == 1 { -1 } else { 1 };
                    s == -level_sign(k)
                });
                assert_eq!(closed, matches, "n={n} pattern={pattern:b}");
            }
        }
    }

    #[test]
    fn unweighted_cycle_is_not_closed() {
        let n = 3;
        let mut z = DoubleChain::new(n);
        for k in 0..n {
            for a in simplices(n, k) {
                z.add_term(a, CubeCell::from_masks(a.indices, a.flips), level_sign(k));
            }
        }
        assert!(!boundary_double(&z).is_empty());
    }

    #[test]
    fn beta_is_an_action() {
        for n in 2..=4 {
            let z = fundamental_cycle(n).unwrap();
            assert_eq!(beta_action(&id(n), &z), z);
            for h1 in GroupElement::all(n) {
                for h2 in GroupElement::all(n) {
                    assert_eq!(beta_action(&h1, &beta_action(&h2, &z)), beta_action(&h1.compose(&h2), &z));
                }
            }
        }
    }

    #[test]
    fn vertex_terms_collapse_to_fiber_class() {
        for n in 2..=7 {
            let z = fundamental_cycle(n).unwrap();
            let f = fiber_limit(&z);
            assert_eq!(f, fiber_fundamental_class(n));
            assert!(boundary_box(n, &f).is_empty());
            assert!(f.iter().all(|(_, &v)| v.abs() == 1));
            for h in GroupElement::all(n) {
                let fb = fiber_limit(&beta_action(&h, &z));
                assert!(fb == f || fb == f.scale(-1));
                assert!(boundary_box(n, &fb).is_empty());
            }
        }
    }

    #[test]
    fn character_sums() {
        assert_eq!(character_sum(&[1, 2, 3, 4], 4).unwrap(), 16);
        assert_eq!(character_sum(&[1, 2], 4).unwrap(), 0);
        assert_eq!(character_sum(&[], 4).unwrap(), 0);
        for n in 1..=8 {
            for m in 1..(1u32 << n) - 1 {
                assert_eq!(character_sum(&mask_indices(m), n).unwrap(), 0);
            }
        }
    }

    #[test]
    fn snf_small() {
        assert_eq!(smith_normal_form(2, 2, &[2, 4, 6, 8]).unwrap(), vec![2, 4]);
        assert_eq!(smith_normal_form(2, 2, &[2, 0, 0, 3]).unwrap(), vec![1, 6]);
        assert_eq!(smith_normal_form(1, 3, &[0, 0, 0]).unwrap(), Vec::<i64>::new());
        assert_eq!(smith_normal_form(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]).unwrap(), vec![1, 1, 2]);
    }

    #[test]
    fn homology_of_spheres() {
        assert_eq!(homology_box(2).unwrap().betti, vec![1, 1]);
        assert_eq!(homology_box(3).unwrap().betti, vec![1, 0, 1]);
        assert_eq!(homology_delta(3).unwrap().betti, vec![1, 0, 1]);
        for n in 3..=6 {
            let h = homology_box(n).unwrap();
            let mut want = vec![0; n];
            want[0] = 1;
            want[n - 1] = 1;
            assert_eq!(h.betti, want);
            assert!(h.torsion.iter().all(Vec::is_empty));
        }
    }

    #[test]
    fn chain_records_round_trip() {
        let g = GroupElement::from_signs(&[-1, 1, -1]).unwrap();
        let c = cube(&g, &[2], 3).unwrap().add(&cube(&id(3), &[1, 3], -1).unwrap());
        assert_eq!(c.coefficient(&CubeCell::from_masks(0b010, 0)), 3);
        let recs = ChainRecords::from_cubes(3, &c);
        let json = serde_json::to_string(&recs).unwrap();
        assert!(json.starts_with("{\"cells\":[{\"g\":"));
        let back: ChainRecords = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_cubes(3).unwrap(), c);
        let s = simplex(&g, &[3, 1], 2).unwrap();
        assert_eq!(ChainRecords::from_simplices(3, &s).to_simplices(3).unwrap(), s);
        let parsed: ChainRecords = serde_json::from_str(r#"{"cells":[{"g":[1,-1],"I":[2,1],"coeff":1}]}"#).unwrap();
        assert_eq!(parsed.to_simplices(2).unwrap(), simplex(&GroupElement::from_signs(&[1, -1]).unwrap(), &[1, 2], -1).unwrap());
        assert!(parsed.to_simplices(3).is_err());
    }

    #[test]
    fn cube_constructor_agrees_with_action() {
        for n in 1..=4 {
            for g in GroupElement::all(n) {
                for d in 0..n {
                    for c in cubes(n, d) {
                        let idx = c.indices();
                        let (moved, sign) = CubeCell::new(&id(n), &idx).unwrap().unwrap().0.act(&g);
                        assert_eq!(cube(&g, &idx, 1).unwrap(), Chain::from_cell(moved, sign));
                    }
                }
            }
        }
    }

    #[test]
    fn records_round_trip() {
        let z = fundamental_cycle(3).unwrap();
        let recs = z.to_records();
        let json = serde_json::to_string(&recs).unwrap();
        let back: Vec<DoubleChainTerm> = serde_json::from_str(&json).unwrap();
        assert_eq!(DoubleChain::from_records(3, &back).unwrap(), z);
    }

    fn eye(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn euclidean_solid_angles() {
        for n in 2..=4 {
            let r = solid_angles(&eye(n), DEFAULT_SAMPLES, DEFAULT_SEED).unwrap();
            for f in &r.fractions {
                assert!((f - 1.0 / (2 * n) as f64).abs() < 2e-3, "n={n} {f}");
            }
            assert!((r.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sheared_matches_angular_quadrature() {
        let c = vec![vec![1.0, 0.0], vec![0.5, 1.0]];
        let r = solid_angles(&c, DEFAULT_SAMPLES, 7).unwrap();
        let m = 2_000_000;
        let mut cnt = [0usize; 4];
        for k in 0..m {
            let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let (x, y) = (t.cos(), t.sin());
            let w = [c[0][0] * x + c[0][1] * y, c[1][0] * x + c[1][1] * y];
            let j = if w[0].abs() >= w[1].abs() { 0 } else { 1 };
            cnt[2 * j + usize::from(w[j] < 0.0)] += 1;
        }
        for (i, &k) in cnt.iter().enumerate() {
            let q = k as f64 / m as f64;
            assert!((r.fractions[i] - q).abs() < 2e-3, "{i}: {} vs {q}", r.fractions[i]);
        }
    }

    #[test]
    fn solid_angle_is_deterministic_and_checks_input() {
        let c = eye(3);
        let a = solid_angle(2, Side::Minus, &c, 100_000, 3).unwrap();
        let b = solid_angle(2, Side::Minus, &c, 100_000, 3).unwrap();
        assert_eq!(a, b);
        let sing = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solid_angles(&sing, 10, 1), Err(Error::Frame(_))));
        assert!(solid_angle(4, Side::Plus, &c, 10, 1).is_err());
    }

    #[test]
    fn hazzidakis_rhs_values() {
        for n in 2..=8 {
            let f = vec![1.0 / (2 * n) as f64; 2 * n];
            assert_eq!(hazzidakis_rhs(&f).unwrap(), 0.0);
        }
        assert_eq!(hazzidakis_rhs(&[0.0; 6]).unwrap(), 1.0);
        assert!(hazzidakis_rhs(&[1.5, 0.0]).is_err());
        let angles = [1.2, 1.4, 1.1, 1.3];
        let rhs = hazzidakis_rhs(&fractions_from_interior_angles(&angles)).unwrap();
        assert!((rhs - (angles.iter().sum::<f64>() / (2.0 * PI) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn exact_sum_cases() {
        assert_eq!(exact_sum(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum(&[0.1; 10]), 1.0);
        assert_eq!(exact_sum(&[]), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn random_coframes_tile(n in 2usize..=4, seed in 0u64..1000, entries in proptest::collection::vec(-1.0f64..1.0, 16)) {
                let c: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| entries[i * 4 + j] + if i == j { 2.0 } else { 0.0 }).collect()).collect();
                let r = solid_angles(&c, 20_000, seed).unwrap();
                prop_assert!((r.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(r.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
            }

            #[test]
            fn exact_sum_matches_integers(xs in proptest::collection::vec(-1_000_000i64..1_000_000, 0..40)) {
                let fs: Vec<f64> = xs.iter().map(|&x| x as f64 * 0.125).collect();
                prop_assert_eq!(exact_sum(&fs), xs.iter().sum::<i64>() as f64 * 0.125);
            }
        }
    }
}

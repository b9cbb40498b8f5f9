//! Differential forms on a sampled chart with values in the exterior algebra
//! of a trivialized rank-`n` bundle.
//!
//! A component `φ dy_A e_P` is stored under the pair of bit masks `(A, P)`:
//! base bit `k` stands for `dy_{k+1}` and fiber bit `i` for `e_{i+1}`. Index
//! tuples are always kept increasing; signs are resolved when components are
//! built or combined.

mod coeff;
mod grid;
mod quadrature;

pub use coeff::{Coeff, PointFn};
pub use grid::ChartGrid;
pub use quadrature::{weights, Quadrature};

use crate::error::{Error, Result};
use crate::pfaffian::CommutingRing;
use rayon::prelude::*;
use std::collections::BTreeMap;

pub type Mask = u32;

/// Canonical mask of an index tuple together with the sign of the sorting
/// permutation; the sign is 0 when an index repeats.
pub fn mask_of(indices: &[usize]) -> (Mask, f64) {
    let mut mask: Mask = 0;
    let mut sign = 1.0;
    for &i in indices {
        let bit = 1 << i;
        if mask & bit != 0 {
            return (0, 0.0);
        }
        if (mask >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= bit;
    }
    (mask, sign)
}

/// Sign of sorting the concatenation of two disjoint increasing tuples.
pub fn merge_sign(a: Mask, b: Mask) -> f64 {
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn indices(mask: Mask) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Removes the bits listed in `axes` and shifts the survivors down.
fn compress(mask: Mask, axes: &[usize]) -> Mask {
    let mut out = 0;
    let mut pos = 0;
    for i in 0..32 {
        if axes.contains(&i) {
            continue;
        }
        if mask & (1 << i) != 0 {
            out |= 1 << pos;
        }
        pos += 1;
    }
    out
}

/// Edge-decay policy applied by [`MixedForm::fiber_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationCheck {
    None,
    BothEnds(f64),
    UpperEnd(f64),
}

/// Element of `A^{*,*}`: a possibly inhomogeneous sum of bigraded components.
#[derive(Clone, Debug)]
pub struct MixedForm {
    grid: ChartGrid,
    fiber_rank: usize,
    terms: BTreeMap<(Mask, Mask), Coeff>,
}

/// Formal sums share the representation of homogeneous forms.
pub type MixedSum = MixedForm;

impl MixedForm {
    pub fn zero(grid: &ChartGrid, fiber_rank: usize) -> Self {
        Self { grid: grid.clone(), fiber_rank, terms: BTreeMap::new() }
    }

    pub fn scalar(grid: &ChartGrid, fiber_rank: usize, c: impl Into<Coeff>) -> Self {
        let mut f = Self::zero(grid, fiber_rank);
        f.terms.insert((0, 0), c.into());
        f
    }

    pub fn one(grid: &ChartGrid, fiber_rank: usize) -> Self {
        Self::scalar(grid, fiber_rank, 1.0)
    }

    /// `c dy_{base} e_{fiber}` for arbitrary (possibly unsorted) 0-based index tuples.
    pub fn monomial(
        grid: &ChartGrid,
        fiber_rank: usize,
        base: &[usize],
        fiber: &[usize],
        c: impl Into<Coeff>,
    ) -> Result<Self> {
        let c = c.into();
        if let Some(&k) = base.iter().find(|&&k| k >= grid.base_dim()) {
            return Err(Error::Dimension(format!("base index {k} out of range")));
        }
        if let Some(&i) = fiber.iter().find(|&&i| i >= fiber_rank) {
            return Err(Error::Dimension(format!("fiber index {i} out of range")));
        }
        if let Coeff::Grid(v) = &c {
            if v.len() != grid.len() {
                return Err(Error::Grid(format!("coefficient has {} samples, grid has {}", v.len(), grid.len())));
            }
        }
        let (a, sa) = mask_of(base);
        let (p, sp) = mask_of(fiber);
        let mut f = Self::zero(grid, fiber_rank);
        if sa * sp != 0.0 {
            f.terms.insert((a, p), c.scale(sa * sp));
        }
        Ok(f)
    }

    /// The base 1-form `dy_k`.
    pub fn dy(grid: &ChartGrid, fiber_rank: usize, k: usize) -> Self {
        Self::monomial(grid, fiber_rank, &[k], &[], 1.0).expect("valid base index")
    }

    /// The fiber generator `e_i`.
    pub fn e(grid: &ChartGrid, fiber_rank: usize, i: usize) -> Self {
        Self::monomial(grid, fiber_rank, &[], &[i], 1.0).expect("valid fiber index")
    }

    /// Fiber volume element `e_1 ∧ ... ∧ e_n`.
    pub fn fiber_volume(grid: &ChartGrid, fiber_rank: usize) -> Self {
        let all: Vec<usize> = (0..fiber_rank).collect();
        Self::monomial(grid, fiber_rank, &[], &all, 1.0).expect("valid fiber indices")
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    pub fn fiber_rank(&self) -> usize {
        self.fiber_rank
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Mask, Mask), &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Bidegree when all stored components share one; `None` for the empty form.
    pub fn bidegree(&self) -> Result<Option<(usize, usize)>> {
        let mut degs = self
            .terms
            .keys()
            .map(|&(a, p)| (a.count_ones() as usize, p.count_ones() as usize));
        let Some(first) = degs.next() else { return Ok(None) };
        if degs.any(|d| d != first) {
            return Err(Error::Degree("form is not homogeneous".into()));
        }
        Ok(Some(first))
    }

    /// Signed coefficient of `dy_{base} e_{fiber}`, if stored.
    pub fn component(&self, base: &[usize], fiber: &[usize]) -> Option<Coeff> {
        let (a, sa) = mask_of(base);
        let (p, sp) = mask_of(fiber);
        if sa * sp == 0.0 {
            return None;
        }
        self.terms.get(&(a, p)).map(|c| c.scale(sa * sp))
    }

    /// Sampled coefficient of `dy_{base} e_{fiber}`; zeros when absent.
    pub fn values(&self, base: &[usize], fiber: &[usize]) -> Vec<f64> {
        match self.component(base, fiber) {
            Some(c) => c.materialize(&self.grid).to_vec(),
            None => vec![0.0; self.grid.len()],
        }
    }

    pub fn coeff_by_mask(&self, a: Mask, p: Mask) -> Option<&Coeff> {
        self.terms.get(&(a, p))
    }

    fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.grid != o.grid {
            return Err(Error::Grid("forms live on different grids".into()));
        }
        if self.fiber_rank != o.fiber_rank {
            return Err(Error::Grid(format!(
                "fiber ranks differ: {} vs {}",
                self.fiber_rank, o.fiber_rank
            )));
        }
        Ok(())
    }

    fn insert_add(&mut self, key: (Mask, Mask), c: Coeff) {
        match self.terms.get(&key) {
            Some(old) => {
                let sum = old.add(&c, &self.grid);
                self.terms.insert(key, sum);
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let mut out = self.clone();
        for (&k, c) in &o.terms {
            out.insert_add(k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&k, v) in &self.terms {
            out.terms.insert(k, v.scale(c));
        }
        out
    }

    /// Multiplies every component by a scalar function.
    pub fn mul_coeff(&self, c: &Coeff) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&k, v) in &self.terms {
            out.terms.insert(k, v.mul(c, &self.grid));
        }
        out
    }

    /// Skew-commutative product `(dy_A e_P)(dy_B e_Q) = (-1)^{|B||P|} dy_A dy_B e_P e_Q`.
    pub fn wedge(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&(a, p), c1) in &self.terms {
            for (&(b, q), c2) in &o.terms {
                if a & b != 0 || p & q != 0 {
                    continue;
                }
                let mut sign = merge_sign(a, b) * merge_sign(p, q);
                if (b.count_ones() * p.count_ones()) % 2 == 1 {
                    sign = -sign;
                }
                let c = c1.mul(c2, &self.grid);
                out.insert_add((a | b, p | q), if sign < 0.0 { c.scale(-1.0) } else { c });
            }
        }
        Ok(out)
    }

    /// Base exterior derivative, treating the fiber generators as constant.
    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            if c.as_const().is_some() {
                continue;
            }
            for k in 0..self.grid.base_dim() {
                let bit = 1 << k;
                if a & bit != 0 {
                    continue;
                }
                let dc = c.derivative(&self.grid, k);
                out.insert_add((a | bit, p), dc.scale(merge_sign(bit, a)));
            }
        }
        out
    }

    /// Interior product with the fiber vector field `Σ v_i e_i`, acting as an
    /// odd derivation on fiber generators and passing base generators with sign.
    pub fn interior_product(&self, v: &[Coeff]) -> Result<Self> {
        if v.len() != self.fiber_rank {
            return Err(Error::Dimension(format!(
                "vector field has {} components, fiber rank is {}",
                v.len(),
                self.fiber_rank
            )));
        }
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            let base_sign = if a.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            for (r, i) in indices(p).into_iter().enumerate() {
                let sign = base_sign * if r % 2 == 0 { 1.0 } else { -1.0 };
                let term = c.mul(&v[i], &self.grid).scale(sign);
                out.insert_add((a, p & !(1 << i)), term);
            }
        }
        Ok(out)
    }

    /// Coefficient of the fiber volume element. Every stored component must
    /// have full fiber degree; use [`Self::fiber_component`] to project first.
    pub fn supertrace(&self) -> Result<Self> {
        let full = self.full_fiber_mask();
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            if p != full {
                return Err(Error::Degree(format!(
                    "supertrace needs fiber degree {}, found {}",
                    self.fiber_rank,
                    p.count_ones()
                )));
            }
            out.terms.insert((a, 0), c.clone());
        }
        Ok(out)
    }

    /// Supertrace of the top fiber-degree part, discarding the rest.
    pub fn top_supertrace(&self) -> Self {
        self.fiber_component(self.fiber_rank).supertrace().expect("projected to top degree")
    }

    fn full_fiber_mask(&self) -> Mask {
        ((1u64 << self.fiber_rank) - 1) as Mask
    }

    pub fn fiber_component(&self, q: usize) -> Self {
        self.filter(|_, p| p.count_ones() as usize == q)
    }

    pub fn base_component(&self, d: usize) -> Self {
        self.filter(|a, _| a.count_ones() as usize == d)
    }

    pub fn filter(&self, keep: impl Fn(Mask, Mask) -> bool) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            if keep(a, p) {
                out.terms.insert((a, p), c.clone());
            }
        }
        out
    }

    /// Power series of an even element. The scalar part is exponentiated
    /// pointwise and the nilpotent remainder by its terminating series.
    pub fn exp_even(&self) -> Result<Self> {
        for &(a, p) in self.terms.keys() {
            if (a.count_ones() + p.count_ones()) % 2 == 1 {
                return Err(Error::Degree(format!(
                    "exp_even needs even total degree, found ({}, {})",
                    a.count_ones(),
                    p.count_ones()
                )));
            }
        }
        let scalar = self.terms.get(&(0, 0)).cloned();
        let nil = self.filter(|a, p| a != 0 || p != 0);
        let mut total = Self::one(&self.grid, self.fiber_rank);
        let mut power = Self::one(&self.grid, self.fiber_rank);
        let max_k = (self.grid.base_dim() + self.fiber_rank) / 2;
        for k in 1..=max_k {
            power = power.wedge(&nil)?.scale(1.0 / k as f64);
            if power.is_empty() {
                break;
            }
            total = total.add(&power)?;
        }
        Ok(match scalar {
            Some(s) => total.mul_coeff(&s.map(&self.grid, f64::exp)),
            None => total,
        })
    }

    /// Integral of a top-degree scalar form over the chart.
    pub fn integrate(&self, rule: Quadrature) -> Result<f64> {
        let top = ((1u64 << self.grid.base_dim()) - 1) as Mask;
        let mut total = 0.0;
        for (&(a, p), c) in &self.terms {
            if a != top || p != 0 {
                return Err(Error::Degree(format!(
                    "integrate needs bidegree ({}, 0), found ({}, {})",
                    self.grid.base_dim(),
                    a.count_ones(),
                    p.count_ones()
                )));
            }
            total += integrate_coeff(&self.grid, c, rule);
        }
        Ok(total)
    }

    /// Integration along the listed axes. The fiber factors are moved to the
    /// right end of each monomial before integrating; components lacking any
    /// of them integrate to zero.
    pub fn fiber_integrate(&self, axes: &[usize], rule: Quadrature, check: TruncationCheck) -> Result<Self> {
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if let Some(&a) = axes.iter().find(|&&a| a >= self.grid.base_dim()) {
            return Err(Error::Dimension(format!("fiber axis {a} out of range")));
        }
        let fmask: Mask = axes.iter().map(|&a| 1 << a).sum();
        let rest = self.grid.drop_axes(&axes);
        let mut out = Self::zero(&rest, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            if a & fmask != fmask {
                continue;
            }
            check_decay(&self.grid, c, &axes, check)?;
            let sign = merge_sign(a & !fmask, fmask);
            let integrated = partial_integrate(&self.grid, c, &axes, &rest, rule);
            out.insert_add((compress(a & !fmask, &axes), p), integrated.scale(sign));
        }
        Ok(out)
    }

    /// Pullback to the face `y_axis = lower` or `y_axis = upper`.
    pub fn restrict_to_face(&self, axis: usize, upper: bool) -> Result<Self> {
        if axis >= self.grid.base_dim() || self.grid.base_dim() < 2 {
            return Err(Error::Dimension(format!("cannot restrict axis {axis}")));
        }
        let rest = self.grid.drop_axes(&[axis]);
        let i = if upper { self.grid.resolution()[axis] - 1 } else { 0 };
        let mut out = Self::zero(&rest, self.fiber_rank);
        for (&(a, p), c) in &self.terms {
            if a & (1 << axis) != 0 {
                continue;
            }
            let restricted = match c {
                Coeff::Const(v) => Coeff::Const(*v),
                _ => {
                    let v = c.materialize(&self.grid);
                    let mut idx = vec![0usize; self.grid.base_dim()];
                    let stride = self.grid.stride(axis);
                    let picked: Vec<f64> = (0..self.grid.len())
                        .filter(|&flat| {
                            self.grid.unravel(flat, &mut idx);
                            idx[axis] == i
                        })
                        .map(|flat| v[flat])
                        .collect();
                    let _ = stride;
                    Coeff::from(picked)
                }
            };
            out.terms.insert((compress(a, &[axis]), p), restricted);
        }
        Ok(out)
    }

    /// `Θ/∂F` for a one-dimensional fiber `[lower, upper]` along `axis`,
    /// with the boundary oriented as `{upper} - {lower}`.
    pub fn fiber_boundary(&self, axis: usize) -> Result<Self> {
        self.restrict_to_face(axis, true)?.sub(&self.restrict_to_face(axis, false)?)
    }

    /// Pullback along the projection of `grid × extra` onto `grid`; the new
    /// axes are appended after the existing ones.
    pub fn extend_axes(&self, extra: &ChartGrid) -> Result<Self> {
        let mut bounds = self.grid.bounds().to_vec();
        bounds.extend_from_slice(extra.bounds());
        let mut res = self.grid.resolution().to_vec();
        res.extend_from_slice(extra.resolution());
        let big = ChartGrid::new(bounds, res)?;
        let block = extra.len();
        let mut out = Self::zero(&big, self.fiber_rank);
        for (&k, c) in &self.terms {
            let lifted = match c {
                Coeff::Grid(v) => Coeff::from((0..big.len()).map(|p| v[p / block]).collect::<Vec<f64>>()),
                other => other.clone(),
            };
            out.terms.insert(k, lifted);
        }
        Ok(out)
    }

    /// Largest coefficient magnitude over all components and samples.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.max_abs(&self.grid)))
    }

    /// Sup-norm distance to another form on the same grid.
    pub fn max_diff(&self, o: &Self) -> Result<f64> {
        Ok(self.sub(o)?.max_abs())
    }

    /// Sup-norm distance restricted to samples at least `margin` points away
    /// from every face of the chart.
    pub fn max_diff_interior(&self, o: &Self, margin: usize) -> Result<f64> {
        let d = self.sub(o)?;
        let g = &self.grid;
        let mut idx = vec![0usize; g.base_dim()];
        let mut worst = 0.0f64;
        for c in d.terms.values() {
            let v = c.materialize(g);
            for (flat, x) in v.iter().enumerate() {
                g.unravel(flat, &mut idx);
                let inside = idx
                    .iter()
                    .zip(g.resolution())
                    .all(|(&i, &r)| i >= margin && i + margin < r);
                if inside {
                    worst = worst.max(x.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Replaces every coefficient by its sampled values.
    pub fn materialized(&self) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&k, c) in &self.terms {
            let m = match c {
                Coeff::Const(_) => c.clone(),
                _ => Coeff::Grid(c.materialize(&self.grid)),
            };
            out.terms.insert(k, m);
        }
        out
    }

    /// Drops components whose sampled magnitude never exceeds `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::zero(&self.grid, self.fiber_rank);
        for (&k, c) in &self.terms {
            if c.max_abs(&self.grid) > tol {
                out.terms.insert(k, c.clone());
            }
        }
        out
    }

    /// Value of every component at one sample, keyed by masks.
    pub fn at(&self, flat: usize) -> BTreeMap<(Mask, Mask), f64> {
        let mut x = vec![0.0; self.grid.base_dim()];
        self.grid.point_at(flat, &mut x);
        self.terms.iter().map(|(&k, c)| (k, c.eval(flat, &x))).collect()
    }
}

fn check_decay(g: &ChartGrid, c: &Coeff, axes: &[usize], check: TruncationCheck) -> Result<()> {
    let (tol, both) = match check {
        TruncationCheck::None => return Ok(()),
        TruncationCheck::BothEnds(t) => (t, true),
        TruncationCheck::UpperEnd(t) => (t, false),
    };
    let d = g.base_dim();
    let mut worst = 0.0f64;
    for &axis in axes {
        let ends: Vec<usize> = if both { vec![0, g.resolution()[axis] - 1] } else { vec![g.resolution()[axis] - 1] };
        for end in ends {
            let face = g.drop_axes(&[axis]);
            let face_len = if d == 1 { 1 } else { face.len() };
            let mut fidx = vec![0usize; face.base_dim()];
            let mut x = vec![0.0; d];
            for ff in 0..face_len {
                if d > 1 {
                    face.unravel(ff, &mut fidx);
                }
                let mut flat = 0;
                let mut fi = 0;
                for ax in 0..d {
                    let i = if ax == axis {
                        end
                    } else {
                        fi += 1;
                        fidx[fi - 1]
                    };
                    x[ax] = g.coord(ax, i);
                    flat = flat * g.resolution()[ax] + i;
                }
                worst = worst.max(c.eval(flat, &x).abs());
            }
        }
    }
    if worst > tol {
        return Err(Error::Truncation { magnitude: worst, tol });
    }
    Ok(())
}

fn integrate_coeff(g: &ChartGrid, c: &Coeff, rule: Quadrature) -> f64 {
    let d = g.base_dim();
    if d == 0 {
        return c.eval(0, &[]);
    }
    let w: Vec<Vec<f64>> = (0..d).map(|a| weights(g.resolution()[a], g.spacing(a), rule)).collect();
    if let Coeff::Const(v) = c {
        return v * w.iter().map(|wa| wa.iter().sum::<f64>()).product::<f64>();
    }
    let slab = g.stride(0);
    let r0 = g.resolution()[0];
    // Per-slab partial sums are reduced in slab order, so the result does not
    // depend on how rayon schedules the slabs.
    let partial: Vec<f64> = (0..r0)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; d];
            idx[0] = i0;
            let mut x: Vec<f64> = (0..d).map(|a| g.coord(a, idx[a])).collect();
            let mut s = 0.0;
            for k in 0..slab {
                let flat = i0 * slab + k;
                let mut wt = 1.0;
                for a in 1..d {
                    wt *= w[a][idx[a]];
                }
                s += wt * c.eval(flat, &x);
                for a in (1..d).rev() {
                    idx[a] += 1;
                    if idx[a] < g.resolution()[a] {
                        x[a] = g.coord(a, idx[a]);
                        break;
                    }
                    idx[a] = 0;
                    x[a] = g.coord(a, 0);
                }
            }
            w[0][i0] * s
        })
        .collect();
    partial.iter().sum()
}

fn partial_integrate(g: &ChartGrid, c: &Coeff, axes: &[usize], rest: &ChartGrid, rule: Quadrature) -> Coeff {
    if rest.base_dim() == 0 {
        return Coeff::Const(integrate_coeff(g, c, rule));
    }
    if let Coeff::Const(v) = c {
        let vol: f64 = axes
            .iter()
            .map(|&a| weights(g.resolution()[a], g.spacing(a), rule).iter().sum::<f64>())
            .product();
        return Coeff::Const(v * vol);
    }
    let vals = c.materialize(g);
    let d = g.base_dim();
    let w: Vec<Vec<f64>> = (0..d).map(|a| weights(g.resolution()[a], g.spacing(a), rule)).collect();
    let mut out = vec![0.0; rest.len()];
    let mut idx = vec![0usize; d];
    for (flat, v) in vals.iter().enumerate() {
        g.unravel(flat, &mut idx);
        let mut wt = 1.0;
        let mut target = 0;
        for a in 0..d {
            if axes.contains(&a) {
                wt *= w[a][idx[a]];
            } else {
                target = target * g.resolution()[a] + idx[a];
            }
        }
        out[target] += wt * v;
    }
    Coeff::from(out)
}

/// Volume of the unit `S^{n-1}` by quadrature of the round volume form in
/// hyperspherical coordinates `(φ_1, …, φ_{n-2}) ∈ [0, π]`, `φ_{n-1} ∈ [0, 2π]`.
pub fn sphere_volume_quadrature(n: usize, resolution: usize, rule: Quadrature) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere chart needs n >= 2, got {n}")));
    }
    let mut bounds = vec![(0.0, std::f64::consts::PI); n - 2];
    bounds.push((0.0, 2.0 * std::f64::consts::PI));
    let g = ChartGrid::new(bounds, vec![resolution; n - 1])?;
    let density = g.sample(|x| {
        x[..n - 2]
            .iter()
            .enumerate()
            .map(|(k, &phi)| phi.sin().powi((n - 2 - k) as i32))
            .product()
    });
    let axes: Vec<usize> = (0..n - 1).collect();
    MixedForm::monomial(&g, 1, &axes, &[], density)?.integrate(rule)
}

/// Commuting ring of even-degree forms on a fixed grid, for Pfaffians of
/// form-valued matrices.
pub struct FormRing {
    pub grid: ChartGrid,
    pub fiber_rank: usize,
}

impl CommutingRing<MixedForm> for FormRing {
    fn zero(&self) -> MixedForm {
        MixedForm::zero(&self.grid, self.fiber_rank)
    }
    fn one(&self) -> MixedForm {
        MixedForm::one(&self.grid, self.fiber_rank)
    }
    fn add(&self, a: &MixedForm, b: &MixedForm) -> MixedForm {
        a.add(b).expect("same grid")
    }
    fn mul(&self, a: &MixedForm, b: &MixedForm) -> MixedForm {
        a.wedge(b).expect("same grid")
    }
    fn neg(&self, a: &MixedForm) -> MixedForm {
        a.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g2() -> ChartGrid {
        ChartGrid::cube(2, 0.0, 1.0, 21).unwrap()
    }

    fn coeff_eq(a: &MixedForm, b: &MixedForm, tol: f64) -> bool {
        a.max_diff(b).unwrap() <= tol
    }

    #[test]
    fn mask_signs() {
        assert_eq!(mask_of(&[0, 1]), (0b11, 1.0));
        assert_eq!(mask_of(&[1, 0]), (0b11, -1.0));
        assert_eq!(mask_of(&[1, 0, 2]), (0b111, -1.0));
        assert_eq!(mask_of(&[2, 0, 1]), (0b111, 1.0));
        assert_eq!(mask_of(&[1, 1]).1, 0.0);
        assert_eq!(merge_sign(0b10, 0b01), -1.0);
        assert_eq!(merge_sign(0b100, 0b011), 1.0);
    }

    #[test]
    fn wedge_antisymmetry_of_base_generators() {
        let g = g2();
        let t1 = MixedForm::dy(&g, 2, 0);
        let t2 = MixedForm::dy(&g, 2, 1);
        let a = t1.wedge(&t2).unwrap();
        let b = t2.wedge(&t1).unwrap();
        assert!(coeff_eq(&a, &b.scale(-1.0), 0.0));
        assert_eq!(a.component(&[0, 1], &[]).unwrap().as_const(), Some(1.0));
        assert!(t1.wedge(&t1).unwrap().is_empty());
    }

    #[test]
    fn square_of_tautological_form() {
        for n in 1..=4usize {
            let g = ChartGrid::cube(n, -1.0, 1.0, 3).unwrap();
            let mut x = MixedForm::zero(&g, n);
            for i in 0..n {
                x = x.add(&MixedForm::monomial(&g, n, &[i], &[i], 1.0).unwrap()).unwrap();
            }
            let mut p = MixedForm::one(&g, n);
            for _ in 0..n {
                p = p.wedge(&x).unwrap();
            }
            let all: Vec<usize> = (0..n).collect();
            let c = p.component(&all, &all).unwrap().as_const().unwrap();
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            assert_eq!(c, sign * fact, "n={n}");
        }
    }

    #[test]
    fn exterior_derivative_basics() {
        let g = g2();
        let y1 = Coeff::from(g.coordinate(0));
        let a = MixedForm::monomial(&g, 1, &[1], &[], y1).unwrap();
        let da = a.exterior_derivative();
        let expect = MixedForm::monomial(&g, 1, &[0, 1], &[], 1.0).unwrap();
        assert!(coeff_eq(&da, &expect, 1e-12));
        assert!(MixedForm::dy(&g, 1, 0).exterior_derivative().is_empty());
    }

    #[test]
    fn dd_vanishes_to_discretization_order() {
        let g = ChartGrid::cube(2, 0.0, 2.0, 81).unwrap();
        let f = MixedForm::scalar(&g, 1, g.sample(|x| x[0].sin() * x[1].cos()));
        let dd = f.exterior_derivative().exterior_derivative();
        let h = g.max_spacing();
        assert!(dd.max_diff_interior(&MixedForm::zero(&g, 1), 2).unwrap() <= 10.0 * h * h);
    }

    #[test]
    fn interior_product_examples() {
        let g = g2();
        let e12 = MixedForm::monomial(&g, 2, &[], &[0, 1], 1.0).unwrap();
        let v = vec![Coeff::Const(1.0), Coeff::Const(0.0)];
        let r = e12.interior_product(&v).unwrap().pruned(0.0);
        assert!(coeff_eq(&r, &MixedForm::e(&g, 2, 1), 0.0));
        let w = vec![Coeff::Const(0.0), Coeff::Const(1.0)];
        let r = e12.interior_product(&w).unwrap().pruned(0.0);
        assert!(coeff_eq(&r, &MixedForm::e(&g, 2, 0).scale(-1.0), 0.0));
    }

    #[test]
    fn supertrace_examples() {
        let g = ChartGrid::cube(1, 0.0, 1.0, 5).unwrap();
        let phi = Coeff::from(g.coordinate(0));
        let a = MixedForm::monomial(&g, 3, &[], &[0, 1, 2], phi.clone()).unwrap();
        let s = a.supertrace().unwrap();
        assert_eq!(s.values(&[], &[]), g.coordinate(0));
        let b = MixedForm::monomial(&g, 3, &[], &[1, 0, 2], phi).unwrap();
        let s = b.supertrace().unwrap();
        assert_eq!(s.values(&[], &[])[4], -1.0);
        assert!(matches!(MixedForm::e(&g, 3, 0).supertrace(), Err(Error::Degree(_))));
    }

    #[test]
    fn supertrace_of_curvature_operator() {
        // R = -(1/4) Σ_{i,j} Ω_ij e_i e_j with Ω_12 = K dy1 dy2, Ω_21 = -Ω_12.
        let g = g2();
        let k = Coeff::from(g.sample(|x| 1.0 + x[0] * x[1]));
        let om12 = MixedForm::monomial(&g, 2, &[0, 1], &[], k.clone()).unwrap();
        let mut r = MixedForm::zero(&g, 2);
        for (i, j, s) in [(0, 1, 1.0), (1, 0, -1.0)] {
            let eij = MixedForm::monomial(&g, 2, &[], &[i, j], 1.0).unwrap();
            r = r.add(&om12.scale(s).wedge(&eij).unwrap().scale(-0.25)).unwrap();
        }
        let st = r.top_supertrace();
        assert!(coeff_eq(&st, &om12.scale(-0.5), 1e-15));
    }

    #[test]
    fn exp_even_cases() {
        let g = g2();
        let e = MixedForm::zero(&g, 2).exp_even().unwrap();
        assert!(coeff_eq(&e, &MixedForm::one(&g, 2), 0.0));
        assert!(matches!(MixedForm::dy(&g, 2, 0).exp_even(), Err(Error::Degree(_))));
        // N = dy1 e1 + dy2 e2 terminates at total degree 4.
        let n = MixedForm::monomial(&g, 2, &[0], &[0], 1.0)
            .unwrap()
            .add(&MixedForm::monomial(&g, 2, &[1], &[1], 1.0).unwrap())
            .unwrap();
        let ex = n.exp_even().unwrap();
        assert!(ex.terms().all(|(&(a, p), _)| a.count_ones() + p.count_ones() <= 4));
        assert_eq!(ex.component(&[0, 1], &[0, 1]).unwrap().as_const(), Some(-1.0));
    }

    #[test]
    fn exp_factorizes_over_commuting_parts() {
        let g = g2();
        let s = MixedForm::scalar(&g, 2, g.sample(|x| -(x[0] * x[0] + x[1] * x[1])));
        let nv = MixedForm::monomial(&g, 2, &[0], &[0], g.sample(|x| 1.0 + x[1]))
            .unwrap()
            .add(&MixedForm::monomial(&g, 2, &[1], &[1], 2.0).unwrap())
            .unwrap();
        let r = MixedForm::monomial(&g, 2, &[0, 1], &[0, 1], g.sample(|x| x[0])).unwrap();
        let lhs = s.add(&nv).unwrap().add(&r).unwrap().exp_even().unwrap();
        let rhs = s
            .exp_even()
            .unwrap()
            .wedge(&nv.exp_even().unwrap())
            .unwrap()
            .wedge(&r.exp_even().unwrap())
            .unwrap();
        assert!(coeff_eq(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn integrate_examples() {
        let g = ChartGrid::cube(2, 0.0, 1.0, 11).unwrap();
        let vol = MixedForm::monomial(&g, 1, &[0, 1], &[], 1.0).unwrap();
        assert!((vol.integrate(Quadrature::Trapezoid).unwrap() - 1.0).abs() < 1e-12);
        let g1 = ChartGrid::cube(1, 0.0, 1.0, 201).unwrap();
        let f = MixedForm::monomial(&g1, 1, &[0], &[], g1.sample(|x| (PI * x[0]).sin())).unwrap();
        let h = g1.spacing(0);
        assert!((f.integrate(Quadrature::Trapezoid).unwrap() - 2.0 / PI).abs() < h * h);
        assert!(matches!(MixedForm::one(&g1, 1).integrate(Quadrature::Trapezoid), Err(Error::Degree(_))));
    }

    #[test]
    fn round_sphere_area() {
        let g = ChartGrid::new(vec![(0.0, PI), (0.0, 2.0 * PI)], vec![201, 201]).unwrap();
        let vol = MixedForm::monomial(&g, 1, &[0, 1], &[], g.sample(|x| x[0].sin())).unwrap();
        assert!((vol.integrate(Quadrature::Trapezoid).unwrap() - 4.0 * PI).abs() < 1e-3);
        assert!((vol.integrate(Quadrature::Simpson).unwrap() - 4.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn sphere_volume_by_quadrature() {
        for n in 2..=4 {
            let q = sphere_volume_quadrature(n, 61, Quadrature::Simpson).unwrap();
            assert!((q - crate::pfaffian::sphere_volume(n as i64).unwrap()).abs() < 1e-3, "n = {n}: {q}");
        }
        assert!(sphere_volume_quadrature(1, 11, Quadrature::Simpson).is_err());
    }

    #[test]
    fn gaussian_fiber_integral() {
        let g = ChartGrid::cube(2, -6.0, 6.0, 121).unwrap();
        let c = Coeff::func(|x| (-(x[0] * x[0] + x[1] * x[1])).exp() / PI);
        let f = MixedForm::monomial(&g, 1, &[0, 1], &[], c).unwrap();
        let r = f.fiber_integrate(&[0, 1], Quadrature::Trapezoid, TruncationCheck::BothEnds(1e-12)).unwrap();
        assert!((r.values(&[], &[])[0] - 1.0).abs() < 1e-8);
        let partial = MixedForm::monomial(&g, 1, &[0], &[], 1.0).unwrap();
        assert!(partial
            .fiber_integrate(&[0, 1], Quadrature::Trapezoid, TruncationCheck::None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn extend_axes_pulls_back() {
        let g = ChartGrid::cube(1, 0.0, 1.0, 5).unwrap();
        let f = MixedForm::monomial(&g, 1, &[0], &[0], g.coordinate(0)).unwrap();
        let extra = ChartGrid::cube(1, -1.0, 1.0, 3).unwrap();
        let big = f.extend_axes(&extra).unwrap();
        assert_eq!(big.grid().base_dim(), 2);
        let v = big.values(&[0], &[0]);
        assert_eq!(v, big.grid().coordinate(0));
        assert!(big.exterior_derivative().is_empty() || big.exterior_derivative().max_abs() < 1e-12);
    }

    #[test]
    fn truncation_detected() {
        let g = ChartGrid::cube(1, -1.0, 1.0, 21).unwrap();
        let f = MixedForm::monomial(&g, 1, &[0], &[], 1.0).unwrap();
        let r = f.fiber_integrate(&[0], Quadrature::Trapezoid, TruncationCheck::BothEnds(1e-6));
        assert!(matches!(r, Err(Error::Truncation { .. })));
    }

    #[test]
    fn fiber_stokes_on_an_interval() {
        // Chart y in [0,1]^2, fiber t in [0, 0.7] on the last axis.
        let g = ChartGrid::new(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 0.7)], vec![41, 41, 41]).unwrap();
        let c = |f: fn(&[f64]) -> f64| Coeff::from(g.sample(f));
        let theta = MixedForm::monomial(&g, 1, &[0, 2], &[], c(|x| x[0] * x[1] + x[2] * x[2] * x[1]))
            .unwrap()
            .add(&MixedForm::monomial(&g, 1, &[0, 1], &[], c(|x| x[0] * x[2] * x[2] + x[1])).unwrap())
            .unwrap()
            .add(&MixedForm::monomial(&g, 1, &[1, 2], &[], c(|x| x[0] * x[0] * x[2])).unwrap())
            .unwrap();
        let p = 2;
        let q = Quadrature::Simpson;
        let lhs = theta.exterior_derivative().fiber_integrate(&[2], q, TruncationCheck::None).unwrap();
        let d_int = theta.fiber_integrate(&[2], q, TruncationCheck::None).unwrap().exterior_derivative();
        let bdry = theta.fiber_boundary(2).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = d_int.add(&bdry.scale(sign)).unwrap();
        let h = g.max_spacing();
        assert!(lhs.max_diff(&rhs).unwrap() <= 10.0 * h * h);
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, proptest, ProptestConfig};
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn random_form(g: &ChartGrid, n: usize, rng: &mut ChaCha8Rng, bideg: Option<(usize, usize)>) -> MixedForm {
            let mut f = MixedForm::zero(g, n);
            let d = g.base_dim();
            for a in 0..(1u32 << d) {
                for p in 0..(1u32 << n) {
                    if let Some((bp, bq)) = bideg {
                        if a.count_ones() as usize != bp || p.count_ones() as usize != bq {
                            continue;
                        }
                    } else if rng.random_bool(0.5) {
                        continue;
                    }
                    let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let m = MixedForm::monomial(g, n, &indices(a), &indices(p), vals).unwrap();
                    f = f.add(&m).unwrap();
                }
            }
            f
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn wedge_associative(seed: u64) {
                let g = ChartGrid::cube(3, 0.0, 1.0, 3).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_form(&g, 3, &mut rng, None);
                let b = random_form(&g, 3, &mut rng, None);
                let c = random_form(&g, 3, &mut rng, None);
                let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
                let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
                prop_assert!(l.max_diff(&r).unwrap() <= 1e-12);
            }

            #[test]
            fn graded_commutativity(seed: u64, p1 in 0usize..=2, q1 in 0usize..=2, p2 in 0usize..=2, q2 in 0usize..=2) {
                let g = ChartGrid::cube(3, 0.0, 1.0, 3).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_form(&g, 3, &mut rng, Some((p1, q1)));
                let b = random_form(&g, 3, &mut rng, Some((p2, q2)));
                let sign = if ((p1 + q1) * (p2 + q2)) % 2 == 0 { 1.0 } else { -1.0 };
                let l = a.wedge(&b).unwrap();
                let r = b.wedge(&a).unwrap().scale(sign);
                prop_assert!(l.max_diff(&r).unwrap() <= 1e-12);
            }

            #[test]
            fn interior_product_squares_to_zero(seed: u64) {
                let g = ChartGrid::cube(2, 0.0, 1.0, 3).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_form(&g, 3, &mut rng, None);
                let v: Vec<Coeff> = (0..3).map(|_| Coeff::from((0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())).collect();
                let r = a.interior_product(&v).unwrap().interior_product(&v).unwrap();
                prop_assert!(r.max_abs() <= 1e-14);
            }

            #[test]
            fn supertrace_kills_interior_products(seed: u64, p in 0usize..=2) {
                let g = ChartGrid::cube(2, 0.0, 1.0, 3).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_form(&g, 3, &mut rng, Some((p, 3)));
                let v: Vec<Coeff> = (0..3).map(|_| Coeff::Const(rng.random_range(-1.0..1.0))).collect();
                let r = a.interior_product(&v).unwrap();
                prop_assert!(r.fiber_component(3).supertrace().unwrap().is_empty());
            }

            #[test]
            fn exp_multiplicative(seed: u64) {
                let g = ChartGrid::cube(2, 0.0, 1.0, 3).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_form(&g, 2, &mut rng, Some((1, 1)))
                    .add(&random_form(&g, 2, &mut rng, Some((0, 0)))).unwrap();
                let b = random_form(&g, 2, &mut rng, Some((2, 2)))
                    .add(&random_form(&g, 2, &mut rng, Some((0, 2)))).unwrap();
                let l = a.add(&b).unwrap().exp_even().unwrap();
                let r = a.exp_even().unwrap().wedge(&b.exp_even().unwrap()).unwrap();
                prop_assert!(l.max_diff(&r).unwrap() <= 1e-10);
            }
        }
    }
}

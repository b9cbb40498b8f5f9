use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform tensor-product sample grid on a box in `R^d`. Axis 0 varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
}

impl ChartGrid {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Grid("a chart needs at least one axis".into()));
        }
        if bounds.len() != resolution.len() {
            return Err(Error::Grid(format!(
                "{} bounds but {} resolutions",
                bounds.len(),
                resolution.len()
            )));
        }
        for (axis, (&(lo, hi), &r)) in bounds.iter().zip(&resolution).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Grid(format!("axis {axis}: need lower < upper, got [{lo}, {hi}]")));
            }
            if r < 3 {
                return Err(Error::Grid(format!("axis {axis}: resolution {r} < 3")));
            }
        }
        Ok(Self { bounds, resolution })
    }

    /// Same interval and resolution on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        Self::new(vec![(lo, hi); dim], vec![resolution; dim])
    }

    /// The zero-dimensional grid with a single sample.
    pub fn point() -> Self {
        Self { bounds: Vec::new(), resolution: Vec::new() }
    }

    pub fn base_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        (hi - lo) / (self.resolution[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.base_dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        if i + 1 == self.resolution[axis] {
            hi
        } else {
            lo + i as f64 * self.spacing(axis)
        }
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.resolution[axis + 1..].iter().product()
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.base_dim()).rev() {
            let r = self.resolution[axis];
            out[axis] = flat % r;
            flat /= r;
        }
    }

    pub fn point_at(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.base_dim()];
        self.unravel(flat, &mut idx);
        for (axis, &i) in idx.iter().enumerate() {
            out[axis] = self.coord(axis, i);
        }
    }

    /// Samples `f` at every grid point, in storage order.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = self.base_dim();
        let mut idx = vec![0usize; d];
        let mut x: Vec<f64> = (0..d).map(|a| self.coord(a, 0)).collect();
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(f(&x));
            for axis in (0..d).rev() {
                idx[axis] += 1;
                if idx[axis] < self.resolution[axis] {
                    x[axis] = self.coord(axis, idx[axis]);
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.coord(axis, 0);
            }
        }
        out
    }

    /// Coordinate function `y_axis` sampled on the grid.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.sample(|x| x[axis])
    }

    /// Grid on the remaining axes after removing `axes` (which must be sorted and distinct).
    pub fn drop_axes(&self, axes: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.base_dim()).filter(|a| !axes.contains(a)).collect();
        Self {
            bounds: keep.iter().map(|&a| self.bounds[a]).collect(),
            resolution: keep.iter().map(|&a| self.resolution[a]).collect(),
        }
    }

    /// Index of the nearest grid sample to `x`, clamped to the box.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut flat = 0;
        for axis in 0..self.base_dim() {
            let (lo, _) = self.bounds[axis];
            let i = ((x[axis] - lo) / self.spacing(axis)).round();
            let i = i.clamp(0.0, (self.resolution[axis] - 1) as f64) as usize;
            flat = flat * self.resolution[axis] + i;
        }
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_coords() {
        let g = ChartGrid::new(vec![(0.0, 1.0), (-1.0, 1.0)], vec![3, 5]).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.stride(0), 5);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.spacing(1), 0.5);
        let mut p = [0.0; 2];
        g.point_at(7, &mut p);
        assert_eq!(p, [0.5, 0.0]);
        let s = g.sample(|x| x[0] + 10.0 * x[1]);
        assert_eq!(s[7], 0.5);
        assert_eq!(g.nearest(&[0.5, 0.0]), 7);
        assert_eq!(g.drop_axes(&[0]).resolution(), &[5]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ChartGrid::new(vec![(1.0, 0.0)], vec![5]).is_err());
        assert!(ChartGrid::new(vec![(0.0, 1.0)], vec![2]).is_err());
        assert!(ChartGrid::new(vec![], vec![]).is_err());
        assert!(ChartGrid::new(vec![(0.0, 1.0)], vec![3, 3]).is_err());
    }
}

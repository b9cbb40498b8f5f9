use super::grid::ChartGrid;
use std::fmt;
use std::sync::Arc;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Coefficient function of a single form component.
///
/// `Func` coefficients are evaluated lazily, which lets very large grids be
/// integrated without ever being stored.
#[derive(Clone)]
pub enum Coeff {
    Const(f64),
    Grid(Arc<Vec<f64>>),
    Func(PointFn),
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Const(c) => write!(f, "Const({c})"),
            Coeff::Grid(v) => write!(f, "Grid(len {})", v.len()),
            Coeff::Func(_) => write!(f, "Func"),
        }
    }
}

impl From<f64> for Coeff {
    fn from(c: f64) -> Self {
        Coeff::Const(c)
    }
}

impl From<Vec<f64>> for Coeff {
    fn from(v: Vec<f64>) -> Self {
        Coeff::Grid(Arc::new(v))
    }
}

impl Coeff {
    pub fn func(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Coeff::Func(Arc::new(f))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Coeff::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Coeff::Const(c) if *c == 0.0)
    }

    pub fn materialize(&self, g: &ChartGrid) -> Arc<Vec<f64>> {
        match self {
            Coeff::Const(c) => Arc::new(vec![*c; g.len()]),
            Coeff::Grid(v) => v.clone(),
            Coeff::Func(f) => Arc::new(g.sample(|x| f(x))),
        }
    }

    /// Value at storage index `flat`, whose coordinates are `x`.
    pub fn eval(&self, flat: usize, x: &[f64]) -> f64 {
        match self {
            Coeff::Const(c) => *c,
            Coeff::Grid(v) => v[flat],
            Coeff::Func(f) => f(x),
        }
    }

    pub fn scale(&self, c: f64) -> Coeff {
        match self {
            Coeff::Const(a) => Coeff::Const(a * c),
            Coeff::Grid(v) => Coeff::Grid(Arc::new(v.iter().map(|a| a * c).collect())),
            Coeff::Func(f) => {
                let f = f.clone();
                Coeff::func(move |x| c * f(x))
            }
        }
    }

    pub fn add(&self, o: &Coeff, g: &ChartGrid) -> Coeff {
        match (self, o) {
            (Coeff::Const(a), Coeff::Const(b)) => Coeff::Const(a + b),
            (Coeff::Func(f), Coeff::Func(h)) => {
                let (f, h) = (f.clone(), h.clone());
                Coeff::func(move |x| f(x) + h(x))
            }
            (Coeff::Func(f), Coeff::Const(c)) | (Coeff::Const(c), Coeff::Func(f)) => {
                let (f, c) = (f.clone(), *c);
                Coeff::func(move |x| f(x) + c)
            }
            _ => {
                let a = self.materialize(g);
                let b = o.materialize(g);
                Coeff::Grid(Arc::new(a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()))
            }
        }
    }

    pub fn mul(&self, o: &Coeff, g: &ChartGrid) -> Coeff {
        match (self, o) {
            (Coeff::Const(a), Coeff::Const(b)) => Coeff::Const(a * b),
            (Coeff::Const(c), other) | (other, Coeff::Const(c)) => other.scale(*c),
            (Coeff::Func(f), Coeff::Func(h)) => {
                let (f, h) = (f.clone(), h.clone());
                Coeff::func(move |x| f(x) * h(x))
            }
            _ => {
                let a = self.materialize(g);
                let b = o.materialize(g);
                Coeff::Grid(Arc::new(a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()))
            }
        }
    }

    /// Pointwise `f ∘ self`.
    pub fn map(&self, g: &ChartGrid, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Coeff {
        match self {
            Coeff::Const(c) => Coeff::Const(f(*c)),
            Coeff::Grid(v) => Coeff::Grid(Arc::new(v.iter().map(|&a| f(a)).collect())),
            Coeff::Func(h) => {
                let h = h.clone();
                let _ = g;
                Coeff::func(move |x| f(h(x)))
            }
        }
    }

    /// Partial derivative along `axis`: central differences inside, second-order
    /// one-sided stencils on the two boundary layers.
    pub fn derivative(&self, g: &ChartGrid, axis: usize) -> Coeff {
        if let Coeff::Const(_) = self {
            return Coeff::Const(0.0);
        }
        let v = self.materialize(g);
        let r = g.resolution()[axis];
        let stride = g.stride(axis);
        let h = g.spacing(axis);
        let mut idx = vec![0usize; g.base_dim()];
        let out: Vec<f64> = (0..v.len())
            .map(|flat| {
                g.unravel(flat, &mut idx);
                let i = idx[axis];
                if i == 0 {
                    (-3.0 * v[flat] + 4.0 * v[flat + stride] - v[flat + 2 * stride]) / (2.0 * h)
                } else if i == r - 1 {
                    (3.0 * v[flat] - 4.0 * v[flat - stride] + v[flat - 2 * stride]) / (2.0 * h)
                } else {
                    (v[flat + stride] - v[flat - stride]) / (2.0 * h)
                }
            })
            .collect();
        Coeff::Grid(Arc::new(out))
    }

    pub fn max_abs(&self, g: &ChartGrid) -> f64 {
        match self {
            Coeff::Const(c) => c.abs(),
            _ => self.materialize(g).iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_exact_on_quadratics() {
        let g = ChartGrid::new(vec![(0.0, 1.0), (-1.0, 2.0)], vec![7, 9]).unwrap();
        let f = Coeff::from(g.sample(|x| x[0] * x[0] + 3.0 * x[0] * x[1]));
        let dx = f.derivative(&g, 0).materialize(&g);
        let expect = g.sample(|x| 2.0 * x[0] + 3.0 * x[1]);
        for (a, b) in dx.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_kinds_combine() {
        let g = ChartGrid::cube(1, 0.0, 1.0, 5).unwrap();
        let a = Coeff::func(|x| x[0]);
        let b = Coeff::from(g.sample(|x| 2.0 * x[0]));
        let c = a.mul(&b, &g).add(&Coeff::Const(1.0), &g).materialize(&g);
        assert!((c[4] - 3.0).abs() < 1e-15);
        assert_eq!(Coeff::Const(2.0).mul(&Coeff::Const(3.0), &g).as_const(), Some(6.0));
    }
}

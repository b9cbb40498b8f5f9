//! Two-dimensional ground truth: one-soliton solutions of the sine-Gordon
//! equation, the area of asymptotic rectangles and its four-corner formula,
//! and Gauss-Bonnet on closed surfaces.

use crate::error::{Error, Result};
use crate::forms::{weights, ChartGrid, Quadrature};
use crate::frames::{self, constant_curvature_residual_interior, curvature, euler_form};
use serde::Serialize;
use std::f64::consts::PI;

/// Admissibility margin: the net angle must stay in `[δ, π - δ]`.
pub const ADMISSIBILITY_DELTA: f64 = 1e-6;

/// Net angle `θ = 4 arctan(exp(μ z + w/μ + shift))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Soliton {
    pub mu: f64,
    pub shift: f64,
}

impl Soliton {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Domain(format!("soliton parameter must be positive, got {mu}")));
        }
        Ok(Self { mu, shift: 0.0 })
    }

    pub fn with_shift(self, shift: f64) -> Self {
        Self { shift, ..self }
    }

    fn u(&self, z: f64, w: f64) -> f64 {
        self.mu * z + w / self.mu + self.shift
    }

    pub fn theta(&self, z: f64, w: f64) -> f64 {
        4.0 * self.u(z, w).exp().atan()
    }

    fn theta_u(&self, z: f64, w: f64) -> f64 {
        2.0 / self.u(z, w).cosh()
    }

    pub fn theta_z(&self, z: f64, w: f64) -> f64 {
        self.mu * self.theta_u(z, w)
    }

    pub fn theta_w(&self, z: f64, w: f64) -> f64 {
        self.theta_u(z, w) / self.mu
    }

    /// `θ_zw = -2 sech(u) tanh(u)`.
    pub fn theta_zw(&self, z: f64, w: f64) -> f64 {
        let u = self.u(z, w);
        -2.0 * u.tanh() / u.cosh()
    }
}

/// Asymptotic rectangle `[a, b] × [c, d]` in `(z, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rectangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Rectangle {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a <= b && c <= d) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("rectangle needs a <= b and c <= d, got [{a}, {b}] x [{c}, {d}]")));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b || self.c == self.d
    }
}

/// Net angle sampled on an asymptotic rectangle.
#[derive(Debug, Clone)]
pub struct SineGordonSolution {
    rect: Rectangle,
    grid: Option<ChartGrid>,
    theta: Vec<f64>,
    /// `θ` at `(a,c), (a,d), (b,c), (b,d)`.
    corners: [f64; 4],
}

impl SineGordonSolution {
    pub fn from_fn(rect: Rectangle, resolution: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let corners = [f(rect.a, rect.c), f(rect.a, rect.d), f(rect.b, rect.c), f(rect.b, rect.d)];
        if rect.is_degenerate() {
            return Ok(Self { rect, grid: None, theta: Vec::new(), corners });
        }
        let grid = ChartGrid::new(vec![(rect.a, rect.b), (rect.c, rect.d)], vec![resolution; 2])?;
        let theta = grid.sample(|x| f(x[0], x[1]));
        Ok(Self { rect, grid: Some(grid), theta, corners })
    }

    pub fn from_soliton(sol: Soliton, rect: Rectangle, resolution: usize) -> Result<Self> {
        Self::from_fn(rect, resolution, move |z, w| sol.theta(z, w))
    }

    pub fn rectangle(&self) -> Rectangle {
        self.rect
    }

    pub fn grid(&self) -> Option<&ChartGrid> {
        self.grid.as_ref()
    }

    pub fn samples(&self) -> &[f64] {
        &self.theta
    }

    /// Fails unless every sample and corner lies in `[δ, π - δ]`.
    pub fn check_admissible(&self) -> Result<()> {
        let lo = ADMISSIBILITY_DELTA;
        let hi = PI - ADMISSIBILITY_DELTA;
        if let Some(v) = self.theta.iter().chain(&self.corners).find(|v| !(lo..=hi).contains(*v)) {
            return Err(Error::Domain(format!("net angle {v} leaves (0, π)")));
        }
        Ok(())
    }
}

/// `max |θ_zw - sin θ|` over interior samples, with the mixed central difference.
pub fn sine_gordon_residual(sol: &SineGordonSolution) -> Result<f64> {
    sol.check_admissible()?;
    let g = sol.grid.as_ref().ok_or_else(|| Error::Grid("degenerate rectangle has no interior".into()))?;
    let (nz, nw) = (g.resolution()[0], g.resolution()[1]);
    if nz < 33 || nw < 33 {
        return Err(Error::Grid(format!("residual needs resolution >= 33, got {nz} x {nw}")));
    }
    let (hz, hw) = (g.spacing(0), g.spacing(1));
    let t = |i: usize, j: usize| sol.theta[i * nw + j];
    let mut worst = 0.0f64;
    for i in 1..nz - 1 {
        for j in 1..nw - 1 {
            let tzw = (t(i + 1, j + 1) - t(i + 1, j - 1) - t(i - 1, j + 1) + t(i - 1, j - 1)) / (4.0 * hz * hw);
            worst = worst.max((tzw - t(i, j).sin()).abs());
        }
    }
    Ok(worst)
}

/// `∫∫_R sin θ dz dw` by tensor-product quadrature.
pub fn hyperbolic_area(sol: &SineGordonSolution, rule: Quadrature) -> f64 {
    let Some(g) = &sol.grid else { return 0.0 };
    let wz = weights(g.resolution()[0], g.spacing(0), rule);
    let ww = weights(g.resolution()[1], g.spacing(1), rule);
    let nw = ww.len();
    wz.iter()
        .enumerate()
        .map(|(i, a)| a * ww.iter().enumerate().map(|(j, b)| b * sol.theta[i * nw + j].sin()).sum::<f64>())
        .sum()
}

/// `θ(b,d) - θ(b,c) - θ(a,d) + θ(a,c)`.
pub fn hazzidakis_corner_sum(sol: &SineGordonSolution) -> f64 {
    let [ac, ad, bc, bd] = sol.corners;
    bd - bc - ad + ac
}

/// Interior angles of the asymptotic quadrilateral at `(b,d), (a,c), (b,c), (a,d)`.
pub fn interior_angles(sol: &SineGordonSolution) -> [f64; 4] {
    let [ac, ad, bc, bd] = sol.corners;
    [bd, ac, PI - bc, PI - ad]
}

/// `Σ α_i / 2π - 1`, which equals `area / 2π`.
pub fn normalized_angle_excess(sol: &SineGordonSolution) -> f64 {
    interior_angles(sol).iter().sum::<f64>() / (2.0 * PI) - 1.0
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub area: f64,
    pub corner_sum: f64,
    pub error: f64,
    pub residual: f64,
}

/// Area against corner sum on a sequence of resolutions.
pub fn convergence_table(sol: Soliton, rect: Rectangle, resolutions: &[usize]) -> Result<Vec<ConvergenceRow>> {
    resolutions
        .iter()
        .map(|&r| {
            let s = SineGordonSolution::from_soliton(sol, rect, r)?;
            let area = hyperbolic_area(&s, Quadrature::Trapezoid);
            let corner_sum = hazzidakis_corner_sum(&s);
            let residual = if r >= 33 { sine_gordon_residual(&s)? } else { f64::NAN };
            Ok(ConvergenceRow { resolution: r, area, corner_sum, error: (area - corner_sum).abs(), residual })
        })
        .collect()
}

/// `log2` error ratios between successive rows (resolutions doubling in intervals).
pub fn observed_orders(rows: &[ConvergenceRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| {
            let h0 = 1.0 / (w[0].resolution - 1) as f64;
            let h1 = 1.0 / (w[1].resolution - 1) as f64;
            (w[0].error / w[1].error).ln() / (h0 / h1).ln()
        })
        .collect()
}

/// Gaussian-curvature residual `|K + 1|` of the Chebyshev metric
/// `dz² + 2 cos θ dz dw + dw²`, on samples at least two steps inside the rectangle.
pub fn chebyshev_curvature_residual(sol: Soliton, rect: Rectangle, resolution: usize) -> Result<f64> {
    let conn = frames::fixtures::chebyshev_net(sol, (rect.a, rect.b), (rect.c, rect.d), resolution)?;
    constant_curvature_residual_interior(&conn, -1.0, 2)
}

/// Names accepted by [`gauss_bonnet_closed`].
pub const CLOSED_FIXTURES: [&str; 3] = ["round_sphere", "round_sphere_r2", "flat_torus"];

/// `(1/2π) ∫ K dA` for a named closed surface.
pub fn gauss_bonnet_closed(fixture: &str, resolution: usize, rule: Quadrature) -> Result<f64> {
    let conn = match fixture {
        "round_sphere" => frames::fixtures::round_sphere(1.0, resolution)?,
        "round_sphere_r2" => frames::fixtures::round_sphere(2.0, resolution)?,
        "flat_torus" => frames::fixtures::flat_torus(resolution)?,
        other => return Err(Error::Fixture(other.to_string())),
    };
    let e = euler_form(&curvature(&conn))?;
    if e.is_empty() {
        return Ok(0.0);
    }
    e.integrate(rule)
}

/// Rectangles well inside the admissible half `μ z + w/μ < 0` used by the
/// suites, one per soliton parameter in `{0.5, 1, 2}`.
pub fn standard_family() -> Vec<(Soliton, Rectangle)> {
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&mu| (Soliton::new(mu).expect("positive"), Rectangle { a: -1.5, b: -0.5, c: -1.5, d: -0.5 }))
        .collect()
}

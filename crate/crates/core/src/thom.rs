//! Thom forms of metric connections, their pullbacks along sections,
//! localization at zeros, geodesic curvature forms on boundaries and the
//! transgressed Euler form.
//!
//! With `Φ(V,∇) = -|V|² + ∇V + ℛ` the pulled-back Thom form is
//! `τ(V,∇) = (-1)^[n/2] π^{-n/2} Tr_s exp Φ(V,∇)`.

use crate::error::{Error, Result};
use crate::forms::{ChartGrid, Coeff, MixedForm, Quadrature, TruncationCheck};
use crate::frames::{curvature, curvature_operator, euler_form, FrameConnection};
use crate::pfaffian::half_line_moment;
use serde::Serialize;
use std::f64::consts::PI;

/// Section `V = Σ v_i e_i` sampled on a chart.
#[derive(Clone, Debug)]
pub struct SectionField {
    grid: ChartGrid,
    v: Vec<Coeff>,
    dv: Option<Vec<MixedForm>>,
}

impl SectionField {
    pub fn new(grid: &ChartGrid, v: Vec<Coeff>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Dimension("section needs at least one component".into()));
        }
        for c in &v {
            if let Coeff::Grid(s) = c {
                if s.len() != grid.len() {
                    return Err(Error::Grid("section component has the wrong sample count".into()));
                }
            }
        }
        Ok(Self { grid: grid.clone(), v, dv: None })
    }

    pub fn from_fns(grid: &ChartGrid, fs: &[&dyn Fn(&[f64]) -> f64]) -> Result<Self> {
        Self::new(grid, fs.iter().map(|f| Coeff::from(grid.sample(f))).collect())
    }

    /// Attaches exact differentials `dv_i`, used instead of finite differences.
    pub fn with_differentials(mut self, dv: Vec<MixedForm>) -> Result<Self> {
        if dv.len() != self.v.len() {
            return Err(Error::Dimension("one differential per component".into()));
        }
        for d in &dv {
            if d.grid() != &self.grid || d.fiber_rank() != self.v.len() {
                return Err(Error::Grid("differential lives on a different chart".into()));
            }
            if d.bidegree()?.is_some_and(|b| b != (1, 0)) {
                return Err(Error::Degree("differentials must be scalar 1-forms".into()));
            }
        }
        self.dv = Some(dv);
        Ok(self)
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.v.len()
    }

    /// `dv_i`, exact when attached and by finite differences otherwise.
    pub fn differentials(&self) -> Vec<MixedForm> {
        match &self.dv {
            Some(d) => d.clone(),
            None => {
                let n = self.rank();
                self.v.iter().map(|c| MixedForm::scalar(&self.grid, n, c.clone()).exterior_derivative()).collect()
            }
        }
    }

    pub fn components(&self) -> &[Coeff] {
        &self.v
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            v: self.v.iter().map(|c| c.scale(s)).collect(),
            dv: self.dv.as_ref().map(|d| d.iter().map(|f| f.scale(s)).collect()),
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Pointwise `|V|²`.
    pub fn norm_sq(&self) -> Coeff {
        let mut acc = Coeff::Const(0.0);
        for c in &self.v {
            acc = acc.add(&c.mul(c, &self.grid), &self.grid);
        }
        acc
    }

    /// `Σ v_i e_i` as an element of bidegree (0, 1).
    pub fn as_form(&self) -> MixedForm {
        let n = self.rank();
        let mut f = MixedForm::zero(&self.grid, n);
        for (i, c) in self.v.iter().enumerate() {
            f = f.add(&MixedForm::monomial(&self.grid, n, &[], &[i], c.clone()).expect("valid index")).expect("same grid");
        }
        f
    }

    /// Fails with [`Error::Norm`] unless `| |V|² - 1 | <= tol` everywhere.
    pub fn check_unit(&self, tol: f64) -> Result<()> {
        let dev = self.norm_sq().materialize(&self.grid).iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        if dev > tol {
            return Err(Error::Norm(dev));
        }
        Ok(())
    }
}

fn check_pair(v: &SectionField, conn: &FrameConnection) -> Result<()> {
    if v.grid() != conn.grid() {
        return Err(Error::Grid("section and connection live on different charts".into()));
    }
    if v.rank() != conn.rank() {
        return Err(Error::Dimension(format!("section rank {} vs bundle rank {}", v.rank(), conn.rank())));
    }
    Ok(())
}

/// `(-1)^[n/2] / π^{n/2}`.
pub fn thom_normalization(n: usize) -> f64 {
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    sign / PI.powf(n as f64 / 2.0)
}

/// `(-1)^[(n-1)/2] / π^{n/2}`.
pub fn geodesic_normalization(n: usize) -> f64 {
    let sign = if (n.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    sign / PI.powf(n as f64 / 2.0)
}

/// `∇V = Σ_i (dv_i + Σ_j ω_ij v_j) e_i`, with `dv_i` supplied.
pub fn covariant_derivative_with(dv: &[MixedForm], v: &SectionField, conn: &FrameConnection) -> Result<MixedForm> {
    check_pair(v, conn)?;
    let n = v.rank();
    let g = v.grid();
    let mut out = MixedForm::zero(g, n);
    for i in 0..n {
        let mut comp = dv[i].clone();
        for j in 0..n {
            if i != j {
                comp = comp.add(&conn.omega(i, j).mul_coeff(&v.v[j]))?;
            }
        }
        out = out.add(&comp.wedge(&MixedForm::e(g, n, i))?)?;
    }
    Ok(out)
}

/// `∇V` using [`SectionField::differentials`].
pub fn covariant_derivative(v: &SectionField, conn: &FrameConnection) -> Result<MixedForm> {
    covariant_derivative_with(&v.differentials(), v, conn)
}

/// `Φ(V,∇) = -|V|² + ∇V + ℛ`.
pub fn phi_element(v: &SectionField, conn: &FrameConnection) -> Result<MixedForm> {
    let nv = covariant_derivative(v, conn)?;
    phi_from_parts(v, &nv, conn)
}

fn phi_from_parts(v: &SectionField, nabla_v: &MixedForm, conn: &FrameConnection) -> Result<MixedForm> {
    let g = v.grid();
    let n = v.rank();
    let r = curvature_operator(&curvature(conn))?;
    MixedForm::scalar(g, n, v.norm_sq().scale(-1.0)).add(nabla_v)?.add(&r)
}

/// `τ(sV, ∇)` as a scalar form of mixed base degree.
pub fn thom_pullback(v: &SectionField, conn: &FrameConnection, s: f64) -> Result<MixedForm> {
    let phi = phi_element(&v.scaled(s), conn)?;
    Ok(phi.exp_even()?.top_supertrace().scale(thom_normalization(v.rank())))
}

/// `∫ τ(sV, ∇)` over the chart.
pub fn thom_integral(v: &SectionField, conn: &FrameConnection, s: f64, rule: Quadrature) -> Result<f64> {
    let d = v.grid().base_dim();
    thom_pullback(v, conn, s)?.base_component(d).integrate(rule)
}

/// Thom form of the trivial flat bundle `R^n → pt` written on the total
/// space: tautological section `t`, `∇t = Σ dt_i e_i`. Coefficients are lazy,
/// so the form can be integrated on grids far too large to store.
pub fn flat_thom_form(n: usize, radius: f64, resolution: usize) -> Result<MixedForm> {
    let g = ChartGrid::cube(n, -radius, radius, resolution)?;
    let norm_sq = Coeff::func(|x: &[f64]| x.iter().map(|t| t * t).sum::<f64>());
    let mut nabla = MixedForm::zero(&g, n);
    for i in 0..n {
        nabla = nabla.add(&MixedForm::monomial(&g, n, &[i], &[i], 1.0)?)?;
    }
    let phi = MixedForm::scalar(&g, n, norm_sq.scale(-1.0)).add(&nabla)?;
    Ok(phi.exp_even()?.top_supertrace().scale(thom_normalization(n)))
}

/// Fiber integral of [`flat_thom_form`] over the whole box.
pub fn flat_thom_integral(n: usize, radius: f64, resolution: usize, rule: Quadrature) -> Result<f64> {
    let tau = flat_thom_form(n, radius, resolution)?;
    let axes: Vec<usize> = (0..n).collect();
    let r = tau.fiber_integrate(&axes, rule, TruncationCheck::BothEnds(1e-12))?;
    Ok(r.terms().map(|(_, c)| c.eval(0, &[])).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationIndexReport {
    pub values: Vec<(f64, f64)>,
    pub limit: f64,
}

/// `∫ τ(sV, ∇)` along a schedule of scales; the last value approximates the
/// sum of rotation indices at the zeros of `V` inside the chart.
pub fn rotation_index_limit(
    v: &SectionField,
    conn: &FrameConnection,
    schedule: &[f64],
    rule: Quadrature,
) -> Result<RotationIndexReport> {
    check_pair(v, conn)?;
    let g = v.grid();
    let n2 = v.norm_sq().materialize(g);
    let mut idx = vec![0usize; g.base_dim()];
    let mut min_edge = f64::INFINITY;
    for (p, &val) in n2.iter().enumerate() {
        g.unravel(p, &mut idx);
        if idx.iter().zip(g.resolution()).any(|(&i, &r)| i == 0 || i + 1 == r) {
            min_edge = min_edge.min(val.sqrt());
        }
    }
    if min_edge < 1e-8 {
        return Err(Error::Locus(format!("section vanishes on the chart boundary (|V| = {min_edge:e})")));
    }
    if schedule.is_empty() {
        return Err(Error::Input("empty scale schedule".into()));
    }
    let values = schedule
        .iter()
        .map(|&s| Ok((s, thom_integral(v, conn, s, rule)?)))
        .collect::<Result<Vec<_>>>()?;
    let limit = values.last().map(|p| p.1).unwrap_or(f64::NAN);
    Ok(RotationIndexReport { values, limit })
}

/// Boundary term of Gauss-Bonnet, a top-degree scalar form on the boundary chart.
#[derive(Clone, Debug)]
pub struct GeodesicCurvatureForm {
    pub form: MixedForm,
}

impl GeodesicCurvatureForm {
    /// Integral over the boundary, with `orientation = ±1` relating the chart
    /// orientation to the boundary orientation.
    pub fn integrate(&self, orientation: f64, rule: Quadrature) -> Result<f64> {
        let d = self.form.grid().base_dim();
        Ok(orientation * self.form.base_component(d).integrate(rule)?)
    }
}

/// Tolerance on `|V| = 1` for boundary sections.
pub const UNIT_TOL: f64 = 1e-10;

/// `Π = c_n Σ_k M_k/k! Tr_s[V (∇V)^k exp ℛ]` with `M_k = ∫_0^∞ t^k e^{-t²} dt`
/// and `c_n = (-1)^[(n-1)/2] π^{-n/2}`. Valid for every rank.
pub fn geodesic_curvature_series(v: &SectionField, conn: &FrameConnection) -> Result<MixedForm> {
    check_pair(v, conn)?;
    v.check_unit(UNIT_TOL)?;
    let n = v.rank();
    let g = v.grid();
    let nv = covariant_derivative(v, conn)?;
    let er = curvature_operator(&curvature(conn))?.exp_even()?;
    let vf = v.as_form();
    let mut total = MixedForm::zero(g, n);
    let mut power = MixedForm::one(g, n);
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            power = power.wedge(&nv)?;
            fact *= k as f64;
        }
        let term = vf.wedge(&power)?.wedge(&er)?.scale(half_line_moment(k as u32) / fact);
        total = total.add(&term)?;
    }
    Ok(total.top_supertrace().scale(geodesic_normalization(n)))
}

/// Geodesic curvature form for even rank.
pub fn geodesic_curvature_even(v: &SectionField, conn: &FrameConnection) -> Result<GeodesicCurvatureForm> {
    if v.rank() % 2 == 1 {
        return Err(Error::Dimension(format!("even formula needs even rank, got {}", v.rank())));
    }
    Ok(GeodesicCurvatureForm { form: geodesic_curvature_series(v, conn)? })
}

/// Geodesic curvature form for odd rank in closed form:
/// `Π = ½ c_n √π Tr_s[V exp((∇V)²/4 + ℛ)]`.
pub fn geodesic_curvature_odd(v: &SectionField, conn: &FrameConnection) -> Result<GeodesicCurvatureForm> {
    check_pair(v, conn)?;
    let n = v.rank();
    if n % 2 == 0 {
        return Err(Error::Dimension(format!("odd formula needs odd rank, got {n}")));
    }
    v.check_unit(UNIT_TOL)?;
    let nv = covariant_derivative(v, conn)?;
    let r = curvature_operator(&curvature(conn))?;
    let arg = nv.wedge(&nv)?.scale(0.25).add(&r)?;
    let body = v.as_form().wedge(&arg.exp_even()?)?;
    let c = 0.5 * geodesic_normalization(n) * PI.sqrt();
    Ok(GeodesicCurvatureForm { form: body.top_supertrace().scale(c) })
}

/// `Π` by integrating `τ(tV)` over rays `t ∈ [0, t_max]` on the product of
/// the boundary chart with a `t` axis, fiber-last.
pub fn geodesic_curvature_by_rays(v: &SectionField, conn: &FrameConnection, t_max: f64, t_res: usize) -> Result<MixedForm> {
    check_pair(v, conn)?;
    v.check_unit(UNIT_TOL)?;
    let n = v.rank();
    let g = v.grid();
    let d = g.base_dim();
    let tgrid = ChartGrid::new(vec![(0.0, t_max)], vec![t_res])?;
    let big = MixedForm::zero(g, n).extend_axes(&tgrid)?.grid().clone();
    let t = Coeff::from(big.coordinate(d));
    let lift = |c: &Coeff| MixedForm::scalar(g, n, c.clone()).extend_axes(&tgrid).map(|f| f.values(&[], &[]));
    let vb: Vec<Coeff> = v.v.iter().map(|c| lift(c).map(Coeff::from)).collect::<Result<_>>()?;
    let w = SectionField::new(&big, vb.iter().map(|c| c.mul(&t, &big)).collect())?;
    // dw_i = v_i dt + t dv_i
    let dv: Vec<MixedForm> = v
        .differentials()
        .iter()
        .zip(&vb)
        .map(|(dc, cb)| {
            let base = dc.extend_axes(&tgrid)?;
            base.mul_coeff(&t).add(&MixedForm::monomial(&big, n, &[d], &[], cb.clone())?)
        })
        .collect::<Result<_>>()?;
    let lconn = lift_connection(conn, &tgrid)?;
    let nw = covariant_derivative_with(&dv, &w, &lconn)?;
    let r = curvature_operator(&curvature(conn))?.extend_axes(&tgrid)?;
    let phi = MixedForm::scalar(&big, n, w.norm_sq().scale(-1.0)).add(&nw)?.add(&r)?;
    let tau = phi.exp_even()?.top_supertrace().scale(thom_normalization(n));
    tau.fiber_integrate(&[d], Quadrature::Simpson, TruncationCheck::UpperEnd(1e-12))
}

/// Pullback of a connection along `chart × extra → chart`.
pub fn lift_connection(conn: &FrameConnection, extra: &ChartGrid) -> Result<FrameConnection> {
    let mut omega = std::collections::BTreeMap::new();
    for (&k, w) in conn.omega_map() {
        omega.insert(k, w.extend_axes(extra)?);
    }
    let big = MixedForm::zero(conn.grid(), conn.rank()).extend_axes(extra)?.grid().clone();
    FrameConnection::new(&big, conn.rank(), Vec::new(), omega)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransgressionReport {
    /// `max |d Te - π* e|`.
    pub residual: f64,
    /// `max |π* e|`, for scale.
    pub euler_scale: f64,
}

/// Checks `d Te(∇) = π* e(∇)` for a rank-2 connection over a 2-dimensional
/// chart. The unit sphere bundle is charted by `(y, α)` with
/// `u(α) = cos α e_1 + sin α e_2`, and `Te` is the fiber-last integral of
/// `τ(t u)` over rays `t ∈ [0, t_max]`.
pub fn transgression_check(conn: &FrameConnection, alpha_res: usize, t_max: f64, t_res: usize) -> Result<TransgressionReport> {
    let n = conn.rank();
    let g = conn.grid();
    if n != 2 || g.base_dim() != 2 {
        return Err(Error::Dimension("transgression check is implemented for rank 2 over a surface chart".into()));
    }
    let extra = ChartGrid::new(vec![(0.0, 2.0 * PI), (0.0, t_max)], vec![alpha_res, t_res])?;
    let big = MixedForm::zero(g, n).extend_axes(&extra)?.grid().clone();
    let (ax_a, ax_t) = (2, 3);
    let w1 = Coeff::from(big.sample(|x| x[3] * x[2].cos()));
    let w2 = Coeff::from(big.sample(|x| x[3] * x[2].sin()));
    let w = SectionField::new(&big, vec![w1, w2])?;
    let dw1 = MixedForm::monomial(&big, n, &[ax_t], &[], big.sample(|x| x[2].cos()))?
        .add(&MixedForm::monomial(&big, n, &[ax_a], &[], big.sample(|x| -x[3] * x[2].sin()))?)?;
    let dw2 = MixedForm::monomial(&big, n, &[ax_t], &[], big.sample(|x| x[2].sin()))?
        .add(&MixedForm::monomial(&big, n, &[ax_a], &[], big.sample(|x| x[3] * x[2].cos()))?)?;
    let lconn = lift_connection(conn, &extra)?;
    let nw = covariant_derivative_with(&[dw1, dw2], &w, &lconn)?;
    let curv = curvature(conn);
    let r = curvature_operator(&curv)?.extend_axes(&extra)?;
    let phi = MixedForm::scalar(&big, n, w.norm_sq().scale(-1.0)).add(&nw)?.add(&r)?;
    let tau = phi.exp_even()?.top_supertrace().scale(thom_normalization(n));
    let te = tau.fiber_integrate(&[ax_t], Quadrature::Simpson, TruncationCheck::UpperEnd(1e-12))?;
    let alpha = ChartGrid::new(vec![(0.0, 2.0 * PI)], vec![alpha_res])?;
    let e = euler_form(&curv)?.extend_axes(&alpha)?;
    let dte = te.exterior_derivative();
    let residual = dte.max_diff(&e)?;
    Ok(TransgressionReport { residual, euler_scale: e.max_abs() })
}

/// Boundary data for Gauss-Bonnet with boundary: a chart of `∂M`, the
/// restricted connection, the outward unit normal as a section and the sign
/// relating the chart orientation to `(tangent frame, N)`.
#[derive(Clone, Debug)]
pub struct BoundaryFixture {
    pub name: &'static str,
    pub conn: FrameConnection,
    pub normal: SectionField,
    pub orientation: f64,
    /// `∫_M e(∇)` over the interior, when known in closed form.
    pub interior_euler: f64,
}

pub mod fixtures {
    use super::*;
    use std::collections::BTreeMap;

    /// Unit circle bounding the flat disk, charted by the counterclockwise angle.
    pub fn flat_disk(resolution: usize) -> Result<BoundaryFixture> {
        let g = ChartGrid::new(vec![(0.0, 2.0 * PI)], vec![resolution])?;
        let dv = vec![
            MixedForm::monomial(&g, 2, &[0], &[], g.sample(|x| -x[0].sin()))?,
            MixedForm::monomial(&g, 2, &[0], &[], g.sample(|x| x[0].cos()))?,
        ];
        let normal = SectionField::from_fns(&g, &[&|x: &[f64]| x[0].cos(), &|x: &[f64]| x[0].sin()])?.with_differentials(dv)?;
        Ok(BoundaryFixture {
            name: "flat_disk",
            conn: FrameConnection::zero(&g, 2),
            normal,
            orientation: -1.0,
            interior_euler: 0.0,
        })
    }

    /// Latitude circle `θ = θ0` bounding the polar cap of the unit sphere,
    /// in the frame `(e_θ, e_φ)`.
    pub fn sphere_cap(theta0: f64, resolution: usize) -> Result<BoundaryFixture> {
        let g = ChartGrid::new(vec![(0.0, 2.0 * PI)], vec![resolution])?;
        let w = MixedForm::monomial(&g, 2, &[0], &[], -theta0.cos())?;
        let conn = FrameConnection::new(&g, 2, Vec::new(), BTreeMap::from([((0, 1), w)]))?;
        let normal = SectionField::new(&g, vec![Coeff::Const(1.0), Coeff::Const(0.0)])?;
        Ok(BoundaryFixture {
            name: "sphere_cap",
            conn,
            normal,
            orientation: -1.0,
            interior_euler: 1.0 - theta0.cos(),
        })
    }

    /// Unit sphere bounding the flat 3-ball, charted by `(θ, φ)`.
    pub fn flat_ball(resolution: usize) -> Result<BoundaryFixture> {
        let g = ChartGrid::new(vec![(0.0, PI), (0.0, 2.0 * PI)], vec![resolution; 2])?;
        let normal = SectionField::from_fns(
            &g,
            &[
                &|x: &[f64]| x[0].sin() * x[1].cos(),
                &|x: &[f64]| x[0].sin() * x[1].sin(),
                &|x: &[f64]| x[0].cos(),
            ],
        )?;
        let d = |dt: &dyn Fn(&[f64]) -> f64, dp: &dyn Fn(&[f64]) -> f64| -> Result<MixedForm> {
            MixedForm::monomial(&g, 3, &[0], &[], g.sample(dt))?.add(&MixedForm::monomial(&g, 3, &[1], &[], g.sample(dp))?)
        };
        let dv = vec![
            d(&|x| x[0].cos() * x[1].cos(), &|x| -x[0].sin() * x[1].sin())?,
            d(&|x| x[0].cos() * x[1].sin(), &|x| x[0].sin() * x[1].cos())?,
            d(&|x| -x[0].sin(), &|_| 0.0)?,
        ];
        let normal = normal.with_differentials(dv)?;
        Ok(BoundaryFixture {
            name: "flat_ball",
            conn: FrameConnection::zero(&g, 3),
            normal,
            orientation: 1.0,
            interior_euler: 0.0,
        })
    }
}

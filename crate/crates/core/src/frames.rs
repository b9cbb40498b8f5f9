//! Moving frames on a chart: coframes, connection and curvature forms,
//! Euler forms, the Gauss equation along hypersurfaces and the sign-flip
//! action on connections.
//!
//! Conventions: `∇e_j = Σ_i ω_ij e_i`, `dθ_i = -Σ_j ω_ij ∧ θ_j` and
//! `Ω = dω + ω∧ω`. Only `ω_ij` with `i < j` is stored.

use crate::error::{Error, Result};
use crate::forms::{ChartGrid, Coeff, FormRing, MixedForm};
use crate::pfaffian::pfaffian_expand;
use crate::pseudosphere::Soliton;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Metric connection on a trivialized rank-`n` bundle over a chart.
#[derive(Clone, Debug)]
pub struct FrameConnection {
    grid: ChartGrid,
    rank: usize,
    theta: Vec<MixedForm>,
    omega: BTreeMap<(usize, usize), MixedForm>,
    frame_vectors: Option<Vec<Vec<Coeff>>>,
}

/// Curvature 2-forms `Ω_ij`, `i < j`.
#[derive(Clone, Debug)]
pub struct CurvatureSet {
    pub rank: usize,
    pub grid: ChartGrid,
    pub omega: BTreeMap<(usize, usize), MixedForm>,
}

impl CurvatureSet {
    /// `Ω_ij` with the skew extension; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> MixedForm {
        skew_get(&self.omega, &self.grid, self.rank, i, j)
    }
}

fn skew_get(map: &BTreeMap<(usize, usize), MixedForm>, g: &ChartGrid, n: usize, i: usize, j: usize) -> MixedForm {
    use std::cmp::Ordering::*;
    match i.cmp(&j) {
        Equal => MixedForm::zero(g, n),
        Less => map.get(&(i, j)).cloned().unwrap_or_else(|| MixedForm::zero(g, n)),
        Greater => map.get(&(j, i)).map(|f| f.scale(-1.0)).unwrap_or_else(|| MixedForm::zero(g, n)),
    }
}

fn check_one_form(f: &MixedForm, g: &ChartGrid, n: usize, what: &str) -> Result<()> {
    if f.grid() != g || f.fiber_rank() != n {
        return Err(Error::Grid(format!("{what} is not on the connection grid")));
    }
    match f.bidegree()? {
        None | Some((1, 0)) => Ok(()),
        Some(d) => Err(Error::Degree(format!("{what} has bidegree {d:?}, expected (1, 0)"))),
    }
}

impl FrameConnection {
    /// `theta` may be empty (a bare connection) or hold one 1-form per frame
    /// index. When the rank equals the chart dimension the coframe must be
    /// positively oriented at interior samples; it may degenerate on the chart
    /// boundary, as spherical charts do at the poles.
    pub fn new(
        grid: &ChartGrid,
        rank: usize,
        theta: Vec<MixedForm>,
        omega: BTreeMap<(usize, usize), MixedForm>,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Dimension("rank must be positive".into()));
        }
        if !theta.is_empty() && theta.len() != rank {
            return Err(Error::Dimension(format!("{} coframe forms for rank {rank}", theta.len())));
        }
        for (i, t) in theta.iter().enumerate() {
            check_one_form(t, grid, rank, &format!("theta_{}", i + 1))?;
        }
        for (&(i, j), w) in &omega {
            if i >= j || j >= rank {
                return Err(Error::Dimension(format!("omega key ({i}, {j}) must satisfy i < j < rank")));
            }
            check_one_form(w, grid, rank, &format!("omega_{}{}", i + 1, j + 1))?;
        }
        let conn = Self { grid: grid.clone(), rank, theta, omega, frame_vectors: None };
        if rank == grid.base_dim() && !conn.theta.is_empty() {
            conn.check_orientation()?;
        }
        Ok(conn)
    }

    /// The trivial connection `d` on a rank-`n` bundle.
    pub fn zero(grid: &ChartGrid, rank: usize) -> Self {
        Self { grid: grid.clone(), rank, theta: Vec::new(), omega: BTreeMap::new(), frame_vectors: None }
    }

    /// Attaches the frame vectors `e_i` written in chart coordinates
    /// (`vectors[i][k]` is the `∂_k` component of `e_i`).
    pub fn with_frame_vectors(mut self, vectors: Vec<Vec<Coeff>>) -> Result<Self> {
        if vectors.len() != self.rank || vectors.iter().any(|v| v.len() != self.grid.base_dim()) {
            return Err(Error::Dimension("frame vectors must be rank x base_dim".into()));
        }
        self.frame_vectors = Some(vectors);
        Ok(self)
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn theta(&self) -> &[MixedForm] {
        &self.theta
    }

    pub fn frame_vectors(&self) -> Option<&[Vec<Coeff>]> {
        self.frame_vectors.as_deref()
    }

    /// `ω_ij` with the skew extension.
    pub fn omega(&self, i: usize, j: usize) -> MixedForm {
        skew_get(&self.omega, &self.grid, self.rank, i, j)
    }

    pub fn omega_map(&self) -> &BTreeMap<(usize, usize), MixedForm> {
        &self.omega
    }

    /// Pointwise determinant of the coframe coefficient matrix.
    pub fn coframe_determinant(&self) -> Vec<f64> {
        let n = self.rank;
        let rows: Vec<Vec<Vec<f64>>> =
            self.theta.iter().map(|t| (0..n).map(|k| t.values(&[k], &[])).collect()).collect();
        (0..self.grid.len())
            .map(|p| DMatrix::from_fn(n, n, |i, k| rows[i][k][p]).determinant())
            .collect()
    }

    fn check_orientation(&self) -> Result<()> {
        let det = self.coframe_determinant();
        let g = &self.grid;
        let mut idx = vec![0usize; g.base_dim()];
        for (p, &d) in det.iter().enumerate() {
            g.unravel(p, &mut idx);
            let on_boundary = idx.iter().zip(g.resolution()).any(|(&i, &r)| i == 0 || i + 1 == r);
            let ok = if on_boundary { d > -1e-12 } else { d > 1e-12 };
            if !ok {
                return Err(Error::Frame(format!("coframe not positively oriented: det = {d:e} at sample {p}")));
            }
        }
        Ok(())
    }

    /// `∇^g`: conjugation by the diagonal sign matrix encoded in `g`
    /// (bit `i` set means `g(e_i) = -e_i`).
    pub fn apply_group_action(&self, g: u32) -> Self {
        let sign = |i: usize| if g & (1 << i) != 0 { -1.0 } else { 1.0 };
        let omega = self.omega.iter().map(|(&(i, j), w)| ((i, j), w.scale(sign(i) * sign(j)))).collect();
        Self { omega, ..self.clone() }
    }

    /// Levi-Civita connection of a coframe of full rank, from
    /// `dθ_i = ½ Σ C^i_jk θ_j∧θ_k` and `ω_ij = Σ_k a_ijk θ_k` with
    /// `a_ijk = ½(C^i_jk - C^j_ik - C^k_ij)`.
    pub fn levi_civita(grid: &ChartGrid, theta: Vec<MixedForm>) -> Result<Self> {
        let n = grid.base_dim();
        if theta.len() != n {
            return Err(Error::Dimension(format!("need {n} coframe forms, got {}", theta.len())));
        }
        let len = grid.len();
        let t: Vec<Vec<Vec<f64>>> = theta.iter().map(|f| (0..n).map(|k| f.values(&[k], &[])).collect()).collect();
        let dt: Vec<MixedForm> = theta.iter().map(|f| f.exterior_derivative()).collect();
        // D[i][k][l]: full skew coefficients of dθ_i in dy_k∧dy_l.
        let mut d = vec![vec![vec![vec![0.0; len]; n]; n]; n];
        for i in 0..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    let v = dt[i].values(&[k, l], &[]);
                    for p in 0..len {
                        d[i][k][l][p] = v[p];
                        d[i][l][k][p] = -v[p];
                    }
                }
            }
        }
        // a[i][j][k] per sample.
        let mut a = vec![vec![vec![vec![0.0; len]; n]; n]; n];
        for p in 0..len {
            let tm = DMatrix::from_fn(n, n, |i, k| t[i][k][p]);
            let inv = tm
                .try_inverse()
                .ok_or_else(|| Error::Frame(format!("coframe is singular at sample {p}")))?;
            let mut c = vec![vec![vec![0.0; n]; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for kk in 0..n {
                            for ll in 0..n {
                                s += d[i][kk][ll][p] * inv[(kk, j)] * inv[(ll, k)];
                            }
                        }
                        c[i][j][k] = s;
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        a[i][j][k][p] = 0.5 * (c[i][j][k] - c[j][i][k] - c[k][i][j]);
                    }
                }
            }
        }
        let mut omega = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut w = MixedForm::zero(grid, n);
                for (k, th) in theta.iter().enumerate() {
                    w = w.add(&th.mul_coeff(&Coeff::from(a[i][j][k].clone())))?;
                }
                omega.insert((i, j), w);
            }
        }
        Self::new(grid, n, theta, omega)
    }

    /// Restriction to a chart of an orthonormal frame field of Euclidean
    /// space, with `θ_i = ⟨e_i, dX⟩` and `ω_ij = ⟨e_i, de_j⟩` from finite differences.
    pub fn from_embedded_frame(grid: &ChartGrid, position: &[Coeff], frame: &[Vec<Coeff>]) -> Result<Self> {
        let rank = frame.len();
        let ambient = position.len();
        if frame.iter().any(|e| e.len() != ambient) {
            return Err(Error::Dimension("frame vectors must match the ambient dimension".into()));
        }
        let d = grid.base_dim();
        let mat = |c: &Coeff| c.materialize(grid);
        let pos: Vec<_> = position.iter().map(mat).collect();
        let fr: Vec<Vec<_>> = frame.iter().map(|e| e.iter().map(mat).collect()).collect();
        let dpos: Vec<Vec<Vec<f64>>> = (0..ambient)
            .map(|a| (0..d).map(|k| Coeff::Grid(pos[a].clone()).derivative(grid, k).materialize(grid).to_vec()).collect())
            .collect();
        let dfr: Vec<Vec<Vec<Vec<f64>>>> = fr
            .iter()
            .map(|e| {
                (0..ambient)
                    .map(|a| (0..d).map(|k| Coeff::Grid(e[a].clone()).derivative(grid, k).materialize(grid).to_vec()).collect())
                    .collect()
            })
            .collect();
        let len = grid.len();
        let mut theta = Vec::with_capacity(rank);
        for e in fr.iter() {
            let mut t = MixedForm::zero(grid, rank);
            for k in 0..d {
                let c: Vec<f64> = (0..len).map(|p| (0..ambient).map(|a| e[a][p] * dpos[a][k][p]).sum()).collect();
                t = t.add(&MixedForm::monomial(grid, rank, &[k], &[], c)?)?;
            }
            theta.push(t);
        }
        let mut omega = BTreeMap::new();
        for i in 0..rank {
            for j in (i + 1)..rank {
                let mut w = MixedForm::zero(grid, rank);
                for k in 0..d {
                    let c: Vec<f64> = (0..len)
                        .map(|p| (0..ambient).map(|a| fr[i][a][p] * dfr[j][a][k][p]).sum())
                        .collect();
                    w = w.add(&MixedForm::monomial(grid, rank, &[k], &[], c)?)?;
                }
                omega.insert((i, j), w);
            }
        }
        Self::new(grid, rank, theta, omega)
    }

    /// Builds a connection from sampled coefficients (see [`FrameSpec`]).
    pub fn from_spec(spec: &FrameSpec) -> Result<Self> {
        let grid = ChartGrid::new(spec.bounds.clone(), spec.resolution.clone())?;
        let one_form = |rows: &Vec<Vec<f64>>, what: &str| -> Result<MixedForm> {
            if rows.len() != grid.base_dim() {
                return Err(Error::Input(format!("{what}: expected {} coefficient arrays", grid.base_dim())));
            }
            let mut f = MixedForm::zero(&grid, spec.rank);
            for (k, c) in rows.iter().enumerate() {
                f = f.add(&MixedForm::monomial(&grid, spec.rank, &[k], &[], c.clone())?)?;
            }
            Ok(f)
        };
        let theta = spec
            .theta
            .iter()
            .enumerate()
            .map(|(i, r)| one_form(r, &format!("theta[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut omega = BTreeMap::new();
        for w in &spec.omega {
            omega.insert((w.i, w.j), one_form(&w.coefficients, &format!("omega[{},{}]", w.i, w.j))?);
        }
        Self::new(&grid, spec.rank, theta, omega)
    }
}

/// Serialized frame: per-axis bounds and resolution, plus the `dy_k`
/// coefficients of every coframe and connection form sampled on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub rank: usize,
    #[serde(default)]
    pub theta: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub omega: Vec<OmegaSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    pub i: usize,
    pub j: usize,
    pub coefficients: Vec<Vec<f64>>,
}

/// `Ω_ij = dω_ij + Σ_k ω_ik ∧ ω_kj`.
pub fn curvature(conn: &FrameConnection) -> CurvatureSet {
    let n = conn.rank;
    let mut omega = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut f = conn.omega(i, j).exterior_derivative();
            for k in 0..n {
                let prod = conn.omega(i, k).wedge(&conn.omega(k, j)).expect("same grid");
                f = f.add(&prod).expect("same grid");
            }
            omega.insert((i, j), f);
        }
    }
    CurvatureSet { rank: n, grid: conn.grid.clone(), omega }
}

/// `max |Ω_ij - k θ_i∧θ_j|` over samples and index pairs.
pub fn constant_curvature_residual(conn: &FrameConnection, k: f64) -> Result<f64> {
    if conn.theta.is_empty() {
        return Err(Error::Frame("constant curvature test needs a coframe".into()));
    }
    let curv = curvature(conn);
    let mut worst = 0.0f64;
    for (&(i, j), om) in &curv.omega {
        let model = conn.theta[i].wedge(&conn.theta[j])?.scale(k);
        worst = worst.max(om.max_diff(&model)?);
    }
    Ok(worst)
}

/// As [`constant_curvature_residual`], ignoring samples within `margin` of
/// the chart boundary. Connections that were themselves obtained by finite
/// differences pick up stacked one-sided stencils near the boundary.
pub fn constant_curvature_residual_interior(conn: &FrameConnection, k: f64, margin: usize) -> Result<f64> {
    if conn.theta.is_empty() {
        return Err(Error::Frame("constant curvature test needs a coframe".into()));
    }
    let curv = curvature(conn);
    let mut worst = 0.0f64;
    for (&(i, j), om) in &curv.omega {
        let model = conn.theta[i].wedge(&conn.theta[j])?.scale(k);
        worst = worst.max(om.max_diff_interior(&model, margin)?);
    }
    Ok(worst)
}

/// Bianchi residual `dΩ_ij - Σ Ω_ik∧ω_kj + Σ ω_ik∧Ω_kj` on interior samples.
pub fn bianchi_residual(conn: &FrameConnection) -> Result<f64> {
    let curv = curvature(conn);
    let n = conn.rank;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut r = curv.get(i, j).exterior_derivative();
            for k in 0..n {
                r = r.sub(&curv.get(i, k).wedge(&conn.omega(k, j))?)?;
                r = r.add(&conn.omega(i, k).wedge(&curv.get(k, j))?)?;
            }
            worst = worst.max(r.max_diff_interior(&MixedForm::zero(&conn.grid, n), 2)?);
        }
    }
    Ok(worst)
}

/// `Pf(Ω / 2π)` for even rank; the zero form for odd rank.
pub fn euler_form(curv: &CurvatureSet) -> Result<MixedForm> {
    let n = curv.rank;
    if n % 2 == 1 {
        return Ok(MixedForm::zero(&curv.grid, n));
    }
    let ring = FormRing { grid: curv.grid.clone(), fiber_rank: n };
    let scale = 1.0 / (2.0 * PI);
    pfaffian_expand(n, &|i, j| curv.get(i, j).scale(scale), &ring)
}

/// Residual of `Ω^∂_ab = Ω^M_ab + ω_na ∧ ω_nb` for a rank-`n` connection
/// restricted along a hypersurface chart whose last frame vector is normal,
/// together with the fiber-algebra form `ℛ^∂ = ℛ^M + (∇N)²/4` on the
/// components free of `e_n`. Returns the larger of the two residuals.
pub fn gauss_equation_residual(ambient: &FrameConnection, boundary: &FrameConnection, adapt_tol: f64) -> Result<f64> {
    let n = ambient.rank;
    if boundary.rank + 1 != n || boundary.grid != ambient.grid {
        return Err(Error::Dimension("boundary connection must have rank n-1 on the same chart".into()));
    }
    if ambient.theta.len() == n {
        let normal_part = ambient.theta[n - 1].max_abs();
        if normal_part > adapt_tol {
            return Err(Error::Frame(format!("frame not adapted: normal coframe restricts to {normal_part:e}")));
        }
    }
    let last = n - 1;
    let cm = curvature(ambient);
    let cb = curvature(boundary);
    let g = &ambient.grid;
    let lift = |f: &MixedForm| -> Result<MixedForm> {
        // Re-home a scalar form of the rank n-1 connection into rank n storage.
        let mut out = MixedForm::zero(g, n);
        for (&(a, p), c) in f.terms() {
            debug_assert_eq!(p, 0);
            out = out.add(&MixedForm::monomial(g, n, &crate::forms::indices(a), &[], c.clone())?)?;
        }
        Ok(out)
    };
    let mut worst = 0.0f64;
    for a in 0..last {
        for b in (a + 1)..last {
            let rhs = cm.get(a, b).add(&ambient.omega(last, a).wedge(&ambient.omega(last, b))?)?;
            worst = worst.max(lift(&cb.get(a, b))?.max_diff(&rhs)?);
        }
    }
    let rm = curvature_operator(&cm)?;
    let rb = curvature_operator(&cb)?;
    let mut nabla_n = MixedForm::zero(g, n);
    for a in 0..last {
        nabla_n = nabla_n.add(&ambient.omega(a, last).wedge(&MixedForm::e(g, n, a))?)?;
    }
    let nn = nabla_n.wedge(&nabla_n)?.scale(0.25);
    let rhs = rm.add(&nn)?.filter(|_, p| p & (1 << last) == 0);
    let mut rb_lift = MixedForm::zero(g, n);
    for (&(a, p), c) in rb.terms() {
        rb_lift = rb_lift.add(&MixedForm::monomial(g, n, &crate::forms::indices(a), &crate::forms::indices(p), c.clone())?)?;
    }
    worst = worst.max(rb_lift.max_diff(&rhs)?);
    Ok(worst)
}

/// `ℛ = -½ Σ_{i<j} Ω_ij e_i∧e_j`.
pub fn curvature_operator(curv: &CurvatureSet) -> Result<MixedForm> {
    let n = curv.rank;
    let g = &curv.grid;
    let mut r = MixedForm::zero(g, n);
    for (&(i, j), om) in &curv.omega {
        let eij = MixedForm::monomial(g, n, &[], &[i, j], 1.0)?;
        r = r.add(&om.wedge(&eij)?.scale(-0.5))?;
    }
    Ok(r)
}

/// Asymptotic-direction data: positive `x_i` with `Σ x_i² = 1`.
#[derive(Clone, Debug)]
pub struct PrincipalFrameData {
    pub x: Vec<Vec<f64>>,
}

impl PrincipalFrameData {
    pub fn new(x: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(v) = x.iter().flatten().find(|v| **v <= 0.0) {
            return Err(Error::Domain(format!("x_i must be positive, found {v}")));
        }
        Ok(Self { x })
    }

    /// Largest deviation of `Σ x_i²` from 1.
    pub fn unit_defect(&self) -> f64 {
        let len = self.x.first().map_or(0, |v| v.len());
        (0..len)
            .map(|p| (self.x.iter().map(|xi| xi[p] * xi[p]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrincipalResiduals {
    /// Connection forms against the directional-derivative formula.
    pub connection: f64,
    /// Normal-connection forms, when supplied.
    pub normal: Option<f64>,
    /// Closedness of `θ_i / x_i`.
    pub closedness: f64,
}

/// Checks the three principal-frame identities on interior samples.
pub fn principal_frame_residuals(
    data: &PrincipalFrameData,
    conn: &FrameConnection,
    normal_forms: Option<&BTreeMap<(usize, usize), MixedForm>>,
) -> Result<PrincipalResiduals> {
    let n = conn.rank;
    let g = &conn.grid;
    if data.x.len() != n || data.x.iter().any(|v| v.len() != g.len()) {
        return Err(Error::Dimension("principal data does not match the connection".into()));
    }
    if let Some(v) = data.x.iter().flatten().find(|v| **v <= 0.0) {
        return Err(Error::Domain(format!("x_i must be positive, found {v}")));
    }
    if conn.theta.len() != n {
        return Err(Error::Frame("principal residuals need a coframe".into()));
    }
    let vecs = conn
        .frame_vectors
        .as_ref()
        .ok_or_else(|| Error::Frame("principal residuals need frame vectors".into()))?;
    let d = g.base_dim();
    let grads: Vec<Vec<Vec<f64>>> = data
        .x
        .iter()
        .map(|xi| (0..d).map(|k| Coeff::from(xi.clone()).derivative(g, k).materialize(g).to_vec()).collect())
        .collect();
    let vv: Vec<Vec<std::sync::Arc<Vec<f64>>>> =
        vecs.iter().map(|e| e.iter().map(|c| c.materialize(g)).collect()).collect();
    // e_j(x_i) / x_m
    let dir = |j: usize, i: usize, m: usize| -> Coeff {
        Coeff::from(
            (0..g.len())
                .map(|p| (0..d).map(|k| vv[j][k][p] * grads[i][k][p]).sum::<f64>() / data.x[m][p])
                .collect::<Vec<f64>>(),
        )
    };
    let zero = MixedForm::zero(g, n);
    let mut res_a = 0.0f64;
    let mut res_b: Option<f64> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let model = conn.theta[i].mul_coeff(&dir(j, i, i)).sub(&conn.theta[j].mul_coeff(&dir(i, j, j)))?;
            res_a = res_a.max(conn.omega(i, j).sub(&model)?.max_diff_interior(&zero, 1)?);
            if let Some(phi) = normal_forms {
                let model = conn.theta[i].mul_coeff(&dir(i, j, i)).sub(&conn.theta[j].mul_coeff(&dir(j, i, j)))?;
                let actual = phi.get(&(i, j)).cloned().unwrap_or_else(|| zero.clone());
                let r = actual.sub(&model)?.max_diff_interior(&zero, 1)?;
                res_b = Some(res_b.map_or(r, |b: f64| b.max(r)));
            }
        }
    }
    let mut res_c = 0.0f64;
    for i in 0..n {
        let inv: Vec<f64> = data.x[i].iter().map(|v| 1.0 / v).collect();
        let f = conn.theta[i].mul_coeff(&Coeff::from(inv)).exterior_derivative();
        res_c = res_c.max(f.max_diff_interior(&zero, 1)?);
    }
    Ok(PrincipalResiduals { connection: res_a, normal: res_b, closedness: res_c })
}

/// Analytic frame fixtures.
pub mod fixtures {
    use super::*;

    fn one(g: &ChartGrid, n: usize, k: usize, f: impl Fn(&[f64]) -> f64) -> MixedForm {
        MixedForm::monomial(g, n, &[k], &[], g.sample(f)).expect("valid index")
    }

    fn single(i: usize, j: usize, f: MixedForm) -> BTreeMap<(usize, usize), MixedForm> {
        BTreeMap::from([((i, j), f)])
    }

    /// Upper half-plane `(u, v)`, `v > 0`: `θ = (du/v, dv/v)`, `ω_12 = -du/v`.
    pub fn upper_half_plane(u: (f64, f64), v: (f64, f64), resolution: usize) -> Result<FrameConnection> {
        if v.0 <= 0.0 {
            return Err(Error::Domain("upper half-plane chart needs v > 0".into()));
        }
        let g = ChartGrid::new(vec![u, v], vec![resolution; 2])?;
        let t1 = one(&g, 2, 0, |x| 1.0 / x[1]);
        let t2 = one(&g, 2, 1, |x| 1.0 / x[1]);
        let w = one(&g, 2, 0, |x| -1.0 / x[1]);
        FrameConnection::new(&g, 2, vec![t1, t2], single(0, 1, w))
    }

    /// Round sphere of radius `r` in `(θ, φ) ∈ [0,π]×[0,2π]`:
    /// `θ_1 = r dθ`, `θ_2 = r sinθ dφ`, `ω_12 = -cosθ dφ`.
    pub fn round_sphere(radius: f64, resolution: usize) -> Result<FrameConnection> {
        let g = ChartGrid::new(vec![(0.0, PI), (0.0, 2.0 * PI)], vec![resolution; 2])?;
        let t1 = one(&g, 2, 0, move |_| radius);
        let t2 = one(&g, 2, 1, move |x| radius * x[0].sin());
        let w = one(&g, 2, 1, |x| -x[0].cos());
        FrameConnection::new(&g, 2, vec![t1, t2], single(0, 1, w))
    }

    /// Flat torus `[0,2π]²` with the coordinate coframe.
    pub fn flat_torus(resolution: usize) -> Result<FrameConnection> {
        let g = ChartGrid::new(vec![(0.0, 2.0 * PI); 2], vec![resolution; 2])?;
        let t1 = MixedForm::dy(&g, 2, 0);
        let t2 = MixedForm::dy(&g, 2, 1);
        FrameConnection::new(&g, 2, vec![t1, t2], BTreeMap::new())
    }

    /// Upper half-space model of hyperbolic 3-space, coframe `dy_i / y_3`,
    /// connection from the coframe.
    pub fn hyperbolic_half_space(resolution: usize) -> Result<FrameConnection> {
        let g = ChartGrid::new(vec![(-0.5, 0.5), (-0.5, 0.5), (1.0, 2.0)], vec![resolution; 3])?;
        let th = (0..3).map(|k| one(&g, 3, k, |x| 1.0 / x[2])).collect();
        FrameConnection::levi_civita(&g, th)
    }

    /// Principal chart `(y_1, y_2) = (z + w, z - w)` of the pseudospherical
    /// surface with net angle `sol`: `θ_i = x_i dy_i` with `x_1 = cos(θ/2)`,
    /// `x_2 = sin(θ/2)`, frame vectors `e_i = x_i^{-1} ∂_{y_i}`.
    pub fn pseudosphere_principal(
        sol: Soliton,
        y1: (f64, f64),
        y2: (f64, f64),
        resolution: usize,
    ) -> Result<(FrameConnection, PrincipalFrameData, BTreeMap<(usize, usize), MixedForm>)> {
        let g = ChartGrid::new(vec![y1, y2], vec![resolution; 2])?;
        let ang = move |x: &[f64]| sol.theta(0.5 * (x[0] + x[1]), 0.5 * (x[0] - x[1]));
        // θ_{y1} = (θ_z + θ_w)/2, θ_{y2} = (θ_z - θ_w)/2
        let dy = move |x: &[f64], first: bool| {
            let (z, w) = (0.5 * (x[0] + x[1]), 0.5 * (x[0] - x[1]));
            let (tz, tw) = (sol.theta_z(z, w), sol.theta_w(z, w));
            if first {
                0.5 * (tz + tw)
            } else {
                0.5 * (tz - tw)
            }
        };
        let x1 = g.sample(|x| (0.5 * ang(x)).cos());
        let x2 = g.sample(|x| (0.5 * ang(x)).sin());
        let data = PrincipalFrameData::new(vec![x1.clone(), x2.clone()])?;
        let t1 = MixedForm::monomial(&g, 2, &[0], &[], x1.clone())?;
        let t2 = MixedForm::monomial(&g, 2, &[1], &[], x2.clone())?;
        let w = one(&g, 2, 0, move |x| -0.5 * dy(x, false)).add(&one(&g, 2, 1, move |x| -0.5 * dy(x, true)))?;
        // φ_12 = -dx_1 / x_2 = (θ_{y1}/2) dy_1 + (θ_{y2}/2) dy_2
        let phi = one(&g, 2, 0, move |x| 0.5 * dy(x, true)).add(&one(&g, 2, 1, move |x| 0.5 * dy(x, false)))?;
        let inv1: Vec<f64> = x1.iter().map(|v| 1.0 / v).collect();
        let inv2: Vec<f64> = x2.iter().map(|v| 1.0 / v).collect();
        let conn = FrameConnection::new(&g, 2, vec![t1, t2], single(0, 1, w))?.with_frame_vectors(vec![
            vec![Coeff::from(inv1), Coeff::Const(0.0)],
            vec![Coeff::Const(0.0), Coeff::from(inv2)],
        ])?;
        Ok((conn, data, single(0, 1, phi)))
    }

    /// Chebyshev-net coframe of a net angle on `(z, w)`:
    /// `θ_1 = cos(θ/2)(dz + dw)`, `θ_2 = sin(θ/2)(dw - dz)`, connection from the coframe.
    pub fn chebyshev_net(sol: Soliton, z: (f64, f64), w: (f64, f64), resolution: usize) -> Result<FrameConnection> {
        let g = ChartGrid::new(vec![z, w], vec![resolution; 2])?;
        let c = move |x: &[f64]| (0.5 * sol.theta(x[0], x[1])).cos();
        let s = move |x: &[f64]| (0.5 * sol.theta(x[0], x[1])).sin();
        let t1 = one(&g, 2, 0, c).add(&one(&g, 2, 1, c))?;
        let t2 = one(&g, 2, 0, move |x| -s(x)).add(&one(&g, 2, 1, s))?;
        FrameConnection::levi_civita(&g, vec![t1, t2])
    }

    /// Unit-radius cylinder over `(φ, z)` with frame `(φ̂, ẑ, N)`; returns the
    /// restricted ambient connection and the induced (flat) surface connection.
    pub fn cylinder(resolution: usize) -> Result<(FrameConnection, FrameConnection)> {
        let g = ChartGrid::new(vec![(0.0, 2.0 * PI), (-1.0, 1.0)], vec![resolution; 2])?;
        let c = |f: fn(&[f64]) -> f64| Coeff::from(g.sample(f));
        let pos = [c(|x| x[0].cos()), c(|x| x[0].sin()), c(|x| x[1])];
        let frame = vec![
            vec![c(|x| -x[0].sin()), c(|x| x[0].cos()), Coeff::Const(0.0)],
            vec![Coeff::Const(0.0), Coeff::Const(0.0), Coeff::Const(1.0)],
            vec![c(|x| x[0].cos()), c(|x| x[0].sin()), Coeff::Const(0.0)],
        ];
        let ambient = FrameConnection::from_embedded_frame(&g, &pos, &frame)?;
        let bdry = FrameConnection::new(&g, 2, vec![MixedForm::dy(&g, 2, 0), MixedForm::dy(&g, 2, 1)], BTreeMap::new())?;
        Ok((ambient, bdry))
    }

    /// Unit sphere in Euclidean 3-space over `(θ, φ)` with frame `(θ̂, φ̂, r̂)`;
    /// returns the restricted ambient connection and the analytic round metric connection.
    pub fn sphere_in_space(resolution: usize) -> Result<(FrameConnection, FrameConnection)> {
        let g = ChartGrid::new(vec![(0.2, PI - 0.2), (0.0, 2.0 * PI)], vec![resolution; 2])?;
        let c = |f: fn(&[f64]) -> f64| Coeff::from(g.sample(f));
        let pos = [
            c(|x| x[0].sin() * x[1].cos()),
            c(|x| x[0].sin() * x[1].sin()),
            c(|x| x[0].cos()),
        ];
        let frame = vec![
            vec![c(|x| x[0].cos() * x[1].cos()), c(|x| x[0].cos() * x[1].sin()), c(|x| -x[0].sin())],
            vec![c(|x| -x[1].sin()), c(|x| x[1].cos()), Coeff::Const(0.0)],
            pos.to_vec(),
        ];
        let ambient = FrameConnection::from_embedded_frame(&g, &pos, &frame)?;
        let t1 = MixedForm::dy(&g, 2, 0);
        let t2 = one(&g, 2, 1, |x| x[0].sin());
        let w = one(&g, 2, 1, |x| -x[0].cos());
        let bdry = FrameConnection::new(&g, 2, vec![t1, t2], single(0, 1, w))?;
        Ok((ambient, bdry))
    }

    /// Horizontal plane `z = 0` in Euclidean 3-space with the standard frame.
    pub fn flat_plane(resolution: usize) -> Result<(FrameConnection, FrameConnection)> {
        let g = ChartGrid::cube(2, -1.0, 1.0, resolution)?;
        let c = |f: fn(&[f64]) -> f64| Coeff::from(g.sample(f));
        let pos = [c(|x| x[0]), c(|x| x[1]), Coeff::Const(0.0)];
        let k = Coeff::Const;
        let frame = vec![
            vec![k(1.0), k(0.0), k(0.0)],
            vec![k(0.0), k(1.0), k(0.0)],
            vec![k(0.0), k(0.0), k(1.0)],
        ];
        let ambient = FrameConnection::from_embedded_frame(&g, &pos, &frame)?;
        let bdry = FrameConnection::new(&g, 2, vec![MixedForm::dy(&g, 2, 0), MixedForm::dy(&g, 2, 1)], BTreeMap::new())?;
        Ok((ambient, bdry))
    }

    /// Named two-dimensional fixtures for the command line.
    pub fn by_name(name: &str, resolution: usize) -> Result<FrameConnection> {
        match name {
            "upper_half_plane" => upper_half_plane((-1.0, 1.0), (1.0, 2.0), resolution),
            "round_sphere" => round_sphere(1.0, resolution),
            "flat_torus" => flat_torus(resolution),
            "pseudosphere" => Ok(pseudosphere_principal(Soliton::new(1.0)?, (-3.0, -1.0), (-1.0, 1.0), resolution)?.0),
            "cylinder" => Ok(cylinder(resolution)?.1),
            other => Err(Error::Fixture(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::forms::Quadrature;

    fn h2(c: &FrameConnection) -> f64 {
        let h = c.grid().max_spacing();
        h * h
    }

    #[test]
    fn zero_connection_is_flat() {
        let g = ChartGrid::cube(2, 0.0, 1.0, 9).unwrap();
        let c = curvature(&FrameConnection::zero(&g, 3));
        assert!(c.omega.values().all(|f| f.is_empty()));
    }

    #[test]
    fn hyperbolic_plane_curvature() {
        let c = upper_half_plane((-1.0, 1.0), (1.0, 2.0), 81).unwrap();
        assert!(constant_curvature_residual(&c, -1.0).unwrap() <= 10.0 * h2(&c));
        assert!(constant_curvature_residual(&c, 0.0).unwrap() >= 0.5 * 0.25);
        let lc = FrameConnection::levi_civita(c.grid(), c.theta().to_vec()).unwrap();
        assert!(lc.omega(0, 1).max_diff(&c.omega(0, 1)).unwrap() <= 10.0 * h2(&c));
    }

    #[test]
    fn wrong_curvature_is_detected_at_unit_scale() {
        let c = upper_half_plane((-0.5, 0.5), (0.5, 1.0), 41).unwrap();
        assert!(constant_curvature_residual(&c, 0.0).unwrap() >= 0.5);
    }

    #[test]
    fn round_sphere_curvature_and_euler() {
        let c = round_sphere(1.0, 201).unwrap();
        assert!(constant_curvature_residual(&c, 1.0).unwrap() <= 10.0 * h2(&c));
        let e = euler_form(&curvature(&c)).unwrap();
        assert!((e.integrate(Quadrature::Simpson).unwrap() - 2.0).abs() < 1e-3);
        let big = round_sphere(2.0, 201).unwrap();
        assert!(constant_curvature_residual(&big, 0.25).unwrap() <= 10.0 * h2(&big));
    }

    #[test]
    fn flat_torus_is_flat() {
        let c = flat_torus(33).unwrap();
        assert!(constant_curvature_residual(&c, 0.0).unwrap() <= 1e-10);
        let e = euler_form(&curvature(&c)).unwrap();
        assert!(e.is_empty() || e.integrate(Quadrature::Trapezoid).unwrap().abs() < 1e-10);
    }

    #[test]
    fn odd_rank_euler_form_vanishes() {
        let c = hyperbolic_half_space(9).unwrap();
        assert!(euler_form(&curvature(&c)).unwrap().is_empty());
    }

    #[test]
    fn hyperbolic_space_and_bianchi() {
        let c = hyperbolic_half_space(25).unwrap();
        assert!(constant_curvature_residual_interior(&c, -1.0, 2).unwrap() <= 10.0 * h2(&c));
        assert!(bianchi_residual(&c).unwrap() <= 10.0 * h2(&c));
    }

    #[test]
    fn orientation_enforced() {
        let g = ChartGrid::cube(2, 0.0, 1.0, 5).unwrap();
        let t = vec![MixedForm::dy(&g, 2, 1), MixedForm::dy(&g, 2, 0)];
        assert!(matches!(FrameConnection::new(&g, 2, t, BTreeMap::new()), Err(Error::Frame(_))));
    }

    #[test]
    fn gauss_equation_fixtures() {
        let (a, b) = sphere_in_space(101).unwrap();
        let h = a.grid().max_spacing();
        assert!(gauss_equation_residual(&a, &b, 10.0 * h * h).unwrap() <= 10.0 * h * h);
        let (a, b) = cylinder(101).unwrap();
        let h = a.grid().max_spacing();
        assert!(gauss_equation_residual(&a, &b, 10.0 * h * h).unwrap() <= 10.0 * h * h);
        assert!(constant_curvature_residual(&b, 0.0).unwrap() == 0.0);
        let (a, b) = flat_plane(11).unwrap();
        assert_eq!(gauss_equation_residual(&a, &b, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn unadapted_frame_rejected() {
        let g = ChartGrid::cube(2, -1.0, 1.0, 9).unwrap();
        let c = |f: fn(&[f64]) -> f64| Coeff::from(g.sample(f));
        let k = Coeff::Const;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pos = [c(|x| x[0]), c(|x| x[1]), k(0.0)];
        let frame = vec![
            vec![k(s), k(0.0), k(s)],
            vec![k(0.0), k(1.0), k(0.0)],
            vec![k(-s), k(0.0), k(s)],
        ];
        let a = FrameConnection::from_embedded_frame(&g, &pos, &frame).unwrap();
        let (_, b) = flat_plane(9).unwrap();
        assert!(matches!(gauss_equation_residual(&a, &b, 1e-6), Err(Error::Frame(_))));
    }

    #[test]
    fn pseudosphere_principal_identities() {
        let (conn, data, phi) =
            pseudosphere_principal(Soliton::new(1.0).unwrap(), (-3.0, -1.0), (-1.0, 1.0), 129).unwrap();
        let h = h2(&conn);
        assert!(data.unit_defect() < 1e-12);
        let r = principal_frame_residuals(&data, &conn, Some(&phi)).unwrap();
        assert!(r.connection <= 10.0 * h, "{r:?}");
        assert!(r.normal.unwrap() <= 10.0 * h, "{r:?}");
        assert!(r.closedness <= 10.0 * h, "{r:?}");
        assert!(constant_curvature_residual(&conn, -1.0).unwrap() <= 10.0 * h);
    }

    #[test]
    fn perturbed_principal_data_fails() {
        let (conn, data, _) =
            pseudosphere_principal(Soliton::new(1.0).unwrap(), (-3.0, -1.0), (-1.0, 1.0), 65).unwrap();
        let g = conn.grid().clone();
        let noisy: Vec<Vec<f64>> = data
            .x
            .iter()
            .map(|xi| xi.iter().zip(g.sample(|x| 0.1 * (3.0 * x[0]).sin() * (2.0 * x[1]).cos())).map(|(a, b)| a + b).collect())
            .collect();
        let bad = PrincipalFrameData { x: noisy };
        let r = principal_frame_residuals(&bad, &conn, None).unwrap();
        assert!(r.connection >= 1e-2);
    }

    #[test]
    fn constant_principal_data_is_closed() {
        let g = ChartGrid::cube(2, 0.0, 1.0, 9).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = vec![MixedForm::dy(&g, 2, 0).scale(s), MixedForm::dy(&g, 2, 1).scale(s)];
        let conn = FrameConnection::new(&g, 2, t, BTreeMap::new())
            .unwrap()
            .with_frame_vectors(vec![
                vec![Coeff::Const(1.0 / s), Coeff::Const(0.0)],
                vec![Coeff::Const(0.0), Coeff::Const(1.0 / s)],
            ])
            .unwrap();
        let data = PrincipalFrameData::new(vec![vec![s; g.len()], vec![s; g.len()]]).unwrap();
        let r = principal_frame_residuals(&data, &conn, None).unwrap();
        assert_eq!(r.closedness, 0.0);
        assert!(matches!(PrincipalFrameData::new(vec![vec![0.0; 3]]), Err(Error::Domain(_))));
    }

    #[test]
    fn chebyshev_net_has_curvature_minus_one() {
        let c = chebyshev_net(Soliton::new(2.0).unwrap(), (-1.5, -0.5), (-1.5, -0.5), 129).unwrap();
        assert!(constant_curvature_residual_interior(&c, -1.0, 2).unwrap() <= 10.0 * h2(&c));
    }

    #[test]
    fn group_action() {
        let c = round_sphere(1.0, 41).unwrap();
        assert!(c.apply_group_action(0).omega(0, 1).max_diff(&c.omega(0, 1)).unwrap() == 0.0);
        let cg = c.apply_group_action(0b01);
        assert!(cg.omega(0, 1).max_diff(&c.omega(0, 1).scale(-1.0)).unwrap() == 0.0);
        let e = euler_form(&curvature(&c)).unwrap();
        let eg = euler_form(&curvature(&cg)).unwrap();
        assert!(eg.max_diff(&e.scale(-1.0)).unwrap() == 0.0);
        let z = FrameConnection::zero(c.grid(), 2).apply_group_action(0b11);
        assert!(z.omega_map().is_empty());
    }

    #[test]
    fn group_action_conjugates_curvature_rank_three() {
        let c = hyperbolic_half_space(9).unwrap();
        let base = curvature(&c);
        for g in 0..8u32 {
            let cg = curvature(&c.apply_group_action(g));
            for (&(i, j), om) in &base.omega {
                let s = if ((g >> i) ^ (g >> j)) & 1 == 1 { -1.0 } else { 1.0 };
                assert_eq!(cg.omega[&(i, j)].max_diff(&om.scale(s)).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let g = ChartGrid::cube(2, 0.0, 1.0, 5).unwrap();
        let spec = FrameSpec {
            bounds: g.bounds().to_vec(),
            resolution: g.resolution().to_vec(),
            rank: 2,
            theta: vec![vec![vec![1.0; 25], vec![0.0; 25]], vec![vec![0.0; 25], vec![2.0; 25]]],
            omega: vec![OmegaSpec { i: 0, j: 1, coefficients: vec![vec![0.5; 25], vec![0.0; 25]] }],
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: FrameSpec = serde_json::from_str(&json).unwrap();
        let c = FrameConnection::from_spec(&back).unwrap();
        assert_eq!(c.omega(1, 0).values(&[0], &[])[3], -0.5);
        assert!(matches!(by_name("klein_bottle", 9), Err(Error::Fixture(_))));
    }
}

//! Verification suites. Each acceptance criterion is a function producing
//! check records; a suite is a fixed group of criteria plus a few extras.

use crate::complex::{
    act_cubes, act_simplices, beta_action, boundary_box, boundary_delta, boundary_double, character_sum, cubes,
    fundamental_cycle, hazzidakis_rhs, homology_box, mask_indices, pair_chains, simplices, solid_angles, Chain,
    GroupElement,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::flatform::{diagonalize_with_seed, match_directions, random_orthogonal, synthetic_instance, InstanceKind};
use crate::forms::{sphere_volume_quadrature, ChartGrid, Quadrature};
use crate::frames::FrameConnection;
use crate::pfaffian::{pfaffian, pfaffian_by_permutations, sphere_volume, SkewMatrix};
use crate::pseudosphere::{
    convergence_table, gauss_bonnet_closed, hazzidakis_corner_sum, hyperbolic_area, interior_angles,
    observed_orders, standard_family, Rectangle, SineGordonSolution,
};
use crate::report::{Check, SuiteReport};
use crate::thom::{
    fixtures as tf, flat_thom_integral, geodesic_curvature_even, geodesic_curvature_odd, geodesic_curvature_series,
    rotation_index_limit, transgression_check, SectionField,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;

/// Acceptance criteria by number, with a short title.
pub const CRITERIA: [(u8, &str); 11] = [
    (1, "pfaffian"),
    (2, "thom normalization"),
    (3, "sphere volumes"),
    (4, "gauss-bonnet closed surfaces"),
    (5, "rotation-index localization"),
    (6, "boundary gauss-bonnet"),
    (7, "combinatorics"),
    (8, "homology"),
    (9, "flat-form solver"),
    (10, "hazzidakis"),
    (11, "solid-angle tiling"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Pfaffian,
    Forms,
    Frames,
    Thom,
    Complex,
    Flatform,
    Hazzidakis,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Pfaffian, Suite::Forms, Suite::Frames, Suite::Thom, Suite::Complex, Suite::Flatform, Suite::Hazzidakis];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pfaffian => "pfaffian",
            Suite::Forms => "forms",
            Suite::Frames => "frames",
            Suite::Thom => "thom",
            Suite::Complex => "complex",
            Suite::Flatform => "flatform",
            Suite::Hazzidakis => "hazzidakis",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Pfaffian => &[1],
            Suite::Forms => &[3],
            Suite::Frames => &[4],
            Suite::Thom => &[2, 5, 6],
            Suite::Complex => &[7, 8, 11],
            Suite::Flatform => &[9],
            Suite::Hazzidakis => &[10],
        }
    }

    /// Sets the main grid resolution of this suite.
    pub fn set_resolution(self, cfg: &mut RunConfig, r: usize) {
        match self {
            Suite::Forms => cfg.sphere_resolution = r,
            Suite::Frames => cfg.gauss_bonnet_resolution = r,
            Suite::Thom => cfg.thom_resolution = r,
            Suite::Hazzidakis => cfg.hazzidakis_resolution = r,
            Suite::Pfaffian | Suite::Complex | Suite::Flatform => {}
        }
    }
}

fn rng(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

/// Runs `f`; a failed computation becomes a failing record with the error as note.
fn attempt(name: &str, criterion: Option<u8>, expected: f64, tol: f64, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, criterion, expected, tol, &e))
}

/// Check records for one acceptance criterion.
pub fn criterion(id: u8, cfg: &RunConfig) -> Vec<Check> {
    match id {
        1 => pfaffian_checks(cfg),
        2 => thom_normalization_checks(cfg),
        3 => sphere_volume_checks(cfg),
        4 => gauss_bonnet_checks(cfg),
        5 => rotation_index_checks(cfg),
        6 => boundary_checks(cfg),
        7 => combinatorics_checks(),
        8 => homology_checks(),
        9 => flatform_checks(cfg),
        10 => hazzidakis_checks(cfg),
        11 => tiling_checks(cfg),
        other => vec![Check::failed("criterion", Some(other), 0.0, 0.0, &Error::Input(format!("no criterion {other}")))],
    }
}

fn extras(suite: Suite, cfg: &RunConfig) -> Vec<Check> {
    match suite {
        Suite::Pfaffian => {
            let a = SkewMatrix::block_diagonal(&[2.0, 3.0, 5.0]);
            vec![attempt("blockdiag_product", None, 30.0, 1e-12, || {
                Ok(Check::within("blockdiag_product", None, pfaffian(&a)?, 30.0, 1e-12))
            })]
        }
        Suite::Frames => vec![attempt("gauss_bonnet_sphere_radius2", None, 2.0, cfg.tol_gauss_bonnet_sphere, || {
            let v = gauss_bonnet_closed("round_sphere_r2", cfg.gauss_bonnet_resolution, Quadrature::Trapezoid)?;
            Ok(Check::within("gauss_bonnet_sphere_radius2", None, v, 2.0, cfg.tol_gauss_bonnet_sphere))
        })],
        Suite::Thom => {
            let cap = attempt("sphere_cap_boundary", None, 1.0, cfg.tol_ball, || {
                let f = tf::sphere_cap(1.0, cfg.ball_resolution)?;
                let p = geodesic_curvature_even(&f.normal, &f.conn)?;
                let total = f.interior_euler + p.integrate(f.orientation, Quadrature::Trapezoid)?;
                Ok(Check::within("sphere_cap_boundary", None, total, 1.0, cfg.tol_ball))
            });
            let tr = attempt("transgression_flat", None, 0.0, cfg.tol_thom, || {
                let g = ChartGrid::cube(2, 0.0, 1.0, 9)?;
                let r = transgression_check(&FrameConnection::zero(&g, 2), 17, cfg.thom_radius, cfg.thom_resolution)?;
                Ok(Check::within("transgression_flat", None, r.residual, 0.0, cfg.tol_thom))
            });
            vec![cap, tr]
        }
        Suite::Forms | Suite::Complex | Suite::Flatform | Suite::Hazzidakis => Vec::new(),
    }
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> SuiteReport {
    let t = Instant::now();
    let mut checks: Vec<Check> = suite.criteria().iter().flat_map(|&k| criterion(k, cfg)).collect();
    checks.extend(extras(suite, cfg));
    SuiteReport::new(suite.name(), checks, Some(t.elapsed().as_secs_f64()))
}

/// Runs the suites on a pool of `jobs` threads; the output order follows `suites`.
pub fn run_suites(suites: &[Suite], cfg: &RunConfig, jobs: usize) -> Result<Vec<SuiteReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    Ok(pool.install(|| suites.par_iter().map(|&s| run_suite(s, cfg)).collect()))
}

fn random_skew(dim: usize, rng: &mut ChaCha8Rng) -> SkewMatrix {
    let m: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    SkewMatrix::skew_part(dim, &m)
}

fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut q = random_orthogonal(dim, rng);
    if q.determinant() < 0.0 {
        let c = -q.column(0).into_owned();
        q.set_column(0, &c);
    }
    q.transpose().as_slice().to_vec()
}

fn pfaffian_checks(cfg: &RunConfig) -> Vec<Check> {
    let c = Some(1);
    let mut out = Vec::new();
    for dim in (2..=10).step_by(2) {
        let mut r = rng(cfg, 100 + dim as u64);
        let name = format!("pf_squared_equals_det_dim{dim}");
        out.push(attempt(&name, c, 0.0, cfg.tol_pfaffian_det, || {
            let mut worst = 0.0f64;
            for _ in 0..cfg.pfaffian_cases {
                let a = random_skew(dim, &mut r);
                let det = DMatrix::from_row_slice(dim, dim, a.entries()).lu().determinant();
                let pf = pfaffian(&a)?;
                worst = worst.max((pf * pf - det).abs() / det.abs().max(f64::MIN_POSITIVE));
            }
            Ok(Check::within(&name, c, worst, 0.0, cfg.tol_pfaffian_det))
        }));
        let name = format!("so_conjugation_dim{dim}");
        out.push(attempt(&name, c, 0.0, cfg.tol_pfaffian_conjugation, || {
            let mut worst = 0.0f64;
            for _ in 0..cfg.pfaffian_cases {
                let a = random_skew(dim, &mut r);
                let b = random_rotation(dim, &mut r);
                let pf = pfaffian(&a)?;
                let conj = pfaffian(&a.conjugate(&b))?;
                worst = worst.max((conj - pf).abs() / pf.abs().max(1.0));
            }
            Ok(Check::within(&name, c, worst, 0.0, cfg.tol_pfaffian_conjugation))
        }));
        if dim <= 6 {
            let name = format!("definition_vs_recursion_dim{dim}");
            out.push(attempt(&name, c, 0.0, cfg.tol_pfaffian_definition, || {
                let mut worst = 0.0f64;
                for _ in 0..cfg.pfaffian_cases {
                    let a = random_skew(dim, &mut r);
                    let d = pfaffian_by_permutations(&a)? - pfaffian(&a)?;
                    worst = worst.max(d.abs());
                }
                Ok(Check::within(&name, c, worst, 0.0, cfg.tol_pfaffian_definition))
            }));
        }
    }
    out
}

fn thom_normalization_checks(cfg: &RunConfig) -> Vec<Check> {
    (1..=4)
        .map(|n| {
            let name = format!("flat_thom_integral_n{n}");
            attempt(&name, Some(2), 1.0, cfg.tol_thom, || {
                let v = flat_thom_integral(n, cfg.thom_radius, cfg.thom_resolution, Quadrature::Trapezoid)?;
                Ok(Check::within(&name, Some(2), v, 1.0, cfg.tol_thom))
            })
        })
        .collect()
}

fn sphere_volume_checks(cfg: &RunConfig) -> Vec<Check> {
    (2..=4)
        .map(|n| {
            let name = format!("sphere_volume_n{n}");
            let exact = sphere_volume(n as i64).unwrap_or(f64::NAN);
            attempt(&name, Some(3), exact, cfg.tol_sphere_volume, || {
                let v = sphere_volume_quadrature(n, cfg.sphere_resolution, Quadrature::Simpson)?;
                Ok(Check::within(&name, Some(3), v, exact, cfg.tol_sphere_volume))
            })
        })
        .collect()
}

fn gauss_bonnet_checks(cfg: &RunConfig) -> Vec<Check> {
    [("round_sphere", 2.0, cfg.tol_gauss_bonnet_sphere), ("flat_torus", 0.0, cfg.tol_gauss_bonnet_torus)]
        .into_iter()
        .map(|(fixture, chi, tol)| {
            let name = format!("gauss_bonnet_{fixture}");
            attempt(&name, Some(4), chi, tol, || {
                let v = gauss_bonnet_closed(fixture, cfg.gauss_bonnet_resolution, Quadrature::Trapezoid)?;
                Ok(Check::within(&name, Some(4), v, chi, tol))
            })
        })
        .collect()
}

fn rotation_index_checks(cfg: &RunConfig) -> Vec<Check> {
    let cases: [(&str, f64, f64); 2] = [("rotation_index_preserving", 1.0, 1.0), ("rotation_index_reversing", -1.0, -1.0)];
    cases
        .into_iter()
        .map(|(name, flip, expected)| {
            attempt(name, Some(5), expected, cfg.tol_rotation_index, || {
                let g = ChartGrid::cube(2, -1.0, 1.0, cfg.rotation_resolution)?;
                let conn = FrameConnection::zero(&g, 2);
                let v = SectionField::from_fns(&g, &[&|x: &[f64]| x[0], &|x: &[f64]| flip * x[1]])?;
                let r = rotation_index_limit(&v, &conn, &[cfg.rotation_scale], Quadrature::Trapezoid)?;
                Ok(Check::within(name, Some(5), r.limit, expected, cfg.tol_rotation_index))
            })
        })
        .collect()
}

fn boundary_checks(cfg: &RunConfig) -> Vec<Check> {
    let c = Some(6);
    let disk = attempt("flat_disk_boundary", c, 1.0, cfg.tol_disk, || {
        let f = tf::flat_disk(cfg.disk_resolution)?;
        let p = geodesic_curvature_even(&f.normal, &f.conn)?;
        Ok(Check::within("flat_disk_boundary", c, p.integrate(f.orientation, Quadrature::Trapezoid)?, 1.0, cfg.tol_disk))
    });
    let even = attempt("even_parity_exact", c, 0.0, 0.0, || {
        let f = tf::flat_disk(cfg.disk_resolution)?;
        let p = geodesic_curvature_even(&f.normal, &f.conn)?;
        let m = geodesic_curvature_even(&f.normal.neg(), &f.conn)?;
        Ok(Check::within("even_parity_exact", c, p.form.max_diff(&m.form)?, 0.0, 0.0))
    });
    let ball_check = attempt("flat_ball_boundary", c, 1.0, cfg.tol_ball, || {
        let f = tf::flat_ball(cfg.ball_resolution)?;
        let p = geodesic_curvature_odd(&f.normal, &f.conn)?;
        Ok(Check::within("flat_ball_boundary", c, p.integrate(f.orientation, Quadrature::Simpson)?, 1.0, cfg.tol_ball))
    });
    let odd = attempt("odd_parity_exact", c, 0.0, 0.0, || {
        let f = tf::flat_ball(cfg.ball_resolution)?;
        let p = geodesic_curvature_odd(&f.normal, &f.conn)?;
        let m = geodesic_curvature_odd(&f.normal.neg(), &f.conn)?;
        Ok(Check::within("odd_parity_exact", c, p.form.add(&m.form)?.max_abs(), 0.0, 0.0))
    });
    let series = attempt("odd_closed_form_vs_series", c, 0.0, 1e-12, || {
        let f = tf::flat_ball(33)?;
        let p = geodesic_curvature_odd(&f.normal, &f.conn)?;
        let s = geodesic_curvature_series(&f.normal, &f.conn)?;
        Ok(Check::within("odd_closed_form_vs_series", c, s.max_diff(&p.form)?, 0.0, 1e-12))
    });
    vec![disk, even, ball_check, odd, series]
}

fn combinatorics_checks() -> Vec<Check> {
    let c = Some(7);
    let mut d_delta = 0;
    let mut d_box = 0;
    for n in 1..=6 {
        for d in 0..n {
            for cell in cubes(n, d) {
                let ch = Chain::from_cell(cell, 1);
                d_box += usize::from(!boundary_box(n, &boundary_box(n, &ch)).is_zero());
            }
            for cell in simplices(n, d) {
                let ch = Chain::from_cell(cell, 1);
                d_delta += usize::from(!boundary_delta(&boundary_delta(&ch)).is_zero());
            }
        }
    }
    let mut equivariance = 0;
    let mut adjoint = 0;
    for n in 2..=5 {
        for h in GroupElement::all(n) {
            for d in 0..n {
                for cell in cubes(n, d) {
                    let ch = Chain::from_cell(cell, 1);
                    equivariance += usize::from(boundary_box(n, &act_cubes(&h, &ch)) != act_cubes(&h, &boundary_box(n, &ch)));
                }
                for cell in simplices(n, d) {
                    let ch = Chain::from_cell(cell, 1);
                    equivariance +=
                        usize::from(boundary_delta(&act_simplices(&h, &ch)) != act_simplices(&h, &boundary_delta(&ch)));
                }
            }
        }
        for k in 0..n - 1 {
            for a in cubes(n, n - 1 - k) {
                let a = Chain::from_cell(a, 1);
                let da = boundary_box(n, &a);
                for b in simplices(n, k + 1) {
                    let b = Chain::from_cell(b, 1);
                    adjoint += usize::from(pair_chains(&da, &b) != pair_chains(&a, &boundary_delta(&b)));
                }
            }
        }
    }
    let mut cycle = 0;
    let mut beta = 0;
    let mut cycle_err = None;
    for n in 2..=6 {
        match fundamental_cycle(n) {
            Ok(z) => {
                cycle += usize::from(!boundary_double(&z).is_empty());
                for h in GroupElement::all(n) {
                    beta += usize::from(!boundary_double(&beta_action(&h, &z)).is_empty());
                }
            }
            Err(e) => cycle_err = Some(e),
        }
    }
    let mut characters = 0;
    for n in 1..=8 {
        for m in 1..(1u32 << n) - 1 {
            characters += usize::from(character_sum(&mask_indices(m), n).map_or(true, |s| s != 0));
        }
    }
    let mut out = vec![
        Check::zero_count("simplicial_boundary_squares_to_zero", c, d_delta),
        Check::zero_count("cubical_boundary_squares_to_zero", c, d_box),
        Check::zero_count("boundaries_commute_with_group", c, equivariance),
        Check::zero_count("pairing_adjointness", c, adjoint),
    ];
    match cycle_err {
        Some(e) => out.push(Check::failed("fundamental_cycle_closed", c, 0.0, 0.0, &e)),
        None => {
            out.push(Check::zero_count("fundamental_cycle_closed", c, cycle));
            out.push(Check::zero_count("translated_cycles_closed", c, beta));
        }
    }
    out.push(Check::zero_count("character_sums_vanish", c, characters));
    out
}

fn homology_checks() -> Vec<Check> {
    (2..=6)
        .map(|n| {
            let name = format!("cubical_homology_n{n}");
            attempt(&name, Some(8), 0.0, 0.0, || {
                let h = homology_box(n)?;
                let mut want = vec![0; n];
                want[0] = 1;
                want[n - 1] = 1;
                let mismatches = h.betti.iter().zip(&want).filter(|(a, b)| a != b).count()
                    + h.betti.len().abs_diff(want.len())
                    + h.torsion.iter().filter(|t| !t.is_empty()).count();
                Ok(Check::zero_count(&name, Some(8), mismatches).with_note(format!("betti {:?}", h.betti)))
            })
        })
        .collect()
}

fn flatform_checks(cfg: &RunConfig) -> Vec<Check> {
    let c = Some(9);
    let mut out = Vec::new();
    for n in 2..=8 {
        let mut r = rng(cfg, 900 + n as u64);
        let mut min_match = f64::INFINITY;
        let mut symmetry = 0.0f64;
        let mut commutation = 0.0f64;
        let mut failures = 0;
        let mut first_err = None;
        for _ in 0..cfg.flatform_cases {
            let res = synthetic_instance(n, InstanceKind::Orthogonal, &mut r).and_then(|inst| {
                let d = diagonalize_with_seed(&inst.tensor, cfg.seed)?;
                Ok((match_directions(&inst.directions, &d.basis)?, d.diagnostics))
            });
            match res {
                Ok((m, d)) => {
                    min_match = min_match.min(m);
                    symmetry = symmetry.max(d.symmetry);
                    commutation = commutation.max(d.commutation);
                }
                Err(e) => {
                    failures += 1;
                    first_err.get_or_insert(e);
                }
            }
        }
        let mut recover = Check::within(format!("recovery_min_cos_n{n}"), c, min_match, 1.0, cfg.tol_flat_match);
        if let Some(e) = first_err {
            recover.pass = false;
            recover.note = Some(format!("{failures} instances failed: {e}"));
        }
        out.push(recover);
        out.push(Check::within(format!("symmetry_residual_n{n}"), c, symmetry, 0.0, cfg.tol_flat_residual));
        out.push(Check::within(format!("commutation_residual_n{n}"), c, commutation, 0.0, cfg.tol_flat_residual));
        let mut missed = 0;
        for _ in 0..cfg.flatform_cases {
            let caught = synthetic_instance(n, InstanceKind::Degenerate, &mut r)
                .map(|inst| matches!(diagonalize_with_seed(&inst.tensor, cfg.seed), Err(Error::Kernel { .. })))
                .unwrap_or(false);
            missed += usize::from(!caught);
        }
        out.push(Check::zero_count(format!("kernel_detection_n{n}"), c, missed));
    }
    out
}

fn hazzidakis_checks(cfg: &RunConfig) -> Vec<Check> {
    let c = Some(10);
    let mut out = Vec::new();
    let mut max_corner = f64::NEG_INFINITY;
    let mut min_order = f64::INFINITY;
    for (sol, rect) in standard_family() {
        let name = format!("area_vs_corner_sum_mu{}", sol.mu);
        out.push(attempt(&name, c, 0.0, cfg.tol_hazzidakis, || {
            let s = SineGordonSolution::from_soliton(sol, rect, cfg.hazzidakis_resolution)?;
            s.check_admissible()?;
            let area = hyperbolic_area(&s, Quadrature::Trapezoid);
            let corners = hazzidakis_corner_sum(&s);
            max_corner = max_corner.max(corners);
            Ok(Check::within(&name, c, (area - corners).abs(), 0.0, cfg.tol_hazzidakis))
        }));
        let name = format!("angle_excess_vs_rhs_mu{}", sol.mu);
        out.push(attempt(&name, c, 0.0, cfg.tol_hazzidakis, || {
            let s = SineGordonSolution::from_soliton(sol, rect, cfg.hazzidakis_resolution)?;
            let rhs = hazzidakis_rhs(&crate::complex::fractions_from_interior_angles(&interior_angles(&s)))?;
            let area = hyperbolic_area(&s, Quadrature::Trapezoid);
            Ok(Check::within(&name, c, (area / (2.0 * PI) - rhs).abs(), 0.0, cfg.tol_hazzidakis))
        }));
        match convergence_table(sol, rect, &cfg.convergence_resolutions) {
            Ok(rows) => {
                for p in observed_orders(&rows) {
                    min_order = min_order.min(if p.is_finite() { p } else { f64::NEG_INFINITY });
                }
            }
            Err(e) => out.push(Check::failed(format!("convergence_mu{}", sol.mu), c, 2.0, cfg.tol_order, &e)),
        }
    }
    out.push(Check::within("observed_order_min", c, min_order, 2.0, cfg.tol_order));
    let mut r = rng(cfg, 1000);
    let family = standard_family();
    let mut tested = 0;
    for _ in 0..cfg.shifted_rectangles {
        let (sol, _) = family[r.random_range(0..family.len())];
        let a: f64 = r.random_range(-4.0..0.0);
        let cc: f64 = r.random_range(-4.0..0.0);
        let rect = Rectangle { a, b: a + r.random_range(0.0..2.0), c: cc, d: cc + r.random_range(0.0..2.0) };
        let Ok(s) = SineGordonSolution::from_soliton(sol, rect, 17) else { continue };
        if s.check_admissible().is_err() {
            continue;
        }
        tested += 1;
        max_corner = max_corner.max(hazzidakis_corner_sum(&s));
    }
    out.push(Check::below("corner_sum_below_2pi", c, max_corner, 2.0 * PI).with_note(format!("{} rectangles", tested + 3)));
    out
}

fn tiling_checks(cfg: &RunConfig) -> Vec<Check> {
    let c = Some(11);
    let mut out = Vec::new();
    for n in 2..=4 {
        let mut r = rng(cfg, 1100 + n as u64);
        let name = format!("random_coframe_tiling_n{n}");
        out.push(attempt(&name, c, 1.0, cfg.tol_tiling, || {
            let mut worst = 0.0f64;
            for k in 0..cfg.tiling_coframes {
                let coframe: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| r.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 }).collect())
                    .collect();
                let rep = solid_angles(&coframe, cfg.samples, cfg.seed.wrapping_add(k as u64))?;
                worst = worst.max((rep.fractions.iter().sum::<f64>() - 1.0).abs());
            }
            Ok(Check::within(&name, c, 1.0 + worst, 1.0, cfg.tol_tiling))
        }));
        let name = format!("euclidean_cells_n{n}");
        let target = 1.0 / (2 * n) as f64;
        out.push(attempt(&name, c, target, cfg.tol_euclidean_cell, || {
            let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            let rep = solid_angles(&eye, cfg.samples, cfg.seed)?;
            let worst = rep.fractions.iter().fold(0.0f64, |m, f| m.max((f - target).abs()));
            Ok(Check::within(&name, c, target + worst, target, cfg.tol_euclidean_cell))
        }));
        let name = format!("euclidean_rhs_exact_n{n}");
        out.push(attempt(&name, c, 0.0, 0.0, || {
            Ok(Check::within(&name, c, hazzidakis_rhs(&vec![target; 2 * n])?, 0.0, 0.0))
        }));
    }
    out
}

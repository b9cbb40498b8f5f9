use gblab::complex::{
    boundary_box, fiber_fundamental_class, fractions_from_interior_angles, hazzidakis_rhs, ChainRecords,
};
use gblab::config::RunConfig;
use gblab::forms::{Coeff, Quadrature};
use gblab::frames::{curvature, euler_form, fixtures};
use gblab::pseudosphere::{
    gauss_bonnet_closed, hyperbolic_area, interior_angles, standard_family, SineGordonSolution,
};
use gblab::suites::{run_suites, Suite};
use gblab::thom::{thom_integral, SectionField};
use std::f64::consts::PI;

#[test]
fn corner_angles_feed_the_tiling_identity() {
    for (sol, rect) in standard_family() {
        let s = SineGordonSolution::from_soliton(sol, rect, 257).unwrap();
        let rhs = hazzidakis_rhs(&fractions_from_interior_angles(&interior_angles(&s))).unwrap();
        let area = hyperbolic_area(&s, Quadrature::Trapezoid);
        assert!((area / (2.0 * PI) - rhs).abs() < 1e-6, "mu={}: {area} {rhs}", sol.mu);
        assert!(rhs > 0.0 && rhs < 1.0);
    }
}

#[test]
fn thom_integral_of_zero_section_matches_gauss_bonnet() {
    let conn = fixtures::round_sphere(1.0, 161).unwrap();
    let g = conn.grid().clone();
    let zero = SectionField::new(&g, vec![Coeff::Const(0.0); 2]).unwrap();
    let t = thom_integral(&zero, &conn, 1.0, Quadrature::Simpson).unwrap();
    let e = euler_form(&curvature(&conn)).unwrap().integrate(Quadrature::Simpson).unwrap();
    let gb = gauss_bonnet_closed("round_sphere", 161, Quadrature::Simpson).unwrap();
    assert!((t - e).abs() < 1e-12);
    assert!((gb - 2.0).abs() < 1e-3);
    assert!((t - gb).abs() < 1e-12);
}

#[test]
fn fiber_class_survives_interchange() {
    for n in 2..=5 {
        let f = fiber_fundamental_class(n);
        let json = serde_json::to_string(&ChainRecords::from_cubes(n, &f)).unwrap();
        let back: ChainRecords = serde_json::from_str(&json).unwrap();
        let f2 = back.to_cubes(n).unwrap();
        assert_eq!(f2, f);
        assert!(boundary_box(n, &f2).is_empty());
    }
}

#[test]
fn suites_do_not_depend_on_job_count() {
    let cfg = RunConfig { samples: 20_000, flatform_cases: 5, ..RunConfig::default() };
    let suites = [Suite::Pfaffian, Suite::Forms, Suite::Complex];
    let strip = |mut v: Vec<gblab::report::SuiteReport>| {
        for s in &mut v {
            s.wall_time_s = None;
        }
        v
    };
    let a = strip(run_suites(&suites, &cfg, 1).unwrap());
    let b = strip(run_suites(&suites, &cfg, 3).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|s| s.suite.as_str()).collect::<Vec<_>>(), ["pfaffian", "forms", "complex"]);
}

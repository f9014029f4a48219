use approx::assert_relative_eq;
use cmc_core::barrier::{
    half_cylinder_eval, horizontal_cylinder_bound, lower_envelope, nodoid_barrier_eval, support_line, CylinderMode,
    HalfCylinder,
};
use cmc_core::nodoid::{params_from_t, profile};
use cmc_core::solver::{solve_dirichlet, SolverConfig};
use cmc_core::{BoundaryFunction, Case, Expr, Grid, RowSpacing, SidePolicy, StripProblem};

/// `div(∇u/√(1+|∇u|²))` by nested central differences of a closed form.
fn mean_curvature_operator(u: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
    let h = 1e-4;
    let flux = |x: f64, y: f64| {
        let ux = (u(x + h, y) - u(x - h, y)) / (2.0 * h);
        let uy = (u(x, y + h) - u(x, y - h)) / (2.0 * h);
        let w = (1.0 + ux * ux + uy * uy).sqrt();
        (ux / w, uy / w)
    };
    let k = 1e-3;
    (flux(x + k, y).0 - flux(x - k, y).0) / (2.0 * k) + (flux(x, y + k).1 - flux(x, y - k).1) / (2.0 * k)
}

#[test]
fn half_cylinders_have_mean_curvature_h() {
    for (theta, h) in [(0.0, 0.5), (0.4, 0.5), (-1.0, 1.3)] {
        let c = HalfCylinder::from_angle(theta, 0.3, -0.2, h).unwrap();
        for (x, y) in [(0.0, 0.0), (1.2, 0.5 * c.half_width()), (-2.0, -0.8 * c.half_width())] {
            let q = mean_curvature_operator(|x, y| c.eval(x, y).unwrap(), x, y);
            assert_relative_eq!(q, 2.0 * h, epsilon = 1e-4);
        }
        let r = c.half_width();
        assert_relative_eq!(c.eval(0.3, r).unwrap(), -0.2, epsilon = 1e-12);
        assert_relative_eq!(c.eval(1.3, -r).unwrap(), -0.2 + theta.tan(), epsilon = 1e-12);
    }
    assert_relative_eq!(half_cylinder_eval(5.0, 0.0, 0.0, 0.0, 0.0, 0.5).unwrap(), -1.0);
    assert!(half_cylinder_eval(0.0, 1.01, 0.0, 0.0, 0.0, 0.5).is_err());
}

#[test]
fn nodoid_sheet_has_mean_curvature_h() {
    for (h, t) in [(1.0, 1.0), (0.5, 0.4)] {
        let params = params_from_t(h, t).unwrap();
        let prof = profile(&params, 4001).unwrap();
        let eval = |x: f64, y: f64| nodoid_barrier_eval(&prof, (0.0, 0.0), x, y).unwrap();
        let hh = params.half_height;
        for (x, y) in [(0.0, 0.0), (0.3 * t, 0.4 * hh), (-0.5 * t, -0.7 * hh)] {
            let q = mean_curvature_operator(eval, x, y);
            assert_relative_eq!(q, 2.0 * h, epsilon = 2e-3);
        }
    }
}

#[test]
fn collin_envelope_is_a_lower_bound_for_solutions() {
    let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.3, 0.5]), (-20.0, 20.0), 0.01).unwrap();
    let p = StripProblem::new(0.5, 1.0, (-3.0, 3.0), (49, 25), f.clone(), SidePolicy::Envelope(Case::Collin))
        .unwrap()
        .with_rows(RowSpacing::Cosine);
    let env = lower_envelope(&f, Case::Collin, 0.5, p.grid()).unwrap();
    let u = solve_dirichlet(&p, &SolverConfig::default()).unwrap().field;
    let g = p.grid();
    let tol = 10.0 * g.dx().max(g.dy()).powi(2);
    for (a, b) in u.values().iter().zip(env.values()) {
        assert!(*a >= b - tol);
    }
    for i in 0..g.nx {
        assert_relative_eq!(env.at(i, 0), f.eval(g.x(i)), epsilon = 1e-12);
    }
}

#[test]
fn lopez_envelope_is_a_lower_bound_for_solutions() {
    let params = params_from_t(1.0, 1.0).unwrap();
    let l = params.half_height;
    let f = BoundaryFunction::closed(
        Expr::Sum(vec![
            Expr::Polynomial(vec![0.0, 0.0, 0.1]),
            Expr::Sine { amplitude: 0.3, frequency: 1.0, phase: 1.0 },
        ]),
        (-20.0, 20.0),
        0.01,
    )
    .unwrap();
    let case = Case::Lopez { neck: 1.0 };
    let p = StripProblem::new(1.0, l, (-3.0, 3.0), (49, 17), f.clone(), SidePolicy::Envelope(case))
        .unwrap()
        .with_rows(RowSpacing::Cosine);
    let env = lower_envelope(&f, case, 1.0, p.grid()).unwrap();
    let u = solve_dirichlet(&p, &SolverConfig::default()).unwrap().field;
    let g = p.grid();
    let tol = 10.0 * g.dx().max(g.dy()).powi(2);
    for (a, b) in u.values().iter().zip(env.values()) {
        assert!(*a >= b - tol, "{a} < {b}");
    }
    for i in 0..g.nx {
        assert!(env.at(i, 0) <= f.eval(g.x(i)) + 1e-9);
    }
}

#[test]
fn lopez_envelope_needs_the_under_condition() {
    let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, -1.0]), (-20.0, 20.0), 0.01).unwrap();
    let params = params_from_t(1.0, 1.0).unwrap();
    let g = Grid::new((-2.0, 2.0), (-params.half_height, params.half_height), 9, 5).unwrap();
    assert!(lower_envelope(&f, Case::Lopez { neck: 1.0 }, 1.0, &g).is_err());
    assert!(lower_envelope(&f, Case::Collin, 1.0, &g).is_err());
}

#[test]
fn support_lines_of_convex_data() {
    let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, 1.0]), (-3.0, 3.0), 0.01).unwrap();
    assert_relative_eq!(support_line(&f, 1.0).unwrap(), 2.0, epsilon = 1e-6);
    let v = BoundaryFunction::closed(Expr::Abs { center: 0.0, slope: 1.0 }, (-3.0, 3.0), 0.01).unwrap();
    let s = support_line(&v, 0.0).unwrap();
    assert!((-1.0..=1.0).contains(&s));
}

#[test]
fn horizontal_cylinder_bounds() {
    let line = BoundaryFunction::closed(Expr::Affine { slope: 1.0, intercept: 0.0 }, (-10.0, 10.0), 0.01).unwrap();
    let b = horizontal_cylinder_bound(&line, 3.0, 0.5, CylinderMode::Monotone { x0: 0.0 }).unwrap();
    assert_relative_eq!(b, 4.0, epsilon = 1e-12);
    assert!(horizontal_cylinder_bound(&line, 1.0, 0.5, CylinderMode::Monotone { x0: 0.0 }).is_err());
    let flat = BoundaryFunction::closed(Expr::Constant(0.0), (-10.0, 10.0), 0.01).unwrap();
    assert_relative_eq!(
        horizontal_cylinder_bound(&flat, 0.0, 0.5, CylinderMode::UpperCircle).unwrap(),
        0.0,
        epsilon = 1e-12
    );
}

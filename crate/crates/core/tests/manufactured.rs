//! Manufactured solutions checked against automatic differentiation of
//! independently transcribed formulas.

use std::f64::consts::PI;

use aniso_stokes::analysis::{solve_lambda, BoundaryLayer2d, ExactSolution, SingularEdge3d};
use aniso_stokes::mesh::Point;
use nalgebra::{Matrix3, SVector};
use num_dual::{hessian, third_derivative, Dual2SVec64, DualNum};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// `x^2 (1 - x)^2 exp(-x / eps)` and its first three derivatives.
fn layer_factor(x: f64, eps: f64) -> [f64; 4] {
    let (f, d1, d2, d3) = third_derivative(|t| (t * t) * (-t + 1.0).powi(2) * (-t / eps).exp(), x);
    [f, d1, d2, d3]
}

fn bump_factor(y: f64) -> [f64; 4] {
    let (f, d1, d2, d3) = third_derivative(|t| (t * t) * (-t + 1.0).powi(2), y);
    [f, d1, d2, d3]
}

fn assert_close(a: f64, b: f64, scale: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol * scale.max(1.0), "{what}: {a} vs {b}");
}

#[test]
fn boundary_layer_matches_stream_function_derivatives() {
    let mut rng = StdRng::seed_from_u64(7);
    for &(eps, nu) in &[(1e-2, 1.0), (1e-3, 1e-3), (0.3, 2.0)] {
        let case = BoundaryLayer2d::new(eps, nu).unwrap();
        for _ in 0..50 {
            let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
            let p = Point::new(x, y, 0.0);
            let a = layer_factor(x, eps);
            let b = bump_factor(y);
            let u = Point::new(a[0] * b[1], -a[1] * b[0], 0.0);
            let grad = Matrix3::new(a[1] * b[1], a[0] * b[2], 0.0, -a[2] * b[0], -a[1] * b[1], 0.0, 0.0, 0.0, 0.0);
            let lap = Point::new(a[2] * b[1] + a[0] * b[3], -a[3] * b[0] - a[1] * b[2], 0.0);
            let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!((case.velocity(&p) - u).norm() <= 1e-12 * scale);
            assert!((case.velocity_gradient(&p) - grad).norm() <= 1e-12 * scale);
            assert!((case.velocity_laplacian(&p) - lap).norm() <= 1e-11 * scale);
            let e = (-x / eps).exp();
            let c = eps * (1.0 - (-1.0 / eps).exp());
            assert_close(case.pressure(&p), e - c, 1.0, 1e-14, "pressure");
            let dp = Point::new(-e / eps, 0.0, 0.0);
            assert!((case.pressure_gradient(&p) - dp).norm() <= 1e-12 * dp.norm().max(1.0));
            let f = -nu * lap + dp;
            assert!((case.forcing(&p) - f).norm() <= 1e-11 * f.norm().max(1.0));
            assert!(case.velocity_gradient(&p).trace().abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn boundary_layer_vanishes_on_the_boundary() {
    let case = BoundaryLayer2d::new(1e-2, 1.0).unwrap();
    for k in 0..=20 {
        let s = k as f64 / 20.0;
        for p in [Point::new(s, 0.0, 0.0), Point::new(s, 1.0, 0.0), Point::new(0.0, s, 0.0), Point::new(1.0, s, 0.0)] {
            assert!(case.velocity(&p).norm() < 1e-15);
        }
    }
    assert!((case.pressure_constant() - 0.01 * (1.0 - (-100.0f64).exp())).abs() < 1e-16);
}

#[test]
fn boundary_layer_central_differences() {
    let case = BoundaryLayer2d::new(0.05, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let p = Point::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), 0.0);
        let step = 1e-5;
        let grad = case.velocity_gradient(&p);
        let dp = case.pressure_gradient(&p);
        for r in 0..2 {
            let mut e = Point::zeros();
            e[r] = step;
            let du = (case.velocity(&(p + e)) - case.velocity(&(p - e))) / (2.0 * step);
            for c in 0..2 {
                assert_close(du[c], grad[(c, r)], grad.norm(), 1e-6, "du");
            }
            let fd = (case.pressure(&(p + e)) - case.pressure(&(p - e))) / (2.0 * step);
            assert_close(fd, dp[r], dp.norm(), 1e-6, "dp");
        }
    }
}

/// Velocity and pressure of the edge singularity in Cartesian coordinates,
/// written out as in the displayed formulas.
fn edge_fields<D: DualNum<Primitive = f64> + Copy>(x: [D; 3], lambda: f64, omega: f64) -> [D; 4] {
    let [x, y, z] = x;
    let r = (x * x + y * y).sqrt();
    let mut phi = y.atan2(x);
    if phi.re() < 0.0 {
        phi += 2.0 * PI;
    }
    let l = lambda;
    let rl = r.powf(l);
    let u1 = z
        * rl
        * (-(phi.sin() * (phi * (1.0 - l) + l * omega).cos()) * l
            + (-phi + omega).sin() * (phi * (l - 1.0)).cos() * l
            + ((-phi + omega) * l).sin());
    let u2 = z
        * rl
        * ((phi * l).sin()
            - phi.sin() * (phi * (1.0 - l) + l * omega).sin() * l
            - (-phi + omega).sin() * (phi * (l - 1.0)).sin() * l);
    let u3 = r.powf(2.0 / 3.0) * (phi * (2.0 / 3.0)).sin();
    let p = z * r.powf(l - 1.0) * (((phi * (l - 1.0)) + omega).sin() + ((phi * (l - 1.0)) - l * omega).sin()) * (2.0 * l);
    [u1, u2, u3, p]
}

fn sector_point(rng: &mut StdRng, omega: f64, r_min: f64) -> Point {
    let r = rng.random_range(r_min..1.0);
    let phi = rng.random_range(0.01..omega - 0.01);
    Point::new(r * phi.cos(), r * phi.sin(), rng.random_range(0.0..1.0))
}

#[test]
fn lambda_root() {
    let omega = 1.5 * PI;
    let lambda = solve_lambda(omega).unwrap();
    assert!((lambda - 0.54448).abs() < 5e-6);
    assert!(((omega * lambda).sin() - lambda).abs() <= 1e-14);
    let f = |l: f64| (omega * l).sin() - l;
    assert!(f(1e-6) > 0.0 && f(1.0) < 0.0);
    assert!(solve_lambda(0.9).is_err());
    assert!(solve_lambda(f64::NAN).is_err());
}

#[test]
fn singular_edge_matches_displayed_formulas() {
    let mut rng = StdRng::seed_from_u64(11);
    for &nu in &[1.0, 0.1] {
        let case = SingularEdge3d::new(nu, 1.5 * PI).unwrap();
        let (lambda, omega) = (case.lambda, case.omega);
        for _ in 0..100 {
            let p = sector_point(&mut rng, omega, 0.05);
            let x = SVector::<f64, 3>::new(p.x, p.y, p.z);
            let mut grad = Matrix3::zeros();
            let mut lap = Point::zeros();
            let mut u = Point::zeros();
            for c in 0..3 {
                let (v, g, h) = hessian(|v: SVector<Dual2SVec64<3>, 3>| edge_fields([v[0], v[1], v[2]], lambda, omega)[c], &x);
                u[c] = v;
                for r in 0..3 {
                    grad[(c, r)] = g[r];
                }
                lap[c] = h.trace();
            }
            let (pv, pg, _) = hessian(|v: SVector<Dual2SVec64<3>, 3>| edge_fields([v[0], v[1], v[2]], lambda, omega)[3], &x);
            let dp = Point::new(pg[0], pg[1], pg[2]);
            let scale = grad.norm().max(1.0);
            assert!((case.velocity(&p) - u).norm() <= 1e-12 * u.norm().max(1.0));
            assert!((case.velocity_gradient(&p) - grad).norm() <= 1e-11 * scale);
            assert!((case.velocity_laplacian(&p) - lap).norm() <= 1e-10 * lap.norm().max(1.0));
            assert_close(case.pressure(&p), pv, pv.abs(), 1e-12, "pressure");
            assert!((case.pressure_gradient(&p) - dp).norm() <= 1e-11 * dp.norm().max(1.0));
            assert!(grad.trace().abs() <= 1e-10 * scale, "div u = {}", grad.trace());
            let f = -nu * lap + dp;
            assert!((case.forcing(&p) - f).norm() <= 1e-10 * f.norm().max(1.0));
            if nu == 1.0 {
                assert!(f.x.abs() <= 1e-10 * dp.norm() && f.y.abs() <= 1e-10 * dp.norm());
                assert!(case.forcing(&p).x.abs() <= 1e-10 * dp.norm());
                assert!(case.forcing(&p).y.abs() <= 1e-10 * dp.norm());
            }
            assert!((case.dirichlet(&p) - u).norm() <= 1e-12 * u.norm().max(1.0));
        }
    }
}

#[test]
fn singular_edge_pressure_has_zero_mean() {
    let case = SingularEdge3d::new(1.0, 1.5 * PI).unwrap();
    // The angular factor integrates to zero; r and z factors separate.
    let n = 20_000;
    let h = case.omega / n as f64;
    let integral: f64 = (0..n)
        .map(|k| {
            let phi = (k as f64 + 0.5) * h;
            h * case.pressure_angular(phi)
        })
        .sum();
    assert!(integral.abs() < 1e-8, "{integral}");
    let closed = |phi: f64| {
        let l = case.lambda;
        -((l - 1.0) * phi + case.omega).cos() / (l - 1.0) - ((l - 1.0) * phi - l * case.omega).cos() / (l - 1.0)
    };
    assert!((closed(case.omega) - closed(0.0)).abs() < 1e-13);
}

#[test]
fn singular_edge_no_slip_faces() {
    // u_1, u_2 vanish on z = 0; u_3 on the faces phi = 0 and phi = omega.
    let case = SingularEdge3d::new(1.0, 1.5 * PI).unwrap();
    for k in 1..10 {
        let r = k as f64 / 10.0;
        let bottom = case.velocity(&Point::new(r * 0.3f64.cos(), r * 0.3f64.sin(), 0.0));
        assert!(bottom.x.abs() < 1e-15 && bottom.y.abs() < 1e-15);
        let face = case.velocity(&Point::new(r, 0.0, 0.5));
        assert!(face.z.abs() < 1e-15);
    }
}

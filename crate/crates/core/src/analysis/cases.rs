//! Manufactured solutions.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::AnalysisError;
use crate::mesh::Point;

/// An exact Stokes solution `(u, p)` with `f = -nu Laplace u + grad p`.
pub trait ExactSolution: Sync {
    fn dim(&self) -> usize;
    fn nu(&self) -> f64;
    fn velocity(&self, x: &Point) -> Point;
    /// Entry `(c, r)` is `d u_c / d x_r`.
    fn velocity_gradient(&self, x: &Point) -> Matrix3<f64>;
    fn velocity_laplacian(&self, x: &Point) -> Point;
    fn pressure(&self, x: &Point) -> f64;
    fn pressure_gradient(&self, x: &Point) -> Point;

    fn forcing(&self, x: &Point) -> Point {
        -self.nu() * self.velocity_laplacian(x) + self.pressure_gradient(x)
    }

    fn dirichlet(&self, x: &Point) -> Point {
        self.velocity(x)
    }
}

/// Derivatives `f, f', f'', f'''` of `x^2 (1 - x)^2`.
fn quartic_bump(x: f64) -> [f64; 4] {
    [
        x * x * (1.0 - x) * (1.0 - x),
        2.0 * x - 6.0 * x * x + 4.0 * x * x * x,
        2.0 - 12.0 * x + 12.0 * x * x,
        -12.0 + 24.0 * x,
    ]
}

/// Boundary layer flow on the unit square from the stream function
/// `xi = x^2 (1-x)^2 y^2 (1-y)^2 exp(-x / eps)`, `u = (d_y xi, -d_x xi)`,
/// with pressure `p = exp(-x / eps) - C(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayer2d {
    pub epsilon: f64,
    pub nu: f64,
}

impl BoundaryLayer2d {
    pub fn new(epsilon: f64, nu: f64) -> Result<Self, AnalysisError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(AnalysisError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(AnalysisError::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        Ok(Self { epsilon, nu })
    }

    /// Mean of `exp(-x / eps)` over the unit square.
    pub fn pressure_constant(&self) -> f64 {
        self.epsilon * (1.0 - (-1.0 / self.epsilon).exp())
    }

    /// Derivatives of order 0..=3 of `A(x) = x^2 (1-x)^2 exp(-x / eps)`.
    fn a(&self, x: f64) -> [f64; 4] {
        let p = quartic_bump(x);
        let e = (-x / self.epsilon).exp();
        let k = -1.0 / self.epsilon;
        let ek = [e, k * e, k * k * e, k * k * k * e];
        const BINOM: [[f64; 4]; 4] = [[1., 0., 0., 0.], [1., 1., 0., 0.], [1., 2., 1., 0.], [1., 3., 3., 1.]];
        let mut out = [0.0; 4];
        for (n, o) in out.iter_mut().enumerate() {
            for j in 0..=n {
                *o += BINOM[n][j] * p[n - j] * ek[j];
            }
        }
        out
    }
}

impl ExactSolution for BoundaryLayer2d {
    fn dim(&self) -> usize {
        2
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn velocity(&self, x: &Point) -> Point {
        let (a, b) = (self.a(x.x), quartic_bump(x.y));
        Point::new(a[0] * b[1], -a[1] * b[0], 0.0)
    }

    fn velocity_gradient(&self, x: &Point) -> Matrix3<f64> {
        let (a, b) = (self.a(x.x), quartic_bump(x.y));
        Matrix3::new(
            a[1] * b[1],
            a[0] * b[2],
            0.0,
            -a[2] * b[0],
            -a[1] * b[1],
            0.0,
            0.0,
            0.0,
            0.0,
        )
    }

    fn velocity_laplacian(&self, x: &Point) -> Point {
        let (a, b) = (self.a(x.x), quartic_bump(x.y));
        Point::new(a[2] * b[1] + a[0] * b[3], -a[3] * b[0] - a[1] * b[2], 0.0)
    }

    fn pressure(&self, x: &Point) -> f64 {
        (-x.x / self.epsilon).exp() - self.pressure_constant()
    }

    fn pressure_gradient(&self, x: &Point) -> Point {
        Point::new(-(-x.x / self.epsilon).exp() / self.epsilon, 0.0, 0.0)
    }
}

/// Sum of terms `c sin(a phi + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    terms: Vec<(f64, f64, f64)>,
}

impl TrigSeries {
    pub fn new(terms: Vec<(f64, f64, f64)>) -> Self {
        Self { terms }
    }

    /// `n`-th derivative at `phi`.
    pub fn derivative(&self, n: u32, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, a, b)| c * a.powi(n as i32) * (a * phi + b + n as f64 * PI / 2.0).sin())
            .sum()
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.derivative(0, phi)
    }
}

/// Smallest positive root of `sin(omega lambda) = lambda`.
pub fn solve_lambda(omega: f64) -> Result<f64, AnalysisError> {
    let f = |l: f64| (omega * l).sin() - l;
    let df = |l: f64| omega * (omega * l).cos() - 1.0;
    if !(omega.is_finite() && omega > 1.0) {
        return Err(AnalysisError::NoRoot(omega));
    }
    // sin(omega l) - l > 0 just right of zero; scan for the first sign change.
    let steps = 20_000;
    let mut lo = 1e-8;
    let mut bracket = None;
    for k in 1..=steps {
        let hi = k as f64 / steps as f64;
        if hi <= lo {
            continue;
        }
        if f(lo) > 0.0 && f(hi) <= 0.0 {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
    }
    let (mut a, mut b) = bracket.ok_or(AnalysisError::NoRoot(omega))?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let mut l = 0.5 * (a + b);
    for _ in 0..3 {
        let step = f(l) / df(l);
        if !step.is_finite() {
            break;
        }
        l -= step;
    }
    Ok(l)
}

/// Corner flow around a reentrant edge of opening `omega` along the z-axis,
/// on `{0 < r < 1, 0 < phi < omega, 0 < z < 1}`.
///
/// `u_{1,2} = z r^lambda U_{1,2}(phi)`, `u_3 = r^(2/3) sin(2 phi / 3)`,
/// `p = 2 lambda z r^(lambda-1) P(phi)`; the angular factors are stored as
/// sums of sines.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularEdge3d {
    pub nu: f64,
    pub omega: f64,
    pub lambda: f64,
    u1: TrigSeries,
    u2: TrigSeries,
    pr: TrigSeries,
}

impl SingularEdge3d {
    pub fn new(nu: f64, omega: f64) -> Result<Self, AnalysisError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(AnalysisError::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        if !(omega > PI && omega < 2.0 * PI) {
            return Err(AnalysisError::InvalidParameter(format!("omega must lie in (pi, 2 pi), got {omega}")));
        }
        let l = solve_lambda(omega)?;
        let h = 0.5 * l;
        let cos = PI / 2.0;
        let u1 = TrigSeries::new(vec![
            (-h, 2.0 - l, l * omega),
            (-h, l, -l * omega),
            (h, l - 2.0, omega),
            (h, -l, omega),
            (1.0, -l, l * omega),
        ]);
        let u2 = TrigSeries::new(vec![
            (1.0, l, 0.0),
            (-h, l, -l * omega + cos),
            (h, 2.0 - l, l * omega + cos),
            (-h, -l, omega + cos),
            (h, l - 2.0, omega + cos),
        ]);
        let pr = TrigSeries::new(vec![(1.0, l - 1.0, omega), (1.0, l - 1.0, -l * omega)]);
        Ok(Self {
            nu,
            omega,
            lambda: l,
            u1,
            u2,
            pr,
        })
    }

    /// Polar coordinates with the angle in `[omega/2 - pi, omega/2 + pi)`,
    /// which keeps the branch cut outside the domain.
    pub fn polar(&self, x: &Point) -> (f64, f64) {
        let r = x.x.hypot(x.y);
        let mut phi = x.y.atan2(x.x);
        let lo = 0.5 * self.omega - PI;
        if phi < lo {
            phi += 2.0 * PI;
        } else if phi >= lo + 2.0 * PI {
            phi -= 2.0 * PI;
        }
        (r, phi)
    }

    /// Gradient in (x, y) of `r^a G(phi)`: `(value, d_x, d_y, laplacian)`.
    fn radial(a: f64, g: &TrigSeries, r: f64, phi: f64) -> [f64; 4] {
        let (s, c) = phi.sin_cos();
        let (g0, g1, g2) = (g.value(phi), g.derivative(1, phi), g.derivative(2, phi));
        let ra1 = r.powf(a - 1.0);
        [
            r.powf(a) * g0,
            ra1 * (a * c * g0 - s * g1),
            ra1 * (a * s * g0 + c * g1),
            r.powf(a - 2.0) * (a * a * g0 + g2),
        ]
    }

    fn third(&self) -> TrigSeries {
        TrigSeries::new(vec![(1.0, 2.0 / 3.0, 0.0)])
    }

    /// Angular factor of the pressure.
    pub fn pressure_angular(&self, phi: f64) -> f64 {
        self.pr.value(phi)
    }
}

impl ExactSolution for SingularEdge3d {
    fn dim(&self) -> usize {
        3
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn velocity(&self, x: &Point) -> Point {
        let (r, phi) = self.polar(x);
        let rl = r.powf(self.lambda);
        Point::new(
            x.z * rl * self.u1.value(phi),
            x.z * rl * self.u2.value(phi),
            r.powf(2.0 / 3.0) * (2.0 * phi / 3.0).sin(),
        )
    }

    fn velocity_gradient(&self, x: &Point) -> Matrix3<f64> {
        let (r, phi) = self.polar(x);
        let a = Self::radial(self.lambda, &self.u1, r, phi);
        let b = Self::radial(self.lambda, &self.u2, r, phi);
        let c = Self::radial(2.0 / 3.0, &self.third(), r, phi);
        Matrix3::new(
            x.z * a[1],
            x.z * a[2],
            a[0],
            x.z * b[1],
            x.z * b[2],
            b[0],
            c[1],
            c[2],
            0.0,
        )
    }

    fn velocity_laplacian(&self, x: &Point) -> Point {
        let (r, phi) = self.polar(x);
        let a = Self::radial(self.lambda, &self.u1, r, phi);
        let b = Self::radial(self.lambda, &self.u2, r, phi);
        let c = Self::radial(2.0 / 3.0, &self.third(), r, phi);
        Point::new(x.z * a[3], x.z * b[3], c[3])
    }

    fn pressure(&self, x: &Point) -> f64 {
        let (r, phi) = self.polar(x);
        2.0 * self.lambda * x.z * r.powf(self.lambda - 1.0) * self.pr.value(phi)
    }

    fn pressure_gradient(&self, x: &Point) -> Point {
        let (r, phi) = self.polar(x);
        let q = Self::radial(self.lambda - 1.0, &self.pr, r, phi);
        let s = 2.0 * self.lambda;
        Point::new(s * x.z * q[1], s * x.z * q[2], s * q[0])
    }
}

/// Affine flow `u = M x + c` with `tr M = 0`, zero pressure and forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFlow {
    pub dim: usize,
    pub nu: f64,
    pub matrix: Matrix3<f64>,
    pub offset: Point,
}

impl LinearFlow {
    /// Projects the matrix onto trace zero and clears out-of-plane parts in 2D.
    pub fn new(dim: usize, nu: f64, mut matrix: Matrix3<f64>, mut offset: Point) -> Self {
        if dim == 2 {
            for k in 0..3 {
                matrix[(2, k)] = 0.0;
                matrix[(k, 2)] = 0.0;
            }
            offset.z = 0.0;
        }
        let shift = matrix.trace() / dim as f64;
        for k in 0..dim {
            matrix[(k, k)] -= shift;
        }
        Self {
            dim,
            nu,
            matrix,
            offset,
        }
    }
}

impl ExactSolution for LinearFlow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn velocity(&self, x: &Point) -> Point {
        self.matrix * x + self.offset
    }

    fn velocity_gradient(&self, _x: &Point) -> Matrix3<f64> {
        self.matrix
    }

    fn velocity_laplacian(&self, _x: &Point) -> Point {
        Point::zeros()
    }

    fn pressure(&self, _x: &Point) -> f64 {
        0.0
    }

    fn pressure_gradient(&self, _x: &Point) -> Point {
        Point::zeros()
    }
}

/// Fluid at rest under a gradient force: `u = 0`, `p = psi`,
/// `psi = sin(pi x) cos(pi y)` in 2D and `sin(pi x) cos(pi y) cos(pi z)` in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoFlow {
    pub dim: usize,
    pub nu: f64,
}

impl ExactSolution for NoFlow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn velocity(&self, _x: &Point) -> Point {
        Point::zeros()
    }

    fn velocity_gradient(&self, _x: &Point) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn velocity_laplacian(&self, _x: &Point) -> Point {
        Point::zeros()
    }

    fn pressure(&self, x: &Point) -> f64 {
        let base = (PI * x.x).sin() * (PI * x.y).cos();
        if self.dim == 3 {
            base * (PI * x.z).cos()
        } else {
            base
        }
    }

    fn pressure_gradient(&self, x: &Point) -> Point {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (sz, cz) = if self.dim == 3 { (PI * x.z).sin_cos() } else { (0.0, 1.0) };
        let g = Point::new(PI * cx * cy * cz, -PI * sx * sy * cz, -PI * sx * cy * sz);
        if self.dim == 3 {
            g
        } else {
            Point::new(g.x, g.y, 0.0)
        }
    }
}

#![allow(dead_code)]

use aniso_stokes::mesh::{build_tensor_2d, build_tensor_3d, Point, Triangulation};
use nalgebra::Matrix3;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Coordinates `0 = x_0 < ... < x_n = 1` with cell widths spread over `[1, stretch]`.
pub fn random_grid(rng: &mut StdRng, n: usize, stretch: f64) -> Vec<f64> {
    let widths: Vec<f64> = (0..n).map(|_| stretch.powf(rng.random::<f64>())).collect();
    let total: f64 = widths.iter().sum();
    let mut xs = vec![0.0];
    let mut acc = 0.0;
    for w in &widths {
        acc += w / total;
        xs.push(acc);
    }
    xs[n] = 1.0;
    xs
}

/// Random tensor-product mesh of the unit square or cube. Interior vertices
/// of the square are jittered in both directions by up to 10% of the smallest
/// adjacent cell width, so every edge turns by less than about 12 degrees.
pub fn random_mac_mesh(seed: u64, dim: usize, stretch: f64) -> Triangulation {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = if dim == 2 { rng.random_range(2..=6) } else { rng.random_range(1..=3) };
    let xs = random_grid(&mut rng, n, stretch);
    let ys = random_grid(&mut rng, n + 1, stretch);
    let mesh = if dim == 2 {
        build_tensor_2d(&xs, &ys).unwrap()
    } else {
        let zs = random_grid(&mut rng, n, stretch);
        build_tensor_3d(&xs, &ys, &zs).unwrap()
    };
    if dim == 3 {
        return mesh;
    }
    let width = |g: &[f64], v: f64| {
        let k = g.iter().position(|&c| (c - v).abs() < 1e-14).unwrap();
        let left = if k > 0 { g[k] - g[k - 1] } else { 0.0 };
        let right = if k + 1 < g.len() { g[k + 1] - g[k] } else { 0.0 };
        left.min(right)
    };
    let vertices: Vec<Point> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let w = width(&xs, p.x).min(width(&ys, p.y));
            Point::new(
                p.x + 0.1 * w * rng.random_range(-1.0..1.0),
                p.y + 0.1 * w * rng.random_range(-1.0..1.0),
                0.0,
            )
        })
        .collect();
    let elements = (0..mesh.n_elements()).map(|e| mesh.element(e).to_vec()).collect();
    Triangulation::new(2, vertices, elements).unwrap()
}

fn exponents(dim: usize, degree: usize) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for a in 0..=degree {
        for b in 0..=degree - a {
            for c in 0..=degree - a - b {
                if dim == 2 && c > 0 {
                    continue;
                }
                out.push([a as i32, b as i32, c as i32]);
            }
        }
    }
    out
}

/// Random vector polynomial of total degree at most `degree`.
#[derive(Debug, Clone)]
pub struct PolyField {
    pub dim: usize,
    terms: Vec<([i32; 3], Point)>,
}

impl PolyField {
    pub fn random(rng: &mut StdRng, dim: usize, degree: usize) -> Self {
        let terms = exponents(dim, degree)
            .into_iter()
            .map(|e| {
                let mut c = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if dim == 2 {
                    c.z = 0.0;
                }
                (e, c)
            })
            .collect();
        Self { dim, terms }
    }

    fn monomial(e: &[i32; 3], x: &Point) -> f64 {
        x.x.powi(e[0]) * x.y.powi(e[1]) * x.z.powi(e[2])
    }

    fn monomial_derivative(e: &[i32; 3], x: &Point, r: usize) -> f64 {
        if e[r] == 0 {
            return 0.0;
        }
        let mut d = *e;
        d[r] -= 1;
        e[r] as f64 * Self::monomial(&d, x)
    }

    pub fn value(&self, x: &Point) -> Point {
        self.terms.iter().map(|(e, c)| c * Self::monomial(e, x)).sum()
    }

    pub fn gradient(&self, x: &Point) -> Matrix3<f64> {
        let mut g = Matrix3::zeros();
        for (e, c) in &self.terms {
            for r in 0..self.dim {
                let d = Self::monomial_derivative(e, x, r);
                for k in 0..3 {
                    g[(k, r)] += c[k] * d;
                }
            }
        }
        g
    }

    pub fn divergence(&self, x: &Point) -> f64 {
        self.gradient(x).trace()
    }
}

/// Smooth non-polynomial field.
pub fn trig_field(dim: usize, k: [f64; 3]) -> (impl Fn(&Point) -> Point + Sync, impl Fn(&Point) -> Matrix3<f64> + Sync) {
    let value = move |x: &Point| {
        let v = Point::new((k[0] * x.y).sin() + x.x * x.x, (k[1] * x.x).cos() * x.y, (k[2] * (x.x + x.z)).sin());
        if dim == 2 {
            Point::new(v.x, v.y, 0.0)
        } else {
            v
        }
    };
    let grad = move |x: &Point| {
        let mut g = Matrix3::zeros();
        g[(0, 0)] = 2.0 * x.x;
        g[(0, 1)] = k[0] * (k[0] * x.y).cos();
        g[(1, 0)] = -k[1] * (k[1] * x.x).sin() * x.y;
        g[(1, 1)] = (k[1] * x.x).cos();
        if dim == 3 {
            let c = k[2] * (k[2] * (x.x + x.z)).cos();
            g[(2, 0)] = c;
            g[(2, 2)] = c;
        }
        g
    };
    (value, grad)
}

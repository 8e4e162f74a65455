//! Local shape functions.
//!
//! All facet-based H(div) shapes are expressed against the global facet
//! normals, so neighbouring elements agree on the sign of shared dofs.

use nalgebra::DMatrix;

use super::FemError;
use crate::mesh::{Point, Triangulation};
use crate::quadrature::QuadratureRule;

fn check_inside(mesh: &Triangulation, e: usize, x: &Point) -> Result<[f64; 4], FemError> {
    let bary = mesh.barycentric(e, x);
    if bary[..=mesh.dim()].iter().any(|&l| l < -1e-10) {
        return Err(FemError::PointOutsideElement { element: e, point: *x });
    }
    Ok(bary)
}

/// Scalar Crouzeix-Raviart shapes `phi_i = 1 - d lambda_i` and their gradients.
///
/// Shape `i` equals one at the barycenter of local facet `i` and vanishes at
/// the other facet barycenters.
pub fn cr_basis(mesh: &Triangulation, e: usize, x: &Point) -> Result<Vec<(f64, Point)>, FemError> {
    let bary = check_inside(mesh, e, x)?;
    Ok(cr_shapes(mesh, e, &bary))
}

pub(crate) fn cr_shapes(mesh: &Triangulation, e: usize, bary: &[f64; 4]) -> Vec<(f64, Point)> {
    let d = mesh.dim() as f64;
    let grads = &mesh.geometry(e).barycentric_gradients;
    (0..=mesh.dim())
        .map(|i| (1.0 - d * bary[i], -d * grads[i]))
        .collect()
}

/// Lowest-order Raviart-Thomas shapes `psi_i = s_i |F_i| / (d |T|) (x - p_i)`.
///
/// The normal component of `psi_i` on facet `i` is the constant `s_i`, which
/// makes the facet-mean flux against the global normal equal to one.
pub fn rt0_basis(mesh: &Triangulation, e: usize, x: &Point) -> Result<Vec<Point>, FemError> {
    check_inside(mesh, e, x)?;
    Ok(rt0_shapes(mesh, e, x))
}

pub(crate) fn rt0_shapes(mesh: &Triangulation, e: usize, x: &Point) -> Vec<Point> {
    let g = mesh.geometry(e);
    let d = mesh.dim() as f64;
    mesh.element(e)
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let scale = mesh.facet_sign(e, i) * g.facet_areas[i] / (d * g.volume);
            scale * (x - mesh.vertices()[v])
        })
        .collect()
}

/// Divergences of the Raviart-Thomas shapes, `s_i |F_i| / |T|`.
pub fn rt0_divergences(mesh: &Triangulation, e: usize) -> Vec<f64> {
    let g = mesh.geometry(e);
    (0..=mesh.dim())
        .map(|i| mesh.facet_sign(e, i) * g.facet_areas[i] / g.volume)
        .collect()
}

/// Number of BDM1 moments per facet.
pub fn bdm_moments_per_facet(dim: usize) -> usize {
    dim
}

/// Orthonormal P1 test functions on a facet, evaluated at facet barycentric
/// coordinates `mu` taken with respect to the facet's ascending global
/// vertex order. Normalized so that the facet mean of `q_m q_n` is `delta_mn`;
/// `q_0 = 1`.
pub fn facet_moment_functions(dim: usize, mu: &[f64]) -> [f64; 3] {
    match dim {
        2 => [1.0, 3f64.sqrt() * (mu[1] - mu[0]), 0.0],
        _ => [
            1.0,
            6f64.sqrt() * (mu[1] - mu[0]),
            8f64.sqrt() * (mu[2] - 0.5 * (mu[0] + mu[1])),
        ],
    }
}

/// Facet quadrature in the facet's canonical coordinates: yields
/// `(point, weight normalized to sum 1, facet barycentrics)`.
pub(crate) fn facet_points<'a>(
    mesh: &'a Triangulation,
    f: usize,
    rule: &'a QuadratureRule,
) -> impl Iterator<Item = (Point, f64, [f64; 4])> + 'a {
    let verts = mesh.facet_points(f);
    let scale = 1.0 / rule.reference_measure();
    rule.points().iter().zip(rule.weights()).map(move |(mu, &w)| {
        let mut x = Point::zeros();
        for (l, v) in mu.iter().zip(&verts) {
            x += *l * v;
        }
        (x, w * scale, *mu)
    })
}

/// BDM1 shapes on one element, dual to the global facet moments
/// `(1/|F|) int_F v . n_F q_m`.
///
/// Shape `k` is `sum_{j,c} coeffs[(j d + c, k)] lambda_j e_c`; shapes are
/// ordered by local facet, then moment.
#[derive(Debug, Clone)]
pub struct Bdm1Element {
    dim: usize,
    coeffs: DMatrix<f64>,
}

impl Bdm1Element {
    pub fn new(mesh: &Triangulation, e: usize, facet_rule: &QuadratureRule) -> Result<Self, FemError> {
        let dim = mesh.dim();
        let n = dim * (dim + 1);
        let mut duality = DMatrix::zeros(n, n);
        for (i, &f) in mesh.element_facets(e).iter().enumerate() {
            let normal = mesh.facet_geometry(f).normal;
            for (x, w, mu) in facet_points(mesh, f, facet_rule) {
                let bary = mesh.barycentric(e, &x);
                let q = facet_moment_functions(dim, &mu);
                for m in 0..dim {
                    for j in 0..=dim {
                        for c in 0..dim {
                            duality[(i * dim + m, j * dim + c)] += w * q[m] * bary[j] * normal[c];
                        }
                    }
                }
            }
        }
        let coeffs = duality
            .try_inverse()
            .ok_or(FemError::SingularDuality { element: e })?;
        Ok(Self { dim, coeffs })
    }

    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shape values at a point with element barycentrics `bary`.
    pub fn values(&self, bary: &[f64; 4]) -> Vec<Point> {
        let d = self.dim;
        (0..self.len())
            .map(|k| {
                let mut v = Point::zeros();
                for j in 0..=d {
                    for c in 0..d {
                        v[c] += self.coeffs[(j * d + c, k)] * bary[j];
                    }
                }
                v
            })
            .collect()
    }

    /// Shape divergences (constant on the element).
    pub fn divergences(&self, mesh: &Triangulation, e: usize) -> Vec<f64> {
        let d = self.dim;
        let grads = &mesh.geometry(e).barycentric_gradients;
        (0..self.len())
            .map(|k| {
                let mut div = 0.0;
                for j in 0..=d {
                    for c in 0..d {
                        div += self.coeffs[(j * d + c, k)] * grads[j][c];
                    }
                }
                div
            })
            .collect()
    }

    /// Shape gradients (constant), rows indexed by component.
    pub fn gradients(&self, mesh: &Triangulation, e: usize) -> Vec<nalgebra::Matrix3<f64>> {
        let d = self.dim;
        let grads = &mesh.geometry(e).barycentric_gradients;
        (0..self.len())
            .map(|k| {
                let mut g = nalgebra::Matrix3::zeros();
                for j in 0..=d {
                    for c in 0..d {
                        let coef = self.coeffs[(j * d + c, k)];
                        for r in 0..d {
                            g[(c, r)] += coef * grads[j][r];
                        }
                    }
                }
                g
            })
            .collect()
    }
}

/// BDM1 shapes of element `e` at `x`.
pub fn bdm1_basis(
    mesh: &Triangulation,
    e: usize,
    x: &Point,
    facet_rule: &QuadratureRule,
) -> Result<Vec<Point>, FemError> {
    let bary = check_inside(mesh, e, x)?;
    Ok(Bdm1Element::new(mesh, e, facet_rule)?.values(&bary))
}

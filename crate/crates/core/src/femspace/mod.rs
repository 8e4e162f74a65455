//! Discrete spaces, fields and interpolation operators.
//!
//! Vector-valued Lagrange-type spaces (CR, P1, P0 with several components)
//! number dofs as `entity * components + component`. Facet-based H(div)
//! spaces (RT0, BDM1) number dofs per facet and use the global facet normal
//! `n_F`, i.e. the outward normal of the facet's owner element.

mod basis;
mod interpolation;

use nalgebra::Matrix3;
use rayon::prelude::*;
use thiserror::Error;

pub use basis::{
    bdm1_basis, bdm_moments_per_facet, cr_basis, facet_moment_functions, rt0_basis, rt0_divergences,
    Bdm1Element,
};
pub(crate) use basis::{cr_shapes, facet_points, rt0_shapes};
pub use interpolation::{
    interpolate_bdm, interpolate_cr, interpolate_lagrange_p1, interpolate_rt, jump_average, project_p0,
    project_p0_vector, JumpAverage, DEFAULT_FACET_DEGREE,
};

use crate::mesh::{Point, Triangulation};
use crate::quadrature::{facet_rule, simplex_rule, QuadratureError};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("point {point:?} lies outside element {element}")]
    PointOutsideElement { element: usize, point: Point },
    #[error("BDM1 duality matrix of element {element} is singular")]
    SingularDuality { element: usize },
    #[error("coefficient vector has length {found}, space has {expected} dofs")]
    LengthMismatch { expected: usize, found: usize },
    #[error("operation needs a {expected} space, got {found:?}")]
    WrongSpace { expected: &'static str, found: SpaceKind },
    #[error("field is not finite on element {element}")]
    NonFinite { element: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Type of finite element space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Vector Crouzeix-Raviart velocity: `d` dofs per facet (facet means).
    CrVelocity,
    /// Piecewise constants with the given number of components.
    P0 { components: usize },
    /// Lowest-order Raviart-Thomas: mean normal flux per facet.
    Rt0,
    /// Brezzi-Douglas-Marini of degree one: `d` normal moments per facet.
    Bdm1,
    /// Vector continuous P1 Lagrange: `d` dofs per vertex.
    P1Lagrange,
}

/// A finite element space on a mesh.
#[derive(Debug, Clone)]
pub struct Space<'m> {
    mesh: &'m Triangulation,
    kind: SpaceKind,
    n_dofs: usize,
    dofs: Vec<Vec<usize>>,
    signs: Vec<Vec<f64>>,
    bdm: Vec<Bdm1Element>,
}

impl<'m> Space<'m> {
    pub fn new(mesh: &'m Triangulation, kind: SpaceKind) -> Result<Self, FemError> {
        let d = mesh.dim();
        let ne = mesh.n_elements();
        let mut bdm = Vec::new();
        let (n_dofs, dofs, signs): (usize, Vec<Vec<usize>>, Vec<Vec<f64>>) = match kind {
            SpaceKind::CrVelocity => (
                mesh.n_facets() * d,
                (0..ne)
                    .map(|e| {
                        mesh.element_facets(e)
                            .iter()
                            .flat_map(|&f| (0..d).map(move |c| f * d + c))
                            .collect()
                    })
                    .collect(),
                vec![vec![1.0; (d + 1) * d]; ne],
            ),
            SpaceKind::P0 { components } => (
                ne * components,
                (0..ne)
                    .map(|e| (0..components).map(|c| e * components + c).collect())
                    .collect(),
                vec![vec![1.0; components]; ne],
            ),
            SpaceKind::Rt0 => (
                mesh.n_facets(),
                (0..ne).map(|e| mesh.element_facets(e).to_vec()).collect(),
                (0..ne)
                    .map(|e| (0..=d).map(|i| mesh.facet_sign(e, i)).collect())
                    .collect(),
            ),
            SpaceKind::Bdm1 => {
                let rule = facet_rule(d, 2)?;
                bdm = (0..ne)
                    .into_par_iter()
                    .map(|e| Bdm1Element::new(mesh, e, &rule))
                    .collect::<Result<_, _>>()?;
                (
                    mesh.n_facets() * d,
                    (0..ne)
                        .map(|e| {
                            mesh.element_facets(e)
                                .iter()
                                .flat_map(|&f| (0..d).map(move |m| f * d + m))
                                .collect()
                        })
                        .collect(),
                    (0..ne)
                        .map(|e| {
                            (0..=d)
                                .flat_map(|i| std::iter::repeat(mesh.facet_sign(e, i)).take(d))
                                .collect()
                        })
                        .collect(),
                )
            }
            SpaceKind::P1Lagrange => (
                mesh.n_vertices() * d,
                (0..ne)
                    .map(|e| {
                        mesh.element(e)
                            .iter()
                            .flat_map(|&v| (0..d).map(move |c| v * d + c))
                            .collect()
                    })
                    .collect(),
                vec![vec![1.0; (d + 1) * d]; ne],
            ),
        };
        Ok(Self {
            mesh,
            kind,
            n_dofs,
            dofs,
            signs,
            bdm,
        })
    }

    pub fn mesh(&self) -> &'m Triangulation {
        self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Global dofs of element `e` in local shape order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.dofs[e]
    }

    /// Orientation of each local dof relative to the global facet normal.
    /// The local RT0 and BDM1 shapes returned by this module already carry
    /// the orientation, so these signs are informational.
    pub fn element_signs(&self, e: usize) -> &[f64] {
        &self.signs[e]
    }

    pub fn bdm_element(&self, e: usize) -> Option<&Bdm1Element> {
        self.bdm.get(e)
    }

    /// Number of vector components of fields in this space.
    pub fn components(&self) -> usize {
        match self.kind {
            SpaceKind::P0 { components } => components,
            _ => self.mesh.dim(),
        }
    }
}

/// A coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct FieldFunction<'s, 'm> {
    space: &'s Space<'m>,
    coeffs: Vec<f64>,
}

impl<'s, 'm> FieldFunction<'s, 'm> {
    pub fn new(space: &'s Space<'m>, coeffs: Vec<f64>) -> Result<Self, FemError> {
        if coeffs.len() != space.n_dofs() {
            return Err(FemError::LengthMismatch {
                expected: space.n_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: &'s Space<'m>) -> Self {
        Self {
            space,
            coeffs: vec![0.0; space.n_dofs()],
        }
    }

    pub fn space(&self) -> &'s Space<'m> {
        self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coeffs
    }

    /// Value of the restriction to element `e` at `x`. Points slightly
    /// outside the element evaluate the element's polynomial extension.
    /// Scalar P0 fields return their value in the first component.
    pub fn value(&self, e: usize, x: &Point) -> Point {
        let mesh = self.space.mesh;
        let d = mesh.dim();
        let dofs = &self.space.dofs[e];
        let mut v = Point::zeros();
        match self.space.kind {
            SpaceKind::CrVelocity => {
                let bary = mesh.barycentric(e, x);
                for (i, (phi, _)) in cr_shapes(mesh, e, &bary).iter().enumerate() {
                    for c in 0..d {
                        v[c] += phi * self.coeffs[dofs[i * d + c]];
                    }
                }
            }
            SpaceKind::P0 { components } => {
                for c in 0..components.min(3) {
                    v[c] = self.coeffs[dofs[c]];
                }
            }
            SpaceKind::Rt0 => {
                for (psi, &dof) in rt0_shapes(mesh, e, x).iter().zip(dofs) {
                    v += self.coeffs[dof] * psi;
                }
            }
            SpaceKind::Bdm1 => {
                let bary = mesh.barycentric(e, x);
                for (psi, &dof) in self.space.bdm[e].values(&bary).iter().zip(dofs) {
                    v += self.coeffs[dof] * psi;
                }
            }
            SpaceKind::P1Lagrange => {
                let bary = mesh.barycentric(e, x);
                for j in 0..=d {
                    for c in 0..d {
                        v[c] += bary[j] * self.coeffs[dofs[j * d + c]];
                    }
                }
            }
        }
        v
    }

    /// Gradient on element `e`; entry `(c, r)` is `d v_c / d x_r`.
    pub fn gradient(&self, e: usize, x: &Point) -> Matrix3<f64> {
        let mesh = self.space.mesh;
        let d = mesh.dim();
        let dofs = &self.space.dofs[e];
        let grads = &mesh.geometry(e).barycentric_gradients;
        let mut g = Matrix3::zeros();
        let mut add_vertex_like = |scale: f64, coeff_of: &dyn Fn(usize, usize) -> f64| {
            for (j, grad) in grads.iter().enumerate().take(d + 1) {
                for c in 0..d {
                    let a = scale * coeff_of(j, c);
                    for r in 0..d {
                        g[(c, r)] += a * grad[r];
                    }
                }
            }
        };
        match self.space.kind {
            SpaceKind::CrVelocity => {
                add_vertex_like(-(d as f64), &|j, c| self.coeffs[dofs[j * d + c]]);
            }
            SpaceKind::P1Lagrange => {
                add_vertex_like(1.0, &|j, c| self.coeffs[dofs[j * d + c]]);
            }
            SpaceKind::P0 { .. } => {}
            SpaceKind::Rt0 => {
                let _ = x;
                let geo = mesh.geometry(e);
                let mut s = 0.0;
                for (i, &dof) in dofs.iter().enumerate() {
                    s += self.coeffs[dof] * mesh.facet_sign(e, i) * geo.facet_areas[i] / (d as f64 * geo.volume);
                }
                for c in 0..d {
                    g[(c, c)] = s;
                }
            }
            SpaceKind::Bdm1 => {
                for (gk, &dof) in self.space.bdm[e].gradients(mesh, e).iter().zip(dofs) {
                    g += self.coeffs[dof] * gk;
                }
            }
        }
        g
    }

    /// Divergence on element `e` (constant for every space here).
    pub fn divergence(&self, e: usize) -> f64 {
        let x = self.space.mesh.geometry(e).barycenter;
        self.gradient(e, &x).trace()
    }

    /// The field as an elementwise callback.
    pub fn as_fn(&self) -> impl Fn(usize, &Point) -> Point + Sync + '_ {
        move |e, x| self.value(e, x)
    }

    /// The elementwise gradient as a callback.
    pub fn gradient_fn(&self) -> impl Fn(usize, &Point) -> Matrix3<f64> + Sync + '_ {
        move |e, x| self.gradient(e, x)
    }
}

/// Sum of per-element contributions, evaluated in parallel and reduced in
/// element order so results are reproducible.
pub(crate) fn sum_over_elements<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    parts.iter().sum()
}

/// `(sum_T int_T |G|^2)^(1/2)` for an elementwise matrix-valued callback,
/// e.g. the broken gradient of a field or of an error.
pub fn broken_norm_h1<G>(mesh: &Triangulation, grad: G, degree: usize) -> Result<f64, FemError>
where
    G: Fn(usize, &Point) -> Matrix3<f64> + Sync + Send,
{
    let rule = simplex_rule(mesh.dim(), degree)?;
    Ok(sum_over_elements(mesh.n_elements(), |e| {
        let pts = mesh.element_points(e);
        rule.on_simplex(&pts, mesh.geometry(e).volume)
            .map(|(x, w)| w * grad(e, &x).norm_squared())
            .sum()
    })
    .sqrt())
}

/// `(sum_T int_T |v|^2)^(1/2)` for an elementwise vector callback.
pub fn l2_norm<V>(mesh: &Triangulation, v: V, degree: usize) -> Result<f64, FemError>
where
    V: Fn(usize, &Point) -> Point + Sync + Send,
{
    let rule = simplex_rule(mesh.dim(), degree)?;
    Ok(sum_over_elements(mesh.n_elements(), |e| {
        let pts = mesh.element_points(e);
        rule.on_simplex(&pts, mesh.geometry(e).volume)
            .map(|(x, w)| w * v(e, &x).norm_squared())
            .sum()
    })
    .sqrt())
}

//! Assembly of the discrete Stokes saddle-point system.
//!
//! Velocity dofs are the CR dofs `facet * d + component`, pressure dofs are
//! element indices. The pressure mean constraint is kept out of `B` and is
//! stored as the vector of element volumes.

use rayon::prelude::*;
use thiserror::Error;

use crate::femspace::{cr_shapes, facet_moment_functions, facet_points, rt0_shapes, Bdm1Element, FemError};
use crate::mesh::{Point, Triangulation};
use crate::quadrature::{facet_rule, simplex_rule, QuadratureError};
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("viscosity must be positive and finite, got {0}")]
    InvalidViscosity(f64),
    #[error("forcing is not finite at {point:?} in element {element}")]
    NonFiniteForcing { element: usize, point: Point },
    #[error("Dirichlet data is not finite at {point:?} on facet {facet}")]
    NonFiniteDirichlet { facet: usize, point: Point },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which H(div) reconstruction is applied to test functions in the load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reconstruction {
    /// Classical CR load `int f . v_h`.
    None,
    /// `int f . I_RT v_h`.
    Rt,
    /// `int f . I_BDM v_h`.
    Bdm,
}

/// Quadrature degrees used during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureDegrees {
    /// Element integrals of the bilinear forms.
    pub volume: usize,
    /// Facet means of Dirichlet data.
    pub facet: usize,
    /// Element integrals of the load.
    pub rhs: usize,
}

impl QuadratureDegrees {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            volume: 5,
            facet: 4,
            rhs: if dim == 3 { 10 } else { 5 },
        }
    }
}

pub type VectorField<'a> = &'a (dyn Fn(&Point) -> Point + Sync);

/// Data of `-nu Laplace u + grad p = f`, `div u = 0`, `u = g` on the boundary.
#[derive(Clone, Copy)]
pub struct StokesProblem<'a> {
    pub mesh: &'a Triangulation,
    pub nu: f64,
    pub forcing: VectorField<'a>,
    pub dirichlet: VectorField<'a>,
    pub reconstruction: Reconstruction,
    pub degrees: QuadratureDegrees,
}

impl<'a> StokesProblem<'a> {
    pub fn new(
        mesh: &'a Triangulation,
        nu: f64,
        forcing: VectorField<'a>,
        dirichlet: VectorField<'a>,
        reconstruction: Reconstruction,
    ) -> Result<Self, AssemblyError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(AssemblyError::InvalidViscosity(nu));
        }
        Ok(Self {
            mesh,
            nu,
            forcing,
            dirichlet,
            reconstruction,
            degrees: QuadratureDegrees::for_dim(mesh.dim()),
        })
    }

    pub fn with_degrees(mut self, degrees: QuadratureDegrees) -> Self {
        self.degrees = degrees;
        self
    }
}

/// Assembled saddle-point system after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    /// Pressure mean constraint: element volumes.
    pub mean: Vec<f64>,
    /// Eliminated velocity dofs and their values, sorted by dof.
    pub dirichlet: Vec<(usize, f64)>,
}

impl SparseSystem {
    pub fn n_velocity(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.b.nrows()
    }
}

fn collect_triplets<F>(n: usize, local: F) -> Vec<(usize, usize, f64)>
where
    F: Fn(usize) -> Vec<(usize, usize, f64)> + Sync + Send,
{
    let parts: Vec<Vec<_>> = (0..n).into_par_iter().map(local).collect();
    parts.concat()
}

/// Velocity block `nu int grad u : grad v`, assembled from the upper
/// triangle and mirrored so it is exactly symmetric.
pub fn assemble_a(mesh: &Triangulation, nu: f64) -> CsrMatrix {
    let d = mesh.dim();
    let n = mesh.n_facets() * d;
    let upper = collect_triplets(mesh.n_elements(), |e| {
        let g = mesh.geometry(e);
        let facets = mesh.element_facets(e);
        let scale = nu * (d * d) as f64 * g.volume;
        let mut out = Vec::new();
        for i in 0..=d {
            for j in 0..=d {
                let v = scale * g.barycentric_gradients[i].dot(&g.barycentric_gradients[j]);
                for c in 0..d {
                    let (r, s) = (facets[i] * d + c, facets[j] * d + c);
                    if r <= s {
                        out.push((r, s, v));
                    }
                }
            }
        }
        out
    });
    let upper = CsrMatrix::from_triplets(n, n, &upper);
    let mut full: Vec<_> = upper.triplets().collect();
    full.extend(upper.triplets().filter(|(r, c, _)| r != c).map(|(r, c, v)| (c, r, v)));
    CsrMatrix::from_triplets(n, n, &full)
}

/// Divergence block `B[T, (F, c)] = -int_T d_c phi_F`.
pub fn assemble_b(mesh: &Triangulation) -> CsrMatrix {
    let d = mesh.dim();
    let triplets = collect_triplets(mesh.n_elements(), |e| {
        let g = mesh.geometry(e);
        let facets = mesh.element_facets(e);
        let mut out = Vec::with_capacity((d + 1) * d);
        for i in 0..=d {
            for c in 0..d {
                // -int_T d_c (1 - d lambda_i) = d |T| d_c lambda_i
                out.push((e, facets[i] * d + c, d as f64 * g.volume * g.barycentric_gradients[i][c]));
            }
        }
        out
    });
    CsrMatrix::from_triplets(mesh.n_elements(), mesh.n_facets() * d, &triplets)
}

/// Number of H(div) dofs of the reconstruction target.
pub fn reconstruction_dofs(mesh: &Triangulation, mode: Reconstruction) -> usize {
    match mode {
        Reconstruction::None => mesh.n_facets() * mesh.dim(),
        Reconstruction::Rt => mesh.n_facets(),
        Reconstruction::Bdm => mesh.n_facets() * mesh.dim(),
    }
}

/// Matrix mapping CR coefficients to the RT0 or BDM1 coefficients of their
/// reconstruction. For `Reconstruction::None` this is the identity.
pub fn reconstruction_matrix(mesh: &Triangulation, mode: Reconstruction) -> Result<CsrMatrix, AssemblyError> {
    let d = mesh.dim();
    let n_cr = mesh.n_facets() * d;
    let mut triplets = Vec::new();
    match mode {
        Reconstruction::None => {
            triplets.extend((0..n_cr).map(|k| (k, k, 1.0)));
        }
        Reconstruction::Rt => {
            for f in 0..mesh.n_facets() {
                let n = mesh.facet_geometry(f).normal;
                triplets.extend((0..d).map(|c| (f, f * d + c, n[c])));
            }
        }
        Reconstruction::Bdm => {
            // The CR shapes are P1 on each side, so degree 2 is exact.
            let rule = facet_rule(d, 2)?;
            let parts: Vec<Vec<_>> = (0..mesh.n_facets())
                .into_par_iter()
                .map(|f| {
                    let facet = mesh.facet(f);
                    let n = mesh.facet_geometry(f).normal;
                    let mut out: Vec<_> = (0..d).map(|c| (f * d, f * d + c, n[c])).collect();
                    let Some(neighbor) = facet.neighbor else {
                        return out;
                    };
                    for (e, _) in [facet.owner, neighbor] {
                        let facets = mesh.element_facets(e);
                        let mut moments = vec![[0.0; 3]; d + 1];
                        for (x, w, mu) in facet_points(mesh, f, &rule) {
                            let q = facet_moment_functions(d, &mu);
                            let bary = mesh.barycentric(e, &x);
                            for (i, (phi, _)) in cr_shapes(mesh, e, &bary).iter().enumerate() {
                                for m in 1..d {
                                    moments[i][m] += w * phi * q[m];
                                }
                            }
                        }
                        for i in 0..=d {
                            for m in 1..d {
                                for c in 0..d {
                                    out.push((f * d + m, facets[i] * d + c, 0.5 * moments[i][m] * n[c]));
                                }
                            }
                        }
                    }
                    out
                })
                .collect();
            triplets = parts.concat();
        }
    }
    Ok(CsrMatrix::from_triplets(reconstruction_dofs(mesh, mode), n_cr, &triplets))
}

fn forcing_at(f: VectorField, e: usize, x: &Point) -> Result<Point, AssemblyError> {
    let v = f(x);
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(AssemblyError::NonFiniteForcing { element: e, point: *x })
    }
}

/// `int f . Psi_k` for every basis function `Psi_k` of the reconstruction
/// target space (the CR space itself for `Reconstruction::None`).
pub fn hdiv_load(
    mesh: &Triangulation,
    mode: Reconstruction,
    forcing: VectorField,
    degree: usize,
) -> Result<Vec<f64>, AssemblyError> {
    let d = mesh.dim();
    let rule = simplex_rule(d, degree)?;
    let bdm_rule = facet_rule(d, 2)?;
    let locals: Vec<Result<Vec<(usize, f64)>, AssemblyError>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let pts = mesh.element_points(e);
            let facets = mesh.element_facets(e);
            let vol = mesh.geometry(e).volume;
            let bdm = match mode {
                Reconstruction::Bdm => Some(Bdm1Element::new(mesh, e, &bdm_rule)?),
                _ => None,
            };
            let mut local = vec![0.0; (d + 1) * d];
            for (x, w) in rule.on_simplex(&pts, vol) {
                let fx = forcing_at(forcing, e, &x)?;
                match mode {
                    Reconstruction::None => {
                        let bary = mesh.barycentric(e, &x);
                        for (i, (phi, _)) in cr_shapes(mesh, e, &bary).iter().enumerate() {
                            for c in 0..d {
                                local[i * d + c] += w * phi * fx[c];
                            }
                        }
                    }
                    Reconstruction::Rt => {
                        for (i, psi) in rt0_shapes(mesh, e, &x).iter().enumerate() {
                            local[i] += w * fx.dot(psi);
                        }
                    }
                    Reconstruction::Bdm => {
                        let bary = mesh.barycentric(e, &x);
                        for (k, psi) in bdm.as_ref().unwrap().values(&bary).iter().enumerate() {
                            local[k] += w * fx.dot(psi);
                        }
                    }
                }
            }
            let per_facet = if mode == Reconstruction::Rt { 1 } else { d };
            Ok((0..=d)
                .flat_map(|i| (0..per_facet).map(move |m| (i, m)))
                .zip(local)
                .map(|((i, m), v)| (facets[i] * per_facet + m, v))
                .collect())
        })
        .collect();
    let mut load = vec![0.0; reconstruction_dofs(mesh, mode)];
    for local in locals {
        for (k, v) in local? {
            load[k] += v;
        }
    }
    Ok(load)
}

/// Load vector `l_h(phi_k)` for every CR basis function.
pub fn assemble_load(problem: &StokesProblem) -> Result<Vec<f64>, AssemblyError> {
    let mesh = problem.mesh;
    let load = hdiv_load(mesh, problem.reconstruction, problem.forcing, problem.degrees.rhs)?;
    match problem.reconstruction {
        Reconstruction::None => Ok(load),
        mode => Ok(reconstruction_matrix(mesh, mode)?.transpose_matvec(&load)),
    }
}

/// Facet means of the Dirichlet data on all boundary facets, as
/// `(dof, value)` pairs sorted by dof.
pub fn dirichlet_values(
    mesh: &Triangulation,
    g: VectorField,
    facet_degree: usize,
) -> Result<Vec<(usize, f64)>, AssemblyError> {
    let d = mesh.dim();
    let rule = facet_rule(d, facet_degree)?;
    let mut out = Vec::new();
    for f in mesh.boundary_facets() {
        let mut mean = Point::zeros();
        for (x, w, _) in facet_points(mesh, f, &rule) {
            let v = g(&x);
            if !v.iter().all(|c| c.is_finite()) {
                return Err(AssemblyError::NonFiniteDirichlet { facet: f, point: x });
            }
            mean += w * v;
        }
        out.extend((0..d).map(|c| (f * d + c, mean[c])));
    }
    out.sort_by_key(|&(k, _)| k);
    Ok(out)
}

/// Symmetric elimination of the given velocity dofs: rows and columns of
/// `A` are replaced by the identity, the columns of `B` are dropped and the
/// known values are moved to the right-hand sides.
pub fn apply_dirichlet(system: &mut SparseSystem, values: &[(usize, f64)]) {
    let n = system.a.nrows();
    let mut fixed = vec![false; n];
    let mut g = vec![0.0; n];
    for &(k, v) in values {
        fixed[k] = true;
        g[k] = v;
    }
    let ag = system.a.matvec(&g);
    let bg = system.b.matvec(&g);
    for k in 0..n {
        system.rhs_u[k] -= ag[k];
    }
    for (r, v) in system.rhs_p.iter_mut().zip(bg) {
        *r -= v;
    }
    let mut triplets: Vec<_> = system.a.triplets().filter(|&(r, c, _)| !fixed[r] && !fixed[c]).collect();
    triplets.extend(values.iter().map(|&(k, _)| (k, k, 1.0)));
    system.a = CsrMatrix::from_triplets(n, n, &triplets);
    system.b = system.b.filter(|_, c| !fixed[c]);
    for &(k, v) in values {
        system.rhs_u[k] = v;
    }
    let mut all: Vec<(usize, f64)> = system.dirichlet.drain(..).chain(values.iter().copied()).collect();
    all.sort_by_key(|&(k, _)| k);
    all.dedup_by_key(|&mut (k, _)| k);
    system.dirichlet = all;
}

/// Assembles `A`, `B`, the load and the mean constraint, then eliminates the
/// boundary dofs with the facet means of the Dirichlet data.
pub fn assemble_system(problem: &StokesProblem) -> Result<SparseSystem, AssemblyError> {
    let mesh = problem.mesh;
    let mut system = SparseSystem {
        a: assemble_a(mesh, problem.nu),
        b: assemble_b(mesh),
        rhs_u: assemble_load(problem)?,
        rhs_p: vec![0.0; mesh.n_elements()],
        mean: (0..mesh.n_elements()).map(|e| mesh.geometry(e).volume).collect(),
        dirichlet: Vec::new(),
    };
    let values = dirichlet_values(mesh, problem.dirichlet, problem.degrees.facet)?;
    apply_dirichlet(&mut system, &values);
    Ok(system)
}

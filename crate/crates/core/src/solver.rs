//! Solution of the saddle-point system with a zero-mean pressure constraint.
//!
//! The system solved is
//!
//! ```text
//! [ A  B^T  0 ] [u]   [f]
//! [ B  0    m ] [p] = [g]
//! [ 0  m^T  0 ] [l]   [0]
//! ```
//!
//! either by a sparse LU factorization of the whole matrix or by a Cholesky
//! factorization of `A` and preconditioned CG on the pressure Schur
//! complement. Both are wrapped in iterative refinement on the full residual.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use thiserror::Error;

use crate::assembly::SparseSystem;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("system is singular (estimated nullspace dimension {})", .nullspace_dim.map_or("unknown".to_string(), |d| d.to_string()))]
    Singular { nullspace_dim: Option<usize> },
    #[error("solver did not reach the target residual; residual history {history:?}")]
    NotConverged { history: Vec<f64> },
    #[error("factorization failed: {0}")]
    Factorization(String),
}

/// Solution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Sparse LU of the augmented matrix.
    Direct,
    /// Cholesky of `A` plus CG on the pressure Schur complement.
    SchurCg,
    /// `Direct` below `AUTO_DIRECT_LIMIT` unknowns, `SchurCg` above.
    Auto,
}

const RESIDUAL_FLOOR: f64 = 1e-15;

/// Largest augmented system handed to the direct solver by `SolverKind::Auto`.
pub const AUTO_DIRECT_LIMIT: usize = 20_000;

/// Systems up to this size get a dense nullspace estimate on failure.
const DENSE_NULLSPACE_LIMIT: usize = 2_500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Target relative residual `|b - Kx| / |b|` of the augmented system.
    pub tolerance: f64,
    pub max_refinements: usize,
    /// Relative residual requested from each inner CG solve.
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tolerance: 1e-10,
            max_refinements: 8,
            cg_tolerance: 1e-12,
            cg_max_iterations: 5_000,
        }
    }
}

impl SolverOptions {
    pub fn with_kind(kind: SolverKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    /// Strategy actually used.
    pub method: SolverKind,
    pub unknowns: usize,
    pub refinements: usize,
    pub cg_iterations: usize,
    /// Relative residual after each refinement step.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    /// CR velocity coefficients, including the eliminated boundary dofs.
    pub u: Vec<f64>,
    /// Elementwise pressure values with zero mean.
    pub p: Vec<f64>,
    /// Lagrange multiplier of the mean constraint.
    pub multiplier: f64,
    pub relative_residual: f64,
    pub stats: SolverStats,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Augmented matrix-vector product.
fn apply(system: &SparseSystem, x: &[f64]) -> Vec<f64> {
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let (u, rest) = x.split_at(nu);
    let (p, l) = rest.split_at(np);
    let mut out = system.a.matvec(u);
    for (o, v) in out.iter_mut().zip(system.b.transpose_matvec(p)) {
        *o += v;
    }
    let bu = system.b.matvec(u);
    out.extend(bu.iter().zip(&system.mean).map(|(v, m)| v + m * l[0]));
    out.push(dot(&system.mean, p));
    out
}

fn augmented_rhs(system: &SparseSystem) -> Vec<f64> {
    let mut rhs = system.rhs_u.clone();
    rhs.extend_from_slice(&system.rhs_p);
    rhs.push(0.0);
    rhs
}

fn augmented_matrix(system: &SparseSystem) -> SparseColMat<usize, f64> {
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let n = nu + np + 1;
    let mut t = Vec::with_capacity(system.a.nnz() + 2 * system.b.nnz() + 2 * np);
    t.extend(system.a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)));
    for (r, c, v) in system.b.triplets() {
        t.push(Triplet::new(nu + r, c, v));
        t.push(Triplet::new(c, nu + r, v));
    }
    for (k, &m) in system.mean.iter().enumerate() {
        t.push(Triplet::new(nu + k, nu + np, m));
        t.push(Triplet::new(nu + np, nu + k, m));
    }
    SparseColMat::try_new_from_triplets(n, n, &t).expect("valid augmented triplets")
}

fn to_col(v: &[f64]) -> Col<f64> {
    Col::from_fn(v.len(), |i| v[i])
}

fn from_col(c: &Col<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

fn nullspace_dimension(system: &SparseSystem) -> Option<usize> {
    let n = system.n_velocity() + system.n_pressure() + 1;
    if n > DENSE_NULLSPACE_LIMIT {
        return None;
    }
    let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (r, c, v) in system.a.triplets() {
        dense[(r, c)] += v;
    }
    let nu = system.n_velocity();
    let np = system.n_pressure();
    for (r, c, v) in system.b.triplets() {
        dense[(nu + r, c)] += v;
        dense[(c, nu + r)] += v;
    }
    for (k, &m) in system.mean.iter().enumerate() {
        dense[(nu + k, nu + np)] += m;
        dense[(nu + np, nu + k)] += m;
    }
    let sv = dense.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    Some(sv.iter().filter(|&&s| s <= 1e-10 * max).count())
}

enum Inner {
    Direct(Lu<usize, f64>),
    Pinned(PinnedSolver),
    Schur(SchurSolver),
}

/// LU of `[[A, B^T], [B, 0]]` with the first pressure pinned to zero.
///
/// When `B^T 1 = 0` the multiplier is fixed by summing the divergence rows,
/// the remaining system is singular only along constant pressures, and the
/// mean constraint is restored by a constant shift. This avoids factoring
/// the dense constraint row.
///
/// The matrix is equilibrated symmetrically before factoring: velocity rows
/// by `A_ii^(-1/2)` and pressure rows by the inverse root of the diagonal of
/// `B diag(A)^-1 B^T`. Without it, slivers make the LU inaccurate at
/// round-off residuals.
struct PinnedSolver {
    lu: Lu<usize, f64>,
    scale: Vec<f64>,
}

impl PinnedSolver {
    fn new(system: &SparseSystem) -> Result<Self, faer::sparse::linalg::LuError> {
        let (nu, np) = (system.n_velocity(), system.n_pressure());
        let pin = nu;
        let diag = system.a.diagonal();
        let mut schur_diag = vec![0.0; np];
        for (r, c, v) in system.b.triplets() {
            schur_diag[r] += v * v / diag[c];
        }
        let scale: Vec<f64> = diag
            .iter()
            .chain(&schur_diag)
            .map(|&d| if d > 0.0 && d.is_finite() { d.sqrt().recip() } else { 1.0 })
            .collect();
        let mut t = Vec::with_capacity(system.a.nnz() + 2 * system.b.nnz() + 1);
        t.extend(system.a.triplets().map(|(r, c, v)| Triplet::new(r, c, scale[r] * v * scale[c])));
        for (r, c, v) in system.b.triplets() {
            if nu + r != pin {
                let w = scale[nu + r] * v * scale[c];
                t.push(Triplet::new(nu + r, c, w));
                t.push(Triplet::new(c, nu + r, w));
            }
        }
        t.push(Triplet::new(pin, pin, 1.0));
        let k = SparseColMat::try_new_from_triplets(nu + np, nu + np, &t).expect("valid pinned triplets");
        Ok(Self { lu: k.sp_lu()?, scale })
    }

    fn solve(&self, system: &SparseSystem, rhs: &[f64]) -> Vec<f64> {
        let (nu, np) = (system.n_velocity(), system.n_pressure());
        let total_m: f64 = system.mean.iter().sum();
        let lambda = rhs[nu..nu + np].iter().sum::<f64>() / total_m;
        let mut r = rhs[..nu + np].to_vec();
        for (ri, m) in r[nu..].iter_mut().zip(&system.mean) {
            *ri -= m * lambda;
        }
        r[nu] = 0.0;
        for (ri, d) in r.iter_mut().zip(&self.scale) {
            *ri *= d;
        }
        let mut x = from_col(&self.lu.solve(&to_col(&r)));
        for (xi, d) in x.iter_mut().zip(&self.scale) {
            *xi *= d;
        }
        let shift = (rhs[nu + np] - dot(&system.mean, &x[nu..])) / total_m;
        x[nu..].iter_mut().for_each(|p| *p += shift);
        x.push(lambda);
        x
    }
}

struct SchurSolver {
    llt: Llt<usize, f64>,
    options: SolverOptions,
}

impl SchurSolver {
    fn a_inv(&self, v: &[f64]) -> Vec<f64> {
        from_col(&self.llt.solve(&to_col(v)))
    }

    /// Solves the augmented system for one right-hand side; returns the
    /// solution and the number of CG iterations.
    fn solve(&self, system: &SparseSystem, rhs: &[f64]) -> Result<(Vec<f64>, usize), SolverError> {
        let (nu, np) = (system.n_velocity(), system.n_pressure());
        let (f, rest) = rhs.split_at(nu);
        let (g, h) = rest.split_at(np);
        let ainv_f = self.a_inv(f);
        let mut c = system.b.matvec(&ainv_f);
        for (ci, gi) in c.iter_mut().zip(g) {
            *ci -= gi;
        }
        // B^T 1 = 0, so S is singular along constants and the multiplier
        // makes the right-hand side consistent.
        let total_m: f64 = system.mean.iter().sum();
        let lambda = -c.iter().sum::<f64>() / total_m;
        let s_rhs: Vec<f64> = c.iter().zip(&system.mean).map(|(ci, m)| ci + m * lambda).collect();
        let apply_s = |q: &[f64]| system.b.matvec(&self.a_inv(&system.b.transpose_matvec(q)));
        let (mut p, iterations) = pcg(apply_s, &s_rhs, &system.mean, self.options)?;
        let shift = (h[0] - dot(&system.mean, &p)) / total_m;
        p.iter_mut().for_each(|x| *x += shift);
        let mut r = f.to_vec();
        for (ri, v) in r.iter_mut().zip(system.b.transpose_matvec(&p)) {
            *ri -= v;
        }
        let mut x = self.a_inv(&r);
        x.extend(p);
        x.push(lambda);
        Ok((x, iterations))
    }
}

/// Preconditioned CG with the diagonal preconditioner `1 / weights`.
fn pcg<S>(apply_s: S, b: &[f64], weights: &[f64], options: SolverOptions) -> Result<(Vec<f64>, usize), SolverError>
where
    S: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(weights).map(|(ri, w)| ri / w).collect();
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    for it in 1..=options.cg_max_iterations {
        let sd = apply_s(&d);
        let alpha = rz / dot(&d, &sd);
        for k in 0..n {
            x[k] += alpha * d[k];
            r[k] -= alpha * sd[k];
        }
        let rel = norm(&r) / b_norm;
        history.push(rel);
        if rel <= options.cg_tolerance {
            return Ok((x, it));
        }
        z = r.iter().zip(weights).map(|(ri, w)| ri / w).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            d[k] = z[k] + beta * d[k];
        }
    }
    // Accept stagnation close to the target; the outer refinement decides.
    if history.last().is_some_and(|&r| r < 1e-6) {
        return Ok((x, options.cg_max_iterations));
    }
    Err(SolverError::NotConverged { history })
}

/// Solves the system and returns velocity, zero-mean pressure and statistics.
pub fn solve(system: &SparseSystem, options: SolverOptions) -> Result<SaddleSolution, SolverError> {
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let unknowns = nu + np + 1;
    let method = match options.kind {
        SolverKind::Auto if unknowns <= AUTO_DIRECT_LIMIT => SolverKind::Direct,
        SolverKind::Auto => SolverKind::SchurCg,
        k => k,
    };
    let method = if method == SolverKind::SchurCg && !constants_in_kernel(system) {
        SolverKind::Direct
    } else {
        method
    };
    let inner = match method {
        SolverKind::SchurCg => {
            let a = system.a.to_faer();
            match a.sp_cholesky(Side::Lower) {
                Ok(llt) => Inner::Schur(SchurSolver { llt, options }),
                Err(_) => return Err(SolverError::Singular { nullspace_dim: None }),
            }
        }
        _ => {
            let factored = if constants_in_kernel(system) {
                PinnedSolver::new(system).map(Inner::Pinned)
            } else {
                augmented_matrix(system).sp_lu().map(Inner::Direct)
            };
            match factored {
                Ok(inner) => inner,
                Err(e) => {
                    return Err(match nullspace_dimension(system) {
                        Some(d) if d > 0 => SolverError::Singular { nullspace_dim: Some(d) },
                        _ => SolverError::Factorization(format!("{e:?}")),
                    })
                }
            }
        }
    };
    let rhs = augmented_rhs(system);
    let rhs_norm = norm(&rhs);
    let mut x = vec![0.0; unknowns];
    let mut residual = rhs.clone();
    let mut history = Vec::new();
    let mut cg_iterations = 0;
    let mut refinements = 0;
    let mut rel = if rhs_norm == 0.0 { 0.0 } else { 1.0 };
    // Refine past the acceptance tolerance until stagnation: the residual is
    // dominated by the pressure block when the viscosity is small.
    while rel > RESIDUAL_FLOOR && refinements <= options.max_refinements {
        let dx = match &inner {
            Inner::Direct(lu) => from_col(&lu.solve(&to_col(&residual))),
            Inner::Pinned(p) => p.solve(system, &residual),
            Inner::Schur(s) => {
                let (dx, it) = s.solve(system, &residual)?;
                cg_iterations += it;
                dx
            }
        };
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let kx = apply(system, &x);
        residual = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
        let new_rel = norm(&residual) / rhs_norm;
        if !new_rel.is_finite() {
            return Err(SolverError::Singular {
                nullspace_dim: nullspace_dimension(system),
            });
        }
        history.push(new_rel);
        refinements += 1;
        if new_rel > 0.5 * rel && refinements > 1 {
            rel = new_rel;
            break;
        }
        rel = new_rel;
    }
    if rel > options.tolerance {
        if rel > 1e-3 {
            if let Some(d) = nullspace_dimension(system).filter(|&d| d > 0) {
                return Err(SolverError::Singular { nullspace_dim: Some(d) });
            }
        }
        return Err(SolverError::NotConverged { history });
    }
    let multiplier = x[unknowns - 1];
    let mut p = x[nu..nu + np].to_vec();
    let total_m: f64 = system.mean.iter().sum();
    let mean = dot(&system.mean, &p) / total_m;
    p.iter_mut().for_each(|v| *v -= mean);
    x.truncate(nu);
    Ok(SaddleSolution {
        u: x,
        p,
        multiplier,
        relative_residual: rel,
        stats: SolverStats {
            method,
            unknowns,
            refinements,
            cg_iterations,
            residual_history: history,
        },
    })
}

/// Whether `B^T 1 = 0`, i.e. constant pressures are in the kernel of `B^T`.
fn constants_in_kernel(system: &SparseSystem) -> bool {
    let bt1 = system.b.transpose_matvec(&vec![1.0; system.n_pressure()]);
    let scale = system
        .b
        .triplets()
        .fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
    bt1.iter().all(|v| v.abs() <= 1e-10 * scale)
}

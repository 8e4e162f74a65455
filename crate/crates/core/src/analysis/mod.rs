//! Manufactured solutions, discretization errors and convergence rates.

mod cases;

use thiserror::Error;

pub use cases::{solve_lambda, BoundaryLayer2d, ExactSolution, LinearFlow, NoFlow, SingularEdge3d, TrigSeries};

use crate::femspace::{FemError, FieldFunction, Space, SpaceKind};
use crate::mesh::Triangulation;
use crate::quadrature::{simplex_rule, QuadratureError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no positive root of sin(omega x) = x found for omega = {0}")]
    NoRoot(f64),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Errors of a discrete solution against an exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `|u - u_h|_{1,h}`.
    pub h1_u: f64,
    /// `|u - u_h|_0`.
    pub l2_u: f64,
    /// `|p - p_h|_0`.
    pub l2_p: f64,
    /// `|pi_h p - p_h|_0`.
    pub l2_pi_p: f64,
}

/// Error norms of a CR velocity `u` and elementwise pressure `p`, using a
/// volume rule of the given degree.
pub fn error_norms<C: ExactSolution + ?Sized>(
    mesh: &Triangulation,
    u: &[f64],
    p: &[f64],
    case: &C,
    degree: usize,
) -> Result<ErrorNorms, AnalysisError> {
    let cr = Space::new(mesh, SpaceKind::CrVelocity)?;
    let uh = FieldFunction::new(&cr, u.to_vec())?;
    if p.len() != mesh.n_elements() {
        return Err(FemError::LengthMismatch {
            expected: mesh.n_elements(),
            found: p.len(),
        }
        .into());
    }
    let rule = simplex_rule(mesh.dim(), degree)?;
    let parts: Vec<[f64; 4]> = {
        use rayon::prelude::*;
        (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let pts = mesh.element_points(e);
                let vol = mesh.geometry(e).volume;
                let grad_h = uh.gradient(e, &pts[0]);
                let mut acc = [0.0; 4];
                let mut mean_p = 0.0;
                for (x, w) in rule.on_simplex(&pts, vol) {
                    acc[0] += w * (case.velocity_gradient(&x) - grad_h).norm_squared();
                    acc[1] += w * (case.velocity(&x) - uh.value(e, &x)).norm_squared();
                    let pe = case.pressure(&x);
                    acc[2] += w * (pe - p[e]).powi(2);
                    mean_p += w * pe;
                }
                acc[3] = (mean_p - vol * p[e]).powi(2) / vol;
                acc
            })
            .collect()
    };
    let mut sums = [0.0; 4];
    for part in parts {
        for k in 0..4 {
            sums[k] += part[k];
        }
    }
    Ok(ErrorNorms {
        h1_u: sums[0].sqrt(),
        l2_u: sums[1].sqrt(),
        l2_p: sums[2].sqrt(),
        l2_pi_p: sums[3].sqrt(),
    })
}

/// Experimental orders of convergence between consecutive levels,
/// `ln(e_k / e_{k+1}) / ln(h_k / h_{k+1})`. `None` where undefined.
pub fn eoc(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| {
            let rate = (e[0] / e[1]).ln() / (h[0] / h[1]).ln();
            (e[0] > 0.0 && e[1] > 0.0 && rate.is_finite()).then_some(rate)
        })
        .collect()
}

/// Mesh size proxy `N_elem^(-1/d)`.
pub fn element_count_h(mesh: &Triangulation) -> f64 {
    (mesh.n_elements() as f64).powf(-1.0 / mesh.dim() as f64)
}

/// Results of one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    /// Refinement parameter: `N` for tensor meshes, `h` for graded ones.
    pub parameter: f64,
    pub h: f64,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub errors: ErrorNorms,
}

/// Errors over a refinement sweep with their convergence rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub levels: Vec<LevelRecord>,
}

impl ConvergenceRecord {
    pub fn push(&mut self, level: LevelRecord) {
        self.levels.push(level);
    }

    fn series(&self, pick: impl Fn(&ErrorNorms) -> f64) -> Vec<Option<f64>> {
        let e: Vec<f64> = self.levels.iter().map(|l| pick(&l.errors)).collect();
        let h: Vec<f64> = self.levels.iter().map(|l| l.h).collect();
        eoc(&e, &h)
    }

    pub fn eoc_h1_u(&self) -> Vec<Option<f64>> {
        self.series(|e| e.h1_u)
    }

    pub fn eoc_l2_u(&self) -> Vec<Option<f64>> {
        self.series(|e| e.l2_u)
    }

    pub fn eoc_l2_p(&self) -> Vec<Option<f64>> {
        self.series(|e| e.l2_p)
    }

    pub fn eoc_l2_pi_p(&self) -> Vec<Option<f64>> {
        self.series(|e| e.l2_pi_p)
    }
}

/// Median of the defined entries.
pub fn median(rates: &[Option<f64>]) -> Option<f64> {
    let mut v: Vec<f64> = rates.iter().flatten().copied().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspace::interpolate_cr;
    use crate::mesh::{build_shishkin_2d, Point};
    use nalgebra::Matrix3;

    #[test]
    fn eoc_values() {
        let r = eoc(&[0.4, 0.2], &[0.2, 0.1]);
        assert!((r[0].unwrap() - 1.0).abs() < 1e-15);
        let r = eoc(&[0.04, 0.01], &[0.2, 0.1]);
        assert!((r[0].unwrap() - 2.0).abs() < 1e-14);
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(0.544)).collect();
        for rate in eoc(&e, &h) {
            assert!((rate.unwrap() - 0.544).abs() < 1e-12);
        }
        assert_eq!(eoc(&[0.0, 0.1], &[0.2, 0.1]), vec![None]);
        assert_eq!(median(&[Some(1.0), None, Some(3.0), Some(2.0)]), Some(2.0));
    }

    #[test]
    fn exact_linear_solution_has_zero_error() {
        let mesh = build_shishkin_2d(4, 0.1).unwrap();
        let case = LinearFlow::new(2, 1.0, Matrix3::new(1.0, 2.0, 0.0, -3.0, 0.5, 0.0, 0.0, 0.0, 0.0), Point::new(0.1, 0.2, 0.0));
        let cr = Space::new(&mesh, SpaceKind::CrVelocity).unwrap();
        let u = interpolate_cr(&cr, |_, x| case.velocity(x), 2).unwrap();
        let p = vec![0.0; mesh.n_elements()];
        let err = error_norms(&mesh, u.coefficients(), &p, &case, 4).unwrap();
        assert!(err.h1_u < 1e-12 && err.l2_u < 1e-12 && err.l2_p == 0.0 && err.l2_pi_p == 0.0);
    }

    #[test]
    fn interpolation_error_and_projection_identity() {
        let mesh = build_shishkin_2d(4, 0.2).unwrap();
        let case = BoundaryLayer2d::new(0.1, 1.0).unwrap();
        let cr = Space::new(&mesh, SpaceKind::CrVelocity).unwrap();
        let u = interpolate_cr(&cr, |_, x| case.velocity(x), 4).unwrap();
        let p0 = Space::new(&mesh, SpaceKind::P0 { components: 1 }).unwrap();
        let pi_p = crate::femspace::project_p0(&p0, |_, x| case.pressure(x), 8).unwrap();
        let err = error_norms(&mesh, u.coefficients(), pi_p.coefficients(), &case, 8).unwrap();
        assert!(err.h1_u > 0.0);
        assert!(err.l2_pi_p < 1e-14);
        // A P0 pressure: the two pressure errors coincide.
        let flat = NoFlow { dim: 2, nu: 1.0 };
        let zero = vec![0.0; cr.n_dofs()];
        let ph: Vec<f64> = (0..mesh.n_elements()).map(|e| (e % 3) as f64).collect();
        let e1 = error_norms(&mesh, &zero, &ph, &ZeroPressure(flat), 4).unwrap();
        assert!((e1.l2_p - e1.l2_pi_p).abs() < 1e-14);
    }

    struct ZeroPressure(NoFlow);

    impl ExactSolution for ZeroPressure {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn nu(&self) -> f64 {
            1.0
        }
        fn velocity(&self, x: &Point) -> Point {
            self.0.velocity(x)
        }
        fn velocity_gradient(&self, x: &Point) -> Matrix3<f64> {
            self.0.velocity_gradient(x)
        }
        fn velocity_laplacian(&self, x: &Point) -> Point {
            self.0.velocity_laplacian(x)
        }
        fn pressure(&self, _x: &Point) -> f64 {
            0.0
        }
        fn pressure_gradient(&self, _x: &Point) -> Point {
            Point::zeros()
        }
    }
}

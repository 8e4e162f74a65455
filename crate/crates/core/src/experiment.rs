//! Refinement sweeps for the manufactured test cases.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{
    element_count_h, error_norms, AnalysisError, BoundaryLayer2d, ConvergenceRecord, ExactSolution, LevelRecord,
    SingularEdge3d,
};
use crate::assembly::{assemble_system, AssemblyError, QuadratureDegrees, Reconstruction, StokesProblem};
use crate::mesh::{build_graded_wedge_3d, build_shishkin_2d, build_uniform_2d, shishkin_tau, MeshError, Triangulation};
use crate::solver::{solve, SaddleSolution, SolverError, SolverOptions};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<ExperimentError>,
    },
}

/// Discretization variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Classical Crouzeix-Raviart.
    Cr,
    /// CR with Raviart-Thomas reconstruction in the load.
    CrRt,
    /// CR with BDM reconstruction in the load.
    CrBdm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cr, Method::CrRt, Method::CrBdm];

    pub fn reconstruction(self) -> Reconstruction {
        match self {
            Method::Cr => Reconstruction::None,
            Method::CrRt => Reconstruction::Rt,
            Method::CrBdm => Reconstruction::Bdm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Cr => "cr",
            Method::CrRt => "cr-rt",
            Method::CrBdm => "cr-bdm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown method '{s}' (expected cr, cr-rt or cr-bdm)")))
    }
}

/// Test case with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    BoundaryLayer2d { epsilon: f64, nu: f64 },
    SingularEdge3d { nu: f64, omega: f64 },
}

impl Case {
    pub fn dim(&self) -> usize {
        match self {
            Case::BoundaryLayer2d { .. } => 2,
            Case::SingularEdge3d { .. } => 3,
        }
    }

    pub fn exact(&self) -> Result<Box<dyn ExactSolution>, ExperimentError> {
        Ok(match *self {
            Case::BoundaryLayer2d { epsilon, nu } => Box::new(BoundaryLayer2d::new(epsilon, nu)?),
            Case::SingularEdge3d { nu, omega } => Box::new(SingularEdge3d::new(nu, omega)?),
        })
    }

    pub fn default_edge3d(nu: f64) -> Self {
        Case::SingularEdge3d { nu, omega: 1.5 * PI }
    }
}

/// Mesh family of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshFamily {
    /// Shishkin mesh of the unit square for the given layer width.
    Shishkin,
    Uniform,
    /// Graded wedge with grading parameter `mu`.
    Graded { mu: f64 },
}

/// Everything needed to run one refinement sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experiment {
    pub case: Case,
    pub method: Method,
    pub mesh: MeshFamily,
    pub degrees: QuadratureDegrees,
    /// Volume quadrature degree of the error norms.
    pub error_degree: usize,
    pub solver: SolverOptions,
}

impl Experiment {
    pub fn new(case: Case, method: Method, mesh: MeshFamily) -> Self {
        let dim = case.dim();
        Self {
            case,
            method,
            mesh,
            degrees: QuadratureDegrees::for_dim(dim),
            error_degree: if dim == 3 { 10 } else { 8 },
            solver: SolverOptions::default(),
        }
    }

    /// Mesh of level `n`: `N = n` for the square, `h = 1/n` for the wedge.
    pub fn build_mesh(&self, n: usize) -> Result<Triangulation, ExperimentError> {
        match (self.case, self.mesh) {
            (Case::BoundaryLayer2d { epsilon, .. }, MeshFamily::Shishkin) => {
                Ok(build_shishkin_2d(n, shishkin_tau(epsilon))?)
            }
            (Case::BoundaryLayer2d { .. }, MeshFamily::Uniform) => Ok(build_uniform_2d(n)?),
            (Case::SingularEdge3d { omega, .. }, MeshFamily::Graded { mu }) => {
                if n == 0 {
                    return Err(ExperimentError::Config("level must be positive".into()));
                }
                Ok(build_graded_wedge_3d(1.0 / n as f64, mu, omega)?)
            }
            (case, mesh) => Err(ExperimentError::Config(format!(
                "mesh family {mesh:?} does not apply to case {case:?}"
            ))),
        }
    }

    /// Assembles and solves on one mesh.
    pub fn solve_on(&self, mesh: &Triangulation, exact: &dyn ExactSolution) -> Result<SaddleSolution, ExperimentError> {
        let forcing = |x: &crate::mesh::Point| exact.forcing(x);
        let dirichlet = |x: &crate::mesh::Point| exact.dirichlet(x);
        let problem = StokesProblem::new(mesh, exact.nu(), &forcing, &dirichlet, self.method.reconstruction())?
            .with_degrees(self.degrees);
        let system = assemble_system(&problem)?;
        Ok(solve(&system, self.solver)?)
    }

    /// Runs one level and returns the mesh, solution and error record.
    pub fn run_level(&self, n: usize) -> Result<LevelOutcome, ExperimentError> {
        let exact = self.case.exact()?;
        let mesh = self.build_mesh(n)?;
        let solution = self.solve_on(&mesh, exact.as_ref())?;
        let errors = error_norms(&mesh, &solution.u, &solution.p, exact.as_ref(), self.error_degree)?;
        let record = LevelRecord {
            parameter: n as f64,
            h: element_count_h(&mesh),
            n_elements: mesh.n_elements(),
            n_dofs: solution.u.len() + solution.p.len(),
            errors,
        };
        Ok(LevelOutcome { mesh, solution, record })
    }

    /// Runs all levels in order; `on_level` sees every finished level. On
    /// failure the levels completed so far are returned with the error.
    pub fn run<F>(&self, levels: &[usize], mut on_level: F) -> Result<ConvergenceRecord, (ConvergenceRecord, ExperimentError)>
    where
        F: FnMut(&LevelOutcome),
    {
        let mut record = ConvergenceRecord::default();
        for &n in levels {
            match self.run_level(n) {
                Ok(outcome) => {
                    on_level(&outcome);
                    record.push(outcome.record.clone());
                }
                Err(e) => {
                    return Err((
                        record,
                        ExperimentError::AtLevel {
                            level: n,
                            source: Box::new(e),
                        },
                    ))
                }
            }
        }
        Ok(record)
    }
}

/// Mesh, solution and errors of one level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub mesh: Triangulation,
    pub solution: SaddleSolution,
    pub record: LevelRecord,
}

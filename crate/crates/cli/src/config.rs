//! `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use aniso_stokes::assembly::QuadratureDegrees;
use aniso_stokes::experiment::{Case, Experiment, Method, MeshFamily};
use aniso_stokes::solver::{SolverKind, SolverOptions};

use crate::CliError;

const KEYS: &[&str] = &[
    "case",
    "method",
    "nu",
    "epsilon",
    "mu",
    "omega",
    "mesh",
    "levels",
    "volume_degree",
    "facet_degree",
    "rhs_degree",
    "error_degree",
    "solver",
    "csv",
    "vtk",
    "mac_angle",
    "rvp_constant",
];

const KEYS_2D: &[&str] = &["epsilon"];
const KEYS_3D: &[&str] = &["mu", "omega"];

/// Raw key/value pairs in file order; later entries win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected 'key = value'", k + 1)));
            };
            raw.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", k + 1)))?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown key '{key}'"));
        }
        self.entries.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Config(format!("invalid value '{v}' for '{key}'"))))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Bl2d,
    Edge3d,
}

/// Validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub case_name: CaseName,
    pub experiment: Experiment,
    pub levels: Vec<usize>,
    pub csv: Option<PathBuf>,
    pub vtk: Option<PathBuf>,
    /// Thresholds of the mesh audit: angle in degrees and RVP constant.
    pub mac_angle: f64,
    pub rvp_constant: f64,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let case_name = match raw.get("case") {
            Some("bl2d") => CaseName::Bl2d,
            Some("edge3d") => CaseName::Edge3d,
            Some(other) => return Err(CliError::Config(format!("unknown case '{other}' (expected bl2d or edge3d)"))),
            None => return Err(CliError::Config("missing key 'case'".into())),
        };
        let foreign = if case_name == CaseName::Bl2d { KEYS_3D } else { KEYS_2D };
        if let Some(k) = foreign.iter().find(|k| raw.get(k).is_some()) {
            return Err(CliError::Config(format!("key '{k}' does not apply to this case")));
        }
        let method: Method = raw.get("method").unwrap_or("cr-bdm").parse()?;
        let nu = raw.number("nu")?.unwrap_or(1.0);
        let (case, mesh) = match case_name {
            CaseName::Bl2d => {
                let epsilon = raw.number("epsilon")?.unwrap_or(1e-2);
                let mesh = match raw.get("mesh").unwrap_or("shishkin") {
                    "shishkin" => MeshFamily::Shishkin,
                    "uniform" => MeshFamily::Uniform,
                    other => return Err(CliError::Config(format!("mesh '{other}' is not a 2D family"))),
                };
                (Case::BoundaryLayer2d { epsilon, nu }, mesh)
            }
            CaseName::Edge3d => {
                let omega = raw.number("omega")?.unwrap_or(1.5 * PI);
                let mu = raw.number("mu")?.unwrap_or(1.0);
                if !matches!(raw.get("mesh"), None | Some("graded")) {
                    return Err(CliError::Config("edge3d uses the graded mesh family".into()));
                }
                (Case::SingularEdge3d { nu, omega }, MeshFamily::Graded { mu })
            }
        };
        let mut experiment = Experiment::new(case, method, mesh);
        let defaults = QuadratureDegrees::for_dim(case.dim());
        experiment.degrees = QuadratureDegrees {
            volume: raw.number("volume_degree")?.unwrap_or(defaults.volume),
            facet: raw.number("facet_degree")?.unwrap_or(defaults.facet),
            rhs: raw.number("rhs_degree")?.unwrap_or(defaults.rhs),
        };
        if let Some(d) = raw.number("error_degree")? {
            experiment.error_degree = d;
        }
        let kind = match raw.get("solver").unwrap_or("auto") {
            "auto" => SolverKind::Auto,
            "direct" => SolverKind::Direct,
            "schur-cg" => SolverKind::SchurCg,
            other => return Err(CliError::Config(format!("unknown solver '{other}'"))),
        };
        experiment.solver = SolverOptions::with_kind(kind);

        let levels = parse_levels(raw.get("levels").ok_or_else(|| CliError::Config("missing key 'levels'".into()))?)?;
        // Reject bad physical parameters before any level runs.
        case.exact()?;
        Ok(Self {
            case_name,
            experiment,
            levels,
            csv: raw.get("csv").map(PathBuf::from),
            vtk: raw.get("vtk").map(PathBuf::from),
            mac_angle: raw.number("mac_angle")?.unwrap_or(170.0),
            rvp_constant: raw.number("rvp_constant")?.unwrap_or(0.1),
        })
    }
}

/// Comma- or space-separated positive integers.
pub fn parse_levels(s: &str) -> Result<Vec<usize>, CliError> {
    let levels = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("invalid level '{t}'"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if levels.is_empty() {
        return Err(CliError::Config("no levels given".into()));
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_raw(&RawConfig::parse(text)?)
    }

    #[test]
    fn parses_boundary_layer() {
        let cfg = config("# sweep\ncase = bl2d\nmethod = cr-rt\nepsilon = 1e-3\nlevels = 4, 8 16\nrhs_degree = 7\n").unwrap();
        assert_eq!(cfg.levels, vec![4, 8, 16]);
        assert_eq!(cfg.experiment.method, Method::CrRt);
        assert_eq!(cfg.experiment.degrees.rhs, 7);
        assert_eq!(cfg.experiment.case, Case::BoundaryLayer2d { epsilon: 1e-3, nu: 1.0 });
        assert_eq!(cfg.experiment.mesh, MeshFamily::Shishkin);
    }

    #[test]
    fn edge_defaults() {
        let cfg = config("case = edge3d\nmu = 0.4\nlevels = 2\n").unwrap();
        assert_eq!(cfg.experiment.mesh, MeshFamily::Graded { mu: 0.4 });
        assert_eq!(cfg.experiment.degrees.rhs, 10);
        assert_eq!(cfg.experiment.error_degree, 10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(config("case = bl2d\nlevels = 4\nfoo = 1\n").is_err());
        assert!(config("case = bl2d\nlevels = 4\nmu = 0.4\n").is_err());
        assert!(config("case = edge3d\nlevels = 4\nepsilon = 0.1\n").is_err());
        assert!(config("case = bl2d\nlevels = 0\n").is_err());
        assert!(config("case = bl2d\n").is_err());
        assert!(config("case = bl2d\nlevels = 4\nnu = -1\n").is_err());
        assert!(config("case = bl2d\nlevels = 4\nmethod = p2\n").is_err());
        assert!(config("levels = 4\n").is_err());
        assert!(config("case bl2d\n").is_err());
    }
}

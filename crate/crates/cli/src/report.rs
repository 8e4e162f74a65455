//! CSV tables, audit listings and VTK fields.

use std::io::{self, Write};

use aniso_stokes::analysis::ConvergenceRecord;
use aniso_stokes::experiment::LevelOutcome;
use aniso_stokes::mesh::vtk::{write_vtk, CellData};
use aniso_stokes::mesh::{Point, QualityReport, Triangulation};

use crate::config::{CaseName, ExperimentConfig};

const COLUMNS: &[&str] = &[
    "level", "N_or_h", "n_elem", "n_dof", "err_h1", "err_l2_u", "err_l2_p", "err_pi_p", "eoc_h1", "eoc_l2_u",
    "eoc_l2_p", "eoc_pi_p",
];

/// Seventeen significant digits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn rate(r: Option<&Option<f64>>) -> String {
    r.copied().flatten().map(float).unwrap_or_default()
}

pub struct CsvTable {
    case: CaseName,
}

impl CsvTable {
    pub fn new(case: CaseName) -> Self {
        Self { case }
    }

    pub fn write_header<W: Write>(&mut self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", COLUMNS.join(","))
    }

    /// Writes the last level of `record`.
    pub fn write_row<W: Write>(&mut self, out: &mut W, record: &ConvergenceRecord) -> io::Result<()> {
        let Some(l) = record.levels.last() else {
            return Ok(());
        };
        let k = record.levels.len() - 1;
        let at = |v: Vec<Option<f64>>| if k == 0 { String::new() } else { rate(v.get(k - 1)) };
        let n = l.parameter as usize;
        let n_or_h = match self.case {
            CaseName::Bl2d => n.to_string(),
            CaseName::Edge3d => float(1.0 / l.parameter),
        };
        writeln!(
            out,
            "{n},{n_or_h},{},{},{},{},{},{},{},{},{},{}",
            l.n_elements,
            l.n_dofs,
            float(l.errors.h1_u),
            float(l.errors.l2_u),
            float(l.errors.l2_p),
            float(l.errors.l2_pi_p),
            at(record.eoc_h1_u()),
            at(record.eoc_l2_u()),
            at(record.eoc_l2_p()),
            at(record.eoc_l2_pi_p()),
        )
    }

    /// Marker row for a level that did not finish.
    pub fn write_failure<W: Write>(&mut self, out: &mut W, level: usize) -> io::Result<()> {
        writeln!(out, "{level},FAILED{}", ",".repeat(COLUMNS.len() - 2))
    }
}

pub fn write_audit_header<W: Write>(out: &mut W, cfg: &ExperimentConfig) -> io::Result<()> {
    writeln!(
        out,
        "# MAC({}) RVP({})",
        cfg.mac_angle, cfg.rvp_constant
    )?;
    writeln!(out, "level,n_elem,max_angle_deg,rvp_constant,sigma,mac_failures,rvp_failures")
}

pub fn write_audit_row<W: Write>(out: &mut W, level: usize, mesh: &Triangulation, q: &QualityReport) -> io::Result<()> {
    let failures = |ok: &[bool]| ok.iter().filter(|&&b| !b).count();
    writeln!(
        out,
        "{level},{},{},{},{},{},{}",
        mesh.n_elements(),
        float(q.max_angle.to_degrees()),
        float(q.rvp_constant),
        float(q.sigma),
        failures(&q.mac_ok),
        failures(&q.rvp_ok),
    )
}

/// Mesh with pressure, barycentric velocity and quality fields.
pub fn write_fields<W: Write>(out: &mut W, outcome: &LevelOutcome, q: &QualityReport, title: &str) -> io::Result<()> {
    let mesh = &outcome.mesh;
    let d = mesh.dim();
    // CR velocity at the barycenter is the mean of the facet values.
    let velocity: Vec<Point> = (0..mesh.n_elements())
        .map(|e| {
            let mut v = Point::zeros();
            for &f in mesh.element_facets(e) {
                for c in 0..d {
                    v[c] += outcome.solution.u[f * d + c];
                }
            }
            v / (d + 1) as f64
        })
        .collect();
    let sigma = (0..mesh.n_elements()).map(|e| mesh.geometry(e).aspect_ratio()).collect();
    let angles = q.element_max_angle.iter().map(|a| a.to_degrees()).collect();
    write_vtk(
        out,
        mesh,
        title,
        &[
            CellData::Scalars("pressure".into(), outcome.solution.p.clone()),
            CellData::Vectors("velocity".into(), velocity),
            CellData::Scalars("aspect_ratio".into(), sigma),
            CellData::Scalars("max_angle_deg".into(), angles),
            CellData::Scalars("rvp".into(), q.element_rvp.clone()),
        ],
    )
}

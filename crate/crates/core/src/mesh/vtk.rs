//! Legacy ASCII VTK export of unstructured simplicial meshes.

use std::io::{self, Write};

use super::{Point, Triangulation};

/// Cell-wise data attached to an export.
#[derive(Debug, Clone)]
pub enum CellData {
    Scalars(String, Vec<f64>),
    Vectors(String, Vec<Point>),
}

impl CellData {
    fn len(&self) -> usize {
        match self {
            CellData::Scalars(_, v) => v.len(),
            CellData::Vectors(_, v) => v.len(),
        }
    }
}

const VTK_TRIANGLE: u8 = 5;
const VTK_TETRA: u8 = 10;

/// Writes the mesh and cell data as a legacy `UNSTRUCTURED_GRID` file.
pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &Triangulation,
    title: &str,
    cell_data: &[CellData],
) -> io::Result<()> {
    for data in cell_data {
        if data.len() != mesh.n_elements() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "cell data length does not match the number of elements",
            ));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    let nv = mesh.dim() + 1;
    writeln!(out, "CELLS {} {}", mesh.n_elements(), mesh.n_elements() * (nv + 1))?;
    for e in 0..mesh.n_elements() {
        write!(out, "{nv}")?;
        for v in mesh.element(e) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_elements())?;
    let cell_type = if mesh.dim() == 2 { VTK_TRIANGLE } else { VTK_TETRA };
    for _ in 0..mesh.n_elements() {
        writeln!(out, "{cell_type}")?;
    }
    if !cell_data.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.n_elements())?;
        for data in cell_data {
            match data {
                CellData::Scalars(name, values) => {
                    writeln!(out, "SCALARS {} double 1", sanitize(name))?;
                    writeln!(out, "LOOKUP_TABLE default")?;
                    for v in values {
                        writeln!(out, "{v}")?;
                    }
                }
                CellData::Vectors(name, values) => {
                    writeln!(out, "VECTORS {} double", sanitize(name))?;
                    for v in values {
                        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

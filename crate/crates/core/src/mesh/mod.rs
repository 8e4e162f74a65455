//! Conforming simplicial meshes in two and three dimensions.
//!
//! Points are always stored as 3-vectors; two-dimensional meshes keep the
//! third coordinate at zero, and every derived vector (normals, gradients)
//! then also has a vanishing third component.
//!
//! Local numbering follows one convention everywhere: local facet `i` of an
//! element is the facet opposite local vertex `i`.

mod generators;
mod quality;
pub mod vtk;

use std::collections::HashMap;

use nalgebra::{Matrix2, Matrix3, Vector3};
use thiserror::Error;

pub use generators::{
    build_graded_sector_2d, build_graded_wedge_3d, build_shishkin_2d, build_tensor_2d,
    build_tensor_3d, build_uniform_2d, prism_tetrahedra, sector_radii, shishkin_grid,
    shishkin_sigma, shishkin_tau, subdivide_prism, GradedWedge,
};
pub use quality::{check_mac, check_rvp, QualityReport, RegularVertex};

pub type Point = Vector3<f64>;

/// Elements with `volume < DEGENERACY_TOLERANCE * h_T^d` are rejected.
pub const DEGENERACY_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("unsupported mesh dimension {0}")]
    InvalidDimension(usize),
    #[error("element {element} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange {
        element: usize,
        vertex: usize,
        count: usize,
    },
    #[error("degenerate simplex (volume {volume:e}, diameter {diameter:e})")]
    Degenerate { volume: f64, diameter: f64 },
    #[error("element {element} is degenerate: {source}")]
    DegenerateElement {
        element: usize,
        #[source]
        source: Box<MeshError>,
    },
    #[error("facet {vertices:?} is shared by {count} elements")]
    NonConforming { vertices: Vec<usize>, count: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

/// Geometric data of a single simplex.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub volume: f64,
    /// Diameter `h_T` (longest edge).
    pub diameter: f64,
    /// Diameter `rho_T` of the inscribed ball.
    pub inradius_diameter: f64,
    pub barycenter: Point,
    /// Gradients of the barycentric coordinates, one per local vertex.
    pub barycentric_gradients: [Point; 4],
    pub facet_areas: [f64; 4],
    pub facet_barycenters: [Point; 4],
    /// Outward unit normals, one per local facet.
    pub outward_normals: [Point; 4],
}

impl ElementGeometry {
    /// Computes the geometry of the simplex spanned by the `dim + 1` given points.
    ///
    /// The signed volume must be positive; negatively oriented or degenerate
    /// simplices are reported as [`MeshError::Degenerate`].
    pub fn new(points: &[Point], dim: usize) -> Result<Self, MeshError> {
        let (volume, grads) = signed_volume_and_gradients(points, dim)?;
        let diameter = diameter(points);
        if !(volume >= DEGENERACY_TOLERANCE * diameter.powi(dim as i32)) {
            return Err(MeshError::Degenerate { volume, diameter });
        }
        let n = dim + 1;
        let mut barycenter = Point::zeros();
        for p in points.iter().take(n) {
            barycenter += p;
        }
        barycenter /= n as f64;

        let mut facet_areas = [0.0; 4];
        let mut facet_barycenters = [Point::zeros(); 4];
        let mut outward_normals = [Point::zeros(); 4];
        for i in 0..n {
            let g = grads[i].norm();
            facet_areas[i] = dim as f64 * volume * g;
            outward_normals[i] = -grads[i] / g;
            facet_barycenters[i] = (barycenter * n as f64 - points[i]) / dim as f64;
        }
        let surface: f64 = facet_areas[..n].iter().sum();
        let inradius_diameter = 2.0 * dim as f64 * volume / surface;
        Ok(Self {
            volume,
            diameter,
            inradius_diameter,
            barycenter,
            barycentric_gradients: grads,
            facet_areas,
            facet_barycenters,
            outward_normals,
        })
    }

    /// Aspect ratio `sigma_T = h_T / rho_T`.
    pub fn aspect_ratio(&self) -> f64 {
        self.diameter / self.inradius_diameter
    }
}

fn diameter(points: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            h = h.max((p - q).norm());
        }
    }
    h
}

/// Signed volume and barycentric gradients of a simplex. Fails only when the
/// edge matrix is singular.
pub(crate) fn signed_volume_and_gradients(
    points: &[Point],
    dim: usize,
) -> Result<(f64, [Point; 4]), MeshError> {
    let singular = || MeshError::Degenerate {
        volume: 0.0,
        diameter: diameter(&points[..=dim.min(points.len() - 1)]),
    };
    let mut grads = [Point::zeros(); 4];
    let volume = match dim {
        2 => {
            let e1 = points[1] - points[0];
            let e2 = points[2] - points[0];
            let jac = Matrix2::new(e1.x, e2.x, e1.y, e2.y);
            let det = jac.determinant();
            let inv = jac.try_inverse().ok_or_else(singular)?;
            for k in 0..2 {
                grads[k + 1] = Vector3::new(inv[(k, 0)], inv[(k, 1)], 0.0);
            }
            det / 2.0
        }
        3 => {
            let jac = Matrix3::from_columns(&[
                points[1] - points[0],
                points[2] - points[0],
                points[3] - points[0],
            ]);
            let det = jac.determinant();
            let inv = jac.try_inverse().ok_or_else(singular)?;
            for k in 0..3 {
                grads[k + 1] = inv.row(k).transpose();
            }
            det / 6.0
        }
        _ => return Err(MeshError::InvalidDimension(dim)),
    };
    grads[0] = -(grads[1..=dim].iter().sum::<Point>());
    Ok((volume, grads))
}

/// A facet of the triangulation with its adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Global vertex indices in ascending order; the first `dim` entries are used.
    pub vertices: [usize; 3],
    /// Lower-indexed adjacent element and the local facet index inside it.
    pub owner: (usize, usize),
    /// Higher-indexed adjacent element, absent on the boundary.
    pub neighbor: Option<(usize, usize)>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct FacetGeometry {
    pub area: f64,
    pub barycenter: Point,
    /// Global unit normal: outward on the boundary, pointing from the owner
    /// into the neighbor on interior facets.
    pub normal: Point,
}

/// Conforming simplicial triangulation with facet adjacency and geometry caches.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Triangulation {
    dim: usize,
    vertices: Vec<Point>,
    elements: Vec<[usize; 4]>,
    facets: Vec<Facet>,
    element_facets: Vec<[usize; 4]>,
    facet_signs: Vec<[f64; 4]>,
    element_geometry: Vec<ElementGeometry>,
    facet_geometry: Vec<FacetGeometry>,
}

impl Triangulation {
    /// Builds a triangulation from vertex coordinates and element connectivity.
    ///
    /// Negatively oriented elements are reordered; degenerate elements and
    /// facets shared by more than two elements are rejected.
    pub fn new(dim: usize, vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::InvalidDimension(dim));
        }
        let n = dim + 1;
        let mut elems = Vec::with_capacity(elements.len());
        let mut geometry = Vec::with_capacity(elements.len());
        for (e, conn) in elements.iter().enumerate() {
            if conn.len() != n {
                return Err(MeshError::InvalidDimension(conn.len().saturating_sub(1)));
            }
            let mut ids = [usize::MAX; 4];
            for (k, &v) in conn.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        element: e,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
                ids[k] = v;
            }
            let mut pts: Vec<Point> = ids[..n].iter().map(|&v| vertices[v]).collect();
            let (signed, _) = signed_volume_and_gradients(&pts, dim)
                .map_err(|source| MeshError::DegenerateElement { element: e, source: Box::new(source) })?;
            if signed < 0.0 {
                ids.swap(1, 2);
                pts.swap(1, 2);
            }
            let geo = ElementGeometry::new(&pts, dim)
                .map_err(|source| MeshError::DegenerateElement { element: e, source: Box::new(source) })?;
            elems.push(ids);
            geometry.push(geo);
        }

        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = vec![[usize::MAX; 4]; elems.len()];
        for (e, ids) in elems.iter().enumerate() {
            for i in 0..n {
                let key = facet_key(ids, i, dim);
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, facets.len());
                        element_facets[e][i] = facets.len();
                        facets.push(Facet {
                            vertices: key,
                            owner: (e, i),
                            neighbor: None,
                        });
                    }
                    Some(&f) => {
                        if facets[f].neighbor.is_some() {
                            return Err(MeshError::NonConforming {
                                vertices: key[..dim].to_vec(),
                                count: 3,
                            });
                        }
                        facets[f].neighbor = Some((e, i));
                        element_facets[e][i] = f;
                    }
                }
            }
        }

        let facet_geometry = facets
            .iter()
            .map(|f| {
                let (e, i) = f.owner;
                let g = &geometry[e];
                FacetGeometry {
                    area: g.facet_areas[i],
                    barycenter: g.facet_barycenters[i],
                    normal: g.outward_normals[i],
                }
            })
            .collect();
        let mut facet_signs = vec![[0.0; 4]; elems.len()];
        for f in &facets {
            facet_signs[f.owner.0][f.owner.1] = 1.0;
            if let Some((e, i)) = f.neighbor {
                facet_signs[e][i] = -1.0;
            }
        }

        Ok(Self {
            dim,
            vertices,
            elements: elems,
            facets,
            element_facets,
            facet_signs,
            element_geometry: geometry,
            facet_geometry,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    /// Global vertex indices of element `e` (the first `dim + 1` entries are used).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..=self.dim]
    }

    pub fn element_points(&self, e: usize) -> Vec<Point> {
        self.element(e).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    pub fn facet_points(&self, f: usize) -> Vec<Point> {
        self.facets[f].vertices[..self.dim]
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    /// Global facet indices of element `e`, ordered by local facet.
    pub fn element_facets(&self, e: usize) -> &[usize] {
        &self.element_facets[e][..=self.dim]
    }

    /// `+1` if the global normal of local facet `i` is outward for element `e`, `-1` otherwise.
    pub fn facet_sign(&self, e: usize, i: usize) -> f64 {
        self.facet_signs[e][i]
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.element_geometry[e]
    }

    pub fn facet_geometry(&self, f: usize) -> &FacetGeometry {
        &self.facet_geometry[f]
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = usize> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_boundary())
            .map(|(i, _)| i)
    }

    /// Sum of element volumes.
    pub fn volume(&self) -> f64 {
        self.element_geometry.iter().map(|g| g.volume).sum()
    }

    /// Global mesh size `h = max h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.element_geometry
            .iter()
            .map(|g| g.diameter)
            .fold(0.0, f64::max)
    }

    /// Largest element aspect ratio.
    pub fn max_aspect_ratio(&self) -> f64 {
        self.element_geometry
            .iter()
            .map(ElementGeometry::aspect_ratio)
            .fold(0.0, f64::max)
    }

    /// Barycentric coordinates of `x` with respect to element `e`.
    pub fn barycentric(&self, e: usize, x: &Point) -> [f64; 4] {
        let g = &self.element_geometry[e];
        let mut out = [0.0; 4];
        for (k, &v) in self.element(e).iter().enumerate() {
            out[k] = 1.0 + g.barycentric_gradients[k].dot(&(x - self.vertices[v]));
        }
        out
    }

    /// Whether `x` lies in the closed element, up to a relative tolerance on
    /// the barycentric coordinates.
    pub fn contains(&self, e: usize, x: &Point) -> bool {
        self.barycentric(e, x)[..=self.dim].iter().all(|&l| l >= -1e-10)
    }
}

/// Sorted vertex tuple of local facet `i` (opposite local vertex `i`).
fn facet_key(ids: &[usize; 4], i: usize, dim: usize) -> [usize; 3] {
    let mut key = [usize::MAX; 3];
    let mut k = 0;
    for (j, &v) in ids[..=dim].iter().enumerate() {
        if j != i {
            key[k] = v;
            k += 1;
        }
    }
    key[..dim].sort_unstable();
    key
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two_triangles() -> Triangulation {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        Triangulation::new(2, v, vec![vec![0, 1, 2], vec![0, 3, 2]]).unwrap()
    }

    #[test]
    fn orientation_is_repaired() {
        let mesh = unit_square_two_triangles();
        for e in 0..mesh.n_elements() {
            assert!(mesh.geometry(e).volume > 0.0);
        }
        assert_eq!(mesh.element(1), &[0, 2, 3]);
    }

    #[test]
    fn facet_adjacency_and_normals() {
        let mesh = unit_square_two_triangles();
        assert_eq!(mesh.n_facets(), 5);
        assert_eq!(mesh.boundary_facets().count(), 4);
        let diagonal = mesh
            .facets()
            .iter()
            .position(|f| f.vertices[..2] == [0, 2])
            .unwrap();
        let f = mesh.facet(diagonal);
        assert_eq!(f.owner.0, 0);
        assert_eq!(f.neighbor.unwrap().0, 1);
        // owner is the lower triangle, so the normal points up-left
        let n = mesh.facet_geometry(diagonal).normal;
        assert!((n - Point::new(-1.0, 1.0, 0.0) / 2f64.sqrt()).norm() < 1e-15);
        for bf in mesh.boundary_facets() {
            let g = mesh.facet_geometry(bf);
            let outward = g.barycenter - Point::new(0.5, 0.5, 0.0);
            assert!(g.normal.dot(&outward) > 0.0);
        }
    }

    #[test]
    fn reference_tetrahedron_geometry() {
        let pts = [
            Point::zeros(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let g = ElementGeometry::new(&pts, 3).unwrap();
        assert!((g.volume - 1.0 / 6.0).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        // inradius of the corner tetrahedron: 1 / (3 + sqrt 3)
        assert!((g.inradius_diameter - 2.0 / (3.0 + 3f64.sqrt())).abs() < 1e-15);
        assert!((g.facet_areas[0] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((g.outward_normals[1] - Point::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        for n in &g.outward_normals {
            assert!((n.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_and_nonconforming_input() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ];
        let err = Triangulation::new(2, v, vec![vec![0, 1, 2]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateElement { element: 0, .. }));

        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ];
        let err =
            Triangulation::new(2, v, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonConforming { .. }));
    }

    #[test]
    fn barycentric_coordinates() {
        let mesh = unit_square_two_triangles();
        let x = Point::new(0.75, 0.25, 0.0);
        let l = mesh.barycentric(0, &x);
        let sum: f64 = l[..3].iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(mesh.contains(0, &x));
        assert!(!mesh.contains(1, &x));
    }
}

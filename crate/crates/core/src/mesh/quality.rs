//! Maximum angle and regular vertex diagnostics for anisotropic elements.

use nalgebra::{Matrix2, Matrix3};

use super::{ElementGeometry, MeshError, Point, Triangulation};

fn angle_between(a: &Point, b: &Point) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Largest interior angle of a triangle given by three points.
fn triangle_max_angle(p: &[Point]) -> f64 {
    (0..3)
        .map(|k| {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            angle_between(&a, &b)
        })
        .fold(0.0, f64::max)
}

/// Maximum angle of a simplex in radians.
///
/// In 2D this is the largest interior angle. In 3D it is the larger of the
/// largest dihedral angle and the largest interior angle of any face.
pub fn check_mac(points: &[Point], dim: usize) -> Result<f64, MeshError> {
    let mut pts = points[..=dim].to_vec();
    let (signed, _) = super::signed_volume_and_gradients(&pts, dim)?;
    if signed < 0.0 {
        pts.swap(1, 2);
    }
    let geo = ElementGeometry::new(&pts, dim)?;
    match dim {
        2 => Ok(triangle_max_angle(&pts)),
        _ => {
            let mut max: f64 = 0.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    let (ni, nj) = (geo.outward_normals[i], geo.outward_normals[j]);
                    // interior dihedral angle: cos = -n_i . n_j
                    max = max.max(ni.cross(&nj).norm().atan2(-ni.dot(&nj)));
                }
                let face: Vec<Point> = (0..4).filter(|&k| k != i).map(|k| pts[k]).collect();
                max = max.max(triangle_max_angle(&face));
            }
            Ok(max)
        }
    }
}

/// Best regular vertex of a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularVertex {
    /// Local index of the vertex maximizing `|det N_k|`.
    pub vertex: usize,
    /// `|det N_k|` at that vertex.
    pub det: f64,
    /// Lengths `h_{T,i}` of the edges leaving the regular vertex, in local vertex order.
    pub edge_lengths: Vec<f64>,
}

/// `|det N_k|` for every vertex `k`, where the columns of `N_k` are the unit
/// edge vectors leaving vertex `k`.
pub fn vertex_determinants(points: &[Point], dim: usize) -> Result<Vec<f64>, MeshError> {
    ElementGeometry::new(&oriented(points, dim)?, dim)?;
    Ok((0..=dim)
        .map(|k| {
            let dirs: Vec<Point> = (0..=dim)
                .filter(|&j| j != k)
                .map(|j| (points[j] - points[k]).normalize())
                .collect();
            match dim {
                2 => Matrix2::new(dirs[0].x, dirs[1].x, dirs[0].y, dirs[1].y)
                    .determinant()
                    .abs(),
                _ => Matrix3::from_columns(&[dirs[0], dirs[1], dirs[2]])
                    .determinant()
                    .abs(),
            }
        })
        .collect())
}

fn oriented(points: &[Point], dim: usize) -> Result<Vec<Point>, MeshError> {
    let mut pts = points[..=dim].to_vec();
    let (signed, _) = super::signed_volume_and_gradients(&pts, dim)?;
    if signed < 0.0 {
        pts.swap(1, 2);
    }
    Ok(pts)
}

/// Regular vertex check: the vertex with the largest `|det N_k|`.
pub fn check_rvp(points: &[Point], dim: usize) -> Result<RegularVertex, MeshError> {
    let dets = vertex_determinants(points, dim)?;
    let (vertex, det) = dets
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, d)| if d > best.1 { (k, d) } else { best });
    let edge_lengths = (0..=dim)
        .filter(|&j| j != vertex)
        .map(|j| (points[j] - points[vertex]).norm())
        .collect();
    Ok(RegularVertex {
        vertex,
        det,
        edge_lengths,
    })
}

/// Mesh-wide quality summary.
#[derive(Debug, Clone)]
pub struct QualityReport {
    /// Largest angle over all elements, in radians.
    pub max_angle: f64,
    /// RVP constant of the mesh: the smallest per-element best `|det N_k|`.
    pub rvp_constant: f64,
    /// Largest element aspect ratio.
    pub sigma: f64,
    pub mac_threshold: f64,
    pub rvp_threshold: f64,
    pub mac_ok: Vec<bool>,
    pub rvp_ok: Vec<bool>,
    pub element_max_angle: Vec<f64>,
    pub element_rvp: Vec<f64>,
}

impl QualityReport {
    /// Evaluates `MAC(phi_bar)` and `RVP(c_bar)` on every element.
    pub fn compute(mesh: &Triangulation, phi_bar: f64, c_bar: f64) -> Result<Self, MeshError> {
        let dim = mesh.dim();
        let mut element_max_angle = Vec::with_capacity(mesh.n_elements());
        let mut element_rvp = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let pts = mesh.element_points(e);
            element_max_angle.push(check_mac(&pts, dim)?);
            element_rvp.push(check_rvp(&pts, dim)?.det);
        }
        Ok(Self {
            max_angle: element_max_angle.iter().copied().fold(0.0, f64::max),
            rvp_constant: element_rvp.iter().copied().fold(f64::INFINITY, f64::min),
            sigma: mesh.max_aspect_ratio(),
            mac_threshold: phi_bar,
            rvp_threshold: c_bar,
            mac_ok: element_max_angle.iter().map(|&a| a <= phi_bar).collect(),
            rvp_ok: element_rvp.iter().map(|&d| d >= c_bar).collect(),
            element_max_angle,
            element_rvp,
        })
    }

    pub fn all_mac(&self) -> bool {
        self.mac_ok.iter().all(|&b| b)
    }

    pub fn all_rvp(&self) -> bool {
        self.rvp_ok.iter().all(|&b| b)
    }
}

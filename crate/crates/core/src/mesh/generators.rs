//! Structured and graded mesh generators.

use std::f64::consts::PI;

use super::{signed_volume_and_gradients, MeshError, Point, Triangulation};

/// Triangulates the tensor grid `xs x ys`, splitting each rectangle along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_tensor_2d(xs: &[f64], ys: &[f64]) -> Result<Triangulation, MeshError> {
    check_grid(xs)?;
    check_grid(ys)?;
    let nx = xs.len();
    let mut vertices = Vec::with_capacity(nx * ys.len());
    for &y in ys {
        for &x in xs {
            vertices.push(Point::new(x, y, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut elements = Vec::with_capacity(2 * (nx - 1) * (ys.len() - 1));
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let (ll, lr, ur, ul) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push(vec![ll, lr, ur]);
            elements.push(vec![ll, ur, ul]);
        }
    }
    Triangulation::new(2, vertices, elements)
}

/// Splits each box of the tensor grid `xs x ys x zs` into the six path
/// simplices of the Kuhn subdivision.
pub fn build_tensor_3d(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<Triangulation, MeshError> {
    check_grid(xs)?;
    check_grid(ys)?;
    check_grid(zs)?;
    let (nx, ny) = (xs.len(), ys.len());
    let mut vertices = Vec::with_capacity(nx * ny * zs.len());
    for &z in zs {
        for &y in ys {
            for &x in xs {
                vertices.push(Point::new(x, y, z));
            }
        }
    }
    let id = |c: [usize; 3]| (c[2] * ny + c[1]) * nx + c[0];
    const PERMUTATIONS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut elements = Vec::new();
    for k in 0..zs.len() - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                for perm in PERMUTATIONS {
                    let mut corner = [i, j, k];
                    let mut tet = vec![id(corner)];
                    for axis in perm {
                        corner[axis] += 1;
                        tet.push(id(corner));
                    }
                    elements.push(tet);
                }
            }
        }
    }
    Triangulation::new(3, vertices, elements)
}

fn check_grid(coords: &[f64]) -> Result<(), MeshError> {
    if coords.len() < 2 || coords.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MeshError::InvalidParameter(
            "grid coordinates must be strictly increasing with at least two entries".into(),
        ));
    }
    Ok(())
}

/// Transition point `min(1/2, 3 eps |ln eps|)` of the Shishkin mesh.
pub fn shishkin_tau(epsilon: f64) -> f64 {
    (3.0 * epsilon * epsilon.ln().abs()).min(0.5)
}

/// Closed-form aspect ratio of the Shishkin mesh with transition point `tau <= 1/2`.
pub fn shishkin_sigma(tau: f64) -> f64 {
    let d = (1.0 + 4.0 * tau * tau).sqrt();
    d / (1.0 + 2.0 * tau - d)
}

/// Piecewise uniform Shishkin coordinates: `N/2` cells on `(0, tau)` and
/// `N/2` cells on `(tau, 1)`.
pub fn shishkin_grid(n: usize, tau: f64) -> Result<Vec<f64>, MeshError> {
    if n < 2 || n % 2 != 0 {
        return Err(MeshError::InvalidParameter(format!(
            "Shishkin parameter N must be even and at least 2, got {n}"
        )));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(MeshError::InvalidParameter(format!(
            "transition point must lie in (0, 1), got {tau}"
        )));
    }
    let half = n / 2;
    Ok((0..=n)
        .map(|i| {
            if i <= half {
                i as f64 * 2.0 * tau / n as f64
            } else {
                tau + (i - half) as f64 * 2.0 * (1.0 - tau) / n as f64
            }
        })
        .collect())
}

/// Shishkin mesh of the unit square with `2 N^2` triangles, refined towards `x_1 = 0`.
pub fn build_shishkin_2d(n: usize, tau: f64) -> Result<Triangulation, MeshError> {
    let xs = shishkin_grid(n, tau)?;
    let ys: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    build_tensor_2d(&xs, &ys)
}

/// Uniform `N x N` mesh of the unit square with the same diagonal pattern.
pub fn build_uniform_2d(n: usize) -> Result<Triangulation, MeshError> {
    build_shishkin_2d(n, 0.5)
}

/// Splits the prism with bottom face `p1 p2 p3` and top face `p4 p5 p6` into
/// the tetrahedra `p1p2p3p6`, `p1p4p5p6` and `p1p2p5p6`.
pub fn subdivide_prism(p: &[Point; 6]) -> Result<[[Point; 4]; 3], MeshError> {
    let tets = prism_tetrahedra([0, 1, 2, 3, 4, 5]).map(|t| t.map(|k| p[k]));
    let mut volume = 0.0;
    let mut diameter: f64 = 0.0;
    for t in &tets {
        let (v, _) = signed_volume_and_gradients(t, 3).unwrap_or((0.0, Default::default()));
        volume += v.abs();
        for a in t {
            for b in t {
                diameter = diameter.max((a - b).norm());
            }
        }
    }
    if !(volume >= super::DEGENERACY_TOLERANCE * diameter.powi(3)) {
        return Err(MeshError::Degenerate { volume, diameter });
    }
    Ok(tets)
}

/// Index form of [`subdivide_prism`]. Neighbouring prisms subdivide
/// conformingly when each bottom triangle lists its vertices in ascending
/// global order.
pub fn prism_tetrahedra(p: [usize; 6]) -> [[usize; 4]; 3] {
    [
        [p[0], p[1], p[2], p[5]],
        [p[0], p[3], p[4], p[5]],
        [p[0], p[1], p[4], p[5]],
    ]
}

/// Radii `r_k = (k / M)^(1/mu)` of the graded rings, `k = 0..=M`.
pub fn sector_radii(rings: usize, mu: f64) -> Vec<f64> {
    (0..=rings)
        .map(|k| (k as f64 / rings as f64).powf(1.0 / mu))
        .collect()
}

fn check_sector(h: f64, mu: f64, omega: f64) -> Result<(), MeshError> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(MeshError::InvalidParameter(format!(
            "grading parameter mu must lie in (0, 1], got {mu}"
        )));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(MeshError::InvalidParameter(format!(
            "mesh size h must lie in (0, 1], got {h}"
        )));
    }
    if !(omega > 0.0 && omega < 2.0 * PI) {
        return Err(MeshError::InvalidParameter(format!(
            "sector angle must lie in (0, 2 pi), got {omega}"
        )));
    }
    Ok(())
}

/// Number of radial rings used for mesh size `h` and grading `mu`.
///
/// Layer widths behave like `r^(1-mu) / (mu M)`, so `M = ceil(1 / (mu h))`
/// gives widths of about `h r^(1-mu)`.
fn ring_count(h: f64, mu: f64) -> usize {
    ((1.0 / (mu * h)) - 1e-9).ceil().max(1.0) as usize
}

/// Isotropic triangulation of the sector `0 < r < 1, 0 < phi < omega` graded
/// towards the origin.
///
/// Ring `k` carries `n_k` angular segments, chosen so that the arc length
/// per segment matches the ring width; neighbouring rings are stitched by
/// advancing along the smaller next angle. The arc `r = 1` is replaced by the
/// polygon through the outer ring.
pub fn build_graded_sector_2d(h: f64, mu: f64, omega: f64) -> Result<Triangulation, MeshError> {
    check_sector(h, mu, omega)?;
    let rings = ring_count(h, mu);
    let radii = sector_radii(rings, mu);
    let mut segments = Vec::with_capacity(rings + 1);
    segments.push(0usize);
    for k in 1..=rings {
        let width = radii[k] - radii[k - 1];
        let n = (omega * radii[k] / width).ceil() as usize;
        let prev = segments[k - 1];
        segments.push(n.max(prev).max(3));
    }

    let mut vertices = vec![Point::zeros()];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        for j in 0..=segments[k] {
            let phi = omega * j as f64 / segments[k] as f64;
            vertices.push(Point::new(radii[k] * phi.cos(), radii[k] * phi.sin(), 0.0));
        }
    }

    let mut elements = Vec::new();
    for j in 0..segments[1] {
        elements.push(vec![0, ring_start[1] + j, ring_start[1] + j + 1]);
    }
    for k in 2..=rings {
        let (m, n) = (segments[k - 1], segments[k]);
        let (a0, b0) = (ring_start[k - 1], ring_start[k]);
        let (mut i, mut j) = (0, 0);
        while i < m || j < n {
            let next_inner = if i < m { (i + 1) as f64 / m as f64 } else { f64::INFINITY };
            let next_outer = if j < n { (j + 1) as f64 / n as f64 } else { f64::INFINITY };
            if next_inner <= next_outer && i < m {
                elements.push(vec![a0 + i, a0 + i + 1, b0 + j]);
                i += 1;
            } else {
                elements.push(vec![a0 + i, b0 + j + 1, b0 + j]);
                j += 1;
            }
        }
    }
    Triangulation::new(2, vertices, elements)
}

/// Parameters and size data of a graded wedge mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedWedge {
    pub h: f64,
    pub mu: f64,
    pub omega: f64,
    pub rings: usize,
    pub layers: usize,
}

impl GradedWedge {
    pub fn new(h: f64, mu: f64, omega: f64) -> Result<Self, MeshError> {
        check_sector(h, mu, omega)?;
        Ok(Self {
            h,
            mu,
            omega,
            rings: ring_count(h, mu),
            layers: ((1.0 / h) - 1e-9).ceil().max(1.0) as usize,
        })
    }

    pub fn radii(&self) -> Vec<f64> {
        sector_radii(self.rings, self.mu)
    }
}

/// Tetrahedral mesh of the wedge `{(r cos phi, r sin phi, z): 0<r<1, 0<phi<omega, 0<z<1}`
/// graded towards the edge `r = 0`.
///
/// The graded sector mesh is extruded into uniform layers of height about
/// `h`; every prism is split into three tetrahedra.
pub fn build_graded_wedge_3d(h: f64, mu: f64, omega: f64) -> Result<Triangulation, MeshError> {
    let params = GradedWedge::new(h, mu, omega)?;
    let base = build_graded_sector_2d(h, mu, omega)?;
    let nv = base.n_vertices();
    let layers = params.layers;
    let mut vertices = Vec::with_capacity(nv * (layers + 1));
    for l in 0..=layers {
        let z = l as f64 / layers as f64;
        vertices.extend(base.vertices().iter().map(|p| Point::new(p.x, p.y, z)));
    }
    let mut elements = Vec::with_capacity(3 * base.n_elements() * layers);
    for l in 0..layers {
        for e in 0..base.n_elements() {
            let mut tri = [0usize; 3];
            tri.copy_from_slice(base.element(e));
            tri.sort_unstable();
            let bottom = tri.map(|v| l * nv + v);
            let top = tri.map(|v| (l + 1) * nv + v);
            let prism = [bottom[0], bottom[1], bottom[2], top[0], top[1], top[2]];
            for tet in prism_tetrahedra(prism) {
                elements.push(tet.to_vec());
            }
        }
    }
    Triangulation::new(3, vertices, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shishkin_element_count_and_area() {
        let mesh = build_shishkin_2d(8, 0.3).unwrap();
        assert_eq!(mesh.n_elements(), 128);
        assert!((mesh.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shishkin_rejects_bad_parameters() {
        assert!(build_shishkin_2d(3, 0.3).is_err());
        assert!(build_shishkin_2d(0, 0.3).is_err());
        assert!(build_shishkin_2d(4, 0.0).is_err());
        assert!(build_shishkin_2d(4, 1.0).is_err());
    }

    #[test]
    fn half_transition_gives_congruent_triangles() {
        let mesh = build_shishkin_2d(2, 0.5).unwrap();
        assert_eq!(mesh.n_elements(), 8);
        for e in 0..8 {
            let g = mesh.geometry(e);
            assert!((g.volume - 0.125).abs() < 1e-15);
            assert!((g.diameter - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn shishkin_tau_values() {
        assert_eq!(shishkin_tau(0.5), 0.5);
        assert!((shishkin_tau(1e-2) - 0.138_155_1).abs() < 1e-7);
        assert!((shishkin_tau(1e-3) - 0.020_723_3).abs() < 1e-7);
    }

    #[test]
    fn shishkin_sigma_formula() {
        let tau = 0.138155;
        assert!((shishkin_sigma(tau) - 4.344).abs() < 1e-3);
        for n in [2, 4, 8, 16] {
            let mesh = build_shishkin_2d(n, tau).unwrap();
            let sigma = mesh.max_aspect_ratio();
            assert!(((sigma - shishkin_sigma(tau)) / sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn kuhn_boxes() {
        let mesh = build_tensor_3d(&[0.0, 0.5, 1.0], &[0.0, 1.0], &[0.0, 0.2, 1.0]).unwrap();
        assert_eq!(mesh.n_elements(), 2 * 2 * 6);
        assert!((mesh.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_prism_split() {
        let p = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(1.0, 0.0, 1.0),
            Point::new(0.0, 1.0, 1.0),
        ];
        let tets = subdivide_prism(&p).unwrap();
        for t in &tets {
            let (v, _) = signed_volume_and_gradients(t, 3).unwrap();
            assert!((v.abs() - 1.0 / 6.0).abs() < 1e-15);
        }
        let mut flat = p;
        for q in flat.iter_mut().skip(3) {
            q.z = 0.0;
        }
        assert!(subdivide_prism(&flat).is_err());
    }

    #[test]
    fn sector_area_matches_polygon() {
        for mu in [1.0, 0.4] {
            let omega = 1.5 * PI;
            let mesh = build_graded_sector_2d(0.25, mu, omega).unwrap();
            // the outer polygon replaces each arc segment by its chord
            let rings = ring_count(0.25, mu);
            let outer = mesh
                .vertices()
                .iter()
                .filter(|p| (p.norm() - 1.0).abs() < 1e-12)
                .count()
                - 1;
            let dphi = omega / outer as f64;
            let polygon = 0.5 * outer as f64 * dphi.sin();
            assert!(((mesh.volume() - polygon) / polygon).abs() < 1e-12, "rings {rings}");
        }
    }

    #[test]
    fn graded_wedge_rejects_bad_mu() {
        assert!(build_graded_wedge_3d(0.5, 0.0, 1.5 * PI).is_err());
        assert!(build_graded_wedge_3d(0.5, 1.2, 1.5 * PI).is_err());
        assert!(build_graded_wedge_3d(0.5, 0.4, 1.5 * PI).is_ok());
    }
}

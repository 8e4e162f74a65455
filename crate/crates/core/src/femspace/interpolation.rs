//! Interpolation and projection operators.
//!
//! Inputs are elementwise callbacks `(element, point) -> value`, so both
//! smooth fields (ignore the element) and broken discrete fields can be
//! interpolated. Facet integrals of broken fields read the owner side unless
//! stated otherwise.

use super::{facet_moment_functions, facet_points, FemError, FieldFunction, Space, SpaceKind};
use crate::mesh::Point;
use crate::quadrature::{facet_rule, simplex_rule};

/// Facet quadrature degree used for facet means unless overridden.
pub const DEFAULT_FACET_DEGREE: usize = 4;

fn expect_kind(space: &Space, kind: SpaceKind, name: &'static str) -> Result<(), FemError> {
    if space.kind() == kind {
        Ok(())
    } else {
        Err(FemError::WrongSpace {
            expected: name,
            found: space.kind(),
        })
    }
}

fn finite(v: &Point, element: usize) -> Result<Point, FemError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(*v)
    } else {
        Err(FemError::NonFinite { element })
    }
}

/// CR interpolation: every dof is the facet mean of `v`.
pub fn interpolate_cr<'s, 'm, V>(
    space: &'s Space<'m>,
    v: V,
    facet_degree: usize,
) -> Result<FieldFunction<'s, 'm>, FemError>
where
    V: Fn(usize, &Point) -> Point,
{
    expect_kind(space, SpaceKind::CrVelocity, "Crouzeix-Raviart")?;
    let mesh = space.mesh();
    let d = mesh.dim();
    let rule = facet_rule(d, facet_degree)?;
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (f, facet) in mesh.facets().iter().enumerate() {
        let e = facet.owner.0;
        let mut mean = Point::zeros();
        for (x, w, _) in facet_points(mesh, f, &rule) {
            mean += w * finite(&v(e, &x), e)?;
        }
        coeffs[f * d..f * d + d].copy_from_slice(&mean.as_slice()[..d]);
    }
    FieldFunction::new(space, coeffs)
}

/// RT0 interpolation: every dof is the facet-mean normal flux of `v`
/// against the global facet normal.
pub fn interpolate_rt<'s, 'm, V>(
    space: &'s Space<'m>,
    v: V,
    facet_degree: usize,
) -> Result<FieldFunction<'s, 'm>, FemError>
where
    V: Fn(usize, &Point) -> Point,
{
    expect_kind(space, SpaceKind::Rt0, "Raviart-Thomas")?;
    let mesh = space.mesh();
    let rule = facet_rule(mesh.dim(), facet_degree)?;
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (f, facet) in mesh.facets().iter().enumerate() {
        let e = facet.owner.0;
        let n = mesh.facet_geometry(f).normal;
        for (x, w, _) in facet_points(mesh, f, &rule) {
            coeffs[f] += w * finite(&v(e, &x), e)?.dot(&n);
        }
    }
    FieldFunction::new(space, coeffs)
}

/// BDM1 interpolation. On interior facets the P1 normal moments of the
/// two-sided average of `v` are matched; on boundary facets only the mean
/// flux is kept, as for RT0.
pub fn interpolate_bdm<'s, 'm, V>(
    space: &'s Space<'m>,
    v: V,
    facet_degree: usize,
) -> Result<FieldFunction<'s, 'm>, FemError>
where
    V: Fn(usize, &Point) -> Point,
{
    expect_kind(space, SpaceKind::Bdm1, "BDM1")?;
    let mesh = space.mesh();
    let d = mesh.dim();
    let rule = facet_rule(d, facet_degree)?;
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (f, facet) in mesh.facets().iter().enumerate() {
        let n = mesh.facet_geometry(f).normal;
        let owner = facet.owner.0;
        for (x, w, mu) in facet_points(mesh, f, &rule) {
            let q = facet_moment_functions(d, &mu);
            match facet.neighbor {
                Some((nb, _)) => {
                    let avg = 0.5 * (finite(&v(owner, &x), owner)? + finite(&v(nb, &x), nb)?);
                    let flux = avg.dot(&n);
                    for m in 0..d {
                        coeffs[f * d + m] += w * q[m] * flux;
                    }
                }
                None => coeffs[f * d] += w * finite(&v(owner, &x), owner)?.dot(&n),
            }
        }
    }
    FieldFunction::new(space, coeffs)
}

/// Nodal interpolation into vector P1 Lagrange.
pub fn interpolate_lagrange_p1<'s, 'm, V>(space: &'s Space<'m>, v: V) -> Result<FieldFunction<'s, 'm>, FemError>
where
    V: Fn(&Point) -> Point,
{
    expect_kind(space, SpaceKind::P1Lagrange, "P1 Lagrange")?;
    let mesh = space.mesh();
    let d = mesh.dim();
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (k, p) in mesh.vertices().iter().enumerate() {
        let val = v(p);
        if !val.iter().all(|c| c.is_finite()) {
            return Err(FemError::NonFinite { element: usize::MAX });
        }
        coeffs[k * d..k * d + d].copy_from_slice(&val.as_slice()[..d]);
    }
    FieldFunction::new(space, coeffs)
}

/// Elementwise mean of a scalar function into a one-component P0 space.
pub fn project_p0<'s, 'm, Q>(space: &'s Space<'m>, q: Q, degree: usize) -> Result<FieldFunction<'s, 'm>, FemError>
where
    Q: Fn(usize, &Point) -> f64,
{
    project_p0_vector(space, |e, x| Point::new(q(e, x), 0.0, 0.0), degree)
}

/// Elementwise mean of a vector function into a P0 space; only the first
/// `components` entries are kept.
pub fn project_p0_vector<'s, 'm, V>(
    space: &'s Space<'m>,
    v: V,
    degree: usize,
) -> Result<FieldFunction<'s, 'm>, FemError>
where
    V: Fn(usize, &Point) -> Point,
{
    let components = match space.kind() {
        SpaceKind::P0 { components } => components,
        found => return Err(FemError::WrongSpace { expected: "P0", found }),
    };
    let mesh = space.mesh();
    let rule = simplex_rule(mesh.dim(), degree)?;
    let reference = rule.reference_measure();
    let mut coeffs = vec![0.0; space.n_dofs()];
    for e in 0..mesh.n_elements() {
        let pts = mesh.element_points(e);
        let mut mean = Point::zeros();
        for (x, w) in rule.on_simplex(&pts, reference) {
            mean += (w / reference) * finite(&v(e, &x), e)?;
        }
        for c in 0..components.min(3) {
            coeffs[e * components + c] = mean[c];
        }
    }
    FieldFunction::new(space, coeffs)
}

/// Jump and average of a broken field at one facet quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpAverage {
    pub point: Point,
    pub jump: Point,
    pub average: Point,
}

/// Jump `v|T1 - v|T2` and average with `T1` the owner of facet `f`. On
/// boundary facets both equal the one-sided trace.
pub fn jump_average<V>(
    mesh: &crate::mesh::Triangulation,
    f: usize,
    v: V,
    facet_degree: usize,
) -> Result<Vec<JumpAverage>, FemError>
where
    V: Fn(usize, &Point) -> Point,
{
    let rule = facet_rule(mesh.dim(), facet_degree)?;
    let facet = mesh.facet(f);
    facet_points(mesh, f, &rule)
        .map(|(x, _, _)| {
            let a = finite(&v(facet.owner.0, &x), facet.owner.0)?;
            Ok(match facet.neighbor {
                Some((nb, _)) => {
                    let b = finite(&v(nb, &x), nb)?;
                    JumpAverage {
                        point: x,
                        jump: a - b,
                        average: 0.5 * (a + b),
                    }
                }
                None => JumpAverage {
                    point: x,
                    jump: a,
                    average: a,
                },
            })
        })
        .collect()
}

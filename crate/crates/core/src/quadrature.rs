//! Quadrature rules on reference simplices.
//!
//! Points are stored in barycentric coordinates so a rule can be pushed onto
//! any physical simplex without going through an explicit affine map. The
//! underlying tables are the symmetric, positive-weight polyquad rules for
//! triangles and tetrahedra and Gauss-Legendre rules on the segment.

use fenris_quadrature::{polyquad, univariate};
use thiserror::Error;

use crate::mesh::Point;

/// Highest exactness degree available for segments.
pub const MAX_DEGREE_1D: usize = 39;
/// Highest exactness degree available for triangles.
pub const MAX_DEGREE_2D: usize = 20;
/// Highest exactness degree available for tetrahedra.
pub const MAX_DEGREE_3D: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature on a {0}-simplex is not supported (dimensions 1, 2 and 3 only)")]
    UnsupportedDimension(usize),
    #[error("no {dim}D rule of degree {degree}; maximum available degree is {max}")]
    UnsupportedDegree { dim: usize, degree: usize, max: usize },
}

/// A quadrature rule on the reference `dim`-simplex with vertices `0, e_1, ..., e_dim`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    degree: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of the points; entries beyond `dim + 1` are zero.
    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    /// Weights on the reference simplex. They sum to `1 / dim!`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Measure of the reference simplex.
    pub fn reference_measure(&self) -> f64 {
        reference_measure(self.dim)
    }

    /// Iterates over `(physical point, weight)` pairs on a simplex with the given
    /// vertices and measure. Weights sum to `measure`.
    pub fn on_simplex<'a>(
        &'a self,
        vertices: &'a [Point],
        measure: f64,
    ) -> impl Iterator<Item = (Point, f64)> + 'a {
        let scale = measure / self.reference_measure();
        self.points.iter().zip(&self.weights).map(move |(bary, &w)| {
            let mut x = Point::zeros();
            for (lambda, v) in bary.iter().zip(vertices) {
                x += *lambda * v;
            }
            (x, w * scale)
        })
    }
}

/// Measure of the reference `dim`-simplex, `1 / dim!`.
pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        0 | 1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => f64::NAN,
    }
}

/// Rule exact for polynomials of total degree `degree` on the reference `dim`-simplex.
///
/// A request for degree 0 is served with a degree 1 rule.
pub fn simplex_rule(dim: usize, degree: usize) -> Result<QuadratureRule, QuadratureError> {
    let degree = degree.max(1);
    let max = match dim {
        1 => MAX_DEGREE_1D,
        2 => MAX_DEGREE_2D,
        3 => MAX_DEGREE_3D,
        _ => return Err(QuadratureError::UnsupportedDimension(dim)),
    };
    if degree > max {
        return Err(QuadratureError::UnsupportedDegree { dim, degree, max });
    }
    // The tables live on [-1, 1]-based reference simplices; x = (xi + 1) / 2
    // maps them onto the unit simplex and scales weights by 2^-dim.
    let (weights, points) = match dim {
        1 => {
            let (w, p) = univariate::gauss(degree / 2 + 1);
            (w, p.into_iter().map(|[x]| [x, -1.0, -1.0]).collect::<Vec<_>>())
        }
        2 => {
            let (w, p) = polyquad::triangle(degree).map_err(|_| QuadratureError::UnsupportedDegree {
                dim,
                degree,
                max,
            })?;
            (w, p.into_iter().map(|[x, y]| [x, y, -1.0]).collect())
        }
        _ => polyquad::tetrahedron(degree).map_err(|_| QuadratureError::UnsupportedDegree {
            dim,
            degree,
            max,
        })?,
    };
    let jacobian = 0.5f64.powi(dim as i32);
    let points = points
        .into_iter()
        .map(|xi| {
            let mut bary = [0.0; 4];
            let mut sum = 0.0;
            for k in 0..dim {
                let x = 0.5 * (xi[k] + 1.0);
                bary[k + 1] = x;
                sum += x;
            }
            bary[0] = 1.0 - sum;
            bary
        })
        .collect();
    let weights = weights.into_iter().map(|w| w * jacobian).collect();
    Ok(QuadratureRule {
        dim,
        degree,
        points,
        weights,
    })
}

/// Rule on a facet of a `dim`-simplex, i.e. on the reference `(dim - 1)`-simplex.
pub fn facet_rule(dim: usize, degree: usize) -> Result<QuadratureRule, QuadratureError> {
    match dim {
        2 | 3 => simplex_rule(dim - 1, degree),
        _ => Err(QuadratureError::UnsupportedDimension(dim)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of prod x_i^{a_i} over the unit simplex: prod(a_i!) / (sum a_i + dim)!.
    fn monomial_integral(exps: &[u32]) -> f64 {
        let num: f64 = exps.iter().map(|&a| factorial(a)).product();
        num / factorial(exps.iter().sum::<u32>() + exps.len() as u32)
    }

    fn integrate_monomial(rule: &QuadratureRule, exps: &[u32]) -> f64 {
        rule.points()
            .iter()
            .zip(rule.weights())
            .map(|(b, w)| {
                w * exps
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| b[k + 1].powi(a as i32))
                    .product::<f64>()
            })
            .sum()
    }

    fn exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
        let mut out = vec![];
        match dim {
            1 => (0..=degree).for_each(|a| out.push(vec![a])),
            2 => {
                for a in 0..=degree {
                    for b in 0..=degree - a {
                        out.push(vec![a, b]);
                    }
                }
            }
            _ => {
                for a in 0..=degree {
                    for b in 0..=degree - a {
                        for c in 0..=degree - a - b {
                            out.push(vec![a, b, c]);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn monomial_exactness_sweep() {
        for (dim, max) in [(1, MAX_DEGREE_1D), (2, MAX_DEGREE_2D), (3, MAX_DEGREE_3D)] {
            for degree in 1..=max {
                let rule = simplex_rule(dim, degree).unwrap();
                for exps in exponents(dim, degree as u32) {
                    let exact = monomial_integral(&exps);
                    let approx = integrate_monomial(&rule, &exps);
                    assert!(
                        ((approx - exact) / exact).abs() < 1e-13,
                        "dim {dim} degree {degree} monomial {exps:?}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for (dim, max) in [(1, MAX_DEGREE_1D), (2, MAX_DEGREE_2D), (3, MAX_DEGREE_3D)] {
            for degree in 1..=max {
                let rule = simplex_rule(dim, degree).unwrap();
                let sum: f64 = rule.weights().iter().sum();
                assert!((sum - reference_measure(dim)).abs() < 1e-14);
                for (b, w) in rule.points().iter().zip(rule.weights()) {
                    assert!(w.is_finite());
                    assert!(b[..=dim].iter().all(|&l| l >= -1e-15 && l <= 1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn degree_one_triangle_is_midpoint() {
        let rule = simplex_rule(2, 1).unwrap();
        assert_eq!(rule.len(), 1);
        assert!((rule.weights()[0] - 0.5).abs() < 1e-15);
        for l in &rule.points()[0][..3] {
            assert!((l - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn frozen_monomial_values() {
        // 2! 3! / 7!
        let rule = simplex_rule(2, 5).unwrap();
        assert!((integrate_monomial(&rule, &[2, 3]) - 1.0 / 420.0).abs() < 1e-14);
        let rule = simplex_rule(3, 4).unwrap();
        assert!((integrate_monomial(&rule, &[4, 0, 0]) - 1.0 / 210.0).abs() < 1e-14);
    }

    #[test]
    fn facet_rules() {
        let edge = facet_rule(2, 1).unwrap();
        assert_eq!(edge.len(), 1);
        assert!((edge.weights()[0] - 1.0).abs() < 1e-15);
        assert!((edge.points()[0][1] - 0.5).abs() < 1e-15);

        let tri = facet_rule(3, 2).unwrap();
        for exps in exponents(2, 2) {
            let exact = monomial_integral(&exps);
            assert!((integrate_monomial(&tri, &exps) - exact).abs() < 1e-15);
        }

        let zero = facet_rule(2, 0).unwrap();
        assert_eq!(zero.degree(), 1);
    }

    #[test]
    fn unsupported_requests() {
        let err = simplex_rule(3, 11).unwrap_err();
        assert_eq!(
            err,
            QuadratureError::UnsupportedDegree { dim: 3, degree: 11, max: 10 }
        );
        assert!(err.to_string().contains("maximum available degree is 10"));
        assert!(simplex_rule(4, 2).is_err());
        assert!(facet_rule(1, 2).is_err());
    }
}

//! Lagrange interpolation of degree `k` on a tetrahedron.
//!
//! Bases are built in the affine frame that maps the element onto the unit
//! reference tetrahedron, so the nodal Vandermonde matrix depends on `k` only
//! and is factored once per degree.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ResidualField, ScalarField};
use crate::geom::{Point3, Tetrahedron};
use crate::lattice::{bary_indices, check_degree, sigma_k, LatticeNode, MultiIndex};
use crate::poly::{AffineFrame, Polynomial3};

pub const MAX_DEGREE: usize = 8;

/// Relative residual `||V V^{-1} - I||_max` above which the basis is refused.
pub const BASIS_RESIDUAL_TOL: f64 = 1e-8;

struct NodalBasis {
    monomials: Vec<MultiIndex>,
    inverse: DMatrix<f64>,
}

fn nodal_basis(k: usize) -> Result<&'static NodalBasis> {
    static CACHE: [OnceLock<std::result::Result<NodalBasis, Error>>; MAX_DEGREE + 1] =
        [const { OnceLock::new() }; MAX_DEGREE + 1];
    check_degree(k)?;
    if k > MAX_DEGREE {
        return Err(Error::InvalidDegree {
            k,
            reason: format!("interpolation supports degrees up to {MAX_DEGREE}"),
        });
    }
    CACHE[k].get_or_init(|| build_basis(k)).as_ref().map_err(Clone::clone)
}

fn build_basis(k: usize) -> Result<NodalBasis> {
    let monomials = MultiIndex::all_up_to(k);
    let nodes: Vec<Point3> = bary_indices(k)
        .into_iter()
        .map(|g| g.local())
        .map(|m| Point3::new(m.0[0] as f64, m.0[1] as f64, m.0[2] as f64) / k as f64)
        .collect();
    let n = monomials.len();
    let v = DMatrix::from_fn(n, n, |i, j| {
        let a = monomials[j].0;
        let p = nodes[i];
        p.x.powi(a[0] as i32) * p.y.powi(a[1] as i32) * p.z.powi(a[2] as i32)
    });
    let condition_of = |inv: &DMatrix<f64>| one_norm(&v) * one_norm(inv);
    let inverse = v.clone().lu().try_inverse().ok_or(Error::IllConditionedBasis {
        residual: f64::INFINITY,
        condition: f64::INFINITY,
    })?;
    let residual = (&v * &inverse - DMatrix::identity(n, n)).amax();
    if residual > BASIS_RESIDUAL_TOL {
        return Err(Error::IllConditionedBasis {
            residual,
            condition: condition_of(&inverse),
        });
    }
    Ok(NodalBasis { monomials, inverse })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// Condition estimate `||V||_1 ||V^{-1}||_1` of the degree-`k` nodal matrix.
pub fn basis_condition(k: usize) -> Result<f64> {
    let b = nodal_basis(k)?;
    let monomials = &b.monomials;
    let nodes: Vec<MultiIndex> = bary_indices(k).into_iter().map(|g| g.local()).collect();
    let n = monomials.len();
    let v = DMatrix::from_fn(n, n, |i, j| {
        (0..3)
            .map(|a| (nodes[i].0[a] as f64 / k as f64).powi(monomials[j].0[a] as i32))
            .product::<f64>()
    });
    Ok(one_norm(&v) * one_norm(&b.inverse))
}

fn from_coefficients(frame: AffineFrame, monomials: &[MultiIndex], c: &DVector<f64>) -> Polynomial3 {
    Polynomial3::in_frame(frame, monomials.iter().copied().zip(c.iter().copied()))
}

/// The `C(k+3, 3)` Lagrange basis polynomials, in the node order of
/// [`sigma_k`].
pub fn lagrange_basis(t: &Tetrahedron, k: usize) -> Result<Vec<Polynomial3>> {
    let b = nodal_basis(k)?;
    let frame = AffineFrame::of_tetrahedron(t);
    Ok((0..b.inverse.ncols())
        .map(|i| from_coefficients(frame, &b.monomials, &b.inverse.column(i).into_owned()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpolant {
    pub k: usize,
    pub tetrahedron: Tetrahedron,
    pub poly: Polynomial3,
    pub nodes: Vec<LatticeNode>,
    pub values: Vec<f64>,
}

impl Interpolant {
    pub fn eval(&self, x: &Point3) -> f64 {
        self.poly.eval(x)
    }

    /// Largest `|I v(x_i) - v(x_i)|` over the nodes.
    pub fn max_nodal_residual(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(n, v)| (self.poly.eval(&n.point) - v).abs())
            .fold(0.0, f64::max)
    }
}

/// `I^k_T v`.
pub fn interpolate(v: &dyn ScalarField, t: &Tetrahedron, k: usize) -> Result<Interpolant> {
    interpolate_values(t, k, |x| v.eval(x))
}

pub fn interpolate_values(t: &Tetrahedron, k: usize, v: impl Fn(&Point3) -> f64) -> Result<Interpolant> {
    let b = nodal_basis(k)?;
    let nodes = sigma_k(t, k)?;
    let values: Vec<f64> = nodes.iter().map(|n| v(&n.point)).collect();
    let c = &b.inverse * DVector::from_column_slice(&values);
    Ok(Interpolant {
        k,
        tetrahedron: *t,
        poly: from_coefficients(AffineFrame::of_tetrahedron(t), &b.monomials, &c),
        nodes,
        values,
    })
}

/// `v - I^k_T v`.
pub fn residual<'a>(v: &'a dyn ScalarField, t: &Tetrahedron, k: usize) -> Result<ResidualField<'a>> {
    Ok(ResidualField {
        v,
        p: interpolate(v, t, k)?.poly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Reference;
    use approx::assert_relative_eq;

    #[test]
    fn kronecker_property() {
        let t = Tetrahedron::from_coords([[0., 0., 0.], [2., 0., 0.], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]]).unwrap();
        for k in 1..=MAX_DEGREE {
            let basis = lagrange_basis(&t, k).unwrap();
            let nodes = sigma_k(&t, k).unwrap();
            for (i, phi) in basis.iter().enumerate() {
                for (j, n) in nodes.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((phi.eval(&n.point) - expect).abs() < 1e-9, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let t = Reference::Tilde.tetrahedron();
        let basis = lagrange_basis(&t, 3).unwrap();
        let x = Point3::new(0.2, 0.1, 0.3);
        let s: f64 = basis.iter().map(|p| p.eval(&x)).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_basis_is_barycentric() {
        let t = Tetrahedron::from_coords([[0., 0., 0.], [2., 0., 0.], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]]).unwrap();
        let basis = lagrange_basis(&t, 1).unwrap();
        let x = Point3::new(0.5, 0.2, 0.1);
        let l = t.barycentric(&x);
        for i in 0..4 {
            assert_relative_eq!(basis[i].eval(&x), l[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn reproduces_own_degree() {
        let t = Tetrahedron::from_coords([[1., 0., 0.], [2., 0.1, 0.], [1.3, 0.4, 0.], [1.2, 0.3, 0.02]]).unwrap();
        let q = Polynomial3::from_coeffs([
            (MultiIndex::new(1, 1, 1), 2.0),
            (MultiIndex::new(0, 3, 0), -1.0),
            (MultiIndex::new(1, 0, 0), 0.5),
        ]);
        let i = interpolate(&q, &t, 3).unwrap();
        for x in [t.centroid(), Point3::new(1.4, 0.1, 0.01)] {
            assert_relative_eq!(i.eval(&x), q.eval(&x), max_relative = 1e-10);
        }
        assert!(i.max_nodal_residual() < 1e-12);
    }

    #[test]
    fn degree_limits() {
        let t = Reference::Hat.tetrahedron();
        assert!(matches!(lagrange_basis(&t, 0), Err(Error::InvalidDegree { .. })));
        assert!(matches!(lagrange_basis(&t, 9), Err(Error::InvalidDegree { .. })));
        assert!(basis_condition(8).unwrap().is_finite());
    }
}

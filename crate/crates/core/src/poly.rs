//! Polynomials in three variables, stored in monomial form relative to an
//! affine frame `xi = map (x - origin)`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{PartialEval, ScalarField};
use crate::geom::{volume, Point3, Tetrahedron};
use crate::lattice::{factorial_f64, MultiIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFrame {
    pub origin: Point3,
    pub map: Matrix3<f64>,
}

impl Default for AffineFrame {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineFrame {
    pub fn identity() -> Self {
        AffineFrame {
            origin: Point3::zeros(),
            map: Matrix3::identity(),
        }
    }

    /// Frame in which `t` becomes the unit reference tetrahedron, vertex 0
    /// at the origin and vertex `i` at `e_i`.
    pub fn of_tetrahedron(t: &Tetrahedron) -> Self {
        AffineFrame {
            origin: t.v[0],
            // Pivoted LU; the cofactor inverse loses the determinant on needles.
            map: t.edge_matrix().full_piv_lu().try_inverse().unwrap_or_else(Matrix3::zeros),
        }
    }

    pub fn local(&self, x: &Point3) -> Point3 {
        self.map * (x - self.origin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial3 {
    frame: AffineFrame,
    coeffs: BTreeMap<MultiIndex, f64>,
}

fn monomial(a: MultiIndex, xi: &Point3) -> f64 {
    xi.x.powi(a.0[0] as i32) * xi.y.powi(a.0[1] as i32) * xi.z.powi(a.0[2] as i32)
}

impl Polynomial3 {
    pub fn zero(frame: AffineFrame) -> Self {
        Polynomial3 {
            frame,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coeffs([(MultiIndex::ZERO, c)])
    }

    /// Polynomial in the global coordinates.
    pub fn from_coeffs(coeffs: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        Self::in_frame(AffineFrame::identity(), coeffs)
    }

    pub fn in_frame(frame: AffineFrame, coeffs: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(frame);
        for (a, c) in coeffs {
            p.add_term(a, c);
        }
        p
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(axis: usize) -> Self {
        Self::from_coeffs([(MultiIndex::unit(axis), 1.0)])
    }

    pub fn frame(&self) -> &AffineFrame {
        &self.frame
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.coeffs.iter().map(|(a, c)| (*a, *c))
    }

    pub fn coeff(&self, a: MultiIndex) -> f64 {
        self.coeffs.get(&a).copied().unwrap_or(0.0)
    }

    fn add_term(&mut self, a: MultiIndex, c: f64) {
        if c != 0.0 {
            *self.coeffs.entry(a).or_insert(0.0) += c;
        }
    }

    /// Largest order among nonzero coefficients; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(a, _)| a.order())
            .max()
            .unwrap_or(0)
    }

    pub fn eval_local(&self, xi: &Point3) -> f64 {
        self.coeffs.iter().map(|(a, c)| c * monomial(*a, xi)).sum()
    }

    pub fn eval(&self, x: &Point3) -> f64 {
        self.eval_local(&self.frame.local(x))
    }

    /// Derivative with respect to the frame coordinate `xi_axis`.
    pub fn partial_local(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.frame);
        for (a, c) in &self.coeffs {
            let e = a.0[axis];
            if e > 0 {
                let mut b = *a;
                b.0[axis] -= 1;
                out.add_term(b, c * e as f64);
            }
        }
        out
    }

    /// Derivative with respect to the global coordinate `x_axis`.
    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.frame);
        for j in 0..3 {
            let w = self.frame.map[(j, axis)];
            if w != 0.0 {
                out = &out + &self.partial_local(j).scale(w);
            }
        }
        out
    }

    pub fn derivative(&self, gamma: MultiIndex) -> Self {
        let mut p = self.clone();
        for axis in 0..3 {
            for _ in 0..gamma.0[axis] {
                p = p.partial(axis);
            }
        }
        p
    }

    pub fn gradient(&self, x: &Point3) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.partial(i).eval(x))
    }

    pub fn hessian(&self, x: &Point3) -> Matrix3<f64> {
        let g: Vec<Self> = (0..3).map(|i| self.partial(i)).collect();
        Matrix3::from_fn(|i, j| g[i].partial(j).eval(x))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.frame);
        for (a, c) in &self.coeffs {
            out.add_term(*a, c * s);
        }
        out
    }

    /// The same function expressed in `frame`.
    pub fn to_frame(&self, frame: &AffineFrame) -> Self {
        if *frame == self.frame {
            return self.clone();
        }
        // xi = c + L zeta with zeta the new local coordinates.
        let inv = frame.map.full_piv_lu().try_inverse().unwrap_or_else(Matrix3::zeros);
        let l = self.frame.map * inv;
        let c = self.frame.map * (frame.origin - self.frame.origin);
        let xi: Vec<Polynomial3> = (0..3)
            .map(|i| {
                Self::in_frame(
                    *frame,
                    [
                        (MultiIndex::ZERO, c[i]),
                        (MultiIndex::unit(0), l[(i, 0)]),
                        (MultiIndex::unit(1), l[(i, 1)]),
                        (MultiIndex::unit(2), l[(i, 2)]),
                    ],
                )
            })
            .collect();
        let deg = self.degree();
        let mut powers: Vec<Vec<Polynomial3>> = Vec::with_capacity(3);
        for x in &xi {
            let mut row = vec![Self::in_frame(*frame, [(MultiIndex::ZERO, 1.0)])];
            for e in 1..=deg {
                let next = &row[e - 1] * x;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Self::zero(*frame);
        for (a, coef) in &self.coeffs {
            let [i, j, k] = a.0.map(|e| e as usize);
            let term = &(&powers[0][i] * &powers[1][j]) * &powers[2][k];
            out = &out + &term.scale(*coef);
        }
        out
    }

    /// Exact integral over `t` via the simplex moment formula
    /// `int_{T_ref} xi^a = a! / (|a| + 3)!`.
    pub fn integrate(&self, t: &Tetrahedron) -> Result<f64> {
        let vol = volume(t)?;
        let local = self.to_frame(&AffineFrame::of_tetrahedron(t));
        let sum: f64 = local
            .coeffs
            .iter()
            .map(|(a, c)| c * a.0.iter().map(|&e| factorial_f64(e)).product::<f64>() / factorial_f64(a.order() as u32 + 3))
            .sum();
        Ok(6.0 * vol * sum)
    }

    /// Drop coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|_, c| c.abs() > tol);
        out
    }
}

impl Add for &Polynomial3 {
    type Output = Polynomial3;
    fn add(self, o: &Polynomial3) -> Polynomial3 {
        let o = o.to_frame(&self.frame);
        let mut out = self.clone();
        for (a, c) in o.coeffs {
            out.add_term(a, c);
        }
        out
    }
}

impl Neg for &Polynomial3 {
    type Output = Polynomial3;
    fn neg(self) -> Polynomial3 {
        self.scale(-1.0)
    }
}

impl Sub for &Polynomial3 {
    type Output = Polynomial3;
    fn sub(self, o: &Polynomial3) -> Polynomial3 {
        self + &(-o)
    }
}

impl Mul for &Polynomial3 {
    type Output = Polynomial3;
    fn mul(self, o: &Polynomial3) -> Polynomial3 {
        let o = o.to_frame(&self.frame);
        let mut out = Polynomial3::zero(self.frame);
        for (a, c) in &self.coeffs {
            for (b, d) in &o.coeffs {
                out.add_term(*a + *b, c * d);
            }
        }
        out
    }
}

impl ScalarField for Polynomial3 {
    fn order(&self) -> usize {
        usize::MAX
    }

    fn eval(&self, p: &Point3) -> f64 {
        Polynomial3::eval(self, p)
    }

    fn partial(&self, gamma: MultiIndex, p: &Point3) -> Result<f64> {
        Ok(self.derivative(gamma).eval(p))
    }

    fn partial_fn(&self, gamma: MultiIndex) -> Result<PartialEval<'_>> {
        let d = self.derivative(gamma);
        Ok(Box::new(move |x| Ok(d.eval(x))))
    }

    fn as_polynomial(&self) -> Option<&Polynomial3> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Reference;
    use approx::assert_relative_eq;

    fn sample() -> Polynomial3 {
        Polynomial3::from_coeffs([
            (MultiIndex::new(2, 0, 1), 1.5),
            (MultiIndex::new(0, 1, 0), -2.0),
            (MultiIndex::new(1, 1, 1), 0.25),
            (MultiIndex::ZERO, 3.0),
        ])
    }

    fn direct(x: &Point3) -> f64 {
        1.5 * x.x * x.x * x.z - 2.0 * x.y + 0.25 * x.x * x.y * x.z + 3.0
    }

    #[test]
    fn evaluation_and_degree() {
        let p = sample();
        let x = Point3::new(0.3, -1.2, 0.7);
        assert_relative_eq!(p.eval(&x), direct(&x), epsilon = 1e-14);
        assert_eq!(p.degree(), 3);
        assert_eq!(Polynomial3::zero(AffineFrame::identity()).degree(), 0);
    }

    #[test]
    fn frame_change_preserves_values() {
        let t = Tetrahedron::from_coords([[0.1, 0.2, 0.], [2., 0., 0.3], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]])
            .unwrap();
        let p = sample();
        let q = p.to_frame(&AffineFrame::of_tetrahedron(&t));
        for x in [Point3::new(0.3, -1.2, 0.7), Point3::new(4.0, 2.0, -1.0)] {
            assert_relative_eq!(q.eval(&x), direct(&x), max_relative = 1e-12);
        }
        let back = q.to_frame(&AffineFrame::identity()).pruned(1e-12);
        for (a, c) in p.coeffs() {
            assert_relative_eq!(back.coeff(a), c, epsilon = 1e-12);
        }
    }

    #[test]
    fn global_partials_in_local_frame() {
        let t = Tetrahedron::from_coords([[0.1, 0.2, 0.], [2., 0., 0.3], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]])
            .unwrap();
        let q = sample().to_frame(&AffineFrame::of_tetrahedron(&t));
        let x = Point3::new(0.3, -1.2, 0.7);
        // d/dx: 3 x z + 0.25 y z
        assert_relative_eq!(q.partial(0).eval(&x), 3.0 * 0.3 * 0.7 + 0.25 * -1.2 * 0.7, epsilon = 1e-12);
        // d^2/dxdz: 3 x + 0.25 y
        let d = q.derivative(MultiIndex::new(1, 0, 1));
        assert_relative_eq!(d.eval(&x), 0.9 - 0.3, epsilon = 1e-12);
        assert_eq!(q.derivative(MultiIndex::new(0, 0, 2)).pruned(1e-12).degree(), 0);
    }

    #[test]
    fn product_and_sum() {
        let x = Polynomial3::coordinate(0);
        let y = Polynomial3::coordinate(1);
        let p = &(&x + &y) * &(&x - &y);
        let pt = Point3::new(1.5, 0.5, 9.0);
        assert_relative_eq!(p.eval(&pt), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn moments_of_reference() {
        let t = Reference::Hat.tetrahedron();
        assert_relative_eq!(Polynomial3::constant(1.0).integrate(&t).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        // int x = 1/24, int x y z = 1/720
        assert_relative_eq!(Polynomial3::coordinate(0).integrate(&t).unwrap(), 1.0 / 24.0, epsilon = 1e-15);
        let xyz = &(&Polynomial3::coordinate(0) * &Polynomial3::coordinate(1)) * &Polynomial3::coordinate(2);
        assert_relative_eq!(xyz.integrate(&t).unwrap(), 1.0 / 720.0, epsilon = 1e-15);
    }
}

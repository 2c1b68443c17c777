//! Scalar fields with partial derivatives up to a declared order.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::lattice::MultiIndex;
use crate::poly::Polynomial3;

pub type PartialEval<'a> = Box<dyn Fn(&Point3) -> Result<f64> + Send + Sync + 'a>;

pub trait ScalarField: Send + Sync {
    /// Highest derivative order available; `usize::MAX` for polynomials.
    fn order(&self) -> usize;

    fn eval(&self, p: &Point3) -> f64;

    fn partial(&self, gamma: MultiIndex, p: &Point3) -> Result<f64>;

    /// Evaluator for a fixed partial, letting implementations precompute.
    fn partial_fn(&self, gamma: MultiIndex) -> Result<PartialEval<'_>> {
        check_order(gamma.order(), self.order())?;
        Ok(Box::new(move |x| self.partial(gamma, x)))
    }

    fn as_polynomial(&self) -> Option<&Polynomial3> {
        None
    }

    /// True when derivatives are finite-difference estimates.
    fn is_approximate(&self) -> bool {
        false
    }
}

pub(crate) fn check_order(requested: usize, available: usize) -> Result<()> {
    if requested > available {
        Err(Error::DerivativeUnavailable {
            requested,
            available,
        })
    } else {
        Ok(())
    }
}

type EvalFn = Box<dyn Fn(&Point3) -> f64 + Send + Sync>;
type PartialFn = Box<dyn Fn(MultiIndex, &Point3) -> f64 + Send + Sync>;

/// Closure-backed field. Without an analytic derivative callback, partials
/// fall back to tensor central differences with step
/// `eps^{1/(|gamma|+2)} * scale`.
pub struct FnField {
    order: usize,
    eval: EvalFn,
    partial: Option<PartialFn>,
    scale: f64,
}

impl FnField {
    pub fn new(order: usize, eval: impl Fn(&Point3) -> f64 + Send + Sync + 'static) -> Self {
        FnField {
            order,
            eval: Box::new(eval),
            partial: None,
            scale: 1.0,
        }
    }

    pub fn with_partials(mut self, partial: impl Fn(MultiIndex, &Point3) -> f64 + Send + Sync + 'static) -> Self {
        self.partial = Some(Box::new(partial));
        self
    }

    /// Length scale for the finite-difference step.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn finite_difference(&self, gamma: MultiIndex, p: &Point3) -> f64 {
        let n = gamma.order();
        if n == 0 {
            return (self.eval)(p);
        }
        let h = f64::EPSILON.powf(1.0 / (n as f64 + 2.0)) * self.scale;
        // Per-axis central stencil of order d: offsets (d/2 - j) h, weights
        // (-1)^j C(d, j) / h^d.
        let stencils: Vec<Vec<(f64, f64)>> = (0..3)
            .map(|ax| {
                let d = gamma.0[ax];
                (0..=d)
                    .map(|j| {
                        let w = binom(d, j) * if j % 2 == 0 { 1.0 } else { -1.0 } / h.powi(d as i32);
                        ((d as f64 / 2.0 - j as f64) * h, w)
                    })
                    .collect()
            })
            .collect();
        let mut sum = 0.0;
        for &(ox, wx) in &stencils[0] {
            for &(oy, wy) in &stencils[1] {
                for &(oz, wz) in &stencils[2] {
                    sum += wx * wy * wz * (self.eval)(&(p + Point3::new(ox, oy, oz)));
                }
            }
        }
        sum
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ScalarField for FnField {
    fn order(&self) -> usize {
        self.order
    }

    fn eval(&self, p: &Point3) -> f64 {
        (self.eval)(p)
    }

    fn partial(&self, gamma: MultiIndex, p: &Point3) -> Result<f64> {
        check_order(gamma.order(), self.order)?;
        Ok(match &self.partial {
            Some(f) => f(gamma, p),
            None => self.finite_difference(gamma, p),
        })
    }

    fn is_approximate(&self) -> bool {
        self.partial.is_none()
    }
}

/// `v - p`.
pub struct ResidualField<'a> {
    pub v: &'a dyn ScalarField,
    pub p: Polynomial3,
}

impl ScalarField for ResidualField<'_> {
    fn order(&self) -> usize {
        self.v.order()
    }

    fn eval(&self, x: &Point3) -> f64 {
        self.v.eval(x) - self.p.eval(x)
    }

    fn partial(&self, gamma: MultiIndex, x: &Point3) -> Result<f64> {
        Ok(self.v.partial(gamma, x)? - self.p.derivative(gamma).eval(x))
    }

    fn partial_fn(&self, gamma: MultiIndex) -> Result<PartialEval<'_>> {
        let fv = self.v.partial_fn(gamma)?;
        let dp = self.p.derivative(gamma);
        Ok(Box::new(move |x| Ok(fv(x)? - dp.eval(x))))
    }

    fn is_approximate(&self) -> bool {
        self.v.is_approximate()
    }
}

/// `w(xi) = inner(origin + map xi)`.
pub struct AffinePullback<'a> {
    pub inner: &'a dyn ScalarField,
    pub origin: Point3,
    pub map: Matrix3<f64>,
}

impl AffinePullback<'_> {
    /// Coefficients of `prod_l (sum_i map[i, a_l] X_i)` over the axes
    /// `a_l` listed by `gamma`: the chain rule for `d^gamma w`.
    fn chain_coefficients(&self, gamma: MultiIndex) -> Vec<(MultiIndex, f64)> {
        let mut terms: Vec<(MultiIndex, f64)> = vec![(MultiIndex::ZERO, 1.0)];
        for axis in 0..3 {
            for _ in 0..gamma.0[axis] {
                let mut next: Vec<(MultiIndex, f64)> = Vec::new();
                for (b, c) in &terms {
                    for i in 0..3 {
                        let w = self.map[(i, axis)];
                        if w == 0.0 {
                            continue;
                        }
                        let key = *b + MultiIndex::unit(i);
                        match next.iter_mut().find(|(k, _)| *k == key) {
                            Some(e) => e.1 += c * w,
                            None => next.push((key, c * w)),
                        }
                    }
                }
                terms = next;
            }
        }
        terms
    }
}

impl ScalarField for AffinePullback<'_> {
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn eval(&self, xi: &Point3) -> f64 {
        self.inner.eval(&(self.origin + self.map * xi))
    }

    fn partial(&self, gamma: MultiIndex, xi: &Point3) -> Result<f64> {
        check_order(gamma.order(), self.inner.order())?;
        let x = self.origin + self.map * xi;
        let mut sum = 0.0;
        for (b, c) in self.chain_coefficients(gamma) {
            sum += c * self.inner.partial(b, &x)?;
        }
        Ok(sum)
    }

    fn is_approximate(&self) -> bool {
        self.inner.is_approximate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trig() -> FnField {
        FnField::new(4, |p| (p.x + 2.0 * p.y).sin() * p.z.exp())
    }

    #[test]
    fn finite_differences_track_analytic() {
        let f = trig();
        let p = Point3::new(0.3, 0.1, -0.2);
        let (s, c, e) = ((0.5f64).sin(), (0.5f64).cos(), (-0.2f64).exp());
        assert!(f.is_approximate());
        assert_relative_eq!(f.partial(MultiIndex::new(1, 0, 0), &p).unwrap(), c * e, max_relative = 1e-7);
        assert_relative_eq!(f.partial(MultiIndex::new(0, 1, 1), &p).unwrap(), 2.0 * c * e, max_relative = 1e-5);
        assert_relative_eq!(f.partial(MultiIndex::new(2, 1, 0), &p).unwrap(), -2.0 * c * e, max_relative = 1e-3);
        assert_relative_eq!(f.partial(MultiIndex::new(0, 2, 0), &p).unwrap(), -4.0 * s * e, max_relative = 1e-4);
    }

    #[test]
    fn order_is_enforced() {
        let f = trig();
        let err = f.partial(MultiIndex::new(2, 2, 1), &Point3::zeros()).unwrap_err();
        assert_eq!(err, Error::DerivativeUnavailable { requested: 5, available: 4 });
    }

    #[test]
    fn pullback_chain_rule() {
        let p = Polynomial3::from_coeffs([(MultiIndex::new(2, 1, 0), 1.0), (MultiIndex::new(0, 0, 3), 2.0)]);
        let map = Matrix3::new(1.0, 2.0, 0.0, 0.5, -1.0, 0.3, 0.0, 0.2, 4.0);
        let origin = Point3::new(0.1, -0.3, 0.7);
        let w = AffinePullback { inner: &p, origin, map };
        // Oracle: the same composition built symbolically.
        let xs: Vec<Polynomial3> = (0..3)
            .map(|i| {
                Polynomial3::from_coeffs([
                    (MultiIndex::ZERO, origin[i]),
                    (MultiIndex::unit(0), map[(i, 0)]),
                    (MultiIndex::unit(1), map[(i, 1)]),
                    (MultiIndex::unit(2), map[(i, 2)]),
                ])
            })
            .collect();
        let composed = &(&(&(&xs[0] * &xs[0]) * &xs[1]) + &(&(&xs[2] * &xs[2]) * &xs[2]).scale(2.0)) * &Polynomial3::constant(1.0);
        let xi = Point3::new(0.2, 0.4, -0.1);
        for g in MultiIndex::all_up_to(3) {
            assert_relative_eq!(
                w.partial(g, &xi).unwrap(),
                composed.derivative(g).eval(&xi),
                max_relative = 1e-11,
                epsilon = 1e-11
            );
        }
    }
}

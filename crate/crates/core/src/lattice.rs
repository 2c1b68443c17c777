//! Multi-indices, interpolation nodes, lattice boxes and difference quotients.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_order, ScalarField};
use crate::geom::{Point3, Reference, Tetrahedron};
use crate::interp;
use crate::quad::gauss_legendre;

/// Multi-index in three variables.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0, 0]);

    pub const fn new(a: u32, b: u32, c: u32) -> Self {
        MultiIndex([a, b, c])
    }

    pub fn unit(axis: usize) -> Self {
        let mut a = [0; 3];
        a[axis] = 1;
        MultiIndex(a)
    }

    /// |gamma|.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// gamma! as an exact integer; exact for |gamma| <= 20.
    pub fn factorial(&self) -> u64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0).all(|(a, b)| *a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        Some(MultiIndex([
            self.0[0].checked_sub(other.0[0])?,
            self.0[1].checked_sub(other.0[1])?,
            self.0[2].checked_sub(other.0[2])?,
        ]))
    }

    /// Number of nonzero components.
    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    /// All `eta <= self`, in lexicographic order.
    pub fn sub_indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        let [a, b, c] = self.0;
        (0..=a).flat_map(move |i| (0..=b).flat_map(move |j| (0..=c).map(move |l| MultiIndex([i, j, l]))))
    }

    /// All multi-indices with |gamma| = n, ordered lexicographically
    /// descending in the first component.
    pub fn all_of_order(n: usize) -> Vec<MultiIndex> {
        let n = n as u32;
        let mut out = Vec::new();
        for a in (0..=n).rev() {
            for b in (0..=n - a).rev() {
                out.push(MultiIndex([a, b, n - a - b]));
            }
        }
        out
    }

    /// All multi-indices with |gamma| <= n, graded by order.
    pub fn all_up_to(n: usize) -> Vec<MultiIndex> {
        (0..=n).flat_map(MultiIndex::all_of_order).collect()
    }

    /// `m! / gamma!` with `m = |gamma|`.
    pub fn multinomial(&self) -> f64 {
        factorial(self.order() as u32) as f64 / self.factorial() as f64
    }
}

impl std::ops::Add for MultiIndex {
    type Output = MultiIndex;
    fn add(self, o: MultiIndex) -> MultiIndex {
        MultiIndex([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(str::trim)
            .collect();
        if parts.len() != 3 {
            return Err(Error::InvalidMultiIndex(format!("expected three components in {s:?}")));
        }
        let mut a = [0u32; 3];
        for (slot, p) in a.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidMultiIndex(format!("bad component {p:?} in {s:?}")))?;
        }
        Ok(MultiIndex(a))
    }
}

pub(crate) fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

pub(crate) fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> i64 {
    (factorial(n) / (factorial(k) * factorial(n - k))) as i64
}

/// Barycentric multi-index `(a_1, ..., a_4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BaryIndex(pub [u32; 4]);

impl BaryIndex {
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// The trailing three components: lattice coordinates in the frame
    /// anchored at the first vertex.
    pub fn local(&self) -> MultiIndex {
        MultiIndex([self.0[1], self.0[2], self.0[3]])
    }
}

/// A node of `Sigma^k(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeNode {
    pub gamma: BaryIndex,
    pub k: u32,
    pub point: Point3,
}

impl LatticeNode {
    pub fn barycentric(&self) -> [f64; 4] {
        self.gamma.0.map(|a| a as f64 / self.k as f64)
    }
}

pub(crate) fn check_degree(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidDegree {
            k,
            reason: "degree must be at least 1".into(),
        });
    }
    Ok(())
}

/// Barycentric indices with |gamma| = k, in the order used for nodal bases.
pub fn bary_indices(k: usize) -> Vec<BaryIndex> {
    MultiIndex::all_up_to(k)
        .into_iter()
        .map(|m| BaryIndex([(k - m.order()) as u32, m.0[0], m.0[1], m.0[2]]))
        .collect()
}

/// The interpolation nodes `Sigma^k(t)`; `C(k+3, 3)` of them.
pub fn sigma_k(t: &Tetrahedron, k: usize) -> Result<Vec<LatticeNode>> {
    check_degree(k)?;
    Ok(bary_indices(k)
        .into_iter()
        .map(|g| {
            let node = LatticeNode {
                gamma: g,
                k: k as u32,
                point: Point3::zeros(),
            };
            LatticeNode {
                point: t.point_at(node.barycentric()),
                ..node
            }
        })
        .collect())
}

/// The axis-aligned box with diagonal corners `gamma / k` and
/// `(gamma + delta) / k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub gamma: MultiIndex,
    pub delta: MultiIndex,
    pub k: u32,
}

impl LatticeBox {
    /// 3 for a parallelepiped, 2 for a rectangle, 1 for a segment.
    pub fn rank(&self) -> usize {
        self.delta.rank()
    }

    /// The `2^rank` corner lattice indices.
    pub fn corners(&self) -> Vec<MultiIndex> {
        let axes: Vec<usize> = (0..3).filter(|&i| self.delta.0[i] > 0).collect();
        (0..1u32 << axes.len())
            .map(|mask| {
                let mut c = self.gamma.0;
                for (bit, &ax) in axes.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        c[ax] += self.delta.0[ax];
                    }
                }
                MultiIndex(c)
            })
            .collect()
    }

    pub fn contained_in(&self, reference: Reference) -> bool {
        self.corners()
            .iter()
            .all(|c| reference.contains_lattice_point(c.0, self.k))
    }
}

/// All boxes `gamma + [0, delta]` (scaled by `1/k`) inside the reference
/// tetrahedron.
pub fn enumerate_boxes(k: usize, delta: MultiIndex, reference: Reference) -> Result<Vec<LatticeBox>> {
    check_degree(k)?;
    let n = delta.order();
    if n < 1 || n > k {
        return Err(Error::InvalidMultiIndex(format!(
            "need 1 <= |delta| <= k, got |{delta}| = {n} with k = {k}"
        )));
    }
    let k32 = k as u32;
    let mut out = Vec::new();
    for a in 0..=k32 {
        for b in 0..=k32 {
            for c in 0..=k32 {
                let bx = LatticeBox {
                    gamma: MultiIndex([a, b, c]),
                    delta,
                    k: k32,
                };
                if bx.contained_in(reference) {
                    out.push(bx);
                }
            }
        }
    }
    Ok(out)
}

/// Integer form of a difference-quotient stencil: the quotient equals
/// `k^{|delta|} / denominator * sum(weight * f(x_{gamma + eta}))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientStencil {
    pub delta: MultiIndex,
    /// `delta!`
    pub denominator: u64,
    /// `(eta, (-1)^{|delta|-|eta|} prod C(delta_i, eta_i))`
    pub terms: Vec<(MultiIndex, i64)>,
}

pub fn quotient_stencil(delta: MultiIndex) -> QuotientStencil {
    let n = delta.order();
    let terms = delta
        .sub_indices()
        .map(|eta| {
            let sign = if (n - eta.order()) % 2 == 0 { 1 } else { -1 };
            let w: i64 = (0..3).map(|i| binomial(delta.0[i], eta.0[i])).product();
            (eta, sign * w)
        })
        .collect();
    QuotientStencil {
        delta,
        denominator: delta.factorial(),
        terms,
    }
}

/// `f^{|delta|}[x_gamma, Delta^delta x_gamma]` from tabulated node values.
pub fn difference_quotient(
    values: &HashMap<MultiIndex, f64>,
    gamma: MultiIndex,
    delta: MultiIndex,
    k: usize,
) -> Result<f64> {
    let stencil = quotient_stencil(delta);
    let mut sum = 0.0;
    for (eta, w) in &stencil.terms {
        let node = gamma + *eta;
        let v = values.get(&node).ok_or(Error::MissingNodeValue(node.0))?;
        sum += *w as f64 * v;
    }
    Ok((k as f64).powi(delta.order() as i32) / stencil.denominator as f64 * sum)
}

/// Difference quotient of a function evaluated at the lattice points `a / k`.
pub fn difference_quotient_of(f: impl Fn(&Point3) -> f64, gamma: MultiIndex, delta: MultiIndex, k: usize) -> f64 {
    let stencil = quotient_stencil(delta);
    let kf = k as f64;
    let sum: f64 = stencil
        .terms
        .iter()
        .map(|(eta, w)| {
            let a = (gamma + *eta).0;
            *w as f64 * f(&Point3::new(a[0] as f64 / kf, a[1] as f64 / kf, a[2] as f64 / kf))
        })
        .sum();
    kf.powi(delta.order() as i32) / stencil.denominator as f64 * sum
}

/// Nodes and weights on the ordered simplex `1 >= w_1 >= ... >= w_s >= 0`,
/// returned as `(w_1 + ... + w_s, weight)`; weights sum to `1/s!`.
fn ordered_simplex_sums(s: usize, n: usize) -> Vec<(f64, f64)> {
    if s == 0 {
        return vec![(0.0, 1.0)];
    }
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n.pow(s as u32));
    let mut idx = vec![0usize; s];
    loop {
        // w_1 = u_1, w_j = w_{j-1} u_j; Jacobian prod u_j^{s-j}.
        let mut prod = 1.0;
        let mut sum = 0.0;
        let mut weight = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            prod *= x[i];
            sum += prod;
            weight *= w[i] * x[i].powi((s - 1 - j) as i32);
        }
        out.push((sum, weight));
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == s {
                return out;
            }
        }
    }
}

/// Integral of `d^delta f` over the box, in the iterated ordered-simplex
/// form that reproduces the difference quotient.
pub fn box_integral(field: &dyn ScalarField, b: &LatticeBox, points_per_dim: usize) -> Result<f64> {
    check_order(b.delta.order(), field.order())?;
    let k = b.k as f64;
    let rules: Vec<Vec<(f64, f64)>> = (0..3)
        .map(|i| ordered_simplex_sums(b.delta.0[i] as usize, points_per_dim))
        .collect();
    let mut total = 0.0;
    for &(sx, wx) in &rules[0] {
        for &(sy, wy) in &rules[1] {
            for &(sz, wz) in &rules[2] {
                let p = Point3::new(
                    (b.gamma.0[0] as f64 + sx) / k,
                    (b.gamma.0[1] as f64 + sy) / k,
                    (b.gamma.0[2] as f64 + sz) / k,
                );
                total += wx * wy * wz * field.partial(b.delta, &p)?;
            }
        }
    }
    Ok(total)
}

/// Largest |difference quotient| of `u = v - I^k v` over every box
/// `[gamma, gamma + delta] / k` inside `reference`, `1 <= |delta| <= k`.
///
/// The lattice lives in reference coordinates and is carried onto `t` by the
/// affine map sending the reference vertices to `t.v` in order.
pub fn residual_quotients_vanish(
    field: &dyn ScalarField,
    t: &Tetrahedron,
    reference: Reference,
    k: usize,
) -> Result<f64> {
    let u = interp::residual(field, t, k)?;
    let rt = reference.tetrahedron();
    let pull = |xi: &Point3| {
        let l = rt.barycentric(xi);
        u.eval(&t.point_at(l))
    };
    let mut worst = 0.0f64;
    for delta in MultiIndex::all_up_to(k).into_iter().filter(|d| d.order() >= 1) {
        for b in enumerate_boxes(k, delta, reference)? {
            let q = difference_quotient_of(pull, b.gamma, b.delta, k);
            worst = worst.max(q.abs());
        }
    }
    Ok(worst)
}

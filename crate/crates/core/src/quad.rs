//! Quadrature on tetrahedra and Sobolev seminorms.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_order, ScalarField};
use crate::geom::{volume, Point3, Tetrahedron};
use crate::lattice::{sigma_k, MultiIndex};

pub const MAX_RULE_DEGREE: usize = 40;
const MAX_GAUSS_POINTS: usize = 64;

/// Default degree for integrands that are not polynomials.
pub const DEFAULT_DEGREE: usize = 12;
/// Extra degree used by the refinement check.
pub const REFINEMENT_STEP: usize = 6;
/// Relative disagreement between the two levels that raises the warning.
pub const REFINEMENT_TOL: f64 = 1e-6;
/// Lattice density for sup-norm sampling.
pub const SUP_LATTICE: usize = 40;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (&'static [f64], &'static [f64]) {
    static CACHE: [OnceLock<(Vec<f64>, Vec<f64>)>; MAX_GAUSS_POINTS + 1] =
        [const { OnceLock::new() }; MAX_GAUSS_POINTS + 1];
    assert!((1..=MAX_GAUSS_POINTS).contains(&n), "Gauss-Legendre order {n} out of range");
    let (x, w) = CACHE[n].get_or_init(|| build_gauss_legendre(n));
    (x, w)
}

fn build_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = (1.0 - x) / 2.0;
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Barycentric nodes and weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    /// `int_t f`.
    pub fn integrate(&self, t: &Tetrahedron, f: impl Fn(&Point3) -> f64) -> Result<f64> {
        let vol = volume(t)?;
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * f(&t.point_at(*l)))
            .collect();
        Ok(vol * pairwise_sum(&terms))
    }

    pub fn points(&self, t: &Tetrahedron) -> Vec<Point3> {
        self.nodes.iter().map(|l| t.point_at(*l)).collect()
    }
}

/// Collapsed-coordinate tensor Gauss rule exact for degree `d`.
pub fn rule_for_degree(d: usize) -> Result<&'static QuadratureRule> {
    static CACHE: [OnceLock<QuadratureRule>; MAX_RULE_DEGREE + 1] = [const { OnceLock::new() }; MAX_RULE_DEGREE + 1];
    if !(1..=MAX_RULE_DEGREE).contains(&d) {
        return Err(Error::UnsupportedDegree(d));
    }
    Ok(CACHE[d].get_or_init(|| build_rule(d)))
}

fn build_rule(d: usize) -> QuadratureRule {
    // x = u, y = (1-u) v, z = (1-u)(1-v) w with Jacobian (1-u)^2 (1-v):
    // the u-direction carries degree d + 2.
    let n = (d + 4) / 2;
    let (g, gw) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (&u, &wu) in g.iter().zip(gw) {
        for (&v, &wv) in g.iter().zip(gw) {
            for (&w, &ww) in g.iter().zip(gw) {
                let x = u;
                let y = (1.0 - u) * v;
                let z = (1.0 - u) * (1.0 - v) * w;
                nodes.push([1.0 - x - y - z, x, y, z]);
                weights.push(6.0 * wu * wv * ww * (1.0 - u).powi(2) * (1.0 - v));
            }
        }
    }
    QuadratureRule {
        nodes,
        weights,
        exactness: 2 * n - 3,
    }
}

/// Sum with pairwise splitting, for order-independent rounding behaviour.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        x.iter().sum()
    } else {
        let (a, b) = x.split_at(x.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Exponent `p` in `[1, inf]`. Serialized as a number, or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    fn even_integer(self) -> Option<usize> {
        match self {
            Exponent::Finite(p) if p.fract() == 0.0 && p >= 2.0 && (p as usize) % 2 == 0 => Some(p as usize),
            _ => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad exponent {s:?}")))?;
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::Infinity);
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("exponent must be >= 1, got {s}")));
        }
        Ok(Exponent::Finite(p))
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => p.to_string().parse(),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub reason: String,
}

/// Admissible `(k, m, p)`: `p > 2` if `k = m`; `p > 3/2` if `k = 1, m = 0`;
/// `p >= 1` if `k >= 2` and `k - m >= 1`.
pub fn validate_p(k: usize, m: usize, p: Exponent) -> Admissibility {
    let pv = p.value();
    let (ok, reason) = if k < 1 || m > k {
        (false, format!("need k >= 1 and 0 <= m <= k, got k = {k}, m = {m}"))
    } else if k == m {
        (pv > 2.0, "p must exceed 2 when k = m".to_string())
    } else if k == 1 {
        (pv > 1.5, "p must exceed 3/2 when k = 1 and m = 0".to_string())
    } else {
        (pv >= 1.0, "p must be at least 1 when k >= 2 and k - m >= 1".to_string())
    };
    Admissibility {
        admissible: ok,
        reason: if ok { "admissible".into() } else { reason },
    }
}

pub fn require_admissible(k: usize, m: usize, p: Exponent) -> Result<()> {
    let a = validate_p(k, m, p);
    if a.admissible {
        Ok(())
    } else {
        Err(Error::InadmissiblePC {
            k,
            m,
            p: p.to_string(),
            reason: a.reason,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormSpec {
    pub m: usize,
    pub p: Exponent,
    /// Multinomial weights `m!/gamma!` (the default).
    pub weighted: bool,
    /// Quadrature degree override for finite `p`.
    pub degree: Option<usize>,
    /// When set, refuse `(k, m, p)` outside the admissible table.
    pub validate_for_k: Option<usize>,
    /// Lattice density for `p = inf`.
    pub sup_lattice: usize,
}

impl SeminormSpec {
    pub fn new(m: usize, p: Exponent) -> Self {
        SeminormSpec {
            m,
            p,
            weighted: true,
            degree: None,
            validate_for_k: None,
            sup_lattice: SUP_LATTICE,
        }
    }

    pub fn unweighted(mut self) -> Self {
        self.weighted = false;
        self
    }

    pub fn with_degree(mut self, d: usize) -> Self {
        self.degree = Some(d);
        self
    }

    pub fn validated_for(mut self, k: usize) -> Self {
        self.validate_for_k = Some(k);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormValue {
    pub value: f64,
    /// Two quadrature levels disagreed beyond the tolerance.
    pub refinement_warning: bool,
    /// Sampled sup or finite-difference derivatives.
    pub approximate: bool,
}

pub fn seminorm(u: &dyn ScalarField, t: &Tetrahedron, spec: &SeminormSpec) -> Result<f64> {
    Ok(seminorm_detailed(u, t, spec)?.value)
}

pub fn seminorm_detailed(u: &dyn ScalarField, t: &Tetrahedron, spec: &SeminormSpec) -> Result<SeminormValue> {
    if let Some(k) = spec.validate_for_k {
        require_admissible(k, spec.m, spec.p)?;
    }
    check_order(spec.m, u.order())?;
    t.validate()?;
    let gammas = MultiIndex::all_of_order(spec.m);
    let weight = |g: &MultiIndex| if spec.weighted { g.multinomial() } else { 1.0 };
    match spec.p {
        Exponent::Infinity => {
            let pts: Vec<Point3> = sigma_k(t, spec.sup_lattice.max(1))?.into_iter().map(|n| n.point).collect();
            let maxima = gammas
                .par_iter()
                .map(|g| sup_of_partial(u, t, *g, &pts))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SeminormValue {
                value: maxima.into_iter().fold(0.0, f64::max),
                refinement_warning: false,
                approximate: true,
            })
        }
        Exponent::Finite(p) => {
            let poly_degree = u.as_polynomial().map(|q| q.degree().saturating_sub(spec.m));
            let exact = match (poly_degree, spec.p.even_integer()) {
                (Some(d), Some(pe)) => Some((pe * d).clamp(1, MAX_RULE_DEGREE)),
                _ => None,
            };
            let level = |d: usize| -> Result<f64> {
                let rule = rule_for_degree(d)?;
                let terms = gammas
                    .par_iter()
                    .map(|g| {
                        let f = u.partial_fn(*g)?;
                        let vals = rule
                            .points(t)
                            .iter()
                            .map(|x| f(x).map(|v| v.abs().powf(p)))
                            .collect::<Result<Vec<f64>>>()?;
                        let weighted: Vec<f64> = vals.iter().zip(&rule.weights).map(|(v, w)| v * w).collect();
                        Ok(weight(g) * pairwise_sum(&weighted))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((volume(t)? * pairwise_sum(&terms)).powf(1.0 / p))
            };
            match (spec.degree, exact) {
                (Some(d), _) | (None, Some(d)) => Ok(SeminormValue {
                    value: level(d)?,
                    refinement_warning: false,
                    approximate: u.is_approximate(),
                }),
                (None, None) => {
                    let coarse = level(DEFAULT_DEGREE)?;
                    let fine = level(DEFAULT_DEGREE + REFINEMENT_STEP)?;
                    let scale = fine.abs().max(f64::MIN_POSITIVE);
                    Ok(SeminormValue {
                        value: fine,
                        refinement_warning: (fine - coarse).abs() > REFINEMENT_TOL * scale,
                        approximate: u.is_approximate(),
                    })
                }
            }
        }
    }
}

fn sup_of_partial(u: &dyn ScalarField, t: &Tetrahedron, g: MultiIndex, pts: &[Point3]) -> Result<f64> {
    let f = u.partial_fn(g)?;
    let mut best = (0.0f64, pts[0]);
    for x in pts {
        let v = f(x)?.abs();
        if v > best.0 {
            best = (v, *x);
        }
    }
    if let Some(q) = u.as_polynomial() {
        let d = q.derivative(g);
        let x = best.1;
        let grad = d.gradient(&x);
        if let Ok(step) = d.hessian(&x).pseudo_inverse(1e-12).map(|h| h * grad) {
            let cand: Point3 = x - step;
            if inside(t, &cand) && step.iter().all(|s| s.is_finite()) {
                best.0 = best.0.max(d.eval(&cand).abs());
            }
        }
    }
    Ok(best.0)
}

fn inside(t: &Tetrahedron, x: &Vector3<f64>) -> bool {
    t.barycentric(x).iter().all(|l| *l >= -1e-12)
}

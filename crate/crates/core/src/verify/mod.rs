//! Numerical experiments: interpolation error ratios, squeeze sweeps,
//! convergence studies, quality-measure equivalence and the maximum angle
//! condition.

pub mod corpus;
pub mod generate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_order, ScalarField};
use crate::geom::{
    angles, mac_bound_constants, mac_check, matrices, quality, reverse_gamma_max, spectral_norm, standard_position,
    GeometryReport, Kind, MacConstants, Point3, Tetrahedron,
};
use crate::interp;
use crate::quad::{require_admissible, seminorm_detailed, Exponent, SeminormSpec};

pub use corpus::{corpus, CorpusEntry, CorpusField, CORPUS_SIZE};
pub use generate::{generate, generate_one, Family, TetraGenSpec};

/// Below `INDETERMINATE_REL * max(1, |v|_{k+1,p,T})` the ratio is not
/// reported.
pub const INDETERMINATE_REL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRatioResult {
    pub k: usize,
    pub m: usize,
    pub p: Exponent,
    /// `|v - I^k v|_{m,p,T}`
    pub error: f64,
    /// `|v|_{k+1,p,T}`
    pub seminorm_hi: f64,
    /// `(R_T / h_T)^m h_T^{k+1-m}`
    pub bound_factor: f64,
    /// `error / (bound_factor * seminorm_hi)`; zero when indeterminate.
    pub ratio: f64,
    pub indeterminate: bool,
    pub refinement_warning: bool,
    pub approximate: bool,
    pub geometry: GeometryReport,
}

pub fn error_ratio(v: &dyn ScalarField, t: &Tetrahedron, k: usize, m: usize, p: Exponent) -> Result<ErrorRatioResult> {
    require_admissible(k, m, p)?;
    check_order(k + 1, v.order())?;
    let geometry = angles(t)?;
    let u = interp::residual(v, t, k)?;
    let err = seminorm_detailed(&u, t, &SeminormSpec::new(m, p))?;
    let hi = seminorm_detailed(v, t, &SeminormSpec::new(k + 1, p))?;
    let h = geometry.h[5];
    let bound_factor = (geometry.r_t / h).powi(m as i32) * h.powi((k + 1 - m) as i32);
    let indeterminate = hi.value < INDETERMINATE_REL * hi.value.max(1.0);
    let ratio = if indeterminate {
        0.0
    } else {
        err.value / (bound_factor * hi.value)
    };
    Ok(ErrorRatioResult {
        k,
        m,
        p,
        error: err.value,
        seminorm_hi: hi.value,
        bound_factor,
        ratio,
        indeterminate,
        refinement_warning: err.refinement_warning || hi.refinement_warning,
        approximate: err.approximate || hi.approximate,
        geometry,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub alpha: [f64; 3],
    pub h_t: f64,
    pub r_t: f64,
    /// Max over the corpus of the normalized error ratio.
    pub max_ratio: f64,
    pub argmax_field: String,
    /// Max over the corpus of `|u|_m / |u|_{k+1} / (max alpha)^{k+1-m}`.
    pub max_squeeze_ratio: f64,
    pub refinement_warnings: usize,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio` over the grid.
    pub spread: f64,
    /// Least-squares slope of `ln(max_ratio)` against `ln(1 / min alpha)`.
    pub slope: f64,
    pub max_squeeze_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k: usize,
    pub m: usize,
    pub p: Exponent,
    pub kind: Kind,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// `alpha = (1, 2^-l, 2^-l)` for `l = 0..levels`.
pub fn eps_grid(levels: usize) -> Vec<[f64; 3]> {
    (0..levels)
        .map(|l| {
            let e = 0.5f64.powi(l as i32);
            [1.0, e, e]
        })
        .collect()
}

/// Interpolation error on `T_alpha = diag(alpha) T_ref` for each corpus field.
pub fn squeeze_sweep(
    k: usize,
    m: usize,
    p: Exponent,
    alphas: &[[f64; 3]],
    fields: &[CorpusEntry],
    kind: Kind,
) -> Result<SweepResult> {
    require_admissible(k, m, p)?;
    if alphas.is_empty() || fields.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid or corpus".into()));
    }
    for a in alphas {
        if !a.iter().all(|x| *x > 0.0 && *x <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha components must lie in (0, 1], got {a:?}")));
        }
    }
    let reference = kind.reference().tetrahedron();
    let rows = alphas
        .par_iter()
        .enumerate()
        .map(|(index, alpha)| {
            let d = nalgebra::Matrix3::from_diagonal(&(*alpha).into());
            let t = Tetrahedron::new(reference.map_affine(&d, &Point3::zeros()).v)?;
            let amax = alpha.iter().copied().fold(0.0, f64::max);
            let results = fields
                .iter()
                .map(|f| error_ratio(&*f.on(&t, k)?, &t, k, m, p))
                .collect::<Result<Vec<_>>>()?;
            let mut row = SweepRow {
                index,
                alpha: *alpha,
                h_t: results[0].geometry.h[5],
                r_t: results[0].geometry.r_t,
                max_ratio: 0.0,
                argmax_field: fields[0].name.clone(),
                max_squeeze_ratio: 0.0,
                refinement_warnings: 0,
                indeterminate: 0,
            };
            for (r, f) in results.iter().zip(fields) {
                if r.ratio > row.max_ratio {
                    row.max_ratio = r.ratio;
                    row.argmax_field = f.name.clone();
                }
                if !r.indeterminate {
                    let q = r.error / r.seminorm_hi / amax.powi((k + 1 - m) as i32);
                    row.max_squeeze_ratio = row.max_squeeze_ratio.max(q);
                }
                row.refinement_warnings += r.refinement_warning as usize;
                row.indeterminate += r.indeterminate as usize;
            }
            Ok(row)
        })
        .collect::<Result<Vec<SweepRow>>>()?;
    let max_ratio = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let min_ratio = rows.iter().map(|r| r.max_ratio).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| -r.alpha.iter().copied().fold(f64::INFINITY, f64::min).ln())
        .collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_ratio.ln()).collect();
    let summary = SweepSummary {
        max_ratio,
        min_ratio,
        spread: max_ratio / min_ratio,
        slope: ls_slope(&xs, &ys),
        max_squeeze_ratio: rows.iter().map(|r| r.max_squeeze_ratio).fold(0.0, f64::max),
    };
    Ok(SweepResult {
        k,
        m,
        p,
        kind,
        rows,
        summary,
    })
}

/// Least-squares slope; zero when `xs` has no spread.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub h: f64,
    pub error: f64,
    pub seminorm_hi: f64,
    /// `error / seminorm_hi`
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub k: usize,
    pub m: usize,
    pub p: Exponent,
    pub expected_order: usize,
    pub levels: Vec<ConvergenceLevel>,
    /// `log2(normalized_l / normalized_{l+1})`
    pub orders: Vec<f64>,
    /// Interpolation is exact at every level.
    pub exact: bool,
}

impl ConvergenceStudy {
    pub fn final_order(&self) -> Option<f64> {
        self.orders.last().copied()
    }
}

/// Errors on `t0` dilated by `2^-l` about its centroid, `l = 0..levels`.
///
/// Orders are measured on `error / |v|_{k+1,p,T}`, which removes the
/// `h^{3/p}` volume factor shared by both seminorms.
pub fn convergence_study(
    v: &dyn ScalarField,
    t0: &Tetrahedron,
    k: usize,
    m: usize,
    p: Exponent,
    levels: usize,
) -> Result<ConvergenceStudy> {
    if levels < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {levels}")));
    }
    let c = t0.centroid();
    let out = (0..levels)
        .into_par_iter()
        .map(|l| {
            let t = Tetrahedron::new(t0.scaled_about(&c, 0.5f64.powi(l as i32)).v)?;
            let r = error_ratio(v, &t, k, m, p)?;
            Ok(ConvergenceLevel {
                level: l,
                h: t.diameter(),
                error: r.error,
                seminorm_hi: r.seminorm_hi,
                normalized: if r.indeterminate { 0.0 } else { r.error / r.seminorm_hi },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = out.iter().map(|l| l.seminorm_hi).fold(1.0, f64::max);
    let exact = out.iter().all(|l| l.error <= 1e-12 * scale);
    let orders = if exact {
        Vec::new()
    } else {
        out.windows(2)
            .map(|w| (w[0].normalized / w[1].normalized).log2())
            .collect()
    };
    Ok(ConvergenceStudy {
        k,
        m,
        p,
        expected_order: k + 1 - m,
        levels: out,
        orders,
        exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub violations: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest distance to either end of `[H/2 - eps, 2H + eps]`,
    /// relative to `H_T`.
    pub worst_margin: f64,
    pub extremal: Tetrahedron,
    pub violators: Vec<Tetrahedron>,
}

/// Relative slack on both ends of `H_T/2 <= R_T <= 2 H_T`.
pub const EQUIVALENCE_SLACK: f64 = 1e-9;

pub fn equivalence_sample(n: usize, gen: &TetraGenSpec) -> Result<EquivalenceReport> {
    if n < 1 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = generate_one(gen, i)?;
            let (r, h) = quality(&t)?;
            Ok((t, r, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = EquivalenceReport {
        n,
        violations: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        worst_margin: f64::INFINITY,
        extremal: samples[0].0,
        violators: Vec::new(),
    };
    for (t, r, h) in samples {
        let eps = EQUIVALENCE_SLACK * h;
        let margin = (r - (h / 2.0 - eps)).min(2.0 * h + eps - r) / h;
        rep.min_ratio = rep.min_ratio.min(r / h);
        rep.max_ratio = rep.max_ratio.max(r / h);
        if margin < rep.worst_margin {
            rep.worst_margin = margin;
            rep.extremal = t;
        }
        if margin < 0.0 {
            rep.violations += 1;
            if rep.violators.len() < 10 {
                rep.violators.push(t);
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacCounterexample {
    pub index: u64,
    pub tetrahedron: Tetrahedron,
    pub h_over_h: f64,
    pub r_over_h: f64,
    pub max_angle: f64,
    pub bound: f64,
}

/// One sample of a MAC experiment. `bound` is the bound on `H_T/h_T`
/// (forward) or the angle bound (reverse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacSample {
    pub index: u64,
    pub h_over_h: f64,
    pub r_over_h: f64,
    pub max_angle: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacDirection {
    pub requested: usize,
    pub samples: usize,
    pub counterexamples: Vec<MacCounterexample>,
    /// Largest `H_T/h_T` (forward) or largest angle (reverse) seen.
    pub worst: f64,
    pub generation_error: Option<String>,
    /// Per-sample records in index order.
    pub records: Vec<MacSample>,
}

impl MacDirection {
    pub fn passed(&self) -> bool {
        self.generation_error.is_none() && self.counterexamples.is_empty() && self.samples == self.requested
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacReport {
    pub gamma_max: f64,
    pub constants: MacConstants,
    /// Bound on `R_T / h_T`, twice the bound on `H_T / h_T`.
    pub d_r: f64,
    pub forward: MacDirection,
    pub reverse: MacDirection,
}

impl MacReport {
    pub fn passed(&self) -> bool {
        self.forward.passed() && self.reverse.passed()
    }
}

/// Relative slack on the bounds checked by [`mac_experiment`].
pub const MAC_SLACK: f64 = 1e-9;

/// Forward: tetrahedra satisfying the maximum angle condition obey
/// `H_T/h_T <= D` and `R_T/h_T <= 2D`. Reverse: tetrahedra with
/// `R_T/h_T <= 2D` satisfy the condition with the angle recovered from
/// `H_T/h_T <= 4D`.
pub fn mac_experiment(n: usize, gamma_max: f64, seed: u64) -> Result<MacReport> {
    let constants = mac_bound_constants(gamma_max)?;
    let d = constants.d;
    let d_r = 2.0 * d;

    let forward_spec = TetraGenSpec::new(Family::MacConstrained { gamma_max }, seed);
    let forward = run_direction(n, |i| {
        let t = generate_one(&forward_spec, i)?;
        let g = angles(&t)?;
        let h = g.h[5];
        let (hh, rh) = (g.h_t / h, g.r_t / h);
        let ok = hh <= d * (1.0 + MAC_SLACK) && rh <= d_r * (1.0 + MAC_SLACK);
        let rec = MacSample {
            index: i,
            h_over_h: hh,
            r_over_h: rh,
            max_angle: g.max_angle,
            bound: d,
            ok,
        };
        Ok((hh, rec, t))
    });

    let reverse_spec = TetraGenSpec::new(Family::QualityBounded { bound: d_r }, seed ^ 0x5EED_0F_0E7E);
    let reverse = run_direction(n, |i| {
        let t = generate_one(&reverse_spec, i)?;
        let g = angles(&t)?;
        let h = g.h[5];
        let gamma_prime = reverse_gamma_max(Some(g.classification.kind), 2.0 * d_r)?;
        let rec = MacSample {
            index: i,
            h_over_h: g.h_t / h,
            r_over_h: g.r_t / h,
            max_angle: g.max_angle,
            bound: gamma_prime,
            ok: mac_check(&t, gamma_prime)?,
        };
        Ok((g.max_angle, rec, t))
    });

    Ok(MacReport {
        gamma_max,
        constants,
        d_r,
        forward,
        reverse,
    })
}

type SampleOutcome = Result<(f64, MacSample, Tetrahedron)>;

fn run_direction(n: usize, sample: impl Fn(u64) -> SampleOutcome + Sync + Send) -> MacDirection {
    let mut dir = MacDirection {
        requested: n,
        samples: 0,
        counterexamples: Vec::new(),
        worst: 0.0,
        generation_error: None,
        records: Vec::new(),
    };
    // An infeasible sampler fails on every index; stop after the first.
    let first = match sample(0) {
        Err(e) => {
            dir.generation_error = Some(e.to_string());
            return dir;
        }
        ok => ok,
    };
    let rest: Vec<SampleOutcome> = (1..n as u64).into_par_iter().map(&sample).collect();
    for r in std::iter::once(first).chain(rest) {
        match r {
            Ok((w, rec, t)) => {
                dir.samples += 1;
                dir.worst = dir.worst.max(w);
                if !rec.ok {
                    dir.counterexamples.push(MacCounterexample {
                        index: rec.index,
                        tetrahedron: t,
                        h_over_h: rec.h_over_h,
                        r_over_h: rec.r_over_h,
                        max_angle: rec.max_angle,
                        bound: rec.bound,
                    });
                }
                dir.records.push(rec);
            }
            Err(e) => {
                if dir.generation_error.is_none() {
                    dir.generation_error = Some(e.to_string());
                }
            }
        }
    }
    dir
}

/// Spectral norms of `A` and `A^{-1}` against the bounds `||A|| <= 2` and
/// `||A^{-1}|| <= 2/(t1 t2) = H_T/(3 h_T) <= 2 R_T/(3 h_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBounds {
    pub norm_a: f64,
    pub norm_a_inv: f64,
    pub two_over_t1t2: f64,
    pub h_bound: f64,
    pub r_bound: f64,
}

pub fn chain_bounds(t: &Tetrahedron) -> Result<ChainBounds> {
    let sp = standard_position(t)?;
    let mats = matrices(&sp);
    let inv = mats
        .a
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular A".into()))?;
    let (r, h) = quality(t)?;
    let ht = t.diameter();
    Ok(ChainBounds {
        norm_a: spectral_norm(&mats.a),
        norm_a_inv: spectral_norm(&inv),
        two_over_t1t2: 2.0 / (sp.t1 * sp.t2),
        h_bound: h / (3.0 * ht),
        r_bound: 2.0 * r / (3.0 * ht),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprField;
    use crate::geom::Reference;
    use crate::poly::Polynomial3;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_reproduced() {
        let q = Polynomial3::from_coeffs([(crate::lattice::MultiIndex::new(1, 1, 0), 2.0)]);
        let r = error_ratio(&q, &Reference::Hat.tetrahedron(), 2, 0, Exponent::Finite(2.0)).unwrap();
        assert!(r.error < 1e-14);
        assert!(r.indeterminate);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn square_on_reference() {
        // v = x^2, k = 1: |v|_{2,2} = sqrt(4/6); the residual is x^2 - x.
        let v = ExprField::parse("x^2", 2).unwrap();
        let t = Reference::Hat.tetrahedron();
        let r = error_ratio(&v, &t, 1, 0, Exponent::Finite(2.0)).unwrap();
        let oracle = &(&Polynomial3::coordinate(0) * &Polynomial3::coordinate(0)) - &Polynomial3::coordinate(0);
        let sq = (&oracle * &oracle).integrate(&t).unwrap().sqrt();
        assert_relative_eq!(r.error, sq, max_relative = 1e-12);
        assert_relative_eq!(r.seminorm_hi, (4.0f64 / 6.0).sqrt(), max_relative = 1e-12);
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }

    #[test]
    fn inadmissible_is_refused() {
        let v = ExprField::parse("x^2", 2).unwrap();
        let err = error_ratio(&v, &Reference::Hat.tetrahedron(), 1, 1, Exponent::Finite(2.0)).unwrap_err();
        assert!(matches!(err, Error::InadmissiblePC { .. }));
    }

    #[test]
    fn regular_ratio_is_one() {
        let (r, h) = quality(&Tetrahedron::regular()).unwrap();
        assert_relative_eq!(r / h, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn small_equivalence_sample() {
        let rep = equivalence_sample(2000, &TetraGenSpec::new(Family::Mixed, 1)).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_ratio >= 0.5 && rep.max_ratio <= 2.0);
    }

    #[test]
    fn convergence_exact_for_polynomials() {
        let q = Polynomial3::from_coeffs([(crate::lattice::MultiIndex::new(0, 1, 1), 1.0)]);
        let t = Reference::Hat.tetrahedron();
        let s = convergence_study(&q, &t, 2, 0, Exponent::Finite(2.0), 3).unwrap();
        assert!(s.exact);
        assert!(s.orders.is_empty());
    }

    #[test]
    fn mac_experiment_right_angle() {
        let rep = mac_experiment(200, PI / 2.0, 7).unwrap();
        assert!(rep.forward.passed(), "{:?}", rep.forward.counterexamples.first());
        assert!(rep.reverse.passed(), "{:?}", rep.reverse.counterexamples.first());
    }

    #[test]
    fn chain_bounds_hold_on_samples() {
        for t in generate(&TetraGenSpec::new(Family::Mixed, 3), 1000).unwrap() {
            let c = chain_bounds(&t).unwrap();
            assert!(c.norm_a <= 2.0 + 1e-12);
            assert!(c.norm_a_inv <= c.two_over_t1t2 * (1.0 + 1e-9));
            assert_relative_eq!(c.two_over_t1t2, c.h_bound, max_relative = 1e-9);
            assert!(c.h_bound <= c.r_bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn identity_squeeze_is_reference() {
        let c = corpus(1, 1).unwrap();
        let s = squeeze_sweep(1, 0, Exponent::Finite(2.0), &[[1.0, 1.0, 1.0]], &c[..2], Kind::Type1).unwrap();
        let direct = error_ratio(&*c[0].on(&Reference::Hat.tetrahedron(), 1).unwrap(), &Reference::Hat.tetrahedron(), 1, 0, Exponent::Finite(2.0))
            .unwrap();
        assert!(s.rows[0].max_ratio >= direct.ratio);
        assert_eq!(s.rows.len(), 1);
    }
}

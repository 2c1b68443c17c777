//! The acceptance suite, one function per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use anisotetra::expr::ExprField;
use anisotetra::geom::{
    spectral_norm, matrices, standard_position, verify_trig_identities, Kind, Point3, Reference, Tetrahedron,
};
use anisotetra::interp::interpolate;
use anisotetra::lattice::{enumerate_boxes, residual_quotients_vanish, sigma_k, MultiIndex};
use anisotetra::quad::{rule_for_degree, Exponent};
use anisotetra::verify::corpus::random_polynomial;
use anisotetra::verify::{
    convergence_study, corpus, eps_grid, equivalence_sample, generate, generate_one, mac_experiment, squeeze_sweep,
    Family, TetraGenSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{dim_p, execute, worked_example_matches};
use crate::config::{CommandKind, RunConfig};
use crate::CliError;

pub const ALL: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: serde_json::Value,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

struct Verdict {
    passed: bool,
    detail: String,
    metrics: serde_json::Value,
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "quality equivalence",
        2 => "trigonometric identities",
        3 => "standard position",
        4 => "interpolation reproduction",
        5 => "difference quotients",
        6 => "anisotropy robustness",
        7 => "convergence orders",
        8 => "maximum angle condition",
        9 => "quadrature exactness",
        10 => "determinism",
        _ => "unknown",
    }
}

/// Separate random streams per criterion.
fn sub_seed(seed: u64, id: u8) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64)
}

pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionOutcome, CliError> {
    let start = Instant::now();
    let s = sub_seed(seed, id);
    let v = match id {
        1 => quality_equivalence(s),
        2 => trig_identities(s),
        3 => standard_positions(s),
        4 => reproduction(s),
        5 => difference_quotients(s),
        6 => anisotropy(s),
        7 => convergence(),
        8 => max_angle(s),
        9 => quadrature(),
        10 => determinism(seed),
        _ => return Err(CliError::input(format!("--only: no criterion {id} (valid: 1..=10)"))),
    };
    let v = v.unwrap_or_else(|e| Verdict {
        passed: false,
        detail: format!("error: {e}"),
        metrics: json!(null),
    });
    Ok(CriterionOutcome {
        id,
        name: name(id).into(),
        passed: v.passed,
        detail: v.detail,
        metrics: v.metrics,
        seconds: start.elapsed().as_secs_f64(),
    })
}

type Check = Result<Verdict, CliError>;

fn quality_equivalence(seed: u64) -> Check {
    let n = 100_000;
    let rep = equivalence_sample(n, &TetraGenSpec::new(Family::Mixed, seed))?;
    Ok(Verdict {
        passed: rep.violations == 0 && rep.n == n,
        detail: format!(
            "{n} samples, {} violations, R/H in [{:.4}, {:.4}]",
            rep.violations, rep.min_ratio, rep.max_ratio
        ),
        metrics: json!({
            "n": n,
            "violations": rep.violations,
            "min_ratio": rep.min_ratio,
            "max_ratio": rep.max_ratio,
            "worst_margin": rep.worst_margin,
        }),
    })
}

fn trig_identities(seed: u64) -> Check {
    let n = 10_000;
    let tol = 1e-9;
    let ts = generate(&TetraGenSpec::new(Family::Mixed, seed), n)?;
    let mut worst = 0.0f64;
    for t in &ts {
        worst = worst.max(verify_trig_identities(t)?.max());
    }
    Ok(Verdict {
        passed: worst < tol,
        detail: format!("{n} samples, max residual {worst:.3e} (< {tol:e})"),
        metrics: json!({"n": n, "max_residual": worst}),
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn standard_positions(seed: u64) -> Check {
    let n = 10_000;
    let tol = 1e-10;
    let ts = generate(&TetraGenSpec::new(Family::Mixed, seed), n)?;
    let (mut constraint, mut mapping, mut norms) = (0.0f64, 0.0f64, 0.0f64);
    for t in &ts {
        let sp = standard_position(t)?;
        constraint = constraint.max(sp.constraint_violation());
        let mats = matrices(&sp);
        let ad = mats.map();
        let refv = mats.reference().vertices();
        let ht = t.diameter();
        for i in 0..4 {
            let moved = sp.motion.apply(&t.v[sp.perm[i]]);
            mapping = mapping.max((ad * refv[i] - moved).norm() / ht);
        }
        let inv = |m: &anisotetra::nalgebra::Matrix3<f64>| m.try_inverse().map(|i| spectral_norm(&i)).unwrap_or(f64::INFINITY);
        for (closed, svd) in [
            (mats.norm_x, spectral_norm(&mats.x)),
            (mats.norm_x_inv, inv(&mats.x)),
            (mats.norm_y, spectral_norm(&mats.y)),
            (mats.norm_y_inv, inv(&mats.y)),
        ] {
            norms = norms.max(rel_diff(closed, svd));
        }
    }
    Ok(Verdict {
        passed: constraint <= tol && mapping <= tol && norms <= tol,
        detail: format!(
            "{n} samples, constraints {constraint:.2e}, A D mapping {mapping:.2e} h_T, norms vs SVD {norms:.2e}"
        ),
        metrics: json!({
            "n": n,
            "constraint_violation": constraint,
            "mapping_residual_over_h": mapping,
            "norm_mismatch": norms,
        }),
    })
}

/// Anisotropic element number `i`: squeezed references, needles, slivers.
fn anisotropic(seed: u64, i: u64) -> anisotetra::Result<Tetrahedron> {
    let family = match i % 3 {
        0 => {
            let a2 = 10f64.powf(-(((i / 3) % 7) as f64) / 2.0);
            let a3 = 10f64.powf(-(((i / 3 * 3 + 1) % 5) as f64) / 2.0);
            let kind = if (i / 3) % 2 == 0 { Kind::Type1 } else { Kind::Type2 };
            Family::Squeezed {
                alpha: [1.0, a2, a3],
                kind,
            }
        }
        1 => Family::NeedleRange {
            eps_min: 1e-4,
            eps_max: 1e-1,
        },
        _ => Family::SliverRange {
            eps_min: 1e-4,
            eps_max: 1e-1,
        },
    };
    generate_one(&TetraGenSpec::new(family, seed), i)
}

fn reproduction(seed: u64) -> Check {
    let per_k = 100;
    let tol = 1e-9;
    let mut worst = 0.0f64;
    let mut per = Vec::new();
    for k in 1..=4usize {
        let mut worst_k = 0.0f64;
        for i in 0..per_k as u64 {
            let idx = (k as u64) * 1000 + i;
            let t = anisotropic(seed, idx)?;
            let q = random_polynomial(k, seed, idx);
            let it = interpolate(&q, &t, k)?;
            let mut pts: Vec<Point3> = sigma_k(&t, 12)?.into_iter().map(|n| n.point).collect();
            pts.extend(rule_for_degree(10)?.points(&t));
            let (mut diff, mut sup) = (0.0f64, 0.0f64);
            for x in &pts {
                let qx = q.eval(x);
                diff = diff.max((qx - it.eval(x)).abs());
                sup = sup.max(qx.abs());
            }
            worst_k = worst_k.max(diff / sup);
        }
        per.push(worst_k);
        worst = worst.max(worst_k);
    }
    Ok(Verdict {
        passed: worst < tol,
        detail: format!("k = 1..4, {per_k} polynomials each, max |q - Iq| / |q| = {worst:.2e}"),
        metrics: json!({"per_k": per, "max_relative": worst}),
    })
}

fn difference_quotients(seed: u64) -> Check {
    let tol = 1e-9;
    let example = worked_example_matches();
    let mut counts_ok = true;
    let mut count_checks = 0;
    for k in 1..=5usize {
        for delta in MultiIndex::all_up_to(k).into_iter().filter(|d| d.order() >= 1) {
            for reference in [Reference::Hat, Reference::Tilde] {
                count_checks += 1;
                counts_ok &= enumerate_boxes(k, delta, reference)?.len() == dim_p(k - delta.order());
            }
        }
    }
    let mut worst = 0.0f64;
    let mut fields = 0;
    for k in 1..=4usize {
        let lib = corpus(k, seed)?;
        fields = lib.len();
        for reference in [Reference::Hat, Reference::Tilde] {
            let t = reference.tetrahedron();
            for f in &lib {
                worst = worst.max(residual_quotients_vanish(&*f.on(&t, k)?, &t, reference, k)?);
            }
        }
    }
    Ok(Verdict {
        passed: example && counts_ok && worst < tol,
        detail: format!(
            "worked example {}, {count_checks} box counts {}, {fields} fields k <= 4 max residual quotient {worst:.2e}",
            if example { "matches" } else { "differs" },
            if counts_ok { "match" } else { "differ" },
        ),
        metrics: json!({
            "worked_example_matches": example,
            "box_counts_match": counts_ok,
            "max_residual_quotient": worst,
        }),
    })
}

fn anisotropy(seed: u64) -> Check {
    let (max_spread, max_slope) = (4.0, 0.1);
    let grid = eps_grid(11);
    let lib = corpus(1, seed)?;
    let mut passed = true;
    let mut parts = Vec::new();
    let mut metrics = Vec::new();
    for kind in [Kind::Type1, Kind::Type2] {
        for (m, p) in [(0, 2.0), (1, 3.0)] {
            let res = squeeze_sweep(1, m, Exponent::Finite(p), &grid, &lib, kind)?;
            let s = res.summary;
            passed &= s.spread < max_spread && s.slope <= max_slope;
            parts.push(format!(
                "{} m={m} p={p}: spread {:.2} slope {:.3}",
                match kind {
                    Kind::Type1 => "type1",
                    Kind::Type2 => "type2",
                },
                s.spread,
                s.slope
            ));
            metrics.push(json!({"kind": format!("{kind:?}"), "m": m, "p": p, "summary": s}));
        }
    }
    Ok(Verdict {
        passed,
        detail: parts.join("; "),
        metrics: json!(metrics),
    })
}

fn convergence() -> Check {
    let v = ExprField::parse("sin(x + 2*y + 3*z)", 4)?;
    let cases: [(usize, usize, [[f64; 3]; 4]); 4] = [
        (1, 0, [[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.2, 0.8, 0.1], [0.1, 0.2, 0.3]]),
        (2, 0, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.2], [0.6, 0.25, 0.0], [0.3, 0.1, 0.3]]),
        (2, 1, [[0.0, 0.0, 0.0], [0.9, 0.1, 0.0], [0.2, 0.5, 0.0], [0.2, 0.1, 0.35]]),
        (3, 1, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.15, 0.3, 0.0], [0.3, 0.2, 0.7]]),
    ];
    let p = Exponent::Finite(2.0);
    let mut passed = true;
    let mut parts = Vec::new();
    let mut metrics = Vec::new();
    for (k, m, c) in cases {
        let t0 = Tetrahedron::from_coords(c)?;
        let st = convergence_study(&v, &t0, k, m, p, 5)?;
        let order = st.final_order().unwrap_or(f64::NAN);
        let expected = (k + 1 - m) as f64;
        passed &= (order - expected).abs() <= 0.1;
        parts.push(format!("(k={k}, m={m}) {order:.3} vs {expected}"));
        metrics.push(json!({"k": k, "m": m, "p": p, "orders": st.orders, "expected": expected}));
    }
    Ok(Verdict {
        passed,
        detail: parts.join("; "),
        metrics: json!(metrics),
    })
}

fn max_angle(seed: u64) -> Check {
    let n = 10_000;
    let mut passed = true;
    let mut parts = Vec::new();
    let mut metrics = Vec::new();
    for (label, g) in [
        ("pi/3+0.01", PI / 3.0 + 0.01),
        ("pi/2", PI / 2.0),
        ("2pi/3", 2.0 * PI / 3.0),
        ("0.9pi", 0.9 * PI),
    ] {
        let rep = mac_experiment(n, g, seed)?;
        passed &= rep.passed();
        let dir = |d: &anisotetra::verify::MacDirection| match &d.generation_error {
            Some(_) => format!("no samples ({} of {n})", d.samples),
            None => format!("{} samples, {} counterexamples", d.samples, d.counterexamples.len()),
        };
        parts.push(format!("{label}: forward {}, reverse {}", dir(&rep.forward), dir(&rep.reverse)));
        metrics.push(json!({
            "gamma_max": g,
            "d": rep.constants.d,
            "forward": {"samples": rep.forward.samples, "counterexamples": rep.forward.counterexamples.len(),
                        "worst_h_over_h": rep.forward.worst, "generation_error": rep.forward.generation_error},
            "reverse": {"samples": rep.reverse.samples, "counterexamples": rep.reverse.counterexamples.len(),
                        "worst_angle": rep.reverse.worst, "generation_error": rep.reverse.generation_error},
        }));
    }
    Ok(Verdict {
        passed,
        detail: parts.join("; "),
        metrics: json!(metrics),
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn quadrature() -> Check {
    let tol = 1e-12;
    let t = Reference::Hat.tetrahedron();
    let mut worst = 0.0f64;
    let mut count = 0;
    for a in MultiIndex::all_up_to(12) {
        let exact = factorial(a.0[0]) * factorial(a.0[1]) * factorial(a.0[2]) / factorial(a.order() as u32 + 3);
        let f = |x: &Point3| x.x.powi(a.0[0] as i32) * x.y.powi(a.0[1] as i32) * x.z.powi(a.0[2] as i32);
        for d in [a.order().max(1), 12] {
            let q = rule_for_degree(d)?.integrate(&t, f)?;
            worst = worst.max((q - exact).abs() / exact);
            count += 1;
        }
    }
    Ok(Verdict {
        passed: worst < tol,
        detail: format!("{count} monomial integrals up to degree 12, max relative error {worst:.2e}"),
        metrics: json!({"integrals": count, "max_relative_error": worst}),
    })
}

fn determinism(seed: u64) -> Check {
    let cfg = RunConfig {
        command: Some(CommandKind::Sweep),
        k: Some(1),
        m: Some(0),
        p: Some(Exponent::Finite(2.0)),
        alphas: Some("1,eps,eps".into()),
        eps_levels: Some(10),
        seed: Some(seed),
        ..RunConfig::default()
    };
    let a = execute(cfg.clone())?.csv.unwrap_or_default();
    let b = execute(cfg)?.csv.unwrap_or_default();
    let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    Ok(Verdict {
        passed: !a.is_empty() && a == b,
        detail: format!("two sweeps, {rows} rows, {} bytes, identical: {}", a.len(), a == b),
        metrics: json!({"rows": rows, "bytes": a.len(), "identical": a == b}),
    })
}

//! One function per subcommand, each turning a resolved [`RunConfig`] into a
//! report and, for table commands, CSV rows.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use anisotetra::expr::{caret_diagnostic, ExprField};
use anisotetra::field::ScalarField;
use anisotetra::geom::{
    angles, mac_bound_constants, mac_check_with_tolerance, matrices, spectral_norm, standard_position, Kind,
    Reference, ANGLE_EPS,
};
use anisotetra::lattice::{enumerate_boxes, quotient_stencil, residual_quotients_vanish, MultiIndex};
use anisotetra::quad::validate_p;
use anisotetra::verify::{self, chain_bounds, corpus, error_ratio, mac_experiment, squeeze_sweep, CorpusEntry};
use serde_json::json;

use crate::config::{parse_alphas, CommandKind, Format, KindArg, RunConfig};
use crate::output::{fmt_f64, to_json, to_value, write_output, CsvTable, Report};
use crate::selftest;
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK};

pub const SWEEP_COLUMNS: [&str; 11] = [
    "index",
    "alpha1",
    "alpha2",
    "alpha3",
    "h_t",
    "r_t",
    "max_ratio",
    "max_squeeze_ratio",
    "argmax_field",
    "refinement_warnings",
    "indeterminate",
];

pub const MAC_COLUMNS: [&str; 7] = ["direction", "index", "h_over_h", "r_over_h", "max_angle", "bound", "ok"];

pub const DQ_COLUMNS: [&str; 7] = ["eta1", "eta2", "eta3", "node1", "node2", "node3", "weight"];

/// Threshold on residual difference quotients unless overridden.
pub const DQ_RESIDUAL_TOL: f64 = 1e-9;

/// Expansion of the order-4 quotient with offset (2,1,1): node offsets
/// and integer weights, over the denominator 2.
pub const WORKED_EXAMPLE: [([u32; 3], i64); 12] = [
    ([2, 1, 1], 1),
    ([1, 1, 1], -2),
    ([0, 1, 1], 1),
    ([2, 0, 1], -1),
    ([1, 0, 1], 2),
    ([0, 0, 1], -1),
    ([2, 1, 0], -1),
    ([1, 1, 0], 2),
    ([0, 1, 0], -1),
    ([2, 0, 0], 1),
    ([1, 0, 0], -2),
    ([0, 0, 0], 1),
];

pub struct Rendered {
    pub report: Report,
    pub csv: Option<Vec<u8>>,
    pub exit: i32,
}

/// Fills defaults into `cfg`, runs the command and renders its outputs.
pub fn execute(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let command = cfg.command()?;
    if matches!(command, CommandKind::Sweep | CommandKind::Mac | CommandKind::Selftest)
        || (command == CommandKind::Error && cfg.expr.is_none())
        || command == CommandKind::Dq
    {
        cfg.resolve_seed()?;
    }
    if cfg.out.is_none() {
        cfg.out = Some("-".into());
    }
    if cfg.format.is_none() {
        cfg.format = Some(match command {
            CommandKind::Sweep | CommandKind::Mac | CommandKind::Dq => Format::Csv,
            _ => Format::Json,
        });
    }
    match command {
        CommandKind::Analyze => analyze(cfg),
        CommandKind::Error => error(cfg),
        CommandKind::Sweep => sweep(cfg),
        CommandKind::Mac => mac(cfg),
        CommandKind::Dq => dq(cfg),
        CommandKind::Selftest => selftest_cmd(cfg),
    }
}

/// Writes the rendered outputs where the config says.
pub fn emit(r: &Rendered) -> Result<(), CliError> {
    let cfg = &r.report.config;
    let out = cfg.out.as_deref().unwrap_or("-");
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => write_output(out, &to_json(&r.report)?)?,
        Format::Csv => {
            let csv = r.csv.as_ref().ok_or_else(|| {
                CliError::input(format!("--format csv is not available for `{}`", r.report.command))
            })?;
            write_output(out, csv)?;
            if let Some(path) = &cfg.summary {
                write_output(path, &to_json(&r.report)?)?;
            }
        }
    }
    for w in &r.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn analyze(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let gamma_max = *cfg.gamma_max.get_or_insert(FRAC_PI_2);
    let eps = cfg.tolerances.angle_eps.unwrap_or(ANGLE_EPS);
    let t = cfg.tetrahedron()?;
    let g = angles(&t)?;
    let sp = standard_position(&t)?;
    let mats = matrices(&sp);
    let a_inv = mats
        .a
        .try_inverse()
        .ok_or_else(|| CliError::numerical("transformation matrix is singular"))?;
    let mac = mac_check_with_tolerance(&t, gamma_max, eps)?;
    let constants = mac_bound_constants(gamma_max)?;
    let results = json!({
        "vertices": t.v.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>(),
        "volume": g.volume,
        "diameter": g.h[5],
        "r_t": g.r_t,
        "h_t": g.h_t,
        "kind": kind_name(g.classification.kind),
        "mac": mac,
        "gamma_max": gamma_max,
        "max_angle": g.max_angle,
        "geometry": to_value(&g)?,
        "standard_position": {
            "perm": sp.perm,
            "alpha": sp.alpha,
            "s1": sp.s1,
            "t1": sp.t1,
            "s21": sp.s21,
            "s22": sp.s22,
            "t2": sp.t2,
            "volume": sp.volume(),
            "constraint_violation": sp.constraint_violation(),
            "motion_residual": sp.motion_residual(&t),
        },
        "matrices": {
            "a": to_value(&mats.a)?,
            "norm_a": spectral_norm(&mats.a),
            "norm_a_inv": spectral_norm(&a_inv),
            "norm_a_bound": mats.norm_a_bound,
            "norm_a_inv_bound": mats.norm_a_inv_bound,
            "norm_x": mats.norm_x,
            "norm_x_inv": mats.norm_x_inv,
            "norm_y": mats.norm_y,
            "norm_y_inv": mats.norm_y_inv,
        },
        "chain_bounds": to_value(&chain_bounds(&t)?)?,
        "mac_constants": to_value(&constants)?,
    });
    Ok(Rendered {
        report: Report::new(&cfg, results, Vec::new()),
        csv: None,
        exit: EXIT_OK,
    })
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Type1 => "type1",
        Kind::Type2 => "type2",
    }
}

/// Fills `k`, `m`, `p` and rejects inadmissible combinations.
fn resolve_kmp(cfg: &mut RunConfig) -> Result<(usize, usize, anisotetra::quad::Exponent), CliError> {
    let k = *cfg.k.get_or_insert(1);
    let m = *cfg.m.get_or_insert(0);
    let p = cfg.exponent();
    cfg.p = Some(p);
    let adm = validate_p(k, m, p);
    if !adm.admissible {
        return Err(CliError::input(format!("inadmissible (k, m, p) = ({k}, {m}, {p}): {}", adm.reason)));
    }
    Ok((k, m, p))
}

fn pick_fields(cfg: &RunConfig, k: usize) -> Result<Vec<CorpusEntry>, CliError> {
    let all = corpus(k, cfg.seed.unwrap_or_default())?;
    match &cfg.fields {
        None => Ok(all),
        Some(names) => names
            .iter()
            .map(|n| {
                all.iter().find(|e| &e.name == n).cloned().ok_or_else(|| {
                    let known: Vec<&str> = all.iter().map(|e| e.name.as_str()).collect();
                    CliError::input(format!("--field: unknown field {n:?}; known: {}", known.join(", ")))
                })
            })
            .collect(),
    }
}

fn parse_field(src: &str, order: usize) -> Result<ExprField, CliError> {
    ExprField::parse(src, order).map_err(|e| match e {
        anisotetra::Error::ExpressionParse { position, message } => {
            CliError::input(format!(
                "--expr: parse error at position {position}\n{}",
                caret_diagnostic(src, position, &message)
            ))
        }
        other => other.into(),
    })
}

fn error(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let (k, m, p) = resolve_kmp(&mut cfg)?;
    let t = cfg.tetrahedron()?;
    let (name, v): (String, Arc<dyn ScalarField>) = match (&cfg.expr, &cfg.fields) {
        (Some(src), _) => (src.clone(), Arc::new(parse_field(src, k + 1)?)),
        (None, Some(_)) => {
            let e = pick_fields(&cfg, k)?.remove(0);
            (e.name.clone(), e.on(&t, k)?)
        }
        (None, None) => return Err(CliError::input("error: pass --expr or --field")),
    };
    let r = error_ratio(&*v, &t, k, m, p)?;
    let mut warnings = Vec::new();
    if r.refinement_warning {
        warnings.push("seminorm quadrature did not settle under refinement".to_string());
    }
    if r.indeterminate {
        warnings.push("|v|_{k+1,p} is negligible; ratio is indeterminate".to_string());
    }
    if r.approximate {
        warnings.push("seminorms are approximate (sampled supremum or finite-difference derivatives)".to_string());
    }
    let mut results = to_value(&r)?;
    results["field"] = json!(name);
    Ok(Rendered {
        report: Report::new(&cfg, results, warnings),
        csv: None,
        exit: EXIT_OK,
    })
}

fn sweep(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let (k, m, p) = resolve_kmp(&mut cfg)?;
    let pattern = cfg.alphas.get_or_insert_with(|| "1,eps,eps".into()).clone();
    let levels = *cfg.eps_levels.get_or_insert(10);
    let kind: Kind = (*cfg.kind.get_or_insert(KindArg::Type1)).into();
    let alphas = parse_alphas(&pattern, levels)?;
    let fields = pick_fields(&cfg, k)?;
    let res = squeeze_sweep(k, m, p, &alphas, &fields, kind)?;

    let mut table = CsvTable::new(&SWEEP_COLUMNS)?;
    for r in &res.rows {
        table.row(&[
            r.index.to_string(),
            fmt_f64(r.alpha[0]),
            fmt_f64(r.alpha[1]),
            fmt_f64(r.alpha[2]),
            fmt_f64(r.h_t),
            fmt_f64(r.r_t),
            fmt_f64(r.max_ratio),
            fmt_f64(r.max_squeeze_ratio),
            r.argmax_field.clone(),
            r.refinement_warnings.to_string(),
            r.indeterminate.to_string(),
        ])?;
    }
    let mut warnings = Vec::new();
    let refine: usize = res.rows.iter().map(|r| r.refinement_warnings).sum();
    if refine > 0 {
        warnings.push(format!("{refine} seminorm evaluations did not settle under quadrature refinement"));
    }
    let indet: usize = res.rows.iter().map(|r| r.indeterminate).sum();
    if indet > 0 {
        warnings.push(format!("{indet} ratios indeterminate (field nearly polynomial)"));
    }
    let results = json!({
        "k": k,
        "m": m,
        "p": p,
        "kind": kind_name(kind),
        "fields": fields.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
        "summary": to_value(&res.summary)?,
        "rows": to_value(&res.rows)?,
    });
    Ok(Rendered {
        report: Report::new(&cfg, results, warnings),
        csv: Some(table.finish()?),
        exit: EXIT_OK,
    })
}

fn direction_json(d: &verify::MacDirection) -> serde_json::Value {
    json!({
        "requested": d.requested,
        "samples": d.samples,
        "passed": d.passed(),
        "worst": d.worst,
        "counterexamples": d.counterexamples,
        "generation_error": d.generation_error,
    })
}

fn mac(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let gamma_max = *cfg.gamma_max.get_or_insert(FRAC_PI_2);
    let n = *cfg.n.get_or_insert(10_000);
    if n == 0 {
        return Err(CliError::input("--n: need at least one sample"));
    }
    let seed = cfg.seed.unwrap_or_default();
    let rep = mac_experiment(n, gamma_max, seed)?;

    let mut table = CsvTable::new(&MAC_COLUMNS)?;
    for (name, dir) in [("forward", &rep.forward), ("reverse", &rep.reverse)] {
        for s in &dir.records {
            table.row(&[
                name.to_string(),
                s.index.to_string(),
                fmt_f64(s.h_over_h),
                fmt_f64(s.r_over_h),
                fmt_f64(s.max_angle),
                fmt_f64(s.bound),
                s.ok.to_string(),
            ])?;
        }
    }
    let mut warnings = Vec::new();
    let mut exit = EXIT_OK;
    for (name, dir) in [("forward", &rep.forward), ("reverse", &rep.reverse)] {
        if let Some(e) = &dir.generation_error {
            warnings.push(format!("{name}: {e}"));
            exit = EXIT_NUMERICAL;
        }
        if !dir.counterexamples.is_empty() {
            warnings.push(format!("{name}: {} counterexamples", dir.counterexamples.len()));
            if exit == EXIT_OK {
                exit = EXIT_CHECK_FAILED;
            }
        }
    }
    let results = json!({
        "gamma_max": rep.gamma_max,
        "constants": to_value(&rep.constants)?,
        "d_r": rep.d_r,
        "passed": rep.passed(),
        "counterexamples": rep.forward.counterexamples.len() + rep.reverse.counterexamples.len(),
        "forward": direction_json(&rep.forward),
        "reverse": direction_json(&rep.reverse),
    });
    Ok(Rendered {
        report: Report::new(&cfg, results, warnings),
        csv: Some(table.finish()?),
        exit,
    })
}

/// `C(n + 3, 3)`, the dimension of the trivariate polynomials of degree `n`.
pub fn dim_p(n: usize) -> usize {
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// True when the stencil for (2,1,1) is exactly [`WORKED_EXAMPLE`].
pub fn worked_example_matches() -> bool {
    let s = quotient_stencil(MultiIndex::new(2, 1, 1));
    s.denominator == 2
        && s.terms.len() == WORKED_EXAMPLE.len()
        && WORKED_EXAMPLE
            .iter()
            .all(|(eta, w)| s.terms.iter().any(|(e, sw)| e.0 == *eta && sw == w))
}

fn dq(mut cfg: RunConfig) -> Result<Rendered, CliError> {
    let k = *cfg.k.get_or_insert(4);
    let delta = MultiIndex(*cfg.delta.get_or_insert([2, 1, 1]));
    let gamma = MultiIndex(*cfg.gamma.get_or_insert([0, 0, 0]));
    let tol = cfg.tolerances.dq_residual.unwrap_or(DQ_RESIDUAL_TOL);
    if delta.order() == 0 || delta.order() > k {
        return Err(CliError::input(format!("--delta: need 1 <= |delta| <= k = {k}, got |delta| = {}", delta.order())));
    }
    let stencil = quotient_stencil(delta);
    let mut table = CsvTable::new(&DQ_COLUMNS)?;
    let mut terms = Vec::new();
    for (eta, w) in &stencil.terms {
        let node = gamma + *eta;
        table.row(&[
            eta.0[0].to_string(),
            eta.0[1].to_string(),
            eta.0[2].to_string(),
            node.0[0].to_string(),
            node.0[1].to_string(),
            node.0[2].to_string(),
            w.to_string(),
        ])?;
        terms.push(json!({"eta": eta.0, "node": node.0, "weight": w}));
    }

    let mut box_counts = Vec::new();
    let mut counts_ok = true;
    for reference in [Reference::Hat, Reference::Tilde] {
        let n = enumerate_boxes(k, delta, reference)?.len();
        let expected = dim_p(k - delta.order());
        counts_ok &= n == expected;
        box_counts.push(json!({"reference": reference_name(reference), "boxes": n, "expected": expected}));
    }

    let fields = corpus(k, cfg.seed.unwrap_or_default())?;
    let mut residuals = Vec::new();
    let mut worst = 0.0f64;
    for reference in [Reference::Hat, Reference::Tilde] {
        let t = reference.tetrahedron();
        for f in &fields {
            let q = residual_quotients_vanish(&*f.on(&t, k)?, &t, reference, k)?;
            worst = worst.max(q);
            residuals.push(json!({"reference": reference_name(reference), "field": f.name, "max_quotient": q}));
        }
    }
    let example_ok = worked_example_matches();
    let passed = example_ok && counts_ok && worst < tol;
    let mut warnings = Vec::new();
    if !passed {
        warnings.push(format!(
            "checks failed: worked example {example_ok}, box counts {counts_ok}, max residual quotient {worst:e} (tolerance {tol:e})"
        ));
    }
    let results = json!({
        "k": k,
        "delta": delta.0,
        "gamma": gamma.0,
        "denominator": stencil.denominator,
        "scale": (k as f64).powi(delta.order() as i32) / stencil.denominator as f64,
        "terms": terms,
        "worked_example_matches": example_ok,
        "box_counts": box_counts,
        "residual_quotients": residuals,
        "max_residual_quotient": worst,
        "tolerance": tol,
        "passed": passed,
    });
    Ok(Rendered {
        report: Report::new(&cfg, results, warnings),
        csv: Some(table.finish()?),
        exit: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn reference_name(r: Reference) -> &'static str {
    match r {
        Reference::Hat => "hat",
        Reference::Tilde => "tilde",
    }
}

fn selftest_cmd(cfg: RunConfig) -> Result<Rendered, CliError> {
    let seed = cfg.seed.unwrap_or_default();
    let ids: Vec<u8> = match &cfg.only {
        Some(ids) => ids.clone(),
        None => selftest::ALL.to_vec(),
    };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = selftest::run_criterion(id, seed)?;
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let results = json!({
        "passed": passed,
        "criteria": to_value(&outcomes)?,
    });
    Ok(Rendered {
        report: Report::new(&cfg, results, Vec::new()),
        csv: None,
        exit: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

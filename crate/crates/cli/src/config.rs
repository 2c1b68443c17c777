//! Run configuration: what a command was asked to do, after merging a
//! config file, command-line flags and defaults.

use std::fmt;
use std::path::Path;

use anisotetra::geom::{Kind, Reference, Tetrahedron};
use anisotetra::lattice::MultiIndex;
use anisotetra::quad::Exponent;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "ANISOTETRA_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Analyze,
    Error,
    Sweep,
    Mac,
    Dq,
    Selftest,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::Analyze => "analyze",
            CommandKind::Error => "error",
            CommandKind::Sweep => "sweep",
            CommandKind::Mac => "mac",
            CommandKind::Dq => "dq",
            CommandKind::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefName {
    Hat,
    Tilde,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TetraSource {
    Vertices([[f64; 3]; 4]),
    File(String),
    Reference(RefName),
}

impl TetraSource {
    /// `ref`/`hat`, `tilde` and `regular` name built-in elements; anything
    /// else is a file path.
    pub fn from_arg(s: &str) -> TetraSource {
        match s.trim().to_ascii_lowercase().as_str() {
            "ref" | "hat" => TetraSource::Reference(RefName::Hat),
            "tilde" => TetraSource::Reference(RefName::Tilde),
            "regular" => TetraSource::Reference(RefName::Regular),
            _ => TetraSource::File(s.to_string()),
        }
    }

    pub fn load(&self) -> Result<Tetrahedron, CliError> {
        let coords = match self {
            TetraSource::Vertices(c) => *c,
            TetraSource::File(path) => read_tetra_file(Path::new(path))?,
            TetraSource::Reference(RefName::Hat) => return Ok(Reference::Hat.tetrahedron()),
            TetraSource::Reference(RefName::Tilde) => return Ok(Reference::Tilde.tetrahedron()),
            TetraSource::Reference(RefName::Regular) => return Ok(Tetrahedron::regular()),
        };
        Tetrahedron::from_coords(coords).map_err(CliError::from)
    }
}

/// Parses `"x,y,z x,y,z x,y,z x,y,z"`.
pub fn parse_vertices(s: &str) -> Result<[[f64; 3]; 4], CliError> {
    let groups: Vec<&str> = s.split_whitespace().collect();
    if groups.len() != 4 {
        return Err(CliError::input(format!(
            "--vertices: expected 4 vertices, got {}{}",
            groups.len(),
            if groups.len() < 4 {
                format!(" (vertex {} missing)", groups.len() + 1)
            } else {
                String::new()
            }
        )));
    }
    let mut out = [[0.0; 3]; 4];
    for (i, g) in groups.iter().enumerate() {
        out[i] = parse_triple(g.split(',')).map_err(|m| CliError::input(format!("--vertices: vertex {}: {m}", i + 1)))?;
    }
    Ok(out)
}

fn parse_triple<'a>(parts: impl Iterator<Item = &'a str>) -> Result<[f64; 3], String> {
    let vals: Vec<&str> = parts.filter(|s| !s.is_empty()).collect();
    if vals.len() != 3 {
        return Err(format!("expected 3 coordinates, got {}", vals.len()));
    }
    let mut out = [0.0; 3];
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v.trim().parse().map_err(|_| format!("bad coordinate {v:?}"))?;
    }
    Ok(out)
}

/// Four `x y z` lines; `#` starts a comment, blank lines are skipped.
pub fn read_tetra_file(path: &Path) -> Result<[[f64; 3]; 4], CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("--tetra: cannot read {}: {e}", path.display())))?;
    parse_tetra_text(&text).map_err(|m| CliError::input(format!("--tetra: {}: {m}", path.display())))
}

pub fn parse_tetra_text(text: &str) -> Result<[[f64; 3]; 4], String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row = parse_triple(body.split_whitespace()).map_err(|m| format!("line {}: {m}", lineno + 1))?;
        rows.push(row);
    }
    if rows.len() != 4 {
        return Err(format!("expected 4 vertex lines, got {}", rows.len()));
    }
    Ok([rows[0], rows[1], rows[2], rows[3]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    #[value(name = "1")]
    Type1,
    #[value(name = "2")]
    Type2,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Type1 => Kind::Type1,
            KindArg::Type2 => Kind::Type2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Slack on angle comparisons in the maximum angle check, radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_eps: Option<f64>,
    /// Threshold on residual difference quotients in `dq`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dq_residual: Option<f64>,
}

impl Tolerances {
    fn is_empty(&self) -> bool {
        self.angle_eps.is_none() && self.dq_residual.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tetra: Option<TetraSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    /// Expression for `v`, in `x`, `y`, `z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// Corpus field names; `error` uses the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<String>>,
    /// Alpha grid pattern such as `1,eps,eps`, or `;`-separated triples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<KindArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<[u32; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[u32; 3]>,
    /// Criteria to run in `selftest`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// JSON report path when `format` is `csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Tolerances::is_empty")]
    pub tolerances: Tolerances,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("--config: cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top; command, tetra, gamma_max, k, m, p, expr, fields, alphas, eps_levels,
                 kind, n, seed, delta, gamma, only, out, format, summary);
        let (mut tol, top_tol) = (self.tolerances, top.tolerances);
        overlay!(tol, top_tol; angle_eps, dq_residual);
        self.tolerances = tol;
        self
    }

    /// Seed from the config, else `ANISOTETRA_SEED`, else the built-in
    /// default.
    pub fn resolve_seed(&mut self) -> Result<u64, CliError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        let seed = match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("{SEED_ENV}: not an unsigned integer: {v:?}")))?,
            Err(_) => DEFAULT_SEED,
        };
        self.seed = Some(seed);
        Ok(seed)
    }

    pub fn command(&self) -> Result<CommandKind, CliError> {
        self.command.ok_or_else(|| CliError::input("config: missing field `command`"))
    }

    pub fn tetrahedron(&self) -> Result<Tetrahedron, CliError> {
        self.tetra
            .as_ref()
            .ok_or_else(|| CliError::input("missing tetrahedron: pass --vertices or --tetra"))?
            .load()
    }

    pub fn exponent(&self) -> Exponent {
        self.p.unwrap_or(Exponent::Finite(2.0))
    }
}

/// `"1,eps,eps"` expands over `eps = 2^-l`, `l = 0..levels`; explicit
/// triples are separated by `;`.
pub fn parse_alphas(pattern: &str, levels: usize) -> Result<Vec<[f64; 3]>, CliError> {
    let bad = |m: String| CliError::input(format!("--alphas: {m}"));
    let mut out = Vec::new();
    for seg in pattern.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let toks: Vec<&str> = seg.split(',').map(str::trim).collect();
        if toks.len() != 3 {
            return Err(bad(format!("expected 3 components in {seg:?}")));
        }
        let symbolic = toks.iter().any(|t| t.eq_ignore_ascii_case("eps"));
        let count = if symbolic { levels } else { 1 };
        for l in 0..count {
            let eps = 0.5f64.powi(l as i32);
            let mut a = [0.0; 3];
            for (ai, t) in a.iter_mut().zip(&toks) {
                *ai = if t.eq_ignore_ascii_case("eps") {
                    eps
                } else {
                    t.parse().map_err(|_| bad(format!("bad component {t:?}")))?
                };
            }
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(bad("empty grid".into()));
    }
    Ok(out)
}

pub fn parse_multi_index(s: &str, flag: &str) -> Result<[u32; 3], CliError> {
    s.parse::<MultiIndex>()
        .map(|m| m.0)
        .map_err(|e| CliError::input(format!("{flag}: {e}")))
}

pub fn parse_exponent(s: &str) -> Result<Exponent, CliError> {
    s.parse::<Exponent>()
        .map_err(|e| CliError::input(format!("--p: {e}")))
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    parse_exponent, parse_multi_index, parse_vertices, CommandKind, Format, KindArg, RunConfig, TetraSource,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "anisotetra", version, about = "Lagrange interpolation error analysis on tetrahedra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Geometry, classification, standard position and angle condition.
    Analyze {
        #[command(flatten)]
        tetra: TetraArgs,
        /// Angle bound for the maximum angle check, radians.
        #[arg(long)]
        gamma_max: Option<f64>,
        #[arg(long)]
        angle_eps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Interpolation error and bound ratio for one field.
    Error {
        #[command(flatten)]
        tetra: TetraArgs,
        /// Field as an expression in x, y, z.
        #[arg(long)]
        expr: Option<String>,
        /// Field from the built-in corpus, by name.
        #[arg(long)]
        field: Option<String>,
        #[command(flatten)]
        kmp: Kmp,
        #[command(flatten)]
        common: Common,
    },
    /// Interpolation error over a grid of squeezed reference elements.
    Sweep {
        #[command(flatten)]
        kmp: Kmp,
        /// Grid pattern, e.g. "1,eps,eps", or explicit triples "1,0.5,0.5;1,0.1,0.1".
        #[arg(long)]
        alphas: Option<String>,
        /// Number of eps = 2^-l levels, l = 0..levels.
        #[arg(long)]
        eps_levels: Option<usize>,
        /// Reference element: 1 or 2.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Restrict the corpus to these fields (repeatable).
        #[arg(long = "field")]
        fields: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum angle condition experiment in both directions.
    Mac {
        #[arg(long)]
        gamma_max: Option<f64>,
        /// Samples per direction.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Difference-quotient stencil, box counts and residual quotients.
    Dq {
        #[arg(long)]
        k: Option<usize>,
        /// Offset multi-index, e.g. 2,1,1.
        #[arg(long)]
        delta: Option<String>,
        /// Anchor multi-index of the printed stencil.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Criteria to run, e.g. 1,3,10.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the JSON report here when the output is CSV.
    #[arg(long)]
    pub summary: Option<String>,
    /// Random seed; defaults to $ANISOTETRA_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TetraArgs {
    /// Four vertices: "x,y,z x,y,z x,y,z x,y,z".
    #[arg(long, conflicts_with = "tetra")]
    pub vertices: Option<String>,
    /// File with four "x y z" lines, or one of ref, tilde, regular.
    #[arg(long)]
    pub tetra: Option<String>,
}

#[derive(Debug, Args)]
pub struct Kmp {
    /// Polynomial degree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Derivative order of the error seminorm.
    #[arg(long)]
    pub m: Option<usize>,
    /// Exponent, a number >= 1 or inf.
    #[arg(long)]
    pub p: Option<String>,
}

impl TetraArgs {
    fn source(&self) -> Result<Option<TetraSource>, CliError> {
        Ok(match (&self.vertices, &self.tetra) {
            (Some(v), _) => Some(TetraSource::Vertices(parse_vertices(v)?)),
            (None, Some(t)) => Some(TetraSource::from_arg(t)),
            (None, None) => None,
        })
    }
}

impl Kmp {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        cfg.k = self.k;
        cfg.m = self.m;
        cfg.p = self.p.as_deref().map(parse_exponent).transpose()?;
        Ok(())
    }
}

impl Cli {
    /// Config file (if any) overlaid with the flags given.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut flags = RunConfig::default();
        let (kind, common) = match self.command {
            Cmd::Analyze {
                tetra,
                gamma_max,
                angle_eps,
                common,
            } => {
                flags.tetra = tetra.source()?;
                flags.gamma_max = gamma_max;
                flags.tolerances.angle_eps = angle_eps;
                (CommandKind::Analyze, common)
            }
            Cmd::Error {
                tetra,
                expr,
                field,
                kmp,
                common,
            } => {
                flags.tetra = tetra.source()?;
                flags.expr = expr;
                flags.fields = field.map(|f| vec![f]);
                kmp.apply(&mut flags)?;
                (CommandKind::Error, common)
            }
            Cmd::Sweep {
                kmp,
                alphas,
                eps_levels,
                kind,
                fields,
                common,
            } => {
                kmp.apply(&mut flags)?;
                flags.alphas = alphas;
                flags.eps_levels = eps_levels;
                flags.kind = kind;
                flags.fields = (!fields.is_empty()).then_some(fields);
                (CommandKind::Sweep, common)
            }
            Cmd::Mac { gamma_max, n, common } => {
                flags.gamma_max = gamma_max;
                flags.n = n;
                (CommandKind::Mac, common)
            }
            Cmd::Dq {
                k,
                delta,
                gamma,
                tolerance,
                common,
            } => {
                flags.k = k;
                flags.delta = delta.as_deref().map(|d| parse_multi_index(d, "--delta")).transpose()?;
                flags.gamma = gamma.as_deref().map(|g| parse_multi_index(g, "--gamma")).transpose()?;
                flags.tolerances.dq_residual = tolerance;
                (CommandKind::Dq, common)
            }
            Cmd::Selftest { only, common } => {
                flags.only = (!only.is_empty()).then_some(only);
                (CommandKind::Selftest, common)
            }
        };
        flags.command = Some(kind);
        flags.out = common.out;
        flags.format = common.format;
        flags.summary = common.summary;
        flags.seed = common.seed;
        let base = match &common.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = base.command {
            if c != kind {
                return Err(CliError::input(format!("config is for `{c}`, not `{kind}`")));
            }
        }
        Ok(base.overlay(flags))
    }
}

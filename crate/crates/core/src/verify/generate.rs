//! Seeded random tetrahedra.
//!
//! Sample `i` draws from its own ChaCha stream `(seed, i)`, so a list is the
//! same whether it is produced serially or in parallel.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{mac_check, Kind, Point3, Tetrahedron};

/// Retry cap for rejection sampling, per sample.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Four points uniform in the unit ball.
    UniformBall,
    /// Apex at distance one from a small base triangle of size `eps`.
    Needle { eps: f64 },
    /// Needles with `eps` log-uniform in `[eps_min, eps_max]`.
    NeedleRange { eps_min: f64, eps_max: f64 },
    /// Flattened regular tetrahedron with a dihedral angle in `[pi - eps, pi)`.
    Sliver { eps: f64 },
    /// Slivers with `eps` log-uniform in `[eps_min, eps_max]`.
    SliverRange { eps_min: f64, eps_max: f64 },
    /// `diag(alpha)` applied to the reference tetrahedron of `kind`, then a
    /// random rigid motion.
    Squeezed { alpha: [f64; 3], kind: Kind },
    /// Rejection sampling of tetrahedra satisfying the maximum angle
    /// condition with `gamma_max`.
    MacConstrained { gamma_max: f64 },
    /// Rejection sampling of tetrahedra with `R_T / h_T <= bound`.
    QualityBounded { bound: f64 },
    /// Uniform mixture of ball, needle (eps in [1e-6, 1]) and sliver
    /// (eps in [1e-6, 1]) samples.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TetraGenSpec {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

impl TetraGenSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        TetraGenSpec { family, seed }
    }
}

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn generate(spec: &TetraGenSpec, n: usize) -> Result<Vec<Tetrahedron>> {
    if n < 1 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    (0..n as u64).into_par_iter().map(|i| generate_one(spec, i)).collect()
}

/// Sample number `index` of the stream described by `spec`.
pub fn generate_one(spec: &TetraGenSpec, index: u64) -> Result<Tetrahedron> {
    let mut rng = sample_rng(spec.seed, index);
    match spec.family {
        Family::MacConstrained { gamma_max } => {
            for _ in 0..MAX_ATTEMPTS {
                if let Ok(t) = proposal(&mut rng) {
                    if mac_check(&t, gamma_max)? {
                        return Ok(t);
                    }
                }
            }
            Err(Error::GenerationFailure(format!(
                "no tetrahedron satisfying the maximum angle condition with gamma_max = {gamma_max} \
                 in {MAX_ATTEMPTS} attempts (acceptance rate 0/{MAX_ATTEMPTS}) for sample {index}"
            )))
        }
        Family::QualityBounded { bound } => {
            for _ in 0..MAX_ATTEMPTS {
                if let Ok(t) = proposal(&mut rng) {
                    let (r, _) = crate::geom::quality(&t)?;
                    if r / t.diameter() <= bound {
                        return Ok(t);
                    }
                }
            }
            Err(Error::GenerationFailure(format!(
                "no tetrahedron with R_T/h_T <= {bound} in {MAX_ATTEMPTS} attempts for sample {index}"
            )))
        }
        family => {
            for _ in 0..100 {
                if let Ok(t) = direct(family, &mut rng) {
                    return Ok(t);
                }
            }
            Err(Error::GenerationFailure(format!(
                "{family:?}: 100 consecutive degenerate draws for sample {index}"
            )))
        }
    }
}

fn direct(family: Family, rng: &mut ChaCha8Rng) -> Result<Tetrahedron> {
    match family {
        Family::UniformBall => uniform_ball(rng),
        Family::Needle { eps } => needle(rng, eps),
        Family::NeedleRange { eps_min, eps_max } => {
            let eps = log_uniform(rng, eps_min, eps_max);
            needle(rng, eps)
        }
        Family::Sliver { eps } => sliver(rng, eps),
        Family::SliverRange { eps_min, eps_max } => {
            let eps = log_uniform(rng, eps_min, eps_max);
            sliver(rng, eps)
        }
        Family::Squeezed { alpha, kind } => {
            let d = Matrix3::from_diagonal(&alpha.into());
            let t = kind.reference().tetrahedron().map_affine(&d, &Point3::zeros());
            Tetrahedron::new(rigid(rng, &t).v)
        }
        Family::Mixed => match rng.random_range(0..3) {
            0 => uniform_ball(rng),
            1 => {
                let eps = log_uniform(rng, 1e-6, 1.0);
                needle(rng, eps)
            }
            _ => {
                let eps = log_uniform(rng, 1e-6, 1.0);
                sliver(rng, eps)
            }
        },
        Family::MacConstrained { .. } | Family::QualityBounded { .. } => unreachable!(),
    }
}

/// Proposal for rejection sampling: ball, perturbed regular, or needle.
fn proposal(rng: &mut ChaCha8Rng) -> Result<Tetrahedron> {
    match rng.random_range(0..3) {
        0 => uniform_ball(rng),
        1 => {
            let sigma = log_uniform(rng, 1e-3, 0.5);
            let reg = Tetrahedron::regular();
            let v = reg.v.map(|p| p + ball_point(rng) * sigma);
            Tetrahedron::new(rigid(rng, &Tetrahedron { v }).v)
        }
        _ => {
            let eps = log_uniform(rng, 1e-4, 1.0);
            needle(rng, eps)
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn ball_point(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let p = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if p.norm_squared() <= 1.0 {
            return p;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

/// Random rotation plus a translation in the unit ball.
pub fn rigid(rng: &mut ChaCha8Rng, t: &Tetrahedron) -> Tetrahedron {
    let r = random_rotation(rng).to_rotation_matrix().into_inner();
    let b = ball_point(rng);
    t.map_affine(&r, &b)
}

fn uniform_ball(rng: &mut ChaCha8Rng) -> Result<Tetrahedron> {
    Tetrahedron::new([ball_point(rng), ball_point(rng), ball_point(rng), ball_point(rng)])
}

fn needle(rng: &mut ChaCha8Rng, eps: f64) -> Result<Tetrahedron> {
    let mut base = [Point3::zeros(); 3];
    for (i, b) in base.iter_mut().enumerate() {
        let ang = 2.0 * PI * i as f64 / 3.0 + rng.random_range(-0.3..0.3);
        let r = eps * rng.random_range(0.8..1.2);
        *b = Point3::new(0.0, r * ang.cos(), r * ang.sin());
    }
    let apex = Point3::new(1.0, eps * rng.random_range(-0.2..0.2), eps * rng.random_range(-0.2..0.2));
    let t = Tetrahedron::new([apex, base[0], base[1], base[2]])?;
    Tetrahedron::new(rigid(rng, &t).v)
}

fn sliver(rng: &mut ChaCha8Rng, eps: f64) -> Result<Tetrahedron> {
    // Regular for h = 1/sqrt(2); the dihedral along the top edge is
    // pi - 2 atan(2h).
    let h = (eps.min(PI / 2.0) / 2.0).tan() / 2.0 * rng.random_range(0.5..1.0);
    let t = Tetrahedron::new([
        Point3::new(1.0, 0.0, h),
        Point3::new(-1.0, 0.0, h),
        Point3::new(0.0, 1.0, -h),
        Point3::new(0.0, -1.0, -h),
    ])?;
    Tetrahedron::new(rigid(rng, &t).v)
}

//! Tetrahedron geometry: edges, volume, classification, standard position,
//! transformation matrices, quality measures and angle bookkeeping.

mod angles;
mod classify;
mod mac;
mod matrices;

pub use angles::{angles, verify_trig_identities, AngleSet, GeometryReport, TrigResiduals};
pub use classify::{classify, standard_position, Classification, Kind, RigidMotion, StandardPosition};
pub use mac::{
    mac_bound_constants, mac_check, mac_check_with_tolerance, reverse_gamma_max, MacConstants,
    ANGLE_EPS,
};
pub use matrices::{matrices, spectral_norm, TransformMatrices};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Relative volume threshold: `|T| < VOLUME_REL_EPS * h_T^3` is degenerate.
pub const VOLUME_REL_EPS: f64 = 1e-14;

/// Vertex index pairs of the six edges, in lexicographic order.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// The two reference tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// Vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1).
    Hat,
    /// Vertices (0,0,0), (1,0,0), (1,1,0), (0,0,1).
    Tilde,
}

impl Reference {
    pub fn vertices(self) -> [Point3; 4] {
        let y = match self {
            Reference::Hat => Point3::new(0.0, 1.0, 0.0),
            Reference::Tilde => Point3::new(1.0, 1.0, 0.0),
        };
        [Point3::zeros(), Point3::x(), y, Point3::z()]
    }

    pub fn tetrahedron(self) -> Tetrahedron {
        Tetrahedron { v: self.vertices() }
    }

    /// Exact containment test for the lattice point `a / k`.
    pub fn contains_lattice_point(self, a: [u32; 3], k: u32) -> bool {
        match self {
            Reference::Hat => a[0] + a[1] + a[2] <= k,
            Reference::Tilde => a[1] <= a[0] && a[0] + a[2] <= k,
        }
    }
}

impl Kind {
    pub fn reference(self) -> Reference {
        match self {
            Kind::Type1 => Reference::Hat,
            Kind::Type2 => Reference::Tilde,
        }
    }
}

/// A tetrahedron given by four vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tetrahedron {
    pub v: [Point3; 4],
}

impl Tetrahedron {
    /// Builds a tetrahedron, rejecting non-finite or degenerate input.
    pub fn new(v: [Point3; 4]) -> Result<Self> {
        Self::with_volume_threshold(v, VOLUME_REL_EPS)
    }

    pub fn with_volume_threshold(v: [Point3; 4], rel_eps: f64) -> Result<Self> {
        for (i, p) in v.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFiniteVertex(i));
            }
        }
        let t = Tetrahedron { v };
        t.check_nondegenerate(rel_eps)?;
        Ok(t)
    }

    pub fn from_coords(c: [[f64; 3]; 4]) -> Result<Self> {
        Self::new(c.map(|p| Point3::new(p[0], p[1], p[2])))
    }

    /// Regular tetrahedron with unit edges.
    pub fn regular() -> Self {
        let s = 0.5;
        let h = 3f64.sqrt() / 2.0;
        Tetrahedron {
            v: [
                Point3::zeros(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(s, h, 0.0),
                Point3::new(s, h / 3.0, (2.0f64 / 3.0).sqrt()),
            ],
        }
    }

    fn check_nondegenerate(&self, rel_eps: f64) -> Result<()> {
        let vol = self.signed_volume().abs();
        let threshold = rel_eps * self.diameter().powi(3);
        if !(vol >= threshold) || vol == 0.0 {
            return Err(Error::DegenerateTetrahedron {
                volume: vol,
                threshold,
            });
        }
        Ok(())
    }

    /// Re-validates a tetrahedron built by direct field access.
    pub fn validate(&self) -> Result<()> {
        Tetrahedron::new(self.v).map(|_| ())
    }

    /// det[v2 - v1, v3 - v1, v4 - v1] / 6, evaluated at the vertex whose
    /// three edges have the smallest length product so that rounding error
    /// scales with the short edges.
    pub fn signed_volume(&self) -> f64 {
        // Even permutations of (0, 1, 2, 3), one per leading vertex.
        const EVEN: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];
        let v = &self.v;
        let weight = |p: &[usize; 4]| (1..4).map(|i| (v[p[i]] - v[p[0]]).norm_squared()).product::<f64>();
        let [a, b, c, d] = *EVEN
            .iter()
            .min_by(|p, q| weight(p).total_cmp(&weight(q)))
            .expect("four candidates");
        Matrix3::from_columns(&[v[b] - v[a], v[c] - v[a], v[d] - v[a]]).determinant() / 6.0
    }

    /// Columns are `v[1] - v[0]`, `v[2] - v[0]`, `v[3] - v[0]`.
    pub fn edge_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.v[1] - self.v[0], self.v[2] - self.v[0], self.v[3] - self.v[0]])
    }

    pub fn edge_length(&self, i: usize, j: usize) -> f64 {
        (self.v[i] - self.v[j]).norm()
    }

    pub fn edge_lengths(&self) -> [f64; 6] {
        EDGES.map(|(i, j)| self.edge_length(i, j))
    }

    /// h_1 <= ... <= h_6.
    pub fn sorted_edges(&self) -> [f64; 6] {
        let mut h = self.edge_lengths();
        h.sort_by(|a, b| a.total_cmp(b));
        h
    }

    pub fn diameter(&self) -> f64 {
        self.edge_lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Point3 {
        (self.v[0] + self.v[1] + self.v[2] + self.v[3]) / 4.0
    }

    /// Point with barycentric coordinates `lambda`.
    pub fn point_at(&self, lambda: [f64; 4]) -> Point3 {
        self.v
            .iter()
            .zip(lambda)
            .fold(Point3::zeros(), |acc, (p, l)| acc + p * l)
    }

    /// Barycentric coordinates of `p`.
    pub fn barycentric(&self, p: &Point3) -> [f64; 4] {
        let inv = self
            .edge_matrix()
            .full_piv_lu()
            .try_inverse()
            .unwrap_or_else(Matrix3::zeros);
        let l = inv * (p - self.v[0]);
        [1.0 - l.x - l.y - l.z, l.x, l.y, l.z]
    }

    /// Image under `x -> m x + b`.
    pub fn map_affine(&self, m: &Matrix3<f64>, b: &Point3) -> Tetrahedron {
        Tetrahedron {
            v: self.v.map(|p| m * p + b),
        }
    }

    /// Uniform dilation about `center`.
    pub fn scaled_about(&self, center: &Point3, factor: f64) -> Tetrahedron {
        Tetrahedron {
            v: self.v.map(|p| center + (p - center) * factor),
        }
    }

    pub fn permuted(&self, perm: [usize; 4]) -> Tetrahedron {
        Tetrahedron {
            v: perm.map(|i| self.v[i]),
        }
    }
}

/// |T|, refusing degenerate input.
pub fn volume(t: &Tetrahedron) -> Result<f64> {
    t.check_nondegenerate(VOLUME_REL_EPS)?;
    Ok(t.signed_volume().abs())
}

/// Quality measures `(R_T, H_T)`.
///
/// `R_T = h_1 h_2 h_T^2 / |T|` comes from the sorted edge list;
/// `H_T = alpha_1 alpha_2 alpha_3 h_T / |T|` from the classification.
pub fn quality(t: &Tetrahedron) -> Result<(f64, f64)> {
    volume(t)?;
    let c = classify(t)?;
    Ok(quality_with(t, &c.alpha))
}

/// `(R_T, H_T)` on a checked tetrahedron, written with `6|T| = |det|` and
/// the squared diameter so that integer-coordinate elements come out exact.
pub(crate) fn quality_with(t: &Tetrahedron, alpha: &[f64; 3]) -> (f64, f64) {
    let det = 6.0 * t.signed_volume().abs();
    let h = t.sorted_edges();
    let ht2 = EDGES
        .iter()
        .map(|&(i, j)| (t.v[i] - t.v[j]).norm_squared())
        .fold(0.0, f64::max);
    (6.0 * h[0] * h[1] * ht2 / det, 6.0 * alpha[0] * alpha[1] * alpha[2] * h[5] / det)
}

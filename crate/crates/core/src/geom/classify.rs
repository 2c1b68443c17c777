use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{volume, Point3, Tetrahedron, EDGES};
use crate::error::Result;

/// Relative tolerance for the bisector-plane test and edge-length ties.
pub const PLANE_REL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Type1,
    Type2,
}

/// Type tag and vertex labelling of a tetrahedron.
///
/// `perm[i]` is the input index of the vertex labelled `x_{i+1}`; `e1` and
/// `e2` hold input indices (ascending) of the longest edge adjacent to the
/// shortest edge and of the shortest edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: Kind,
    pub perm: [usize; 4],
    pub alpha: [f64; 3],
    pub e1: [usize; 2],
    pub e2: [usize; 2],
}

/// Rigid map `p -> linear * p + translation`; `linear` is orthogonal and
/// has determinant -1 exactly when `mirror` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub linear: Matrix3<f64>,
    pub translation: Point3,
    pub mirror: bool,
}

impl RigidMotion {
    pub fn apply(&self, p: &Point3) -> Point3 {
        self.linear * p + self.translation
    }

    pub fn identity() -> Self {
        RigidMotion {
            linear: Matrix3::identity(),
            translation: Point3::zeros(),
            mirror: false,
        }
    }
}

/// Parameters of the standard position together with the rigid motion that
/// carries the relabelled input onto it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardPosition {
    pub kind: Kind,
    pub perm: [usize; 4],
    pub alpha: [f64; 3],
    pub s1: f64,
    pub t1: f64,
    pub s21: f64,
    pub s22: f64,
    pub t2: f64,
    pub motion: RigidMotion,
}

impl StandardPosition {
    /// Vertices x1..x4 rebuilt from the parameters.
    pub fn vertices(&self) -> [Point3; 4] {
        let [a1, a2, a3] = self.alpha;
        let x3 = match self.kind {
            Kind::Type1 => Point3::new(a2 * self.s1, a2 * self.t1, 0.0),
            Kind::Type2 => Point3::new(a1 - a2 * self.s1, a2 * self.t1, 0.0),
        };
        [
            Point3::zeros(),
            Point3::new(a1, 0.0, 0.0),
            x3,
            Point3::new(a3 * self.s21, a3 * self.s22, a3 * self.t2),
        ]
    }

    pub fn tetrahedron(&self) -> Tetrahedron {
        Tetrahedron { v: self.vertices() }
    }

    /// `alpha_1 alpha_2 alpha_3 t_1 t_2 / 6`.
    pub fn volume(&self) -> f64 {
        self.alpha.iter().product::<f64>() * self.t1 * self.t2 / 6.0
    }

    /// Largest violation of the parameter constraints (zero when all hold).
    pub fn constraint_violation(&self) -> f64 {
        let [a1, a2, a3] = self.alpha;
        [
            (self.s1 * self.s1 + self.t1 * self.t1 - 1.0).abs(),
            (self.s21 * self.s21 + self.s22 * self.s22 + self.t2 * self.t2 - 1.0).abs(),
            (-self.s1).max(0.0),
            (-self.t1).max(0.0),
            (-self.t2).max(0.0),
            (a2 * self.s1 - a1 / 2.0).max(0.0),
            (a3 * self.s21 - a1 / 2.0).max(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Max distance between the moved input vertices and the rebuilt ones.
    pub fn motion_residual(&self, t: &Tetrahedron) -> f64 {
        let target = self.vertices();
        (0..4)
            .map(|i| (self.motion.apply(&t.v[self.perm[i]]) - target[i]).norm())
            .fold(0.0, f64::max)
    }
}

fn lex_order(t: &Tetrahedron) -> [usize; 4] {
    let mut idx = [0, 1, 2, 3];
    idx.sort_by(|&a, &b| {
        let (p, q) = (t.v[a], t.v[b]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
    });
    idx
}

/// Picks an edge among `candidates` (canonical index pairs) by length,
/// breaking ties (within `tol`) by the smallest index pair.
fn pick_edge(
    candidates: impl Iterator<Item = (usize, usize)>,
    len: impl Fn(usize, usize) -> f64,
    longest: bool,
    tol: f64,
) -> (usize, usize) {
    let mut best: Option<((usize, usize), f64)> = None;
    for e in candidates {
        let l = len(e.0, e.1);
        best = match best {
            None => Some((e, l)),
            Some((be, bl)) => {
                let better = if longest { l > bl + tol } else { l < bl - tol };
                let tie = (l - bl).abs() <= tol;
                if better || (tie && e < be) {
                    Some((e, l))
                } else {
                    Some((be, bl))
                }
            }
        };
    }
    best.expect("non-empty edge set").0
}

/// Type-1 / Type-2 classification with the vertex labelling of the
/// standard position.
pub fn classify(t: &Tetrahedron) -> Result<Classification> {
    volume(t)?;
    let canon = lex_order(t);
    let p = |c: usize| t.v[canon[c]];
    let len = |a: usize, b: usize| (p(a) - p(b)).norm();
    let ht = t.diameter();
    let tol = PLANE_REL_EPS * ht;

    let e2 = pick_edge(EDGES.into_iter(), len, false, tol);
    let adjacent = EDGES
        .into_iter()
        .filter(|&(a, b)| (a, b) != e2 && (a == e2.0 || a == e2.1 || b == e2.0 || b == e2.1));
    let e1 = pick_edge(adjacent, len, true, tol);

    let shared = if e1.0 == e2.0 || e1.0 == e2.1 { e1.0 } else { e1.1 };
    let far = if e1.0 == shared { e1.1 } else { e1.0 };
    let x3 = if e2.0 == shared { e2.1 } else { e2.0 };
    let x4 = (0..4).find(|&i| i != shared && i != far && i != x3).unwrap();

    // Signed distance to the bisector plane of e1; negative on `shared`'s side.
    let n = (p(far) - p(shared)).normalize();
    let mid = (p(far) + p(shared)) / 2.0;
    let side = |i: usize| {
        let d = (p(i) - mid).dot(&n);
        if d.abs() <= tol {
            0
        } else if d < 0.0 {
            -1
        } else {
            1
        }
    };
    let (s3, s4) = (side(x3), side(x4));

    let (kind, x1, x2) = if s3 == 0 || s4 == 0 || s3 == s4 {
        // x3 sits on the plane only on an edge-length tie, in which case
        // (far, x3) is a shortest edge too and x1 may follow x4's side.
        if s3 == 0 && s4 > 0 {
            (Kind::Type1, far, shared)
        } else {
            (Kind::Type1, shared, far)
        }
    } else {
        (Kind::Type2, far, shared)
    };
    let labels = [x1, x2, x3, x4];
    let alpha2 = match kind {
        Kind::Type1 => len(x1, x3),
        Kind::Type2 => len(x2, x3),
    };
    let e2_out = match kind {
        Kind::Type1 => [x1, x3],
        Kind::Type2 => [x2, x3],
    };
    let sorted = |e: [usize; 2]| {
        let (a, b) = (canon[e[0]], canon[e[1]]);
        [a.min(b), a.max(b)]
    };
    Ok(Classification {
        kind,
        perm: labels.map(|c| canon[c]),
        alpha: [len(x1, x2), alpha2, len(x1, x4)],
        e1: sorted([x1, x2]),
        e2: sorted(e2_out),
    })
}

/// Rigid motion (and mirror, if needed) onto the standard position.
pub fn standard_position(t: &Tetrahedron) -> Result<StandardPosition> {
    let c = classify(t)?;
    let x = c.perm.map(|i| t.v[i]);
    let [a1, a2, a3] = c.alpha;

    let ex = (x[1] - x[0]) / a1;
    let u = x[2] - x[0];
    let ey = (u - ex * u.dot(&ex)).normalize();
    let mut ez = ex.cross(&ey);
    let mirror = (x[3] - x[0]).dot(&ez) < 0.0;
    if mirror {
        ez = -ez;
    }
    let linear = Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]);
    let translation = -(linear * x[0]);
    let motion = RigidMotion {
        linear,
        translation,
        mirror,
    };

    // Rotate edge vectors rather than positions: no cancellation against
    // the translation when the element is small relative to its location.
    let p3 = linear * (x[2] - x[0]);
    let p4 = linear * (x[3] - x[0]);
    let s1 = match c.kind {
        Kind::Type1 => p3.x / a2,
        Kind::Type2 => -(linear * (x[2] - x[1])).x / a2,
    };
    Ok(StandardPosition {
        kind: c.kind,
        perm: c.perm,
        alpha: c.alpha,
        s1,
        t1: p3.y / a2,
        s21: p4.x / a3,
        s22: p4.y / a3,
        t2: p4.z / a3,
        motion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Reference;
    use approx::assert_relative_eq;

    /// Half-space oracle written directly from the labelling rules, with no
    /// canonical sorting: shortest edge, longest adjacent edge, then the
    /// sign of (p - mid) . n for the two remaining vertices.
    fn half_space_kind(v: [[f64; 3]; 4]) -> Kind {
        let d = |a: usize, b: usize| {
            ((v[a][0] - v[b][0]).powi(2) + (v[a][1] - v[b][1]).powi(2) + (v[a][2] - v[b][2]).powi(2))
                .sqrt()
        };
        let mut e2 = (0, 1);
        for &(a, b) in &EDGES {
            if d(a, b) < d(e2.0, e2.1) {
                e2 = (a, b);
            }
        }
        let mut e1 = None;
        for &(a, b) in &EDGES {
            let adj = (a, b) != e2 && [a, b].iter().any(|x| *x == e2.0 || *x == e2.1);
            if adj && e1.map_or(true, |(p, q)| d(a, b) > d(p, q)) {
                e1 = Some((a, b));
            }
        }
        let (p, q) = e1.unwrap();
        let others: Vec<usize> = (0..4).filter(|&i| i != p && i != q).collect();
        let s = |i: usize| {
            (0..3)
                .map(|c| (v[i][c] - (v[p][c] + v[q][c]) / 2.0) * (v[q][c] - v[p][c]))
                .sum::<f64>()
        };
        if s(others[0]) * s(others[1]) >= 0.0 {
            Kind::Type1
        } else {
            Kind::Type2
        }
    }

    #[test]
    fn reference_hat_classification() {
        let c = classify(&Reference::Hat.tetrahedron()).unwrap();
        assert_eq!(c.kind, Kind::Type1);
        assert_relative_eq!(c.alpha[1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.alpha[0], 2f64.sqrt(), epsilon = 1e-15);
        assert!(
            (c.alpha[2] - 1.0).abs() < 1e-15 || (c.alpha[2] - 2f64.sqrt()).abs() < 1e-15,
            "alpha3 = {}",
            c.alpha[2]
        );
    }

    #[test]
    fn longest_edge_must_touch_shortest() {
        // The length-10 edge does not touch the shortest edge (v2, v3); the
        // bisector of (v0, v2) puts v1 and v3 on the same side.
        let v = [[0., 0., 0.], [10., 0., 0.], [5.2, 1., 0.], [5., 0.5, 1.]];
        assert_eq!(half_space_kind(v), Kind::Type1);
        let c = classify(&Tetrahedron::from_coords(v).unwrap()).unwrap();
        assert_eq!(c.kind, Kind::Type1);
        assert_eq!(c.e2, [2, 3]);
        assert_eq!(c.e1, [0, 2]);
    }

    #[test]
    fn type2_example() {
        let v = [[0., 0., 0.], [10., 0., 0.], [9.4, 0.8, 0.], [4., 1., 2.5]];
        assert_eq!(half_space_kind(v), Kind::Type2);
        let c = classify(&Tetrahedron::from_coords(v).unwrap()).unwrap();
        assert_eq!(c.kind, Kind::Type2);
        assert_eq!(c.perm, [0, 1, 2, 3]);
    }

    #[test]
    fn type1_example() {
        let v = [[0., 0., 0.], [10., 0., 0.], [0.5, 1., 0.], [0.4, 0.5, 1.]];
        assert_eq!(half_space_kind(v), Kind::Type1);
        let c = classify(&Tetrahedron::from_coords(v).unwrap()).unwrap();
        assert_eq!(c.kind, Kind::Type1);
    }

    #[test]
    fn fixed_point_of_standard_position() {
        let t = Tetrahedron::from_coords([
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.3, 0.4, 0.0],
            [0.2, 0.3, 0.9],
        ])
        .unwrap();
        let sp = standard_position(&t).unwrap();
        assert_eq!(sp.perm, [0, 1, 2, 3]);
        assert!(!sp.motion.mirror);
        assert!((sp.motion.linear - Matrix3::identity()).norm() < 1e-14);
        assert!(sp.motion.translation.norm() < 1e-14);
        assert_relative_eq!(sp.s1, 0.6, epsilon = 1e-14);
        assert_relative_eq!(sp.t1, 0.8, epsilon = 1e-14);
        assert!(sp.motion_residual(&t) < 1e-14);
    }

    #[test]
    fn reference_standard_position_volume() {
        let sp = standard_position(&Reference::Hat.tetrahedron()).unwrap();
        assert!(sp.t1 > 0.0 && sp.t2 > 0.0);
        assert_relative_eq!(sp.volume(), 1.0 / 6.0, epsilon = 1e-15);
        assert!(sp.constraint_violation() < 1e-14);
    }

    #[test]
    fn mirrored_input_sets_flag() {
        let t = Tetrahedron::from_coords([
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.3, 0.4, 0.0],
            [0.2, 0.3, -0.9],
        ])
        .unwrap();
        let sp = standard_position(&t).unwrap();
        assert!(sp.motion.mirror);
        assert!(sp.motion.linear.determinant() < 0.0);
        assert!(sp.motion_residual(&t) < 1e-13);
    }

    #[test]
    fn type2_standard_position() {
        let t = Tetrahedron::from_coords([[0., 0., 0.], [10., 0., 0.], [9.4, 0.8, 0.], [4., 1., 2.5]])
            .unwrap();
        let sp = standard_position(&t).unwrap();
        assert_eq!(sp.kind, Kind::Type2);
        assert!(sp.constraint_violation() < 1e-12);
        assert!(sp.motion_residual(&t) < 1e-12);
        assert_relative_eq!(sp.volume(), volume(&t).unwrap(), max_relative = 1e-12);
    }
}

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{Kind, Reference, StandardPosition};

/// `A = X Y` with `A D` mapping the reference tetrahedron of the matching
/// type onto the standard position. Norms are the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformMatrices {
    pub kind: Kind,
    pub a: Matrix3<f64>,
    pub d: Matrix3<f64>,
    pub x: Matrix3<f64>,
    pub y: Matrix3<f64>,
    pub norm_a_bound: f64,
    pub norm_a_inv_bound: f64,
    pub norm_x: f64,
    pub norm_x_inv: f64,
    pub norm_y: f64,
    pub norm_y_inv: f64,
}

impl TransformMatrices {
    pub fn reference(&self) -> Reference {
        self.kind.reference()
    }

    /// `A D`.
    pub fn map(&self) -> Matrix3<f64> {
        self.a * self.d
    }

    /// `prod (1 + s_i)^{1/2} / t_i`, the alternate form of the bound on
    /// `||A^{-1}||`.
    pub fn inverse_bound_via_t(sp: &StandardPosition) -> f64 {
        let s1 = sp.s1.abs();
        let s2 = sp.s21.hypot(sp.s22);
        (1.0 + s1).sqrt() / sp.t1 * (1.0 + s2).sqrt() / sp.t2
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix3<f64>) -> f64 {
    m.singular_values().max()
}

pub fn matrices(sp: &StandardPosition) -> TransformMatrices {
    let sign = match sp.kind {
        Kind::Type1 => 1.0,
        Kind::Type2 => -1.0,
    };
    let a = Matrix3::new(
        1.0, sign * sp.s1, sp.s21,
        0.0, sp.t1, sp.s22,
        0.0, 0.0, sp.t2,
    );
    let x = Matrix3::new(
        1.0, 0.0, sp.s21,
        0.0, 1.0, sp.s22,
        0.0, 0.0, sp.t2,
    );
    let y = Matrix3::new(
        1.0, sign * sp.s1, 0.0,
        0.0, sp.t1, 0.0,
        0.0, 0.0, 1.0,
    );
    let d = Matrix3::from_diagonal(&sp.alpha.into());
    let bs1 = sp.s1.abs();
    let bs2 = sp.s21.hypot(sp.s22);
    TransformMatrices {
        kind: sp.kind,
        a,
        d,
        x,
        y,
        norm_a_bound: ((1.0 + bs1) * (1.0 + bs2)).sqrt(),
        // 1 - |s| = t^2 / (1 + |s|) avoids cancellation when t is small.
        norm_a_inv_bound: TransformMatrices::inverse_bound_via_t(sp),
        norm_x: (1.0 + bs2).sqrt(),
        norm_x_inv: (1.0 + bs2).sqrt() / sp.t2,
        norm_y: (1.0 + bs1).sqrt(),
        norm_y_inv: (1.0 + bs1).sqrt() / sp.t1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{standard_position, RigidMotion, Tetrahedron};
    use approx::assert_relative_eq;

    fn sp(kind: Kind, s1: f64, s21: f64, s22: f64) -> StandardPosition {
        StandardPosition {
            kind,
            perm: [0, 1, 2, 3],
            alpha: [1.0, 0.5, 0.7],
            s1,
            t1: (1.0 - s1 * s1).sqrt(),
            s21,
            s22,
            t2: (1.0 - s21 * s21 - s22 * s22).sqrt(),
            motion: RigidMotion::identity(),
        }
    }

    #[test]
    fn orthogonal_case_is_identity() {
        let m = matrices(&sp(Kind::Type1, 0.0, 0.0, 0.0));
        assert_eq!(m.a, Matrix3::identity());
        assert_relative_eq!(spectral_norm(&m.a), 1.0, epsilon = 1e-15);
        assert_relative_eq!(spectral_norm(&m.a.try_inverse().unwrap()), 1.0, epsilon = 1e-15);
        assert_eq!(m.norm_a_bound, 1.0);
        assert_eq!(m.norm_a_inv_bound, 1.0);
    }

    #[test]
    fn zero_s2_gives_unit_x_norm() {
        let m = matrices(&sp(Kind::Type2, 0.4, 0.0, 0.0));
        assert_eq!(m.norm_x, 1.0);
        assert_relative_eq!(spectral_norm(&m.x), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_forms_match_svd() {
        for kind in [Kind::Type1, Kind::Type2] {
            let p = sp(kind, 0.3, -0.2, 0.5);
            let m = matrices(&p);
            assert!((m.a - m.x * m.y).norm() < 1e-15);
            assert_relative_eq!(spectral_norm(&m.x), m.norm_x, epsilon = 1e-12);
            assert_relative_eq!(
                spectral_norm(&m.x.try_inverse().unwrap()),
                m.norm_x_inv,
                epsilon = 1e-12
            );
            assert_relative_eq!(spectral_norm(&m.y), m.norm_y, epsilon = 1e-12);
            assert_relative_eq!(
                spectral_norm(&m.y.try_inverse().unwrap()),
                m.norm_y_inv,
                epsilon = 1e-12
            );
            assert!(spectral_norm(&m.a) <= m.norm_a_bound + 1e-12);
            assert!(spectral_norm(&m.a.try_inverse().unwrap()) <= m.norm_a_inv_bound + 1e-12);
        }
    }

    #[test]
    fn half_t_inverse_bound() {
        let s = (0.75f64).sqrt();
        let p = sp(Kind::Type1, s, s, 0.0);
        assert_relative_eq!(p.t1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.t2, 0.5, epsilon = 1e-15);
        let m = matrices(&p);
        let inv = spectral_norm(&m.a.try_inverse().unwrap());
        let bound = m.norm_a_inv_bound;
        // ((1 - |s1|)(1 - |s2|))^{-1/2}, the form before rewriting 1 - |s|.
        let direct = ((1.0 - s) * (1.0 - s)).sqrt().recip();
        assert_relative_eq!(bound, direct, max_relative = 1e-12);
        assert!(inv <= bound * (1.0 + 1e-12), "{inv} > {bound}");
    }

    #[test]
    fn ad_maps_reference_onto_element() {
        for v in [
            [[0., 0., 0.], [2., 0., 0.], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]],
            [[0., 0., 0.], [10., 0., 0.], [9.4, 0.8, 0.], [4., 1., 2.5]],
        ] {
            let t = Tetrahedron::from_coords(v).unwrap();
            let p = standard_position(&t).unwrap();
            let m = matrices(&p);
            let refv = m.reference().vertices();
            let target = p.vertices();
            for i in 0..4 {
                assert!((m.map() * refv[i] - target[i]).norm() < 1e-12);
            }
        }
    }
}

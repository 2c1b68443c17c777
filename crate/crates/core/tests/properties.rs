use anisotetra::field::FnField;
use anisotetra::geom::{angles, quality, Point3, Tetrahedron};
use anisotetra::interp::{interpolate, lagrange_basis};
use anisotetra::lattice::{sigma_k, MultiIndex};
use anisotetra::nalgebra::{Matrix3, Rotation3, Vector3};
use anisotetra::poly::{AffineFrame, Polynomial3};
use anisotetra::quad::{rule_for_degree, seminorm, Exponent, SeminormSpec};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn volume6(v: &[Point3; 4]) -> f64 {
    (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0]))
}

/// Tetrahedra in the cube whose volume is not tiny against the diameter.
fn tetra() -> impl Strategy<Value = Tetrahedron> {
    [point(), point(), point(), point()]
        .prop_filter("well separated", |v| {
            let d = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| (v[i] - v[j]).norm())
                .fold(0.0, f64::max);
            volume6(v).abs() > 1e-3 * d * d * d
        })
        .prop_map(|v| Tetrahedron::new(v).unwrap())
}

fn motion() -> impl Strategy<Value = (Matrix3<f64>, Point3)> {
    (-3.2..3.2f64, -1.6..1.6f64, -3.2..3.2f64, any::<bool>(), point()).prop_map(|(a, b, c, mirror, t)| {
        let r = Rotation3::from_euler_angles(a, b, c).into_inner();
        let m = if mirror { r * Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0)) } else { r };
        (m, t * 5.0)
    })
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

fn poly_of(degree: usize, c: &[f64]) -> Polynomial3 {
    Polynomial3::from_coeffs(MultiIndex::all_up_to(degree).into_iter().zip(c.iter().copied()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quality_is_rigid_invariant(t in tetra(), (m, b) in motion()) {
        let moved = t.map_affine(&m, &b);
        let (r0, h0) = quality(&t).unwrap();
        let (r1, h1) = quality(&moved).unwrap();
        prop_assert!(rel(r0, r1) < 1e-9, "{r0} {r1}");
        prop_assert!(rel(h0, h1) < 1e-9, "{h0} {h1}");
        let g0 = angles(&t).unwrap();
        let g1 = angles(&moved).unwrap();
        prop_assert!((g0.max_angle - g1.max_angle).abs() < 1e-9);
        prop_assert_eq!(g0.classification.kind, g1.classification.kind);
    }

    #[test]
    fn quality_ignores_vertex_order(t in tetra(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let (r0, h0) = quality(&t).unwrap();
        let (r1, h1) = quality(&t.permuted(perm)).unwrap();
        prop_assert!(rel(r0, r1) < 1e-9);
        prop_assert!(rel(h0, h1) < 1e-9);
    }

    #[test]
    fn quality_scales_linearly(t in tetra(), s in 1e-3..1e3f64) {
        let (r0, h0) = quality(&t).unwrap();
        let (r1, h1) = quality(&t.scaled_about(&Point3::zeros(), s)).unwrap();
        prop_assert!(rel(r1, s * r0) < 1e-9);
        prop_assert!(rel(h1, s * h0) < 1e-9);
    }

    #[test]
    fn r_and_h_are_equivalent(t in tetra()) {
        let (r, h) = quality(&t).unwrap();
        prop_assert!(0.5 * h <= r * (1.0 + 1e-12), "R = {r}, H = {h}");
        prop_assert!(r <= 2.0 * h * (1.0 + 1e-12), "R = {r}, H = {h}");
    }

    #[test]
    fn interpolation_reproduces_polynomials(t in tetra(), k in 1usize..=4, c in coefficients(35)) {
        let q = poly_of(k, &c);
        let iq = interpolate(&q, &t, k).unwrap();
        let scale = c.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        for x in rule_for_degree(6).unwrap().points(&t) {
            prop_assert!((q.eval(&x) - iq.eval(&x)).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn interpolant_matches_nodal_values(t in tetra(), k in 1usize..=4) {
        let f = FnField::new(0, |p: &Point3| (p.x + 2.0 * p.y).sin() * (0.5 * p.z).exp());
        let it = interpolate(&f, &t, k).unwrap();
        for n in sigma_k(&t, k).unwrap() {
            let p = n.point;
            let want = (p.x + 2.0 * p.y).sin() * (0.5 * p.z).exp();
            prop_assert!((it.eval(&p) - want).abs() < 1e-11);
        }
    }

    #[test]
    fn lagrange_basis_sums_to_one(t in tetra(), k in 1usize..=4, w in [0.0..1.0f64, 0.0..1.0, 0.0..1.0, 0.0..1.0]) {
        let total: f64 = w.iter().sum::<f64>().max(1e-12);
        let x = t.point_at(w.map(|x| x / total));
        let s: f64 = lagrange_basis(&t, k).unwrap().iter().map(|b| b.eval(&x)).sum();
        prop_assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn seminorm_is_homogeneous_and_subadditive(
        t in tetra(),
        a in coefficients(20),
        b in coefficients(20),
        c in -5.0..5.0f64,
        m in 0usize..=2,
        p in prop::sample::select(vec![1.0, 2.0, 3.0, 4.0]),
    ) {
        let (u, v) = (poly_of(3, &a), poly_of(3, &b));
        let spec = SeminormSpec::new(m, Exponent::Finite(p));
        let nu = seminorm(&u, &t, &spec).unwrap();
        let nv = seminorm(&v, &t, &spec).unwrap();
        let ncu = seminorm(&u.scale(c), &t, &spec).unwrap();
        prop_assert!((ncu - c.abs() * nu).abs() <= 1e-10 * (1.0 + ncu));
        let sum = Polynomial3::from_coeffs(
            MultiIndex::all_up_to(3).into_iter().zip(a.iter().zip(&b).map(|(x, y)| x + y)),
        );
        let nsum = seminorm(&sum, &t, &spec).unwrap();
        prop_assert!(nsum <= (nu + nv) * (1.0 + 1e-9) + 1e-12, "{nsum} > {nu} + {nv}");
    }

    #[test]
    fn seminorm_dilation(t in tetra(), a in coefficients(20), s in 0.1..10.0f64, m in 0usize..=2) {
        // u_s(x) = u(x / s) on s T: |u_s|_{m,2,sT} = s^{3/2 - m} |u|_{m,2,T}.
        let u = poly_of(3, &a);
        let frame = AffineFrame { origin: Point3::zeros(), map: Matrix3::identity() / s };
        let us = Polynomial3::in_frame(frame, u.coeffs());
        let spec = SeminormSpec::new(m, Exponent::Finite(2.0));
        let n0 = seminorm(&u, &t, &spec).unwrap();
        let n1 = seminorm(&us, &t.scaled_about(&Point3::zeros(), s), &spec).unwrap();
        let want = s.powf(1.5 - m as f64) * n0;
        prop_assert!((n1 - want).abs() <= 1e-9 * want.max(1e-12), "{n1} vs {want}");
    }

    #[test]
    fn sup_seminorm_against_dense_lattice(t in tetra(), a in coefficients(10)) {
        let u = poly_of(2, &a);
        let got = seminorm(&u, &t, &SeminormSpec::new(0, Exponent::Infinity)).unwrap();
        // Oracle: barycentric grid of step 1/120 (containing the sampled lattice), plus a Lipschitz margin for
        // the gap between grids.
        let n = 120;
        let mut dense = 0.0f64;
        for i in 0..=n {
            for j in 0..=n - i {
                for k in 0..=n - i - j {
                    let l = [(n - i - j - k) as f64, i as f64, j as f64, k as f64].map(|x| x / n as f64);
                    let x = t.v.iter().zip(l).fold(Point3::zeros(), |acc, (p, w)| acc + p * w);
                    dense = dense.max(u.eval(&x).abs());
                }
            }
        }
        let lip = rule_for_degree(4).unwrap().points(&t).iter().chain(&t.v)
            .map(|x| u.gradient(x).norm()).fold(0.0, f64::max) * 4.0;
        let gap = lip * t.diameter() / 40.0;
        prop_assert!(got <= dense + 1e-12);
        prop_assert!(got >= dense - gap, "{got} vs {dense} (gap {gap})");
    }

    #[test]
    fn quadrature_is_exact_on_barycentric_monomials(
        t in tetra(),
        e in (0u32..=4, 0u32..=4, 0u32..=4, 0u32..=4),
    ) {
        let e = [e.0, e.1, e.2, e.3];
        let d: u32 = e.iter().sum();
        let vol = volume6(&t.v).abs() / 6.0;
        let exact = 6.0 * vol * e.iter().map(|&x| factorial(x)).product::<f64>() / factorial(d + 3);
        for deg in [d.max(1) as usize, 16] {
            let got = rule_for_degree(deg).unwrap()
                .integrate(&t, |x| {
                    let l = t.barycentric(x);
                    (0..4).map(|i| l[i].powi(e[i] as i32)).product()
                })
                .unwrap();
            prop_assert!(rel(got, exact) < 1e-11, "deg {deg}: {got} vs {exact}");
        }
    }
}

#[test]
fn lattice_sizes() {
    let t = Tetrahedron::regular();
    for k in 1..=8 {
        assert_eq!(sigma_k(&t, k).unwrap().len(), (k + 1) * (k + 2) * (k + 3) / 6);
    }
}

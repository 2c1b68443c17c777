use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{classify, volume, Classification, Point3, Tetrahedron};
use crate::error::Result;

/// Angles indexed by input vertex number (0-based). Diagonal entries are 0.
///
/// * `theta[i][j]`: internal angle of face `F_i` (opposite `x_i`) at `x_j`.
/// * `psi[i][j]`: dihedral angle between faces `F_i` and `F_j`.
/// * `phi[i][j]`: angle between face `F_i` and edge `x_i x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub theta: [[f64; 4]; 4],
    pub psi: [[f64; 4]; 4],
    pub phi: [[f64; 4]; 4],
}

impl AngleSet {
    pub fn face_angles(&self) -> impl Iterator<Item = f64> + '_ {
        off_diagonal().map(|(i, j)| self.theta[i][j])
    }

    pub fn dihedral_angles(&self) -> impl Iterator<Item = f64> + '_ {
        off_diagonal()
            .filter(|(i, j)| i < j)
            .map(|(i, j)| self.psi[i][j])
    }

    /// Largest face or dihedral angle.
    pub fn max_angle(&self) -> f64 {
        self.face_angles()
            .chain(self.dihedral_angles())
            .fold(0.0, f64::max)
    }
}

fn off_diagonal() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// Everything a single element reports about its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub h: [f64; 6],
    pub volume: f64,
    pub r_t: f64,
    pub h_t: f64,
    pub classification: Classification,
    pub angles: AngleSet,
    pub max_angle: f64,
}

fn angle_between(u: &Point3, v: &Point3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

fn others(skip: &[usize]) -> Vec<usize> {
    (0..4).filter(|i| !skip.contains(i)).collect()
}

fn compute_angles(t: &Tetrahedron, vol: f64) -> AngleSet {
    let x = &t.v;
    let mut theta = [[0.0; 4]; 4];
    let mut psi = [[0.0; 4]; 4];
    let mut phi = [[0.0; 4]; 4];

    // Cross products taken at the vertex where the face's two shortest
    // edges meet keep thin faces accurate.
    let scaled_normals: Vec<Point3> = (0..4)
        .map(|i| {
            let f = others(&[i]);
            let far = |p: usize| {
                let (q, r) = (f[(p + 1) % 3], f[(p + 2) % 3]);
                (x[q] - x[r]).norm_squared()
            };
            let p = (0..3).max_by(|&a, &b| far(a).total_cmp(&far(b))).expect("three vertices");
            let (o, q, r) = (f[p], f[(p + 1) % 3], f[(p + 2) % 3]);
            let n = (x[q] - x[o]).cross(&(x[r] - x[o]));
            if n.dot(&(x[i] - x[o])) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect();
    let normals: Vec<Point3> = scaled_normals.iter().map(|n| n.normalize()).collect();
    let heights: Vec<f64> = scaled_normals.iter().map(|n| 6.0 * vol / n.norm()).collect();

    for (i, j) in off_diagonal() {
        let ab = others(&[i, j]);
        theta[i][j] = angle_between(&(x[ab[0]] - x[j]), &(x[ab[1]] - x[j]));
        psi[i][j] = PI - angle_between(&normals[i], &normals[j]);
        phi[i][j] = (heights[i] / (x[i] - x[j]).norm()).clamp(-1.0, 1.0).asin();
    }
    AngleSet { theta, psi, phi }
}

/// Full geometry report: sorted edges, volume, `R_T`, `H_T` and all angles.
pub fn angles(t: &Tetrahedron) -> Result<GeometryReport> {
    let vol = volume(t)?;
    let classification = classify(t)?;
    let h = t.sorted_edges();
    let angles = compute_angles(t, vol);
    let (r_t, h_t) = super::quality_with(t, &classification.alpha);
    Ok(GeometryReport {
        h,
        volume: vol,
        r_t,
        h_t,
        classification,
        max_angle: angles.max_angle(),
        angles,
    })
}

/// Largest residuals of the two-sine identity and the two cosine rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigResiduals {
    pub twosin: f64,
    pub cosine_face: f64,
    pub cosine_dihedral: f64,
}

impl TrigResiduals {
    pub fn max(&self) -> f64 {
        self.twosin.max(self.cosine_face).max(self.cosine_dihedral)
    }
}

pub fn verify_trig_identities(t: &Tetrahedron) -> Result<TrigResiduals> {
    let a = compute_angles(t, volume(t)?);
    let (th, ps, ph) = (&a.theta, &a.psi, &a.phi);
    let mut r = TrigResiduals {
        twosin: 0.0,
        cosine_face: 0.0,
        cosine_dihedral: 0.0,
    };
    for j in 0..4 {
        let rest = others(&[j]);
        for &k in &rest {
            for &m in &rest {
                if m == k {
                    continue;
                }
                let n = *rest.iter().find(|&&n| n != k && n != m).unwrap();
                // sin phi_n^j = sin theta_n^k sin psi^{k,j}
                let lhs = ph[j][n].sin();
                r.twosin = r.twosin.max((lhs - th[k][n].sin() * ps[k][j].sin()).abs());

                let face = th[m][j].cos() * th[n][j].cos()
                    + th[m][j].sin() * th[n][j].sin() * ps[m][n].cos();
                r.cosine_face = r.cosine_face.max((th[k][j].cos() - face).abs());

                let dihedral = ps[m][k].sin() * ps[n][k].sin() * th[k][j].cos()
                    - ps[m][k].cos() * ps[n][k].cos();
                r.cosine_dihedral = r.cosine_dihedral.max((ps[n][m].cos() - dihedral).abs());
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Reference;
    use approx::assert_relative_eq;

    /// Dihedral angle along edge (a, b) measured by projecting the two
    /// opposite vertices onto the plane orthogonal to the edge.
    fn projected_dihedral(t: &Tetrahedron, i: usize, j: usize) -> f64 {
        let ab = others(&[i, j]);
        let (pa, pb) = (t.v[ab[0]], t.v[ab[1]]);
        let e = (pb - pa).normalize();
        let proj = |q: Point3| {
            let w = q - pa;
            w - e * w.dot(&e)
        };
        let (u, v) = (proj(t.v[i]), proj(t.v[j]));
        (u.dot(&v) / (u.norm() * v.norm())).acos()
    }

    #[test]
    fn reference_dihedrals() {
        let t = Reference::Hat.tetrahedron();
        let g = angles(&t).unwrap();
        // F_2 and F_3 are the coordinate planes y = 0 and z = 0.
        assert_relative_eq!(g.angles.psi[2][3], PI / 2.0, epsilon = 1e-14);
        // F_0 is the slanted face.
        for j in 1..4 {
            assert_relative_eq!(g.angles.psi[0][j], (1.0 / 3f64.sqrt()).acos(), epsilon = 1e-14);
            assert_relative_eq!(g.angles.psi[0][j], 0.9553166181245093, epsilon = 1e-14);
        }
        assert_relative_eq!(g.max_angle, PI / 2.0, epsilon = 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_relative_eq!(g.angles.psi[i][j], projected_dihedral(&t, i, j), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn regular_angles() {
        let g = angles(&Tetrahedron::regular()).unwrap();
        for a in g.angles.face_angles() {
            assert_relative_eq!(a, PI / 3.0, epsilon = 1e-14);
        }
        for a in g.angles.dihedral_angles() {
            assert_relative_eq!(a, (1.0f64 / 3.0).acos(), epsilon = 1e-14);
        }
        assert_eq!(g.angles.dihedral_angles().count(), 6);
        assert_eq!(g.angles.face_angles().count(), 12);
    }

    #[test]
    fn phi_against_height() {
        let t = Tetrahedron::from_coords([[0., 0., 0.], [2., 0., 0.], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]])
            .unwrap();
        let g = angles(&t).unwrap();
        // x_3 sits at height 0.9 above F_3 (the plane z = 0).
        for j in 0..3 {
            let expect = (0.9 / (t.v[3] - t.v[j]).norm()).asin();
            assert_relative_eq!(g.angles.phi[3][j], expect, epsilon = 1e-14);
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_relative_eq!(g.angles.psi[i][j], projected_dihedral(&t, i, j), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn identities_on_closed_forms() {
        for t in [Tetrahedron::regular(), Reference::Hat.tetrahedron()] {
            assert!(verify_trig_identities(&t).unwrap().max() < 1e-12);
        }
    }
}

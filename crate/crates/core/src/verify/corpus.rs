//! Fixed library of smooth test fields.

use std::sync::Arc;

use rand::Rng;

use super::generate::sample_rng;
use crate::error::Result;
use crate::expr::ExprField;
use crate::field::ScalarField;
use crate::geom::Tetrahedron;
use crate::interp::lagrange_basis;
use crate::lattice::MultiIndex;
use crate::poly::Polynomial3;

pub const CORPUS_SIZE: usize = 20;

const EXPRESSIONS: [&str; 16] = [
    "sin(x + 2*y + 3*z)",
    "cos(2*x - y + z)",
    "exp(x + y/2 - z)",
    "exp(-(x^2 + y^2 + z^2))",
    "sin(x)*cos(y)*exp(z)",
    "1/(2 + x + y + z)",
    "1/(3 - x + 2*y)",
    "(1 + y^2)/((x + 2)^2 + z^2)",
    "exp(x*y + z)",
    "sin(3*x)*sin(2*y + z)",
    "cos(x*y*z + x)",
    "x^4 + y^4 + z^4 - x*y*z",
    "exp(2*x)*cos(3*z)",
    "sin(x + y)^2 + cos(y - z)",
    "1/(1.5 + x^2 + y)",
    "sin(5*x + y)",
];

const RANDOM_POLYNOMIALS: usize = 3;

#[derive(Clone)]
pub enum CorpusField {
    Fixed(Arc<dyn ScalarField>),
    /// `prod_i prod_{j<k} (lambda_i - j/k)` on the element at hand; vanishes
    /// on `Sigma^k`.
    ElementBubble,
}

#[derive(Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub field: CorpusField,
}

impl CorpusEntry {
    pub fn on(&self, t: &Tetrahedron, k: usize) -> Result<Arc<dyn ScalarField>> {
        match &self.field {
            CorpusField::Fixed(f) => Ok(f.clone()),
            CorpusField::ElementBubble => Ok(Arc::new(element_bubble(t, k)?)),
        }
    }
}

/// Degree `4k` polynomial vanishing at every node of `Sigma^k(t)`.
pub fn element_bubble(t: &Tetrahedron, k: usize) -> Result<Polynomial3> {
    let lambda = lagrange_basis(t, 1)?;
    let mut out = Polynomial3::constant(1.0);
    for l in &lambda {
        for j in 0..k {
            out = &out * &(l - &Polynomial3::constant(j as f64 / k as f64));
        }
    }
    Ok(out)
}

/// Random polynomial of total degree `degree` with coefficients in [-1, 1].
pub fn random_polynomial(degree: usize, seed: u64, index: u64) -> Polynomial3 {
    let mut rng = sample_rng(seed, index);
    let mut p = Polynomial3::from_coeffs(
        MultiIndex::all_up_to(degree)
            .into_iter()
            .map(|a| (a, rng.random_range(-1.0..1.0))),
    );
    // Pin the top-degree term away from zero.
    let lead = MultiIndex::new(degree as u32, 0, 0);
    p = &p + &Polynomial3::from_coeffs([(lead, 1.0)]);
    p
}

/// The 20-field library for degree-`k` experiments: closed forms with
/// derivatives to order `k + 1`, three random polynomials of degree `k + 2`
/// and the element bubble.
pub fn corpus(k: usize, seed: u64) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    for src in EXPRESSIONS {
        out.push(CorpusEntry {
            name: src.to_string(),
            field: CorpusField::Fixed(Arc::new(ExprField::parse(src, k + 1)?)),
        });
    }
    for i in 0..RANDOM_POLYNOMIALS {
        out.push(CorpusEntry {
            name: format!("random_poly_{i}(deg {})", k + 2),
            field: CorpusField::Fixed(Arc::new(random_polynomial(k + 2, seed, i as u64))),
        });
    }
    out.push(CorpusEntry {
        name: "element_bubble".into(),
        field: CorpusField::ElementBubble,
    });
    debug_assert_eq!(out.len(), CORPUS_SIZE);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Reference;
    use crate::lattice::sigma_k;

    #[test]
    fn corpus_has_twenty_fields() {
        let c = corpus(1, 7).unwrap();
        assert_eq!(c.len(), CORPUS_SIZE);
        let t = Reference::Hat.tetrahedron();
        for e in &c {
            let f = e.on(&t, 1).unwrap();
            assert!(f.order() >= 2);
            assert!(f.eval(&t.centroid()).is_finite());
        }
    }

    #[test]
    fn bubble_vanishes_on_nodes() {
        let t = Tetrahedron::from_coords([[0., 0., 0.], [2., 0., 0.], [0.3, 0.4, 0.], [0.2, 0.3, 0.9]]).unwrap();
        for k in 1..=3 {
            let b = element_bubble(&t, k).unwrap();
            assert_eq!(b.degree(), 4 * k);
            for n in sigma_k(&t, k).unwrap() {
                assert!(b.eval(&n.point).abs() < 1e-12);
            }
            assert!(b.eval(&t.centroid()).abs() > 1e-10);
        }
    }

    #[test]
    fn random_polynomials_are_seeded() {
        assert_eq!(random_polynomial(3, 1, 0), random_polynomial(3, 1, 0));
        assert_ne!(random_polynomial(3, 1, 0), random_polynomial(3, 1, 1));
        assert_eq!(random_polynomial(3, 1, 0).degree(), 3);
    }
}

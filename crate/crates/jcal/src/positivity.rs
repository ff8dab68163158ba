//! Positivity of (p,p)-values: strongly positive decompositions and the
//! sampled positivity test.
//!
//! Deciding strong positivity is out of scope; positivity is probed on
//! seeded tuples (xi_1, J xi_1, ..., xi_p, J xi_p), which is the defining
//! criterion for positive forms.

use crate::error::{Error, Result};
use crate::form::ExteriorValue;
use crate::linalg::SqMat;
use crate::projector::BidegreeProjector;
use crate::sampling::Sampler;
use crate::scalar::C64;

/// A conical combination of elementary positive products: terms
/// (lambda_j, [alpha_{1,j}, ..., alpha_{p,j}]) with lambda_j >= 0 and each
/// alpha a (1,0)-covector given densely over the coframe.
#[derive(Clone, Debug)]
pub struct StronglyPositiveDecomposition {
    pub n: usize,
    pub terms: Vec<(f64, Vec<Vec<C64>>)>,
}

impl StronglyPositiveDecomposition {
    pub fn p(&self) -> usize {
        self.terms.first().map_or(0, |(_, alphas)| alphas.len())
    }

    /// Check weights and that every alpha lies in the (1,0) range of the
    /// projector (residual <= 1e-10).
    pub fn validate(&self, proj: &BidegreeProjector) -> Result<()> {
        let p = self.p();
        for (lambda, alphas) in &self.terms {
            if *lambda < 0.0 {
                return Err(Error::NegativeWeight(*lambda));
            }
            if alphas.len() != p {
                return Err(Error::DimensionMismatch);
            }
            for a in alphas {
                if proj.residual_10(a) > 1e-10 {
                    return Err(Error::WrongBidegree(1, 0));
                }
            }
        }
        Ok(())
    }
}

/// Assemble sum_j lambda_j i a_1 ^ conj(a_1) ^ ... ^ i a_p ^ conj(a_p).
pub fn strongly_positive_form(dec: &StronglyPositiveDecomposition) -> Result<ExteriorValue> {
    let dim = 2 * dec.n;
    let mut out = ExteriorValue::zero(dim);
    for (lambda, alphas) in &dec.terms {
        if *lambda < 0.0 {
            return Err(Error::NegativeWeight(*lambda));
        }
        let mut term = ExteriorValue::one(dim);
        for a in alphas {
            let af = ExteriorValue::from_covector(dim, a);
            term = term.wedge(&af.mul_i())?.wedge(&af.conj())?;
        }
        out = out.add(&term.scale(*lambda));
    }
    Ok(out)
}

/// Outcome of the sampled positivity probe.
#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub positive: bool,
    /// Smallest sampled real value.
    pub min_value: f64,
    /// Largest sampled imaginary magnitude (should be ~0 for real forms).
    pub max_imag: f64,
    /// The violating tuple, when one was found.
    pub witness: Option<Vec<Vec<f64>>>,
    pub samples: usize,
    pub seed: u64,
}

/// Sampled positivity of a (p,p)-value: evaluates on m seeded tuples
/// (xi_1, J xi_1, ..., xi_p, J xi_p) and requires values >= -tol.
pub fn is_positive_sample(
    v: &ExteriorValue,
    j_value: &SqMat<f64>,
    sampler: &mut Sampler,
    m: usize,
    tol: f64,
) -> Result<PositivityReport> {
    let dim = v.dim();
    let degree = v.degree()?;
    if degree % 2 != 0 {
        return Err(Error::WrongBidegree(degree / 2, degree / 2));
    }
    let p = degree / 2;
    let proj = BidegreeProjector::new(j_value)?;
    proj.check_bidegree(v, p, p, 1e-9 * v.sup_norm().max(1.0))?;

    let seed = sampler.seed;
    let mut min_value = f64::INFINITY;
    let mut max_imag = 0.0f64;
    let mut witness = None;
    for _ in 0..m {
        let mut tuple = Vec::with_capacity(2 * p);
        for _ in 0..p {
            let xi = sampler.unit_vector(dim);
            let jxi = j_value.apply(&xi);
            tuple.push(xi);
            tuple.push(jxi);
        }
        let val = v.apply(&tuple)?;
        max_imag = max_imag.max(val.im.abs());
        if val.re < min_value {
            min_value = val.re;
            if val.re < -tol {
                witness = Some(tuple);
            }
        }
        if witness.is_some() {
            break;
        }
    }
    Ok(PositivityReport {
        positive: witness.is_none(),
        min_value,
        max_imag,
        witness,
        samples: m,
        seed,
    })
}

/// A random strongly positive decomposition with `terms` summands, alphas
/// drawn as complex combinations of a (1,0) frame built from the projector
/// columns at the anchor point.
pub fn random_decomposition(
    n: usize,
    p: usize,
    terms: usize,
    proj: &BidegreeProjector,
    sampler: &mut Sampler,
) -> StronglyPositiveDecomposition {
    // a (1,0) basis: P10 applied to dx_1, dx_3, ..., scaled by 2 so the
    // standard structure yields dz_j exactly
    let dim = 2 * n;
    let mut frame = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = vec![C64::ZERO; dim];
        e[2 * k] = C64::ONE;
        let col: Vec<C64> = proj.apply_10(&e).iter().map(|c| c.scale(2.0)).collect();
        frame.push(col);
    }
    let mut out = Vec::new();
    for _ in 0..terms {
        let lambda = sampler.uniform(0.1, 1.0);
        let mut alphas = Vec::with_capacity(p);
        for _ in 0..p {
            let mut a = vec![C64::ZERO; dim];
            for f in &frame {
                let c = sampler.complex(1.0);
                for (ai, fi) in a.iter_mut().zip(f) {
                    *ai = ai.add(&fi.mul(&c));
                }
            }
            alphas.push(a);
        }
        out.push((lambda, alphas));
    }
    StronglyPositiveDecomposition { n, terms: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::ExteriorValue;

    fn j_std(n: usize) -> SqMat<f64> {
        let mut m = SqMat::zeros(2 * n);
        for k in 0..n {
            m.set(2 * k, 2 * k + 1, -1.0);
            m.set(2 * k + 1, 2 * k, 1.0);
        }
        m
    }

    fn dz(n: usize, k: usize) -> Vec<C64> {
        let mut v = vec![C64::ZERO; 2 * n];
        v[2 * k] = C64::ONE;
        v[2 * k + 1] = C64::I;
        v
    }

    #[test]
    fn idz_dzbar_is_twice_area_form() {
        let dec = StronglyPositiveDecomposition {
            n: 1,
            terms: vec![(1.0, vec![dz(1, 0)])],
        };
        let f = strongly_positive_form(&dec).unwrap();
        // i dz ^ dzbar = 2 dx ^ dy
        let want = ExteriorValue::basis_covector(2, 0)
            .wedge(&ExteriorValue::basis_covector(2, 1))
            .unwrap()
            .scale(2.0);
        assert!(f.approx_eq(&want, 1e-14));
    }

    #[test]
    fn empty_decomposition_gives_zero() {
        let dec = StronglyPositiveDecomposition {
            n: 2,
            terms: vec![],
        };
        assert!(strongly_positive_form(&dec).unwrap().is_zero());
    }

    #[test]
    fn two_term_p2_is_positive_volume_multiple() {
        // alphas spanning C^2 with p=2: positive multiple of the volume form
        let dec = StronglyPositiveDecomposition {
            n: 2,
            terms: vec![
                (1.0, vec![dz(2, 0), dz(2, 1)]),
                (1.0, vec![dz(2, 0), dz(2, 1)]),
            ],
        };
        let f = strongly_positive_form(&dec).unwrap();
        // expand: each term is i dz1^dz1bar ^ i dz2^dz2bar = 4 dx1 dy1 dx2 dy2
        let vol = ExteriorValue::basis_covector(4, 0)
            .wedge(&ExteriorValue::basis_covector(4, 1))
            .unwrap()
            .wedge(&ExteriorValue::basis_covector(4, 2))
            .unwrap()
            .wedge(&ExteriorValue::basis_covector(4, 3))
            .unwrap();
        assert!(f.approx_eq(&vol.scale(8.0), 1e-13));
    }

    #[test]
    fn negative_weight_rejected() {
        let dec = StronglyPositiveDecomposition {
            n: 1,
            terms: vec![(-0.5, vec![dz(1, 0)])],
        };
        assert!(matches!(
            strongly_positive_form(&dec),
            Err(Error::NegativeWeight(_))
        ));
    }

    #[test]
    fn beta1_value_positive_and_negative_rejected() {
        let j = j_std(1);
        let dzf = ExteriorValue::from_covector(2, &dz(1, 0));
        let beta1 = dzf.mul_i().wedge(&dzf.conj()).unwrap().scale(0.5);
        let mut s = Sampler::new(1);
        let rep = is_positive_sample(&beta1, &j, &mut s, 200, 1e-12).unwrap();
        assert!(rep.positive, "min={}", rep.min_value);

        let neg = beta1.neg();
        let mut s = Sampler::new(1);
        let rep = is_positive_sample(&neg, &j, &mut s, 200, 1e-12).unwrap();
        assert!(!rep.positive);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn indefinite_hermitian_form_found_negative() {
        // i dz1 ^ dz2bar + i dz2 ^ dz1bar: hermitian matrix [[0,1],[1,0]],
        // eigenvalues +-1, so sampling must find a violation
        let n = 2;
        let d1 = ExteriorValue::from_covector(2 * n, &dz(n, 0));
        let d2 = ExteriorValue::from_covector(2 * n, &dz(n, 1));
        let v = d1
            .mul_i()
            .wedge(&d2.conj())
            .unwrap()
            .add(&d2.mul_i().wedge(&d1.conj()).unwrap());
        let mut s = Sampler::new(9);
        let rep = is_positive_sample(&v, &j_std(n), &mut s, 10_000, 1e-10).unwrap();
        assert!(!rep.positive);
    }

    #[test]
    fn strongly_positive_implies_positive_sampled() {
        let j = j_std(2);
        let proj = BidegreeProjector::new(&j).unwrap();
        let mut gen = Sampler::new(33);
        for p in 1..=2usize {
            for _ in 0..5 {
                let dec = random_decomposition(2, p, 3, &proj, &mut gen);
                dec.validate(&proj).unwrap();
                let f = strongly_positive_form(&dec).unwrap();
                let mut s = Sampler::new(17);
                let rep = is_positive_sample(&f, &j, &mut s, 300, 0.0).unwrap();
                assert!(rep.positive, "p={p} min={}", rep.min_value);
            }
        }
    }
}

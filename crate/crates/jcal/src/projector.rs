//! Bidegree splitting induced by an almost complex structure value.
//!
//! A (1,0)-covector is a +i eigenvector of the transpose action of J. The
//! projector onto the (1,0) cotangent space has the closed form
//! P10 = (Id - i J^T)/2, so no eigen-decomposition is needed; the
//! conjugate P01 = (Id + i J^T)/2 projects onto (0,1). Bidegree components
//! of higher-degree values are obtained by substituting
//! dx_i = P10 dx_i + P01 dx_i into each blade and expanding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::form::SpForm;
use crate::linalg::SqMat;
use crate::scalar::{Cx, Scalar};

/// Tolerance for the J^2 = -Id precondition.
pub const ACS_TOL: f64 = 1e-10;

/// Column `i` of P10 over a generic scalar ring: the coefficient vector of
/// the (1,0)-part of dx_i. Entry k is (delta_ki - i J_ik)/2.
pub fn p10_column<S: Scalar>(j: &SqMat<S>, i: usize) -> Vec<Cx<S>> {
    let dim = j.dim;
    (0..dim)
        .map(|k| {
            let re = if k == i { S::from_f64(0.5) } else { S::zero() };
            let im = j.at(i, k).scale(-0.5);
            Cx::new(re, im)
        })
        .collect()
}

/// Column `i` of P01 (the conjugate of [`p10_column`]).
pub fn p01_column<S: Scalar>(j: &SqMat<S>, i: usize) -> Vec<Cx<S>> {
    p10_column(j, i).into_iter().map(|c| c.conj()).collect()
}

/// Project the (1,0)-part of a dense complex covector.
pub fn project_10_covector<S: Scalar>(j: &SqMat<S>, cov: &[Cx<S>]) -> Vec<Cx<S>> {
    let dim = j.dim;
    let mut out = vec![Cx::zero(); dim];
    for (i, ci) in cov.iter().enumerate() {
        if ci.abs_bound() == 0.0 {
            continue;
        }
        let col = p10_column(j, i);
        for (k, ck) in col.into_iter().enumerate() {
            out[k] = out[k].add(&ck.mul(ci));
        }
    }
    out
}

pub fn project_01_covector<S: Scalar>(j: &SqMat<S>, cov: &[Cx<S>]) -> Vec<Cx<S>> {
    let dim = j.dim;
    let mut out = vec![Cx::zero(); dim];
    for (i, ci) in cov.iter().enumerate() {
        if ci.abs_bound() == 0.0 {
            continue;
        }
        let col = p01_column(j, i);
        for (k, ck) in col.into_iter().enumerate() {
            out[k] = out[k].add(&ck.mul(ci));
        }
    }
    out
}

/// Split a value into its bidegree components relative to `j`.
///
/// Works termwise: each blade dx_I expands into the 2^|I| wedges of
/// projected factors, grouped by the count of (1,0) choices. The sum of
/// all components reconstructs the input exactly (up to rounding) because
/// P10 + P01 = Id.
pub fn split_by_bidegree<S: Scalar>(
    form: &SpForm<S>,
    j: &SqMat<S>,
) -> BTreeMap<(usize, usize), SpForm<S>> {
    let dim = form.dim();
    debug_assert_eq!(j.dim, dim);
    // cache projected basis covectors that actually occur
    let mut cols10: Vec<Option<Vec<Cx<S>>>> = vec![None; dim];
    let mut cols01: Vec<Option<Vec<Cx<S>>>> = vec![None; dim];
    let mut out: BTreeMap<(usize, usize), SpForm<S>> = BTreeMap::new();

    for (mask, coeff) in form.terms() {
        let bits: Vec<usize> = (0..dim).filter(|i| mask >> i & 1 == 1).collect();
        let k = bits.len();
        for i in &bits {
            if cols10[*i].is_none() {
                cols10[*i] = Some(p10_column(j, *i));
                cols01[*i] = Some(p01_column(j, *i));
            }
        }
        for sel in 0u32..(1 << k) {
            let p = sel.count_ones() as usize;
            let q = k - p;
            // wedge the chosen projections in blade order
            let mut acc = SpForm::scalar(dim, coeff.clone());
            for (pos, i) in bits.iter().enumerate() {
                let col = if sel >> pos & 1 == 1 {
                    cols10[*i].as_ref().unwrap()
                } else {
                    cols01[*i].as_ref().unwrap()
                };
                acc = acc.wedge_covector(col);
                if acc.is_zero() {
                    break;
                }
            }
            if !acc.is_zero() {
                out.entry((p, q))
                    .and_modify(|f| *f = f.add(&acc))
                    .or_insert(acc);
            }
        }
    }
    out.retain(|_, f| !f.is_zero());
    out
}

/// The (p,q)-component of a value relative to `j`.
pub fn project_bidegree<S: Scalar>(
    form: &SpForm<S>,
    j: &SqMat<S>,
    p: usize,
    q: usize,
) -> SpForm<S> {
    split_by_bidegree(form, j)
        .remove(&(p, q))
        .unwrap_or_else(|| SpForm::zero(form.dim()))
}

/// Bidegree projector at a point, as a concrete matrix with invariants.
#[derive(Clone, Debug)]
pub struct BidegreeProjector {
    n: usize,
    /// Row-major 2n x 2n complex matrix of P10.
    p10: Vec<Cx<f64>>,
    j: SqMat<f64>,
}

impl BidegreeProjector {
    /// Build from an almost complex structure value.
    ///
    /// Fails with NotAlmostComplex when J^2 deviates from -Id, and with
    /// DegenerateEigenspace when the projector rank is not n (the trace of
    /// P10 equals n - i tr(J)/2, so a real trace defect signals degeneracy).
    pub fn new(j_value: &SqMat<f64>) -> Result<Self> {
        let dim = j_value.dim;
        if dim % 2 != 0 {
            return Err(Error::DimensionMismatch);
        }
        let n = dim / 2;
        let resid = j_value.acs_residual();
        if resid > ACS_TOL {
            return Err(Error::NotAlmostComplex { residual: resid });
        }
        let mut p10 = vec![Cx::zero(); dim * dim];
        for i in 0..dim {
            let col = p10_column(j_value, i);
            for (k, c) in col.into_iter().enumerate() {
                p10[k * dim + i] = c;
            }
        }
        let mut trace = Cx::zero();
        for k in 0..dim {
            trace = trace.add(&p10[k * dim + k]);
        }
        let defect = (trace.re - n as f64).abs() + trace.im.abs();
        if defect > ACS_TOL * dim as f64 {
            return Err(Error::DegenerateEigenspace { defect });
        }
        Ok(BidegreeProjector {
            n,
            p10,
            j: j_value.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> &SqMat<f64> {
        &self.j
    }

    pub fn p10_entry(&self, r: usize, c: usize) -> Cx<f64> {
        self.p10[r * 2 * self.n + c].clone()
    }

    pub fn p01_entry(&self, r: usize, c: usize) -> Cx<f64> {
        self.p10_entry(r, c).conj()
    }

    /// Apply P10 to a covector.
    pub fn apply_10(&self, cov: &[Cx<f64>]) -> Vec<Cx<f64>> {
        project_10_covector(&self.j, cov)
    }

    pub fn apply_01(&self, cov: &[Cx<f64>]) -> Vec<Cx<f64>> {
        project_01_covector(&self.j, cov)
    }

    /// Residual of idempotence |P10^2 - P10| (max-abs entry).
    pub fn idempotence_residual(&self) -> f64 {
        let dim = 2 * self.n;
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Cx::zero();
                for k in 0..dim {
                    acc = acc.add(&self.p10_entry(r, k).mul(&self.p10_entry(k, c)));
                }
                worst = worst.max(acc.sub(&self.p10_entry(r, c)).abs());
            }
        }
        worst
    }

    /// Residual of P10 + conj(P10) = Id.
    pub fn resolution_residual(&self) -> f64 {
        let dim = 2 * self.n;
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let s = self.p10_entry(r, c).add(&self.p01_entry(r, c));
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((s.re - want).abs() + s.im.abs());
            }
        }
        worst
    }

    /// Distance of a covector from the (1,0) subspace: |P10 v - v|.
    pub fn residual_10(&self, cov: &[Cx<f64>]) -> f64 {
        self.apply_10(cov)
            .iter()
            .zip(cov)
            .map(|(a, b)| a.sub(b).abs())
            .fold(0.0, f64::max)
    }

    pub fn split(&self, v: &SpForm<f64>) -> BTreeMap<(usize, usize), SpForm<f64>> {
        split_by_bidegree(v, &self.j)
    }

    /// Check that `v` is homogeneous of bidegree (p,q) within `tol`.
    pub fn check_bidegree(&self, v: &SpForm<f64>, p: usize, q: usize, tol: f64) -> Result<()> {
        v.degree().map_err(|_| Error::MixedBidegree)?;
        for ((a, b), comp) in self.split(v) {
            if (a, b) != (p, q) && comp.sup_norm() > tol {
                return Err(Error::WrongBidegree(p, q));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::ExteriorValue;
    use crate::scalar::C64;

    fn j_std(n: usize) -> SqMat<f64> {
        let mut m = SqMat::zeros(2 * n);
        for k in 0..n {
            m.set(2 * k, 2 * k + 1, -1.0);
            m.set(2 * k + 1, 2 * k, 1.0);
        }
        m
    }

    #[test]
    fn standard_projector_maps_dx_to_half_dz() {
        let p = BidegreeProjector::new(&j_std(1)).unwrap();
        let dx = vec![C64::ONE, C64::ZERO];
        let out = p.apply_10(&dx);
        // dz/2 = (dx + i dy)/2
        assert!(out[0].sub(&C64 { re: 0.5, im: 0.0 }).abs() < 1e-15);
        assert!(out[1].sub(&C64 { re: 0.0, im: 0.5 }).abs() < 1e-15);
    }

    #[test]
    fn projector_invariants() {
        let p = BidegreeProjector::new(&j_std(2)).unwrap();
        assert!(p.idempotence_residual() < 1e-12);
        assert!(p.resolution_residual() < 1e-12);
    }

    #[test]
    fn non_acs_rejected() {
        let mut m = SqMat::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        assert!(matches!(
            BidegreeProjector::new(&m),
            Err(Error::NotAlmostComplex { .. })
        ));
    }

    #[test]
    fn split_dz_is_pure_10() {
        let p = BidegreeProjector::new(&j_std(1)).unwrap();
        let dz =
            ExteriorValue::basis_covector(2, 0).add(&ExteriorValue::basis_covector(2, 1).mul_i());
        let comps = p.split(&dz);
        assert_eq!(comps.len(), 1);
        let ten = comps.get(&(1, 0)).unwrap();
        assert!(ten.approx_eq(&dz, 1e-14));
    }

    #[test]
    fn split_dzbar_wedge_dz_is_pure_11() {
        let p = BidegreeProjector::new(&j_std(1)).unwrap();
        let dz =
            ExteriorValue::basis_covector(2, 0).add(&ExteriorValue::basis_covector(2, 1).mul_i());
        let v = dz.conj().wedge(&dz).unwrap();
        let comps = p.split(&v);
        assert_eq!(comps.len(), 1);
        assert!(comps.contains_key(&(1, 1)));
        assert!(comps[&(1, 1)].approx_eq(&v, 1e-14));
    }

    #[test]
    fn reconstruction_and_idempotence_on_random_values() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // a valid non-constant-free ACS value: conjugate of J_std by a
        // random invertible matrix close to Id
        let n = 2;
        let dim = 2 * n;
        let mut a = SqMat::identity(dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = a.at(r, c) + rng.gen_range(-0.2..0.2);
                a.set(r, c, v);
            }
        }
        // invert a numerically
        let mut inv_cols = Vec::new();
        for c in 0..dim {
            let mut b = vec![0.0; dim];
            b[c] = 1.0;
            inv_cols.push(crate::linalg::solve_f64(dim, &a.data, &b).unwrap());
        }
        let mut ainv = SqMat::zeros(dim);
        for c in 0..dim {
            for r in 0..dim {
                ainv.set(r, c, inv_cols[c][r]);
            }
        }
        let j = a.matmul(&j_std(n)).matmul(&ainv);
        assert!(j.acs_residual() < 1e-12);
        let p = BidegreeProjector::new(&j).unwrap();

        for degree in 1..=3usize {
            let mut v = ExteriorValue::zero(dim);
            for mask in 0u32..(1 << dim) {
                if mask.count_ones() as usize == degree {
                    v.add_term(
                        mask,
                        Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    );
                }
            }
            let comps = p.split(&v);
            // reconstruction
            let mut sum = ExteriorValue::zero(dim);
            for ((pp, qq), c) in &comps {
                assert_eq!(pp + qq, degree);
                sum = sum.add(c);
            }
            assert!(sum.approx_eq(&v, 1e-12), "degree {degree}");
            // componentwise idempotence
            for ((pp, qq), c) in &comps {
                let again = p.split(c);
                for ((a2, b2), c2) in &again {
                    if (a2, b2) == (pp, qq) {
                        assert!(c2.approx_eq(c, 1e-12));
                    } else {
                        assert!(c2.sup_norm() < 1e-12);
                    }
                }
            }
            // conjugation symmetry
            let conj_comps = p.split(&v.conj());
            for ((pp, qq), c) in &comps {
                let cc = conj_comps
                    .get(&(*qq, *pp))
                    .cloned()
                    .unwrap_or_else(|| ExteriorValue::zero(dim));
                assert!(cc.approx_eq(&c.conj(), 1e-12));
            }
        }
    }
}

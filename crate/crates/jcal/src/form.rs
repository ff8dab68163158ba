//! Pointwise complex exterior algebra.
//!
//! Values are stored sparsely over a real coframe dx_1,...,dx_d: a term is
//! a strictly increasing multi-index (encoded as a bitmask) with a complex
//! coefficient. On an almost complex R^{2n} the slot count is d = 2n, but
//! odd d occurs on chart parameter spaces, so the slot count is kept raw.
//! Bidegree is not stored; it is a view relative to a structure value,
//! computed by [`crate::projector`].

use std::collections::BTreeMap;

use crate::error::Error;
use crate::linalg::det_f64;
use crate::scalar::{Cx, Scalar, C64};

/// Absolute pruning threshold for plain (`f64`) coefficient maps.
pub const PRUNE_EPS: f64 = 1e-14;

/// Sign from appending one coframe factor `bit` to an increasing product
/// `mask`, then sorting it into place: (-1)^(number of set bits above).
#[inline]
pub fn append_sign(mask: u32, bit_index: u32) -> f64 {
    let above = (mask >> (bit_index + 1)).count_ones();
    if above % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of merging two disjoint increasing index products.
#[inline]
pub fn merge_sign(a: u32, b: u32) -> f64 {
    debug_assert_eq!(a & b, 0);
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A sparse exterior-algebra element with coefficients in `Cx<S>` over a
/// `dim`-slot real coframe.
#[derive(Clone, Debug)]
pub struct SpForm<S: Scalar> {
    dim: usize,
    terms: BTreeMap<u32, Cx<S>>,
}

/// The public, plain-valued exterior value.
pub type ExteriorValue = SpForm<f64>;

impl<S: Scalar> SpForm<S> {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= crate::scalar::MAX_DIM);
        SpForm {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// The constant function 1 (degree 0).
    pub fn one(dim: usize) -> Self {
        let mut f = Self::zero(dim);
        f.terms.insert(0, Cx::one());
        f
    }

    pub fn scalar(dim: usize, c: Cx<S>) -> Self {
        let mut f = Self::zero(dim);
        f.add_term(0, c);
        f
    }

    /// dx_i as a form (0-based coframe index).
    pub fn basis_covector(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut f = Self::zero(dim);
        f.terms.insert(1 << i, Cx::one());
        f
    }

    /// Degree-1 form from a dense complex coefficient vector over the coframe.
    pub fn from_covector(dim: usize, coeffs: &[Cx<S>]) -> Self {
        assert_eq!(coeffs.len(), dim);
        let mut f = Self::zero(dim);
        for (i, c) in coeffs.iter().enumerate() {
            f.add_term(1 << i, c.clone());
        }
        f
    }

    /// Number of real coframe slots.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Complex dimension when the slot count is even.
    pub fn half_dim(&self) -> usize {
        debug_assert_eq!(self.dim % 2, 0);
        self.dim / 2
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Cx<S>)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mask: u32) -> Cx<S> {
        self.terms.get(&mask).cloned().unwrap_or_else(Cx::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn add_term(&mut self, mask: u32, c: Cx<S>) {
        if c.abs_bound() == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mask) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = e.get().add(&c);
                if v.abs_bound() == 0.0 {
                    e.remove();
                } else {
                    e.insert(v);
                }
            }
        }
    }

    /// Total degrees present, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        let mut ds: Vec<usize> = self.terms.keys().map(|m| m.count_ones() as usize).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }

    /// The homogeneous total degree, or MixedDegree.
    pub fn degree(&self) -> Result<usize, Error> {
        let ds = self.degrees();
        match ds.len() {
            0 => Ok(0),
            1 => Ok(ds[0]),
            _ => Err(Error::MixedDegree),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn scale_cx(&self, k: &Cx<S>) -> Self {
        if k.abs_bound() == 0.0 {
            return Self::zero(self.dim);
        }
        self.map_coeffs(|c| c.mul(k))
    }

    pub fn scale_c64(&self, k: &C64) -> Self {
        if k.re == 0.0 && k.im == 0.0 {
            return Self::zero(self.dim);
        }
        self.map_coeffs(|c| c.mul_c64(k))
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero(self.dim);
        }
        self.map_coeffs(|c| c.scale(k))
    }

    pub fn mul_i(&self) -> Self {
        self.map_coeffs(|c| c.mul_i())
    }

    /// Complex conjugation (the real coframe is fixed by conjugation).
    pub fn conj(&self) -> Self {
        self.map_coeffs(|c| c.conj())
    }

    fn map_coeffs<F: Fn(&Cx<S>) -> Cx<S>>(&self, f: F) -> Self {
        SpForm {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (*m, f(c))).collect(),
        }
    }

    pub fn wedge(&self, o: &Self) -> Result<Self, Error> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch);
        }
        let mut out = Self::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                if ma & mb != 0 {
                    continue;
                }
                let s = merge_sign(*ma, *mb);
                out.add_term(ma | mb, ca.mul(cb).scale(s));
            }
        }
        Ok(out)
    }

    /// Wedge with a dense degree-1 covector; cheaper than building a form.
    pub fn wedge_covector(&self, cov: &[Cx<S>]) -> Self {
        debug_assert_eq!(cov.len(), self.dim);
        let mut out = Self::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (i, ci) in cov.iter().enumerate() {
                if ci.abs_bound() == 0.0 || ma & (1 << i) != 0 {
                    continue;
                }
                let s = append_sign(*ma, i as u32);
                out.add_term(ma | (1 << i), ca.mul(ci).scale(s));
            }
        }
        out
    }

    /// k-th wedge power.
    pub fn wedge_pow(&self, k: usize) -> Self {
        match k {
            0 => Self::one(self.dim),
            _ => {
                let mut acc = self.clone();
                for _ in 1..k {
                    acc = acc.wedge(self).expect("same dimension");
                }
                acc
            }
        }
    }

    /// Drop the derivative parts.
    pub fn value(&self) -> ExteriorValue {
        let mut out = ExteriorValue::zero(self.dim);
        for (m, c) in &self.terms {
            out.add_term(*m, c.value());
        }
        out.pruned(PRUNE_EPS)
    }
}

impl ExteriorValue {
    /// Remove coefficients below an absolute threshold.
    pub fn pruned(mut self, eps: f64) -> Self {
        self.terms
            .retain(|_, c| c.re.abs() > eps || c.im.abs() > eps);
        self
    }

    /// Max absolute coefficient.
    pub fn sup_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Evaluate a homogeneous degree-k value on k real tangent vectors.
    pub fn apply(&self, vectors: &[Vec<f64>]) -> Result<C64, Error> {
        let k = self.degree()?;
        if vectors.len() != k {
            return Err(Error::DimensionMismatch);
        }
        for v in vectors {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch);
            }
        }
        let mut acc = C64::ZERO;
        let mut m = vec![0.0; k * k];
        for (mask, c) in &self.terms {
            // rows: coframe indices of the blade, columns: vectors
            let mut row = 0;
            let mut bits = *mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                for (col, v) in vectors.iter().enumerate() {
                    m[row * k + col] = v[i];
                }
                bits &= bits - 1;
                row += 1;
            }
            let d = if k == 0 { 1.0 } else { det_f64(k, &m) };
            acc = acc.add(&c.scale(d));
        }
        Ok(acc)
    }

    /// Coefficient of the top blade dx_1 ^ ... ^ dx_d; this is the density
    /// integrated by top-degree quadrature.
    pub fn top_coeff(&self) -> C64 {
        self.coeff((1u32 << self.dim) - 1)
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        self.sub(o).sup_norm() <= tol
    }
}

impl std::fmt::Display for ExteriorValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            let mut bits = *m;
            while bits != 0 {
                let i = bits.trailing_zeros();
                write!(f, " dx{}", i + 1)?;
                bits &= bits - 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dx(dim: usize, i: usize) -> ExteriorValue {
        ExteriorValue::basis_covector(dim, i)
    }

    /// Independent wedge oracle: expand blades into index lists and count
    /// inversions of the concatenation by brute force.
    fn wedge_oracle(a: &ExteriorValue, b: &ExteriorValue) -> ExteriorValue {
        let mut out = ExteriorValue::zero(a.dim());
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                if ma & mb != 0 {
                    continue;
                }
                let mut idx: Vec<u32> = (0..32).filter(|i| ma >> i & 1 == 1).collect();
                idx.extend((0..32).filter(|i| mb >> i & 1 == 1));
                let mut inv = 0;
                for p in 0..idx.len() {
                    for q in p + 1..idx.len() {
                        if idx[p] > idx[q] {
                            inv += 1;
                        }
                    }
                }
                let s = if inv % 2 == 0 { 1.0 } else { -1.0 };
                out.add_term(ma | mb, ca.mul(cb).scale(s));
            }
        }
        out
    }

    fn random_form(dim: usize, degree: usize, rng: &mut impl rand::Rng) -> ExteriorValue {
        let mut f = ExteriorValue::zero(dim);
        for mask in 0u32..(1 << dim) {
            if mask.count_ones() as usize == degree && rng.gen_bool(0.7) {
                f.add_term(
                    mask,
                    Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
        f
    }

    #[test]
    fn dz_wedge_dz_is_zero() {
        // dz = dx1 + i dx2 on C
        let dz = dx(2, 0).add(&dx(2, 1).mul_i());
        assert!(dz.wedge(&dz).unwrap().is_zero());
    }

    #[test]
    fn decomposable_two_form_squares_to_zero() {
        // (i a ^ b) ^ (i a ^ b) = 0 for 1-forms a, b in any dimension
        let a = dx(4, 0).add(&dx(4, 2).mul_i());
        let b = dx(4, 1).sub(&dx(4, 3).scale(0.5));
        let t = a.wedge(&b).unwrap().mul_i();
        assert!(t.wedge(&t).unwrap().is_zero());
    }

    #[test]
    fn wedge_matches_bruteforce_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3usize {
            for _ in 0..34 {
                let da = rng.gen_range(0..=2 * n);
                let db = rng.gen_range(0..=2 * n);
                let a = random_form(2 * n, da, &mut rng);
                let b = random_form(2 * n, db, &mut rng);
                let got = a.wedge(&b).unwrap();
                let want = wedge_oracle(&a, &b);
                assert!(got.approx_eq(&want, 1e-14), "n={n} da={da} db={db}");
            }
        }
    }

    #[test]
    fn graded_anticommutativity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let dim = 4;
            let da = rng.gen_range(0..=3usize);
            let db = rng.gen_range(0..=3usize);
            let a = random_form(dim, da, &mut rng);
            let b = random_form(dim, db, &mut rng);
            let ab = a.wedge(&b).unwrap();
            let sign = if (da * db) % 2 == 0 { 1.0 } else { -1.0 };
            let ba = b.wedge(&a).unwrap().scale(sign);
            assert!(ab.approx_eq(&ba, 1e-14));
        }
    }

    #[test]
    fn wedge_covector_agrees_with_wedge() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dim = 4;
        let a = random_form(dim, 2, &mut rng);
        let cov: Vec<Cx<f64>> = (0..dim)
            .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let c1 = a.wedge_covector(&cov);
        let c2 = a.wedge(&ExteriorValue::from_covector(dim, &cov)).unwrap();
        assert!(c1.approx_eq(&c2, 1e-14));
    }

    #[test]
    fn apply_volume_form() {
        // dx1 ^ dx2 on (e1, e2) = 1, on (e2, e1) = -1
        let vol = dx(2, 0).wedge(&dx(2, 1)).unwrap();
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        assert!((vol.apply(&[e1.clone(), e2.clone()]).unwrap().re - 1.0).abs() < 1e-15);
        assert!((vol.apply(&[e2, e1]).unwrap().re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_degree_detected() {
        let f = dx(2, 0).add(&ExteriorValue::one(2));
        assert!(matches!(f.degree(), Err(Error::MixedDegree)));
    }
}

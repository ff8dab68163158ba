//! Small dense linear algebra.
//!
//! Everything here operates on tiny matrices (at most 6x6 real or complex),
//! so plain Gaussian elimination with partial pivoting is both adequate and
//! easy to keep generic over the jet scalar rings.

use crate::scalar::{Cx, Scalar};

/// Row-major square matrix with `S` entries.
#[derive(Clone, Debug)]
pub struct SqMat<S: Scalar> {
    pub dim: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> SqMat<S> {
    pub fn zeros(dim: usize) -> Self {
        SqMat {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, S::one());
        }
        m
    }
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.dim + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.dim + c] = v;
    }
    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let a = self.at(i, k);
                if a.abs_bound() == 0.0 {
                    continue;
                }
                for j in 0..self.dim {
                    let v = out.at(i, j).add(&a.mul(o.at(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }
    /// y = M x
    pub fn apply(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.dim {
                    acc = acc.add(&self.at(i, j).mul(&x[j]));
                }
                acc
            })
            .collect()
    }
    pub fn value(&self) -> SqMat<f64> {
        SqMat {
            dim: self.dim,
            data: self.data.iter().map(|s| s.value()).collect(),
        }
    }
}

impl SqMat<f64> {
    /// Max-abs entry of `self*self + I`, the deviation from J^2 = -Id.
    pub fn acs_residual(&self) -> f64 {
        let sq = self.matmul(self);
        let mut r = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { -1.0 } else { 0.0 };
                r = r.max((sq.at(i, j) - want).abs());
            }
        }
        r
    }
}

/// Determinant of a small real matrix (partial-pivot LU). `m` is row-major.
pub fn det_f64(dim: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if a[r * dim + col].abs() > a[piv * dim + col].abs() {
                piv = r;
            }
        }
        if a[piv * dim + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..dim {
                a.swap(col * dim + j, piv * dim + j);
            }
            det = -det;
        }
        let d = a[col * dim + col];
        det *= d;
        for r in col + 1..dim {
            let f = a[r * dim + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..dim {
                a[r * dim + j] -= f * a[col * dim + j];
            }
        }
    }
    det
}

/// Determinant of a small complex matrix.
pub fn det_c64(dim: usize, m: &[Cx<f64>]) -> Cx<f64> {
    let mut a = m.to_vec();
    let mut det = Cx::one();
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if a[r * dim + col].abs() > a[piv * dim + col].abs() {
                piv = r;
            }
        }
        if a[piv * dim + col].abs() == 0.0 {
            return Cx::zero();
        }
        if piv != col {
            for j in 0..dim {
                a.swap(col * dim + j, piv * dim + j);
            }
            det = det.neg();
        }
        let d = a[col * dim + col].clone();
        det = det.mul(&d);
        let dinv = d.recip();
        for r in col + 1..dim {
            let f = a[r * dim + col].mul(&dinv);
            if f.abs() == 0.0 {
                continue;
            }
            for j in col..dim {
                let v = a[r * dim + j].sub(&f.mul(&a[col * dim + j]));
                a[r * dim + j] = v;
            }
        }
    }
    det
}

/// Solve the complex linear system A x = b over a generic scalar ring.
/// Pivot selection uses the f64 shadow values. Returns `None` when the
/// shadow matrix is numerically singular.
pub fn solve_cx<S: Scalar>(dim: usize, a: &[Cx<S>], b: &[Vec<Cx<S>>]) -> Option<Vec<Vec<Cx<S>>>> {
    let mut m = a.to_vec();
    let mut rhs: Vec<Vec<Cx<S>>> = b.to_vec();
    let nrhs = rhs.len();
    for col in 0..dim {
        let mut piv = col;
        let mut best = m[col * dim + col].value().abs();
        for r in col + 1..dim {
            let v = m[r * dim + col].value().abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..dim {
                m.swap(col * dim + j, piv * dim + j);
            }
            for rv in rhs.iter_mut() {
                rv.swap(col, piv);
            }
        }
        let dinv = m[col * dim + col].recip();
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = m[r * dim + col].mul(&dinv);
            if f.abs_bound() == 0.0 {
                continue;
            }
            for j in col..dim {
                let v = m[r * dim + j].sub(&f.mul(&m[col * dim + j]));
                m[r * dim + j] = v;
            }
            for rv in rhs.iter_mut() {
                let v = rv[r].sub(&f.mul(&rv[col]));
                rv[r] = v;
            }
        }
    }
    let mut out = vec![vec![Cx::zero(); dim]; nrhs];
    for (k, rv) in rhs.iter().enumerate() {
        for i in 0..dim {
            out[k][i] = rv[i].mul(&m[i * dim + i].recip());
        }
    }
    Some(out)
}

/// Weighted linear least squares: minimize sum_i w_i (y_i - sum_k c_k basis_k(i))^2.
/// `basis` is column-major: basis[k][i]. Returns the coefficients.
pub fn lstsq(basis: &[Vec<f64>], y: &[f64], w: Option<&[f64]>) -> Option<Vec<f64>> {
    let k = basis.len();
    let npt = y.len();
    let wt = |i: usize| w.map_or(1.0, |w| w[i]);
    // normal equations, k <= 3 in practice
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for i in 0..npt {
        let wi = wt(i);
        for p in 0..k {
            b[p] += wi * basis[p][i] * y[i];
            for q in 0..k {
                a[p * k + q] += wi * basis[p][i] * basis[q][i];
            }
        }
    }
    solve_f64(k, &a, &b)
}

/// Solve a small real system by Gaussian elimination.
pub fn solve_f64(dim: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if m[r * dim + col].abs() > m[piv * dim + col].abs() {
                piv = r;
            }
        }
        if m[piv * dim + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..dim {
                m.swap(col * dim + j, piv * dim + j);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * dim + col];
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = m[r * dim + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..dim {
                m[r * dim + j] -= f * m[col * dim + j];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    Some((0..dim).map(|i| rhs[i] / m[i * dim + i]).collect())
}

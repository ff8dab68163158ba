//! Almost complex structures as matrix fields.
//!
//! A structure is a smooth map x -> J(x) with J^2 = -Id on a declared
//! validity box. The library ships the standard (integrable) structure on
//! R^{2n} and a non-integrable one-parameter family on R^4 whose (0,1)
//! tangent space at (z,w) is spanned by {d/dzbar + lambda wbar d/dw,
//! d/dwbar}; at lambda = 0 it reduces to the standard structure.

use std::sync::Arc;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::field::{AcsExpr, DynAcs, JetScalar};
use crate::linalg::{solve_cx, SqMat};
use crate::projector::BidegreeProjector;
use crate::sampling::BoxDomain;
use crate::scalar::Jet;
use crate::scalar::{seed, Cx, Scalar};

/// Validation tolerance for J(x)^2 = -Id at sampled points.
pub const J_SQUARED_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct AlmostComplexStructure {
    inner: Arc<dyn DynAcs>,
    kind: String,
}

impl AlmostComplexStructure {
    pub fn new<E: AcsExpr>(kind: &str, expr: E) -> Self {
        AlmostComplexStructure {
            inner: Arc::new(expr),
            kind: kind.to_string(),
        }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.inner.erased_n()
    }

    pub fn dim(&self) -> usize {
        2 * self.inner.erased_n()
    }

    pub fn domain(&self) -> BoxDomain {
        self.inner.erased_domain()
    }

    pub fn smoothness(&self) -> u32 {
        self.inner.erased_smoothness()
    }

    /// J(x) over any scalar ring.
    pub fn j_at<S: JetScalar>(&self, x: &[S]) -> SqMat<S> {
        S::acs(self.inner.as_ref(), x)
    }

    /// J(x) with domain and J^2 = -Id checks.
    pub fn j_value(&self, x: &[f64]) -> Result<SqMat<f64>> {
        if !self.domain().contains(x) {
            return Err(Error::DomainViolation);
        }
        let j = self.j_at(x);
        let resid = j.acs_residual();
        if resid > J_SQUARED_TOL {
            return Err(Error::NotAlmostComplex { residual: resid });
        }
        Ok(j)
    }

    pub fn projector(&self, x: &[f64]) -> Result<BidegreeProjector> {
        BidegreeProjector::new(&self.j_value(x)?)
    }

    /// Nijenhuis tensor N(X,Y) at x for constant-extended vectors, via
    /// N = (D_{JX}J)Y - (D_{JY}J)X + J (D_Y J) X - J (D_X J) Y.
    pub fn nijenhuis(
        &self,
        x: &[f64],
        xv: &[f64],
        yv: &[f64],
        engine: &Engine,
    ) -> Result<Vec<f64>> {
        let dim = self.dim();
        if x.len() != dim || xv.len() != dim || yv.len() != dim {
            return Err(Error::DimensionMismatch);
        }
        let j = self.j_value(x)?;
        let jx = j.apply(xv);
        let jy = j.apply(yv);
        let dj = |v: &[f64]| -> Result<SqMat<f64>> { self.dir_deriv_j(x, v, engine) };
        let t1 = dj(&jx)?.apply(yv);
        let t2 = dj(&jy)?.apply(xv);
        let t3 = j.apply(&dj(yv)?.apply(xv));
        let t4 = j.apply(&dj(xv)?.apply(yv));
        Ok((0..dim).map(|i| t1[i] - t2[i] + t3[i] - t4[i]).collect())
    }

    /// Directional derivative of the matrix field along v.
    pub fn dir_deriv_j(&self, x: &[f64], v: &[f64], engine: &Engine) -> Result<SqMat<f64>> {
        let dim = self.dim();
        let mut out = SqMat::zeros(dim);
        match engine {
            Engine::Exact => {
                let jets = seed(x);
                let jj = self.j_at(&jets);
                for r in 0..dim {
                    for c in 0..dim {
                        let mut acc = 0.0;
                        for (m, vm) in v.iter().enumerate() {
                            acc += jj.at(r, c).d(m) * vm;
                        }
                        out.set(r, c, acc);
                    }
                }
            }
            Engine::CentralDiff { .. } => {
                let h = engine.step_at(x).max(1e-7);
                let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
                let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
                let jp = self.j_at(&xp);
                let jm = self.j_at(&xm);
                for r in 0..dim {
                    for c in 0..dim {
                        out.set(r, c, (jp.at(r, c) - jm.at(r, c)) / (2.0 * h));
                    }
                }
            }
        }
        if out.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DifferentiationFailure(
                "non-finite structure derivative".into(),
            ));
        }
        Ok(out)
    }

    /// Sup of |N(e_i, e_j)| over coordinate basis pairs; a scalar
    /// integrability probe.
    pub fn torsion_probe(&self, x: &[f64], engine: &Engine) -> Result<f64> {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i + 1..dim {
                let mut e1 = vec![0.0; dim];
                let mut e2 = vec![0.0; dim];
                e1[i] = 1.0;
                e2[j] = 1.0;
                let nv = self.nijenhuis(x, &e1, &e2, engine)?;
                worst = worst.max(nv.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------

struct StandardAcs {
    n: usize,
}

impl AcsExpr for StandardAcs {
    fn n(&self) -> usize {
        self.n
    }
    fn domain(&self) -> BoxDomain {
        BoxDomain::cube(2 * self.n, 1e6)
    }
    fn smoothness(&self) -> u32 {
        u32::MAX
    }
    fn j<S: JetScalar>(&self, _x: &[S]) -> SqMat<S>
    where
        Jet<S>: JetScalar,
    {
        let mut m = SqMat::zeros(2 * self.n);
        for k in 0..self.n {
            m.set(2 * k, 2 * k + 1, S::from_f64(-1.0));
            m.set(2 * k + 1, 2 * k, S::one());
        }
        m
    }
}

/// The standard structure: J(e_{2k-1}) = e_{2k}, constant in x.
pub fn make_standard(n: usize) -> AlmostComplexStructure {
    assert!(n >= 1);
    AlmostComplexStructure::new("standard", StandardAcs { n })
}

// ---------------------------------------------------------------------------

struct TwistedAcs {
    lambda: f64,
    domain: BoxDomain,
}

impl TwistedAcs {
    /// Closed form of the matrix in coordinates (x1,y1,x2,y2) with
    /// z = x1 + i y1, w = x2 + i y2; columns are images of basis vectors.
    /// Derived from the declared eigenbasis; verified against the linear
    /// solve in tests.
    fn matrix<S: Scalar>(&self, x: &[S]) -> SqMat<S> {
        let l = self.lambda;
        let x3 = &x[2];
        let x4 = &x[3];
        let mut m = SqMat::zeros(4);
        m.set(0, 1, S::from_f64(-1.0));
        m.set(1, 0, S::one());
        m.set(2, 3, S::from_f64(-1.0));
        m.set(3, 2, S::one());
        // column 1: J e1 = e2 - 2 lambda (x4 e3 + x3 e4)
        m.set(2, 0, x4.scale(-2.0 * l));
        m.set(3, 0, x3.scale(-2.0 * l));
        // column 2: J e2 = -e1 - 2 lambda (x3 e3 - x4 e4)
        m.set(2, 1, x3.scale(-2.0 * l));
        m.set(3, 1, x4.scale(2.0 * l));
        m
    }
}

impl AcsExpr for TwistedAcs {
    fn n(&self) -> usize {
        2
    }
    fn domain(&self) -> BoxDomain {
        self.domain.clone()
    }
    fn j<S: JetScalar>(&self, x: &[S]) -> SqMat<S>
    where
        Jet<S>: JetScalar,
    {
        self.matrix(x)
    }
}

/// The non-integrable family on R^4. The (0,1) span degenerates against
/// its conjugate only where |lambda wbar| reaches 1, so the validity box
/// keeps |lambda w| < 1 with margin.
pub fn make_twisted(lambda: f64) -> Result<AlmostComplexStructure> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!(
            "twisted family requires |lambda| <= 1, got {lambda}"
        )));
    }
    let b_zw = 0.95f64;
    let b_w = if lambda == 0.0 {
        b_zw
    } else {
        b_zw.min(0.99 / (std::f64::consts::SQRT_2 * lambda.abs()))
    };
    let domain = BoxDomain::new(vec![-b_zw, -b_zw, -b_w, -b_w], vec![b_zw, b_zw, b_w, b_w]);
    Ok(AlmostComplexStructure::new(
        "twisted",
        TwistedAcs { lambda, domain },
    ))
}

/// Assemble the twisted matrix at a point by solving the eigenbasis
/// system J E = E diag(i,i,-i,-i); the independent oracle for the closed
/// form above.
pub fn twisted_matrix_by_eigenbasis(lambda: f64, x: &[f64]) -> Result<SqMat<f64>> {
    let (x3, x4) = (x[2], x[3]);
    let w = Cx::new(x3, x4);
    let half = Cx::real(0.5f64);
    let ihalf = Cx::new(0.0, 0.5);
    // columns: X1, X2, X1bar, X2bar in real coordinates
    // d/dz = (e1 - i e2)/2, d/dw = (e3 - i e4)/2, conjugates flip the sign of i
    let ddz = [half.clone(), ihalf.neg(), Cx::zero(), Cx::zero()];
    let ddzb = [half.clone(), ihalf.clone(), Cx::zero(), Cx::zero()];
    let ddw = [Cx::zero(), Cx::zero(), half.clone(), ihalf.neg()];
    let ddwb = [Cx::zero(), Cx::zero(), half, ihalf];
    let lam = Cx::real(lambda);
    let lw = lam.mul(&w);
    let lwb = lam.mul(&w.conj());
    let mut cols: Vec<[Cx<f64>; 4]> = Vec::new();
    // X1 = d/dz + lambda w d/dwbar ; X2 = d/dw
    cols.push(std::array::from_fn(|i| ddz[i].add(&lw.mul(&ddwb[i]))));
    cols.push(ddw.clone());
    // X1bar, X2bar
    cols.push(std::array::from_fn(|i| ddzb[i].add(&lwb.mul(&ddw[i]))));
    cols.push(ddwb);
    // E and E * diag(i,i,-i,-i)
    let mut e = vec![Cx::zero(); 16];
    let mut ed = vec![Cx::zero(); 16];
    for c in 0..4 {
        let eig = if c < 2 { Cx::i() } else { Cx::i().neg() };
        for r in 0..4 {
            e[r * 4 + c] = cols[c][r].clone();
            ed[r * 4 + c] = cols[c][r].mul(&eig);
        }
    }
    // solve J E = ED for J row by row: E^T J^T = ED^T
    let et: Vec<Cx<f64>> = (0..16).map(|k| e[(k % 4) * 4 + k / 4].clone()).collect();
    let rhs: Vec<Vec<Cx<f64>>> = (0..4)
        .map(|r| (0..4).map(|c| ed[r * 4 + c].clone()).collect())
        .collect();
    let sols = solve_cx(4, &et, &rhs).ok_or(Error::DegenerateEigenspace { defect: f64::NAN })?;
    let mut j = SqMat::zeros(4);
    for r in 0..4 {
        for c in 0..4 {
            let v = &sols[r][c];
            if v.im.abs() > 1e-10 {
                return Err(Error::NotAlmostComplex {
                    residual: v.im.abs(),
                });
            }
            j.set(r, c, v.re);
        }
    }
    Ok(j)
}

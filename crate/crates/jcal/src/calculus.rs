//! The exterior derivative and its four-way splitting.
//!
//! d is computed from jets of a field's coefficients (or by central
//! differences under the difference engine). The operators del_J, dbar_J,
//! theta_J, thetabar_J are the bidegree components of d with the sign
//! convention d = del + dbar - theta - thetabar, extracted by projection;
//! this makes the splitting identity hold by construction and leaves all
//! tests convention-free through reconstruction.

use std::collections::BTreeMap;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::field::{CMap, CMapExpr, FieldExpr, FormField, JetScalar, RMap};
use crate::form::{merge_sign, ExteriorValue, SpForm};
use crate::projector::{project_01_covector, project_10_covector, split_by_bidegree};
use crate::scalar::Jet;
use crate::scalar::{seed, Cx, Scalar};
use crate::structures::AlmostComplexStructure;

/// Assemble d(phi) from a jet-evaluated form: d phi = sum_m dx_m ^ d_m(coeffs).
pub(crate) fn d_from_jets<S: Scalar>(f: &SpForm<Jet<S>>, dim: usize) -> SpForm<S> {
    let mut out = SpForm::zero(dim);
    for (mask, c) in f.terms() {
        for m in 0..dim {
            let bit = 1u32 << m;
            if mask & bit != 0 {
                continue;
            }
            let dc = Cx::new(c.re.d(m), c.im.d(m));
            if dc.abs_bound() == 0.0 {
                continue;
            }
            let s = merge_sign(bit, mask);
            out.add_term(mask | bit, dc.scale(s));
        }
    }
    out
}

/// d(base) as a field, differentiated exactly through jets.
pub struct DerivField {
    pub base: FormField,
}

impl FieldExpr for DerivField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn degree(&self) -> usize {
        self.base.degree() + 1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let jets = seed(x);
        let f = self.base.eval_jets(&jets);
        d_from_jets(&f, x.len())
    }
}

/// The (p,q)-bidegree component of base relative to a structure.
pub struct ProjField {
    pub base: FormField,
    pub structure: AlmostComplexStructure,
    pub p: usize,
    pub q: usize,
}

impl FieldExpr for ProjField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn degree(&self) -> usize {
        self.p + self.q
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let j = self.structure.j_at(x);
        crate::projector::project_bidegree(&self.base.eval_jets(x), &j, self.p, self.q)
    }
}

/// dbar_J u for a scalar function u: the (0,1) part of du.
pub struct DbarScalarField {
    pub u: CMap,
    pub structure: AlmostComplexStructure,
}

impl FieldExpr for DbarScalarField {
    fn dim(&self) -> usize {
        self.u.in_dim()
    }
    fn degree(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let dim = x.len();
        let jm = self.structure.j_at(x);
        let jets = seed(x);
        let v = self.u.scalar_at(&jets);
        let du: Vec<Cx<S>> = (0..dim).map(|m| Cx::new(v.re.d(m), v.im.d(m))).collect();
        SpForm::from_covector(dim, &project_01_covector(&jm, &du))
    }
}

/// del_J u for a scalar function u: the (1,0) part of du.
pub struct DelScalarField {
    pub u: CMap,
    pub structure: AlmostComplexStructure,
}

impl FieldExpr for DelScalarField {
    fn dim(&self) -> usize {
        self.u.in_dim()
    }
    fn degree(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let dim = x.len();
        let jm = self.structure.j_at(x);
        let jets = seed(x);
        let v = self.u.scalar_at(&jets);
        let du: Vec<Cx<S>> = (0..dim).map(|m| Cx::new(v.re.d(m), v.im.d(m))).collect();
        SpForm::from_covector(dim, &project_10_covector(&jm, &du))
    }
}

/// Pullback of an ambient field along a map of parameter spaces.
pub struct PullbackField {
    pub base: FormField,
    pub map: RMap,
}

impl FieldExpr for PullbackField {
    fn dim(&self) -> usize {
        self.map.in_dim()
    }
    fn degree(&self) -> usize {
        self.base.degree()
    }
    fn eval<S: JetScalar>(&self, t: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let m = t.len();
        let ambient = self.map.out_dim();
        let jets = seed(t);
        let ys = self.map.eval_jets(&jets);
        let y: Vec<S> = ys.iter().map(|j| j.v.clone()).collect();
        let f = self.base.eval_jets(&y);
        // pulled basis covectors: sigma*(dx_i) = sum_m dJac[i][m] dt_m
        let mut pulled: Vec<Option<Vec<Cx<S>>>> = vec![None; ambient];
        let mut out = SpForm::zero(m);
        for (mask, c) in f.terms() {
            let mut acc = SpForm::scalar(m, c.clone());
            let mut bits = mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if pulled[i].is_none() {
                    pulled[i] = Some((0..m).map(|k| Cx::real(ys[i].d(k))).collect());
                }
                acc = acc.wedge_covector(pulled[i].as_ref().unwrap());
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// value-level operations
// ---------------------------------------------------------------------------

/// d(phi) at x under the chosen engine.
pub fn d_value(phi: &FormField, x: &[f64], engine: &Engine) -> Result<ExteriorValue> {
    let dim = phi.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch);
    }
    let out = match engine {
        Engine::Exact => {
            let jets = seed(x);
            d_from_jets(&phi.eval_jets(&jets), dim)
        }
        Engine::CentralDiff { .. } => {
            let h = engine.step_at(x).max(1e-8);
            let mut jetform: SpForm<Jet<f64>> = SpForm::zero(dim);
            // assemble a synthetic jet form from stencil gradients
            let mut grads: BTreeMap<u32, Vec<Cx<f64>>> = BTreeMap::new();
            for mdir in 0..dim {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[mdir] += h;
                xm[mdir] -= h;
                let fp = phi.value(&xp);
                let fm = phi.value(&xm);
                for (mask, c) in fp.sub(&fm).terms() {
                    grads.entry(mask).or_insert_with(|| vec![Cx::zero(); dim])[mdir] =
                        c.scale(1.0 / (2.0 * h));
                }
            }
            for (mask, g) in grads {
                let mut re = Jet::constant(0.0);
                let mut im = Jet::constant(0.0);
                re.g = g.iter().map(|c| c.re).collect();
                im.g = g.iter().map(|c| c.im).collect();
                jetform.add_term(mask, Cx::new(re, im));
            }
            d_from_jets(&jetform, dim)
        }
    };
    let out = out.value();
    if out
        .terms()
        .any(|(_, c)| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::DifferentiationFailure(
            "non-finite derivative".into(),
        ));
    }
    Ok(out)
}

/// The four split components at a point.
#[derive(Clone, Debug)]
pub struct SplitD {
    pub p: usize,
    pub q: usize,
    pub del: ExteriorValue,
    pub dbar: ExteriorValue,
    pub theta: ExteriorValue,
    pub theta_bar: ExteriorValue,
}

impl SplitD {
    /// del + dbar - theta - thetabar; must reproduce d(phi).
    pub fn reconstruct(&self) -> ExteriorValue {
        self.del
            .add(&self.dbar)
            .sub(&self.theta)
            .sub(&self.theta_bar)
    }
}

/// Bidegree of a homogeneous value under j, with tolerance on stray
/// components relative to the sup norm.
pub fn bidegree_of(
    v: &ExteriorValue,
    j: &crate::linalg::SqMat<f64>,
    tol: f64,
) -> Result<(usize, usize)> {
    let comps = split_by_bidegree(v, j);
    let scale = v.sup_norm().max(1e-30);
    let mut found: Option<(usize, usize)> = None;
    for ((p, q), c) in &comps {
        if c.sup_norm() > tol * scale {
            if found.is_some() {
                return Err(Error::MixedBidegree);
            }
            found = Some((*p, *q));
        }
    }
    found.ok_or(Error::MixedBidegree)
}

/// Split d(phi) into (del, dbar, theta, thetabar) at x. `phi` must be of
/// pure bidegree (p,q) at x.
pub fn split_d(
    phi: &FormField,
    structure: &AlmostComplexStructure,
    x: &[f64],
    engine: &Engine,
) -> Result<SplitD> {
    let j = structure.j_value(x)?;
    let val = phi.value(x);
    let (p, q) = if val.is_zero() {
        (0, 0)
    } else {
        bidegree_of(&val, &j, 1e-9).map_err(|_| Error::MixedBidegree)?
    };
    let d = d_value(phi, x, engine)?;
    let comps = split_by_bidegree(&d, &j);
    let dim = phi.dim();
    let pick = |pp: i64, qq: i64| -> ExteriorValue {
        if pp < 0 || qq < 0 {
            return ExteriorValue::zero(dim);
        }
        comps
            .get(&(pp as usize, qq as usize))
            .cloned()
            .unwrap_or_else(|| ExteriorValue::zero(dim))
    };
    let (pi, qi) = (p as i64, q as i64);
    Ok(SplitD {
        p,
        q,
        del: pick(pi + 1, qi),
        dbar: pick(pi, qi + 1),
        theta: pick(pi + 2, qi - 1).neg(),
        theta_bar: pick(pi - 1, qi + 2).neg(),
    })
}

/// i del_J dbar_J u at x: the (1,1) part of i d(dbar_J u). The remaining
/// bidegree components of i d(dbar_J u) are the torsion residue, available
/// from [`ddbar_full_value`].
pub fn ddbar_value(
    u: &CMap,
    structure: &AlmostComplexStructure,
    x: &[f64],
    engine: &Engine,
) -> Result<ExteriorValue> {
    let full = ddbar_full_value(u, structure, x, engine)?;
    let j = structure.j_value(x)?;
    Ok(crate::projector::project_bidegree(&full, &j, 1, 1))
}

/// i d(dbar_J u) at x, all bidegree components.
pub fn ddbar_full_value(
    u: &CMap,
    structure: &AlmostComplexStructure,
    x: &[f64],
    engine: &Engine,
) -> Result<ExteriorValue> {
    let dbar_u = FormField::new(DbarScalarField {
        u: u.clone(),
        structure: structure.clone(),
    });
    Ok(d_value(&dbar_u, x, engine)?.mul_i())
}

/// i del_J dbar_J u as a field (exact engine).
pub fn ddbar_field(u: &CMap, structure: &AlmostComplexStructure) -> FormField {
    let dbar_u = FormField::new(DbarScalarField {
        u: u.clone(),
        structure: structure.clone(),
    });
    FormField::new(ProjField {
        base: FormField::new(DerivField { base: dbar_u }),
        structure: structure.clone(),
        p: 1,
        q: 1,
    })
    .mul_i()
}

/// (i/2) d dbar_J |z|^2 for a chart: the hermitian 2-form beta (mixed
/// bidegree off the integrable case).
pub fn beta_field(
    chart: &crate::chart::CoordinateChart,
    structure: &AlmostComplexStructure,
) -> FormField {
    let dbar = FormField::new(DbarScalarField {
        u: chart.radius_sq(),
        structure: structure.clone(),
    });
    FormField::new(DerivField { base: dbar }).scale_c64(crate::scalar::C64 { re: 0.0, im: 0.5 })
}

/// Pullback value of phi along sigma at parameter t.
pub fn pullback_value(phi: &FormField, sigma: &RMap, t: &[f64]) -> Result<ExteriorValue> {
    if phi.dim() != sigma.out_dim() || t.len() != sigma.in_dim() {
        return Err(Error::DimensionMismatch);
    }
    let f = PullbackField {
        base: phi.clone(),
        map: sigma.clone(),
    };
    Ok(f.eval::<f64>(t).pruned(crate::form::PRUNE_EPS))
}

/// log(|f|^2 + eps^2) for a complex map f, as a scalar function.
pub fn log_norm_sq_shifted(f: &CMap, eps: f64) -> CMap {
    CMap::new(crate::field::LogShiftFn {
        f: CMap::new(crate::field::AbsSqFn { map: f.clone() }),
        shift: eps * eps,
    })
}

/// A scalar map wrapper used by tests and experiments: |map|^2.
pub fn norm_sq(f: &CMap) -> CMap {
    CMap::new(crate::field::AbsSqFn { map: f.clone() })
}

struct ReScalarFn {
    f: CMap,
}

impl CMapExpr for ReScalarFn {
    fn in_dim(&self) -> usize {
        self.f.in_dim()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        vec![Cx::real(self.f.scalar_at(x).re)]
    }
}

/// Re(f) of a scalar map.
pub fn re_part(f: &CMap) -> CMap {
    CMap::new(ReScalarFn { f: f.clone() })
}

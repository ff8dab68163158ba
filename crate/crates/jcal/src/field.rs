//! Form fields, structure fields, and maps, with depth-dispatched jet
//! evaluation.
//!
//! Expressions are written once, generically over a scalar ring, and are
//! consumed through type-erased handles ([`FormField`], [`CMap`], [`RMap`],
//! and the structure handle in [`crate::structures`]). Differentiating an
//! expression means evaluating it at jet-seeded coordinates one ring up;
//! the [`JetScalar`] impls bridge a generic call site to the fixed-depth
//! methods of the erased object. Depths 0..=3 are instantiated, which
//! covers every operator composition in the toolkit (the deepest is the
//! radial derivative of a field built from d dbar |z|^2).

use std::sync::Arc;

use crate::engine::Engine;
use crate::form::{ExteriorValue, SpForm};
use crate::linalg::SqMat;
use crate::sampling::BoxDomain;
pub use crate::scalar::Jet;
use crate::scalar::{Cx, Scalar, C64, J1, J2, J3, J4};

// ---------------------------------------------------------------------------
// expression traits (implemented by concrete field/map types)
// ---------------------------------------------------------------------------

/// A smooth exterior-form-valued field, generic over the scalar ring.
///
/// The two `Jet` bounds give the implementation room to differentiate
/// internally (each nested derivative goes one ring up).
pub trait FieldExpr: Send + Sync + 'static {
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar;
}

/// A smooth map into C^k (charts, defining maps, scalar functions as k=1).
pub trait CMapExpr: Send + Sync + 'static {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar;
}

/// A smooth map into R^k (stratum parametrizations, pullback maps).
pub trait RMapExpr: Send + Sync + 'static {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<S>
    where
        Jet<S>: JetScalar;
}

/// A matrix field J(x) with J^2 = -Id on its validity domain.
pub trait AcsExpr: Send + Sync + 'static {
    fn n(&self) -> usize;
    fn domain(&self) -> BoxDomain;
    fn smoothness(&self) -> u32 {
        3
    }
    fn j<S: JetScalar>(&self, x: &[S]) -> SqMat<S>
    where
        Jet<S>: JetScalar;
}

// ---------------------------------------------------------------------------
// type-erased object traits at fixed jet depths
// ---------------------------------------------------------------------------

pub trait DynField: Send + Sync {
    fn erased_dim(&self) -> usize;
    fn erased_degree(&self) -> usize;
    fn eval0(&self, x: &[f64]) -> SpForm<f64>;
    fn eval1(&self, x: &[J1]) -> SpForm<J1>;
    fn eval2(&self, x: &[J2]) -> SpForm<J2>;
}

impl<E: FieldExpr> DynField for E {
    fn erased_dim(&self) -> usize {
        FieldExpr::dim(self)
    }
    fn erased_degree(&self) -> usize {
        FieldExpr::degree(self)
    }
    fn eval0(&self, x: &[f64]) -> SpForm<f64> {
        self.eval::<f64>(x)
    }
    fn eval1(&self, x: &[J1]) -> SpForm<J1> {
        self.eval::<J1>(x)
    }
    fn eval2(&self, x: &[J2]) -> SpForm<J2> {
        self.eval::<J2>(x)
    }
}

pub trait DynCMap: Send + Sync {
    fn erased_in_dim(&self) -> usize;
    fn erased_out_dim(&self) -> usize;
    fn eval0(&self, x: &[f64]) -> Vec<Cx<f64>>;
    fn eval1(&self, x: &[J1]) -> Vec<Cx<J1>>;
    fn eval2(&self, x: &[J2]) -> Vec<Cx<J2>>;
    fn eval3(&self, x: &[J3]) -> Vec<Cx<J3>>;
}

impl<E: CMapExpr> DynCMap for E {
    fn erased_in_dim(&self) -> usize {
        CMapExpr::in_dim(self)
    }
    fn erased_out_dim(&self) -> usize {
        CMapExpr::out_dim(self)
    }
    fn eval0(&self, x: &[f64]) -> Vec<Cx<f64>> {
        self.eval::<f64>(x)
    }
    fn eval1(&self, x: &[J1]) -> Vec<Cx<J1>> {
        self.eval::<J1>(x)
    }
    fn eval2(&self, x: &[J2]) -> Vec<Cx<J2>> {
        self.eval::<J2>(x)
    }
    fn eval3(&self, x: &[J3]) -> Vec<Cx<J3>> {
        self.eval::<J3>(x)
    }
}

pub trait DynRMap: Send + Sync {
    fn erased_in_dim(&self) -> usize;
    fn erased_out_dim(&self) -> usize;
    fn eval0(&self, x: &[f64]) -> Vec<f64>;
    fn eval1(&self, x: &[J1]) -> Vec<J1>;
    fn eval2(&self, x: &[J2]) -> Vec<J2>;
    fn eval3(&self, x: &[J3]) -> Vec<J3>;
}

impl<E: RMapExpr> DynRMap for E {
    fn erased_in_dim(&self) -> usize {
        RMapExpr::in_dim(self)
    }
    fn erased_out_dim(&self) -> usize {
        RMapExpr::out_dim(self)
    }
    fn eval0(&self, x: &[f64]) -> Vec<f64> {
        self.eval::<f64>(x)
    }
    fn eval1(&self, x: &[J1]) -> Vec<J1> {
        self.eval::<J1>(x)
    }
    fn eval2(&self, x: &[J2]) -> Vec<J2> {
        self.eval::<J2>(x)
    }
    fn eval3(&self, x: &[J3]) -> Vec<J3> {
        self.eval::<J3>(x)
    }
}

pub trait DynAcs: Send + Sync {
    fn erased_n(&self) -> usize;
    fn erased_domain(&self) -> BoxDomain;
    fn erased_smoothness(&self) -> u32;
    fn j0(&self, x: &[f64]) -> SqMat<f64>;
    fn j1(&self, x: &[J1]) -> SqMat<J1>;
    fn j2(&self, x: &[J2]) -> SqMat<J2>;
    fn j3(&self, x: &[J3]) -> SqMat<J3>;
}

impl<E: AcsExpr> DynAcs for E {
    fn erased_n(&self) -> usize {
        AcsExpr::n(self)
    }
    fn erased_domain(&self) -> BoxDomain {
        AcsExpr::domain(self)
    }
    fn erased_smoothness(&self) -> u32 {
        AcsExpr::smoothness(self)
    }
    fn j0(&self, x: &[f64]) -> SqMat<f64> {
        self.j::<f64>(x)
    }
    fn j1(&self, x: &[J1]) -> SqMat<J1> {
        self.j::<J1>(x)
    }
    fn j2(&self, x: &[J2]) -> SqMat<J2> {
        self.j::<J2>(x)
    }
    fn j3(&self, x: &[J3]) -> SqMat<J3> {
        self.j::<J3>(x)
    }
}

// ---------------------------------------------------------------------------
// depth dispatch
// ---------------------------------------------------------------------------

/// Scalar rings at which erased objects can be evaluated.
pub trait JetScalar: Scalar {
    fn field(f: &dyn DynField, x: &[Self]) -> SpForm<Self>;
    fn cmap(m: &dyn DynCMap, x: &[Self]) -> Vec<Cx<Self>>;
    fn rmap(m: &dyn DynRMap, x: &[Self]) -> Vec<Self>;
    fn acs(a: &dyn DynAcs, x: &[Self]) -> SqMat<Self>;
}

impl JetScalar for f64 {
    fn field(f: &dyn DynField, x: &[Self]) -> SpForm<Self> {
        f.eval0(x)
    }
    fn cmap(m: &dyn DynCMap, x: &[Self]) -> Vec<Cx<Self>> {
        m.eval0(x)
    }
    fn rmap(m: &dyn DynRMap, x: &[Self]) -> Vec<Self> {
        m.eval0(x)
    }
    fn acs(a: &dyn DynAcs, x: &[Self]) -> SqMat<Self> {
        a.j0(x)
    }
}

impl JetScalar for J1 {
    fn field(f: &dyn DynField, x: &[Self]) -> SpForm<Self> {
        f.eval1(x)
    }
    fn cmap(m: &dyn DynCMap, x: &[Self]) -> Vec<Cx<Self>> {
        m.eval1(x)
    }
    fn rmap(m: &dyn DynRMap, x: &[Self]) -> Vec<Self> {
        m.eval1(x)
    }
    fn acs(a: &dyn DynAcs, x: &[Self]) -> SqMat<Self> {
        a.j1(x)
    }
}

impl JetScalar for J2 {
    fn field(f: &dyn DynField, x: &[Self]) -> SpForm<Self> {
        f.eval2(x)
    }
    fn cmap(m: &dyn DynCMap, x: &[Self]) -> Vec<Cx<Self>> {
        m.eval2(x)
    }
    fn rmap(m: &dyn DynRMap, x: &[Self]) -> Vec<Self> {
        m.eval2(x)
    }
    fn acs(a: &dyn DynAcs, x: &[Self]) -> SqMat<Self> {
        a.j2(x)
    }
}

impl JetScalar for J3 {
    fn field(_f: &dyn DynField, _x: &[Self]) -> SpForm<Self> {
        unreachable!("form fields are never differentiated past jet depth 2")
    }
    fn cmap(m: &dyn DynCMap, x: &[Self]) -> Vec<Cx<Self>> {
        m.eval3(x)
    }
    fn rmap(m: &dyn DynRMap, x: &[Self]) -> Vec<Self> {
        m.eval3(x)
    }
    fn acs(a: &dyn DynAcs, x: &[Self]) -> SqMat<Self> {
        a.j3(x)
    }
}

impl JetScalar for J4 {
    fn field(_f: &dyn DynField, _x: &[Self]) -> SpForm<Self> {
        unreachable!("jet depth 4 is never evaluated")
    }
    fn cmap(_m: &dyn DynCMap, _x: &[Self]) -> Vec<Cx<Self>> {
        unreachable!("jet depth 4 is never evaluated")
    }
    fn rmap(_m: &dyn DynRMap, _x: &[Self]) -> Vec<Self> {
        unreachable!("jet depth 4 is never evaluated")
    }
    fn acs(_a: &dyn DynAcs, _x: &[Self]) -> SqMat<Self> {
        unreachable!("jet depth 4 is never evaluated")
    }
}

// ---------------------------------------------------------------------------
// erased handles
// ---------------------------------------------------------------------------

/// A smooth exterior-form-valued field with a default differentiation
/// engine. Cheap to clone; evaluations are pure and thread-safe.
#[derive(Clone)]
pub struct FormField {
    inner: Arc<dyn DynField>,
    engine: Engine,
}

impl FormField {
    pub fn new<E: FieldExpr>(expr: E) -> Self {
        FormField {
            inner: Arc::new(expr),
            engine: Engine::Exact,
        }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn dim(&self) -> usize {
        self.inner.erased_dim()
    }

    pub fn degree(&self) -> usize {
        self.inner.erased_degree()
    }

    pub fn value(&self, x: &[f64]) -> ExteriorValue {
        self.inner.eval0(x).pruned(crate::form::PRUNE_EPS)
    }

    pub fn eval_jets<S: JetScalar>(&self, x: &[S]) -> SpForm<S> {
        S::field(self.inner.as_ref(), x)
    }

    // ---- combinators ----

    pub fn constant(value: ExteriorValue) -> Self {
        let degree = value
            .degree()
            .expect("constant field needs a homogeneous value");
        FormField::new(ConstField { value, degree })
    }

    /// The zero field with a declared degree.
    pub fn zero(dim: usize, degree: usize) -> Self {
        FormField::new(ConstField {
            value: ExteriorValue::zero(dim),
            degree,
        })
    }

    pub fn add(&self, o: &FormField) -> Self {
        FormField::new(SumField {
            terms: vec![(C64::ONE, self.clone()), (C64::ONE, o.clone())],
        })
    }

    pub fn sub(&self, o: &FormField) -> Self {
        FormField::new(SumField {
            terms: vec![
                (C64::ONE, self.clone()),
                (C64 { re: -1.0, im: 0.0 }, o.clone()),
            ],
        })
    }

    pub fn scale_c64(&self, k: C64) -> Self {
        FormField::new(SumField {
            terms: vec![(k, self.clone())],
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.scale_c64(C64 { re: k, im: 0.0 })
    }

    pub fn mul_i(&self) -> Self {
        self.scale_c64(C64::I)
    }

    pub fn wedge(&self, o: &FormField) -> Self {
        assert_eq!(self.dim(), o.dim());
        FormField::new(WedgeField {
            a: self.clone(),
            b: o.clone(),
        })
    }

    pub fn wedge_pow(&self, k: usize) -> Self {
        FormField::new(PowField {
            base: self.clone(),
            k,
        })
    }

    /// Multiply by complex scalar functions.
    pub fn scaled_by(&self, factors: Vec<CMap>) -> Self {
        for f in &factors {
            assert_eq!(f.out_dim(), 1);
            assert_eq!(f.in_dim(), self.dim());
        }
        FormField::new(ScaledField {
            base: self.clone(),
            factors,
        })
    }
}

/// A smooth map into C^k.
#[derive(Clone)]
pub struct CMap {
    inner: Arc<dyn DynCMap>,
}

impl CMap {
    pub fn new<E: CMapExpr>(expr: E) -> Self {
        CMap {
            inner: Arc::new(expr),
        }
    }
    pub fn in_dim(&self) -> usize {
        self.inner.erased_in_dim()
    }
    pub fn out_dim(&self) -> usize {
        self.inner.erased_out_dim()
    }
    pub fn eval_jets<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>> {
        S::cmap(self.inner.as_ref(), x)
    }
    pub fn values(&self, x: &[f64]) -> Vec<C64> {
        self.inner.eval0(x)
    }
    /// First output component, for out_dim == 1 scalar functions.
    pub fn scalar_at<S: JetScalar>(&self, x: &[S]) -> Cx<S> {
        self.eval_jets(x).into_iter().next().expect("nonempty map")
    }
}

/// A smooth map into R^k.
#[derive(Clone)]
pub struct RMap {
    inner: Arc<dyn DynRMap>,
}

impl RMap {
    pub fn new<E: RMapExpr>(expr: E) -> Self {
        RMap {
            inner: Arc::new(expr),
        }
    }
    pub fn in_dim(&self) -> usize {
        self.inner.erased_in_dim()
    }
    pub fn out_dim(&self) -> usize {
        self.inner.erased_out_dim()
    }
    pub fn eval_jets<S: JetScalar>(&self, x: &[S]) -> Vec<S> {
        S::rmap(self.inner.as_ref(), x)
    }
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.inner.eval0(x)
    }
}

// ---------------------------------------------------------------------------
// basic field expressions
// ---------------------------------------------------------------------------

pub struct ConstField {
    pub value: ExteriorValue,
    pub degree: usize,
}

impl FieldExpr for ConstField {
    fn dim(&self) -> usize {
        self.value.dim()
    }
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval<S: JetScalar>(&self, _x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let mut out = SpForm::zero(self.value.dim());
        for (mask, c) in self.value.terms() {
            out.add_term(mask, Cx::from_c64(c));
        }
        out
    }
}

pub struct SumField {
    pub terms: Vec<(C64, FormField)>,
}

impl FieldExpr for SumField {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn degree(&self) -> usize {
        self.terms[0].1.degree()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let mut out = SpForm::zero(self.dim());
        for (k, f) in &self.terms {
            out = out.add(&f.eval_jets(x).scale_c64(k));
        }
        out
    }
}

pub struct WedgeField {
    pub a: FormField,
    pub b: FormField,
}

impl FieldExpr for WedgeField {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn degree(&self) -> usize {
        self.a.degree() + self.b.degree()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        self.a
            .eval_jets(x)
            .wedge(&self.b.eval_jets(x))
            .expect("same dimension")
    }
}

pub struct PowField {
    pub base: FormField,
    pub k: usize,
}

impl FieldExpr for PowField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn degree(&self) -> usize {
        self.base.degree() * self.k
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        self.base.eval_jets(x).wedge_pow(self.k)
    }
}

pub struct ScaledField {
    pub base: FormField,
    pub factors: Vec<CMap>,
}

impl FieldExpr for ScaledField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn degree(&self) -> usize {
        self.base.degree()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let mut out = self.base.eval_jets(x);
        for f in &self.factors {
            let v = f.scalar_at(x);
            if v.abs_bound() == 0.0 {
                return SpForm::zero(self.dim());
            }
            out = out.scale_cx(&v);
        }
        out
    }
}

/// Polynomial-coefficient field: terms (blade mask, sum of monomials).
/// Used for engine cross-validation and property tests.
pub struct PolyField {
    pub dim: usize,
    pub degree: usize,
    /// (mask, [(coeff, exponents per coordinate)])
    pub terms: Vec<(u32, Vec<(C64, Vec<u32>)>)>,
}

impl FieldExpr for PolyField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let mut out = SpForm::zero(self.dim);
        for (mask, monos) in &self.terms {
            let mut acc = Cx::<S>::zero();
            for (c, exps) in monos {
                let mut m = S::one();
                for (xi, e) in x.iter().zip(exps) {
                    if *e > 0 {
                        m = m.mul(&xi.powi(*e as i32));
                    }
                }
                acc = acc.add(&Cx::from_c64(c).mul_s(&m));
            }
            out.add_term(*mask, acc);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// basic map expressions
// ---------------------------------------------------------------------------

/// Identity embedding of a coordinate slab: parameters fill the `None`
/// slots of `pattern`, fixed values fill the rest.
pub struct SlabMap {
    pub pattern: Vec<Option<f64>>,
}

impl RMapExpr for SlabMap {
    fn in_dim(&self) -> usize {
        self.pattern.iter().filter(|p| p.is_none()).count()
    }
    fn out_dim(&self) -> usize {
        self.pattern.len()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<S>
    where
        Jet<S>: JetScalar,
    {
        let mut it = x.iter();
        self.pattern
            .iter()
            .map(|p| match p {
                Some(v) => S::from_f64(*v),
                None => it.next().expect("enough parameters").clone(),
            })
            .collect()
    }
}

/// |map(x)|^2 summed over the outputs, as a scalar C-map.
pub struct AbsSqFn {
    pub map: CMap,
}

impl CMapExpr for AbsSqFn {
    fn in_dim(&self) -> usize {
        self.map.in_dim()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        let zs = self.map.eval_jets(x);
        let mut acc = S::zero();
        for z in &zs {
            acc = acc.add(&z.norm_sqr());
        }
        vec![Cx::real(acc)]
    }
}

/// ln(re(f) ...) of a positive real-valued scalar map, with an additive
/// offset: ln(f + c). Used for log(|f|^2 + eps^2).
pub struct LogShiftFn {
    pub f: CMap,
    pub shift: f64,
}

impl CMapExpr for LogShiftFn {
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
        let v = self.f.scalar_at(x);
        let shifted = v.re.add(&S::from_f64(self.shift));
        vec![Cx::real(shifted.ln())]
    }
}

/// One complex output component of another map.
pub struct ComponentFn {
    pub map: CMap,
    pub index: usize,
}

impl CMapExpr for ComponentFn {
    fn in_dim(&self) -> usize {
        self.map.in_dim()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        vec![self.map.eval_jets(x).swap_remove(self.index)]
    }
}

/// The standard compactly supported radial profile on a ball:
/// exp(1 - 1/(1 - q)) with q = |x-center|^2 / radius^2, and exactly 0 for
/// q >= 1. All derivatives vanish at the boundary. When `slots` is set the
/// radius is measured only over those coordinates (a cylinder bump).
pub struct BumpFn {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Multiplied into the profile (used to normalize to unit integral).
    pub amplitude: f64,
    pub slots: Option<Vec<usize>>,
}

impl BumpFn {
    pub fn profile<S: Scalar>(q: &S) -> S {
        if q.value() >= 1.0 - 1e-12 {
            return S::zero();
        }
        let one = S::one();
        one.sub(&one.sub(q).recip()).exp()
    }

    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        BumpFn {
            center,
            radius,
            amplitude: 1.0,
            slots: None,
        }
    }
}

impl CMapExpr for BumpFn {
    fn in_dim(&self) -> usize {
        self.center.len()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        let mut q = S::zero();
        match &self.slots {
            None => {
                for (xi, ci) in x.iter().zip(&self.center) {
                    let d = xi.sub(&S::from_f64(*ci));
                    q = q.add(&d.mul(&d));
                }
            }
            Some(slots) => {
                for i in slots {
                    let d = x[*i].sub(&S::from_f64(self.center[*i]));
                    q = q.add(&d.mul(&d));
                }
            }
        }
        q = q.scale(1.0 / (self.radius * self.radius));
        vec![Cx::real(BumpFn::profile(&q).scale(self.amplitude))]
    }
}

/// profile(re(f) * scale): a smooth cutoff driven by a scalar function;
/// equals 1 exactly on the zero set of f (for f >= 0).
pub struct BumpOfFn {
    pub f: CMap,
    pub scale: f64,
}

impl CMapExpr for BumpOfFn {
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
        let v = self.f.scalar_at(x);
        let q = v.re.scale(self.scale);
        vec![Cx::real(BumpFn::profile(&q))]
    }
}

/// 1 - profile(re(f) * scale): the complementary cutoff (excision).
pub struct ExcisionFn {
    pub f: CMap,
    pub scale: f64,
}

impl CMapExpr for ExcisionFn {
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
        let v = self.f.scalar_at(x);
        let q = v.re.scale(self.scale);
        vec![Cx::real(S::one().sub(&BumpFn::profile(&q)))]
    }
}

/// Smooth step from 0 to 1 over [0,1]: b(u)/(b(u)+b(1-u)) with
/// b(u)=exp(-1/u). Flat at both ends.
pub struct SmoothStepFn;

impl SmoothStepFn {
    pub fn eval_at<S: Scalar>(u: &S) -> S {
        let uv = u.value();
        if uv <= 1e-12 {
            return S::zero();
        }
        if uv >= 1.0 - 1e-12 {
            return S::one();
        }
        let b = |t: &S| t.recip().neg().exp();
        let bu = b(u);
        let b1u = b(&S::one().sub(u));
        bu.div(&bu.add(&b1u))
    }
}

/// A product of scalar maps with an affine transform of the first output:
/// step((offset + scale * re f(x))). Used for smoothed region indicators.
pub struct StepOfFn {
    pub f: CMap,
    pub offset: f64,
    pub scale: f64,
}

impl CMapExpr for StepOfFn {
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
        let v = self.f.scalar_at(x);
        let u = v.re.scale(self.scale).add(&S::from_f64(self.offset));
        vec![Cx::real(SmoothStepFn::eval_at(&u))]
    }
}

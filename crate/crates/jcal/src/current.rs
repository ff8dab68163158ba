//! Currents of bidimension (p,p): pairing, mass measures, linear
//! combinations.
//!
//! A current here is anything that can pair a compactly supported
//! (p,p)-test form by quadrature: a smooth form over a box, integration
//! over parametrized pieces, or a linear combination. All pairings return
//! an error estimate alongside the value.

use std::sync::Arc;

use crate::chart::CoordinateChart;
use crate::error::{Error, Result};
use crate::field::{BumpFn, CMap, FormField, StepOfFn};
use crate::form::ExteriorValue;
use crate::quadrature::{integrate, HintFn, QuadratureConfig};
use crate::sampling::BoxDomain;
use crate::scalar::C64;
use crate::structures::AlmostComplexStructure;

/// Volume of the unit ball of C^p.
pub fn tau_p(p: usize) -> f64 {
    let mut v = 1.0;
    for k in 1..=p {
        v *= std::f64::consts::PI / k as f64;
    }
    v
}

#[derive(Clone, Debug)]
pub struct Pairing {
    pub value: C64,
    pub err: f64,
    pub cells: usize,
}

impl Pairing {
    fn zero() -> Self {
        Pairing {
            value: C64::ZERO,
            err: 0.0,
            cells: 0,
        }
    }
}

/// A compactly supported test form: the field evaluates to exactly zero
/// outside the support box (bump-profiled constructors guarantee it).
#[derive(Clone)]
pub struct TestForm {
    pub field: FormField,
    pub support: BoxDomain,
    pub label: String,
}

impl TestForm {
    /// bump(center, radius) * factor, where factor is a form field.
    pub fn bump_times(
        label: &str,
        center: &[f64],
        radius: f64,
        amplitude: f64,
        factor: FormField,
    ) -> Self {
        let bump = CMap::new(BumpFn {
            center: center.to_vec(),
            radius,
            amplitude,
            slots: None,
        });
        TestForm {
            field: factor.scaled_by(vec![bump]),
            support: BoxDomain::centered(center, radius),
            label: label.to_string(),
        }
    }

    /// A plain scalar bump (degree 0 test form).
    pub fn bump_scalar(label: &str, center: &[f64], radius: f64, amplitude: f64) -> Self {
        let one = FormField::constant(ExteriorValue::one(center.len()));
        TestForm::bump_times(label, center, radius, amplitude, one)
    }

    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    /// Scale so the bump factor integrates to one over its `dim`-ball.
    /// (The amplitude for a unit-integral bump of the standard profile.)
    pub fn unit_amplitude(dim: usize, radius: f64) -> f64 {
        // integral = S_{dim-1} * int_0^R profile(r^2/R^2) r^{dim-1} dr
        let surface = match dim {
            1 => 2.0,
            2 => std::f64::consts::TAU,
            3 => 4.0 * std::f64::consts::PI,
            4 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
            _ => {
                // S_{d-1} = 2 pi^{d/2} / Gamma(d/2); d <= 6 here
                let d = dim as f64;
                2.0 * std::f64::consts::PI.powf(d / 2.0) / gamma_half(dim)
            }
        };
        let dom = BoxDomain::new(vec![0.0], vec![radius]);
        let r2 = radius * radius;
        let integral = integrate(
            |t: &[f64]| {
                let r = t[0];
                let q = r * r / r2;
                C64 {
                    re: BumpFn::profile(&q) * r.powi(dim as i32 - 1),
                    im: 0.0,
                }
            },
            &dom,
            &[],
            &QuadratureConfig {
                abs_tol: 1e-12,
                rel_tol: 1e-10,
                ..Default::default()
            },
        )
        .expect("1d bump integral")
        .value
        .re;
        1.0 / (surface * integral)
    }
}

fn gamma_half(dim: usize) -> f64 {
    // Gamma(dim/2) for small integer dim
    match dim {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        3 => 0.5 * std::f64::consts::PI.sqrt(),
        4 => 1.0,
        5 => 0.75 * std::f64::consts::PI.sqrt(),
        6 => 2.0,
        _ => unreachable!("dim <= 6"),
    }
}

/// One parametrized piece of an integration current: a map from a box in
/// R^{2j} into the ambient space. `puncture` is an optional nonnegative
/// parameter function whose zero set marks removed lower strata; it is
/// used as a quadrature hint and by excision probes.
#[derive(Clone)]
pub struct ParamChart {
    pub map: crate::field::RMap,
    pub domain: BoxDomain,
    pub puncture: Option<CMap>,
}

trait CurrentImpl: Send + Sync {
    fn dim(&self) -> usize;
    fn bidim(&self) -> usize;
    /// Pair with an ambient field supported in `support`.
    fn pair_in(
        &self,
        field: &FormField,
        support: &BoxDomain,
        cfg: &QuadratureConfig,
        hints: &[HintFn],
    ) -> Result<Pairing>;
}

#[derive(Clone)]
pub struct Current {
    inner: Arc<dyn CurrentImpl>,
    hints: Vec<HintFn>,
    label: String,
}

impl Current {
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Bidimension p: the current pairs (p,p)-test forms.
    pub fn bidim(&self) -> usize {
        self.inner.bidim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_hint(mut self, hint: HintFn) -> Self {
        self.hints.push(hint);
        self
    }

    pub fn hints(&self) -> &[HintFn] {
        &self.hints
    }

    /// A smooth current given by a form field of bidegree (n-p, n-p).
    pub fn smooth(label: &str, form: FormField, n: usize) -> Self {
        let deg = form.degree();
        assert!(deg % 2 == 0 && deg <= 2 * n, "smooth current needs even degree");
        Current {
            inner: Arc::new(SmoothCurrent {
                form,
                n,
                p: n - deg / 2,
            }),
            hints: Vec::new(),
            label: label.to_string(),
        }
    }

    /// The zero current of bidimension (p,p).
    pub fn zero(n: usize, p: usize) -> Self {
        Current::smooth("zero", FormField::zero(2 * n, 2 * (n - p)), n)
    }

    /// Integration over parametrized pieces of real dimension 2p.
    pub fn integration(label: &str, ambient_n: usize, charts: Vec<ParamChart>) -> Self {
        assert!(!charts.is_empty());
        let pdim = charts[0].map.in_dim();
        assert!(pdim % 2 == 0);
        for c in &charts {
            assert_eq!(c.map.in_dim(), pdim);
            assert_eq!(c.map.out_dim(), 2 * ambient_n);
        }
        Current {
            inner: Arc::new(IntegrationCurrent {
                charts,
                n: ambient_n,
                p: pdim / 2,
            }),
            hints: Vec::new(),
            label: label.to_string(),
        }
    }

    /// Linear combination with complex coefficients.
    pub fn combination(label: &str, terms: Vec<(C64, Current)>) -> Self {
        assert!(!terms.is_empty());
        let (dim, p) = (terms[0].1.dim(), terms[0].1.bidim());
        let mut hints = Vec::new();
        for (_, t) in &terms {
            assert_eq!(t.dim(), dim);
            assert_eq!(t.bidim(), p);
            hints.extend(t.hints.iter().cloned());
        }
        Current {
            inner: Arc::new(CombCurrent { terms }),
            hints,
            label: label.to_string(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Current::combination(
            &format!("{}*{k}", self.label),
            vec![(C64 { re: k, im: 0.0 }, self.clone())],
        )
    }

    /// Pair against a test form (the main entry point).
    pub fn pair(&self, psi: &TestForm, cfg: &QuadratureConfig) -> Result<Pairing> {
        if psi.field.dim() != self.dim() {
            return Err(Error::DimensionMismatch);
        }
        if psi.degree() != 2 * self.bidim() {
            return Err(Error::BidegreeMismatch);
        }
        self.inner
            .pair_in(&psi.field, &psi.support, cfg, &self.hints)
    }

    /// Pair against an arbitrary ambient field over a support box; used by
    /// duality operators and mass measures.
    pub fn pair_field_in(
        &self,
        field: &FormField,
        support: &BoxDomain,
        cfg: &QuadratureConfig,
        extra_hints: &[HintFn],
    ) -> Result<Pairing> {
        let mut hints = self.hints.clone();
        hints.extend(extra_hints.iter().cloned());
        self.inner.pair_in(field, support, cfg, &hints)
    }
}

// ---------------------------------------------------------------------------

struct SmoothCurrent {
    form: FormField,
    n: usize,
    p: usize,
}

impl CurrentImpl for SmoothCurrent {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn bidim(&self) -> usize {
        self.p
    }
    fn pair_in(
        &self,
        field: &FormField,
        support: &BoxDomain,
        cfg: &QuadratureConfig,
        hints: &[HintFn],
    ) -> Result<Pairing> {
        let integrand = self.form.wedge(field);
        let r = integrate(
            |x: &[f64]| integrand.value(x).top_coeff(),
            support,
            hints,
            cfg,
        )?;
        Ok(Pairing {
            value: r.value,
            err: r.err,
            cells: r.cells,
        })
    }
}

struct IntegrationCurrent {
    charts: Vec<ParamChart>,
    n: usize,
    p: usize,
}

impl CurrentImpl for IntegrationCurrent {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn bidim(&self) -> usize {
        self.p
    }
    fn pair_in(
        &self,
        field: &FormField,
        support: &BoxDomain,
        cfg: &QuadratureConfig,
        hints: &[HintFn],
    ) -> Result<Pairing> {
        let mut total = Pairing::zero();
        for chart in &self.charts {
            if self.p == 0 {
                // zero-dimensional pieces: evaluate at the point
                let x = chart.map.values(&chart.domain.lo);
                if support.contains(&x) {
                    let v = field.value(&x).coeff(0);
                    total.value = total.value.add(&v);
                }
                continue;
            }
            let pulled = FormField::new(crate::calculus::PullbackField {
                base: field.clone(),
                map: chart.map.clone(),
            });
            // pull ambient hints back through the chart map, and add the
            // puncture hint in parameter space
            let mut phints: Vec<HintFn> = Vec::new();
            for h in hints {
                let h = h.clone();
                let map = chart.map.clone();
                phints.push(Arc::new(move |t: &[f64]| h(&map.values(t))));
            }
            if let Some(punct) = &chart.puncture {
                let p = punct.clone();
                phints.push(Arc::new(move |t: &[f64]| p.values(t)[0].re));
            }
            let r = integrate(
                |t: &[f64]| pulled.value(t).top_coeff(),
                &chart.domain,
                &phints,
                cfg,
            )?;
            total.value = total.value.add(&r.value);
            total.err += r.err;
            total.cells += r.cells;
        }
        Ok(total)
    }
}

struct CombCurrent {
    terms: Vec<(C64, Current)>,
}

impl CurrentImpl for CombCurrent {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn bidim(&self) -> usize {
        self.terms[0].1.bidim()
    }
    fn pair_in(
        &self,
        field: &FormField,
        support: &BoxDomain,
        cfg: &QuadratureConfig,
        hints: &[HintFn],
    ) -> Result<Pairing> {
        let mut total = Pairing::zero();
        for (c, t) in &self.terms {
            let r = t.inner.pair_in(field, support, cfg, hints)?;
            total.value = total.value.add(&r.value.mul(c));
            total.err += r.err * c.abs();
            total.cells += r.cells;
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// mass measures
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum Region {
    /// Chart ball {|z| < radius} around the chart center.
    Ball { radius: f64 },
    /// A plain coordinate box.
    BoxRegion(BoxDomain),
}

#[derive(Clone, Debug)]
pub struct MassResult {
    pub value: f64,
    pub err: f64,
}

/// Number of indicator sharpening levels for ball regions; the boundary
/// error is O(level width^2) and is removed by Richardson extrapolation.
const BALL_LEVELS: [f64; 3] = [0.2, 0.1, 0.05];

/// The mass of `T` over a region: int_region T ^ beta1^p with beta1 built
/// from the chart. Ball boundaries are smoothed at three sharpening levels
/// and Richardson-extrapolated.
pub fn mass(
    t: &Current,
    region: &Region,
    chart: &CoordinateChart,
    structure: &AlmostComplexStructure,
    cfg: &QuadratureConfig,
) -> Result<MassResult> {
    let p = t.bidim();
    let beta1_p = chart.beta1_field(structure).wedge_pow(p);
    mass_with_density(t, region, chart, &beta1_p, cfg)
}

/// Mass with an explicit density form (used for the corrected mass, which
/// replaces beta1^p by other second-order combinations).
pub fn mass_with_density(
    t: &Current,
    region: &Region,
    chart: &CoordinateChart,
    density: &FormField,
    cfg: &QuadratureConfig,
) -> Result<MassResult> {
    match region {
        Region::BoxRegion(b) => {
            let r = t.pair_field_in(density, b, cfg, &[])?;
            Ok(MassResult {
                value: r.value.re,
                err: r.err + r.value.im.abs(),
            })
        }
        Region::Ball { radius } => {
            let support = ball_bounding_box(chart, *radius)?;
            let r2 = radius * radius;
            let rho = chart.radius_sq();
            let mut vals = Vec::with_capacity(BALL_LEVELS.len());
            let mut quad_err = 0.0f64;
            for w in BALL_LEVELS {
                // step((r^2 - |z|^2)/(w r^2) + 1/2): symmetric transition
                let ind = CMap::new(StepOfFn {
                    f: rho.clone(),
                    offset: 1.0 / w + 0.5,
                    scale: -1.0 / (w * r2),
                });
                let field = density.scaled_by(vec![ind]);
                let pr = t.pair_field_in(&field, &support, cfg, &[])?;
                quad_err = quad_err.max(pr.err + pr.value.im.abs());
                vals.push(pr.value.re);
            }
            // I(w) = I0 + c w^2; two Richardson stages on w, w/2, w/4
            let r1 = (4.0 * vals[1] - vals[0]) / 3.0;
            let r2 = (4.0 * vals[2] - vals[1]) / 3.0;
            Ok(MassResult {
                value: r2,
                err: quad_err + (r2 - r1).abs(),
            })
        }
    }
}

/// A conservative ambient bounding box for the chart ball {|z| < r}.
pub fn ball_bounding_box(chart: &CoordinateChart, radius: f64) -> Result<BoxDomain> {
    let dim = chart.dim();
    // bound |x - c| <= ||Dz^{-1}|| * |z| using the real differential at the
    // center; linear charts make this a global bound up to curvature, so
    // pad by 50% and intersect with nothing else here
    let jets = crate::scalar::seed(chart.center());
    let zs = chart.map().eval_jets(&jets);
    let mut d = vec![0.0; dim * dim];
    for (k, z) in zs.iter().enumerate() {
        for i in 0..dim {
            d[(2 * k) * dim + i] = z.re.d(i);
            d[(2 * k + 1) * dim + i] = z.im.d(i);
        }
    }
    // infinity norm of D^{-1} via solves against basis vectors
    let mut inv_norm = 0.0f64;
    let mut rowsums = vec![0.0f64; dim];
    for c in 0..dim {
        let mut b = vec![0.0; dim];
        b[c] = 1.0;
        let col = crate::linalg::solve_f64(dim, &d, &b)
            .ok_or(Error::DegenerateEigenspace { defect: 0.0 })?;
        for (r, v) in col.iter().enumerate() {
            rowsums[r] += v.abs();
        }
    }
    for r in rowsums {
        inv_norm = inv_norm.max(r);
    }
    let half = 1.5 * inv_norm * radius;
    Ok(BoxDomain::centered(chart.center(), half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SlabMap;
    use crate::structures::make_standard;

    fn flat_disc_current(n: usize, half_width: f64) -> Current {
        // {w = 0} in C^2 (slots 2,3 fixed at zero), parameters (x1,y1)
        let mut pattern = vec![None, None];
        pattern.extend(std::iter::repeat(Some(0.0)).take(2 * n - 2));
        Current::integration(
            "[w=0]",
            n,
            vec![ParamChart {
                map: crate::field::RMap::new(SlabMap { pattern }),
                domain: BoxDomain::cube(2, half_width),
                puncture: None,
            }],
        )
    }

    #[test]
    fn pair_flat_disc_with_unit_bump() {
        // psi = chi(z,w) (i/2) dz^dzbar with chi = (unit-integral bump in
        // z) * (bump in w equal to 1 at w=0)
        let t = flat_disc_current(2, 1.2);
        let amp_z = TestForm::unit_amplitude(2, 0.8);
        let bump_z = CMap::new(BumpFn {
            center: vec![0.0; 4],
            radius: 0.8,
            amplitude: amp_z,
            slots: Some(vec![0, 1]),
        });
        let bump_w = CMap::new(BumpFn {
            center: vec![0.0; 4],
            radius: 0.5,
            amplitude: 1.0,
            slots: Some(vec![2, 3]),
        });
        // (i/2) dz ^ dzbar = dx1 ^ dy1
        let area = FormField::constant(
            ExteriorValue::basis_covector(4, 0)
                .wedge(&ExteriorValue::basis_covector(4, 1))
                .unwrap(),
        );
        let psi = TestForm {
            field: area.scaled_by(vec![bump_z, bump_w]),
            support: BoxDomain::cube(4, 0.8),
            label: "unit bump".into(),
        };
        let cfg = QuadratureConfig::default();
        let r = t.pair(&psi, &cfg).unwrap();
        assert!(
            (r.value.re - 1.0).abs() < 1e-6,
            "got {} err {}",
            r.value.re,
            r.err
        );
        assert!(r.value.im.abs() < 1e-10);
    }

    #[test]
    fn zero_smooth_current_pairs_to_zero() {
        let t = Current::zero(1, 0);
        let psi = TestForm::bump_scalar("b", &[0.0, 0.0], 0.5, 1.0);
        let r = t.pair(&psi, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.value.re, 0.0);
    }

    #[test]
    fn smoothed_log_kernel_total_mass_approaches_two() {
        // T_eps = (2/pi) eps^2/(|z|^2+eps^2)^2 (i/2) dz^dzbar on C paired
        // with a wide bump equal to 1 near 0: total mass of
        // (i/pi) d dbar log(|z|^2 + eps^2) -> 2 as eps -> 0
        let st = make_standard(1);
        let ch = crate::chart::CoordinateChart::adapted(&st, &[0.0, 0.0]).unwrap();
        let eps = 0.02;
        let g = crate::calculus::norm_sq(ch.map());
        struct Kernel {
            g: CMap,
            eps: f64,
        }
        impl crate::field::CMapExpr for Kernel {
            fn in_dim(&self) -> usize {
                2
            }
            fn out_dim(&self) -> usize {
                1
            }
            fn eval<S: crate::field::JetScalar>(&self, x: &[S]) -> Vec<crate::scalar::Cx<S>>
            where
                crate::field::Jet<S>: crate::field::JetScalar,
            {
                use crate::scalar::Scalar;
                let q = self.g.scalar_at(x).re.add(&S::from_f64(self.eps * self.eps));
                let e2 = S::from_f64(self.eps * self.eps);
                vec![crate::scalar::Cx::real(
                    e2.mul(&q.mul(&q).recip()).scale(2.0 / std::f64::consts::PI),
                )]
            }
        }
        let dens = CMap::new(Kernel { g, eps });
        let area = FormField::constant(
            ExteriorValue::basis_covector(2, 0)
                .wedge(&ExteriorValue::basis_covector(2, 1))
                .unwrap(),
        );
        let t = Current::smooth("T_eps", area.scaled_by(vec![dens]), 1)
            .with_hint(Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1]));
        let psi = TestForm::bump_scalar("wide", &[0.0, 0.0], 3.0, 1.0);
        let r = t.pair(&psi, &QuadratureConfig::default()).unwrap();
        assert!((r.value.re - 2.0).abs() < 0.01, "got {}", r.value.re);
    }

    #[test]
    fn flat_disc_ball_mass_is_pi_r_squared() {
        let st = make_standard(2);
        let ch = crate::chart::CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t = flat_disc_current(2, 0.6);
        let r = 0.3;
        let m = mass(
            &t,
            &Region::Ball { radius: r },
            &ch,
            &st,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let want = std::f64::consts::PI * r * r;
        assert!(
            (m.value - want).abs() < 1e-3 * want,
            "got {} want {want} (err {})",
            m.value,
            m.err
        );
    }

    #[test]
    fn smooth_beta1_ball_mass_matches_polar_oracle() {
        // T = beta1 on C^2 standard: mass over B(r) = int T ^ beta1 =
        // 2 vol_4(B(r)) = pi^2 r^4
        let st = make_standard(2);
        let ch = crate::chart::CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let b1 = ch.beta1_field(&st);
        let t = Current::smooth("beta1", b1, 2);
        let r = 0.5;
        let m = mass(
            &t,
            &Region::Ball { radius: r },
            &ch,
            &st,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let want = std::f64::consts::PI.powi(2) * r.powi(4);
        assert!(
            (m.value - want).abs() < 2e-3 * want,
            "got {} want {want}",
            m.value
        );
    }

    #[test]
    fn empty_region_has_zero_mass() {
        let st = make_standard(2);
        let ch = crate::chart::CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t = flat_disc_current(2, 0.6);
        let m = mass(
            &t,
            &Region::BoxRegion(BoxDomain::new(
                vec![0.9, 0.9, 0.9, 0.9],
                vec![0.9001, 0.9001, 0.9001, 0.9001],
            )),
            &ch,
            &st,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(m.value.abs() < 1e-12);
    }

    #[test]
    fn combination_pairing_is_linear() {
        let t1 = flat_disc_current(2, 0.8);
        let st = make_standard(2);
        let ch = crate::chart::CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t2 = Current::smooth("beta1", ch.beta1_field(&st), 2);
        let comb = Current::combination(
            "2[A]+3S",
            vec![
                (C64 { re: 2.0, im: 0.0 }, t1.clone()),
                (C64 { re: 3.0, im: 0.0 }, t2.clone()),
            ],
        );
        let psi = TestForm::bump_times(
            "b",
            &[0.0; 4],
            0.5,
            1.0,
            ch.beta1_field(&st),
        );
        let cfg = QuadratureConfig::default();
        let a = t1.pair(&psi, &cfg).unwrap().value;
        let b = t2.pair(&psi, &cfg).unwrap().value;
        let c = comb.pair(&psi, &cfg).unwrap().value;
        let want = a.scale(2.0).add(&b.scale(3.0));
        assert!(c.sub(&want).abs() < 1e-9);
    }

    #[test]
    fn bidegree_mismatch_rejected() {
        let t = flat_disc_current(2, 0.5);
        // degree-0 test form against a bidim (1,1) current
        let psi = TestForm::bump_scalar("b", &[0.0; 4], 0.5, 1.0);
        assert!(matches!(
            t.pair(&psi, &QuadratureConfig::default()),
            Err(Error::BidegreeMismatch)
        ));
    }
}

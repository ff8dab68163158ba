//! Derivatives of currents by duality, and probe suites.
//!
//! For a current of even degree the Stokes duality reads
//! <dT, phi> = -<T, d phi>, and it splits componentwise: pairing against a
//! test form of pure bidegree selects exactly one signed component on each
//! side, with the theta-signs cancelling. The second-order operator is two
//! applications: <i del dbar T, phi> = -i <T, dbar(del phi)>. Signs are
//! validated against direct differentiation of smooth currents in tests.

use crate::calculus::{DerivField, ProjField};
use crate::chart::CoordinateChart;
use crate::current::{Current, Pairing, TestForm};
use crate::error::Result;
use crate::field::{BumpFn, CMap, FieldExpr, FormField, Jet, JetScalar};
use crate::form::{ExteriorValue, SpForm};
use crate::projector::project_10_covector;
use crate::quadrature::QuadratureConfig;
use crate::sampling::Sampler;
use crate::scalar::{seed, Cx, C64};
use crate::structures::AlmostComplexStructure;

/// <dT, phi> for phi of degree 2p-1.
pub fn pair_d(t: &Current, phi: &TestForm, cfg: &QuadratureConfig) -> Result<Pairing> {
    let dphi = FormField::new(DerivField {
        base: phi.field.clone(),
    });
    let r = t.pair_field_in(&dphi, &phi.support, cfg, &[])?;
    Ok(Pairing {
        value: r.value.scale(-1.0),
        err: r.err,
        cells: r.cells,
    })
}

/// <i del_J dbar_J T, phi> for phi of bidegree (p-1,p-1).
pub fn pair_ddbar(
    t: &Current,
    phi: &TestForm,
    structure: &AlmostComplexStructure,
    cfg: &QuadratureConfig,
) -> Result<Pairing> {
    let p = t.bidim();
    assert!(p >= 1, "i del dbar T pairs (p-1,p-1) forms");
    let del_phi = FormField::new(ProjField {
        base: FormField::new(DerivField {
            base: phi.field.clone(),
        }),
        structure: structure.clone(),
        p,
        q: p - 1,
    });
    let dbar_del_phi = FormField::new(ProjField {
        base: FormField::new(DerivField { base: del_phi }),
        structure: structure.clone(),
        p,
        q: p,
    });
    let r = t.pair_field_in(&dbar_del_phi, &phi.support, cfg, &[])?;
    Ok(Pairing {
        value: r.value.mul(&C64::I).scale(-1.0),
        err: r.err,
        cells: r.cells,
    })
}

/// A pointwise strongly positive (k,k)-form: bump * product of
/// i alpha_j ^ conj(alpha_j) with alpha_j built from the chart's (1,0)
/// frame at each point, so the bidegree is exact everywhere.
pub struct SpdProbeField {
    pub chart_map: CMap,
    pub structure: AlmostComplexStructure,
    /// coeffs[j][k]: coefficient of del z_k in alpha_j.
    pub coeffs: Vec<Vec<C64>>,
}

impl FieldExpr for SpdProbeField {
    fn dim(&self) -> usize {
        self.chart_map.in_dim()
    }
    fn degree(&self) -> usize {
        2 * self.coeffs.len()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let dim = self.chart_map.in_dim();
        let jm = self.structure.j_at(x);
        let jets = seed(x);
        let zs = self.chart_map.eval_jets(&jets);
        let zetas: Vec<Vec<Cx<S>>> = zs
            .iter()
            .map(|z| {
                let dz: Vec<Cx<S>> = (0..dim).map(|m| Cx::new(z.re.d(m), z.im.d(m))).collect();
                project_10_covector(&jm, &dz)
            })
            .collect();
        let mut out = SpForm::one(dim);
        for cj in &self.coeffs {
            let mut alpha = vec![Cx::<S>::zero(); dim];
            for (c, zeta) in cj.iter().zip(&zetas) {
                for (a, zk) in alpha.iter_mut().zip(zeta) {
                    *a = a.add(&Cx::from_c64(c).mul(zk));
                }
            }
            let abar: Vec<Cx<S>> = alpha.iter().map(|c| c.conj()).collect();
            out = out
                .wedge(&SpForm::from_covector(dim, &alpha).mul_i())
                .expect("dim")
                .wedge_covector(&abar);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub label: String,
    pub value: C64,
    pub err: f64,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Smallest real pairing (positivity/psh probes).
    pub min_real: f64,
    /// Largest |value| (closedness probes).
    pub max_abs: f64,
    pub max_imag: f64,
    pub tol: f64,
    pub pass: bool,
}

fn summarize(rows: Vec<ProbeRow>, tol: f64, positivity: bool) -> ProbeReport {
    let mut min_real = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut max_imag = 0.0f64;
    for r in &rows {
        min_real = min_real.min(r.value.re);
        max_abs = max_abs.max(r.value.abs());
        max_imag = max_imag.max(r.value.im.abs());
    }
    let pass = if positivity {
        min_real >= -tol && max_imag <= tol.max(1e-9)
    } else {
        max_abs <= tol
    };
    ProbeReport {
        rows,
        min_real,
        max_abs,
        max_imag,
        tol,
        pass,
    }
}

fn random_spd_probe(
    t: &Current,
    factors: usize,
    chart: &CoordinateChart,
    structure: &AlmostComplexStructure,
    sampler: &mut Sampler,
    idx: usize,
) -> TestForm {
    let n = chart.n();
    let dim = 2 * n;
    let radius = sampler.uniform(0.25, 0.45);
    let mut center = chart.center().to_vec();
    for c in center.iter_mut() {
        *c += sampler.uniform(-0.1, 0.1);
    }
    let coeffs: Vec<Vec<C64>> = (0..factors)
        .map(|_| (0..n).map(|_| sampler.complex(1.0)).collect())
        .collect();
    let spd = FormField::new(SpdProbeField {
        chart_map: chart.map().clone(),
        structure: structure.clone(),
        coeffs,
    });
    let _ = t;
    let bump = CMap::new(BumpFn {
        center: center.clone(),
        radius,
        amplitude: 1.0,
        slots: None,
    });
    TestForm {
        field: spd.scaled_by(vec![bump]),
        support: crate::sampling::BoxDomain::centered(&center, radius),
        label: format!("spd probe {idx}"),
    }
}

/// Positivity probe: Re<T, phi> >= -tol for strongly positive probes with
/// nonnegative bump weights.
pub fn probe_positive(
    t: &Current,
    chart: &CoordinateChart,
    structure: &AlmostComplexStructure,
    sampler: &mut Sampler,
    count: usize,
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<ProbeReport> {
    let p = t.bidim();
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let probe = random_spd_probe(t, p, chart, structure, sampler, i);
        let r = t.pair(&probe, cfg)?;
        rows.push(ProbeRow {
            label: probe.label,
            value: r.value,
            err: r.err,
        });
    }
    Ok(summarize(rows, tol, true))
}

/// Closedness probe: |<dT, eta>| <= tol over random test forms of degree
/// 2p - 1.
pub fn probe_closed(
    t: &Current,
    sampler: &mut Sampler,
    count: usize,
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<ProbeReport> {
    let dim = t.dim();
    let degree = 2 * t.bidim() - 1;
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let radius = sampler.uniform(0.25, 0.45);
        let mut center = vec![0.0; dim];
        for c in center.iter_mut() {
            *c += sampler.uniform(-0.1, 0.1);
        }
        let mut value = ExteriorValue::zero(dim);
        for mask in 0u32..(1 << dim) {
            if mask.count_ones() as usize == degree {
                value.add_term(mask, sampler.complex(1.0));
            }
        }
        let eta = TestForm::bump_times(
            &format!("closed probe {i}"),
            &center,
            radius,
            1.0,
            FormField::constant(value),
        );
        let r = pair_d(t, &eta, cfg)?;
        rows.push(ProbeRow {
            label: eta.label,
            value: r.value,
            err: r.err,
        });
    }
    Ok(summarize(rows, tol, false))
}

/// Plurisubharmonicity probe: Re<i del dbar T, phi> >= -tol for strongly
/// positive (p-1,p-1) probes.
pub fn probe_psh(
    t: &Current,
    chart: &CoordinateChart,
    structure: &AlmostComplexStructure,
    sampler: &mut Sampler,
    count: usize,
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<ProbeReport> {
    let p = t.bidim();
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let probe = random_spd_probe(t, p - 1, chart, structure, sampler, i);
        let r = pair_ddbar(t, &probe, structure, cfg)?;
        rows.push(ProbeRow {
            label: probe.label,
            value: r.value,
            err: r.err,
        });
    }
    Ok(summarize(rows, tol, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::{Current, ParamChart};
    use crate::field::{PolyField, SlabMap};
    use crate::sampling::BoxDomain;
    use crate::structures::make_standard;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig {
            order: 6,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
            ..Default::default()
        }
    }

    fn flat_disc(n: usize) -> Current {
        let mut pattern = vec![None, None];
        pattern.extend(std::iter::repeat(Some(0.0)).take(2 * n - 2));
        Current::integration(
            "[w=0]",
            n,
            vec![ParamChart {
                map: crate::field::RMap::new(SlabMap { pattern }),
                domain: BoxDomain::cube(2, 0.9),
                puncture: None,
            }],
        )
    }

    #[test]
    fn constant_form_current_is_closed() {
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t = Current::smooth("beta1", ch.beta1_field(&st), 2);
        let mut s = Sampler::new(3);
        let rep = probe_closed(&t, &mut s, 5, &cfg(), 1e-6).unwrap();
        assert!(rep.pass, "max_abs {}", rep.max_abs);
    }

    #[test]
    fn flat_disc_is_closed_and_positive() {
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t = flat_disc(2);
        let mut s = Sampler::new(4);
        let rep = probe_closed(&t, &mut s, 5, &cfg(), 1e-6).unwrap();
        assert!(rep.pass, "max_abs {}", rep.max_abs);
        let mut s = Sampler::new(5);
        let rep = probe_positive(&t, &ch, &st, &mut s, 8, &cfg(), 1e-6).unwrap();
        assert!(rep.pass, "min_real {}", rep.min_real);
        // the negative misses positivity with a witness probe
        let neg = t.scale(-1.0);
        let mut s = Sampler::new(5);
        let rep = probe_positive(&neg, &ch, &st, &mut s, 8, &cfg(), 1e-6).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_real < -1e-4);
    }

    #[test]
    fn duality_matches_direct_differentiation_on_smooth() {
        // T = u Phi with u = x1^2 - x2 x4, Phi = beta1: compare <dT, eta>
        // by duality vs direct coefficient differentiation
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let u = PolyField {
            dim: 4,
            degree: 0,
            terms: vec![(
                0,
                vec![
                    (C64 { re: 1.0, im: 0.0 }, vec![2, 0, 0, 0]),
                    (C64 { re: -1.0, im: 0.0 }, vec![0, 1, 0, 1]),
                ],
            )],
        };
        struct AsScalar(FormField);
        impl crate::field::CMapExpr for AsScalar {
            fn in_dim(&self) -> usize {
                self.0.dim()
            }
            fn out_dim(&self) -> usize {
                1
            }
            fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
            where
                Jet<S>: JetScalar,
            {
                vec![self.0.eval_jets(x).coeff(0)]
            }
        }
        let u_map = CMap::new(AsScalar(FormField::new(u)));
        let t_form = ch.beta1_field(&st).scaled_by(vec![u_map]);
        let t = Current::smooth("u beta1", t_form.clone(), 2);

        let mut s = Sampler::new(11);
        let mut center = vec![0.0; 4];
        for c in center.iter_mut() {
            *c = s.uniform(-0.05, 0.05);
        }
        let mut value = ExteriorValue::zero(4);
        for mask in 0u32..16 {
            if mask.count_ones() == 1 {
                value.add_term(mask, s.complex(1.0));
            }
        }
        let eta = TestForm::bump_times("eta", &center, 0.4, 1.0, FormField::constant(value));
        let by_duality = pair_d(&t, &eta, &cfg()).unwrap();
        // direct: dT is a smooth current
        let dt = Current::smooth(
            "dT",
            FormField::new(DerivField { base: t_form }),
            2,
        );
        let direct = dt
            .pair_field_in(&eta.field, &eta.support, &cfg(), &[])
            .unwrap();
        assert!(
            by_duality.value.sub(&direct.value).abs() < 1e-5,
            "duality {} vs direct {}",
            by_duality.value,
            direct.value
        );
    }

    #[test]
    fn ddbar_duality_matches_direct_on_smooth() {
        // T = |z|^2 Phi with Phi = beta1 constant on C^2 standard:
        // i del dbar T = 2 beta1 ^ Phi; pair both routes against a scalar bump
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let rho = ch.radius_sq();
        let t_form = ch.beta1_field(&st).scaled_by(vec![rho]);
        let t = Current::smooth("|z|^2 beta1", t_form, 2);
        let phi = TestForm::bump_scalar("phi", &[0.0; 4], 0.45, 1.0);
        let by_duality = pair_ddbar(&t, &phi, &st, &cfg()).unwrap();
        // direct: 2 beta1 ^ beta1 paired with phi
        let direct_form = ch.beta1_field(&st).wedge(&ch.beta1_field(&st)).scale(2.0);
        let direct = Current::smooth("2 beta1^2", direct_form, 2)
            .pair_field_in(&phi.field, &phi.support, &cfg(), &[])
            .unwrap();
        assert!(
            by_duality.value.sub(&direct.value).abs() < 2e-5,
            "duality {} vs direct {} (errs {} {})",
            by_duality.value,
            direct.value,
            by_duality.err,
            direct.err
        );
    }

    #[test]
    fn closed_positive_current_is_psh() {
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let t = flat_disc(2);
        let mut s = Sampler::new(7);
        let rep = probe_psh(&t, &ch, &st, &mut s, 5, &cfg(), 1e-5).unwrap();
        assert!(
            rep.pass,
            "min_real {} max_imag {}",
            rep.min_real, rep.max_imag
        );
    }

    #[test]
    fn psh_but_not_positive_example() {
        // T = (|z|^2 - R^2) Phi on the ball: i del dbar T = 2 beta1 ^ Phi
        // is positive, but T itself is negative inside |z| < R
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        struct Shifted {
            rho: CMap,
            rsq: f64,
        }
        impl crate::field::CMapExpr for Shifted {
            fn in_dim(&self) -> usize {
                4
            }
            fn out_dim(&self) -> usize {
                1
            }
            fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
            where
                Jet<S>: JetScalar,
            {
                use crate::scalar::Scalar;
                let v = self.rho.scalar_at(x);
                vec![Cx::real(v.re.sub(&S::from_f64(self.rsq)))]
            }
        }
        let factor = CMap::new(Shifted {
            rho: ch.radius_sq(),
            rsq: 1.0,
        });
        let t = Current::smooth(
            "(|z|^2-R^2) beta1",
            ch.beta1_field(&st).scaled_by(vec![factor]),
            2,
        );
        let mut s = Sampler::new(13);
        let psh = probe_psh(&t, &ch, &st, &mut s, 5, &cfg(), 1e-5).unwrap();
        assert!(psh.pass, "min_real {}", psh.min_real);
        let mut s = Sampler::new(13);
        let pos = probe_positive(&t, &ch, &st, &mut s, 5, &cfg(), 1e-6).unwrap();
        assert!(!pos.pass, "should fail positivity: {}", pos.min_real);
    }
}

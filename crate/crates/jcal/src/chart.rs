//! Coordinate charts adapted to an almost complex structure.
//!
//! An adapted chart at a center point consists of n complex-valued
//! functions z_j vanishing at the center whose differentials at the center
//! are (1,0)-covectors of J(center); smoothness then gives the defect
//! bound |dbar_J z_j| = O(|x - center|). Linear charts are built from the
//! columns of Id - i J(center)^T, which at the standard structure yields
//! exactly z_j = x_{2j-1} + i x_{2j}.

use crate::error::{Error, Result};
use crate::field::{AbsSqFn, CMap, CMapExpr, FormField, JetScalar};
use crate::form::SpForm;
use crate::projector::{project_01_covector, project_10_covector};
use crate::sampling::Sampler;
use crate::scalar::Jet;
use crate::scalar::{seed, Cx, C64};
use crate::structures::AlmostComplexStructure;

#[derive(Clone)]
pub struct CoordinateChart {
    map: CMap,
    center: Vec<f64>,
    n: usize,
}

struct LinearChartExpr {
    center: Vec<f64>,
    /// zeta[k][i]: coefficient of dx_i in dz_k.
    zeta: Vec<Vec<C64>>,
}

impl CMapExpr for LinearChartExpr {
    fn in_dim(&self) -> usize {
        self.center.len()
    }
    fn out_dim(&self) -> usize {
        self.zeta.len()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        self.zeta
            .iter()
            .map(|row| {
                let mut acc = Cx::<S>::zero();
                for ((xi, ci), co) in x.iter().zip(&self.center).zip(row) {
                    let d = xi.sub(&S::from_f64(*ci));
                    acc = acc.add(&Cx::from_c64(co).mul_s(&d));
                }
                acc
            })
            .collect()
    }
}

struct QuadPerturbedExpr {
    base: CMap,
    /// per output j: terms (coefficient, k, l) adding c * z_k * z_l.
    quad: Vec<Vec<(C64, usize, usize)>>,
}

impl CMapExpr for QuadPerturbedExpr {
    fn in_dim(&self) -> usize {
        self.base.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.base.out_dim()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        let z = self.base.eval_jets(x);
        self.quad
            .iter()
            .enumerate()
            .map(|(j, terms)| {
                let mut acc = z[j].clone();
                for (c, k, l) in terms {
                    acc = acc.add(&Cx::from_c64(c).mul(&z[*k]).mul(&z[*l]));
                }
                acc
            })
            .collect()
    }
}

struct MixedExpr {
    base: CMap,
    /// unitary (or at least invertible) mixing matrix, rows index outputs.
    u: Vec<Vec<C64>>,
}

impl CMapExpr for MixedExpr {
    fn in_dim(&self) -> usize {
        self.base.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.u.len()
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> Vec<Cx<S>>
    where
        Jet<S>: JetScalar,
    {
        let z = self.base.eval_jets(x);
        self.u
            .iter()
            .map(|row| {
                let mut acc = Cx::<S>::zero();
                for (c, zk) in row.iter().zip(&z) {
                    acc = acc.add(&Cx::from_c64(c).mul(zk));
                }
                acc
            })
            .collect()
    }
}

impl CoordinateChart {
    /// Linear chart from a basis of the (1,0) cotangent space at `center`.
    pub fn adapted(structure: &AlmostComplexStructure, center: &[f64]) -> Result<Self> {
        let n = structure.n();
        let dim = 2 * n;
        if center.len() != dim {
            return Err(Error::DimensionMismatch);
        }
        let j = structure.j_value(center)?;
        // candidate (1,0) covectors v_i = e_i - i J^T e_i = 2 P10 e_i,
        // preferring odd real slots so the standard structure gives dz_j
        let cand = |i: usize| -> Vec<C64> {
            (0..dim)
                .map(|k| C64 {
                    re: if k == i { 1.0 } else { 0.0 },
                    im: -j.at(i, k),
                })
                .collect()
        };
        let order: Vec<usize> = (0..n)
            .map(|k| 2 * k)
            .chain((0..n).map(|k| 2 * k + 1))
            .collect();
        let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(n);
        for idx in order {
            if chosen.len() == n {
                break;
            }
            let mut v = cand(idx);
            // project out already chosen directions (complex Gram-Schmidt)
            for c in &chosen {
                let mut dot = C64::ZERO;
                let mut nrm = 0.0;
                for (a, b) in c.iter().zip(&v) {
                    dot = dot.add(&a.conj().mul(b));
                    nrm += a.norm_sqr();
                }
                let f = dot.scale(1.0 / nrm);
                for (a, b) in c.iter().zip(v.iter_mut()) {
                    *b = b.sub(&a.mul(&f));
                }
            }
            let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            // columns of 2 P10 have norm sqrt(2); keep ones with real content
            if norm > 0.7 {
                let scale = std::f64::consts::SQRT_2 / norm;
                chosen.push(v.iter().map(|c| c.scale(scale)).collect());
            }
        }
        if chosen.len() < n {
            return Err(Error::DegenerateEigenspace {
                defect: (n - chosen.len()) as f64,
            });
        }
        // real differential must be invertible
        let mut rd = vec![0.0; dim * dim];
        for (k, row) in chosen.iter().enumerate() {
            for i in 0..dim {
                rd[(2 * k) * dim + i] = row[i].re;
                rd[(2 * k + 1) * dim + i] = row[i].im;
            }
        }
        let det = crate::linalg::det_f64(dim, &rd);
        if det.abs() < 1e-8 {
            return Err(Error::DegenerateEigenspace { defect: det.abs() });
        }
        Ok(CoordinateChart {
            map: CMap::new(LinearChartExpr {
                center: center.to_vec(),
                zeta: chosen,
            }),
            center: center.to_vec(),
            n,
        })
    }

    /// Chart with quadratic terms added: z'_j = z_j + sum c z_k z_l.
    /// Quadratic terms keep the chart adapted (their dbar defect is O(|z|^2)).
    pub fn perturbed(&self, quad: Vec<Vec<(C64, usize, usize)>>) -> Self {
        assert_eq!(quad.len(), self.n);
        CoordinateChart {
            map: CMap::new(QuadPerturbedExpr {
                base: self.map.clone(),
                quad,
            }),
            center: self.center.clone(),
            n: self.n,
        }
    }

    /// Chart mixed by a constant invertible matrix: z' = U z.
    pub fn mixed(&self, u: Vec<Vec<C64>>) -> Self {
        assert_eq!(u.len(), self.n);
        CoordinateChart {
            map: CMap::new(MixedExpr {
                base: self.map.clone(),
                u,
            }),
            center: self.center.clone(),
            n: self.n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn map(&self) -> &CMap {
        &self.map
    }

    pub fn z_values(&self, x: &[f64]) -> Vec<C64> {
        self.map.values(x)
    }

    /// |z(x)|^2 as a scalar map; the squared chart radius.
    pub fn radius_sq(&self) -> CMap {
        CMap::new(AbsSqFn {
            map: self.map.clone(),
        })
    }

    pub fn radius_sq_at(&self, x: &[f64]) -> f64 {
        self.z_values(x).iter().map(|z| z.norm_sqr()).sum()
    }

    /// The covectors dbar_J z_j at x (zero at the center for adapted charts).
    pub fn dbar_z(&self, structure: &AlmostComplexStructure, x: &[f64]) -> Vec<Vec<C64>> {
        let jm = structure.j_at(x);
        let jets = seed(x);
        let zs = self.map.eval_jets(&jets);
        zs.iter()
            .map(|z| {
                let du: Vec<C64> = (0..x.len())
                    .map(|m| C64 {
                        re: z.re.d(m),
                        im: z.im.d(m),
                    })
                    .collect();
                project_01_covector(&jm, &du)
            })
            .collect()
    }

    /// max_j |dbar_J z_j(x)| (sup over coefficient entries).
    pub fn dbar_residual(&self, structure: &AlmostComplexStructure, x: &[f64]) -> f64 {
        self.dbar_z(structure, x)
            .iter()
            .flat_map(|cov| cov.iter().map(|c| c.abs()))
            .fold(0.0, f64::max)
    }

    /// beta_1 = (i/2) sum_j del_J z_j ^ conj(del_J z_j) as a field.
    pub fn beta1_field(&self, structure: &AlmostComplexStructure) -> FormField {
        FormField::new(Beta1Expr {
            map: self.map.clone(),
            structure: structure.clone(),
        })
    }

    /// Validation report for the chart invariants.
    pub fn validate(
        &self,
        structure: &AlmostComplexStructure,
        sampler: &mut Sampler,
        ball_radius: f64,
        samples: usize,
    ) -> ChartReport {
        let center_residual = self.dbar_residual(structure, &self.center);
        let mut ratio_sup = 0.0f64;
        let domain = structure.domain();
        for _ in 0..samples {
            let dir = sampler.unit_vector(self.dim());
            let r = sampler.uniform(0.05 * ball_radius, ball_radius);
            let x: Vec<f64> = self
                .center
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + r * d)
                .collect();
            if !domain.contains(&x) {
                continue;
            }
            let dist = r.max(1e-12);
            ratio_sup = ratio_sup.max(self.dbar_residual(structure, &x) / dist);
        }
        ChartReport {
            center_residual,
            ratio_sup,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChartReport {
    /// |dbar_J z_j| at the center (must be ~0).
    pub center_residual: f64,
    /// sup over sampled x of |dbar_J z_j(x)| / |x - center|.
    pub ratio_sup: f64,
}

struct Beta1Expr {
    map: CMap,
    structure: AlmostComplexStructure,
}

impl crate::field::FieldExpr for Beta1Expr {
    fn dim(&self) -> usize {
        self.map.in_dim()
    }
    fn degree(&self) -> usize {
        2
    }
    fn eval<S: JetScalar>(&self, x: &[S]) -> SpForm<S>
    where
        Jet<S>: JetScalar,
        Jet<Jet<S>>: JetScalar,
    {
        let dim = self.map.in_dim();
        let jm = self.structure.j_at(x);
        let jets = seed(x);
        let zs = self.map.eval_jets(&jets);
        let mut out = SpForm::zero(dim);
        for z in &zs {
            let dz: Vec<Cx<S>> = (0..dim).map(|m| Cx::new(z.re.d(m), z.im.d(m))).collect();
            let del = project_10_covector(&jm, &dz);
            let delbar: Vec<Cx<S>> = del.iter().map(|c| c.conj()).collect();
            let t = SpForm::from_covector(dim, &del)
                .mul_i()
                .wedge_covector(&delbar);
            out = out.add(&t);
        }
        out.scale(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::ExteriorValue;
    use crate::structures::{make_standard, make_twisted};

    #[test]
    fn standard_chart_is_identity_z() {
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let z = ch.z_values(&[0.3, -0.2, 0.1, 0.4]);
        assert!((z[0].re - 0.3).abs() < 1e-14 && (z[0].im + 0.2).abs() < 1e-14);
        assert!((z[1].re - 0.1).abs() < 1e-14 && (z[1].im - 0.4).abs() < 1e-14);
        assert!(ch.dbar_residual(&st, &[0.2, 0.5, -0.3, 0.1]) < 1e-13);
    }

    #[test]
    fn twisted_chart_defect_is_linear() {
        let tw = make_twisted(0.1).unwrap();
        let ch = CoordinateChart::adapted(&tw, &[0.0; 4]).unwrap();
        assert!(ch.dbar_residual(&tw, &[0.0; 4]) < 1e-12);
        let mut s = Sampler::new(5);
        let rep = ch.validate(&tw, &mut s, 0.4, 60);
        assert!(rep.center_residual < 1e-12);
        // defect grows like 2 lambda |x|; allow generous constant
        assert!(rep.ratio_sup < 1.0, "ratio {}", rep.ratio_sup);
        assert!(rep.ratio_sup > 1e-3, "twisted chart should have a defect");
    }

    #[test]
    fn perturbed_chart_still_adapted() {
        let tw = make_twisted(0.1).unwrap();
        let base = CoordinateChart::adapted(&tw, &[0.0; 4]).unwrap();
        let ch = base.perturbed(vec![
            vec![(C64 { re: 0.3, im: 0.1 }, 0, 1)],
            vec![(C64 { re: -0.2, im: 0.0 }, 1, 1)],
        ]);
        assert!(ch.dbar_residual(&tw, &[0.0; 4]) < 1e-12);
        let mut s = Sampler::new(6);
        let rep = ch.validate(&tw, &mut s, 0.3, 60);
        assert!(rep.ratio_sup < 2.0);
    }

    #[test]
    fn beta1_standard_is_sum_of_area_forms() {
        let st = make_standard(2);
        let ch = CoordinateChart::adapted(&st, &[0.0; 4]).unwrap();
        let b1 = ch.beta1_field(&st);
        let v = b1.value(&[0.1, 0.2, 0.3, 0.4]);
        // (i/2)(dz1^dz1bar + dz2^dz2bar) = dx1^dy1 + dx2^dy2
        let want = ExteriorValue::basis_covector(4, 0)
            .wedge(&ExteriorValue::basis_covector(4, 1))
            .unwrap()
            .add(
                &ExteriorValue::basis_covector(4, 2)
                    .wedge(&ExteriorValue::basis_covector(4, 3))
                    .unwrap(),
            );
        assert!(v.approx_eq(&want, 1e-13));
    }

    #[test]
    fn chart_radius_matches_euclidean_for_standard() {
        let st = make_standard(1);
        let ch = CoordinateChart::adapted(&st, &[0.0, 0.0]).unwrap();
        assert!((ch.radius_sq_at(&[0.3, 0.4]) - 0.25).abs() < 1e-14);
    }
}

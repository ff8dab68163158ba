//! Tube localization: the numerical surrogate for cutting a current off
//! on a closed subset.
//!
//! <1_A T, psi> is approximated by pairing T against psi multiplied by a
//! smooth cutoff equal to 1 on A and supported in the delta-tube
//! {rho < delta^2}, where rho is a nonnegative function vanishing exactly
//! on A. The cutoff is exact on A at every delta, so the [A]-part of T is
//! captured without bias and the smooth remainder decays with the tube
//! volume; a linear fit in delta extrapolates to the limit. The
//! complementary cutoff realizes trivial-extension pairings.

use crate::current::{Current, Pairing, TestForm};
use crate::error::{Error, Result};
use crate::field::{BumpOfFn, CMap, ExcisionFn};
use crate::linalg::lstsq;
use crate::quadrature::QuadratureConfig;
use crate::scalar::C64;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct TubeGrid {
    pub delta0: f64,
    pub levels: usize,
}

impl Default for TubeGrid {
    fn default() -> Self {
        TubeGrid {
            delta0: 0.3,
            levels: 7,
        }
    }
}

impl TubeGrid {
    pub fn deltas(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|k| self.delta0 * 0.5f64.powi(k as i32))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct TubeMass {
    pub rows: Vec<(f64, Pairing)>,
    pub limit: C64,
    pub err: f64,
}

fn extrapolate(rows: &[(f64, Pairing)]) -> Result<TubeMass> {
    // linear fit v(delta) = v0 + c delta on a trailing window; the last
    // two window extrapolants must agree within 10%
    let fit = |win: &[(f64, Pairing)]| -> (f64, f64) {
        let ones = vec![1.0; win.len()];
        let ds: Vec<f64> = win.iter().map(|(d, _)| *d).collect();
        let re: Vec<f64> = win.iter().map(|(_, p)| p.value.re).collect();
        let im: Vec<f64> = win.iter().map(|(_, p)| p.value.im).collect();
        let cre = lstsq(&[ones.clone(), ds.clone()], &re, None).unwrap_or(vec![re[0], 0.0]);
        let cim = lstsq(&[ones, ds], &im, None).unwrap_or(vec![im[0], 0.0]);
        (cre[0], cim[0])
    };
    let n = rows.len();
    assert!(n >= 4);
    let window = 3usize;
    let e_prev = fit(&rows[n - 1 - window..n - 1]);
    let e_last = fit(&rows[n - window..n]);
    let limit = C64 {
        re: e_last.0,
        im: e_last.1,
    };
    let prev = C64 {
        re: e_prev.0,
        im: e_prev.1,
    };
    let diff = limit.sub(&prev).abs();
    let scale = rows
        .iter()
        .map(|(_, p)| p.value.abs())
        .fold(0.0f64, f64::max);
    let quad_err = rows.iter().map(|(_, p)| p.err).fold(0.0f64, f64::max);
    let floor = 1e-9 + 0.02 * scale + 4.0 * quad_err;
    if diff > 0.1 * limit.abs().max(prev.abs()) && diff > floor {
        return Err(Error::ExtrapolationUnstable {
            rel: 100.0 * diff / limit.abs().max(1e-300),
        });
    }
    Ok(TubeMass {
        rows: rows.to_vec(),
        limit,
        err: diff + quad_err,
    })
}

/// <1_A T, psi> by tube cutoffs around {rho = 0} and extrapolation.
pub fn tube_mass(
    t: &Current,
    rho: &CMap,
    psi: &TestForm,
    grid: &TubeGrid,
    cfg: &QuadratureConfig,
) -> Result<TubeMass> {
    let mut rows = Vec::with_capacity(grid.levels);
    for delta in grid.deltas() {
        let cutoff = CMap::new(BumpOfFn {
            f: rho.clone(),
            scale: 1.0 / (delta * delta),
        });
        let field = psi.field.scaled_by(vec![cutoff]);
        let rho_hint = rho.clone();
        let r = t.pair_field_in(
            &field,
            &psi.support,
            cfg,
            &[Arc::new(move |x: &[f64]| rho_hint.values(x)[0].re)],
        )?;
        rows.push((delta, r));
    }
    extrapolate(&rows)
}

/// <T restricted away from A, psi>: the trivial-extension pairing using
/// the complementary cutoff 1 - profile(rho/delta^2).
pub fn pair_excised(
    t: &Current,
    rho: &CMap,
    psi: &TestForm,
    grid: &TubeGrid,
    cfg: &QuadratureConfig,
) -> Result<TubeMass> {
    let mut rows = Vec::with_capacity(grid.levels);
    for delta in grid.deltas() {
        let cutoff = CMap::new(ExcisionFn {
            f: rho.clone(),
            scale: 1.0 / (delta * delta),
        });
        let field = psi.field.scaled_by(vec![cutoff]);
        let rho_hint = rho.clone();
        let r = t.pair_field_in(
            &field,
            &psi.support,
            cfg,
            &[Arc::new(move |x: &[f64]| rho_hint.values(x)[0].re)],
        )?;
        rows.push((delta, r));
    }
    extrapolate(&rows)
}

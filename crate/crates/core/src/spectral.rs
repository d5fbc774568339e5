//! Spectral and time-domain Granger causality from any driver subset to a
//! target, computed on reduced state-space models.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PdgcError, Result};
use crate::series::{Band, FrequencyGrid};
use crate::state_space::{reduce_ss, spectral_density, ReducedSsModel, Resolvent, StateSpaceModel};

/// Relative window below 1 in which a log-ratio argument is clamped to 1.
const LOG_CLAMP: f64 = 1e-12;

/// Values of a real function sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    grid: Arc<FrequencyGrid>,
    values: Vec<f64>,
}

impl SpectralFunction {
    pub fn new(grid: Arc<FrequencyGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PdgcError::Argument(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PdgcError::Numerical(format!(
                "non-finite spectral value at ω = {}",
                grid.omegas()[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<FrequencyGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_grid(other), "spectral functions on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn min(&self, other: &Self) -> Self {
        self.zip_with(other, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs())
            .values
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// `(1/π)·∫ f dω` over the band (or `[0, π]`), trapezoidal on the grid
    /// with linear interpolation at band edges.
    pub fn integrate(&self, band: Option<&Band>) -> Result<GcValue> {
        let (lo, hi, name) = match band {
            None => (0.0, std::f64::consts::PI, WHOLE_BAND.to_string()),
            Some(b) => {
                b.validate(self.grid.fs())?;
                let hi = self.grid.to_omega(b.f_hi).min(std::f64::consts::PI);
                (self.grid.to_omega(b.f_lo), hi, b.name.clone())
            }
        };
        let value = trapezoid(self.grid.omegas(), &self.values, lo, hi)? / std::f64::consts::PI;
        Ok(GcValue { value, band: name })
    }
}

pub const WHOLE_BAND: &str = "whole";

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        i if i >= xs.len() => xs.len() - 2,
        i => i - 1,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Trapezoidal integral of the piecewise-linear interpolant over `[lo, hi]`.
fn trapezoid(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let first = xs[0];
    let last = xs[xs.len() - 1];
    if !(lo < hi) || lo < first || hi > last {
        return Err(PdgcError::Argument(format!(
            "integration range [{lo}, {hi}] does not intersect the grid [{first}, {last}]"
        )));
    }
    let mut px = lo;
    let mut py = interpolate(xs, ys, lo);
    let mut acc = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= lo {
            continue;
        }
        if x >= hi {
            break;
        }
        acc += 0.5 * (x - px) * (y + py);
        px = x;
        py = y;
    }
    let hy = interpolate(xs, ys, hi);
    acc += 0.5 * (hi - px) * (hy + py);
    Ok(acc)
}

/// Granger causality integrated over one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcValue {
    pub value: f64,
    pub band: String,
}

/// How zero-lag correlation between driver and target innovations enters the
/// spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroLag {
    /// Driver innovations conditioned on the target innovation (`Σ̃₁`).
    Partialled,
    /// Raw driver innovation covariance (`Σ₁`).
    Ignored,
}

/// Precomputed resolvent of one state-space model on one grid, reused for
/// every driver subset.
pub struct SpectralContext<'a> {
    ss: &'a StateSpaceModel,
    grid: Arc<FrequencyGrid>,
    resolvent: Resolvent,
}

impl<'a> SpectralContext<'a> {
    pub fn new(ss: &'a StateSpaceModel, grid: Arc<FrequencyGrid>) -> Result<Self> {
        let resolvent = Resolvent::new(ss, &grid)?;
        Ok(Self { ss, grid, resolvent })
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn model(&self) -> &StateSpaceModel {
        self.ss
    }

    pub fn spectral_gc(&self, target: usize, drivers: &[usize]) -> Result<SpectralFunction> {
        self.spectral_gc_with(target, drivers, ZeroLag::Partialled)
    }

    pub fn spectral_gc_with(&self, target: usize, drivers: &[usize], mode: ZeroLag) -> Result<SpectralFunction> {
        let reduced = reduce_for(self.ss, target, drivers)?;
        self.spectral_gc_reduced(&reduced, mode)
    }

    /// Spectral GC into the last channel of `reduced` from all the others.
    pub fn spectral_gc_reduced(&self, reduced: &ReducedSsModel, mode: ZeroLag) -> Result<SpectralFunction> {
        let n = reduced.dim() - 1;
        let cov = match mode {
            ZeroLag::Partialled => reduced.partial_cov.clone(),
            ZeroLag::Ignored => reduced.driver_cov(),
        };
        let cov: DMatrix<Complex64> = cov.map(|x| Complex64::new(x, 0.0));
        let mut values = Vec::with_capacity(self.grid.len());
        for (i, &w) in self.grid.omegas().iter().enumerate() {
            let h = self.resolvent.transfer(reduced, i);
            let p_y = spectral_density(&h, &reduced.sigma_w)[(n, n)].re;
            let h21 = h.view((n, 0), (1, n));
            let lagged = (h21 * &cov * h21.adjoint())[(0, 0)].re;
            values.push(log_ratio(p_y, p_y - lagged, w)?);
        }
        SpectralFunction::new(self.grid.clone(), values)
    }
}

fn log_ratio(num: f64, den: f64, w: f64) -> Result<f64> {
    if !(den > 0.0) || !(num > 0.0) {
        return Err(PdgcError::Numerical(format!(
            "non-positive spectral denominator at ω = {w} (P_Y = {num:e}, residual = {den:e})"
        )));
    }
    let ratio = num / den;
    if ratio >= 1.0 {
        Ok(ratio.ln())
    } else if ratio >= 1.0 - LOG_CLAMP {
        Ok(0.0)
    } else {
        Err(PdgcError::Numerical(format!(
            "spectral GC argument {ratio} below 1 at ω = {w}"
        )))
    }
}

fn check_roles(m: usize, target: usize, drivers: &[usize]) -> Result<()> {
    if target >= m {
        return Err(PdgcError::Argument(format!("target {target} out of range (M = {m})")));
    }
    if drivers.contains(&target) {
        return Err(PdgcError::Argument("target listed among drivers".into()));
    }
    Ok(())
}

fn reduce_for(ss: &StateSpaceModel, target: usize, drivers: &[usize]) -> Result<ReducedSsModel> {
    check_roles(ss.n_channels(), target, drivers)?;
    let mut idx = drivers.to_vec();
    idx.push(target);
    reduce_ss(ss, &idx)
}

/// Spectral GC from `drivers` (non-empty) to `target`.
pub fn spectral_gc(ss: &StateSpaceModel, target: usize, drivers: &[usize], grid: &FrequencyGrid) -> Result<SpectralFunction> {
    if drivers.is_empty() {
        return Err(PdgcError::Argument("spectral GC needs at least one driver".into()));
    }
    SpectralContext::new(ss, Arc::new(grid.clone()))?.spectral_gc(target, drivers)
}

/// `ln(σ²_{Y|Y} / σ²_{Y|Z})` with both variances from reduced models.
pub fn time_gc_from_variance(ss: &StateSpaceModel, target: usize, drivers: &[usize]) -> Result<GcValue> {
    check_roles(ss.n_channels(), target, drivers)?;
    if drivers.is_empty() {
        return Ok(GcValue {
            value: 0.0,
            band: WHOLE_BAND.into(),
        });
    }
    let own = reduce_ss(ss, &[target])?.target_variance();
    let joint = reduce_for(ss, target, drivers)?.target_variance();
    Ok(GcValue {
        value: (own / joint).ln(),
        band: WHOLE_BAND.into(),
    })
}

fn split_rest(drivers: &[usize], subset: &[usize]) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(PdgcError::Argument("conditioning subset must not be empty".into()));
    }
    if let Some(s) = subset.iter().find(|s| !drivers.contains(s)) {
        return Err(PdgcError::Argument(format!("channel {s} is not a driver")));
    }
    Ok(drivers.iter().copied().filter(|d| !subset.contains(d)).collect())
}

/// `F_{subset→Y | rest} = F_{drivers→Y} − F_{rest→Y}`.
pub fn conditional_gc(ss: &StateSpaceModel, target: usize, subset: &[usize], drivers: &[usize]) -> Result<GcValue> {
    let rest = split_rest(drivers, subset)?;
    let all = time_gc_from_variance(ss, target, drivers)?.value;
    let rest = time_gc_from_variance(ss, target, &rest)?.value;
    Ok(GcValue {
        value: all - rest,
        band: WHOLE_BAND.into(),
    })
}

/// Frequency-resolved conditional GC, `f_{drivers→Y}(ω) − f_{rest→Y}(ω)`.
pub fn conditional_spectral_gc(
    ctx: &SpectralContext<'_>,
    target: usize,
    subset: &[usize],
    drivers: &[usize],
) -> Result<SpectralFunction> {
    let rest = split_rest(drivers, subset)?;
    let all = ctx.spectral_gc(target, drivers)?;
    if rest.is_empty() {
        return Ok(all);
    }
    Ok(all.sub(&ctx.spectral_gc(target, &rest)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::var_to_ss;
    use crate::synthetic::{random_stable_var, random_stable_var_with, RandomVarOptions};
    use crate::var::VarModel;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Arc<FrequencyGrid> {
        Arc::new(FrequencyGrid::uniform(n, 1.0).unwrap())
    }

    #[test]
    fn integrate_constant_and_band() {
        let g = grid(1000);
        let f = SpectralFunction::constant(g.clone(), 0.7);
        assert_abs_diff_eq!(f.integrate(None).unwrap().value, 0.7, epsilon = 1e-14);
        let one = SpectralFunction::constant(g, 1.0);
        let lf = Band::new("lf", 0.03, 0.15).unwrap();
        assert_abs_diff_eq!(one.integrate(Some(&lf)).unwrap().value, 0.24, epsilon = 1e-12);
    }

    #[test]
    fn bands_are_additive() {
        let g = grid(777);
        let vals: Vec<f64> = g.omegas().iter().map(|w| (3.0 * w).sin().powi(2) + w).collect();
        let f = SpectralFunction::new(g, vals).unwrap();
        let parts = [
            Band::new("a", 0.0, 0.03).unwrap(),
            Band::new("lf", 0.03, 0.15).unwrap(),
            Band::new("hf", 0.15, 0.4).unwrap(),
            Band::new("b", 0.4, 0.5).unwrap(),
        ];
        let sum: f64 = parts.iter().map(|b| f.integrate(Some(b)).unwrap().value).sum();
        assert_abs_diff_eq!(sum, f.integrate(None).unwrap().value, epsilon = 1e-12);
    }

    #[test]
    fn band_beyond_nyquist_rejected() {
        let f = SpectralFunction::constant(grid(100), 1.0);
        assert!(f.integrate(Some(&Band::new("x", 0.1, 0.6).unwrap())).is_err());
    }

    #[test]
    fn no_coupling_means_no_causality() {
        let a1 = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.1, -0.4, 0.0, 0.0, 0.0, 0.7]);
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.4, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let m = VarModel::unlabeled(vec![a1], s).unwrap();
        let ss = var_to_ss(&m).unwrap();
        let f = spectral_gc(&ss, 2, &[0, 1], &grid(200)).unwrap();
        assert!(f.values().iter().all(|v| v.abs() < 1e-8));
        assert!(time_gc_from_variance(&ss, 2, &[0, 1]).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn chain_whole_band_matches_variance_ratio() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.8, 0.3]);
        let m = VarModel::unlabeled(vec![a1], DMatrix::identity(2, 2)).unwrap();
        let ss = var_to_ss(&m).unwrap();
        let f = spectral_gc(&ss, 1, &[0], &grid(1000)).unwrap();
        let whole = f.integrate(None).unwrap().value;
        let td = time_gc_from_variance(&ss, 1, &[0]).unwrap().value;
        assert!(td > 0.1);
        assert!((whole - td).abs() < 1e-3);
        // Driver is low-pass (pole 0.6): the causal spectrum peaks at DC.
        let v = f.values();
        assert!(v[0] > v[v.len() - 1]);
    }

    #[test]
    fn strictly_causal_model_needs_no_correction() {
        for seed in 0..10 {
            let m = random_stable_var_with(
                3,
                2,
                RandomVarOptions {
                    diagonal_noise: true,
                    ..Default::default()
                },
                seed,
            );
            let ss = var_to_ss(&m).unwrap();
            let ctx = SpectralContext::new(&ss, grid(300)).unwrap();
            let a = ctx.spectral_gc_with(2, &[0, 1], ZeroLag::Partialled).unwrap();
            let b = ctx.spectral_gc_with(2, &[0, 1], ZeroLag::Ignored).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn spectral_gc_non_negative() {
        for seed in 0..20 {
            let m = random_stable_var(4, 2, 0.9, 40 + seed);
            let ss = var_to_ss(&m).unwrap();
            let ctx = SpectralContext::new(&ss, grid(256)).unwrap();
            for drivers in [vec![0], vec![1, 2], vec![0, 1, 2]] {
                let f = ctx.spectral_gc(3, &drivers).unwrap();
                assert!(f.values().iter().all(|&v| v >= -1e-10));
            }
        }
    }

    #[test]
    fn full_gc_is_variance_ratio_of_full_model() {
        let m = random_stable_var(3, 2, 0.9, 3);
        let ss = var_to_ss(&m).unwrap();
        let own = reduce_ss(&ss, &[2]).unwrap().target_variance();
        let expect = (own / m.sigma_u()[(2, 2)]).ln();
        let got = time_gc_from_variance(&ss, 2, &[0, 1]).unwrap().value;
        assert_abs_diff_eq!(got, expect, epsilon = 1e-10);
    }

    #[test]
    fn conditional_on_all_drivers_is_full_gc() {
        let m = random_stable_var(3, 2, 0.9, 12);
        let ss = var_to_ss(&m).unwrap();
        let full = time_gc_from_variance(&ss, 2, &[0, 1]).unwrap().value;
        let cond = conditional_gc(&ss, 2, &[0, 1], &[0, 1]).unwrap().value;
        assert_abs_diff_eq!(full, cond, epsilon = 1e-15);
        let c0 = conditional_gc(&ss, 2, &[0], &[0, 1]).unwrap().value;
        let f1 = time_gc_from_variance(&ss, 2, &[1]).unwrap().value;
        assert_abs_diff_eq!(full, f1 + c0, epsilon = 1e-15);
        assert!(conditional_gc(&ss, 2, &[2], &[0, 1]).is_err());
        assert!(conditional_gc(&ss, 2, &[], &[0, 1]).is_err());
    }

    #[test]
    fn target_among_drivers_rejected() {
        let m = random_stable_var(3, 1, 0.9, 1);
        let ss = var_to_ss(&m).unwrap();
        assert!(spectral_gc(&ss, 1, &[1, 0], &grid(32)).is_err());
        assert!(spectral_gc(&ss, 1, &[], &grid(32)).is_err());
    }
}

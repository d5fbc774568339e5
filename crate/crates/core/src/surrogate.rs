//! IAAFT surrogates and percentile significance tests.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{PdgcError, Result};
use crate::series::MultivariateSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n_surrogates: usize,
    pub max_iter: usize,
    /// Early stop once the relative amplitude-spectrum error drops below
    /// this value; 0 disables the check.
    pub tol: f64,
    pub percentile: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            n_surrogates: 100,
            max_iter: 200,
            tol: 0.0,
            percentile: 95.0,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_surrogates < 20 {
            return Err(PdgcError::Argument(format!(
                "at least 20 surrogates required, got {}",
                self.n_surrogates
            )));
        }
        if !(self.percentile > 50.0 && self.percentile < 100.0) {
            return Err(PdgcError::Argument(format!(
                "percentile must lie in (50, 100), got {}",
                self.percentile
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub measure: String,
    pub observed: f64,
    pub surrogates: Vec<f64>,
    pub threshold: f64,
    pub significant: bool,
}

struct Spectrum {
    planner: FftPlanner<f64>,
    buf: Vec<Complex64>,
}

impl Spectrum {
    fn new(len: usize) -> Self {
        Self {
            planner: FftPlanner::new(),
            buf: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn forward(&mut self, x: &[f64]) -> &mut [Complex64] {
        for (b, &v) in self.buf.iter_mut().zip(x) {
            *b = Complex64::new(v, 0.0);
        }
        self.planner.plan_fft_forward(x.len()).process(&mut self.buf);
        &mut self.buf
    }

    fn inverse_real(&mut self, out: &mut [f64]) {
        let n = out.len();
        self.planner.plan_fft_inverse(n).process(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re / n as f64;
        }
    }
}

fn ranks(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    idx
}

/// Surrogate of `x` with the same sorted values and (approximately) the same
/// amplitude spectrum.
pub fn iaaft(x: &[f64], max_iter: usize, tol: f64, seed: u64) -> Vec<f64> {
    iaaft_with_rng(x, max_iter, tol, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn iaaft_with_rng(x: &[f64], max_iter: usize, tol: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.len();
    let mut spec = Spectrum::new(n);
    let target_amp: Vec<f64> = spec.forward(x).iter().map(|c| c.norm()).collect();
    let amp_norm = target_amp.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut current = x.to_vec();
    current.shuffle(rng);
    let mut order = ranks(&current);
    let mut filtered = vec![0.0; n];

    for _ in 0..max_iter {
        for (c, &a) in spec.forward(&current).iter_mut().zip(&target_amp) {
            let m = c.norm();
            *c = if m > 0.0 { *c * (a / m) } else { Complex64::new(a, 0.0) };
        }
        spec.inverse_real(&mut filtered);

        let next_order = ranks(&filtered);
        for (&pos, &v) in next_order.iter().zip(&sorted) {
            current[pos] = v;
        }
        let unchanged = next_order == order;
        order = next_order;
        if unchanged {
            break;
        }
        if tol > 0.0 && amp_norm > 0.0 {
            let err = spec
                .forward(&current)
                .iter()
                .zip(&target_amp)
                .map(|(c, a)| (c.norm() - a).powi(2))
                .sum::<f64>()
                .sqrt()
                / amp_norm;
            if err < tol {
                break;
            }
        }
    }
    current
}

/// RNG stream for one (replicate, channel) pair under a master seed.
pub fn stream_rng(master: u64, replicate: usize, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((replicate as u64) << 24) | channel as u64);
    rng
}

/// Multivariate surrogate: every channel passed through IAAFT independently.
pub fn surrogate_series(series: &MultivariateSeries, replicate: usize, cfg: &SurrogateConfig) -> Result<MultivariateSeries> {
    let m = series.n_channels();
    let l = series.len();
    let mut data = DMatrix::zeros(m, l);
    for ch in 0..m {
        let mut rng = stream_rng(cfg.seed, replicate, ch);
        let s = iaaft_with_rng(&series.channel(ch), cfg.max_iter, cfg.tol, &mut rng);
        for (t, v) in s.into_iter().enumerate() {
            data[(ch, t)] = v;
        }
    }
    series.with_data(data)
}

/// Value at index `ceil(pct/100 · n) − 1` of the ascending sort.
pub fn percentile_threshold(values: &[f64], percentile: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((percentile / 100.0 * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// Runs `analysis` on the original series and on `cfg.n_surrogates` IAAFT
/// surrogates, and flags each measure whose observed value exceeds the
/// surrogate percentile.
pub fn surrogate_test<F>(
    series: &MultivariateSeries,
    analysis: F,
    cfg: &SurrogateConfig,
) -> Result<BTreeMap<String, SignificanceReport>>
where
    F: Fn(&MultivariateSeries) -> Result<BTreeMap<String, f64>> + Sync,
{
    cfg.validate()?;
    if series.len() < 16 {
        return Err(PdgcError::Argument(format!(
            "surrogates need at least 16 samples, got {}",
            series.len()
        )));
    }
    let observed = analysis(series)?;
    let runs: Vec<Option<BTreeMap<String, f64>>> = (0..cfg.n_surrogates)
        .into_par_iter()
        .map(|r| {
            surrogate_series(series, r, cfg)
                .and_then(|s| analysis(&s))
                .ok()
                .filter(|vals| observed.keys().all(|k| vals.get(k).is_some_and(|v| v.is_finite())))
        })
        .collect();
    let failed = runs.iter().filter(|r| r.is_none()).count();
    if failed * 10 > cfg.n_surrogates {
        return Err(PdgcError::Numerical(format!(
            "{failed} of {} surrogate analyses failed",
            cfg.n_surrogates
        )));
    }
    let ok: Vec<&BTreeMap<String, f64>> = runs.iter().flatten().collect();
    Ok(observed
        .iter()
        .map(|(name, &obs)| {
            let surrogates: Vec<f64> = ok.iter().map(|r| r[name]).collect();
            let threshold = percentile_threshold(&surrogates, cfg.percentile);
            let report = SignificanceReport {
                measure: name.clone(),
                observed: obs,
                surrogates,
                threshold,
                significant: obs > threshold,
            };
            (name.clone(), report)
        })
        .collect())
}

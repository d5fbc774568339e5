//! Vector autoregressive models: least-squares estimation, BIC order
//! selection, stability checks and simulation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PdgcError, Result};
use crate::series::MultivariateSeries;

/// Largest admissible condition number of the regressor Gram matrix.
const MAX_GRAM_CONDITION: f64 = 1e12;

/// `S_n = Σ_k A_k S_{n-k} + U_n` with `Cov(U_n) = sigma_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    coeffs: Vec<DMatrix<f64>>,
    sigma_u: DMatrix<f64>,
    labels: Vec<String>,
}

impl VarModel {
    pub fn new(coeffs: Vec<DMatrix<f64>>, sigma_u: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let m = sigma_u.nrows();
        if coeffs.is_empty() {
            return Err(PdgcError::Argument("VAR order must be at least 1".into()));
        }
        if sigma_u.ncols() != m || coeffs.iter().any(|a| a.shape() != (m, m)) {
            return Err(PdgcError::Argument(format!(
                "coefficient and covariance blocks must all be {m}x{m}"
            )));
        }
        if labels.len() != m {
            return Err(PdgcError::Argument(format!("{} labels for {m} channels", labels.len())));
        }
        let asym = (&sigma_u - sigma_u.transpose()).amax();
        if asym > 1e-10 * sigma_u.amax().max(1.0) {
            return Err(PdgcError::Argument("innovation covariance is not symmetric".into()));
        }
        if sigma_u.clone().cholesky().is_none() {
            return Err(PdgcError::Argument(
                "innovation covariance is not positive definite".into(),
            ));
        }
        Ok(Self {
            coeffs,
            sigma_u,
            labels,
        })
    }

    /// Model with default channel labels.
    pub fn unlabeled(coeffs: Vec<DMatrix<f64>>, sigma_u: DMatrix<f64>) -> Result<Self> {
        let labels = (0..sigma_u.nrows()).map(|i| format!("ch{i}")).collect();
        Self::new(coeffs, sigma_u, labels)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_channels(&self) -> usize {
        self.sigma_u.nrows()
    }

    /// Lag matrices `A_1 .. A_p`.
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn sigma_u(&self) -> &DMatrix<f64> {
        &self.sigma_u
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `[A_1 … A_p]`, an `M × Mp` block row.
    pub fn stacked_coeffs(&self) -> DMatrix<f64> {
        let m = self.n_channels();
        let mut c = DMatrix::zeros(m, m * self.order());
        for (k, a) in self.coeffs.iter().enumerate() {
            c.view_mut((0, k * m), (m, m)).copy_from(a);
        }
        c
    }

    /// Companion (state transition) matrix of size `Mp × Mp`.
    pub fn companion(&self) -> DMatrix<f64> {
        let m = self.n_channels();
        let mp = m * self.order();
        let mut a = DMatrix::zeros(mp, mp);
        a.view_mut((0, 0), (m, mp)).copy_from(&self.stacked_coeffs());
        for i in m..mp {
            a[(i, i - m)] = 1.0;
        }
        a
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VarModelDoc::from(self)).expect("VAR document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: VarModelDoc = serde_json::from_str(text)
            .map_err(|e| PdgcError::Parse { row: e.line(), message: e.to_string() })?;
        doc.try_into()
    }
}

/// JSON layout: each matrix is an array of rows.
#[derive(Debug, Serialize, Deserialize)]
struct VarModelDoc {
    p: usize,
    coeffs: Vec<Vec<Vec<f64>>>,
    sigma_u: Vec<Vec<f64>>,
    labels: Vec<String>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != c) {
        return Err(PdgcError::Argument("ragged matrix in VAR document".into()));
    }
    Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

impl From<&VarModel> for VarModelDoc {
    fn from(m: &VarModel) -> Self {
        Self {
            p: m.order(),
            coeffs: m.coeffs.iter().map(rows_of).collect(),
            sigma_u: rows_of(&m.sigma_u),
            labels: m.labels.clone(),
        }
    }
}

impl TryFrom<VarModelDoc> for VarModel {
    type Error = PdgcError;

    fn try_from(doc: VarModelDoc) -> Result<Self> {
        if doc.coeffs.len() != doc.p {
            return Err(PdgcError::Argument(format!(
                "p = {} but {} lag matrices given",
                doc.p,
                doc.coeffs.len()
            )));
        }
        let coeffs = doc
            .coeffs
            .iter()
            .map(|rows| matrix_from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        VarModel::new(coeffs, matrix_from_rows(&doc.sigma_u)?, doc.labels)
    }
}

/// Least-squares fit of the order-`p` regression over target samples
/// `start..L`; returns `(coeffs, sigma_u)` with divisor `L - start`.
fn fit_ols(series: &MultivariateSeries, p: usize, start: usize) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
    let m = series.n_channels();
    let l = series.len();
    let rows = l - start;
    let cols = m * p;
    let data = series.data();

    let mut x = DMatrix::zeros(rows, cols);
    let mut y = DMatrix::zeros(rows, m);
    for (r, n) in (start..l).enumerate() {
        for k in 1..=p {
            for i in 0..m {
                x[(r, (k - 1) * m + i)] = data[(i, n - k)];
            }
        }
        for i in 0..m {
            y[(r, i)] = data[(i, n)];
        }
    }

    let sv = x.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || (smax / smin).powi(2) > MAX_GRAM_CONDITION {
        return Err(PdgcError::Estimation(format!(
            "regressor Gram matrix is ill-conditioned (condition {:.3e})",
            (smax / smin).powi(2)
        )));
    }

    let qr = x.clone().qr();
    let qty = qr.q().transpose() * &y;
    let b = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| PdgcError::Estimation("singular triangular factor".into()))?;

    let resid = &y - &x * &b;
    let sigma = (resid.transpose() * &resid) / rows as f64;
    let sigma = (&sigma + sigma.transpose()) * 0.5;

    let coeffs = (0..p)
        .map(|k| b.view((k * m, 0), (m, m)).transpose())
        .collect();
    Ok((coeffs, sigma))
}

fn check_length(series: &MultivariateSeries, p: usize) -> Result<()> {
    if p == 0 {
        return Err(PdgcError::Argument("VAR order must be at least 1".into()));
    }
    let m = series.n_channels();
    if series.len() <= m * p + 1 {
        return Err(PdgcError::Argument(format!(
            "series of length {} too short for order {p} with {m} channels (need > {})",
            series.len(),
            m * p + 1
        )));
    }
    Ok(())
}

/// Ordinary least-squares VAR(p) fit over samples `p..L`.
pub fn estimate_var(series: &MultivariateSeries, p: usize) -> Result<VarModel> {
    check_length(series, p)?;
    let (coeffs, sigma) = fit_ols(series, p, p)?;
    VarModel::new(coeffs, sigma, series.labels().to_vec())
        .map_err(|e| PdgcError::Estimation(format!("fitted model invalid: {e}")))
}

/// BIC score for every candidate order, all fitted on the common sample
/// range `p_max..L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub order: usize,
    pub bic: Vec<(usize, f64)>,
}

pub fn bic_scores(series: &MultivariateSeries, p_min: usize, p_max: usize) -> Result<OrderSelection> {
    if p_min == 0 || p_min > p_max {
        return Err(PdgcError::Argument(format!(
            "order range must satisfy 1 <= p_min <= p_max, got {p_min}..{p_max}"
        )));
    }
    check_length(series, p_max)?;
    let m = series.n_channels() as f64;
    let t = (series.len() - p_max) as f64;
    let bic = (p_min..=p_max)
        .into_par_iter()
        .map(|p| {
            let (_, sigma) = fit_ols(series, p, p_max)?;
            let logdet = log_det_spd(&sigma).ok_or_else(|| {
                PdgcError::Estimation(format!("residual covariance singular at order {p}"))
            })?;
            Ok((p, logdet + p as f64 * m * m * t.ln() / t))
        })
        .collect::<Result<Vec<_>>>()?;
    let order = bic
        .iter()
        .fold(None::<(usize, f64)>, |best, &(p, s)| match best {
            Some((_, bs)) if bs <= s => best,
            _ => Some((p, s)),
        })
        .map(|(p, _)| p)
        .expect("non-empty order range");
    Ok(OrderSelection { order, bic })
}

/// BIC-optimal order in `p_min..=p_max`; ties go to the smaller order.
pub fn select_order(series: &MultivariateSeries, p_min: usize, p_max: usize) -> Result<usize> {
    bic_scores(series, p_min, p_max).map(|s| s.order)
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub stable: bool,
    pub spectral_radius: f64,
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn is_stable(model: &VarModel) -> Stability {
    let spectral_radius = spectral_radius(&model.companion());
    Stability {
        stable: spectral_radius < 1.0 - 1e-10,
        spectral_radius,
    }
}

/// Draws `len` samples after discarding `burn_in`, starting from a zero
/// state. Deterministic for a fixed seed.
pub fn simulate_var(model: &VarModel, len: usize, burn_in: usize, seed: u64) -> Result<MultivariateSeries> {
    let stab = is_stable(model);
    if !stab.stable {
        return Err(PdgcError::Argument(format!(
            "cannot simulate an unstable model (spectral radius {:.6})",
            stab.spectral_radius
        )));
    }
    let m = model.n_channels();
    let p = model.order();
    let chol = model
        .sigma_u
        .clone()
        .cholesky()
        .expect("checked at construction")
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = len + burn_in;
    let mut out = DMatrix::zeros(m, total);
    let mut z = DVector::zeros(m);
    for n in 0..total {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut x = &chol * &z;
        for k in 1..=p.min(n) {
            x += &model.coeffs[k - 1] * out.column(n - k);
        }
        out.set_column(n, &x);
    }
    let data = out.columns(burn_in, len).into_owned();
    MultivariateSeries::new(data, model.labels.clone(), 1.0)
}

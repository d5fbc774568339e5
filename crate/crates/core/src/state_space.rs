//! Innovations-form state-space models derived from a VAR, reduced
//! submodels for channel subsets, and their transfer functions and spectra.
//!
//! The full model is
//!
//! ```text
//! S_n      = C x_n + U_n
//! x_{n+1}  = A x_n + K U_n
//! ```
//!
//! with `x_n = [S_{n-1}; …; S_{n-p}]`. A subset `Z = E S` of the observed
//! channels is again an innovations-form model `(A, E C, K_r, Σ_W)` whose gain
//! and innovation covariance come from the stationary Kalman filter, i.e. the
//! fixed point of a discrete algebraic Riccati recursion.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{PdgcError, Result};
use crate::series::FrequencyGrid;
use crate::var::{is_stable, VarModel};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn n_channels(&self) -> usize {
        self.c.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

pub fn var_to_ss(model: &VarModel) -> Result<StateSpaceModel> {
    let stab = is_stable(model);
    if !stab.stable {
        return Err(PdgcError::Argument(format!(
            "VAR model is not stable (spectral radius {:.6})",
            stab.spectral_radius
        )));
    }
    let m = model.n_channels();
    let mp = m * model.order();
    let mut k = DMatrix::zeros(mp, m);
    k.view_mut((0, 0), (m, m)).fill_with_identity();
    Ok(StateSpaceModel {
        a: model.companion(),
        c: model.stacked_coeffs(),
        k,
        v: model.sigma_u().clone(),
    })
}

/// Stopping rule for the Riccati fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct DareOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DareOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Submodel for the channels `indices` (target last).
#[derive(Debug, Clone)]
pub struct ReducedSsModel {
    pub indices: Vec<usize>,
    pub a: DMatrix<f64>,
    pub c_r: DMatrix<f64>,
    pub k_r: DMatrix<f64>,
    pub sigma_w: DMatrix<f64>,
    /// Driver innovation covariance with the target's zero-lag share removed:
    /// `Σ₁ − Σ₁₂ Σ₂₁ / σ₂²`. Empty when the subset is the target alone.
    pub partial_cov: DMatrix<f64>,
    /// Stationary state-error covariance solving the Riccati equation.
    pub riccati: DMatrix<f64>,
    /// Frobenius residual of the Riccati map at `riccati`, relative to
    /// `max(‖P‖, ‖K V Kᵀ‖)`.
    pub dare_residual: f64,
    pub iterations: usize,
}

impl ReducedSsModel {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Innovation variance of the last (target) channel.
    pub fn target_variance(&self) -> f64 {
        let k = self.dim();
        self.sigma_w[(k - 1, k - 1)]
    }

    /// Driver block `Σ₁` of the innovation covariance.
    pub fn driver_cov(&self) -> DMatrix<f64> {
        let n = self.dim() - 1;
        self.sigma_w.view((0, 0), (n, n)).into_owned()
    }

    /// Cross covariance `Σ₁₂` between driver and target innovations.
    pub fn cross_cov(&self) -> DMatrix<f64> {
        let n = self.dim() - 1;
        self.sigma_w.view((0, n), (n, 1)).into_owned()
    }
}

struct RiccatiTerms<'a> {
    a: &'a DMatrix<f64>,
    c_r: &'a DMatrix<f64>,
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl RiccatiTerms<'_> {
    /// One step of the map; returns `(P', Σ_W, A P C_rᵀ + S)` at the input P.
    fn step(&self, p: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let pct = p * self.c_r.transpose();
        let apc = self.a * &pct + &self.s;
        let sigma = self.c_r * &pct + &self.r;
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            PdgcError::Numerical("reduced innovation covariance is not positive definite".into())
        })?;
        let gain_t = chol.solve(&apc.transpose());
        let mut next = self.a * p * self.a.transpose() + &self.q - &apc * gain_t;
        next = (&next + next.transpose()) * 0.5;
        Ok((next, sigma, apc))
    }
}

/// Reduced model for `indices` (distinct channels, target last).
pub fn reduce_ss(ss: &StateSpaceModel, indices: &[usize]) -> Result<ReducedSsModel> {
    reduce_ss_with(ss, indices, DareOptions::default())
}

pub fn reduce_ss_with(ss: &StateSpaceModel, indices: &[usize], opts: DareOptions) -> Result<ReducedSsModel> {
    let m = ss.n_channels();
    if indices.is_empty() {
        return Err(PdgcError::Argument("channel subset must not be empty".into()));
    }
    for (i, &ch) in indices.iter().enumerate() {
        if ch >= m {
            return Err(PdgcError::Argument(format!("channel {ch} out of range (M = {m})")));
        }
        if indices[..i].contains(&ch) {
            return Err(PdgcError::Argument(format!("channel {ch} listed twice")));
        }
    }
    let kr = indices.len();
    let n = ss.state_dim();
    let c_r = DMatrix::from_fn(kr, n, |i, j| ss.c[(indices[i], j)]);
    let kv = &ss.k * &ss.v;
    // V Eᵀ picks the selected columns of V.
    let v_et = DMatrix::from_fn(m, kr, |i, j| ss.v[(i, indices[j])]);
    let terms = RiccatiTerms {
        a: &ss.a,
        c_r: &c_r,
        q: &kv * ss.k.transpose(),
        s: &ss.k * &v_et,
        r: DMatrix::from_fn(kr, kr, |i, j| ss.v[(indices[i], indices[j])]),
    };

    let mut p = DMatrix::zeros(n, n);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    // Floor for the relative test: P can sit at zero up to rounding.
    let floor = terms.q.norm();
    while iterations < opts.max_iter {
        let (next, _, _) = terms.step(&p)?;
        iterations += 1;
        let change = (&next - &p).norm();
        let scale = next.norm().max(floor);
        p = next;
        last_change = if scale > 0.0 { change / scale } else { change };
        if change <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PdgcError::Numerical(format!(
            "Riccati iteration did not converge in {} iterations (relative change {last_change:.3e})",
            opts.max_iter
        )));
    }

    let (next, sigma_w, apc) = terms.step(&p)?;
    let dare_residual = (&next - &p).norm() / p.norm().max(floor);
    let chol = sigma_w.clone().cholesky().ok_or_else(|| {
        PdgcError::Numerical("reduced innovation covariance is not positive definite".into())
    })?;
    let k_r = chol.solve(&apc.transpose()).transpose();

    let partial_cov = partial_covariance(&sigma_w);
    Ok(ReducedSsModel {
        indices: indices.to_vec(),
        a: ss.a.clone(),
        c_r,
        k_r,
        sigma_w,
        partial_cov,
        riccati: p,
        dare_residual,
        iterations,
    })
}

/// `Σ₁ − Σ₁₂ Σ₂₁ / σ₂²` for a covariance whose last row/column is the target.
pub fn partial_covariance(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sigma.nrows() - 1;
    let s1 = sigma.view((0, 0), (n, n));
    let s12 = sigma.view((0, n), (n, 1));
    let s2 = sigma[(n, n)];
    let out = s1 - s12 * s12.transpose() / s2;
    (&out + out.transpose()) * 0.5
}

/// `C (e^{jω} I − A)⁻¹` for every channel of the full model at every grid
/// point; shared by all reduced models since they keep `A` and select rows
/// of `C`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    rows: Vec<DMatrix<Complex64>>,
}

impl Resolvent {
    pub fn new(ss: &StateSpaceModel, grid: &FrequencyGrid) -> Result<Self> {
        Self::for_rows(&ss.a, &ss.c, grid)
    }

    fn for_rows(a: &DMatrix<f64>, c: &DMatrix<f64>, grid: &FrequencyGrid) -> Result<Self> {
        let n = a.nrows();
        let a_t: DMatrix<Complex64> = a.transpose().map(|x| Complex64::new(x, 0.0));
        let c_t: DMatrix<Complex64> = c.transpose().map(|x| Complex64::new(x, 0.0));
        let rows = grid
            .omegas()
            .iter()
            .map(|&w| {
                let z = Complex64::from_polar(1.0, w);
                let mut m = -a_t.clone();
                for i in 0..n {
                    m[(i, i)] += z;
                }
                m.lu()
                    .solve(&c_t)
                    .map(|x| x.transpose())
                    .ok_or_else(|| PdgcError::Numerical(format!("singular resolvent at ω = {w}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `H(ω_i) = I + C_r (e^{jω_i} I − A)⁻¹ K_r` for the reduced model.
    pub fn transfer(&self, r: &ReducedSsModel, i: usize) -> DMatrix<Complex64> {
        let kr = r.dim();
        let full = &self.rows[i];
        let sel = DMatrix::from_fn(kr, full.ncols(), |a, b| full[(r.indices[a], b)]);
        let gain: DMatrix<Complex64> = r.k_r.map(|x| Complex64::new(x, 0.0));
        let mut h = sel * gain;
        for d in 0..kr {
            h[(d, d)] += Complex64::new(1.0, 0.0);
        }
        h
    }
}

/// Transfer matrix of the reduced model at every grid point.
pub fn transfer_function(r: &ReducedSsModel, grid: &FrequencyGrid) -> Result<Vec<DMatrix<Complex64>>> {
    let res = Resolvent::for_rows(&r.a, &r.c_r, grid)?;
    let local = ReducedSsModel {
        indices: (0..r.dim()).collect(),
        ..r.clone()
    };
    Ok((0..grid.len()).map(|i| res.transfer(&local, i)).collect())
}

/// `H Σ_W H*` at one frequency.
pub fn spectral_density(h: &DMatrix<Complex64>, sigma_w: &DMatrix<f64>) -> DMatrix<Complex64> {
    let s: DMatrix<Complex64> = sigma_w.map(|x| Complex64::new(x, 0.0));
    let out = h * s * h.adjoint();
    (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Power spectral density matrix of the reduced process at every grid point.
pub fn psd(r: &ReducedSsModel, grid: &FrequencyGrid) -> Result<Vec<DMatrix<Complex64>>> {
    Ok(transfer_function(r, grid)?
        .iter()
        .map(|h| spectral_density(h, &r.sigma_w))
        .collect())
}

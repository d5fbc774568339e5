//! Ground-truth VAR scenarios with planted unique, redundant and
//! synergistic structure, plus a seeded generator of random stable models.
//!
//! Every scenario has three channels ordered `[x1, x2, y]`; `y` is the target.
//!
//! | name                   | structure                                                          |
//! |------------------------|--------------------------------------------------------------------|
//! | `unidirectional`       | `x1` (oscillator at 0.1 c/s) drives `y` at lag 1 with gain 0.8; `x2` independent AR(1) |
//! | `common-drive`         | `x1` oscillator at 0.1 c/s, `x2 = x1` delayed by one sample plus 1% noise, `y` reads `x1` at lag 2 |
//! | `collider-interaction` | `x1`, `x2` white with innovation correlation 0.9; `y` reads `2·(x1 − x2)` at lag 1 |

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{PdgcError, Result};
use crate::series::MultivariateSeries;
use crate::var::{simulate_var, spectral_radius, VarModel};

/// Coarse component expected to dominate a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    Unique(usize),
    Redundant,
    Synergistic,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub dominant: Dominant,
    /// Band (cycles/sample) where the dominant component is assessed.
    pub band: (f64, f64),
    build: fn() -> VarModel,
}

impl Scenario {
    pub fn model(&self) -> VarModel {
        (self.build)()
    }

    pub fn target(&self) -> usize {
        2
    }

    pub fn drivers(&self) -> [usize; 2] {
        [0, 1]
    }
}

const LABELS: [&str; 3] = ["x1", "x2", "y"];

fn labels() -> Vec<String> {
    LABELS.iter().map(|s| s.to_string()).collect()
}

fn oscillator(radius: f64, freq: f64) -> (f64, f64) {
    (2.0 * radius * (2.0 * PI * freq).cos(), -radius * radius)
}

fn unidirectional() -> VarModel {
    let (o1, o2) = oscillator(0.8, 0.1);
    #[rustfmt::skip]
    let a1 = DMatrix::from_row_slice(3, 3, &[
        o1,  0.0, 0.0,
        0.0, 0.5, 0.0,
        0.8, 0.0, 0.5,
    ]);
    #[rustfmt::skip]
    let a2 = DMatrix::from_row_slice(3, 3, &[
        o2,  0.0, 0.0,
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
    ]);
    VarModel::new(vec![a1, a2], DMatrix::identity(3, 3), labels()).expect("valid scenario")
}

fn common_drive() -> VarModel {
    let (o1, o2) = oscillator(0.9, 0.1);
    #[rustfmt::skip]
    let a1 = DMatrix::from_row_slice(3, 3, &[
        o1,  0.0, 0.0,
        1.0, 0.0, 0.0,
        0.0, 0.0, 0.3,
    ]);
    #[rustfmt::skip]
    let a2 = DMatrix::from_row_slice(3, 3, &[
        o2,  0.0, 0.0,
        0.0, 0.0, 0.0,
        0.5, 0.0, 0.0,
    ]);
    let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.01, 1.0]));
    VarModel::new(vec![a1, a2], sigma, labels()).expect("valid scenario")
}

fn collider_interaction() -> VarModel {
    #[rustfmt::skip]
    let a1 = DMatrix::from_row_slice(3, 3, &[
        0.0,  0.0, 0.0,
        0.0,  0.0, 0.0,
        2.0, -2.0, 0.3,
    ]);
    #[rustfmt::skip]
    let sigma = DMatrix::from_row_slice(3, 3, &[
        1.0, 0.9, 0.0,
        0.9, 1.0, 0.0,
        0.0, 0.0, 1.0,
    ]);
    VarModel::new(vec![a1], sigma, labels()).expect("valid scenario")
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "unidirectional",
            description: "x1 -> y only; x2 independent",
            dominant: Dominant::Unique(0),
            band: (0.0, 0.5),
            build: unidirectional,
        },
        Scenario {
            name: "common-drive",
            description: "x1 and its delayed noisy copy x2 carry the same 0.1 c/s oscillation into y",
            dominant: Dominant::Redundant,
            band: (0.05, 0.15),
            build: common_drive,
        },
        Scenario {
            name: "collider-interaction",
            description: "y reads the difference of two strongly correlated drivers",
            dominant: Dominant::Synergistic,
            band: (0.0, 0.5),
            build: collider_interaction,
        },
    ]
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            let known: Vec<_> = scenarios().iter().map(|s| s.name).collect();
            PdgcError::Argument(format!("unknown scenario '{name}' (known: {})", known.join(", ")))
        })
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioParams {
    pub len: usize,
    pub burn_in: usize,
    pub fs: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            len: 250,
            burn_in: 500,
            fs: 1.0,
        }
    }
}

/// Simulated series together with the model that generated it.
pub fn scenario(name: &str, params: ScenarioParams, seed: u64) -> Result<(MultivariateSeries, VarModel)> {
    let model = find_scenario(name)?.model();
    let sim = simulate_var(&model, params.len, params.burn_in, seed)?;
    let series = MultivariateSeries::new(sim.data().clone(), model.labels().to_vec(), params.fs)?;
    Ok((series, model))
}

/// Options for [`random_stable_var`].
#[derive(Debug, Clone, Copy)]
pub struct RandomVarOptions {
    pub max_radius: f64,
    pub coeff_scale: f64,
    pub diagonal_noise: bool,
}

impl Default for RandomVarOptions {
    fn default() -> Self {
        Self {
            max_radius: 0.9,
            coeff_scale: 0.4,
            diagonal_noise: false,
        }
    }
}

/// Random VAR(p) whose companion spectral radius is at most `max_radius`.
pub fn random_stable_var(m: usize, p: usize, max_radius: f64, seed: u64) -> VarModel {
    random_stable_var_with(
        m,
        p,
        RandomVarOptions {
            max_radius,
            ..Default::default()
        },
        seed,
    )
}

pub fn random_stable_var_with(m: usize, p: usize, opts: RandomVarOptions, seed: u64) -> VarModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut coeffs: Vec<DMatrix<f64>> = (0..p)
        .map(|_| DMatrix::from_fn(m, m, |_, _| opts.coeff_scale * draw()))
        .collect();
    let b = DMatrix::from_fn(m, m, |_, _| draw());
    let mut sigma = &b * b.transpose() / m as f64 + DMatrix::identity(m, m) * 0.2;
    if opts.diagonal_noise {
        sigma = DMatrix::from_diagonal(&sigma.diagonal());
    }
    let labels: Vec<String> = (0..m).map(|i| format!("ch{i}")).collect();
    let mut model = VarModel::new(coeffs.clone(), sigma.clone(), labels.clone()).expect("valid draw");
    let rho = spectral_radius(&model.companion());
    if rho > opts.max_radius {
        // Scaling lag k by c^k scales every companion eigenvalue by c.
        let c = opts.max_radius / rho;
        for (k, a) in coeffs.iter_mut().enumerate() {
            *a *= c.powi(k as i32 + 1);
        }
        model = VarModel::new(coeffs, sigma, labels).expect("valid draw");
    }
    model
}

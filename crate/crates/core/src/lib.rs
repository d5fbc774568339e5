//! Partial decomposition of spectral Granger causality.
//!
//! A VAR model fitted to a multivariate series is recast in state-space form;
//! reduced models for every driver subset give frequency-resolved Granger
//! causality towards a target, which is split over the redundancy lattice
//! into unique, redundant and synergistic parts and integrated over bands.
//! Significance is assessed against IAAFT surrogates.

pub mod decomposition;
pub mod error;
pub mod lattice;
pub mod series;
pub mod spectral;
pub mod state_space;
pub mod surrogate;
pub mod synthetic;
pub mod var;

pub use decomposition::{decompose, integrate_band, PdgcResult, PdgcSummary};
pub use error::{PdgcError, Result};
pub use lattice::{build_lattice, coarse_grain, moebius_invert, spectral_redundancy, Atom, CoarseClass, GcLattice};
pub use series::{load_csv, preprocess, Band, FrequencyGrid, MultivariateSeries};
pub use spectral::{conditional_gc, spectral_gc, time_gc_from_variance, GcValue, SpectralContext, SpectralFunction};
pub use state_space::{psd, reduce_ss, transfer_function, var_to_ss, ReducedSsModel, StateSpaceModel};
pub use surrogate::{iaaft, surrogate_test, SignificanceReport, SurrogateConfig};
pub use synthetic::scenario;
pub use var::{estimate_var, is_stable, select_order, simulate_var, VarModel};

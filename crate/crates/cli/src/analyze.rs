//! The `analyze` pipeline and its `result.json` layout.

use std::collections::BTreeMap;
use std::path::Path;

use pdgc::lattice::members;
use pdgc::state_space::reduce_ss;
use pdgc::surrogate::surrogate_test;
use pdgc::var::{bic_scores, OrderSelection};
use pdgc::{
    decompose, estimate_var, is_stable, load_csv, preprocess, var_to_ss, FrequencyGrid, MultivariateSeries, PdgcSummary,
    SignificanceReport,
};
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub n_samples: usize,
    /// Analysed channels, drivers first and the target last.
    pub channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub order: usize,
    pub stable: bool,
    pub spectral_radius: f64,
    pub sigma_u: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionInfo {
    pub channels: Vec<String>,
    pub dare_residual: f64,
    pub iterations: usize,
    pub target_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_dare_residual: f64,
    pub reductions: Vec<ReductionInfo>,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub settings: Settings,
    pub data: DataInfo,
    pub order_selection: OrderSelection,
    pub model: ModelInfo,
    pub diagnostics: Diagnostics,
    pub decomposition: PdgcSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<BTreeMap<String, SignificanceReport>>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("malformed result.json: {e}")))
    }
}

/// Rendered outputs of one run, not yet written anywhere.
pub struct AnalysisOutput {
    pub report: AnalysisReport,
    pub spectra_csv: Vec<u8>,
}

fn select_channels(series: &MultivariateSeries, settings: &Settings) -> CliResult<MultivariateSeries> {
    let find = |name: &str| {
        series.channel_index(name).ok_or_else(|| {
            CliError::Config(format!(
                "channel '{name}' not found in input (available: {})",
                series.labels().join(", ")
            ))
        })
    };
    let mut idx = settings.drivers.iter().map(|d| find(d)).collect::<CliResult<Vec<_>>>()?;
    idx.push(find(&settings.target)?);
    Ok(series.select(&idx)?)
}

fn diagnostics(ss: &pdgc::StateSpaceModel, labels: &[String]) -> CliResult<Diagnostics> {
    let n = labels.len() - 1;
    let mut reductions = Vec::new();
    for mask in 0u16..(1 << n) {
        let mut idx = members(mask);
        idx.push(n);
        let r = reduce_ss(ss, &idx)?;
        reductions.push(ReductionInfo {
            channels: idx.iter().map(|&i| labels[i].clone()).collect(),
            dare_residual: r.dare_residual,
            iterations: r.iterations,
            target_variance: r.target_variance(),
        });
    }
    let max_dare_residual = reductions.iter().map(|r| r.dare_residual).fold(0.0, f64::max);
    Ok(Diagnostics {
        max_dare_residual,
        reductions,
    })
}

/// Runs the whole pipeline in memory.
pub fn run_analysis(settings: &Settings) -> CliResult<AnalysisOutput> {
    let bands = settings.bands()?;
    let raw = load_csv(&settings.input, settings.fs)?;
    let selected = select_channels(&raw, settings)?;
    let series = preprocess(&selected, settings.detrend_cutoff)?;
    let labels = series.labels().to_vec();
    let n = settings.drivers.len();
    let drivers: Vec<usize> = (0..n).collect();
    let grid = FrequencyGrid::uniform(settings.nfreq, settings.fs)?;

    let selection = bic_scores(&series, settings.order_min, settings.order_max)?;
    let order = selection.order;
    let model = estimate_var(&series, order)?;
    let stability = is_stable(&model);
    let ss = var_to_ss(&model)?;
    let result = decompose(&ss, n, &drivers, &grid, &bands)?;
    let summary = result.summary(&settings.target, &settings.drivers)?;
    let diagnostics = diagnostics(&ss, &labels)?;

    let significance = if settings.surrogates > 0 {
        let analysis = |s: &MultivariateSeries| {
            let m = estimate_var(s, order)?;
            let ss = var_to_ss(&m)?;
            decompose(&ss, n, &drivers, &grid, &bands)?.scalar_measures(&settings.drivers)
        };
        Some(surrogate_test(&series, analysis, &settings.surrogate_config())?)
    } else {
        None
    };

    let sigma = model.sigma_u();
    let report = AnalysisReport {
        settings: settings.clone(),
        data: DataInfo {
            n_samples: series.len(),
            channels: labels,
        },
        order_selection: selection,
        model: ModelInfo {
            order,
            stable: stability.stable,
            spectral_radius: stability.spectral_radius,
            sigma_u: sigma.row_iter().map(|r| r.iter().copied().collect()).collect(),
        },
        diagnostics,
        decomposition: summary,
        significance,
    };
    let mut spectra_csv = Vec::new();
    result
        .write_spectra_csv(&mut spectra_csv, &settings.drivers)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(AnalysisOutput { report, spectra_csv })
}

/// Writes `result.json` and `spectra.csv` into `dir`, creating it if needed.
pub fn write_outputs(out: &AnalysisOutput, dir: &Path) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("result.json"), out.report.to_json()).map_err(io)?;
    std::fs::write(dir.join("spectra.csv"), &out.spectra_csv).map_err(io)?;
    Ok(())
}

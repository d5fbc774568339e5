//! End-to-end partial decomposition of the spectral Granger causality from a
//! set of drivers to one target.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PdgcError, Result};
use crate::lattice::{
    build_lattice, coarse_grain, members, moebius_invert, spectral_redundancy, CoarseClass, CoarseComponents,
    GcLattice, SourceSet, MAX_SOURCES,
};
use crate::series::{Band, FrequencyGrid};
use crate::spectral::{SpectralContext, SpectralFunction, WHOLE_BAND};
use crate::state_space::StateSpaceModel;

/// `(1/π)·∫ f dω` over `band`, or over `[0, π]` when `band` is `None`.
pub fn integrate_band(f: &SpectralFunction, band: Option<&Band>) -> Result<crate::spectral::GcValue> {
    f.integrate(band)
}

/// Band name → integrated value, always including [`WHOLE_BAND`].
pub type BandTable = BTreeMap<String, f64>;

#[derive(Debug, Clone)]
pub struct PdgcResult {
    pub target: usize,
    pub drivers: Vec<usize>,
    pub bands: Vec<Band>,
    pub lattice: GcLattice,
    /// Spectral GC from every non-empty driver subset (bitmask over driver
    /// positions).
    pub subset_gc: HashMap<SourceSet, SpectralFunction>,
    pub full: SpectralFunction,
    /// Per-atom redundancy `f^∩`, indexed like `lattice.atoms()`.
    pub redundancy: Vec<SpectralFunction>,
    /// Per-atom value `f^δ`.
    pub atoms: Vec<SpectralFunction>,
    pub coarse: CoarseComponents,
}

/// Spectral GC for every non-empty subset of `drivers`, keyed by bitmask.
pub fn subset_curves(ctx: &SpectralContext<'_>, target: usize, drivers: &[usize]) -> Result<HashMap<SourceSet, SpectralFunction>> {
    let n = drivers.len();
    (1..(1u32 << n))
        .into_par_iter()
        .map(|mask| {
            let mask = mask as SourceSet;
            let chosen: Vec<usize> = members(mask).into_iter().map(|i| drivers[i]).collect();
            ctx.spectral_gc(target, &chosen).map(|f| (mask, f))
        })
        .collect()
}

pub fn decompose(
    ss: &StateSpaceModel,
    target: usize,
    drivers: &[usize],
    grid: &FrequencyGrid,
    bands: &[Band],
) -> Result<PdgcResult> {
    let n = drivers.len();
    if !(1..=MAX_SOURCES).contains(&n) {
        return Err(PdgcError::Argument(format!(
            "between 1 and {MAX_SOURCES} drivers supported, got {n}"
        )));
    }
    for b in bands {
        b.validate(grid.fs())?;
        if b.name == WHOLE_BAND {
            return Err(PdgcError::Argument(format!("band name '{WHOLE_BAND}' is reserved")));
        }
    }
    let lattice = build_lattice(n)?;
    let ctx = SpectralContext::new(ss, Arc::new(grid.clone()))?;
    let subset_gc = subset_curves(&ctx, target, drivers)?;
    let full = subset_gc[&(((1u32 << n) - 1) as SourceSet)].clone();

    let redundancy = lattice
        .atoms()
        .iter()
        .map(|a| spectral_redundancy(a, &subset_gc))
        .collect::<Result<Vec<_>>>()?;
    let atoms = moebius_invert(&lattice, &redundancy)?;
    let coarse = coarse_grain(&lattice, &atoms)?;
    Ok(PdgcResult {
        target,
        drivers: drivers.to_vec(),
        bands: bands.to_vec(),
        lattice,
        subset_gc,
        full,
        redundancy,
        atoms,
        coarse,
    })
}

impl PdgcResult {
    /// Whole-band value plus one entry per configured band.
    pub fn band_table(&self, f: &SpectralFunction) -> Result<BandTable> {
        let mut t = BandTable::new();
        t.insert(WHOLE_BAND.to_string(), f.integrate(None)?.value);
        for b in &self.bands {
            t.insert(b.name.clone(), f.integrate(Some(b))?.value);
        }
        Ok(t)
    }

    /// Spectral GC of the drivers at the given positions (0-based within
    /// `drivers`).
    pub fn subset(&self, positions: &[usize]) -> Option<&SpectralFunction> {
        let mask = positions.iter().fold(0 as SourceSet, |m, &i| m | (1 << i));
        self.subset_gc.get(&mask)
    }

    /// Coarse measures by name: `full`, `unique:<label>`, `redundant`,
    /// `synergistic`.
    pub fn measures(&self, driver_labels: &[String]) -> Vec<(String, &SpectralFunction)> {
        let mut out = vec![("full".to_string(), &self.full)];
        for (label, u) in driver_labels.iter().zip(&self.coarse.unique) {
            out.push((format!("unique:{label}"), u));
        }
        out.push(("redundant".to_string(), &self.coarse.redundant));
        out.push(("synergistic".to_string(), &self.coarse.synergistic));
        out
    }

    /// Flat `measure@band → value` map of the coarse measures.
    pub fn scalar_measures(&self, driver_labels: &[String]) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for (name, f) in self.measures(driver_labels) {
            for (band, v) in self.band_table(f)? {
                out.insert(format!("{name}@{band}"), v);
            }
        }
        Ok(out)
    }

    pub fn summary(&self, target_label: &str, driver_labels: &[String]) -> Result<PdgcSummary> {
        let atoms = self
            .lattice
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Ok(AtomSummary {
                    atom: a.to_string(),
                    class: class_name(a.class(), driver_labels),
                    redundancy: self.band_table(&self.redundancy[i])?,
                    value: self.band_table(&self.atoms[i])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let unique = driver_labels
            .iter()
            .zip(&self.coarse.unique)
            .map(|(l, u)| Ok(DriverTable { driver: l.clone(), values: self.band_table(u)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(PdgcSummary {
            target: target_label.to_string(),
            drivers: driver_labels.to_vec(),
            bands: self
                .bands
                .iter()
                .map(|b| BandSpec { name: b.name.clone(), f_lo: b.f_lo, f_hi: b.f_hi })
                .collect(),
            full: self.band_table(&self.full)?,
            unique,
            redundant: self.band_table(&self.coarse.redundant)?,
            synergistic: self.band_table(&self.coarse.synergistic)?,
            atoms,
        })
    }

    /// Long-format CSV (`frequency_hz,curve,value`) of the full curve, every
    /// atom and the coarse components.
    pub fn write_spectra_csv<W: Write>(&self, w: &mut W, driver_labels: &[String]) -> std::io::Result<()> {
        writeln!(w, "frequency_hz,curve,value")?;
        let hz = self.full.grid().hz();
        let mut curves: Vec<(String, &SpectralFunction)> = vec![("full".into(), &self.full)];
        for (a, f) in self.lattice.atoms().iter().zip(&self.atoms) {
            curves.push((format!("atom:{a}"), f));
        }
        for (label, u) in driver_labels.iter().zip(&self.coarse.unique) {
            curves.push((format!("unique:{label}"), u));
        }
        curves.push(("redundant".into(), &self.coarse.redundant));
        curves.push(("synergistic".into(), &self.coarse.synergistic));
        for (name, f) in curves {
            for (freq, v) in hz.iter().zip(f.values()) {
                writeln!(w, "{freq},{name},{v}")?;
            }
        }
        Ok(())
    }
}

fn class_name(c: CoarseClass, driver_labels: &[String]) -> String {
    match c {
        CoarseClass::Unique(i) => format!("unique:{}", driver_labels[i]),
        CoarseClass::Redundant => "redundant".into(),
        CoarseClass::Synergistic => "synergistic".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSummary {
    pub atom: String,
    pub class: String,
    pub redundancy: BandTable,
    pub value: BandTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverTable {
    pub driver: String,
    pub values: BandTable,
}

/// Band-integrated view of a [`PdgcResult`], suitable for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdgcSummary {
    pub target: String,
    pub drivers: Vec<String>,
    pub bands: Vec<BandSpec>,
    pub full: BandTable,
    pub unique: Vec<DriverTable>,
    pub redundant: BandTable,
    pub synergistic: BandTable,
    pub atoms: Vec<AtomSummary>,
}

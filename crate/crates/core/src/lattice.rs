//! Redundancy lattice over driver subsets: enumeration of atoms (antichains
//! of non-empty source sets), the precedence order, Möbius inversion and the
//! aggregation of atoms into unique, redundant and synergistic components.
//!
//! Source sets are bitmasks over driver positions `0..N`; labels are 1-based,
//! so the mask `0b011` prints as `{12}`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PdgcError, Result};
use crate::spectral::SpectralFunction;

/// Bitmask of driver positions.
pub type SourceSet = u16;

pub const MAX_SOURCES: usize = 4;

fn is_subset(a: SourceSet, b: SourceSet) -> bool {
    a & !b == 0
}

fn set_label(s: SourceSet) -> String {
    (0..16)
        .filter(|i| s & (1 << i) != 0)
        .map(|i| (i + 1).to_string())
        .collect()
}

/// Source positions contained in a mask, ascending.
pub fn members(s: SourceSet) -> Vec<usize> {
    (0..16).filter(|i| s & (1 << i) != 0).collect()
}

/// A non-empty collection of pairwise incomparable source sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    collections: Vec<SourceSet>,
}

impl Atom {
    pub fn new(mut collections: Vec<SourceSet>) -> Result<Self> {
        if collections.is_empty() || collections.contains(&0) {
            return Err(PdgcError::Argument(
                "an atom needs at least one non-empty source set".into(),
            ));
        }
        collections.sort_by_key(|&s| (s.count_ones(), members(s)));
        collections.dedup();
        for (i, &a) in collections.iter().enumerate() {
            for &b in &collections[i + 1..] {
                if is_subset(a, b) || is_subset(b, a) {
                    return Err(PdgcError::Argument(format!(
                        "{{{}}} and {{{}}} are nested",
                        set_label(a),
                        set_label(b)
                    )));
                }
            }
        }
        Ok(Self { collections })
    }

    pub fn collections(&self) -> &[SourceSet] {
        &self.collections
    }

    /// Number of source sets `J`.
    pub fn len(&self) -> usize {
        self.collections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collections.is_empty()
    }

    /// `self ⪯ other`: every set of `other` contains some set of `self`.
    pub fn precedes(&self, other: &Atom) -> bool {
        other
            .collections
            .iter()
            .all(|&b| self.collections.iter().any(|&a| is_subset(a, b)))
    }

    pub fn class(&self) -> CoarseClass {
        let singletons = self.collections.iter().all(|s| s.count_ones() == 1);
        match (self.len(), singletons) {
            (1, true) => CoarseClass::Unique(self.collections[0].trailing_zeros() as usize),
            (_, true) => CoarseClass::Redundant,
            _ => CoarseClass::Synergistic,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.collections {
            write!(f, "{{{}}}", set_label(s))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoarseClass {
    /// Unique to the driver at this (0-based) position.
    Unique(usize),
    Redundant,
    Synergistic,
}

impl CoarseClass {
    pub fn tag(&self) -> &'static str {
        match self {
            CoarseClass::Unique(_) => "U",
            CoarseClass::Redundant => "R",
            CoarseClass::Synergistic => "S",
        }
    }
}

/// All atoms for `N` sources in a bottom-to-top linear extension of `⪯`.
#[derive(Debug, Clone)]
pub struct GcLattice {
    n_sources: usize,
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    /// Strict down-set of every atom (indices of atoms `β ≺ α`).
    below: Vec<Vec<usize>>,
}

/// Antichains of non-empty subsets of `{0..n}`, by depth-first extension in
/// increasing mask order.
fn enumerate_antichains(n: usize) -> Vec<Vec<SourceSet>> {
    fn extend(start: SourceSet, full: SourceSet, chosen: &mut Vec<SourceSet>, out: &mut Vec<Vec<SourceSet>>) {
        for s in start..=full {
            if chosen.iter().all(|&c| !is_subset(c, s) && !is_subset(s, c)) {
                chosen.push(s);
                out.push(chosen.clone());
                extend(s + 1, full, chosen, out);
                chosen.pop();
            }
        }
    }
    let full = ((1u32 << n) - 1) as SourceSet;
    let mut out = Vec::new();
    extend(1, full, &mut Vec::new(), &mut out);
    out
}

pub fn build_lattice(n_sources: usize) -> Result<GcLattice> {
    if !(1..=MAX_SOURCES).contains(&n_sources) {
        return Err(PdgcError::Argument(format!(
            "number of sources must be in 1..={MAX_SOURCES}, got {n_sources}"
        )));
    }
    let atoms: Vec<Atom> = enumerate_antichains(n_sources)
        .into_iter()
        .map(|c| Atom::new(c).expect("antichain by construction"))
        .collect();
    let n = atoms.len();
    let le: Vec<Vec<bool>> = atoms
        .iter()
        .map(|a| atoms.iter().map(|b| b.precedes(a)).collect())
        .collect();
    // Down-set size strictly grows along ≺, so sorting by it is a linear extension.
    let mut order: Vec<usize> = (0..n).collect();
    let down_size: Vec<usize> = le.iter().map(|row| row.iter().filter(|&&x| x).count()).collect();
    let labels: Vec<String> = atoms.iter().map(Atom::to_string).collect();
    order.sort_by(|&i, &j| down_size[i].cmp(&down_size[j]).then_with(|| labels[i].cmp(&labels[j])));

    let sorted: Vec<Atom> = order.iter().map(|&i| atoms[i].clone()).collect();
    let below = order
        .iter()
        .map(|&i| {
            order
                .iter()
                .enumerate()
                .filter(|&(_, &j)| j != i && le[i][j])
                .map(|(pos, _)| pos)
                .collect()
        })
        .collect();
    let index = sorted.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    Ok(GcLattice {
        n_sources,
        atoms: sorted,
        index,
        below,
    })
}

impl GcLattice {
    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Atoms in topological (bottom-to-top) order.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn position(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Indices of atoms strictly below atom `i`.
    pub fn strictly_below(&self, i: usize) -> &[usize] {
        &self.below[i]
    }

    pub fn precedes(&self, i: usize, j: usize) -> bool {
        i == j || self.below[j].contains(&i)
    }

    pub fn bottom(&self) -> &Atom {
        &self.atoms[0]
    }

    pub fn top(&self) -> &Atom {
        &self.atoms[self.atoms.len() - 1]
    }

    /// Pairs `(i, j)` with `i ≺ j` and nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.len() {
            for &i in &self.below[j] {
                let between = self.below[j].iter().any(|&k| k != i && self.below[k].contains(&i));
                if !between {
                    out.push((i, j));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Every non-empty source set that appears in some atom.
    pub fn source_sets(&self) -> Vec<SourceSet> {
        (1..(1u32 << self.n_sources)).map(|s| s as SourceSet).collect()
    }
}

/// `f^∩_α(ω) = min_j f_{α_j}(ω)`.
pub fn spectral_redundancy(atom: &Atom, gc_curves: &HashMap<SourceSet, SpectralFunction>) -> Result<SpectralFunction> {
    let mut curves = atom.collections().iter().map(|s| {
        gc_curves
            .get(s)
            .ok_or_else(|| PdgcError::Argument(format!("no GC curve for source set {{{}}}", set_label(*s))))
    });
    let first = curves.next().expect("atoms are non-empty")?.clone();
    curves.try_fold(first, |acc, c| {
        let c = c?;
        if !acc.same_grid(c) {
            return Err(PdgcError::Argument("GC curves on different grids".into()));
        }
        Ok(acc.min(c))
    })
}

/// Atom values from cumulative redundancies, bottom to top:
/// `f^δ_α = f^∩_α − Σ_{β≺α} f^δ_β`.
pub fn moebius_invert(lattice: &GcLattice, redundancies: &[SpectralFunction]) -> Result<Vec<SpectralFunction>> {
    if redundancies.len() != lattice.len() {
        return Err(PdgcError::Argument(format!(
            "{} redundancy curves for {} atoms",
            redundancies.len(),
            lattice.len()
        )));
    }
    let mut atoms: Vec<SpectralFunction> = Vec::with_capacity(lattice.len());
    for (i, red) in redundancies.iter().enumerate() {
        let atom = lattice
            .strictly_below(i)
            .iter()
            .fold(red.clone(), |acc, &j| acc.sub(&atoms[j]));
        atoms.push(atom);
    }
    Ok(atoms)
}

/// Unique, redundant and synergistic aggregates of the atom curves.
#[derive(Debug, Clone)]
pub struct CoarseComponents {
    pub unique: Vec<SpectralFunction>,
    pub redundant: SpectralFunction,
    pub synergistic: SpectralFunction,
}

impl CoarseComponents {
    pub fn total(&self) -> SpectralFunction {
        self.unique
            .iter()
            .fold(self.redundant.add(&self.synergistic), |acc, u| acc.add(u))
    }
}

pub fn coarse_grain(lattice: &GcLattice, atoms: &[SpectralFunction]) -> Result<CoarseComponents> {
    if atoms.len() != lattice.len() {
        return Err(PdgcError::Argument(format!(
            "{} atom curves for {} atoms",
            atoms.len(),
            lattice.len()
        )));
    }
    let zero = SpectralFunction::constant(atoms[0].grid().clone(), 0.0);
    let mut out = CoarseComponents {
        unique: vec![zero.clone(); lattice.n_sources()],
        redundant: zero.clone(),
        synergistic: zero,
    };
    for (atom, curve) in lattice.atoms().iter().zip(atoms) {
        let slot = match atom.class() {
            CoarseClass::Unique(i) => &mut out.unique[i],
            CoarseClass::Redundant => &mut out.redundant,
            CoarseClass::Synergistic => &mut out.synergistic,
        };
        *slot = slot.add(curve);
    }
    Ok(out)
}

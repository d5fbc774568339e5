//! Listing of the redundancy lattice for the `lattice` subcommand.

use pdgc::{build_lattice, CoarseClass};
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Serialize)]
pub struct AtomEntry {
    pub index: usize,
    pub atom: String,
    pub class: &'static str,
    /// 1-based source for unique atoms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct LatticeListing {
    pub n_sources: usize,
    pub atoms: Vec<AtomEntry>,
    /// `[lower, upper]` index pairs.
    pub covers: Vec<(usize, usize)>,
}

pub fn lattice_listing(n: usize) -> CliResult<LatticeListing> {
    let lattice = build_lattice(n)?;
    let atoms = lattice
        .atoms()
        .iter()
        .enumerate()
        .map(|(index, a)| {
            let class = a.class();
            AtomEntry {
                index,
                atom: a.to_string(),
                class: class.tag(),
                source: match class {
                    CoarseClass::Unique(i) => Some(i + 1),
                    _ => None,
                },
            }
        })
        .collect();
    Ok(LatticeListing {
        n_sources: n,
        atoms,
        covers: lattice.covers(),
    })
}

impl LatticeListing {
    pub fn to_text(&self) -> String {
        let mut s = format!("N = {}, {} atoms\n\natoms:\n", self.n_sources, self.atoms.len());
        let width = self.atoms.iter().map(|a| a.atom.len()).max().unwrap_or(0);
        for a in &self.atoms {
            s += &format!("  {:>3}  {:<width$}  {}\n", a.index, a.atom, a.class);
        }
        s += "\ncovers:\n";
        for &(lo, hi) in &self.covers {
            s += &format!("  {} < {}\n", self.atoms[lo].atom, self.atoms[hi].atom);
        }
        s
    }
}

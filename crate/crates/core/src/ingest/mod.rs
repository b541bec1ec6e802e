//! Coding alignments of two species to observed count tables.

mod classify;
pub mod code;
mod fasta;

pub use classify::{
    census, classify_sites, count_tables, ExclusionReason, ObservedTables, SiteCensus, SiteClass,
    SiteClassification, SiteEffect, SitePattern, POLARIZATION,
};
pub use fasta::{parse_alignment, parse_fasta, Alignment, Species, SpeciesMap};

use crate::error::Result;

/// Parse, classify and count in one step.
pub fn tables_from_fasta(text: &str, species: &SpeciesMap, offset: usize) -> Result<ObservedTables> {
    Ok(count_tables(&classify_sites(&parse_alignment(text, species, offset)?)))
}

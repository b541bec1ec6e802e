//! FASTA parsing and species assignment.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{PrfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Species {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

/// Record id to species.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpeciesMap {
    map: HashMap<String, Species>,
}

impl SpeciesMap {
    pub fn from_lists<S: AsRef<str>>(species1: &[S], species2: &[S]) -> Result<Self> {
        let mut out = Self::default();
        for id in species1 {
            out.insert(id.as_ref(), Species::One)?;
        }
        for id in species2 {
            out.insert(id.as_ref(), Species::Two)?;
        }
        Ok(out)
    }

    /// Two whitespace-separated columns: record id and `1` or `2`. Blank
    /// lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| PrfError::Parse { line: i + 1, message };
            let mut cols = line.split_whitespace();
            let (Some(id), Some(sp), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err("expected two columns: id and species".into()));
            };
            let species = match sp {
                "1" => Species::One,
                "2" => Species::Two,
                other => return Err(parse_err(format!("species must be 1 or 2, got {other:?}"))),
            };
            out.insert(id, species).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(out)
    }

    fn insert(&mut self, id: &str, sp: Species) -> Result<()> {
        if let Some(prev) = self.map.insert(id.to_string(), sp) {
            if prev != sp {
                return Err(PrfError::Alignment(format!("record {id:?} is assigned to both species")));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Species> {
        self.map.get(id).copied()
    }
}

/// Validated alignment of `m + n` sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ids: Vec<String>,
    pub species: Vec<Species>,
    /// Uppercase sequences over `ACGT-N`.
    pub sequences: Vec<Vec<u8>>,
    /// Number of leading sites before the first codon.
    pub offset: usize,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.sequences.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn m(&self) -> usize {
        self.species.iter().filter(|&&s| s == Species::One).count()
    }

    pub fn n(&self) -> usize {
        self.species.iter().filter(|&&s| s == Species::Two).count()
    }

    /// Number of complete codons after the offset.
    pub fn codons(&self) -> usize {
        self.len().saturating_sub(self.offset) / 3
    }
}

/// `(id, sequence)` records in input order. The id is the first word of the
/// header line.
pub fn parse_fasta(text: &str) -> Result<Vec<(String, String)>> {
    let mut records: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            let id = header.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(PrfError::Parse { line: i + 1, message: "empty record id".into() });
            }
            records.push((id.to_string(), String::new()));
        } else {
            match records.last_mut() {
                Some((_, seq)) => seq.push_str(line),
                None => {
                    return Err(PrfError::Parse { line: i + 1, message: "sequence before the first header".into() })
                }
            }
        }
    }
    Ok(records)
}

pub fn parse_alignment(text: &str, species: &SpeciesMap, offset: usize) -> Result<Alignment> {
    let records = parse_fasta(text)?;
    if records.len() < 2 {
        return Err(PrfError::Alignment("at least two records are required".into()));
    }
    let mut out = Alignment { ids: vec![], species: vec![], sequences: vec![], offset };
    for (id, seq) in records {
        let sp = species
            .get(&id)
            .ok_or_else(|| PrfError::Alignment(format!("record {id:?} is not assigned to a species")))?;
        let bytes: Vec<u8> = seq.bytes().map(|b| b.to_ascii_uppercase()).collect();
        if let Some(&bad) = bytes.iter().find(|b| !matches!(b, b'A' | b'C' | b'G' | b'T' | b'-' | b'N')) {
            return Err(PrfError::Alignment(format!("record {id:?} contains invalid character {:?}", bad as char)));
        }
        if let Some(first) = out.sequences.first() {
            if first.len() != bytes.len() {
                return Err(PrfError::Alignment(format!(
                    "record {id:?} has length {}, expected {}",
                    bytes.len(),
                    first.len()
                )));
            }
        }
        if out.ids.contains(&id) {
            return Err(PrfError::Alignment(format!("duplicate record id {id:?}")));
        }
        out.ids.push(id);
        out.species.push(sp);
        out.sequences.push(bytes);
    }
    if out.m() == 0 || out.n() == 0 {
        return Err(PrfError::Alignment("each species needs at least one sequence".into()));
    }
    if offset > out.len() {
        return Err(PrfError::Alignment(format!("offset {offset} exceeds alignment length {}", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> SpeciesMap {
        SpeciesMap::from_lists(&["a", "b"], &["c", "d"]).unwrap()
    }

    #[test]
    fn four_records() {
        let text = ">a\nATGAAA\nCCC\n>b desc\nATGAAACCC\n>c\nATGAAACCC\n>d\natgaaaccc\n";
        let a = parse_alignment(text, &map(), 0).unwrap();
        assert_eq!((a.m(), a.n(), a.len()), (2, 2, 9));
        assert_eq!(a.ids, ["a", "b", "c", "d"]);
        assert_eq!(a.sequences[3], b"ATGAAACCC");
    }

    #[test]
    fn length_mismatch() {
        let text = ">a\nATGAAACCC\n>b\nATGAAACCC\n>c\nATGAAACC\n>d\nATGAAACCC\n";
        let e = parse_alignment(text, &map(), 0).unwrap_err().to_string();
        assert!(e.contains("length 8"), "{e}");
    }

    #[test]
    fn unmapped_record() {
        let text = ">a\nATG\n>zz\nATG\n";
        let e = parse_alignment(text, &map(), 0).unwrap_err().to_string();
        assert!(e.contains("\"zz\""), "{e}");
    }

    #[test]
    fn invalid_character_and_empty_species() {
        assert!(parse_alignment(">a\nATX\n>c\nATG\n", &map(), 0).is_err());
        assert!(parse_alignment(">a\nATG\n>b\nATG\n", &map(), 0).is_err());
    }

    #[test]
    fn species_tsv() {
        let m = SpeciesMap::from_tsv("# id species\na\t1\nc 2\n").unwrap();
        assert_eq!(m.get("a"), Some(Species::One));
        assert_eq!(m.get("c"), Some(Species::Two));
        assert!(SpeciesMap::from_tsv("a\t3\n").is_err());
    }
}

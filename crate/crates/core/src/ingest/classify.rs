//! Per-site classification and table counting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::code::synonymous;
use super::fasta::{Alignment, Species};
use crate::table::{CountTable, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SitePattern {
    Monomorphic,
    FixedDifference,
    /// Polymorphic in exactly one species sample.
    PolymorphicOne,
    PolymorphicBoth,
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteEffect {
    Silent,
    Replacement,
    /// Monomorphic sites carry no mutation to classify.
    NotApplicable,
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Before the reading-frame offset or in a trailing partial codon.
    OutsideFrame,
    GapOrMissing,
    MoreThanTwoAlleles,
    /// A variable site in a codon that also holds an excluded site.
    CodonSpansExcluded,
    /// A variable site in a codon with two or more polymorphic sites.
    MultiplePolymorphic,
    /// The codon pair involves a gap or `N` elsewhere in the codon.
    Untranslatable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteClass {
    pub pattern: SitePattern,
    pub effect: SiteEffect,
    pub reason: Option<ExclusionReason>,
}

impl SiteClass {
    fn excluded(reason: ExclusionReason) -> Self {
        Self { pattern: SitePattern::Excluded, effect: SiteEffect::Excluded, reason: Some(reason) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteClassification {
    pub m: usize,
    pub n: usize,
    pub sites: Vec<SiteClass>,
}

/// Site totals per category; they sum to the alignment length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteCensus {
    pub monomorphic: usize,
    pub fixed_difference: usize,
    pub polymorphic_one: usize,
    pub polymorphic_both: usize,
    pub excluded: BTreeMap<ExclusionReason, usize>,
}

impl SiteCensus {
    pub fn total(&self) -> usize {
        self.monomorphic
            + self.fixed_difference
            + self.polymorphic_one
            + self.polymorphic_both
            + self.excluded.values().sum::<usize>()
    }
}

/// Observed tables of one alignment with its site census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedTables {
    pub dohrs: CountTable,
    pub dprs: CountTable,
    pub census: SiteCensus,
    /// How mutant and wild-type alleles were told apart.
    pub polarization: String,
}

pub const POLARIZATION: &str = "minor_allele";

fn allele_sets(col: &[u8], species: &[Species]) -> (Vec<u8>, Vec<u8>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (&c, &s) in col.iter().zip(species) {
        let set = if s == Species::One { &mut a } else { &mut b };
        if !set.contains(&c) {
            set.push(c);
        }
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Most frequent element; ties go to the smallest.
fn majority<T: Ord + Clone>(items: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(k, _)| k)
}

/// Classify every site of the alignment on both axes.
pub fn classify_sites(a: &Alignment) -> SiteClassification {
    let len = a.len();
    let column = |j: usize| -> Vec<u8> { a.sequences.iter().map(|s| s[j]).collect() };
    let mut sites: Vec<Option<SiteClass>> = vec![None; len];

    let frame_end = a.offset + 3 * a.codons();
    for (j, slot) in sites.iter_mut().enumerate() {
        if j < a.offset || j >= frame_end {
            *slot = Some(SiteClass::excluded(ExclusionReason::OutsideFrame));
        }
    }

    for c in 0..a.codons() {
        let start = a.offset + 3 * c;
        let mut patterns = [SitePattern::Monomorphic; 3];
        let mut site_excluded = [None; 3];
        for k in 0..3 {
            let col = column(start + k);
            if col.iter().any(|&b| b == b'-' || b == b'N') {
                site_excluded[k] = Some(ExclusionReason::GapOrMissing);
                continue;
            }
            let (s1, s2) = allele_sets(&col, &a.species);
            let mut all = s1.clone();
            all.extend(&s2);
            all.sort_unstable();
            all.dedup();
            patterns[k] = match (all.len(), s1.len(), s2.len()) {
                (1, _, _) => SitePattern::Monomorphic,
                (n, _, _) if n > 2 => {
                    site_excluded[k] = Some(ExclusionReason::MoreThanTwoAlleles);
                    continue;
                }
                (_, 1, 1) => SitePattern::FixedDifference,
                (_, 2, 2) => SitePattern::PolymorphicBoth,
                _ => SitePattern::PolymorphicOne,
            };
        }
        let any_excluded = site_excluded.iter().any(Option::is_some);
        let polymorphic = patterns
            .iter()
            .zip(&site_excluded)
            .filter(|(p, e)| e.is_none() && matches!(p, SitePattern::PolymorphicOne | SitePattern::PolymorphicBoth))
            .count();

        for k in 0..3 {
            let j = start + k;
            if let Some(r) = site_excluded[k] {
                sites[j] = Some(SiteClass::excluded(r));
                continue;
            }
            let pattern = patterns[k];
            if pattern == SitePattern::Monomorphic {
                sites[j] = Some(SiteClass { pattern, effect: SiteEffect::NotApplicable, reason: None });
                continue;
            }
            if any_excluded {
                sites[j] = Some(SiteClass::excluded(ExclusionReason::CodonSpansExcluded));
                continue;
            }
            if polymorphic >= 2 {
                sites[j] = Some(SiteClass::excluded(ExclusionReason::MultiplePolymorphic));
                continue;
            }
            let codon_of = |i: usize| a.sequences[i][start..start + 3].to_vec();
            let pair = if pattern == SitePattern::FixedDifference {
                let maj = |sp: Species| {
                    majority((0..a.ids.len()).filter(|&i| a.species[i] == sp).map(codon_of)).expect("nonempty species")
                };
                (maj(Species::One), maj(Species::Two))
            } else {
                let (s1, s2) = allele_sets(&column(j), &a.species);
                let members: Vec<usize> = (0..a.ids.len())
                    .filter(|&i| match a.species[i] {
                        Species::One => s1.len() == 2,
                        Species::Two => s2.len() == 2,
                    })
                    .collect();
                let wild = majority(members.iter().map(|&i| codon_of(i))).expect("polymorphic species");
                let major = majority(members.iter().map(|&i| a.sequences[i][j])).expect("polymorphic species");
                let minor = members.iter().map(|&i| a.sequences[i][j]).find(|&b| b != major).expect("two alleles");
                let mut w = wild.clone();
                w[k] = major;
                let mut mu = wild;
                mu[k] = minor;
                (w, mu)
            };
            sites[j] = Some(match synonymous(&pair.0, &pair.1) {
                Some(true) => SiteClass { pattern, effect: SiteEffect::Silent, reason: None },
                Some(false) => SiteClass { pattern, effect: SiteEffect::Replacement, reason: None },
                None => SiteClass::excluded(ExclusionReason::Untranslatable),
            });
        }
    }

    SiteClassification {
        m: a.m(),
        n: a.n(),
        sites: sites.into_iter().map(|s| s.expect("every site visited")).collect(),
    }
}

pub fn census(c: &SiteClassification) -> SiteCensus {
    let mut out = SiteCensus::default();
    for s in &c.sites {
        match s.pattern {
            SitePattern::Monomorphic => out.monomorphic += 1,
            SitePattern::FixedDifference => out.fixed_difference += 1,
            SitePattern::PolymorphicOne => out.polymorphic_one += 1,
            SitePattern::PolymorphicBoth => out.polymorphic_both += 1,
            SitePattern::Excluded => {
                *out.excluded.entry(s.reason.expect("excluded sites carry a reason")).or_default() += 1
            }
        }
    }
    out
}

/// DOHRS and DPRS tables (`V = O + H`) with the site census.
pub fn count_tables(c: &SiteClassification) -> ObservedTables {
    let mut counts = [0u64; 6];
    for s in &c.sites {
        let row = match s.effect {
            SiteEffect::Silent => 0,
            SiteEffect::Replacement => 3,
            _ => continue,
        };
        let col = match s.pattern {
            SitePattern::FixedDifference => 0,
            SitePattern::PolymorphicOne => 1,
            SitePattern::PolymorphicBoth => 2,
            _ => continue,
        };
        counts[row + col] += 1;
    }
    let dohrs = CountTable::observed(Layout::Dohrs, c.m, c.n, &counts).expect("counts are valid");
    let dprs = dohrs.to_dprs(false);
    ObservedTables { dohrs, dprs, census: census(c), polarization: POLARIZATION.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::fasta::{parse_alignment, SpeciesMap};

    fn align(seqs: [&str; 4]) -> Alignment {
        let text: String = ["a", "b", "c", "d"].iter().zip(seqs).map(|(id, s)| format!(">{id}\n{s}\n")).collect();
        parse_alignment(&text, &SpeciesMap::from_lists(&["a", "b"], &["c", "d"]).unwrap(), 0).unwrap()
    }

    #[test]
    fn fixed_difference_column() {
        let c = classify_sites(&align(["AAA", "AAA", "GAA", "GAA"]));
        assert_eq!(c.sites[0].pattern, SitePattern::FixedDifference);
        // AAA (K) vs GAA (E)
        assert_eq!(c.sites[0].effect, SiteEffect::Replacement);
    }

    #[test]
    fn glycine_third_position_is_silent() {
        let c = classify_sites(&align(["GGA", "GGG", "GGA", "GGA"]));
        assert_eq!(c.sites[2].pattern, SitePattern::PolymorphicOne);
        assert_eq!(c.sites[2].effect, SiteEffect::Silent);
    }

    #[test]
    fn one_sided_polymorphism() {
        let c = classify_sites(&align(["AAA", "AAA", "AAA", "CAA"]));
        assert_eq!(c.sites[0].pattern, SitePattern::PolymorphicOne);
        assert_eq!(c.sites[1].effect, SiteEffect::NotApplicable);
    }

    #[test]
    fn no_variation_gives_zero_tables() {
        let t = count_tables(&classify_sites(&align(["ATGAAA", "ATGAAA", "ATGAAA", "ATGAAA"])));
        assert!(t.dohrs.values().iter().all(|&v| v == 0.0));
        assert_eq!(t.census.monomorphic, 6);
    }

    #[test]
    fn toy_counts() {
        // codon 1: silent fixed difference GGA/GGG; codon 2: AAA/AAC one-sided (K/N)
        let t = count_tables(&classify_sites(&align(["GGAAAA", "GGAAAA", "GGGAAA", "GGGAAC"])));
        assert_eq!(t.dohrs.values(), vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(t.dprs.values(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn exclusions() {
        let c = classify_sites(&align(["ACGT", "ACG-", "TCGA", "GCGA"]));
        assert_eq!(c.sites[0].reason, Some(ExclusionReason::MoreThanTwoAlleles));
        assert_eq!(c.sites[3].reason, Some(ExclusionReason::OutsideFrame));
        assert_eq!(census(&c).total(), 4);
    }
}

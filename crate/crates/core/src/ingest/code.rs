//! Standard genetic code.

const AMINO_ACIDS: &[u8; 64] = b"FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";

fn base_index(b: u8) -> Option<usize> {
    match b {
        b'T' => Some(0),
        b'C' => Some(1),
        b'A' => Some(2),
        b'G' => Some(3),
        _ => None,
    }
}

/// One-letter amino acid (`*` for stop) of an uppercase codon.
pub fn translate(codon: &[u8]) -> Option<u8> {
    if codon.len() != 3 {
        return None;
    }
    let i = base_index(codon[0])? * 16 + base_index(codon[1])? * 4 + base_index(codon[2])?;
    Some(AMINO_ACIDS[i])
}

/// Whether two codons encode the same amino acid (or both stop).
pub fn synonymous(a: &[u8], b: &[u8]) -> Option<bool> {
    Some(translate(a)? == translate(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_codons() {
        assert_eq!(translate(b"ATG"), Some(b'M'));
        assert_eq!(translate(b"TGG"), Some(b'W'));
        assert_eq!(translate(b"TAA"), Some(b'*'));
        assert_eq!(translate(b"TGA"), Some(b'*'));
        assert_eq!(translate(b"GGA"), Some(b'G'));
        assert_eq!(translate(b"AGA"), Some(b'R'));
        assert_eq!(translate(b"CGN"), None);
    }

    #[test]
    fn glycine_third_position_is_silent() {
        assert_eq!(synonymous(b"GGA", b"GGG"), Some(true));
        assert_eq!(synonymous(b"GGA", b"AGA"), Some(false));
    }

    #[test]
    fn twenty_amino_acids_and_three_stops() {
        let mut set: Vec<u8> = AMINO_ACIDS.to_vec();
        set.sort_unstable();
        set.dedup();
        assert_eq!(set.len(), 21);
        assert_eq!(AMINO_ACIDS.iter().filter(|&&a| a == b'*').count(), 3);
    }
}

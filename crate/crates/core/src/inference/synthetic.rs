//! Poisson draws of count tables around known means.

use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Result};
use crate::moran::stream_rng;
use crate::table::CountTable;

/// `loci` independent observed tables with cell counts drawn as Poisson
/// around `means`; locus `l` uses random stream `l` of `seed`.
pub fn poisson_tables(means: &CountTable, loci: usize, seed: u64) -> Result<Vec<CountTable>> {
    means.validate()?;
    let values = means.values();
    let dists = values
        .iter()
        .map(|&m| if m > 0.0 { Poisson::new(m).map(Some).map_err(|e| invalid(e.to_string())) } else { Ok(None) })
        .collect::<Result<Vec<_>>>()?;
    (0..loci)
        .map(|l| {
            let mut rng = stream_rng(seed, l as u64);
            let counts: Vec<u64> = dists.iter().map(|d| d.map_or(0, |d| d.sample(&mut rng) as u64)).collect();
            Ok(CountTable::observed(means.layout, means.m, means.n, &counts)?.with_locus(format!("locus{}", l + 1)))
        })
        .collect()
}

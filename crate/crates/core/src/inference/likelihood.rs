//! Poisson log-likelihood of count tables.

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::measure::InitialMeasure;
use crate::params::ScaledParams;
use crate::sampling::table_means;
use crate::special::ln_factorial;
use crate::table::{CountTable, Layout};

/// `Σ_a [Z_a ln m_a - m_a - ln Z_a!]`; `-∞` when a zero mean meets a
/// positive count.
pub fn poisson_loglik(means: &[f64], counts: &[f64]) -> Result<f64> {
    if means.len() != counts.len() {
        return Err(invalid("means and counts differ in length"));
    }
    let mut acc = 0.0;
    for (&m, &z) in means.iter().zip(counts) {
        if !(m >= 0.0) || !(z >= 0.0) {
            return Err(invalid("means and counts must be >= 0"));
        }
        acc += cell_loglik(m, z);
    }
    Ok(acc)
}

pub(crate) fn cell_loglik(m: f64, z: f64) -> f64 {
    if z == 0.0 {
        return -m;
    }
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    z * m.ln() - m - ln_factorial(z.round() as u64)
}

/// Means in the layout of `table`, collapsing a 2×3 vector when needed.
pub fn means_for_layout(dohrs: &[f64; 6], layout: Layout, double_count_shared: bool) -> Vec<f64> {
    match layout {
        Layout::Dohrs => dohrs.to_vec(),
        Layout::Dprs => {
            let w = if double_count_shared { 2.0 } else { 1.0 };
            vec![dohrs[0], dohrs[1] + w * dohrs[2], dohrs[3], dohrs[4] + w * dohrs[5]]
        }
    }
}

/// Log-likelihood of one observed table under `(β_s, β_r)` with equilibrium
/// ancestral measures.
pub fn table_loglik(
    beta_s: &ScaledParams,
    beta_r: &ScaledParams,
    table: &CountTable,
    grid: &Grid,
    double_count_shared: bool,
) -> Result<f64> {
    table.validate()?;
    let nu_s = InitialMeasure::equilibrium(beta_s.theta, beta_s.gamma)?;
    let nu_r = InitialMeasure::equilibrium(beta_r.theta, beta_r.gamma)?;
    let e = table_means(table.m, table.n, beta_s, beta_r, &nu_s, &nu_r, grid)?;
    poisson_loglik(&means_for_layout(&e.means(), table.layout, double_count_shared), &table.values())
}

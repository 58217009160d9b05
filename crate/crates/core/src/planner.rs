//! Worker counts and memory footprints of the two row-parallel strategies.

use crate::basegraph::{BaseGraph, PARITY_CORE_ROWS};
use crate::decoder::Strategy;
use crate::error::{Error, Result};
use crate::kernels::MAX_ALPHA;
use crate::llr::Precision;

/// Resident workers needed to keep one compute unit busy.
pub const DEFAULT_WORKER_BUDGET: usize = 128;

/// Fast local memory per compute unit, bytes.
pub const DEFAULT_LOCAL_MEMORY: usize = 64 * 1024;

/// Bytes of posterior and message storage for one codeword.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Footprint {
    /// `S_v = epsilon * N_c`.
    pub s_v: usize,
    /// `S_cv = epsilon * Z * sum of row weights`.
    pub s_cv: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct StrategyPlan {
    pub strategy: Strategy,
    pub rho: usize,
    pub alpha: usize,
    pub n_thread: usize,
    pub epsilon: usize,
    pub s_v: usize,
    pub s_cv: usize,
    pub local_budget: usize,
    /// Posteriors alone fit in local memory.
    pub posterior_fits_local: bool,
    /// Posteriors and messages together fit in local memory.
    pub fits_local: bool,
}

fn check_rho(rho: usize) -> Result<()> {
    if matches!(rho, 1 | 2 | 4) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "rho must be 1, 2 or 4, got {rho}"
        )))
    }
}

/// Workers engaged on one codeword: `Z / rho` for high throughput,
/// `(alpha / rho) * Z` for low latency.
pub fn thread_count(strategy: Strategy, z: usize, rho: usize) -> Result<usize> {
    check_rho(rho)?;
    strategy.validate()?;
    let numerator = strategy.alpha() * z;
    if !numerator.is_multiple_of(rho) {
        return Err(Error::NotDivisible { numerator, rho });
    }
    Ok(numerator / rho)
}

/// Storage for the first `rows_used` rows at `epsilon` bytes per LLR.
pub fn memory_footprint(bg: &BaseGraph, rows_used: usize, epsilon: usize) -> Result<Footprint> {
    if !matches!(epsilon, 1 | 2 | 4) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be 1, 2 or 4 bytes, got {epsilon}"
        )));
    }
    if !(1..=bg.rows()).contains(&rows_used) {
        return Err(Error::RowsOutOfRange {
            rows: rows_used,
            min: 1,
            max: bg.rows(),
        });
    }
    let z = bg.z();
    Ok(Footprint {
        s_v: epsilon * z * (bg.info_columns() + rows_used),
        s_cv: epsilon * z * bg.edges(rows_used),
    })
}

/// Largest power-of-two `alpha` with `(alpha / rho) * Z <= worker_budget`,
/// capped by the largest power of two not above the maximum row weight.
pub fn choose_alpha(bg: &BaseGraph, rho: usize, worker_budget: usize) -> Result<usize> {
    check_rho(rho)?;
    let z = bg.z();
    if worker_budget * rho < z {
        return Err(Error::BudgetTooSmall {
            budget: worker_budget,
            minimum: z.div_ceil(rho),
        });
    }
    let cap = prev_power_of_two(bg.max_row_weight().max(1)).min(MAX_ALPHA);
    let mut alpha = 1;
    while alpha * 2 <= cap && alpha * 2 * z <= worker_budget * rho {
        alpha *= 2;
    }
    Ok(alpha)
}

fn prev_power_of_two(n: usize) -> usize {
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// Full plan for one strategy at the given precision.
pub fn plan(
    bg: &BaseGraph,
    rows_used: usize,
    strategy: Strategy,
    precision: Precision,
    rho: usize,
    local_budget: usize,
) -> Result<StrategyPlan> {
    if rows_used < PARITY_CORE_ROWS {
        return Err(Error::RowsOutOfRange {
            rows: rows_used,
            min: PARITY_CORE_ROWS,
            max: bg.rows(),
        });
    }
    let epsilon = precision.bytes();
    let fp = memory_footprint(bg, rows_used, epsilon)?;
    Ok(StrategyPlan {
        strategy,
        rho,
        alpha: strategy.alpha(),
        n_thread: thread_count(strategy, bg.z(), rho)?,
        epsilon,
        s_v: fp.s_v,
        s_cv: fp.s_cv,
        local_budget,
        posterior_fits_local: fp.s_v <= local_budget,
        fits_local: fp.s_v + fp.s_cv <= local_budget,
    })
}

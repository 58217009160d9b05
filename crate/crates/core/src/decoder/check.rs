//! Check-node updates on a single row, outside the decode loop.

use num_traits::Float;

use super::Strategy;
use crate::error::Result;
use crate::kernels::{tree_reduce_in_place, LaneWord, ReduceAccumulator, MAX_ALPHA};
use crate::llr::Beta;

/// Reduces one row's variable-to-check messages into a single accumulator,
/// either with a sequential scan or with `alpha` strided partitions merged
/// by butterfly reduction. Short partitions stay at the identity.
pub(crate) fn reduce_row<W: LaneWord>(
    v2c: &[W],
    posterior: impl Fn(usize) -> W,
    strategy: Strategy,
) -> ReduceAccumulator<W> {
    match strategy {
        Strategy::HighThroughput => {
            let mut acc = ReduceAccumulator::identity();
            for (j, &m) in v2c.iter().enumerate() {
                acc.push(j as u16, m, posterior(j));
            }
            acc
        }
        Strategy::LowLatency { alpha } => {
            let mut slots = [ReduceAccumulator::<W>::identity(); MAX_ALPHA];
            let slots = &mut slots[..alpha];
            for (j, &m) in v2c.iter().enumerate() {
                slots[j % alpha].push(j as u16, m, posterior(j));
            }
            tree_reduce_in_place(slots).expect("alpha validated by DecodeConfig");
            slots[0]
        }
    }
}

/// Normalized min-sum check update for one row.
///
/// `inputs` are the variable-to-check messages of the row's edges; the
/// result holds the check-to-variable message for each edge.
pub fn check_node_minsum<W: LaneWord>(
    inputs: &[W],
    beta: &Beta,
    strategy: Strategy,
) -> Result<Vec<W>> {
    strategy.validate()?;
    let acc = reduce_row(inputs, |j| inputs[j], strategy);
    Ok(inputs
        .iter()
        .enumerate()
        .map(|(j, &m)| acc.output(j as u16, m, beta))
        .collect())
}

/// Exact sum-product (tanh-rule) check update, clamped to `[-saturation, saturation]`.
pub fn check_node_exact<F: Float>(inputs: &[F], saturation: F) -> Vec<F> {
    let two = F::one() + F::one();
    let t: Vec<F> = inputs.iter().map(|&x| (x / two).tanh()).collect();
    (0..inputs.len())
        .map(|i| {
            let prod = t
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(F::one(), |p, (_, &v)| p * v);
            let out = two * prod.atanh();
            if out.is_nan() {
                F::zero()
            } else {
                out.max(-saturation).min(saturation)
            }
        })
        .collect()
}

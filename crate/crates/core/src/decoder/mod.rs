//! Layered and flooding normalized min-sum decoding over the quasi-cyclic
//! structure.
//!
//! [`Decoder`] is generic over the [`LaneWord`](crate::kernels::LaneWord)
//! it stores LLRs in: scalar `Fixed8`, `f16` or `f32` for one codeword, or a
//! packed word carrying several codewords that are decoded in lock step.
//! [`AnyDecoder`] picks the instantiation from a [`DecodeConfig`] at run time.

mod check;
mod engine;

pub use check::{check_node_exact, check_node_minsum};
pub use engine::{decode, decode_flooding, pack_lanes, DecodeWorkspace, Decoder};

use std::fmt;
use std::str::FromStr;

use half::f16;

use crate::basegraph::BaseGraph;
use crate::basegraph::CodeParams;
use crate::channel::quantize;
use crate::codec::{Crc, CRC24B};
use crate::error::{Error, Result};
use crate::kernels::{LaneWord, Packed8x4, PackedF16x2, MAX_ALPHA};
use crate::llr::{Beta, Fixed8, Precision, QuantConfig};

/// How the work of one check row is laid out.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One worker per row: a sequential scan over the row's edges.
    HighThroughput,
    /// `alpha` cooperating workers per row, each folding a strided subset of
    /// edges, combined by butterfly reduction.
    LowLatency { alpha: usize },
}

impl Strategy {
    pub fn alpha(&self) -> usize {
        match *self {
            Strategy::HighThroughput => 1,
            Strategy::LowLatency { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::LowLatency { alpha } if !alpha.is_power_of_two() || alpha > MAX_ALPHA => {
                Err(Error::InvalidAlpha(alpha))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::HighThroughput => "high_throughput",
            Strategy::LowLatency { .. } => "low_latency",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::HighThroughput => f.write_str("high_throughput"),
            Strategy::LowLatency { alpha } => write!(f, "low_latency(alpha={alpha})"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum EarlyStop {
    /// Stop once all parity checks hold.
    Syndrome,
    /// Stop once all parity checks hold and the information bits pass the CRC.
    Crc,
    /// Always run `max_iter` iterations.
    None,
}

impl FromStr for EarlyStop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "syndrome" => Ok(EarlyStop::Syndrome),
            "crc" => Ok(EarlyStop::Crc),
            "none" => Ok(EarlyStop::None),
            _ => Err(Error::InvalidConfig(format!(
                "unknown early-stop rule `{s}`"
            ))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Schedule {
    Layered,
    Flooding,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DecodeConfig {
    pub beta: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
    pub precision: Precision,
    /// Codewords per packed word; 1 for the scalar path.
    pub rho: usize,
    pub early_stop: EarlyStop,
    pub crc: Crc,
    /// Evaluate the CRC on the final information bits even when it is not
    /// the stopping rule.
    pub final_crc: bool,
    /// Record per-iteration syndrome weight and minimum posterior magnitude.
    pub trace: bool,
    /// Process the `Z` independent rows of each layer on the rayon pool.
    pub parallel_rows: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beta: 0.75,
            max_iter: 20,
            strategy: Strategy::HighThroughput,
            precision: Precision::Int8,
            rho: 1,
            early_stop: EarlyStop::Syndrome,
            crc: CRC24B,
            final_crc: true,
            trace: false,
            parallel_rows: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        Beta::new(self.beta)?;
        self.strategy.validate()?;
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.rho != 1 && self.rho != self.precision.packed_lanes() {
            return Err(Error::InvalidConfig(format!(
                "rho={} does not match {} (expected 1 or {})",
                self.rho,
                self.precision.name(),
                self.precision.packed_lanes()
            )));
        }
        Ok(())
    }
}

/// Per-iteration trace row.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub syndrome_weight: usize,
    /// Smallest posterior magnitude, in decoder units.
    pub min_abs_llr: f64,
}

/// Outcome for one codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// Hard decisions on the `K` information bits, punctured ones included.
    pub bits: Vec<u8>,
    pub iterations: usize,
    pub success: bool,
    pub syndrome_weight: usize,
    pub crc_ok: Option<bool>,
    pub trace: Vec<TraceRow>,
}

/// Writes a trace as CSV (`iteration,syndrome_weight,min_abs_llr`).
pub fn write_trace_csv<W: std::io::Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "syndrome_weight", "min_abs_llr"])?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            row.syndrome_weight.to_string(),
            row.min_abs_llr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A decoder whose storage type is chosen from the configuration.
pub enum AnyDecoder {
    Int8(Decoder<Fixed8>),
    Int8x4(Decoder<Packed8x4>),
    F16(Decoder<f16>),
    F16x2(Decoder<PackedF16x2>),
    F32(Decoder<f32>),
}

macro_rules! each_decoder {
    ($self:expr, $d:ident => $body:expr) => {
        match $self {
            AnyDecoder::Int8($d) => $body,
            AnyDecoder::Int8x4($d) => $body,
            AnyDecoder::F16($d) => $body,
            AnyDecoder::F16x2($d) => $body,
            AnyDecoder::F32($d) => $body,
        }
    };
}

impl AnyDecoder {
    pub fn new(bg: &BaseGraph, rows_used: usize, cfg: &DecodeConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match (cfg.precision, cfg.rho) {
            (Precision::Int8, 1) => AnyDecoder::Int8(Decoder::new(bg, rows_used, cfg)?),
            (Precision::Int8, _) => AnyDecoder::Int8x4(Decoder::new(bg, rows_used, cfg)?),
            (Precision::F16, 1) => AnyDecoder::F16(Decoder::new(bg, rows_used, cfg)?),
            (Precision::F16, _) => AnyDecoder::F16x2(Decoder::new(bg, rows_used, cfg)?),
            (Precision::F32, _) => AnyDecoder::F32(Decoder::new(bg, rows_used, cfg)?),
        })
    }

    /// Codewords decoded per call.
    pub fn lanes(&self) -> usize {
        each_decoder!(self, d => d.lanes())
    }

    pub fn config(&self) -> &DecodeConfig {
        each_decoder!(self, d => d.config())
    }

    /// Quantizes, depunctures and decodes up to [`lanes`](Self::lanes)
    /// codewords given as transmitted-position channel LLRs (`N_tx` each).
    ///
    /// A partial batch is padded by repeating its last codeword; only the
    /// results of the supplied codewords are returned.
    pub fn decode_channel(
        &mut self,
        channel: &[&[f64]],
        quant: &QuantConfig,
        params: &CodeParams,
        schedule: Schedule,
    ) -> Result<Vec<DecodeResult>> {
        each_decoder!(self, d => decode_channel_with(d, channel, quant, params, schedule))
    }
}

fn decode_channel_with<W: LaneWord>(
    decoder: &mut Decoder<W>,
    channel: &[&[f64]],
    quant: &QuantConfig,
    params: &CodeParams,
    schedule: Schedule,
) -> Result<Vec<DecodeResult>> {
    if channel.is_empty() || channel.len() > W::LANES {
        return Err(Error::InvalidConfig(format!(
            "{} codewords supplied to a {}-lane decoder",
            channel.len(),
            W::LANES
        )));
    }
    let mut lanes = channel
        .iter()
        .map(|llrs| quantize::<W::Lane>(llrs, quant, params))
        .collect::<Result<Vec<_>>>()?;
    while lanes.len() < W::LANES {
        lanes.push(lanes[lanes.len() - 1].clone());
    }
    let packed = pack_lanes::<W>(&lanes);
    let mut results = match schedule {
        Schedule::Layered => decoder.decode(&packed)?,
        Schedule::Flooding => decoder.decode_flooding(&packed)?,
    };
    results.truncate(channel.len());
    Ok(results)
}

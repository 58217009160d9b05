//! 5G NR quasi-cyclic LDPC codec with normalized min-sum decoding.
//!
//! The crate covers the whole link: base-graph lifting ([`basegraph`]),
//! systematic encoding and CRC ([`codec`]), BPSK/AWGN and LLR quantization
//! ([`channel`]), packed-lane check-node kernels ([`kernels`]), layered and
//! flooding decoders with high-throughput and low-latency row strategies
//! ([`decoder`]), resource planning ([`planner`]) and BLER/latency
//! measurement ([`harness`]).
//!
//! Decoding is generic over the LLR storage word. The aliases below name
//! the instantiations used in practice.

pub mod basegraph;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod decoder;
mod error;
pub mod gf2;
pub mod harness;
pub mod kernels;
pub mod llr;
pub mod planner;

pub use error::{Error, Result};

pub use basegraph::{code_params, load_basegraph, BaseGraph, BaseGraphId, CodeParams};
pub use decoder::{AnyDecoder, DecodeConfig, DecodeResult, Decoder, EarlyStop, Schedule, Strategy};
pub use kernels::{LaneWord, Packed8x4, PackedF16x2};
pub use llr::{Beta, Fixed8, Llr, Precision, QuantConfig};

pub use half::f16;

/// Scalar 8-bit fixed-point decoder.
pub type Int8Decoder = Decoder<Fixed8>;
/// Four codewords per 32-bit word, 8-bit lanes.
pub type PackedInt8Decoder = Decoder<Packed8x4>;
/// Scalar half-precision decoder.
pub type F16Decoder = Decoder<f16>;
/// Two codewords per 32-bit word, half-precision lanes.
pub type PackedF16Decoder = Decoder<PackedF16x2>;
pub type F32Decoder = Decoder<f32>;

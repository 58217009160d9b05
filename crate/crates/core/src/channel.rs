//! BPSK over AWGN, LLR demapping and quantization into the decoder domain.
//!
//! Bit `b` maps to symbol `1 - 2b`; LLRs are `ln(P(0)/P(1))`, so a positive
//! value favours bit 0.

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basegraph::CodeParams;
use crate::error::{Error, Result};
use crate::llr::{Llr, QuantConfig};

/// Real channel LLRs, one per transmitted bit.
pub type LlrVector = Vec<f64>;

fn check_sigma<F: Float>(sigma: F) -> Result<()> {
    if sigma > F::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSigma(sigma.to_f64().unwrap_or(f64::NAN)))
    }
}

/// Noise-free BPSK symbols.
pub fn bpsk_modulate<F: Float>(bits: &[u8]) -> Vec<F> {
    bits.iter()
        .map(|&b| if b & 1 == 0 { F::one() } else { -F::one() })
        .collect()
}

/// Seeded Gaussian noise source.
#[derive(Clone, Debug)]
pub struct AwgnChannel {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl AwgnChannel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(AwgnChannel {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Modulates `bits` and adds noise.
    pub fn transmit<F: Float>(&mut self, bits: &[u8]) -> Vec<F> {
        bits.iter()
            .map(|&b| {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                let s = if b & 1 == 0 { 1.0 } else { -1.0 };
                F::from(s + self.sigma * n).expect("finite symbol")
            })
            .collect()
    }
}

/// BPSK symbols plus white Gaussian noise of standard deviation `sigma`.
pub fn bpsk_awgn<F: Float>(bits: &[u8], sigma: F, seed: u64) -> Result<Vec<F>> {
    check_sigma(sigma)?;
    let mut ch = AwgnChannel::new(sigma.to_f64().unwrap(), seed)?;
    Ok(ch.transmit(bits))
}

/// Maximum-likelihood BPSK demapping: `L = 2y / sigma^2`.
pub fn demap_llr<F: Float>(symbols: &[F], sigma: F) -> Result<Vec<F>> {
    check_sigma(sigma)?;
    let gain = (F::one() + F::one()) / (sigma * sigma);
    Ok(symbols.iter().map(|&y| gain * y).collect())
}

/// Noise standard deviation for unit-energy BPSK at `ebn0_db` and code
/// rate `rate`: `sigma^2 = 1 / (2 R Eb/N0)`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

/// Converts transmitted-position LLRs (`N_tx`) into an `N_c` decoder block,
/// with the `2Z` punctured positions set to zero.
pub fn quantize<L: Llr>(llrs: &[f64], cfg: &QuantConfig, params: &CodeParams) -> Result<Vec<L>> {
    cfg.validate()?;
    if llrs.len() != params.n_tx {
        return Err(Error::LengthMismatch {
            expected: params.n_tx,
            found: llrs.len(),
        });
    }
    let mut out = vec![L::default(); params.punctured()];
    out.extend(llrs.iter().map(|&l| L::quantize(l, cfg)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegraph::{code_params, load_basegraph, BaseGraphId};
    use crate::llr::Fixed8;

    #[test]
    fn noise_free_symbols() {
        assert_eq!(bpsk_modulate::<f64>(&[0, 1, 1]), vec![1.0, -1.0, -1.0]);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let bits = [0u8, 1, 0, 1, 1];
        let a = bpsk_awgn(&bits, 0.8f64, 42).unwrap();
        let b = bpsk_awgn(&bits, 0.8f64, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, bpsk_awgn(&bits, 0.8f64, 43).unwrap());
        assert!(bpsk_awgn(&bits, 0.0f64, 1).is_err());
        assert!(bpsk_awgn(&bits, -1.0f32, 1).is_err());
    }

    #[test]
    fn noise_statistics() {
        let sigma = 0.7f64;
        let n = 1_000_000;
        let y = bpsk_awgn(&vec![0u8; n], sigma, 2024).unwrap();
        let mean = y.iter().map(|v| v - 1.0).sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - 1.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn demap_formula() {
        assert_eq!(demap_llr(&[1.0f64], 1.0).unwrap(), vec![2.0]);
        assert_eq!(demap_llr(&[0.0f64], 0.3).unwrap(), vec![0.0]);
        assert_eq!(demap_llr(&[-0.5f64], 0.5).unwrap(), vec![-4.0]);
        assert!(demap_llr(&[1.0f32], 0.0).is_err());
    }

    #[test]
    fn quantize_depunctures_and_saturates() {
        let bg = load_basegraph(BaseGraphId::Bg2, 2).unwrap();
        let p = code_params(&bg, 42).unwrap();
        let mut llrs = vec![1.0; 100];
        llrs[0] = 100.0;
        llrs[1] = -1.0;
        let q = quantize::<Fixed8>(&llrs, &QuantConfig::int8(), &p).unwrap();
        assert_eq!(q.len(), 104);
        assert!(q[..4].iter().all(|v| v.get() == 0));
        assert_eq!(q[4].get(), 127);
        assert_eq!(q[5].get(), -8);
        assert!(quantize::<Fixed8>(&llrs[1..], &QuantConfig::int8(), &p).is_err());
    }

    #[test]
    fn sigma_conversion() {
        // Eb/N0 = 0 dB at rate 1/2 gives unit noise variance.
        assert!((ebn0_to_sigma(0.0, 0.5) - 1.0).abs() < 1e-12);
    }
}

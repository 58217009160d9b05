//! Bitwise CRC by long division over GF(2), as used for NR code-block CRCs.
//!
//! Bits are processed first-to-last with the leading bit as the highest
//! power of the message polynomial. Parity bits are appended highest degree
//! first. Register starts at zero, no reflection, no output XOR.

use crate::error::{Error, Result};

/// A CRC generator polynomial of degree `width` (the `x^width` term implicit).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Crc {
    width: u32,
    poly: u32,
}

/// `x^24 + x^23 + x^6 + x^5 + x + 1`, the NR code-block CRC.
pub const CRC24B: Crc = Crc::new(24, 0x80_0063);

/// `x^24 + x^23 + x^18 + x^17 + x^14 + x^11 + x^10 + x^7 + x^6 + x^5 + x^4 + x^3 + x + 1`,
/// the NR transport-block CRC.
pub const CRC24A: Crc = Crc::new(24, 0x86_4CFB);

/// `x^16 + x^12 + x^5 + 1`.
pub const CRC16: Crc = Crc::new(16, 0x1021);

impl Crc {
    pub const fn new(width: u32, poly: u32) -> Self {
        assert!(width >= 1 && width <= 32);
        Crc { width, poly }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    fn mask(&self) -> u32 {
        if self.width == 32 {
            u32::MAX
        } else {
            (1 << self.width) - 1
        }
    }

    /// Remainder of `bits(x) * x^width` modulo the generator.
    pub fn remainder(&self, bits: &[u8]) -> u32 {
        let top = self.width - 1;
        let mask = self.mask();
        bits.iter().fold(0u32, |reg, &b| {
            let feedback = ((reg >> top) ^ u32::from(b & 1)) & 1;
            let reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^ self.poly
            } else {
                reg
            }
        })
    }

    /// `payload` followed by its parity bits.
    pub fn attach(&self, payload: &[u8]) -> Vec<u8> {
        let rem = self.remainder(payload);
        let mut out = Vec::with_capacity(payload.len() + self.width());
        out.extend_from_slice(payload);
        out.extend((0..self.width).rev().map(|i| ((rem >> i) & 1) as u8));
        out
    }

    /// True when `bits` (payload plus parity) is divisible by the generator.
    pub fn check(&self, bits: &[u8]) -> bool {
        bits.len() >= self.width() && self.remainder(bits) == 0
    }
}

/// Attaches a CRC-24B to `payload`, requiring the result to fit in `k` bits.
pub fn crc_attach(payload: &[u8], k: usize) -> Result<Vec<u8>> {
    if payload.len() + CRC24B.width() > k {
        return Err(Error::PayloadTooLong {
            payload: payload.len(),
            crc: CRC24B.width(),
            k,
        });
    }
    Ok(CRC24B.attach(payload))
}

/// Verifies a CRC-24B protected block.
pub fn crc_check(bits: &[u8]) -> bool {
    CRC24B.check(bits)
}

//! Decoder-domain LLR scalars.
//!
//! The decoder is generic over [`Llr`], implemented for 8-bit fixed point
//! ([`Fixed8`]), software half precision ([`half::f16`]) and `f32`. Every
//! arithmetic step saturates, so posteriors never leave the representable
//! range.

use std::fmt::Debug;

use half::f16;
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    Int8,
    F16,
    F32,
}

impl Precision {
    /// Bytes per stored LLR (epsilon).
    pub fn bytes(self) -> usize {
        match self {
            Precision::Int8 => 1,
            Precision::F16 => 2,
            Precision::F32 => 4,
        }
    }

    /// Lanes per 32-bit packed word.
    pub fn packed_lanes(self) -> usize {
        4 / self.bytes()
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Int8 => "int8",
            Precision::F16 => "f16",
            Precision::F32 => "f32",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "int8" | "i8" => Ok(Precision::Int8),
            "f16" | "half" => Ok(Precision::F16),
            "f32" | "float" => Ok(Precision::F32),
            _ => Err(Error::InvalidConfig(format!("unknown precision `{s}`"))),
        }
    }
}

/// Channel LLR to decoder-domain conversion settings.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct QuantConfig {
    pub precision: Precision,
    /// Quantization steps per LLR unit (int8 only).
    pub scale: f64,
    /// Saturation magnitude in LLR units.
    pub clip: f64,
}

impl QuantConfig {
    pub const INT8_MAX: i32 = 127;

    /// 8 steps per LLR unit, clipping at 127/8.
    pub fn int8() -> Self {
        QuantConfig {
            precision: Precision::Int8,
            scale: 8.0,
            clip: f64::from(Self::INT8_MAX) / 8.0,
        }
    }

    /// Float modes use LLR units directly; values beyond the format range
    /// saturate at its largest finite value.
    pub fn float(precision: Precision) -> Self {
        QuantConfig {
            precision,
            scale: 1.0,
            clip: f64::INFINITY,
        }
    }

    pub fn for_precision(precision: Precision) -> Self {
        match precision {
            Precision::Int8 => Self::int8(),
            p => Self::float(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "quantization scale must be positive, got {}",
                self.scale
            )));
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "clip must be positive, got {}",
                self.clip
            )));
        }
        Ok(())
    }
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self::int8()
    }
}

/// Normalization factor of the min-sum check update.
///
/// Fixed-point magnitudes are scaled as `floor(m * q / 256)` with
/// `q = round(beta * 256)`, i.e. beta is applied in the widened integer
/// domain and rounded toward zero.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Beta {
    value: f64,
    q8: u32,
}

impl Beta {
    pub const FRAC_BITS: u32 = 8;

    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0, 1], got {value}"
            )));
        }
        Ok(Beta {
            value,
            q8: (value * f64::from(1u32 << Self::FRAC_BITS)).round() as u32,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Beta in units of 2^-8.
    pub fn fixed(&self) -> u32 {
        self.q8
    }

    /// `floor(mag * beta)` in the fixed-point domain.
    pub fn scale_fixed(&self, mag: u8) -> u8 {
        ((u32::from(mag) * self.q8) >> Self::FRAC_BITS) as u8
    }
}

impl Default for Beta {
    fn default() -> Self {
        Beta::new(0.75).expect("0.75 is a valid beta")
    }
}

/// A decoder-domain LLR value. Positive means bit 0 is more likely.
pub trait Llr: Copy + Default + PartialEq + Debug + Send + Sync + 'static {
    /// Non-negative magnitude.
    type Mag: Copy + PartialOrd + Debug + Send + Sync;

    const PRECISION: Precision;

    fn quantize(llr: f64, cfg: &QuantConfig) -> Self;
    fn to_f64(self) -> f64;

    fn sat_add(self, rhs: Self) -> Self;
    fn sat_sub(self, rhs: Self) -> Self;

    fn magnitude(self) -> Self::Mag;
    /// Strictly negative. Zero (of either sign) is not negative.
    fn is_negative(self) -> bool;
    /// Builds a value from a magnitude and a sign; a zero magnitude is
    /// always the canonical non-negative zero.
    fn from_parts(mag: Self::Mag, negative: bool) -> Self;

    /// Largest representable magnitude.
    fn mag_max() -> Self::Mag;
    fn scale(mag: Self::Mag, beta: &Beta) -> Self::Mag;
    fn mag_to_f64(mag: Self::Mag) -> f64;

    fn hard_bit(self) -> u8 {
        u8::from(self.is_negative())
    }
}

/// 8-bit fixed-point LLR in `[-127, 127]`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed8(i8);

impl Fixed8 {
    pub const MAX: i8 = 127;

    /// Clamps into `[-127, 127]`.
    pub fn saturating(v: i32) -> Self {
        Fixed8(v.clamp(-i32::from(Self::MAX), i32::from(Self::MAX)) as i8)
    }

    pub fn get(self) -> i8 {
        self.0
    }

    /// Sign-magnitude byte: bit 7 is the sign, bits 0..7 the magnitude.
    pub fn to_sign_magnitude(self) -> u8 {
        let mag = self.0.unsigned_abs();
        if self.0 < 0 {
            0x80 | mag
        } else {
            mag
        }
    }

    pub fn from_sign_magnitude(byte: u8) -> Self {
        let mag = (byte & 0x7F) as i8;
        if byte & 0x80 != 0 {
            Fixed8(-mag)
        } else {
            Fixed8(mag)
        }
    }
}

impl Llr for Fixed8 {
    type Mag = u8;

    const PRECISION: Precision = Precision::Int8;

    fn quantize(llr: f64, cfg: &QuantConfig) -> Self {
        let limit = (cfg.clip * cfg.scale).round().min(f64::from(Self::MAX));
        let q = (llr * cfg.scale).round().clamp(-limit, limit);
        Fixed8(q as i8)
    }

    fn to_f64(self) -> f64 {
        f64::from(self.0)
    }

    fn sat_add(self, rhs: Self) -> Self {
        Self::saturating(i32::from(self.0) + i32::from(rhs.0))
    }

    fn sat_sub(self, rhs: Self) -> Self {
        Self::saturating(i32::from(self.0) - i32::from(rhs.0))
    }

    fn magnitude(self) -> u8 {
        self.0.unsigned_abs()
    }

    fn is_negative(self) -> bool {
        self.0 < 0
    }

    fn from_parts(mag: u8, negative: bool) -> Self {
        let m = mag.min(Self::MAX as u8) as i8;
        if negative {
            Fixed8(-m)
        } else {
            Fixed8(m)
        }
    }

    fn mag_max() -> u8 {
        Self::MAX as u8
    }

    fn scale(mag: u8, beta: &Beta) -> u8 {
        beta.scale_fixed(mag)
    }

    fn mag_to_f64(mag: u8) -> f64 {
        f64::from(mag)
    }
}

fn float_clamp<F: Float>(v: F) -> F {
    if v.is_nan() {
        F::zero()
    } else {
        v.max(-F::max_value()).min(F::max_value())
    }
}

fn float_from_parts<F: Float>(mag: F, negative: bool) -> F {
    if negative && mag > F::zero() {
        -mag
    } else {
        mag
    }
}

macro_rules! float_llr {
    ($ty:ty, $precision:expr) => {
        impl Llr for $ty {
            type Mag = $ty;

            const PRECISION: Precision = $precision;

            fn quantize(llr: f64, cfg: &QuantConfig) -> Self {
                let v = llr.clamp(-cfg.clip, cfg.clip);
                float_clamp(<$ty as num_traits::NumCast>::from(v).unwrap_or(<$ty>::zero()))
            }

            fn to_f64(self) -> f64 {
                num_traits::ToPrimitive::to_f64(&self).unwrap_or(0.0)
            }

            fn sat_add(self, rhs: Self) -> Self {
                float_clamp(self + rhs)
            }

            fn sat_sub(self, rhs: Self) -> Self {
                float_clamp(self - rhs)
            }

            fn magnitude(self) -> Self {
                self.abs()
            }

            fn is_negative(self) -> bool {
                self < <$ty>::zero()
            }

            fn from_parts(mag: Self, negative: bool) -> Self {
                float_from_parts(mag, negative)
            }

            fn mag_max() -> Self {
                <$ty>::max_value()
            }

            fn scale(mag: Self, beta: &Beta) -> Self {
                float_clamp(mag * <$ty as num_traits::NumCast>::from(beta.value()).unwrap())
            }

            fn mag_to_f64(mag: Self) -> f64 {
                num_traits::ToPrimitive::to_f64(&mag).unwrap_or(0.0)
            }
        }
    };
}

use num_traits::Zero as _;

float_llr!(f32, Precision::F32);
float_llr!(f16, Precision::F16);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int8_quantization() {
        let cfg = QuantConfig::int8();
        assert_eq!(Fixed8::quantize(100.0, &cfg), Fixed8(127));
        assert_eq!(Fixed8::quantize(-1.0, &cfg), Fixed8(-8));
        assert_eq!(Fixed8::quantize(-1000.0, &cfg), Fixed8(-127));
        assert_eq!(Fixed8::quantize(0.0, &cfg), Fixed8(0));
    }

    #[test]
    fn int8_saturation() {
        assert_eq!(Fixed8(127).sat_sub(Fixed8(-127)), Fixed8(127));
        assert_eq!(Fixed8(-100).sat_add(Fixed8(-100)), Fixed8(-127));
        assert_eq!(Fixed8(5).sat_sub(Fixed8(0)), Fixed8(5));
    }

    #[test]
    fn sign_magnitude_round_trip() {
        for v in -127..=127i8 {
            let f = Fixed8(v);
            assert_eq!(Fixed8::from_sign_magnitude(f.to_sign_magnitude()), f);
        }
        assert_eq!(Fixed8(-3).to_sign_magnitude(), 0x83);
    }

    #[test]
    fn beta_fixed_point() {
        let beta = Beta::new(0.75).unwrap();
        assert_eq!(beta.fixed(), 192);
        assert_eq!([24u8, 16, 16].map(|m| beta.scale_fixed(m)), [18, 12, 12]);
        assert_eq!(beta.scale_fixed(127), 95);
        assert!(Beta::new(0.0).is_err());
        assert!(Beta::new(1.5).is_err());
        assert_eq!(Beta::new(1.0).unwrap().scale_fixed(127), 127);
    }

    #[test]
    fn half_rounds_to_nearest_even() {
        let cfg = QuantConfig::float(Precision::F16);
        // 1 + 2^-11 sits halfway between 1 and 1 + 2^-10; ties go to even (1.0).
        assert_eq!(f16::quantize(1.0 + 2f64.powi(-11), &cfg), f16::ONE);
        assert_eq!(f16::quantize(1e9, &cfg), f16::MAX);
        assert!(!f16::NEG_ZERO.is_negative());
        assert_eq!(f16::from_parts(f16::ZERO, true).to_bits(), 0);
    }

    #[test]
    fn float_saturates_instead_of_overflowing() {
        assert_eq!(f16::MAX.sat_add(f16::MAX), f16::MAX);
        assert_eq!(f32::MAX.sat_add(f32::MAX), f32::MAX);
    }
}

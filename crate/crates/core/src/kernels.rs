//! Packed-lane primitives for the check-node update.
//!
//! A [`LaneWord`] holds `LANES` independent LLRs, one per codeword being
//! decoded side by side. Packed words are 32 bits wide and sign-magnitude:
//! [`Packed8x4`] carries four 8-bit lanes (bit 7 of each byte is the sign),
//! [`PackedF16x2`] carries two IEEE half-precision lanes. Every scalar
//! [`Llr`] is also a one-lane `LaneWord`, which is what the scalar decoder
//! path runs on.
//!
//! Lane masks passed between kernels are compact: bit `i` refers to lane `i`.

use std::fmt::Debug;

use half::f16;

use crate::error::{Error, Result};
use crate::llr::{Beta, Fixed8, Llr};

pub const MAX_LANES: usize = 4;

/// Largest supported cooperation width.
pub const MAX_ALPHA: usize = 32;

pub trait LaneWord: Copy + Default + PartialEq + Debug + Send + Sync + 'static {
    type Lane: Llr;
    /// Lane magnitudes, packed the same way as the word.
    type Mag: Copy + PartialEq + Debug + Send + Sync;

    const LANES: usize;

    /// Packs `lanes` (exactly `LANES` values).
    fn from_lanes(lanes: &[Self::Lane]) -> Self;
    fn lane(self, i: usize) -> Self::Lane;

    fn sat_add(self, rhs: Self) -> Self;
    fn sat_sub(self, rhs: Self) -> Self;

    fn magnitudes(self) -> Self::Mag;
    /// Lanes holding a strictly negative value.
    fn sign_mask(self) -> u32;
    /// Reattaches signs; zero-magnitude lanes stay non-negative.
    fn compose(mag: Self::Mag, negative: u32) -> Self;
    /// Lane `i` from `a` where mask bit `i` is set, else from `b`.
    fn select(mask: u32, a: Self, b: Self) -> Self;

    fn mag_saturated() -> Self::Mag;
    /// Lane-wise `(min, max)`.
    fn ord(a: Self::Mag, b: Self::Mag) -> (Self::Mag, Self::Mag);
    /// Lanes where `a < b` strictly.
    fn lt_mask(a: Self::Mag, b: Self::Mag) -> u32;
    fn select_mag(mask: u32, a: Self::Mag, b: Self::Mag) -> Self::Mag;
    fn scale(mag: Self::Mag, beta: &Beta) -> Self::Mag;
    fn mag_lane(mag: Self::Mag, i: usize) -> <Self::Lane as Llr>::Mag;

    fn all_lanes() -> u32 {
        (1u32 << Self::LANES) - 1
    }

    fn splat(value: Self::Lane) -> Self {
        Self::from_lanes(&[value; MAX_LANES][..Self::LANES])
    }
}

impl<L: Llr> LaneWord for L {
    type Lane = L;
    type Mag = L::Mag;

    const LANES: usize = 1;

    fn from_lanes(lanes: &[L]) -> Self {
        assert_eq!(lanes.len(), 1);
        lanes[0]
    }

    fn lane(self, i: usize) -> L {
        debug_assert_eq!(i, 0);
        self
    }

    fn sat_add(self, rhs: Self) -> Self {
        Llr::sat_add(self, rhs)
    }

    fn sat_sub(self, rhs: Self) -> Self {
        Llr::sat_sub(self, rhs)
    }

    fn magnitudes(self) -> L::Mag {
        self.magnitude()
    }

    fn sign_mask(self) -> u32 {
        u32::from(self.is_negative())
    }

    fn compose(mag: L::Mag, negative: u32) -> Self {
        L::from_parts(mag, negative & 1 != 0)
    }

    fn select(mask: u32, a: Self, b: Self) -> Self {
        if mask & 1 != 0 {
            a
        } else {
            b
        }
    }

    fn mag_saturated() -> L::Mag {
        L::mag_max()
    }

    fn ord(a: L::Mag, b: L::Mag) -> (L::Mag, L::Mag) {
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn lt_mask(a: L::Mag, b: L::Mag) -> u32 {
        u32::from(a < b)
    }

    fn select_mag(mask: u32, a: L::Mag, b: L::Mag) -> L::Mag {
        if mask & 1 != 0 {
            a
        } else {
            b
        }
    }

    fn scale(mag: L::Mag, beta: &Beta) -> L::Mag {
        L::scale(mag, beta)
    }

    fn mag_lane(mag: L::Mag, i: usize) -> L::Mag {
        debug_assert_eq!(i, 0);
        mag
    }
}

const HIGH_BITS_8: u32 = 0x8080_8080;
const LOW_BITS_8: u32 = 0x7F7F_7F7F;

/// Byte-wise unsigned `a < b`, 0xFF per true lane (the `__vcmpltu4` result).
pub fn vcmpltu4(a: u32, b: u32) -> u32 {
    // (a_lo7 + 128) - b_lo7 cannot borrow across bytes; bit 7 of each byte is
    // then set iff a_lo7 >= b_lo7.
    let diff = (a | HIGH_BITS_8).wrapping_sub(b & LOW_BITS_8);
    let lt = ((!a & b) | (!(a ^ b) & !diff)) & HIGH_BITS_8;
    (lt >> 7) * 0xFF
}

/// Lane-wise unsigned `(min, max)` of four packed bytes.
pub fn ord_vec8(a: u32, b: u32) -> (u32, u32) {
    let mask = vcmpltu4(a, b);
    let min = (mask & a) | (!mask & b);
    let max = (!mask & a) | (mask & b);
    (min, max)
}

fn f16_lane(w: u32, i: usize) -> f16 {
    f16::from_bits((w >> (16 * i)) as u16)
}

/// Half-word lanes where `a <= b` as half-precision values, 0xFFFF per true
/// lane (the `set.le.f16x2` mask).
pub fn vset_le_f16x2(a: u32, b: u32) -> u32 {
    (0..2).fold(0, |mask, i| {
        if f16_lane(a, i) <= f16_lane(b, i) {
            mask | (0xFFFF << (16 * i))
        } else {
            mask
        }
    })
}

/// Lane-wise `(min, max)` of two packed half-precision values.
pub fn ord_vec16(a: u32, b: u32) -> (u32, u32) {
    let mask = vset_le_f16x2(a, b);
    let min = (mask & a) | (!mask & b);
    let max = (!mask & a) | (mask & b);
    (min, max)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LaneMode {
    Int8x4,
    F16x2,
}

/// Lane-wise ordering for either packing.
pub fn ord_vec(a: u32, b: u32, mode: LaneMode) -> (u32, u32) {
    match mode {
        LaneMode::Int8x4 => ord_vec8(a, b),
        LaneMode::F16x2 => ord_vec16(a, b),
    }
}

/// Expands compact lane bits to a per-byte mask.
fn byte_mask(lanes: u32) -> u32 {
    (0..4).fold(0, |m, i| {
        if lanes >> i & 1 != 0 {
            m | 0xFF << (8 * i)
        } else {
            m
        }
    })
}

fn half_mask(lanes: u32) -> u32 {
    (0..2).fold(0, |m, i| {
        if lanes >> i & 1 != 0 {
            m | 0xFFFF << (16 * i)
        } else {
            m
        }
    })
}

/// Four sign-magnitude 8-bit lanes.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Packed8x4(pub u32);

impl Packed8x4 {
    fn byte(self, i: usize) -> u8 {
        (self.0 >> (8 * i)) as u8
    }

    fn map2(self, rhs: Self, f: impl Fn(Fixed8, Fixed8) -> Fixed8) -> Self {
        Packed8x4((0..4).fold(0, |w, i| {
            let r = f(
                Fixed8::from_sign_magnitude(self.byte(i)),
                Fixed8::from_sign_magnitude(rhs.byte(i)),
            );
            w | u32::from(r.to_sign_magnitude()) << (8 * i)
        }))
    }
}

impl LaneWord for Packed8x4 {
    type Lane = Fixed8;
    type Mag = u32;

    const LANES: usize = 4;

    fn from_lanes(lanes: &[Fixed8]) -> Self {
        assert_eq!(lanes.len(), 4);
        Packed8x4(lanes.iter().enumerate().fold(0, |w, (i, l)| {
            w | u32::from(l.to_sign_magnitude()) << (8 * i)
        }))
    }

    fn lane(self, i: usize) -> Fixed8 {
        Fixed8::from_sign_magnitude(self.byte(i))
    }

    fn sat_add(self, rhs: Self) -> Self {
        self.map2(rhs, Llr::sat_add)
    }

    fn sat_sub(self, rhs: Self) -> Self {
        self.map2(rhs, Llr::sat_sub)
    }

    fn magnitudes(self) -> u32 {
        self.0 & LOW_BITS_8
    }

    fn sign_mask(self) -> u32 {
        // Only canonical words reach here, so a set sign bit implies a
        // non-zero magnitude.
        let s = self.0 & HIGH_BITS_8;
        (s >> 7 & 1) | (s >> 14 & 2) | (s >> 21 & 4) | (s >> 28 & 8)
    }

    fn compose(mag: u32, negative: u32) -> Self {
        let nonzero = (mag + LOW_BITS_8) & HIGH_BITS_8;
        Packed8x4(mag | (byte_mask(negative) & nonzero))
    }

    fn select(mask: u32, a: Self, b: Self) -> Self {
        let m = byte_mask(mask);
        Packed8x4((m & a.0) | (!m & b.0))
    }

    fn mag_saturated() -> u32 {
        LOW_BITS_8
    }

    fn ord(a: u32, b: u32) -> (u32, u32) {
        ord_vec8(a, b)
    }

    fn lt_mask(a: u32, b: u32) -> u32 {
        let m = vcmpltu4(a, b);
        (m & 1) | (m >> 7 & 2) | (m >> 14 & 4) | (m >> 21 & 8)
    }

    fn select_mag(mask: u32, a: u32, b: u32) -> u32 {
        let m = byte_mask(mask);
        (m & a) | (!m & b)
    }

    fn scale(mag: u32, beta: &Beta) -> u32 {
        (0..4).fold(0, |w, i| {
            w | u32::from(beta.scale_fixed((mag >> (8 * i)) as u8)) << (8 * i)
        })
    }

    fn mag_lane(mag: u32, i: usize) -> u8 {
        (mag >> (8 * i)) as u8
    }
}

/// Two half-precision lanes.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PackedF16x2(pub u32);

impl PackedF16x2 {
    fn map2(self, rhs: Self, f: impl Fn(f16, f16) -> f16) -> Self {
        PackedF16x2((0..2).fold(0, |w, i| {
            w | u32::from(f(f16_lane(self.0, i), f16_lane(rhs.0, i)).to_bits()) << (16 * i)
        }))
    }
}

impl LaneWord for PackedF16x2 {
    type Lane = f16;
    type Mag = u32;

    const LANES: usize = 2;

    fn from_lanes(lanes: &[f16]) -> Self {
        assert_eq!(lanes.len(), 2);
        PackedF16x2(u32::from(lanes[0].to_bits()) | u32::from(lanes[1].to_bits()) << 16)
    }

    fn lane(self, i: usize) -> f16 {
        f16_lane(self.0, i)
    }

    fn sat_add(self, rhs: Self) -> Self {
        self.map2(rhs, Llr::sat_add)
    }

    fn sat_sub(self, rhs: Self) -> Self {
        self.map2(rhs, Llr::sat_sub)
    }

    fn magnitudes(self) -> u32 {
        self.0 & 0x7FFF_7FFF
    }

    fn sign_mask(self) -> u32 {
        (0..2).fold(0, |m, i| {
            let bits = (self.0 >> (16 * i)) & 0xFFFF;
            if bits & 0x8000 != 0 && bits & 0x7FFF != 0 {
                m | 1 << i
            } else {
                m
            }
        })
    }

    fn compose(mag: u32, negative: u32) -> Self {
        let nonzero = (0..2).fold(0, |m, i| {
            if (mag >> (16 * i)) & 0x7FFF != 0 {
                m | 0x8000 << (16 * i)
            } else {
                m
            }
        });
        PackedF16x2(mag | (half_mask(negative) & nonzero))
    }

    fn select(mask: u32, a: Self, b: Self) -> Self {
        let m = half_mask(mask);
        PackedF16x2((m & a.0) | (!m & b.0))
    }

    fn mag_saturated() -> u32 {
        let max = u32::from(f16::MAX.to_bits());
        max | max << 16
    }

    fn ord(a: u32, b: u32) -> (u32, u32) {
        ord_vec16(a, b)
    }

    fn lt_mask(a: u32, b: u32) -> u32 {
        (0..2).fold(0, |m, i| {
            if f16_lane(a, i) < f16_lane(b, i) {
                m | 1 << i
            } else {
                m
            }
        })
    }

    fn select_mag(mask: u32, a: u32, b: u32) -> u32 {
        let m = half_mask(mask);
        (m & a) | (!m & b)
    }

    fn scale(mag: u32, beta: &Beta) -> u32 {
        (0..2).fold(0, |w, i| {
            w | u32::from(<f16 as Llr>::scale(f16_lane(mag, i), beta).to_bits()) << (16 * i)
        })
    }

    fn mag_lane(mag: u32, i: usize) -> f16 {
        f16_lane(mag, i)
    }
}

/// Per-lane edge identifiers of the current minimum.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tags(pub [u16; MAX_LANES]);

impl Tags {
    pub const NONE: u16 = u16::MAX;

    pub fn splat(tag: u16) -> Self {
        Tags([tag; MAX_LANES])
    }

    fn select(mask: u32, a: Tags, b: Tags) -> Tags {
        let mut out = b;
        for (i, t) in out.0.iter_mut().enumerate() {
            if mask >> i & 1 != 0 {
                *t = a.0[i];
            }
        }
        out
    }

    /// Lanes where `self` holds the smaller tag.
    fn lt_mask(&self, other: &Tags) -> u32 {
        (0..MAX_LANES).fold(0, |m, i| {
            if self.0[i] < other.0[i] {
                m | 1 << i
            } else {
                m
            }
        })
    }

    fn eq_mask(&self, tag: u16) -> u32 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &t)| if t == tag { m | 1 << i } else { m })
    }
}

/// Running min / second-min / sign state of one check row, per lane.
///
/// Signs are kept as lane masks: a set bit means the product so far is -1.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ReduceAccumulator<W: LaneWord> {
    pub m1: W::Mag,
    pub m2: W::Mag,
    pub s_vc: u32,
    pub s_v: u32,
    pub argmin: Tags,
}

impl<W: LaneWord> ReduceAccumulator<W> {
    pub fn identity() -> Self {
        ReduceAccumulator {
            m1: W::mag_saturated(),
            m2: W::mag_saturated(),
            s_vc: 0,
            s_v: 0,
            argmin: Tags::splat(Tags::NONE),
        }
    }

    /// Folds in one edge: its variable-to-check message and the posterior it
    /// was derived from.
    pub fn push(&mut self, tag: u16, v2c: W, posterior: W) {
        let x = v2c.magnitudes();
        let wins = W::lt_mask(x, self.m1) | self.argmin.eq_mask(Tags::NONE);
        let (lo, hi) = W::ord(self.m1, x);
        self.m1 = lo;
        self.m2 = W::ord(self.m2, hi).0;
        self.argmin = Tags::select(wins, Tags::splat(tag), self.argmin);
        self.s_vc ^= v2c.sign_mask();
        self.s_v ^= posterior.sign_mask();
    }

    /// Check-to-variable message for edge `tag` whose incoming message was
    /// `v2c`: magnitude `beta * m2` on the argmin edge and `beta * m1`
    /// elsewhere, sign equal to the product of all other incoming signs.
    pub fn output(&self, tag: u16, v2c: W, beta: &Beta) -> W {
        let mag = W::select_mag(self.argmin.eq_mask(tag), self.m2, self.m1);
        W::compose(W::scale(mag, beta), self.s_vc ^ v2c.sign_mask())
    }
}

/// Associative merge of two partial accumulators.
///
/// Per lane: `m1 = min(x.m1, y.m1)`, `m2 = min(max(x.m1, y.m1), x.m2, y.m2)`,
/// signs multiply, and the argmin tag follows the `m1` winner. Equal minima
/// keep the smaller tag, so the result matches a sequential scan whatever the
/// partitioning.
pub fn acc_merge<W: LaneWord>(
    x: &ReduceAccumulator<W>,
    y: &ReduceAccumulator<W>,
) -> ReduceAccumulator<W> {
    let y_less = W::lt_mask(y.m1, x.m1);
    let x_less = W::lt_mask(x.m1, y.m1);
    let y_wins = y_less | (!x_less & y.argmin.lt_mask(&x.argmin));
    let (lo, hi) = W::ord(x.m1, y.m1);
    let (sub, _) = W::ord(x.m2, y.m2);
    ReduceAccumulator {
        m1: lo,
        m2: W::ord(hi, sub).0,
        s_vc: x.s_vc ^ y.s_vc,
        s_v: x.s_v ^ y.s_v,
        argmin: Tags::select(y_wins, y.argmin, x.argmin),
    }
}

fn check_alpha(alpha: usize) -> Result<()> {
    if alpha.is_power_of_two() && alpha <= MAX_ALPHA {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Butterfly all-reduce over `partials.len()` slots, in place.
///
/// In round `k` slot `i` exchanges with slot `i ^ 2^k`; both receive
/// `acc_merge(lower, upper)`. After `log2(alpha)` rounds every slot holds the
/// same value. Returns the number of rounds.
pub fn tree_reduce_in_place<W: LaneWord>(partials: &mut [ReduceAccumulator<W>]) -> Result<u32> {
    let alpha = partials.len();
    check_alpha(alpha)?;
    let mut rounds = 0;
    let mut stride = 1;
    while stride < alpha {
        for i in (0..alpha).filter(|i| i & stride == 0) {
            let merged = acc_merge(&partials[i], &partials[i | stride]);
            partials[i] = merged;
            partials[i | stride] = merged;
        }
        stride <<= 1;
        rounds += 1;
    }
    Ok(rounds)
}

/// Butterfly all-reduce returning the broadcast slots.
pub fn tree_reduce<W: LaneWord>(
    partials: &[ReduceAccumulator<W>],
) -> Result<Vec<ReduceAccumulator<W>>> {
    let mut out = partials.to_vec();
    tree_reduce_in_place(&mut out)?;
    Ok(out)
}

/// Lane-wise saturating sign-magnitude addition.
pub fn sat_add<W: LaneWord>(a: W, b: W) -> W {
    a.sat_add(b)
}

/// Lane-wise saturating sign-magnitude subtraction.
pub fn sat_sub<W: LaneWord>(a: W, b: W) -> W {
    a.sat_sub(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack(bytes: [u8; 4]) -> u32 {
        u32::from_le_bytes(bytes)
    }

    fn packed(values: [i8; 4]) -> Packed8x4 {
        Packed8x4::from_lanes(&values.map(|v| Fixed8::saturating(v.into())))
    }

    #[test]
    fn ord_vec8_example() {
        let (min, max) = ord_vec8(pack([1, 5, 3, 7]), pack([2, 4, 3, 6]));
        assert_eq!(min.to_le_bytes(), [1, 4, 3, 6]);
        assert_eq!(max.to_le_bytes(), [2, 5, 3, 7]);
        let a = pack([9, 200, 0, 255]);
        assert_eq!(ord_vec8(a, a), (a, a));
    }

    #[test]
    fn ord_vec16_matches_values() {
        let a = PackedF16x2::from_lanes(&[f16::from_f32(1.5), f16::from_f32(0.25)]);
        let b = PackedF16x2::from_lanes(&[f16::from_f32(0.5), f16::from_f32(3.0)]);
        let (min, max) = ord_vec(a.0, b.0, LaneMode::F16x2);
        assert_eq!(f16_lane(min, 0).to_f32(), 0.5);
        assert_eq!(f16_lane(min, 1).to_f32(), 0.25);
        assert_eq!(f16_lane(max, 0).to_f32(), 1.5);
        assert_eq!(f16_lane(max, 1).to_f32(), 3.0);
    }

    #[test]
    fn packed_saturation() {
        let a = packed([127, 0, -5, 3]);
        let b = packed([-127, 0, 0, -4]);
        let lanes: Vec<i8> = (0..4).map(|i| a.sat_sub(b).lane(i).get()).collect();
        assert_eq!(lanes, vec![127, 0, -5, 7]);
        assert_eq!(a.sat_sub(Packed8x4::default()), a);
    }

    #[test]
    fn sign_mask_and_compose() {
        let w = packed([-1, 2, 0, -127]);
        assert_eq!(w.sign_mask(), 0b1001);
        assert_eq!(Packed8x4::compose(w.magnitudes(), w.sign_mask()), w);
        // zero magnitude never carries a sign
        assert_eq!(Packed8x4::compose(0, 0b1111), Packed8x4(0));
    }

    #[test]
    fn merge_example() {
        let x = ReduceAccumulator::<Fixed8> {
            m1: 1,
            m2: 3,
            s_vc: 0,
            s_v: 0,
            argmin: Tags::splat(0),
        };
        let y = ReduceAccumulator::<Fixed8> {
            m1: 2,
            m2: 2,
            s_vc: 1,
            s_v: 0,
            argmin: Tags::splat(1),
        };
        let m = acc_merge(&x, &y);
        assert_eq!((m.m1, m.m2, m.s_vc), (1, 2, 1));
        assert_eq!(m.argmin.0[0], 0);
        assert_eq!(acc_merge(&x, &ReduceAccumulator::identity()), x);
    }

    #[test]
    fn tie_keeps_smaller_tag() {
        let mk = |m1, tag| ReduceAccumulator::<Fixed8> {
            m1,
            m2: 50,
            s_vc: 0,
            s_v: 0,
            argmin: Tags::splat(tag),
        };
        let m = acc_merge(&mk(4, 7), &mk(4, 3));
        assert_eq!(m.argmin.0[0], 3);
        assert_eq!((m.m1, m.m2), (4, 4));
        assert_eq!(acc_merge(&mk(4, 3), &mk(4, 7)), m);
    }

    #[test]
    fn tree_reduce_broadcasts() {
        let parts: Vec<_> = [5u8, 2, 9, 2]
            .iter()
            .enumerate()
            .map(|(i, &m1)| ReduceAccumulator::<Fixed8> {
                m1,
                m2: 100,
                s_vc: 0,
                s_v: 0,
                argmin: Tags::splat(i as u16),
            })
            .collect();
        let mut slots = parts.clone();
        assert_eq!(tree_reduce_in_place(&mut slots).unwrap(), 2);
        assert!(slots.iter().all(|s| *s == slots[0]));
        assert_eq!((slots[0].m1, slots[0].m2), (2, 2));
        assert_eq!(slots[0].argmin.0[0], 1);

        let idle = vec![ReduceAccumulator::<Fixed8>::identity(); 2];
        assert_eq!(tree_reduce(&idle).unwrap(), idle);
        // Two copies of one contributor set pool to a tied minimum.
        let twice = tree_reduce(&[parts[0]; 2]).unwrap();
        assert_eq!((twice[0].m1, twice[0].m2), (5, 5));
        assert!(matches!(
            tree_reduce(&parts[..3]),
            Err(Error::InvalidAlpha(3))
        ));
    }
}

//! Systematic QC-LDPC encoding, syndrome evaluation, puncturing and CRC.
//!
//! Bit vectors are `u8` slices holding 0 or 1, one bit per element. When
//! bits are serialized into bytes they are packed LSB-first: bit `j` lands in
//! byte `j / 8` at position `j % 8`.

mod crc;

pub use crc::{crc_attach, crc_check, Crc, CRC16, CRC24A, CRC24B};

use num_traits::Zero;

use crate::basegraph::{code_params, BaseGraph, CodeParams, Entry, PARITY_CORE_ROWS};
use crate::error::{Error, Result};

/// A codeword of the code defined by the first `params.rows_used` base rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    pub bits: Vec<u8>,
    pub params: CodeParams,
}

impl Codeword {
    pub fn info_bits(&self) -> &[u8] {
        &self.bits[..self.params.k]
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Syndrome {
    /// Number of unsatisfied parity equations.
    pub weight: usize,
    pub satisfied: bool,
}

impl Syndrome {
    fn from_weight(weight: usize) -> Self {
        Syndrome {
            weight,
            satisfied: weight == 0,
        }
    }
}

/// `dst ^= P^shift * src` for a `Z`-bit block, where row `i` of `P^shift`
/// selects `src[(i + shift) mod Z]`.
fn xor_rotated(dst: &mut [u8], src: &[u8], shift: usize) {
    let z = dst.len();
    let (head, tail) = src.split_at(shift);
    for (d, s) in dst.iter_mut().zip(tail.iter().chain(head)) {
        *d ^= s;
    }
    debug_assert_eq!(src.len(), z);
}

/// Solves `P^shift * x = rhs` for `x`.
fn unrotate(rhs: &[u8], shift: usize) -> Vec<u8> {
    let z = rhs.len();
    (0..z).map(|j| rhs[(j + z - shift) % z]).collect()
}

/// Encodes `message` (K bits) into a systematic codeword.
///
/// The first four base rows form the double-diagonal parity core. Summing
/// them cancels the paired identity blocks of columns `K_b+1..K_b+4`, leaving
/// a single circulant on column `K_b` that is inverted directly. The other
/// three core parity blocks follow by peeling one row at a time, and every
/// extension row `r >= 4` yields parity block `K_b + r` by back-substitution.
pub fn encode(message: &[u8], bg: &BaseGraph, rows_used: usize) -> Result<Codeword> {
    let params = code_params(bg, rows_used)?;
    if message.len() != params.k {
        return Err(Error::LengthMismatch {
            expected: params.k,
            found: message.len(),
        });
    }
    let z = params.z;
    let kb = params.info_columns;
    let mut bits = vec![0u8; params.n_c];
    bits[..params.k].copy_from_slice(message);

    // Information part of each core row.
    let mut lambda = vec![vec![0u8; z]; PARITY_CORE_ROWS];
    for (r, acc) in lambda.iter_mut().enumerate() {
        for e in bg.row(r).iter().filter(|e| e.col < kb) {
            xor_rotated(acc, &bits[e.col * z..(e.col + 1) * z], e.shift);
        }
    }

    let core: Vec<&[Entry]> = (0..PARITY_CORE_ROWS).map(|r| bg.row(r)).collect();
    let core_cols = kb..kb + PARITY_CORE_ROWS;

    // Per core column, the shifts that survive pairwise cancellation when
    // the four core rows are summed.
    let surviving = |col: usize| -> Vec<usize> {
        let mut shifts: Vec<usize> = core
            .iter()
            .flat_map(|row| row.iter())
            .filter(|e| e.col == col)
            .map(|e| e.shift)
            .collect();
        shifts.sort_unstable();
        let mut odd = Vec::new();
        for s in shifts {
            if odd.last() == Some(&s) {
                odd.pop();
            } else {
                odd.push(s);
            }
        }
        odd
    };
    let first = surviving(kb);
    if first.len() != 1 || core_cols.clone().skip(1).any(|c| !surviving(c).is_empty()) {
        return Err(Error::SingularParityCore);
    }
    let lambda_sum = lambda.iter().fold(vec![0u8; z], |mut acc, l| {
        acc.iter_mut().zip(l).for_each(|(a, b)| *a ^= b);
        acc
    });
    let p0 = unrotate(&lambda_sum, first[0]);
    bits[kb * z..(kb + 1) * z].copy_from_slice(&p0);

    let mut known = [true, false, false, false];
    while known.iter().any(|k| !k) {
        let next = (0..PARITY_CORE_ROWS).find_map(|r| {
            let mut unknown = core[r]
                .iter()
                .filter(|e| core_cols.contains(&e.col) && !known[e.col - kb]);
            match (unknown.next(), unknown.next()) {
                (Some(e), None) => Some((r, *e)),
                _ => None,
            }
        });
        let (r, target) = next.ok_or(Error::SingularParityCore)?;
        let mut rhs = lambda[r].clone();
        for e in core[r]
            .iter()
            .filter(|e| core_cols.contains(&e.col) && e.col != target.col)
        {
            xor_rotated(&mut rhs, &bits[e.col * z..(e.col + 1) * z], e.shift);
        }
        let p = unrotate(&rhs, target.shift);
        bits[target.col * z..(target.col + 1) * z].copy_from_slice(&p);
        known[target.col - kb] = true;
    }

    for r in PARITY_CORE_ROWS..rows_used {
        let own = kb + r;
        let row = bg.row(r);
        let target = row
            .iter()
            .find(|e| e.col == own)
            .ok_or(Error::SingularParityCore)?;
        let mut rhs = vec![0u8; z];
        for e in row.iter().filter(|e| e.col != own) {
            if e.col > own {
                return Err(Error::SingularParityCore);
            }
            xor_rotated(&mut rhs, &bits[e.col * z..(e.col + 1) * z], e.shift);
        }
        let p = unrotate(&rhs, target.shift);
        bits[own * z..(own + 1) * z].copy_from_slice(&p);
    }

    Ok(Codeword { bits, params })
}

/// Counts violated parity equations of `bits` against the first `rows_used`
/// base rows, each expanded into `Z` equations.
pub fn syndrome(bits: &[u8], bg: &BaseGraph, rows_used: usize) -> Result<Syndrome> {
    let params = code_params(bg, rows_used)?;
    if bits.len() != params.n_c {
        return Err(Error::LengthMismatch {
            expected: params.n_c,
            found: bits.len(),
        });
    }
    Ok(Syndrome::from_weight(syndrome_weight(bits, bg, rows_used)))
}

pub(crate) fn syndrome_weight(bits: &[u8], bg: &BaseGraph, rows_used: usize) -> usize {
    let z = bg.z();
    let mut weight = 0;
    for r in 0..rows_used {
        let row = bg.row(r);
        for i in 0..z {
            let parity = row
                .iter()
                .fold(0u8, |p, e| p ^ bits[e.col * z + (i + e.shift) % z]);
            weight += usize::from(parity & 1);
        }
    }
    weight
}

/// Drops the first `2Z` (punctured) positions.
pub fn puncture(cw: &Codeword) -> Vec<u8> {
    cw.bits[cw.params.punctured()..].to_vec()
}

/// Reinserts the `2Z` punctured positions as zeros (erasures in the LLR
/// domain) in front of the transmitted values.
pub fn depuncture<T: Copy + Zero>(transmitted: &[T], params: &CodeParams) -> Result<Vec<T>> {
    if transmitted.len() != params.n_tx {
        return Err(Error::LengthMismatch {
            expected: params.n_tx,
            found: transmitted.len(),
        });
    }
    let mut out = vec![T::zero(); params.punctured()];
    out.extend_from_slice(transmitted);
    Ok(out)
}

/// Packs 0/1 values into bytes, LSB first.
pub fn pack_bits_lsb_first(bits: &[u8]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (j, &b) in bits.iter().enumerate() {
        bytes[j / 8] |= (b & 1) << (j % 8);
    }
    bytes
}

pub fn unpack_bits_lsb_first(bytes: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|j| (bytes[j / 8] >> (j % 8)) & 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegraph::{load_basegraph, BaseGraphId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let bg = load_basegraph(BaseGraphId::Bg1, 16).unwrap();
        let cw = encode(&vec![0; 22 * 16], &bg, 46).unwrap();
        assert!(cw.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn encodings_satisfy_all_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for id in [BaseGraphId::Bg1, BaseGraphId::Bg2] {
            for z in [2, 3, 5, 7, 9, 11, 13, 15, 26, 64, 384] {
                let bg = load_basegraph(id, z).unwrap();
                for rows in [4, 5, bg.rows()] {
                    let msg = random_bits(&mut rng, z * bg.info_columns());
                    let cw = encode(&msg, &bg, rows).unwrap();
                    assert_eq!(cw.info_bits(), &msg[..]);
                    assert!(
                        syndrome(&cw.bits, &bg, rows).unwrap().satisfied,
                        "{id} z={z} rows={rows}"
                    );
                }
            }
        }
    }

    #[test]
    fn encoding_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bg = load_basegraph(BaseGraphId::Bg2, 12).unwrap();
        let a = random_bits(&mut rng, 120);
        let b = random_bits(&mut rng, 120);
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let ca = encode(&a, &bg, 42).unwrap();
        let cb = encode(&b, &bg, 42).unwrap();
        let cab = encode(&ab, &bg, 42).unwrap();
        let sum: Vec<u8> = ca.bits.iter().zip(&cb.bits).map(|(x, y)| x ^ y).collect();
        assert_eq!(sum, cab.bits);
    }

    #[test]
    fn wrong_message_length() {
        let bg = load_basegraph(BaseGraphId::Bg2, 2).unwrap();
        assert!(matches!(
            encode(&[0; 19], &bg, 42),
            Err(Error::LengthMismatch {
                expected: 20,
                found: 19
            })
        ));
    }

    #[test]
    fn single_flip_hits_column_weight_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bg = load_basegraph(BaseGraphId::Bg2, 8).unwrap();
        let cw = encode(&random_bits(&mut rng, 80), &bg, 42).unwrap();
        for col in [0, 1, 5, 10, 11, 30] {
            let mut bits = cw.bits.clone();
            bits[col * 8 + 3] ^= 1;
            let s = syndrome(&bits, &bg, 42).unwrap();
            assert_eq!(s.weight, bg.col_weights()[col]);
            assert!(!s.satisfied);
        }
    }

    #[test]
    fn puncture_and_depuncture() {
        let bg = load_basegraph(BaseGraphId::Bg2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cw = encode(&random_bits(&mut rng, 20), &bg, 42).unwrap();
        let tx = puncture(&cw);
        assert_eq!(tx.len(), 100);
        assert_eq!(tx[0], cw.bits[4]);
        let back = depuncture(&tx, &cw.params).unwrap();
        assert_eq!(&back[..4], &[0, 0, 0, 0]);
        assert_eq!(&back[4..], &cw.bits[4..]);
        assert!(depuncture(&tx[1..], &cw.params).is_err());
    }

    #[test]
    fn lsb_first_packing_is_pinned() {
        let bits = [1, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        assert_eq!(pack_bits_lsb_first(&bits), vec![0x01, 0x02]);
        assert_eq!(unpack_bits_lsb_first(&[0x01, 0x02], 10), bits.to_vec());
    }
}

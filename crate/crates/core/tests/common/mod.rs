//! Reference implementations used as test oracles. None of these share code
//! with the library beyond the shift tables themselves.

#![allow(dead_code)]

use nrldpc::basegraph::BaseGraph;

/// Dense parity-check matrix, one `Vec<u64>` bitset per row.
#[derive(Clone, Debug)]
pub struct DenseH {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<Vec<u64>>,
}

impl DenseH {
    /// Lifts the first `rows_used` base rows: block `(r, c)` with shift `s`
    /// puts a one at `(r*Z + i, c*Z + (i + s) mod Z)`.
    pub fn new(bg: &BaseGraph, rows_used: usize) -> Self {
        let z = bg.z();
        let m = rows_used * z;
        let n = (bg.info_columns() + rows_used) * z;
        let words = n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; m];
        for e in bg.entries().iter().filter(|e| e.row < rows_used) {
            for i in 0..z {
                let c = e.col * z + (i + e.shift) % z;
                rows[e.row * z + i][c / 64] ^= 1 << (c % 64);
            }
        }
        DenseH { m, n, rows }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }

    /// Number of unsatisfied checks.
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        assert_eq!(bits.len(), self.n);
        let x = to_words(bits);
        self.rows
            .iter()
            .filter(|row| {
                row.iter()
                    .zip(&x)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum::<u32>()
                    % 2
                    == 1
            })
            .count()
    }
}

pub fn to_words(bits: &[u8]) -> Vec<u64> {
    let mut w = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        w[i / 64] |= u64::from(b & 1) << (i % 64);
    }
    w
}

/// Systematic encoder by Gaussian elimination of the parity part of `H`.
pub struct GaussianEncoder {
    k: usize,
    n: usize,
    /// Row `t` gives parity bit `t` as a dot product with the message.
    gen: Vec<Vec<u64>>,
}

impl GaussianEncoder {
    pub fn new(h: &DenseH, k: usize) -> Self {
        let mut rows = h.rows.clone();
        let m = h.m;
        assert_eq!(h.n - k, m, "parity part must be square");
        for t in 0..m {
            let c = k + t;
            let pivot = (t..m)
                .find(|&r| rows[r][c / 64] >> (c % 64) & 1 == 1)
                .expect("parity part is singular");
            rows.swap(t, pivot);
            let p = rows[t].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != t && row[c / 64] >> (c % 64) & 1 == 1 {
                    row.iter_mut().zip(&p).for_each(|(a, b)| *a ^= b);
                }
            }
        }
        // Keep only the message columns of each reduced row.
        let kw = k.div_ceil(64);
        let gen = rows
            .into_iter()
            .map(|mut row| {
                row.truncate(kw);
                if !k.is_multiple_of(64) {
                    row[kw - 1] &= (1u64 << (k % 64)) - 1;
                }
                row
            })
            .collect();
        GaussianEncoder { k, n: h.n, gen }
    }

    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        assert_eq!(message.len(), self.k);
        let s = to_words(message);
        let mut out = message.to_vec();
        out.extend(self.gen.iter().map(|g| {
            (g.iter()
                .zip(&s)
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
                % 2) as u8
        }));
        debug_assert_eq!(out.len(), self.n);
        out
    }
}

/// Two smallest values and the lowest index attaining the smallest, by sorting.
pub fn two_smallest(mags: &[u32]) -> (u32, u32, usize) {
    let mut idx: Vec<usize> = (0..mags.len()).collect();
    idx.sort_by_key(|&i| (mags[i], i));
    (mags[idx[0]], mags[idx[1]], idx[0])
}

/// Bit-serial LFSR CRC (MSB first, zero init, no reflection or final XOR).
pub fn lfsr_crc(bits: &[u8], width: u32, poly: u32) -> u32 {
    let top = 1u32 << (width - 1);
    let mask = if width == 32 {
        u32::MAX
    } else {
        (1 << width) - 1
    };
    let mut reg = 0u32;
    for &b in bits {
        let feedback = (reg & top != 0) ^ (b & 1 == 1);
        reg = (reg << 1) & mask;
        if feedback {
            reg ^= poly;
        }
    }
    reg
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefOutcome {
    pub bits: Vec<u8>,
    pub iterations: usize,
    pub syndrome_ok: bool,
}

/// Textbook 8-bit layered normalized min-sum with syndrome stopping.
///
/// Values are plain `i32` clamped to `[-127, 127]`; the normalization is
/// `floor(m * q8 / 256)`.
pub fn reference_int8_layered(
    bg: &BaseGraph,
    rows_used: usize,
    channel: &[i8],
    q8: u32,
    max_iter: usize,
) -> RefOutcome {
    let z = bg.z();
    let k = z * bg.info_columns();
    let h = DenseH::new(bg, rows_used);
    assert_eq!(channel.len(), h.n);
    let clamp = |v: i32| v.clamp(-127, 127);
    let mut post: Vec<i32> = channel.iter().map(|&v| i32::from(v)).collect();

    // Variable indices of every check, grouped by base row.
    let checks: Vec<Vec<Vec<usize>>> = (0..rows_used)
        .map(|r| {
            (0..z)
                .map(|i| {
                    bg.row(r)
                        .iter()
                        .map(|e| e.col * z + (i + e.shift) % z)
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut msgs: Vec<Vec<Vec<i32>>> = checks
        .iter()
        .map(|row| row.iter().map(|vars| vec![0; vars.len()]).collect())
        .collect();

    let hard = |post: &[i32]| post.iter().map(|&v| u8::from(v < 0)).collect::<Vec<u8>>();
    for it in 1..=max_iter {
        for (row, row_msgs) in checks.iter().zip(msgs.iter_mut()) {
            for (vars, m) in row.iter().zip(row_msgs.iter_mut()) {
                let t: Vec<i32> = vars
                    .iter()
                    .zip(m.iter())
                    .map(|(&v, &r)| clamp(post[v] - r))
                    .collect();
                let mags: Vec<u32> = t.iter().map(|v| v.unsigned_abs()).collect();
                let (m1, m2, arg) = two_smallest(&mags);
                let negatives = t.iter().filter(|&&v| v < 0).count();
                for (j, &v) in vars.iter().enumerate() {
                    let mag = if j == arg { m2 } else { m1 };
                    let mag = (mag * q8 / 256) as i32;
                    let others_negative = negatives - usize::from(t[j] < 0);
                    let out = if others_negative % 2 == 1 { -mag } else { mag };
                    m[j] = out;
                    post[v] = clamp(t[j] + out);
                }
            }
        }
        let bits = hard(&post);
        let ok = h.syndrome_weight(&bits) == 0;
        if ok || it == max_iter {
            return RefOutcome {
                bits: bits[..k].to_vec(),
                iterations: it,
                syndrome_ok: ok,
            };
        }
    }
    unreachable!("max_iter is at least 1")
}

/// A random message (CRC-protected when `K > 24`) and its transmitted-position channel LLRs.
pub fn noisy_llrs(
    bg: &BaseGraph,
    rows_used: usize,
    ebn0_db: Option<f64>,
    seed: u64,
) -> (Vec<u8>, Vec<f64>) {
    use nrldpc::channel::{bpsk_awgn, bpsk_modulate, demap_llr, ebn0_to_sigma};
    use nrldpc::codec::{encode, puncture, CRC24B};
    use rand::{Rng, SeedableRng};

    let params = nrldpc::code_params(bg, rows_used).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let message = if params.k > CRC24B.width() {
        let payload: Vec<u8> = (0..params.k - CRC24B.width())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        CRC24B.attach(&payload)
    } else {
        (0..params.k).map(|_| rng.random_range(0..2u8)).collect()
    };
    let tx = puncture(&encode(&message, bg, rows_used).unwrap());
    let llrs = match ebn0_db {
        Some(db) => {
            let sigma = ebn0_to_sigma(db, params.k as f64 / params.n_tx as f64);
            demap_llr(&bpsk_awgn(&tx, sigma, rng.random()).unwrap(), sigma).unwrap()
        }
        None => demap_llr(&bpsk_modulate::<f64>(&tx), 1.0).unwrap(),
    };
    (message, llrs)
}

//! Dense binary matrices, bit-packed per row.

/// A dense matrix over GF(2). Row `i` occupies `words_per_row` `u64`s,
/// column `j` is bit `j % 64` of word `j / 64`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BinaryMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let word = &mut self.data[i * self.words_per_row + j / 64];
        let bit = 1u64 << (j % 64);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// Packed words of row `i`.
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn col_weight(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, j)).count()
    }

    /// `H * x` over GF(2) for a 0/1 vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &[u8]) -> Vec<u8> {
        assert_eq!(x.len(), self.cols);
        let packed = pack_words(x);
        (0..self.rows)
            .map(|i| {
                let ones: u32 = self
                    .row_words(i)
                    .iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                (ones & 1) as u8
            })
            .collect()
    }
}

fn pack_words(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (j, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            words[j / 64] |= 1 << (j % 64);
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_multiply() {
        let mut m = BinaryMatrix::zeros(2, 70);
        m.set(0, 0, true);
        m.set(0, 69, true);
        m.set(1, 65, true);
        assert!(m.get(0, 69));
        assert_eq!(m.count_ones(), 3);
        assert_eq!(m.row_weight(0), 2);
        assert_eq!(m.col_weight(65), 1);

        let mut x = vec![0u8; 70];
        x[0] = 1;
        x[65] = 1;
        assert_eq!(m.mul_vec(&x), vec![1, 1]);
        x[69] = 1;
        assert_eq!(m.mul_vec(&x), vec![0, 1]);

        m.set(0, 0, false);
        assert!(!m.get(0, 0));
    }
}

//! Dense matrices over GF(2) with bit-packed rows.
//!
//! Row `r` is stored as `words_per_row` 64-bit words; column `c` of that row
//! is bit `c % 64` of word `c / 64`. Addition is XOR.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self {
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

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of bounds");
        (self.data[r * self.words_per_row + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of bounds");
        let w = &mut self.data[r * self.words_per_row + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    /// Add 1 to entry `(r, c)`.
    pub fn flip(&mut self, r: usize, c: usize) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of bounds");
        self.data[r * self.words_per_row + c / 64] ^= 1 << (c % 64);
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// `self * rhs` over GF(2).
    pub fn mul(&self, rhs: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = BitMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let wpr = out.words_per_row;
                    let src = rhs.row(k).to_vec();
                    for (dst, s) in out.data[r * wpr..(r + 1) * wpr].iter_mut().zip(src) {
                        *dst ^= s;
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Rank by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let wpr = m.words_per_row;
        let mut rank = 0;
        for c in 0..m.cols {
            let (word, bit) = (c / 64, 1u64 << (c % 64));
            let Some(pivot) = (rank..m.rows).find(|&r| m.data[r * wpr + word] & bit != 0) else {
                continue;
            };
            if pivot != rank {
                for w in 0..wpr {
                    m.data.swap(pivot * wpr + w, rank * wpr + w);
                }
            }
            for r in 0..m.rows {
                if r != rank && m.data[r * wpr + word] & bit != 0 {
                    for w in word..wpr {
                        let v = m.data[rank * wpr + w];
                        m.data[r * wpr + w] ^= v;
                    }
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }
}

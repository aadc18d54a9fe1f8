//! Square boolean matrix packed into 64-bit words, row-major.

use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> BitMatrix {
        let words_per_row = n.div_ceil(64);
        BitMatrix {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.n && col < self.n);
        self.bits[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.n && col < self.n);
        self.bits[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    fn or_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words_per_row;
        for k in 0..w {
            let v = self.bits[src * w + k];
            self.bits[dst * w + k] |= v;
        }
    }

    /// Warshall closure: `R(i,j)` iff a path of length >= 1 leads from i to j.
    pub fn transitive_closure(&self) -> BitMatrix {
        let mut r = self.clone();
        for k in 0..self.n {
            for i in 0..self.n {
                if r.get(i, k) {
                    r.or_row_into(k, i);
                }
            }
        }
        r
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..=i).all(|j| !self.get(i, j)))
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: String = (0..self.n)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

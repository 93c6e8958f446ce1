//! Dense GF(2) linear algebra: rank, null space, codeword enumeration.

use super::{Codeword, TannerError, TannerGraph};

/// Largest code dimension `enumerate_codewords` walks by default.
pub const DEFAULT_ENUM_CAP: usize = 28;

/// Row-major bit matrix packed into `u64` words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>], cols: usize) -> Self {
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for w in 0..self.words {
            let v = self.data[src * self.words + w];
            self.data[dst * self.words + w] ^= v;
        }
    }

    /// Reduced row echelon form in place; returns the pivot column of each
    /// leading row.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&k| self.get(k, c)) else {
                continue;
            };
            self.swap_rows(r, p);
            for k in 0..self.rows {
                if k != r && self.get(k, c) {
                    self.xor_row_into(r, k);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Multiplies by a bit vector; returns the syndrome.
    pub fn mul_vec(&self, x: &[u8]) -> Vec<u8> {
        (0..self.rows)
            .map(|r| {
                self.row_words(r)
                    .iter()
                    .enumerate()
                    .flat_map(|(w, &word)| {
                        (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b)
                    })
                    .map(|c| x[c])
                    .fold(0, |a, b| a ^ b)
            })
            .collect()
    }
}

/// Basis of `{x : H x = 0}`, one vector per free column of the RREF.
pub fn gf2_nullspace(h: &BitMatrix) -> Vec<Codeword> {
    let mut r = h.clone();
    let pivots = r.rref();
    let mut is_pivot = vec![false; h.cols()];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..h.cols())
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut bits = vec![0u8; h.cols()];
            bits[f] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                if r.get(row, f) {
                    bits[pc] = 1;
                }
            }
            Codeword::new(bits)
        })
        .collect()
}

/// Gray-code walk over the span of a basis. Each step XORs exactly one
/// basis vector into the current word, which lets callers update objectives
/// incrementally.
pub struct GrayWalk {
    basis: Vec<Codeword>,
    current: Vec<u8>,
    step: u64,
    total: u64,
}

impl GrayWalk {
    pub fn new(n: usize, basis: Vec<Codeword>) -> Self {
        let total = 1u64 << basis.len();
        GrayWalk {
            basis,
            current: vec![0; n],
            step: 0,
            total,
        }
    }

    pub fn basis(&self) -> &[Codeword] {
        &self.basis
    }

    pub fn current(&self) -> &[u8] {
        &self.current
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Advances to the next word. The first call leaves the all-zeros word in
    /// place and returns `Some(None)`; later calls return the basis index that
    /// was added. `None` once every word has been produced.
    pub fn advance(&mut self) -> Option<Option<usize>> {
        if self.step >= self.total {
            return None;
        }
        let flipped = if self.step == 0 {
            None
        } else {
            let k = self.step.trailing_zeros() as usize;
            for (c, &b) in self.current.iter_mut().zip(self.basis[k].bits()) {
                *c ^= b;
            }
            Some(k)
        };
        self.step += 1;
        Some(flipped)
    }
}

/// Iterator over every codeword of the graph's code.
pub struct CodewordIter {
    walk: GrayWalk,
}

impl Iterator for CodewordIter {
    type Item = Codeword;

    fn next(&mut self) -> Option<Codeword> {
        self.walk.advance()?;
        Some(Codeword::new(self.walk.current().to_vec()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.walk.total - self.walk.step) as usize;
        (left, Some(left))
    }
}

/// All `2^(n - rank H)` codewords, refused when the dimension exceeds `cap`.
pub fn enumerate_codewords(graph: &TannerGraph, cap: usize) -> Result<CodewordIter, TannerError> {
    let basis = gf2_nullspace(&graph.parity_matrix());
    if basis.len() > cap || basis.len() >= 64 {
        return Err(TannerError::DimensionCap {
            dimension: basis.len(),
            cap,
        });
    }
    Ok(CodewordIter {
        walk: GrayWalk::new(graph.n(), basis),
    })
}

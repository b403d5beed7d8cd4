use rand::Rng;

use super::bec::ErasedWord;
use crate::error::{Error, Result};

/// Messages are packed into a `u64`, one bit per generator row.
pub const MAX_CODE_DIMENSION: usize = 64;

/// Binary linear code given by an `r x n` generator matrix, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Code {
    r: usize,
    n: usize,
    /// Bit `i` of `columns[j]` is the generator entry at row `i`, column `j`.
    columns: Vec<u64>,
}

impl Gf2Code {
    /// Builds a code from generator rows (`rows[i][j]` is entry `(i, j)`).
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 || r > MAX_CODE_DIMENSION {
            return Err(Error::invalid("r", format!("must lie in 1..={MAX_CODE_DIMENSION}")));
        }
        let n = rows[0].len();
        if n < r {
            return Err(Error::invalid("n", format!("blocklength {n} is shorter than r = {r}")));
        }
        let mut columns = vec![0u64; n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &bit) in row.iter().enumerate() {
                if bit {
                    columns[j] |= 1 << i;
                }
            }
        }
        Ok(Self { r, n, columns })
    }

    /// The `r x r` identity padded with zero columns up to length `n`.
    pub fn systematic_identity(r: usize, n: usize) -> Result<Self> {
        let rows: Vec<Vec<bool>> = (0..r).map(|i| (0..n).map(|j| i == j).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        (self.columns[col] >> row) & 1 == 1
    }

    pub fn columns(&self) -> &[u64] {
        &self.columns
    }

    /// Codeword `u G` for the message whose bit `i` multiplies row `i`.
    pub fn encode(&self, message: u64) -> Vec<bool> {
        debug_assert!(self.r == 64 || message >> self.r == 0);
        self.columns.iter().map(|&c| (c & message).count_ones() & 1 == 1).collect()
    }
}

/// Draws an `r x n` generator with i.i.d. fair bits, filled row by row.
pub fn random_code<R: Rng + ?Sized>(rng: &mut R, r: usize, n: usize) -> Result<Gf2Code> {
    if r == 0 || r > MAX_CODE_DIMENSION {
        return Err(Error::invalid("r", format!("must lie in 1..={MAX_CODE_DIMENSION}")));
    }
    if n < r {
        return Err(Error::invalid("n", format!("blocklength {n} is shorter than r = {r}")));
    }
    let mut columns = vec![0u64; n];
    for i in 0..r {
        for col in columns.iter_mut() {
            if rng.random::<bool>() {
                *col |= 1 << i;
            }
        }
    }
    Ok(Gf2Code { r, n, columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeResult {
    Decoded(u64),
    Failure,
}

/// Erasure decoding by Gaussian elimination over GF(2) on the surviving positions.
///
/// Succeeds exactly when the surviving columns have rank `r` and the
/// observed bits are consistent, so a word that only suffered erasures is
/// never mis-decoded.
pub fn decode_erasures(code: &Gf2Code, recv: &ErasedWord) -> Result<DecodeResult> {
    if recv.len() != code.n {
        return Err(Error::DimensionMismatch { expected: code.n, got: recv.len() });
    }
    // pivots[b] holds an equation whose highest set bit is b.
    let mut pivots: Vec<Option<(u64, bool)>> = vec![None; code.r];
    let mut rank = 0;
    for (&col, sym) in code.columns.iter().zip(recv) {
        let Some(bit) = *sym else { continue };
        let (mut mask, mut rhs) = (col, bit);
        while mask != 0 {
            let top = 63 - mask.leading_zeros() as usize;
            match pivots[top] {
                Some((pm, pr)) => {
                    mask ^= pm;
                    rhs ^= pr;
                }
                None => {
                    pivots[top] = Some((mask, rhs));
                    rank += 1;
                    break;
                }
            }
        }
        if mask == 0 && rhs {
            return Ok(DecodeResult::Failure);
        }
    }
    if rank < code.r {
        return Ok(DecodeResult::Failure);
    }
    let mut message = 0u64;
    for (b, pivot) in pivots.iter().enumerate() {
        let (mask, rhs) = pivot.expect("full rank");
        let lower = mask & !(1u64 << b);
        let value = rhs ^ ((lower & message).count_ones() & 1 == 1);
        if value {
            message |= 1 << b;
        }
    }
    Ok(DecodeResult::Decoded(message))
}

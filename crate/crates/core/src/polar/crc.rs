use super::PolarError;
use crate::gf2::DenseBitMatrix;

/// A CRC viewed as a systematic linear block code of length `m + r`.
///
/// `poly` holds the generator polynomial with bit `i` the coefficient of
/// `xⁱ`, including the leading `xʳ` term (e.g. `0x43` is `x⁶ + x + 1`).
/// Message bit 0 is the highest-degree coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrcSpec {
    poly: u64,
    r: usize,
    m: usize,
}

impl CrcSpec {
    /// Default polynomial `x⁶ + x + 1`.
    pub const DEFAULT_POLY: u64 = 0x43;

    pub fn new(poly: u64, m: usize) -> Result<Self, PolarError> {
        if poly == 0 || poly >> 63 != 0 {
            return Err(PolarError::BadPolynomial(poly));
        }
        let r = 63 - poly.leading_zeros() as usize;
        if poly & 1 == 0 && r > 0 {
            // x | g(x) would leave the last CRC bit constant
            return Err(PolarError::BadPolynomial(poly));
        }
        Ok(CrcSpec { poly, r, m })
    }

    /// The degenerate CRC with no check bits.
    pub fn none(m: usize) -> Self {
        CrcSpec { poly: 1, r: 0, m }
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `msg(x) · xʳ mod g(x)`, highest-degree coefficient first.
    pub fn remainder(&self, msg: &[u8]) -> Vec<u8> {
        if self.r == 0 {
            return Vec::new();
        }
        let mask = (1u64 << self.r) - 1;
        let mut reg = 0u64;
        for &b in msg {
            let feedback = ((reg >> (self.r - 1)) & 1) ^ u64::from(b & 1);
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.poly & mask;
            }
        }
        (0..self.r)
            .map(|i| ((reg >> (self.r - 1 - i)) & 1) as u8)
            .collect()
    }

    /// Systematic encoding: `msg` followed by its `r` CRC bits.
    pub fn append(&self, msg: &[u8]) -> Result<Vec<u8>, PolarError> {
        if msg.len() != self.m {
            return Err(PolarError::LengthMismatch {
                expected: self.m,
                found: msg.len(),
            });
        }
        let mut out = msg.to_vec();
        out.extend(self.remainder(msg));
        Ok(out)
    }

    pub fn check(&self, word: &[u8]) -> bool {
        word.len() == self.m + self.r && self.remainder(&word[..self.m]) == word[self.m..]
    }

    /// `m × (m + r)` systematic generator `[I_m | P]`.
    pub fn generator(&self) -> DenseBitMatrix {
        let mut g = DenseBitMatrix::zeros(self.m, self.m + self.r);
        let mut e = vec![0u8; self.m];
        for i in 0..self.m {
            e[i] = 1;
            g.set(i, i, true);
            for (j, b) in self.remainder(&e).into_iter().enumerate() {
                if b == 1 {
                    g.set(i, self.m + j, true);
                }
            }
            e[i] = 0;
        }
        g
    }

    /// `r × (m + r)` parity-check matrix `[Pᵀ | I_r]`.
    pub fn parity_check(&self) -> DenseBitMatrix {
        let g = self.generator();
        let mut h = DenseBitMatrix::zeros(self.r, self.m + self.r);
        for i in 0..self.m {
            for j in 0..self.r {
                if g.get(i, self.m + j) {
                    h.set(j, i, true);
                }
            }
        }
        for j in 0..self.r {
            h.set(j, self.m + j, true);
        }
        h
    }
}

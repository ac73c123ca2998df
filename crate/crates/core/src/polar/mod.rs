//! Polar code construction and encoding, CRC outer codes, and a plain
//! successive-cancellation decoder used as a baseline.
//!
//! Indices are 0-based throughout. The full generator is
//! `G_N = B_N · F^{⊗n}` with `F = [[1,0],[1,1]]` and `B_N` the bit-reversal
//! permutation, and codewords are `cᵀ = uᵀ G_N`.

mod crc;
mod sc;
mod spec_file;

pub use crc::CrcSpec;
pub use sc::{sc_decode, ScOutput};
pub use spec_file::CodeSpecFile;

use crate::gf2::DenseBitMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error("log2 blocklength must be in 1..=20, got {0}")]
    BadLength(usize),
    #[error("dimension {k} exceeds blocklength {n}")]
    BadDimension { k: usize, n: usize },
    #[error("expected {expected} bits, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("CRC message length {m} + {r} CRC bits must equal polar dimension {k}")]
    CrcMismatch { m: usize, r: usize, k: usize },
    #[error("invalid CRC polynomial {0:#x}")]
    BadPolynomial(u64),
    #[error("invalid code spec: {0}")]
    InvalidSpec(String),
}

/// Reverses the low `bits` bits of `i`.
#[inline]
pub fn bit_reverse(i: usize, bits: usize) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS as usize - bits)
    }
}

/// `G_N = B_N F^{⊗n}` as an `N × N` matrix.
pub fn full_generator(n: usize) -> DenseBitMatrix {
    let size = 1usize << n;
    // F^{⊗n}[i][j] = 1 iff the bits of j are a subset of the bits of i.
    DenseBitMatrix::from_fn(size, size, |i, j| {
        let src = bit_reverse(i, n);
        j & !src == 0
    })
}

/// `cᵀ = uᵀ G_N` in `O(N log N)`. Since `G_N` is an involution this also
/// maps a codeword back to its input word.
pub fn polar_transform(u: &[u8]) -> Vec<u8> {
    let size = u.len();
    assert!(size.is_power_of_two(), "length must be a power of two");
    let n = size.trailing_zeros() as usize;
    let mut x: Vec<u8> = (0..size).map(|k| u[bit_reverse(k, n)]).collect();
    for b in 0..n {
        let bit = 1 << b;
        for k in 0..size {
            if k & bit == 0 {
                x[k] ^= x[k | bit];
            }
        }
    }
    x
}

/// Polar code parameters: log-blocklength, dimension and the information
/// set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCodeSpec {
    n: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    design_param: f64,
}

impl PolarCodeSpec {
    /// Freezes the `N − K` synthetic channels with the largest Bhattacharyya
    /// parameter, computed by the BEC recursion `Z⁻ = 2Z − Z²`, `Z⁺ = Z²`
    /// from `Z = design_erasure`. Ties freeze the larger index first.
    pub fn construct(n: usize, k: usize, design_erasure: f64) -> Result<Self, PolarError> {
        if n == 0 || n > 20 {
            return Err(PolarError::BadLength(n));
        }
        let size = 1 << n;
        if k > size {
            return Err(PolarError::BadDimension { k, n: size });
        }
        let z = bhattacharyya(n, design_erasure);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(b.cmp(&a)));
        let mut frozen = vec![false; size];
        for &i in &order[..size - k] {
            frozen[i] = true;
        }
        let mut spec = Self::from_frozen(n, frozen)?;
        spec.design_param = design_erasure;
        Ok(spec)
    }

    /// Builds from an explicit frozen mask.
    pub fn from_frozen(n: usize, frozen: Vec<bool>) -> Result<Self, PolarError> {
        if n == 0 || n > 20 {
            return Err(PolarError::BadLength(n));
        }
        if frozen.len() != 1 << n {
            return Err(PolarError::LengthMismatch {
                expected: 1 << n,
                found: frozen.len(),
            });
        }
        let info_set = (0..frozen.len()).filter(|&i| !frozen[i]).collect();
        Ok(PolarCodeSpec {
            n,
            info_set,
            frozen,
            design_param: f64::NAN,
        })
    }

    pub fn log_n(&self) -> usize {
        self.n
    }

    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.block_len()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn design_param(&self) -> f64 {
        self.design_param
    }

    /// Places `info` on the information set, zeros elsewhere.
    pub fn embed(&self, info: &[u8]) -> Result<Vec<u8>, PolarError> {
        if info.len() != self.k() {
            return Err(PolarError::LengthMismatch {
                expected: self.k(),
                found: info.len(),
            });
        }
        let mut u = vec![0u8; self.block_len()];
        for (&pos, &b) in self.info_set.iter().zip(info) {
            u[pos] = b;
        }
        Ok(u)
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, PolarError> {
        Ok(polar_transform(&self.embed(info)?))
    }

    /// The standard `(N−K) × N` PCM: columns of `G_N` at frozen indices,
    /// transposed.
    pub fn standard_pcm(&self) -> DenseBitMatrix {
        let g = full_generator(self.n);
        g.select_columns(&self.frozen_set()).transpose()
    }
}

/// Bhattacharyya parameters of the `N` synthetic channels.
pub fn bhattacharyya(n: usize, design_erasure: f64) -> Vec<f64> {
    let mut z = vec![design_erasure];
    for _ in 0..n {
        let mut next = Vec::with_capacity(z.len() * 2);
        for &v in &z {
            next.push(2.0 * v - v * v);
            next.push(v * v);
        }
        z = next;
    }
    z
}

/// A polar code concatenated with an outer CRC on its information bits.
#[derive(Debug, Clone)]
pub struct AugmentedCodeSpec {
    pub polar: PolarCodeSpec,
    pub crc: CrcSpec,
}

impl AugmentedCodeSpec {
    pub fn new(polar: PolarCodeSpec, crc: CrcSpec) -> Result<Self, PolarError> {
        if crc.m() + crc.r() != polar.k() {
            return Err(PolarError::CrcMismatch {
                m: crc.m(),
                r: crc.r(),
                k: polar.k(),
            });
        }
        Ok(AugmentedCodeSpec { polar, crc })
    }

    /// A polar code with no outer CRC.
    pub fn plain(polar: PolarCodeSpec) -> Self {
        let crc = CrcSpec::none(polar.k());
        AugmentedCodeSpec { polar, crc }
    }

    pub fn block_len(&self) -> usize {
        self.polar.block_len()
    }

    /// Message length `m`.
    pub fn dimension(&self) -> usize {
        self.crc.m()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.block_len() as f64
    }

    /// Message → (CRC-protected information bits, codeword).
    pub fn encode(&self, msg: &[u8]) -> Result<(Vec<u8>, Vec<u8>), PolarError> {
        let info = self.crc.append(msg)?;
        let c = self.polar.encode(&info)?;
        Ok((info, c))
    }

    /// `G_aug = G_crc · G_N(𝒜)`.
    pub fn generator(&self) -> DenseBitMatrix {
        let g = full_generator(self.polar.log_n());
        self.crc.generator().mul(&g.select_rows(self.polar.info_set()))
    }

    /// CRC constraints expressed on the codeword: `H_crc · G_Nᵀ`, with
    /// `H_crc` widened to act on the full input word.
    pub fn crc_rows_on_codeword(&self) -> DenseBitMatrix {
        let size = self.block_len();
        let h = self.crc.parity_check();
        let mut wide = DenseBitMatrix::zeros(h.n_rows(), size);
        for r in 0..h.n_rows() {
            for (j, &pos) in self.polar.info_set().iter().enumerate() {
                if h.get(r, j) {
                    wide.set(r, pos, true);
                }
            }
        }
        wide.mul(&full_generator(self.polar.log_n()).transpose())
    }

    /// Full-row-rank `(N − m) × N` PCM: the standard polar PCM stacked on
    /// the CRC rows.
    pub fn parity_check(&self) -> DenseBitMatrix {
        self.polar.standard_pcm().vstack(&self.crc_rows_on_codeword())
    }

    /// Whether `u` has zero frozen bits and a passing CRC on its
    /// information positions.
    pub fn input_word_valid(&self, u: &[u8]) -> bool {
        if self.polar.frozen_set().iter().any(|&f| u[f] != 0) {
            return false;
        }
        let info: Vec<u8> = self.polar.info_set().iter().map(|&i| u[i]).collect();
        self.crc.check(&info)
    }

    /// Codeword membership via the inverse transform.
    pub fn is_codeword(&self, c: &[u8]) -> bool {
        c.len() == self.block_len() && self.input_word_valid(&polar_transform(c))
    }

    /// Recovers the message bits from a codeword of this code.
    pub fn message_of(&self, c: &[u8]) -> Vec<u8> {
        let u = polar_transform(c);
        self.polar.info_set()[..self.dimension()]
            .iter()
            .map(|&i| u[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Kronecker power of F followed by bit-reversal of the rows, computed
    /// directly from the definition.
    fn kron_oracle(n: usize) -> DenseBitMatrix {
        let mut m = vec![vec![1u8]];
        for _ in 0..n {
            let s = m.len();
            let mut next = vec![vec![0u8; 2 * s]; 2 * s];
            for (bi, fi) in [[1u8, 0], [1, 1]].iter().enumerate() {
                for (bj, &f) in fi.iter().enumerate() {
                    for i in 0..s {
                        for j in 0..s {
                            next[bi * s + i][bj * s + j] = f & m[i][j];
                        }
                    }
                }
            }
            m = next;
        }
        let rows: Vec<Vec<u8>> = (0..m.len()).map(|i| m[bit_reverse(i, n)].clone()).collect();
        DenseBitMatrix::from_rows(&rows)
    }

    #[test]
    fn generator_examples() {
        assert_eq!(full_generator(1), DenseBitMatrix::from_strs(&["10", "11"]));
        assert_eq!(
            full_generator(2),
            DenseBitMatrix::from_strs(&["1000", "1010", "1100", "1111"])
        );
        for n in 1..=6 {
            assert_eq!(full_generator(n), kron_oracle(n));
        }
        for n in 1..=4 {
            let g = full_generator(n);
            assert_eq!(g.mul(&g), DenseBitMatrix::identity(1 << n));
        }
    }

    #[test]
    fn transform_matches_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=7 {
            let g = full_generator(n);
            for _ in 0..10 {
                let u: Vec<u8> = (0..1 << n).map(|_| rng.random_range(0..2)).collect();
                assert_eq!(polar_transform(&u), g.vec_mul(&u));
                assert_eq!(polar_transform(&polar_transform(&u)), u);
            }
        }
    }

    #[test]
    fn frozen_set_examples() {
        let full = PolarCodeSpec::construct(3, 8, 0.5).unwrap();
        assert!(full.frozen_set().is_empty());
        let empty = PolarCodeSpec::construct(3, 0, 0.5).unwrap();
        assert_eq!(empty.frozen_set().len(), 8);

        // Z(u1) = 2·0.5 − 0.25 = 0.75, Z(u2) = 0.25
        let z = bhattacharyya(1, 0.5);
        assert_eq!(z, vec![0.75, 0.25]);
        let one = PolarCodeSpec::construct(1, 1, 0.5).unwrap();
        assert_eq!(one.frozen_set(), vec![0]);
        assert_eq!(one.info_set(), &[1]);
    }

    #[test]
    fn frozen_ties_freeze_larger_index() {
        // Z = 1 makes every channel useless, so all Z are equal.
        let spec = PolarCodeSpec::construct(2, 2, 1.0).unwrap();
        assert_eq!(spec.frozen_set(), vec![2, 3]);
    }

    #[test]
    fn encode_examples() {
        let spec = PolarCodeSpec::construct(4, 8, 0.5).unwrap();
        assert_eq!(spec.encode(&[0; 8]).unwrap(), vec![0; 16]);
        let g = full_generator(4);
        for (j, &pos) in spec.info_set().iter().enumerate() {
            let mut info = vec![0u8; 8];
            info[j] = 1;
            assert_eq!(spec.encode(&info).unwrap(), g.row(pos));
        }
        let small = PolarCodeSpec::from_frozen(2, vec![true, true, false, false]).unwrap();
        assert_eq!(small.encode(&[1, 0]).unwrap(), vec![1, 1, 0, 0]);
        assert!(matches!(
            small.encode(&[1]),
            Err(PolarError::LengthMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn codewords_lie_in_standard_pcm_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, k) in [(3, 4), (5, 16), (6, 20)] {
            let spec = PolarCodeSpec::construct(n, k, 0.5).unwrap();
            let h = spec.standard_pcm();
            assert_eq!(h.rank(), (1 << n) - k);
            for _ in 0..50 {
                let info: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
                let c = spec.encode(&info).unwrap();
                assert!(h.mul_vec(&c).iter().all(|&b| b == 0));
            }
        }
    }

    #[test]
    fn augmented_codewords_pass_crc() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let polar = PolarCodeSpec::construct(6, 38, 0.5).unwrap();
        let aug = AugmentedCodeSpec::new(polar, CrcSpec::new(0x43, 32).unwrap()).unwrap();
        let g_aug = aug.generator();
        let h = aug.parity_check();
        assert_eq!(h.n_rows(), 64 - 32);
        assert_eq!(h.rank(), 64 - 32);
        for _ in 0..100 {
            let msg: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            let (_, c) = aug.encode(&msg).unwrap();
            assert_eq!(c, g_aug.vec_mul(&msg));
            assert!(aug.is_codeword(&c));
            assert!(h.mul_vec(&c).iter().all(|&b| b == 0));
            assert_eq!(aug.message_of(&c), msg);
        }
    }
}

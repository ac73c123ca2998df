use super::{bit_reverse, polar_transform, PolarCodeSpec};

/// Magnitude used in place of infinite LLRs.
const LLR_CLAMP: f64 = 1e100;

#[derive(Debug, Clone, PartialEq)]
pub struct ScOutput {
    pub codeword: Vec<u8>,
    pub input: Vec<u8>,
    /// Information decisions taken on an LLR of exactly zero.
    pub guesses: usize,
}

/// Successive-cancellation decoding. Positive LLR favours bit 0; zero LLRs
/// decide 0 and are counted as guesses.
pub fn sc_decode(spec: &PolarCodeSpec, llr: &[f64]) -> ScOutput {
    let size = spec.block_len();
    assert_eq!(llr.len(), size, "LLR length must equal blocklength");
    let n = spec.log_n();
    // SC runs on x = u F^{⊗n}, whose entry m is codeword bit bitrev(m).
    let x_llr: Vec<f64> = (0..size)
        .map(|m| llr[bit_reverse(m, n)].clamp(-LLR_CLAMP, LLR_CLAMP))
        .collect();
    let mut u = Vec::with_capacity(size);
    let mut guesses = 0;
    recurse(&x_llr, spec.frozen_mask(), &mut u, &mut guesses);
    ScOutput {
        codeword: polar_transform(&u),
        input: u,
        guesses,
    }
}

fn f(a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * a.abs().min(b.abs())
}

/// Decodes `u F^{⊗k}` from `llr`, appending decisions to `u` and
/// returning the re-encoded partial codeword.
fn recurse(llr: &[f64], frozen: &[bool], u: &mut Vec<u8>, guesses: &mut usize) -> Vec<u8> {
    if llr.len() == 1 {
        let bit = if frozen[0] {
            0
        } else {
            if llr[0] == 0.0 {
                *guesses += 1;
            }
            u8::from(llr[0] < 0.0)
        };
        u.push(bit);
        return vec![bit];
    }
    let h = llr.len() / 2;
    let (left, right) = llr.split_at(h);
    let upper: Vec<f64> = left.iter().zip(right).map(|(&a, &b)| f(a, b)).collect();
    let xa = recurse(&upper, &frozen[..h], u, guesses);
    let lower: Vec<f64> = (0..h)
        .map(|i| if xa[i] == 0 { right[i] + left[i] } else { right[i] - left[i] })
        .collect();
    let xb = recurse(&lower, &frozen[h..], u, guesses);
    let mut out: Vec<u8> = xa.iter().zip(&xb).map(|(a, b)| a ^ b).collect();
    out.extend_from_slice(&xb);
    out
}

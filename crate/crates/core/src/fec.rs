//! Rate-1/2 convolutional code, constraint length 7, generators (171, 133)
//! octal, zero-tailed, with a soft-input Viterbi decoder.

pub const CONSTRAINT: usize = 7;
pub const MEMORY: usize = CONSTRAINT - 1;
pub const GENERATORS: [u32; 2] = [0o171, 0o133];
const STATES: usize = 1 << MEMORY;

#[inline]
fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output pair for input `u` leaving state `s`; the register holds `u` in
/// its top bit and the six previous inputs below it, newest first.
#[inline]
fn branch(s: usize, u: u8) -> (u8, u8) {
    let reg = ((u as u32) << MEMORY) | s as u32;
    (parity(reg & GENERATORS[0]), parity(reg & GENERATORS[1]))
}

#[inline]
fn next_state(s: usize, u: u8) -> usize {
    ((u as usize) << (MEMORY - 1)) | (s >> 1)
}

/// Number of coded bits for `k` information bits.
pub fn coded_len(k: usize) -> usize {
    2 * (k + MEMORY)
}

/// Largest payload whose codeword fits in `n` coded bits.
pub fn payload_len(n: usize) -> Option<usize> {
    (n / 2).checked_sub(MEMORY).filter(|&k| k > 0)
}

pub fn encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coded_len(bits.len()));
    let mut s = 0usize;
    for &u in bits.iter().chain(std::iter::repeat_n(&0u8, MEMORY)) {
        let (a, b) = branch(s, u & 1);
        out.push(a);
        out.push(b);
        s = next_state(s, u & 1);
    }
    out
}

/// Maximum-likelihood decoding of a zero-tailed codeword from per-bit LLRs
/// (positive favours 0). Returns the information bits without the tail.
pub fn viterbi_decode(llrs: &[f64]) -> Vec<u8> {
    assert!(
        llrs.len().is_multiple_of(2) && llrs.len() >= 2 * MEMORY,
        "llr count {}",
        llrs.len()
    );
    let steps = llrs.len() / 2;
    let mut table = [[(0usize, 0u8, 0u8); 2]; STATES];
    for (s, row) in table.iter_mut().enumerate() {
        for u in 0..2u8 {
            let (a, b) = branch(s, u);
            row[u as usize] = (next_state(s, u), a, b);
        }
    }
    let mut metric = [f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut from = vec![[0u8; STATES]; steps];
    for t in 0..steps {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        let mut next = [f64::NEG_INFINITY; STATES];
        let tail = t >= steps - MEMORY;
        for s in 0..STATES {
            let m = metric[s];
            if m == f64::NEG_INFINITY {
                continue;
            }
            for &(ns, a, b) in &table[s][..if tail { 1 } else { 2 }] {
                let bm = if a == 0 { l0 } else { -l0 } + if b == 0 { l1 } else { -l1 };
                let cand = m + bm;
                if cand > next[ns] {
                    next[ns] = cand;
                    // predecessor's low bit is the one shifted out
                    from[t][ns] = (s & 1) as u8;
                }
            }
        }
        metric = next;
    }
    let mut bits = vec![0u8; steps];
    let mut s = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (s >> (MEMORY - 1)) as u8 & 1;
        s = ((s << 1) & (STATES - 1)) | from[t][s] as usize;
    }
    bits.truncate(steps - MEMORY);
    bits
}

/// Hard bits to saturated LLRs of magnitude `mag`.
pub fn hard_to_llr(bits: &[u8], mag: f64) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { mag } else { -mag }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn impulse_response_is_the_generator_taps() {
        let out = encode(&[1]);
        assert_eq!(out.len(), 14);
        let g0: Vec<u8> = out.iter().step_by(2).copied().collect();
        let g1: Vec<u8> = out.iter().skip(1).step_by(2).copied().collect();
        // 171 = 1111001, 133 = 1011011
        assert_eq!(g0, vec![1, 1, 1, 1, 0, 0, 1]);
        assert_eq!(g1, vec![1, 0, 1, 1, 0, 1, 1]);
    }

    #[test]
    fn encoder_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
            let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
            let ex: Vec<u8> = encode(&a).iter().zip(encode(&b)).map(|(p, q)| p ^ q).collect();
            assert_eq!(encode(&x), ex);
        }
    }

    #[test]
    fn clean_and_single_error_decoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let msg: Vec<u8> = (0..94).map(|_| rng.random_range(0..2)).collect();
        let code = encode(&msg);
        assert_eq!(code.len(), 200);
        assert_eq!(payload_len(200), Some(94));
        let mut llr = hard_to_llr(&code, 5.0);
        assert_eq!(viterbi_decode(&llr), msg);
        for i in [0, 17, 100, 199] {
            llr[i] = -llr[i];
            assert_eq!(viterbi_decode(&llr), msg);
            llr[i] = -llr[i];
        }
        // free distance 10: four scattered flips are still corrected
        for i in [3, 60, 120, 180] {
            llr[i] = -llr[i];
        }
        assert_eq!(viterbi_decode(&llr), msg);
    }

    #[test]
    fn soft_awgn_sanity() {
        // BPSK at Eb/N0 = 5 dB; coded BER should be far below 1e-3
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ebn0 = 10f64.powf(0.5);
        let n0 = 1.0 / (0.5 * ebn0);
        let sigma = (n0 / 2.0).sqrt();
        let (mut errors, mut total) = (0usize, 0usize);
        for _ in 0..400 {
            let msg: Vec<u8> = (0..500).map(|_| rng.random_range(0..2)).collect();
            let llr: Vec<f64> = encode(&msg)
                .iter()
                .map(|&c| {
                    let x = if c == 0 { 1.0 } else { -1.0 };
                    let n: f64 = rng.sample(rand_distr::StandardNormal);
                    4.0 * (x + sigma * n) / n0
                })
                .collect();
            let dec = viterbi_decode(&llr);
            errors += dec.iter().zip(&msg).filter(|(a, b)| a != b).count();
            total += msg.len();
        }
        assert!((errors as f64 / total as f64) < 1e-3, "{errors}/{total}");
    }
}

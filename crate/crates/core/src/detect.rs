//! Soft detection at the access points, joint recovery at the central unit,
//! and the CoMP soft-forwarding baselines.
//!
//! LLR sign convention: positive favours bit 0.

use num_complex::Complex64;

use crate::error::{PncError, Result};
use crate::gf2::{BinaryMatrix, BitVector};
use crate::modem::JointCombinationTable;
use crate::superposition::{ClusterPartition, SuperimposedConstellation};

/// Magnitude at which every LLR is clipped.
pub const LLR_CLIP: f64 = 30.0;
/// Default saturation range of the backhaul LLR quantiser.
pub const QUANT_RANGE: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct NcvLlr {
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackhaulKind {
    PncNcv,
    CompLlr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackhaulMessage {
    pub kind: BackhaulKind,
    pub payload: Vec<u8>,
    pub bit_count: usize,
}

/// Per-bit LLRs of `labels` (an `nbits`-wide word per point) given sample
/// `r`, written into `out`. `max_log` replaces the log-sum by its largest term.
pub fn bit_llrs_into(
    r: Complex64,
    points: &[Complex64],
    labels: impl Fn(usize) -> u64,
    nbits: usize,
    sigma2: f64,
    max_log: bool,
    out: &mut [f64],
) {
    debug_assert!(sigma2 > 0.0 && nbits <= 16);
    let metric = |p: &Complex64| -(r - p).norm_sqr() / sigma2;
    let metrics = || points.iter().map(metric).enumerate();
    let top = points.iter().map(metric).fold(f64::NEG_INFINITY, f64::max);
    if max_log {
        let mut zero = [f64::NEG_INFINITY; 16];
        let mut one = [f64::NEG_INFINITY; 16];
        for (k, m) in metrics() {
            let label = labels(k);
            for t in 0..nbits {
                let slot = if (label >> (nbits - 1 - t)) & 1 == 0 {
                    &mut zero[t]
                } else {
                    &mut one[t]
                };
                *slot = slot.max(m);
            }
        }
        for t in 0..nbits {
            out[t] = finish(zero[t] - one[t]);
        }
        return;
    }
    // sums of exp(metric - top); the largest term is 1, so no underflow to
    // an all-zero total on both sides
    let mut zero = [0.0f64; 16];
    let mut one = [0.0f64; 16];
    for (k, m) in metrics() {
        let w = (m - top).exp();
        let label = labels(k);
        for t in 0..nbits {
            if (label >> (nbits - 1 - t)) & 1 == 0 {
                zero[t] += w;
            } else {
                one[t] += w;
            }
        }
    }
    for t in 0..nbits {
        out[t] = finish(zero[t].ln() - one[t].ln());
    }
}

fn finish(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-LLR_CLIP, LLR_CLIP)
    }
}

fn check_sigma(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(PncError::Contract(format!("noise variance {sigma2} must be positive")))
    }
}

/// LLR of every bit of the access point's network codeword.
pub fn ncv_llr(r: Complex64, sc: &SuperimposedConstellation, part: &ClusterPartition, sigma2: f64) -> Result<NcvLlr> {
    check_sigma(sigma2)?;
    let l = part.mapping().rows();
    let mut values = vec![0.0; l];
    bit_llrs_into(r, sc.points(), |k| part.ncv_of(k), l, sigma2, false, &mut values);
    Ok(NcvLlr { values })
}

/// Max-log variant of [`ncv_llr`].
pub fn ncv_llr_max_log(
    r: Complex64,
    sc: &SuperimposedConstellation,
    part: &ClusterPartition,
    sigma2: f64,
) -> Result<NcvLlr> {
    check_sigma(sigma2)?;
    let l = part.mapping().rows();
    let mut values = vec![0.0; l];
    bit_llrs_into(r, sc.points(), |k| part.ncv_of(k), l, sigma2, true, &mut values);
    Ok(NcvLlr { values })
}

/// Hard decision; a zero LLR decides 0.
pub fn ncv_hard(llr: &NcvLlr) -> BitVector {
    let bits: Vec<u8> = llr.values.iter().map(|&v| u8::from(v < 0.0)).collect();
    BitVector::from_bits(&bits).expect("codeword fits a word")
}

/// Stacks the forwarded codewords and applies the inverse global matrix.
pub fn cpu_decode(ncvs: &[BitVector], global: &BinaryMatrix) -> Result<BitVector> {
    let mut stacked = *ncvs
        .first()
        .ok_or_else(|| PncError::Contract("no codewords to decode".into()))?;
    for x in &ncvs[1..] {
        stacked = stacked.concat(x)?;
    }
    if stacked.len() != global.rows() {
        return Err(PncError::Contract(format!(
            "{} codeword bits for a {}-row global matrix",
            stacked.len(),
            global.rows()
        )));
    }
    Ok(global.invert()?.mat_mul(&stacked)?)
}

/// Marginal LLR of every source bit of the joint message at one access point.
pub fn comp_source_llr(
    r: Complex64,
    h_row: &[Complex64],
    table: &JointCombinationTable,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_sigma(sigma2)?;
    let sc = crate::superposition::superimpose(h_row, table)?;
    let m_s = table.total_bits();
    let mut out = vec![0.0; m_s];
    bit_llrs_into(r, sc.points(), |k| k as u64, m_s, sigma2, false, &mut out);
    Ok(out)
}

/// Uniform midrise quantiser on `[−range, range]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LlrQuantizer {
    pub bits: u32,
    pub range: f64,
}

impl LlrQuantizer {
    pub fn new(bits: u32, range: f64) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(PncError::config("scheme", format!("{bits} bits per LLR")));
        }
        if range.is_nan() || range <= 0.0 {
            return Err(PncError::config("quant_range", "must be positive"));
        }
        Ok(LlrQuantizer { bits, range })
    }

    fn levels(&self) -> u32 {
        1 << self.bits
    }

    fn step(&self) -> f64 {
        2.0 * self.range / self.levels() as f64
    }

    pub fn index(&self, x: f64) -> u32 {
        let i = ((x + self.range) / self.step()).floor();
        i.clamp(0.0, (self.levels() - 1) as f64) as u32
    }

    pub fn level(&self, index: u32) -> f64 {
        -self.range + (index as f64 + 0.5) * self.step()
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.level(self.index(x))
    }
}

pub fn quantize_llr(llrs: &[f64], q: &LlrQuantizer) -> (Vec<f64>, BackhaulMessage) {
    let mut payload = Vec::with_capacity(llrs.len() * q.bits as usize);
    let values = llrs
        .iter()
        .map(|&x| {
            let i = q.index(x);
            payload.extend((0..q.bits).rev().map(|b| ((i >> b) & 1) as u8));
            q.level(i)
        })
        .collect();
    let bit_count = payload.len();
    (
        values,
        BackhaulMessage {
            kind: BackhaulKind::CompLlr,
            payload,
            bit_count,
        },
    )
}

pub fn ncv_message(x: &BitVector) -> BackhaulMessage {
    BackhaulMessage {
        kind: BackhaulKind::PncNcv,
        payload: x.to_bits(),
        bit_count: x.len(),
    }
}

/// Backhaul bits per symbol: PNC forwards `Σ l_j = m_s` codeword bits.
pub fn pnc_backhaul_bits(total_bits: usize) -> usize {
    total_bits
}

/// Backhaul bits per symbol for CoMP: every AP forwards `m_s` quantised LLRs.
pub fn comp_backhaul_bits(n_aps: usize, total_bits: usize, bits_per_llr: usize) -> usize {
    n_aps * total_bits * bits_per_llr
}

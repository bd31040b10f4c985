//! One fading block end to end: terminals, multi-access channel, access
//! point processing, backhaul and central-unit decoding.
//!
//! Each bit position of the joint message carries its own codeword across
//! the block (terminal 1's bits first, most significant first), so every
//! linear combination of positions is itself a codeword.

use num_complex::Complex64;
use rand::Rng;

use super::config::{ExperimentConfig, FecMode, PncDecoding, Scheme};
use crate::detect::{bit_llrs_into, LlrQuantizer};
use crate::error::{PncError, Result};
use crate::fec;
use crate::mapper::{CandidateStore, SelectionOptions, SelectionResult, Selector};
use crate::modem::JointCombinationTable;
use crate::phy::{draw_channel, estimate_channel, transmit, NoiseModel};
use crate::superposition::{partition_clusters, superimpose};

/// Magnitude given to hard decisions fed to the Viterbi decoder.
const HARD_LLR: f64 = 1.0;
const IDEAL_LLR_BITS: f64 = 64.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BlockTally {
    pub blocks: u64,
    pub bit_errors: u64,
    pub bits: u64,
    /// Blocks whose selection from the estimated channel differs from the
    /// selection with the true channel.
    pub mismapped: u64,
    /// Blocks where no candidate stack was invertible.
    pub fallbacks: u64,
}

impl std::ops::AddAssign for BlockTally {
    fn add_assign(&mut self, o: Self) {
        self.blocks += o.blocks;
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.mismapped += o.mismapped;
        self.fallbacks += o.fallbacks;
    }
}

/// Bits per LLR slot for a total budget, spread evenly with the remainder
/// going to the most significant joint bits first. Slot `j * m_s + t` is
/// bit `t` at access point `j`.
pub fn quantizer_allocation(total_bits: usize, n_aps: usize, m_s: usize) -> Vec<usize> {
    let n = n_aps * m_s;
    let mut alloc = vec![total_bits / n; n];
    let mut extra = total_bits % n;
    'outer: for t in 0..m_s {
        for j in 0..n_aps {
            if extra == 0 {
                break 'outer;
            }
            alloc[j * m_s + t] += 1;
            extra -= 1;
        }
    }
    alloc
}

pub struct Link<'s> {
    cfg: &'s ExperimentConfig,
    table: JointCombinationTable,
    selector: Selector<'s>,
    quantizers: Vec<Option<LlrQuantizer>>,
}

impl<'s> Link<'s> {
    pub fn new(cfg: &'s ExperimentConfig, store: &'s CandidateStore) -> Result<Self> {
        cfg.validate()?;
        if store.mods() != cfg.pair() {
            return Err(PncError::config(
                "mods",
                "candidate store was built for other modulations",
            ));
        }
        let m_s = cfg.total_bits();
        let quantizers = match cfg.scheme {
            Scheme::CompQuant { total_bits } => quantizer_allocation(total_bits, cfg.n_aps(), m_s)
                .into_iter()
                .map(|b| match b {
                    0 => Ok(None),
                    b => LlrQuantizer::new(b as u32, cfg.quant_range).map(Some),
                })
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Link {
            cfg,
            table: JointCombinationTable::new(&cfg.mods)?,
            selector: Selector::new(store, SelectionOptions { pool: cfg.pool }),
            quantizers,
        })
    }

    pub fn backhaul_bits_per_symbol(&self) -> f64 {
        let m_s = self.cfg.total_bits();
        match self.cfg.scheme {
            Scheme::Pnc => match (self.cfg.pnc_decoding, self.cfg.fec) {
                (PncDecoding::Ap, FecMode::ConvK7) => {
                    (m_s * self.cfg.payload_per_stream()) as f64 / self.cfg.block_len as f64
                }
                _ => crate::detect::pnc_backhaul_bits(m_s) as f64,
            },
            Scheme::CompIdeal => IDEAL_LLR_BITS * (self.cfg.n_aps() * m_s) as f64,
            Scheme::CompQuant { total_bits } => total_bits as f64,
        }
    }

    fn select(&self, h: &[[Complex64; 2]], noise: &NoiseModel) -> Result<(SelectionResult, bool)> {
        match self.selector.select(h, noise.sigma2().sqrt()) {
            Ok(s) => Ok((s, false)),
            Err(PncError::SelectionFailure) => Ok((SelectionResult::identity_split(self.selector.store(), h)?, true)),
            Err(e) => Err(e),
        }
    }

    fn encode_stream(&self, info: &[u8]) -> Vec<u8> {
        match self.cfg.fec {
            FecMode::None => info.to_vec(),
            FecMode::ConvK7 => fec::encode(info),
        }
    }

    fn decode_stream(&self, llrs: &[f64]) -> Vec<u8> {
        match self.cfg.fec {
            FecMode::None => llrs.iter().map(|&v| u8::from(v < 0.0)).collect(),
            FecMode::ConvK7 => fec::viterbi_decode(llrs),
        }
    }

    /// Simulates one block. With `compare_genie`, the selection made from
    /// the channel the receivers use is checked against the selection the
    /// true channel would give.
    pub fn run_block<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        noise: &NoiseModel,
        compare_genie: bool,
    ) -> Result<BlockTally> {
        let cfg = self.cfg;
        let n_aps = cfg.n_aps();
        let m_s = cfg.total_bits();
        let n = cfg.block_len;
        let k = cfg.payload_per_stream();

        let ch = draw_channel(rng, &cfg.path_loss_db, n_aps, 2, n)?;
        let h_true: Vec<[Complex64; 2]> = ch.h.iter().map(|r| [r[0], r[1]]).collect();
        let h_used: Vec<[Complex64; 2]> = if cfg.pilot_len == 0 {
            h_true.clone()
        } else {
            h_true
                .iter()
                .map(|h| estimate_channel(cfg.pilot_len, h, Some(noise), rng).map(|e| [e[0], e[1]]))
                .collect::<Result<_>>()?
        };

        let info: Vec<Vec<u8>> = (0..m_s)
            .map(|_| (0..k).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let coded: Vec<Vec<u8>> = info.iter().map(|s| self.encode_stream(s)).collect();
        let messages: Vec<usize> = (0..n)
            .map(|t| coded.iter().fold(0usize, |acc, s| (acc << 1) | s[t] as usize))
            .collect();
        let received: Vec<Vec<Complex64>> = h_true
            .iter()
            .map(|h| {
                messages
                    .iter()
                    .map(|&b| transmit(self.table.symbols(b), h, Some(noise), rng))
                    .collect()
            })
            .collect();

        let mut tally = BlockTally {
            blocks: 1,
            bits: (m_s * k) as u64,
            ..Default::default()
        };
        let decoded = match cfg.scheme {
            Scheme::Pnc => {
                let (sel, fallback) = self.select(&h_used, noise)?;
                tally.fallbacks = u64::from(fallback);
                if compare_genie {
                    let (genie, _) = self.select(&h_true, noise)?;
                    tally.mismapped = u64::from(genie.global != sel.global);
                }
                self.pnc_receive(&sel, &h_used, &received, noise.sigma2())?
            }
            _ => self.comp_receive(&h_used, &received, noise.sigma2())?,
        };
        tally.bit_errors = info
            .iter()
            .zip(&decoded)
            .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count() as u64)
            .sum();
        Ok(tally)
    }

    fn pnc_receive(
        &self,
        sel: &SelectionResult,
        h_used: &[[Complex64; 2]],
        received: &[Vec<Complex64>],
        sigma2: f64,
    ) -> Result<Vec<Vec<u8>>> {
        let m_s = self.cfg.total_bits();
        let n = self.cfg.block_len;
        // ncv_llr[row of the global matrix][symbol]
        let mut ncv_llr: Vec<Vec<f64>> = Vec::with_capacity(m_s);
        for ((ap, h), r) in sel.per_ap.iter().zip(h_used).zip(received) {
            let sc = superimpose(h, &self.table)?;
            let part = partition_clusters(&ap.mapping, &self.table)?;
            let l = ap.rows();
            let mut rows = vec![vec![0.0; n]; l];
            let mut buf = [0.0; 16];
            for (t, &y) in r.iter().enumerate() {
                bit_llrs_into(y, sc.points(), |p| part.ncv_of(p), l, sigma2, false, &mut buf);
                for (row, v) in rows.iter_mut().zip(&buf[..l]) {
                    row[t] = *v;
                }
            }
            ncv_llr.extend(rows);
        }
        let inv = &sel.global_inverse;
        let unmix = |streams: &[Vec<u8>]| -> Vec<Vec<u8>> {
            let len = streams[0].len();
            let mut out = vec![vec![0u8; len]; m_s];
            for t in 0..len {
                let x = streams.iter().fold(0u64, |acc, s| (acc << 1) | s[t] as u64);
                let b = inv.mul_word(x);
                for (s, o) in out.iter_mut().enumerate() {
                    o[t] = ((b >> (m_s - 1 - s)) & 1) as u8;
                }
            }
            out
        };
        Ok(match self.cfg.pnc_decoding {
            PncDecoding::Cpu => {
                let hard: Vec<Vec<u8>> = ncv_llr
                    .iter()
                    .map(|row| row.iter().map(|&v| u8::from(v < 0.0)).collect())
                    .collect();
                unmix(&hard)
                    .iter()
                    .map(|s| self.decode_stream(&fec::hard_to_llr(s, HARD_LLR)))
                    .collect()
            }
            PncDecoding::Ap => {
                let decoded: Vec<Vec<u8>> = ncv_llr.iter().map(|row| self.decode_stream(row)).collect();
                unmix(&decoded)
            }
        })
    }

    fn comp_receive(
        &self,
        h_used: &[[Complex64; 2]],
        received: &[Vec<Complex64>],
        sigma2: f64,
    ) -> Result<Vec<Vec<u8>>> {
        let m_s = self.cfg.total_bits();
        let n = self.cfg.block_len;
        let mut total = vec![vec![0.0; n]; m_s];
        let mut buf = [0.0; 16];
        for (j, (h, r)) in h_used.iter().zip(received).enumerate() {
            let sc = superimpose(h, &self.table)?;
            for (t, &y) in r.iter().enumerate() {
                bit_llrs_into(y, sc.points(), |p| p as u64, m_s, sigma2, false, &mut buf);
                for s in 0..m_s {
                    let v = match self.quantizers.get(j * m_s + s) {
                        None => buf[s],
                        Some(None) => 0.0,
                        Some(Some(q)) => q.quantize(buf[s]),
                    };
                    total[s][t] += v;
                }
            }
        }
        Ok(total.iter().map(|s| self.decode_stream(s)).collect())
    }
}

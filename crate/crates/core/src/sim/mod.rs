//! Monte Carlo experiments: BER sweeps and mis-mapping probability.
//!
//! Every block draws from its own ChaCha stream keyed by (seed, SNR point,
//! block index), and blocks are tallied in fixed-size batches, so results do
//! not depend on how many worker threads run them.

pub mod config;
pub mod csv;
pub mod link;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, FecMode, PncDecoding, Scheme, KEYS};
pub use csv::{emit_csv, load_csv, parse_csv, render_csv};
pub use link::{quantizer_allocation, BlockTally, Link};

use crate::error::{PncError, Result};
use crate::mapper::{offline_search, CandidateStore};
use crate::phy::NoiseModel;

/// Error events below which a BER estimate is flagged as low confidence.
pub const CONFIDENCE_ERRORS: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    pub backhaul_bits_per_symbol: f64,
    pub mismap_prob: Option<f64>,
    pub wallclock_s: f64,
}

impl ResultRecord {
    pub fn low_confidence(&self) -> bool {
        self.bit_errors < CONFIDENCE_ERRORS
    }
}

pub fn block_rng(seed: u64, point: usize, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(point as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PncError::config("workers", e.to_string()))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Ber,
    Mismap,
}

fn run_points(cfg: &ExperimentConfig, store: &CandidateStore, mode: Mode) -> Result<Vec<ResultRecord>> {
    let link = Link::new(cfg, store)?;
    let pool = thread_pool(cfg.workers)?;
    let mut records = Vec::with_capacity(cfg.snr_db.len());
    for (point, &snr_db) in cfg.snr_db.iter().enumerate() {
        let start = Instant::now();
        let noise = NoiseModel::from_snr_db(snr_db, &cfg.path_loss_db)?;
        let mut tally = BlockTally::default();
        let trials = cfg.trials as u64;
        while tally.blocks < trials {
            let end = (tally.blocks + cfg.batch as u64).min(trials);
            let batch: Vec<BlockTally> = pool.install(|| {
                (tally.blocks..end)
                    .into_par_iter()
                    .map(|b| link.run_block(&mut block_rng(cfg.seed, point, b), &noise, mode == Mode::Mismap))
                    .collect::<Result<_>>()
            })?;
            for t in batch {
                tally += t;
            }
            if mode == Mode::Ber && tally.bit_errors >= cfg.target_errors as u64 {
                break;
            }
        }
        records.push(ResultRecord {
            snr_db,
            ber: tally.bit_errors as f64 / tally.bits as f64,
            bit_errors: tally.bit_errors,
            bits_simulated: tally.bits,
            backhaul_bits_per_symbol: link.backhaul_bits_per_symbol(),
            mismap_prob: (mode == Mode::Mismap).then(|| tally.mismapped as f64 / tally.blocks as f64),
            wallclock_s: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        });
    }
    Ok(records)
}

/// BER sweep. Each SNR point runs until `target_errors` bit errors or
/// `trials` blocks, whichever comes first.
pub fn run_ber_with_store(cfg: &ExperimentConfig, store: &CandidateStore) -> Result<Vec<ResultRecord>> {
    run_points(cfg, store, Mode::Ber)
}

pub fn run_ber(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    run_ber_with_store(cfg, &offline_search(cfg.pair()))
}

/// Mis-mapping sweep: every SNR point runs exactly `trials` blocks with
/// pilot-estimated channels, comparing each selection with the one the true
/// channel gives. The BER columns report PNC with the estimated channel.
pub fn run_mismap_with_store(cfg: &ExperimentConfig, store: &CandidateStore) -> Result<Vec<ResultRecord>> {
    if cfg.pilot_len == 0 {
        return Err(PncError::config(
            "pilot_len",
            "mis-mapping needs at least one pilot symbol",
        ));
    }
    if cfg.scheme != Scheme::Pnc {
        return Err(PncError::config("scheme", "mis-mapping applies to pnc only"));
    }
    run_points(cfg, store, Mode::Mismap)
}

pub fn run_mismap(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    run_mismap_with_store(cfg, &offline_search(cfg.pair()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::Modulation::{Bpsk, Qpsk};

    fn small(scheme: Scheme) -> ExperimentConfig {
        ExperimentConfig {
            mods: vec![Qpsk, Bpsk],
            scheme,
            snr_db: vec![0.0, 10.0],
            trials: 20,
            block_len: 40,
            batch: 4,
            ..Default::default()
        }
    }

    #[test]
    fn high_snr_is_error_free() {
        for scheme in [Scheme::Pnc, Scheme::CompIdeal, Scheme::CompQuant { total_bits: 24 }] {
            let cfg = ExperimentConfig {
                snr_db: vec![60.0],
                trials: 200,
                fec: FecMode::None,
                block_len: 100,
                ..small(scheme)
            };
            let r = run_ber(&cfg).unwrap();
            // a deep fade can still swamp 60 dB, so allow a handful
            assert!(r[0].bits_simulated >= 60_000);
            assert!(r[0].ber < 1e-3, "{scheme}: {:?}", r[0]);
        }
    }

    #[test]
    fn stopping_rule_and_accounting() {
        let cfg = ExperimentConfig {
            target_errors: 10,
            ..small(Scheme::Pnc)
        };
        let r = run_ber(&cfg).unwrap();
        let k = cfg.payload_per_stream() as u64 * 3;
        for rec in &r {
            assert_eq!(rec.bits_simulated % k, 0);
            assert!(rec.bits_simulated <= 20 * k);
            assert_eq!(rec.ber, rec.bit_errors as f64 / rec.bits_simulated as f64);
            assert_eq!(rec.backhaul_bits_per_symbol, 3.0);
            assert!(rec.mismap_prob.is_none());
        }
        // 0 dB is far from error free, so it stops at the first batch boundary past the target
        assert!(r[0].bit_errors >= 10 && r[0].bits_simulated < 20 * k);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = run_ber(&ExperimentConfig {
            workers: 1,
            ..small(Scheme::Pnc)
        })
        .unwrap();
        let four = run_ber(&ExperimentConfig {
            workers: 4,
            ..small(Scheme::Pnc)
        })
        .unwrap();
        assert_eq!(render_csv(&one).unwrap(), render_csv(&four).unwrap());
        let seed2 = run_ber(&ExperimentConfig {
            seed: 2,
            ..small(Scheme::Pnc)
        })
        .unwrap();
        assert_ne!(one, seed2);
    }

    #[test]
    fn mismap_requires_pilots() {
        assert!(matches!(
            run_mismap(&small(Scheme::Pnc)),
            Err(PncError::Config { field, .. }) if field == "pilot_len"
        ));
        let cfg = ExperimentConfig {
            pilot_len: 200,
            snr_db: vec![40.0],
            ..small(Scheme::Pnc)
        };
        let r = run_mismap(&cfg).unwrap();
        assert!(r[0].mismap_prob.unwrap() <= 0.1, "{:?}", r[0]);
    }

    #[test]
    fn quantiser_budget_allocation() {
        assert_eq!(quantizer_allocation(48, 2, 3), vec![8; 6]);
        assert_eq!(quantizer_allocation(24, 2, 3), vec![4; 6]);
        assert_eq!(quantizer_allocation(8, 2, 3), vec![2, 1, 1, 2, 1, 1]);
        assert_eq!(quantizer_allocation(2, 2, 3), vec![1, 0, 0, 1, 0, 0]);
        for b in 1..60 {
            assert_eq!(quantizer_allocation(b, 2, 4).iter().sum::<usize>(), b);
        }
    }
}

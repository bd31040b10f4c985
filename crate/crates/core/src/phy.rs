//! Multi-access stage: block-fading channel draws, the superimposed
//! received signal with AWGN, and pilot-based least-squares estimation.
//!
//! SNR convention: the average received SNR of the strongest terminal,
//! `10^(−PL_min/10) / σ²`, with unit-energy symbols.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PncError, Result};

pub const DEFAULT_BLOCK_LEN: usize = 100;

/// Draws from `CN(0, var)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Channel coefficients for one fading block, `h[j][i]` from terminal `i`
/// to access point `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Vec<Complex64>>,
    pub path_loss_db: Vec<Vec<f64>>,
    pub block_len: usize,
}

impl ChannelRealization {
    pub fn row(&self, ap: usize) -> &[Complex64] {
        &self.h[ap]
    }

    pub fn n_aps(&self) -> usize {
        self.h.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(PncError::config(
                "snr_db",
                format!("noise variance {sigma2} must be positive"),
            ));
        }
        Ok(NoiseModel { sigma2 })
    }

    /// Noise level giving `snr_db` for the strongest terminal in the table.
    pub fn from_snr_db(snr_db: f64, path_loss_db: &[Vec<f64>]) -> Result<Self> {
        let strongest = path_loss_db.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let strongest = if strongest.is_finite() { strongest } else { 0.0 };
        Self::new(10f64.powf(-(snr_db + strongest) / 10.0))
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        complex_gaussian(rng, self.sigma2)
    }
}

pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    path_loss_db: &[Vec<f64>],
    n_aps: usize,
    n_mts: usize,
    block_len: usize,
) -> Result<ChannelRealization> {
    if path_loss_db.len() != n_aps || path_loss_db.iter().any(|r| r.len() != n_mts) {
        return Err(PncError::config(
            "path_loss_db",
            format!("expected {n_aps} rows of {n_mts} entries"),
        ));
    }
    let h = path_loss_db
        .iter()
        .map(|row| {
            row.iter()
                .map(|pl| complex_gaussian(rng, 10f64.powf(-pl / 10.0)))
                .collect()
        })
        .collect();
    Ok(ChannelRealization {
        h,
        path_loss_db: path_loss_db.to_vec(),
        block_len,
    })
}

/// One received sample `Σ h_i s_i + z` at an access point.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[Complex64],
    h_row: &[Complex64],
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Complex64 {
    debug_assert_eq!(symbols.len(), h_row.len());
    let clean = symbols
        .iter()
        .zip(h_row)
        .fold(Complex64::new(0.0, 0.0), |acc, (s, h)| acc + h * s);
    match noise {
        Some(n) => clean + n.sample(rng),
        None => clean,
    }
}

/// Least-squares estimate of one access point's coefficients. Terminals
/// send `pilot_len` unit pilots each in disjoint slots, so every coefficient
/// sees its own noise samples and the error variance is `σ² / N_p`.
pub fn estimate_channel<R: Rng + ?Sized>(
    pilot_len: usize,
    h_true: &[Complex64],
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if pilot_len == 0 {
        return Err(PncError::config("pilot_len", "at least one pilot symbol is required"));
    }
    let pilot = Complex64::new(1.0, 0.0);
    Ok(h_true
        .iter()
        .map(|&h| {
            let acc = (0..pilot_len).fold(Complex64::new(0.0, 0.0), |acc, _| {
                let y = h * pilot + noise.map_or(Complex64::new(0.0, 0.0), |n| n.sample(rng));
                acc + y * pilot.conj()
            });
            acc / pilot_len as f64
        })
        .collect())
}

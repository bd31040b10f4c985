//! Experiment configuration: a flat `key = value` file whose keys can each
//! be overridden individually (the CLI mirrors every key as a flag).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::detect::QUANT_RANGE;
use crate::error::{PncError, Result};
use crate::fec;
use crate::mapper::PoolPolicy;
use crate::modem::{parse_mods, Modulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Pnc,
    CompIdeal,
    /// Quantised CoMP with a total backhaul budget in bits per symbol,
    /// shared by every LLR of every access point.
    CompQuant {
        total_bits: usize,
    },
}

impl FromStr for Scheme {
    type Err = PncError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pnc" => Ok(Scheme::Pnc),
            "comp-ideal" => Ok(Scheme::CompIdeal),
            _ => {
                let bits = s
                    .strip_prefix("comp-quant:")
                    .ok_or_else(|| PncError::config("scheme", format!("unknown scheme `{s}`")))?;
                let total_bits = bits
                    .parse()
                    .ok()
                    .filter(|&b: &usize| b >= 1)
                    .ok_or_else(|| PncError::config("scheme", format!("bad bit budget `{bits}`")))?;
                Ok(Scheme::CompQuant { total_bits })
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Pnc => f.write_str("pnc"),
            Scheme::CompIdeal => f.write_str("comp-ideal"),
            Scheme::CompQuant { total_bits } => write!(f, "comp-quant:{total_bits}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FecMode {
    None,
    ConvK7,
}

/// Where PNC channel decoding happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PncDecoding {
    /// Hard codewords are forwarded; each terminal's code is decoded at the
    /// central unit after inverting the global matrix.
    Cpu,
    /// Each access point soft-decodes its network-coded streams (linear
    /// combinations of codewords are codewords) and forwards decoded bits.
    Ap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mods: Vec<Modulation>,
    pub scheme: Scheme,
    pub snr_db: Vec<f64>,
    /// Maximum fading blocks per SNR point.
    pub trials: usize,
    pub target_errors: usize,
    /// `path_loss_db[j][i]` from terminal `i` to access point `j`.
    pub path_loss_db: Vec<Vec<f64>>,
    /// Pilot symbols per terminal; 0 means genie channel knowledge.
    pub pilot_len: usize,
    pub block_len: usize,
    pub fec: FecMode,
    pub pnc_decoding: PncDecoding,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub pool: PoolPolicy,
    /// Blocks simulated between checks of the stopping rule.
    pub batch: usize,
    pub quant_range: f64,
    /// Record wall-clock time. Off by default so output is reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mods: vec![Modulation::Qpsk, Modulation::Bpsk],
            scheme: Scheme::Pnc,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 10_000,
            target_errors: 100,
            path_loss_db: vec![vec![0.0, 3.0], vec![0.0, 3.0]],
            pilot_len: 0,
            block_len: 200,
            fec: FecMode::ConvK7,
            pnc_decoding: PncDecoding::Cpu,
            seed: 1,
            workers: 0,
            pool: PoolPolicy::Nearest,
            batch: 64,
            quant_range: QUANT_RANGE,
            timing: false,
        }
    }
}

/// Every configuration key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("mods", "modulation per terminal, e.g. qpsk,bpsk"),
    ("scheme", "pnc | comp-ideal | comp-quant:<bits per symbol>"),
    ("snr_db", "SNR grid: a,b,c or start:step:stop"),
    ("trials", "maximum fading blocks per SNR point"),
    ("target_errors", "stop a point after this many bit errors"),
    ("path_loss_db", "path loss per AP row, e.g. 0,3;0,3"),
    ("pilot_len", "pilot symbols per terminal, 0 for genie channel"),
    ("block_len", "symbols per fading block"),
    ("fec", "none | conv_k7"),
    ("pnc_decoding", "cpu | ap"),
    ("seed", "base random seed"),
    ("workers", "worker threads, 0 for all cores"),
    ("pool", "nearest | all"),
    ("batch", "blocks between stopping-rule checks"),
    ("quant_range", "saturation of the LLR quantiser"),
    ("timing", "record wall-clock seconds (true | false)"),
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| PncError::config(key, format!("cannot parse `{v}`")))
}

fn float_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn snr_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (a, s, b): (f64, f64, f64) = (num("snr_db", start)?, num("snr_db", step)?, num("snr_db", stop)?);
            if s.is_nan() || s <= 0.0 || b < a {
                return Err(PncError::config(
                    "snr_db",
                    "range needs a positive step and start <= stop",
                ));
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * s).collect())
        }
        [_] => float_list("snr_db", v),
        _ => Err(PncError::config("snr_db", format!("cannot parse `{v}`"))),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "mods" => self.mods = parse_mods(v)?,
            "scheme" => self.scheme = v.parse()?,
            "snr_db" => self.snr_db = snr_grid(v)?,
            "trials" => self.trials = num(key, v)?,
            "target_errors" => self.target_errors = num(key, v)?,
            "path_loss_db" => {
                self.path_loss_db = v.split(';').map(|row| float_list(key, row)).collect::<Result<_>>()?
            }
            "pilot_len" => self.pilot_len = num(key, v)?,
            "block_len" => self.block_len = num(key, v)?,
            "fec" => {
                self.fec = match v {
                    "none" => FecMode::None,
                    "conv_k7" => FecMode::ConvK7,
                    _ => return Err(PncError::config(key, format!("unknown code `{v}`"))),
                }
            }
            "pnc_decoding" => {
                self.pnc_decoding = match v {
                    "cpu" => PncDecoding::Cpu,
                    "ap" => PncDecoding::Ap,
                    _ => return Err(PncError::config(key, format!("unknown mode `{v}`"))),
                }
            }
            "seed" => self.seed = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "pool" => {
                self.pool = match v {
                    "nearest" => PoolPolicy::Nearest,
                    "all" => PoolPolicy::AllReduced,
                    _ => return Err(PncError::config(key, format!("unknown pool `{v}`"))),
                }
            }
            "batch" => self.batch = num(key, v)?,
            "quant_range" => self.quant_range = num(key, v)?,
            "timing" => self.timing = num(key, v)?,
            _ => return Err(PncError::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Parses configuration text on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PncError::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file (or the defaults when `path` is `None`) and
    /// applies `overrides` in order.
    pub fn load<'a>(path: Option<&Path>, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|e| PncError::config("config", format!("{}: {e}", p.display())))?;
                Self::parse_str(&text)?
            }
            None => ExperimentConfig::default(),
        };
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_aps(&self) -> usize {
        self.path_loss_db.len()
    }

    pub fn total_bits(&self) -> usize {
        self.mods.iter().map(|m| m.bits()).sum()
    }

    pub fn pair(&self) -> [Modulation; 2] {
        [self.mods[0], self.mods[1]]
    }

    /// Information bits carried by one coded bit stream of a block.
    pub fn payload_per_stream(&self) -> usize {
        match self.fec {
            FecMode::None => self.block_len,
            FecMode::ConvK7 => fec::payload_len(self.block_len).unwrap_or(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mods.len() != 2 {
            return Err(PncError::config("mods", "exactly two terminals are supported"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(PncError::config("snr_db", "grid must be nonempty and finite"));
        }
        if self.trials == 0 {
            return Err(PncError::config("trials", "must be at least 1"));
        }
        if self.target_errors == 0 {
            return Err(PncError::config("target_errors", "must be at least 1"));
        }
        let n = self.n_aps();
        if n == 0 || n > self.total_bits() {
            return Err(PncError::config(
                "path_loss_db",
                format!("{n} access points for {} joint bits", self.total_bits()),
            ));
        }
        if self
            .path_loss_db
            .iter()
            .any(|r| r.len() != self.mods.len() || r.iter().any(|x| !x.is_finite()))
        {
            return Err(PncError::config(
                "path_loss_db",
                "every row needs one finite entry per terminal",
            ));
        }
        if self.block_len == 0 {
            return Err(PncError::config("block_len", "must be at least 1"));
        }
        if self.fec == FecMode::ConvK7 && (!self.block_len.is_multiple_of(2) || self.payload_per_stream() == 0) {
            return Err(PncError::config(
                "block_len",
                format!("conv_k7 needs an even block of at least {} symbols", fec::coded_len(1)),
            ));
        }
        if self.batch == 0 {
            return Err(PncError::config("batch", "must be at least 1"));
        }
        if self.quant_range.is_nan() || self.quant_range <= 0.0 {
            return Err(PncError::config("quant_range", "must be positive"));
        }
        Ok(())
    }
}

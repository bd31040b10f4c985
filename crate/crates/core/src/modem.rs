//! Gray-labeled square QAM constellations and the table of joint symbol
//! tuples for a group of terminals.
//!
//! Labels are read most significant bit first. For every scheme the first
//! bit on an axis selects the sign (0 → positive) and, for 16-QAM, the
//! second selects the amplitude (0 → inner level), which yields a Gray map
//! per axis. QPSK and 16-QAM put the first half of the label on the in-phase
//! axis and the second half on quadrature.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{PncError, Result};
use crate::gf2::BitVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        }
    }
}

impl FromStr for Modulation {
    type Err = PncError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            "qam16" | "16qam" => Ok(Modulation::Qam16),
            other => Err(PncError::config("mods", format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a comma separated list such as `qpsk,bpsk`.
pub fn parse_mods(s: &str) -> Result<Vec<Modulation>> {
    let mods = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if mods.is_empty() {
        return Err(PncError::config("mods", "empty modulation list"));
    }
    Ok(mods)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    scheme: Modulation,
    points: Vec<Complex64>,
}

fn pam4_gray(bits: usize) -> f64 {
    let sign = if bits & 0b10 == 0 { 1.0 } else { -1.0 };
    let amp = if bits & 0b01 == 0 { 1.0 } else { 3.0 };
    sign * amp
}

impl Constellation {
    pub fn new(scheme: Modulation) -> Self {
        let points = match scheme {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                (0..4)
                    .map(|l| {
                        let i = if l & 0b10 == 0 { a } else { -a };
                        let q = if l & 0b01 == 0 { a } else { -a };
                        Complex64::new(i, q)
                    })
                    .collect()
            }
            Modulation::Qam16 => {
                let scale = 10f64.sqrt().recip();
                (0..16)
                    .map(|l| Complex64::new(pam4_gray(l >> 2) * scale, pam4_gray(l & 0b11) * scale))
                    .collect()
            }
        };
        Constellation { scheme, points }
    }

    pub fn scheme(&self) -> Modulation {
        self.scheme
    }

    pub fn order_bits(&self) -> usize {
        self.scheme.bits()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn modulate(&self, bits: &BitVector) -> Result<Complex64> {
        if bits.len() != self.order_bits() {
            return Err(PncError::Contract(format!(
                "{} expects {} bits, got {}",
                self.scheme,
                self.order_bits(),
                bits.len()
            )));
        }
        Ok(self.points[bits.word() as usize])
    }
}

pub fn make_constellation(name: &str) -> Result<Constellation> {
    Ok(Constellation::new(name.parse()?))
}

/// Every joint message `b` of a terminal group with the symbol each terminal
/// sends for it. Terminal 1 occupies the most significant bits of `b`.
#[derive(Clone, Debug)]
pub struct JointCombinationTable {
    schemes: Vec<Constellation>,
    widths: Vec<usize>,
    total_bits: usize,
    symbols: Vec<Complex64>,
}

impl JointCombinationTable {
    pub fn new(mods: &[Modulation]) -> Result<Self> {
        if mods.is_empty() {
            return Err(PncError::Contract("at least one terminal required".into()));
        }
        let schemes: Vec<Constellation> = mods.iter().map(|&m| Constellation::new(m)).collect();
        let widths: Vec<usize> = mods.iter().map(|m| m.bits()).collect();
        let total_bits: usize = widths.iter().sum();
        if total_bits > 16 {
            return Err(PncError::Contract(format!(
                "{total_bits} joint bits is too many to tabulate"
            )));
        }
        let n = mods.len();
        let mut symbols = Vec::with_capacity(n << total_bits);
        for b in 0..(1usize << total_bits) {
            let mut shift = total_bits;
            for (c, &w) in schemes.iter().zip(&widths) {
                shift -= w;
                symbols.push(c.point((b >> shift) & ((1 << w) - 1)));
            }
        }
        Ok(JointCombinationTable {
            schemes,
            widths,
            total_bits,
            symbols,
        })
    }

    pub fn schemes(&self) -> &[Constellation] {
        &self.schemes
    }

    pub fn mods(&self) -> Vec<Modulation> {
        self.schemes.iter().map(|c| c.scheme()).collect()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_terminals(&self) -> usize {
        self.schemes.len()
    }

    /// `m_s`, the total number of bits in a joint message.
    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn len(&self) -> usize {
        1 << self.total_bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Symbols sent by each terminal for joint message `b`.
    pub fn symbols(&self, b: usize) -> &[Complex64] {
        let n = self.schemes.len();
        &self.symbols[b * n..(b + 1) * n]
    }

    /// Splits a joint message into per-terminal labels.
    pub fn split(&self, b: usize) -> Vec<usize> {
        let mut shift = self.total_bits;
        self.widths
            .iter()
            .map(|&w| {
                shift -= w;
                (b >> shift) & ((1 << w) - 1)
            })
            .collect()
    }

    pub fn merge(&self, labels: &[usize]) -> usize {
        labels
            .iter()
            .zip(&self.widths)
            .fold(0usize, |acc, (&l, &w)| (acc << w) | l)
    }
}

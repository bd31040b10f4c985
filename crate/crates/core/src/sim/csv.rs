use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ResultRecord;
use crate::error::{PncError, Result};

pub const HEADER: &str = "snr_db,ber,bit_errors,bits_simulated,backhaul_bits_per_symbol,mismap_prob,wallclock_s";

/// Shortest decimal form of `x` rounded to 12 significant digits.
fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn render_csv(records: &[ResultRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(PncError::Contract("no records to write".into()));
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            sig12(r.snr_db),
            sig12(r.ber),
            r.bit_errors,
            r.bits_simulated,
            sig12(r.backhaul_bits_per_symbol),
            r.mismap_prob.map(sig12).unwrap_or_default(),
            sig12(r.wallclock_s)
        );
    }
    Ok(out)
}

pub fn emit_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_csv(records)?)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(PncError::parse(1, "missing or unexpected header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| PncError::parse(i + 1, format!("bad {what}"));
            if f.len() != 7 {
                return Err(bad("column count"));
            }
            let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            Ok(ResultRecord {
                snr_db: float(f[0], "snr_db")?,
                ber: float(f[1], "ber")?,
                bit_errors: f[2].parse().map_err(|_| bad("bit_errors"))?,
                bits_simulated: f[3].parse().map_err(|_| bad("bits_simulated"))?,
                backhaul_bits_per_symbol: float(f[4], "backhaul_bits_per_symbol")?,
                mismap_prob: if f[5].is_empty() {
                    None
                } else {
                    Some(float(f[5], "mismap_prob")?)
                },
                wallclock_s: float(f[6], "wallclock_s")?,
            })
        })
        .collect()
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

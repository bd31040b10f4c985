//! Text serialisation of the candidate store.
//!
//! ```text
//! pnc-forge candidate store
//! format = 1
//! mods = qpsk,bpsk
//! labeling = gray-sign-first
//! bit_order = mt1-msb
//! tolerance = 1e-9
//! enumeration = rref-ascending
//! records = 3
//! state 0 h2-erasure 0.0 0.0
//! l1 = 1x3:2 1x3:4 1x3:6
//! l2 = 2x3:12
//! l3 =
//! ...
//! end
//! ```
//!
//! Ratios are written with Rust's shortest round-trip float formatting, so
//! `save(load(f))` reproduces `f` byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{same_ratio, CandidateStore, StateCandidates, StoreMeta, BIT_ORDER, ENUMERATION, LABELING};
use crate::error::{PncError, Result};
use crate::gf2::BinaryMatrix;
use crate::modem::{parse_mods, JointCombinationTable};
use crate::sfs::{FadeKind, SfsTable};
use crate::superposition::COINCIDENCE_TOL;

pub const STORE_FORMAT_VERSION: u32 = 1;

const MAGIC: &str = "pnc-forge candidate store";
/// Candidates re-verified on load.
const VERIFY_SAMPLE: usize = 64;

fn kind_name(k: FadeKind) -> &'static str {
    match k {
        FadeKind::Ratio => "ratio",
        FadeKind::H2Erasure => "h2-erasure",
        FadeKind::H1Erasure => "h1-erasure",
    }
}

fn kind_from(s: &str) -> Option<FadeKind> {
    match s {
        "ratio" => Some(FadeKind::Ratio),
        "h2-erasure" => Some(FadeKind::H2Erasure),
        "h1-erasure" => Some(FadeKind::H1Erasure),
        _ => None,
    }
}

pub(crate) fn render(store: &CandidateStore) -> String {
    let m = &store.meta;
    let [a, b] = store.mods();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "format = {}", m.format_version);
    let _ = writeln!(out, "mods = {a},{b}");
    let _ = writeln!(out, "labeling = {}", m.labeling);
    let _ = writeln!(out, "bit_order = {}", m.bit_order);
    let _ = writeln!(out, "tolerance = {:?}", m.tolerance);
    let _ = writeln!(out, "enumeration = {}", m.enumeration);
    let _ = writeln!(out, "records = {}", store.records.len());
    for rec in &store.records {
        let _ = writeln!(
            out,
            "state {} {} {:?} {:?}",
            rec.state,
            kind_name(rec.kind),
            rec.ratio.re,
            rec.ratio.im
        );
        for (i, mats) in rec.by_rows.iter().enumerate() {
            let _ = write!(out, "l{} =", i + 1);
            for g in mats {
                let _ = write!(out, " {}", g.to_hex());
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_store(store: &CandidateStore, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render(store))?;
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(PncError::parse(self.last + 1, "unexpected end of file")),
        }
    }

    fn value(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(" ="))
            .ok_or_else(|| PncError::parse(self.last, format!("expected `{key} = ...`")))?;
        Ok(rest.strip_prefix(' ').unwrap_or(rest))
    }

    fn err(&self, reason: impl Into<String>) -> PncError {
        PncError::parse(self.last, reason)
    }
}

pub(crate) fn parse(text: &str) -> Result<CandidateStore> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err("not a candidate store"));
    }
    let version: u32 = lines
        .value("format")?
        .parse()
        .map_err(|_| lines.err("bad format version"))?;
    let mods_text = lines.value("mods")?;
    let labeling = lines.value("labeling")?.to_string();
    let bit_order = lines.value("bit_order")?.to_string();
    let tolerance: f64 = lines
        .value("tolerance")?
        .parse()
        .map_err(|_| lines.err("bad tolerance"))?;
    let enumeration = lines.value("enumeration")?.to_string();

    if version != STORE_FORMAT_VERSION {
        return Err(PncError::IncompatibleStore(format!(
            "format version {version}, expected {STORE_FORMAT_VERSION}"
        )));
    }
    for (name, got, want) in [
        ("labeling", labeling.as_str(), LABELING),
        ("bit_order", bit_order.as_str(), BIT_ORDER),
        ("enumeration", enumeration.as_str(), ENUMERATION),
    ] {
        if got != want {
            return Err(PncError::IncompatibleStore(format!(
                "{name} `{got}`, expected `{want}`"
            )));
        }
    }
    if tolerance != COINCIDENCE_TOL {
        return Err(PncError::IncompatibleStore(format!("tolerance {tolerance}")));
    }
    let mods = parse_mods(mods_text).map_err(|e| lines.err(e.to_string()))?;
    let pair: [_; 2] = mods
        .try_into()
        .map_err(|_| lines.err("a store covers exactly two terminals"))?;

    let n_records: usize = lines
        .value("records")?
        .parse()
        .map_err(|_| lines.err("bad record count"))?;
    let sfs = SfsTable::build(pair);
    let table = JointCombinationTable::new(&pair)?;
    let m_s = table.total_bits();
    let mut records = Vec::with_capacity(n_records);
    for _ in 0..n_records {
        let head: Vec<&str> = lines.next()?.split(' ').collect();
        if head.len() != 5 || head[0] != "state" {
            return Err(lines.err("expected `state <idx> <kind> <re> <im>`"));
        }
        let state: usize = head[1].parse().map_err(|_| lines.err("bad state index"))?;
        let kind = kind_from(head[2]).ok_or_else(|| lines.err("bad state kind"))?;
        let re: f64 = head[3].parse().map_err(|_| lines.err("bad ratio"))?;
        let im: f64 = head[4].parse().map_err(|_| lines.err("bad ratio"))?;
        let ratio = Complex64::new(re, im);
        if state >= sfs.states().len()
            || sfs.representative(state) != state
            || sfs.state(state).kind != kind
            || !same_ratio(sfs.state(state).ratio, ratio)
        {
            return Err(PncError::IncompatibleStore(format!(
                "record for state {state} does not match this build's fade-state table"
            )));
        }
        let mut by_rows = Vec::with_capacity(m_s);
        for l in 1..=m_s {
            let key = format!("l{l}");
            let body = lines.value(&key)?;
            let mats = body
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    let g = BinaryMatrix::from_hex(t).map_err(|e| lines.err(e.to_string()))?;
                    if g.rows() != l || g.cols() != m_s {
                        return Err(lines.err(format!("{t} is not {l}x{m_s}")));
                    }
                    Ok(g)
                })
                .collect::<Result<Vec<_>>>()?;
            by_rows.push(mats);
        }
        records.push(StateCandidates {
            state,
            kind,
            ratio,
            by_rows,
        });
    }
    if lines.next()? != "end" {
        return Err(lines.err("missing `end` trailer"));
    }
    if sfs.representatives() != records.iter().map(|r| r.state).collect::<Vec<_>>() {
        return Err(PncError::IncompatibleStore(
            "record set does not match the representatives".into(),
        ));
    }
    Ok(CandidateStore {
        meta: StoreMeta {
            format_version: version,
            labeling,
            bit_order,
            tolerance,
            enumeration,
        },
        sfs,
        table,
        records,
    })
}

/// Loads a store, validating its conventions and re-verifying a sample of
/// candidates against the clashes of their fade states.
pub fn load_store(path: impl AsRef<Path>) -> Result<CandidateStore> {
    let text = fs::read_to_string(path)?;
    let store = parse(&text)?;
    let flat: Vec<(usize, &BinaryMatrix)> = store
        .records
        .iter()
        .enumerate()
        .flat_map(|(r, rec)| rec.iter().map(move |g| (r, g)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(flat.len() as u64);
    for i in sample(&mut rng, flat.len(), VERIFY_SAMPLE.min(flat.len())) {
        let (r, g) = flat[i];
        if !store.verify(r, g) {
            return Err(PncError::IncompatibleStore(format!(
                "candidate {} does not resolve state {}",
                g.to_hex(),
                store.records[r].state
            )));
        }
    }
    Ok(store)
}

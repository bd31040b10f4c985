//! Singular fade states of a two-terminal group.
//!
//! A state is characterised by the ratio `γ = h₂ / h₁` at which two distinct
//! joint messages produce the same superimposed point. `γ = 0` (terminal 2
//! faded out) is one of the counted states. The opposite axis, `h₁ = 0`, has
//! no finite ratio; it is kept as an extra state that takes part in lookups
//! and candidate storage but not in the state counts.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{PncError, Result};
use crate::gf2::rref_words;
use crate::modem::{JointCombinationTable, Modulation};
use crate::superposition::{superimpose, COINCIDENCE_TOL};

/// Two ratios closer than this are the same state.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FadeKind {
    /// Finite non-zero ratio.
    Ratio,
    /// `h₂ = 0`, stored with `γ = 0`.
    H2Erasure,
    /// `h₁ = 0`; not a finite ratio.
    H1Erasure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularFadeState {
    pub kind: FadeKind,
    /// `γ`; meaningless for [`FadeKind::H1Erasure`], where it is set to 0.
    pub ratio: Complex64,
    /// Coincident joint-message pairs `(i, k)`, `i < k`, at the state's channel.
    pub witnesses: Vec<(usize, usize)>,
}

impl SingularFadeState {
    /// The channel vector that realises the state.
    pub fn channel(&self) -> [Complex64; 2] {
        match self.kind {
            FadeKind::H1Erasure => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            _ => [Complex64::new(1.0, 0.0), self.ratio],
        }
    }

    /// Basis (reduced echelon) of the span of `b ⊕ b'` over witness pairs.
    /// A full-row-rank matrix resolves the state exactly when its kernel
    /// contains this span, so the span determines the resolving set.
    pub fn clash_span(&self, cols: usize) -> Vec<u64> {
        let diffs: Vec<u64> = self.witnesses.iter().map(|&(i, k)| (i ^ k) as u64).collect();
        rref_words(&diffs, cols)
    }

    fn sort_key(&self) -> (f64, f64) {
        match self.kind {
            FadeKind::H1Erasure => (f64::INFINITY, 0.0),
            _ => (self.ratio.norm(), self.ratio.arg()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SfsTable {
    mods: [Modulation; 2],
    total_bits: usize,
    /// Counted states sorted by `(|γ|, arg γ)`, then the `h₁ = 0` state last.
    states: Vec<SingularFadeState>,
    /// Representative index for every entry of `states`; empty until reduced.
    image_map: Vec<usize>,
}

/// Coincident pairs of a superimposed constellation.
pub fn coincident_pairs(points: &[Complex64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for k in i + 1..points.len() {
            if (points[i] - points[k]).norm_sqr() < COINCIDENCE_TOL {
                out.push((i, k));
            }
        }
    }
    out
}

fn distinct_differences(points: &[Complex64]) -> Vec<Complex64> {
    let mut d = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for (k, b) in points.iter().enumerate() {
            if i != k {
                d.push(a - b);
            }
        }
    }
    dedup_complex(d)
}

fn dedup_complex(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut kept: Vec<Complex64> = Vec::with_capacity(v.len());
    for z in v {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| z.re - k.re < RATIO_TOL)
            .any(|k| (z - k).norm() < RATIO_TOL);
        if !dup {
            kept.push(z);
        }
    }
    kept
}

fn state_at(h: [Complex64; 2], kind: FadeKind, ratio: Complex64, table: &JointCombinationTable) -> SingularFadeState {
    let sc = superimpose(&h, table).expect("two-terminal table");
    SingularFadeState {
        kind,
        ratio,
        witnesses: coincident_pairs(sc.points()),
    }
}

/// All singular fade states of a terminal pair.
pub fn enumerate_sfs(pair: [Modulation; 2]) -> SfsTable {
    let table = JointCombinationTable::new(&pair).expect("pair of valid schemes");
    let d1 = distinct_differences(table.schemes()[0].points());
    let d2 = distinct_differences(table.schemes()[1].points());
    let mut ratios = Vec::with_capacity(d1.len() * d2.len());
    for a in &d1 {
        for b in &d2 {
            ratios.push(-a / b);
        }
    }
    let ratios = dedup_complex(ratios);

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut states: Vec<SingularFadeState> = ratios
        .into_iter()
        .map(|g| state_at([one, g], FadeKind::Ratio, g, &table))
        .collect();
    states.push(state_at([one, zero], FadeKind::H2Erasure, zero, &table));
    states.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    states.push(state_at([zero, one], FadeKind::H1Erasure, zero, &table));

    SfsTable {
        mods: pair,
        total_bits: table.total_bits(),
        states,
        image_map: Vec::new(),
    }
}

/// Groups states whose resolving-matrix sets coincide; the representative
/// of a class is its member with the smallest `(|γ|, arg γ)`.
pub fn reduce_image_sfs(mut table: SfsTable) -> Result<SfsTable> {
    if table.states.is_empty() {
        return Err(PncError::Contract("no states to reduce".into()));
    }
    let mut first_of: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut image_map = Vec::with_capacity(table.states.len());
    // states are already in representative-preference order
    for (idx, s) in table.states.iter().enumerate() {
        let rep = *first_of.entry(s.clash_span(table.total_bits)).or_insert(idx);
        image_map.push(rep);
    }
    table.image_map = image_map;
    Ok(table)
}

impl SfsTable {
    pub fn build(pair: [Modulation; 2]) -> SfsTable {
        reduce_image_sfs(enumerate_sfs(pair)).expect("enumeration yields states")
    }

    pub fn mods(&self) -> [Modulation; 2] {
        self.mods
    }

    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    /// Every state including the uncounted `h₁ = 0` one (always last).
    pub fn states(&self) -> &[SingularFadeState] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &SingularFadeState {
        &self.states[idx]
    }

    /// The counted states: finite ratios including `γ = 0`.
    pub fn all_states(&self) -> &[SingularFadeState] {
        &self.states[..self.states.len() - 1]
    }

    pub fn is_reduced(&self) -> bool {
        !self.image_map.is_empty()
    }

    pub fn representative(&self, idx: usize) -> usize {
        self.image_map[idx]
    }

    pub fn image_map(&self) -> &[usize] {
        &self.image_map
    }

    /// Indices of every class representative, `h₁ = 0` class included.
    pub fn representatives(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.image_map.get(i) == Some(&i))
            .collect()
    }

    /// Representatives among the counted states.
    pub fn reduced_states(&self) -> Vec<usize> {
        let counted = self.states.len() - 1;
        self.representatives().into_iter().filter(|&i| i < counted).collect()
    }

    /// Index and distance of the state closest to channel `h`.
    pub fn nearest_sfs(&self, h: [Complex64; 2]) -> Result<(usize, f64)> {
        let norm = (h[0].norm_sqr() + h[1].norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(PncError::InvalidChannel(format!("{h:?}")));
        }
        let ratio = if h[0] == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some(h[1] / h[0])
        };
        let mut best = (usize::MAX, f64::INFINITY);
        for (idx, s) in self.states.iter().enumerate() {
            let d = match s.kind {
                FadeKind::Ratio => ratio.map_or(f64::INFINITY, |r| (r - s.ratio).norm()),
                FadeKind::H2Erasure => h[1].norm() / norm,
                FadeKind::H1Erasure => h[0].norm() / norm,
            };
            if d < best.1 {
                best = (idx, d);
            }
        }
        Ok(best)
    }
}

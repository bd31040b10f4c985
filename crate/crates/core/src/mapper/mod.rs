//! Mapping-matrix search.
//!
//! The off-line pass runs once per modulation pair: for every representative
//! singular fade state it lists the full-row-rank matrices that send every
//! clash of that state to a single network codeword. The on-line pass runs
//! per fading block: it scores candidates on the measured channels and picks
//! one matrix per access point so that the stacked global matrix is square
//! and invertible.
//!
//! A candidate's clusters, and therefore its `d_min`, depend only on its row
//! space, and whether stacked matrices are invertible depends only on their
//! row spaces. Candidates are therefore stored once per row space, as the
//! reduced row echelon matrix of that space.

mod online;
mod store;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::gf2::{annihilator, subspaces_within, BinaryMatrix, BitVector};
use crate::modem::{JointCombinationTable, Modulation};
use crate::sfs::{FadeKind, SfsTable, SingularFadeState, RATIO_TOL};
use crate::superposition::COINCIDENCE_TOL;

pub use online::{online_select, ApSelection, PoolPolicy, SelectionOptions, SelectionResult, Selector};
pub use store::{load_store, save_store, STORE_FORMAT_VERSION};

/// Bit-order convention recorded in stores: terminal 1 in the most
/// significant bits of the joint message.
pub const BIT_ORDER: &str = "mt1-msb";
/// Labeling convention recorded in stores.
pub const LABELING: &str = "gray-sign-first";
/// Candidate enumeration convention recorded in stores.
pub const ENUMERATION: &str = "rref-ascending";

/// Joint messages whose superimposed points coincide at a fade state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clash {
    /// Sorted joint-message indices.
    pub messages: Vec<usize>,
}

impl Clash {
    pub fn bit_vectors(&self, total_bits: usize) -> Vec<BitVector> {
        self.messages
            .iter()
            .map(|&b| BitVector::from_word(total_bits, b as u64).expect("message fits"))
            .collect()
    }

    /// Whether `g` maps every member to the same codeword.
    pub fn resolved_by(&self, g: &BinaryMatrix) -> bool {
        let first = g.mul_word(self.messages[0] as u64);
        self.messages.iter().all(|&b| g.mul_word(b as u64) == first)
    }
}

/// Connected components of the coincidence relation at the state's channel,
/// ordered by smallest member.
pub fn find_clashes(state: &SingularFadeState, table: &JointCombinationTable) -> Vec<Clash> {
    let n = table.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &(i, k) in &state.witnesses {
        let (a, b) = (root(&mut parent, i), root(&mut parent, k));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for b in 0..n {
        let r = root(&mut parent, b);
        groups[r].push(b);
    }
    groups
        .into_iter()
        .filter(|g| g.len() > 1)
        .map(|messages| Clash { messages })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoreMeta {
    pub format_version: u32,
    pub labeling: String,
    pub bit_order: String,
    pub tolerance: f64,
    pub enumeration: String,
}

impl Default for StoreMeta {
    fn default() -> Self {
        StoreMeta {
            format_version: STORE_FORMAT_VERSION,
            labeling: LABELING.to_string(),
            bit_order: BIT_ORDER.to_string(),
            tolerance: COINCIDENCE_TOL,
            enumeration: ENUMERATION.to_string(),
        }
    }
}

/// Candidates of one representative fade state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateCandidates {
    /// Index into the fade-state table.
    pub state: usize,
    pub kind: FadeKind,
    pub ratio: Complex64,
    /// `by_rows[l - 1]` holds the `l`-row candidates in ascending encoding.
    pub by_rows: Vec<Vec<BinaryMatrix>>,
}

impl StateCandidates {
    pub fn iter(&self) -> impl Iterator<Item = &BinaryMatrix> {
        self.by_rows.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct CandidateStore {
    meta: StoreMeta,
    sfs: SfsTable,
    table: JointCombinationTable,
    records: Vec<StateCandidates>,
}

impl PartialEq for CandidateStore {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta && self.mods() == other.mods() && self.records == other.records
    }
}

impl CandidateStore {
    pub fn mods(&self) -> [Modulation; 2] {
        self.sfs.mods()
    }

    pub fn meta(&self) -> &StoreMeta {
        &self.meta
    }

    pub fn sfs(&self) -> &SfsTable {
        &self.sfs
    }

    pub fn table(&self) -> &JointCombinationTable {
        &self.table
    }

    pub fn total_bits(&self) -> usize {
        self.table.total_bits()
    }

    pub fn records(&self) -> &[StateCandidates] {
        &self.records
    }

    /// Candidates for the representative of fade state `state`.
    pub fn for_state(&self, state: usize) -> &StateCandidates {
        let rep = self.sfs.representative(state);
        self.records
            .iter()
            .find(|r| r.state == rep)
            .expect("every representative has a record")
    }

    pub fn candidate_count(&self) -> usize {
        self.records.iter().map(StateCandidates::len).sum()
    }

    /// Whether `g` is a full-row-rank matrix resolving every clash of the
    /// state behind `record`.
    fn verify(&self, record: usize, g: &BinaryMatrix) -> bool {
        let rec = &self.records[record];
        let clashes = find_clashes(self.sfs.state(rec.state), &self.table);
        g.cols() == self.total_bits() && g.is_full_row_rank() && clashes.iter().all(|c| c.resolved_by(g))
    }
}

fn candidates_for(state: &SingularFadeState, total_bits: usize) -> Vec<Vec<BinaryMatrix>> {
    let allowed = annihilator(&state.clash_span(total_bits), total_bits);
    (1..=total_bits)
        .map(|l| subspaces_within(&allowed, total_bits, l))
        .collect()
}

/// Builds the candidate store for a modulation pair.
pub fn offline_search(mods: [Modulation; 2]) -> CandidateStore {
    let sfs = SfsTable::build(mods);
    let table = JointCombinationTable::new(&mods).expect("valid pair");
    let m_s = table.total_bits();
    let records = sfs
        .representatives()
        .into_par_iter()
        .map(|idx| {
            let s = sfs.state(idx);
            StateCandidates {
                state: idx,
                kind: s.kind,
                ratio: s.ratio,
                by_rows: candidates_for(s, m_s),
            }
        })
        .collect();
    CandidateStore {
        meta: StoreMeta::default(),
        sfs,
        table,
        records,
    }
}

fn same_ratio(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < RATIO_TOL
}

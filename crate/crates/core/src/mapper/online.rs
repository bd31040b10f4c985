//! Per-block selection of access-point mapping matrices.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_complex::Complex64;

use super::CandidateStore;
use crate::error::{PncError, Result};
use crate::gf2::{reduce_against, BinaryMatrix};
use crate::superposition::{superimpose, DistanceProfile};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoolPolicy {
    /// Candidates of the nearest fade state's representative; widened to
    /// every stored candidate only when that yields no invertible stack.
    #[default]
    Nearest,
    /// Every stored candidate for every access point.
    AllReduced,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SelectionOptions {
    pub pool: PoolPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApSelection {
    pub mapping: BinaryMatrix,
    pub d_min: f64,
    /// Nearest fade state to this access point's channel.
    pub sfs_index: usize,
    pub sfs_distance: f64,
}

impl ApSelection {
    pub fn rows(&self) -> usize {
        self.mapping.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub per_ap: Vec<ApSelection>,
    /// Row concatenation of the per-AP matrices.
    pub global: BinaryMatrix,
    pub global_inverse: BinaryMatrix,
    /// Whether the wide pool had to be used.
    pub widened: bool,
}

impl SelectionResult {
    pub fn min_d(&self) -> f64 {
        self.per_ap.iter().map(|a| a.d_min).fold(f64::INFINITY, f64::min)
    }

    pub fn sum_d(&self) -> f64 {
        self.per_ap.iter().map(|a| a.d_min).sum()
    }

    /// Identity rows dealt out in order, the first APs taking the larger
    /// shares. Used when no candidate combination is invertible.
    pub fn identity_split(store: &CandidateStore, h_per_ap: &[[Complex64; 2]]) -> Result<SelectionResult> {
        let m_s = store.total_bits();
        let n = h_per_ap.len();
        if n == 0 || n > m_s {
            return Err(PncError::Contract(format!("{n} access points for {m_s} bits")));
        }
        let id = BinaryMatrix::identity(m_s)?;
        let mut next = 0;
        let mut per_ap = Vec::with_capacity(n);
        for (j, h) in h_per_ap.iter().enumerate() {
            let rows = (m_s - next).div_ceil(n - j);
            let g = BinaryMatrix::from_rows(m_s, id.row_words()[next..next + rows].to_vec())?;
            next += rows;
            let profile = DistanceProfile::new(&superimpose(h, store.table())?);
            let (sfs_index, sfs_distance) = store.sfs().nearest_sfs(*h)?;
            per_ap.push(ApSelection {
                d_min: profile.d_min(&g),
                mapping: g,
                sfs_index,
                sfs_distance,
            });
        }
        Ok(SelectionResult {
            per_ap,
            global_inverse: id.clone(),
            global: id,
            widened: false,
        })
    }
}

struct Scored<'a> {
    d: f64,
    g: &'a BinaryMatrix,
}

/// Objective ordering: larger minimum, then larger sum, then the smaller
/// sequence of matrices.
fn better(a: (f64, f64, &[&BinaryMatrix]), b: (f64, f64, &[&BinaryMatrix])) -> bool {
    match a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.2 < b.2,
    }
}

/// Candidates of one access point bucketed by row count, each bucket sorted
/// by descending distance.
type Pool<'a> = Vec<Vec<Scored<'a>>>;

struct Search<'p, 'a> {
    pools: &'p [Pool<'a>],
    /// Best possible remaining sum from AP `j` onward.
    rest_max: Vec<f64>,
    best: Option<(f64, f64, Vec<&'a BinaryMatrix>)>,
    chosen: Vec<&'a BinaryMatrix>,
}

impl<'a> Search<'_, 'a> {
    fn run(&mut self, j: usize, remaining: usize, basis: &[u64], cur_min: f64, cur_sum: f64) {
        let n = self.pools.len();
        if j == n {
            if remaining == 0 {
                let cand = (cur_min, cur_sum, self.chosen.as_slice());
                let replace = match &self.best {
                    None => true,
                    Some((m, s, g)) => better(cand, (*m, *s, g.as_slice())),
                };
                if replace {
                    self.best = Some((cur_min, cur_sum, self.chosen.clone()));
                }
            }
            return;
        }
        let later = n - j - 1;
        let pools = self.pools;
        for (l, bucket) in pools[j].iter().enumerate() {
            if l == 0 || l + later > remaining || (later == 0 && l != remaining) {
                continue;
            }
            // best the later APs could add: exact bucket top when only one
            // AP is left, otherwise the loose sum of pool tops
            let (rest_min, rest_sum) = match later {
                0 => (f64::INFINITY, 0.0),
                1 => match pools[j + 1][remaining - l].first() {
                    Some(top) => (top.d, if top.d.is_finite() { top.d } else { 0.0 }),
                    None => continue,
                },
                _ => (f64::INFINITY, self.rest_max[j + 1]),
            };
            for c in bucket {
                let new_min = cur_min.min(c.d);
                let new_sum = cur_sum + c.d;
                if let Some((bm, bs, bg)) = &self.best {
                    let ub_min = new_min.min(rest_min);
                    let ub_sum = new_sum + rest_sum;
                    if ub_min < *bm || (ub_min == *bm && ub_sum < *bs) {
                        break;
                    }
                    if ub_min == *bm
                        && ub_sum == *bs
                        && self
                            .chosen
                            .iter()
                            .copied()
                            .chain(std::iter::once(c.g))
                            .cmp(bg.iter().take(j + 1).copied())
                            == Ordering::Greater
                    {
                        break;
                    }
                }
                let mut next = basis.to_vec();
                let independent = c.g.row_words().iter().all(|&row| {
                    let v = reduce_against(row, &next);
                    if v == 0 {
                        return false;
                    }
                    next.push(v);
                    next.sort_unstable_by(|a, b| b.cmp(a));
                    true
                });
                if !independent {
                    continue;
                }
                self.chosen.push(c.g);
                self.run(j + 1, remaining - l, &next, new_min, new_sum);
                self.chosen.pop();
                if later == 0 {
                    // later entries have no larger distance and a larger matrix
                    break;
                }
            }
        }
    }
}

/// Chooses per-AP matrices from a candidate store.
pub struct Selector<'s> {
    store: &'s CandidateStore,
    options: SelectionOptions,
    wide_pool: Vec<&'s BinaryMatrix>,
}

impl<'s> Selector<'s> {
    pub fn new(store: &'s CandidateStore, options: SelectionOptions) -> Self {
        let wide: BTreeSet<&BinaryMatrix> = store.records().iter().flat_map(|r| r.iter()).collect();
        Selector {
            store,
            options,
            wide_pool: wide.into_iter().collect(),
        }
    }

    pub fn store(&self) -> &'s CandidateStore {
        self.store
    }

    fn score<'m>(&self, profile: &DistanceProfile, pool: impl Iterator<Item = &'m BinaryMatrix>) -> Pool<'m> {
        let mut buckets: Pool<'m> = (0..=self.store.total_bits()).map(|_| Vec::new()).collect();
        for g in pool {
            buckets[g.rows()].push(Scored { d: profile.d_min(g), g });
        }
        // pools arrive in ascending matrix order, so a stable sort on the
        // distance alone leaves ties ordered by matrix
        for b in &mut buckets {
            debug_assert!(b.windows(2).all(|w| w[0].g < w[1].g));
            b.sort_by(|a, b| b.d.total_cmp(&a.d));
        }
        buckets
    }

    fn search(&self, pools: &[Pool<'s>]) -> Option<(f64, f64, Vec<&'s BinaryMatrix>)> {
        let n = pools.len();
        let mut rest_max = vec![0.0; n + 1];
        for j in (0..n).rev() {
            let top = pools[j]
                .iter()
                .filter_map(|b| b.first())
                .map(|s| s.d)
                .filter(|d| d.is_finite())
                .fold(0.0, f64::max);
            rest_max[j] = rest_max[j + 1] + top;
        }
        let mut s = Search {
            pools,
            rest_max,
            best: None,
            chosen: Vec::with_capacity(n),
        };
        s.run(0, self.store.total_bits(), &[], f64::INFINITY, 0.0);
        s.best
    }

    pub fn select(&self, h_per_ap: &[[Complex64; 2]], _sigma: f64) -> Result<SelectionResult> {
        let m_s = self.store.total_bits();
        if h_per_ap.is_empty() || h_per_ap.len() > m_s {
            return Err(PncError::Contract(format!(
                "{} access points for {m_s} joint bits",
                h_per_ap.len()
            )));
        }
        let mut profiles = Vec::with_capacity(h_per_ap.len());
        let mut nearest = Vec::with_capacity(h_per_ap.len());
        for h in h_per_ap {
            nearest.push(self.store.sfs().nearest_sfs(*h)?);
            profiles.push(DistanceProfile::new(&superimpose(h, self.store.table())?));
        }
        let wide = |p: &DistanceProfile| self.score(p, self.wide_pool.iter().copied());
        let (found, widened) = match self.options.pool {
            PoolPolicy::AllReduced => (self.search(&profiles.iter().map(wide).collect::<Vec<_>>()), true),
            PoolPolicy::Nearest => {
                let pools: Vec<_> = profiles
                    .iter()
                    .zip(&nearest)
                    .map(|(p, &(state, _))| self.score(p, self.store.for_state(state).iter()))
                    .collect();
                match self.search(&pools) {
                    Some(b) => (Some(b), false),
                    None => (self.search(&profiles.iter().map(wide).collect::<Vec<_>>()), true),
                }
            }
        };
        let (_, _, mats) = found.ok_or(PncError::SelectionFailure)?;
        let mut global = mats[0].clone();
        for g in &mats[1..] {
            global = global.stack(g)?;
        }
        let global_inverse = global.invert()?;
        let per_ap = mats
            .into_iter()
            .zip(profiles.iter().zip(nearest))
            .map(|(g, (p, (sfs_index, sfs_distance)))| ApSelection {
                d_min: p.d_min(g),
                mapping: g.clone(),
                sfs_index,
                sfs_distance,
            })
            .collect();
        Ok(SelectionResult {
            per_ap,
            global,
            global_inverse,
            widened,
        })
    }
}

/// One-shot selection with the default (nearest fade state) pool.
pub fn online_select(h_per_ap: &[[Complex64; 2]], store: &CandidateStore, sigma: f64) -> Result<SelectionResult> {
    Selector::new(store, SelectionOptions::default()).select(h_per_ap, sigma)
}

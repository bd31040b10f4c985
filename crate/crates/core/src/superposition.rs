//! Superimposed receive constellations, the clusters a mapping matrix
//! induces on them, and the minimum squared distance between clusters.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{PncError, Result};
use crate::gf2::BinaryMatrix;
use crate::modem::JointCombinationTable;

/// Squared distance below which two superimposed points count as the same
/// point (unit average symbol energy).
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Returned by the distance routines when every point shares one cluster.
pub const NO_CROSS_PAIR: f64 = f64::INFINITY;

#[derive(Clone, Debug, PartialEq)]
pub struct SuperimposedConstellation {
    channel: Vec<Complex64>,
    points: Vec<Complex64>,
}

impl SuperimposedConstellation {
    pub fn channel(&self) -> &[Complex64] {
        &self.channel
    }

    /// Indexed by joint message, in table row order.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn superimpose(h: &[Complex64], table: &JointCombinationTable) -> Result<SuperimposedConstellation> {
    if h.len() != table.n_terminals() {
        return Err(PncError::Contract(format!(
            "channel has {} coefficients for {} terminals",
            h.len(),
            table.n_terminals()
        )));
    }
    let points = (0..table.len())
        .map(|b| {
            table
                .symbols(b)
                .iter()
                .zip(h)
                .fold(Complex64::new(0.0, 0.0), |acc, (s, c)| acc + c * s)
        })
        .collect();
    Ok(SuperimposedConstellation {
        channel: h.to_vec(),
        points,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPartition {
    mapping: BinaryMatrix,
    /// NCV of every joint message.
    labels: Vec<u64>,
    clusters: BTreeMap<u64, Vec<usize>>,
}

impl ClusterPartition {
    pub fn mapping(&self) -> &BinaryMatrix {
        &self.mapping
    }

    pub fn ncv_of(&self, b: usize) -> u64 {
        self.labels[b]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// NCV value (row 0 is the most significant bit) to member messages.
    pub fn clusters(&self) -> &BTreeMap<u64, Vec<usize>> {
        &self.clusters
    }
}

pub fn partition_clusters(g: &BinaryMatrix, table: &JointCombinationTable) -> Result<ClusterPartition> {
    if g.cols() != table.total_bits() {
        return Err(PncError::Contract(format!(
            "mapping has {} columns, joint message has {} bits",
            g.cols(),
            table.total_bits()
        )));
    }
    let labels: Vec<u64> = (0..table.len()).map(|b| g.mul_word(b as u64)).collect();
    let mut clusters: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (b, &x) in labels.iter().enumerate() {
        clusters.entry(x).or_default().push(b);
    }
    Ok(ClusterPartition {
        mapping: g.clone(),
        labels,
        clusters,
    })
}

fn clamp(d: f64) -> f64 {
    if d < COINCIDENCE_TOL {
        0.0
    } else {
        d
    }
}

/// Minimum of `|s_i − s_k|²` over pairs in different clusters; 0 when a
/// coincident pair straddles two clusters and [`NO_CROSS_PAIR`] when there is
/// only one cluster.
pub fn min_intercluster_distance(sc: &SuperimposedConstellation, part: &ClusterPartition) -> Result<f64> {
    if sc.len() != part.labels.len() {
        return Err(PncError::Contract(format!(
            "{} points but {} partition labels",
            sc.len(),
            part.labels.len()
        )));
    }
    let pts = &sc.points;
    let mut best = NO_CROSS_PAIR;
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            if part.labels[i] != part.labels[k] {
                best = best.min((pts[i] - pts[k]).norm_sqr());
            }
        }
    }
    Ok(clamp(best))
}

/// For one channel, the smallest squared distance between points whose
/// joint messages differ by each XOR pattern `δ`. Messages `b` and `b ⊕ δ`
/// fall in different clusters of `G` exactly when `G δ ≠ 0`, so
/// `d_min(G)` is the smallest entry over patterns outside the kernel.
#[derive(Clone, Debug)]
pub struct DistanceProfile {
    /// `(distance, δ)` ascending by distance, δ ≠ 0.
    by_distance: Vec<(f64, u64)>,
}

impl DistanceProfile {
    pub fn new(sc: &SuperimposedConstellation) -> Self {
        let pts = &sc.points;
        let n = pts.len();
        let mut per_delta = vec![f64::INFINITY; n];
        for i in 0..n {
            for k in i + 1..n {
                let d = (pts[i] - pts[k]).norm_sqr();
                let delta = i ^ k;
                if d < per_delta[delta] {
                    per_delta[delta] = d;
                }
            }
        }
        let mut by_distance: Vec<(f64, u64)> = per_delta
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(delta, d)| (d, delta as u64))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        DistanceProfile { by_distance }
    }

    pub fn d_min(&self, g: &BinaryMatrix) -> f64 {
        self.by_distance
            .iter()
            .find(|(_, delta)| g.mul_word(*delta) != 0)
            .map_or(NO_CROSS_PAIR, |&(d, _)| clamp(d))
    }
}

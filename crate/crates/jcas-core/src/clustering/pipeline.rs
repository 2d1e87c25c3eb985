//! Joint clustering pipeline: denoise both links, compensate communication
//! powers, cluster the merged set over a range of orders, pick the order with
//! the combined DB/CH score averaged across snapshots, and classify the
//! resulting clusters as shared / communication-only / sensing-only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ChannelPair, Cluster, ClusterCounts, ClusterKind, LinkTag};

use super::indices::{calinski_harabasz, davies_bouldin, select_k};
use super::kpowermeans::{kpowermeans_best_of, Partition};
use super::mcd::{McdParams, DEFAULT_ZETA};
use super::merge::{compute_gamma, denoise, merge_links, GammaPolicy, JointMpcSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpmJcaConfig {
    /// Per-link denoising threshold below the link peak, dB.
    pub p_th_db: f64,
    pub gamma_policy: GammaPolicy,
    pub zeta: f64,
    /// Candidate order range, inclusive. Clamped per run so every snapshot
    /// satisfies `k < n`.
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Minimum members a cluster needs on *each* link to count as shared.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for KpmJcaConfig {
    fn default() -> Self {
        Self {
            p_th_db: 30.0,
            gamma_policy: GammaPolicy::EqualTotal,
            zeta: DEFAULT_ZETA,
            k_min: 2,
            k_max: 20,
            restarts: 10,
            max_iter: 100,
            min_count: 1,
            seed: 0,
        }
    }
}

impl KpmJcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_th_db > 0.0) {
            return Err(Error::Parameter("p_th_db must be > 0".into()));
        }
        if !(self.zeta > 0.0) {
            return Err(Error::Parameter("zeta must be > 0".into()));
        }
        if self.k_min < 2 || self.k_max < self.k_min {
            return Err(Error::Parameter(format!(
                "order range must satisfy 2 <= k_min <= k_max, got {}:{}",
                self.k_min, self.k_max
            )));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::Parameter(
                "restarts and max_iter must be >= 1".into(),
            ));
        }
        if self.min_count == 0 {
            return Err(Error::Parameter("min_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// One candidate order with its snapshot-averaged index values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KCandidate {
    pub k: usize,
    pub db: f64,
    pub ch: f64,
    pub score: f64,
}

/// Clustering result for one snapshot at the selected order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotOutcome {
    pub partition: Partition,
    pub clusters: Vec<Cluster>,
    pub counts: ClusterCounts,
    /// Sharing degree estimated from raw (uncompensated) powers; `None` when
    /// the link contributed no MPCs.
    pub sd_comm: Option<f64>,
    pub sd_sens: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JcaOutcome {
    pub selected_k: usize,
    pub gamma: Vec<f64>,
    pub candidates: Vec<KCandidate>,
    pub snapshots: Vec<SnapshotOutcome>,
}

/// Denoises both links of a snapshot and merges them under the configured
/// compensation policy. A single-link snapshot is accepted only with a
/// manual gamma (there is nothing to balance automatically).
pub fn prepare_joint(pair: &ChannelPair, cfg: &KpmJcaConfig) -> Result<JointMpcSet> {
    let comm = denoise(&pair.comm_mpcs, cfg.p_th_db)?;
    let sens = denoise(&pair.sensing_mpcs, cfg.p_th_db)?;
    if comm.is_empty() && sens.is_empty() {
        return Err(Error::EmptyChannel(
            "no MPCs left after denoising".into(),
        ));
    }
    if comm.is_empty() || sens.is_empty() {
        return match cfg.gamma_policy {
            GammaPolicy::Manual(g) => merge_links(&comm, &sens, g),
            _ => Err(Error::Parameter(
                "automatic gamma needs both links; use a manual gamma for single-link sets"
                    .into(),
            )),
        };
    }
    let gamma = compute_gamma(&comm, &sens, cfg.gamma_policy)?;
    merge_links(&comm, &sens, gamma)
}

/// Splits a partition into labeled clusters. A cluster is shared when each
/// link contributes at least `min_count` members; otherwise it belongs to the
/// link holding more raw power.
pub fn classify_clusters(
    joint: &JointMpcSet,
    part: &Partition,
    min_count: usize,
) -> (Vec<Cluster>, ClusterCounts) {
    let mut clusters = Vec::new();
    let mut counts = ClusterCounts { n0: 0, n1: 0, n2: 0 };
    for c in 0..part.k {
        let members: Vec<usize> = part
            .assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == c)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let comm_sub: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| joint.mpcs[i].link == LinkTag::Communication)
            .collect();
        let sensing_sub: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| joint.mpcs[i].link == LinkTag::Sensing)
            .collect();
        let raw_sum = |ids: &[usize]| ids.iter().map(|&i| joint.raw_powers[i]).sum::<f64>();
        let kind = if comm_sub.len() >= min_count && sensing_sub.len() >= min_count {
            ClusterKind::Shared
        } else if raw_sum(&comm_sub) >= raw_sum(&sensing_sub) {
            ClusterKind::CommOnly
        } else {
            ClusterKind::SensingOnly
        };
        match kind {
            ClusterKind::Shared => counts.n0 += 1,
            ClusterKind::CommOnly => counts.n1 += 1,
            ClusterKind::SensingOnly => counts.n2 += 1,
        }
        let mean_power = raw_sum(&members) / members.len() as f64;
        clusters.push(Cluster {
            id: c,
            members,
            centroid: (part.centroids[c].0, part.centroids[c].1, mean_power),
            kind,
            comm_sub,
            sensing_sub,
        });
    }
    (clusters, counts)
}

/// Fraction of a link's raw power falling in shared clusters.
pub fn recovered_sharing_degree(
    joint: &JointMpcSet,
    clusters: &[Cluster],
    link: LinkTag,
) -> Result<f64> {
    let total: f64 = joint
        .mpcs
        .iter()
        .zip(&joint.raw_powers)
        .filter(|(m, _)| m.link == link)
        .map(|(_, &p)| p)
        .sum();
    if total <= 0.0 {
        return Err(Error::Undefined(format!("zero {link:?} power")));
    }
    let shared: f64 = clusters
        .iter()
        .filter(|c| c.kind == ClusterKind::Shared)
        .flat_map(|c| c.members.iter())
        .filter(|&&i| joint.mpcs[i].link == link)
        .map(|&i| joint.raw_powers[i])
        .sum();
    Ok(shared / total)
}

/// Runs the full pipeline over one or more snapshots of the same scenario.
/// The order is selected once from snapshot-averaged DB/CH values; each
/// snapshot is then reported at that order.
pub fn run_kpm_jca(snapshots: &[ChannelPair], cfg: &KpmJcaConfig) -> Result<JcaOutcome> {
    cfg.validate()?;
    if snapshots.is_empty() {
        return Err(Error::Parameter("no snapshots".into()));
    }
    let joints: Vec<JointMpcSet> = snapshots
        .iter()
        .map(|p| prepare_joint(p, cfg))
        .collect::<Result<_>>()?;
    let params: Vec<McdParams> = joints
        .iter()
        .map(|j| McdParams::from_mpcs(&j.mpcs, cfg.zeta))
        .collect();

    // CH needs k < n on every snapshot.
    let n_min = joints.iter().map(|j| j.len()).min().unwrap();
    let k_max = cfg.k_max.min(n_min.saturating_sub(1));
    if k_max < cfg.k_min {
        return Err(Error::Parameter(format!(
            "smallest snapshot has {n_min} MPCs; no candidate order in {}:{}",
            cfg.k_min, cfg.k_max
        )));
    }

    let mut cache: BTreeMap<(usize, usize), Partition> = BTreeMap::new();
    let mut rows = Vec::new();
    'orders: for k in cfg.k_min..=k_max {
        let (mut db_sum, mut ch_sum) = (0.0, 0.0);
        for (s, joint) in joints.iter().enumerate() {
            let part = kpowermeans_best_of(
                joint,
                k,
                &params[s],
                cfg.seed,
                &[s as u64, k as u64],
                cfg.restarts,
                cfg.max_iter,
            )?;
            // degenerate partitions (e.g. zero within-dispersion near k = n)
            // make the indices undefined; drop the order, don't fail the run
            let (db, ch) = match (
                davies_bouldin(joint, &part, &params[s]),
                calinski_harabasz(joint, &part, &params[s]),
            ) {
                (Ok(db), Ok(ch)) => (db, ch),
                (Err(Error::Undefined(_)), _) | (_, Err(Error::Undefined(_))) => continue 'orders,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            db_sum += db;
            ch_sum += ch;
            cache.insert((s, k), part);
        }
        let inv = 1.0 / joints.len() as f64;
        rows.push((k, db_sum * inv, ch_sum * inv));
    }
    let (selected_k, scores) = select_k(&rows)?;
    let candidates = rows
        .iter()
        .zip(&scores)
        .map(|(&(k, db, ch), &score)| KCandidate { k, db, ch, score })
        .collect();

    let mut outcomes = Vec::new();
    for (s, joint) in joints.iter().enumerate() {
        let mut part = cache.remove(&(s, selected_k)).expect("cached above");
        part.db = Some(davies_bouldin(joint, &part, &params[s])?);
        part.ch = Some(calinski_harabasz(joint, &part, &params[s])?);
        let (clusters, counts) = classify_clusters(joint, &part, cfg.min_count);
        let sd_of = |link: LinkTag| match recovered_sharing_degree(joint, &clusters, link) {
            Ok(sd) => Ok(Some(sd)),
            Err(Error::Undefined(_)) => Ok(None),
            Err(e) => Err(e),
        };
        let sd_comm = sd_of(LinkTag::Communication)?;
        let sd_sens = sd_of(LinkTag::Sensing)?;
        outcomes.push(SnapshotOutcome {
            partition: part,
            clusters,
            counts,
            sd_comm,
            sd_sens,
        });
    }
    Ok(JcaOutcome {
        selected_k,
        gamma: joints.iter().map(|j| j.gamma).collect(),
        candidates,
        snapshots: outcomes,
    })
}

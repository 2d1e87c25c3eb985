//! Joint channel realization model: shared/non-shared cluster synthesis,
//! PADPs, sharing degree, and single-bounce scatterer localization.

mod generate;

pub use generate::{
    derive_shared_comm_subclusters, generate_nonshared_comm_clusters, generate_sensing_clusters,
    ClusterDraw, GeneratedCluster, GenerationTables,
};

use num_complex::Complex64;

use crate::config::{ScenarioConfig, SdMode};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::types::{
    ChannelPair, ClusterCounts, ClusterKind, LinkTag, Mpc, Padp, TruthLabel, TruthLabels,
};

/// Unit vector of an AOD in the file/plot convention: degrees clockwise from
/// south, with south = (0, -1), west = (-1, 0).
pub fn aod_unit_vector(aod_deg: f64) -> [f64; 2] {
    let r = aod_deg.to_radians();
    [-r.sin(), -r.cos()]
}

pub(crate) fn localize_point(tx: [f64; 2], aod_deg: f64, delay_ns: f64, speed: f64) -> [f64; 2] {
    // round-trip echo: measured propagation distance is twice the range
    let range = speed * delay_ns / 2.0;
    let u = aod_unit_vector(aod_deg);
    [tx[0] + range * u[0], tx[1] + range * u[1]]
}

/// Places each sensing scatterer at half the echo propagation distance along
/// its AOD from the TX position.
pub fn localize_scatterers(
    sensing_mpcs: &[Mpc],
    tx_position_m: [f64; 2],
    wave_speed_m_per_ns: f64,
) -> Vec<[f64; 2]> {
    sensing_mpcs
        .iter()
        .map(|m| localize_point(tx_position_m, m.aod_deg, m.delay_ns, wave_speed_m_per_ns))
        .collect()
}

/// Accumulates `|h|^2` per (angle, delay) bin. Total PADP power equals the
/// total MPC power (RCS included). Empty input yields an empty profile.
pub fn padp_from_mpcs(mpcs: &[Mpc], angle_bin_deg: f64, delay_bin_ns: f64) -> Result<Padp> {
    if !(angle_bin_deg > 0.0) || !(delay_bin_ns > 0.0) {
        return Err(Error::Parameter("bin widths must be > 0".into()));
    }
    if mpcs.is_empty() {
        return Ok(Padp {
            angle_grid_deg: vec![],
            delay_grid_ns: vec![],
            power: vec![],
        });
    }
    let a_idx = |m: &Mpc| (m.aod_deg / angle_bin_deg).floor() as i64;
    let d_idx = |m: &Mpc| (m.delay_ns / delay_bin_ns).floor() as i64;
    let (a_min, a_max) = mpcs
        .iter()
        .map(a_idx)
        .fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (d_min, d_max) = mpcs
        .iter()
        .map(d_idx)
        .fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let na = (a_max - a_min + 1) as usize;
    let nd = (d_max - d_min + 1) as usize;
    let mut power = vec![vec![0.0; nd]; na];
    for m in mpcs {
        power[(a_idx(m) - a_min) as usize][(d_idx(m) - d_min) as usize] += m.power(true);
    }
    Ok(Padp {
        angle_grid_deg: (0..na)
            .map(|i| (a_min + i as i64) as f64 * angle_bin_deg + angle_bin_deg / 2.0)
            .collect(),
        delay_grid_ns: (0..nd)
            .map(|j| (d_min + j as i64) as f64 * delay_bin_ns + delay_bin_ns / 2.0)
            .collect(),
        power,
    })
}

/// Sharing degree of one link.
///
/// Incoherent mode is the power ratio of shared clusters to the whole link
/// (RCS folded in); coherent mode is the displayed amplitude-sum formula and
/// may exceed 1 under phase alignment.
pub fn sharing_degree(
    pair: &ChannelPair,
    link: LinkTag,
    mode: SdMode,
    labels: &[ClusterKind],
) -> Result<f64> {
    let mpcs = match link {
        LinkTag::Communication => &pair.comm_mpcs,
        LinkTag::Sensing => &pair.sensing_mpcs,
    };
    if labels.len() != mpcs.len() {
        return Err(Error::Validation(format!(
            "labels cover {} MPCs but the link has {}",
            labels.len(),
            mpcs.len()
        )));
    }
    match mode {
        SdMode::Incoherent => {
            let total: f64 = mpcs.iter().map(|m| m.power(true)).sum();
            if total <= 0.0 {
                return Err(Error::Undefined("zero total link power".into()));
            }
            let shared: f64 = mpcs
                .iter()
                .zip(labels)
                .filter(|(_, &k)| k == ClusterKind::Shared)
                .map(|(m, _)| m.power(true))
                .sum();
            Ok(shared / total)
        }
        SdMode::Coherent => {
            let weighted = |m: &Mpc| m.amplitude * Complex64::from(m.rcs.unwrap_or(1.0));
            let total: Complex64 = mpcs.iter().map(weighted).sum();
            let denom = total.norm_sqr();
            if denom <= 0.0 {
                return Err(Error::Undefined(
                    "coherent total amplitude is zero".into(),
                ));
            }
            let shared: Complex64 = mpcs
                .iter()
                .zip(labels)
                .filter(|(_, &k)| k == ClusterKind::Shared)
                .map(|(m, _)| weighted(m))
                .sum();
            Ok(shared.norm_sqr() / denom)
        }
    }
}

/// Sharing degree of one link using the pair's generation-truth labels.
pub fn sharing_degree_from_truth(pair: &ChannelPair, link: LinkTag, mode: SdMode) -> Result<f64> {
    let truth = pair
        .cluster_truth
        .as_ref()
        .ok_or_else(|| Error::Validation("channel pair carries no truth labels".into()))?;
    let labels: Vec<ClusterKind> = match link {
        LinkTag::Communication => truth.comm.iter().map(|l| l.kind).collect(),
        LinkTag::Sensing => truth.sensing.iter().map(|l| l.kind).collect(),
    };
    sharing_degree(pair, link, mode, &labels)
}

/// Step 4: flattens the generated clusters into a [`ChannelPair`] with truth
/// labels and unit total power per link, and reports the resolved draws.
pub fn synthesize_channel_pair(
    sensing: &[GeneratedCluster],
    shared_comm: &[GeneratedCluster],
    comm_only: &[GeneratedCluster],
) -> Result<(ChannelPair, GenerationTables)> {
    let comm_clusters: Vec<&GeneratedCluster> =
        shared_comm.iter().chain(comm_only.iter()).collect();
    if sensing.is_empty() && comm_clusters.is_empty() {
        return Err(Error::EmptyChannel("both links are empty".into()));
    }

    let flatten = |clusters: &[&GeneratedCluster]| -> (Vec<Mpc>, Vec<TruthLabel>) {
        let mut mpcs = Vec::new();
        let mut labels = Vec::new();
        for c in clusters {
            for m in &c.mpcs {
                mpcs.push(m.clone());
                labels.push(TruthLabel {
                    cluster_id: c.id,
                    kind: c.kind,
                });
            }
        }
        (mpcs, labels)
    };
    let sensing_refs: Vec<&GeneratedCluster> = sensing.iter().collect();
    let (mut comm_mpcs, comm_labels) = flatten(&comm_clusters);
    let (mut sensing_mpcs, sensing_labels) = flatten(&sensing_refs);

    // Per-link normalization of total power (RCS folded in on sensing).
    let normalize = |mpcs: &mut [Mpc]| -> f64 {
        let total: f64 = mpcs.iter().map(|m| m.power(true)).sum();
        if total > 0.0 {
            let scale = total.sqrt().recip();
            for m in mpcs.iter_mut() {
                m.amplitude *= scale;
            }
        }
        total
    };
    normalize(&mut comm_mpcs);
    normalize(&mut sensing_mpcs);

    let n0 = shared_comm.len();
    let counts = ClusterCounts {
        n0,
        n1: comm_only.len(),
        n2: sensing.len().saturating_sub(n0),
    };

    // Tables carry post-normalization cluster powers.
    let table_of = |clusters: &[&GeneratedCluster], mpcs: &[Mpc], labels: &[TruthLabel]| {
        clusters
            .iter()
            .map(|c| {
                let power: f64 = mpcs
                    .iter()
                    .zip(labels)
                    .filter(|(_, l)| l.cluster_id == c.id)
                    .map(|(m, _)| m.power(true))
                    .sum();
                ClusterDraw {
                    power,
                    ..c.draw
                }
            })
            .collect::<Vec<_>>()
    };
    let tables = GenerationTables {
        sensing: table_of(&sensing_refs, &sensing_mpcs, &sensing_labels),
        comm: table_of(&comm_clusters, &comm_mpcs, &comm_labels),
    };

    let pair = ChannelPair {
        comm_mpcs,
        sensing_mpcs,
        cluster_truth: Some(TruthLabels {
            comm: comm_labels,
            sensing: sensing_labels,
        }),
        counts,
    };
    pair.validate()?;
    Ok((pair, tables))
}

/// Runs generation steps 1-4 from a config, deriving RNG substreams from
/// `cfg.seed` and the extra tag words (used for per-trial substreams).
pub fn generate_channel_pair_tagged(
    cfg: &ScenarioConfig,
    tags: &[u64],
) -> Result<(ChannelPair, GenerationTables)> {
    cfg.validate()?;
    let tagged = |op: u64| {
        let mut t = tags.to_vec();
        t.push(op);
        substream(cfg.seed, &t)
    };
    let mut sensing = generate_sensing_clusters(cfg, &mut tagged(1))?;
    let shared = derive_shared_comm_subclusters(&mut sensing, cfg.n0, cfg, &mut tagged(2))?;
    let comm_only = generate_nonshared_comm_clusters(cfg, cfg.n1, &mut tagged(3), sensing.len())?;
    synthesize_channel_pair(&sensing, &shared, &comm_only)
}

/// Generates one labeled channel pair from a config: sensing clusters,
/// shared communication sub-clusters, communication-only clusters, then
/// synthesis and normalization.
pub fn generate_channel_pair(cfg: &ScenarioConfig) -> Result<(ChannelPair, GenerationTables)> {
    generate_channel_pair_tagged(cfg, &[])
}

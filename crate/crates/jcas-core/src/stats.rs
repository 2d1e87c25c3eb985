//! Power-weighted spread statistics and distribution fitting.
//!
//! The rms delay spread of a cluster is the power-weighted standard deviation
//! of its member delays about the power-weighted mean delay; the rms angle
//! spread uses the same formulas after an angular-ambiguity-safe unwrapping:
//! the spread is evaluated under every 1-degree cyclic shift of the angle
//! origin and the minimum is returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{normalize_angle, ChannelPair, ClusterKind, Mpc};

fn check_weighted(values: &[f64], powers: &[f64]) -> Result<f64> {
    if values.len() != powers.len() || values.is_empty() {
        return Err(Error::Validation(
            "values and powers must be non-empty and equal length".into(),
        ));
    }
    if powers.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::Validation("powers must be finite and >= 0".into()));
    }
    let total: f64 = powers.iter().sum();
    if total <= 0.0 {
        return Err(Error::Undefined("zero total power".into()));
    }
    Ok(total)
}

/// Power-weighted mean delay and rms delay spread.
pub fn rms_delay_spread(delays: &[f64], powers: &[f64]) -> Result<(f64, f64)> {
    let total = check_weighted(delays, powers)?;
    let mean: f64 = delays
        .iter()
        .zip(powers)
        .map(|(&t, &p)| t * p)
        .sum::<f64>()
        / total;
    let var: f64 = delays
        .iter()
        .zip(powers)
        .map(|(&t, &p)| (t - mean).powi(2) * p)
        .sum::<f64>()
        / total;
    Ok((mean, var.max(0.0).sqrt()))
}

/// Wrap-aware power-weighted rms angle spread, degrees.
///
/// Evaluates the delay-spread formulas on `(angle + shift) mod 360` for every
/// integer shift in `0..360` and returns the minimum spread. Equals the naive
/// linear spread whenever the angles fit in an arc away from the wrap point.
pub fn rms_angle_spread(angles_deg: &[f64], powers: &[f64]) -> Result<f64> {
    check_weighted(angles_deg, powers)?;
    let normalized: Result<Vec<f64>> = angles_deg.iter().map(|&a| normalize_angle(a)).collect();
    let normalized = normalized?;
    let mut best = f64::INFINITY;
    for shift in 0..360 {
        let shifted: Vec<f64> = normalized
            .iter()
            .map(|&a| {
                let s = a + shift as f64;
                if s >= 360.0 {
                    s - 360.0
                } else {
                    s
                }
            })
            .collect();
        let (_, spread) = rms_delay_spread(&shifted, powers)?;
        if spread < best {
            best = spread;
        }
    }
    Ok(best)
}

/// Power-weighted circular mean of angles, degrees in `[0, 360)`.
pub fn circular_mean_deg(angles_deg: &[f64], powers: &[f64]) -> Result<f64> {
    let _ = check_weighted(angles_deg, powers)?;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (&a, &p) in angles_deg.iter().zip(powers) {
        let r = a.to_radians();
        sx += p * r.cos();
        sy += p * r.sin();
    }
    if sx == 0.0 && sy == 0.0 {
        return Err(Error::Undefined(
            "circular mean undefined for balanced angles".into(),
        ));
    }
    normalize_angle(sy.atan2(sx).to_degrees())
}

/// Sample mean and population standard deviation.
pub fn fit_normal(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|&s| (s - mu).powi(2)).sum::<f64>() / n;
    Ok((mu, var.sqrt()))
}

/// Sorted (value, cumulative probability) pairs; probability steps by 1/n.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Validation("empty sample set".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect())
}

/// Normalized histogram as (bin center, density) pairs; integrates to 1.
pub fn histogram_pdf(samples: &[f64], bin_width: f64) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Validation("empty sample set".into()));
    }
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(Error::Parameter("bin width must be > 0".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let first_bin = (lo / bin_width).floor() as i64;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last_bin = (hi / bin_width).floor() as i64;
    let mut counts = vec![0usize; (last_bin - first_bin + 1) as usize];
    for &s in samples {
        let mut idx = (s / bin_width).floor() as i64 - first_bin;
        idx = idx.clamp(0, counts.len() as i64 - 1);
        counts[idx as usize] += 1;
    }
    let total = samples.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let center = (first_bin + i as i64) as f64 * bin_width + bin_width / 2.0;
            (center, c as f64 / (total * bin_width))
        })
        .collect())
}

/// Centroid of one cluster for inter-cluster statistics.
#[derive(Debug, Clone, Copy)]
pub struct CentroidSample {
    pub aod_deg: f64,
    pub delay_ns: f64,
    /// Total (raw) cluster power; used as the weight.
    pub power: f64,
}

/// Cluster category filter for inter-cluster spreads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterCategory {
    Joint,
    Communication,
    Sensing,
}

/// Inter-cluster rms DS and AS over cluster centroids, weighted by cluster
/// powers. A single centroid yields (0, 0).
pub fn inter_cluster_spreads(centroids: &[CentroidSample]) -> Result<(f64, f64)> {
    if centroids.is_empty() {
        return Err(Error::Undefined("no centroids in category".into()));
    }
    if centroids.len() == 1 {
        return Ok((0.0, 0.0));
    }
    let delays: Vec<f64> = centroids.iter().map(|c| c.delay_ns).collect();
    let angles: Vec<f64> = centroids.iter().map(|c| c.aod_deg).collect();
    let powers: Vec<f64> = centroids.iter().map(|c| c.power).collect();
    let (_, ds) = rms_delay_spread(&delays, &powers)?;
    let asp = rms_angle_spread(&angles, &powers)?;
    Ok((ds, asp))
}

/// Per-cluster record of a [`SpreadReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    pub kind: ClusterKind,
    pub path_count: usize,
    pub mean_delay_ns: f64,
    pub rms_ds_ns: f64,
    pub circ_mean_aod_deg: f64,
    pub rms_as_deg: f64,
}

/// Normal fits over the per-cluster records of one kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KindFits {
    pub kind: ClusterKind,
    pub clusters_fitted: usize,
    pub path_count: (f64, f64),
    pub log10_ds_ns: (f64, f64),
    pub log10_as_deg: (f64, f64),
}

/// Table-shaped spread summary of one clustered (or truth-labeled) channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadReport {
    pub clusters: Vec<ClusterRecord>,
    /// (rms DS ns, rms AS deg) per category.
    pub inter_joint: (f64, f64),
    pub inter_comm: Option<(f64, f64)>,
    pub inter_sens: Option<(f64, f64)>,
    pub fits: Vec<KindFits>,
    /// Ids of single-member clusters excluded from fits.
    pub excluded_from_fits: Vec<usize>,
}

/// One labeled cluster over concrete MPCs, input to [`spread_report`].
#[derive(Debug, Clone)]
pub struct LabeledCluster {
    pub id: usize,
    pub kind: ClusterKind,
    pub mpcs: Vec<Mpc>,
}

/// Builds the per-cluster and per-category spread summary.
///
/// Intra-cluster spreads use raw MPC powers (RCS folded in for sensing).
/// Inter-cluster spreads plug the cluster centroids into the same formulas,
/// weighted by total cluster power; shared clusters count toward every
/// category.
pub fn spread_report(clusters: &[LabeledCluster]) -> Result<SpreadReport> {
    if clusters.is_empty() {
        return Err(Error::Validation("no clusters".into()));
    }
    let mut records = Vec::new();
    let mut centroids = Vec::new();
    for c in clusters {
        if c.mpcs.is_empty() {
            return Err(Error::Validation(format!("cluster {} is empty", c.id)));
        }
        let powers: Vec<f64> = c.mpcs.iter().map(|m| m.power(true)).collect();
        let delays: Vec<f64> = c.mpcs.iter().map(|m| m.delay_ns).collect();
        let angles: Vec<f64> = c.mpcs.iter().map(|m| m.aod_deg).collect();
        let (mean_delay, ds) = rms_delay_spread(&delays, &powers)?;
        let asp = rms_angle_spread(&angles, &powers)?;
        let mean_aod = circular_mean_deg(&angles, &powers)?;
        records.push(ClusterRecord {
            id: c.id,
            kind: c.kind,
            path_count: c.mpcs.len(),
            mean_delay_ns: mean_delay,
            rms_ds_ns: ds,
            circ_mean_aod_deg: mean_aod,
            rms_as_deg: asp,
        });
        centroids.push((
            c.kind,
            CentroidSample {
                aod_deg: mean_aod,
                delay_ns: mean_delay,
                power: powers.iter().sum(),
            },
        ));
    }

    let by_category = |cat: ClusterCategory| -> Vec<CentroidSample> {
        centroids
            .iter()
            .filter(|(kind, _)| match cat {
                ClusterCategory::Joint => true,
                ClusterCategory::Communication => {
                    matches!(kind, ClusterKind::Shared | ClusterKind::CommOnly)
                }
                ClusterCategory::Sensing => {
                    matches!(kind, ClusterKind::Shared | ClusterKind::SensingOnly)
                }
            })
            .map(|(_, c)| *c)
            .collect()
    };
    let inter_joint = inter_cluster_spreads(&by_category(ClusterCategory::Joint))?;
    let comm = by_category(ClusterCategory::Communication);
    let sens = by_category(ClusterCategory::Sensing);
    let inter_comm = if comm.is_empty() {
        None
    } else {
        Some(inter_cluster_spreads(&comm)?)
    };
    let inter_sens = if sens.is_empty() {
        None
    } else {
        Some(inter_cluster_spreads(&sens)?)
    };

    let mut excluded: Vec<usize> = records
        .iter()
        .filter(|r| r.path_count < 2)
        .map(|r| r.id)
        .collect();
    excluded.sort_unstable();

    let mut fits = Vec::new();
    for kind in [
        ClusterKind::Shared,
        ClusterKind::CommOnly,
        ClusterKind::SensingOnly,
    ] {
        let eligible: Vec<&ClusterRecord> = records
            .iter()
            .filter(|r| r.kind == kind && r.path_count >= 2)
            .collect();
        if eligible.len() < 2 {
            continue;
        }
        let counts: Vec<f64> = eligible.iter().map(|r| r.path_count as f64).collect();
        // Zero spreads cannot be log-fitted; floor at the delay/angle
        // resolution scale.
        let log_ds: Vec<f64> = eligible
            .iter()
            .map(|r| r.rms_ds_ns.max(1e-3).log10())
            .collect();
        let log_as: Vec<f64> = eligible
            .iter()
            .map(|r| r.rms_as_deg.max(1e-3).log10())
            .collect();
        fits.push(KindFits {
            kind,
            clusters_fitted: eligible.len(),
            path_count: fit_normal(&counts)?,
            log10_ds_ns: fit_normal(&log_ds)?,
            log10_as_deg: fit_normal(&log_as)?,
        });
    }

    Ok(SpreadReport {
        clusters: records,
        inter_joint,
        inter_comm,
        inter_sens,
        fits,
        excluded_from_fits: excluded,
    })
}

/// Pooled intra-cluster spreads of one generated shared cluster.
///
/// Cross-link absolute delays are not comparable (link geometries differ), so
/// the pooled dispersion combines each sub-cluster's own spread about its own
/// centroid: `pooled^2 = w_c * s_c^2 + w_s * s_s^2`. Sub weights are path
/// counts, i.e. power shares after per-cluster equal-mean compensation; power
/// weights would let the link power split (a link-geometry artifact) leak
/// into a within-cluster statistic.
#[derive(Debug, Clone, Copy)]
pub struct PooledIntra {
    pub cluster_id: usize,
    pub ds_ns: f64,
    pub as_deg: f64,
}

/// Computes pooled intra spreads for every truth-labeled shared cluster of a
/// generated pair. Errors when the pair carries no truth labels.
pub fn pooled_shared_intra(pair: &ChannelPair) -> Result<Vec<PooledIntra>> {
    let truth = pair
        .cluster_truth
        .as_ref()
        .ok_or_else(|| Error::Validation("channel pair carries no truth labels".into()))?;

    let mut shared_ids: Vec<usize> = truth
        .comm
        .iter()
        .filter(|l| l.kind == ClusterKind::Shared)
        .map(|l| l.cluster_id)
        .collect();
    shared_ids.sort_unstable();
    shared_ids.dedup();

    let sub_stats = |mpcs: &[&Mpc]| -> Result<Option<(f64, f64, f64)>> {
        if mpcs.is_empty() {
            return Ok(None);
        }
        let powers: Vec<f64> = mpcs.iter().map(|m| m.power(true)).collect();
        let delays: Vec<f64> = mpcs.iter().map(|m| m.delay_ns).collect();
        let angles: Vec<f64> = mpcs.iter().map(|m| m.aod_deg).collect();
        let (_, ds) = rms_delay_spread(&delays, &powers)?;
        let asp = rms_angle_spread(&angles, &powers)?;
        Ok(Some((mpcs.len() as f64, ds, asp)))
    };

    let mut out = Vec::new();
    for id in shared_ids {
        let comm: Vec<&Mpc> = pair
            .comm_mpcs
            .iter()
            .zip(&truth.comm)
            .filter(|(_, l)| l.cluster_id == id)
            .map(|(m, _)| m)
            .collect();
        let sens: Vec<&Mpc> = pair
            .sensing_mpcs
            .iter()
            .zip(&truth.sensing)
            .filter(|(_, l)| l.cluster_id == id)
            .map(|(m, _)| m)
            .collect();
        let mut acc = Vec::new();
        if let Some(s) = sub_stats(&comm)? {
            acc.push(s);
        }
        if let Some(s) = sub_stats(&sens)? {
            acc.push(s);
        }
        if acc.is_empty() {
            continue;
        }
        let total: f64 = acc.iter().map(|(w, _, _)| w).sum();
        let ds = acc
            .iter()
            .map(|(w, ds, _)| w / total * ds * ds)
            .sum::<f64>()
            .sqrt();
        let asp = acc
            .iter()
            .map(|(w, _, a)| w / total * a * a)
            .sum::<f64>()
            .sqrt();
        out.push(PooledIntra {
            cluster_id: id,
            ds_ns: ds,
            as_deg: asp,
        });
    }
    Ok(out)
}

/// Groups the MPCs of a truth-labeled pair into [`LabeledCluster`]s.
pub fn truth_clusters(pair: &ChannelPair) -> Result<Vec<LabeledCluster>> {
    let truth = pair
        .cluster_truth
        .as_ref()
        .ok_or_else(|| Error::Validation("channel pair carries no truth labels".into()))?;
    let mut map: std::collections::BTreeMap<usize, LabeledCluster> = Default::default();
    let mut add = |mpcs: &[Mpc], labels: &[crate::types::TruthLabel]| {
        for (m, l) in mpcs.iter().zip(labels) {
            map.entry(l.cluster_id)
                .or_insert_with(|| LabeledCluster {
                    id: l.cluster_id,
                    kind: l.kind,
                    mpcs: Vec::new(),
                })
                .mpcs
                .push(m.clone());
        }
    };
    add(&pair.comm_mpcs, &truth.comm);
    add(&pair.sensing_mpcs, &truth.sensing);
    Ok(map.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_path_zero_spread() {
        let (mean, ds) = rms_delay_spread(&[7.0], &[0.4]).unwrap();
        assert_relative_eq!(mean, 7.0);
        assert_eq!(ds, 0.0);
        assert_eq!(rms_angle_spread(&[123.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn two_delay_hand_case() {
        let (mean, ds) = rms_delay_spread(&[0.0, 10.0], &[1.0, 1.0]).unwrap();
        assert!((mean - 5.0).abs() < 1e-12);
        assert!((ds - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_total_power_undefined() {
        assert!(rms_delay_spread(&[0.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(rms_angle_spread(&[0.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wrap_case_350_10() {
        let spread = rms_angle_spread(&[350.0, 10.0], &[1.0, 1.0]).unwrap();
        assert!((spread - 10.0).abs() < 1e-12, "got {spread}");
    }

    #[test]
    fn rotation_invariance_integer() {
        let angles = [350.0, 10.0, 17.0, 300.0];
        let powers = [1.0, 2.0, 0.5, 0.25];
        let base = rms_angle_spread(&angles, &powers).unwrap();
        let rotated: Vec<f64> = angles.iter().map(|a| a + 37.0).collect();
        let shifted = rms_angle_spread(&rotated, &powers).unwrap();
        assert!((base - shifted).abs() < 1e-9);
    }

    #[test]
    fn fit_normal_hand_cases() {
        let (mu, sigma) = fit_normal(&[3.0, 3.0, 3.0]).unwrap();
        assert_relative_eq!(mu, 3.0);
        assert_eq!(sigma, 0.0);
        let (mu, sigma) = fit_normal(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(mu, 1.0);
        assert_relative_eq!(sigma, 1.0);
        assert!(fit_normal(&[1.0]).is_err());
    }

    #[test]
    fn cdf_single_sample() {
        let cdf = empirical_cdf(&[4.2]).unwrap();
        assert_eq!(cdf, vec![(4.2, 1.0)]);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64) * 0.361).collect();
        let pdf = histogram_pdf(&samples, 5.0).unwrap();
        let integral: f64 = pdf.iter().map(|(_, d)| d * 5.0).sum();
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inter_cluster_single_centroid() {
        let c = [CentroidSample {
            aod_deg: 10.0,
            delay_ns: 20.0,
            power: 1.0,
        }];
        assert_eq!(inter_cluster_spreads(&c).unwrap(), (0.0, 0.0));
        assert!(inter_cluster_spreads(&[]).is_err());
    }

    proptest! {
        #[test]
        fn ds_shift_and_scale_behavior(
            delays in proptest::collection::vec(0.0f64..100.0, 2..12),
            seedp in 1u64..1000,
            shift in 0.0f64..50.0,
            scale in 0.1f64..10.0,
        ) {
            let powers: Vec<f64> = delays.iter().enumerate()
                .map(|(i, _)| ((seedp.wrapping_mul(i as u64 + 1) % 17) + 1) as f64)
                .collect();
            let (_, base) = rms_delay_spread(&delays, &powers).unwrap();
            let shifted: Vec<f64> = delays.iter().map(|d| d + shift).collect();
            let (_, s) = rms_delay_spread(&shifted, &powers).unwrap();
            prop_assert!((base - s).abs() < 1e-9 * (1.0 + base));
            let scaled: Vec<f64> = delays.iter().map(|d| d * scale).collect();
            let (_, sc) = rms_delay_spread(&scaled, &powers).unwrap();
            prop_assert!((sc - base * scale).abs() < 1e-9 * (1.0 + sc));
            // power scaling leaves the spread unchanged
            let p2: Vec<f64> = powers.iter().map(|p| p * 3.5).collect();
            let (_, ps) = rms_delay_spread(&delays, &p2).unwrap();
            prop_assert!((base - ps).abs() < 1e-9 * (1.0 + base));
        }

        #[test]
        fn angle_spread_bounded_and_power_scale_invariant(
            angles in proptest::collection::vec(0.0f64..360.0, 2..12),
            scale in 0.1f64..10.0,
        ) {
            let powers = vec![1.0; angles.len()];
            let spread = rms_angle_spread(&angles, &powers).unwrap();
            // full-circle worst case with a safety factor
            prop_assert!(spread <= 180.0 / 3.0f64.sqrt() * 1.05);
            let p2: Vec<f64> = powers.iter().map(|p| p * scale).collect();
            let s2 = rms_angle_spread(&angles, &p2).unwrap();
            prop_assert!((spread - s2).abs() < 1e-9 * (1.0 + spread));
        }
    }
}

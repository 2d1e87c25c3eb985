//! Cluster validity indices over the MCD metric and the combined order
//! selector built from them.

use crate::error::{Error, Result};

use super::kpowermeans::Partition;
use super::mcd::{mcd_coords, McdParams};
use super::merge::JointMpcSet;

fn cluster_scatters(
    joint: &JointMpcSet,
    part: &Partition,
    params: &McdParams,
    squared: bool,
) -> Vec<(f64, f64)> {
    // (power-weighted scatter, total power) per cluster
    let mut acc = vec![(0.0f64, 0.0f64); part.k];
    for (i, m) in joint.mpcs.iter().enumerate() {
        let c = part.assignment[i];
        let d = mcd_coords(m.aod_deg, m.delay_ns, part.centroids[c].0, part.centroids[c].1, params);
        let d = if squared { d * d } else { d };
        acc[c].0 += joint.powers[i] * d;
        acc[c].1 += joint.powers[i];
    }
    acc
}

/// Davies-Bouldin index: lower is better. Scatter per cluster is the
/// power-weighted mean MCD to the centroid.
pub fn davies_bouldin(joint: &JointMpcSet, part: &Partition, params: &McdParams) -> Result<f64> {
    if part.k < 2 {
        return Err(Error::Undefined("DB needs at least 2 clusters".into()));
    }
    let scatters: Vec<f64> = cluster_scatters(joint, part, params, false)
        .into_iter()
        .map(|(s, p)| if p > 0.0 { s / p } else { 0.0 })
        .collect();
    let mut total = 0.0;
    for i in 0..part.k {
        let mut worst = 0.0f64;
        for j in 0..part.k {
            if i == j {
                continue;
            }
            let sep = mcd_coords(
                part.centroids[i].0,
                part.centroids[i].1,
                part.centroids[j].0,
                part.centroids[j].1,
                params,
            );
            if sep <= 0.0 {
                return Err(Error::Undefined("coincident centroids in DB".into()));
            }
            worst = worst.max((scatters[i] + scatters[j]) / sep);
        }
        total += worst;
    }
    Ok(total / part.k as f64)
}

/// Calinski-Harabasz index: higher is better. Uses squared MCD dispersion,
/// `(B / (k - 1)) / (W / (N - k))` with power-weighted B and W.
pub fn calinski_harabasz(joint: &JointMpcSet, part: &Partition, params: &McdParams) -> Result<f64> {
    let n = joint.len();
    if part.k < 2 || part.k >= n {
        return Err(Error::Undefined(format!(
            "CH needs 2 <= k < n, got k = {} with n = {n}",
            part.k
        )));
    }
    let total_power: f64 = joint.powers.iter().sum();
    if total_power <= 0.0 {
        return Err(Error::Undefined("zero total power in CH".into()));
    }
    // power-weighted global centroid in the same space as cluster centroids
    let global = super::kpowermeans::weighted_centroid(joint, 0..n);

    let within: f64 = cluster_scatters(joint, part, params, true)
        .iter()
        .map(|&(s, _)| s)
        .sum();
    let between: f64 = cluster_scatters(joint, part, params, true)
        .iter()
        .enumerate()
        .map(|(c, &(_, p))| {
            let d = mcd_coords(
                part.centroids[c].0,
                part.centroids[c].1,
                global.0,
                global.1,
                params,
            );
            p * d * d
        })
        .sum();
    if within <= 0.0 {
        return Err(Error::Undefined("zero within-cluster dispersion in CH".into()));
    }
    Ok((between / (part.k - 1) as f64) / (within / (n - part.k) as f64))
}

/// Combined order selection: each candidate k gets the average of its DB
/// value normalized by the best (smallest) DB and its CH value normalized by
/// the best (largest) CH. The argmax wins; ties go to the smaller k.
/// Returns `(best_k, scores)` with scores aligned to the input order.
pub fn select_k(candidates: &[(usize, f64, f64)]) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::Parameter("no candidate orders".into()));
    }
    for &(k, db, ch) in candidates {
        if !(db > 0.0) || !(ch > 0.0) || !db.is_finite() || !ch.is_finite() {
            return Err(Error::Undefined(format!(
                "invalid index values at k = {k}: db = {db}, ch = {ch}"
            )));
        }
    }
    let db_min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let ch_max = candidates.iter().map(|c| c.2).fold(0.0f64, f64::max);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|&(_, db, ch)| 0.5 * (db_min / db + ch / ch_max))
        .collect();
    let mut best = 0usize;
    for i in 1..candidates.len() {
        let better = scores[i] > scores[best] + 1e-12
            || ((scores[i] - scores[best]).abs() <= 1e-12 && candidates[i].0 < candidates[best].0);
        if better {
            best = i;
        }
    }
    Ok((candidates[best].0, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kpowermeans::kpowermeans_best_of;
    use crate::clustering::mcd::DEFAULT_ZETA;
    use crate::clustering::merge::merge_links;
    use crate::types::{LinkTag, Mpc};
    use num_complex::Complex64;

    fn joint_from(specs: &[(f64, f64, f64)]) -> JointMpcSet {
        let sens: Vec<Mpc> = specs
            .iter()
            .map(|&(aod, delay, p)| {
                Mpc::new(
                    LinkTag::Sensing,
                    aod,
                    None,
                    delay,
                    Complex64::new(p.sqrt(), 0.0),
                    None,
                )
                .unwrap()
            })
            .collect();
        merge_links(&[], &sens, 1.0).unwrap()
    }

    fn three_blob_set() -> JointMpcSet {
        // compact 2-D clouds, not collinear, so splitting a blob does not
        // collapse its dispersion
        let da = [0.0, 2.8, -1.3, 1.9, -3.1, -0.6, 3.3, -2.2];
        let dd = [1.5, -2.4, 3.8, 0.3, -1.1, -3.5, 2.2, -0.7];
        let mut specs = Vec::new();
        for i in 0..8 {
            specs.push((20.0 + da[i], 10.0 + dd[i], 1.0));
            specs.push((140.0 + da[(i + 3) % 8], 200.0 + dd[i], 0.8));
            specs.push((260.0 + da[(i + 5) % 8], 420.0 + dd[i], 1.2));
        }
        joint_from(&specs)
    }

    #[test]
    fn both_indices_prefer_true_order() {
        let joint = three_blob_set();
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let mut rows = Vec::new();
        for k in 2..=6 {
            let p = kpowermeans_best_of(&joint, k, &params, 11, &[k as u64], 8, 100).unwrap();
            let db = davies_bouldin(&joint, &p, &params).unwrap();
            let ch = calinski_harabasz(&joint, &p, &params).unwrap();
            rows.push((k, db, ch));
        }
        let db_best = rows
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        let ch_best = rows
            .iter()
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .unwrap()
            .0;
        assert_eq!(db_best, 3);
        assert_eq!(ch_best, 3);
        let (k, _) = select_k(&rows).unwrap();
        assert_eq!(k, 3);
    }

    #[test]
    fn indices_undefined_below_two_clusters() {
        let joint = three_blob_set();
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let p = kpowermeans_best_of(&joint, 1, &params, 1, &[], 3, 50).unwrap();
        assert!(davies_bouldin(&joint, &p, &params).is_err());
        assert!(calinski_harabasz(&joint, &p, &params).is_err());
    }

    #[test]
    fn combined_score_matches_hand_computation() {
        // the second candidate is best on both indices; the first trails on
        // each and its score is the mean of the two normalized ratios
        let rows = vec![(10, 0.7042, 2735.0), (11, 0.6876, 2740.0)];
        let (k, scores) = select_k(&rows).unwrap();
        let expected = 0.5 * (0.6876 / 0.7042 + 2735.0 / 2740.0);
        assert!((scores[0] - expected).abs() < 1e-12);
        assert!((scores[0] - 0.9873).abs() < 5e-4);
        assert!((scores[1] - 0.5 * (1.0 + 1.0)).abs() < 1e-12);
        assert_eq!(k, 11);
    }

    #[test]
    fn select_k_tie_goes_to_smaller_order() {
        let rows = vec![(5, 0.5, 100.0), (3, 0.5, 100.0)];
        let (k, scores) = select_k(&rows).unwrap();
        assert_eq!(k, 3);
        assert!((scores[0] - 1.0).abs() < 1e-12 && (scores[1] - 1.0).abs() < 1e-12);
        assert!(select_k(&[]).is_err());
        assert!(select_k(&[(2, 0.0, 10.0)]).is_err());
    }
}

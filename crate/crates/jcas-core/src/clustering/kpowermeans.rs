//! Power-weighted k-means over the MCD metric.
//!
//! Initialization: greedy farthest-point seeding with a distance check
//! (candidates at zero distance from every chosen seed are skipped while any
//! other candidate remains). The first seed of restart `r` is the `r`-th
//! strongest MPC while `r` is within range, then random, so small instances
//! are covered exhaustively by the restarts.
//!
//! Iteration: assign to the nearest centroid by MCD, update centroids as
//! compensated-power-weighted means (circular for angle), repair empty
//! clusters by reseeding from the farthest MPC. The reported cost is the
//! power-weighted sum of member-to-centroid MCDs; iterations stop at an
//! assignment fixpoint, when the cost stops decreasing, or at `max_iter`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

use super::mcd::{mcd_coords, McdParams};
use super::merge::JointMpcSet;

/// Output of one clustering run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    /// Cluster id per MPC, indices into `centroids`.
    pub assignment: Vec<usize>,
    /// (AOD degrees, delay ns) per cluster.
    pub centroids: Vec<(f64, f64)>,
    /// Power-weighted total MCD to assigned centroids.
    pub cost: f64,
    /// Cost after each completed iteration; nonincreasing.
    pub cost_history: Vec<f64>,
    /// Davies-Bouldin value, filled by the pipeline.
    pub db: Option<f64>,
    /// Calinski-Harabasz value, filled by the pipeline.
    pub ch: Option<f64>,
}

fn assign(joint: &JointMpcSet, centroids: &[(f64, f64)], params: &McdParams) -> Vec<usize> {
    joint
        .mpcs
        .iter()
        .map(|m| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, &(aod, delay)) in centroids.iter().enumerate() {
                let d = mcd_coords(m.aod_deg, m.delay_ns, aod, delay, params);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub(super) fn weighted_centroid(
    joint: &JointMpcSet,
    members: impl Iterator<Item = usize>,
) -> (f64, f64) {
    let (mut sx, mut sy, mut sd, mut sw) = (0.0, 0.0, 0.0, 0.0);
    for i in members {
        let w = joint.powers[i];
        let r = joint.mpcs[i].aod_deg.to_radians();
        sx += w * r.cos();
        sy += w * r.sin();
        sd += w * joint.mpcs[i].delay_ns;
        sw += w;
    }
    let aod = if sx == 0.0 && sy == 0.0 {
        0.0
    } else {
        sy.atan2(sx).to_degrees().rem_euclid(360.0)
    };
    (aod, if sw > 0.0 { sd / sw } else { 0.0 })
}

fn update_centroids(joint: &JointMpcSet, assignment: &[usize], k: usize) -> Vec<(f64, f64)> {
    (0..k)
        .map(|c| {
            weighted_centroid(
                joint,
                assignment
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a == c)
                    .map(|(i, _)| i),
            )
        })
        .collect()
}

fn partition_cost(
    joint: &JointMpcSet,
    assignment: &[usize],
    centroids: &[(f64, f64)],
    params: &McdParams,
) -> f64 {
    joint
        .mpcs
        .iter()
        .zip(assignment)
        .zip(&joint.powers)
        .map(|((m, &a), &p)| {
            p * mcd_coords(m.aod_deg, m.delay_ns, centroids[a].0, centroids[a].1, params)
        })
        .sum()
}

/// Moves the globally farthest MPC into each empty cluster, provided its
/// source cluster keeps at least one member.
fn repair_empty(joint: &JointMpcSet, assignment: &mut [usize], k: usize, params: &McdParams) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let centroids = update_centroids(joint, assignment, k);
        let mut far_idx = None;
        let mut far_d = -1.0;
        for (i, m) in joint.mpcs.iter().enumerate() {
            let a = assignment[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = mcd_coords(m.aod_deg, m.delay_ns, centroids[a].0, centroids[a].1, params);
            if d > far_d {
                far_d = d;
                far_idx = Some(i);
            }
        }
        match far_idx {
            Some(i) => assignment[i] = empty,
            None => return,
        }
    }
}

/// Greedy farthest-point seeds with a minimum-distance (non-duplicate) check.
fn seed_indices<R: Rng>(
    joint: &JointMpcSet,
    k: usize,
    params: &McdParams,
    restart: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = joint.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        joint.powers[b]
            .partial_cmp(&joint.powers[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let first = if restart < n {
        order[restart]
    } else {
        rng.gen_range(0..n)
    };
    let mut chosen = vec![first];
    let mut min_d: Vec<f64> = (0..n)
        .map(|i| {
            mcd_coords(
                joint.mpcs[i].aod_deg,
                joint.mpcs[i].delay_ns,
                joint.mpcs[first].aod_deg,
                joint.mpcs[first].delay_ns,
                params,
            )
        })
        .collect();
    while chosen.len() < k {
        // distance check: prefer candidates strictly separated from all seeds
        let mut best = None;
        let mut best_d = -1.0;
        for i in 0..n {
            if chosen.contains(&i) {
                continue;
            }
            if min_d[i] > best_d {
                best_d = min_d[i];
                best = Some(i);
            }
        }
        let next = best.expect("k <= n guarantees a candidate");
        chosen.push(next);
        for i in 0..n {
            let d = mcd_coords(
                joint.mpcs[i].aod_deg,
                joint.mpcs[i].delay_ns,
                joint.mpcs[next].aod_deg,
                joint.mpcs[next].delay_ns,
                params,
            );
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
    }
    chosen
}

/// One KPowerMeans run from a single initialization.
pub fn kpowermeans<R: Rng>(
    joint: &JointMpcSet,
    k: usize,
    params: &McdParams,
    rng: &mut R,
    max_iter: usize,
) -> Result<Partition> {
    kpowermeans_restart(joint, k, params, rng, max_iter, 0)
}

fn kpowermeans_restart<R: Rng>(
    joint: &JointMpcSet,
    k: usize,
    params: &McdParams,
    rng: &mut R,
    max_iter: usize,
    restart: usize,
) -> Result<Partition> {
    let n = joint.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "k = {k} must satisfy 1 <= k <= {n}"
        )));
    }
    if exhaustive_feasible(n, k) {
        return Ok(exhaustive_search(joint, k, params));
    }
    let seeds = seed_indices(joint, k, params, restart, rng);
    let mut centroids: Vec<(f64, f64)> = seeds
        .iter()
        .map(|&i| (joint.mpcs[i].aod_deg, joint.mpcs[i].delay_ns))
        .collect();

    let mut best: Option<(Vec<usize>, Vec<(f64, f64)>, f64)> = None;
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut assignment = assign(joint, &centroids, params);
        repair_empty(joint, &mut assignment, k, params);
        centroids = update_centroids(joint, &assignment, k);
        let cost = partition_cost(joint, &assignment, &centroids, params);
        match &best {
            Some((prev_assign, _, prev_cost)) => {
                if cost > prev_cost - 1e-15 && cost >= *prev_cost {
                    break; // keep the previous, cheaper state
                }
                let fixpoint = *prev_assign == assignment;
                history.push(cost);
                best = Some((assignment, centroids.clone(), cost));
                if fixpoint {
                    break;
                }
            }
            None => {
                history.push(cost);
                best = Some((assignment, centroids.clone(), cost));
            }
        }
    }
    let (mut assignment, mut centroids, mut cost) = best.expect("at least one iteration ran");
    if n <= RELOCATION_LIMIT {
        let polished = relocation_polish(joint, &mut assignment, k, params);
        if polished.1 < cost {
            (centroids, cost) = polished;
            history.push(cost);
        }
    }
    Ok(Partition {
        k,
        assignment,
        centroids,
        cost,
        cost_history: history,
        db: None,
        ch: None,
    })
}

/// Assignment-enumeration bound below which tiny instances are solved
/// exactly instead of by Lloyd iteration. Lloyd restarts cover realistic
/// sizes well but can miss the optimum on a handful of points, e.g. when the
/// best partition isolates a weak outlier no seeding ever picks.
const EXHAUSTIVE_BUDGET: u64 = 100_000;

fn exhaustive_feasible(n: usize, k: usize) -> bool {
    let mut total: u64 = 1;
    for _ in 0..n {
        total = total.saturating_mul(k as u64);
        if total > EXHAUSTIVE_BUDGET {
            return false;
        }
    }
    true
}

/// Global optimum over all assignments with no empty cluster, scored exactly
/// like a converged Lloyd state: centroids are the weighted means of the
/// members, cost the power-weighted member-to-centroid MCD sum.
fn exhaustive_search(joint: &JointMpcSet, k: usize, params: &McdParams) -> Partition {
    let n = joint.len();
    let mut assignment = vec![0usize; n];
    let mut best: Option<(Vec<usize>, Vec<(f64, f64)>, f64)> = None;
    'outer: loop {
        let mut seen = vec![false; k];
        for &a in &assignment {
            seen[a] = true;
        }
        if seen.iter().all(|&s| s) {
            let centroids = update_centroids(joint, &assignment, k);
            let cost = partition_cost(joint, &assignment, &centroids, params);
            if best.as_ref().map_or(true, |(_, _, c)| cost < *c) {
                best = Some((assignment.clone(), centroids, cost));
            }
        }
        for i in 0..n {
            assignment[i] += 1;
            if assignment[i] < k {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }
    let (assignment, centroids, cost) =
        best.expect("k <= n guarantees a full assignment exists");
    Partition {
        k,
        assignment,
        centroids,
        cost,
        cost_history: vec![cost],
        db: None,
        ch: None,
    }
}

/// Instance size up to which the quadratic relocation polish runs. Lloyd
/// iterations cannot split off a point that no seeding isolates; on small
/// instances (where that actually happens, and where exhaustive equivalence
/// matters) single-point moves close the gap cheaply.
const RELOCATION_LIMIT: usize = 64;

/// First-improvement hill climbing over single-point relocations and
/// two-point swaps: apply a move whenever it lowers the recomputed-centroid
/// cost, until no move helps. Swaps matter when a singleton cluster should
/// hold a different point than the one seeding left in it, which no sequence
/// of single improving moves can fix. The cost strictly decreases, so this
/// terminates.
fn relocation_polish(
    joint: &JointMpcSet,
    assignment: &mut [usize],
    k: usize,
    params: &McdParams,
) -> (Vec<(f64, f64)>, f64) {
    let n = joint.len();
    let mut centroids = update_centroids(joint, assignment, k);
    let mut cost = partition_cost(joint, assignment, &centroids, params);
    let mut sizes = vec![0usize; k];
    for &a in assignment.iter() {
        sizes[a] += 1;
    }
    loop {
        let mut improved = false;
        for i in 0..n {
            let orig = assignment[i];
            if sizes[orig] < 2 {
                continue;
            }
            for c in 0..k {
                if c == orig {
                    continue;
                }
                assignment[i] = c;
                let cand_centroids = update_centroids(joint, assignment, k);
                let cand_cost = partition_cost(joint, assignment, &cand_centroids, params);
                if cand_cost < cost - 1e-15 {
                    cost = cand_cost;
                    centroids = cand_centroids;
                    sizes[orig] -= 1;
                    sizes[c] += 1;
                    improved = true;
                    break;
                }
                assignment[i] = orig;
            }
        }
        if improved {
            continue;
        }
        'swaps: for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (assignment[i], assignment[j]);
                if a == b {
                    continue;
                }
                assignment[i] = b;
                assignment[j] = a;
                let cand_centroids = update_centroids(joint, assignment, k);
                let cand_cost = partition_cost(joint, assignment, &cand_centroids, params);
                if cand_cost < cost - 1e-15 {
                    cost = cand_cost;
                    centroids = cand_centroids;
                    improved = true;
                    break 'swaps;
                }
                assignment[i] = a;
                assignment[j] = b;
            }
        }
        if !improved {
            return (centroids, cost);
        }
    }
}

/// Best of `restarts` runs (minimum cost, earlier restart wins ties).
/// Restart substreams derive from `(seed, tags..., restart)`.
pub fn kpowermeans_best_of(
    joint: &JointMpcSet,
    k: usize,
    params: &McdParams,
    seed: u64,
    tags: &[u64],
    restarts: usize,
    max_iter: usize,
) -> Result<Partition> {
    let mut best: Option<Partition> = None;
    for r in 0..restarts.max(1) {
        let mut t = tags.to_vec();
        t.push(r as u64);
        let mut rng = substream(seed, &t);
        let p = kpowermeans_restart(joint, k, params, &mut rng, max_iter, r)?;
        if best.as_ref().map_or(true, |b| p.cost < b.cost) {
            best = Some(p);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn k_equals_n_zero_cost() {
        let joint = joint_from(&[(0.0, 0.0, 1.0), (90.0, 10.0, 1.0), (180.0, 20.0, 1.0)]);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let p = kpowermeans_best_of(&joint, 3, &params, 1, &[], 5, 50).unwrap();
        assert!(p.cost.abs() < 1e-12);
        let mut ids = p.assignment.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn k_one_closed_form_centroid() {
        let joint = joint_from(&[(10.0, 0.0, 1.0), (20.0, 10.0, 3.0)]);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let p = kpowermeans(&joint, 1, &params, &mut substream(1, &[]), 50).unwrap();
        let expected = weighted_centroid(&joint, 0..2);
        assert!((p.centroids[0].0 - expected.0).abs() < 1e-9);
        assert!((p.centroids[0].1 - expected.1).abs() < 1e-9);
        // delay centroid is the power-weighted mean
        assert!((p.centroids[0].1 - 7.5).abs() < 1e-9);
    }

    #[test]
    fn two_separated_blobs_split_perfectly() {
        let mut specs = Vec::new();
        for i in 0..6 {
            specs.push((i as f64, i as f64 * 0.1, 1.0));
            specs.push((180.0 + i as f64, 100.0 + i as f64 * 0.1, 1.0));
        }
        let joint = joint_from(&specs);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let p = kpowermeans_best_of(&joint, 2, &params, 7, &[], 10, 100).unwrap();
        // members alternate blob A / blob B in construction order
        let first = p.assignment[0];
        let second = p.assignment[1];
        assert_ne!(first, second);
        for (i, &a) in p.assignment.iter().enumerate() {
            assert_eq!(a, if i % 2 == 0 { first } else { second });
        }
    }

    #[test]
    fn cost_history_nonincreasing() {
        let mut specs = Vec::new();
        for i in 0..40 {
            let a = (i * 67) % 360;
            specs.push((a as f64, (i * 13 % 97) as f64, 0.2 + (i % 7) as f64));
        }
        let joint = joint_from(&specs);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        for k in [2, 3, 5, 8] {
            let p = kpowermeans(&joint, k, &params, &mut substream(42, &[k as u64]), 100).unwrap();
            for w in p.cost_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "cost increased: {:?}", p.cost_history);
            }
        }
    }

    #[test]
    fn k_larger_than_n_is_error() {
        let joint = joint_from(&[(0.0, 0.0, 1.0)]);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        assert!(kpowermeans(&joint, 2, &params, &mut substream(1, &[]), 10).is_err());
        assert!(kpowermeans(&joint, 0, &params, &mut substream(1, &[]), 10).is_err());
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let joint = joint_from(&[
            (0.0, 0.0, 1.0),
            (10.0, 5.0, 2.0),
            (100.0, 50.0, 1.0),
            (200.0, 80.0, 0.5),
            (300.0, 20.0, 0.7),
        ]);
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let a = kpowermeans_best_of(&joint, 2, &params, 9, &[4], 10, 100).unwrap();
        let b = kpowermeans_best_of(&joint, 2, &params, 9, &[4], 10, 100).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.cost, b.cost);
    }
}

//! End-to-end acceptance suite. Each test is one pass/fail gate over a
//! pinned numeric target, oracle, or budgeted study.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jcas_core::clustering::{
    kpowermeans_best_of, mcd_coords, prepare_joint, run_kpm_jca, select_k, JointMpcSet,
    KpmJcaConfig, McdParams, DEFAULT_ZETA,
};
use jcas_core::config::{ScenarioConfig, SdMode};
use jcas_core::model::{generate_channel_pair, padp_from_mpcs, sharing_degree_from_truth};
use jcas_core::sim::{run_aod_sweep, run_sd_sweep};
use jcas_core::stats::{
    pooled_shared_intra, rms_angle_spread, rms_delay_spread, spread_report, truth_clusters,
};
use jcas_core::types::{
    ChannelPair, ClusterCounts, ClusterKind, LinkTag, Mpc, TruthLabel, TruthLabels,
};

fn mpc(link: LinkTag, aod: f64, delay: f64, amp: f64) -> Mpc {
    Mpc::new(link, aod, None, delay, Complex64::new(amp, 0.0), None).unwrap()
}

// ---------------------------------------------------------------------------
// Combined validity indicator: pinned arithmetic anchor.

#[test]
fn combined_indicator_anchor_value() {
    // Two candidate orders; the second holds both the DB minimum and the CH
    // maximum, so the first is scored against those extremes.
    let candidates = [(15, 0.7042, 2735.0), (10, 0.6876, 2740.0)];
    let (best_k, scores) = select_k(&candidates).unwrap();
    assert_eq!(best_k, 10);
    assert!(
        (scores[0] - 0.9873).abs() <= 1e-4,
        "combined score at the non-optimal order: got {}, want 0.9873 +/- 1e-4",
        scores[0]
    );
}

// ---------------------------------------------------------------------------
// Sharing-degree sweep: fitted mean rises with the shared cluster count.

#[test]
fn sharing_degree_sweep_trend() {
    let start = Instant::now();
    let base = ScenarioConfig::default(); // 15 clusters total
    let points = run_sd_sweep(&base, &[6, 8, 10, 12], 300).unwrap();
    let mus: Vec<f64> = points.iter().map(|p| p.mu).collect();
    for w in mus.windows(2) {
        assert!(w[1] > w[0], "fitted mu not strictly increasing: {mus:?}");
    }
    assert!(
        (0.43..=0.63).contains(&mus[1]),
        "mu at n0 = 8 out of range: {}",
        mus[1]
    );
    assert!(
        (0.56..=0.76).contains(&mus[2]),
        "mu at n0 = 10 out of range: {}",
        mus[2]
    );
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "sweep exceeded its 60 s budget: {:?}",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// AOD distributions: the communication PDF converges onto the sensing PDF.

#[test]
fn aod_distributions_converge_with_sharing() {
    let start = Instant::now();
    let mut base = ScenarioConfig::default();
    base.n0 = 0;
    base.n1 = 10; // 10 communication clusters
    base.n2 = 15; // 15 sensing clusters
    let points = run_aod_sweep(&base, &[0, 2, 6, 10], 100, 5.0).unwrap();
    let tv: Vec<f64> = points.iter().map(|p| p.tv_distance).collect();
    for w in tv.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12,
            "TV distance not nonincreasing: {tv:?}"
        );
    }
    // Full sharing: every communication centroid AOD is copied bit-for-bit
    // from a sensing centroid.
    let full = points.last().unwrap();
    assert_eq!(full.n0, 10);
    for &aod in &full.comm_aods {
        assert!(
            full.sens_aods.iter().any(|&s| s == aod),
            "comm centroid AOD {aod} not present among sensing centroids"
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "sweep exceeded its 60 s budget: {:?}",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Planted-cluster recovery oracle.

/// Blob centers (AOD deg, delay ns); separation is far beyond 5x the
/// +/- 2 deg / +/- 5 ns intra jitter.
const BLOBS: [(f64, f64); 5] = [
    (30.0, 50.0),
    (100.0, 150.0),
    (170.0, 250.0),
    (240.0, 350.0),
    (310.0, 450.0),
];

fn planted_pair(seed: u64) -> ChannelPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comm = Vec::new();
    let mut sens = Vec::new();
    for (b, &(aod, delay)) in BLOBS.iter().enumerate() {
        // blobs 0..3 live on both links; blob 3 is comm-only, blob 4 sensing-only
        let links: &[LinkTag] = match b {
            3 => &[LinkTag::Communication],
            4 => &[LinkTag::Sensing],
            _ => &[LinkTag::Communication, LinkTag::Sensing],
        };
        for &link in links {
            let per_link = if links.len() == 2 { 6 } else { 12 };
            for _ in 0..per_link {
                let a = aod + rng.gen_range(-2.0..2.0);
                let d = delay + rng.gen_range(-5.0..5.0);
                let amp = rng.gen_range(0.8..1.2);
                let m = mpc(link, a, d, amp);
                match link {
                    LinkTag::Communication => comm.push(m),
                    LinkTag::Sensing => sens.push(m),
                }
            }
        }
    }
    ChannelPair {
        comm_mpcs: comm,
        sensing_mpcs: sens,
        cluster_truth: None,
        counts: ClusterCounts { n0: 3, n1: 1, n2: 1 },
    }
}

fn blob_of(aod: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (b, &(center, _)) in BLOBS.iter().enumerate() {
        let mut d = (aod - center).abs() % 360.0;
        if d > 180.0 {
            d = 360.0 - d;
        }
        if d < best_d {
            best_d = d;
            best = b;
        }
    }
    best
}

/// Best one-to-one matching between truth blobs and recovered clusters,
/// maximized over all injective maps of the smaller side.
fn matched_correct(confusion: &[Vec<usize>]) -> usize {
    let t = confusion.len();
    let k = confusion[0].len();
    fn rec(m: &[Vec<usize>], row: usize, used: &mut Vec<bool>, transpose: bool) -> usize {
        let rows = if transpose { m[0].len() } else { m.len() };
        if row == rows {
            return 0;
        }
        let cols = used.len();
        let mut best = rec(m, row + 1, used, transpose); // leave this row unmatched
        for c in 0..cols {
            if used[c] {
                continue;
            }
            used[c] = true;
            let hit = if transpose { m[c][row] } else { m[row][c] };
            best = best.max(hit + rec(m, row + 1, used, transpose));
            used[c] = false;
        }
        best
    }
    if t <= k {
        rec(confusion, 0, &mut vec![false; k], false)
    } else {
        rec(confusion, 0, &mut vec![false; t], true)
    }
}

#[test]
fn planted_clusters_are_recovered() {
    let start = Instant::now();
    let cfg = KpmJcaConfig {
        k_min: 2,
        k_max: 8,
        ..KpmJcaConfig::default()
    };
    let seeds = 50;
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut k_hits = 0usize;
    let mut shared_hits = 0usize;
    for s in 0..seeds {
        let pair = planted_pair(1000 + s);
        let mut c = cfg.clone();
        c.seed = s;
        let outcome = run_kpm_jca(std::slice::from_ref(&pair), &c).unwrap();
        let snap = &outcome.snapshots[0];
        let joint = prepare_joint(&pair, &c).unwrap();

        if outcome.selected_k == 5 {
            k_hits += 1;
        }
        if snap.counts.n0 == 3 {
            shared_hits += 1;
        }
        let mut confusion = vec![vec![0usize; outcome.selected_k]; 5];
        for (i, m) in joint.mpcs.iter().enumerate() {
            confusion[blob_of(m.aod_deg)][snap.partition.assignment[i]] += 1;
        }
        correct += matched_correct(&confusion);
        total += joint.mpcs.len();
    }
    let accuracy = correct as f64 / total as f64;
    assert!(
        accuracy >= 0.95,
        "matched label accuracy {accuracy} below 0.95"
    );
    assert!(
        k_hits * 10 >= seeds as usize * 9,
        "selected k = 5 in only {k_hits}/{seeds} seeds"
    );
    assert!(
        shared_hits * 10 >= seeds as usize * 9,
        "3 shared clusters in only {shared_hits}/{seeds} seeds"
    );
    assert!(
        start.elapsed() < Duration::from_secs(30),
        "oracle exceeded its 30 s budget: {:?}",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Brute-force equivalence on small instances.

fn exhaustive_optimum(joint: &JointMpcSet, k: usize, params: &McdParams) -> f64 {
    let n = joint.len();
    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; n];
    'outer: loop {
        // skip assignments that leave a cluster empty
        let mut seen = vec![false; k];
        for &a in &assignment {
            seen[a] = true;
        }
        if seen.iter().all(|&s| s) {
            let mut cost = 0.0;
            for c in 0..k {
                // same definition as the clustering update: power-weighted
                // circular mean angle and weighted mean delay
                let (mut sx, mut sy, mut sd, mut sw) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..n {
                    if assignment[i] != c {
                        continue;
                    }
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
                let delay = if sw > 0.0 { sd / sw } else { 0.0 };
                for i in 0..n {
                    if assignment[i] == c {
                        cost += joint.powers[i]
                            * mcd_coords(
                                joint.mpcs[i].aod_deg,
                                joint.mpcs[i].delay_ns,
                                aod,
                                delay,
                                params,
                            );
                    }
                }
            }
            best = best.min(cost);
        }
        // next assignment in base-k counting order
        for i in 0..n {
            assignment[i] += 1;
            if assignment[i] < k {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }
    best
}

#[test]
fn restarts_match_exhaustive_partition_search() {
    let start = Instant::now();
    for instance in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + instance);
        let n = rng.gen_range(4..=8usize);
        let k = rng.gen_range(2..=3.min(n - 1));
        let mpcs: Vec<Mpc> = (0..n)
            .map(|_| {
                mpc(
                    LinkTag::Communication,
                    rng.gen_range(0.0..360.0),
                    rng.gen_range(0.0..300.0),
                    rng.gen_range(0.5..1.5),
                )
            })
            .collect();
        let powers: Vec<f64> = mpcs.iter().map(|m| m.power(true)).collect();
        let joint = JointMpcSet {
            mpcs,
            gamma: 1.0,
            powers: powers.clone(),
            raw_powers: powers,
        };
        let params = McdParams::from_mpcs(&joint.mpcs, DEFAULT_ZETA);
        let found = kpowermeans_best_of(&joint, k, &params, instance, &[], 10, 100).unwrap();
        let optimum = exhaustive_optimum(&joint, k, &params);
        assert!(
            (found.cost - optimum).abs() <= 1e-9,
            "instance {instance}: restart cost {} vs exhaustive optimum {optimum}",
            found.cost
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(30),
        "equivalence check exceeded its 30 s budget: {:?}",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Spread formulas: hand cases and invariances.

#[test]
fn spread_formula_hand_cases() {
    let (mean, rms) = rms_delay_spread(&[7.0], &[1.0]).unwrap();
    assert!(mean == 7.0 && rms == 0.0, "single path must give zero spread");

    let (mean, rms) = rms_delay_spread(&[0.0, 10.0], &[1.0, 1.0]).unwrap();
    assert!((mean - 5.0).abs() <= 1e-12, "mean delay: {mean}");
    assert!((rms - 5.0).abs() <= 1e-12, "rms delay spread: {rms}");

    // circular spread is invariant under rotation of all angles
    let angles = [12.0, 75.0, 133.0, 260.0, 341.0];
    let powers = [0.4, 1.1, 0.2, 0.8, 0.6];
    let base = rms_angle_spread(&angles, &powers).unwrap();
    for shift in [37.3, 120.0, 275.9] {
        let rotated: Vec<f64> = angles.iter().map(|a| (a + shift) % 360.0).collect();
        let spread = rms_angle_spread(&rotated, &powers).unwrap();
        assert!(
            (spread - base).abs() <= 1e-9,
            "rotation by {shift} changed the spread: {base} -> {spread}"
        );
    }

    // the wrap-around pair straddling 0 deg
    let spread = rms_angle_spread(&[350.0, 10.0], &[1.0, 1.0]).unwrap();
    assert!((spread - 10.0).abs() <= 1e-9, "wrap case spread: {spread}");
}

// ---------------------------------------------------------------------------
// Regenerated spread tables.

#[test]
fn regenerated_cluster_tables_match_fits() {
    let start = Instant::now();

    // Shared-cluster intra spreads: pool sub-cluster spreads of 500 shared
    // clusters and compare the mean log10 values against the fitted means.
    let mut log_ds = Vec::new();
    let mut log_as = Vec::new();
    let mut cfg = ScenarioConfig::default();
    let mut t = 0u64;
    while log_ds.len() < 500 {
        cfg.seed = 9_000 + t;
        t += 1;
        let (pair, _) = generate_channel_pair(&cfg).unwrap();
        for p in pooled_shared_intra(&pair).unwrap() {
            if log_ds.len() < 500 && p.ds_ns > 0.0 && p.as_deg > 0.0 {
                log_ds.push(p.ds_ns.log10());
                log_as.push(p.as_deg.log10());
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_ds = mean(&log_ds);
    let mean_as = mean(&log_as);
    assert!(
        (mean_ds - 1.07).abs() <= 0.05,
        "mean log10 intra DS {mean_ds}, want 1.07 +/- 0.05"
    );
    assert!(
        (mean_as - 0.85).abs() <= 0.05,
        "mean log10 intra AS {mean_as}, want 0.85 +/- 0.05"
    );

    // Inter-cluster angle spreads over 200 realizations per link profile.
    let mut sens_as = Vec::new();
    let mut cfg = ScenarioConfig::default();
    for t in 0..200 {
        cfg.seed = 20_000 + t;
        let (pair, _) = generate_channel_pair(&cfg).unwrap();
        let report = spread_report(&truth_clusters(&pair).unwrap()).unwrap();
        sens_as.push(report.inter_sens.unwrap().1);
    }
    let mean_sens = mean(&sens_as);
    assert!(
        (mean_sens - 91.29).abs() <= 0.1 * 91.29,
        "mean sensing inter-cluster AS {mean_sens}, want 91.29 +/- 10%"
    );

    // The communication profile is only visible without shared clusters
    // (shared sub-clusters copy the sensing departure angles).
    let mut comm_as = Vec::new();
    let mut cfg = ScenarioConfig::default();
    cfg.n0 = 0;
    cfg.n1 = 10;
    cfg.n2 = 15;
    for t in 0..200 {
        cfg.seed = 30_000 + t;
        let (pair, _) = generate_channel_pair(&cfg).unwrap();
        let report = spread_report(&truth_clusters(&pair).unwrap()).unwrap();
        comm_as.push(report.inter_comm.unwrap().1);
    }
    let mean_comm = mean(&comm_as);
    assert!(
        (mean_comm - 38.66).abs() <= 0.1 * 38.66,
        "mean communication inter-cluster AS {mean_comm}, want 38.66 +/- 10%"
    );

    assert!(
        start.elapsed() < Duration::from_secs(60),
        "table regeneration exceeded its 60 s budget: {:?}",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Conservation and determinism.

#[test]
fn power_conservation_and_bitwise_reruns() {
    let cfg = ScenarioConfig::default();
    let (pair, _) = generate_channel_pair(&cfg).unwrap();

    // per-link normalization to unit total power
    for mpcs in [&pair.comm_mpcs, &pair.sensing_mpcs] {
        let total: f64 = mpcs.iter().map(|m| m.power(true)).sum();
        assert!(
            (total - 1.0).abs() <= 1e-9,
            "link power not normalized: {total}"
        );
    }

    // PADP binning conserves power
    for mpcs in [&pair.comm_mpcs, &pair.sensing_mpcs] {
        let total: f64 = mpcs.iter().map(|m| m.power(true)).sum();
        let padp = padp_from_mpcs(mpcs, 5.0, 10.0).unwrap();
        assert!(
            (padp.total_power() - total).abs() <= 1e-9 * total,
            "PADP lost power: {} vs {total}",
            padp.total_power()
        );
    }

    // identical (config, seed) reruns of the CLI are bit-identical,
    // manifests included
    let bin = env!("CARGO_BIN_EXE_jcas");
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["generate", "--seed", "42", "--out"])
            .arg(&out)
            .env("SOURCE_DATE_EPOCH", "1700000000")
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(out.with_extension("manifest.json")).unwrap(),
        )
    };
    let (csv_a, manifest_a) = run("a.csv");
    let (csv_b, manifest_b) = run("b.csv");
    assert_eq!(csv_a, csv_b, "MPC tables differ between identical reruns");
    assert_eq!(
        String::from_utf8(manifest_a).unwrap().replace("a.csv", ""),
        String::from_utf8(manifest_b).unwrap().replace("b.csv", ""),
        "manifests differ between identical reruns"
    );
}

// ---------------------------------------------------------------------------
// Sharing-degree unit anchors.

fn labeled_sensing_pair(shared: usize, other: usize) -> ChannelPair {
    // powers of 0.0625 are exact in binary, so the ratio is exact
    let mut mpcs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..shared + other {
        mpcs.push(mpc(LinkTag::Sensing, 10.0 + i as f64, 50.0 + i as f64, 0.25));
        labels.push(if i < shared {
            TruthLabel { cluster_id: 0, kind: ClusterKind::Shared }
        } else {
            TruthLabel { cluster_id: 1, kind: ClusterKind::SensingOnly }
        });
    }
    ChannelPair {
        comm_mpcs: Vec::new(),
        sensing_mpcs: mpcs,
        cluster_truth: Some(TruthLabels { comm: Vec::new(), sensing: labels }),
        counts: ClusterCounts {
            n0: usize::from(shared > 0),
            n1: 0,
            n2: usize::from(other > 0),
        },
    }
}

#[test]
fn sharing_degree_unit_anchors() {
    let sd = |pair: &ChannelPair| {
        sharing_degree_from_truth(pair, LinkTag::Sensing, SdMode::Incoherent).unwrap()
    };
    assert_eq!(sd(&labeled_sensing_pair(20, 0)), 1.0, "all shared");
    assert_eq!(sd(&labeled_sensing_pair(0, 20)), 0.0, "none shared");
    // 13 of 20 equal-power paths shared: exactly 0.65
    assert_eq!(sd(&labeled_sensing_pair(13, 7)), 0.65, "0.65 power split");
}

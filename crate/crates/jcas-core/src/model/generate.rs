//! Stochastic generation of shared and non-shared clusters.
//!
//! The generation recipe per cluster set:
//! - centroid delays from an exponential profile, multiplicatively rescaled
//!   until the realized power-weighted inter-cluster DS hits the target;
//! - per-cluster powers from exponential decay in delay with lognormal
//!   shadowing;
//! - centroid AODs around the scenario reference angle, deviations rescaled
//!   until the realized wrap-aware inter-cluster AS hits the target;
//! - intra-cluster MPCs: rounded-normal path count (min 1), exponential delay
//!   offsets and Laplacian angle offsets, each rescaled so the realized
//!   power-weighted intra spread equals the drawn spread exactly.
//!
//! Sensing MPCs additionally carry a lognormal RCS coefficient which is folded
//! into the weights before rescaling, so measured spreads (RCS included) match
//! the drawn values.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{IntraFits, ScenarioConfig, SharedDelayMode};
use crate::error::{Error, Result};
use crate::stats::{circular_mean_deg, rms_angle_spread, rms_delay_spread};
use crate::types::{normalize_angle, ClusterKind, LinkTag, Mpc};

use super::localize_point;

/// Resolved per-cluster parameter draws.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterDraw {
    pub centroid_aod_deg: f64,
    pub centroid_delay_ns: f64,
    /// Cluster power; normalized to a unit per-link total at synthesis.
    pub power: f64,
    pub path_count: usize,
    pub intra_ds_ns: f64,
    pub intra_as_deg: f64,
}

/// One generated cluster with its MPC population.
#[derive(Debug, Clone)]
pub struct GeneratedCluster {
    pub id: usize,
    pub kind: ClusterKind,
    pub link: LinkTag,
    pub draw: ClusterDraw,
    pub mpcs: Vec<Mpc>,
    /// For shared communication sub-clusters: id of the sensing twin.
    pub shared_id: Option<usize>,
}

/// Resolved per-run draws for both links, with per-link normalized powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationTables {
    pub sensing: Vec<ClusterDraw>,
    pub comm: Vec<ClusterDraw>,
}

fn signed_wrap_diff(a: f64, b: f64) -> f64 {
    // shortest signed angular difference a - b, in [-180, 180)
    let mut d = (a - b).rem_euclid(360.0);
    if d >= 180.0 {
        d -= 360.0;
    }
    d
}

/// Draws `count` centroid delays and cluster powers so that the realized
/// power-weighted rms DS matches `target_ds` (multiplicative rescaling with
/// powers recomputed from the decay profile each round).
fn draw_centroid_delays<R: Rng>(
    rng: &mut R,
    count: usize,
    target_ds: f64,
    cfg: &ScenarioConfig,
) -> (Vec<f64>, Vec<f64>) {
    let exp = Exp::new(1.0 / target_ds).expect("target_ds > 0");
    let mut delays: Vec<f64> = (0..count).map(|_| exp.sample(rng)).collect();
    let shadow_std = cfg.shadow_std_db;
    let shadows: Vec<f64> = (0..count)
        .map(|_| {
            let z: f64 = if shadow_std > 0.0 {
                Normal::new(0.0, shadow_std).unwrap().sample(rng)
            } else {
                0.0
            };
            10f64.powf(-z / 10.0)
        })
        .collect();
    let decay = (cfg.r_tau - 1.0) / (cfg.r_tau * target_ds);
    let powers_of = |delays: &[f64]| -> Vec<f64> {
        delays
            .iter()
            .zip(&shadows)
            .map(|(&t, &s)| (-t * decay).exp() * s)
            .collect()
    };
    let mut powers = powers_of(&delays);
    if count >= 2 {
        // `rms_delay_spread` yields (mean, std); keep only the std
        let spread = |d: &[f64], p: &[f64]| rms_delay_spread(d, p).ok().map(|(_, s)| s);
        let mut realized = match spread(&delays, &powers) {
            Some(s) if s > 0.0 => s,
            _ => return (delays, powers),
        };
        for _ in 0..32 {
            if (realized / target_ds - 1.0).abs() < 0.01 {
                break;
            }
            // damp each step; outliers can otherwise run the scale away
            let scale = (target_ds / realized).clamp(0.5, 1.5);
            let cand: Vec<f64> = delays.iter().map(|d| d * scale).collect();
            let cand_powers = powers_of(&cand);
            let Some(new_realized) = spread(&cand, &cand_powers) else {
                break;
            };
            // accept only improving steps so the loop cannot diverge
            if (new_realized / target_ds - 1.0).abs() >= (realized / target_ds - 1.0).abs() {
                break;
            }
            delays = cand;
            powers = cand_powers;
            realized = new_realized;
        }
    }
    (delays, powers)
}

/// Draws `count` centroid AODs around the reference angle, iteratively
/// rescaling deviations about the circular mean until the realized wrap-aware
/// power-weighted AS is within 1% of `target_as`.
fn draw_centroid_aods<R: Rng>(
    rng: &mut R,
    count: usize,
    reference_deg: f64,
    target_as: f64,
    powers: &[f64],
) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut angles: Vec<f64> = (0..count)
        .map(|_| {
            normalize_angle(reference_deg + normal.sample(rng) * target_as)
                .expect("finite angle draw")
        })
        .collect();
    if count < 2 {
        return angles;
    }
    for _ in 0..64 {
        let realized = rms_angle_spread(&angles, powers).expect("positive powers");
        if realized <= 0.0 {
            break;
        }
        let scale = target_as / realized;
        if (scale - 1.0).abs() < 0.01 {
            break;
        }
        // damp upscaling; wrapped deviations shrink again past +-180
        let scale = scale.min(1.5);
        let mean = circular_mean_deg(&angles, powers).expect("positive powers");
        for a in &mut angles {
            let dev = signed_wrap_diff(*a, mean);
            *a = normalize_angle(mean + dev * scale).expect("finite");
        }
    }
    angles
}

fn draw_path_count<R: Rng>(rng: &mut R, fits: &IntraFits, sigma_is_variance: bool) -> usize {
    let std = fits.path_count.std(sigma_is_variance);
    let v = if std > 0.0 {
        Normal::new(fits.path_count.mu, std).unwrap().sample(rng)
    } else {
        fits.path_count.mu
    };
    (v.round() as i64).max(1) as usize
}

fn draw_log10<R: Rng>(rng: &mut R, mu: f64, std: f64) -> f64 {
    let x = if std > 0.0 {
        Normal::new(mu, std).unwrap().sample(rng)
    } else {
        mu
    };
    10f64.powf(x)
}

fn draw_rcs<R: Rng>(rng: &mut R, cfg: &ScenarioConfig) -> f64 {
    let db = if cfg.rcs_std_db > 0.0 {
        Normal::new(cfg.rcs_median_db, cfg.rcs_std_db)
            .unwrap()
            .sample(rng)
    } else {
        cfg.rcs_median_db
    };
    // power fading in dB; the coefficient multiplies the amplitude
    10f64.powf(db / 20.0)
}

/// Populates one cluster with MPCs hitting the drawn intra DS/AS exactly.
fn populate_cluster<R: Rng>(
    rng: &mut R,
    link: LinkTag,
    draw: &ClusterDraw,
    cfg: &ScenarioConfig,
) -> Vec<Mpc> {
    let n = draw.path_count;
    let decay = (cfg.r_tau - 1.0) / (cfg.r_tau * draw.intra_ds_ns.max(1e-9));
    let exp = Exp::new(1.0 / draw.intra_ds_ns.max(1e-9)).unwrap();
    let delay_offsets: Vec<f64> = (0..n).map(|_| exp.sample(rng)).collect();
    let base_powers: Vec<f64> = delay_offsets.iter().map(|&o| (-o * decay).exp()).collect();

    // Laplacian angle offsets, scale parameter b = sigma / sqrt(2).
    let b = draw.intra_as_deg / std::f64::consts::SQRT_2;
    let angle_offsets: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(-0.5..0.5);
            -b * u.signum() * (1.0 - 2.0 * u.abs()).max(1e-300).ln()
        })
        .collect();

    let rcs: Option<Vec<f64>> = match link {
        LinkTag::Sensing => Some((0..n).map(|_| draw_rcs(rng, cfg)).collect()),
        LinkTag::Communication => None,
    };

    // Weights as observed downstream: RCS folded in for sensing.
    let weights: Vec<f64> = match &rcs {
        Some(r) => base_powers
            .iter()
            .zip(r)
            .map(|(&p, &s)| p * s * s)
            .collect(),
        None => base_powers.clone(),
    };
    let wsum: f64 = weights.iter().sum();

    // Rescale delay offsets so the realized weighted rms equals the draw.
    let delays: Vec<f64> = if n >= 2 {
        let (_, realized) = rms_delay_spread(&delay_offsets, &weights).expect("positive weights");
        let s = if realized > 0.0 {
            draw.intra_ds_ns / realized
        } else {
            1.0
        };
        delay_offsets
            .iter()
            .map(|&o| draw.centroid_delay_ns + s * o)
            .collect()
    } else {
        vec![draw.centroid_delay_ns]
    };

    // Center angle offsets to zero weighted mean, then rescale exactly.
    let angles: Vec<f64> = if n >= 2 {
        let wmean: f64 = angle_offsets
            .iter()
            .zip(&weights)
            .map(|(&o, &w)| o * w)
            .sum::<f64>()
            / wsum;
        let centered: Vec<f64> = angle_offsets.iter().map(|&o| o - wmean).collect();
        let rms = (centered
            .iter()
            .zip(&weights)
            .map(|(&o, &w)| o * o * w)
            .sum::<f64>()
            / wsum)
            .sqrt();
        let s = if rms > 0.0 {
            draw.intra_as_deg / rms
        } else {
            1.0
        };
        centered
            .iter()
            .map(|&o| draw.centroid_aod_deg + s * o)
            .collect()
    } else {
        vec![draw.centroid_aod_deg]
    };

    // Per-MPC |a|^2 shares the cluster power; RCS sits outside the amplitude.
    let psum: f64 = base_powers.iter().sum();
    (0..n)
        .map(|m| {
            let q = base_powers[m] / psum * draw.power;
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            Mpc::new(
                link,
                angles[m],
                None,
                delays[m].max(0.0),
                Complex64::from_polar(q.sqrt(), phase),
                rcs.as_ref().map(|r| r[m]),
            )
            .expect("generated MPC is valid")
        })
        .collect()
}

fn generate_cluster_set<R: Rng>(
    rng: &mut R,
    count: usize,
    first_id: usize,
    link: LinkTag,
    kind: ClusterKind,
    target_as: f64,
    target_ds: f64,
    fits: &IntraFits,
    cfg: &ScenarioConfig,
) -> Vec<GeneratedCluster> {
    let (delays, powers) = draw_centroid_delays(rng, count, target_ds, cfg);
    let angles = draw_centroid_aods(rng, count, cfg.reference_aod_deg, target_as, &powers);
    (0..count)
        .map(|i| {
            let draw = ClusterDraw {
                centroid_aod_deg: angles[i],
                centroid_delay_ns: delays[i],
                power: powers[i],
                path_count: draw_path_count(rng, fits, cfg.sigma_is_variance),
                intra_ds_ns: draw_log10(
                    rng,
                    fits.log10_ds_ns.mu,
                    fits.log10_ds_ns.std(cfg.sigma_is_variance),
                ),
                intra_as_deg: draw_log10(
                    rng,
                    fits.log10_as_deg.mu,
                    fits.log10_as_deg.std(cfg.sigma_is_variance),
                ),
            };
            let mpcs = populate_cluster(rng, link, &draw, cfg);
            GeneratedCluster {
                id: first_id + i,
                kind,
                link,
                draw,
                mpcs,
                shared_id: None,
            }
        })
        .collect()
}

/// Step 1: generates the `n0 + n2` sensing clusters.
///
/// All clusters start as `SensingOnly`; [`derive_shared_comm_subclusters`]
/// later flips the selected ones to `Shared`.
pub fn generate_sensing_clusters<R: Rng>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<GeneratedCluster>> {
    cfg.validate()?;
    let n_s = cfg.n0 + cfg.n2;
    if n_s == 0 {
        return Err(Error::EmptyChannel(
            "n0 + n2 = 0: no sensing clusters to generate".into(),
        ));
    }
    Ok(generate_cluster_set(
        rng,
        n_s,
        0,
        LinkTag::Sensing,
        ClusterKind::SensingOnly,
        cfg.inter_as_sens_deg,
        cfg.inter_ds_sens_ns,
        &cfg.intra_sens,
        cfg,
    ))
}

/// Step 2: selects `n0` sensing clusters uniformly at random (without
/// replacement), copies their centroid AODs exactly, and draws the rest of
/// each communication sub-cluster from the communication fits. Marks both
/// sides `Shared` under the sensing cluster's id.
pub fn derive_shared_comm_subclusters<R: Rng>(
    sensing: &mut [GeneratedCluster],
    n0: usize,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<GeneratedCluster>> {
    if n0 > sensing.len() {
        return Err(Error::Parameter(format!(
            "n0 = {} exceeds the {} sensing clusters",
            n0,
            sensing.len()
        )));
    }
    // partial Fisher-Yates over index list
    let mut idx: Vec<usize> = (0..sensing.len()).collect();
    for i in 0..n0 {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    let selected = &idx[..n0];

    // Centroid delays per shared-delay mode.
    let mut delays: Vec<f64>;
    let shadows: Vec<f64> = (0..n0)
        .map(|_| {
            let z: f64 = if cfg.shadow_std_db > 0.0 {
                Normal::new(0.0, cfg.shadow_std_db).unwrap().sample(rng)
            } else {
                0.0
            };
            10f64.powf(-z / 10.0)
        })
        .collect();
    match cfg.shared_delay_mode {
        SharedDelayMode::Independent => {
            let exp = Exp::new(1.0 / cfg.inter_ds_comm_ns).unwrap();
            delays = (0..n0).map(|_| exp.sample(rng)).collect();
            let decay = (cfg.r_tau - 1.0) / (cfg.r_tau * cfg.inter_ds_comm_ns);
            if n0 >= 2 {
                let target = cfg.inter_ds_comm_ns;
                let powers_of = |d: &[f64]| -> Vec<f64> {
                    d.iter()
                        .zip(&shadows)
                        .map(|(&t, &s)| (-t * decay).exp() * s)
                        .collect()
                };
                let spread =
                    |d: &[f64], p: &[f64]| rms_delay_spread(d, p).ok().map(|(_, s)| s);
                if let Some(mut realized) = spread(&delays, &powers_of(&delays)) {
                    for _ in 0..32 {
                        if realized <= 0.0 || (realized / target - 1.0).abs() < 0.01 {
                            break;
                        }
                        // damped, improving-only steps; see draw_centroid_delays
                        let scale = (target / realized).clamp(0.5, 1.5);
                        let cand: Vec<f64> = delays.iter().map(|d| d * scale).collect();
                        let Some(new_realized) = spread(&cand, &powers_of(&cand)) else {
                            break;
                        };
                        if (new_realized / target - 1.0).abs()
                            >= (realized / target - 1.0).abs()
                        {
                            break;
                        }
                        delays = cand;
                        realized = new_realized;
                    }
                }
            }
        }
        SharedDelayMode::Geometric => {
            delays = selected
                .iter()
                .map(|&si| {
                    let s = &sensing[si];
                    let p = localize_point(
                        cfg.tx_position_m,
                        s.draw.centroid_aod_deg,
                        s.draw.centroid_delay_ns,
                        cfg.wave_speed_m_per_ns,
                    );
                    let d_tx = ((p[0] - cfg.tx_position_m[0]).powi(2)
                        + (p[1] - cfg.tx_position_m[1]).powi(2))
                    .sqrt();
                    let d_rx = ((p[0] - cfg.rx_position_m[0]).powi(2)
                        + (p[1] - cfg.rx_position_m[1]).powi(2))
                    .sqrt();
                    (d_tx + d_rx) / cfg.wave_speed_m_per_ns
                })
                .collect();
        }
    }

    let decay = (cfg.r_tau - 1.0) / (cfg.r_tau * cfg.inter_ds_comm_ns);
    let mut out = Vec::with_capacity(n0);
    for (k, &si) in selected.iter().enumerate() {
        let twin = &mut sensing[si];
        twin.kind = ClusterKind::Shared;
        twin.shared_id = Some(twin.id);
        let draw = ClusterDraw {
            // exact centroid AOD multiplexing
            centroid_aod_deg: twin.draw.centroid_aod_deg,
            centroid_delay_ns: delays[k],
            power: (-delays[k] * decay).exp() * shadows[k],
            path_count: draw_path_count(rng, &cfg.intra_comm, cfg.sigma_is_variance),
            intra_ds_ns: draw_log10(
                rng,
                cfg.intra_comm.log10_ds_ns.mu,
                cfg.intra_comm.log10_ds_ns.std(cfg.sigma_is_variance),
            ),
            intra_as_deg: draw_log10(
                rng,
                cfg.intra_comm.log10_as_deg.mu,
                cfg.intra_comm.log10_as_deg.std(cfg.sigma_is_variance),
            ),
        };
        let mpcs = populate_cluster(rng, LinkTag::Communication, &draw, cfg);
        out.push(GeneratedCluster {
            id: twin.id,
            kind: ClusterKind::Shared,
            link: LinkTag::Communication,
            draw,
            mpcs,
            shared_id: Some(twin.id),
        });
    }
    Ok(out)
}

/// Step 3: generates the `n1` non-shared communication clusters, plus the
/// optional deterministic LOS cluster.
pub fn generate_nonshared_comm_clusters<R: Rng>(
    cfg: &ScenarioConfig,
    n1: usize,
    rng: &mut R,
    first_id: usize,
) -> Result<Vec<GeneratedCluster>> {
    cfg.validate()?;
    let mut out = generate_cluster_set(
        rng,
        n1,
        first_id,
        LinkTag::Communication,
        ClusterKind::CommOnly,
        cfg.inter_as_comm_deg,
        cfg.inter_ds_comm_ns,
        &cfg.intra_comm,
        cfg,
    );
    if cfg.los.enabled {
        let dx = cfg.rx_position_m[0] - cfg.tx_position_m[0];
        let dy = cfg.rx_position_m[1] - cfg.tx_position_m[1];
        let delay = (dx * dx + dy * dy).sqrt() / cfg.wave_speed_m_per_ns;
        let decay = (cfg.r_tau - 1.0) / (cfg.r_tau * cfg.inter_ds_comm_ns);
        let draw = ClusterDraw {
            centroid_aod_deg: normalize_angle(cfg.los.angle_deg)?,
            centroid_delay_ns: delay,
            power: (-delay * decay).exp(),
            path_count: 1,
            intra_ds_ns: 0.0,
            intra_as_deg: 0.0,
        };
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let mpc = Mpc::new(
            LinkTag::Communication,
            draw.centroid_aod_deg,
            None,
            draw.centroid_delay_ns,
            Complex64::from_polar(draw.power.sqrt(), phase),
            None,
        )?;
        out.push(GeneratedCluster {
            id: first_id + n1,
            kind: ClusterKind::CommOnly,
            link: LinkTag::Communication,
            draw,
            mpcs: vec![mpc],
            shared_id: None,
        });
    }
    Ok(out)
}

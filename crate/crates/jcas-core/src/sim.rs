//! Desk-scale simulation studies: sensing sharing-degree CDFs and
//! centroid-AOD convergence as functions of the shared-cluster count, plus an
//! end-to-end generate-then-recover loop.
//!
//! Trials run in parallel; the `JCAS_MAX_WORKERS` environment variable caps
//! the worker count. Per-trial substreams are counter-based, so changing the
//! trial count never reshuffles earlier trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{run_kpm_jca, KpmJcaConfig};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::model::{generate_channel_pair_tagged, sharing_degree_from_truth};
use crate::stats::{empirical_cdf, fit_normal};
use crate::types::{ClusterCounts, LinkTag};

pub const WORKER_ENV: &str = "JCAS_MAX_WORKERS";

// substream tags separating the studies
const TAG_SD_STUDY: u64 = 1;
const TAG_AOD_STUDY: u64 = 2;
const TAG_END_TO_END: u64 = 3;

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKER_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Parameter(format!("{WORKER_ENV} must be a positive integer, got {v:?}"))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Sensing-link sharing degree at one swept `n0`. The total cluster count is
/// held fixed: `n0` trades against `n2` while `n1` keeps its base value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdSweepPoint {
    pub n0: usize,
    pub trials: usize,
    /// Per-trial sensing sharing degrees, sorted ascending.
    pub samples: Vec<f64>,
    /// Empirical CDF over the samples.
    pub cdf: Vec<(f64, f64)>,
    /// Normal fit (mean, population std) of the samples.
    pub mu: f64,
    pub sigma: f64,
}

pub fn run_sd_sweep(
    base: &ScenarioConfig,
    n0_values: &[usize],
    trials: usize,
) -> Result<Vec<SdSweepPoint>> {
    base.validate()?;
    if n0_values.is_empty() || trials == 0 {
        return Err(Error::Parameter(
            "need at least one n0 value and one trial".into(),
        ));
    }
    let total = base.n0 + base.n1 + base.n2;
    let pool = thread_pool()?;
    let mut points = Vec::new();
    for &n0 in n0_values {
        if n0 + base.n1 > total {
            return Err(Error::Parameter(format!(
                "n0 = {n0} exceeds the {total}-cluster budget with n1 = {}",
                base.n1
            )));
        }
        let mut cfg = base.clone();
        cfg.n0 = n0;
        cfg.n2 = total - n0 - base.n1;
        let mut samples: Vec<f64> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let (pair, _) =
                        generate_channel_pair_tagged(&cfg, &[TAG_SD_STUDY, t as u64])?;
                    sharing_degree_from_truth(&pair, LinkTag::Sensing, cfg.sd_mode)
                })
                .collect::<Result<_>>()
        })?;
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = empirical_cdf(&samples)?;
        let (mu, sigma) = if trials >= 2 {
            fit_normal(&samples)?
        } else {
            (samples[0], 0.0)
        };
        points.push(SdSweepPoint {
            n0,
            trials,
            samples,
            cdf,
            mu,
            sigma,
        });
    }
    Ok(points)
}

/// Pooled cluster-centroid AOD distributions per link at one swept `n0`.
///
/// Link cluster budgets stay fixed (`n1` and `n2` shrink as `n0` grows), and
/// trial substreams are shared across sweep points, so the sensing link is
/// identical trial-for-trial and only the communication link responds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AodSweepPoint {
    pub n0: usize,
    pub trials: usize,
    pub bin_deg: f64,
    /// Pooled communication centroid AODs across trials, sorted ascending.
    pub comm_aods: Vec<f64>,
    /// Pooled sensing centroid AODs across trials, sorted ascending.
    pub sens_aods: Vec<f64>,
    /// Histogram PDF (bin center, density) per link over `[0, 360)`.
    pub comm_pdf: Vec<(f64, f64)>,
    pub sens_pdf: Vec<(f64, f64)>,
    /// Total-variation distance between the two binned distributions.
    pub tv_distance: f64,
}

pub fn run_aod_sweep(
    base: &ScenarioConfig,
    n0_values: &[usize],
    trials: usize,
    bin_deg: f64,
) -> Result<Vec<AodSweepPoint>> {
    base.validate()?;
    if n0_values.is_empty() || trials == 0 {
        return Err(Error::Parameter(
            "need at least one n0 value and one trial".into(),
        ));
    }
    let bins = 360.0 / bin_deg;
    if !(bin_deg > 0.0) || (bins - bins.round()).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "bin_deg must divide 360 evenly, got {bin_deg}"
        )));
    }
    let bins = bins.round() as usize;
    let n_c = base.n0 + base.n1;
    let n_s = base.n0 + base.n2;
    let pool = thread_pool()?;
    let mut points = Vec::new();
    for &n0 in n0_values {
        if n0 > n_c.min(n_s) {
            return Err(Error::Parameter(format!(
                "n0 = {n0} exceeds the per-link budgets ({n_c} comm, {n_s} sensing)"
            )));
        }
        let mut cfg = base.clone();
        cfg.n0 = n0;
        cfg.n1 = n_c - n0;
        cfg.n2 = n_s - n0;
        let per_trial: Vec<(Vec<f64>, Vec<f64>)> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let (_, tables) =
                        generate_channel_pair_tagged(&cfg, &[TAG_AOD_STUDY, t as u64])?;
                    Ok((
                        tables.comm.iter().map(|c| c.centroid_aod_deg).collect(),
                        tables.sensing.iter().map(|c| c.centroid_aod_deg).collect(),
                    ))
                })
                .collect::<Result<_>>()
        })?;
        let mut comm_aods = Vec::new();
        let mut sens_aods = Vec::new();
        for (c, s) in per_trial {
            comm_aods.extend(c);
            sens_aods.extend(s);
        }
        comm_aods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sens_aods.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mass_of = |aods: &[f64]| -> Result<Vec<f64>> {
            if aods.is_empty() {
                return Err(Error::Undefined("no centroids pooled".into()));
            }
            let mut mass = vec![0.0; bins];
            for &a in aods {
                mass[(a / bin_deg) as usize % bins] += 1.0;
            }
            let total = aods.len() as f64;
            for m in &mut mass {
                *m /= total;
            }
            Ok(mass)
        };
        let comm_mass = mass_of(&comm_aods)?;
        let sens_mass = mass_of(&sens_aods)?;
        let tv_distance = 0.5
            * comm_mass
                .iter()
                .zip(&sens_mass)
                .map(|(c, s)| (c - s).abs())
                .sum::<f64>();
        let pdf_of = |mass: &[f64]| -> Vec<(f64, f64)> {
            mass.iter()
                .enumerate()
                .map(|(b, &m)| ((b as f64 + 0.5) * bin_deg, m / bin_deg))
                .collect()
        };
        points.push(AodSweepPoint {
            n0,
            trials,
            bin_deg,
            comm_pdf: pdf_of(&comm_mass),
            sens_pdf: pdf_of(&sens_mass),
            comm_aods,
            sens_aods,
            tv_distance,
        });
    }
    Ok(points)
}

/// One blind-recovery trial: generate a labeled pair, cluster it without the
/// labels, compare against the generation truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndToEndTrial {
    pub selected_k: usize,
    pub truth_n: usize,
    pub est_counts: ClusterCounts,
    pub truth_counts: ClusterCounts,
    pub est_sd_sens: f64,
    pub truth_sd_sens: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub trials: Vec<EndToEndTrial>,
    /// Median |selected k - true cluster count|.
    pub median_k_error: f64,
    /// Median |recovered sensing SD - truth sensing SD|.
    pub median_sd_error: f64,
}

pub fn run_end_to_end(
    cfg: &ScenarioConfig,
    jca: &KpmJcaConfig,
    trials: usize,
) -> Result<EndToEndReport> {
    cfg.validate()?;
    jca.validate()?;
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let pool = thread_pool()?;
    let results: Vec<EndToEndTrial> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let (pair, _) = generate_channel_pair_tagged(cfg, &[TAG_END_TO_END, t as u64])?;
                let truth_sd_sens =
                    sharing_degree_from_truth(&pair, LinkTag::Sensing, cfg.sd_mode)?;
                let truth_counts = pair.counts;
                let outcome = run_kpm_jca(std::slice::from_ref(&pair), jca)?;
                let snap = &outcome.snapshots[0];
                Ok(EndToEndTrial {
                    selected_k: outcome.selected_k,
                    truth_n: truth_counts.n(),
                    est_counts: snap.counts,
                    truth_counts,
                    est_sd_sens: snap
                        .sd_sens
                        .ok_or_else(|| Error::Undefined("sensing SD undefined".into()))?,
                    truth_sd_sens,
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut k_errors: Vec<f64> = results
        .iter()
        .map(|r| (r.selected_k as f64 - r.truth_n as f64).abs())
        .collect();
    let mut sd_errors: Vec<f64> = results
        .iter()
        .map(|r| (r.est_sd_sens - r.truth_sd_sens).abs())
        .collect();
    k_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sd_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(EndToEndReport {
        median_k_error: median(&k_errors),
        median_sd_error: median(&sd_errors),
        trials: results,
    })
}

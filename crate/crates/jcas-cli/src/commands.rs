//! Implementations of the four subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jcas_core::clustering::{prepare_joint, run_kpm_jca, GammaPolicy, KpmJcaConfig};
use jcas_core::config::ScenarioConfig;
use jcas_core::model::generate_channel_pair;
use jcas_core::sim::{run_aod_sweep, run_end_to_end, run_sd_sweep};
use jcas_core::stats::{spread_report, truth_clusters};
use jcas_core::types::{ClusterCounts, LinkTag};

use crate::error::{CliError, CliResult};
use crate::io::{atomic_write, mpc_csv_bytes, read_mpc_csv};
use crate::manifest::RunManifest;

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

fn parse_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Replaces `<name>.<ext>` with `<name>.manifest.json` (or appends when the
/// path has no extension).
fn manifest_sibling(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

// ---------------------------------------------------------------------------
// generate

pub fn cmd_generate(
    config_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<()> {
    let mut cfg: ScenarioConfig = match config_path {
        Some(p) => parse_json_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    println!(
        "note: (mu, sigma) fit entries interpreted with sigma as {}",
        if cfg.sigma_is_variance {
            "a variance"
        } else {
            "a standard deviation"
        }
    );

    let (pair, _tables) = generate_channel_pair(&cfg)?;
    atomic_write(out, &mpc_csv_bytes(&pair))?;

    let mut manifest = RunManifest::new("generate", cfg.seed, to_json(&cfg));
    if let Some(p) = config_path {
        manifest.add_input(p)?;
    }
    manifest.write(&manifest_sibling(out))?;
    println!(
        "wrote {} ({} comm + {} sensing MPCs)",
        out.display(),
        pair.comm_mpcs.len(),
        pair.sensing_mpcs.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster

pub struct ClusterFlags {
    pub k_range: Option<String>,
    pub p_th_db: Option<f64>,
    pub gamma: Option<String>,
    pub zeta: Option<f64>,
    pub restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub min_count: Option<usize>,
    pub allow_single_link: bool,
}

fn parse_k_range(text: &str) -> CliResult<(usize, usize)> {
    let err = || CliError::Usage(format!("bad --k-range `{text}`, expected `min:max`"));
    let (lo, hi) = text.split_once(':').ok_or_else(err)?;
    let lo = lo.trim().parse::<usize>().map_err(|_| err())?;
    let hi = hi.trim().parse::<usize>().map_err(|_| err())?;
    Ok((lo, hi))
}

fn parse_gamma(text: &str) -> CliResult<GammaPolicy> {
    match text {
        "equal-total" => Ok(GammaPolicy::EqualTotal),
        "equal-mean" => Ok(GammaPolicy::EqualMean),
        other => other.parse::<f64>().map(GammaPolicy::Manual).map_err(|_| {
            CliError::Usage(format!(
                "bad --gamma `{other}`, expected equal-total, equal-mean, or a number"
            ))
        }),
    }
}

/// Per-cluster line of the cluster summary.
#[derive(Debug, Serialize)]
struct ClusterSummaryRow {
    id: usize,
    kind: jcas_core::types::ClusterKind,
    members: usize,
    comm_members: usize,
    sensing_members: usize,
    centroid_aod_deg: f64,
    centroid_delay_ns: f64,
    mean_power: f64,
}

#[derive(Debug, Serialize)]
struct ClusterSummary {
    selected_k: usize,
    gamma: f64,
    counts: ClusterCounts,
    sd_comm: Option<f64>,
    sd_sens: Option<f64>,
    clusters: Vec<ClusterSummaryRow>,
}

pub fn cmd_cluster(
    input: &Path,
    config_path: Option<&Path>,
    seed: Option<u64>,
    flags: &ClusterFlags,
    out_dir: &Path,
) -> CliResult<()> {
    let mut cfg: KpmJcaConfig = match config_path {
        Some(p) => parse_json_config(p)?,
        None => KpmJcaConfig::default(),
    };
    if let Some(r) = &flags.k_range {
        (cfg.k_min, cfg.k_max) = parse_k_range(r)?;
    }
    if let Some(v) = flags.p_th_db {
        cfg.p_th_db = v;
    }
    if let Some(g) = &flags.gamma {
        cfg.gamma_policy = parse_gamma(g)?;
    }
    if let Some(v) = flags.zeta {
        cfg.zeta = v;
    }
    if let Some(v) = flags.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = flags.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = flags.min_count {
        cfg.min_count = v;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let pair = read_mpc_csv(input)?;
    let single_link = pair.comm_mpcs.is_empty() || pair.sensing_mpcs.is_empty();
    if single_link && !flags.allow_single_link {
        return Err(CliError::Usage(
            "input holds only one link; pass --allow-single-link (with a manual --gamma) \
             to cluster it anyway"
            .into(),
        ));
    }
    let n_mpcs = pair.comm_mpcs.len() + pair.sensing_mpcs.len();
    if cfg.k_max > n_mpcs {
        return Err(CliError::Usage(format!(
            "k_max {} exceeds the MPC count {n_mpcs}",
            cfg.k_max
        )));
    }

    let outcome = run_kpm_jca(std::slice::from_ref(&pair), &cfg)?;
    let snap = &outcome.snapshots[0];
    // Rebuild the joint set the pipeline clustered so assignment rows carry
    // the MPC coordinates (prepare_joint is deterministic).
    let joint = prepare_joint(&pair, &cfg)?;

    fs::create_dir_all(out_dir)?;
    let mut assignments = String::from("index,link,aod_deg,delay_ns,power,cluster,kind\n");
    for (i, m) in joint.mpcs.iter().enumerate() {
        let cluster = snap.partition.assignment[i];
        let kind = snap
            .clusters
            .iter()
            .find(|c| c.id == cluster)
            .map(|c| match c.kind {
                jcas_core::types::ClusterKind::Shared => "shared",
                jcas_core::types::ClusterKind::CommOnly => "comm_only",
                jcas_core::types::ClusterKind::SensingOnly => "sensing_only",
            })
            .unwrap_or("");
        let link = match m.link {
            LinkTag::Communication => "comm",
            LinkTag::Sensing => "sens",
        };
        assignments.push_str(&format!(
            "{i},{link},{},{},{},{cluster},{kind}\n",
            m.aod_deg, m.delay_ns, joint.raw_powers[i]
        ));
    }
    atomic_write(&out_dir.join("assignments.csv"), assignments.as_bytes())?;

    let mut scores = String::from("k,db,ch,score\n");
    for c in &outcome.candidates {
        scores.push_str(&format!("{},{},{},{}\n", c.k, c.db, c.ch, c.score));
    }
    atomic_write(&out_dir.join("scores.csv"), scores.as_bytes())?;

    let summary = ClusterSummary {
        selected_k: outcome.selected_k,
        gamma: outcome.gamma[0],
        counts: snap.counts,
        sd_comm: snap.sd_comm,
        sd_sens: snap.sd_sens,
        clusters: snap
            .clusters
            .iter()
            .map(|c| ClusterSummaryRow {
                id: c.id,
                kind: c.kind,
                members: c.members.len(),
                comm_members: c.comm_sub.len(),
                sensing_members: c.sensing_sub.len(),
                centroid_aod_deg: c.centroid.0,
                centroid_delay_ns: c.centroid.1,
                mean_power: c.centroid.2,
            })
            .collect(),
    };
    atomic_write(&out_dir.join("summary.json"), &json_bytes(&summary))?;

    let mut manifest = RunManifest::new("cluster", cfg.seed, to_json(&cfg));
    manifest.add_input(input)?;
    if let Some(p) = config_path {
        manifest.add_input(p)?;
    }
    manifest.write(&out_dir.join("manifest.json"))?;
    println!(
        "selected k = {}; counts n0={} n1={} n2={}",
        outcome.selected_k, snap.counts.n0, snap.counts.n1, snap.counts.n2
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// stats

pub fn cmd_stats(input: &Path, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let pair = read_mpc_csv(input)?;
    if pair.cluster_truth.is_none() {
        return Err(CliError::Usage(
            "input has no cluster labels; run `jcas cluster` first or provide labeled data"
                .into(),
        ));
    }
    let clusters = truth_clusters(&pair)?;
    let report = spread_report(&clusters)?;
    for id in &report.excluded_from_fits {
        eprintln!("warning: cluster {id} has a single member, excluded from fits");
    }
    atomic_write(out, &json_bytes(&report))?;

    let mut manifest = RunManifest::new("stats", seed.unwrap_or(0), serde_json::json!({}));
    manifest.add_input(input)?;
    manifest.write(&manifest_sibling(out))?;
    println!("wrote {} ({} clusters)", out.display(), report.clusters.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    SdCdf,
    AodPdf,
    EndToEnd,
}

fn default_bin_deg() -> f64 {
    5.0
}

/// Declarative sweep description consumed by `jcas sweep --config`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema_version: u32,
    pub base: ScenarioConfig,
    pub n0_values: Vec<usize>,
    pub trials: usize,
    pub studies: Vec<Study>,
    /// Histogram bin width for the AOD PDF study.
    #[serde(default = "default_bin_deg")]
    pub bin_deg: f64,
    /// Clustering configuration for the end-to-end study.
    #[serde(default)]
    pub jca: Option<KpmJcaConfig>,
    /// Trial count override for the (much slower) end-to-end study.
    #[serde(default)]
    pub end_to_end_trials: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    studies: Vec<Study>,
    n0_values: Vec<usize>,
    trials: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sd_fits: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    aod_tv: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    end_to_end: Vec<serde_json::Value>,
}

/// Derives the end-to-end scenario at one swept `n0`, holding the total
/// cluster count fixed the same way the SD sweep does.
fn end_to_end_scenario(base: &ScenarioConfig, n0: usize) -> CliResult<ScenarioConfig> {
    let total = base.counts().n();
    let mut cfg = base.clone();
    cfg.n0 = n0;
    cfg.n2 = total
        .checked_sub(n0 + cfg.n1)
        .ok_or_else(|| CliError::Usage(format!("n0 {n0} exceeds the cluster budget {total}")))?;
    Ok(cfg)
}

pub fn cmd_sweep(config_path: &Path, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let mut spec: SweepSpec = parse_json_config(config_path)?;
    if spec.schema_version != 1 {
        return Err(CliError::Usage(format!(
            "unsupported sweep schema_version {}",
            spec.schema_version
        )));
    }
    if spec.studies.is_empty() {
        return Err(CliError::Usage("no studies requested".into()));
    }
    if let Some(s) = seed {
        spec.base.seed = s;
    }
    spec.base.validate()?;

    fs::create_dir_all(out_dir)?;
    let mut summary = SweepSummary {
        studies: spec.studies.clone(),
        n0_values: spec.n0_values.clone(),
        trials: spec.trials,
        sd_fits: Vec::new(),
        aod_tv: Vec::new(),
        end_to_end: Vec::new(),
    };

    if spec.studies.contains(&Study::SdCdf) {
        let points = run_sd_sweep(&spec.base, &spec.n0_values, spec.trials)?;
        let mut fits = String::from("n0,trials,mu,sigma\n");
        for p in &points {
            let mut table = String::from("sd,cdf\n");
            for (x, f) in &p.cdf {
                table.push_str(&format!("{x},{f}\n"));
            }
            atomic_write(
                &out_dir.join(format!("sd_cdf_n0_{}.csv", p.n0)),
                table.as_bytes(),
            )?;
            fits.push_str(&format!("{},{},{},{}\n", p.n0, p.trials, p.mu, p.sigma));
            summary.sd_fits.push(serde_json::json!({
                "n0": p.n0, "mu": p.mu, "sigma": p.sigma,
            }));
        }
        atomic_write(&out_dir.join("sd_fits.csv"), fits.as_bytes())?;
    }

    if spec.studies.contains(&Study::AodPdf) {
        let points = run_aod_sweep(&spec.base, &spec.n0_values, spec.trials, spec.bin_deg)?;
        let mut tv = String::from("n0,tv_distance\n");
        for p in &points {
            for (name, pdf) in [("comm", &p.comm_pdf), ("sens", &p.sens_pdf)] {
                let mut table = String::from("aod_deg,density\n");
                for (center, density) in pdf {
                    table.push_str(&format!("{center},{density}\n"));
                }
                atomic_write(
                    &out_dir.join(format!("aod_pdf_{name}_n0_{}.csv", p.n0)),
                    table.as_bytes(),
                )?;
            }
            tv.push_str(&format!("{},{}\n", p.n0, p.tv_distance));
            summary.aod_tv.push(serde_json::json!({
                "n0": p.n0, "tv_distance": p.tv_distance,
            }));
        }
        atomic_write(&out_dir.join("aod_tv.csv"), tv.as_bytes())?;
    }

    if spec.studies.contains(&Study::EndToEnd) {
        let jca = spec.jca.clone().unwrap_or_default();
        let trials = spec.end_to_end_trials.unwrap_or(spec.trials);
        for &n0 in &spec.n0_values {
            let cfg = end_to_end_scenario(&spec.base, n0)?;
            let report = run_end_to_end(&cfg, &jca, trials)?;
            let mut table = String::from(
                "trial,selected_k,truth_n,est_n0,est_n1,est_n2,est_sd_sens,truth_sd_sens\n",
            );
            for (t, trial) in report.trials.iter().enumerate() {
                table.push_str(&format!(
                    "{t},{},{},{},{},{},{},{}\n",
                    trial.selected_k,
                    trial.truth_n,
                    trial.est_counts.n0,
                    trial.est_counts.n1,
                    trial.est_counts.n2,
                    trial.est_sd_sens,
                    trial.truth_sd_sens,
                ));
            }
            atomic_write(
                &out_dir.join(format!("end_to_end_n0_{n0}.csv")),
                table.as_bytes(),
            )?;
            summary.end_to_end.push(serde_json::json!({
                "n0": n0,
                "median_k_error": report.median_k_error,
                "median_sd_error": report.median_sd_error,
            }));
        }
    }

    atomic_write(&out_dir.join("summary.json"), &json_bytes(&summary))?;

    let mut manifest = RunManifest::new(
        "sweep",
        spec.base.seed,
        serde_json::json!({
            "spec": {
                "schema_version": spec.schema_version,
                "base": to_json(&spec.base),
                "n0_values": spec.n0_values,
                "trials": spec.trials,
                "studies": spec.studies,
                "bin_deg": spec.bin_deg,
                "jca": spec.jca,
                "end_to_end_trials": spec.end_to_end_trials,
            }
        }),
    );
    manifest.add_input(config_path)?;
    manifest.write(&out_dir.join("manifest.json"))?;
    println!("wrote sweep outputs to {}", out_dir.display());
    Ok(())
}

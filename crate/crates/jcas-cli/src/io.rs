//! MPC CSV round-trip, atomic file writes, and content digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use jcas_core::types::{
    ChannelPair, ClusterCounts, ClusterKind, LinkTag, Mpc, TruthLabel, TruthLabels,
};

use crate::error::{CliError, CliResult};

/// Bit-exact header of the MPC table format.
pub const MPC_CSV_HEADER: &str =
    "link,aod_deg,aoa_deg,delay_ns,amp_re,amp_im,rcs,cluster_truth,kind_truth";

fn link_token(link: LinkTag) -> &'static str {
    match link {
        LinkTag::Communication => "comm",
        LinkTag::Sensing => "sens",
    }
}

fn kind_token(kind: ClusterKind) -> &'static str {
    match kind {
        ClusterKind::Shared => "shared",
        ClusterKind::CommOnly => "comm_only",
        ClusterKind::SensingOnly => "sensing_only",
    }
}

fn parse_kind(token: &str) -> CliResult<ClusterKind> {
    match token {
        "shared" => Ok(ClusterKind::Shared),
        "comm_only" => Ok(ClusterKind::CommOnly),
        "sensing_only" => Ok(ClusterKind::SensingOnly),
        other => Err(CliError::Usage(format!("unknown cluster kind `{other}`"))),
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes a channel pair (communication rows first, then sensing) to the
/// MPC CSV format. Truth labels are emitted when present.
pub fn mpc_csv_bytes(pair: &ChannelPair) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(MPC_CSV_HEADER);
    out.push('\n');
    let rows = pair
        .comm_mpcs
        .iter()
        .enumerate()
        .map(|(i, m)| (m, pair.cluster_truth.as_ref().map(|t| t.comm[i])))
        .chain(
            pair.sensing_mpcs
                .iter()
                .enumerate()
                .map(|(i, m)| (m, pair.cluster_truth.as_ref().map(|t| t.sensing[i]))),
        );
    for (m, truth) in rows {
        let (cluster, kind) = match truth {
            Some(t) => (t.cluster_id.to_string(), kind_token(t.kind).to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            link_token(m.link),
            m.aod_deg,
            opt_field(m.aoa_deg),
            m.delay_ns,
            m.amplitude.re,
            m.amplitude.im,
            opt_field(m.rcs),
            cluster,
            kind,
        ));
    }
    out.into_bytes()
}

fn parse_f64(field: &str, name: &str, line: usize) -> CliResult<f64> {
    field
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("line {line}: bad {name} value `{field}`")))
}

fn parse_opt_f64(field: &str, name: &str, line: usize) -> CliResult<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, name, line).map(Some)
    }
}

/// Parses an MPC CSV file back into a channel pair. Truth labels must be
/// present on every row or on none; cluster counts are recovered from the
/// distinct labeled cluster ids per kind.
pub fn read_mpc_csv(path: &Path) -> CliResult<ChannelPair> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: empty file", path.display())))?;
    if header != MPC_CSV_HEADER {
        return Err(CliError::Usage(format!(
            "{}: bad header, expected `{MPC_CSV_HEADER}`",
            path.display()
        )));
    }

    let mut comm = Vec::new();
    let mut sens = Vec::new();
    let mut comm_truth = Vec::new();
    let mut sens_truth = Vec::new();
    let mut labeled = 0usize;
    let mut total = 0usize;
    // kind per cluster id, to reject inconsistent labelings
    let mut kinds: BTreeMap<usize, ClusterKind> = BTreeMap::new();

    for (idx, raw) in lines.enumerate() {
        let line = idx + 2;
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 9 {
            return Err(CliError::Usage(format!(
                "line {line}: expected 9 fields, got {}",
                fields.len()
            )));
        }
        let link = match fields[0] {
            "comm" => LinkTag::Communication,
            "sens" => LinkTag::Sensing,
            other => {
                return Err(CliError::Usage(format!(
                    "line {line}: unknown link tag `{other}`"
                )))
            }
        };
        let aod = parse_f64(fields[1], "aod_deg", line)?;
        let aoa = parse_opt_f64(fields[2], "aoa_deg", line)?;
        let delay = parse_f64(fields[3], "delay_ns", line)?;
        let re = parse_f64(fields[4], "amp_re", line)?;
        let im = parse_f64(fields[5], "amp_im", line)?;
        let rcs = parse_opt_f64(fields[6], "rcs", line)?;
        let mpc = Mpc::new(link, aod, aoa, delay, Complex64::new(re, im), rcs)
            .map_err(|e| CliError::Usage(format!("line {line}: {e}")))?;

        let truth = match (fields[7], fields[8]) {
            ("", "") => None,
            (id, kind) => {
                let cluster_id = id.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("line {line}: bad cluster_truth `{id}`"))
                })?;
                let kind = parse_kind(kind)
                    .map_err(|e| CliError::Usage(format!("line {line}: {e}")))?;
                if *kinds.entry(cluster_id).or_insert(kind) != kind {
                    return Err(CliError::Usage(format!(
                        "line {line}: cluster {cluster_id} labeled with conflicting kinds"
                    )));
                }
                labeled += 1;
                Some(TruthLabel { cluster_id, kind })
            }
        };
        total += 1;
        match link {
            LinkTag::Communication => {
                comm.push(mpc);
                comm_truth.push(truth);
            }
            LinkTag::Sensing => {
                sens.push(mpc);
                sens_truth.push(truth);
            }
        }
    }

    if total == 0 {
        return Err(CliError::Usage(format!(
            "{}: no MPC rows",
            path.display()
        )));
    }
    let cluster_truth = if labeled == 0 {
        None
    } else if labeled == total {
        Some(TruthLabels {
            comm: comm_truth.into_iter().map(Option::unwrap).collect(),
            sensing: sens_truth.into_iter().map(Option::unwrap).collect(),
        })
    } else {
        return Err(CliError::Usage(
            "truth labels must cover every row or none".into(),
        ));
    };

    let count_of = |k: ClusterKind| kinds.values().filter(|v| **v == k).count();
    let counts = ClusterCounts {
        n0: count_of(ClusterKind::Shared),
        n1: count_of(ClusterKind::CommOnly),
        n2: count_of(ClusterKind::SensingOnly),
    };
    let pair = ChannelPair {
        comm_mpcs: comm,
        sensing_mpcs: sens,
        cluster_truth,
        counts,
    };
    pair.validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(pair)
}

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

//! Denoising, power compensation, and link merging ahead of joint clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LinkTag, Mpc};

/// Policy for the communication power compensation coefficient gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaPolicy {
    /// gamma = total sensing power / total communication power.
    EqualTotal,
    /// gamma = mean sensing MPC power / mean communication MPC power.
    EqualMean,
    Manual(f64),
}

/// The merged communication + sensing MPC set clustering operates on.
///
/// MPC amplitudes are kept untouched; compensation only affects the power
/// weights, and the raw powers stay recoverable per MPC.
#[derive(Debug, Clone)]
pub struct JointMpcSet {
    pub mpcs: Vec<Mpc>,
    pub gamma: f64,
    /// Compensated powers: `raw * gamma` for communication MPCs.
    pub powers: Vec<f64>,
    /// Pre-compensation powers (RCS folded in on sensing).
    pub raw_powers: Vec<f64>,
}

impl JointMpcSet {
    pub fn len(&self) -> usize {
        self.mpcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mpcs.is_empty()
    }
}

/// Keeps MPCs within `p_th_db` of the strongest MPC of the same link.
/// The boundary is inclusive and thresholds are per link.
pub fn denoise(mpcs: &[Mpc], p_th_db: f64) -> Result<Vec<Mpc>> {
    if !(p_th_db > 0.0) {
        return Err(Error::Parameter(format!(
            "p_th_db must be > 0, got {p_th_db}"
        )));
    }
    let peak = |link: LinkTag| -> f64 {
        mpcs.iter()
            .filter(|m| m.link == link)
            .map(|m| m.power(true))
            .fold(0.0f64, f64::max)
    };
    let peaks = [
        (LinkTag::Communication, peak(LinkTag::Communication)),
        (LinkTag::Sensing, peak(LinkTag::Sensing)),
    ];
    let factor = 10f64.powf(-p_th_db / 10.0);
    Ok(mpcs
        .iter()
        .filter(|m| {
            let peak = peaks.iter().find(|(l, _)| *l == m.link).unwrap().1;
            peak > 0.0 && m.power(true) >= peak * factor * (1.0 - 1e-12)
        })
        .cloned()
        .collect())
}

/// Computes the compensation coefficient per policy.
pub fn compute_gamma(comm: &[Mpc], sens: &[Mpc], policy: GammaPolicy) -> Result<f64> {
    if let GammaPolicy::Manual(g) = policy {
        if !(g > 0.0) {
            return Err(Error::Parameter(format!("manual gamma must be > 0, got {g}")));
        }
        return Ok(g);
    }
    if comm.is_empty() || sens.is_empty() {
        return Err(Error::Parameter(
            "automatic gamma needs both links non-empty".into(),
        ));
    }
    let total = |mpcs: &[Mpc]| mpcs.iter().map(|m| m.power(true)).sum::<f64>();
    let (pc, ps) = (total(comm), total(sens));
    if pc <= 0.0 {
        return Err(Error::Undefined("zero communication power".into()));
    }
    Ok(match policy {
        GammaPolicy::EqualTotal => ps / pc,
        GammaPolicy::EqualMean => (ps / sens.len() as f64) / (pc / comm.len() as f64),
        GammaPolicy::Manual(_) => unreachable!(),
    })
}

/// Union of both links with the source tag preserved and communication
/// powers multiplied by gamma.
pub fn merge_links(comm: &[Mpc], sens: &[Mpc], gamma: f64) -> Result<JointMpcSet> {
    if !(gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma must be > 0, got {gamma}")));
    }
    let mpcs: Vec<Mpc> = comm.iter().chain(sens.iter()).cloned().collect();
    let raw_powers: Vec<f64> = mpcs.iter().map(|m| m.power(true)).collect();
    let powers: Vec<f64> = mpcs
        .iter()
        .zip(&raw_powers)
        .map(|(m, &p)| match m.link {
            LinkTag::Communication => p * gamma,
            LinkTag::Sensing => p,
        })
        .collect();
    Ok(JointMpcSet {
        mpcs,
        gamma,
        powers,
        raw_powers,
    })
}

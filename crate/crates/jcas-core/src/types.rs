//! Domain types shared by the model, clustering, and statistics layers.
//!
//! All angles are azimuth angles of departure in degrees, measured clockwise
//! from the south direction, and normalized to `[0, 360)`. Delays are in
//! nanoseconds. Powers are always derived from complex amplitudes (and the
//! optional RCS coefficient), never stored separately.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which link an MPC belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkTag {
    Communication,
    Sensing,
}

/// Cluster taxonomy: contributed by a shared scatterer, or by one link only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterKind {
    Shared,
    CommOnly,
    SensingOnly,
}

/// Normalizes an angle in degrees to `[0, 360)`.
pub fn normalize_angle(angle_deg: f64) -> Result<f64> {
    if !angle_deg.is_finite() {
        return Err(Error::Validation(format!(
            "angle must be finite, got {angle_deg}"
        )));
    }
    let a = angle_deg.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs.
    Ok(if a >= 360.0 { 0.0 } else { a })
}

/// One resolvable multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub link: LinkTag,
    /// Azimuth angle of departure, degrees in `[0, 360)`.
    pub aod_deg: f64,
    /// Azimuth angle of arrival, when available. Unused by clustering.
    pub aoa_deg: Option<f64>,
    /// Propagation delay, nanoseconds, nonnegative.
    pub delay_ns: f64,
    /// Complex amplitude (linear scale).
    pub amplitude: Complex64,
    /// RCS coefficient of the contributing scatterer; sensing links only.
    pub rcs: Option<f64>,
}

impl Mpc {
    /// Builds a validated MPC. The AOD is normalized to `[0, 360)`.
    pub fn new(
        link: LinkTag,
        aod_deg: f64,
        aoa_deg: Option<f64>,
        delay_ns: f64,
        amplitude: Complex64,
        rcs: Option<f64>,
    ) -> Result<Self> {
        if !delay_ns.is_finite() || delay_ns < 0.0 {
            return Err(Error::Validation(format!(
                "delay must be finite and nonnegative, got {delay_ns}"
            )));
        }
        if !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::Validation("amplitude must be finite".into()));
        }
        if let Some(r) = rcs {
            if link != LinkTag::Sensing {
                return Err(Error::Validation(
                    "rcs is only meaningful on sensing links".into(),
                ));
            }
            if !r.is_finite() || r < 0.0 {
                return Err(Error::Validation(format!(
                    "rcs must be finite and nonnegative, got {r}"
                )));
            }
        }
        let aoa_deg = match aoa_deg {
            Some(a) => Some(normalize_angle(a)?),
            None => None,
        };
        Ok(Self {
            link,
            aod_deg: normalize_angle(aod_deg)?,
            aoa_deg,
            delay_ns,
            amplitude,
            rcs,
        })
    }

    /// `|a|^2`, or `|a * rcs|^2` when `include_rcs` is set and an RCS
    /// coefficient is present.
    pub fn power(&self, include_rcs: bool) -> f64 {
        let p = self.amplitude.norm_sqr();
        match (include_rcs, self.rcs) {
            (true, Some(r)) => p * r * r,
            _ => p,
        }
    }
}

/// Computes the power of an MPC; free-function form of [`Mpc::power`].
pub fn mpc_power(m: &Mpc, include_rcs: bool) -> f64 {
    m.power(include_rcs)
}

/// A labeled group of MPCs, indexing into a joint MPC list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Member indices into the joint MPC list.
    pub members: Vec<usize>,
    /// Centroid: (AOD degrees, delay ns, mean power).
    pub centroid: (f64, f64, f64),
    pub kind: ClusterKind,
    /// Members with `link == Communication`.
    pub comm_sub: Vec<usize>,
    /// Members with `link == Sensing`.
    pub sensing_sub: Vec<usize>,
}

/// Shared / comm-only / sensing-only cluster counts of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCounts {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
}

impl ClusterCounts {
    pub fn n_c(&self) -> usize {
        self.n0 + self.n1
    }
    pub fn n_s(&self) -> usize {
        self.n0 + self.n2
    }
    pub fn n(&self) -> usize {
        self.n0 + self.n1 + self.n2
    }
}

/// Generation-time label of one MPC: cluster id and cluster kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLabel {
    pub cluster_id: usize,
    pub kind: ClusterKind,
}

/// Generation-time labels for both links, aligned with the MPC lists of a
/// [`ChannelPair`]. Never read by clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLabels {
    pub comm: Vec<TruthLabel>,
    pub sensing: Vec<TruthLabel>,
}

/// One joint realization: communication and sensing CIRs built from a common
/// shared-cluster set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelPair {
    pub comm_mpcs: Vec<Mpc>,
    pub sensing_mpcs: Vec<Mpc>,
    pub cluster_truth: Option<TruthLabels>,
    pub counts: ClusterCounts,
}

impl ChannelPair {
    /// Checks label/count consistency when truth labels are present.
    pub fn validate(&self) -> Result<()> {
        if let Some(truth) = &self.cluster_truth {
            if truth.comm.len() != self.comm_mpcs.len()
                || truth.sensing.len() != self.sensing_mpcs.len()
            {
                return Err(Error::Validation(
                    "truth labels not aligned with MPC lists".into(),
                ));
            }
            let distinct = |labels: &[TruthLabel]| {
                let mut ids: Vec<usize> = labels.iter().map(|l| l.cluster_id).collect();
                ids.sort_unstable();
                ids.dedup();
                ids.len()
            };
            if distinct(&truth.comm) > self.counts.n_c()
                || distinct(&truth.sensing) > self.counts.n_s()
            {
                return Err(Error::Validation(
                    "more labeled clusters than counted clusters".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Power-angular-delay profile: accumulated power over an (angle, delay) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Padp {
    /// Bin-center angles in degrees, strictly increasing.
    pub angle_grid_deg: Vec<f64>,
    /// Bin-center delays in ns, strictly increasing.
    pub delay_grid_ns: Vec<f64>,
    /// Power per (angle, delay) bin; `power[i][j]` is angle `i`, delay `j`.
    pub power: Vec<Vec<f64>>,
}

impl Padp {
    pub fn total_power(&self) -> f64 {
        self.power.iter().flatten().sum()
    }
}

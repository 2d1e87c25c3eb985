//! Scenario configuration: every generation knob plus the RNG seed.
//!
//! Defaults reproduce the measured indoor-hall parameterization (inter-cluster
//! spreads per link, intra-cluster path-count / log10(DS) / log10(AS) fits per
//! sub-cluster type). All fields are plain data and serialize to a flat JSON
//! tree; unknown keys are rejected so stale configs fail loudly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// A fitted normal distribution, written `(mu, sigma)`.
///
/// Whether `sigma` is a standard deviation or a variance is decided globally
/// by [`ScenarioConfig::sigma_is_variance`]; the measured tables follow the
/// N(mu, sigma^2) notation where the quoted second entry is the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalFit {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    /// Standard deviation under the given interpretation of `sigma`.
    pub fn std(&self, sigma_is_variance: bool) -> f64 {
        if sigma_is_variance {
            self.sigma.sqrt()
        } else {
            self.sigma
        }
    }
}

/// Intra-cluster fits for one sub-cluster type (communication or sensing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntraFits {
    /// Path count per cluster, rounded and clamped to >= 1 at draw time.
    pub path_count: NormalFit,
    /// log10 of the intra-cluster rms delay spread in ns.
    pub log10_ds_ns: NormalFit,
    /// log10 of the intra-cluster rms angle spread in degrees.
    pub log10_as_deg: NormalFit,
}

/// Sharing-degree evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdMode {
    /// Power ratio: sum of shared MPC powers over total link power.
    Incoherent,
    /// Ratio of coherently summed amplitudes, squared.
    Coherent,
}

/// How shared communication sub-cluster centroid delays are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SharedDelayMode {
    /// Independent draw from the communication inter-cluster delay profile.
    Independent,
    /// Single-bounce geometry: localize the scatterer from the sensing
    /// echo, then take (TX->scatterer + scatterer->RX) / wave speed.
    Geometric,
}

/// Optional deterministic line-of-sight cluster on the communication link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosConfig {
    pub enabled: bool,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,

    /// Shared cluster count.
    pub n0: usize,
    /// Communication-only cluster count.
    pub n1: usize,
    /// Sensing-only cluster count.
    pub n2: usize,

    /// Target inter-cluster rms angle spread of communication clusters, deg.
    pub inter_as_comm_deg: f64,
    /// Target inter-cluster rms angle spread of sensing clusters, deg.
    pub inter_as_sens_deg: f64,
    /// Target inter-cluster rms delay spread of communication clusters, ns.
    pub inter_ds_comm_ns: f64,
    /// Target inter-cluster rms delay spread of sensing clusters, ns.
    pub inter_ds_sens_ns: f64,

    /// Intra-cluster fits for communication (sub-)clusters.
    pub intra_comm: IntraFits,
    /// Intra-cluster fits for sensing (sub-)clusters.
    pub intra_sens: IntraFits,
    /// Interpret the second entry of every `(mu, sigma)` pair as a variance.
    pub sigma_is_variance: bool,

    /// Delay power-decay factor of the cluster power profile.
    pub r_tau: f64,
    /// Per-cluster lognormal shadowing standard deviation, dB.
    pub shadow_std_db: f64,

    /// RCS coefficient lognormal: median in dB (0 dB == median 1.0).
    pub rcs_median_db: f64,
    /// RCS coefficient lognormal standard deviation, dB.
    pub rcs_std_db: f64,

    pub sd_mode: SdMode,
    pub shared_delay_mode: SharedDelayMode,

    /// Scenario reference angle the centroid AOD distributions center on.
    pub reference_aod_deg: f64,
    pub los: LosConfig,

    /// TX position, meters; used by geometric shared-delay mode.
    pub tx_position_m: [f64; 2],
    /// Communication RX position, meters.
    pub rx_position_m: [f64; 2],
    /// Propagation speed in m/ns.
    pub wave_speed_m_per_ns: f64,

    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            n0: 8,
            n1: 0,
            n2: 7,
            inter_as_comm_deg: 38.66,
            inter_as_sens_deg: 91.29,
            inter_ds_comm_ns: 13.87,
            inter_ds_sens_ns: 28.82,
            intra_comm: IntraFits {
                path_count: NormalFit::new(24.0, 153.0),
                log10_ds_ns: NormalFit::new(0.55, 0.19),
                log10_as_deg: NormalFit::new(0.73, 0.03),
            },
            intra_sens: IntraFits {
                path_count: NormalFit::new(75.0, 867.0),
                log10_ds_ns: NormalFit::new(1.08, 0.06),
                log10_as_deg: NormalFit::new(0.88, 0.04),
            },
            sigma_is_variance: true,
            r_tau: 3.6,
            shadow_std_db: 3.0,
            rcs_median_db: 0.0,
            rcs_std_db: 3.0,
            sd_mode: SdMode::Incoherent,
            shared_delay_mode: SharedDelayMode::Independent,
            reference_aod_deg: 0.0,
            los: LosConfig {
                enabled: false,
                angle_deg: 0.0,
            },
            tx_position_m: [0.0, 0.0],
            rx_position_m: [4.0, 3.0],
            wave_speed_m_per_ns: 0.3,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported schema_version {} (expected {})",
                self.schema_version, CONFIG_SCHEMA_VERSION
            )));
        }
        let positive = [
            ("inter_as_comm_deg", self.inter_as_comm_deg),
            ("inter_as_sens_deg", self.inter_as_sens_deg),
            ("inter_ds_comm_ns", self.inter_ds_comm_ns),
            ("inter_ds_sens_ns", self.inter_ds_sens_ns),
            ("r_tau", self.r_tau),
            ("wave_speed_m_per_ns", self.wave_speed_m_per_ns),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.r_tau <= 1.0 {
            return Err(Error::Parameter(format!(
                "r_tau must exceed 1, got {}",
                self.r_tau
            )));
        }
        let nonneg = [
            ("shadow_std_db", self.shadow_std_db),
            ("rcs_std_db", self.rcs_std_db),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, fit) in [
            ("intra_comm.path_count", self.intra_comm.path_count),
            ("intra_comm.log10_ds_ns", self.intra_comm.log10_ds_ns),
            ("intra_comm.log10_as_deg", self.intra_comm.log10_as_deg),
            ("intra_sens.path_count", self.intra_sens.path_count),
            ("intra_sens.log10_ds_ns", self.intra_sens.log10_ds_ns),
            ("intra_sens.log10_as_deg", self.intra_sens.log10_as_deg),
        ] {
            if !fit.mu.is_finite() || !fit.sigma.is_finite() || fit.sigma < 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} fit must be finite with sigma >= 0"
                )));
            }
        }
        if !self.reference_aod_deg.is_finite() || !self.los.angle_deg.is_finite() {
            return Err(Error::Parameter("angles must be finite".into()));
        }
        Ok(())
    }

    pub fn counts(&self) -> crate::types::ClusterCounts {
        crate::types::ClusterCounts {
            n0: self.n0,
            n1: self.n1,
            n2: self.n2,
        }
    }
}

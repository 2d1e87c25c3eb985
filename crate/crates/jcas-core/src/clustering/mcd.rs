//! Multipath component distance: combined angle/delay dissimilarity.
//!
//! The angular term is half the chord between AOD unit vectors; the delay
//! term is `zeta * |dtau| / dtau_max * tau_std / dtau_max`. The combined
//! distance is the Euclidean norm of the two terms, which makes it a metric
//! over the (unit-vector, scaled-delay) embedding.

use serde::{Deserialize, Serialize};

use crate::types::Mpc;

/// Precomputed scaling of the delay dimension over a joint MPC set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McdParams {
    /// Delay scaling factor, > 0.
    pub zeta: f64,
    /// Population standard deviation of the delays.
    pub delay_std_ns: f64,
    /// Delay range (max - min); 0 collapses the delay term entirely.
    pub delay_range_ns: f64,
}

pub const DEFAULT_ZETA: f64 = 8.0;

impl McdParams {
    pub fn from_delays(delays: &[f64], zeta: f64) -> Self {
        assert!(zeta > 0.0, "zeta must be > 0");
        if delays.is_empty() {
            return Self {
                zeta,
                delay_std_ns: 0.0,
                delay_range_ns: 0.0,
            };
        }
        let n = delays.len() as f64;
        let mean = delays.iter().sum::<f64>() / n;
        let var = delays.iter().map(|&d| (d - mean).powi(2)).sum::<f64>() / n;
        let max = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = delays.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            zeta,
            delay_std_ns: var.sqrt(),
            delay_range_ns: max - min,
        }
    }

    pub fn from_mpcs(mpcs: &[Mpc], zeta: f64) -> Self {
        let delays: Vec<f64> = mpcs.iter().map(|m| m.delay_ns).collect();
        Self::from_delays(&delays, zeta)
    }

    /// Coefficient multiplying `|dtau|` in the delay term.
    pub fn delay_coeff(&self) -> f64 {
        if self.delay_range_ns > 0.0 {
            self.zeta * self.delay_std_ns / (self.delay_range_ns * self.delay_range_ns)
        } else {
            0.0
        }
    }
}

/// MCD between two (AOD, delay) coordinate pairs.
pub fn mcd_coords(a_aod_deg: f64, a_delay: f64, b_aod_deg: f64, b_delay: f64, p: &McdParams) -> f64 {
    let ar = a_aod_deg.to_radians();
    let br = b_aod_deg.to_radians();
    let dx = ar.cos() - br.cos();
    let dy = ar.sin() - br.sin();
    let angle = 0.5 * (dx * dx + dy * dy).sqrt();
    let delay = p.delay_coeff() * (a_delay - b_delay).abs();
    (angle * angle + delay * delay).sqrt()
}

/// MCD between two MPCs.
pub fn mcd(a: &Mpc, b: &Mpc, p: &McdParams) -> f64 {
    mcd_coords(a.aod_deg, a.delay_ns, b.aod_deg, b.delay_ns, p)
}

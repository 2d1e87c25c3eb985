//! Joint communication and sensing channel toolkit: a shared-cluster channel
//! pair generator, a joint clustering pipeline (KPowerMeans over the MCD
//! metric with DB/CH order selection), and spread/sharing statistics.

pub mod clustering;
pub mod config;
pub mod error;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod types;

pub use error::{Error, Result};

//! Joint clustering of communication and sensing MPC sets.

pub mod indices;
pub mod kpowermeans;
pub mod mcd;
pub mod merge;
pub mod pipeline;

pub use indices::{calinski_harabasz, davies_bouldin, select_k};
pub use kpowermeans::{kpowermeans, kpowermeans_best_of, Partition};
pub use mcd::{mcd, mcd_coords, McdParams, DEFAULT_ZETA};
pub use merge::{compute_gamma, denoise, merge_links, GammaPolicy, JointMpcSet};
pub use pipeline::{
    classify_clusters, prepare_joint, recovered_sharing_degree, run_kpm_jca, JcaOutcome,
    KCandidate, KpmJcaConfig, SnapshotOutcome,
};

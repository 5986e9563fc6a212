//! Cluster-feature algebra, the independent and cumulative clustering
//! strategies, and calibration of the clustering radius.

mod cf;
mod clustering;
mod epsilon;

pub use cf::{cf_add, cf_merge, ClusterFeature};
pub use clustering::{
    agglomerate, cluster_points, cumulative_update, decay, Clustering, DecayConfig, DROP_FLOOR,
};
pub use epsilon::{learn_epsilon, level_epsilon, EpsilonConfig, EPSILON_FLOOR};

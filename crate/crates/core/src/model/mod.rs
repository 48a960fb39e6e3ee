//! Network description, per-cluster derived matrices, power accounting and
//! forward simulation of one pilot-plus-data round.

mod channel;
mod config;
mod network;

pub use channel::{
    cn_sample, estimation_error, generate_channels, network_power, simulate_round, ChannelDraw,
    ChannelState, DataNoise, PowerAllocation, RoundSample,
};
pub use config::{load_config, parse_config, ConfigFile};
pub use network::{
    derive_cluster, r_t, ClusterDerived, ClusterSpec, ClusterView, Network, NetworkConfig, RtSolve,
};

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

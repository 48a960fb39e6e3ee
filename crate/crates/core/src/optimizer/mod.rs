//! Power allocation and fusion-weight design.
//!
//! The joint problem splits the budget between channel training and data,
//! then alternates a per-cluster line search for the sensor power with a
//! water-filling split of the data budget across clusters. Restricted variants
//! and two idealized bounds reuse the same building blocks.

mod bounds;
mod inner;
mod joint;
mod special;
mod training;
mod waterfill;

pub use bounds::{observation_covariance, solve_error_free_links, solve_perfect_csi};
pub use inner::{
    beta, fusion_weights_given_p, objective_direct, p_given_weights, power_residual, profile,
    solve_sp21, sp21_kkt, ClusterStats, InnerKkt, InnerSolution,
};
pub use joint::{
    block_ascent, optimize_training, search_training_split, solve_given_training, solve_joint,
    solve_joint_with_split, stats_of, BlockAscent, Init, KktResiduals, SolveReport, SolverOptions,
    TrainingSplit, Variant,
};
pub use special::{
    common_head_gradient, common_head_objective, common_head_power_at, common_head_power_split,
    common_sensor_power_at, common_sensor_power_profile, common_sensor_power_split,
    solve_common_head_power, solve_common_head_power_inner, solve_common_head_power_with_split,
    solve_common_sensor_power, solve_common_sensor_power_inner,
    solve_common_sensor_power_with_split, solve_fixed_training, CommonAllocation,
};
pub use training::{
    distribute_training, full_activation_threshold, total_estimation_error, training_multiplier,
    training_residual,
};
pub use waterfill::{
    ranking, water_fill, water_fill_objective, water_fill_residual, WaterFill, WaterLevel,
};

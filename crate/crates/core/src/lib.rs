//! Event-triggered average-reward reinforcement learning for on/off
//! thermostat control of a simulated one-zone heated building.
//!
//! The controller decides switching-temperature thresholds; the plant
//! evolves until the indoor temperature hits the armed threshold (an
//! event), at which point the heater flips and the learner updates from the
//! accumulated reward and the variable dwell time. Ground truth comes from
//! the closed-form limit-cycle average reward and a brute-force grid search
//! over constant threshold pairs.

pub mod error;
pub mod learner;
pub mod oracle;
pub mod policy;
pub mod smdp;
pub mod thermal;
pub mod trace;

pub use error::{Error, Result};
pub use learner::{
    td_error_q, td_error_v, train_deterministic, train_fixed_interval, train_stochastic,
    update_average_reward, FixedControlMode, GaussianPolicy, GreedyPolicy, TrainConfig,
    TrainResult, THETA_GUARD_C,
};
pub use oracle::{
    grid_search, limit_cycle_average_reward, GridEvaluator, GridSpec, RewardSurface, SurfaceCell,
};
pub use policy::{
    compatible_q, features, CriticParams, DeterministicPolicyParams, FeatureVector, PolicyParams,
    StochasticPolicyParams, StochasticScore,
};
pub use smdp::{
    accumulate_reward, clamp_action, run_policy, run_policy_fixed, ClampConfig, Env,
    FixedThresholds, Policy, RewardWeights, SwitchKind, SystemState, ThresholdAction, Transition,
    SECONDS_PER_HOUR,
};
pub use thermal::{
    closed_form_temperature, step_to_event, time_to_threshold, BuildingParams, SimOptions,
    Unreachable, WeatherModel, WeatherTrace,
};
pub use trace::{
    train_log_to_csv, EventRecord, EventTrace, TrainRecord, EVENT_TRACE_HEADER, TRAIN_LOG_HEADER,
};

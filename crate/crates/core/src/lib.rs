//! Artificial rodent for operant-conditioning training protocols.
//!
//! A tabular Q-learning agent is trained on a two-spout taste-discrimination
//! task, session by session, and its behavior is compared with other
//! executions or real animals through sliding-window similarity metrics.
//!
//! The learning core and metrics are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the scalar to `f64`.

pub mod agent;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod scalar;

pub use agent::{
    action_distribution, epsilon_for_session, push_stimulus, q_update, select_action, Agent, State, WarmUp,
};
pub use error::{Error, Result};
pub use metrics::{
    accuracy_curve, group_distance, group_series, individual_distance, match_distance, windowed_series,
    DistributionDistance, Label, MatchDistance,
};
pub use model::{
    accuracy, check_success, Action, Category, Cohort, Outcome, Response, Session, Stimulus, TrainingSequence, Trial,
};
pub use protocol::{generate_stimulus_sequence, judge, run_session, run_training, PhaseSwitch, SessionPlan};
pub use scalar::Scalar;

pub type AgentConfig = agent::AgentConfig<f64>;
pub type AgentConfig32 = agent::AgentConfig<f32>;
pub type QTable = agent::QTable<f64>;
pub type QTable32 = agent::QTable<f32>;
pub type ProtocolConfig = protocol::ProtocolConfig<f64>;
pub type ProtocolConfig32 = protocol::ProtocolConfig<f32>;
pub type SimConfig = io::SimConfig<f64>;
pub type RunRecord = io::RunRecord<f64>;
pub type WindowedSeries = metrics::WindowedSeries<f64>;
pub type GroupSeries = metrics::GroupSeries<f64>;
pub type DistanceMatrix = metrics::DistanceMatrix<f64>;

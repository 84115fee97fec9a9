//! Graph-connectivity reasoning lab.
//!
//! Builds bridge and two-path connectivity tasks, emits chain-of-thought
//! traces under several search strategies, grades them, simulates
//! vertex-query policies, and computes best-of-n / majority-vote scaling
//! curves.

pub mod analytics;
pub mod codec;
pub mod dataset;
pub mod exec;
pub mod graph;
pub mod seed;
pub mod stats;
pub mod strategy;
pub mod task;
pub mod verify;
pub mod vqm;

pub use exec::Exec;
pub use graph::{BridgeSpec, Graph, GraphError, RoleMap};
pub use strategy::Strategy;
pub use task::{ConnectivityTask, Family, TaskOptions};

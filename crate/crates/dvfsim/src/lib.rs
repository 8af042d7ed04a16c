//! Desk-scale model and simulator for sparsity-aware block-level DVFS on
//! heterogeneous edge SoCs.
//!
//! The crate models DNN inference as an annotated operator sequence and
//! predicts, per operator and frequency configuration, execution time
//! (compute path vs. memory path) and power (sparsity-scaled dynamic plus
//! temperature-dependent leakage). A greedy partitioner fuses operators
//! into super-blocks so that each block's runtime amortizes the hardware
//! frequency-switch latency, and an event-timeline simulator executes the
//! resulting schedules under different governor policies, from all-clocks-max
//! to coupled-vector scaling with pipelined look-ahead switching.

pub mod cli;
pub mod device;
pub mod error;
pub mod fixtures;
pub mod governor;
pub mod graph;
pub mod modeler;
pub mod partitioner;
pub mod sim;
pub mod synth;

pub use device::{Component, DeviceProfile, FrequencyTriplet};
pub use error::{Error, Result};
pub use governor::{GovernorPolicy, PolicyKind, ThermalState};
pub use graph::{ComputationGraph, Operator, SparsityTrace};
pub use modeler::{Bound, PerfEstimate, PowerEstimate};
pub use partitioner::{PartitionConfig, Schedule, SuperBlock};
pub use sim::{ExecutionTrace, SimOptions, TimelineEvent};

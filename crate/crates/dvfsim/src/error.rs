//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by loading, validation, modeling and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("graph {graph}: edge references unknown operator id {id:?}")]
    DanglingEdge { graph: String, id: String },

    #[error("graph {graph}: duplicate operator id {id:?}")]
    DuplicateOperator { graph: String, id: String },

    #[error("graph {graph}: cycle detected involving operator {id:?}")]
    CycleDetected { graph: String, id: String },

    #[error("operator {id:?}: {message}")]
    InvalidOperator { id: String, message: String },

    #[error("sparsity trace: record {index} references unknown operator id {id:?}")]
    UnknownTraceOperator { index: usize, id: String },

    #[error("sparsity trace: sample index {index} out of range (trace has {len} records)")]
    TraceIndexOutOfRange { index: usize, len: usize },

    #[error("sparsity trace: record {index}, operator {id:?}: {message}")]
    InvalidTraceValue {
        index: usize,
        id: String,
        message: String,
    },

    #[error("operator {id:?}: arithmetic intensity undefined (effective data volume is zero)")]
    UndefinedIntensity { id: String },

    #[error("device profile: {message}")]
    InvalidProfile { message: String },

    #[error("unknown {component} frequency level {hz} Hz")]
    UnknownLevel { component: &'static str, hz: u64 },

    #[error("activity factor: sparsity {value} outside [0, 1]")]
    SparsityOutOfRange { value: f64 },

    #[error(
        "latency budget {budget_s} s infeasible: minimum achievable execution time is {min_t_exe_s} s"
    )]
    InfeasibleBudget { budget_s: f64, min_t_exe_s: f64 },

    #[error("block execution time of an empty operator list is undefined")]
    EmptyBlock,

    #[error("optimal partition oracle limited to {limit} operators, graph has {count}")]
    PartitionOracleTooLarge { count: usize, limit: usize },

    #[error("partition config: {message}")]
    InvalidPartitionConfig { message: String },

    #[error("baseline trace has zero energy; efficiency gain undefined")]
    ZeroBaselineEnergy,

    #[error("cost-gain ratio undefined: energy gain is not positive (trace {trace_j} J vs baseline {baseline_j} J)")]
    NonPositiveGain { trace_j: f64, baseline_j: f64 },

    #[error("scenario: {message}")]
    InvalidScenario { message: String },

    #[error("unknown governor policy {name:?}")]
    UnknownPolicy { name: String },

    #[error("{message}")]
    Invalid { message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Error::Parse {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

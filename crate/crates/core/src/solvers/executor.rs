use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{native_call, ImplKind, StrategyImpl};
use crate::cop::Instance;
use crate::matrix::Matrix;
use crate::Scalar;

/// Partial DR solution handed to badness and insertion callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrView<'a> {
    /// TSP tour, or CVRP depot-delimited sequence `[0, .., 0, .., 0]`.
    Sequence(&'a [usize]),
    /// BPP bins, each a list of item indices in packing order.
    Bins(&'a [Vec<usize>]),
}

/// One callback invocation. Every call also sees the instance.
#[derive(Debug, Clone, Copy)]
pub enum SlotCall<'a, S> {
    /// GLS: `G ← guide_matrix(D)`.
    GuideMatrix,
    /// ACO slot 1: `(H, P) ← initialize(I)`.
    AcoInitialize,
    /// ACO slot 2: `W ← compute_probabilities(H, P, t, T)`.
    AcoProbabilities { heuristic: &'a Matrix<S>, pheromone: &'a Matrix<S>, iteration: usize, horizon: usize },
    /// ACO slot 3: `P ← update_pheromone(P, solutions, costs, t, T)`. Each
    /// solution is its list of traversed components `(i, j)`.
    AcoUpdate {
        pheromone: &'a Matrix<S>,
        solutions: &'a [Vec<(usize, usize)>],
        costs: &'a [S],
        iteration: usize,
        horizon: usize,
    },
    /// DR slot 1: the full score matrix.
    DrEdgeScores,
    /// DR slot 2: badness of each listed element of the solution (tour
    /// positions for TSP, sequence positions of customers for CVRP, item
    /// indices for BPP).
    DrBadness { partial: DrView<'a>, elements: &'a [usize] },
    /// DR slot 3: where to reinsert `element` into `partial`.
    DrInsertPosition { element: usize, partial: DrView<'a> },
}

impl<S> SlotCall<'_, S> {
    pub fn name(&self) -> &'static str {
        match self {
            SlotCall::GuideMatrix => "guide_matrix",
            SlotCall::AcoInitialize => "initialize",
            SlotCall::AcoProbabilities { .. } => "compute_probabilities",
            SlotCall::AcoUpdate { .. } => "update_pheromone",
            SlotCall::DrEdgeScores => "edge_score",
            SlotCall::DrBadness { .. } => "badness",
            SlotCall::DrInsertPosition { .. } => "insert_position",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotOutput<S> {
    Matrix(Matrix<S>),
    MatrixPair(Matrix<S>, Matrix<S>),
    Vector(Vec<S>),
    Index(usize),
}

impl<S: Scalar> SlotOutput<S> {
    fn kind(&self) -> &'static str {
        match self {
            SlotOutput::Matrix(_) => "matrix",
            SlotOutput::MatrixPair(..) => "matrix pair",
            SlotOutput::Vector(_) => "vector",
            SlotOutput::Index(_) => "index",
        }
    }

    pub fn into_matrix(self, rows: usize, cols: usize) -> Result<Matrix<S>, StrategyError> {
        match self {
            SlotOutput::Matrix(m) => check_matrix(m, rows, cols),
            other => Err(StrategyError::InvalidOutput(format!("expected a matrix, got a {}", other.kind()))),
        }
    }

    pub fn into_pair(self, rows: usize, cols: usize) -> Result<(Matrix<S>, Matrix<S>), StrategyError> {
        match self {
            SlotOutput::MatrixPair(a, b) => Ok((check_matrix(a, rows, cols)?, check_matrix(b, rows, cols)?)),
            other => Err(StrategyError::InvalidOutput(format!("expected two matrices, got a {}", other.kind()))),
        }
    }

    pub fn into_vector(self, len: usize) -> Result<Vec<S>, StrategyError> {
        match self {
            SlotOutput::Vector(v) if v.len() == len => {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(v)
                } else {
                    Err(StrategyError::InvalidOutput("vector has non-finite entries".into()))
                }
            }
            SlotOutput::Vector(v) => {
                Err(StrategyError::InvalidOutput(format!("vector has length {}, expected {len}", v.len())))
            }
            other => Err(StrategyError::InvalidOutput(format!("expected a vector, got a {}", other.kind()))),
        }
    }

    pub fn into_index(self) -> Result<usize, StrategyError> {
        match self {
            SlotOutput::Index(i) => Ok(i),
            other => Err(StrategyError::InvalidOutput(format!("expected an index, got a {}", other.kind()))),
        }
    }
}

fn check_matrix<S: Scalar>(m: Matrix<S>, rows: usize, cols: usize) -> Result<Matrix<S>, StrategyError> {
    if m.shape() != (rows, cols) {
        return Err(StrategyError::InvalidOutput(format!(
            "matrix has shape {:?}, expected ({rows}, {cols})",
            m.shape()
        )));
    }
    if !m.all_finite() {
        return Err(StrategyError::InvalidOutput("matrix has non-finite entries".into()));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum StrategyError {
    #[error("compile error: {0}")]
    Compile(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("timeout: {0}")]
    Timeout(String),
    #[error("invalid output: {0}")]
    InvalidOutput(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Serves strategy callbacks for solver runs.
pub trait StrategyExecutor<S> {
    /// Compile-checks an implementation before any call.
    fn load(&mut self, imp: &StrategyImpl) -> Result<(), StrategyError>;

    fn call(&mut self, imp: &StrategyImpl, instance: &Instance<S>, call: SlotCall<'_, S>) -> Result<SlotOutput<S>, StrategyError>;

    /// Called once before evaluating a new candidate set.
    fn begin_candidate(&mut self) {}
}

/// Serves native baselines only.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeExecutor;

impl<S: Scalar> StrategyExecutor<S> for NativeExecutor {
    fn load(&mut self, imp: &StrategyImpl) -> Result<(), StrategyError> {
        match imp.kind {
            ImplKind::Native => Ok(()),
            ImplKind::External { .. } => Err(StrategyError::Compile("native executor cannot run source strategies".into())),
        }
    }

    fn call(&mut self, imp: &StrategyImpl, instance: &Instance<S>, call: SlotCall<'_, S>) -> Result<SlotOutput<S>, StrategyError> {
        StrategyExecutor::<S>::load(self, imp)?;
        native_call(imp.slot, instance, call)
    }
}

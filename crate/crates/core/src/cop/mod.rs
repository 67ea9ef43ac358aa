//! Combinatorial optimization domains under a single minimize-cost
//! convention: maximization objectives (MKP, OP) are negated.

mod dataset;
mod feasibility;
mod generate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::Scalar;

pub use dataset::{Dataset, DatasetError, DatasetId, DatasetRole};
pub use feasibility::{FeasibilityReport, Violation};
pub use generate::{generate_instance, op_budget, MKP_KNAPSACKS};

/// Absolute tolerance for real-valued capacity and budget checks.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Tsp,
    Cvrp,
    Mkp,
    Op,
    Bpp,
}

impl Domain {
    pub const ALL: [Domain; 5] = [Domain::Tsp, Domain::Cvrp, Domain::Mkp, Domain::Op, Domain::Bpp];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Tsp => "tsp",
            Domain::Cvrp => "cvrp",
            Domain::Mkp => "mkp",
            Domain::Op => "op",
            Domain::Bpp => "bpp",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Domain::Tsp => "Traveling Salesman Problem",
            Domain::Cvrp => "Capacitated Vehicle Routing Problem",
            Domain::Mkp => "Multiple Knapsack Problem",
            Domain::Op => "Orienteering Problem",
            Domain::Bpp => "Bin Packing Problem",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = CopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsp" => Ok(Domain::Tsp),
            "cvrp" => Ok(Domain::Cvrp),
            "mkp" => Ok(Domain::Mkp),
            "op" => Ok(Domain::Op),
            "bpp" => Ok(Domain::Bpp),
            other => Err(CopError::UnknownDomain(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CopError {
    #[error("unknown domain tag `{0}`")]
    UnknownDomain(String),
    #[error("instance size {0} is below the minimum of 2")]
    SizeTooSmall(usize),
    #[error("solution shape does not match the {domain} instance: {detail}")]
    ShapeMismatch { domain: Domain, detail: String },
    #[error("infeasible solution: {0}")]
    Infeasible(Violation),
}

/// Domain-specific instance payload.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceData<S> {
    /// `n` cities.
    Tsp { coords: Vec<[S; 2]>, distances: Matrix<S> },
    /// Node 0 is the depot; nodes `1..=n` are customers. `demands[0] == 0`.
    Cvrp { coords: Vec<[S; 2]>, distances: Matrix<S>, demands: Vec<S>, capacity: S },
    /// `weights` is knapsack × item; an item placed in knapsack `i` weighs `weights[(i, j)]`.
    Mkp { prizes: Vec<S>, weights: Matrix<S>, capacities: Vec<S> },
    /// Node 0 is the depot the path starts from.
    Op { coords: Vec<[S; 2]>, distances: Matrix<S>, prizes: Vec<S>, budget: S },
    Bpp { sizes: Vec<S>, capacity: S },
}

/// One problem datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub size: usize,
    pub seed: u64,
    pub data: InstanceData<S>,
}

impl<S: Scalar> Instance<S> {
    pub fn domain(&self) -> Domain {
        match self.data {
            InstanceData::Tsp { .. } => Domain::Tsp,
            InstanceData::Cvrp { .. } => Domain::Cvrp,
            InstanceData::Mkp { .. } => Domain::Mkp,
            InstanceData::Op { .. } => Domain::Op,
            InstanceData::Bpp { .. } => Domain::Bpp,
        }
    }

    pub fn distances(&self) -> Option<&Matrix<S>> {
        match &self.data {
            InstanceData::Tsp { distances, .. }
            | InstanceData::Cvrp { distances, .. }
            | InstanceData::Op { distances, .. } => Some(distances),
            _ => None,
        }
    }

    pub fn coords(&self) -> Option<&[[S; 2]]> {
        match &self.data {
            InstanceData::Tsp { coords, .. }
            | InstanceData::Cvrp { coords, .. }
            | InstanceData::Op { coords, .. } => Some(coords),
            _ => None,
        }
    }

    /// Number of graph nodes (cities, depot plus customers, or items).
    pub fn node_count(&self) -> usize {
        match &self.data {
            InstanceData::Tsp { coords, .. }
            | InstanceData::Cvrp { coords, .. }
            | InstanceData::Op { coords, .. } => coords.len(),
            InstanceData::Mkp { prizes, .. } => prizes.len(),
            InstanceData::Bpp { sizes, .. } => sizes.len(),
        }
    }

    /// Builds a TSP instance from explicit coordinates.
    pub fn tsp_from_coords(coords: Vec<[S; 2]>, seed: u64) -> Self {
        let distances = euclidean_matrix(&coords);
        Self { size: coords.len(), seed, data: InstanceData::Tsp { coords, distances } }
    }

    /// Objective value of a feasible solution; lower is better.
    pub fn evaluate_solution(&self, solution: &Solution) -> Result<S, CopError> {
        let report = self.validate_solution(solution)?;
        if let Some(first) = report.violations.into_iter().next() {
            return Err(CopError::Infeasible(first));
        }
        Ok(self.raw_cost(solution))
    }

    /// Objective value without any feasibility check. Shapes must match.
    pub(crate) fn raw_cost(&self, solution: &Solution) -> S {
        match (&self.data, solution) {
            (InstanceData::Tsp { distances, .. }, Solution::Tour(tour)) => tour_length(distances, tour),
            (InstanceData::Cvrp { distances, .. }, Solution::Routes(routes)) => {
                routes.iter().map(|r| route_length(distances, r)).sum()
            }
            (InstanceData::Mkp { prizes, .. }, Solution::Assignment(assign)) => {
                let profit: S = assign
                    .iter()
                    .zip(prizes)
                    .filter(|(a, _)| a.is_some())
                    .map(|(_, &p)| p)
                    .sum();
                -profit
            }
            (InstanceData::Op { prizes, .. }, Solution::Path(path)) => {
                let prize: S = path.iter().map(|&i| prizes[i]).sum();
                -prize
            }
            (InstanceData::Bpp { .. }, Solution::Bins(bins)) => {
                let mut used: Vec<usize> = bins.clone();
                used.sort_unstable();
                used.dedup();
                S::from_usize_lossy(used.len())
            }
            _ => S::nan(),
        }
    }
}

/// Domain-specific solution payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solution {
    /// Permutation of all cities; the closing edge back to the first city is implied.
    Tour(Vec<usize>),
    /// Customer sequences; each route starts and ends at the depot implicitly.
    Routes(Vec<Vec<usize>>),
    /// Item → knapsack, `None` when the item is left out.
    Assignment(Vec<Option<usize>>),
    /// Node sequence starting at the depot; open-ended.
    Path(Vec<usize>),
    /// Item → bin label; the number of distinct labels is the cost.
    Bins(Vec<usize>),
}

pub fn euclidean_matrix<S: Scalar>(coords: &[[S; 2]]) -> Matrix<S> {
    let n = coords.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let d = (dx * dx + dy * dy).sqrt();
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    m
}

/// Closed tour length including the edge back to the start.
pub fn tour_length<S: Scalar>(d: &Matrix<S>, tour: &[usize]) -> S {
    let n = tour.len();
    if n < 2 {
        return S::zero();
    }
    let mut total = S::zero();
    for k in 0..n {
        total = total + d.get(tour[k], tour[(k + 1) % n]);
    }
    total
}

/// Depot → customers → depot length.
pub fn route_length<S: Scalar>(d: &Matrix<S>, route: &[usize]) -> S {
    if route.is_empty() {
        return S::zero();
    }
    let mut total = d.get(0, route[0]);
    for w in route.windows(2) {
        total = total + d.get(w[0], w[1]);
    }
    total + d.get(route[route.len() - 1], 0)
}

/// Open path length.
pub fn path_length<S: Scalar>(d: &Matrix<S>, path: &[usize]) -> S {
    path.windows(2).map(|w| d.get(w[0], w[1])).sum()
}

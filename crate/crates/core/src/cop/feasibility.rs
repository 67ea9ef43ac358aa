use std::fmt;

use serde::{Deserialize, Serialize};

use super::{path_length, CopError, Instance, InstanceData, Solution, FEASIBILITY_TOLERANCE};
use crate::Scalar;

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// A node that must appear exactly once appears `count` times.
    Coverage { node: usize, count: usize },
    /// A referenced node, item, knapsack or depot index is outside the instance.
    OutOfRange { index: usize },
    /// A CVRP route carries more demand than the vehicle capacity.
    RouteCapacity { route: usize, load: f64, capacity: f64 },
    /// A knapsack holds more weight than its capacity.
    KnapsackCapacity { knapsack: usize, load: f64, capacity: f64 },
    /// A bin holds more than the bin capacity.
    BinCapacity { bin: usize, load: f64, capacity: f64 },
    /// An OP path is longer than the travel budget.
    Budget { length: f64, budget: f64 },
    /// An OP path must start at the depot.
    Start { found: Option<usize> },
    /// The depot appears inside a CVRP route, or an empty route was listed.
    MalformedRoute { route: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Coverage { node, count } => write!(f, "node {node} visited {count} times (expected exactly once)"),
            Violation::OutOfRange { index } => write!(f, "index {index} is out of range"),
            Violation::RouteCapacity { route, load, capacity } => {
                write!(f, "route {route} carries demand {load} above capacity {capacity}")
            }
            Violation::KnapsackCapacity { knapsack, load, capacity } => {
                write!(f, "knapsack {knapsack} holds weight {load} above capacity {capacity}")
            }
            Violation::BinCapacity { bin, load, capacity } => write!(f, "bin {bin} holds {load} above capacity {capacity}"),
            Violation::Budget { length, budget } => write!(f, "path length {length} exceeds budget {budget}"),
            Violation::Start { found } => match found {
                Some(n) => write!(f, "path starts at node {n} instead of the depot"),
                None => write!(f, "path is empty; it must start at the depot"),
            },
            Violation::MalformedRoute { route } => write!(f, "route {route} is empty or contains the depot"),
        }
    }
}

/// Every violated constraint; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn exceeds<S: Scalar>(load: S, limit: S) -> bool {
    load > limit + S::lit(FEASIBILITY_TOLERANCE)
}

fn coverage(counts: &[usize], skip: usize, out: &mut Vec<Violation>) {
    for (node, &count) in counts.iter().enumerate().skip(skip) {
        if count != 1 {
            out.push(Violation::Coverage { node, count });
        }
    }
}

impl<S: Scalar> Instance<S> {
    pub fn validate_solution(&self, solution: &Solution) -> Result<FeasibilityReport, CopError> {
        let mismatch = |detail: &str| CopError::ShapeMismatch { domain: self.domain(), detail: detail.to_string() };
        let mut v = Vec::new();
        match (&self.data, solution) {
            (InstanceData::Tsp { coords, .. }, Solution::Tour(tour)) => {
                let n = coords.len();
                let mut counts = vec![0usize; n];
                for &c in tour {
                    if c >= n {
                        v.push(Violation::OutOfRange { index: c });
                    } else {
                        counts[c] += 1;
                    }
                }
                coverage(&counts, 0, &mut v);
            }
            (InstanceData::Cvrp { coords, distances: _, demands, capacity }, Solution::Routes(routes)) => {
                let n = coords.len();
                let mut counts = vec![0usize; n];
                for (r, route) in routes.iter().enumerate() {
                    if route.is_empty() {
                        v.push(Violation::MalformedRoute { route: r });
                    }
                    let mut load = S::zero();
                    for &c in route {
                        if c >= n {
                            v.push(Violation::OutOfRange { index: c });
                        } else if c == 0 {
                            v.push(Violation::MalformedRoute { route: r });
                        } else {
                            counts[c] += 1;
                            load = load + demands[c];
                        }
                    }
                    if exceeds(load, *capacity) {
                        v.push(Violation::RouteCapacity { route: r, load: load.as_f64(), capacity: capacity.as_f64() });
                    }
                }
                coverage(&counts, 1, &mut v);
            }
            (InstanceData::Mkp { prizes, weights, capacities }, Solution::Assignment(assign)) => {
                if assign.len() != prizes.len() {
                    return Err(mismatch("assignment length differs from the item count"));
                }
                let mut loads = vec![S::zero(); capacities.len()];
                for (item, slot) in assign.iter().enumerate() {
                    if let Some(k) = *slot {
                        if k >= capacities.len() {
                            v.push(Violation::OutOfRange { index: k });
                        } else {
                            loads[k] = loads[k] + weights.get(k, item);
                        }
                    }
                }
                for (k, (&load, &cap)) in loads.iter().zip(capacities).enumerate() {
                    if exceeds(load, cap) {
                        v.push(Violation::KnapsackCapacity { knapsack: k, load: load.as_f64(), capacity: cap.as_f64() });
                    }
                }
            }
            (InstanceData::Op { coords, distances, budget, .. }, Solution::Path(path)) => {
                let n = coords.len();
                match path.first() {
                    Some(0) => {}
                    other => v.push(Violation::Start { found: other.copied() }),
                }
                let mut counts = vec![0usize; n];
                let mut in_range = true;
                for &c in path {
                    if c >= n {
                        v.push(Violation::OutOfRange { index: c });
                        in_range = false;
                    } else {
                        counts[c] += 1;
                    }
                }
                for (node, &count) in counts.iter().enumerate() {
                    if count > 1 {
                        v.push(Violation::Coverage { node, count });
                    }
                }
                if in_range {
                    let length = path_length(distances, path);
                    if exceeds(length, *budget) {
                        v.push(Violation::Budget { length: length.as_f64(), budget: budget.as_f64() });
                    }
                }
            }
            (InstanceData::Bpp { sizes, capacity }, Solution::Bins(bins)) => {
                if bins.len() != sizes.len() {
                    return Err(mismatch("bin assignment length differs from the item count"));
                }
                let mut loads: std::collections::BTreeMap<usize, S> = Default::default();
                for (item, &b) in bins.iter().enumerate() {
                    let e = loads.entry(b).or_insert_with(S::zero);
                    *e = *e + sizes[item];
                }
                for (b, load) in loads {
                    if exceeds(load, *capacity) {
                        v.push(Violation::BinCapacity { bin: b, load: load.as_f64(), capacity: capacity.as_f64() });
                    }
                }
            }
            _ => return Err(mismatch("payload kind belongs to another domain")),
        }
        Ok(FeasibilityReport { violations: v })
    }
}

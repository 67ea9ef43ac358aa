//! Native baseline strategies. Each mirrors, operation for operation, the
//! Python transliteration shipped for the same slot so that both produce
//! bit-equal floats.

use super::{DrView, Framework, SlotCall, SlotId, SlotOutput, StrategyError};
use crate::cop::{Instance, InstanceData};
use crate::matrix::Matrix;
use crate::Scalar;

const TINY: f64 = 1e-10;
const EVAPORATION: f64 = 0.9;

fn mismatch(slot: SlotId, call: &str) -> StrategyError {
    StrategyError::Runtime(format!("slot {slot} has no native `{call}` callback for this domain"))
}

/// Evaluates the native baseline of `slot` for one callback.
pub fn native_call<S: Scalar>(slot: SlotId, inst: &Instance<S>, call: SlotCall<'_, S>) -> Result<SlotOutput<S>, StrategyError> {
    match (slot.framework, slot.index, call) {
        (Framework::Gls, 1, SlotCall::GuideMatrix) => match &inst.data {
            InstanceData::Tsp { distances, .. } => Ok(SlotOutput::Matrix(distances.clone())),
            _ => Err(mismatch(slot, "guide_matrix")),
        },
        (Framework::Aco, 1, SlotCall::AcoInitialize) => aco_initialize(inst).map(|(h, p)| SlotOutput::MatrixPair(h, p)),
        (Framework::Aco, 2, SlotCall::AcoProbabilities { heuristic, pheromone, .. }) => {
            Ok(SlotOutput::Matrix(default_probabilities(heuristic, pheromone)))
        }
        (Framework::Aco, 3, SlotCall::AcoUpdate { pheromone, solutions, costs, .. }) => {
            aco_update(inst, pheromone, solutions, costs).map(SlotOutput::Matrix)
        }
        (Framework::Dr, 1, SlotCall::DrEdgeScores) => dr_edge_scores(inst).map(SlotOutput::Matrix),
        (Framework::Dr, 2, SlotCall::DrBadness { partial, elements }) => {
            dr_badness(inst, partial, elements).map(SlotOutput::Vector)
        }
        (Framework::Dr, 3, SlotCall::DrInsertPosition { element, partial }) => {
            dr_insert(inst, element, partial).map(SlotOutput::Index)
        }
        (_, _, call) => Err(mismatch(slot, call.name())),
    }
}

/// `W = H² · P`, elementwise.
pub(crate) fn default_probabilities<S: Scalar>(h: &Matrix<S>, p: &Matrix<S>) -> Matrix<S> {
    Matrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * h[(i, j)] * p[(i, j)])
}

fn inverse_distance<S: Scalar>(d: &Matrix<S>) -> Matrix<S> {
    let tiny = S::lit(TINY);
    Matrix::from_fn(d.rows(), d.cols(), |i, j| if i == j { S::zero() } else { S::one() / d[(i, j)].max(tiny) })
}

fn aco_initialize<S: Scalar>(inst: &Instance<S>) -> Result<(Matrix<S>, Matrix<S>), StrategyError> {
    let tiny = S::lit(TINY);
    let h = match &inst.data {
        InstanceData::Tsp { distances, .. } | InstanceData::Cvrp { distances, .. } => inverse_distance(distances),
        InstanceData::Op { distances, prizes, .. } => Matrix::from_fn(distances.rows(), distances.cols(), |i, j| {
            if i == j {
                S::zero()
            } else {
                prizes[j] / distances[(i, j)].max(tiny)
            }
        }),
        InstanceData::Mkp { prizes, weights, .. } => {
            Matrix::from_fn(weights.rows(), weights.cols(), |i, j| prizes[j] / weights[(i, j)].max(tiny))
        }
        InstanceData::Bpp { sizes, capacity } => {
            let n = sizes.len();
            Matrix::from_fn(n, n, |_, j| sizes[j] / *capacity)
        }
    };
    let p = Matrix::filled(h.rows(), h.cols(), S::one());
    Ok((h, p))
}

fn aco_update<S: Scalar>(
    inst: &Instance<S>,
    pheromone: &Matrix<S>,
    solutions: &[Vec<(usize, usize)>],
    costs: &[S],
) -> Result<Matrix<S>, StrategyError> {
    let mut p = pheromone.map(|x| x * S::lit(EVAPORATION));
    let (rows, cols) = p.shape();
    let check = |i: usize, j: usize| {
        if i < rows && j < cols {
            Ok(())
        } else {
            Err(StrategyError::Runtime(format!("component ({i}, {j}) out of range")))
        }
    };
    for (components, &cost) in solutions.iter().zip(costs) {
        match &inst.data {
            InstanceData::Tsp { .. } | InstanceData::Cvrp { .. } | InstanceData::Bpp { .. } => {
                let deposit = S::one() / cost;
                for &(i, j) in components {
                    check(i, j)?;
                    check(j, i)?;
                    p[(i, j)] = p[(i, j)] + deposit;
                    p[(j, i)] = p[(j, i)] + deposit;
                }
            }
            InstanceData::Op { .. } => {
                for &(i, j) in components {
                    check(i, j)?;
                    check(j, i)?;
                    p[(i, j)] = p[(i, j)] - cost;
                    p[(j, i)] = p[(j, i)] - cost;
                }
            }
            InstanceData::Mkp { .. } => {
                for &(i, j) in components {
                    check(i, j)?;
                    p[(i, j)] = p[(i, j)] - cost;
                }
            }
        }
    }
    Ok(p)
}

fn dr_edge_scores<S: Scalar>(inst: &Instance<S>) -> Result<Matrix<S>, StrategyError> {
    match &inst.data {
        InstanceData::Tsp { distances, .. } | InstanceData::Cvrp { distances, .. } => Ok(distances.map(|x| -x)),
        InstanceData::Bpp { sizes, capacity } => {
            let n = sizes.len();
            Ok(Matrix::from_fn(n, n, |_, j| sizes[j] / *capacity))
        }
        _ => Err(StrategyError::Runtime("edge_score is defined for tsp, cvrp and bpp".into())),
    }
}

fn out_of_range(what: &str, i: usize) -> StrategyError {
    StrategyError::Runtime(format!("{what} {i} is out of range"))
}

fn dr_badness<S: Scalar>(inst: &Instance<S>, partial: DrView<'_>, elements: &[usize]) -> Result<Vec<S>, StrategyError> {
    match (&inst.data, partial) {
        (InstanceData::Tsp { distances: d, .. }, DrView::Sequence(tour)) => {
            let n = tour.len();
            elements
                .iter()
                .map(|&pos| {
                    if pos >= n {
                        return Err(out_of_range("tour position", pos));
                    }
                    let prev = tour[(pos + n - 1) % n];
                    let next = tour[(pos + 1) % n];
                    let c = tour[pos];
                    Ok(d[(prev, c)] + d[(c, next)])
                })
                .collect()
        }
        (InstanceData::Cvrp { distances: d, .. }, DrView::Sequence(seq)) => elements
            .iter()
            .map(|&pos| {
                if pos == 0 || pos + 1 >= seq.len() {
                    return Err(out_of_range("sequence position", pos));
                }
                let c = seq[pos];
                Ok(d[(seq[pos - 1], c)] + d[(c, seq[pos + 1])])
            })
            .collect(),
        (InstanceData::Bpp { sizes, capacity }, DrView::Bins(bins)) => elements
            .iter()
            .map(|&item| {
                let bin = bins.iter().find(|b| b.contains(&item)).ok_or_else(|| out_of_range("item", item))?;
                let load: S = bin.iter().map(|&k| sizes[k]).sum();
                Ok((*capacity - load) / *capacity)
            })
            .collect(),
        _ => Err(StrategyError::Runtime("badness called with a view of the wrong shape".into())),
    }
}

/// Position-coded CVRP route load for an insertion at `p` (between
/// `seq[p-1]` and `seq[p]`).
pub(crate) fn route_load_at<S: Scalar>(seq: &[usize], p: usize, demands: &[S]) -> S {
    let mut load = S::zero();
    let mut k = p;
    while k > 0 && seq[k - 1] != 0 {
        load = load + demands[seq[k - 1]];
        k -= 1;
    }
    let mut k = p;
    while k < seq.len() && seq[k] != 0 {
        load = load + demands[seq[k]];
        k += 1;
    }
    load
}

fn dr_insert<S: Scalar>(inst: &Instance<S>, element: usize, partial: DrView<'_>) -> Result<usize, StrategyError> {
    let tol = S::lit(crate::cop::FEASIBILITY_TOLERANCE);
    match (&inst.data, partial) {
        (InstanceData::Tsp { distances: d, .. }, DrView::Sequence(tour)) => {
            let n = tour.len();
            if element >= d.rows() {
                return Err(out_of_range("city", element));
            }
            if n == 0 {
                return Ok(0);
            }
            let mut best = 0;
            let mut best_delta = S::infinity();
            for p in 0..=n {
                let a = tour[(p + n - 1) % n];
                let b = tour[p % n];
                let delta = d[(a, element)] + d[(element, b)] - d[(a, b)];
                if delta < best_delta {
                    best = p;
                    best_delta = delta;
                }
            }
            Ok(best)
        }
        (InstanceData::Cvrp { distances: d, demands, capacity, .. }, DrView::Sequence(seq)) => {
            if element == 0 || element >= d.rows() {
                return Err(out_of_range("customer", element));
            }
            let len = seq.len();
            let mut best = len;
            let mut best_delta = d[(0, element)] + d[(element, 0)];
            for p in 1..len {
                let (a, b) = (seq[p - 1], seq[p]);
                if a == 0 && b == 0 {
                    continue;
                }
                if route_load_at(seq, p, demands) + demands[element] > *capacity + tol {
                    continue;
                }
                let delta = d[(a, element)] + d[(element, b)] - d[(a, b)];
                if delta < best_delta || (delta == best_delta && p < best) {
                    best = p;
                    best_delta = delta;
                }
            }
            Ok(best)
        }
        (InstanceData::Bpp { sizes, capacity }, DrView::Bins(bins)) => {
            if element >= sizes.len() {
                return Err(out_of_range("item", element));
            }
            let mut best = bins.len();
            let mut best_residual = S::infinity();
            for (b, bin) in bins.iter().enumerate() {
                let load: S = bin.iter().map(|&k| sizes[k]).sum();
                let residual = *capacity - load - sizes[element];
                if residual >= -tol && residual < best_residual {
                    best = b;
                    best_residual = residual;
                }
            }
            Ok(best)
        }
        _ => Err(StrategyError::Runtime("insert_position called with a view of the wrong shape".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::euclidean_matrix;

    #[test]
    fn edge_scores_negate_distances() {
        let inst = Instance::tsp_from_coords(vec![[0.0, 0.0], [0.3, 0.4], [1.0, 0.0]], 0);
        let s = native_call(SlotId::new(Framework::Dr, 1), &inst, SlotCall::DrEdgeScores).unwrap();
        let d = inst.distances().unwrap();
        assert_eq!(s, SlotOutput::Matrix(d.map(|x: f64| -x)));
    }

    #[test]
    fn cvrp_insert_respects_capacity() {
        let coords = vec![[0.5, 0.5], [0.0, 0.0], [0.0, 0.1], [1.0, 1.0]];
        let inst = Instance {
            size: 3,
            seed: 0,
            data: InstanceData::Cvrp {
                distances: euclidean_matrix(&coords),
                coords,
                demands: vec![0.0, 8.0, 5.0, 1.0],
                capacity: 10.0,
            },
        };
        let seq = [0, 1, 0, 3, 0];
        let call = SlotCall::DrInsertPosition { element: 2, partial: DrView::Sequence(&seq) };
        let p = native_call(SlotId::new(Framework::Dr, 3), &inst, call).unwrap().into_index().unwrap();
        // Customer 2 sits next to 1, but that route is full, so it joins 3's route or opens its own.
        assert!(p == 3 || p == 4 || p == 5, "{p}");
        assert_ne!(p, 1);
        assert_ne!(p, 2);
    }

    #[test]
    fn bpp_best_fit() {
        let inst = Instance { size: 4, seed: 0, data: InstanceData::Bpp { sizes: vec![100.0, 90.0, 40.0, 50.0], capacity: 150.0 } };
        let bins = vec![vec![0], vec![1]];
        let call = SlotCall::DrInsertPosition { element: 3, partial: DrView::Bins(&bins) };
        assert_eq!(native_call(SlotId::new(Framework::Dr, 3), &inst, call).unwrap(), SlotOutput::Index(0));
        let bins = vec![vec![0, 3]];
        let call = SlotCall::DrInsertPosition { element: 2, partial: DrView::Bins(&bins) };
        assert_eq!(native_call(SlotId::new(Framework::Dr, 3), &inst, call).unwrap(), SlotOutput::Index(1));
    }
}

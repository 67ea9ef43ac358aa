use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::native::default_probabilities;
use super::{slot_descriptor, SlotCall, SolverError, SolverParams, StrategyError, StrategyExecutor, StrategyImpl};
use crate::cop::{Instance, InstanceData, Solution, FEASIBILITY_TOLERANCE};
use crate::matrix::Matrix;
use crate::rng::stream;
use crate::Scalar;

/// Sees the pheromone matrix after every update.
pub trait AcoObserver<S> {
    fn on_iteration(&mut self, iteration: usize, pheromone: &Matrix<S>, best_cost: S);
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoOutcome<S> {
    pub solution: Solution,
    pub cost: S,
    /// Best-so-far cost after each iteration.
    pub history: Vec<S>,
}

struct Ant {
    solution: Solution,
    components: Vec<(usize, usize)>,
}

/// Draws one candidate with probability proportional to its weight; an
/// all-zero weight vector falls back to a uniform draw.
fn sample<S: Scalar>(rng: &mut ChaCha8Rng, candidates: &[usize], weight: impl Fn(usize) -> S) -> Result<usize, StrategyError> {
    let mut ws = Vec::with_capacity(candidates.len());
    let mut total = 0.0;
    for &c in candidates {
        let w = weight(c).as_f64();
        if !w.is_finite() || w < 0.0 {
            return Err(StrategyError::InvalidOutput(format!("transition weight {w} on a feasible move")));
        }
        total += w;
        ws.push(w);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Ok(candidates[rng.random_range(0..candidates.len())]);
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in ws.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(candidates[k]);
        }
    }
    Ok(*candidates.iter().zip(&ws).rev().find(|(_, &w)| w > 0.0).map(|(c, _)| c).unwrap_or(&candidates[0]))
}

fn construct<S: Scalar>(inst: &Instance<S>, w: &Matrix<S>, rng: &mut ChaCha8Rng) -> Result<Ant, SolverError> {
    let tol = S::lit(FEASIBILITY_TOLERANCE);
    match &inst.data {
        InstanceData::Tsp { coords, .. } => {
            let n = coords.len();
            let start = rng.random_range(0..n);
            let mut visited = vec![false; n];
            visited[start] = true;
            let mut tour = vec![start];
            let mut cur = start;
            for _ in 1..n {
                let cand: Vec<usize> = (0..n).filter(|&j| !visited[j]).collect();
                let next = sample(rng, &cand, |j| w[(cur, j)])?;
                visited[next] = true;
                tour.push(next);
                cur = next;
            }
            let components = (0..n).map(|k| (tour[k], tour[(k + 1) % n])).collect();
            Ok(Ant { solution: Solution::Tour(tour), components })
        }
        InstanceData::Cvrp { coords, demands, capacity, .. } => {
            let n = coords.len();
            let mut visited = vec![false; n];
            visited[0] = true;
            let mut left = n - 1;
            let mut seq = vec![0];
            let (mut cur, mut load) = (0, S::zero());
            while left > 0 {
                let mut cand: Vec<usize> =
                    (1..n).filter(|&j| !visited[j] && load + demands[j] <= *capacity + tol).collect();
                if cur != 0 {
                    cand.push(0);
                }
                if cand.is_empty() {
                    return Err(StrategyError::Runtime("a customer's demand exceeds the vehicle capacity".into()).into());
                }
                let next = sample(rng, &cand, |j| w[(cur, j)])?;
                seq.push(next);
                if next == 0 {
                    load = S::zero();
                } else {
                    visited[next] = true;
                    left -= 1;
                    load = load + demands[next];
                }
                cur = next;
            }
            if cur != 0 {
                seq.push(0);
            }
            let components = seq.windows(2).map(|p| (p[0], p[1])).collect();
            let routes = seq.split(|&c| c == 0).filter(|r| !r.is_empty()).map(<[usize]>::to_vec).collect();
            Ok(Ant { solution: Solution::Routes(routes), components })
        }
        InstanceData::Mkp { prizes, weights, capacities } => {
            let (m, n) = (capacities.len(), prizes.len());
            let mut assign = vec![None; n];
            let mut loads = vec![S::zero(); m];
            let mut components = Vec::new();
            loop {
                let cand: Vec<usize> = (0..m * n)
                    .filter(|&c| {
                        let (i, j) = (c / n, c % n);
                        assign[j].is_none() && loads[i] + weights[(i, j)] <= capacities[i] + tol
                    })
                    .collect();
                if cand.is_empty() {
                    break;
                }
                let c = sample(rng, &cand, |c| w[(c / n, c % n)])?;
                let (i, j) = (c / n, c % n);
                assign[j] = Some(i);
                loads[i] = loads[i] + weights[(i, j)];
                components.push((i, j));
            }
            Ok(Ant { solution: Solution::Assignment(assign), components })
        }
        InstanceData::Op { coords, distances, budget, .. } => {
            let n = coords.len();
            let mut visited = vec![false; n];
            visited[0] = true;
            let mut path = vec![0];
            let (mut cur, mut length) = (0, S::zero());
            loop {
                let cand: Vec<usize> =
                    (0..n).filter(|&j| !visited[j] && length + distances[(cur, j)] <= *budget + tol).collect();
                if cand.is_empty() {
                    break;
                }
                let next = sample(rng, &cand, |j| w[(cur, j)])?;
                visited[next] = true;
                length = length + distances[(cur, next)];
                path.push(next);
                cur = next;
            }
            let components = path.windows(2).map(|p| (p[0], p[1])).collect();
            Ok(Ant { solution: Solution::Path(path), components })
        }
        InstanceData::Bpp { sizes, capacity } => {
            let n = sizes.len();
            let mut packed = vec![false; n];
            let mut labels = vec![0; n];
            let mut components = Vec::new();
            let mut bins = 0;
            let mut left = n;
            while left > 0 {
                let mut first = usize::MAX;
                for j in 0..n {
                    if !packed[j] && (first == usize::MAX || sizes[j] > sizes[first]) {
                        first = j;
                    }
                }
                packed[first] = true;
                labels[first] = bins;
                left -= 1;
                let (mut last, mut load) = (first, sizes[first]);
                loop {
                    let cand: Vec<usize> = (0..n).filter(|&j| !packed[j] && load + sizes[j] <= *capacity + tol).collect();
                    if cand.is_empty() {
                        break;
                    }
                    let next = sample(rng, &cand, |j| w[(last, j)])?;
                    packed[next] = true;
                    labels[next] = bins;
                    left -= 1;
                    load = load + sizes[next];
                    components.push((last, next));
                    last = next;
                }
                bins += 1;
            }
            Ok(Ant { solution: Solution::Bins(labels), components })
        }
    }
}

/// Shape of the heuristic and pheromone matrices for `inst`.
fn trail_shape<S: Scalar>(inst: &Instance<S>) -> (usize, usize) {
    match &inst.data {
        InstanceData::Mkp { weights, .. } => weights.shape(),
        _ => (inst.node_count(), inst.node_count()),
    }
}

pub fn run_aco<S: Scalar>(
    inst: &Instance<S>,
    strategies: [&StrategyImpl; 3],
    params: &SolverParams,
    exec: &mut dyn StrategyExecutor<S>,
    mut observer: Option<&mut dyn AcoObserver<S>>,
) -> Result<AcoOutcome<S>, SolverError> {
    if params.aco_ants == 0 || params.aco_iterations == 0 {
        return Err(SolverError::EmptyColony);
    }
    let [init, probs, update] = strategies;
    let probs_searchable = slot_descriptor(probs.slot, inst.domain())?.searchable;
    exec.load(init)?;
    if probs_searchable {
        exec.load(probs)?;
    }
    exec.load(update)?;

    let (rows, cols) = trail_shape(inst);
    let (h, mut p) = exec.call(init, inst, SlotCall::AcoInitialize)?.into_pair(rows, cols)?;
    let mut rng = stream(params.seed);
    let horizon = params.aco_iterations;
    let mut best: Option<(Solution, S)> = None;
    let mut history = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let w = if probs_searchable {
            let call = SlotCall::AcoProbabilities { heuristic: &h, pheromone: &p, iteration: t, horizon };
            exec.call(probs, inst, call)?.into_matrix(rows, cols)?
        } else {
            default_probabilities(&h, &p)
        };
        let mut solutions = Vec::with_capacity(params.aco_ants);
        let mut costs = Vec::with_capacity(params.aco_ants);
        for _ in 0..params.aco_ants {
            let ant = construct(inst, &w, &mut rng)?;
            let cost = inst.raw_cost(&ant.solution);
            debug_assert!(inst.evaluate_solution(&ant.solution).is_ok());
            if best.as_ref().is_none_or(|(_, b)| cost < *b) {
                best = Some((ant.solution.clone(), cost));
            }
            solutions.push(ant.components);
            costs.push(cost);
        }
        let call = SlotCall::AcoUpdate { pheromone: &p, solutions: &solutions, costs: &costs, iteration: t, horizon };
        p = exec.call(update, inst, call)?.into_matrix(rows, cols)?;
        let best_cost = best.as_ref().map(|(_, c)| *c).expect("at least one ant ran");
        history.push(best_cost);
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_iteration(t, &p, best_cost);
        }
    }
    let (solution, cost) = best.expect("at least one ant ran");
    Ok(AcoOutcome { solution, cost, history })
}

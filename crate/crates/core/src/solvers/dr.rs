use super::native::route_load_at;
use super::{DrView, SlotCall, SolverError, SolverParams, StrategyError, StrategyExecutor, StrategyImpl};
use crate::cop::{CopError, Instance, InstanceData, Solution, FEASIBILITY_TOLERANCE};
use crate::matrix::Matrix;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DrOutcome<S> {
    /// The better of the greedy and the repaired solution.
    pub solution: Solution,
    pub cost: S,
    pub greedy_cost: S,
    pub repaired_cost: S,
    /// Removed elements in the order they were reinserted.
    pub removed: Vec<usize>,
}

/// `⌈ρ n⌉`, guarded against `ρ n` landing a rounding error above an integer.
pub fn destroy_count(rate: f64, n: usize) -> usize {
    let x = rate * n as f64 - 1e-9;
    if x <= 0.0 {
        0
    } else {
        (x.ceil() as usize).min(n)
    }
}

enum Partial {
    Seq(Vec<usize>),
    Bins(Vec<Vec<usize>>),
}

impl Partial {
    fn view(&self) -> DrView<'_> {
        match self {
            Partial::Seq(s) => DrView::Sequence(s),
            Partial::Bins(b) => DrView::Bins(b),
        }
    }
}

fn argmax_score<S: Scalar>(row: impl Fn(usize) -> S, cand: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for j in cand {
        let s = row(j);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

fn greedy<S: Scalar>(inst: &Instance<S>, score: &Matrix<S>) -> Result<Partial, SolverError> {
    let tol = S::lit(FEASIBILITY_TOLERANCE);
    match &inst.data {
        InstanceData::Tsp { coords, .. } => {
            let n = coords.len();
            let mut visited = vec![false; n];
            visited[0] = true;
            let mut tour = vec![0];
            let mut cur = 0;
            while tour.len() < n {
                let next = argmax_score(|j| score[(cur, j)], (0..n).filter(|&j| !visited[j])).expect("unvisited city");
                visited[next] = true;
                tour.push(next);
                cur = next;
            }
            Ok(Partial::Seq(tour))
        }
        InstanceData::Cvrp { coords, demands, capacity, .. } => {
            let n = coords.len();
            let mut visited = vec![false; n];
            visited[0] = true;
            let mut seq = vec![0];
            let (mut cur, mut load, mut left) = (0, S::zero(), n - 1);
            while left > 0 {
                let feasible = (1..n).filter(|&j| !visited[j] && load + demands[j] <= *capacity + tol);
                match argmax_score(|j| score[(cur, j)], feasible) {
                    Some(j) => {
                        visited[j] = true;
                        seq.push(j);
                        load = load + demands[j];
                        left -= 1;
                        cur = j;
                    }
                    None if cur == 0 => {
                        return Err(StrategyError::Runtime("a customer's demand exceeds the vehicle capacity".into()).into())
                    }
                    None => {
                        seq.push(0);
                        cur = 0;
                        load = S::zero();
                    }
                }
            }
            if cur != 0 {
                seq.push(0);
            }
            Ok(Partial::Seq(seq))
        }
        InstanceData::Bpp { sizes, capacity } => {
            let n = sizes.len();
            let mut packed = vec![false; n];
            let mut bins = Vec::new();
            let mut left = n;
            while left > 0 {
                let mut first = usize::MAX;
                for j in 0..n {
                    if !packed[j] && (first == usize::MAX || sizes[j] > sizes[first]) {
                        first = j;
                    }
                }
                packed[first] = true;
                left -= 1;
                let mut bin = vec![first];
                let (mut last, mut load) = (first, sizes[first]);
                while let Some(j) =
                    argmax_score(|j| score[(last, j)], (0..n).filter(|&j| !packed[j] && load + sizes[j] <= *capacity + tol))
                {
                    packed[j] = true;
                    left -= 1;
                    bin.push(j);
                    load = load + sizes[j];
                    last = j;
                }
                bins.push(bin);
            }
            Ok(Partial::Bins(bins))
        }
        _ => Err(CopError::ShapeMismatch { domain: inst.domain(), detail: "deconstruction-repair runs on tsp, cvrp and bpp".into() }
            .into()),
    }
}

fn to_solution<S: Scalar>(inst: &Instance<S>, partial: &Partial) -> Solution {
    match (partial, &inst.data) {
        (Partial::Seq(seq), InstanceData::Cvrp { .. }) => {
            Solution::Routes(seq.split(|&c| c == 0).filter(|r| !r.is_empty()).map(<[usize]>::to_vec).collect())
        }
        (Partial::Seq(tour), _) => Solution::Tour(tour.clone()),
        (Partial::Bins(bins), _) => {
            let mut labels = vec![0; inst.node_count()];
            for (b, bin) in bins.iter().enumerate() {
                for &i in bin {
                    labels[i] = b;
                }
            }
            Solution::Bins(labels)
        }
    }
}

/// Badness targets: tour positions, customer positions in the sequence, or items.
fn elements<S: Scalar>(inst: &Instance<S>, partial: &Partial) -> Vec<usize> {
    match (partial, &inst.data) {
        (Partial::Seq(seq), InstanceData::Cvrp { .. }) => (0..seq.len()).filter(|&p| seq[p] != 0).collect(),
        (Partial::Seq(tour), _) => (0..tour.len()).collect(),
        (Partial::Bins(_), _) => (0..inst.node_count()).collect(),
    }
}

fn collapse_depots(seq: &mut Vec<usize>) {
    seq.dedup_by(|a, b| *a == 0 && *b == 0);
    if seq.first() != Some(&0) {
        seq.insert(0, 0);
    }
    if seq.len() > 1 && seq.last() != Some(&0) {
        seq.push(0);
    }
}

fn invalid(msg: String) -> SolverError {
    StrategyError::InvalidOutput(msg).into()
}

fn reinsert<S: Scalar>(inst: &Instance<S>, partial: &mut Partial, element: usize, at: usize) -> Result<(), SolverError> {
    let tol = S::lit(FEASIBILITY_TOLERANCE);
    match (partial, &inst.data) {
        (Partial::Seq(seq), InstanceData::Cvrp { demands, capacity, .. }) => {
            let len = seq.len();
            if at == 0 || at > len {
                return Err(invalid(format!("insert position {at} outside [1, {len}]")));
            }
            if at == len {
                if seq.last() != Some(&0) {
                    seq.push(0);
                }
                seq.push(element);
                seq.push(0);
            } else {
                if route_load_at(seq, at, demands) + demands[element] > *capacity + tol {
                    return Err(invalid(format!("inserting customer {element} at {at} exceeds the vehicle capacity")));
                }
                seq.insert(at, element);
            }
        }
        (Partial::Seq(tour), _) => {
            if at > tour.len() {
                return Err(invalid(format!("insert position {at} outside [0, {}]", tour.len())));
            }
            tour.insert(at, element);
        }
        (Partial::Bins(bins), InstanceData::Bpp { sizes, capacity }) => {
            if at > bins.len() {
                return Err(invalid(format!("bin index {at} outside [0, {}]", bins.len())));
            }
            if at == bins.len() {
                bins.push(vec![element]);
            } else {
                let load: S = bins[at].iter().map(|&k| sizes[k]).sum();
                if load + sizes[element] > *capacity + tol {
                    return Err(invalid(format!("item {element} does not fit into bin {at}")));
                }
                bins[at].push(element);
            }
        }
        _ => unreachable!("partial shape follows the domain"),
    }
    Ok(())
}

pub fn run_dr<S: Scalar>(
    inst: &Instance<S>,
    strategies: [&StrategyImpl; 3],
    params: &SolverParams,
    exec: &mut dyn StrategyExecutor<S>,
) -> Result<DrOutcome<S>, SolverError> {
    if !(0.0..1.0).contains(&params.dr_rate) {
        return Err(SolverError::BadRate(params.dr_rate));
    }
    let [edge, badness, insert] = strategies;
    for s in strategies {
        exec.load(s)?;
    }
    let n = inst.node_count();
    let score = exec.call(edge, inst, SlotCall::DrEdgeScores)?.into_matrix(n, n)?;
    let built = greedy(inst, &score)?;
    let greedy_solution = to_solution(inst, &built);
    let greedy_cost = inst.raw_cost(&greedy_solution);

    let elems = elements(inst, &built);
    let bad = exec
        .call(badness, inst, SlotCall::DrBadness { partial: built.view(), elements: &elems })?
        .into_vector(elems.len())?;
    let mut order: Vec<usize> = (0..elems.len()).collect();
    order.sort_by(|&a, &b| bad[b].partial_cmp(&bad[a]).unwrap_or(std::cmp::Ordering::Equal));
    let r = destroy_count(params.dr_rate, elems.len());
    let removed: Vec<usize> = order[..r]
        .iter()
        .map(|&k| match &built {
            Partial::Seq(seq) => seq[elems[k]],
            Partial::Bins(_) => elems[k],
        })
        .collect();

    let mut partial = match &built {
        Partial::Seq(seq) => {
            let mut s: Vec<usize> = seq.iter().copied().filter(|c| !removed.contains(c)).collect();
            if matches!(inst.data, InstanceData::Cvrp { .. }) {
                collapse_depots(&mut s);
            }
            Partial::Seq(s)
        }
        Partial::Bins(bins) => Partial::Bins(
            bins.iter()
                .map(|b| b.iter().copied().filter(|i| !removed.contains(i)).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect(),
        ),
    };
    for &e in &removed {
        let at = exec
            .call(insert, inst, SlotCall::DrInsertPosition { element: e, partial: partial.view() })?
            .into_index()?;
        reinsert(inst, &mut partial, e, at)?;
    }
    let repaired = to_solution(inst, &partial);
    let report = inst.validate_solution(&repaired)?;
    if let Some(v) = report.violations.into_iter().next() {
        return Err(CopError::Infeasible(v).into());
    }
    let repaired_cost = inst.raw_cost(&repaired);
    let (solution, cost) =
        if repaired_cost < greedy_cost { (repaired, repaired_cost) } else { (greedy_solution, greedy_cost) };
    Ok(DrOutcome { solution, cost, greedy_cost, repaired_cost, removed })
}

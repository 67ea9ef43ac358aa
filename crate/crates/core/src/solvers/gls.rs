use super::{local_search, local_search_around, SlotCall, SolverError, SolverParams, StrategyExecutor, StrategyImpl};
use crate::cop::{tour_length, CopError, Domain, Instance};
use crate::matrix::Matrix;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GlsOutcome<S> {
    pub tour: Vec<usize>,
    pub cost: S,
    /// Incumbent cost after the initial descent and after each iteration.
    pub history: Vec<S>,
}

/// Greedy tour from city 0, always moving to the nearest unvisited city
/// (lowest index on ties).
pub fn nearest_neighbor_tour<S: Scalar>(d: &Matrix<S>) -> Vec<usize> {
    let n = d.rows();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut tour = vec![0];
    visited[0] = true;
    let mut cur = 0;
    for _ in 1..n {
        let mut best = usize::MAX;
        for j in 0..n {
            if !visited[j] && (best == usize::MAX || d[(cur, j)] < d[(cur, best)]) {
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

/// `k = 0.1 · c_best / n`.
pub fn penalty_scale<S: Scalar>(c_best: S, n: usize) -> S {
    S::lit(0.1) * c_best / S::from_usize_lossy(n)
}

pub fn run_gls<S: Scalar>(
    inst: &Instance<S>,
    guide: &StrategyImpl,
    params: &SolverParams,
    exec: &mut dyn StrategyExecutor<S>,
) -> Result<GlsOutcome<S>, SolverError> {
    let d = match inst.domain() {
        Domain::Tsp => inst.distances().expect("tsp has distances"),
        other => return Err(CopError::ShapeMismatch { domain: other, detail: "guided local search runs on tsp".into() }.into()),
    };
    let n = d.rows();
    exec.load(guide)?;
    let g = exec.call(guide, inst, SlotCall::GuideMatrix)?.into_matrix(n, n)?;

    let mut penalty: Matrix<S> = Matrix::zeros(n, n);
    let plain = |i: usize, j: usize| d[(i, j)];
    let mut best = nearest_neighbor_tour(d);
    local_search(&plain, &mut best);
    let mut c_best = tour_length(d, &best);
    let k = penalty_scale(c_best, n);
    let mut cur = best.clone();
    let mut history = vec![c_best];

    if n >= 4 {
        for _ in 0..params.gls_iterations {
            for _ in 0..params.gls_moves {
                let mut sel = (0, 0);
                let mut util = S::neg_infinity();
                for p in 0..n {
                    let (i, j) = (cur[p], cur[(p + 1) % n]);
                    let u = g[(i, j)] / (S::one() + penalty[(i, j)]);
                    if p == 0 || u > util {
                        util = u;
                        sel = (i, j);
                    }
                }
                let (i, j) = sel;
                penalty[(i, j)] = penalty[(i, j)] + S::one();
                penalty[(j, i)] = penalty[(j, i)] + S::one();
                let pos_i = cur.iter().position(|&c| c == i).expect("city on tour");
                let pos_j = cur.iter().position(|&c| c == j).expect("city on tour");
                let focus = [cur[(pos_i + n - 1) % n], i, j, cur[(pos_j + 1) % n]];
                let augmented = |a: usize, b: usize| d[(a, b)] + k * penalty[(a, b)];
                local_search_around(&augmented, &mut cur, &focus);
            }
            local_search(&plain, &mut cur);
            let c = tour_length(d, &cur);
            if c < c_best {
                best = cur.clone();
                c_best = c;
            }
            history.push(c_best);
        }
    }
    Ok(GlsOutcome { tour: best, cost: c_best, history })
}

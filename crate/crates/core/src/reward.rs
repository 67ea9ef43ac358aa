//! Reward shaping and bandit selection rules shared by the inner and
//! outer searches. Improvements are percentages throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Baselines with magnitude at or below this are treated as undefined.
pub const BASELINE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams<S> {
    /// Weight of the absolute term against the competitive term.
    pub lambda: S,
    /// Logistic steepness.
    pub k: S,
}

impl<S: Scalar> Default for RewardParams<S> {
    fn default() -> Self {
        Self { lambda: S::lit(0.7), k: S::lit(10.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("baseline cost {0} is too close to zero to measure improvement against")]
    UndefinedBaseline(f64),
}

/// Logistic `1 / (1 + e^{-k x})`, with the failure sentinel `-inf` mapped to 0.
pub fn sigmoid<S: Scalar>(x: S, k: S) -> S {
    if x.is_nan() || x == S::neg_infinity() {
        return S::zero();
    }
    if x == S::infinity() {
        return S::one();
    }
    S::one() / (S::one() + (-k * x).exp())
}

/// Relative improvement of `cost` over `baseline`, in percent. A non-finite
/// cost maps to the `-inf` sentinel.
pub fn improvement<S: Scalar>(baseline: S, cost: S) -> Result<S, RewardError> {
    if !(baseline.abs() > S::lit(BASELINE_FLOOR)) {
        return Err(RewardError::UndefinedBaseline(baseline.as_f64()));
    }
    if !cost.is_finite() {
        return Ok(S::neg_infinity());
    }
    Ok((baseline - cost) / baseline.abs() * S::lit(100.0))
}

/// Node value mixing absolute and competitive gain:
/// `λ σ(I_p) + (1 − λ) σ(I_p − I_opp)`.
pub fn q_value<S: Scalar>(i_p: S, i_opp: S, params: &RewardParams<S>) -> S {
    let abs = sigmoid(i_p, params.k);
    let gap = if i_p == S::neg_infinity() || i_p.is_nan() {
        S::neg_infinity()
    } else if i_opp == S::neg_infinity() || i_opp.is_nan() {
        S::infinity()
    } else {
        i_p - i_opp
    };
    params.lambda * abs + (S::one() - params.lambda) * sigmoid(gap, params.k)
}

/// State potential for the acting player; identical in form to `q_value`,
/// so a transition reward equals the potential of the state it reaches.
pub fn potential<S: Scalar>(i_p: S, i_opp: S, params: &RewardParams<S>) -> S {
    q_value(i_p, i_opp, params)
}

fn argmax<S: Scalar>(scores: impl Iterator<Item = S>) -> usize {
    let mut best = 0;
    let mut best_score = S::neg_infinity();
    for (i, s) in scores.enumerate() {
        if i == 0 || s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Inner selection score `V/(N+ε) + c √(ln(ΣN + 1)/(N+ε))` per arm.
pub fn inner_ucb_scores<S: Scalar>(values: &[S], visits: &[u64], c: S, eps: S) -> Vec<S> {
    let total: u64 = visits.iter().sum();
    let ln_total = S::from_usize_lossy(total as usize + 1).ln();
    values
        .iter()
        .zip(visits)
        .map(|(&v, &n)| {
            let n = S::from_usize_lossy(n as usize) + eps;
            v / n + c * (ln_total / n).sqrt()
        })
        .collect()
}

/// Index of the best inner arm; ties go to the lowest index.
pub fn select_inner<S: Scalar>(values: &[S], visits: &[u64], c: S, eps: S) -> usize {
    argmax(inner_ucb_scores(values, visits, c, eps).into_iter())
}

/// Outer selection score `R/N + c √(ln ΣN / N)`; unvisited arms score `+inf`.
pub fn outer_ucb_scores<S: Scalar>(rewards: &[S], visits: &[u64], c: S) -> Vec<S> {
    let total: u64 = visits.iter().sum();
    let ln_total = S::from_usize_lossy(total as usize).ln();
    rewards
        .iter()
        .zip(visits)
        .map(|(&r, &n)| {
            if n == 0 {
                S::infinity()
            } else {
                let n = S::from_usize_lossy(n as usize);
                r / n + c * (ln_total / n).sqrt()
            }
        })
        .collect()
}

/// Index of the best outer arm; ties go to the lowest index.
pub fn select_outer<S: Scalar>(rewards: &[S], visits: &[u64], c: S) -> usize {
    argmax(outer_ucb_scores(rewards, visits, c).into_iter())
}

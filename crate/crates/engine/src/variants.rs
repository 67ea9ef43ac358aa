//! Alternative strategy implementations with both a Python source and a
//! native twin, so scripted generators can hand the engine real, runnable
//! candidates without a Python runner.

use std::sync::Arc;

use motif_core::cop::Domain;
use motif_core::solvers::{slot_descriptor, DrView, Framework, SlotCall, SlotId, SlotOutput, StrategyError};
use motif_core::{Instance, Matrix};
use serde::{Deserialize, Serialize};

pub type NativeFn = Arc<dyn Fn(&Instance, SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> + Send + Sync>;

pub struct Variant {
    pub name: &'static str,
    pub slot: SlotId,
    pub domains: &'static [Domain],
    pub source: &'static str,
    run: fn(&Instance, SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError>,
}

impl Variant {
    pub fn native(&self) -> NativeFn {
        Arc::new(self.run)
    }
}

macro_rules! src {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/variants/", $name, ".py"))
    };
}

const ALL_ACO: &[Domain] = &[Domain::Tsp, Domain::Cvrp, Domain::Mkp, Domain::Op, Domain::Bpp];

pub static VARIANTS: &[Variant] = &[
    Variant {
        name: "gls_guide_squared",
        slot: SlotId { framework: Framework::Gls, index: 1 },
        domains: &[Domain::Tsp],
        source: src!("gls_guide_squared"),
        run: gls_guide_squared,
    },
    Variant {
        name: "aco_probabilities_sharp",
        slot: SlotId { framework: Framework::Aco, index: 2 },
        domains: ALL_ACO,
        source: src!("aco_probabilities_sharp"),
        run: aco_probabilities_sharp,
    },
    Variant {
        name: "aco_probabilities_trail_heavy",
        slot: SlotId { framework: Framework::Aco, index: 2 },
        domains: ALL_ACO,
        source: src!("aco_probabilities_trail_heavy"),
        run: aco_probabilities_trail_heavy,
    },
    Variant {
        name: "aco_tsp_update_elitist",
        slot: SlotId { framework: Framework::Aco, index: 3 },
        domains: &[Domain::Tsp],
        source: src!("aco_tsp_update_elitist"),
        run: aco_tsp_update_elitist,
    },
    Variant {
        name: "dr_tsp_badness_detour",
        slot: SlotId { framework: Framework::Dr, index: 2 },
        domains: &[Domain::Tsp],
        source: src!("dr_tsp_badness_detour"),
        run: dr_tsp_badness_detour,
    },
    Variant {
        name: "dr_cvrp_badness_detour",
        slot: SlotId { framework: Framework::Dr, index: 2 },
        domains: &[Domain::Cvrp],
        source: src!("dr_cvrp_badness_detour"),
        run: dr_cvrp_badness_detour,
    },
    Variant {
        name: "dr_tsp_insert_nearest",
        slot: SlotId { framework: Framework::Dr, index: 3 },
        domains: &[Domain::Tsp],
        source: src!("dr_tsp_insert_nearest"),
        run: dr_tsp_insert_nearest,
    },
];

pub fn variant(name: &str) -> Option<&'static Variant> {
    VARIANTS.iter().find(|v| v.name == name)
}

fn wrong_call(call: &SlotCall<'_, f64>) -> StrategyError {
    StrategyError::Runtime(format!("unexpected callback {}", call.name()))
}

fn distances(inst: &Instance) -> Result<&Matrix, StrategyError> {
    inst.distances().ok_or_else(|| StrategyError::Runtime("instance has no distance matrix".into()))
}

fn gls_guide_squared(inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::GuideMatrix = call else { return Err(wrong_call(&call)) };
    Ok(SlotOutput::Matrix(distances(inst)?.map(|x| x * x)))
}

fn probabilities(call: SlotCall<'_, f64>, f: impl Fn(f64, f64) -> f64) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::AcoProbabilities { heuristic, pheromone, .. } = call else { return Err(wrong_call(&call)) };
    let (r, c) = heuristic.shape();
    Ok(SlotOutput::Matrix(Matrix::from_fn(r, c, |i, j| f(heuristic[(i, j)], pheromone[(i, j)]))))
}

fn aco_probabilities_sharp(_: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    probabilities(call, |h, p| h * h * h * p)
}

fn aco_probabilities_trail_heavy(_: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    probabilities(call, |h, p| p * p * h * h)
}

fn aco_tsp_update_elitist(_: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::AcoUpdate { pheromone, solutions, costs, .. } = call else { return Err(wrong_call(&call)) };
    let mut p = pheromone.map(|x| x * 0.8);
    let mut best = 0;
    for k in 1..costs.len() {
        if costs[k] < costs[best] {
            best = k;
        }
    }
    for (components, &cost) in solutions.iter().zip(costs) {
        let deposit = 1.0 / cost;
        for &(i, j) in components {
            p[(i, j)] += deposit;
            p[(j, i)] += deposit;
        }
    }
    let bonus = 2.0 / costs[best];
    for &(i, j) in &solutions[best] {
        p[(i, j)] += bonus;
        p[(j, i)] += bonus;
    }
    Ok(SlotOutput::Matrix(p))
}

fn dr_tsp_badness_detour(inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::DrBadness { partial: DrView::Sequence(tour), elements } = call else { return Err(wrong_call(&call)) };
    let d = distances(inst)?;
    let n = tour.len();
    Ok(SlotOutput::Vector(
        elements
            .iter()
            .map(|&p| {
                let (a, c, b) = (tour[(p + n - 1) % n], tour[p], tour[(p + 1) % n]);
                d[(a, c)] + d[(c, b)] - d[(a, b)]
            })
            .collect(),
    ))
}

fn dr_cvrp_badness_detour(inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::DrBadness { partial: DrView::Sequence(seq), elements } = call else { return Err(wrong_call(&call)) };
    let d = distances(inst)?;
    Ok(SlotOutput::Vector(
        elements
            .iter()
            .map(|&p| {
                let (a, c, b) = (seq[p - 1], seq[p], seq[p + 1]);
                d[(a, c)] + d[(c, b)] - d[(a, b)]
            })
            .collect(),
    ))
}

fn dr_tsp_insert_nearest(inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
    let SlotCall::DrInsertPosition { element: city, partial: DrView::Sequence(tour) } = call else {
        return Err(wrong_call(&call));
    };
    let d = distances(inst)?;
    let n = tour.len();
    if n == 0 {
        return Ok(SlotOutput::Index(0));
    }
    let mut q = 0;
    for k in 1..n {
        if d[(city, tour[k])] < d[(city, tour[q])] {
            q = k;
        }
    }
    let (a, b, c) = (tour[(q + n - 1) % n], tour[q], tour[(q + 1) % n]);
    let before = d[(a, city)] + d[(city, b)] - d[(a, b)];
    let after = d[(b, city)] + d[(city, c)] - d[(b, c)];
    Ok(SlotOutput::Index(if after < before { q + 1 } else { q }))
}

/// Deliberately broken candidates for exercising failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    /// Does not parse.
    Compile,
    /// Raises on every call.
    Runtime,
    /// Returns NaN.
    NonFinite,
    /// Never returns.
    Hang,
}

impl Failure {
    pub const ALL: [Failure; 4] = [Failure::Compile, Failure::Runtime, Failure::NonFinite, Failure::Hang];

    pub fn as_str(self) -> &'static str {
        match self {
            Failure::Compile => "compile",
            Failure::Runtime => "runtime",
            Failure::NonFinite => "non-finite",
            Failure::Hang => "hang",
        }
    }

    fn error(self) -> StrategyError {
        match self {
            Failure::Compile => StrategyError::Compile("invalid syntax".into()),
            Failure::Runtime => StrategyError::Runtime("ValueError: deliberate failure".into()),
            Failure::NonFinite => StrategyError::InvalidOutput("non-finite output".into()),
            Failure::Hang => StrategyError::Timeout("call exceeded its time limit".into()),
        }
    }

    pub fn native(self) -> NativeFn {
        Arc::new(move |_, _| Err(self.error()))
    }
}

/// Python source with the slot's exact signature that fails as `kind`.
pub fn failing_source(slot: SlotId, domain: Domain, kind: Failure) -> String {
    let desc = slot_descriptor(slot, domain).expect("valid slot");
    let def = desc.signature.lines().find(|l| l.starts_with("def ")).expect("signature has a def line");
    let body = match kind {
        Failure::Compile => return format!("import numpy as np\n\n{}\n    return (\n", def.trim_end_matches(':')),
        Failure::Runtime => "    raise ValueError(\"deliberate failure\")",
        Failure::NonFinite => "    return float(\"nan\")",
        Failure::Hang => "    while True:\n        pass",
    };
    format!("import numpy as np\n\n\n{def}\n{body}\n")
}

/// Variants applicable to a slot on a domain.
pub fn variants_for(slot: SlotId, domain: Domain) -> impl Iterator<Item = &'static Variant> {
    VARIANTS.iter().filter(move |v| v.slot == slot && v.domains.contains(&domain))
}

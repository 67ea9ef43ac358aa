use serde::Serialize;

use super::{Framework, SlotId, SolverError};
use crate::cop::Domain;

/// How a runner turns one solver callback into calls of the entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CallMode {
    /// One call with the full argument list.
    Whole,
    /// `entry(i, j, *args)` for every `i, j < n`, assembled into an `n × n` matrix.
    Pairwise,
    /// `entry(e, *args)` for each listed element, assembled into a vector.
    Each,
}

/// Everything a generator and a runner need to know about one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotDescriptor {
    pub slot: SlotId,
    pub domain: Domain,
    /// Python entry point name.
    pub entry: &'static str,
    /// Positional argument names after any per-element index arguments.
    pub args: &'static [&'static str],
    pub mode: CallMode,
    /// Whether search may replace the native baseline.
    pub searchable: bool,
    /// Short name used in prompts, e.g. "the initialization strategy".
    pub title: &'static str,
    pub purpose: &'static str,
    /// What a good implementation achieves, for the game description.
    pub goal: &'static str,
    /// Python stub with the exact signature and a docstring.
    pub signature: String,
    pub datatype_note: &'static str,
    pub context: String,
}

struct Layout {
    entry: &'static str,
    args: &'static [&'static str],
    mode: CallMode,
    title: &'static str,
    purpose: &'static str,
    goal: &'static str,
    def: &'static str,
    doc: &'static str,
}

fn layout(framework: Framework, index: usize, domain: Domain) -> Option<Layout> {
    use CallMode::*;
    use Domain::*;
    let s = match (framework, index, domain) {
        (Framework::Gls, 1, Tsp) => Layout {
            entry: "guide_matrix",
            args: &["distances"],
            mode: Whole,
            title: "the guide matrix strategy",
            purpose: "scores how undesirable each edge is so guided local search knows which edges to penalize",
            goal: "steer penalties toward edges that keep local search trapped in poor tours",
            def: "def guide_matrix(distances: np.ndarray) -> np.ndarray:",
            doc: "distances : np.ndarray, shape (n_cities, n_cities)\nguide : np.ndarray, shape (n_cities, n_cities)\n    Larger values mark edges that should be penalized first",
        },
        (Framework::Aco, 1, Tsp) => Layout {
            entry: "initialize",
            args: &["distances"],
            mode: Whole,
            title: "the initialization strategy",
            purpose: "sets up guidance matrices for route finding",
            goal: "give ants informative heuristic and pheromone matrices before the first iteration",
            def: "def initialize(distances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:",
            doc: "distances : np.ndarray, shape (n_cities, n_cities)\nheuristic : np.ndarray, shape (n_cities, n_cities)\n    Desirability of traveling between cities\npheromone : np.ndarray, shape (n_cities, n_cities)\n    Initial intensity of guidance trails",
        },
        (Framework::Aco, 1, Cvrp) => Layout {
            entry: "initialize",
            args: &["distances", "coordinates", "demands", "capacity"],
            mode: Whole,
            title: "the initialization strategy",
            purpose: "sets up guidance matrices for capacitated vehicle routing",
            goal: "give ants informative heuristic and pheromone matrices before the first iteration",
            def: "def initialize(distances: np.ndarray, coordinates: np.ndarray, demands: np.ndarray, capacity: float) -> tuple[np.ndarray, np.ndarray]:",
            doc: "distances : np.ndarray, shape (n_nodes, n_nodes), node 0 is the depot\ncoordinates : np.ndarray, shape (n_nodes, 2)\ndemands : np.ndarray, shape (n_nodes,), demands[0] == 0\ncapacity : float, vehicle capacity\nheuristic, pheromone : np.ndarray, shape (n_nodes, n_nodes)",
        },
        (Framework::Aco, 1, Mkp) => Layout {
            entry: "initialize",
            args: &["prize", "weight"],
            mode: Whole,
            title: "the initialization strategy",
            purpose: "sets up guidance matrices for assigning items to knapsacks",
            goal: "give ants informative heuristic and pheromone matrices before the first iteration",
            def: "def initialize(prize: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:",
            doc: "prize : np.ndarray, shape (n_items,)\nweight : np.ndarray, shape (n_knapsacks, n_items), weight of item j in knapsack i\nheuristic, pheromone : np.ndarray, shape (n_knapsacks, n_items)\n    Desirability of placing item j into knapsack i",
        },
        (Framework::Aco, 1, Op) => Layout {
            entry: "initialize",
            args: &["prize", "distances", "budget"],
            mode: Whole,
            title: "the initialization strategy",
            purpose: "sets up guidance matrices for collecting prizes under a travel budget",
            goal: "give ants informative heuristic and pheromone matrices before the first iteration",
            def: "def initialize(prize: np.ndarray, distances: np.ndarray, budget: float) -> tuple[np.ndarray, np.ndarray]:",
            doc: "prize : np.ndarray, shape (n_nodes,), node 0 is the depot\ndistances : np.ndarray, shape (n_nodes, n_nodes)\nbudget : float, maximum path length\nheuristic, pheromone : np.ndarray, shape (n_nodes, n_nodes)",
        },
        (Framework::Aco, 1, Bpp) => Layout {
            entry: "initialize",
            args: &["demands", "capacity"],
            mode: Whole,
            title: "the initialization strategy",
            purpose: "sets up guidance matrices for packing items into bins",
            goal: "give ants informative heuristic and pheromone matrices before the first iteration",
            def: "def initialize(demands: np.ndarray, capacity: float) -> tuple[np.ndarray, np.ndarray]:",
            doc: "demands : np.ndarray, shape (n_items,), item sizes\ncapacity : float, bin capacity\nheuristic, pheromone : np.ndarray, shape (n_items, n_items)\n    Desirability of packing item j right after item i in the same bin",
        },
        (Framework::Aco, 2, _) => Layout {
            entry: "compute_probabilities",
            args: &["heuristic", "pheromone", "iteration", "n_iterations"],
            mode: Whole,
            title: "the transition rule",
            purpose: "combines heuristic and pheromone information into move weights",
            goal: "balance exploration and exploitation of the construction policy over the run",
            def: "def compute_probabilities(heuristic: np.ndarray, pheromone: np.ndarray, iteration: int, n_iterations: int) -> np.ndarray:",
            doc: "heuristic, pheromone : np.ndarray, same shape\niteration : int, current iteration t (1-based)\nn_iterations : int, horizon T\nweights : np.ndarray, same shape, nonnegative; ants sample moves proportionally",
        },
        (Framework::Aco, 3, _) => Layout {
            entry: "update_pheromone",
            args: &["pheromone", "solutions", "costs", "iteration", "n_iterations"],
            mode: Whole,
            title: "the pheromone update strategy",
            purpose: "reinforces components of good solutions after every iteration",
            goal: "concentrate pheromone on components that lead to low-cost solutions without premature convergence",
            def: "def update_pheromone(pheromone: np.ndarray, solutions: list, costs: np.ndarray, iteration: int, n_iterations: int) -> np.ndarray:",
            doc: "pheromone : np.ndarray, current trails\nsolutions : list of lists of (i, j) pairs, the components each ant used\ncosts : np.ndarray, shape (n_ants,), cost of each solution (lower is better; maximization objectives are negated)\niteration : int, current iteration t (1-based)\nn_iterations : int, horizon T\nreturns the updated pheromone, same shape",
        },
        (Framework::Dr, 1, Tsp) => Layout {
            entry: "edge_score",
            args: &["distances"],
            mode: Pairwise,
            title: "the edge score strategy",
            purpose: "scores how attractive it is to travel directly from city i to city j during greedy construction",
            goal: "make the greedy tour as short as possible before repair",
            def: "def edge_score(i: int, j: int, distances: np.ndarray) -> float:",
            doc: "i, j : int, city indices\ndistances : np.ndarray, shape (n_cities, n_cities)\nreturns the score for including edge (i, j); greedy construction follows the highest score",
        },
        (Framework::Dr, 1, Cvrp) => Layout {
            entry: "edge_score",
            args: &["distances", "demands", "capacity"],
            mode: Pairwise,
            title: "the edge score strategy",
            purpose: "scores how attractive it is to visit node j right after node i during greedy route construction",
            goal: "make the greedy routes as short as possible before repair",
            def: "def edge_score(i: int, j: int, distances: np.ndarray, demands: np.ndarray, capacity: float) -> float:",
            doc: "i, j : int, node indices (0 is the depot)\ndistances : np.ndarray, shape (n_nodes, n_nodes)\ndemands : np.ndarray, shape (n_nodes,)\ncapacity : float\nreturns the score for moving from i to j; greedy construction follows the highest feasible score",
        },
        (Framework::Dr, 1, Bpp) => Layout {
            entry: "edge_score",
            args: &["sizes", "capacity"],
            mode: Pairwise,
            title: "the compatibility score strategy",
            purpose: "scores how well item j fits after item i in the same bin",
            goal: "make the greedy packing use as few bins as possible before repair",
            def: "def edge_score(i: int, j: int, sizes: np.ndarray, capacity: float) -> float:",
            doc: "i, j : int, item indices\nsizes : np.ndarray, shape (n_items,)\ncapacity : float, bin capacity\nreturns the compatibility of packing j right after i; greedy packing follows the highest score among items that fit",
        },
        (Framework::Dr, 2, Tsp) => Layout {
            entry: "city_badness",
            args: &["tour", "distances"],
            mode: Each,
            title: "the badness strategy",
            purpose: "ranks the cities of a tour by how much they hurt it, so the worst ones are removed",
            goal: "remove the cities whose reinsertion gives the largest gain",
            def: "def city_badness(position: int, tour: list, distances: np.ndarray) -> float:",
            doc: "position : int, index into tour of the city to score\ntour : list of city indices, closed implicitly\ndistances : np.ndarray, shape (n_cities, n_cities)\nreturns the badness; the highest-ranked cities are removed",
        },
        (Framework::Dr, 2, Cvrp) => Layout {
            entry: "customer_badness",
            args: &["sequence", "distances", "demands", "capacity"],
            mode: Each,
            title: "the badness strategy",
            purpose: "ranks customers by how much they hurt their routes, so the worst ones are removed",
            goal: "remove the customers whose reinsertion gives the largest gain",
            def: "def customer_badness(position: int, sequence: list, distances: np.ndarray, demands: np.ndarray, capacity: float) -> float:",
            doc: "position : int, index into sequence of a customer\nsequence : list, routes joined by the depot 0, e.g. [0, 3, 1, 0, 2, 0]\ndistances : np.ndarray, shape (n_nodes, n_nodes)\ndemands : np.ndarray, shape (n_nodes,)\ncapacity : float\nreturns the badness; the highest-ranked customers are removed",
        },
        (Framework::Dr, 2, Bpp) => Layout {
            entry: "item_badness",
            args: &["bins", "sizes", "capacity"],
            mode: Each,
            title: "the badness strategy",
            purpose: "ranks items by how much their placement wastes bin space, so the worst ones are removed",
            goal: "remove the items whose repacking frees the most bins",
            def: "def item_badness(item: int, bins: list, sizes: np.ndarray, capacity: float) -> float:",
            doc: "item : int, item index\nbins : list of lists of item indices\nsizes : np.ndarray, shape (n_items,)\ncapacity : float\nreturns the badness; the highest-ranked items are removed",
        },
        (Framework::Dr, 3, Tsp) => Layout {
            entry: "insert_position",
            args: &["tour", "distances"],
            mode: Whole,
            title: "the repair strategy",
            purpose: "chooses where a removed city is put back into the partial tour",
            goal: "reinsert removed cities so the repaired tour is as short as possible",
            def: "def insert_position(city: int, tour: list, distances: np.ndarray) -> int:",
            doc: "city : int, the city to reinsert\ntour : list, partial tour\ndistances : np.ndarray, shape (n_cities, n_cities)\nreturns p in [0, len(tour)]; the city is inserted as tour.insert(p, city)",
        },
        (Framework::Dr, 3, Cvrp) => Layout {
            entry: "insert_position",
            args: &["sequence", "distances", "demands", "capacity"],
            mode: Whole,
            title: "the repair strategy",
            purpose: "chooses where a removed customer is put back into the partial routes",
            goal: "reinsert removed customers so the repaired routes are as short as possible",
            def: "def insert_position(customer: int, sequence: list, distances: np.ndarray, demands: np.ndarray, capacity: float) -> int:",
            doc: "customer : int\nsequence : list, routes joined by the depot 0, starting and ending with 0\ndistances, demands, capacity : instance data\nreturns p in [1, len(sequence)]; p < len inserts between sequence[p-1] and sequence[p] (the route must stay within capacity), p == len opens a new route",
        },
        (Framework::Dr, 3, Bpp) => Layout {
            entry: "insert_position",
            args: &["bins", "sizes", "capacity"],
            mode: Whole,
            title: "the repair strategy",
            purpose: "chooses the bin a removed item is packed into",
            goal: "repack removed items into as few bins as possible",
            def: "def insert_position(item: int, bins: list, sizes: np.ndarray, capacity: float) -> int:",
            doc: "item : int\nbins : list of lists of item indices\nsizes : np.ndarray, shape (n_items,)\ncapacity : float\nreturns b in [0, len(bins)]; b < len packs into bins[b] (it must fit), b == len opens a new bin",
        },
        _ => return None,
    };
    Some(s)
}

fn domain_context(domain: Domain) -> String {
    match domain {
        Domain::Tsp => "Find the shortest closed tour visiting every city exactly once. Cities lie in the unit square.".into(),
        Domain::Cvrp => "Serve every customer exactly once with routes that start and end at the depot (node 0); the demand on each route may not exceed the vehicle capacity. Minimize total route length.".into(),
        Domain::Mkp => "Place items into knapsacks, each item at most once, without exceeding any knapsack's capacity. Maximize total prize (costs are reported negated).".into(),
        Domain::Op => "Starting at the depot (node 0), visit nodes to collect prizes while the path length stays within the budget. Maximize collected prize (costs are reported negated).".into(),
        Domain::Bpp => "Pack every item into bins of fixed capacity. Minimize the number of bins used.".into(),
    }
}

/// Descriptor for one slot of `framework` on `domain`.
pub fn slot_descriptor(slot: SlotId, domain: Domain) -> Result<SlotDescriptor, SolverError> {
    if !slot.framework.supports(domain) {
        return Err(SolverError::Unsupported { framework: slot.framework, domain });
    }
    let s = layout(slot.framework, slot.index, domain).ok_or(SolverError::NoSuchSlot(slot.framework, slot.index))?;
    let searchable = !(slot.framework == Framework::Aco && slot.index == 2 && matches!(domain, Domain::Op | Domain::Bpp));
    let doc: String = s.doc.lines().map(|l| format!("    {l}\n")).collect();
    let signature = format!("import numpy as np\n\n{}\n    \"\"\"\n{}    \"\"\"\n    # Your implementation here\n    pass\n", s.def, doc);
    Ok(SlotDescriptor {
        slot,
        domain,
        entry: s.entry,
        args: s.args,
        mode: s.mode,
        searchable,
        title: s.title,
        purpose: s.purpose,
        goal: s.goal,
        signature,
        datatype_note: "Arrays are numpy float64; indices are Python ints.",
        context: domain_context(domain),
    })
}

pub fn slot_descriptors(framework: Framework, domain: Domain) -> Result<Vec<SlotDescriptor>, SolverError> {
    (1..=framework.slot_count()).map(|k| slot_descriptor(SlotId::new(framework, k), domain)).collect()
}

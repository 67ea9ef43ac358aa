use super::{slot_descriptor, Framework, SlotId, SolverError, StrategyImpl};
use crate::cop::Domain;

macro_rules! src {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/strategies/", $name, ".py"))
    };
}

/// Python transliteration of the native baseline for `slot` on `domain`.
pub fn baseline_source(slot: SlotId, domain: Domain) -> Result<&'static str, SolverError> {
    use Domain::*;
    slot_descriptor(slot, domain)?;
    let s = match (slot.framework, slot.index, domain) {
        (Framework::Gls, 1, _) => src!("gls_tsp_guide_matrix"),
        (Framework::Aco, 1, Tsp) => src!("aco_tsp_initialize"),
        (Framework::Aco, 1, Cvrp) => src!("aco_cvrp_initialize"),
        (Framework::Aco, 1, Mkp) => src!("aco_mkp_initialize"),
        (Framework::Aco, 1, Op) => src!("aco_op_initialize"),
        (Framework::Aco, 1, Bpp) => src!("aco_bpp_initialize"),
        (Framework::Aco, 2, _) => src!("aco_compute_probabilities"),
        (Framework::Aco, 3, Tsp) => src!("aco_tsp_update_pheromone"),
        (Framework::Aco, 3, Cvrp) => src!("aco_cvrp_update_pheromone"),
        (Framework::Aco, 3, Mkp) => src!("aco_mkp_update_pheromone"),
        (Framework::Aco, 3, Op) => src!("aco_op_update_pheromone"),
        (Framework::Aco, 3, Bpp) => src!("aco_bpp_update_pheromone"),
        (Framework::Dr, 1, Tsp) => src!("dr_tsp_edge_score"),
        (Framework::Dr, 1, Cvrp) => src!("dr_cvrp_edge_score"),
        (Framework::Dr, 1, _) => src!("dr_bpp_edge_score"),
        (Framework::Dr, 2, Tsp) => src!("dr_tsp_badness"),
        (Framework::Dr, 2, Cvrp) => src!("dr_cvrp_badness"),
        (Framework::Dr, 2, _) => src!("dr_bpp_badness"),
        (Framework::Dr, 3, Tsp) => src!("dr_tsp_insert_position"),
        (Framework::Dr, 3, Cvrp) => src!("dr_cvrp_insert_position"),
        (Framework::Dr, 3, _) => src!("dr_bpp_insert_position"),
        _ => return Err(SolverError::NoSuchSlot(slot.framework, slot.index)),
    };
    Ok(s)
}

/// The reference implementation of a slot.
pub fn native_baseline(framework: Framework, index: usize, domain: Domain) -> Result<StrategyImpl, SolverError> {
    let slot = SlotId::new(framework, index);
    slot_descriptor(slot, domain)?;
    Ok(StrategyImpl::native(slot))
}

/// Canonical form of Python source for equality checks: comment-only and
/// blank lines dropped, trailing whitespace trimmed.
pub fn normalize_source(source: &str) -> String {
    let mut out = String::new();
    for line in source.lines() {
        let t = line.trim_end();
        if t.trim_start().is_empty() || t.trim_start().starts_with('#') {
            continue;
        }
        out.push_str(t);
        out.push('\n');
    }
    out
}

//! NF-Heuristic: a greedy SFC placer over shortest paths, packing VNFs by
//! residual capacity. Standalone baseline and the default rollout policy.

use crate::graph::NodeId;
use crate::mdp::{build_placement, Action, MdpState, SfcMdp};

/// Deterministic greedy decision for the head request: first fully feasible
/// placement found by scanning the candidate paths in order and packing each
/// VNF onto the maximum-residual-CPU node (ties to the lower NodeId, never
/// moving backwards along the path); otherwise Wait while the deadline
/// permits, otherwise Reject.
pub fn nf_heuristic(mdp: &SfcMdp, s: &MdpState) -> Action {
    let Some(request) = s.waiting.front() else {
        return Action::Wait;
    };
    if s.clock + request.duration <= request.deadline_slot {
        for path in mdp.candidate_paths(request.ingress, request.egress) {
            let Some(assignment) = max_residual_assignment(s, path, &request.vnf_demands) else {
                continue;
            };
            let Some(placement) = build_placement(request, path, &assignment, s.clock) else {
                continue;
            };
            let action = Action::Place(placement);
            if mdp.is_feasible(s, &action) {
                return action;
            }
        }
    }
    if mdp.wait_permitted(s.clock, request) {
        Action::Wait
    } else {
        Action::Reject
    }
}

fn max_residual_assignment(
    s: &MdpState,
    path: &[NodeId],
    demands: &[u32],
) -> Option<Vec<NodeId>> {
    let mut residual: Vec<u32> = path
        .iter()
        .map(|n| s.residual_cpu.get(n).copied().unwrap_or(0))
        .collect();
    let mut assignment = Vec::with_capacity(demands.len());
    let mut cursor = 0usize;
    for demand in demands {
        let mut best: Option<usize> = None;
        for pos in cursor..path.len() {
            if residual[pos] < *demand {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    residual[pos] > residual[b]
                        || (residual[pos] == residual[b] && path[pos] < path[b])
                }
            };
            if better {
                best = Some(pos);
            }
        }
        let pos = best?;
        assignment.push(path[pos]);
        residual[pos] -= demand;
        cursor = pos;
    }
    Some(assignment)
}

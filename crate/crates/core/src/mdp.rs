//! The SFC planning MDP: state with residual resources and request queues,
//! feasible-action enumeration, slot-based transition with capacity
//! accounting and arrivals/completions, and the reward.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{k_shortest_paths, LinkId, NetworkGraph, NodeId};
use crate::workload::SfcRequest;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("infeasible action: {0}")]
    InfeasibleAction(String),
}

/// Reward shaping and discount.
#[derive(Debug, Clone, Copy)]
pub struct RewardParams {
    pub completion_reward: f64,
    pub blocking_penalty: f64,
    /// Weight of the normalized delay charge at acceptance.
    pub delay_weight: f64,
    pub gamma: f64,
    /// Per-event reward magnitude cap, used by the transfer bound formulas.
    pub r_max: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            completion_reward: 1.0,
            blocking_penalty: -1.0,
            delay_weight: 0.1,
            gamma: 0.99,
            r_max: 1.0,
        }
    }
}

/// Static MDP configuration beyond the graph itself.
#[derive(Debug, Clone, Copy)]
pub struct MdpParams {
    pub reward: RewardParams,
    /// Candidate ingress->egress paths per placement decision.
    pub k_paths: usize,
    /// Cap on Place candidates per decision.
    pub a_max: usize,
    /// Added end-to-end delay per routed hop, in slots.
    pub per_hop_delay: f64,
}

impl Default for MdpParams {
    fn default() -> Self {
        MdpParams {
            reward: RewardParams::default(),
            k_paths: 3,
            a_max: 16,
            per_hop_delay: 0.1,
        }
    }
}

/// VNF-to-node assignment plus per-segment routing.
///
/// Segment `j` of a k-VNF chain routes ingress->VNF1 (j = 0), VNFj->VNFj+1,
/// or VNFk->egress (j = k); a single-node path means colocation and uses no
/// links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub assignment: Vec<NodeId>,
    pub routing: Vec<Vec<NodeId>>,
    pub start_slot: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Reject,
    Wait,
    Place(Placement),
}

impl Action {
    /// Canonical encoding for cross-task keying. Place start slots are
    /// encoded relative to the decision clock.
    pub fn sig(&self, clock: u64) -> String {
        match self {
            Action::Reject => "R".to_string(),
            Action::Wait => "W".to_string(),
            Action::Place(p) => {
                let assign = p
                    .assignment
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let routes = p
                    .routing
                    .iter()
                    .map(|path| {
                        path.iter()
                            .map(|n| n.to_string())
                            .collect::<Vec<_>>()
                            .join("-")
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                format!("P|a={assign}|r={routes}|d={}", p.start_slot - clock)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActivePlacement {
    pub request: SfcRequest,
    pub placement: Placement,
    pub completion_slot: u64,
}

/// MDP state: a value type. Cloning yields an independent simulation state;
/// the (immutable) remainder of the arrival stream is shared.
#[derive(Debug, Clone)]
pub struct MdpState {
    pub clock: u64,
    pub residual_cpu: BTreeMap<NodeId, u32>,
    pub residual_bw: BTreeMap<LinkId, u32>,
    pub active: Vec<ActivePlacement>,
    pub waiting: VecDeque<SfcRequest>,
    arrivals: Arc<Vec<SfcRequest>>,
    next_arrival: usize,
    pub accepted: u64,
    pub blocked: u64,
    pub completed: u64,
}

impl MdpState {
    pub fn pending_arrivals(&self) -> &[SfcRequest] {
        &self.arrivals[self.next_arrival..]
    }

    /// All requests resolved and none left to arrive.
    pub fn is_drained(&self) -> bool {
        self.waiting.is_empty() && self.active.is_empty() && self.pending_arrivals().is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct StepEvents {
    pub completed: Vec<u64>,
    pub arrived: Vec<u64>,
    pub blocked: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: MdpState,
    pub reward: f64,
    pub events: StepEvents,
}

/// End-to-end delay in slots: queueing (start - release) + processing
/// duration + per-hop routing delay over all segments.
pub fn e2e_delay(request: &SfcRequest, placement: &Placement, per_hop_delay: f64) -> f64 {
    let queueing = (placement.start_slot - request.release_slot) as f64;
    let hops: usize = placement.routing.iter().map(|p| p.len() - 1).sum();
    queueing + request.duration as f64 + hops as f64 * per_hop_delay
}

/// Aggregate resource usage of a placement: CPU per node and bandwidth per
/// link (a link may be crossed by several segments).
fn placement_usage(
    request: &SfcRequest,
    placement: &Placement,
) -> (BTreeMap<NodeId, u32>, BTreeMap<LinkId, u32>) {
    let mut cpu: BTreeMap<NodeId, u32> = BTreeMap::new();
    for (j, node) in placement.assignment.iter().enumerate() {
        *cpu.entry(*node).or_default() += request.vnf_demands[j];
    }
    let mut bw: BTreeMap<LinkId, u32> = BTreeMap::new();
    for (seg, path) in placement.routing.iter().enumerate() {
        let demand = request.segment_demand(seg);
        for pair in path.windows(2) {
            *bw.entry(LinkId::new(pair[0], pair[1])).or_default() += demand;
        }
    }
    (cpu, bw)
}

/// The SFC MDP over one graph. Candidate paths between all node pairs are
/// precomputed; transitions are deterministic given the scripted arrival
/// stream carried by the state.
pub struct SfcMdp {
    pub graph: NetworkGraph,
    pub params: MdpParams,
    paths: BTreeMap<(NodeId, NodeId), Vec<Vec<NodeId>>>,
}

impl SfcMdp {
    pub fn new(graph: NetworkGraph, params: MdpParams) -> Self {
        let ids: Vec<NodeId> = graph.node_ids().collect();
        let mut paths = BTreeMap::new();
        for &src in &ids {
            for &dst in &ids {
                if src != dst {
                    paths.insert((src, dst), k_shortest_paths(&graph, src, dst, params.k_paths));
                }
            }
        }
        SfcMdp {
            graph,
            params,
            paths,
        }
    }

    pub fn candidate_paths(&self, src: NodeId, dst: NodeId) -> &[Vec<NodeId>] {
        self.paths.get(&(src, dst)).map_or(&[], |v| v.as_slice())
    }

    pub fn initial_state(&self, workload: Vec<SfcRequest>) -> MdpState {
        let mut state = MdpState {
            clock: 0,
            residual_cpu: self
                .graph
                .nodes()
                .map(|(id, a)| (id, a.cpu_capacity))
                .collect(),
            residual_bw: self.graph.links().map(|(l, bw)| (l, bw)).collect(),
            active: Vec::new(),
            waiting: VecDeque::new(),
            arrivals: Arc::new(workload),
            next_arrival: 0,
            accepted: 0,
            blocked: 0,
            completed: 0,
        };
        let arrivals = state.arrivals.clone();
        while state.next_arrival < arrivals.len()
            && arrivals[state.next_arrival].release_slot <= state.clock
        {
            state.waiting.push_back(arrivals[state.next_arrival].clone());
            state.next_arrival += 1;
        }
        state
    }

    /// Whether waiting one more slot could still meet the head's deadline.
    pub fn wait_permitted(&self, clock: u64, request: &SfcRequest) -> bool {
        clock + 1 + request.duration <= request.deadline_slot
    }

    /// True iff applying the action keeps every residual nonnegative and the
    /// completion within the deadline. Reject requires a head to reject.
    pub fn is_feasible(&self, s: &MdpState, a: &Action) -> bool {
        match a {
            Action::Reject => !s.waiting.is_empty(),
            Action::Wait => true,
            Action::Place(p) => {
                let Some(request) = s.waiting.front() else {
                    return false;
                };
                self.place_feasible(s, request, p)
            }
        }
    }

    fn place_feasible(&self, s: &MdpState, request: &SfcRequest, p: &Placement) -> bool {
        let k = request.chain_len();
        if p.assignment.len() != k || p.routing.len() != request.num_segments() {
            return false;
        }
        if p.start_slot < s.clock {
            return false;
        }
        if p.start_slot + request.duration > request.deadline_slot {
            return false;
        }
        // Routing structure: segment endpoints must chain ingress ->
        // assignments -> egress, over existing links.
        let mut expected_from = request.ingress;
        for (seg, path) in p.routing.iter().enumerate() {
            if path.is_empty() {
                return false;
            }
            let target = if seg == k {
                request.egress
            } else {
                p.assignment[seg]
            };
            if path[0] != expected_from || *path.last().unwrap() != target {
                return false;
            }
            for pair in path.windows(2) {
                if self.graph.bandwidth(LinkId::new(pair[0], pair[1])).is_none() {
                    return false;
                }
            }
            expected_from = target;
        }
        let (cpu, bw) = placement_usage(request, p);
        cpu.iter().all(|(node, used)| {
            s.residual_cpu.get(node).copied().unwrap_or(0) >= *used
        }) && bw.iter().all(|(link, used)| {
            s.residual_bw.get(link).copied().unwrap_or(0) >= *used
        })
    }

    /// Feasible actions for the head of the waiting queue; `[Wait]` when the
    /// queue is empty. Place candidates come from greedy assignments along
    /// the candidate paths, topped up by lexicographic enumeration, capped
    /// at `a_max`.
    pub fn enumerate_actions(&self, s: &MdpState) -> Vec<Action> {
        let Some(request) = s.waiting.front() else {
            return vec![Action::Wait];
        };
        let mut actions = vec![Action::Reject];
        if self.wait_permitted(s.clock, request) {
            actions.push(Action::Wait);
        }
        if s.clock + request.duration <= request.deadline_slot {
            let mut seen = std::collections::BTreeSet::new();
            let mut places = Vec::new();
            let paths = self.candidate_paths(request.ingress, request.egress);
            // Scheme-major, path-inner interleave keeps the candidate set
            // route-diverse under a small a_max cap.
            for scheme in [
                AssignScheme::MaxResidual { perturb: false },
                AssignScheme::Earliest { perturb: false },
                AssignScheme::MaxResidual { perturb: true },
                AssignScheme::Earliest { perturb: true },
            ] {
                for path in paths {
                    if let Some(a) = greedy_assign(request, s, &self.graph, path, scheme) {
                        self.push_place(s, request, path, a, &mut seen, &mut places);
                    }
                }
            }
            if places.len() < self.params.a_max {
                for path in paths {
                    enumerate_assignments(request, s, path, &mut |assignment| {
                        self.push_place(s, request, path, assignment, &mut seen, &mut places);
                        places.len() < self.params.a_max
                    });
                    if places.len() >= self.params.a_max {
                        break;
                    }
                }
            }
            actions.extend(places.into_iter().map(Action::Place));
        }
        actions
    }

    fn push_place(
        &self,
        s: &MdpState,
        request: &SfcRequest,
        path: &[NodeId],
        assignment: Vec<NodeId>,
        seen: &mut std::collections::BTreeSet<String>,
        places: &mut Vec<Placement>,
    ) {
        if places.len() >= self.params.a_max {
            return;
        }
        let Some(placement) = build_placement(request, path, &assignment, s.clock) else {
            return;
        };
        if !self.place_feasible(s, request, &placement) {
            return;
        }
        let sig = Action::Place(placement.clone()).sig(s.clock);
        if seen.insert(sig) {
            places.push(placement);
        }
    }

    /// Applies the action for the head request, advances the clock one slot,
    /// releases completions, admits arrivals, and auto-blocks requests whose
    /// deadline can no longer be met.
    pub fn step(&self, s: &MdpState, a: &Action) -> Result<StepOutcome, MdpError> {
        if !self.is_feasible(s, a) {
            return Err(MdpError::InfeasibleAction(format!("{a:?}")));
        }
        let reward_params = self.params.reward;
        let mut next = s.clone();
        let mut events = StepEvents::default();
        let mut reward = 0.0;

        match a {
            Action::Reject => {
                let request = next.waiting.pop_front().expect("checked head");
                next.blocked += 1;
                reward += reward_params.blocking_penalty;
                events.blocked.push(request.request_id);
            }
            Action::Wait => {}
            Action::Place(p) => {
                let request = next.waiting.pop_front().expect("checked head");
                let (cpu, bw) = placement_usage(&request, p);
                for (node, used) in cpu {
                    let r = next.residual_cpu.get_mut(&node).unwrap();
                    *r = r.checked_sub(used).expect("feasibility checked");
                }
                for (link, used) in bw {
                    let r = next.residual_bw.get_mut(&link).unwrap();
                    *r = r.checked_sub(used).expect("feasibility checked");
                }
                let delay = e2e_delay(&request, p, self.params.per_hop_delay);
                let slack = request.slack().max(1) as f64;
                reward -= reward_params.delay_weight * delay / slack;
                next.accepted += 1;
                next.active.push(ActivePlacement {
                    completion_slot: p.start_slot + request.duration,
                    placement: p.clone(),
                    request,
                });
            }
        }

        next.clock += 1;

        // Completions release their resources at this slot.
        let (done, still): (Vec<_>, Vec<_>) = next
            .active
            .drain(..)
            .partition(|ap| ap.completion_slot <= next.clock);
        next.active = still;
        for ap in done {
            let (cpu, bw) = placement_usage(&ap.request, &ap.placement);
            for (node, used) in cpu {
                *next.residual_cpu.get_mut(&node).unwrap() += used;
            }
            for (link, used) in bw {
                *next.residual_bw.get_mut(&link).unwrap() += used;
            }
            next.completed += 1;
            reward += reward_params.completion_reward;
            events.completed.push(ap.request.request_id);
        }

        // Arrivals enter the waiting queue.
        let arrivals = next.arrivals.clone();
        while next.next_arrival < arrivals.len()
            && arrivals[next.next_arrival].release_slot <= next.clock
        {
            let request = arrivals[next.next_arrival].clone();
            events.arrived.push(request.request_id);
            next.waiting.push_back(request);
            next.next_arrival += 1;
        }

        // Requests whose deadline can no longer be met are blocked here.
        let clock = next.clock;
        let mut kept = VecDeque::with_capacity(next.waiting.len());
        for request in next.waiting.drain(..) {
            if clock + request.duration <= request.deadline_slot {
                kept.push_back(request);
            } else {
                next.blocked += 1;
                reward += reward_params.blocking_penalty;
                events.blocked.push(request.request_id);
            }
        }
        next.waiting = kept;

        Ok(StepOutcome {
            next_state: next,
            reward,
            events,
        })
    }

    /// Stable abstraction key: sparse per-node and per-link utilization
    /// buckets (8 levels, zero buckets omitted) plus the sorted multiset of
    /// waiting-request signatures. The clock enters only through remaining
    /// slack. Equal keys iff equal abstraction tuples.
    pub fn state_key(&self, s: &MdpState) -> String {
        let mut nodes = String::new();
        for (id, attrs) in self.graph.nodes() {
            let cap = attrs.cpu_capacity;
            let used = cap - s.residual_cpu.get(&id).copied().unwrap_or(cap);
            let bucket = utilization_bucket(used, cap);
            if bucket > 0 {
                if !nodes.is_empty() {
                    nodes.push(',');
                }
                nodes.push_str(&format!("{id}:{bucket}"));
            }
        }
        let mut links = String::new();
        for (link, cap) in self.graph.links() {
            let used = cap - s.residual_bw.get(&link).copied().unwrap_or(cap);
            let bucket = utilization_bucket(used, cap);
            if bucket > 0 {
                if !links.is_empty() {
                    links.push(',');
                }
                links.push_str(&format!("{link}:{bucket}"));
            }
        }
        let mut sigs: Vec<String> = s
            .waiting
            .iter()
            .map(|r| waiting_signature(r, s.clock))
            .collect();
        sigs.sort();
        format!("n={nodes}|e={links}|w={}", sigs.join(","))
    }
}

fn utilization_bucket(used: u32, cap: u32) -> u32 {
    if cap == 0 {
        return 0;
    }
    ((8 * used) / cap).min(7)
}

fn waiting_signature(r: &SfcRequest, clock: u64) -> String {
    let remaining_slack = r.deadline_slot.saturating_sub(clock + r.duration);
    let slack_bucket = (remaining_slack / 4).min(7);
    format!(
        "{}:{}:{}:{}",
        r.chain_len(),
        r.total_cpu(),
        r.total_bw(),
        slack_bucket
    )
}

/// Builds the routing for a monotone on-path assignment: each segment is the
/// subpath between consecutive assigned positions. Returns None if the
/// assignment is not monotone along the path.
pub fn build_placement(
    request: &SfcRequest,
    path: &[NodeId],
    assignment: &[NodeId],
    start_slot: u64,
) -> Option<Placement> {
    if assignment.len() != request.chain_len() {
        return None;
    }
    let pos_of =
        |node: NodeId, from: usize| path[from..].iter().position(|n| *n == node).map(|p| p + from);
    let mut positions = Vec::with_capacity(assignment.len());
    let mut cursor = 0;
    for node in assignment {
        let pos = pos_of(*node, cursor)?;
        positions.push(pos);
        cursor = pos;
    }
    let mut routing = Vec::with_capacity(assignment.len() + 1);
    let mut prev = 0usize;
    for &pos in &positions {
        routing.push(path[prev..=pos].to_vec());
        prev = pos;
    }
    routing.push(path[prev..].to_vec());
    Some(Placement {
        assignment: assignment.to_vec(),
        routing,
        start_slot,
    })
}

/// Greedy assignment schemes along one path: max-residual-CPU and earliest
/// feasible position, each with one deterministic perturbed variant that
/// diverts the first VNF to its second-best choice.
#[derive(Clone, Copy)]
enum AssignScheme {
    MaxResidual { perturb: bool },
    Earliest { perturb: bool },
}

/// One greedy assignment along a path. Max-residual ranks by the bucketed
/// residual (the state-key granularity) so states sharing an abstraction key
/// enumerate identical candidate sigs; feasibility stays exact.
fn greedy_assign(
    request: &SfcRequest,
    s: &MdpState,
    graph: &NetworkGraph,
    path: &[NodeId],
    scheme: AssignScheme,
) -> Option<Vec<NodeId>> {
    let mut residual: BTreeMap<NodeId, u32> = path
        .iter()
        .map(|n| (*n, s.residual_cpu.get(n).copied().unwrap_or(0)))
        .collect();
    let bucket = |node: NodeId, residual: u32| {
        let cap = graph.cpu_capacity(node).max(1);
        (8 * residual) / cap
    };
    let mut assignment = Vec::with_capacity(request.chain_len());
    let mut cursor = 0usize;
    for (j, demand) in request.vnf_demands.iter().enumerate() {
        // Candidate positions in scheme preference order.
        let mut candidates: Vec<usize> = (cursor..path.len())
            .filter(|&p| residual[&path[p]] >= *demand)
            .collect();
        match scheme {
            AssignScheme::MaxResidual { .. } => {
                candidates.sort_by(|&a, &b| {
                    bucket(path[b], residual[&path[b]])
                        .cmp(&bucket(path[a], residual[&path[a]]))
                        .then(path[a].cmp(&path[b]))
                        .then(a.cmp(&b))
                });
            }
            AssignScheme::Earliest { .. } => {}
        }
        let perturb = matches!(
            scheme,
            AssignScheme::MaxResidual { perturb: true } | AssignScheme::Earliest { perturb: true }
        );
        let pick = if j == 0 && perturb { 1 } else { 0 };
        let &pos = candidates.get(pick)?;
        assignment.push(path[pos]);
        *residual.get_mut(&path[pos]).unwrap() -= demand;
        cursor = pos;
    }
    Some(assignment)
}

/// Enumerates monotone on-path assignments in lexicographic position order,
/// pruning on residual CPU. The visitor returns false to stop.
fn enumerate_assignments(
    request: &SfcRequest,
    s: &MdpState,
    path: &[NodeId],
    visit: &mut impl FnMut(Vec<NodeId>) -> bool,
) {
    fn recurse(
        demands: &[u32],
        path: &[NodeId],
        residual: &mut BTreeMap<NodeId, u32>,
        cursor: usize,
        current: &mut Vec<NodeId>,
        visit: &mut impl FnMut(Vec<NodeId>) -> bool,
    ) -> bool {
        let Some((demand, rest)) = demands.split_first() else {
            return visit(current.clone());
        };
        for pos in cursor..path.len() {
            let node = path[pos];
            if residual[&node] < *demand {
                continue;
            }
            *residual.get_mut(&node).unwrap() -= demand;
            current.push(node);
            let keep_going = recurse(rest, path, residual, pos, current, visit);
            current.pop();
            *residual.get_mut(&node).unwrap() += demand;
            if !keep_going {
                return false;
            }
        }
        true
    }
    let mut residual: BTreeMap<NodeId, u32> = path
        .iter()
        .map(|n| (*n, s.residual_cpu.get(n).copied().unwrap_or(0)))
        .collect();
    let mut current = Vec::new();
    recurse(
        &request.vnf_demands,
        path,
        &mut residual,
        0,
        &mut current,
        visit,
    );
}

impl SfcMdp {
    /// Re-bases a state's resource accounting onto this MDP's graph: the
    /// same active placements, queues and clock, with residuals recomputed
    /// from this graph's capacities. None when the occupancy does not fit
    /// (missing link or exceeded capacity).
    pub fn adopt_state(&self, s: &MdpState) -> Option<MdpState> {
        let mut out = s.clone();
        out.residual_cpu = self
            .graph
            .nodes()
            .map(|(id, a)| (id, a.cpu_capacity))
            .collect();
        out.residual_bw = self.graph.links().map(|(l, bw)| (l, bw)).collect();
        for ap in &s.active {
            let (cpu, bw) = placement_usage(&ap.request, &ap.placement);
            for (node, used) in cpu {
                let r = out.residual_cpu.get_mut(&node)?;
                *r = r.checked_sub(used)?;
            }
            for (link, used) in bw {
                let r = out.residual_bw.get_mut(&link)?;
                *r = r.checked_sub(used)?;
            }
        }
        Some(out)
    }
}

impl crate::search::SearchEnv for SfcMdp {
    type State = MdpState;
    type Action = Action;

    fn legal_actions(&self, s: &MdpState) -> Vec<Action> {
        self.enumerate_actions(s)
    }

    fn action_sig(&self, s: &MdpState, a: &Action) -> crate::search::ActionSig {
        crate::search::ActionSig(a.sig(s.clock))
    }

    fn apply(
        &self,
        s: &MdpState,
        a: &Action,
        _rng: &mut rand_chacha::ChaCha8Rng,
    ) -> (MdpState, f64) {
        let outcome = self.step(s, a).expect("planner applies feasible actions");
        (outcome.next_state, outcome.reward)
    }

    fn state_key(&self, s: &MdpState) -> crate::search::StateKey {
        crate::search::StateKey(self.state_key(s))
    }

    fn is_terminal(&self, s: &MdpState) -> bool {
        s.is_drained()
    }

    fn rollout_action(&self, s: &MdpState, _rng: &mut rand_chacha::ChaCha8Rng) -> Action {
        crate::baseline::nf_heuristic(self, s)
    }

    fn gamma(&self) -> f64 {
        self.params.reward.gamma
    }
}

/// Test/diagnostic helper: verifies resource conservation against the graph.
pub fn check_conservation(graph: &NetworkGraph, s: &MdpState) -> Result<(), String> {
    let mut cpu_used: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut bw_used: BTreeMap<LinkId, u32> = BTreeMap::new();
    for ap in &s.active {
        let (cpu, bw) = placement_usage(&ap.request, &ap.placement);
        for (node, used) in cpu {
            *cpu_used.entry(node).or_default() += used;
        }
        for (link, used) in bw {
            *bw_used.entry(link).or_default() += used;
        }
        if ap.completion_slot > ap.request.deadline_slot {
            return Err(format!(
                "active request {} completes at {} past deadline {}",
                ap.request.request_id, ap.completion_slot, ap.request.deadline_slot
            ));
        }
    }
    for (id, attrs) in graph.nodes() {
        let residual = s.residual_cpu.get(&id).copied().unwrap_or(0);
        let used = cpu_used.get(&id).copied().unwrap_or(0);
        if residual + used != attrs.cpu_capacity {
            return Err(format!(
                "node {id}: residual {residual} + used {used} != capacity {}",
                attrs.cpu_capacity
            ));
        }
    }
    for (link, cap) in graph.links() {
        let residual = s.residual_bw.get(&link).copied().unwrap_or(0);
        let used = bw_used.get(&link).copied().unwrap_or(0);
        if residual + used != cap {
            return Err(format!(
                "link {link}: residual {residual} + used {used} != bandwidth {cap}"
            ));
        }
    }
    Ok(())
}

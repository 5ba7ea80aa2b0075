//! UCT Monte-Carlo tree search over a generic planning environment, with
//! hooks for transfer bounds and prior-statistics seeding. With no transfer
//! context attached the planner is plain UCT.

use rand_chacha::ChaCha8Rng;

/// Canonical state abstraction key, stable across tasks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey(pub String);

/// Canonical action encoding, stable across tasks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionSig(pub String);

impl std::fmt::Display for StateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for ActionSig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A planning environment the searcher can simulate.
pub trait SearchEnv {
    type State: Clone;
    type Action: Clone;

    /// Legal actions; must be nonempty for non-terminal states.
    fn legal_actions(&self, s: &Self::State) -> Vec<Self::Action>;
    fn action_sig(&self, s: &Self::State, a: &Self::Action) -> ActionSig;
    /// Applies the action, returning the next state and one-step reward.
    fn apply(&self, s: &Self::State, a: &Self::Action, rng: &mut ChaCha8Rng)
        -> (Self::State, f64);
    fn state_key(&self, s: &Self::State) -> StateKey;
    fn is_terminal(&self, s: &Self::State) -> bool;
    /// Default rollout policy.
    fn rollout_action(&self, s: &Self::State, rng: &mut ChaCha8Rng) -> Self::Action;
    fn gamma(&self) -> f64;
    /// Whether edges must be re-sampled on every traversal (stochastic
    /// kernels). Deterministic environments reuse cached edge outcomes.
    fn resample_edges(&self) -> bool {
        false
    }
}

/// UCT statistics of one state-action edge (live plus any seeded counts).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdgeStats {
    pub visit_count: u64,
    pub value_sum: f64,
}

impl EdgeStats {
    pub fn q_hat(&self) -> f64 {
        debug_assert!(self.visit_count >= 1, "q_hat undefined before first visit");
        self.value_sum / self.visit_count as f64
    }
}

/// UCT selection score: `q_hat + C * sqrt(ln(parent_n) / N)`, with an
/// infinite sentinel for unvisited edges so they are explored first.
pub fn uct_score(edge: &EdgeStats, parent_n: f64, exploration_c: f64) -> f64 {
    if edge.visit_count == 0 {
        return f64::INFINITY;
    }
    edge.q_hat() + exploration_c * (parent_n.ln() / edge.visit_count as f64).sqrt()
}

/// Lower confidence bound used by the elimination rule.
pub fn lcb_score(edge: &EdgeStats, parent_n: f64, exploration_c: f64) -> f64 {
    debug_assert!(edge.visit_count >= 1);
    edge.q_hat() - exploration_c * (parent_n.ln() / edge.visit_count as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct UctParams {
    pub exploration_c: f64,
    /// Simulation budget per decision.
    pub budget: u64,
    /// Rollout length in environment steps.
    pub rollout_horizon: u64,
    pub max_depth: usize,
    /// Confidence parameter shared by bounds and elimination.
    pub delta: f64,
}

impl UctParams {
    /// Spec defaults: C = sqrt(2) * r_max / (1 - gamma), S = 200, H = 20.
    pub fn defaults(r_max: f64, gamma: f64) -> Self {
        UctParams {
            exploration_c: std::f64::consts::SQRT_2 * r_max / (1.0 - gamma),
            budget: 200,
            rollout_horizon: 20,
            max_depth: 30,
            delta: 0.05,
        }
    }
}

/// Prior-knowledge hooks consulted during search. The default implementation
/// (`NoTransfer`) disables transfer entirely, collapsing the planner to
/// plain UCT.
pub trait TransferContext {
    fn enabled(&self) -> bool {
        false
    }
    /// Min-over-prior-tasks upper confidence bound at (state, action);
    /// +infinity when no prior task holds data there.
    fn transfer_ucb(&self, _key: &StateKey, _sig: &ActionSig) -> f64 {
        f64::INFINITY
    }
    /// Prior statistics to seed onto fresh edges at a matching node:
    /// (action sig, prior q_hat, seed visit count).
    fn seeds_for(&self, _key: &StateKey) -> Vec<(ActionSig, f64, u64)> {
        Vec::new()
    }
}

/// Plain UCT: no transfer.
pub struct NoTransfer;
impl TransferContext for NoTransfer {}

#[derive(Debug, Clone)]
pub struct ChildEdge<A> {
    pub sig: ActionSig,
    pub action: A,
    pub stats: EdgeStats,
    pub child: Option<usize>,
    /// Cached edge reward for deterministic environments.
    pub cached_reward: f64,
    pub eliminated: bool,
    /// Portion of the stats contributed by prior-task seeding; subtracted
    /// when live evidence is archived back.
    pub seed_n: u64,
    pub seed_sum: f64,
}

#[derive(Debug, Clone)]
pub struct SearchNode<S, A> {
    pub state: S,
    pub key: StateKey,
    /// Visit count N(s): seeded counts plus one per live traversal,
    /// including the expansion visit.
    pub visits: u64,
    pub children: Vec<ChildEdge<A>>,
    pub terminal: bool,
}

pub struct SearchTree<E: SearchEnv> {
    pub nodes: Vec<SearchNode<E::State, E::Action>>,
    pub seeded_edges: u64,
}

impl<E: SearchEnv> SearchTree<E> {
    pub fn root(&self) -> &SearchNode<E::State, E::Action> {
        &self.nodes[0]
    }

    fn new_node(
        env: &E,
        transfer: &impl TransferContext,
        state: E::State,
        seeded_edges: &mut u64,
    ) -> SearchNode<E::State, E::Action> {
        let key = env.state_key(&state);
        let terminal = env.is_terminal(&state);
        let mut children: Vec<ChildEdge<E::Action>> = if terminal {
            Vec::new()
        } else {
            env.legal_actions(&state)
                .into_iter()
                .map(|a| ChildEdge {
                    sig: env.action_sig(&state, &a),
                    action: a,
                    stats: EdgeStats::default(),
                    child: None,
                    cached_reward: 0.0,
                    eliminated: false,
                    seed_n: 0,
                    seed_sum: 0.0,
                })
                .collect()
        };
        children.sort_by(|a, b| a.sig.cmp(&b.sig));
        let mut visits = 0;
        if transfer.enabled() && !children.is_empty() {
            for (sig, q, n) in transfer.seeds_for(&key) {
                if n == 0 {
                    continue;
                }
                if let Some(edge) = children.iter_mut().find(|c| c.sig == sig) {
                    if edge.stats.visit_count == 0 {
                        edge.stats.visit_count = n;
                        edge.stats.value_sum = q * n as f64;
                        edge.seed_n = n;
                        edge.seed_sum = edge.stats.value_sum;
                        visits += n;
                        *seeded_edges += 1;
                    }
                }
            }
        }
        SearchNode {
            state,
            key,
            visits,
            children,
            terminal,
        }
    }
}

/// Discounted return of a rollout under the environment's default policy.
pub fn rollout<E: SearchEnv>(
    env: &E,
    state: &E::State,
    horizon: u64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let gamma = env.gamma();
    let mut current = state.clone();
    let mut ret = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        if env.is_terminal(&current) {
            break;
        }
        let action = env.rollout_action(&current, rng);
        let (next, reward) = env.apply(&current, &action, rng);
        ret += discount * reward;
        discount *= gamma;
        current = next;
    }
    ret
}

/// Propagates a simulation outcome up the traversed path: each edge receives
/// the return discounted from its own depth; every touched node gains one
/// visit.
pub fn backpropagate<E: SearchEnv>(
    tree: &mut SearchTree<E>,
    path: &[(usize, usize)],
    edge_rewards: &[f64],
    leaf: usize,
    leaf_value: f64,
    gamma: f64,
) {
    debug_assert_eq!(path.len(), edge_rewards.len());
    tree.nodes[leaf].visits += 1;
    let mut value = leaf_value;
    for ((node_idx, child_idx), reward) in path.iter().zip(edge_rewards).rev() {
        value = reward + gamma * value;
        let node = &mut tree.nodes[*node_idx];
        node.visits += 1;
        let edge = &mut node.children[*child_idx];
        edge.stats.visit_count += 1;
        edge.stats.value_sum += value;
    }
}

/// Max-min selection at one node: for every non-eliminated action take
/// `min(uct_score, transfer_ucb)` and pick the argmax, ties resolved toward
/// higher visit count and then lexicographic sig order. With no transfer
/// data the min collapses to the plain UCT score.
pub fn maxmin_select<A>(
    node: &SearchNode<impl Clone, A>,
    transfer: &impl TransferContext,
    params: &UctParams,
) -> usize {
    let parent_n = (node.visits.max(1)) as f64;
    let mut best: Option<(usize, f64)> = None;
    for (idx, edge) in node.children.iter().enumerate() {
        if edge.eliminated {
            continue;
        }
        let uct = uct_score(&edge.stats, parent_n, params.exploration_c);
        let ucb = transfer.transfer_ucb(&node.key, &edge.sig);
        let score = uct.min(ucb);
        let better = match best {
            None => true,
            Some((best_idx, best_score)) => {
                let b = &node.children[best_idx];
                score > best_score
                    || (score == best_score
                        && (edge.stats.visit_count > b.stats.visit_count
                            || (edge.stats.visit_count == b.stats.visit_count
                                && edge.sig < b.sig)))
            }
        };
        if better {
            best = Some((idx, score));
        }
    }
    best.expect("maxmin_select on node with all actions eliminated").0
}

/// Applies the elimination rule at a node: an action is eliminated when its
/// transfer bound falls below the best live lower confidence bound. The
/// LCB-maximizing action itself is never eliminated; the marking is
/// idempotent. Returns the sigs currently eliminated at this node.
pub fn eliminate_actions<A>(
    node: &mut SearchNode<impl Clone, A>,
    transfer: &impl TransferContext,
    params: &UctParams,
) -> Vec<ActionSig> {
    if node.children.len() >= 2 {
        let parent_n = (node.visits.max(1)) as f64;
        let mut best_lcb = f64::NEG_INFINITY;
        let mut best_idx = usize::MAX;
        for (idx, edge) in node.children.iter().enumerate() {
            if edge.eliminated || edge.stats.visit_count == 0 {
                continue;
            }
            let lcb = lcb_score(&edge.stats, parent_n, params.exploration_c);
            if lcb > best_lcb {
                best_lcb = lcb;
                best_idx = idx;
            }
        }
        if best_idx != usize::MAX {
            for (idx, edge) in node.children.iter_mut().enumerate() {
                if idx == best_idx || edge.eliminated {
                    continue;
                }
                if transfer.transfer_ucb(&node.key, &edge.sig) < best_lcb {
                    edge.eliminated = true;
                }
            }
        }
    }
    node.children
        .iter()
        .filter(|c| c.eliminated)
        .map(|c| c.sig.clone())
        .collect()
}

/// Index of the recommended root action: maximal visit count, ties toward
/// higher q_hat and then lexicographic sig order. Eliminated actions are
/// not recommended.
fn best_root_child<A>(node: &SearchNode<impl Clone, A>) -> usize {
    let mut best: Option<usize> = None;
    for (idx, edge) in node.children.iter().enumerate() {
        if edge.eliminated {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let other = &node.children[b];
                let n = edge.stats.visit_count;
                let bn = other.stats.visit_count;
                if n != bn {
                    n > bn
                } else if n == 0 {
                    edge.sig < other.sig
                } else {
                    let q = edge.stats.q_hat();
                    let bq = other.stats.q_hat();
                    q > bq || (q == bq && edge.sig < other.sig)
                }
            }
        };
        if better {
            best = Some(idx);
        }
    }
    best.expect("root must retain at least one action")
}

/// True when every non-best root action is certified inferior: eliminated,
/// or its transfer bound sits below the best live root LCB.
fn root_stop_condition<E: SearchEnv>(
    tree: &SearchTree<E>,
    transfer: &impl TransferContext,
    params: &UctParams,
) -> bool {
    let root = tree.root();
    if root.children.len() < 2 {
        return true;
    }
    let parent_n = (root.visits.max(1)) as f64;
    let best_lcb = root
        .children
        .iter()
        .filter(|c| !c.eliminated && c.stats.visit_count >= 1)
        .map(|c| lcb_score(&c.stats, parent_n, params.exploration_c))
        .fold(f64::NEG_INFINITY, f64::max);
    if best_lcb == f64::NEG_INFINITY {
        return false;
    }
    let best = best_root_child(root);
    root.children.iter().enumerate().all(|(idx, edge)| {
        idx == best
            || edge.eliminated
            || transfer.transfer_ucb(&root.key, &edge.sig) < best_lcb
    })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome<A> {
    pub action: A,
    pub sims_used: u64,
    pub seeded_edges: u64,
}

/// Plain UCT planning: runs up to `budget` simulations (selection down the
/// tree, one expansion, rollout, backpropagation) and returns the
/// most-visited root action.
pub fn plan<E: SearchEnv>(
    env: &E,
    root_state: &E::State,
    params: &UctParams,
    rng: &mut ChaCha8Rng,
) -> PlanOutcome<E::Action> {
    plan_with_transfer(env, root_state, params, &NoTransfer, rng).0
}

/// UCT with transfer hooks (subtree seeding, max-min selection, elimination,
/// early stop). Also returns the finished tree so callers can archive it.
pub fn plan_with_transfer<E: SearchEnv>(
    env: &E,
    root_state: &E::State,
    params: &UctParams,
    transfer: &impl TransferContext,
    rng: &mut ChaCha8Rng,
) -> (PlanOutcome<E::Action>, SearchTree<E>) {
    let mut tree = SearchTree::<E> {
        nodes: Vec::new(),
        seeded_edges: 0,
    };
    let mut seeded = 0;
    let root = SearchTree::<E>::new_node(env, transfer, root_state.clone(), &mut seeded);
    assert!(
        !root.children.is_empty(),
        "plan requires at least one legal root action"
    );
    tree.nodes.push(root);
    tree.seeded_edges = seeded;

    let gamma = env.gamma();
    let mut sims_used = 0;
    let forced = tree.root().children.len() == 1;

    if !forced {
        for _ in 0..params.budget {
            if transfer.enabled() {
                eliminate_actions(&mut tree.nodes[0], transfer, params);
                if root_stop_condition(&tree, transfer, params) {
                    break;
                }
            }
            sims_used += 1;
            simulate(env, &mut tree, params, transfer, rng, gamma);
        }
    }

    let root = tree.root();
    let best = best_root_child(root);
    let outcome = PlanOutcome {
        action: root.children[best].action.clone(),
        sims_used,
        seeded_edges: tree.seeded_edges,
    };
    (outcome, tree)
}

fn simulate<E: SearchEnv>(
    env: &E,
    tree: &mut SearchTree<E>,
    params: &UctParams,
    transfer: &impl TransferContext,
    rng: &mut ChaCha8Rng,
    gamma: f64,
) {
    let mut path: Vec<(usize, usize)> = Vec::new();
    let mut edge_rewards: Vec<f64> = Vec::new();
    let mut node_idx = 0usize;

    loop {
        if tree.nodes[node_idx].terminal || path.len() >= params.max_depth {
            let value = if tree.nodes[node_idx].terminal {
                0.0
            } else {
                rollout(env, &tree.nodes[node_idx].state, params.rollout_horizon, rng)
            };
            backpropagate(tree, &path, &edge_rewards, node_idx, value, gamma);
            return;
        }
        if transfer.enabled() {
            eliminate_actions(&mut tree.nodes[node_idx], transfer, params);
        }
        let child_idx = maxmin_select(&tree.nodes[node_idx], transfer, params);
        let expanding = tree.nodes[node_idx].children[child_idx].child.is_none();

        let reward;
        if expanding {
            let (next_state, r) = {
                let node = &tree.nodes[node_idx];
                env.apply(&node.state, &node.children[child_idx].action, rng)
            };
            reward = r;
            let mut seeded = tree.seeded_edges;
            let new_node = SearchTree::<E>::new_node(env, transfer, next_state, &mut seeded);
            tree.seeded_edges = seeded;
            tree.nodes.push(new_node);
            let new_idx = tree.nodes.len() - 1;
            let edge = &mut tree.nodes[node_idx].children[child_idx];
            edge.child = Some(new_idx);
            edge.cached_reward = r;
            path.push((node_idx, child_idx));
            edge_rewards.push(reward);
            // Expansion ends the descent: rollout from the new leaf.
            let leaf = new_idx;
            let value = if tree.nodes[leaf].terminal {
                0.0
            } else {
                rollout(env, &tree.nodes[leaf].state, params.rollout_horizon, rng)
            };
            backpropagate(tree, &path, &edge_rewards, leaf, value, gamma);
            return;
        }

        let next_idx = tree.nodes[node_idx].children[child_idx].child.unwrap();
        if env.resample_edges() {
            let node = &tree.nodes[node_idx];
            let (_, r) = env.apply(&node.state, &node.children[child_idx].action, rng);
            reward = r;
        } else {
            reward = tree.nodes[node_idx].children[child_idx].cached_reward;
        }
        path.push((node_idx, child_idx));
        edge_rewards.push(reward);
        node_idx = next_idx;
    }
}

/// Depth-limited structured text dump for debugging.
pub fn dump_tree<E: SearchEnv>(tree: &SearchTree<E>, max_depth: usize) -> String {
    let mut out = String::new();
    fn walk<E: SearchEnv>(
        tree: &SearchTree<E>,
        idx: usize,
        depth: usize,
        max_depth: usize,
        out: &mut String,
    ) {
        if depth > max_depth {
            return;
        }
        let node = &tree.nodes[idx];
        out.push_str(&format!(
            "{}node visits={} key={}\n",
            "  ".repeat(depth),
            node.visits,
            node.key
        ));
        for edge in &node.children {
            out.push_str(&format!(
                "{}- {} N={} q={:.4}{}\n",
                "  ".repeat(depth + 1),
                edge.sig,
                edge.stats.visit_count,
                if edge.stats.visit_count > 0 {
                    edge.stats.q_hat()
                } else {
                    0.0
                },
                if edge.eliminated { " [eliminated]" } else { "" }
            ));
            if let Some(child) = edge.child {
                walk(tree, child, depth + 1, max_depth, out);
            }
        }
    }
    walk(tree, 0, 0, max_depth, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn uct_score_unvisited_is_infinite() {
        let edge = EdgeStats::default();
        assert_eq!(uct_score(&edge, 10.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn uct_score_at_parent_e_is_q_plus_c() {
        let edge = EdgeStats {
            visit_count: 1,
            value_sum: 0.5,
        };
        let score = uct_score(&edge, std::f64::consts::E, 1.0);
        assert!((score - 1.5).abs() < 1e-12);
    }

    #[test]
    fn uct_scores_match_independent_arithmetic() {
        // Fixed stats table recomputed with plain arithmetic.
        let table = [
            (3u64, 1.2, 50.0, 1.4),
            (7, -2.0, 120.0, 0.7),
            (25, 10.0, 400.0, 2.0),
            (1, 0.0, 2.0, 0.5),
        ];
        for (n, sum, parent, c) in table {
            let edge = EdgeStats {
                visit_count: n,
                value_sum: sum,
            };
            let expected = sum / n as f64 + c * ((parent as f64).ln() / n as f64).sqrt();
            assert!((uct_score(&edge, parent, c) - expected).abs() < 1e-12);
        }
    }

    // Tiny deterministic chain environment for backprop/rollout tests.
    struct Chain {
        rewards: Vec<f64>,
        gamma: f64,
    }

    impl SearchEnv for Chain {
        type State = usize;
        type Action = usize;

        fn legal_actions(&self, s: &usize) -> Vec<usize> {
            if *s >= self.rewards.len() {
                vec![]
            } else {
                vec![0]
            }
        }
        fn action_sig(&self, _s: &usize, a: &usize) -> ActionSig {
            ActionSig(format!("a{a}"))
        }
        fn apply(&self, s: &usize, _a: &usize, _rng: &mut ChaCha8Rng) -> (usize, f64) {
            (*s + 1, self.rewards[*s])
        }
        fn state_key(&self, s: &usize) -> StateKey {
            StateKey(format!("s{s}"))
        }
        fn is_terminal(&self, s: &usize) -> bool {
            *s >= self.rewards.len()
        }
        fn rollout_action(&self, _s: &usize, _rng: &mut ChaCha8Rng) -> usize {
            0
        }
        fn gamma(&self) -> f64 {
            self.gamma
        }
    }

    #[test]
    fn rollout_geometric_sum() {
        let env = Chain {
            rewards: vec![1.0, -1.0, 1.0],
            gamma: 0.99,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ret = rollout(&env, &0usize, 3, &mut rng);
        assert!((ret - (1.0 - 0.99 + 0.9801)).abs() < 1e-12);
        assert_eq!(rollout(&env, &0usize, 0, &mut rng), 0.0);
        let zero_env = Chain {
            rewards: vec![0.0; 5],
            gamma: 0.9,
        };
        assert_eq!(rollout(&zero_env, &0usize, 5, &mut rng), 0.0);
    }

    #[test]
    fn backprop_single_edge_and_running_mean() {
        let env = Chain {
            rewards: vec![0.0],
            gamma: 1.0,
        };
        let mut seeded = 0;
        let mut tree = SearchTree::<Chain> {
            nodes: vec![SearchTree::<Chain>::new_node(&env, &NoTransfer, 0, &mut seeded)],
            seeded_edges: 0,
        };
        let leaf = SearchTree::<Chain>::new_node(&env, &NoTransfer, 1, &mut seeded);
        tree.nodes.push(leaf);
        tree.nodes[0].children[0].child = Some(1);

        backpropagate(&mut tree, &[(0, 0)], &[0.0], 1, 1.0, 1.0);
        assert_eq!(tree.nodes[0].children[0].stats.visit_count, 1);
        assert!((tree.nodes[0].children[0].stats.q_hat() - 1.0).abs() < 1e-12);

        backpropagate(&mut tree, &[(0, 0)], &[0.0], 1, 0.0, 1.0);
        assert!((tree.nodes[0].children[0].stats.q_hat() - 0.5).abs() < 1e-12);
        assert_eq!(tree.nodes[0].visits, 2);
        assert_eq!(tree.nodes[1].visits, 2);
    }

    #[test]
    fn backprop_q_matches_offline_mean() {
        use rand::Rng;
        let env = Chain {
            rewards: vec![0.0],
            gamma: 0.9,
        };
        let mut seeded = 0;
        let mut tree = SearchTree::<Chain> {
            nodes: vec![SearchTree::<Chain>::new_node(&env, &NoTransfer, 0, &mut seeded)],
            seeded_edges: 0,
        };
        let leaf = SearchTree::<Chain>::new_node(&env, &NoTransfer, 1, &mut seeded);
        tree.nodes.push(leaf);
        tree.nodes[0].children[0].child = Some(1);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut contributions = Vec::new();
        for _ in 0..500 {
            let reward: f64 = rng.random_range(-1.0..1.0);
            let leaf_value: f64 = rng.random_range(-1.0..1.0);
            contributions.push(reward + 0.9 * leaf_value);
            backpropagate(&mut tree, &[(0, 0)], &[reward], 1, leaf_value, 0.9);
        }
        let mean = contributions.iter().sum::<f64>() / contributions.len() as f64;
        assert!((tree.nodes[0].children[0].stats.q_hat() - mean).abs() < 1e-12);
    }
}

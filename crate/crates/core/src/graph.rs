//! CPN topologies: nodes with CPU capacity, links with bandwidth, seeded
//! generation of a base graph and perturbed variants, and loop-free
//! path enumeration for placement candidates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Stable node identifier, preserved across perturbed snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Access,
    Core,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Access => write!(f, "access"),
            Region::Core => write!(f, "core"),
        }
    }
}

/// Undirected link identifier in canonical (low, high) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId {
    a: NodeId,
    b: NodeId,
}

impl LinkId {
    /// Canonicalizes the pair. Panics on self-loops; the graph API never
    /// constructs them.
    pub fn new(u: NodeId, v: NodeId) -> Self {
        assert!(u != v, "self-loop link {u}-{v}");
        if u < v {
            LinkId { a: u, b: v }
        } else {
            LinkId { a: v, b: u }
        }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    /// The endpoint that is not `n`. Panics if `n` is not an endpoint.
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            assert_eq!(self.b, n, "node {n} not on link {self}");
            self.a
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeAttrs {
    pub region: Region,
    pub cpu_capacity: u32,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("could not keep the graph connected after {0} attempts")]
    Connectivity(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// CPN topology with per-node CPU capacity and per-link bandwidth.
/// Immutable once built; cloning is cheap at the sizes used here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub graph_id: String,
    nodes: BTreeMap<NodeId, NodeAttrs>,
    links: BTreeMap<LinkId, u32>,
}

impl NetworkGraph {
    pub fn new(graph_id: impl Into<String>) -> Self {
        NetworkGraph {
            graph_id: graph_id.into(),
            nodes: BTreeMap::new(),
            links: BTreeMap::new(),
        }
    }

    pub fn add_node(&mut self, id: NodeId, region: Region, cpu_capacity: u32) {
        self.nodes.insert(
            id,
            NodeAttrs {
                region,
                cpu_capacity,
            },
        );
    }

    /// Inserts (or overwrites) an undirected link. Both endpoints must exist.
    pub fn add_link(&mut self, u: NodeId, v: NodeId, bandwidth: u32) {
        assert!(self.nodes.contains_key(&u), "unknown node {u}");
        assert!(self.nodes.contains_key(&v), "unknown node {v}");
        self.links.insert(LinkId::new(u, v), bandwidth);
    }

    pub fn remove_link(&mut self, link: LinkId) -> Option<u32> {
        self.links.remove(&link)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeAttrs)> + '_ {
        self.nodes.iter().map(|(id, a)| (*id, a))
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, u32)> + '_ {
        self.links.iter().map(|(l, bw)| (*l, *bw))
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_attrs(&self, id: NodeId) -> Option<&NodeAttrs> {
        self.nodes.get(&id)
    }

    pub fn cpu_capacity(&self, id: NodeId) -> u32 {
        self.nodes[&id].cpu_capacity
    }

    pub fn bandwidth(&self, link: LinkId) -> Option<u32> {
        self.links.get(&link).copied()
    }

    pub fn access_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, a)| a.region == Region::Access)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn total_cpu(&self) -> u64 {
        self.nodes.values().map(|a| a.cpu_capacity as u64).sum()
    }

    pub fn total_bandwidth(&self) -> u64 {
        self.links.values().map(|bw| *bw as u64).sum()
    }

    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.keys().map(|id| (*id, Vec::new())).collect();
        for link in self.links.keys() {
            let (u, v) = link.endpoints();
            adj.get_mut(&u).unwrap().push(v);
            adj.get_mut(&v).unwrap().push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.keys().next() else {
            return true;
        };
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[&u] {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    pub fn with_graph_id(mut self, id: impl Into<String>) -> Self {
        self.graph_id = id.into();
        self
    }

    /// Canonical text form: `graph <id>`, then one `node`/`link` line per
    /// element in sorted order. Round-trips exactly through [`parse_graph`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("graph {}\n", self.graph_id));
        for (id, attrs) in &self.nodes {
            out.push_str(&format!(
                "node {} {} {}\n",
                id, attrs.region, attrs.cpu_capacity
            ));
        }
        for (link, bw) in &self.links {
            let (u, v) = link.endpoints();
            out.push_str(&format!("link {} {} {}\n", u, v, bw));
        }
        out
    }
}

pub fn parse_graph(text: &str) -> Result<NetworkGraph, GraphError> {
    let mut graph: Option<NetworkGraph> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let tag = parts.next().unwrap();
        match tag {
            "graph" => {
                let id = trimmed.strip_prefix("graph").unwrap().trim();
                graph = Some(NetworkGraph::new(id));
            }
            "node" => {
                let g = graph.as_mut().ok_or(GraphError::Parse {
                    line,
                    msg: "node before graph header".into(),
                })?;
                let id: u32 = parse_field(parts.next(), line, "node id")?;
                let region = match parts.next() {
                    Some("access") => Region::Access,
                    Some("core") => Region::Core,
                    other => {
                        return Err(GraphError::Parse {
                            line,
                            msg: format!("bad region {other:?}"),
                        })
                    }
                };
                let cpu: u32 = parse_field(parts.next(), line, "cpu")?;
                g.add_node(NodeId(id), region, cpu);
            }
            "link" => {
                let g = graph.as_mut().ok_or(GraphError::Parse {
                    line,
                    msg: "link before graph header".into(),
                })?;
                let u: u32 = parse_field(parts.next(), line, "link endpoint")?;
                let v: u32 = parse_field(parts.next(), line, "link endpoint")?;
                let bw: u32 = parse_field(parts.next(), line, "bandwidth")?;
                if u == v {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("self-loop {u}-{v}"),
                    });
                }
                if !g.contains_node(NodeId(u)) || !g.contains_node(NodeId(v)) {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("link {u}-{v} references unknown node"),
                    });
                }
                g.add_link(NodeId(u), NodeId(v), bw);
            }
            other => {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("unknown record `{other}`"),
                })
            }
        }
    }
    graph.ok_or(GraphError::Parse {
        line: 0,
        msg: "empty graph file".into(),
    })
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, GraphError> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| GraphError::Parse {
            line,
            msg: format!("missing or invalid {what}"),
        })
}

/// Capacity/bandwidth ranges for topology generation (inclusive bounds).
#[derive(Debug, Clone, Copy)]
pub struct TopologyParams {
    pub access_cpu: (u32, u32),
    pub core_cpu: (u32, u32),
    pub bandwidth: (u32, u32),
    /// Fraction of nodes placed in the access region.
    pub access_fraction: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            access_cpu: (8, 16),
            core_cpu: (24, 48),
            bandwidth: (10, 30),
            access_fraction: 0.7,
        }
    }
}

/// Random connected topology: uniform spanning tree by sequential attachment,
/// then extra links drawn uniformly from the remaining non-adjacent pairs.
/// Pure function of its arguments.
pub fn build_base_topology(
    n_nodes: usize,
    n_links: usize,
    seed: u64,
) -> Result<NetworkGraph, GraphError> {
    build_topology(n_nodes, n_links, seed, &TopologyParams::default())
}

pub fn build_topology(
    n_nodes: usize,
    n_links: usize,
    seed: u64,
    params: &TopologyParams,
) -> Result<NetworkGraph, GraphError> {
    if n_nodes == 0 {
        return Err(GraphError::Infeasible("need at least one node".into()));
    }
    let max_links = n_nodes * (n_nodes - 1) / 2;
    if n_links + 1 < n_nodes || n_links > max_links {
        return Err(GraphError::Infeasible(format!(
            "n_links={n_links} outside [{}, {max_links}] for n_nodes={n_nodes}",
            n_nodes - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<NodeId> = (0..n_nodes as u32).map(NodeId).collect();

    // Spanning tree by random attachment.
    let mut tree_links: BTreeSet<LinkId> = BTreeSet::new();
    for i in 1..n_nodes {
        let parent = ids[rng.random_range(0..i)];
        tree_links.insert(LinkId::new(ids[i], parent));
    }

    // Extra links from the complement, uniformly without replacement.
    let mut candidates: Vec<LinkId> = Vec::new();
    for i in 0..n_nodes {
        for j in i + 1..n_nodes {
            let link = LinkId::new(ids[i], ids[j]);
            if !tree_links.contains(&link) {
                candidates.push(link);
            }
        }
    }
    candidates.shuffle(&mut rng);
    let extra = n_links - (n_nodes - 1);
    let mut all_links: Vec<LinkId> = tree_links.into_iter().collect();
    all_links.extend(candidates.into_iter().take(extra));
    all_links.sort();

    // Region split.
    let n_access = (n_nodes as f64 * params.access_fraction).round() as usize;
    let mut shuffled = ids.clone();
    shuffled.shuffle(&mut rng);
    let access: BTreeSet<NodeId> = shuffled.into_iter().take(n_access).collect();

    let mut g = NetworkGraph::new("G0");
    for &id in &ids {
        let region = if access.contains(&id) {
            Region::Access
        } else {
            Region::Core
        };
        let (lo, hi) = match region {
            Region::Access => params.access_cpu,
            Region::Core => params.core_cpu,
        };
        g.add_node(id, region, rng.random_range(lo..=hi));
    }
    for link in all_links {
        let (u, v) = link.endpoints();
        g.add_link(u, v, rng.random_range(params.bandwidth.0..=params.bandwidth.1));
    }
    debug_assert!(g.is_connected());
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    Upgrade,
    Degrade,
    Mixed,
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationKind::Upgrade => write!(f, "upgrade"),
            PerturbationKind::Degrade => write!(f, "degrade"),
            PerturbationKind::Mixed => write!(f, "mixed"),
        }
    }
}

/// How to derive a perturbed snapshot from a base graph.
///
/// `Mixed` applies two passes over independent selections of
/// `fraction_affected`: one scaled by the given factors and one by their
/// reciprocals.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub fraction_affected: f64,
    pub capacity_scale: f64,
    pub bandwidth_scale: f64,
    pub links_added: usize,
    pub links_removed: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn upgrade(seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::Upgrade,
            fraction_affected: 0.3,
            capacity_scale: 1.2,
            bandwidth_scale: 1.2,
            links_added: 2,
            links_removed: 0,
            seed,
        }
    }

    pub fn degrade(seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::Degrade,
            fraction_affected: 0.3,
            capacity_scale: 0.8,
            bandwidth_scale: 0.8,
            links_added: 0,
            links_removed: 2,
            seed,
        }
    }

    pub fn mixed(seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::Mixed,
            fraction_affected: 0.2,
            capacity_scale: 1.2,
            bandwidth_scale: 1.2,
            links_added: 2,
            links_removed: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(0.0..=1.0).contains(&self.fraction_affected) {
            return Err(GraphError::Infeasible(format!(
                "fraction_affected {} outside [0,1]",
                self.fraction_affected
            )));
        }
        if self.capacity_scale <= 0.0 || self.bandwidth_scale <= 0.0 {
            return Err(GraphError::Infeasible("scales must be positive".into()));
        }
        Ok(())
    }
}

fn scale_capacity(value: u32, scale: f64) -> u32 {
    ((value as f64 * scale).round() as u32).max(1)
}

/// Derives a perturbed snapshot with the same NodeId namespace. Link removal
/// never disconnects the graph; candidates that would are skipped, and the
/// call fails if no removable link remains.
pub fn apply_perturbation(
    g: &NetworkGraph,
    spec: &PerturbationSpec,
) -> Result<NetworkGraph, GraphError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = g.clone();

    let passes: Vec<(f64, f64)> = match spec.kind {
        PerturbationKind::Upgrade | PerturbationKind::Degrade => {
            vec![(spec.capacity_scale, spec.bandwidth_scale)]
        }
        PerturbationKind::Mixed => vec![
            (spec.capacity_scale, spec.bandwidth_scale),
            (1.0 / spec.capacity_scale, 1.0 / spec.bandwidth_scale),
        ],
    };

    for (cap_scale, bw_scale) in passes {
        let mut node_ids: Vec<NodeId> = out.node_ids().collect();
        node_ids.shuffle(&mut rng);
        let n_sel = (node_ids.len() as f64 * spec.fraction_affected).floor() as usize;
        for id in node_ids.into_iter().take(n_sel) {
            let attrs = *out.node_attrs(id).unwrap();
            out.add_node(id, attrs.region, scale_capacity(attrs.cpu_capacity, cap_scale));
        }

        let mut link_ids: Vec<LinkId> = out.links().map(|(l, _)| l).collect();
        link_ids.shuffle(&mut rng);
        let l_sel = (link_ids.len() as f64 * spec.fraction_affected).floor() as usize;
        for link in link_ids.into_iter().take(l_sel) {
            let bw = out.bandwidth(link).unwrap();
            let (u, v) = link.endpoints();
            out.add_link(u, v, scale_capacity(bw, bw_scale));
        }
    }

    // Removals before additions, so added links are never removed again.
    let mut removed = 0;
    let mut attempts = 0;
    while removed < spec.links_removed {
        let mut link_ids: Vec<LinkId> = out.links().map(|(l, _)| l).collect();
        link_ids.shuffle(&mut rng);
        let mut found = false;
        for link in link_ids {
            attempts += 1;
            let bw = out.remove_link(link).unwrap();
            if out.is_connected() {
                found = true;
                break;
            }
            let (u, v) = link.endpoints();
            out.add_link(u, v, bw);
        }
        if !found {
            return Err(GraphError::Connectivity(attempts));
        }
        removed += 1;
    }

    let ids: Vec<NodeId> = out.node_ids().collect();
    let mut free_pairs: Vec<LinkId> = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let link = LinkId::new(ids[i], ids[j]);
            if out.bandwidth(link).is_none() {
                free_pairs.push(link);
            }
        }
    }
    if free_pairs.len() < spec.links_added {
        return Err(GraphError::Infeasible(format!(
            "cannot add {} links; only {} unlinked pairs remain",
            spec.links_added,
            free_pairs.len()
        )));
    }
    free_pairs.shuffle(&mut rng);
    let params = TopologyParams::default();
    for link in free_pairs.into_iter().take(spec.links_added) {
        let (u, v) = link.endpoints();
        let bw = rng.random_range(params.bandwidth.0..=params.bandwidth.1);
        out.add_link(u, v, bw);
    }
    debug_assert!(out.is_connected());
    Ok(out)
}

/// The standard four-snapshot family: base graph plus upgrade, degrade and
/// mixed perturbations, labelled G0..G3.
pub fn build_standard_family(
    n_nodes: usize,
    n_links: usize,
    base_seed: u64,
    perturb_seed: u64,
) -> Result<Vec<NetworkGraph>, GraphError> {
    build_standard_family_with(
        n_nodes,
        n_links,
        base_seed,
        perturb_seed,
        &TopologyParams::default(),
    )
}

pub fn build_standard_family_with(
    n_nodes: usize,
    n_links: usize,
    base_seed: u64,
    perturb_seed: u64,
    params: &TopologyParams,
) -> Result<Vec<NetworkGraph>, GraphError> {
    let g0 = build_topology(n_nodes, n_links, base_seed, params)?;
    let g1 = apply_perturbation(&g0, &PerturbationSpec::upgrade(perturb_seed))?
        .with_graph_id("G1");
    let g2 = apply_perturbation(&g0, &PerturbationSpec::degrade(perturb_seed))?
        .with_graph_id("G2");
    let g3 = apply_perturbation(&g0, &PerturbationSpec::mixed(perturb_seed))?
        .with_graph_id("G3");
    Ok(vec![g0, g1, g2, g3])
}

/// Shortest path under (hop count, lexicographic node sequence) order,
/// avoiding the given nodes and links. Layered BFS; valid because any
/// hop-minimal path is simple.
fn shortest_path_filtered(
    adj: &BTreeMap<NodeId, Vec<NodeId>>,
    src: NodeId,
    dst: NodeId,
    blocked_nodes: &BTreeSet<NodeId>,
    blocked_links: &BTreeSet<LinkId>,
) -> Option<Vec<NodeId>> {
    if blocked_nodes.contains(&src) || blocked_nodes.contains(&dst) {
        return None;
    }
    if src == dst {
        return Some(vec![src]);
    }
    let allowed = |u: NodeId, v: NodeId| !blocked_links.contains(&LinkId::new(u, v));

    let mut dist: BTreeMap<NodeId, usize> = BTreeMap::new();
    dist.insert(src, 0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for &v in adj.get(&u).into_iter().flatten() {
            if blocked_nodes.contains(&v) || !allowed(u, v) || dist.contains_key(&v) {
                continue;
            }
            dist.insert(v, d + 1);
            queue.push_back(v);
        }
    }
    let target_dist = *dist.get(&dst)?;

    // Reconstruct the lexicographically smallest path layer by layer.
    let mut best: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    best.insert(src, vec![src]);
    for d in 1..=target_dist {
        let layer: Vec<NodeId> = dist
            .iter()
            .filter(|(_, &dd)| dd == d)
            .map(|(id, _)| *id)
            .collect();
        for v in layer {
            let mut candidate: Option<Vec<NodeId>> = None;
            for &u in adj.get(&v).into_iter().flatten() {
                if dist.get(&u) != Some(&(d - 1)) || !allowed(u, v) {
                    continue;
                }
                if let Some(prefix) = best.get(&u) {
                    let mut path = prefix.clone();
                    path.push(v);
                    if candidate.as_ref().is_none_or(|c| path < *c) {
                        candidate = Some(path);
                    }
                }
            }
            if let Some(path) = candidate {
                best.insert(v, path);
            }
        }
    }
    best.remove(&dst)
}

/// Up to `k` loop-free paths ordered by hop count, ties broken by
/// lexicographic node-sequence order (Yen's algorithm on unit edge costs).
/// Empty iff `dst` is unreachable.
pub fn k_shortest_paths(
    g: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Vec<Vec<NodeId>> {
    if k == 0 || !g.contains_node(src) || !g.contains_node(dst) {
        return Vec::new();
    }
    let adj = g.adjacency();
    let path_order = |a: &Vec<NodeId>, b: &Vec<NodeId>| a.len().cmp(&b.len()).then(a.cmp(b));

    let Some(first) =
        shortest_path_filtered(&adj, src, dst, &BTreeSet::new(), &BTreeSet::new())
    else {
        return Vec::new();
    };
    let mut result = vec![first];
    let mut seen: BTreeSet<Vec<NodeId>> = result.iter().cloned().collect();
    let mut pool: Vec<Vec<NodeId>> = Vec::new();

    while result.len() < k {
        let prev = result.last().unwrap().clone();
        for spur_idx in 0..prev.len() - 1 {
            let spur = prev[spur_idx];
            let root = &prev[..=spur_idx];
            let mut blocked_links = BTreeSet::new();
            for path in result.iter().chain(pool.iter()) {
                if path.len() > spur_idx + 1 && path[..=spur_idx] == *root {
                    blocked_links.insert(LinkId::new(path[spur_idx], path[spur_idx + 1]));
                }
            }
            let blocked_nodes: BTreeSet<NodeId> = root[..spur_idx].iter().copied().collect();
            if let Some(spur_path) =
                shortest_path_filtered(&adj, spur, dst, &blocked_nodes, &blocked_links)
            {
                let mut total: Vec<NodeId> = root[..spur_idx].to_vec();
                total.extend(spur_path);
                if seen.insert(total.clone()) {
                    pool.push(total);
                }
            }
        }
        if pool.is_empty() {
            break;
        }
        let best_idx = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| path_order(a, b))
            .map(|(i, _)| i)
            .unwrap();
        result.push(pool.swap_remove(best_idx));
    }
    result
}

#[cfg(test)]
pub(crate) fn line_graph(n: u32) -> NetworkGraph {
    let mut g = NetworkGraph::new("line");
    for i in 0..n {
        g.add_node(NodeId(i), Region::Access, 10);
    }
    for i in 0..n - 1 {
        g.add_link(NodeId(i), NodeId(i + 1), 10);
    }
    g
}

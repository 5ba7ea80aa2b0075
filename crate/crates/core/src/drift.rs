//! Graph drift: spectral, capacity, bandwidth and edit differences between
//! two network snapshots, their weighted normalized aggregate, and the
//! Lipschitz surrogate bound on the MDP distance.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{LinkId, NetworkGraph, NodeId};

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("invalid drift weights: {0}")]
    InvalidWeights(String),
    #[error("surrogate failure: positive distance observed at zero drift")]
    SurrogateFailure,
    #[error("no sample with positive drift")]
    NoPositiveDrift,
}

/// Component weights, per-component normalizers and the Lipschitz constant
/// used to turn drift into an MDP-distance bound.
#[derive(Debug, Clone, Copy)]
pub struct DriftWeights {
    pub w_spec: f64,
    pub w_cap: f64,
    pub w_bw: f64,
    pub w_edit: f64,
    pub rho_spec: f64,
    pub rho_cap: f64,
    pub rho_bw: f64,
    pub rho_edit: f64,
    pub lipschitz_c: f64,
}

impl DriftWeights {
    /// Equal weights with normalizers taken from the reference graph, so the
    /// components are dimensionless before weighting.
    pub fn defaults_for(reference: &NetworkGraph) -> Self {
        DriftWeights {
            w_spec: 0.25,
            w_cap: 0.25,
            w_bw: 0.25,
            w_edit: 0.25,
            rho_spec: reference.node_count().max(1) as f64,
            rho_cap: (reference.total_cpu().max(1)) as f64,
            rho_bw: (reference.total_bandwidth().max(1)) as f64,
            rho_edit: (reference.node_count() + reference.link_count()).max(1) as f64,
            lipschitz_c: 1.0,
        }
    }

    pub fn with_lipschitz_c(mut self, c: f64) -> Self {
        self.lipschitz_c = c;
        self
    }

    pub fn validate(&self) -> Result<(), DriftError> {
        let weights = [self.w_spec, self.w_cap, self.w_bw, self.w_edit];
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(DriftError::InvalidWeights("negative weight".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(DriftError::InvalidWeights("all weights zero".into()));
        }
        let norms = [self.rho_spec, self.rho_cap, self.rho_bw, self.rho_edit];
        if norms.iter().any(|r| *r <= 0.0 || !r.is_finite()) {
            return Err(DriftError::InvalidWeights("normalizer must be > 0".into()));
        }
        if self.lipschitz_c <= 0.0 {
            return Err(DriftError::InvalidWeights("lipschitz_c must be > 0".into()));
        }
        Ok(())
    }
}

/// Raw drift components, the weighted aggregate and the surrogate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub delta_spec: f64,
    pub delta_cap: f64,
    pub delta_bw: f64,
    pub delta_edit: f64,
    pub delta_g: f64,
    pub mdp_distance_bound: f64,
}

impl DriftReport {
    pub fn zero() -> Self {
        DriftReport {
            delta_spec: 0.0,
            delta_cap: 0.0,
            delta_bw: 0.0,
            delta_edit: 0.0,
            delta_g: 0.0,
            mdp_distance_bound: 0.0,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.delta_spec,
            self.delta_cap,
            self.delta_bw,
            self.delta_edit,
            self.delta_g,
            self.mdp_distance_bound
        )
    }
}

fn laplacian_eigenvalues(g: &NetworkGraph) -> Vec<f64> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let n = ids.len();
    if n == 0 {
        return Vec::new();
    }
    let index: std::collections::BTreeMap<NodeId, usize> =
        ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for (link, _) in g.links() {
        let (u, v) = link.endpoints();
        let (i, j) = (index[&u], index[&v]);
        lap[(i, j)] -= 1.0;
        lap[(j, i)] -= 1.0;
        lap[(i, i)] += 1.0;
        lap[(j, j)] += 1.0;
    }
    let eigen = lap.symmetric_eigenvalues();
    let mut vals: Vec<f64> = eigen.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// L2 norm of the difference between ascending Laplacian eigenvalue vectors,
/// the shorter vector zero-padded at the front.
pub fn spectral_distance(g: &NetworkGraph, g2: &NetworkGraph) -> f64 {
    let mut a = laplacian_eigenvalues(g);
    let mut b = laplacian_eigenvalues(g2);
    while a.len() < b.len() {
        a.insert(0, 0.0);
    }
    while b.len() < a.len() {
        b.insert(0, 0.0);
    }
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sum of |C - C'| over the union of node ids; a missing node counts as
/// capacity zero.
pub fn capacity_delta(g: &NetworkGraph, g2: &NetworkGraph) -> f64 {
    let keys: BTreeSet<NodeId> = g.node_ids().chain(g2.node_ids()).collect();
    keys.iter()
        .map(|id| {
            let a = g.node_attrs(*id).map_or(0, |n| n.cpu_capacity) as f64;
            let b = g2.node_attrs(*id).map_or(0, |n| n.cpu_capacity) as f64;
            (a - b).abs()
        })
        .sum()
}

/// Sum of |B - B'| over the union of links; a missing link counts as
/// bandwidth zero.
pub fn bandwidth_delta(g: &NetworkGraph, g2: &NetworkGraph) -> f64 {
    let keys: BTreeSet<LinkId> = g.links().map(|(l, _)| l).chain(g2.links().map(|(l, _)| l)).collect();
    keys.iter()
        .map(|l| {
            let a = g.bandwidth(*l).unwrap_or(0) as f64;
            let b = g2.bandwidth(*l).unwrap_or(0) as f64;
            (a - b).abs()
        })
        .sum()
}

/// |V symmetric-difference V'| + |E symmetric-difference E'| on stable
/// identities; exact because node ids align across snapshots.
pub fn edit_distance(g: &NetworkGraph, g2: &NetworkGraph) -> f64 {
    let va: BTreeSet<NodeId> = g.node_ids().collect();
    let vb: BTreeSet<NodeId> = g2.node_ids().collect();
    let ea: BTreeSet<LinkId> = g.links().map(|(l, _)| l).collect();
    let eb: BTreeSet<LinkId> = g2.links().map(|(l, _)| l).collect();
    let nodes = va.symmetric_difference(&vb).count();
    let links = ea.symmetric_difference(&eb).count();
    (nodes + links) as f64
}

/// Full drift report: raw components, weighted normalized aggregate, and the
/// Lipschitz surrogate `c * delta_g` bounding the MDP distance.
pub fn graph_drift(g: &NetworkGraph, g2: &NetworkGraph, w: &DriftWeights) -> DriftReport {
    let delta_spec = spectral_distance(g, g2);
    let delta_cap = capacity_delta(g, g2);
    let delta_bw = bandwidth_delta(g, g2);
    let delta_edit = edit_distance(g, g2);
    let delta_g = w.w_spec * delta_spec / w.rho_spec
        + w.w_cap * delta_cap / w.rho_cap
        + w.w_bw * delta_bw / w.rho_bw
        + w.w_edit * delta_edit / w.rho_edit;
    DriftReport {
        delta_spec,
        delta_cap,
        delta_bw,
        delta_edit,
        delta_g,
        mdp_distance_bound: w.lipschitz_c * delta_g,
    }
}

/// Smallest c with `c * delta_g >= d_hat` on every sample, times a 1.1
/// safety factor. Fails if positive distance is observed at zero drift (the
/// surrogate cannot cover such a pair) or no sample has positive drift.
pub fn calibrate_lipschitz_c(samples: &[(DriftReport, f64)]) -> Result<f64, DriftError> {
    let mut max_ratio: f64 = 0.0;
    let mut any_positive = false;
    for (report, d_hat) in samples {
        if report.delta_g > 0.0 {
            any_positive = true;
            max_ratio = max_ratio.max(d_hat / report.delta_g);
        } else if *d_hat > 0.0 {
            return Err(DriftError::SurrogateFailure);
        }
    }
    if !any_positive {
        return Err(DriftError::NoPositiveDrift);
    }
    Ok(max_ratio * 1.1)
}

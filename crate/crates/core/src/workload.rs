//! Reproducible SFC request streams: Poisson arrivals, heterogeneous chains
//! of 3-5 VNFs, durations and deadlines, parameterized by a load factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use thiserror::Error;

use crate::graph::{NetworkGraph, NodeId};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("graph needs at least two access nodes, has {0}")]
    TooFewAccessNodes(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One SFC request: an ordered VNF chain with compute and bandwidth demands
/// plus release/duration/deadline in slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfcRequest {
    pub request_id: u64,
    pub ingress: NodeId,
    pub egress: NodeId,
    /// Per-VNF CPU demand; chain length is this vector's length.
    pub vnf_demands: Vec<u32>,
    /// Bandwidth demand between consecutive VNFs (length = chain length - 1).
    pub flow_demands: Vec<u32>,
    pub release_slot: u64,
    pub duration: u64,
    pub deadline_slot: u64,
}

impl SfcRequest {
    pub fn chain_len(&self) -> usize {
        self.vnf_demands.len()
    }

    /// Routed segments: ingress->VNF1, consecutive VNF pairs, VNFk->egress.
    pub fn num_segments(&self) -> usize {
        self.chain_len() + 1
    }

    /// Bandwidth carried by segment `seg` (0-based). The end segments reuse
    /// the first and last inter-VNF demands.
    pub fn segment_demand(&self, seg: usize) -> u32 {
        let last = self.flow_demands.len() - 1;
        let idx = seg.saturating_sub(1).min(last);
        self.flow_demands[idx]
    }

    pub fn total_cpu(&self) -> u32 {
        self.vnf_demands.iter().sum()
    }

    pub fn total_bw(&self) -> u32 {
        self.flow_demands.iter().sum()
    }

    /// Slack beyond release + duration.
    pub fn slack(&self) -> u64 {
        self.deadline_slot - self.release_slot - self.duration
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if !(3..=5).contains(&self.chain_len()) {
            return Err(WorkloadError::InvalidSpec(format!(
                "chain length {} outside [3,5]",
                self.chain_len()
            )));
        }
        if self.flow_demands.len() + 1 != self.chain_len() {
            return Err(WorkloadError::InvalidSpec(
                "flow demand vector must have chain length - 1 entries".into(),
            ));
        }
        if self.vnf_demands.iter().chain(&self.flow_demands).any(|d| *d == 0) {
            return Err(WorkloadError::InvalidSpec("zero demand".into()));
        }
        if self.ingress == self.egress {
            return Err(WorkloadError::InvalidSpec("ingress equals egress".into()));
        }
        if self.duration == 0 {
            return Err(WorkloadError::InvalidSpec("zero duration".into()));
        }
        if self.deadline_slot < self.release_slot + self.duration {
            return Err(WorkloadError::InvalidSpec("deadline before completion".into()));
        }
        Ok(())
    }
}

/// Workload generation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    /// Mean arrivals per slot before load scaling.
    pub base_arrival_rate: f64,
    pub load_factor: f64,
    pub horizon: u64,
    pub cpu_demand: (u32, u32),
    pub bw_demand: (u32, u32),
    /// Mean of the geometric duration distribution (minimum 1 slot).
    pub mean_duration: f64,
    /// Deadline slack added beyond release + duration, inclusive bounds.
    pub deadline_slack: (u64, u64),
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            base_arrival_rate: 0.5,
            load_factor: 1.0,
            horizon: 200,
            cpu_demand: (1, 4),
            bw_demand: (1, 3),
            mean_duration: 10.0,
            deadline_slack: (5, 15),
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.base_arrival_rate <= 0.0 {
            return Err(WorkloadError::InvalidSpec("arrival rate must be > 0".into()));
        }
        if self.load_factor < 0.0 {
            return Err(WorkloadError::InvalidSpec("negative load factor".into()));
        }
        if self.horizon == 0 {
            return Err(WorkloadError::InvalidSpec("horizon must be >= 1".into()));
        }
        if self.mean_duration < 1.0 {
            return Err(WorkloadError::InvalidSpec("mean duration below 1 slot".into()));
        }
        Ok(())
    }
}

/// Identical spec with the load factor multiplied.
pub fn scale_load(spec: &WorkloadSpec, factor: f64) -> WorkloadSpec {
    assert!(factor > 0.0, "load scale factor must be positive");
    WorkloadSpec {
        load_factor: spec.load_factor * factor,
        ..*spec
    }
}

/// Generates the request stream, sorted by release slot. Pure in
/// (graph, spec): identical inputs produce identical streams.
pub fn generate_workload(
    g: &NetworkGraph,
    spec: &WorkloadSpec,
) -> Result<Vec<SfcRequest>, WorkloadError> {
    spec.validate()?;
    let access = g.access_nodes();
    if access.len() < 2 {
        return Err(WorkloadError::TooFewAccessNodes(access.len()));
    }
    let rate = spec.base_arrival_rate * spec.load_factor;
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let poisson = Poisson::new(rate)
        .map_err(|e| WorkloadError::InvalidSpec(format!("bad arrival rate: {e}")))?;
    // Geometric counts failures before success; +1 gives mean = mean_duration.
    let geometric = Geometric::new(1.0 / spec.mean_duration)
        .map_err(|e| WorkloadError::InvalidSpec(format!("bad duration mean: {e}")))?;

    let mut requests = Vec::new();
    let mut next_id = 0u64;
    for slot in 0..spec.horizon {
        let arrivals = poisson.sample(&mut rng) as u64;
        for _ in 0..arrivals {
            let chain_len = rng.random_range(3..=5usize);
            let i = rng.random_range(0..access.len());
            let mut j = rng.random_range(0..access.len() - 1);
            if j >= i {
                j += 1;
            }
            let vnf_demands: Vec<u32> = (0..chain_len)
                .map(|_| rng.random_range(spec.cpu_demand.0..=spec.cpu_demand.1))
                .collect();
            let flow_demands: Vec<u32> = (0..chain_len - 1)
                .map(|_| rng.random_range(spec.bw_demand.0..=spec.bw_demand.1))
                .collect();
            let duration = geometric.sample(&mut rng) + 1;
            let slack = rng.random_range(spec.deadline_slack.0..=spec.deadline_slack.1);
            let request = SfcRequest {
                request_id: next_id,
                ingress: access[i],
                egress: access[j],
                vnf_demands,
                flow_demands,
                release_slot: slot,
                duration,
                deadline_slot: slot + duration + slack,
            };
            debug_assert!(request.validate().is_ok());
            requests.push(request);
            next_id += 1;
        }
    }
    Ok(requests)
}

fn join(values: &[u32]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// One request per line; replayable byte-for-byte via [`parse_workload`].
pub fn workload_to_text(requests: &[SfcRequest]) -> String {
    let mut out = String::new();
    for r in requests {
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            r.request_id,
            r.ingress,
            r.egress,
            join(&r.vnf_demands),
            join(&r.flow_demands),
            r.release_slot,
            r.duration,
            r.deadline_slot
        ));
    }
    out
}

pub fn parse_workload(text: &str) -> Result<Vec<SfcRequest>, WorkloadError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(WorkloadError::Parse {
                line,
                msg: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_u64 = |s: &str, what: &str| -> Result<u64, WorkloadError> {
            s.parse().map_err(|_| WorkloadError::Parse {
                line,
                msg: format!("invalid {what}: {s}"),
            })
        };
        let parse_list = |s: &str| -> Result<Vec<u32>, WorkloadError> {
            s.split(',')
                .map(|v| {
                    v.parse().map_err(|_| WorkloadError::Parse {
                        line,
                        msg: format!("invalid demand list entry: {v}"),
                    })
                })
                .collect()
        };
        let request = SfcRequest {
            request_id: parse_u64(fields[0], "request id")?,
            ingress: NodeId(parse_u64(fields[1], "ingress")? as u32),
            egress: NodeId(parse_u64(fields[2], "egress")? as u32),
            vnf_demands: parse_list(fields[3])?,
            flow_demands: parse_list(fields[4])?,
            release_slot: parse_u64(fields[5], "release")?,
            duration: parse_u64(fields[6], "duration")?,
            deadline_slot: parse_u64(fields[7], "deadline")?,
        };
        request.validate()?;
        out.push(request);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_base_topology;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn graph() -> NetworkGraph {
        build_base_topology(20, 40, 1).unwrap()
    }

    #[test]
    fn zero_load_gives_empty_stream() {
        let spec = WorkloadSpec {
            load_factor: 0.0,
            ..WorkloadSpec::default()
        };
        assert!(generate_workload(&graph(), &spec).unwrap().is_empty());
    }

    #[test]
    fn chain_lengths_in_range_and_slack_nonnegative() {
        let spec = WorkloadSpec {
            horizon: 500,
            ..WorkloadSpec::default()
        };
        let requests = generate_workload(&graph(), &spec).unwrap();
        assert!(!requests.is_empty());
        for r in &requests {
            assert!((3..=5).contains(&r.chain_len()));
            assert!(r.deadline_slot >= r.release_slot + r.duration);
            assert_ne!(r.ingress, r.egress);
            r.validate().unwrap();
        }
        // sorted by release slot
        assert!(requests.windows(2).all(|w| w[0].release_slot <= w[1].release_slot));
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        let spec = WorkloadSpec {
            horizon: 10_000,
            seed: 11,
            ..WorkloadSpec::default()
        };
        let n = generate_workload(&graph(), &spec).unwrap().len() as f64;
        let mean: f64 = 0.5 * 10_000.0;
        let sigma = mean.sqrt();
        assert!((n - mean).abs() < 3.0 * sigma, "count {n} outside 3 sigma of {mean}");
    }

    #[test]
    fn per_slot_counts_pass_chi_square_vs_poisson() {
        let spec = WorkloadSpec {
            horizon: 100_000,
            seed: 5,
            ..WorkloadSpec::default()
        };
        let requests = generate_workload(&graph(), &spec).unwrap();
        let mut counts = vec![0u64; spec.horizon as usize];
        for r in &requests {
            counts[r.release_slot as usize] += 1;
        }
        // Bins 0,1,2,3,>=4 against Poisson(0.5) pmf.
        let lambda: f64 = 0.5;
        let mut observed = [0f64; 5];
        for c in counts {
            observed[(c as usize).min(4)] += 1.0;
        }
        let mut pmf = [0f64; 5];
        let mut acc = 0.0;
        let mut fact = 1.0;
        for k in 0..4 {
            if k > 0 {
                fact *= k as f64;
            }
            pmf[k] = (-lambda).exp() * lambda.powi(k as i32) / fact;
            acc += pmf[k];
        }
        pmf[4] = 1.0 - acc;
        let n = spec.horizon as f64;
        let stat: f64 = (0..5)
            .map(|k| {
                let expected = n * pmf[k];
                (observed[k] - expected).powi(2) / expected
            })
            .sum();
        let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "chi-square {stat} >= {critical}");
    }

    #[test]
    fn scale_load_identity_and_inverse() {
        let spec = WorkloadSpec::default();
        assert_eq!(scale_load(&spec, 1.0), spec);
        let back = scale_load(&scale_load(&spec, 2.0), 0.5);
        assert!((back.load_factor - spec.load_factor).abs() < 1e-12);
    }

    #[test]
    fn load_sweep_is_strictly_increasing() {
        let spec = WorkloadSpec::default();
        let sweep: Vec<WorkloadSpec> = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4]
            .iter()
            .map(|f| scale_load(&WorkloadSpec { load_factor: 1.0, ..spec }, *f))
            .collect();
        assert_eq!(sweep.len(), 7);
        assert!(sweep.windows(2).all(|w| w[0].load_factor < w[1].load_factor));
    }

    #[test]
    fn workload_text_round_trips() {
        let spec = WorkloadSpec {
            horizon: 300,
            seed: 9,
            ..WorkloadSpec::default()
        };
        let requests = generate_workload(&graph(), &spec).unwrap();
        let text = workload_to_text(&requests);
        let parsed = parse_workload(&text).unwrap();
        assert_eq!(parsed, requests);
        assert_eq!(workload_to_text(&parsed), text);
    }

    #[test]
    fn segment_demands_duplicate_at_endpoints() {
        let r = SfcRequest {
            request_id: 0,
            ingress: NodeId(0),
            egress: NodeId(1),
            vnf_demands: vec![1, 2, 3],
            flow_demands: vec![7, 9],
            release_slot: 0,
            duration: 5,
            deadline_slot: 10,
        };
        assert_eq!(r.num_segments(), 4);
        let demands: Vec<u32> = (0..r.num_segments()).map(|s| r.segment_demand(s)).collect();
        assert_eq!(demands, vec![7, 7, 9, 9]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generation_is_pure(seed in 0u64..200, load in 0.1f64..2.0) {
            let spec = WorkloadSpec {
                load_factor: load,
                horizon: 100,
                seed,
                ..WorkloadSpec::default()
            };
            let a = generate_workload(&graph(), &spec).unwrap();
            let b = generate_workload(&graph(), &spec).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

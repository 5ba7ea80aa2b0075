//! TOML experiment configuration: [graph], [workload], [planner.<name>] and
//! [scenario] sections, resolved into a runnable scenario setup.

use std::collections::BTreeMap;

use serde::Deserialize;


use crate::harness::{HarnessError, PlannerKind, ScenarioSetup};
use crate::lifelong::TransferParams;
use crate::mdp::{MdpParams, RewardParams};
use crate::search::UctParams;
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_n_links")]
    pub n_links: usize,
    #[serde(default = "default_one")]
    pub seed: u64,
    #[serde(default = "default_seven")]
    pub perturb_seed: u64,
    pub access_cpu: Option<(u32, u32)>,
    pub core_cpu: Option<(u32, u32)>,
    pub bandwidth: Option<(u32, u32)>,
    pub access_fraction: Option<f64>,
}

fn default_n_nodes() -> usize {
    20
}
fn default_n_links() -> usize {
    40
}
fn default_one() -> u64 {
    1
}
fn default_seven() -> u64 {
    7
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            n_nodes: 20,
            n_links: 40,
            seed: 1,
            perturb_seed: 7,
            access_cpu: None,
            core_cpu: None,
            bandwidth: None,
            access_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    #[serde(default = "default_rate")]
    pub base_arrival_rate: f64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cpu_demand")]
    pub cpu_demand: (u32, u32),
    #[serde(default = "default_bw_demand")]
    pub bw_demand: (u32, u32),
    #[serde(default = "default_duration")]
    pub mean_duration: f64,
    #[serde(default = "default_slack")]
    pub deadline_slack: (u64, u64),
}

fn default_rate() -> f64 {
    0.5
}
fn default_horizon() -> u64 {
    200
}
fn default_cpu_demand() -> (u32, u32) {
    (1, 4)
}
fn default_bw_demand() -> (u32, u32) {
    (1, 3)
}
fn default_duration() -> f64 {
    10.0
}
fn default_slack() -> (u64, u64) {
    (5, 15)
}

impl Default for WorkloadSection {
    fn default() -> Self {
        WorkloadSection {
            base_arrival_rate: 0.5,
            horizon: 200,
            seed: 0,
            cpu_demand: (1, 4),
            bw_demand: (1, 3),
            mean_duration: 10.0,
            deadline_slack: (5, 15),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub budget: Option<u64>,
    pub exploration_c: Option<f64>,
    pub rollout_horizon: Option<u64>,
    pub max_depth: Option<usize>,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub n_cap: Option<u64>,
    pub n_min: Option<u64>,
    pub lipschitz_c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: String,
    #[serde(default = "default_loads")]
    pub loads: Vec<f64>,
    #[serde(default = "default_eval_load")]
    pub eval_load: f64,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_seed_base")]
    pub seed_base: u64,
    #[serde(default = "default_planners")]
    pub planners: Vec<String>,
    #[serde(default = "default_warmup")]
    pub warmup_episodes: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_completion")]
    pub completion_reward: f64,
    #[serde(default = "default_blocking")]
    pub blocking_penalty: f64,
    #[serde(default = "default_delay_weight")]
    pub delay_weight: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_per_hop")]
    pub per_hop_delay: f64,
    #[serde(default = "default_k_paths")]
    pub k_paths: usize,
    #[serde(default = "default_a_max")]
    pub a_max: usize,
}

fn default_loads() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4]
}
fn default_eval_load() -> f64 {
    0.6
}
fn default_seeds() -> u64 {
    10
}
fn default_seed_base() -> u64 {
    100
}
fn default_planners() -> Vec<String> {
    vec!["nf_heuristic".into(), "umcts".into(), "lisfc".into()]
}
fn default_warmup() -> u64 {
    8
}
fn default_gamma() -> f64 {
    0.99
}
fn default_completion() -> f64 {
    1.0
}
fn default_blocking() -> f64 {
    -1.0
}
fn default_delay_weight() -> f64 {
    0.1
}
fn default_r_max() -> f64 {
    1.0
}
fn default_per_hop() -> f64 {
    0.1
}
fn default_k_paths() -> usize {
    3
}
fn default_a_max() -> usize {
    16
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub workload: WorkloadSection,
    #[serde(default)]
    pub planner: BTreeMap<String, PlannerSection>,
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    LoadSweep,
    DriftTransfer,
    Convergence,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn scenario_kind(&self) -> Result<ScenarioKind, HarnessError> {
        match self.scenario.kind.as_str() {
            "load_sweep" => Ok(ScenarioKind::LoadSweep),
            "drift_transfer" => Ok(ScenarioKind::DriftTransfer),
            "convergence" => Ok(ScenarioKind::Convergence),
            other => Err(HarnessError::Config(format!("unknown scenario kind `{other}`"))),
        }
    }

    fn planner_section(&self, name: &str) -> PlannerSection {
        self.planner.get(name).cloned().unwrap_or_default()
    }

    /// Resolves the configuration into a runnable scenario setup.
    /// `seed_offset` shifts all run seeds.
    pub fn resolve(&self, seed_offset: u64) -> Result<ScenarioSetup, HarnessError> {
        let s = &self.scenario;
        let defaults = crate::graph::TopologyParams::default();
        let topology = crate::graph::TopologyParams {
            access_cpu: self.graph.access_cpu.unwrap_or(defaults.access_cpu),
            core_cpu: self.graph.core_cpu.unwrap_or(defaults.core_cpu),
            bandwidth: self.graph.bandwidth.unwrap_or(defaults.bandwidth),
            access_fraction: self
                .graph
                .access_fraction
                .unwrap_or(defaults.access_fraction),
        };
        let family = crate::graph::build_standard_family_with(
            self.graph.n_nodes,
            self.graph.n_links,
            self.graph.seed,
            self.graph.perturb_seed,
            &topology,
        )?;
        let workload_template = WorkloadSpec {
            base_arrival_rate: self.workload.base_arrival_rate,
            load_factor: 1.0,
            horizon: self.workload.horizon,
            cpu_demand: self.workload.cpu_demand,
            bw_demand: self.workload.bw_demand,
            mean_duration: self.workload.mean_duration,
            deadline_slack: self.workload.deadline_slack,
            seed: self.workload.seed,
        };
        let reward = RewardParams {
            completion_reward: s.completion_reward,
            blocking_penalty: s.blocking_penalty,
            delay_weight: s.delay_weight,
            gamma: s.gamma,
            r_max: s.r_max,
        };
        let mdp_params = MdpParams {
            reward,
            k_paths: s.k_paths,
            a_max: s.a_max,
            per_hop_delay: s.per_hop_delay,
        };
        // umcts and lisfc share the UCT parameters; lisfc's section may
        // override them and adds the transfer knobs.
        let base = self.planner_section("umcts");
        let lisfc = self.planner_section("lisfc");
        let defaults = UctParams::defaults(s.r_max, s.gamma);
        let uct = UctParams {
            exploration_c: lisfc
                .exploration_c
                .or(base.exploration_c)
                .unwrap_or(defaults.exploration_c),
            budget: lisfc.budget.or(base.budget).unwrap_or(defaults.budget),
            rollout_horizon: lisfc
                .rollout_horizon
                .or(base.rollout_horizon)
                .unwrap_or(defaults.rollout_horizon),
            max_depth: lisfc
                .max_depth
                .or(base.max_depth)
                .unwrap_or(defaults.max_depth),
            delta: lisfc.delta.or(base.delta).unwrap_or(defaults.delta),
        };
        let transfer_defaults = TransferParams::default();
        let transfer = TransferParams {
            lipschitz_c: lisfc.lipschitz_c.unwrap_or(transfer_defaults.lipschitz_c),
            kappa: lisfc.kappa.unwrap_or(transfer_defaults.kappa),
            delta: uct.delta,
            r_max: s.r_max,
            gamma: s.gamma,
            n_cap: lisfc.n_cap.unwrap_or(transfer_defaults.n_cap),
            n_min: lisfc.n_min.unwrap_or(transfer_defaults.n_min),
            theta: lisfc.theta.unwrap_or(transfer_defaults.theta),
        };
        let planners = s
            .planners
            .iter()
            .map(|name| {
                PlannerKind::parse(name)
                    .ok_or_else(|| HarnessError::Config(format!("unknown planner `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if planners.is_empty() {
            return Err(HarnessError::Config("planner list is empty".into()));
        }
        if s.seeds == 0 {
            return Err(HarnessError::Config("need at least one seed".into()));
        }
        Ok(ScenarioSetup {
            family,
            workload_template,
            mdp_params,
            uct,
            transfer,
            planners,
            loads: s.loads.clone(),
            eval_load: s.eval_load,
            seeds: s.seeds,
            seed_base: s.seed_base + seed_offset,
            warmup_episodes: s.warmup_episodes,
        })
    }
}

/// Drift weights file for the `drift` subcommand: a [weights] table.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    #[serde(default)]
    pub weights: WeightsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub w_spec: Option<f64>,
    pub w_cap: Option<f64>,
    pub w_bw: Option<f64>,
    pub w_edit: Option<f64>,
    pub rho_spec: Option<f64>,
    pub rho_cap: Option<f64>,
    pub rho_bw: Option<f64>,
    pub rho_edit: Option<f64>,
    pub lipschitz_c: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let config = Config::from_str("[scenario]\nkind = \"load_sweep\"\n").unwrap();
        let setup = config.resolve(0).unwrap();
        assert_eq!(setup.family.len(), 4);
        assert_eq!(setup.loads.len(), 7);
        assert_eq!(setup.seeds, 10);
        assert_eq!(config.scenario_kind().unwrap(), ScenarioKind::LoadSweep);
    }

    #[test]
    fn planner_sections_override_defaults() {
        let text = r#"
[graph]
n_nodes = 12
n_links = 22

[workload]
horizon = 50

[planner.umcts]
budget = 64
exploration_c = 1.25

[planner.lisfc]
theta = 0.3
n_cap = 2000

[scenario]
kind = "drift_transfer"
seeds = 3
gamma = 0.9
planners = ["umcts", "lisfc"]
"#;
        let config = Config::from_str(text).unwrap();
        let setup = config.resolve(5).unwrap();
        assert_eq!(setup.uct.budget, 64);
        assert!((setup.uct.exploration_c - 1.25).abs() < 1e-12);
        assert_eq!(setup.transfer.n_cap, 2000);
        assert!((setup.transfer.theta - 0.3).abs() < 1e-12);
        assert!((setup.transfer.gamma - 0.9).abs() < 1e-12);
        assert_eq!(setup.seed_base, 105);
        assert_eq!(setup.planners.len(), 2);
    }

    #[test]
    fn bad_scenario_kind_is_rejected() {
        let config = Config::from_str("[scenario]\nkind = \"nope\"\n").unwrap();
        assert!(config.scenario_kind().is_err());
    }
}

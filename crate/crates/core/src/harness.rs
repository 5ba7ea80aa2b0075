//! Discrete-event episode driver, metric collection, and the three
//! experiment scenarios with columnar output emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::baseline::nf_heuristic;
use crate::drift::{graph_drift, DriftWeights};
use crate::graph::NetworkGraph;
use crate::lifelong::{
    harvest_tree, update_kb_from_evidence, KbTransfer, KnowledgeBase, TransferParams,
};
use crate::mdp::{e2e_delay, Action, MdpParams, SfcMdp};
use crate::search::{plan, plan_with_transfer, UctParams};
use crate::workload::{generate_workload, SfcRequest, WorkloadSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("graph error: {0}")]
    Graph(#[from] crate::graph::GraphError),
    #[error("workload error: {0}")]
    Workload(#[from] crate::workload::WorkloadError),
    #[error("mdp error: {0}")]
    Mdp(#[from] crate::mdp::MdpError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    NfHeuristic,
    Umcts,
    Lisfc,
}

impl PlannerKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::NfHeuristic => "nf_heuristic",
            PlannerKind::Umcts => "umcts",
            PlannerKind::Lisfc => "lisfc",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "nf_heuristic" => Some(PlannerKind::NfHeuristic),
            "umcts" => Some(PlannerKind::Umcts),
            "lisfc" => Some(PlannerKind::Lisfc),
            _ => None,
        }
    }
}

/// One planner decision on a request head, or an auto-blocked request
/// (recorded with zero simulations).
#[derive(Debug, Clone)]
pub struct DecisionRow {
    pub planner: &'static str,
    pub graph: String,
    pub seed: u64,
    pub load: f64,
    pub decision_index: u64,
    pub blocked: bool,
    pub accepted: bool,
    pub e2e_delay: Option<f64>,
    pub sims_used: u64,
    /// False for auto-blocked requests recorded without a planner call.
    pub planner_invoked: bool,
}

#[derive(Debug, Clone)]
pub struct RunAggregates {
    pub blocking_probability: f64,
    pub p95_delay: f64,
    pub mean_sims_per_decision: f64,
    /// Cumulative blocked/(blocked+accepted) after each decision row.
    pub running_blocking: Vec<f64>,
    pub accepted: u64,
    pub blocked: u64,
    pub completed: u64,
}

#[derive(Debug, Clone)]
pub struct MetricsRecord {
    pub decisions: Vec<DecisionRow>,
    pub aggregates: RunAggregates,
}

/// Nearest-rank percentile: the ceil(p/100 * n)-th order statistic.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    assert!(p > 0.0 && p <= 100.0, "p outside (0, 100]");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p * sorted.len() as f64) / 100.0).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn aggregate(decisions: &[DecisionRow]) -> RunAggregates {
    let mut blocked = 0u64;
    let mut accepted = 0u64;
    let mut running = Vec::with_capacity(decisions.len());
    let mut delays = Vec::new();
    let mut sims_total = 0u64;
    let mut invoked = 0u64;
    for row in decisions {
        if row.blocked {
            blocked += 1;
        }
        if row.accepted {
            accepted += 1;
        }
        if let Some(d) = row.e2e_delay {
            delays.push(d);
        }
        sims_total += row.sims_used;
        if row.planner_invoked {
            invoked += 1;
        }
        let denom = blocked + accepted;
        running.push(if denom == 0 {
            0.0
        } else {
            blocked as f64 / denom as f64
        });
    }
    let denom = blocked + accepted;
    RunAggregates {
        blocking_probability: if denom == 0 {
            0.0
        } else {
            blocked as f64 / denom as f64
        },
        p95_delay: if delays.is_empty() {
            0.0
        } else {
            percentile(&delays, 95.0)
        },
        mean_sims_per_decision: if invoked == 0 {
            0.0
        } else {
            sims_total as f64 / invoked as f64
        },
        running_blocking: running,
        accepted,
        blocked,
        completed: 0,
    }
}

pub struct EpisodeSetup<'a> {
    pub mdp: &'a SfcMdp,
    pub uct: UctParams,
    pub graph_label: String,
    pub seed: u64,
    pub load: f64,
}

/// Drives one episode from the empty state until the workload is drained,
/// invoking the planner once per decision epoch. For lisfc the knowledge
/// base is read during search and updated once at episode end.
pub fn run_episode(
    setup: &EpisodeSetup,
    workload: Vec<SfcRequest>,
    planner: PlannerKind,
    kb: Option<&mut KnowledgeBase>,
) -> Result<MetricsRecord, HarnessError> {
    let mdp = setup.mdp;
    let total_requests = workload.len() as u64;
    let mut state = mdp.initial_state(workload);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let mut decisions: Vec<DecisionRow> = Vec::new();
    let mut evidence = Vec::new();
    let mut kb = kb;

    while !state.is_drained() {
        let head = state.waiting.front().cloned();
        let (action, sims_used) = match (planner, &head) {
            (_, None) => (Action::Wait, 0),
            (PlannerKind::NfHeuristic, Some(_)) => (nf_heuristic(mdp, &state), 0),
            (PlannerKind::Umcts, Some(_)) => {
                let outcome = plan(mdp, &state, &setup.uct, &mut rng);
                (outcome.action, outcome.sims_used)
            }
            (PlannerKind::Lisfc, Some(_)) => {
                let kb_ref = kb
                    .as_deref()
                    .expect("lisfc planner requires a knowledge base");
                let ctx = KbTransfer::new(kb_ref);
                let (outcome, tree) =
                    plan_with_transfer(mdp, &state, &setup.uct, &ctx, &mut rng);
                evidence.extend(harvest_tree(&tree, kb_ref.params.n_min));
                (outcome.action, outcome.sims_used)
            }
        };

        let outcome = mdp.step(&state, &action)?;

        if let Some(head) = &head {
            let (blocked, accepted, delay) = match &action {
                Action::Reject => (true, false, None),
                Action::Wait => (false, false, None),
                Action::Place(p) => (
                    false,
                    true,
                    Some(e2e_delay(head, p, mdp.params.per_hop_delay)),
                ),
            };
            decisions.push(DecisionRow {
                planner: planner.name(),
                graph: setup.graph_label.clone(),
                seed: setup.seed,
                load: setup.load,
                decision_index: decisions.len() as u64,
                blocked,
                accepted,
                e2e_delay: delay,
                sims_used,
                planner_invoked: true,
            });
        }
        // Auto-blocked requests (deadline expiry) appear as zero-simulation
        // rows; an explicit Reject was already recorded above.
        let rejected_id = match (&action, &head) {
            (Action::Reject, Some(h)) => Some(h.request_id),
            _ => None,
        };
        for id in &outcome.events.blocked {
            if Some(*id) == rejected_id {
                continue;
            }
            decisions.push(DecisionRow {
                planner: planner.name(),
                graph: setup.graph_label.clone(),
                seed: setup.seed,
                load: setup.load,
                decision_index: decisions.len() as u64,
                blocked: true,
                accepted: false,
                e2e_delay: None,
                sims_used: 0,
                planner_invoked: false,
            });
        }
        state = outcome.next_state;
    }

    debug_assert_eq!(state.accepted + state.blocked, total_requests);

    if planner == PlannerKind::Lisfc {
        if let Some(kb) = kb.as_deref_mut() {
            update_kb_from_evidence(
                kb,
                &evidence,
                &setup.graph_label,
                Some(&mdp.graph),
            );
        }
    }

    let mut aggregates = aggregate(&decisions);
    aggregates.completed = state.completed;
    Ok(MetricsRecord {
        decisions,
        aggregates,
    })
}

/// Everything a scenario needs to run.
pub struct ScenarioSetup {
    pub family: Vec<NetworkGraph>,
    pub workload_template: WorkloadSpec,
    pub mdp_params: MdpParams,
    pub uct: UctParams,
    pub transfer: TransferParams,
    pub planners: Vec<PlannerKind>,
    pub loads: Vec<f64>,
    pub eval_load: f64,
    pub seeds: u64,
    pub seed_base: u64,
    pub warmup_episodes: u64,
}

#[derive(Debug, Default)]
pub struct ScenarioOutput {
    /// decisions.csv rows.
    pub decisions: Vec<DecisionRow>,
    /// aggregates.csv rows: one per (planner, graph, load, seed) run.
    pub aggregates: Vec<AggregateRow>,
    /// Named curve files: file name -> full text content.
    pub curves: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub planner: &'static str,
    pub graph: String,
    pub load: f64,
    pub seed: u64,
    pub delta_g: f64,
    pub blocking: f64,
    pub p95_delay: f64,
    pub mean_sims: f64,
    pub final_blocking: f64,
    pub decisions_to_final_band: u64,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn standard_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

/// Decisions needed for the running blocking to enter (and stay within) a
/// 10% band around its final value, with a 0.01 absolute floor.
pub fn decisions_to_final_band(running: &[f64]) -> u64 {
    let Some(&final_value) = running.last() else {
        return 0;
    };
    let band = (0.1 * final_value).max(0.01);
    let mut last_outside = 0;
    for (i, v) in running.iter().enumerate() {
        if (v - final_value).abs() > band {
            last_outside = i as u64 + 1;
        }
    }
    last_outside + 1
}

fn workload_for(
    template: &WorkloadSpec,
    graph: &NetworkGraph,
    load: f64,
    seed: u64,
) -> Result<Vec<SfcRequest>, HarnessError> {
    let spec = WorkloadSpec {
        load_factor: load,
        seed,
        ..*template
    };
    Ok(generate_workload(graph, &spec)?)
}

/// Scenario 1: blocking versus offered load on the base graph; lisfc runs
/// with an empty knowledge base.
pub fn scenario_load_sweep(setup: &ScenarioSetup) -> Result<ScenarioOutput, HarnessError> {
    let g0 = &setup.family[0];
    let mdp = SfcMdp::new(g0.clone(), setup.mdp_params);
    let mut out = ScenarioOutput::default();
    let mut per_point: BTreeMap<(&'static str, String), Vec<(f64, f64, f64)>> = BTreeMap::new();

    for planner in &setup.planners {
        for &load in &setup.loads {
            let mut blocking = Vec::new();
            let mut p95 = Vec::new();
            let mut sims = Vec::new();
            for s in 0..setup.seeds {
                let seed = setup.seed_base + s;
                let workload = workload_for(&setup.workload_template, g0, load, seed)?;
                let episode_setup = EpisodeSetup {
                    mdp: &mdp,
                    uct: setup.uct,
                    graph_label: g0.graph_id.clone(),
                    seed,
                    load,
                };
                let mut kb = KnowledgeBase::new(setup.transfer);
                let kb_opt = (*planner == PlannerKind::Lisfc).then_some(&mut kb);
                let record = run_episode(&episode_setup, workload, *planner, kb_opt)?;
                blocking.push(record.aggregates.blocking_probability);
                p95.push(record.aggregates.p95_delay);
                sims.push(record.aggregates.mean_sims_per_decision);
                out.aggregates.push(AggregateRow {
                    planner: planner.name(),
                    graph: g0.graph_id.clone(),
                    load,
                    seed,
                    delta_g: 0.0,
                    blocking: record.aggregates.blocking_probability,
                    p95_delay: record.aggregates.p95_delay,
                    mean_sims: record.aggregates.mean_sims_per_decision,
                    final_blocking: record.aggregates.blocking_probability,
                    decisions_to_final_band: decisions_to_final_band(
                        &record.aggregates.running_blocking,
                    ),
                });
                out.decisions.extend(record.decisions);
            }
            per_point
                .entry((planner.name(), format!("{load}")))
                .or_default()
                .push((mean(&blocking), standard_error(&blocking), mean(&p95)));
            let _ = sims;
        }
    }

    for planner in &setup.planners {
        let mut text = String::from("# load mean_blocking stderr_blocking mean_p95\n");
        for &load in &setup.loads {
            let rows = &per_point[&(planner.name(), format!("{load}"))];
            let (b, se, p) = rows[0];
            writeln!(text, "{load} {b} {se} {p}").unwrap();
        }
        out.curves
            .insert(format!("blocking_vs_load_{}.dat", planner.name()), text);
    }
    Ok(out)
}

/// Warms a knowledge base by running lisfc on the base graph over the same
/// traffic traces later replayed at evaluation (the scenarios reuse one
/// workload realization per seed across the graph family), cycling through
/// them `warmup_episodes` times in total.
pub fn warm_knowledge_base(
    setup: &ScenarioSetup,
    load: f64,
) -> Result<KnowledgeBase, HarnessError> {
    let g0 = &setup.family[0];
    let mdp = SfcMdp::new(g0.clone(), setup.mdp_params);
    let mut kb = KnowledgeBase::new(setup.transfer);
    let weights =
        DriftWeights::defaults_for(g0).with_lipschitz_c(setup.transfer.lipschitz_c);
    kb.refresh_drift(g0, &weights);
    for w in 0..setup.warmup_episodes {
        let seed = setup.seed_base + (w % setup.seeds);
        let workload = workload_for(&setup.workload_template, g0, load, seed)?;
        let episode_setup = EpisodeSetup {
            mdp: &mdp,
            uct: setup.uct,
            graph_label: g0.graph_id.clone(),
            seed,
            load,
        };
        run_episode(&episode_setup, workload, PlannerKind::Lisfc, Some(&mut kb))?;
        kb.refresh_drift(g0, &weights);
    }
    Ok(kb)
}

/// Scenario 2: search effort versus graph drift. The knowledge base is
/// warmed on the base graph, then umcts and lisfc run on every family
/// member under the early-stop rule.
pub fn scenario_drift_transfer(setup: &ScenarioSetup) -> Result<ScenarioOutput, HarnessError> {
    let g0 = &setup.family[0];
    let warm_kb = warm_knowledge_base(setup, setup.eval_load)?;
    let weights =
        DriftWeights::defaults_for(g0).with_lipschitz_c(setup.transfer.lipschitz_c);
    let mut out = ScenarioOutput::default();
    let mut curve_rows: Vec<(f64, &'static str, f64, f64, f64, f64)> = Vec::new();

    for graph in &setup.family {
        let delta_g = graph_drift(graph, g0, &weights).delta_g;
        let mdp = SfcMdp::new(graph.clone(), setup.mdp_params);
        for planner in [PlannerKind::Umcts, PlannerKind::Lisfc] {
            if !setup.planners.contains(&planner) {
                continue;
            }
            let mut sims = Vec::new();
            let mut blocking = Vec::new();
            let mut p95 = Vec::new();
            for s in 0..setup.seeds {
                let seed = setup.seed_base + s;
                let workload =
                    workload_for(&setup.workload_template, graph, setup.eval_load, seed)?;
                let episode_setup = EpisodeSetup {
                    mdp: &mdp,
                    uct: setup.uct,
                    graph_label: graph.graph_id.clone(),
                    seed,
                    load: setup.eval_load,
                };
                let mut kb = warm_kb.clone();
                kb.refresh_drift(graph, &weights);
                let kb_opt = (planner == PlannerKind::Lisfc).then_some(&mut kb);
                let record = run_episode(&episode_setup, workload, planner, kb_opt)?;
                sims.push(record.aggregates.mean_sims_per_decision);
                blocking.push(record.aggregates.blocking_probability);
                p95.push(record.aggregates.p95_delay);
                out.aggregates.push(AggregateRow {
                    planner: planner.name(),
                    graph: graph.graph_id.clone(),
                    load: setup.eval_load,
                    seed,
                    delta_g,
                    blocking: record.aggregates.blocking_probability,
                    p95_delay: record.aggregates.p95_delay,
                    mean_sims: record.aggregates.mean_sims_per_decision,
                    final_blocking: record.aggregates.blocking_probability,
                    decisions_to_final_band: decisions_to_final_band(
                        &record.aggregates.running_blocking,
                    ),
                });
                out.decisions.extend(record.decisions);
            }
            curve_rows.push((
                delta_g,
                planner.name(),
                mean(&sims),
                standard_error(&sims),
                mean(&blocking),
                mean(&p95),
            ));
        }
    }

    let mut text =
        String::from("# delta_g planner mean_sims stderr_sims mean_blocking mean_p95\n");
    for (dg, planner, s, se, b, p) in &curve_rows {
        writeln!(text, "{dg} {planner} {s} {se} {b} {p}").unwrap();
    }
    out.curves.insert("sims_vs_drift.dat".into(), text);
    Ok(out)
}

/// Scenario 3: online convergence of the running blocking probability on
/// the perturbed graphs, with and without transfer.
pub fn scenario_convergence(setup: &ScenarioSetup) -> Result<ScenarioOutput, HarnessError> {
    let g0 = &setup.family[0];
    let warm_kb = warm_knowledge_base(setup, setup.eval_load)?;
    let weights =
        DriftWeights::defaults_for(g0).with_lipschitz_c(setup.transfer.lipschitz_c);
    let mut out = ScenarioOutput::default();
    let mut summary: Vec<(String, &'static str, f64, f64, f64)> = Vec::new();

    for graph in setup.family.iter().skip(1) {
        let delta_g = graph_drift(graph, g0, &weights).delta_g;
        let mdp = SfcMdp::new(graph.clone(), setup.mdp_params);
        for planner in [PlannerKind::Umcts, PlannerKind::Lisfc] {
            if !setup.planners.contains(&planner) {
                continue;
            }
            let mut finals = Vec::new();
            let mut to_band = Vec::new();
            let mut series_text = String::from("# decision running_blocking (one seed per column block)\n");
            for s in 0..setup.seeds {
                let seed = setup.seed_base + s;
                let workload =
                    workload_for(&setup.workload_template, graph, setup.eval_load, seed)?;
                let episode_setup = EpisodeSetup {
                    mdp: &mdp,
                    uct: setup.uct,
                    graph_label: graph.graph_id.clone(),
                    seed,
                    load: setup.eval_load,
                };
                let mut kb = warm_kb.clone();
                kb.refresh_drift(graph, &weights);
                let kb_opt = (planner == PlannerKind::Lisfc).then_some(&mut kb);
                let record = run_episode(&episode_setup, workload, planner, kb_opt)?;
                let running = &record.aggregates.running_blocking;
                writeln!(series_text, "# seed {seed}").unwrap();
                for (i, v) in running.iter().enumerate() {
                    writeln!(series_text, "{i} {v}").unwrap();
                }
                finals.push(record.aggregates.blocking_probability);
                to_band.push(decisions_to_final_band(running) as f64);
                out.aggregates.push(AggregateRow {
                    planner: planner.name(),
                    graph: graph.graph_id.clone(),
                    load: setup.eval_load,
                    seed,
                    delta_g,
                    blocking: record.aggregates.blocking_probability,
                    p95_delay: record.aggregates.p95_delay,
                    mean_sims: record.aggregates.mean_sims_per_decision,
                    final_blocking: record.aggregates.blocking_probability,
                    decisions_to_final_band: decisions_to_final_band(running),
                });
                out.decisions.extend(record.decisions);
            }
            out.curves.insert(
                format!("running_blocking_{}_{}.dat", planner.name(), graph.graph_id),
                series_text,
            );
            summary.push((
                graph.graph_id.clone(),
                planner.name(),
                delta_g,
                mean(&finals),
                mean(&to_band),
            ));
        }
    }

    let mut text = String::from(
        "# graph planner delta_g mean_final_blocking mean_decisions_to_10pct_band\n",
    );
    for (graph, planner, dg, f, t) in &summary {
        writeln!(text, "{graph} {planner} {dg} {f} {t}").unwrap();
    }
    out.curves.insert("convergence_summary.dat".into(), text);
    Ok(out)
}

pub fn decisions_csv(rows: &[DecisionRow]) -> String {
    let mut out =
        String::from(
        "planner,graph,seed,load,decision,blocked,accepted,e2e_delay,sims_used,planner_invoked\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.planner,
            r.graph,
            r.seed,
            r.load,
            r.decision_index,
            r.blocked as u8,
            r.accepted as u8,
            r.e2e_delay.map_or(String::new(), |d| d.to_string()),
            r.sims_used,
            r.planner_invoked as u8
        )
        .unwrap();
    }
    out
}

pub fn aggregates_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "planner,graph,load,seed,delta_g,blocking,p95_delay,mean_sims,final_blocking,decisions_to_band\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.planner,
            r.graph,
            r.load,
            r.seed,
            r.delta_g,
            r.blocking,
            r.p95_delay,
            r.mean_sims,
            r.final_blocking,
            r.decisions_to_final_band
        )
        .unwrap();
    }
    out
}

/// Writes decisions.csv, aggregates.csv and curves/*.dat under `out_dir`.
pub fn write_output(output: &ScenarioOutput, out_dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir.join("curves"))?;
    std::fs::write(out_dir.join("decisions.csv"), decisions_csv(&output.decisions))?;
    std::fs::write(
        out_dir.join("aggregates.csv"),
        aggregates_csv(&output.aggregates),
    )?;
    for (name, content) in &output.curves {
        std::fs::write(out_dir.join("curves").join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_base_topology;

    fn small_setup(seeds: u64) -> ScenarioSetup {
        let family = crate::graph::build_standard_family(12, 22, 1, 7).unwrap();
        ScenarioSetup {
            family,
            workload_template: WorkloadSpec {
                horizon: 40,
                ..WorkloadSpec::default()
            },
            mdp_params: MdpParams {
                reward: crate::mdp::RewardParams {
                    gamma: 0.9,
                    ..Default::default()
                },
                ..MdpParams::default()
            },
            uct: UctParams {
                exploration_c: 1.5,
                budget: 24,
                rollout_horizon: 10,
                max_depth: 20,
                delta: 0.05,
            },
            transfer: TransferParams {
                gamma: 0.9,
                n_cap: 4000,
                n_min: 2,
                ..TransferParams::default()
            },
            planners: vec![
                PlannerKind::NfHeuristic,
                PlannerKind::Umcts,
                PlannerKind::Lisfc,
            ],
            loads: vec![0.4, 1.0],
            eval_load: 0.8,
            seeds,
            seed_base: 50,
            warmup_episodes: 2,
        }
    }

    #[test]
    fn percentile_nearest_rank() {
        let ladder: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(percentile(&ladder, 95.0), 95.0);
        assert_eq!(percentile(&[42.0], 77.0), 42.0);
        assert_eq!(percentile(&[7.0, 7.0, 7.0], 95.0), 7.0);
        assert_eq!(percentile(&ladder, 100.0), 100.0);
        assert_eq!(percentile(&ladder, 1.0), 1.0);
    }

    #[test]
    fn zero_load_episode_has_no_rows() {
        let g = build_base_topology(12, 22, 1).unwrap();
        let mdp = SfcMdp::new(g, MdpParams::default());
        let setup = EpisodeSetup {
            mdp: &mdp,
            uct: UctParams::defaults(1.0, 0.9),
            graph_label: "G0".into(),
            seed: 1,
            load: 0.0,
        };
        let record = run_episode(&setup, Vec::new(), PlannerKind::NfHeuristic, None).unwrap();
        assert!(record.decisions.is_empty());
        assert_eq!(record.aggregates.blocking_probability, 0.0);
    }

    #[test]
    fn episode_is_deterministic() {
        let g = build_base_topology(12, 22, 1).unwrap();
        let spec = WorkloadSpec {
            horizon: 30,
            seed: 9,
            ..WorkloadSpec::default()
        };
        let workload = generate_workload(&g, &spec).unwrap();
        let mdp = SfcMdp::new(g, MdpParams::default());
        let uct = UctParams {
            exploration_c: 1.5,
            budget: 16,
            rollout_horizon: 8,
            max_depth: 16,
            delta: 0.05,
        };
        let run = |seed| {
            let setup = EpisodeSetup {
                mdp: &mdp,
                uct,
                graph_label: "G0".into(),
                seed,
                load: 1.0,
            };
            run_episode(&setup, workload.clone(), PlannerKind::Umcts, None).unwrap()
        };
        let a = run(3);
        let b = run(3);
        assert_eq!(decisions_csv(&a.decisions), decisions_csv(&b.decisions));
    }

    #[test]
    fn capacity_one_toy_blocks_exactly_one_of_two_overlapping_requests() {
        use crate::graph::{NodeId, Region};
        use crate::workload::SfcRequest;
        let mut g = crate::graph::NetworkGraph::new("toy");
        g.add_node(NodeId(0), Region::Access, 3);
        g.add_node(NodeId(1), Region::Access, 0);
        g.add_link(NodeId(0), NodeId(1), 8);
        // Capacity for exactly one concurrent chain; two fully overlapping
        // requests with deadlines too tight to defer.
        let r = |id, release| SfcRequest {
            request_id: id,
            ingress: NodeId(0),
            egress: NodeId(1),
            vnf_demands: vec![1, 1, 1],
            flow_demands: vec![1, 1],
            release_slot: release,
            duration: 6,
            deadline_slot: release + 6,
        };
        let mdp = SfcMdp::new(g, MdpParams::default());
        let setup = EpisodeSetup {
            mdp: &mdp,
            uct: UctParams {
                exploration_c: 1.0,
                budget: 50,
                rollout_horizon: 10,
                max_depth: 10,
                delta: 0.05,
            },
            graph_label: "toy".into(),
            seed: 0,
            load: 1.0,
        };
        for planner in [PlannerKind::NfHeuristic, PlannerKind::Umcts] {
            let record =
                run_episode(&setup, vec![r(0, 0), r(1, 0)], planner, None).unwrap();
            assert_eq!(record.aggregates.blocked, 1, "{planner:?}");
            assert_eq!(record.aggregates.accepted, 1, "{planner:?}");
        }
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let setup = small_setup(2);
        let out = scenario_load_sweep(&setup).unwrap();
        for agg in &out.aggregates {
            let rows: Vec<&DecisionRow> = out
                .decisions
                .iter()
                .filter(|r| {
                    r.planner == agg.planner
                        && r.graph == agg.graph
                        && r.seed == agg.seed
                        && r.load == agg.load
                })
                .collect();
            let blocked = rows.iter().filter(|r| r.blocked).count() as f64;
            let accepted = rows.iter().filter(|r| r.accepted).count() as f64;
            let expect = if blocked + accepted == 0.0 {
                0.0
            } else {
                blocked / (blocked + accepted)
            };
            assert!((agg.blocking - expect).abs() < 1e-9);
            let sims: f64 = rows.iter().map(|r| r.sims_used as f64).sum();
            let invoked = rows.iter().filter(|r| r.planner_invoked).count();
            let expect_sims = if invoked == 0 {
                0.0
            } else {
                sims / invoked as f64
            };
            assert!((agg.mean_sims - expect_sims).abs() < 1e-9);
            let delays: Vec<f64> = rows.iter().filter_map(|r| r.e2e_delay).collect();
            let expect_p95 = if delays.is_empty() {
                0.0
            } else {
                percentile(&delays, 95.0)
            };
            assert!((agg.p95_delay - expect_p95).abs() < 1e-9);
        }
    }

    #[test]
    fn running_blocking_matches_definition() {
        let setup = small_setup(1);
        let g0 = &setup.family[0];
        let mdp = SfcMdp::new(g0.clone(), setup.mdp_params);
        let workload = workload_for(&setup.workload_template, g0, 1.2, 77).unwrap();
        let episode_setup = EpisodeSetup {
            mdp: &mdp,
            uct: setup.uct,
            graph_label: "G0".into(),
            seed: 77,
            load: 1.2,
        };
        let record =
            run_episode(&episode_setup, workload, PlannerKind::NfHeuristic, None).unwrap();
        let mut blocked = 0.0;
        let mut accepted = 0.0;
        for (i, row) in record.decisions.iter().enumerate() {
            if row.blocked {
                blocked += 1.0;
            }
            if row.accepted {
                accepted += 1.0;
            }
            let expect = if blocked + accepted == 0.0 {
                0.0
            } else {
                blocked / (blocked + accepted)
            };
            assert!((record.aggregates.running_blocking[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_outputs_are_deterministic() {
        let setup = small_setup(2);
        let a = scenario_load_sweep(&setup).unwrap();
        let b = scenario_load_sweep(&setup).unwrap();
        assert_eq!(decisions_csv(&a.decisions), decisions_csv(&b.decisions));
        assert_eq!(aggregates_csv(&a.aggregates), aggregates_csv(&b.aggregates));
        assert_eq!(a.curves, b.curves);
    }

    #[test]
    fn single_load_point_single_seed_yields_one_row_per_planner() {
        let mut setup = small_setup(1);
        setup.loads = vec![0.6];
        let out = scenario_load_sweep(&setup).unwrap();
        assert_eq!(out.aggregates.len(), setup.planners.len());
    }

    #[test]
    fn decisions_to_final_band_definition() {
        // Series settling at 0.5: outside the 0.05 band until index 2.
        let series = vec![1.0, 0.8, 0.52, 0.5, 0.5];
        assert_eq!(decisions_to_final_band(&series), 3);
        let flat = vec![0.2, 0.2];
        assert_eq!(decisions_to_final_band(&flat), 1);
        assert_eq!(decisions_to_final_band(&[]), 0);
    }
}

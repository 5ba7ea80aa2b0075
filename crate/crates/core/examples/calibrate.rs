//! Scratch calibration probe (not part of the deliverable test surface).

use lisfc::graph::{NetworkGraph, NodeId, Region};
use lisfc::harness::{
    run_episode, scenario_drift_transfer, warm_knowledge_base, EpisodeSetup, PlannerKind,
    ScenarioSetup,
};
use lisfc::lifelong::{update_kb, KbTransfer, KnowledgeBase, TransferParams};
use lisfc::mdp::{Action, MdpParams, RewardParams, SfcMdp};
use lisfc::search::{plan, plan_with_transfer, SearchEnv, UctParams};
use lisfc::toy::TabularMdp;
use lisfc::workload::{SfcRequest, WorkloadSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny_graph() -> NetworkGraph {
    let mut g = NetworkGraph::new("tiny");
    g.add_node(NodeId(0), Region::Access, 3);
    g.add_node(NodeId(1), Region::Access, 0);
    g.add_link(NodeId(0), NodeId(1), 4);
    g
}

fn tiny_requests() -> Vec<SfcRequest> {
    let r = |id, release: u64| SfcRequest {
        request_id: id,
        ingress: NodeId(0),
        egress: NodeId(1),
        vnf_demands: vec![1, 1, 1],
        flow_demands: vec![1, 1],
        release_slot: release,
        duration: 2,
        deadline_slot: release + 2 + 1,
    };
    vec![r(0, 0), r(1, 1)]
}

fn tiny_mdp() -> SfcMdp {
    SfcMdp::new(
        tiny_graph(),
        MdpParams {
            reward: RewardParams {
                gamma: 0.5,
                ..Default::default()
            },
            k_paths: 1,
            a_max: 16,
            per_hop_delay: 0.1,
        },
    )
}

/// Exhaustive search over all action sequences; returns (best first action
/// sig, best discounted return).
fn exhaustive_best(mdp: &SfcMdp, state: &lisfc::mdp::MdpState) -> (String, f64) {
    fn recurse(mdp: &SfcMdp, state: &lisfc::mdp::MdpState, depth: usize) -> f64 {
        if state.is_drained() || depth > 20 {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for action in mdp.enumerate_actions(state) {
            let out = mdp.step(state, &action).unwrap();
            let v = out.reward + mdp.params.reward.gamma * recurse(mdp, &out.next_state, depth + 1);
            if v > best {
                best = v;
            }
        }
        best
    }
    let mut best = (String::new(), f64::NEG_INFINITY);
    for action in mdp.enumerate_actions(state) {
        let out = mdp.step(state, &action).unwrap();
        let v = out.reward + mdp.params.reward.gamma * recurse(mdp, &out.next_state, 1);
        println!("  root action {} -> {v:.4}", action.sig(state.clock));
        if v > best.1 {
            best = (action.sig(state.clock), v);
        }
    }
    best
}

fn probe_tiny_instance() {
    println!("== tiny instance ==");
    let mdp = tiny_mdp();
    let state = mdp.initial_state(tiny_requests());
    let actions = mdp.enumerate_actions(&state);
    println!("root actions: {:?}", actions.iter().map(|a| a.sig(0)).collect::<Vec<_>>());
    let (best_sig, best_v) = exhaustive_best(&mdp, &state);
    println!("oracle: {best_sig} value {best_v:.4}");

    for c in [0.5, 1.0, 2.0] {
        let uct = UctParams {
            exploration_c: c,
            budget: 5000,
            rollout_horizon: 12,
            max_depth: 12,
            delta: 0.05,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let outcome = plan(&mdp, &state, &uct, &mut rng);
        let sig = mdp.action_sig(&state, &outcome.action);
        println!("uct C={c}: chose {sig} sims={}", outcome.sims_used);
    }

    // Warm a KB from plain UCT trees, then check lisfc early stop.
    let uct = UctParams {
        exploration_c: 2.0,
        budget: 5000,
        rollout_horizon: 12,
        max_depth: 12,
        delta: 0.05,
    };
    let mut kb = KnowledgeBase::new(TransferParams {
        gamma: 0.5,
        n_cap: 5000,
        n_min: 2,
        theta: 0.5,
        ..Default::default()
    });
    for w in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + w);
        let (_, tree) = plan_with_transfer(&mdp, &state, &uct, &lisfc::search::NoTransfer, &mut rng);
        update_kb(&mut kb, &tree, "tiny", Some(&mdp.graph));
    }
    let root_key = SearchEnv::state_key(&mdp, &state);
    println!("archived edges: {}", kb.tasks[0].edges.len());
    for ((k, s), e) in &kb.tasks[0].edges {
        if *k == root_key {
            println!("  root edge {s}: q={:.4} n={}", e.q_hat, e.n);
        }
    }
    let ctx = KbTransfer::new(&kb);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (outcome, _tree) = plan_with_transfer(&mdp, &state, &uct, &ctx, &mut rng);
    let sig = mdp.action_sig(&state, &outcome.action);
    println!(
        "lisfc with dG=0 prior: chose {sig} sims={} seeded={}",
        outcome.sims_used, outcome.seeded_edges
    );
}

fn probe_bound_soundness() {
    println!("== bound soundness ==");
    let gamma = 0.9;
    let uct = UctParams {
        exploration_c: 1.5,
        budget: 1200,
        rollout_horizon: 60,
        max_depth: 40,
        delta: 0.05,
    };
    let mut holds = 0;
    let total = 200;
    for pair in 0..total {
        let m = TabularMdp::random(5, 3, gamma, 1000 + pair);
        let m2 = m.perturbed(0.3, 2000 + pair);
        let d = m.exact_distance(&m2, 1.0);
        let mut rng_a = ChaCha8Rng::seed_from_u64(pair);
        let mut rng_b = ChaCha8Rng::seed_from_u64(10_000 + pair);
        let (_, tree_a) = plan_with_transfer(&m, &0usize, &uct, &lisfc::search::NoTransfer, &mut rng_a);
        let (_, tree_b) = plan_with_transfer(&m2, &0usize, &uct, &lisfc::search::NoTransfer, &mut rng_b);
        let edge_a = &tree_a.root().children[0];
        let edge_b = &tree_b.root().children[0];
        let (na, nb) = (edge_a.stats.visit_count, edge_b.stats.visit_count);
        if na == 0 || nb == 0 {
            holds += 1;
            continue;
        }
        let diff = (edge_a.stats.q_hat() - edge_b.stats.q_hat()).abs();
        let bound = d / (1.0 - gamma)
            + 2.0 * 1.0 / (1.0 - gamma)
                * ((2.0_f64 / 0.05).ln() / (2.0 * na.min(nb) as f64)).sqrt();
        if diff <= bound {
            holds += 1;
        } else if pair < 20 {
            println!("  violation pair {pair}: diff {diff:.3} bound {bound:.3} d={d:.4} n={}", na.min(nb));
        }
    }
    println!("holds: {holds}/{total}");
}

fn scenario2_setup() -> ScenarioSetup {
    let topology = lisfc::graph::TopologyParams {
        access_cpu: (6, 9),
        core_cpu: (10, 14),
        bandwidth: (6, 10),
        access_fraction: 0.75,
    };
    let family = lisfc::graph::build_standard_family_with(8, 11, 1, 7, &topology).unwrap();
    ScenarioSetup {
        family,
        workload_template: WorkloadSpec {
            base_arrival_rate: 0.7,
            load_factor: 1.0,
            horizon: 100,
            cpu_demand: (2, 3),
            bw_demand: (2, 3),
            mean_duration: 4.0,
            deadline_slack: (0, 1),
            seed: 0,
        },
        mdp_params: MdpParams {
            reward: RewardParams {
                gamma: 0.6,
                delay_weight: 0.25,
                ..Default::default()
            },
            k_paths: 2,
            a_max: 2,
            per_hop_delay: 0.3,
        },
        uct: UctParams {
            exploration_c: 1.0,
            budget: 150,
            rollout_horizon: 10,
            max_depth: 20,
            delta: 0.05,
        },
        transfer: TransferParams {
            gamma: 0.6,
            n_cap: 4000,
            n_min: 2,
            theta: 0.05,
            lipschitz_c: 1.0,
            ..Default::default()
        },
        planners: vec![PlannerKind::Umcts, PlannerKind::Lisfc],
        loads: vec![],
        eval_load: 1.0,
        seeds: 4,
        seed_base: 300,
        warmup_episodes: 48,
    }
}

fn probe_scenario2() {
    println!("== scenario 2 probe ==");
    let setup = scenario2_setup();
    for g in &setup.family {
        let w = lisfc::drift::DriftWeights::defaults_for(&setup.family[0]);
        let report = lisfc::drift::graph_drift(&setup.family[0], g, &w);
        println!(
            "  {}: dg={:.4} (spec {:.3} cap {:.1} bw {:.1} edit {:.1})",
            g.graph_id, report.delta_g, report.delta_spec, report.delta_cap, report.delta_bw, report.delta_edit
        );
    }
    let t0 = std::time::Instant::now();
    let out = scenario_drift_transfer(&setup).unwrap();
    println!("  elapsed {:?}", t0.elapsed());
    println!("{}", out.curves["sims_vs_drift.dat"]);
}

fn probe_certification_detail() {
    println!("== certification detail probe ==");
    let setup = scenario2_setup();
    let kb = warm_knowledge_base(&setup, setup.eval_load).unwrap();
    let weights = lisfc::drift::DriftWeights::defaults_for(&setup.family[0]);
    let graph = setup.family[0].clone();
    let mut kb = kb.clone();
    kb.refresh_drift(&graph, &weights);
    let mdp = SfcMdp::new(graph.clone(), setup.mdp_params);
    let seed = setup.seed_base;
    let workload = lisfc::workload::generate_workload(
        &graph,
        &WorkloadSpec {
            load_factor: setup.eval_load,
            seed,
            ..setup.workload_template
        },
    )
    .unwrap();
    let mut state = mdp.initial_state(workload);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shown = 0;
    while !state.is_drained() && shown < 6 {
        if state.waiting.is_empty() {
            state = mdp.step(&state, &Action::Wait).unwrap().next_state;
            continue;
        }
        let key = SearchEnv::state_key(&mdp, &state);
        let hit = kb.tasks.iter().any(|t| t.edges.keys().any(|(k, _)| *k == key));
        let ctx = KbTransfer::new(&kb);
        let (outcome, tree) = plan_with_transfer(&mdp, &state, &setup.uct, &ctx, &mut rng);
        if hit && tree.root().children.len() >= 2 {
            shown += 1;
            println!("decision at key {key} (sims {})", outcome.sims_used);
            let root = tree.root();
            let parent_n = root.visits.max(1) as f64;
            let best_lcb = root
                .children
                .iter()
                .filter(|c| !c.eliminated && c.stats.visit_count >= 1)
                .map(|c| {
                    c.stats.q_hat()
                        - setup.uct.exploration_c
                            * ((parent_n.ln()) / c.stats.visit_count as f64).sqrt()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            println!("  best_lcb {best_lcb:.3}");
            for c in &root.children {
                let ucb = lisfc::lifelong::transfer_ucb(&root.key, &c.sig, &kb);
                println!(
                    "  {} N={} q={:.3} ucb={:.3} elim={}",
                    c.sig,
                    c.stats.visit_count,
                    if c.stats.visit_count > 0 { c.stats.q_hat() } else { f64::NAN },
                    ucb,
                    c.eliminated,
                );
            }
        }
        state = mdp.step(&state, &outcome.action).unwrap().next_state;
    }
}

fn probe_scenario3() {
    println!("== scenario 3 probe ==");
    let mut setup = scenario2_setup();
    setup.workload_template.horizon = 200;
    let t0 = std::time::Instant::now();
    let out = lisfc::harness::scenario_convergence(&setup).unwrap();
    println!("  elapsed {:?}", t0.elapsed());
    println!("{}", out.curves["convergence_summary.dat"]);
}

fn probe_key_matching() {
    println!("== key matching probe ==");
    let setup = scenario2_setup();
    let t0 = std::time::Instant::now();
    let kb = warm_knowledge_base(&setup, setup.eval_load).unwrap();
    println!(
        "  warmup elapsed {:?}, archived edges {}",
        t0.elapsed(),
        kb.tasks.iter().map(|t| t.edges.len()).sum::<usize>()
    );
    let weights = lisfc::drift::DriftWeights::defaults_for(&setup.family[0]);
    for graph in &setup.family {
        let mut kb = kb.clone();
        kb.refresh_drift(graph, &weights);
        let mdp = SfcMdp::new(graph.clone(), setup.mdp_params);
        let seed = setup.seed_base;
        let workload = lisfc::workload::generate_workload(
            graph,
            &WorkloadSpec {
                load_factor: setup.eval_load,
                seed,
                ..setup.workload_template
            },
        )
        .unwrap();
        // Manual lisfc episode with instrumentation.
        let mut state = mdp.initial_state(workload);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut decisions, mut hits, mut sims_total, mut stops) = (0u64, 0u64, 0u64, 0u64);
        while !state.is_drained() {
            if state.waiting.is_empty() {
                state = mdp.step(&state, &Action::Wait).unwrap().next_state;
                continue;
            }
            let key = SearchEnv::state_key(&mdp, &state);
            let archived = kb.tasks.iter().any(|t| {
                t.edges.keys().any(|(k, _)| *k == key)
            });
            let ctx = KbTransfer::new(&kb);
            let (outcome, _tree) = plan_with_transfer(&mdp, &state, &setup.uct, &ctx, &mut rng);
            decisions += 1;
            if archived {
                hits += 1;
            }
            sims_total += outcome.sims_used;
            if outcome.sims_used < setup.uct.budget {
                stops += 1;
            }
            state = mdp.step(&state, &outcome.action).unwrap().next_state;
        }
        println!(
            "  {}: decisions {decisions} key-hits {hits} early-stops {stops} mean-sims {:.1}",
            graph.graph_id,
            sims_total as f64 / decisions.max(1) as f64
        );
    }
}

fn probe_load_sweep_quality() {
    println!("== load sweep quality probe ==");
    let family = lisfc::graph::build_standard_family(20, 40, 1, 7).unwrap();
    let g0 = family[0].clone();
    let mdp = SfcMdp::new(
        g0.clone(),
        MdpParams {
            reward: RewardParams {
                gamma: 0.9,
                ..Default::default()
            },
            a_max: 8,
            ..MdpParams::default()
        },
    );
    let uct = UctParams {
        exploration_c: 1.5,
        budget: 100,
        rollout_horizon: 20,
        max_depth: 30,
        delta: 0.05,
    };
    let base_rate = 2.0;
    for load in [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4] {
        let mut nf_block = 0.0;
        let mut uc_block = 0.0;
        let seeds = 4;
        for s in 0..seeds {
            let spec = WorkloadSpec {
                base_arrival_rate: base_rate,
                horizon: 100,
                load_factor: load,
                seed: 900 + s,
                ..WorkloadSpec::default()
            };
            let workload = lisfc::workload::generate_workload(&g0, &spec).unwrap();
            let setup = EpisodeSetup {
                mdp: &mdp,
                uct,
                graph_label: "G0".into(),
                seed: 900 + s,
                load,
            };
            let nf = run_episode(&setup, workload.clone(), PlannerKind::NfHeuristic, None).unwrap();
            let uc = run_episode(&setup, workload, PlannerKind::Umcts, None).unwrap();
            nf_block += nf.aggregates.blocking_probability / seeds as f64;
            uc_block += uc.aggregates.blocking_probability / seeds as f64;
        }
        println!("  load {load}: nf {nf_block:.3} umcts {uc_block:.3}");
    }
}

fn probe_surrogate() {
    println!("== surrogate calibration probe ==");
    use lisfc::drift::{calibrate_lipschitz_c, graph_drift, DriftWeights};
    use lisfc::lifelong::estimate_sfc_distance;
    use rand::Rng;

    let base = lisfc::graph::build_base_topology(5, 7, 11).unwrap();
    let mut weights = DriftWeights::defaults_for(&base);
    weights.w_spec = 0.05;
    weights.w_cap = 0.15;
    weights.w_bw = 0.7;
    weights.w_edit = 0.1;
    let spec = WorkloadSpec {
        base_arrival_rate: 0.8,
        horizon: 20,
        cpu_demand: (1, 3),
        bw_demand: (1, 3),
        mean_duration: 3.0,
        deadline_slack: (1, 3),
        seed: 21,
        ..WorkloadSpec::default()
    };
    let micro = lisfc::workload::generate_workload(&base, &spec).unwrap();
    println!("  micro workload: {} requests", micro.len());
    let params = MdpParams {
        reward: RewardParams { gamma: 0.8, ..Default::default() },
        k_paths: 2,
        a_max: 3,
        per_hop_delay: 0.1,
    };
    let base_mdp = SfcMdp::new(base.clone(), params);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut samples = Vec::new();
    for i in 0..100u64 {
        let kind = lisfc::graph::PerturbationKind::Mixed;
        let scale = |rng: &mut ChaCha8Rng| {
            if rng.random_range(0.0..1.0) < 0.5 {
                rng.random_range(0.75..0.9)
            } else {
                rng.random_range(1.1..1.3)
            }
        };
        let pspec = lisfc::graph::PerturbationSpec {
            kind,
            fraction_affected: rng.random_range(0.4..0.8),
            capacity_scale: scale(&mut rng),
            bandwidth_scale: scale(&mut rng),
            links_added: rng.random_range(0..2),
            links_removed: rng.random_range(0..2),
            seed: 1000 + i,
        };
        let Ok(g2) = lisfc::graph::apply_perturbation(&base, &pspec) else { continue; };
        let report = graph_drift(&base, &g2, &weights);
        let mdp2 = SfcMdp::new(g2, params);
        let d_hat = estimate_sfc_distance(&base_mdp, &mdp2, &micro, 60, 600, 1.0);
        samples.push((report, d_hat));
    }
    println!("  {} pairs", samples.len());
    let (calib, holdout) = samples.split_at(samples.len() / 2);
    {
        let mut ranked: Vec<(f64, &lisfc::drift::DriftReport, f64)> = samples
            .iter()
            .filter(|(r, _)| r.delta_g > 0.0)
            .map(|(r, d)| (d / r.delta_g, r, *d))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for (ratio, r, d) in ranked.iter().take(6) {
            println!(
                "  ratio {ratio:.2} d_hat {d:.4} dg {:.5} (spec {:.3} cap {:.1} bw {:.1} edit {:.1})",
                r.delta_g, r.delta_spec, r.delta_cap, r.delta_bw, r.delta_edit
            );
        }
    }
    match calibrate_lipschitz_c(calib) {
        Ok(c) => {
            let violations = holdout
                .iter()
                .filter(|(r, d)| c * r.delta_g < *d)
                .count();
            let max_ratio_holdout = holdout
                .iter()
                .filter(|(r, _)| r.delta_g > 0.0)
                .map(|(r, d)| d / r.delta_g)
                .fold(0.0_f64, f64::max);
            println!("  c = {c:.4}, holdout violations {violations}/{} (max holdout ratio {max_ratio_holdout:.4})", holdout.len());
        }
        Err(e) => println!("  calibration failed: {e}"),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    if which == "tiny" || which == "all" {
        probe_tiny_instance();
    }
    if which == "bound" || which == "all" {
        probe_bound_soundness();
    }
    if which == "sweep" || which == "all" {
        probe_load_sweep_quality();
    }
    if which == "cert" {
        probe_certification_detail();
    }
    if which == "keys" || which == "all" {
        probe_key_matching();
    }
    if which == "s2" || which == "all" {
        probe_scenario2();
    }
    if which == "s3" || which == "all" {
        probe_scenario3();
    }
    if which == "surr" || which == "all" {
        probe_surrogate();
    }
}

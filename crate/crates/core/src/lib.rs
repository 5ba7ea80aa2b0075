//! Lifelong MCTS planning for service-function-chain placement on drifting
//! computing-power-network graphs: a discrete-event SFC simulator, a UCT
//! planner, drift-aware transfer of search statistics across network
//! snapshots, and the experiment harness around them.

pub mod baseline;
pub mod config;
pub mod drift;
pub mod graph;
pub mod harness;
pub mod lifelong;
pub mod mdp;
pub mod search;
pub mod toy;
pub mod workload;

pub use drift::{graph_drift, DriftReport, DriftWeights};
pub use graph::{build_base_topology, build_standard_family, NetworkGraph, NodeId};
pub use harness::{percentile, run_episode, PlannerKind};
pub use lifelong::{auct_bound, transfer_ucb, KnowledgeBase, TransferParams};
pub use mdp::{MdpParams, MdpState, SfcMdp};
pub use search::{plan, plan_with_transfer, uct_score, UctParams};
pub use workload::{generate_workload, scale_load, SfcRequest, WorkloadSpec};

//! Planner for wireless sensing networks that trade coverage against
//! distributed computation rate.
//!
//! Nodes in a bounded region are split into master nodes, which sense and
//! own tasks, and worker nodes, which absorb part of a master's load over
//! path-loss-limited links. More masters widen the covered area; more
//! workers raise the sustainable task rate. The crate provides:
//!
//! - [`scenario`]: problem instances, their file format, seeded generation;
//! - [`linkmodel`]: link rates and per-task delay coefficients;
//! - [`coverage`]: union-of-disks measurement (grid, Monte Carlo, exact 1-d);
//! - [`clustering`]: task splits, cluster/network rates, the Lagrangian;
//! - [`descent`]: the four-move local search over clusterings;
//! - [`oracle`]: exhaustive ground truth for small instances;
//! - [`pareto`]: multiplier sweeps and frontier extraction;
//! - [`framesim`]: an event-driven frame simulator that independently
//!   validates the analytical rates.

pub mod clustering;
pub mod coverage;
pub mod descent;
pub mod error;
pub mod framesim;
pub mod linkmodel;
pub mod oracle;
pub mod pareto;
pub mod scenario;

pub use clustering::{
    cluster_rate, evaluate, network_rate, optimal_split, optimal_splits, Cluster, Clustering,
    CoverageTerm, Evaluation, Stability, TopologyDoc,
};
pub use coverage::{
    coverage, covers_everything, CoverageConfig, CoverageEvaluator, CoverageResult,
};
pub use descent::{run_descent, DescentConfig, DescentOutcome, DescentTrace};
pub use error::{Error, Result};
pub use framesim::{simulate_frame, throughput_check, ClusterLink, FrameSchedule};
pub use linkmodel::{build_alpha, link_rate, AlphaMatrix};
pub use oracle::{clustering_count, enumerate_clusterings, oracle_best, oracle_pareto};
pub use pareto::{pareto_filter, sweep, FrontierPoint, SweepConfig, SweepPoint};
pub use scenario::{
    generate_scenario, load_scenario, save_scenario, uav_defaults, Node, NodeId, RadioParams,
    Region, Scenario, ScenarioDefaults, TaskParams,
};

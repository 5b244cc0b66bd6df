//! Clusterings, optimal task splits, cluster and network rates, the
//! Lagrangian objective, and the topology output document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageConfig, CoverageEvaluator, CoverageResult};
use crate::error::{Error, Result};
use crate::linkmodel::{build_alpha, AlphaMatrix};
use crate::scenario::{NodeId, Scenario, TaskParams};

/// A partition of the nodes into masters and per-master worker sets.
///
/// Every node is either a master or assigned to exactly one master; idle
/// nodes are not representable (attaching an idle node as a worker never
/// hurts coverage and never lowers the rate, so no optimum is lost).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    masters: BTreeSet<NodeId>,
    /// worker id -> master id, for every non-master.
    assignment: BTreeMap<NodeId, NodeId>,
}

impl Clustering {
    pub fn new(
        masters: BTreeSet<NodeId>,
        assignment: BTreeMap<NodeId, NodeId>,
        n: usize,
    ) -> Result<Self> {
        if masters.is_empty() {
            return Err(Error::validation("clustering requires at least one master"));
        }
        for &m in &masters {
            if m == 0 || m as usize > n {
                return Err(Error::UnknownNode(m));
            }
        }
        for (&w, &m) in &assignment {
            if w == 0 || w as usize > n {
                return Err(Error::UnknownNode(w));
            }
            if !masters.contains(&m) {
                return Err(Error::validation(format!(
                    "worker {w} assigned to non-master {m}"
                )));
            }
            if masters.contains(&w) {
                return Err(Error::validation(format!(
                    "node {w} is both a master and a worker"
                )));
            }
        }
        if masters.len() + assignment.len() != n {
            return Err(Error::validation(format!(
                "clustering covers {} of {n} nodes; every node must be a master or a worker",
                masters.len() + assignment.len()
            )));
        }
        Ok(Clustering {
            masters,
            assignment,
        })
    }

    /// Initial state of the search: every node its own cluster.
    pub fn all_masters(n: usize) -> Self {
        Clustering {
            masters: (1..=n as NodeId).collect(),
            assignment: BTreeMap::new(),
        }
    }

    /// One master, everyone else its worker.
    pub fn single_master(master: NodeId, n: usize) -> Result<Self> {
        let assignment = (1..=n as NodeId)
            .filter(|&j| j != master)
            .map(|j| (j, master))
            .collect();
        Clustering::new(BTreeSet::from([master]), assignment, n)
    }

    pub fn masters(&self) -> &BTreeSet<NodeId> {
        &self.masters
    }

    pub fn assignment(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.assignment
    }

    pub fn n(&self) -> usize {
        self.masters.len() + self.assignment.len()
    }

    pub fn master_count(&self) -> usize {
        self.masters.len()
    }

    /// The master responsible for `node` (a master maps to itself).
    pub fn master_of(&self, node: NodeId) -> Option<NodeId> {
        if self.masters.contains(&node) {
            Some(node)
        } else {
            self.assignment.get(&node).copied()
        }
    }

    /// Clusters in ascending master order; members include the master.
    pub fn clusters(&self) -> Vec<Cluster> {
        let mut map: BTreeMap<NodeId, BTreeSet<NodeId>> = self
            .masters
            .iter()
            .map(|&m| (m, BTreeSet::from([m])))
            .collect();
        for (&w, &m) in &self.assignment {
            map.get_mut(&m)
                .expect("assignment targets a master")
                .insert(w);
        }
        map.into_iter()
            .map(|(master, members)| Cluster { master, members })
            .collect()
    }
}

/// One master with its member set (master included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub master: NodeId,
    pub members: BTreeSet<NodeId>,
}

impl Cluster {
    pub fn new(master: NodeId, workers: impl IntoIterator<Item = NodeId>) -> Self {
        let mut members: BTreeSet<NodeId> = workers.into_iter().collect();
        members.insert(master);
        Cluster { master, members }
    }
}

/// Per-cluster task fractions, keyed by master then member.
pub type TaskSplit = BTreeMap<NodeId, BTreeMap<NodeId, f64>>;

/// Task fractions proportional to `1/alpha`, normalized to sum 1.
///
/// This equalizes `epsilon_j * alpha_j` across members, which minimizes the
/// slowest member's finish time; the minimal value is `1 / sum_j 1/alpha_j`.
pub fn optimal_split_values(alphas: &BTreeMap<NodeId, f64>) -> BTreeMap<NodeId, f64> {
    let total: f64 = alphas.values().map(|a| 1.0 / a).sum();
    alphas
        .iter()
        .map(|(&j, a)| (j, (1.0 / a) / total))
        .collect()
}

/// Optimal split for one cluster from the scenario coefficient matrix.
pub fn optimal_split(cluster: &Cluster, alpha: &AlphaMatrix) -> BTreeMap<NodeId, f64> {
    let alphas = cluster
        .members
        .iter()
        .map(|&j| (j, alpha.get(cluster.master, j)))
        .collect();
    optimal_split_values(&alphas)
}

/// Optimal splits for every cluster.
pub fn optimal_splits(clustering: &Clustering, alpha: &AlphaMatrix) -> TaskSplit {
    clustering
        .clusters()
        .iter()
        .map(|c| (c.master, optimal_split(c, alpha)))
        .collect()
}

/// Sustained rate of one cluster under its optimal split: `sum_j 1/alpha_ij`.
pub fn cluster_rate(cluster: &Cluster, alpha: &AlphaMatrix) -> f64 {
    cluster_rate_set(cluster.master, &cluster.members, alpha)
}

/// Same sum over an explicit member set; the single code path every caller
/// (search, oracle, evaluation) funnels through, so equal clusterings give
/// bit-identical rates.
pub(crate) fn cluster_rate_set(
    master: NodeId,
    members: &BTreeSet<NodeId>,
    alpha: &AlphaMatrix,
) -> f64 {
    members.iter().map(|&j| 1.0 / alpha.get(master, j)).sum()
}

/// Network rate: the minimum cluster rate over all masters.
pub fn network_rate(clustering: &Clustering, alpha: &AlphaMatrix) -> f64 {
    clustering
        .clusters()
        .iter()
        .map(|c| cluster_rate(c, alpha))
        .fold(f64::INFINITY, f64::min)
}

/// Which quantity enters the Lagrangian as the coverage term.
///
/// The default is the covered fraction, which keeps lambda comparable
/// across region sizes; `AbsoluteArea` restores raw m^d semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverageTerm {
    #[default]
    Fraction,
    AbsoluteArea,
}

impl CoverageTerm {
    pub fn metric(self, cov: &CoverageResult) -> f64 {
        match self {
            CoverageTerm::Fraction => cov.fraction,
            CoverageTerm::AbsoluteArea => cov.absolute,
        }
    }
}

pub(crate) fn lagrangian_value(rate: f64, lambda: f64, coverage_metric: f64) -> f64 {
    rate + lambda * coverage_metric
}

/// A clustering scored at a given multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub coverage: CoverageResult,
    /// Network rate R' in tasks/second.
    pub rate: f64,
    /// `rate + lambda * coverage_term`.
    pub lagrangian: f64,
    pub lambda: f64,
    pub per_cluster_rates: BTreeMap<NodeId, f64>,
}

/// Scores a clustering; convenience wrapper that rebuilds the coefficient
/// matrix and coverage evaluator on every call.
pub fn evaluate(
    scenario: &Scenario,
    clustering: &Clustering,
    lambda: f64,
    config: &CoverageConfig,
) -> Result<Evaluation> {
    let alpha = build_alpha(scenario);
    let mut cov = CoverageEvaluator::new(scenario, config)?;
    evaluate_with(clustering, lambda, CoverageTerm::Fraction, &alpha, &mut cov)
}

/// Scores a clustering against prebuilt evaluation state.
pub fn evaluate_with(
    clustering: &Clustering,
    lambda: f64,
    term: CoverageTerm,
    alpha: &AlphaMatrix,
    cov: &mut CoverageEvaluator,
) -> Result<Evaluation> {
    if lambda < 0.0 {
        return Err(Error::validation("lambda must be nonnegative"));
    }
    let coverage = cov.eval(clustering.masters())?;
    let per_cluster_rates: BTreeMap<NodeId, f64> = clustering
        .clusters()
        .iter()
        .map(|c| (c.master, cluster_rate(c, alpha)))
        .collect();
    let rate = per_cluster_rates
        .values()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(Evaluation {
        coverage,
        rate,
        lagrangian: lagrangian_value(rate, lambda, term.metric(&coverage)),
        lambda,
        per_cluster_rates,
    })
}

/// Whether the evaluated rate keeps the task backlog bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Stable iff the network rate meets the arrival rate (boundary included).
pub fn stability(evaluation: &Evaluation, tasks: &TaskParams) -> Stability {
    if evaluation.rate >= tasks.arrival_rate {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

// ---------------------------------------------------------------------------
// Topology document
// ---------------------------------------------------------------------------

/// Serializable solve result: masters, per-cluster workers, splits and
/// rates, plus the evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    pub lambda: f64,
    pub masters: Vec<NodeId>,
    pub clusters: Vec<ClusterDoc>,
    pub summary: SummaryDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterDoc {
    pub master: NodeId,
    pub workers: Vec<NodeId>,
    pub split: Vec<SplitEntry>,
    pub rate_tasks_per_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitEntry {
    pub node: NodeId,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDoc {
    pub coverage_fraction: f64,
    pub coverage_abs: f64,
    pub rate_tasks_per_s: f64,
    pub lagrangian: f64,
    pub stable: bool,
}

impl TopologyDoc {
    pub fn build(
        scenario: &Scenario,
        clustering: &Clustering,
        evaluation: &Evaluation,
        alpha: &AlphaMatrix,
    ) -> Self {
        let clusters = clustering
            .clusters()
            .iter()
            .map(|c| {
                let split = optimal_split(c, alpha)
                    .into_iter()
                    .map(|(node, epsilon)| SplitEntry { node, epsilon })
                    .collect();
                ClusterDoc {
                    master: c.master,
                    workers: c
                        .members
                        .iter()
                        .copied()
                        .filter(|&j| j != c.master)
                        .collect(),
                    split,
                    rate_tasks_per_s: evaluation.per_cluster_rates[&c.master],
                }
            })
            .collect();
        TopologyDoc {
            lambda: evaluation.lambda,
            masters: clustering.masters().iter().copied().collect(),
            clusters,
            summary: SummaryDoc {
                coverage_fraction: evaluation.coverage.fraction,
                coverage_abs: evaluation.coverage.absolute,
                rate_tasks_per_s: evaluation.rate,
                lagrangian: evaluation.lagrangian,
                stable: stability(evaluation, &scenario.tasks) == Stability::Stable,
            },
        }
    }

    /// Rebuilds the clustering, checking ids and the partition property
    /// against the scenario.
    pub fn to_clustering(&self, scenario: &Scenario) -> Result<Clustering> {
        let n = scenario.n();
        let masters: BTreeSet<NodeId> = self.masters.iter().copied().collect();
        let mut assignment = BTreeMap::new();
        for c in &self.clusters {
            if !masters.contains(&c.master) {
                return Err(Error::validation(format!(
                    "cluster master {} missing from masters list",
                    c.master
                )));
            }
            scenario.node(c.master)?;
            for &w in &c.workers {
                scenario.node(w)?;
                if assignment.insert(w, c.master).is_some() {
                    return Err(Error::validation(format!(
                        "worker {w} appears in more than one cluster"
                    )));
                }
            }
        }
        Clustering::new(masters, assignment, n)
    }

    pub fn to_json(&self) -> String {
        let mut out =
            serde_json::to_string_pretty(self).expect("topology serialization cannot fail");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

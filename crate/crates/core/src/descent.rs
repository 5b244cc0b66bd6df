//! Lagrangian local search over clusterings.
//!
//! Starts with every node as its own master and repeats four move scans
//! until the Lagrangian stops improving: cluster merges (ties accepted, so
//! the master count shrinks at equal objective), per-cluster best-master
//! selection, worker reassignment, and worker pair swaps (both strict
//! improvements on the network rate, which the latter two cannot change
//! coverage-wise since the master set stays fixed).
//!
//! Every accepted move weakly increases the Lagrangian, so the trace is
//! non-decreasing and the search reaches a local maximum in finitely many
//! passes; a configurable iteration cap backstops termination.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    cluster_rate_set, evaluate_with, lagrangian_value, Clustering, CoverageTerm, Evaluation,
};
use crate::coverage::{CoverageConfig, CoverageEvaluator, CoverageResult};
use crate::error::Result;
use crate::linkmodel::{build_alpha, AlphaMatrix};
use crate::scenario::{NodeId, Scenario};

/// Search parameters for one run at a fixed multiplier.
#[derive(Debug, Clone)]
pub struct DescentConfig {
    pub lambda: f64,
    /// Minimum Lagrangian improvement per outer pass to keep iterating.
    pub tol: f64,
    /// Outer pass cap; `None` means `10 * n`.
    pub max_outer_iters: Option<usize>,
    pub coverage_term: CoverageTerm,
    /// Coverage method override; `None` uses the scenario's own config.
    pub coverage_config: Option<CoverageConfig>,
    /// `Some(seed)` shuffles each scan's candidate order (used by restart
    /// sweeps); `None` scans in ascending id order.
    pub scan_seed: Option<u64>,
}

impl DescentConfig {
    pub fn new(lambda: f64) -> Self {
        DescentConfig {
            lambda,
            tol: 1e-9,
            max_outer_iters: None,
            coverage_term: CoverageTerm::default(),
            coverage_config: None,
            scan_seed: None,
        }
    }
}

/// Per-pass objective values and accepted-move counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub lagrangian: f64,
    pub rate: f64,
    pub coverage_fraction: f64,
    pub merges: usize,
    pub remasters: usize,
    pub reassigns: usize,
    pub swaps: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
}

impl DescentTrace {
    /// CSV document matching the header
    /// `iteration,lagrangian,rate,coverage_fraction,merges,remasters,reassigns,swaps`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,lagrangian,rate,coverage_fraction,merges,remasters,reassigns,swaps\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iteration,
                r.lagrangian,
                r.rate,
                r.coverage_fraction,
                r.merges,
                r.remasters,
                r.reassigns,
                r.swaps
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub clustering: Clustering,
    pub evaluation: Evaluation,
    pub trace: DescentTrace,
    /// False when the iteration cap fired before the improvement dropped
    /// below `tol`; the returned state is still the best seen (the
    /// objective never decreases).
    pub converged: bool,
}

/// Runs the local search on a scenario with freshly built evaluation state.
pub fn run_descent(scenario: &Scenario, config: &DescentConfig) -> Result<DescentOutcome> {
    let alpha = build_alpha(scenario);
    let cov_config = config
        .coverage_config
        .as_ref()
        .unwrap_or(&scenario.coverage_config);
    let mut cov = CoverageEvaluator::new(scenario, cov_config)?;
    run_descent_with(scenario, &alpha, &mut cov, config)
}

/// Runs the local search against shared evaluation state (one coefficient
/// matrix and coverage evaluator can serve many runs).
pub fn run_descent_with(
    scenario: &Scenario,
    alpha: &AlphaMatrix,
    cov: &mut CoverageEvaluator,
    config: &DescentConfig,
) -> Result<DescentOutcome> {
    let n = scenario.n();
    let max_outer = config.max_outer_iters.unwrap_or(10 * n).max(1);
    let mut rng = config.scan_seed.map(ChaCha8Rng::seed_from_u64);

    let mut state = SearchState::all_masters(n, alpha, config.lambda, config.coverage_term, cov)?;
    let mut trace = DescentTrace::default();
    trace.rows.push(state.trace_row(0, [0, 0, 0, 0]));

    let mut converged = false;
    for iteration in 1..=max_outer {
        let before = state.lagrangian();
        let merges = state.scan_merges(cov, rng.as_mut())?;
        let remasters = state.scan_best_masters(cov, rng.as_mut())?;
        let reassigns = state.scan_reassignments(rng.as_mut());
        let swaps = state.scan_swaps(rng.as_mut());
        trace
            .rows
            .push(state.trace_row(iteration, [merges, remasters, reassigns, swaps]));
        if state.lagrangian() - before < config.tol {
            converged = true;
            break;
        }
    }

    let clustering = state.into_clustering(n)?;
    let evaluation = evaluate_with(&clustering, config.lambda, config.coverage_term, alpha, cov)?;
    Ok(DescentOutcome {
        clustering,
        evaluation,
        trace,
        converged,
    })
}

/// Mutable search state with per-cluster rate and coverage bookkeeping.
///
/// Cluster rates are always recomputed from the member set through
/// `cluster_rate_set`, never updated by running sums, so any state reachable
/// here scores bit-identically to a fresh evaluation of the same clustering.
struct SearchState<'a> {
    alpha: &'a AlphaMatrix,
    lambda: f64,
    term: CoverageTerm,
    masters: BTreeSet<NodeId>,
    assign: BTreeMap<NodeId, NodeId>,
    members: BTreeMap<NodeId, BTreeSet<NodeId>>,
    rates: BTreeMap<NodeId, f64>,
    cov: CoverageResult,
}

impl<'a> SearchState<'a> {
    fn all_masters(
        n: usize,
        alpha: &'a AlphaMatrix,
        lambda: f64,
        term: CoverageTerm,
        cov_eval: &mut CoverageEvaluator,
    ) -> Result<Self> {
        let masters: BTreeSet<NodeId> = (1..=n as NodeId).collect();
        let members: BTreeMap<NodeId, BTreeSet<NodeId>> =
            masters.iter().map(|&m| (m, BTreeSet::from([m]))).collect();
        let rates = members
            .iter()
            .map(|(&m, mem)| (m, cluster_rate_set(m, mem, alpha)))
            .collect();
        let cov = cov_eval.eval(&masters)?;
        Ok(SearchState {
            alpha,
            lambda,
            term,
            masters,
            assign: BTreeMap::new(),
            members,
            rates,
            cov,
        })
    }

    fn network_rate(&self) -> f64 {
        self.rates.values().copied().fold(f64::INFINITY, f64::min)
    }

    fn lagrangian(&self) -> f64 {
        lagrangian_value(
            self.network_rate(),
            self.lambda,
            self.term.metric(&self.cov),
        )
    }

    /// Minimum over cluster rates with some clusters dropped and candidate
    /// rates added; used to score tentative moves without mutating state.
    fn min_rate_with(&self, drop: &[NodeId], add: &[f64]) -> f64 {
        let base = self
            .rates
            .iter()
            .filter(|(m, _)| !drop.contains(m))
            .map(|(_, &r)| r)
            .fold(f64::INFINITY, f64::min);
        add.iter().copied().fold(base, f64::min)
    }

    fn trace_row(&self, iteration: usize, counts: [usize; 4]) -> TraceRow {
        TraceRow {
            iteration,
            lagrangian: self.lagrangian(),
            rate: self.network_rate(),
            coverage_fraction: self.cov.fraction,
            merges: counts[0],
            remasters: counts[1],
            reassigns: counts[2],
            swaps: counts[3],
        }
    }

    fn maybe_shuffle<T>(list: &mut [T], rng: &mut Option<&mut ChaCha8Rng>) {
        if let Some(rng) = rng {
            list.shuffle(&mut **rng);
        }
    }

    /// Merge scan: try absorbing master j (and its workers) into master i
    /// for every master pair, accepting whenever the Lagrangian does not
    /// drop. Accepted merges apply immediately and later pairs see them.
    fn scan_merges(
        &mut self,
        cov_eval: &mut CoverageEvaluator,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<usize> {
        let snapshot: Vec<NodeId> = self.masters.iter().copied().collect();
        let mut pairs = Vec::with_capacity(snapshot.len() * (snapshot.len().saturating_sub(1)) / 2);
        for (a, &i) in snapshot.iter().enumerate() {
            for &j in &snapshot[a + 1..] {
                pairs.push((i, j));
            }
        }
        Self::maybe_shuffle(&mut pairs, &mut rng);

        let mut accepted = 0;
        for (i, j) in pairs {
            if !self.masters.contains(&i) || !self.masters.contains(&j) {
                continue;
            }
            let mut merged = self.members[&i].clone();
            merged.extend(self.members[&j].iter().copied());
            let merged_rate = cluster_rate_set(i, &merged, self.alpha);
            let cand_rate = self.min_rate_with(&[i, j], &[merged_rate]);

            let mut cand_masters = self.masters.clone();
            cand_masters.remove(&j);
            let cand_cov = cov_eval.eval(&cand_masters)?;
            let cand_l = lagrangian_value(cand_rate, self.lambda, self.term.metric(&cand_cov));
            if cand_l >= self.lagrangian() {
                for &k in &self.members[&j].clone() {
                    self.assign.insert(k, i);
                }
                self.members.remove(&j);
                self.rates.remove(&j);
                self.members.insert(i, merged);
                self.rates.insert(i, merged_rate);
                self.masters = cand_masters;
                self.cov = cand_cov;
                accepted += 1;
            }
        }
        Ok(accepted)
    }

    /// Best-master scan: within each cluster, hand the master role to the
    /// member that maximizes the Lagrangian, other clusters held fixed.
    /// Ties keep the current master.
    fn scan_best_masters(
        &mut self,
        cov_eval: &mut CoverageEvaluator,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<usize> {
        let mut clusters: Vec<NodeId> = self.masters.iter().copied().collect();
        Self::maybe_shuffle(&mut clusters, &mut rng);

        let mut accepted = 0;
        for i in clusters {
            let mem = self.members[&i].clone();
            if mem.len() == 1 {
                continue;
            }
            // Other clusters' rates are unaffected by the master choice, so
            // fold them down once per cluster.
            let min_others = self.min_rate_with(&[i], &[]);

            let mut best_j = i;
            let mut best_cov = self.cov;
            let mut best_rate_j = self.rates[&i];
            let mut best_l = lagrangian_value(
                min_others.min(best_rate_j),
                self.lambda,
                self.term.metric(&self.cov),
            );

            let mut candidates: Vec<NodeId> = mem.iter().copied().filter(|&j| j != i).collect();
            Self::maybe_shuffle(&mut candidates, &mut rng);
            for j in candidates {
                let rate_j = cluster_rate_set(j, &mem, self.alpha);
                let mut cand_masters = self.masters.clone();
                cand_masters.remove(&i);
                cand_masters.insert(j);
                let cand_cov = cov_eval.eval(&cand_masters)?;
                let l = lagrangian_value(
                    min_others.min(rate_j),
                    self.lambda,
                    self.term.metric(&cand_cov),
                );
                if l > best_l {
                    best_j = j;
                    best_cov = cand_cov;
                    best_rate_j = rate_j;
                    best_l = l;
                }
            }

            if best_j != i {
                self.masters.remove(&i);
                self.masters.insert(best_j);
                self.members.remove(&i);
                self.members.insert(best_j, mem.clone());
                self.rates.remove(&i);
                self.rates.insert(best_j, best_rate_j);
                self.assign.remove(&best_j);
                for &k in &mem {
                    if k != best_j {
                        self.assign.insert(k, best_j);
                    }
                }
                self.cov = best_cov;
                accepted += 1;
            }
        }
        Ok(accepted)
    }

    /// Reassignment scan: move each worker to the cluster that maximizes
    /// the network rate. Masters are fixed, so coverage cannot change; ties
    /// keep the worker where it is, then prefer the lowest master id.
    fn scan_reassignments(&mut self, mut rng: Option<&mut ChaCha8Rng>) -> usize {
        let mut workers: Vec<NodeId> = self.assign.keys().copied().collect();
        Self::maybe_shuffle(&mut workers, &mut rng);

        let mut accepted = 0;
        for w in workers {
            let source = self.assign[&w];
            let mut shrunk = self.members[&source].clone();
            shrunk.remove(&w);
            let source_rate = cluster_rate_set(source, &shrunk, self.alpha);

            let mut best_m = source;
            let mut best_nr = self.network_rate();
            let mut targets: Vec<NodeId> = self
                .masters
                .iter()
                .copied()
                .filter(|&m| m != source)
                .collect();
            Self::maybe_shuffle(&mut targets, &mut rng);
            for m in targets {
                let mut grown = self.members[&m].clone();
                grown.insert(w);
                let target_rate = cluster_rate_set(m, &grown, self.alpha);
                let nr = self.min_rate_with(&[source, m], &[source_rate, target_rate]);
                if nr > best_nr {
                    best_m = m;
                    best_nr = nr;
                }
            }

            if best_m != source {
                self.members.get_mut(&source).unwrap().remove(&w);
                self.members.get_mut(&best_m).unwrap().insert(w);
                self.assign.insert(w, best_m);
                self.rates.insert(
                    source,
                    cluster_rate_set(source, &self.members[&source], self.alpha),
                );
                self.rates.insert(
                    best_m,
                    cluster_rate_set(best_m, &self.members[&best_m], self.alpha),
                );
                accepted += 1;
            }
        }
        accepted
    }

    /// Swap scan: exchange the clusters of two workers whenever that
    /// strictly improves the network rate.
    fn scan_swaps(&mut self, mut rng: Option<&mut ChaCha8Rng>) -> usize {
        let workers: Vec<NodeId> = self.assign.keys().copied().collect();
        let mut pairs = Vec::new();
        for (a, &w1) in workers.iter().enumerate() {
            for &w2 in &workers[a + 1..] {
                pairs.push((w1, w2));
            }
        }
        Self::maybe_shuffle(&mut pairs, &mut rng);

        let mut accepted = 0;
        for (w1, w2) in pairs {
            let s1 = self.assign[&w1];
            let s2 = self.assign[&w2];
            if s1 == s2 {
                continue;
            }
            let mut m1 = self.members[&s1].clone();
            m1.remove(&w1);
            m1.insert(w2);
            let mut m2 = self.members[&s2].clone();
            m2.remove(&w2);
            m2.insert(w1);
            let r1 = cluster_rate_set(s1, &m1, self.alpha);
            let r2 = cluster_rate_set(s2, &m2, self.alpha);
            let nr = self.min_rate_with(&[s1, s2], &[r1, r2]);
            if nr > self.network_rate() {
                self.members.insert(s1, m1);
                self.members.insert(s2, m2);
                self.rates.insert(s1, r1);
                self.rates.insert(s2, r2);
                self.assign.insert(w1, s2);
                self.assign.insert(w2, s1);
                accepted += 1;
            }
        }
        accepted
    }

    fn into_clustering(self, n: usize) -> Result<Clustering> {
        Clustering::new(self.masters, self.assign, n)
    }
}

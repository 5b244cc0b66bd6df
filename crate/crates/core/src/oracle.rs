//! Exhaustive ground truth for small instances.
//!
//! Every clustering on n nodes is enumerated (each node a master or
//! assigned to one master; idle nodes excluded, which is what keeps n = 8
//! tractable), and scored through the same evaluation path as the local
//! search, so a gap between the two isolates search error rather than model
//! disagreement. The instance count is `sum_m C(n,m) * m^(n-m)`.

use std::collections::{BTreeMap, BTreeSet};

use crate::clustering::{evaluate_with, Clustering, CoverageTerm, Evaluation};
use crate::coverage::CoverageEvaluator;
use crate::error::{Error, Result};
use crate::linkmodel::build_alpha;
use crate::pareto::{pareto_filter, FrontierPoint};
use crate::scenario::{NodeId, Scenario};

/// Largest n accepted by default; 41393 clusterings.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

/// Number of clusterings on `n` nodes; saturates at `u128::MAX`.
pub fn clustering_count(n: usize) -> u128 {
    let mut total: u128 = 0;
    for m in 1..=n {
        let mut term = binomial(n, m);
        for _ in 0..(n - m) {
            term = term.saturating_mul(m as u128);
        }
        total = total.saturating_add(term);
    }
    total
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

fn count_for_message(n: usize) -> String {
    let count = clustering_count(n);
    if count == u128::MAX {
        "more than 3.4e38".to_string()
    } else {
        count.to_string()
    }
}

/// Streams every clustering of `n` nodes in deterministic order: master
/// subsets lexicographically, worker assignments as a mixed-radix counter
/// over the non-masters (ascending id, last digit fastest).
pub fn enumerate_clusterings(n: usize, cap: usize) -> Result<ClusteringIter> {
    if n == 0 {
        return Err(Error::validation("enumeration requires n >= 1"));
    }
    if n > cap {
        return Err(Error::EnumerationCap {
            n,
            count: count_for_message(n),
            cap,
        });
    }
    Ok(ClusteringIter {
        n,
        masters: vec![1],
        digits: vec![0; n - 1],
        exhausted: false,
    })
}

#[derive(Debug)]
pub struct ClusteringIter {
    n: usize,
    masters: Vec<NodeId>,
    /// Assignment counter for the current master subset; digit k chooses
    /// the master (by index into `masters`) of the k-th non-master.
    digits: Vec<usize>,
    exhausted: bool,
}

impl ClusteringIter {
    fn build(&self) -> Clustering {
        let master_set: BTreeSet<NodeId> = self.masters.iter().copied().collect();
        let assignment: BTreeMap<NodeId, NodeId> = (1..=self.n as NodeId)
            .filter(|id| !master_set.contains(id))
            .zip(&self.digits)
            .map(|(worker, &digit)| (worker, self.masters[digit]))
            .collect();
        Clustering::new(master_set, assignment, self.n)
            .expect("enumerated clusterings satisfy the partition invariants")
    }

    fn advance(&mut self) {
        // Mixed-radix increment with base |masters|.
        let base = self.masters.len();
        for digit in self.digits.iter_mut().rev() {
            *digit += 1;
            if *digit < base {
                return;
            }
            *digit = 0;
        }
        // Counter wrapped: lexicographic successor of the master subset.
        let last = *self.masters.last().expect("subset never empty");
        if (last as usize) < self.n {
            self.masters.push(last + 1);
        } else {
            self.masters.pop();
            match self.masters.last_mut() {
                Some(tail) => *tail += 1,
                None => {
                    self.exhausted = true;
                    return;
                }
            }
        }
        self.digits = vec![0; self.n - self.masters.len()];
    }
}

impl Iterator for ClusteringIter {
    type Item = Clustering;

    fn next(&mut self) -> Option<Clustering> {
        if self.exhausted {
            return None;
        }
        let clustering = self.build();
        self.advance();
        Some(clustering)
    }
}

/// Exact Lagrangian maximizer over all clusterings; ties prefer fewer
/// masters, then the lexicographically smallest clustering.
pub fn oracle_best(scenario: &Scenario, lambda: f64) -> Result<(Clustering, Evaluation)> {
    oracle_best_with(
        scenario,
        lambda,
        CoverageTerm::Fraction,
        DEFAULT_ENUMERATION_CAP,
    )
}

pub fn oracle_best_with(
    scenario: &Scenario,
    lambda: f64,
    term: CoverageTerm,
    cap: usize,
) -> Result<(Clustering, Evaluation)> {
    let alpha = build_alpha(scenario);
    let mut cov = CoverageEvaluator::new(scenario, &scenario.coverage_config)?;
    let mut best: Option<(Clustering, Evaluation)> = None;
    for clustering in enumerate_clusterings(scenario.n(), cap)? {
        let evaluation = evaluate_with(&clustering, lambda, term, &alpha, &mut cov)?;
        let replace = match &best {
            None => true,
            Some((incumbent_c, incumbent_e)) => {
                evaluation.lagrangian > incumbent_e.lagrangian
                    || (evaluation.lagrangian == incumbent_e.lagrangian
                        && tie_key(&clustering) < tie_key(incumbent_c))
            }
        };
        if replace {
            best = Some((clustering, evaluation));
        }
    }
    Ok(best.expect("enumeration yields at least one clustering"))
}

fn tie_key(c: &Clustering) -> (usize, Vec<NodeId>, Vec<NodeId>) {
    (
        c.master_count(),
        c.masters().iter().copied().collect(),
        c.assignment().values().copied().collect(),
    )
}

/// Exact Pareto frontier of (coverage, rate) over all clusterings, sorted
/// by coverage ascending.
pub fn oracle_pareto(scenario: &Scenario) -> Result<Vec<FrontierPoint>> {
    oracle_pareto_with(scenario, DEFAULT_ENUMERATION_CAP)
}

pub fn oracle_pareto_with(scenario: &Scenario, cap: usize) -> Result<Vec<FrontierPoint>> {
    let alpha = build_alpha(scenario);
    let mut cov = CoverageEvaluator::new(scenario, &scenario.coverage_config)?;
    let mut evaluated: Vec<(Clustering, Evaluation)> = Vec::new();
    for clustering in enumerate_clusterings(scenario.n(), cap)? {
        let evaluation = evaluate_with(&clustering, 0.0, CoverageTerm::Fraction, &alpha, &mut cov)?;
        evaluated.push((clustering, evaluation));
    }
    let points: Vec<(f64, f64)> = evaluated
        .iter()
        .map(|(_, e)| (e.coverage.fraction, e.rate))
        .collect();
    let kept = pareto_filter(&points);
    Ok(kept
        .into_iter()
        .map(|k| {
            let (clustering, evaluation) = &evaluated[k];
            FrontierPoint {
                lambda: None,
                coverage_fraction: evaluation.coverage.fraction,
                coverage_abs: evaluation.coverage.absolute,
                rate: evaluation.rate,
                master_count: clustering.master_count(),
                clustering: clustering.clone(),
            }
        })
        .collect())
}

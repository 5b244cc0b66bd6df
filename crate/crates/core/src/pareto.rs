//! Multiplier sweeps over the local search and Pareto-frontier extraction.

use rayon::prelude::*;

use crate::clustering::{Clustering, CoverageTerm, Evaluation};
use crate::coverage::CoverageEvaluator;
use crate::descent::{run_descent_with, DescentConfig, DescentOutcome};
use crate::error::{Error, Result};
use crate::linkmodel::build_alpha;
use crate::scenario::Scenario;

/// Sweep parameters: the multiplier list plus per-run search settings.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    /// Local-search runs per multiplier; restart k >= 1 shuffles the move
    /// scan order with seed k and the best Lagrangian wins.
    pub restarts: usize,
    pub tol: f64,
    pub max_outer_iters: Option<usize>,
    pub coverage_term: CoverageTerm,
}

impl SweepConfig {
    pub fn new(lambdas: Vec<f64>) -> Self {
        SweepConfig {
            lambdas,
            restarts: 1,
            tol: 1e-9,
            max_outer_iters: None,
            coverage_term: CoverageTerm::default(),
        }
    }

    /// Stock grid: 25 log-spaced multipliers in [1e-3, 10] plus 0.
    pub fn default_grid() -> Vec<f64> {
        let mut lambdas = vec![0.0];
        lambdas.extend(log_spaced(1e-3, 10.0, 25));
        lambdas
    }

    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::validation("sweep requires at least one lambda"));
        }
        if let Some(bad) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::validation(format!(
                "lambdas must be finite and nonnegative, got {bad}"
            )));
        }
        if self.restarts < 1 {
            return Err(Error::validation("restarts must be >= 1"));
        }
        Ok(())
    }
}

/// `count` log-spaced values from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min && count >= 1);
    if count == 1 {
        return vec![min];
    }
    let step = (max / min).ln() / (count - 1) as f64;
    (0..count).map(|k| min * (step * k as f64).exp()).collect()
}

/// One sweep result: the best run at a multiplier.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: f64,
    pub clustering: Clustering,
    pub evaluation: Evaluation,
    /// Outer passes of the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Which restart won (0 is the canonical scan order).
    pub restart: usize,
}

/// Runs the local search once per multiplier (best over restarts).
///
/// Multipliers are independent, so they fan out across threads; results
/// come back in input order and are deterministic for a given scenario and
/// config.
pub fn sweep(scenario: &Scenario, config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let alpha = build_alpha(scenario);
    config
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let mut cov = CoverageEvaluator::new(scenario, &scenario.coverage_config)?;
            let mut best: Option<(usize, DescentOutcome)> = None;
            for restart in 0..config.restarts {
                let run_config = DescentConfig {
                    lambda,
                    tol: config.tol,
                    max_outer_iters: config.max_outer_iters,
                    coverage_term: config.coverage_term,
                    coverage_config: None,
                    scan_seed: (restart > 0).then_some(restart as u64),
                };
                let outcome = run_descent_with(scenario, &alpha, &mut cov, &run_config)?;
                let replace = match &best {
                    None => true,
                    Some((_, incumbent)) => {
                        outcome.evaluation.lagrangian > incumbent.evaluation.lagrangian
                    }
                };
                if replace {
                    best = Some((restart, outcome));
                }
            }
            let (restart, outcome) = best.expect("restarts >= 1");
            Ok(SweepPoint {
                lambda,
                iterations: outcome.trace.rows.len() - 1,
                converged: outcome.converged,
                clustering: outcome.clustering,
                evaluation: outcome.evaluation,
                restart,
            })
        })
        .collect()
}

/// A non-dominated (coverage, rate) point with its clustering.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    /// Multiplier that produced the point; `None` for exhaustive frontiers.
    pub lambda: Option<f64>,
    pub coverage_fraction: f64,
    pub coverage_abs: f64,
    pub rate: f64,
    pub master_count: usize,
    pub clustering: Clustering,
}

/// Indices of the points surviving the dominance rule, sorted by coverage
/// ascending.
///
/// A point is dropped iff some other point is at least as good in both
/// coordinates and not identical to it; among exact duplicates the first
/// occurrence is kept as the representative (deleting a point merely equal
/// to another would throw away an achievable operating point).
pub fn pareto_filter(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
            .then(a.cmp(&b))
    });

    let mut kept = Vec::new();
    let mut best_rate = f64::NEG_INFINITY;
    let mut g = 0;
    while g < order.len() {
        let coverage = points[order[g]].0;
        let mut h = g;
        while h < order.len() && points[order[h]].0 == coverage {
            h += 1;
        }
        // Within an equal-coverage group only the max-rate points survive;
        // the group is sorted rate-descending with input order as the tie
        // break, so the head is the representative.
        let rate = points[order[g]].1;
        if rate > best_rate {
            kept.push(order[g]);
            best_rate = rate;
        }
        g = h;
    }
    kept.reverse();
    kept
}

/// Applies the dominance filter to sweep output.
pub fn frontier_from_sweep(points: &[SweepPoint]) -> Vec<FrontierPoint> {
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.evaluation.coverage.fraction, p.evaluation.rate))
        .collect();
    pareto_filter(&pairs)
        .into_iter()
        .map(|k| {
            let p = &points[k];
            FrontierPoint {
                lambda: Some(p.lambda),
                coverage_fraction: p.evaluation.coverage.fraction,
                coverage_abs: p.evaluation.coverage.absolute,
                rate: p.evaluation.rate,
                master_count: p.clustering.master_count(),
                clustering: p.clustering.clone(),
            }
        })
        .collect()
}

//! Event-driven simulation of one dispatch/compute/return frame per cluster.
//!
//! The master starts its own share immediately and streams each worker's
//! task data on a dedicated orthogonal channel, so every dispatch starts at
//! time zero; a worker computes only after its whole input arrives, then
//! returns its output. Completion times emerge from event propagation
//! rather than from the closed-form delay expression, which makes the
//! simulator an independent check on the analytical cluster rate.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linkmodel::link_rate;
use crate::scenario::{NodeId, Scenario};

/// Link and compute parameters for one cluster, decoupled from any global
/// coefficient matrix.
#[derive(Debug, Clone)]
pub struct ClusterLink {
    pub master: NodeId,
    /// Master-to-member data rate, bits/s; the master's own entry is the
    /// infinite self-link.
    pub rho: BTreeMap<NodeId, f64>,
    /// Member processing speeds, tasks/s.
    pub gamma: BTreeMap<NodeId, f64>,
    pub b0_bits: f64,
    pub b1_bits: f64,
}

impl ClusterLink {
    /// Extracts the cluster's links from a scenario.
    pub fn from_scenario(scenario: &Scenario, master: NodeId, workers: &[NodeId]) -> Result<Self> {
        scenario.node(master)?;
        let mut rho = BTreeMap::from([(master, f64::INFINITY)]);
        let mut gamma = BTreeMap::from([(master, scenario.node(master)?.gamma)]);
        for &w in workers {
            let d = scenario.distance(master, w)?;
            rho.insert(w, link_rate(d, &scenario.radio));
            gamma.insert(w, scenario.node(w)?.gamma);
        }
        Ok(ClusterLink {
            master,
            rho,
            gamma,
            b0_bits: scenario.tasks.b0_bits,
            b1_bits: scenario.tasks.b1_bits,
        })
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.rho.keys().copied()
    }

    /// Per-task delay coefficient `(b0 + b1)/rho + 1/gamma` for a member.
    pub fn alpha(&self, member: NodeId) -> f64 {
        (self.b0_bits + self.b1_bits) / self.rho[&member] + 1.0 / self.gamma[&member]
    }

    /// All member coefficients, for feeding the closed-form split.
    pub fn alphas(&self) -> BTreeMap<NodeId, f64> {
        self.members().map(|j| (j, self.alpha(j))).collect()
    }
}

/// Start/end of one phase, seconds from frame start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInterval {
    pub start: f64,
    pub end: f64,
}

/// Contiguous dispatch, compute and return intervals of one member.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSchedule {
    pub node: NodeId,
    pub dispatch: PhaseInterval,
    pub compute: PhaseInterval,
    pub ret: PhaseInterval,
}

/// One simulated frame: member schedules plus the cluster completion time.
#[derive(Debug, Clone)]
pub struct FrameSchedule {
    pub master: NodeId,
    pub nodes: Vec<NodeSchedule>,
    /// Latest return end over all members.
    pub completion: f64,
}

/// Event kind: the named phase has just completed for a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Completed {
    Dispatch,
    Compute,
    Return,
}

/// Walks one frame of `tasks_per_frame` tasks through the three phases.
///
/// `split` must cover exactly the cluster members and sum to 1.
pub fn simulate_frame(
    link: &ClusterLink,
    split: &BTreeMap<NodeId, f64>,
    tasks_per_frame: f64,
) -> Result<FrameSchedule> {
    if !tasks_per_frame.is_finite() || tasks_per_frame <= 0.0 {
        return Err(Error::validation("tasks per frame T must be positive"));
    }
    let members: Vec<NodeId> = link.members().collect();
    if split.keys().copied().collect::<Vec<_>>() != members {
        return Err(Error::validation(
            "task split must cover exactly the cluster members",
        ));
    }
    let total: f64 = split.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "task split must sum to 1, got {total}"
        )));
    }
    if split.values().any(|&e| e < 0.0) {
        return Err(Error::validation(
            "task split fractions must be nonnegative",
        ));
    }

    // Every dispatch begins at frame start on its own channel.
    let mut pending: Vec<(f64, NodeId, Completed)> = members
        .iter()
        .map(|&j| {
            let dispatch = split[&j] * tasks_per_frame * link.b0_bits / link.rho[&j];
            (dispatch, j, Completed::Dispatch)
        })
        .collect();

    let mut schedules: BTreeMap<NodeId, NodeSchedule> = BTreeMap::new();
    let mut completion = 0.0f64;
    while !pending.is_empty() {
        // Pop the earliest event; node id and phase break time ties so the
        // walk is deterministic.
        let next = pending
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
            .map(|(k, _)| k)
            .expect("pending is nonempty");
        let (time, node, phase) = pending.swap_remove(next);
        let share = split[&node] * tasks_per_frame;
        match phase {
            Completed::Dispatch => {
                schedules.insert(
                    node,
                    NodeSchedule {
                        node,
                        dispatch: PhaseInterval {
                            start: 0.0,
                            end: time,
                        },
                        compute: PhaseInterval {
                            start: time,
                            end: time,
                        },
                        ret: PhaseInterval {
                            start: time,
                            end: time,
                        },
                    },
                );
                pending.push((time + share / link.gamma[&node], node, Completed::Compute));
            }
            Completed::Compute => {
                let entry = schedules.get_mut(&node).expect("dispatch precedes compute");
                entry.compute.end = time;
                entry.ret = PhaseInterval {
                    start: time,
                    end: time,
                };
                pending.push((
                    time + share * link.b1_bits / link.rho[&node],
                    node,
                    Completed::Return,
                ));
            }
            Completed::Return => {
                let entry = schedules.get_mut(&node).expect("compute precedes return");
                entry.ret.end = time;
                completion = completion.max(time);
            }
        }
    }

    Ok(FrameSchedule {
        master: link.master,
        nodes: schedules.into_values().collect(),
        completion,
    })
}

/// Sustained rate implied by a simulated frame: `T / completion`.
pub fn throughput_check(schedule: &FrameSchedule, tasks_per_frame: f64) -> f64 {
    tasks_per_frame / schedule.completion
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::optimal_split_values;

    fn synthetic_link(
        rho_workers: &[(NodeId, f64)],
        gamma: &[(NodeId, f64)],
        b0: f64,
        b1: f64,
    ) -> ClusterLink {
        let master = gamma[0].0;
        let mut rho = BTreeMap::from([(master, f64::INFINITY)]);
        rho.extend(rho_workers.iter().copied());
        ClusterLink {
            master,
            rho,
            gamma: gamma.iter().copied().collect(),
            b0_bits: b0,
            b1_bits: b1,
        }
    }

    #[test]
    fn singleton_frame() {
        let link = synthetic_link(&[], &[(1, 1.0)], 1e6, 0.0);
        let split = BTreeMap::from([(1, 1.0)]);
        let frame = simulate_frame(&link, &split, 1.0).unwrap();
        assert_eq!(frame.completion, 1.0);
        let sched = &frame.nodes[0];
        assert_eq!(
            sched.dispatch,
            PhaseInterval {
                start: 0.0,
                end: 0.0
            }
        );
        assert_eq!(
            sched.compute,
            PhaseInterval {
                start: 0.0,
                end: 1.0
            }
        );
        assert_eq!(
            sched.ret,
            PhaseInterval {
                start: 1.0,
                end: 1.0
            }
        );
    }

    #[test]
    fn hand_walked_master_worker_frame() {
        // rho = 1 Mb/s, b0 = 1 Mbit, b1 = 0, both speeds 1 task/s, even
        // split of one task: the master finishes at 0.5 s; the worker waits
        // 0.5 s for its data and computes until 1.0 s.
        let link = synthetic_link(&[(2, 1e6)], &[(1, 1.0), (2, 1.0)], 1e6, 0.0);
        let split = BTreeMap::from([(1, 0.5), (2, 0.5)]);
        let frame = simulate_frame(&link, &split, 1.0).unwrap();
        assert_eq!(frame.completion, 1.0);
        let master = frame.nodes.iter().find(|s| s.node == 1).unwrap();
        let worker = frame.nodes.iter().find(|s| s.node == 2).unwrap();
        assert_eq!(
            master.compute,
            PhaseInterval {
                start: 0.0,
                end: 0.5
            }
        );
        assert_eq!(
            worker.dispatch,
            PhaseInterval {
                start: 0.0,
                end: 0.5
            }
        );
        assert_eq!(
            worker.compute,
            PhaseInterval {
                start: 0.5,
                end: 1.0
            }
        );
        assert_eq!(
            worker.ret,
            PhaseInterval {
                start: 1.0,
                end: 1.0
            }
        );
    }

    #[test]
    fn schedule_matches_closed_form_delay() {
        let link = synthetic_link(
            &[(2, 2e6), (3, 5e5)],
            &[(1, 0.8), (2, 1.3), (3, 0.4)],
            3e6,
            1e6,
        );
        let split = BTreeMap::from([(1, 0.5), (2, 0.3), (3, 0.2)]);
        let t = 4.0;
        let frame = simulate_frame(&link, &split, t).unwrap();
        let expected = link
            .members()
            .map(|j| {
                split[&j] * t * link.b0_bits / link.rho[&j]
                    + split[&j] * t / link.gamma[&j]
                    + split[&j] * t * link.b1_bits / link.rho[&j]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((frame.completion - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn optimal_split_finishes_simultaneously() {
        let link = synthetic_link(
            &[(2, 1e6), (3, 3e5), (4, 8e6)],
            &[(1, 0.5), (2, 1.0), (3, 0.25), (4, 2.0)],
            4e6,
            5e5,
        );
        let split = optimal_split_values(&link.alphas());
        let frame = simulate_frame(&link, &split, 1.0).unwrap();
        for sched in &frame.nodes {
            assert!(
                (sched.ret.end - frame.completion).abs() / frame.completion < 1e-9,
                "node {} lags: {} vs {}",
                sched.node,
                sched.ret.end,
                frame.completion
            );
        }
        // And the simulated rate matches the analytical one.
        let analytical: f64 = link.alphas().values().map(|a| 1.0 / a).sum();
        let simulated = throughput_check(&frame, 1.0);
        assert!((simulated - analytical).abs() / analytical < 1e-9);
    }

    #[test]
    fn rate_is_invariant_in_frame_size() {
        let link = synthetic_link(&[(2, 1e6)], &[(1, 1.0), (2, 0.5)], 2e6, 1e5);
        let split = optimal_split_values(&link.alphas());
        let one = simulate_frame(&link, &split, 1.0).unwrap();
        let two = simulate_frame(&link, &split, 2.0).unwrap();
        assert!((two.completion - 2.0 * one.completion).abs() < 1e-12);
        assert!((throughput_check(&one, 1.0) - throughput_check(&two, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_split_is_never_faster() {
        let link = synthetic_link(
            &[(2, 7e5), (3, 2e6)],
            &[(1, 0.9), (2, 0.6), (3, 1.4)],
            1e6,
            2e5,
        );
        let optimal = optimal_split_values(&link.alphas());
        let best = throughput_check(&simulate_frame(&link, &optimal, 1.0).unwrap(), 1.0);
        for shift in [-0.2, -0.05, 0.08, 0.19] {
            let mut skewed = optimal.clone();
            *skewed.get_mut(&1).unwrap() += shift;
            *skewed.get_mut(&2).unwrap() -= shift;
            if skewed.values().any(|&e| e < 0.0) {
                continue;
            }
            let rate = throughput_check(&simulate_frame(&link, &skewed, 1.0).unwrap(), 1.0);
            assert!(rate <= best + 1e-12, "shift {shift} beat the optimum");
        }
    }

    #[test]
    fn split_validation() {
        let link = synthetic_link(&[(2, 1e6)], &[(1, 1.0), (2, 1.0)], 1e6, 0.0);
        let wrong_members = BTreeMap::from([(1, 0.5), (3, 0.5)]);
        assert!(simulate_frame(&link, &wrong_members, 1.0).is_err());
        let bad_sum = BTreeMap::from([(1, 0.5), (2, 0.6)]);
        assert!(simulate_frame(&link, &bad_sum, 1.0).is_err());
        let good = BTreeMap::from([(1, 0.5), (2, 0.5)]);
        assert!(simulate_frame(&link, &good, 0.0).is_err());
    }
}

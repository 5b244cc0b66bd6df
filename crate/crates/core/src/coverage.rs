//! Region coverage by master-node sensing disks, clipped to the region.
//!
//! Three evaluation methods: a deterministic cell-center grid (the default),
//! seeded Monte Carlo sampling, and exact interval unions for 1-d regions.
//! The grid and Monte Carlo engines keep per-point multiplicity counts so a
//! search can add and remove one disk at a time instead of re-rasterizing
//! the whole master set; results are identical to a from-scratch count.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::{NodeId, Scenario};

/// How to measure the union-of-disks area.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverageConfig {
    /// Count cell centers inside the union, times the cell measure.
    Grid { resolution_m: f64 },
    /// Fraction of seeded uniform samples inside the union, times |A|.
    MonteCarlo { samples: u64, seed: u64 },
    /// Exact union-of-intervals length; 1-d regions only.
    Exact1d,
}

impl CoverageConfig {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        match *self {
            CoverageConfig::Grid { resolution_m } => {
                if !resolution_m.is_finite() || resolution_m <= 0.0 {
                    return Err(Error::validation("grid resolution_m must be positive"));
                }
            }
            CoverageConfig::MonteCarlo { samples, .. } => {
                if samples < 1 {
                    return Err(Error::validation("montecarlo samples must be >= 1"));
                }
            }
            CoverageConfig::Exact1d => {
                if dimension != 1 {
                    return Err(Error::validation(
                        "coverage method exact1d requires a 1-d region",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Covered measure, absolute (m^d) and as a fraction of the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    pub absolute: f64,
    pub fraction: f64,
}

/// Measures the region within distance D of at least one master.
///
/// One-shot convenience; searches that evaluate many master sets should hold
/// a [`CoverageEvaluator`] instead.
pub fn coverage(
    scenario: &Scenario,
    masters: &BTreeSet<NodeId>,
    config: &CoverageConfig,
) -> Result<CoverageResult> {
    CoverageEvaluator::new(scenario, config)?.eval(masters)
}

/// True iff the master disks cover the region up to the method's resolution
/// (one cell or sample of mass for grid/Monte Carlo, 1e-9 for exact1d).
pub fn covers_everything(
    scenario: &Scenario,
    masters: &BTreeSet<NodeId>,
    config: &CoverageConfig,
) -> Result<bool> {
    let mut eval = CoverageEvaluator::new(scenario, config)?;
    let eps = eval.full_coverage_tolerance();
    Ok(eval.eval(masters)?.fraction >= 1.0 - eps)
}

/// Reusable coverage evaluator: incremental disk bookkeeping plus a memo
/// keyed by the master set.
pub struct CoverageEvaluator {
    engine: Engine,
    memo: HashMap<Vec<NodeId>, CoverageResult>,
}

impl CoverageEvaluator {
    pub fn new(scenario: &Scenario, config: &CoverageConfig) -> Result<Self> {
        config.validate(scenario.region.dimension())?;
        let engine = match *config {
            CoverageConfig::Grid { resolution_m } => {
                Engine::Counting(CountingEngine::grid(scenario, resolution_m))
            }
            CoverageConfig::MonteCarlo { samples, seed } => {
                Engine::Counting(CountingEngine::montecarlo(scenario, samples, seed))
            }
            CoverageConfig::Exact1d => Engine::Exact1d(Exact1dEngine::new(scenario)),
        };
        Ok(CoverageEvaluator {
            engine,
            memo: HashMap::new(),
        })
    }

    /// Covered measure for the given master set.
    pub fn eval(&mut self, masters: &BTreeSet<NodeId>) -> Result<CoverageResult> {
        if masters.is_empty() {
            return Err(Error::EmptyMasters);
        }
        let key: Vec<NodeId> = masters.iter().copied().collect();
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let result = match &mut self.engine {
            Engine::Counting(e) => e.eval(masters)?,
            Engine::Exact1d(e) => e.eval(masters)?,
        };
        self.memo.insert(key, result);
        Ok(result)
    }

    /// Slack below fraction 1.0 still treated as full coverage.
    pub fn full_coverage_tolerance(&self) -> f64 {
        match &self.engine {
            Engine::Counting(e) => 1.0 / e.points.len() as f64,
            Engine::Exact1d(_) => 1e-9,
        }
    }
}

enum Engine {
    Counting(CountingEngine),
    Exact1d(Exact1dEngine),
}

/// Shared engine for grid and Monte Carlo: a fixed set of probe points with
/// per-point disk multiplicities.
struct CountingEngine {
    /// Probe points; the y coordinate is 0 for 1-d regions.
    points: Vec<[f64; 2]>,
    node_pos: Vec<[f64; 2]>,
    radius_sq: f64,
    region_measure: f64,
    /// Grid axis data for bounded disk rasterization (None for Monte Carlo).
    grid: Option<GridAxes>,
    /// Cached point indices within D of each node, built on first use.
    node_points: Vec<Option<Vec<u32>>>,
    counts: Vec<u16>,
    covered: usize,
    current: BTreeSet<NodeId>,
}

struct GridAxes {
    lo: [f64; 2],
    step: [f64; 2],
    cells: [usize; 2],
}

fn node_positions(scenario: &Scenario) -> Vec<[f64; 2]> {
    scenario
        .nodes
        .iter()
        .map(|n| [n.pos[0], if n.pos.len() > 1 { n.pos[1] } else { 0.0 }])
        .collect()
}

impl CountingEngine {
    fn grid(scenario: &Scenario, resolution_m: f64) -> Self {
        let bounds = scenario.region.bounds();
        let mut lo = [0.0, 0.0];
        let mut step = [1.0, 1.0];
        let mut cells = [1usize, 1usize];
        for (axis, b) in bounds.iter().enumerate() {
            let len = b[1] - b[0];
            let count = (len / resolution_m).ceil().max(1.0) as usize;
            lo[axis] = b[0];
            step[axis] = len / count as f64;
            cells[axis] = count;
        }
        let mut points = Vec::with_capacity(cells[0] * cells[1]);
        for iy in 0..cells[1] {
            let y = if bounds.len() > 1 {
                lo[1] + (iy as f64 + 0.5) * step[1]
            } else {
                0.0
            };
            for ix in 0..cells[0] {
                points.push([lo[0] + (ix as f64 + 0.5) * step[0], y]);
            }
        }
        Self::from_points(scenario, points, Some(GridAxes { lo, step, cells }))
    }

    fn montecarlo(scenario: &Scenario, samples: u64, seed: u64) -> Self {
        let bounds = scenario.region.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..samples)
            .map(|_| {
                let x = rng.random_range(bounds[0][0]..bounds[0][1]);
                let y = if bounds.len() > 1 {
                    rng.random_range(bounds[1][0]..bounds[1][1])
                } else {
                    0.0
                };
                [x, y]
            })
            .collect();
        Self::from_points(scenario, points, None)
    }

    fn from_points(scenario: &Scenario, points: Vec<[f64; 2]>, grid: Option<GridAxes>) -> Self {
        let n = scenario.n();
        let d = scenario.coverage_radius_m;
        CountingEngine {
            counts: vec![0; points.len()],
            points,
            node_pos: node_positions(scenario),
            radius_sq: d * d,
            region_measure: scenario.region.measure(),
            grid,
            node_points: vec![None; n],
            covered: 0,
            current: BTreeSet::new(),
        }
    }

    fn disk_points(&mut self, id: NodeId) -> Result<&[u32]> {
        let idx = id as usize - 1;
        if idx >= self.node_pos.len() {
            return Err(Error::UnknownNode(id));
        }
        if self.node_points[idx].is_none() {
            let center = self.node_pos[idx];
            let mut hits = Vec::new();
            match &self.grid {
                Some(axes) => {
                    let radius = self.radius_sq.sqrt();
                    let range = |axis: usize| {
                        let lo_cell = ((center[axis] - radius - axes.lo[axis]) / axes.step[axis]
                            - 0.5)
                            .floor()
                            .max(0.0) as usize;
                        let hi_cell = (((center[axis] + radius - axes.lo[axis]) / axes.step[axis]
                            - 0.5)
                            .ceil()
                            .max(0.0) as usize)
                            .min(axes.cells[axis] - 1);
                        lo_cell..=hi_cell
                    };
                    let ys = if axes.cells[1] > 1 { range(1) } else { 0..=0 };
                    for iy in ys {
                        for ix in range(0) {
                            let k = iy * axes.cells[0] + ix;
                            let p = self.points[k];
                            let dx = p[0] - center[0];
                            let dy = p[1] - center[1];
                            if dx * dx + dy * dy <= self.radius_sq {
                                hits.push(k as u32);
                            }
                        }
                    }
                }
                None => {
                    for (k, p) in self.points.iter().enumerate() {
                        let dx = p[0] - center[0];
                        let dy = p[1] - center[1];
                        if dx * dx + dy * dy <= self.radius_sq {
                            hits.push(k as u32);
                        }
                    }
                }
            }
            self.node_points[idx] = Some(hits);
        }
        Ok(self.node_points[idx].as_deref().unwrap())
    }

    fn add_disk(&mut self, id: NodeId) -> Result<()> {
        self.disk_points(id)?;
        let hits = self.node_points[id as usize - 1].as_ref().unwrap();
        for &k in hits {
            let c = &mut self.counts[k as usize];
            *c += 1;
            if *c == 1 {
                self.covered += 1;
            }
        }
        Ok(())
    }

    fn remove_disk(&mut self, id: NodeId) {
        let hits = self.node_points[id as usize - 1]
            .as_ref()
            .expect("removed disk was previously added");
        for &k in hits {
            let c = &mut self.counts[k as usize];
            *c -= 1;
            if *c == 0 {
                self.covered -= 1;
            }
        }
    }

    fn eval(&mut self, masters: &BTreeSet<NodeId>) -> Result<CoverageResult> {
        let to_add: Vec<NodeId> = masters.difference(&self.current).copied().collect();
        let to_remove: Vec<NodeId> = self.current.difference(masters).copied().collect();
        for id in to_add {
            self.add_disk(id)?;
            self.current.insert(id);
        }
        for id in to_remove {
            self.remove_disk(id);
            self.current.remove(&id);
        }
        let fraction = self.covered as f64 / self.points.len() as f64;
        Ok(CoverageResult {
            absolute: fraction * self.region_measure,
            fraction,
        })
    }
}

struct Exact1dEngine {
    node_x: Vec<f64>,
    lo: f64,
    hi: f64,
    radius: f64,
}

impl Exact1dEngine {
    fn new(scenario: &Scenario) -> Self {
        let b = scenario.region.bounds()[0];
        Exact1dEngine {
            node_x: scenario.nodes.iter().map(|n| n.pos[0]).collect(),
            lo: b[0],
            hi: b[1],
            radius: scenario.coverage_radius_m,
        }
    }

    fn eval(&self, masters: &BTreeSet<NodeId>) -> Result<CoverageResult> {
        let mut intervals = Vec::with_capacity(masters.len());
        for &id in masters {
            let idx = id as usize - 1;
            if idx >= self.node_x.len() {
                return Err(Error::UnknownNode(id));
            }
            let x = self.node_x[idx];
            intervals.push((
                (x - self.radius).max(self.lo),
                (x + self.radius).min(self.hi),
            ));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = 0.0;
        let mut cur = intervals[0];
        for &(s, e) in &intervals[1..] {
            if s <= cur.1 {
                cur.1 = cur.1.max(e);
            } else {
                total += cur.1 - cur.0;
                cur = (s, e);
            }
        }
        total += cur.1 - cur.0;
        Ok(CoverageResult {
            absolute: total,
            fraction: total / (self.hi - self.lo),
        })
    }
}

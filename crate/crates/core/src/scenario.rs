//! Problem instances: the surveyed region, node locations and speeds, radio
//! and task parameters, plus the on-disk scenario format and seeded random
//! instance generation.
//!
//! Canonical internal units are meters, bits, seconds and Watts. Scenario
//! files carry transmit power and noise density in dBm, which are converted
//! to linear units at load time.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageConfig;
use crate::error::{Error, Result};

/// Node identifier, 1-based and contiguous within a scenario.
pub type NodeId = u32;

/// Axis-aligned survey region in 1 or 2 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<[f64; 2]>,
}

impl Region {
    /// Builds a region from per-axis `[lo, hi]` intervals (meters).
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        match bounds.len() {
            1 | 2 => {}
            3 => {
                return Err(Error::validation(
                    "dimension 3 is not supported (planner handles d in {1, 2})",
                ))
            }
            d => return Err(Error::validation(format!("invalid region dimension {d}"))),
        }
        for (axis, b) in bounds.iter().enumerate() {
            if !b[0].is_finite() || !b[1].is_finite() || b[0] >= b[1] {
                return Err(Error::validation(format!(
                    "region axis {axis}: lo must be < hi, got [{}, {}]",
                    b[0], b[1]
                )));
            }
        }
        Ok(Region { bounds })
    }

    /// Square region `[0, side_m]^2`.
    pub fn square(side_m: f64) -> Result<Self> {
        Region::new(vec![[0.0, side_m], [0.0, side_m]])
    }

    /// Interval region `[0, length_m]`.
    pub fn line(length_m: f64) -> Result<Self> {
        Region::new(vec![[0.0, length_m]])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    /// d-dimensional volume of the region (length or area).
    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|b| b[1] - b[0]).product()
    }

    /// Closed-interval containment test per axis.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension()
            && self
                .bounds
                .iter()
                .zip(point)
                .all(|(b, &x)| b[0] <= x && x <= b[1])
    }
}

/// One wireless node: position in the region plus processing speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Position in meters, one coordinate per region axis.
    pub pos: Vec<f64>,
    /// Processing speed in tasks per second.
    pub gamma: f64,
}

/// Radio-link parameters in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub power_w: f64,
    pub noise_w_per_hz: f64,
    pub wavelength_m: f64,
    pub ref_dist_m: f64,
    pub pathloss_exp: f64,
}

impl RadioParams {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("B_hz", self.bandwidth_hz),
            ("P (watts)", self.power_w),
            ("N0 (watts/Hz)", self.noise_w_per_hz),
            ("lambda_c_m", self.wavelength_m),
            ("d0_m", self.ref_dist_m),
            ("pathloss_r", self.pathloss_exp),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(format!(
                    "radio parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Task workload parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskParams {
    /// Input data per task, bits.
    pub b0_bits: f64,
    /// Output data per task, bits.
    pub b1_bits: f64,
    /// Task arrival rate per master, tasks/second.
    pub arrival_rate: f64,
}

impl TaskParams {
    fn validate(&self) -> Result<()> {
        if self.b0_bits < 0.0 || self.b1_bits < 0.0 {
            return Err(Error::validation("b0_bits and b1_bits must be nonnegative"));
        }
        // There is no rate-override interface, so a zero payload in both
        // directions leaves link rates meaningless.
        if self.b0_bits + self.b1_bits <= 0.0 {
            return Err(Error::validation("b0_bits + b1_bits must be positive"));
        }
        if !self.arrival_rate.is_finite() || self.arrival_rate <= 0.0 {
            return Err(Error::validation("task arrival rate RT must be positive"));
        }
        Ok(())
    }
}

/// An immutable problem instance.
///
/// Construction goes through [`Scenario::new`], which checks every
/// invariant; afterwards the value is safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub region: Region,
    pub nodes: Vec<Node>,
    pub radio: RadioParams,
    pub tasks: TaskParams,
    /// Sensing radius D in meters.
    pub coverage_radius_m: f64,
    pub coverage_config: CoverageConfig,
}

impl Scenario {
    pub fn new(
        region: Region,
        mut nodes: Vec<Node>,
        radio: RadioParams,
        tasks: TaskParams,
        coverage_radius_m: f64,
        coverage_config: CoverageConfig,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::validation("scenario requires at least one node"));
        }
        nodes.sort_by_key(|n| n.id);
        let mut seen = BTreeSet::new();
        for node in &nodes {
            if !seen.insert(node.id) {
                return Err(Error::validation(format!("duplicate node id {}", node.id)));
            }
        }
        for (k, node) in nodes.iter().enumerate() {
            if node.id != (k + 1) as NodeId {
                return Err(Error::validation(format!(
                    "node ids must be contiguous 1..n, missing id {}",
                    k + 1
                )));
            }
            if node.pos.len() != region.dimension() {
                return Err(Error::validation(format!(
                    "node {}: position has {} coordinates, region has dimension {}",
                    node.id,
                    node.pos.len(),
                    region.dimension()
                )));
            }
            if !region.contains(&node.pos) {
                return Err(Error::validation(format!(
                    "node {}: position outside region",
                    node.id
                )));
            }
            if !node.gamma.is_finite() || node.gamma <= 0.0 {
                return Err(Error::validation(format!(
                    "node {}: gamma must be positive, got {}",
                    node.id, node.gamma
                )));
            }
        }
        radio.validate()?;
        tasks.validate()?;
        if !coverage_radius_m.is_finite() || coverage_radius_m <= 0.0 {
            return Err(Error::validation("coverage radius D_m must be positive"));
        }
        coverage_config.validate(region.dimension())?;
        Ok(Scenario {
            region,
            nodes,
            radio,
            tasks,
            coverage_radius_m,
            coverage_config,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// All node ids, ascending.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id.checked_sub(1).ok_or(Error::UnknownNode(id))? as usize)
            .ok_or(Error::UnknownNode(id))
    }

    /// Euclidean distance between two nodes, meters.
    pub fn distance(&self, i: NodeId, j: NodeId) -> Result<f64> {
        let a = self.node(i)?;
        let b = self.node(j)?;
        Ok(a.pos
            .iter()
            .zip(&b.pos)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    region: RegionSection,
    nodes: Vec<NodeSection>,
    radio: RadioSection,
    tasks: TasksSection,
    coverage: CoverageSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSection {
    dimension: usize,
    bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSection {
    id: NodeId,
    pos: Vec<f64>,
    gamma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSection {
    #[serde(rename = "B_hz")]
    b_hz: f64,
    #[serde(rename = "P_dBm")]
    p_dbm: f64,
    #[serde(rename = "N0_dBm_per_hz")]
    n0_dbm_per_hz: f64,
    lambda_c_m: f64,
    d0_m: f64,
    pathloss_r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TasksSection {
    b0_bits: f64,
    b1_bits: f64,
    #[serde(rename = "RT")]
    rt: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageSection {
    #[serde(rename = "D_m")]
    d_m: f64,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl CoverageSection {
    fn into_config(self) -> Result<(f64, CoverageConfig)> {
        let config = match self.method.as_str() {
            "grid" => {
                if self.samples.is_some() || self.seed.is_some() {
                    return Err(Error::validation(
                        "coverage method grid takes resolution_m only",
                    ));
                }
                let resolution_m = self.resolution_m.ok_or_else(|| {
                    Error::validation("coverage method grid requires resolution_m")
                })?;
                CoverageConfig::Grid { resolution_m }
            }
            "montecarlo" => {
                if self.resolution_m.is_some() {
                    return Err(Error::validation(
                        "coverage method montecarlo takes samples and seed, not resolution_m",
                    ));
                }
                let samples = self.samples.ok_or_else(|| {
                    Error::validation("coverage method montecarlo requires samples")
                })?;
                CoverageConfig::MonteCarlo {
                    samples,
                    seed: self.seed.unwrap_or(0),
                }
            }
            "exact1d" => {
                if self.resolution_m.is_some() || self.samples.is_some() || self.seed.is_some() {
                    return Err(Error::validation(
                        "coverage method exact1d takes no extra parameters",
                    ));
                }
                CoverageConfig::Exact1d
            }
            other => {
                return Err(Error::validation(format!(
                    "unknown coverage method {other:?} (expected grid | montecarlo | exact1d)"
                )))
            }
        };
        Ok((self.d_m, config))
    }

    fn from_config(d_m: f64, config: &CoverageConfig) -> Self {
        match *config {
            CoverageConfig::Grid { resolution_m } => CoverageSection {
                d_m,
                method: "grid".into(),
                resolution_m: Some(resolution_m),
                samples: None,
                seed: None,
            },
            CoverageConfig::MonteCarlo { samples, seed } => CoverageSection {
                d_m,
                method: "montecarlo".into(),
                resolution_m: None,
                samples: Some(samples),
                seed: Some(seed),
            },
            CoverageConfig::Exact1d => CoverageSection {
                d_m,
                method: "exact1d".into(),
                resolution_m: None,
                samples: None,
                seed: None,
            },
        }
    }
}

fn scenario_from_file(file: ScenarioFile) -> Result<Scenario> {
    if file.region.dimension != file.region.bounds.len() {
        return Err(Error::validation(format!(
            "region dimension {} does not match {} bounds intervals",
            file.region.dimension,
            file.region.bounds.len()
        )));
    }
    let region = Region::new(file.region.bounds)?;
    let nodes = file
        .nodes
        .into_iter()
        .map(|n| Node {
            id: n.id,
            pos: n.pos,
            gamma: n.gamma,
        })
        .collect();
    let radio = RadioParams {
        bandwidth_hz: file.radio.b_hz,
        power_w: dbm_to_watts(file.radio.p_dbm),
        noise_w_per_hz: dbm_to_watts(file.radio.n0_dbm_per_hz),
        wavelength_m: file.radio.lambda_c_m,
        ref_dist_m: file.radio.d0_m,
        pathloss_exp: file.radio.pathloss_r,
    };
    let tasks = TaskParams {
        b0_bits: file.tasks.b0_bits,
        b1_bits: file.tasks.b1_bits,
        arrival_rate: file.tasks.rt,
    };
    let (d_m, coverage_config) = file.coverage.into_config()?;
    Scenario::new(region, nodes, radio, tasks, d_m, coverage_config)
}

fn scenario_to_file(s: &Scenario) -> ScenarioFile {
    ScenarioFile {
        region: RegionSection {
            dimension: s.region.dimension(),
            bounds: s.region.bounds().to_vec(),
        },
        nodes: s
            .nodes
            .iter()
            .map(|n| NodeSection {
                id: n.id,
                pos: n.pos.clone(),
                gamma: n.gamma,
            })
            .collect(),
        radio: RadioSection {
            b_hz: s.radio.bandwidth_hz,
            p_dbm: watts_to_dbm(s.radio.power_w),
            n0_dbm_per_hz: watts_to_dbm(s.radio.noise_w_per_hz),
            lambda_c_m: s.radio.wavelength_m,
            d0_m: s.radio.ref_dist_m,
            pathloss_r: s.radio.pathloss_exp,
        },
        tasks: TasksSection {
            b0_bits: s.tasks.b0_bits,
            b1_bits: s.tasks.b1_bits,
            rt: s.tasks.arrival_rate,
        },
        coverage: CoverageSection::from_config(s.coverage_radius_m, &s.coverage_config),
    }
}

/// Parses and validates a scenario file (JSON; unknown keys are an error).
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}

/// Like [`load_scenario`] but from an in-memory document.
pub fn load_scenario_str(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    scenario_from_file(file)
}

/// Serializes a scenario to the on-disk document format.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&scenario_to_file(scenario))
        .expect("scenario serialization cannot fail");
    out.push('\n');
    out
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scenario_to_string(scenario))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Shared per-node and radio defaults for generated scenarios.
#[derive(Debug, Clone)]
pub struct ScenarioDefaults {
    pub radio: RadioParams,
    pub tasks: TaskParams,
    pub coverage_radius_m: f64,
    pub coverage_config: CoverageConfig,
    pub gamma: f64,
}

/// UAV surveillance defaults: 1 MHz band at 900 MHz carrier, 0 dBm transmit
/// power, -170 dBm/Hz noise density, d0 = 10 m, D = 2 km, gamma = 1/5.4
/// tasks/s, 4 Mbit task inputs with negligible outputs, 1 task/s arrivals,
/// 25 m coverage grid.
pub fn uav_defaults(pathloss_exp: f64) -> ScenarioDefaults {
    ScenarioDefaults {
        radio: RadioParams {
            bandwidth_hz: 1e6,
            power_w: dbm_to_watts(0.0),
            noise_w_per_hz: dbm_to_watts(-170.0),
            wavelength_m: 1.0 / 3.0,
            ref_dist_m: 10.0,
            pathloss_exp,
        },
        tasks: TaskParams {
            b0_bits: 4e6,
            b1_bits: 0.0,
            arrival_rate: 1.0,
        },
        coverage_radius_m: 2000.0,
        coverage_config: CoverageConfig::Grid { resolution_m: 25.0 },
        gamma: 1.0 / 5.4,
    }
}

/// Draws `n` node positions uniformly i.i.d. over the region.
///
/// A pure function of its arguments: the same `(n, region, defaults, seed)`
/// always yields the same scenario.
pub fn generate_scenario(
    n: usize,
    region: Region,
    defaults: &ScenarioDefaults,
    seed: u64,
) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::validation("scenario requires at least one node"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (1..=n)
        .map(|id| {
            let pos = region
                .bounds()
                .iter()
                .map(|b| rng.random_range(b[0]..b[1]))
                .collect();
            Node {
                id: id as NodeId,
                pos,
                gamma: defaults.gamma,
            }
        })
        .collect();
    Scenario::new(
        region,
        nodes,
        defaults.radio.clone(),
        defaults.tasks.clone(),
        defaults.coverage_radius_m,
        defaults.coverage_config.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uav_scenario_json(node_override: Option<&str>) -> String {
        let nodes =
            node_override.unwrap_or(r#"[{"id": 1, "pos": [5000.0, 5000.0], "gamma": 0.2}]"#);
        format!(
            r#"{{
              "region": {{"dimension": 2, "bounds": [[0.0, 10000.0], [0.0, 10000.0]]}},
              "nodes": {nodes},
              "radio": {{"B_hz": 1e6, "P_dBm": 0.0, "N0_dBm_per_hz": -170.0,
                         "lambda_c_m": 0.3333333333333333, "d0_m": 10.0, "pathloss_r": 3.0}},
              "tasks": {{"b0_bits": 4e6, "b1_bits": 0.0, "RT": 1.0}},
              "coverage": {{"D_m": 2000.0, "method": "grid", "resolution_m": 25.0}}
            }}"#
        )
    }

    #[test]
    fn load_valid_scenario() {
        let s = load_scenario_str(&uav_scenario_json(None)).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.region.dimension(), 2);
        assert!((s.radio.power_w - 1e-3).abs() < 1e-18);
        assert!((s.radio.noise_w_per_hz - 1e-20).abs() < 1e-32);
    }

    #[test]
    fn bundled_uav50_scenario_loads() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/uav50.json");
        let s = load_scenario(path).unwrap();
        assert_eq!(s.n(), 50);
        assert_eq!(s.region.dimension(), 2);
        assert_eq!(s.region.measure(), 1e8);
        assert_eq!(s.coverage_radius_m, 2000.0);
        assert_eq!(s.tasks.b0_bits, 4e6);
        assert_eq!(s.tasks.b1_bits, 0.0);
        assert_eq!(s.radio.pathloss_exp, 3.0);
        for node in &s.nodes {
            assert!((node.gamma - 1.0 / 5.4).abs() < 1e-15);
        }
    }

    #[test]
    fn position_outside_region_rejected() {
        let json = uav_scenario_json(Some(r#"[{"id": 1, "pos": [11000.0, 0.0], "gamma": 0.2}]"#));
        let err = load_scenario_str(&json).unwrap_err();
        assert!(err.to_string().contains("position outside region"), "{err}");
    }

    #[test]
    fn zero_gamma_rejected() {
        let json = uav_scenario_json(Some(r#"[{"id": 1, "pos": [0.0, 0.0], "gamma": 0.0}]"#));
        let err = load_scenario_str(&json).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn duplicate_and_noncontiguous_ids_rejected() {
        let dup = uav_scenario_json(Some(
            r#"[{"id": 1, "pos": [0.0, 0.0], "gamma": 1.0}, {"id": 1, "pos": [1.0, 1.0], "gamma": 1.0}]"#,
        ));
        assert!(load_scenario_str(&dup).is_err());
        let gap = uav_scenario_json(Some(
            r#"[{"id": 1, "pos": [0.0, 0.0], "gamma": 1.0}, {"id": 3, "pos": [1.0, 1.0], "gamma": 1.0}]"#,
        ));
        let err = load_scenario_str(&gap).unwrap_err();
        assert!(err.to_string().contains("contiguous"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = uav_scenario_json(None).replace(r#""tasks""#, r#""extra": 1, "tasks""#);
        assert!(load_scenario_str(&json).is_err());
    }

    #[test]
    fn dimension_three_rejected() {
        let err = Region::new(vec![[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]).unwrap_err();
        assert!(err.to_string().contains("dimension 3"), "{err}");
    }

    #[test]
    fn zero_payload_rejected() {
        let json = uav_scenario_json(None).replace(r#""b0_bits": 4e6"#, r#""b0_bits": 0.0"#);
        let err = load_scenario_str(&json).unwrap_err();
        assert!(err.to_string().contains("b0_bits + b1_bits"), "{err}");
    }

    #[test]
    fn save_load_round_trip() {
        let s = generate_scenario(7, Region::square(10_000.0).unwrap(), &uav_defaults(2.5), 42)
            .unwrap();
        let reloaded = load_scenario_str(&scenario_to_string(&s)).unwrap();
        assert_eq!(s.region, reloaded.region);
        // Positions round-trip exactly; dBm conversion may wobble in the
        // last few ulps.
        for (a, b) in s.nodes.iter().zip(&reloaded.nodes) {
            assert_eq!(a.pos, b.pos);
            assert_eq!(a.gamma, b.gamma);
        }
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        assert!(rel(s.radio.power_w, reloaded.radio.power_w) < 1e-12);
        assert!(rel(s.radio.noise_w_per_hz, reloaded.radio.noise_w_per_hz) < 1e-12);
        assert_eq!(s.radio.pathloss_exp, reloaded.radio.pathloss_exp);
        assert_eq!(s.tasks, reloaded.tasks);
        assert_eq!(s.coverage_radius_m, reloaded.coverage_radius_m);
        assert_eq!(s.coverage_config, reloaded.coverage_config);
    }

    #[test]
    fn generation_is_deterministic() {
        let region = Region::square(10_000.0).unwrap();
        let defaults = uav_defaults(3.0);
        let a = generate_scenario(50, region.clone(), &defaults, 7).unwrap();
        let b = generate_scenario(50, region.clone(), &defaults, 7).unwrap();
        assert_eq!(scenario_to_string(&a), scenario_to_string(&b));

        let c = generate_scenario(50, region, &defaults, 8).unwrap();
        let pos = |s: &Scenario| {
            let mut v: Vec<String> = s.nodes.iter().map(|n| format!("{:?}", n.pos)).collect();
            v.sort();
            v
        };
        assert_ne!(pos(&a), pos(&c));
    }

    #[test]
    fn single_node_generation() {
        let s = generate_scenario(1, Region::line(100.0).unwrap(), &line_defaults(), 3).unwrap();
        assert_eq!(s.n(), 1);
        assert!(s.region.contains(&s.nodes[0].pos));
    }

    fn line_defaults() -> ScenarioDefaults {
        let mut d = uav_defaults(2.0);
        d.coverage_config = CoverageConfig::Exact1d;
        d.coverage_radius_m = 10.0;
        d
    }
}

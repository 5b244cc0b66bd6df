//! Inter-node link rates and the per-task delay coefficients built from them.
//!
//! The rate model is free-space path loss with exponent `r`:
//! `rho(d) = B log2(1 + P/(B N0) * (lambda_c/(4 pi d0))^2 * (d0/d)^r)`.
//! The formula is used verbatim for every d > 0, including d < d0; a
//! self-link (d = 0) reports an infinite rate so transmission terms vanish.

use crate::error::{Error, Result};
use crate::scenario::{NodeId, RadioParams, Scenario};

/// Achievable rate in bits/second over distance `d_m` meters.
///
/// `d_m = 0` returns `f64::INFINITY`, the self-link sentinel; dividing any
/// finite payload by it yields exactly zero transmission time.
pub fn link_rate(d_m: f64, radio: &RadioParams) -> f64 {
    if d_m == 0.0 {
        return f64::INFINITY;
    }
    let snr = radio.power_w / (radio.bandwidth_hz * radio.noise_w_per_hz)
        * (radio.wavelength_m / (4.0 * std::f64::consts::PI * radio.ref_dist_m)).powi(2)
        * (radio.ref_dist_m / d_m).powf(radio.pathloss_exp);
    radio.bandwidth_hz * (1.0 + snr).log2()
}

/// Per-pair task delay coefficients in seconds/task.
///
/// Entry `(i, j)` is the cost for node `j` to handle one of master `i`'s
/// tasks: `(b0 + b1) / rho_ij + 1/gamma_j`, with `alpha_ii = 1/gamma_i`.
/// Symmetric in `rho` but not in `alpha` when gammas differ.
#[derive(Debug, Clone)]
pub struct AlphaMatrix {
    n: usize,
    data: Vec<f64>,
}

impl AlphaMatrix {
    /// Wraps a raw n-by-n coefficient matrix (row-major, 1-based ids).
    ///
    /// Entries must be finite and strictly positive. Useful for synthetic
    /// instances where the coefficients are given directly.
    pub fn from_entries(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::validation(format!(
                "alpha matrix for n={n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::validation(format!(
                "alpha entries must be finite and positive, got {bad}"
            )));
        }
        Ok(AlphaMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `alpha_ij` for master `i` and member `j`.
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.data[(i as usize - 1) * self.n + (j as usize - 1)]
    }
}

/// Builds the full coefficient matrix for a scenario.
pub fn build_alpha(scenario: &Scenario) -> AlphaMatrix {
    let n = scenario.n();
    let payload = scenario.tasks.b0_bits + scenario.tasks.b1_bits;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = if i == j {
                1.0 / scenario.nodes[i].gamma
            } else {
                let d = scenario
                    .distance((i + 1) as NodeId, (j + 1) as NodeId)
                    .expect("node ids are contiguous");
                payload / link_rate(d, &scenario.radio) + 1.0 / scenario.nodes[j].gamma
            };
        }
    }
    AlphaMatrix { n, data }
}

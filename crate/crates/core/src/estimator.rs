//! Per-pixel Poisson's ratio from a displacement field.
//!
//! Dotting `(1 − 2ν) Δu + grad div u = 0` with `Δu` and solving for ν gives
//!
//! ```text
//! ν = ½ (Δu · grad div u / (Δu · Δu) + 1)
//! ```
//!
//! The operators are the solver's own stencils, so on a solver output every
//! valid pixel reproduces the ν the field was solved with, up to the solver
//! tolerance. On noisy fields the quotient scatters widely; values are never
//! clamped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BCMap, NuMap, VectorField2D, RING_WIDTH};
use crate::ops;

pub const HISTOGRAM_BINS: usize = 64;

/// `|Δu|` below this fraction of `max‖u‖ / min(Δx, Δy)²` counts as zero.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Pixels with `|Δu|² < denom_eps × max |Δu|²` are masked.
    pub denom_eps: f64,
    /// Dirichlet pixels of this map are masked.
    pub dirichlet_mask: Option<BCMap>,
    /// Histogram range for display; statistics ignore it.
    pub clip: Option<(f64, f64)>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            denom_eps: 1e-12,
            dirichlet_mask: None,
            clip: None,
        }
    }
}

impl EstimatorConfig {
    pub fn with_mask(bc: BCMap) -> Self {
        Self {
            dirichlet_mask: Some(bc),
            ..Default::default()
        }
    }
}

/// Estimate ν at every pixel of `field`.
pub fn nu_map(field: &VectorField2D, cfg: &EstimatorConfig) -> Result<NuMap> {
    if !(cfg.denom_eps > 0.0) {
        return Err(Error::Config(format!("denom_eps must be > 0, got {}", cfg.denom_eps)));
    }
    let g = *field.grid();
    g.require_min(2 * RING_WIDTH + 1)?;
    if let Some(bc) = &cfg.dirichlet_mask {
        g.require_same(bc.grid())?;
    }
    let lap = ops::laplacian(field)?;
    let gd = ops::grad_div(field)?;
    let candidate: Vec<bool> = (0..g.len())
        .map(|i| {
            let (x, y) = g.coords(i);
            g.edge_distance(x, y) >= RING_WIDTH
                && !cfg.dirichlet_mask.as_ref().is_some_and(|bc| bc.is_dirichlet(i))
        })
        .collect();
    let lap_sq: Vec<f64> = (0..g.len())
        .map(|i| {
            let l = lap.at(i);
            l[0] * l[0] + l[1] * l[1]
        })
        .collect();
    let max_sq = (0..g.len())
        .filter(|&i| candidate[i])
        .map(|i| lap_sq[i])
        .fold(0.0, f64::max);
    let h2 = g.dx.min(g.dy).powi(2);
    let floor = ROUNDOFF_FLOOR * field.max_magnitude() / h2;
    let threshold = (cfg.denom_eps * max_sq).max(floor * floor);
    let mut nu = vec![0.0; g.len()];
    let mut valid = vec![false; g.len()];
    for i in 0..g.len() {
        if !candidate[i] || !(lap_sq[i] >= threshold) || lap_sq[i] == 0.0 {
            continue;
        }
        let (l, d) = (lap.at(i), gd.at(i));
        let v = 0.5 * ((l[0] * d[0] + l[1] * d[1]) / lap_sq[i] + 1.0);
        if v.is_finite() {
            nu[i] = v;
            valid[i] = true;
        }
    }
    NuMap::new(g, nu, valid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bin `values` into `bins` equal-width bins over `[lo, hi]`; values
    /// outside the range are dropped. A degenerate range is widened by ½.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuSummary {
    pub valid_count: usize,
    pub valid_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
}

/// Mean, population SD and a 64-bin histogram over the observed range of the
/// valid pixels.
pub fn nu_summary(map: &NuMap) -> NuSummary {
    summarize(map, None)
}

/// Like [`nu_summary`] but with a fixed histogram range.
pub fn nu_summary_clipped(map: &NuMap, lo: f64, hi: f64) -> NuSummary {
    summarize(map, Some((lo, hi)))
}

fn summarize(map: &NuMap, range: Option<(f64, f64)>) -> NuSummary {
    let values: Vec<f64> = map.valid_values().collect();
    let total = map.grid().len();
    let valid_fraction = values.len() as f64 / total as f64;
    if values.is_empty() {
        return NuSummary {
            valid_count: 0,
            valid_fraction,
            mean: None,
            sd: None,
            histogram: None,
        };
    }
    let mean = crate::metrics::mean(&values);
    let sd = crate::metrics::sd(&values).ok();
    let (lo, hi) = range.unwrap_or_else(|| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)))
    });
    NuSummary {
        valid_count: values.len(),
        valid_fraction,
        mean: Some(mean),
        sd,
        histogram: Some(Histogram::new(&values, HISTOGRAM_BINS, lo, hi)),
    }
}

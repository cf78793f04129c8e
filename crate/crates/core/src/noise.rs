//! Angular registration error and magnitude-dependent rotational noise.
//!
//! A profile θ(‖u‖) is the mean angle between reference and predicted
//! vectors, binned by reference magnitude into 10 equal bins. Noise rotates
//! each reference vector by `±α θ(‖u‖)` with an independent fair sign per
//! pixel, leaving its length unchanged.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{nu_map, EstimatorConfig};
use crate::fields::{BCMap, VectorField2D};
use crate::metrics;
use crate::par;

pub const PROFILE_BINS: usize = 10;

/// Peak angle of the synthetic default profile (radians).
pub const SYNTHETIC_THETA_MAX: f64 = 0.5;

/// Unsigned angle in `[0, π]` between `a` and `b`; zero if either is zero.
pub fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    if (a[0] == 0.0 && a[1] == 0.0) || (b[0] == 0.0 && b[1] == 0.0) {
        return 0.0;
    }
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleProfile {
    pub bin_edges: Vec<f64>,
    pub bin_mean_angle: Vec<f64>,
    pub bin_count: Vec<u64>,
}

impl AngleProfile {
    fn equal_edges(max_magnitude: f64) -> Vec<f64> {
        (0..=PROFILE_BINS)
            .map(|k| max_magnitude * k as f64 / PROFILE_BINS as f64)
            .collect()
    }

    /// `θ_k = θ_max / (1 + m_k)` with `m_k` the bin-centre magnitude.
    pub fn synthetic(max_magnitude: f64) -> Result<Self> {
        if !(max_magnitude > 0.0 && max_magnitude.is_finite()) {
            return Err(Error::Config(format!(
                "profile range must be positive, got {max_magnitude}"
            )));
        }
        let bin_edges = Self::equal_edges(max_magnitude);
        let bin_mean_angle = bin_edges
            .windows(2)
            .map(|e| SYNTHETIC_THETA_MAX / (1.0 + 0.5 * (e[0] + e[1])))
            .collect();
        Ok(Self {
            bin_edges,
            bin_mean_angle,
            bin_count: vec![0; PROFILE_BINS],
        })
    }

    /// Same angle in every bin.
    pub fn constant(max_magnitude: f64, theta: f64) -> Result<Self> {
        let mut p = Self::synthetic(max_magnitude)?;
        p.bin_mean_angle.iter_mut().for_each(|t| *t = theta);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.bin_mean_angle.len();
        if n == 0 || self.bin_edges.len() != n + 1 || self.bin_count.len() != n {
            return Err(Error::Config("profile arrays have inconsistent lengths".into()));
        }
        if self.bin_edges.windows(2).any(|e| !(e[1] > e[0])) {
            return Err(Error::Config("profile edges must be strictly increasing".into()));
        }
        if self
            .bin_mean_angle
            .iter()
            .any(|t| !(0.0..=std::f64::consts::PI).contains(t))
        {
            return Err(Error::Config("profile angles must lie in [0, pi]".into()));
        }
        Ok(())
    }

    /// Bin index of a magnitude; magnitudes beyond the range clamp to the
    /// first or last bin.
    pub fn bin_of(&self, magnitude: f64) -> usize {
        let n = self.bin_mean_angle.len();
        let (lo, hi) = (self.bin_edges[0], self.bin_edges[n]);
        if !(magnitude > lo) {
            return 0;
        }
        let k = ((magnitude - lo) / (hi - lo) * n as f64) as usize;
        k.min(n - 1)
    }

    pub fn theta(&self, magnitude: f64) -> f64 {
        self.bin_mean_angle[self.bin_of(magnitude)]
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = crate::io::read_json(path.as_ref())?;
        p.validate()
            .map_err(|e| Error::format(path.as_ref(), e.to_string()))?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(self, path.as_ref())
    }
}

/// Profile plus the raw `(‖u‖, θ)` samples it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBuild {
    pub profile: AngleProfile,
    pub scatter: Vec<(f64, f64)>,
}

impl ProfileBuild {
    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("magnitude,theta\n");
        for (m, t) in &self.scatter {
            let _ = writeln!(s, "{m},{t}");
        }
        s
    }
}

/// Bin the angle between `predicted` and `reference` by reference magnitude.
/// Pixels with zero reference magnitude are skipped.
pub fn build_profile(reference: &VectorField2D, predicted: &VectorField2D) -> Result<ProfileBuild> {
    reference.grid().require_same(predicted.grid())?;
    let max = reference.max_magnitude();
    if max <= 0.0 {
        return Err(Error::Empty("reference field is identically zero"));
    }
    let bin_edges = AngleProfile::equal_edges(max);
    let mut sums = [0.0; PROFILE_BINS];
    let mut bin_count = vec![0u64; PROFILE_BINS];
    let mut scatter = Vec::new();
    let mut profile = AngleProfile {
        bin_edges,
        bin_mean_angle: vec![0.0; PROFILE_BINS],
        bin_count: vec![0; PROFILE_BINS],
    };
    for i in 0..reference.grid().len() {
        let m = reference.magnitude(i);
        if m == 0.0 {
            continue;
        }
        let theta = angle_between(reference.at(i), predicted.at(i));
        let k = profile.bin_of(m);
        sums[k] += theta;
        bin_count[k] += 1;
        scatter.push((m, theta));
    }
    profile.bin_mean_angle = sums
        .iter()
        .zip(&bin_count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    profile.bin_count = bin_count;
    Ok(ProfileBuild { profile, scatter })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub profile: AngleProfile,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        self.profile.validate()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless per-pixel coin: `+1` or `−1`.
pub(crate) fn pixel_sign(seed: u64, pixel: usize) -> f64 {
    if splitmix64(splitmix64(seed) ^ pixel as u64) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mix a base seed with a record index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5EED)))
}

/// Rotate every vector by `±α θ(‖u‖)`.
pub fn apply_noise(reference: &VectorField2D, spec: &NoiseSpec) -> Result<VectorField2D> {
    spec.validate()?;
    if spec.alpha == 0.0 {
        return Ok(reference.clone());
    }
    let g = *reference.grid();
    let rotated = par::map_range(g.len(), |i| {
        let [ux, uy] = reference.at(i);
        let m = ux.hypot(uy);
        if m == 0.0 {
            return (ux, uy);
        }
        let phi = pixel_sign(spec.seed, i) * spec.alpha * spec.profile.theta(m);
        let (s, c) = phi.sin_cos();
        (c * ux - s * uy, s * ux + c * uy)
    });
    let (ux, uy) = rotated.into_iter().unzip();
    VectorField2D::from_components(g, ux, uy)
}

/// One displacement field with its ground-truth ν.
#[derive(Debug, Clone)]
pub struct NoiseCase {
    pub field: VectorField2D,
    pub nu: f64,
    pub mask: Option<BCMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub nu_true: f64,
    pub records: usize,
    /// Mean over records of the per-record ν-map mean.
    pub nu_mean: f64,
    /// Population SD over records of the per-record ν-map mean.
    pub nu_sd: f64,
    /// Average over records of the within-map pixel SD.
    pub pixel_sd: f64,
}

/// Per-record ν-map mean and pixel SD after noising with `alpha`.
pub fn noisy_record_stats(
    case: &NoiseCase,
    profile: &AngleProfile,
    alpha: f64,
    seed: u64,
) -> Result<Option<(f64, f64)>> {
    let spec = NoiseSpec {
        alpha,
        profile: profile.clone(),
        seed,
    };
    let noisy = apply_noise(&case.field, &spec)?;
    let cfg = EstimatorConfig {
        dirichlet_mask: case.mask.clone(),
        ..Default::default()
    };
    let values: Vec<f64> = nu_map(&noisy, &cfg)?.valid_values().collect();
    if values.is_empty() {
        return Ok(None);
    }
    Ok(Some((metrics::mean(&values), metrics::sd(&values)?)))
}

/// Estimator degradation as a function of the noise level.
///
/// Record `k` is noised with seed `derive_seed(seed, k)` at every α, so rows
/// differ only in α. Rows are ordered by α, then ground-truth ν ascending.
pub fn sweep_alpha(
    cases: &[NoiseCase],
    profile: &AngleProfile,
    alphas: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if cases.is_empty() {
        return Err(Error::Empty("noise sweep needs at least one field"));
    }
    let mut nus: Vec<f64> = cases.iter().map(|c| c.nu).collect();
    nus.sort_by(f64::total_cmp);
    nus.dedup();
    let mut rows = Vec::new();
    for &alpha in alphas {
        let stats = par::map_range(cases.len(), |k| {
            noisy_record_stats(&cases[k], profile, alpha, derive_seed(seed, k as u64))
        });
        for &nu in &nus {
            let mut means = Vec::new();
            let mut sds = Vec::new();
            for (case, st) in cases.iter().zip(&stats) {
                if case.nu != nu {
                    continue;
                }
                if let Some((m, s)) = st.as_ref().map_err(clone_err)? {
                    means.push(*m);
                    sds.push(*s);
                }
            }
            if means.is_empty() {
                continue;
            }
            rows.push(SweepRow {
                alpha,
                nu_true: nu,
                records: means.len(),
                nu_mean: metrics::mean(&means),
                nu_sd: metrics::sd(&means)?,
                pixel_sd: metrics::mean(&sds),
            });
        }
    }
    Ok(rows)
}

fn clone_err(e: &Error) -> Error {
    Error::Config(e.to_string())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("alpha,nu_true,records,nu_mean,nu_sd,pixel_sd\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.alpha, r.nu_true, r.records, r.nu_mean, r.nu_sd, r.pixel_sd
        );
    }
    s
}

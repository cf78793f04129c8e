//! Labelled reference datasets: random problems, their solutions and warped
//! image pairs, indexed by a JSON-lines manifest.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.jsonl      one DatasetRecord per line, ordered by id
//! summary.json        requested / written / skipped counts
//! src.pgm             shared source image
//! tgt/<id>.pgm        warped target
//! field/<id>.efd      reference displacement
//! bc/<id>.json        boundary-value problem
//! ```
//!
//! Manifest paths are relative to the manifest's directory. Each record is a
//! pure function of `(dataset seed, index)`, so generation order and thread
//! count do not affect the output bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bvp::{random_bvp, BvpParams, BvpSpec};
use crate::error::{Error, Result};
use crate::fields::{Grid2D, ScalarImage, VectorField2D};
use crate::io;
use crate::noise::{apply_noise, derive_seed, AngleProfile, NoiseSpec};
use crate::par;
use crate::solver::{self, SolverConfig};
use crate::warp;

pub const MANIFEST_NAME: &str = "manifest.jsonl";
pub const SUMMARY_NAME: &str = "summary.json";
pub const SOURCE_NAME: &str = "src.pgm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Split {
    /// 90/10 train/val assignment from a hash of the id.
    pub fn for_id(id: &str) -> Self {
        if fnv1a64(id.as_bytes()).is_multiple_of(10) {
            Split::Val
        } else {
            Split::Train
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub nu: f64,
    pub seed: u64,
    pub src: String,
    pub tgt: String,
    pub field: String,
    pub split: Split,
    /// Registration output for this pair, when one has been produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg: Option<String>,
}

impl DatasetRecord {
    pub fn bc_path(&self) -> String {
        format!("bc/{}.json", self.id)
    }
}

pub fn record_id(index: usize) -> String {
    format!("r{index:06}")
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub n: usize,
    pub grid: Grid2D,
    pub nu_set: Vec<f64>,
    pub seed: u64,
    pub params: BvpParams,
    pub solver: SolverConfig,
    pub fill: f64,
}

impl DatasetConfig {
    pub fn new(n: usize, grid: Grid2D, seed: u64) -> Self {
        Self {
            n,
            grid,
            nu_set: solver::NU_VALUES.to_vec(),
            seed,
            params: BvpParams::default(),
            solver: SolverConfig::default(),
            fill: warp::DEFAULT_FILL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("dataset size must be >= 1".into()));
        }
        if self.nu_set.is_empty() {
            return Err(Error::Config("nu set is empty".into()));
        }
        for &nu in &self.nu_set {
            solver::check_nu(nu)?;
        }
        self.params.validate()?;
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub requested: usize,
    pub written: usize,
    pub skipped: Vec<Skipped>,
}

/// Everything needed to write one record.
#[derive(Debug, Clone)]
pub struct GeneratedRecord {
    pub record: DatasetRecord,
    pub spec: BvpSpec,
    pub field: VectorField2D,
    pub target: ScalarImage,
}

/// Ground-truth label and boundary-value problem of record `index`.
pub fn record_problem(cfg: &DatasetConfig, index: usize) -> Result<(u64, f64, BvpSpec)> {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = cfg.nu_set[rng.random_range(0..cfg.nu_set.len())];
    let (spec, _) = random_bvp(seed, cfg.grid, nu, &cfg.params)?;
    Ok((seed, nu, spec))
}

/// Solve and warp record `index` in memory. `Ok(Err(_))` marks a record
/// the solver could not handle.
pub fn build_record(
    cfg: &DatasetConfig,
    source: &ScalarImage,
    index: usize,
) -> Result<std::result::Result<GeneratedRecord, Skipped>> {
    let id = record_id(index);
    let (seed, nu, spec) = record_problem(cfg, index)?;
    let bc = spec.bc_map()?;
    let field = match solver::solve_bvp(&bc, nu, &cfg.solver) {
        Ok(f) => f,
        Err(e @ (Error::NoConvergence { .. } | Error::NonFiniteRhs)) => {
            log::warn!("record {id} skipped: {e}");
            return Ok(Err(Skipped {
                id,
                reason: e.to_string(),
            }));
        }
        Err(e) => return Err(e),
    };
    // warp with the field as it will be stored so the files are self-consistent
    let target = warp::warp(source, &field.quantized_f32(), cfg.fill)?;
    let record = DatasetRecord {
        src: SOURCE_NAME.to_string(),
        tgt: format!("tgt/{id}.pgm"),
        field: format!("field/{id}.efd"),
        split: Split::for_id(&id),
        reg: None,
        id,
        nu,
        seed,
    };
    Ok(Ok(GeneratedRecord {
        record,
        spec,
        field,
        target,
    }))
}

/// Generate `cfg.n` records under `out_dir`.
pub fn generate_dataset(
    cfg: &DatasetConfig,
    source: &ScalarImage,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetSummary> {
    cfg.validate()?;
    cfg.grid.require_same(source.grid())?;
    let out = out_dir.as_ref();
    for sub in ["tgt", "field", "bc"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let source = &source.quantized_u8();
    io::write_pgm(source, out.join(SOURCE_NAME))?;
    let results = par::map_range(cfg.n, |i| -> Result<_> {
        match build_record(cfg, source, i)? {
            Ok(rec) => {
                io::write_pgm(&rec.target, out.join(&rec.record.tgt))?;
                io::write_vector_field(&rec.field, out.join(&rec.record.field))?;
                rec.spec.save(out.join(rec.record.bc_path()))?;
                Ok(Ok(rec.record))
            }
            Err(skip) => Ok(Err(skip)),
        }
    });
    let mut records = Vec::with_capacity(cfg.n);
    let mut skipped = Vec::new();
    for r in results {
        match r? {
            Ok(rec) => records.push(rec),
            Err(s) => skipped.push(s),
        }
    }
    write_manifest(&records, out.join(MANIFEST_NAME))?;
    let summary = DatasetSummary {
        requested: cfg.n,
        written: records.len(),
        skipped,
    };
    io::write_json(&summary, &out.join(SUMMARY_NAME))?;
    Ok(summary)
}

pub fn write_manifest(records: &[DatasetRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            error: e,
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    io::write_text(path, &text)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))
        })
        .collect()
}

/// Directory that manifest-relative paths resolve against.
pub fn manifest_base(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Load the reference field and boundary problem of a record.
pub fn load_reference(base: &Path, rec: &DatasetRecord) -> Result<(VectorField2D, Option<BvpSpec>)> {
    let field = io::read_vector_field(base.join(&rec.field))?;
    let bc_path = base.join(rec.bc_path());
    let spec = if bc_path.exists() {
        Some(BvpSpec::load(&bc_path)?)
    } else {
        None
    };
    Ok((field, spec))
}

/// Directory name used for fields noised at `alpha`.
pub fn noise_dir_name(alpha: f64) -> String {
    format!("noisy/alpha_{alpha}")
}

/// Seed used to noise a record's reference field.
pub fn record_noise_seed(rec: &DatasetRecord) -> u64 {
    derive_seed(rec.seed, 0xA1FA)
}

/// Noise a reference field with the record's seed; without a measured
/// profile the synthetic default over the field's own range is used.
pub fn noisy_reference(
    field: &VectorField2D,
    rec: &DatasetRecord,
    alpha: f64,
    profile: Option<&AngleProfile>,
) -> Result<VectorField2D> {
    let profile = match profile {
        Some(p) => p.clone(),
        None => AngleProfile::synthetic(field.max_magnitude().max(f64::MIN_POSITIVE))?,
    };
    apply_noise(
        field,
        &NoiseSpec {
            alpha,
            profile,
            seed: record_noise_seed(rec),
        },
    )
}

fn copy(from: &Path, to: &Path) -> Result<()> {
    if let Some(parent) = to.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::copy(from, to).map_err(|e| Error::io(from, e))?;
    Ok(())
}

/// Package a dataset for the learning component:
///
/// ```text
/// manifest.jsonl, src.pgm, tgt/, field/, bc/   copied as-is
/// labels.csv                                   id,nu,split
/// noisy/alpha_<a>/<id>.efd                     one set per requested α
/// ```
pub fn export_for_learner(
    manifest: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    noise_alphas: &[f64],
    profile: Option<&AngleProfile>,
) -> Result<usize> {
    let manifest = manifest.as_ref();
    let base = manifest_base(manifest);
    let out = out_dir.as_ref();
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(Error::Empty("manifest has no records"));
    }
    let mut labels = String::from("id,nu,split\n");
    for rec in &records {
        let mut paths = vec![rec.src.clone(), rec.tgt.clone(), rec.field.clone()];
        if base.join(rec.bc_path()).exists() {
            paths.push(rec.bc_path());
        }
        if let Some(reg) = &rec.reg {
            paths.push(reg.clone());
        }
        for p in paths {
            let dst = out.join(&p);
            if !dst.exists() || p != rec.src {
                copy(&base.join(&p), &dst)?;
            }
        }
        let split = match rec.split {
            Split::Train => "train",
            Split::Val => "val",
        };
        labels.push_str(&format!("{},{},{}\n", rec.id, rec.nu, split));
        if !noise_alphas.is_empty() {
            let field = io::read_vector_field(base.join(&rec.field))?;
            for &alpha in noise_alphas {
                let noisy = noisy_reference(&field, rec, alpha, profile)?;
                let p = out.join(noise_dir_name(alpha)).join(format!("{}.efd", rec.id));
                io::write_vector_field(&noisy, p)?;
            }
        }
    }
    write_manifest(&records, out.join(MANIFEST_NAME))?;
    io::write_text(&out.join("labels.csv"), &labels)?;
    Ok(records.len())
}

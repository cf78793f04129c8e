//! `elastoprobe` command-line driver.
//!
//! Exit codes: 0 on success, 1 on invalid input (bad flags, malformed or
//! missing files, dimension mismatches), 2 on runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use elastoprobe_core::bvp::{BvpParams, BvpSpec};
use elastoprobe_core::dataset::{self, DatasetConfig, Split};
use elastoprobe_core::estimator::{self, EstimatorConfig};
use elastoprobe_core::noise::{self, AngleProfile, NoiseSpec};
use elastoprobe_core::report::{self, Method, ReportConfig, Source};
use elastoprobe_core::solver::{self, Preconditioner, SolverConfig};
use elastoprobe_core::{io, warp, Error, Grid2D, ScalarImage};

#[derive(Parser)]
#[command(name = "elastoprobe", version, about = "Linear-elastic displacement fields and Poisson's ratio estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecondArg {
    None,
    Jacobi,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    All,
    Train,
    Val,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled dataset of random problems and warped image pairs.
    Gen {
        #[arg(long)]
        n: usize,
        /// Grid size, `N` or `WxH`.
        #[arg(long, default_value = "128")]
        grid: String,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.49")]
        nu_set: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Source image (PGM or 1-channel EFD1); a synthetic texture if omitted.
        #[arg(long)]
        src: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        max_magnitude: f64,
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
    },
    /// Solve one boundary-value problem given as JSON.
    Solve {
        #[arg(long)]
        bc: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum, default_value = "jacobi")]
        precond: PrecondArg,
    },
    /// Warp a source image by a displacement field.
    Warp {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        field: PathBuf,
        /// Output; `.pgm` writes PGM, anything else EFD1.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
    },
    /// Estimate the per-pixel Poisson's ratio of a displacement field.
    EstimatePde {
        #[arg(long)]
        field: PathBuf,
        /// Boundary problem whose Dirichlet pixels are masked.
        #[arg(long)]
        bc: Option<PathBuf>,
        #[arg(long)]
        out_map: Option<PathBuf>,
        /// Summary JSON; printed to stdout if omitted.
        #[arg(long)]
        out_summary: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        denom_eps: f64,
        /// Histogram range `lo,hi`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        clip: Option<Vec<f64>>,
    },
    /// Rotate displacement vectors by magnitude-dependent angular noise.
    Noise {
        #[arg(long)]
        field: PathBuf,
        /// Profile JSON, or `synthetic` for the default decreasing profile.
        #[arg(long, default_value = "synthetic")]
        profile: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the angle-vs-magnitude profile between two fields.
    Profile {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional `(magnitude, theta)` scatter CSV.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Accuracy tables and plot data for a dataset.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Noise levels for the `fdm+noise` rows.
        #[arg(long, value_delimiter = ',', default_value = "0.006")]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Directory of `<id>.efd` registration outputs.
        #[arg(long)]
        reg_dir: Option<PathBuf>,
        /// Network predictions CSV (`id,source,nu_pred`).
        #[arg(long)]
        dnn: Option<PathBuf>,
        /// Also write `sweep.csv` over these noise levels.
        #[arg(long, value_delimiter = ',')]
        sweep_alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Package a dataset for the learning component.
    ExportLearner {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        noise_alpha: Vec<f64>,
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

/// Input problems map to exit code 1, everything else to 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::NoConvergence { .. } | Error::NonFiniteRhs) => 2,
        Some(Error::Io { error, .. }) if error.kind() != std::io::ErrorKind::NotFound => 2,
        Some(_) => 1,
        None => 2,
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn parse_grid(s: &str) -> Result<Grid2D> {
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w.trim().parse(), h.trim().parse()),
        None => (s.trim().parse(), s.trim().parse()),
    };
    match (w, h) {
        (Ok(w), Ok(h)) => Ok(Grid2D::new(w, h)?),
        _ => Err(usage(format!("--grid: cannot parse '{s}' (expected N or WxH)"))),
    }
}

fn load_profile(arg: &str, field_max: f64) -> Result<AngleProfile> {
    if arg == "synthetic" {
        Ok(AngleProfile::synthetic(field_max.max(f64::MIN_POSITIVE))?)
    } else {
        Ok(AngleProfile::load(arg)?)
    }
}

fn write_image(img: &ScalarImage, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        io::write_pgm(img, path)?;
    } else {
        io::write_scalar_efd(img, path)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            n,
            grid,
            nu_set,
            seed,
            src,
            out,
            jobs,
            max_magnitude,
            fill,
        } => {
            let grid = parse_grid(&grid)?;
            let source = match &src {
                Some(p) => io::read_image(p)?,
                None => ScalarImage::synthetic_texture(grid, seed),
            };
            if source.grid().dims() != grid.dims() {
                return Err(usage(format!(
                    "--src {}: image is {}x{}, grid is {}x{}",
                    src.as_deref().unwrap_or(Path::new("")).display(),
                    source.grid().width,
                    source.grid().height,
                    grid.width,
                    grid.height
                )));
            }
            let mut cfg = DatasetConfig::new(n, grid, seed);
            cfg.nu_set = nu_set;
            cfg.params = BvpParams {
                max_magnitude,
                min_magnitude: BvpParams::default().min_magnitude.min(max_magnitude),
                ..BvpParams::default()
            };
            cfg.fill = fill;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .context("building worker pool")?;
            let summary = pool.install(|| dataset::generate_dataset(&cfg, &source, &out))?;
            println!(
                "wrote {} of {} records to {} ({} skipped)",
                summary.written,
                summary.requested,
                out.display(),
                summary.skipped.len()
            );
            for s in &summary.skipped {
                eprintln!("skipped {}: {}", s.id, s.reason);
            }
        }
        Command::Solve {
            bc,
            nu,
            out,
            tol,
            max_iter,
            precond,
        } => {
            let spec = BvpSpec::load(&bc)?;
            let map = spec.bc_map().with_context(|| format!("{}", bc.display()))?;
            let cfg = SolverConfig {
                tol,
                max_iter,
                preconditioner: match precond {
                    PrecondArg::None => Preconditioner::None,
                    PrecondArg::Jacobi => Preconditioner::Jacobi,
                },
            };
            let system = solver::assemble(&map, nu)?;
            let (field, stats) = solver::solve_with_stats(&system, &cfg)?;
            io::write_vector_field(&field, &out)?;
            println!(
                "solved {} unknowns in {} iterations (relative residual {:e})",
                system.index_map.unknowns(),
                stats.iterations,
                stats.relative_residual
            );
        }
        Command::Warp {
            src,
            field,
            out,
            fill,
        } => {
            let source = io::read_image(&src)?;
            let u = io::read_vector_field(&field)?;
            let target = warp::warp(&source, &u, fill)
                .with_context(|| format!("warping {} by {}", src.display(), field.display()))?;
            write_image(&target, &out)?;
        }
        Command::EstimatePde {
            field,
            bc,
            out_map,
            out_summary,
            denom_eps,
            clip,
        } => {
            let u = io::read_vector_field(&field)?;
            let mask = match &bc {
                Some(p) => Some(BvpSpec::load(p)?.bc_map()?),
                None => None,
            };
            let cfg = EstimatorConfig {
                denom_eps,
                dirichlet_mask: mask,
                clip: clip.map(|c| (c[0], c[1])),
            };
            let map = estimator::nu_map(&u, &cfg)?;
            let summary = match cfg.clip {
                Some((lo, hi)) => estimator::nu_summary_clipped(&map, lo, hi),
                None => estimator::nu_summary(&map),
            };
            if let Some(p) = &out_map {
                io::write_nu_map(&map, p)?;
            }
            let json = serde_json::to_string_pretty(&summary)?;
            match &out_summary {
                Some(p) => std::fs::write(p, json + "\n")
                    .with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
        }
        Command::Noise {
            field,
            profile,
            alpha,
            seed,
            out,
        } => {
            let u = io::read_vector_field(&field)?;
            let spec = NoiseSpec {
                alpha,
                profile: load_profile(&profile, u.max_magnitude())?,
                seed,
            };
            io::write_vector_field(&noise::apply_noise(&u, &spec)?, &out)?;
        }
        Command::Profile {
            reference,
            predicted,
            out,
            scatter,
        } => {
            let r = io::read_vector_field(&reference)?;
            let p = io::read_vector_field(&predicted)?;
            let built = noise::build_profile(&r, &p)?;
            built.profile.save(&out)?;
            if let Some(s) = scatter {
                std::fs::write(&s, built.scatter_csv())
                    .with_context(|| format!("writing {}", s.display()))?;
            }
        }
        Command::Report {
            manifest,
            out_dir,
            alpha,
            split,
            profile,
            reg_dir,
            dnn,
            sweep_alphas,
            seed,
        } => {
            let profile = profile.map(AngleProfile::load).transpose()?;
            let mut sources = vec![Source::Fdm];
            sources.extend(alpha.iter().map(|a| Source::FdmNoise(*a)));
            sources.push(Source::Registration);
            let mut methods = vec![Method::Pde];
            if dnn.is_some() {
                methods.push(Method::Dnn);
            }
            let cfg = ReportConfig {
                methods,
                sources,
                split: match split {
                    SplitArg::All => None,
                    SplitArg::Train => Some(Split::Train),
                    SplitArg::Val => Some(Split::Val),
                },
                profile: profile.clone(),
                reg_dir,
                dnn_predictions: dnn,
            };
            let rep = report::table2_report(&manifest, &cfg)?;
            report::write_report(&rep, &out_dir)?;
            if let Some(alphas) = sweep_alphas {
                let csv = sweep(&manifest, &cfg, profile.as_ref(), &alphas, seed)?;
                std::fs::write(out_dir.join("sweep.csv"), csv)
                    .with_context(|| format!("writing {}", out_dir.join("sweep.csv").display()))?;
            }
            if rep.is_empty() {
                return Err(usage(format!("{}: no records to report", manifest.display())));
            }
            print!("{}", report::table2_markdown(&rep));
        }
        Command::ExportLearner {
            manifest,
            out,
            noise_alpha,
            profile,
        } => {
            let profile = profile.map(AngleProfile::load).transpose()?;
            let n = dataset::export_for_learner(&manifest, &out, &noise_alpha, profile.as_ref())?;
            println!("exported {n} records to {}", out.display());
        }
    }
    Ok(())
}

fn sweep(
    manifest: &Path,
    cfg: &ReportConfig,
    profile: Option<&AngleProfile>,
    alphas: &[f64],
    seed: u64,
) -> Result<String> {
    let base = dataset::manifest_base(manifest);
    let mut cases = Vec::new();
    for rec in dataset::read_manifest(manifest)? {
        if cfg.split.is_some_and(|s| s != rec.split) {
            continue;
        }
        let (field, spec) = dataset::load_reference(&base, &rec)?;
        let mask = match spec {
            Some(s) => Some(s.bc_map()?),
            None => None,
        };
        cases.push(noise::NoiseCase {
            field,
            nu: rec.nu,
            mask,
        });
    }
    if cases.is_empty() {
        bail!(usage("no records for the noise sweep"));
    }
    let max = cases
        .iter()
        .map(|c| c.field.max_magnitude())
        .fold(0.0, f64::max);
    let profile = match profile {
        Some(p) => p.clone(),
        None => AngleProfile::synthetic(max.max(f64::MIN_POSITIVE))?,
    };
    let rows = noise::sweep_alpha(&cases, &profile, alphas, seed)?;
    Ok(noise::sweep_csv(&rows))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! `cargo test -p elastoprobe-cli --test acceptance`

#[path = "../../core/tests/support/mod.rs"]
mod support;

use elastoprobe_core::bvp::{central_handle, random_bvp, BvpParams};
use elastoprobe_core::estimator::{nu_map, EstimatorConfig};
use elastoprobe_core::noise::{apply_noise, derive_seed, AngleProfile, NoiseSpec};
use elastoprobe_core::ops::divergence;
use elastoprobe_core::solver::{self, SolverConfig, NU_VALUES};
use elastoprobe_core::{metrics, BCMap, Grid2D, VectorField2D};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

const SIZE: usize = 64;
const RESIDUAL_RECORDS: usize = 25;
const ESTIMATOR_RECORDS: usize = 50;
const SEED: u64 = 20_240_601;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Record {
    nu: f64,
    bc: BCMap,
    field: VectorField2D,
    elapsed: Duration,
}

fn solve_set() -> Vec<Record> {
    let grid = Grid2D::square(SIZE).unwrap();
    let params = BvpParams::default();
    let cfg = SolverConfig::default();
    let mut out = Vec::new();
    for (k, &nu) in NU_VALUES.iter().enumerate() {
        for i in 0..ESTIMATOR_RECORDS {
            let seed = derive_seed(SEED, (k * ESTIMATOR_RECORDS + i) as u64);
            let (_, bc) = random_bvp(seed, grid, nu, &params).unwrap();
            let t = Instant::now();
            let field = solver::solve_bvp(&bc, nu, &cfg).unwrap();
            out.push(Record { nu, bc, field, elapsed: t.elapsed() });
        }
    }
    out
}

fn per_nu(records: &[Record], nu: f64) -> impl Iterator<Item = &Record> {
    records.iter().filter(move |r| r.nu == nu)
}

fn solver_correctness(records: &[Record]) -> Check {
    let mut worst = 0.0f64;
    let mut time = Duration::ZERO;
    for &nu in &NU_VALUES {
        for r in per_nu(records, nu).take(RESIDUAL_RECORDS) {
            let res = solver::residual(&r.field, &r.bc, nu).unwrap();
            worst = worst.max(res / r.field.max_magnitude());
            time += r.elapsed;
        }
    }
    let grid = Grid2D::square(16).unwrap();
    let mut oracle_gap = 0.0f64;
    for &nu in &NU_VALUES {
        let t = Instant::now();
        let bc = central_handle(grid, [6.0, -4.0]).bc_map().unwrap();
        let cg = solver::solve_bvp(&bc, nu, &SolverConfig::default()).unwrap();
        time += t.elapsed();
        let (a, b) = support::dense_system(&bc, nu);
        let direct = support::scatter(&bc, &support::gauss_solve(a, b));
        for i in 0..grid.len() {
            let (p, q) = (cg.at(i), direct.at(i));
            oracle_gap = oracle_gap.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
        }
    }
    Check {
        name: "solver correctness",
        pass: worst <= 1e-8 && oracle_gap <= 1e-8 && time < Duration::from_secs(30),
        detail: format!(
            "max residual/max|u| = {worst:.2e} (<= 1e-8), dense gap = {oracle_gap:.2e} (<= 1e-8), \
             solve time {:.2}s (< 30s)",
            time.as_secs_f64()
        ),
    }
}

fn spd() -> Check {
    let grid = Grid2D::square(10).unwrap();
    let mut mins = Vec::new();
    for (k, &nu) in NU_VALUES.iter().enumerate() {
        let (_, bc) = random_bvp(SEED + k as u64, grid, nu, &BvpParams::default()).unwrap();
        let sys = solver::assemble(&bc, nu).unwrap();
        let eig = support::jacobi_eigenvalues(sys.matrix.to_dense());
        mins.push(eig.into_iter().fold(f64::INFINITY, f64::min));
    }
    Check {
        name: "system matrix SPD",
        pass: mins.iter().all(|&m| m > 0.0),
        detail: format!("min eigenvalue per nu {:?} (> 0)", fmt_all(&mins)),
    }
}

/// Per-record ν-map mean and within-map SD.
fn map_stats(field: &VectorField2D, bc: &BCMap) -> (f64, f64) {
    let values: Vec<f64> = nu_map(field, &EstimatorConfig::with_mask(bc.clone()))
        .unwrap()
        .valid_values()
        .collect();
    (metrics::mean(&values), metrics::sd(&values).unwrap())
}

struct SetStats {
    mean: f64,
    record_sd: f64,
    pixel_sd: f64,
}

fn set_stats(stats: &[(f64, f64)]) -> SetStats {
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let sds: Vec<f64> = stats.iter().map(|s| s.1).collect();
    SetStats {
        mean: metrics::mean(&means),
        record_sd: metrics::sd(&means).unwrap(),
        pixel_sd: metrics::mean(&sds),
    }
}

fn estimator_exactness(records: &[Record]) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for &nu in &NU_VALUES {
        let stats: Vec<_> = per_nu(records, nu).map(|r| map_stats(&r.field, &r.bc)).collect();
        let s = set_stats(&stats);
        pass &= (s.mean - nu).abs() <= 0.01 && s.record_sd <= 0.01 && s.pixel_sd <= 0.01;
        parts.push(format!(
            "nu={nu}: mean {:.6} sd {:.1e}/{:.1e}",
            s.mean, s.record_sd, s.pixel_sd
        ));
    }
    Check {
        name: "estimator exactness",
        pass,
        detail: format!("{} (|mean-nu| <= 0.01, sd <= 0.01)", parts.join("; ")),
    }
}

fn noise_fragility(records: &[Record]) -> Check {
    let alpha = 0.006;
    let clean: Vec<_> = per_nu(records, 0.0).map(|r| map_stats(&r.field, &r.bc)).collect();
    let noisy: Vec<_> = per_nu(records, 0.0)
        .enumerate()
        .map(|(i, r)| {
            let spec = NoiseSpec {
                alpha,
                profile: AngleProfile::synthetic(r.field.max_magnitude()).unwrap(),
                seed: derive_seed(SEED ^ 0xA1FA, i as u64),
            };
            map_stats(&apply_noise(&r.field, &spec).unwrap(), &r.bc)
        })
        .collect();
    let (c, n) = (set_stats(&clean), set_stats(&noisy));
    let record_ratio = n.record_sd / c.record_sd;
    let pixel_ratio = n.pixel_sd / c.pixel_sd;
    Check {
        name: "noise fragility",
        pass: n.mean > 0.3 && record_ratio >= 3.0 && pixel_ratio >= 3.0,
        detail: format!(
            "nu=0, alpha={alpha}: mean {:.4} (> 0.3), record sd {:.2e} -> {:.2e} (x{:.1e}), \
             pixel sd {:.2e} -> {:.2e} (x{:.1e}) (>= 3x)",
            n.mean, c.record_sd, n.record_sd, record_ratio, c.pixel_sd, n.pixel_sd, pixel_ratio
        ),
    }
}

fn divergence_ratio() -> Check {
    let grid = Grid2D::square(SIZE).unwrap();
    let bc = central_handle(grid, [5.0, 0.0]).bc_map().unwrap();
    let mean_div = |nu: f64| {
        let u = solver::solve_bvp(&bc, nu, &SolverConfig::default()).unwrap();
        let d = divergence(&u).unwrap();
        let free: Vec<f64> = (0..grid.len())
            .filter(|&i| !bc.is_dirichlet(i))
            .map(|i| d[i].abs())
            .collect();
        metrics::mean(&free)
    };
    let (d0, d49) = (mean_div(0.0), mean_div(0.49));
    let ratio = d49 / d0;
    Check {
        name: "divergence ratio",
        pass: ratio < 0.5,
        detail: format!("mean|div u| nu=0 {d0:.4e}, nu=0.49 {d49:.4e}, ratio {ratio:.4} (< 0.5)"),
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let runs = [("a", "1"), ("b", "4")];
    let mut trees = Vec::new();
    for (name, jobs) in runs {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_elastoprobe"))
            .args(["gen", "--n", "12", "--grid", "64", "--seed", "7", "--jobs", jobs, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return Check {
                name: "gen determinism",
                pass: false,
                detail: format!("gen exited with {status}"),
            };
        }
        trees.push(tree(&out));
    }
    let files = trees[0].len();
    Check {
        name: "gen determinism",
        pass: files > 0 && trees[0] == trees[1],
        detail: format!("two runs (1 and 4 threads), {files} files byte-identical: {}", trees[0] == trees[1]),
    }
}

fn fmt_all(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4e}")).collect()
}

fn main() -> ExitCode {
    let records = solve_set();
    let checks = [
        solver_correctness(&records),
        spd(),
        estimator_exactness(&records),
        noise_fragility(&records),
        divergence_ratio(),
        determinism(),
    ];
    let mut failed = 0;
    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag}  {:<22} {}", c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

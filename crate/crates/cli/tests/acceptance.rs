//! Acceptance gate: prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use common::covariance_z;
use spherefield::circulant::{prepare, sample_sphere};
use spherefield::reference::{
    assemble_dense_embedded, assemble_dense_spacetime, assemble_dense_spatial, dense_factor,
    dense_sample, DenseCap, DenseMethod,
};
use spherefield::stcirculant::{
    assemble_st_block_row, prepare_spacetime, sample_spheretime, st_block_diagonalize,
};
use spherefield::{
    EmbeddingConfig, FieldRealization, SpaceTimeModel, SpatialModel, SphereGrid, SqrtOptions,
    TemporalCorrelation, TimeGrid,
};

const BIN: &str = env!("CARGO_BIN_EXE_spherefield");
const GRIDS: [(usize, usize); 3] = [(4, 3), (8, 4), (12, 6)];
const REPLICATES: usize = 20_000;
const SE_LIMIT: f64 = 4.0;

fn catalog() -> Vec<(&'static str, SpatialModel<f64>)> {
    vec![
        ("exp", SpatialModel::exponential(0.5243).unwrap()),
        (
            "gcauchy",
            SpatialModel::generalized_cauchy(1.0, 0.75, 2.5626).unwrap(),
        ),
        ("matern", SpatialModel::matern(0.7079, 0.25).unwrap()),
    ]
}

fn c0() -> SpaceTimeModel<f64> {
    SpaceTimeModel::new(
        0.95,
        0.25,
        TemporalCorrelation::exponential(1.8951).unwrap(),
    )
    .unwrap()
}

fn c1() -> SpaceTimeModel<f64> {
    SpaceTimeModel::new(0.95, 0.25, TemporalCorrelation::cauchy(1.5250).unwrap()).unwrap()
}

fn within(limit: Duration, start: Instant) -> Result<String> {
    let t = start.elapsed();
    ensure!(t <= limit, "took {t:.2?}, limit {limit:?}");
    Ok(format!("{:.2?}", t))
}

fn run_cli(args: &[&str]) -> Result<Output> {
    let out = Command::new(BIN).args(args).output()?;
    ensure!(
        out.status.success(),
        "spherefield {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(out)
}

fn criterion_1() -> Result<String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (n, m) in GRIDS {
        let grid = SphereGrid::new(n, m)?;
        for (name, model) in catalog() {
            let spec = prepare(&grid, &model, &SqrtOptions::default())?;
            let s = spec.materialize_factor()?;
            let sss = &s * s.adjoint();
            let dense = assemble_dense_spatial(&grid, &model, DenseCap::default())?;
            let mut err = 0.0f64;
            for (c, d) in sss.iter().zip(dense.matrix().iter()) {
                err = err.max((c.re - d).abs()).max(c.im.abs());
            }
            ensure!(err <= 1e-8 * model.sill(), "{name} {n}x{m}: {err:e}");
            worst = worst.max(err);
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("max |SS* - Σ| = {worst:.2e} in {t}"))
}

fn criterion_2() -> Result<String> {
    let mut worst = 0.0f64;
    for (n, m) in GRIDS {
        let grid = SphereGrid::new(n, m)?;
        for (name, model) in catalog() {
            let r = prepare(&grid, &model, &SqrtOptions::default())?.imaginary_residue();
            ensure!(r <= 1e-10, "Λ {name} {n}x{m}: {r:e}");
            worst = worst.max(r);
        }
        let tgrid = TimeGrid::new(4, 4.0)?;
        let cfg = EmbeddingConfig::new(1, 4)?;
        for model in [c0(), c1()] {
            let row = assemble_st_block_row(&grid, &tgrid, &cfg, &model)?;
            let r = st_block_diagonalize(&row)?.spectral().imaginary_residue();
            ensure!(r <= 1e-10, "Υ {n}x{m}: {r:e}");
            worst = worst.max(r);
        }
    }
    Ok(format!("max relative imaginary residue {worst:.2e}"))
}

fn values(fields: &[FieldRealization<f64>]) -> Vec<Vec<f64>> {
    fields.iter().map(|f| f.values.clone()).collect()
}

fn criterion_3() -> Result<String> {
    let start = Instant::now();
    let grid = SphereGrid::new(12, 6)?;
    let model = SpatialModel::exponential(0.5243)?;
    let sigma = assemble_dense_spatial(&grid, &model, DenseCap::default())?;

    let spec = prepare(&grid, &model, &SqrtOptions::default())?;
    let circ = sample_sphere(&spec, 20_240_601, REPLICATES)?;
    let (z_circ, ex) = covariance_z(&values(&circ), sigma.matrix(), SE_LIMIT);
    ensure!(
        ex == 0,
        "circulant: {ex} entries beyond 4 SE (max z {z_circ:.2})"
    );

    let factor = dense_factor(&sigma, DenseMethod::Eigen)?;
    let dense = dense_sample(&factor, 4_100, REPLICATES);
    let (z_dense, ex) = covariance_z(&values(&dense), sigma.matrix(), SE_LIMIT);
    ensure!(
        ex == 0,
        "dense eigen: {ex} entries beyond 4 SE (max z {z_dense:.2})"
    );

    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "max z circulant {z_circ:.2}, dense eigen {z_dense:.2} in {t}"
    ))
}

fn pole_spread(f: &FieldRealization<f64>) -> f64 {
    let s = f.shape;
    let mut worst = 0.0f64;
    for t in 0..s.n_time {
        let first = f.get(t, 0, s.n_colat - 1);
        for ring in 1..s.n_lon {
            worst = worst.max((f.get(t, ring, s.n_colat - 1) - first).abs());
        }
    }
    worst
}

fn criterion_4() -> Result<String> {
    let mut fields = Vec::new();
    let opts = SqrtOptions::default();
    for (n, m) in [(12, 6), (60, 30)] {
        let grid = SphereGrid::new(n, m)?;
        for (_, model) in catalog() {
            let spec = prepare(&grid, &model, &opts)?;
            fields.extend(sample_sphere(&spec, 44, 2_000)?);
        }
    }
    for (n, m, steps) in [(8, 4, 4), (60, 30, 8)] {
        let grid = SphereGrid::new(n, m)?;
        let tgrid = TimeGrid::new(steps, steps as f64)?;
        let cfg = EmbeddingConfig::new(1, steps)?;
        for model in [c0(), c1()] {
            let spec = prepare_spacetime(&grid, &tgrid, &cfg, &model)?;
            fields.extend(sample_spheretime(&spec, 45, 200)?);
        }
    }
    // Unit sill throughout, so σ = 1.
    let worst = fields.iter().map(pole_spread).fold(0.0, f64::max);
    ensure!(worst <= 1e-6, "pole values differ by {worst:e}");
    Ok(format!(
        "{} fields, max pole spread {worst:.2e}",
        fields.len()
    ))
}

struct VarioRow {
    theta_deg: f64,
    gamma: f64,
    truth: f64,
}

fn read_vario_csv(path: &Path) -> Result<Vec<VarioRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    ensure!(
        lines.next() == Some("theta,u,gamma,count,truth"),
        "unexpected header in {}",
        path.display()
    );
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            ensure!(c.len() == 5, "bad row {l:?}");
            Ok(VarioRow {
                theta_deg: c[0].parse()?,
                gamma: c[2].parse()?,
                truth: c[4].parse()?,
            })
        })
        .collect()
}

fn criterion_5(dir: &Path) -> Result<String> {
    let start = Instant::now();
    let models: [(&str, &[&str]); 3] = [
        ("exp", &["--phi0", "0.5243"]),
        (
            "gcauchy",
            &["--phi1", "1", "--alpha", "0.75", "--beta", "2.5626"],
        ),
        ("matern", &["--phi2", "0.7079", "--nu", "0.25"]),
    ];
    let mut report = Vec::new();
    for (k, (name, params)) in models.iter().enumerate() {
        let stem = dir.join(format!("{name}.sgrf"));
        let seed = (500 + k).to_string();
        let mut args = vec![
            "simulate", "--N", "60", "--M", "30", "--count", "100", "--seed", &seed, "--model",
            name,
        ];
        args.extend_from_slice(params);
        let stem_str = stem.to_str().context("utf-8 path")?;
        args.extend_from_slice(&["--output", stem_str]);
        run_cli(&args)?;

        let inputs: Vec<String> = (0..100)
            .map(|i| {
                dir.join(format!("{name}_{i:04}.sgrf"))
                    .display()
                    .to_string()
            })
            .collect();
        let out_csv = dir.join(format!("{name}_vario.csv"));
        let mut args = vec!["variogram", "--model", name];
        args.extend_from_slice(params);
        args.push("--input");
        args.extend(inputs.iter().map(String::as_str));
        let out_str = out_csv.to_str().context("utf-8 path")?;
        args.extend_from_slice(&["--output", out_str]);
        run_cli(&args)?;

        let rows = read_vario_csv(&out_csv)?;
        let mut worst = 0.0f64;
        for r in rows.iter().filter(|r| r.theta_deg <= 0.9 * 180.0) {
            let dev = (r.gamma - r.truth).abs();
            ensure!(
                dev <= 0.05,
                "{name}: bin at {:.1} deg: mean {:.4} vs truth {:.4}",
                r.theta_deg,
                r.gamma,
                r.truth
            );
            worst = worst.max(dev);
        }
        report.push(format!("{name} {worst:.4}"));
    }
    let t = within(Duration::from_secs(600), start)?;
    Ok(format!(
        "max |mean γ̂ - truth|: {} in {t}",
        report.join(", ")
    ))
}

fn criterion_6() -> Result<String> {
    let grid = SphereGrid::new(8, 4)?;
    let tgrid = TimeGrid::new(4, 4.0)?;
    let cfg = EmbeddingConfig::new(1, 4)?;
    let model = c0();

    let row = assemble_st_block_row(&grid, &tgrid, &cfg, &model)?;
    let rebuilt = st_block_diagonalize(&row)?.spectral().reconstruct_dense()?;
    let embedded = assemble_dense_embedded(&grid, &tgrid, &cfg, &model, DenseCap::default())?;
    let err = (rebuilt - embedded.matrix()).amax();
    ensure!(err <= 1e-8, "reconstruction error {err:e}");

    let spec = prepare_spacetime(&grid, &tgrid, &cfg, &model)?;
    let fields = sample_spheretime(&spec, 31_337, REPLICATES)?;
    let psi = assemble_dense_spacetime(&grid, &tgrid, &model, DenseCap::default())?;
    let (z, ex) = covariance_z(&values(&fields), psi.matrix(), SE_LIMIT);
    ensure!(ex == 0, "{ex} entries beyond 4 SE (max z {z:.2})");
    Ok(format!("reconstruction {err:.2e}, max z {z:.2}"))
}

fn criterion_7() -> Result<String> {
    let grid = SphereGrid::new(8, 4)?;
    let tgrid = TimeGrid::new(4, 4.0)?;
    let mut mins = Vec::new();
    for kappa in 1..=3 {
        let cfg = EmbeddingConfig::new(kappa, 4)?;
        let spec = prepare_spacetime(&grid, &tgrid, &cfg, &c0())?;
        let r = *spec.spectral().clip_report().context("clip report")?;
        mins.push((r.min_eigenvalue, r.max_eigenvalue));
    }
    for w in mins.windows(2) {
        // Nondecreasing up to the eigenvalue resolution used for clipping.
        let resolution = 1e-12 * w[0].1.max(w[1].1);
        ensure!(w[1].0 >= w[0].0 - resolution, "{mins:?}");
    }
    let shown: Vec<String> = mins.iter().map(|m| format!("{:.2e}", m.0)).collect();
    Ok(format!(
        "pre-clip minima for κ = 1, 2, 3: {}",
        shown.join(", ")
    ))
}

fn benchmark_row(stdout: &str, grid: &str) -> Result<Vec<String>> {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(grid))
        .with_context(|| format!("no row for {grid} in\n{stdout}"))?;
    Ok(line.split_whitespace().skip(1).map(String::from).collect())
}

fn criterion_8() -> Result<String> {
    let out = run_cli(&[
        "benchmark",
        "--grid",
        "120x40",
        "--methods",
        "circulant,cholesky",
        "--model",
        "exp",
    ])?;
    let row = benchmark_row(&String::from_utf8(out.stdout)?, "N=120,M=40")?;
    let circ: f64 = row[0].parse().context("circulant time")?;
    let chol: f64 = row[1].parse().context("cholesky time")?;
    ensure!(
        circ * 10.0 <= chol,
        "circulant {circ} s vs cholesky {chol} s"
    );

    let out = run_cli(&["benchmark", "--grid", "360x180", "--mem-gib", "2"])?;
    let row = benchmark_row(&String::from_utf8(out.stdout)?, "N=360,M=180")?;
    ensure!(row.len() == 3, "row {row:?}");
    let big: f64 = row[0].parse().context("circulant at 360x180")?;
    ensure!(
        row[1] == "--" && row[2] == "--",
        "dense methods did not refuse: {row:?}"
    );
    Ok(format!(
        "120x40 circulant {circ:.4} s vs cholesky {chol:.4} s ({:.0}x); 360x180 circulant {big:.3} s, cholesky --, eigen --",
        chol / circ
    ))
}

fn criterion_9(dir: &Path) -> Result<String> {
    let start = Instant::now();
    let out = dir.join("big.sgrf");
    run_cli(&[
        "simulate",
        "--model",
        "exp",
        "--phi0",
        "0.5243",
        "--N",
        "360",
        "--M",
        "180",
        "--seed",
        "1",
        "--output",
        out.to_str().context("utf-8 path")?,
    ])?;
    let t = within(Duration::from_secs(300), start)?;
    let len = std::fs::metadata(&out)?.len();
    // N·M = 64 800 values: a 518 400-byte payload after the 32-byte header.
    ensure!(len == 32 + 360 * 180 * 8, "file has {len} bytes");
    Ok(format!("64800 values (518400 payload bytes) in {t}"))
}

fn run_twice(dir: &Path, tag: &str, args: &[&str], files: &[&str]) -> Result<()> {
    let mut outputs = Vec::new();
    for round in ["a", "b"] {
        let d = dir.join(format!("{tag}_{round}"));
        std::fs::create_dir_all(&d)?;
        let out = Command::new(BIN).args(args).current_dir(&d).output()?;
        ensure!(
            out.status.success(),
            "{tag}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let mut bytes = vec![out.stdout];
        for f in files {
            bytes.push(std::fs::read(d.join(f)).with_context(|| format!("{tag}: {f}"))?);
        }
        outputs.push(bytes);
    }
    if outputs[0] != outputs[1] {
        bail!("{tag}: outputs differ between runs");
    }
    Ok(())
}

fn criterion_10(dir: &Path) -> Result<String> {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "N = 24\nM = 12\nmodel = matern\nnu = 0.3\nseed = 9\n")?;
    let cfg = cfg.to_str().context("utf-8 path")?.to_string();
    run_twice(
        dir,
        "bin",
        &[
            "simulate", "--N", "36", "--M", "18", "--seed", "7", "--count", "3", "-o", "f.sgrf",
        ],
        &["f_0000.sgrf", "f_0001.sgrf", "f_0002.sgrf"],
    )?;
    run_twice(
        dir,
        "csv",
        &[
            "simulate", "--config", &cfg, "--format", "csv", "-o", "f.csv",
        ],
        &["f.csv"],
    )?;
    run_twice(
        dir,
        "st",
        &[
            "simulate",
            "--model",
            "st-cauchy",
            "--N",
            "12",
            "--M",
            "6",
            "--T",
            "4",
            "--H",
            "2",
            "--kappa",
            "2",
            "--seed",
            "11",
            "--count",
            "2",
            "-o",
            "s.sgrf",
        ],
        &["s_0000.sgrf", "s_0001.sgrf"],
    )?;
    let st0 = dir.join("st_a/s_0000.sgrf").display().to_string();
    let st1 = dir.join("st_a/s_0001.sgrf").display().to_string();
    run_twice(
        dir,
        "vario",
        &[
            "variogram",
            "--input",
            &st0,
            &st1,
            "--H",
            "2",
            "--model",
            "st-cauchy",
            "-o",
            "v.csv",
        ],
        &["v.csv", "v_0000.csv", "v_0001.csv"],
    )?;
    Ok("simulate (bin, csv, space-time) and variogram byte-identical on re-run".into())
}

type Check<'a> = Box<dyn Fn() -> Result<String> + 'a>;

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let work: PathBuf = dir.path().to_path_buf();
    let criteria: Vec<(&str, Check)> = vec![
        ("factorization exactness", Box::new(criterion_1)),
        ("spectral realness", Box::new(criterion_2)),
        ("sampling law", Box::new(criterion_3)),
        ("pole coincidence", Box::new(criterion_4)),
        ("variogram reproduction", Box::new(|| criterion_5(&work))),
        ("space-time exactness", Box::new(criterion_6)),
        ("kappa monotonicity", Box::new(criterion_7)),
        ("performance ordering", Box::new(criterion_8)),
        ("scale check", Box::new(|| criterion_9(&work))),
        ("determinism", Box::new(|| criterion_10(&work))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e:#}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

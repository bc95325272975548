use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use spherefield::circulant::{assemble_block_row, block_diagonalize, sample_sphere};
use spherefield::reference::{
    assemble_dense_distinct, dense_factor, dense_sample, DenseCap, DenseMethod,
};
use spherefield::{Error, Model, SpatialModel, SphereGrid, SqrtOptions};

use crate::settings::{invalid, ModelArgs, Settings};

const RUN_KEYS: &[&str] = &["grid", "methods", "mem_gib", "seed", "count"];
const DEFAULT_GRIDS: &str = "18x6,40x13,60x20,120x40,360x180";

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Grid as NxM; repeatable
    #[arg(long = "grid")]
    pub grids: Vec<String>,
    /// Comma-separated subset of circulant,cholesky,eigen
    #[arg(long)]
    pub methods: Option<String>,
    /// Memory cap for one dense matrix, GiB
    #[arg(long = "mem-gib")]
    pub mem_gib: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Realizations drawn per timing
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Circulant,
    Cholesky,
    Eigen,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Circulant => "circulant",
            Method::Cholesky => "cholesky",
            Method::Eigen => "eigen",
        }
    }
}

fn parse_methods(text: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim) {
        let m = match name {
            "circulant" => Method::Circulant,
            "cholesky" => Method::Cholesky,
            "eigen" => Method::Eigen,
            other => {
                return Err(invalid(format!(
                    "unknown method {other:?}; expected circulant, cholesky or eigen"
                )))
            }
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

fn parse_grids(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(str::trim)
        .map(|g| {
            let parsed = g
                .split_once(['x', 'X'])
                .and_then(|(n, m)| Some((n.trim().parse().ok()?, m.trim().parse().ok()?)));
            parsed.ok_or_else(|| invalid(format!("grid {g:?}: expected NxM, e.g. 120x40")))
        })
        .collect()
}

enum Outcome {
    Seconds(f64),
    /// Refused by the dense memory cap.
    Refused,
    Failed,
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let mut s = Settings::load(args.config.as_deref(), RUN_KEYS)?;
    if !args.grids.is_empty() {
        s.set("grid", Some(args.grids.join(",")));
    }
    s.set("methods", args.methods.as_ref());
    s.set("mem_gib", args.mem_gib);
    s.set("seed", args.seed);
    s.set("count", args.count);
    s.set_model(&args.model);

    let grids = parse_grids(s.raw("grid").unwrap_or(DEFAULT_GRIDS))?;
    for &(n, m) in &grids {
        SphereGrid::<f64>::new(n, m)?;
    }
    let methods = parse_methods(s.raw("methods").unwrap_or("circulant,cholesky,eigen"))?;
    let gib = s.get::<f64>("mem_gib")?.unwrap_or(2.0);
    if !(gib > 0.0 && gib.is_finite()) {
        return Err(invalid(format!("mem-gib {gib} must be positive")));
    }
    let cap = DenseCap::from_memory_bytes::<f64>((gib * (1u64 << 30) as f64) as u64);
    let seed = s.get::<u64>("seed")?.unwrap_or(1);
    let count = s.get::<usize>("count")?.unwrap_or(1);
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let Model::Spatial(model) = s.model_spec()?.build::<f64>()? else {
        return Err(invalid(
            "benchmark needs a spatial model (exp, gcauchy, matern)",
        ));
    };

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "# seconds for factorization and {count} sample(s) after covariance assembly; dense cap n <= {} ({gib} GiB)",
        cap.max_dim
    )?;
    write!(out, "{:<14}", "grid")?;
    for m in &methods {
        write!(out, "{:>12}", m.name())?;
    }
    writeln!(out)?;
    for &(n, m) in &grids {
        let grid = SphereGrid::new(n, m)?;
        write!(out, "{:<14}", format!("N={n},M={m}"))?;
        out.flush()?;
        for &method in &methods {
            let cell = match time_method(method, &grid, &model, cap, seed, count) {
                Outcome::Seconds(t) => format!("{t:.4}"),
                Outcome::Refused => "--".to_string(),
                Outcome::Failed => "failed".to_string(),
            };
            write!(out, "{cell:>12}")?;
            out.flush()?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn time_method(
    method: Method,
    grid: &SphereGrid<f64>,
    model: &SpatialModel<f64>,
    cap: DenseCap,
    seed: u64,
    count: usize,
) -> Outcome {
    let result = match method {
        Method::Circulant => {
            let row = assemble_block_row(grid, model);
            let start = Instant::now();
            block_diagonalize(&row)
                .and_then(|b| b.with_sqrt(&SqrtOptions::default()))
                .and_then(|spec| sample_sphere(&spec, seed, count))
                .map(|_| start.elapsed())
        }
        Method::Cholesky | Method::Eigen => {
            let dense_method = if method == Method::Cholesky {
                DenseMethod::Triangular
            } else {
                DenseMethod::Eigen
            };
            assemble_dense_distinct(grid, model, cap).and_then(|cov| {
                let start = Instant::now();
                let factor = dense_factor(&cov, dense_method)?;
                dense_sample(&factor, seed, count);
                Ok(start.elapsed())
            })
        }
    };
    match result {
        Ok(t) => Outcome::Seconds(t.as_secs_f64()),
        Err(Error::CapExceeded { .. }) => Outcome::Refused,
        Err(e) => {
            log::warn!(
                "{} on N={},M={}: {e}",
                method.name(),
                grid.n_lon(),
                grid.n_colat()
            );
            Outcome::Failed
        }
    }
}

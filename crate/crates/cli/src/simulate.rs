use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use spherefield::circulant::{prepare, sample_sphere};
use spherefield::stcirculant::{prepare_spacetime, sample_spheretime};
use spherefield::{
    fieldio, ClipReport, EmbeddingConfig, FieldRealization, Model, SphereGrid, SqrtOptions,
    TimeGrid,
};

use crate::settings::{invalid, numbered_path, ModelArgs, Settings};

const RUN_KEYS: &[&str] = &[
    "N", "M", "T", "H", "kappa", "seed", "count", "output", "format",
];

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Longitude rings
    #[arg(long = "N")]
    pub n_lon: Option<usize>,
    /// Colatitude points per ring
    #[arg(long = "M")]
    pub n_colat: Option<usize>,
    /// Time steps (space-time models)
    #[arg(long = "T")]
    pub steps: Option<usize>,
    /// Time horizon; defaults to T (unit step)
    #[arg(long = "H")]
    pub horizon: Option<f64>,
    /// Time padding factor of the circulant embedding
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of realizations
    #[arg(long)]
    pub count: Option<usize>,
    /// Output file; with count > 1, files are numbered stem_0000.ext, ...
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// bin or csv
    #[arg(long)]
    pub format: Option<String>,
    /// key=value file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bin" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            _ => Err("expected bin or csv".into()),
        }
    }
}

struct Plan {
    grid: SphereGrid<f64>,
    time: Option<(TimeGrid<f64>, EmbeddingConfig)>,
    model: Model<f64>,
    model_name: String,
    seed: u64,
    count: usize,
    output: PathBuf,
    format: Format,
}

fn plan(args: &SimulateArgs) -> Result<Plan> {
    let mut s = Settings::load(args.config.as_deref(), RUN_KEYS)?;
    s.set("N", args.n_lon);
    s.set("M", args.n_colat);
    s.set("T", args.steps);
    s.set("H", args.horizon);
    s.set("kappa", args.kappa);
    s.set("seed", args.seed);
    s.set("count", args.count);
    s.set("output", args.output.as_ref().map(|p| p.display()));
    s.set("format", args.format.as_ref());
    s.set_model(&args.model);

    let n_lon = s
        .get::<usize>("N")?
        .ok_or_else(|| invalid("--N is required"))?;
    let n_colat = s
        .get::<usize>("M")?
        .ok_or_else(|| invalid("--M is required"))?;
    let grid = SphereGrid::new(n_lon, n_colat)?;
    let spec = s.model_spec()?;
    let model = spec.build::<f64>()?;
    let model_name = s.raw("model").unwrap_or("exp").to_string();

    let steps = s.get::<usize>("T")?.unwrap_or(1);
    let time = if model.is_spacetime() {
        let horizon = s.get::<f64>("H")?.unwrap_or(steps as f64);
        let kappa = s.get::<usize>("kappa")?.unwrap_or(1);
        Some((
            TimeGrid::new(steps, horizon)?,
            EmbeddingConfig::new(kappa, steps)?,
        ))
    } else {
        if steps != 1 {
            return Err(invalid(format!(
                "T = {steps} needs a space-time model (st, st-exp, st-cauchy)"
            )));
        }
        None
    };

    let count = s.get::<usize>("count")?.unwrap_or(1);
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let format = s.get::<Format>("format")?.unwrap_or(Format::Binary);
    let output = s.raw("output").map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(match format {
            Format::Binary => "field.sgrf",
            Format::Csv => "field.csv",
        })
    });
    Ok(Plan {
        grid,
        time,
        model,
        model_name,
        seed: s.get::<u64>("seed")?.unwrap_or(1),
        count,
        output,
        format,
    })
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let p = plan(args)?;
    let start = Instant::now();
    let (fields, report) = simulate(&p)?;
    let compute = start.elapsed();

    let mut out = std::io::stdout().lock();
    let (n, m) = (p.grid.n_lon(), p.grid.n_colat());
    match &p.time {
        Some((tg, cfg)) => writeln!(
            out,
            "model {} on N={n} M={m} T={} H={} kappa={}, seed {}, {} realization(s)",
            p.model_name,
            tg.steps(),
            tg.horizon(),
            cfg.kappa(),
            p.seed,
            p.count
        )?,
        None => writeln!(
            out,
            "model {} on N={n} M={m}, seed {}, {} realization(s)",
            p.model_name, p.seed, p.count
        )?,
    }
    writeln!(
        out,
        "spectral blocks: {report}, min eigenvalue {:.3e}, negative mass {:.3e} of trace {:.6e}",
        report.min_eigenvalue, report.negative_mass, report.trace
    )?;

    for (k, field) in fields.iter().enumerate() {
        let path = numbered_path(&p.output, k, fields.len());
        write_field(&p, field, &path).with_context(|| format!("writing {}", path.display()))?;
        writeln!(
            out,
            "wrote {} ({} values)",
            path.display(),
            field.values.len()
        )?;
    }
    eprintln!(
        "wall time: {:.3} s (factor and sample {:.3} s)",
        start.elapsed().as_secs_f64(),
        compute.as_secs_f64()
    );
    Ok(())
}

fn simulate(p: &Plan) -> Result<(Vec<FieldRealization<f64>>, ClipReport)> {
    Ok(match (&p.model, &p.time) {
        (Model::Spatial(model), _) => {
            let spec = prepare(&p.grid, model, &SqrtOptions::default())?;
            let report = *spec.clip_report().expect("prepared blocks carry a report");
            (sample_sphere(&spec, p.seed, p.count)?, report)
        }
        (Model::SpaceTime(model), Some((tgrid, cfg))) => {
            let spec = prepare_spacetime(&p.grid, tgrid, cfg, model)?;
            let report = *spec
                .spectral()
                .clip_report()
                .expect("prepared blocks carry a report");
            (sample_spheretime(&spec, p.seed, p.count)?, report)
        }
        (Model::SpaceTime(_), None) => unreachable!("space-time plans carry a time grid"),
    })
}

fn write_field(p: &Plan, field: &FieldRealization<f64>, path: &std::path::Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match p.format {
        Format::Binary => fieldio::write_binary(&mut w, field)?,
        Format::Csv => fieldio::write_csv(&mut w, field, &p.grid, p.time.as_ref().map(|(t, _)| t))?,
    }
    w.flush()?;
    Ok(())
}

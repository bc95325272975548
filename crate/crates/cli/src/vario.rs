use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use spherefield::variogram::{
    default_lag_centers, empirical_st_variogram, empirical_variogram, mean_estimate, write_csv,
    VariogramEstimate,
};
use spherefield::{fieldio, FieldRealization, Model, SphereGrid, TimeGrid};

use crate::settings::{invalid, numbered_path, ModelArgs, Settings};

const RUN_KEYS: &[&str] = &["bins", "bandwidth", "H", "output"];

#[derive(Args, Debug)]
pub struct VariogramArgs {
    /// Binary field files; all must share one shape
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Number of distance bins over [0, 180] degrees
    #[arg(long)]
    pub bins: Option<usize>,
    /// Bin half-width in degrees; defaults to half the bin spacing
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Time horizon of space-time fields; defaults to T
    #[arg(long = "H")]
    pub horizon: Option<f64>,
    /// Mean CSV path (stdout if absent); per-replicate CSVs go to stem_0000.csv, ...
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Any model flag adds a truth column
    #[command(flatten)]
    pub model: ModelArgs,
}

struct Plan {
    centers: Vec<f64>,
    bandwidth: f64,
    horizon: Option<f64>,
    truth: Option<Model<f64>>,
    output: Option<PathBuf>,
}

fn plan(args: &VariogramArgs) -> Result<Plan> {
    let mut s = Settings::load(args.config.as_deref(), RUN_KEYS)?;
    s.set("bins", args.bins);
    s.set("bandwidth", args.bandwidth);
    s.set("H", args.horizon);
    s.set("output", args.output.as_ref().map(|p| p.display()));
    s.set_model(&args.model);

    let bins = s.get::<usize>("bins")?.unwrap_or(20);
    if bins == 0 {
        return Err(invalid("bins must be at least 1"));
    }
    let spacing = 180.0 / bins as f64;
    let bandwidth = s.get::<f64>("bandwidth")?.unwrap_or(spacing / 2.0);
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid(format!("bandwidth {bandwidth} must be positive")));
    }
    let truth = if s.has_model() {
        Some(s.model_spec()?.build::<f64>()?)
    } else {
        None
    };
    Ok(Plan {
        centers: (0..bins)
            .map(|k| ((k as f64 + 0.5) * spacing).to_radians())
            .collect(),
        bandwidth: bandwidth.to_radians(),
        horizon: s.get::<f64>("H")?,
        truth,
        output: s.raw("output").map(PathBuf::from),
    })
}

fn read_field(path: &Path) -> Result<FieldRealization<f64>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    fieldio::read_binary_bytes(&bytes).with_context(|| format!("reading {}", path.display()))
}

pub fn run(args: &VariogramArgs) -> Result<()> {
    let p = plan(args)?;
    let fields = args
        .inputs
        .iter()
        .map(|path| read_field(path))
        .collect::<Result<Vec<_>>>()?;
    let shape = fields[0].shape;
    for (f, path) in fields.iter().zip(&args.inputs).skip(1) {
        if f.shape != shape {
            bail!(
                "{}: shape {:?} differs from {}",
                path.display(),
                f.shape,
                args.inputs[0].display()
            );
        }
    }
    let grid = SphereGrid::new(shape.n_lon, shape.n_colat)?;
    let estimates: Vec<VariogramEstimate> = if shape.spacetime {
        let tgrid = TimeGrid::new(shape.n_time, p.horizon.unwrap_or(shape.n_time as f64))?;
        let (u_centers, l_time) = default_lag_centers(&tgrid);
        fields
            .iter()
            .map(|f| {
                empirical_st_variogram(
                    f,
                    &grid,
                    &tgrid,
                    &p.centers,
                    &u_centers,
                    p.bandwidth,
                    l_time,
                )
            })
            .collect::<spherefield::Result<_>>()?
    } else {
        fields
            .iter()
            .map(|f| empirical_variogram(f, &grid, &p.centers, p.bandwidth))
            .collect::<spherefield::Result<_>>()?
    };
    let mean = mean_estimate(&estimates)?;

    let truth_fn = p
        .truth
        .map(|m| move |theta: f64, u: f64| m.variogram(theta, u).unwrap_or(f64::NAN));
    let truth: Option<&dyn Fn(f64, f64) -> f64> = truth_fn.as_ref().map(|f| f as _);

    match &p.output {
        None => write_csv(std::io::stdout().lock(), &mean, truth)?,
        Some(path) => {
            write_estimate(path, &mean, truth)?;
            println!("wrote {} (mean of {})", path.display(), estimates.len());
            if estimates.len() > 1 {
                for (k, e) in estimates.iter().enumerate() {
                    let rep = numbered_path(path, k, estimates.len());
                    write_estimate(&rep, e, truth)?;
                }
                println!(
                    "wrote {} .. {}",
                    numbered_path(path, 0, estimates.len()).display(),
                    numbered_path(path, estimates.len() - 1, estimates.len()).display()
                );
            }
        }
    }
    Ok(())
}

fn write_estimate(
    path: &Path,
    est: &VariogramEstimate,
    truth: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<()> {
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_csv(&mut w, est, truth)?;
        w.flush()
    };
    write().with_context(|| format!("writing {}", path.display()))
}

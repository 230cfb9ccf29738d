//! `mphnet` command-line interface.
//!
//! Exit codes: 0 on success, 2 on parse/validation errors, 3 when training
//! hits a non-finite loss. Environment variables are not consulted.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use self::config::{Bins, ConfigFile};
use crate::datasets::{build_dataset, LabeledDataset, Normalizer, Split, SynthParams, SyntheticClass};
use crate::error::Error;
use crate::mesh_io::{read_off, sample_points, sample_points_auto, PointCloud, SampleMode};
use crate::nn::{Activation, Checkpoint, Variant};
use crate::persistence::{featurize, grid_format};
use crate::training::{evaluate, format_acc, signals, train, EpochStats, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "mphnet",
    version,
    about = "Bifiltration invariants and lattice-convolution classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the four invariant grids of one OFF mesh or point cloud
    Featurize(FeaturizeArgs),
    /// Train a classifier on a dataset directory
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test split of a dataset directory
    Eval(EvalArgs),
    /// Generate and featurize a synthetic dataset directory
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// OFF mesh (`.off`) or text point cloud with one `x y z` per line
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Grid size, `<r bins>x<t bins>`
    #[arg(long)]
    pub bins: Option<Bins>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Center the cloud and scale it into the unit ball first
    #[arg(long)]
    pub normalize: bool,
    /// Points sampled from an OFF mesh
    #[arg(long)]
    pub points: Option<usize>,
    /// vertices | surface; default picks vertices when the mesh has enough
    #[arg(long)]
    pub sample_mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Learning-curve CSV, one row per epoch
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Log every optimizer step to stderr
    #[arg(long)]
    pub verbose: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma-separated: sphere, torus, clusters, line
    #[arg(long)]
    pub classes: Option<String>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub bins: Option<Bins>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Featurize items on this many threads; output does not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFiniteLoss { .. } => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing required --{flag}")))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    Error::io(path, e).into()
}

/// Parse arguments and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Featurize(a) => cmd_featurize(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn load_cloud(path: &Path, points: usize, mode: Option<SampleMode>, seed: u64) -> CliResult<PointCloud> {
    let is_off = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("off"));
    if is_off {
        let mesh = read_off(path)?;
        Ok(match mode {
            Some(m) => sample_points(&mesh, points, m, seed)?,
            None => sample_points_auto(&mesh, points, seed)?,
        })
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Ok(PointCloud::parse_xyz(&text)?)
    }
}

pub fn cmd_featurize(a: FeaturizeArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let input: PathBuf = required(cfg.pick_opt("input", a.input)?, "input")?;
    let out: PathBuf = required(cfg.pick_opt("out", a.out)?, "out")?;
    let k = cfg.pick("k", a.k, 100)?;
    let bins = cfg.pick("bins", a.bins, Bins { rows: 40, cols: 40 })?;
    let normalize = cfg.pick("normalize", a.normalize.then_some(true), false)?;
    let points = cfg.pick("points", a.points, 3000)?;
    let mode: Option<SampleMode> = cfg
        .pick_opt::<String>("sample-mode", a.sample_mode)?
        .map(|s| s.parse())
        .transpose()?;
    let seed = cfg.pick("seed", a.seed, 0)?;
    cfg.finish()?;
    if k == 0 {
        return Err(usage("k must be positive"));
    }

    let mut cloud = load_cloud(&input, points, mode, seed)?;
    if normalize {
        cloud = cloud.normalized();
    }
    if k >= cloud.len() {
        return Err(usage(format!(
            "k must be < point count (k = {k}, points = {})",
            cloud.len()
        )));
    }
    let inv = featurize(&cloud, k, bins.rows, bins.cols)?;
    grid_format::write(&out, &inv)?;
    println!(
        "hilb_max={} xi0_sum={} xi1_sum={} xi2_sum={}",
        inv.hilb.max(),
        inv.xi0.sum(),
        inv.xi1.sum(),
        inv.xi2.sum()
    );
    Ok(())
}

pub fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let data: PathBuf = required(cfg.pick_opt("data", a.data)?, "data")?;
    let curves: Option<PathBuf> = cfg.pick_opt("curves", a.curves)?;
    let checkpoint: Option<PathBuf> = cfg.pick_opt("checkpoint", a.checkpoint)?;
    let defaults = TrainConfig::default();
    let tc = TrainConfig {
        variant: cfg.pick("variant", a.variant, defaults.variant)?,
        alpha: cfg.pick("alpha", a.alpha, defaults.alpha)?,
        activation: cfg.pick("activation", a.activation, defaults.activation)?,
        lr: cfg.pick("lr", a.lr, defaults.lr)?,
        epochs: cfg.pick("epochs", a.epochs, defaults.epochs)?,
        batch: cfg.pick("batch", a.batch, defaults.batch)?,
        seed: cfg.pick("seed", a.seed, defaults.seed)?,
    };
    let verbose = cfg.pick("verbose", a.verbose.then_some(true), false)?;
    cfg.finish()?;
    if !(0.0..=1.0).contains(&tc.alpha) {
        return Err(usage(format!("alpha must be in [0,1], got {}", tc.alpha)));
    }
    if tc.batch == 0 {
        return Err(usage("batch must be positive"));
    }
    if !(tc.lr > 0.0 && tc.lr.is_finite()) {
        return Err(usage(format!("lr must be positive, got {}", tc.lr)));
    }

    let ds = LabeledDataset::load(&data)?;
    let mut csv = match &curves {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{}", EpochStats::CSV_HEADER).map_err(|e| io_err(p, e))?;
            Some((p.clone(), w))
        }
        None => None,
    };
    let mut last: Option<EpochStats> = None;
    let ck = train(
        &ds,
        &tc,
        |stats| {
            if let Some((p, w)) = csv.as_mut() {
                writeln!(w, "{}", stats.csv_row())
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(p.clone(), e))?;
            }
            last = Some(stats.clone());
            Ok(())
        },
        |s| {
            if verbose {
                eprintln!("epoch={} step={} loss={:.8}", s.epoch, s.step, s.loss);
            }
        },
    )?;
    if let Some(p) = &checkpoint {
        ck.save(p)?;
    }
    match last {
        Some(s) => println!(
            "epochs={} train_loss={:.8} train_acc={} test_acc={}",
            s.epoch,
            s.train_loss,
            format_acc(s.train_acc),
            s.test_acc.map_or("NA".into(), format_acc)
        ),
        None => println!("epochs=0"),
    }
    Ok(())
}

pub fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let ds = LabeledDataset::load(&a.data)?;
    let cfg = &ck.network.config;
    if let Some((r, c)) = ds.shape() {
        if (r, c) != (cfg.rows, cfg.cols) {
            return Err(usage(format!(
                "shape mismatch: checkpoint expects {}x{} grids, dataset has {r}x{c}",
                cfg.rows, cfg.cols
            )));
        }
    }
    if ds.class_names.len() != cfg.classes {
        return Err(usage(format!(
            "shape mismatch: checkpoint has {} classes, dataset has {}",
            cfg.classes,
            ds.class_names.len()
        )));
    }
    if ck.input_scale.len() != 4 {
        return Err(usage("checkpoint input_scale must have 4 channels"));
    }
    let norm = Normalizer {
        scale: ck.input_scale.clone(),
    };
    let test = signals(&ds, &norm, Split::Test);
    if test.is_empty() {
        return Err(usage("no test items"));
    }
    let ev = evaluate(&ck.network, &test)?;
    println!("confusion (rows: true class, columns: predicted)");
    let width = ds.class_names.iter().map(String::len).max().unwrap_or(0);
    for (name, row) in ds.class_names.iter().zip(&ev.confusion) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
        println!("{name:>width$} {}", cells.join(""));
    }
    println!("correct={} total={}", ev.correct, ev.total);
    println!("test_acc={}", format_acc(ev.accuracy()));
    Ok(())
}

pub fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    let out: PathBuf = required(cfg.pick_opt("out", a.out)?, "out")?;
    let class_list = cfg.pick("classes", a.classes, "sphere,torus,clusters".to_string())?;
    let per_class = cfg.pick("per-class", a.per_class, 20)?;
    let k = cfg.pick("k", a.k, 20)?;
    let bins = cfg.pick("bins", a.bins, Bins { rows: 20, cols: 20 })?;
    let seed = cfg.pick("seed", a.seed, 0)?;
    let points = cfg.pick("points", a.points, 600)?;
    let noise = cfg.pick("noise", a.noise, 0.02)?;
    let test_fraction = cfg.pick("test-fraction", a.test_fraction, 0.1)?;
    let threads = cfg.pick("threads", a.threads, 1)?;
    cfg.finish()?;

    let classes: Vec<SyntheticClass> = class_list
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    if k >= points {
        return Err(usage(format!("k must be < point count (k = {k}, points = {points})")));
    }
    let params = SynthParams {
        n_points: points,
        noise_sigma: noise,
        k,
        bins_r: bins.rows,
        bins_t: bins.cols,
    };
    let (ds, failures) = build_dataset(&classes, per_class, &params, test_fraction, seed, threads)?;
    for f in &failures {
        eprintln!("warning: {} item with seed {} failed: {}", f.class, f.seed, f.error);
    }
    ds.save(&out)?;
    println!(
        "items={} train={} test={} failures={}",
        ds.len(),
        ds.split(Split::Train).count(),
        ds.split(Split::Test).count(),
        failures.len()
    );
    Ok(())
}

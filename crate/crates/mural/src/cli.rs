//! Command-line front end.
//!
//! Every command takes an optional `--config` TOML file; flags override it,
//! and the merged result is written to `resolved-config.toml` next to the
//! outputs. Re-running with only `--config <resolved>` reproduces them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mural_core::data::BinningScheme;
use mural_core::distance::{affinity, diffusion, DistanceMatrix};
use mural_core::metrics::silhouette;
use mural_core::transport::{feature_importance, forest_tswd};

use crate::cohort::{overlap, select_rows};
use crate::config::{BandwidthChoice, MatrixFormat, RunConfig, RESOLVED_CONFIG};
use crate::error::{MuralError, Result};
use crate::eval::experiments::{parse_entropy_dims, run_ablation, run_swissroll, Knob};
use crate::eval::generate::{gen_mixed_clinical, gen_swiss_roll_5d, ClinicalSpec, MissingnessRecipe, SwissRollConfig};
use crate::eval::spectral::spectral_cluster;
use crate::io::{self, deserialize_forest, render_schema, serialize_forest, write_csv};
use crate::pipeline::{fit_pipeline, FittedModel};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "MURAL_THREADS";

pub const FOREST_FILE: &str = "forest.mural";

#[derive(Debug, Parser)]
#[command(name = "mural", version, about = "Unsupervised random-forest distances for data with informative missingness")]
pub struct Cli {
    /// Worker threads (default: $MURAL_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect missingness, impute, standardize and fit a forest.
    Fit(FitArgs),
    /// Export the forest distance matrix (and optionally affinities).
    Dist(DistArgs),
    /// Tree-sliced Wasserstein distance and feature importance between cohorts.
    Tswd(TswdArgs),
    /// Multi-seed Swiss-roll experiments.
    Eval(EvalArgs),
    /// Spectral clustering on the diffusion operator.
    Cluster(ClusterArgs),
    /// Write a synthetic dataset with its schema file.
    Gen(GenArgs),
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// Run configuration (TOML); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Bins {
    EqualWidth,
    Quantile,
}

#[derive(Debug, Default, Args)]
pub struct ForestFlags {
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub split_vars: Option<usize>,
    /// `marginal` or the number of jointly binned residual variables.
    #[arg(long)]
    pub entropy_dims: Option<String>,
    #[arg(long)]
    pub mnar_levels: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long, value_enum)]
    pub bins: Option<Bins>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Significance level of the missingness tests.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl ForestFlags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let f = &mut cfg.pipeline.forest;
        if let Some(v) = self.trees {
            f.n_trees = v;
        }
        if let Some(v) = self.depth {
            f.max_depth = v;
        }
        if let Some(v) = self.split_vars {
            f.n_candidate_vars = v;
        }
        if let Some(v) = &self.entropy_dims {
            f.entropy_mode = parse_entropy_dims(v)
                .ok_or_else(|| MuralError::Config(format!("--entropy-dims `{v}`: expected `marginal` or a positive count")))?;
        }
        if let Some(v) = self.mnar_levels {
            f.mnar_restrict_levels = v;
        }
        if let Some(v) = self.min_leaf {
            f.min_leaf = v;
        }
        if let Some(b) = self.bins {
            f.binning = match b {
                Bins::EqualWidth => BinningScheme::EqualWidth,
                Bins::Quantile => BinningScheme::Quantile,
            };
        }
        if let Some(v) = self.seed {
            f.seed = v;
        }
        if let Some(v) = self.alpha {
            cfg.pipeline.alpha = v;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV.
    pub data: Option<PathBuf>,
    /// Schema file describing the CSV columns.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub forest: ForestFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Forest file written by `fit`.
    pub forest: Option<PathBuf>,
    /// CSV with the forest's columns.
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<MatrixFormat>,
    /// Also write the Gaussian affinity and diffusion operator.
    #[arg(long)]
    pub affinity: bool,
    /// `knn:<k>` or `fixed:<epsilon>`.
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TswdArgs {
    pub forest: Option<PathBuf>,
    pub data: Option<PathBuf>,
    /// Cohort expression, e.g. `age>80`, or `@rows.txt`.
    #[arg(long)]
    pub cohort_a: Option<String>,
    #[arg(long)]
    pub cohort_b: Option<String>,
    #[arg(long)]
    pub allow_overlap: bool,
    /// Include per-tree distances in the report.
    #[arg(long)]
    pub per_tree: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `swissroll` or `ablation`.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Ablation knob: trees, depth, split-vars, mnar-levels, entropy-dims.
    #[arg(long)]
    pub knob: Option<String>,
    /// Comma-separated knob values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<String>>,
    /// Number of seeds (0..N).
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Swiss-roll size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub forest: ForestFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub forest: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Precomputed distance matrix (CSV or binary) instead of forest + data.
    #[arg(long)]
    pub distance: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKind {
    Swissroll,
    Clinical,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 3000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Latent groups (clinical only).
    #[arg(long, default_value_t = 4)]
    pub groups: usize,
    /// Skip the induced missingness (swissroll only).
    #[arg(long)]
    pub complete: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.paths.out = Some(out.clone());
    }
    Ok(cfg)
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| MuralError::Config(format!("no {what} given")))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = required(&cfg.paths.out, "output directory (--out)")?.to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| MuralError::io(&dir, e))?;
    Ok(dir)
}

fn set_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    io::write_file(path, text.as_bytes())
}

fn write_resolved(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_text(&dir.join(RESOLVED_CONFIG), &cfg.to_toml()?)
}

fn write_matrix(path: &Path, n: usize, data: &[f64], format: MatrixFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| MuralError::io(path, e))?;
    let sink = BufWriter::new(file);
    match format {
        MatrixFormat::Csv => io::write_matrix_csv(n, data, sink),
        MatrixFormat::Bin => io::write_matrix_bin(n, data, sink),
    }
}

/// Reads a matrix file, choosing the binary reader when it starts with the
/// binary magic.
pub fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let bytes = io::read_file(path)?;
    let (n, data) = if bytes.starts_with(io::matrix::MATRIX_MAGIC) {
        io::read_matrix_bin(bytes.as_slice())?
    } else {
        io::read_matrix_csv(bytes.as_slice())?
    };
    Ok(DistanceMatrix::from_dense(n, data)?)
}

fn load_model(path: &Path) -> Result<FittedModel> {
    deserialize_forest(&io::read_file(path)?)
}

fn parse_bandwidth(cfg: &mut RunConfig, flag: &Option<String>) -> Result<()> {
    if let Some(b) = flag {
        cfg.bandwidth = b.parse::<BandwidthChoice>()?;
    }
    Ok(())
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    set_path(&mut cfg.paths.data, &args.data);
    set_path(&mut cfg.paths.schema, &args.schema);
    args.forest.apply(&mut cfg)?;
    cfg.pipeline.forest.validate()?;
    let schema = io::read_schema_file(required(&cfg.paths.schema, "schema file (--schema)")?)?;
    let raw = io::read_dataset(&schema, required(&cfg.paths.data, "data file")?)?;
    let model = fit_pipeline(&raw, &cfg.pipeline)?;
    let dir = out_dir(&cfg)?;
    io::write_file(&dir.join(FOREST_FILE), &serialize_forest(&model)?)?;
    let report = model.missingness.report();
    write_text(&dir.join("missingness.txt"), &report)?;
    write_text(&dir.join("missingness.json"), &(serde_json::to_string_pretty(&model.missingness)? + "\n"))?;
    write_resolved(&dir, &cfg)?;
    writeln!(out, "fitted {} trees on {} rows x {} columns", model.forest.trees().len(), raw.n_rows(), raw.n_cols())?;
    write!(out, "{report}")?;
    Ok(())
}

pub fn cmd_dist(args: &DistArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    set_path(&mut cfg.paths.forest, &args.forest);
    set_path(&mut cfg.paths.data, &args.data);
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.affinity |= args.affinity;
    parse_bandwidth(&mut cfg, &args.bandwidth)?;
    let model = load_model(required(&cfg.paths.forest, "forest file")?)?;
    let raw = io::read_dataset(model.forest.schema(), required(&cfg.paths.data, "data file")?)?;
    let dm = model.distances(&raw)?;
    let dir = out_dir(&cfg)?;
    let ext = cfg.format.extension();
    let n = dm.n();
    write_matrix(&dir.join(format!("distance.{ext}")), n, dm.as_slice(), cfg.format)?;
    writeln!(out, "distance matrix: {n} x {n}")?;
    if cfg.affinity {
        let k = affinity(&dm, cfg.bandwidth.0)?;
        let p = diffusion(&k)?;
        write_matrix(&dir.join(format!("affinity.{ext}")), n, k.as_slice(), cfg.format)?;
        write_matrix(&dir.join(format!("diffusion.{ext}")), n, p.as_slice(), cfg.format)?;
        writeln!(out, "affinity epsilon: {:?}", k.epsilon())?;
    }
    write_resolved(&dir, &cfg)
}

pub fn cmd_tswd(args: &TswdArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    set_path(&mut cfg.paths.forest, &args.forest);
    set_path(&mut cfg.paths.data, &args.data);
    if args.cohort_a.is_some() {
        cfg.tswd.cohort_a.clone_from(&args.cohort_a);
    }
    if args.cohort_b.is_some() {
        cfg.tswd.cohort_b.clone_from(&args.cohort_b);
    }
    cfg.tswd.allow_overlap |= args.allow_overlap;
    cfg.tswd.per_tree |= args.per_tree;
    let expr_a = cfg.tswd.cohort_a.clone().ok_or_else(|| MuralError::Config("no --cohort-a given".into()))?;
    let expr_b = cfg.tswd.cohort_b.clone().ok_or_else(|| MuralError::Config("no --cohort-b given".into()))?;
    let model = load_model(required(&cfg.paths.forest, "forest file")?)?;
    let raw = io::read_dataset(model.forest.schema(), required(&cfg.paths.data, "data file")?)?;
    let a = select_rows(&expr_a, &raw)?;
    let b = select_rows(&expr_b, &raw)?;
    let shared = overlap(&a, &b);
    if shared > 0 && !cfg.tswd.allow_overlap {
        return Err(MuralError::Overlap(shared));
    }
    let assignments = model.assign(&raw)?;
    let tswd = forest_tswd(&model.forest, &assignments, &a, &b)?;
    let importance = feature_importance(&model.forest, &assignments, &a, &b)?;

    let mut report = String::new();
    use std::fmt::Write as _;
    writeln!(report, "cohort_a: {expr_a} (n={})", a.len()).unwrap();
    writeln!(report, "cohort_b: {expr_b} (n={})", b.len()).unwrap();
    writeln!(report, "trees: {}", tswd.per_tree.len()).unwrap();
    writeln!(report, "tswd_mean: {:?}", tswd.mean).unwrap();
    writeln!(report, "tswd_std: {:?}", tswd.std_dev).unwrap();
    if importance.degenerate {
        writeln!(report, "importance: degenerate (no node separates the cohorts)").unwrap();
    }
    if cfg.tswd.per_tree {
        report.push_str("per_tree:\n");
        for (t, w) in tswd.per_tree.iter().enumerate() {
            writeln!(report, "{t}\t{w:?}").unwrap();
        }
    }
    let mut table = String::from("variable,share\n");
    for e in &importance.entries {
        writeln!(table, "{},{:?}", e.name, e.share).unwrap();
    }
    let dir = out_dir(&cfg)?;
    write_text(&dir.join("tswd.txt"), &report)?;
    write_text(&dir.join("importance.csv"), &table)?;
    write_resolved(&dir, &cfg)?;
    write!(out, "{report}")?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    args.forest.apply(&mut cfg)?;
    if let Some(e) = &args.experiment {
        cfg.eval.experiment.clone_from(e);
    }
    if let Some(k) = &args.knob {
        cfg.eval.knob = Some(k.parse::<Knob>()?);
    }
    if let Some(v) = &args.values {
        cfg.eval.values.clone_from(v);
    }
    if let Some(s) = args.seeds {
        cfg.eval.seeds = (0..s).collect();
    }
    if let Some(n) = args.n {
        cfg.eval.roll.n = n;
    }
    cfg.eval.timing |= args.timing;
    cfg.pipeline.forest.validate()?;
    if cfg.eval.seeds.is_empty() {
        return Err(MuralError::Config("at least one seed is required".into()));
    }
    let exp = cfg.experiment();
    let start = Instant::now();
    let mut report = match cfg.eval.experiment.as_str() {
        "swissroll" => run_swissroll(&exp)?,
        "ablation" => {
            let knob = cfg.eval.knob.ok_or_else(|| MuralError::Config("ablation needs --knob".into()))?;
            if cfg.eval.values.is_empty() {
                cfg.eval.values = knob.default_values();
            }
            run_ablation(&exp, knob, &cfg.eval.values)?
        }
        other => return Err(MuralError::UnknownExperiment(other.to_string())),
    };
    if cfg.eval.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    let dir = out_dir(&cfg)?;
    let text = report.render_text();
    write_text(&dir.join("report.txt"), &text)?;
    write_text(&dir.join("report.csv"), &report.render_csv())?;
    write_resolved(&dir, &cfg)?;
    write!(out, "{text}")?;
    Ok(())
}

pub fn cmd_cluster(args: &ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    set_path(&mut cfg.paths.forest, &args.forest);
    set_path(&mut cfg.paths.data, &args.data);
    set_path(&mut cfg.paths.distance, &args.distance);
    if let Some(k) = args.k {
        cfg.cluster.k = k;
    }
    if let Some(s) = args.seed {
        cfg.cluster.seed = s;
    }
    parse_bandwidth(&mut cfg, &args.bandwidth)?;
    let dm = match &cfg.paths.distance {
        Some(p) => read_matrix(p)?,
        None => {
            let model = load_model(required(&cfg.paths.forest, "forest file or --distance")?)?;
            let raw = io::read_dataset(model.forest.schema(), required(&cfg.paths.data, "data file")?)?;
            model.distances(&raw)?
        }
    };
    let k = cfg.cluster.k;
    if k < 2 || k > dm.n() {
        return Err(mural_core::Error::KOutOfRange { k, n: dm.n() }.into());
    }
    let p = diffusion(&affinity(&dm, cfg.bandwidth.0)?)?;
    let labels = spectral_cluster(&p, k, cfg.cluster.seed)?;
    let score = silhouette(&dm, &labels)?;
    let mut csv = String::from("row,label\n");
    for (r, l) in labels.iter().enumerate() {
        csv.push_str(&format!("{r},{l}\n"));
    }
    let dir = out_dir(&cfg)?;
    write_text(&dir.join("labels.csv"), &csv)?;
    write_text(&dir.join("silhouette.txt"), &format!("{score:?}\n"))?;
    write_resolved(&dir, &cfg)?;
    writeln!(out, "k: {k}")?;
    writeln!(out, "silhouette: {score:?}")?;
    Ok(())
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&args.out).map_err(|e| MuralError::io(&args.out, e))?;
    let csv_bytes = |d: &mural_core::data::Dataset| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_csv(d, &mut buf)?;
        Ok(buf)
    };
    let (data, complete, truth) = match args.kind {
        GenKind::Swissroll => {
            let sample = gen_swiss_roll_5d(&SwissRollConfig { n: args.n, ..Default::default() }, args.seed)?;
            let data = if args.complete { sample.dataset.clone() } else { MissingnessRecipe::default().apply(&sample, args.seed)? };
            let mut truth = String::from("t,h\n");
            for (t, h) in sample.t.iter().zip(&sample.h) {
                truth.push_str(&format!("{t:?},{h:?}\n"));
            }
            (data, sample.dataset, truth)
        }
        GenKind::Clinical => {
            let sample = gen_mixed_clinical(args.n, &ClinicalSpec::standard(args.groups), args.seed)?;
            let mut truth = String::from("label\n");
            for l in &sample.labels {
                truth.push_str(&format!("{l}\n"));
            }
            (sample.dataset, sample.complete, truth)
        }
    };
    io::write_file(&args.out.join("data.csv"), &csv_bytes(&data)?)?;
    io::write_file(&args.out.join("complete.csv"), &csv_bytes(&complete)?)?;
    write_text(&args.out.join("schema.txt"), &render_schema(data.schema()))?;
    write_text(&args.out.join("truth.csv"), &truth)?;
    writeln!(out, "wrote {} rows x {} columns to {}", data.n_rows(), data.n_cols(), args.out.display())?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Dist(a) => cmd_dist(a, out),
        Command::Tswd(a) => cmd_tswd(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Cluster(a) => cmd_cluster(a, out),
        Command::Gen(a) => cmd_gen(a, out),
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| MuralError::Config(format!("{THREADS_ENV}=`{v}` is not a count"))),
        Err(_) => Ok(None),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors are printed to stderr as a single `error: ...` line.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    std::panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        eprintln!("error: internal invariant violated: {}", msg.replace('\n', " "));
    }));
    let result = std::panic::catch_unwind(|| -> Result<()> {
        if let Some(n) = thread_count(cli.threads)? {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| MuralError::Internal(format!("thread pool: {e}")))?;
        }
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        run(&cli, &mut lock)
    });
    match result {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
        Err(_) => 2,
    }
}

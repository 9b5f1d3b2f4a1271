use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gemsec_core::benchmark::run_benchmark;
use gemsec_core::config::load_key_values;
use gemsec_core::graph::{load_edge_list, EdgeListFormat};
use gemsec_core::io::read_labelled_matrix;
use gemsec_core::model::TrainConfig;
use gemsec_core::pipeline::{align_to_graph, evaluate, run_embed, Metrics, RunManifest};

const OUTPUT_ENV: &str = "GEMSEC_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "gemsec-out";

#[derive(Parser)]
#[command(name = "gemsec", version, about = "Node embeddings with jointly learned community centers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on an edge list and write embeddings, centers, assignment,
    /// metrics, manifest and training log.
    Embed(EmbedArgs),
    /// Time training on Erdős–Rényi graphs of doubling size.
    Benchmark(BenchmarkArgs),
    /// Score an embedding file by modularity.
    Evaluate(EvaluateArgs),
}

/// Training hyperparameters. Each flag has a config-file key of the same name.
#[derive(Args)]
struct TrainArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// deepwalk or gemsec.
    #[arg(long)]
    mode: Option<String>,
    /// Add the neighborhood-overlap smoothness term.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    smooth: Option<bool>,
    /// Walk order: first or second.
    #[arg(long)]
    order: Option<String>,
    /// Return parameter of second-order walks.
    #[arg(long)]
    p: Option<f64>,
    /// In-out parameter of second-order walks.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    /// Noise samples per positive pair.
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    alpha_final: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    walks_per_node: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Noise distribution: unigram or uniform.
    #[arg(long)]
    noise: Option<String>,
    /// Annealing horizon: windowed or reached.
    #[arg(long)]
    schedule_horizon: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl TrainArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |key, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        put("mode", self.mode.clone());
        put("smooth", self.smooth.map(|b| b.to_string()));
        put("order", self.order.clone());
        put("p", self.p.map(|x| x.to_string()));
        put("q", self.q.map(|x| x.to_string()));
        put("dims", self.dims.map(|x| x.to_string()));
        put("clusters", self.clusters.map(|x| x.to_string()));
        put("negatives", self.negatives.map(|x| x.to_string()));
        put("gamma0", self.gamma0.map(|x| x.to_string()));
        put("alpha0", self.alpha0.map(|x| x.to_string()));
        put("alpha-final", self.alpha_final.map(|x| x.to_string()));
        put("lambda", self.lambda.map(|x| x.to_string()));
        put("walk-length", self.walk_length.map(|x| x.to_string()));
        put("walks-per-node", self.walks_per_node.map(|x| x.to_string()));
        put("window", self.window.map(|x| x.to_string()));
        put("noise", self.noise.clone());
        put("schedule-horizon", self.schedule_horizon.clone());
        put("seed", self.seed.map(|x| x.to_string()));
        out
    }

    fn file(&self) -> anyhow::Result<BTreeMap<String, String>> {
        match &self.config {
            Some(path) => Ok(load_key_values(path)?),
            None => Ok(BTreeMap::new()),
        }
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// Edge list to embed.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// csv, tsv, whitespace or auto.
    #[arg(long)]
    format: Option<String>,
    /// Start from the configuration recorded in a previous run's manifest.
    #[arg(long, value_name = "FILE")]
    from_manifest: Option<PathBuf>,
    /// Walk-producer threads.
    #[arg(long)]
    workers: Option<usize>,
    /// k-means restarts when clustering the DeepWalk embedding.
    #[arg(long)]
    kmeans_restarts: Option<usize>,
    /// Output directory (default: $GEMSEC_OUTPUT_DIR, then `gemsec-out`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 6)]
    min_exp: u32,
    #[arg(long, default_value_t = 12)]
    max_exp: u32,
    /// Comma-separated modes, each optionally prefixed with `smooth-`.
    #[arg(long, value_delimiter = ',', default_value = "deepwalk,gemsec")]
    modes: Vec<String>,
    /// Timed runs per size and mode; the fastest is kept.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for benchmark.csv.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "auto")]
    format: String,
    /// Embedding CSV (`id,x_0,...`).
    #[arg(long)]
    embeddings: PathBuf,
    /// Center CSV; when given, nodes go to their nearest center.
    #[arg(long)]
    centers: Option<PathBuf>,
    /// k-means cluster count when no centers are given.
    #[arg(long, default_value_t = 20)]
    clusters: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Restarts behind the headline k-means figure.
    #[arg(long, default_value_t = 1)]
    kmeans_restarts: usize,
    /// k-means repeats for the mean and two-standard-deviation figures.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

/// Error caused by the invocation rather than the program.
#[derive(Debug)]
struct UserError(String);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

fn user(msg: impl Into<String>) -> anyhow::Error {
    UserError(msg.into()).into()
}

fn output_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .or(file)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn parse_usize(key: &str, value: &str) -> anyhow::Result<usize> {
    value
        .parse()
        .map_err(|e| user(format!("{key}: cannot parse `{value}`: {e}")))
}

fn cmd_embed(args: EmbedArgs) -> anyhow::Result<()> {
    let mut cfg = TrainConfig::default();
    let mut graph: Option<PathBuf> = None;
    let mut format = EdgeListFormat::Auto;
    let mut workers = 1;
    let mut restarts = 1;
    let mut file_output = None;

    if let Some(path) = &args.from_manifest {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| user(format!("{}: not a run manifest: {e}", path.display())))?;
        cfg = m.config;
        graph = Some(m.graph);
        format = m.format;
        workers = m.workers;
        restarts = m.kmeans_restarts;
    }

    let file = args.train.file()?;
    for key in cfg.apply(&file)? {
        let value = &file[&key];
        match key.as_str() {
            "graph" => graph = Some(PathBuf::from(value)),
            "format" => format = value.parse()?,
            "workers" => workers = parse_usize(&key, value)?,
            "kmeans-restarts" => restarts = parse_usize(&key, value)?,
            "output" => file_output = Some(PathBuf::from(value)),
            _ => return Err(user(format!("unknown configuration key `{key}`"))),
        }
    }

    for (key, value) in args.train.flags() {
        cfg.set(key, &value)?;
    }
    if let Some(g) = args.graph {
        graph = Some(g);
    }
    if let Some(f) = &args.format {
        format = f.parse()?;
    }
    workers = args.workers.unwrap_or(workers);
    restarts = args.kmeans_restarts.unwrap_or(restarts);
    let out = output_dir(args.output, file_output);

    let graph = graph.ok_or_else(|| user("no graph given (use --graph or a config/manifest entry)"))?;
    if workers == 0 {
        return Err(user("workers must be at least 1"));
    }
    cfg.validate()?;
    log::info!("embedding {} into {}", graph.display(), out.display());
    let (result, _) = run_embed(&graph, format, &cfg, workers, restarts, &out)?;
    let metrics = Metrics::new(&result, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> anyhow::Result<()> {
    let mut cfg = TrainConfig::default();
    let file = args.train.file()?;
    let mut file_output = None;
    for key in cfg.apply(&file)? {
        match key.as_str() {
            "output" => file_output = Some(PathBuf::from(&file[&key])),
            _ => return Err(user(format!("unknown configuration key `{key}`"))),
        }
    }
    for (key, value) in args.train.flags() {
        cfg.set(key, &value)?;
    }
    cfg.validate()?;
    if args.workers == 0 {
        return Err(user("workers must be at least 1"));
    }
    let report = run_benchmark(
        args.min_exp,
        args.max_exp,
        &args.modes,
        &cfg,
        args.repeats,
        args.workers,
    )?;
    let out = output_dir(args.output, file_output);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("benchmark.csv");
    std::fs::write(&csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    let slopes: serde_json::Map<String, serde_json::Value> =
        report.slopes.iter().map(|(m, s)| (m.clone(), (*s).into())).collect();
    let summary = serde_json::json!({ "csv": csv, "slopes": slopes, "rows": report.rows });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let loaded = load_edge_list(&args.graph, args.format.parse()?)?;
    let file = read_labelled_matrix(&args.embeddings)?;
    let embeddings = align_to_graph(&file, &loaded)?;
    let centers = match &args.centers {
        Some(path) => Some(read_labelled_matrix(path)?.values),
        None => None,
    };
    let report = evaluate(
        &loaded.graph,
        &embeddings,
        centers.as_ref(),
        args.clusters,
        args.seed,
        args.kmeans_restarts,
        args.repeats,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use gemsec_core::Error as E;
    if err.downcast_ref::<UserError>().is_some() || err.downcast_ref::<std::io::Error>().is_some() {
        return 1;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::Io { .. }
            | E::Parse { .. }
            | E::EmptyGraph(_)
            | E::InvalidNode { .. }
            | E::InvalidParameter(_)
            | E::ShapeMismatch(_),
        ) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Embed(a) => cmd_embed(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(2),
    }
}

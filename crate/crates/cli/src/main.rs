use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use dynlp::builder::{erdos_renyi, knn_graph, KnnWeighting, PlantedModel, SyntheticSpec};
use dynlp::metrics::{compare_methods, new_method, peak_unlabeled, CompareConfig, Method, RunReport};
use dynlp::stream::{make_stream, StreamSpec};
use dynlp::{
    io, BatchUpdate, Class, EngineConfig, Error, InsertRecord, Initialization, IntraBatchGraph, Schedule, Tau,
    VertexId, WeightedEdge,
};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_IO: u8 = 4;

const SEED_GRAPH: u64 = 1;
const SEED_GROUND_TRUTH: u64 = 2;
const SEED_STREAM: u64 = 3;

/// Per-module seed derived from the global one.
fn sub_seed(seed: u64, module: u64) -> u64 {
    let mut z = seed ^ module.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Parser, Debug)]
#[command(name = "dynlp", version, about = "Incremental label propagation experiments")]
struct Cli {
    /// Seed for every random choice in the pipeline.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Log filter, overriding DYNLP_LOG.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a graph and batch stream.
    Generate(GenerateArgs),
    /// Run one method over a batch stream.
    Run(RunArgs),
    /// Run several methods over the same stream and compare them.
    Compare(CompareArgs),
    /// Dump the intra-batch components of one batch.
    Components(ComponentsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Model {
    Er,
    Knn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dynlp,
    Itlp,
    Stlp,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dynlp => Method::Dynlp,
            MethodArg::Itlp => Method::Itlp,
            MethodArg::Stlp => Method::Stlp,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReferenceArg {
    Dynlp,
    Itlp,
    Stlp,
    Oracle,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Components,
    Neutral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Prune,
    Affine,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: Model,
    /// Vertex count (er).
    #[arg(long, required_if_eq("model", "er"))]
    n: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    avg_degree: f64,
    /// Fraction of each class given ground truth.
    #[arg(long, default_value_t = 0.01)]
    labeled: f64,
    /// Feature CSV (knn).
    #[arg(long, required_if_eq("model", "knn"))]
    features: Option<PathBuf>,
    /// The feature CSV has no label column.
    #[arg(long)]
    unlabeled_features: bool,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value = "prune")]
    knn_weighting: WeightingArg,
    #[command(flatten)]
    stream: StreamArgs,
}

#[derive(Args, Debug)]
struct StreamArgs {
    /// Vertices per batch; by default sized so `--num-batches` batches cover
    /// the graph.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Unlabeled inserts, ground-truth inserts and deletes per batch.
    #[arg(long, default_value = "0.9:0.01:0.09")]
    fractions: String,
    /// Ground-truth vertices inserted before the first update batch.
    #[arg(long)]
    initial_gt: Option<usize>,
    #[arg(long, default_value_t = 10)]
    num_batches: usize,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// JSONL batch file.
    #[arg(long, conflicts_with_all = ["graph", "ground_truth"])]
    batches: Option<PathBuf>,
    /// Graph file, loaded as a single batch together with --ground-truth.
    #[arg(long, requires = "ground_truth")]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    ground_truth: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct EngineArgs {
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    /// Intra-batch threshold, a number or "auto" (mean edge weight).
    #[arg(long, default_value = "auto")]
    tau: String,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, value_enum, default_value = "jacobi")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "components")]
    init: InitArg,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum, required_unless_present = "config")]
    method: Option<MethodArg>,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Also write labels after every batch.
    #[arg(long)]
    snapshots: bool,
    /// Re-run from a config.json written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    methods: Vec<MethodArg>,
    /// Accuracy reference [default: stlp, skipped when the graph exceeds the
    /// dense-solve cap].
    #[arg(long, value_enum)]
    reference: Option<ReferenceArg>,
    /// Reference labels within this distance of 0.5 are not scored.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct ComponentsArgs {
    #[arg(long)]
    batches: PathBuf,
    /// Batch index to inspect.
    #[arg(long, default_value_t = 0)]
    batch: usize,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize, Deserialize, Debug)]
#[serde(tag = "command", rename_all = "snake_case")]
enum ResolvedConfig {
    Generate(GenerateConfig),
    Run(RunConfig),
    Compare(CompareRunConfig),
}

#[derive(Serialize, Deserialize, Debug)]
struct GenerateConfig {
    seed: u64,
    model: Model,
    synthetic: Option<SyntheticSpec>,
    features: Option<PathBuf>,
    k: Option<usize>,
    knn_weighting: Option<KnnWeighting>,
    labeled_fraction: f64,
    stream: StreamSpec,
    substitutions: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
struct InputConfig {
    batches: Option<PathBuf>,
    graph: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
struct RunConfig {
    seed: u64,
    threads: usize,
    method: Method,
    input: InputConfig,
    engine: EngineConfig,
    snapshots: bool,
}

#[derive(Serialize, Deserialize, Debug)]
struct CompareRunConfig {
    seed: u64,
    threads: usize,
    methods: Vec<Method>,
    input: InputConfig,
    compare: CompareConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let env = env_logger::Env::new().filter_or("DYNLP_LOG", "warn");
    let mut logger = env_logger::Builder::from_env(env);
    if let Some(level) = &cli.log_level {
        logger.parse_filters(level);
    }
    logger.init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Failure::Validation("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cli.output_dir).map_err(|e| io_fail(&cli.output_dir, e))?;
    let out = cli.output_dir.as_path();
    match cli.command {
        Command::Generate(a) => cmd_generate(a, cli.seed, out),
        Command::Run(a) => cmd_run(a, cli.seed, threads, out),
        Command::Compare(a) => cmd_compare(a, cli.seed, threads, out),
        Command::Components(a) => cmd_components(a, out),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_fail(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_fail(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| io_fail(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_fail(path, e))?;
    writeln!(w).map_err(|e| io_fail(path, e))?;
    finish(w, path)
}

fn parse_fractions(s: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::Validation(format!("--fractions must look like ins:gt:del, got '{s}'"));
    let [a, b, c] = parts[..] else {
        return Err(bad());
    };
    Ok((
        a.parse().map_err(|_| bad())?,
        b.parse().map_err(|_| bad())?,
        c.parse().map_err(|_| bad())?,
    ))
}

/// Seeded choice of `fraction` of each class (at least one) as ground truth.
fn pick_ground_truth(classes: &[(VertexId, Class)], fraction: f64, seed: u64) -> Vec<(VertexId, Class)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for class in [Class::Zero, Class::One] {
        let mut members: Vec<VertexId> = classes.iter().filter(|p| p.1 == class).map(|p| p.0).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let want = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len());
        out.extend(members[..want].iter().map(|&v| (v, class)));
    }
    out.sort();
    out
}

fn cmd_generate(a: GenerateArgs, seed: u64, out: &Path) -> CliResult<()> {
    let (ins, gt, del) = parse_fractions(&a.stream.fractions)?;
    let (vertices, edges, truth, synthetic) = match a.model {
        Model::Er => {
            let spec = SyntheticSpec {
                n: a.n.expect("required by clap"),
                avg_degree: a.avg_degree,
                seed: sub_seed(seed, SEED_GRAPH),
                labeled_fraction: a.labeled,
                planted: PlantedModel::default(),
            };
            let g = erdos_renyi(&spec)?;
            let vertices: Vec<VertexId> = (0..g.n).map(VertexId::from_index).collect();
            let truth = g.ground_truth();
            (vertices, g.edges, truth, Some(spec))
        }
        Model::Knn => {
            let path = a.features.as_deref().expect("required by clap");
            let features = io::read_features(open(path)?, !a.unlabeled_features)?;
            let weighting = match a.knn_weighting {
                WeightingArg::Prune => KnnWeighting::Prune,
                WeightingArg::Affine => KnnWeighting::Affine,
            };
            let edges = knn_graph(&features, a.k, weighting)?;
            let truth = match features.true_labels() {
                Some(l) => {
                    let all: Vec<(VertexId, Class)> = features.item_ids().iter().copied().zip(l.iter().copied()).collect();
                    pick_ground_truth(&all, a.labeled, sub_seed(seed, SEED_GROUND_TRUTH))
                }
                None => Vec::new(),
            };
            (features.item_ids().to_vec(), edges, truth, None)
        }
    };

    let free = vertices.len() - truth.len();
    let batch_size = match a.stream.batch_size {
        Some(b) => b,
        None => {
            let per_batch = free.div_ceil(a.stream.num_batches.max(1)).max(1);
            ((per_batch as f64 / ins.max(f64::MIN_POSITIVE)).round() as usize).max(1)
        }
    };
    let mut spec = StreamSpec {
        batch_size,
        insert_fraction: ins,
        gt_fraction: gt,
        delete_fraction: del,
        seed: sub_seed(seed, SEED_STREAM),
        initial_gt_count: 0,
        num_batches: None,
    };
    spec.validate()?;
    if spec.counts().0 == 0 {
        spec.num_batches = Some(a.stream.num_batches);
    }
    spec.initial_gt_count = a.stream.initial_gt.unwrap_or((truth.len() / 5).max(2).min(truth.len()));
    let stream = make_stream(&vertices, &edges, &truth, &spec)?;

    // graph.txt uses dense indices; kNN ids are remapped in ascending order
    let mut sorted = vertices.clone();
    sorted.sort_unstable();
    let dense = |v: VertexId| VertexId::from_index(sorted.binary_search(&v).expect("known vertex"));
    let dense_edges: Vec<WeightedEdge> = edges
        .iter()
        .map(|e| WeightedEdge {
            u: dense(e.u),
            v: dense(e.v),
            w: e.w,
        }
        .normalized())
        .collect();
    let dense_truth: Vec<(VertexId, Class)> = truth.iter().map(|&(v, c)| (dense(v), c)).collect();
    let ids_are_dense = sorted.iter().enumerate().all(|(i, v)| v.index() == i);
    if !ids_are_dense {
        log::warn!("feature ids are not 0..N; graph.txt and ground_truth.csv use ascending-rank ids, batches.jsonl keeps the source ids");
    }

    let p = out.join("graph.txt");
    let mut w = create(&p)?;
    io::write_graph(&mut w, sorted.len(), &dense_edges)?;
    finish(w, &p)?;
    let p = out.join("ground_truth.csv");
    let mut w = create(&p)?;
    io::write_ground_truth(&mut w, &dense_truth)?;
    finish(w, &p)?;
    let p = out.join("batches.jsonl");
    let mut w = create(&p)?;
    io::write_batches(&mut w, &stream.batches)?;
    finish(w, &p)?;

    let config = ResolvedConfig::Generate(GenerateConfig {
        seed,
        model: a.model,
        synthetic,
        features: a.features.clone(),
        k: (a.model == Model::Knn).then_some(a.k),
        knn_weighting: (a.model == Model::Knn).then_some(match a.knn_weighting {
            WeightingArg::Prune => KnnWeighting::Prune,
            WeightingArg::Affine => KnnWeighting::Affine,
        }),
        labeled_fraction: a.labeled,
        stream: spec,
        substitutions: stream.substitutions,
    });
    write_json(&out.join("config.json"), &config)?;
    log::info!(
        "generated {} vertices, {} edges, {} batches",
        vertices.len(),
        edges.len(),
        stream.batches.len()
    );
    Ok(())
}

fn engine_config(a: &EngineArgs) -> CliResult<EngineConfig> {
    let tau = if a.tau == "auto" {
        Tau::Auto
    } else {
        Tau::Fixed(
            a.tau
                .parse()
                .map_err(|_| Failure::Validation(format!("--tau must be a number or 'auto', got '{}'", a.tau)))?,
        )
    };
    let cfg = EngineConfig {
        delta: a.delta,
        tau,
        max_iterations: a.max_iterations,
        mode: match a.mode {
            ModeArg::Jacobi => Schedule::ParallelJacobi,
            ModeArg::GaussSeidel => Schedule::SequentialGaussSeidel,
        },
        initialization: match a.init {
            InitArg::Components => Initialization::ComponentWeights,
            InitArg::Neutral => Initialization::Neutral,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn absolute(p: &Option<PathBuf>) -> Option<PathBuf> {
    p.as_ref().map(|p| std::fs::canonicalize(p).unwrap_or_else(|_| p.clone()))
}

fn input_config(a: &InputArgs) -> CliResult<InputConfig> {
    if a.batches.is_none() && a.graph.is_none() {
        return Err(Failure::Validation(
            "an input is required: --batches FILE, or --graph FILE --ground-truth FILE".into(),
        ));
    }
    Ok(InputConfig {
        batches: absolute(&a.batches),
        graph: absolute(&a.graph),
        ground_truth: absolute(&a.ground_truth),
    })
}

fn load_stream(input: &InputConfig) -> CliResult<Vec<BatchUpdate>> {
    if let Some(path) = &input.batches {
        return Ok(io::read_batches(open(path)?)?);
    }
    let (Some(gp), Some(tp)) = (&input.graph, &input.ground_truth) else {
        return Err(Failure::Validation("missing input files".into()));
    };
    let graph = io::read_graph(open(gp)?)?;
    let truth = io::read_ground_truth(open(tp)?)?;
    let mut gt = vec![None; graph.n];
    for (v, c) in truth {
        if v.index() >= graph.n {
            return Err(Failure::Validation(format!("ground-truth vertex {v} is outside the graph")));
        }
        gt[v.index()] = Some(c);
    }
    let mut inserts: Vec<InsertRecord> = (0..graph.n)
        .map(|i| InsertRecord {
            id: VertexId::from_index(i),
            ground_truth: gt[i],
            edges: Vec::new(),
        })
        .collect();
    for e in &graph.edges {
        inserts[e.v.index()].edges.push((e.u, e.w));
    }
    Ok(vec![BatchUpdate {
        t: 0,
        inserts,
        deletes: Vec::new(),
    }])
}

fn check_dense_cap(methods: &[Method], stream: &[BatchUpdate]) -> CliResult<()> {
    if methods.iter().any(|m| m.is_dense()) {
        let peak = peak_unlabeled(stream);
        if peak > dynlp::baselines::HARMONIC_SIZE_CAP {
            return Err(Failure::Validation(format!(
                "refusing stlp/oracle: {peak} unlabeled vertices exceed the dense-solve cap of {}",
                dynlp::baselines::HARMONIC_SIZE_CAP
            )));
        }
    }
    Ok(())
}

fn cmd_run(a: RunArgs, seed: u64, threads: usize, out: &Path) -> CliResult<()> {
    let config = match &a.config {
        Some(path) => {
            let resolved: ResolvedConfig =
                serde_json::from_reader(open(path)?).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            match resolved {
                ResolvedConfig::Run(mut c) => {
                    c.threads = threads;
                    c
                }
                _ => return Err(Failure::Validation(format!("{} is not a run config", path.display()))),
            }
        }
        None => RunConfig {
            seed,
            threads,
            method: a.method.expect("required by clap").into(),
            input: input_config(&a.input)?,
            engine: engine_config(&a.engine)?,
            snapshots: a.snapshots,
        },
    };
    config.engine.validate()?;
    let stream = load_stream(&config.input)?;
    check_dense_cap(&[config.method], &stream)?;

    let mut runner = new_method(config.method, config.engine)?;
    let mut report = RunReport::new(
        config.method,
        serde_json::to_value(&config).map_err(|e| Failure::Validation(e.to_string()))?,
    );
    for b in &stream {
        let r = runner.apply_batch(b)?;
        if !r.converged {
            log::warn!("batch {} did not converge", b.t);
        }
        report.push(&r);
        if config.snapshots {
            let p = out.join(format!("labels_t{}.csv", b.t));
            let mut w = create(&p)?;
            io::write_labels(&mut w, runner.graph(), runner.labels())?;
            finish(w, &p)?;
        }
    }
    let p = out.join("labels.csv");
    let mut w = create(&p)?;
    io::write_labels(&mut w, runner.graph(), runner.labels())?;
    finish(w, &p)?;
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("config.json"), &ResolvedConfig::Run(config))?;
    Ok(())
}

fn cmd_compare(a: CompareArgs, seed: u64, threads: usize, out: &Path) -> CliResult<()> {
    let mut methods: Vec<Method> = Vec::new();
    for m in &a.methods {
        let m = Method::from(*m);
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let stream = load_stream(&input_config(&a.input)?)?;
    let reference = match a.reference {
        None if peak_unlabeled(&stream) > dynlp::baselines::HARMONIC_SIZE_CAP => {
            log::warn!("graph exceeds the dense-solve cap; skipping the default stlp accuracy reference");
            None
        }
        None => Some(Method::Stlp),
        Some(ReferenceArg::None) => None,
        Some(ReferenceArg::Dynlp) => Some(Method::Dynlp),
        Some(ReferenceArg::Itlp) => Some(Method::Itlp),
        Some(ReferenceArg::Stlp) => Some(Method::Stlp),
        Some(ReferenceArg::Oracle) => Some(Method::Oracle),
    };
    let config = CompareRunConfig {
        seed,
        threads,
        methods: methods.clone(),
        input: input_config(&a.input)?,
        compare: CompareConfig {
            engine: engine_config(&a.engine)?,
            reference,
            epsilon_margin: a.epsilon,
        },
    };
    let mut all = methods.clone();
    all.extend(reference);
    check_dense_cap(&all, &stream)?;
    let cmp = compare_methods(&stream, &methods, &config.compare)?;

    let p = out.join("runs.csv");
    let mut w = create(&p)?;
    let wr = |w: &mut BufWriter<File>, s: String| writeln!(w, "{s}").map_err(|e| io_fail(&p, e));
    wr(&mut w, "method,batch,iterations,updates,wall_time_ms".into())?;
    for r in &cmp.reports {
        for b in &r.per_batch {
            wr(
                &mut w,
                format!("{},{},{},{},{:.3}", r.method, b.batch_index, b.iterations, b.vertex_updates, b.wall_time_ms),
            )?;
        }
    }
    finish(w, &p)?;

    let p = out.join("speedups.csv");
    let mut w = create(&p)?;
    let wr = |w: &mut BufWriter<File>, s: String| writeln!(w, "{s}").map_err(|e| io_fail(&p, e));
    wr(&mut w, "batch,method,relative_to,speedup".into())?;
    for s in &cmp.speedups {
        wr(&mut w, format!("{},{},{},{:.4}", s.batch, s.method, s.relative_to, s.speedup))?;
    }
    finish(w, &p)?;

    let p = out.join("accuracy.csv");
    let mut w = create(&p)?;
    let wr = |w: &mut BufWriter<File>, s: String| writeln!(w, "{s}").map_err(|e| io_fail(&p, e));
    wr(&mut w, "method,reference,agreement,compared,margin_excluded".into())?;
    for acc in &cmp.accuracy {
        let name = |m: Option<Method>| m.map_or_else(String::new, |m| m.to_string());
        wr(
            &mut w,
            format!(
                "{},{},{},{},{}",
                name(acc.method),
                name(acc.reference_method),
                acc.agreement,
                acc.compared_count,
                acc.margin_excluded_count
            ),
        )?;
    }
    finish(w, &p)?;

    write_json(&out.join("comparison.json"), &cmp)?;
    write_json(&out.join("config.json"), &ResolvedConfig::Compare(config))?;
    Ok(())
}

fn cmd_components(a: ComponentsArgs, out: &Path) -> CliResult<()> {
    let engine = engine_config(&a.engine)?;
    let stream = io::read_batches(open(&a.batches)?)?;
    let Some(target) = stream.get(a.batch) else {
        return Err(Failure::Validation(format!(
            "batch index {} out of range (stream has {})",
            a.batch,
            stream.len()
        )));
    };
    let mut graph = dynlp::DynamicGraph::new();
    for b in &stream[..=a.batch] {
        graph.apply_batch(b)?;
    }
    let mut vertices: Vec<VertexId> = target
        .inserts
        .iter()
        .filter(|r| r.ground_truth.is_none())
        .map(|r| r.id)
        .collect();
    vertices.sort_unstable();
    let edges: Vec<WeightedEdge> = target
        .merged_edges()
        .into_iter()
        .filter(|e| vertices.binary_search(&e.u).is_ok() && vertices.binary_search(&e.v).is_ok())
        .collect();
    let tau = match engine.tau {
        Tau::Fixed(t) => t,
        Tau::Auto => dynlp::default_tau(&graph).unwrap_or(0.0),
    };
    let labeling = dynlp::find_components(&IntraBatchGraph::new(vertices, &edges, tau)?);
    let p = out.join("components.csv");
    let mut w = create(&p)?;
    io::write_components(&mut w, &labeling)?;
    finish(w, &p)?;
    Ok(())
}

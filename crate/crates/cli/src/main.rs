use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use honor_core::artifacts::{loss_history_to_csv, matrix_to_csv};
use honor_core::evaluation::{classify, cluster};
use honor_core::hsbm::generate_hsbm;
use honor_core::hypergraph::parse_features_csv;
use honor_core::lab::{run_eigvec_scaling, run_separation_grid, run_similarity_shift, run_view_information};
use honor_core::{
    gradient_check, heterophily_report, load_hypergraph, train_observed, Activation, EdgelistOptions, Filter,
    Hypergraph, InputFormat, PairNormalizer, TrainingContext,
};
use serde_json::json;

use honor_cli::config::RunConfig;
use honor_cli::manifest::OutputDir;
use honor_cli::plots::{line_chart, Series};

/// Relative finite-difference error above which `gradcheck` exits non-zero.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "honor", version, about = "Heterophily-aware hypergraph contrastive learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label entropy and pairwise heterophily ratio of a labeled hypergraph.
    Metrics(MetricsArgs),
    /// Self-supervised training; writes embeddings, loss history and model.
    Train(TrainArgs),
    /// Linear-probe classification and k-means clustering of embeddings.
    Eval(EvalArgs),
    /// Sample a two-community hypergraph stochastic block model.
    Hsbm(HsbmArgs),
    /// Directional block-model checks with summary tables and plots.
    HsbmVerify(VerifyArgs),
    /// Analytic vs central-difference gradients on a tiny fixed model.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Edgelist,
    UciZoo,
}

#[derive(Args)]
struct DataArgs {
    /// Hypergraph file.
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the extension when omitted (`.json` is
    /// JSON, `.data` is the UCI Zoo table, anything else an edgelist).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Node count for edgelist input.
    #[arg(long)]
    num_nodes: Option<usize>,
    /// Header-free feature CSV for edgelist input.
    #[arg(long)]
    features: Option<PathBuf>,
    /// One integer label per line for edgelist input.
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Hypergraph> {
        let format = self.format.unwrap_or_else(|| match self.data.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("data") => Format::UciZoo,
            _ => Format::Edgelist,
        });
        let format = match format {
            Format::Json => InputFormat::Json,
            Format::UciZoo => InputFormat::UciZoo,
            Format::Edgelist => InputFormat::Edgelist(EdgelistOptions {
                num_nodes: self.num_nodes.context("edgelist input needs --num-nodes")?,
                features: self.features.clone(),
                labels: self.labels.clone(),
            }),
        };
        load_hypergraph(&self.data, &format).with_context(|| format!("loading {}", self.data.display()))
    }

    fn inputs(&self) -> Vec<PathBuf> {
        std::iter::once(self.data.clone())
            .chain(self.features.clone())
            .chain(self.labels.clone())
            .collect()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Normalizer {
    Ordered,
    Unordered,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "ordered")]
    normalizer: Normalizer,
    /// Also write `metrics.json` and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Elu,
    Relu,
    Identity,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Elu => Activation::Elu,
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Identity => Activation::Identity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    HighPass,
    LowPass,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON run configuration; flags below override its `train` section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Per-layer high-pass strengths; also sets the layer count.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    /// Separate encoder weights for the second view.
    #[arg(long)]
    untie_views: bool,
    /// Print a progress record every this many epochs.
    #[arg(long, default_value_t = 10)]
    log_every: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Task {
    Classify,
    Cluster,
    All,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Header-free CSV whose first N rows are node embeddings.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    task: Task,
    /// Seed for both splits and k-means.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HsbmArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    edge_size: Option<usize>,
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Experiment {
    Separation,
    Eigvec,
    Information,
    Similarity,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON run configuration; only the `lab` section is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Use seeds `0..n`.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Experiments to run; all when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    experiments: Vec<Experiment>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
    #[arg(long)]
    untie_views: bool,
    #[arg(long)]
    zero_features: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(record: serde_json::Value) {
    println!("{record}");
}

fn run_metrics(args: MetricsArgs) -> Result<()> {
    let start = Instant::now();
    let hg = args.data.load()?;
    let normalizer = match args.normalizer {
        Normalizer::Ordered => PairNormalizer::Ordered,
        Normalizer::Unordered => PairNormalizer::Unordered,
    };
    let report = heterophily_report(&hg, normalizer)?;
    let record = json!({
        "event": "metrics",
        "label_entropy": report.label_entropy,
        "pairwise_ratio": report.pairwise_ratio,
        "normalizer": normalizer,
        "num_nodes": hg.num_nodes(),
        "num_hyperedges": hg.num_hyperedges(),
        "skipped_hyperedges": report.skipped_hyperedges,
    });
    if let Some(out) = &args.out {
        let mut dir = OutputDir::create(out)?;
        dir.write_json("metrics.json", &report)?;
        dir.finish("metrics", json!({ "normalizer": normalizer }), args.data.inputs(), None, start.elapsed())?;
    }
    emit(record);
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(args.config.as_deref())?.train;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = args.hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = args.gamma {
        cfg.num_layers = v.len();
        cfg.gamma = v;
    }
    if let Some(v) = args.tau {
        cfg.tau = v;
    }
    if let Some(v) = args.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = args.lambda2 {
        cfg.lambda2 = v;
    }
    if let Some(v) = args.lambda3 {
        cfg.lambda3 = v;
    }
    if let Some(v) = args.dropout {
        cfg.dropout_rate = v;
    }
    if let Some(v) = args.activation {
        cfg.activation = v.into();
    }
    if let Some(v) = args.filter {
        cfg.filter = match v {
            FilterArg::HighPass => Filter::HighPass,
            FilterArg::LowPass => Filter::LowPass,
        };
    }
    cfg.untie_views |= args.untie_views;
    cfg.validate()?;

    let hg = args.data.load()?;
    let ctx = TrainingContext::new(&hg)?;
    let log_every = args.log_every.max(1);
    let epochs = cfg.epochs;
    let trained = train_observed(&ctx, &cfg, |epoch, r| {
        if epoch % log_every == 0 || epoch == 1 || epoch == epochs {
            emit(json!({
                "event": "epoch",
                "epoch": epoch,
                "total": r.total,
                "contrast": r.contrast,
                "decouple": r.decouple,
                "cov": r.cov,
            }));
        }
    })?;

    let mut dir = OutputDir::create(&args.out)?;
    let emb = dir.write("embeddings.csv", &matrix_to_csv(trained.final_embeddings.z.view()))?;
    dir.write("loss_history.csv", &loss_history_to_csv(&trained.loss_history))?;
    dir.write_json("model.json", &trained.model)?;
    let manifest = dir.finish(
        "train",
        serde_json::to_value(&cfg)?,
        args.data.inputs(),
        Some(cfg.seed),
        start.elapsed(),
    )?;
    let last = trained.loss_history.last().expect("at least one epoch");
    emit(json!({
        "event": "done",
        "command": "train",
        "final_loss": last.total,
        "num_entities": trained.final_embeddings.z.nrows(),
        "embedding_dim": trained.final_embeddings.z.ncols(),
        "embeddings": emb,
        "manifest": manifest,
    }));
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.classify.seed = seed;
        cfg.cluster.seed = seed;
    }
    if let Some(v) = args.splits {
        cfg.classify.splits = v;
    }
    if let Some(v) = args.runs {
        cfg.cluster.runs = v;
    }
    let hg = args.data.load()?;
    let labels = hg.require_labels()?;
    let text = std::fs::read_to_string(&args.embeddings)
        .with_context(|| format!("reading {}", args.embeddings.display()))?;
    let z = parse_features_csv(&text)?;
    let n = hg.num_nodes();
    if z.nrows() < n {
        bail!("embeddings have {} rows but the hypergraph has {n} nodes", z.nrows());
    }
    let nodes = z.slice(ndarray::s![..n, ..]);

    let classify_report = matches!(args.task, Task::Classify | Task::All)
        .then(|| classify(nodes, labels, &cfg.classify))
        .transpose()?;
    let cluster_report = matches!(args.task, Task::Cluster | Task::All)
        .then(|| cluster(nodes, labels, &cfg.cluster))
        .transpose()?;
    let record = json!({
        "event": "eval",
        "accuracy_mean": classify_report.as_ref().map(|r| r.accuracy_mean),
        "accuracy_std": classify_report.as_ref().map(|r| r.accuracy_std),
        "nmi_mean": cluster_report.as_ref().and_then(|r| r.nmi_mean),
        "ari_mean": cluster_report.as_ref().map(|r| r.ari_mean),
    });
    if let Some(out) = &args.out {
        let mut dir = OutputDir::create(out)?;
        dir.write_json("eval.json", &json!({ "classify": classify_report, "cluster": cluster_report }))?;
        let mut inputs = args.data.inputs();
        inputs.push(args.embeddings.clone());
        dir.finish(
            "eval",
            json!({ "classify": cfg.classify, "cluster": cfg.cluster }),
            inputs,
            Some(cfg.classify.seed),
            start.elapsed(),
        )?;
    }
    emit(record);
    Ok(())
}

fn run_hsbm(args: HsbmArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(args.config.as_deref())?.hsbm;
    if let Some(v) = args.nodes {
        cfg.num_nodes = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.edge_size {
        cfg.edge_size = v;
    }
    if let Some(v) = args.edges {
        cfg.num_edges = v;
    }
    if let Some(v) = args.feature_dim {
        cfg.feature_dim = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let hg = generate_hsbm(&cfg)?;
    let report = heterophily_report(&hg, PairNormalizer::Ordered)?;
    let mut dir = OutputDir::create(&args.out)?;
    let path = dir.write("hypergraph.json", &hg.to_json_string())?;
    dir.finish("hsbm", serde_json::to_value(&cfg)?, Vec::new(), Some(cfg.seed), start.elapsed())?;
    emit(json!({
        "event": "done",
        "command": "hsbm",
        "hypergraph": path,
        "num_nodes": hg.num_nodes(),
        "num_hyperedges": hg.num_hyperedges(),
        "label_entropy": report.label_entropy,
        "pairwise_ratio": report.pairwise_ratio,
    }));
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let start = Instant::now();
    let mut lab = RunConfig::load(args.config.as_deref())?.lab;
    if let Some(n) = args.seeds {
        lab.seeds = (0..n).collect();
    }
    if let Some(e) = args.epochs {
        lab.train.epochs = e;
    }
    lab.train.validate()?;
    let wanted = |e: Experiment| args.experiments.is_empty() || args.experiments.contains(&e);
    let mut dir = OutputDir::create(&args.out)?;
    let mut summary = serde_json::Map::new();

    if wanted(Experiment::Separation) {
        emit(json!({ "event": "experiment", "name": "separation" }));
        let s = run_separation_grid(&lab)?;
        let mut csv = String::from("seed,alpha,beta,ratio,separation,snr,initial_separation\n");
        for p in &s.points {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                p.seed,
                p.alpha,
                p.beta,
                p.ratio,
                p.separation,
                fmt_opt(p.snr),
                p.initial_separation
            )?;
        }
        dir.write("separation.csv", &csv)?;
        let series: Vec<Series> = lab
            .seeds
            .iter()
            .map(|&seed| Series {
                label: format!("seed {seed}"),
                points: s.points.iter().filter(|p| p.seed == seed).map(|p| (p.ratio, p.separation)).collect(),
            })
            .collect();
        let plot = dir.path("separation.svg");
        line_chart(&plot, "Class separation vs community contrast", "(α−β)/β", "separation", &series)?;
        dir.register(plot);
        emit(json!({ "event": "result", "name": "separation", "median_rho": s.median_rho, "rho_per_seed": s.rho_per_seed }));
        summary.insert("separation".into(), serde_json::to_value(&s)?);
    }

    if wanted(Experiment::Eigvec) {
        emit(json!({ "event": "experiment", "name": "eigvec" }));
        let s = run_eigvec_scaling(&lab)?;
        let mut csv = String::from("seed,num_nodes,error,gap_reference,gap_weighted,phi_min,alpha_min\n");
        for p in &s.points {
            let r = &p.report;
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                p.seed,
                p.num_nodes,
                fmt_opt(r.perturbation.error),
                r.perturbation.gap_reference,
                r.perturbation.gap_weighted,
                r.phi_min,
                r.alpha_min
            )?;
        }
        dir.write("eigvec.csv", &csv)?;
        let series = vec![Series {
            label: "median over seeds".into(),
            points: s.medians.iter().filter_map(|&(n, m)| m.map(|m| (n as f64, m))).collect(),
        }];
        let plot = dir.path("eigvec_error.svg");
        line_chart(&plot, "Second-eigenvector perturbation vs size", "N", "‖û₂ − u₂‖", &series)?;
        dir.register(plot);
        emit(json!({ "event": "result", "name": "eigvec", "medians": s.medians, "non_increasing": s.non_increasing }));
        summary.insert("eigvec".into(), serde_json::to_value(&s)?);
    }

    if wanted(Experiment::Information) {
        emit(json!({ "event": "experiment", "name": "information" }));
        let s = run_view_information(&lab)?;
        let mut csv = String::from("seed,acc_fused,acc_view1,acc_view2\n");
        for (seed, v) in lab.seeds.iter().zip(&s.per_seed) {
            writeln!(csv, "{seed},{},{},{}", v.acc_fused, v.acc_view1, v.acc_view2)?;
        }
        dir.write("information.csv", &csv)?;
        emit(json!({
            "event": "result",
            "name": "information",
            "mean_fused": s.mean_fused,
            "mean_best_single": s.mean_best_single,
        }));
        summary.insert("information".into(), serde_json::to_value(&s)?);
    }

    if wanted(Experiment::Similarity) {
        emit(json!({ "event": "experiment", "name": "similarity" }));
        let s = run_similarity_shift(&lab)?;
        let mut csv = String::from("seed,stage,mean,variance,entropy\n");
        for r in &s.runs {
            for (stage, st) in [("raw", &r.raw), ("initial", &r.initial), ("trained", &r.trained)] {
                writeln!(csv, "{},{stage},{},{},{}", r.seed, st.mean, st.variance, st.entropy)?;
            }
        }
        dir.write("similarity.csv", &csv)?;
        emit(json!({
            "event": "result",
            "name": "similarity",
            "initial": s.mean_initial,
            "trained": s.mean_trained,
        }));
        summary.insert("similarity".into(), serde_json::to_value(&s)?);
    }

    dir.write_json("summary.json", &summary)?;
    let manifest = dir.finish("hsbm-verify", serde_json::to_value(&lab)?, Vec::new(), None, start.elapsed())?;
    emit(json!({ "event": "done", "command": "hsbm-verify", "manifest": manifest }));
    Ok(())
}

fn run_gradcheck(args: GradcheckArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(args.config.as_deref())?.gradcheck;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.activation {
        cfg.activation = v.into();
    }
    cfg.untie_views |= args.untie_views;
    cfg.zero_features |= args.zero_features;
    let report = gradient_check(&cfg)?;
    if let Some(out) = &args.out {
        let mut dir = OutputDir::create(out)?;
        dir.write_json("gradcheck.json", &report)?;
        dir.finish("gradcheck", serde_json::to_value(&cfg)?, Vec::new(), Some(cfg.seed), start.elapsed())?;
    }
    let passed = report.all_finite && report.max_relative_error < GRADCHECK_TOLERANCE;
    emit(json!({
        "event": "gradcheck",
        "max_relative_error": report.max_relative_error,
        "all_finite": report.all_finite,
        "tolerance": GRADCHECK_TOLERANCE,
        "passed": passed,
        "blocks": report.blocks,
    }));
    if !passed {
        bail!("gradient check failed: max relative error {}", report.max_relative_error);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Metrics(a) => run_metrics(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Hsbm(a) => run_hsbm(a),
        Command::HsbmVerify(a) => run_verify(a),
        Command::Gradcheck(a) => run_gradcheck(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "event": "error", "message": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}

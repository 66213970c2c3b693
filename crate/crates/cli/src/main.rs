use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use churnkit::causal::{
    estimate_ate_ipw, estimate_ate_linear, naive_difference, refute_random_common_cause, CausalGraph,
    EffectEstimate, GraphSpec, RefutationResult,
};
use churnkit::data::{apply_inclusion_criteria, read_table, split, standardize, write_table, FeatureTable,
    InclusionCriteria, InclusionReport, Scaler};
use churnkit::ensemble::{soft_vote, VoteConfig, VoteMode};
use churnkit::explain::{attribute, global_importance, sample_background, FeatureImportance, ShapleyMethod};
use churnkit::metrics::{accuracy, auc, recall, roc_points, scored, write_roc_csv, TiePolicy};
use churnkit::model::{
    fit_logistic, train, Activation, LinearModel, LogisticConfig, Network, NetworkConfig, NetworkFile,
};
use churnkit::sampling::{smote, SmoteConfig};
use churnkit::synth::{default_spec, generate, true_ate, ScmSpec, TrueAte};
use churnkit::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "churnkit", version, about = "Churn propensity modeling and causal analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory; every other path is resolved against it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a structural causal model.
    Synth(SynthArgs),
    /// Inclusion, split, standardize, SMOTE and train.
    Train(TrainArgs),
    /// Score a held-out table with a trained bundle.
    Evaluate(EvaluateArgs),
    /// Backdoor-adjusted effect estimates with a refutation.
    Causal(CausalArgs),
    /// Shapley attributions for one sample or a global ranking.
    Explain(ExplainArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Use the built-in churn roster instead of --spec.
    #[arg(long, conflicts_with = "spec")]
    default: bool,
    #[arg(long, required_unless_present = "default")]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200_000)]
    mc_draws: usize,
    #[arg(long, default_value = "data.csv")]
    data: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "data.csv")]
    data: PathBuf,
    #[arg(long, requires = "balance_col")]
    tenure_col: Option<String>,
    #[arg(long, requires = "tenure_col")]
    balance_col: Option<String>,
    #[arg(long, default_value_t = 6.0)]
    min_tenure: f64,
    #[arg(long, default_value_t = 1500.0)]
    min_balance: f64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long)]
    no_smote: bool,
    #[arg(long, default_value_t = 5)]
    k_neighbors: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [64, 32, 16, 8])]
    hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values = ["tanh", "relu", "relu", "relu"])]
    activations: Vec<Act>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.0, 0.0, 0.0])]
    dropout: Vec<f64>,
    #[arg(long, default_value_t = 0.000474718)]
    learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Act {
    Tanh,
    Relu,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    #[arg(long, default_value = "test.csv")]
    data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Mode::Soft)]
    vote: Mode,
    /// Network and baseline weights for the soft vote.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
    weights: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Hard,
    Soft,
}

#[derive(Args)]
struct CausalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "data.csv")]
    data: PathBuf,
    #[arg(long, default_value = "graph.json")]
    graph: PathBuf,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    outcome: String,
    #[arg(long, value_enum, default_value_t = Which::Both)]
    estimator: Which,
    #[arg(long, default_value_t = churnkit::causal::DEFAULT_CLIP)]
    clip: f64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Which {
    Linear,
    Ipw,
    Both,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    #[arg(long, default_value = "test.csv")]
    data: PathBuf,
    #[arg(long, default_value = "train.csv")]
    background_data: PathBuf,
    #[arg(long, default_value_t = 100)]
    background: usize,
    #[arg(long, required_unless_present = "global", conflicts_with = "global")]
    sample: Option<usize>,
    #[arg(long)]
    global: bool,
    /// Rows explained by --global (seeded sample).
    #[arg(long, default_value_t = 200)]
    rows: usize,
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Monte-Carlo permutations instead of exact enumeration.
    #[arg(long)]
    mc: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

type Outcome<T> = std::result::Result<T, Failure>;

fn fail(code: u8, context: &str, e: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: format!("{context}: {e}"),
    }
}

fn usage(context: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| fail(2, context, e)
}

fn resolve(out: &Path, p: &Path) -> PathBuf {
    out.join(p)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| fail(2, name, e))?;
    text.push('\n');
    fs::write(out.join(name), text).map_err(|e| fail(2, name, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| fail(2, &path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| fail(2, &path.display().to_string(), e))
}

fn load(path: &Path) -> Outcome<FeatureTable> {
    read_table(path).map_err(usage("reading data"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Causal(a) => cmd_causal(a),
        Command::Explain(a) => cmd_explain(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn prepare_out(out: &Path) -> Outcome<()> {
    fs::create_dir_all(out).map_err(|e| fail(2, "creating output directory", e))
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    command: &'static str,
    seed: u64,
    n: usize,
    spec_source: String,
    mc_draws: usize,
    data: &'a Path,
    outputs: [&'static str; 3],
}

#[derive(Serialize)]
struct EffectTruth {
    treatment: String,
    outcome: String,
    #[serde(flatten)]
    ate: TrueAte,
}

fn cmd_synth(a: SynthArgs) -> Outcome<()> {
    let out = &a.common.out;
    let mut spec: ScmSpec = match &a.spec {
        Some(p) => read_json(&resolve(out, p))?,
        None => default_spec(),
    };
    spec.seed = a.common.seed;
    spec.validate().map_err(usage("spec"))?;
    let graph = spec.graph().map_err(usage("spec"))?;
    prepare_out(out)?;
    let table = generate(&spec, a.n).map_err(usage("generate"))?;
    write_table(&table, resolve(out, &a.data)).map_err(usage("writing data"))?;

    let mut truths = Vec::new();
    if let Some(label) = &spec.label {
        for v in spec.variables.iter().filter(|v| &v.name != label) {
            let ate = true_ate(&spec, &v.name, label, a.mc_draws, a.common.seed).map_err(usage("true ate"))?;
            truths.push(EffectTruth {
                treatment: v.name.clone(),
                outcome: label.clone(),
                ate,
            });
        }
    }
    write_json(out, "spec.json", &spec)?;
    write_json(out, "graph.json", &graph.to_spec())?;
    write_json(out, "true_ate.json", &truths)?;
    write_json(
        out,
        "synth_manifest.json",
        &SynthManifest {
            command: "synth",
            seed: a.common.seed,
            n: a.n,
            spec_source: match &a.spec {
                Some(p) => p.display().to_string(),
                None => "default".into(),
            },
            mc_draws: a.mc_draws,
            data: &a.data,
            outputs: ["spec.json", "graph.json", "true_ate.json"],
        },
    )
}

/// Everything `evaluate` and `explain` need to score raw rows.
#[derive(Serialize, Deserialize)]
struct ModelBundle {
    format_version: u32,
    features: Vec<String>,
    label: String,
    scaler: Scaler,
    network: NetworkFile,
    baseline: LinearModel,
}

#[derive(Serialize)]
struct SmoteRecord {
    enabled: bool,
    k_neighbors: usize,
    seed: u64,
    synthetic_rows: usize,
}

#[derive(Serialize)]
struct InclusionRecord {
    tenure_column: String,
    balance_column: String,
    min_tenure_months: f64,
    min_balance: f64,
    report: InclusionReport,
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    command: &'static str,
    seed: u64,
    data: &'a Path,
    rows_in: usize,
    inclusion: Option<InclusionRecord>,
    train_fraction: f64,
    split_seed: u64,
    train_class_counts: [usize; 2],
    test_class_counts: [usize; 2],
    standardization: &'static str,
    smote: SmoteRecord,
    network: &'a NetworkConfig,
    logistic: LogisticConfig,
    final_loss: Option<f64>,
    outputs: [&'static str; 5],
}

fn cmd_train(a: TrainArgs) -> Outcome<()> {
    let out = &a.common.out;
    let seed = a.common.seed;
    let table = load(&resolve(out, &a.data))?;
    let rows_in = table.n_rows();

    let (table, inclusion) = match (&a.tenure_col, &a.balance_col) {
        (Some(t), Some(b)) => {
            let mut c = InclusionCriteria::new(t.clone(), b.clone());
            c.min_tenure_months = a.min_tenure;
            c.min_balance = a.min_balance;
            let (kept, report) = apply_inclusion_criteria(&table, &c).map_err(|e| fail(3, "inclusion", e))?;
            let record = InclusionRecord {
                tenure_column: t.clone(),
                balance_column: b.clone(),
                min_tenure_months: a.min_tenure,
                min_balance: a.min_balance,
                report,
            };
            (kept, Some(record))
        }
        _ => (table, None),
    };

    let (train_raw, test_raw) = split(&table, a.train_fraction, seed).map_err(|e| fail(3, "split", e))?;
    let (train_std, _, scaler) = standardize(&train_raw, &test_raw).map_err(|e| fail(3, "standardize", e))?;

    let smote_seed = seed.wrapping_add(1);
    let (balanced, synthetic_rows) = if a.no_smote {
        (train_std, 0)
    } else {
        let cfg = SmoteConfig {
            k_neighbors: a.k_neighbors,
            seed: smote_seed,
        };
        let o = smote(&train_std, &cfg).map_err(|e| fail(3, "smote", e))?;
        let n = o.origins.len();
        (o.table, n)
    };

    let mut widths = vec![balanced.n_cols()];
    widths.extend(&a.hidden);
    widths.push(1);
    let net_cfg = NetworkConfig {
        layer_widths: widths,
        activations: a
            .activations
            .iter()
            .map(|x| match x {
                Act::Tanh => Activation::Tanh,
                Act::Relu => Activation::Relu,
            })
            .collect(),
        dropout_rates: a.dropout.clone(),
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: seed.wrapping_add(2),
    };
    net_cfg.validate().map_err(usage("network config"))?;
    let trained = train(&balanced, &net_cfg).map_err(|e| fail(3, "train", e))?;
    let logistic = LogisticConfig::default();
    let baseline = fit_logistic(&balanced, &logistic).map_err(|e| fail(3, "baseline", e))?;

    prepare_out(out)?;
    write_table(&train_raw, out.join("train.csv")).map_err(usage("writing train split"))?;
    write_table(&test_raw, out.join("test.csv")).map_err(usage("writing test split"))?;
    let bundle = ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        features: table.column_names().iter().map(|s| s.to_string()).collect(),
        label: table.label_name().to_string(),
        scaler,
        network: trained.network.to_file(),
        baseline: baseline.model,
    };
    write_json(out, "model.json", &bundle)?;
    write_json(out, "loss_trace.json", &trained.loss_trace)?;
    let (tr0, tr1) = train_raw.class_counts();
    let (te0, te1) = test_raw.class_counts();
    write_json(
        out,
        "train_manifest.json",
        &TrainManifest {
            command: "train",
            seed,
            data: &a.data,
            rows_in,
            inclusion,
            train_fraction: a.train_fraction,
            split_seed: seed,
            train_class_counts: [tr0, tr1],
            test_class_counts: [te0, te1],
            standardization: "population std, fitted on the training split",
            smote: SmoteRecord {
                enabled: !a.no_smote,
                k_neighbors: a.k_neighbors,
                seed: smote_seed,
                synthetic_rows,
            },
            network: &net_cfg,
            logistic,
            final_loss: trained.loss_trace.last().copied(),
            outputs: ["model.json", "loss_trace.json", "train.csv", "test.csv", "train_manifest.json"],
        },
    )
}

fn load_bundle(path: &Path) -> Outcome<(ModelBundle, Network)> {
    let bundle: ModelBundle = read_json(path)?;
    if bundle.format_version != BUNDLE_FORMAT_VERSION {
        return Err(fail(2, "model", format!("unsupported bundle version {}", bundle.format_version)));
    }
    let net = Network::from_file(bundle.network.clone()).map_err(usage("model"))?;
    Ok((bundle, net))
}

fn scaled(bundle: &ModelBundle, table: &FeatureTable) -> Outcome<FeatureTable> {
    let names: Vec<&str> = table.column_names();
    if names != bundle.features.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(fail(2, "data", "feature columns do not match the model"));
    }
    bundle.scaler.transform(table).map_err(usage("standardize"))
}

#[derive(Serialize)]
struct Scores {
    auc_strict: f64,
    auc_half: f64,
    recall: f64,
    accuracy: f64,
}

fn score_block(p: &[f64], labels: &[u8], threshold: f64) -> Outcome<Scores> {
    let s = scored(p, labels);
    let metric = |e| fail(4, "evaluate", e);
    Ok(Scores {
        auc_strict: auc(&s, TiePolicy::Strict).map_err(metric)?,
        auc_half: auc(&s, TiePolicy::Half).map_err(metric)?,
        recall: recall(&s, threshold).map_err(metric)?,
        accuracy: accuracy(&s, threshold),
    })
}

#[derive(Serialize)]
struct ClassCounts {
    non_churn: usize,
    churn: usize,
}

#[derive(Serialize)]
struct EnsembleBlock {
    config: VoteConfig,
    members: [&'static str; 2],
    recall: f64,
    accuracy: f64,
    auc_strict: Option<f64>,
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    model: &'a Path,
    data: &'a Path,
    threshold: f64,
    n_test: usize,
    class_counts: ClassCounts,
    #[serde(flatten)]
    network: Scores,
    baseline: Scores,
    ensemble: EnsembleBlock,
    roc: [&'static str; 2],
}

fn cmd_evaluate(a: EvaluateArgs) -> Outcome<()> {
    let out = &a.out;
    let (bundle, net) = load_bundle(&resolve(out, &a.model))?;
    let table = load(&resolve(out, &a.data))?;
    let (neg, pos) = table.class_counts();
    if neg == 0 || pos == 0 {
        return Err(fail(4, "evaluate", "test set contains a single class"));
    }
    let x = scaled(&bundle, &table)?;
    let p_net = net.predict_table(&x).map_err(|e| fail(4, "evaluate", e))?;
    let p_base = bundle.baseline.predict_table(&x).map_err(|e| fail(4, "evaluate", e))?;
    let labels = table.labels();

    let vote = VoteConfig {
        mode: match a.vote {
            Mode::Hard => VoteMode::Hard,
            Mode::Soft => VoteMode::Soft,
        },
        weights: a.weights.clone(),
        threshold: a.threshold,
    };
    let members = vec![p_net.clone(), p_base.clone()];
    let (ens_labels, fused) = match vote.mode {
        VoteMode::Soft => {
            let v = soft_vote(&members, &vote.weights, vote.threshold).map_err(usage("vote"))?;
            (v.labels, Some(v.fused))
        }
        VoteMode::Hard => (churnkit::ensemble::vote(&members, &vote).map_err(usage("vote"))?, None),
    };
    let ens_as_scores: Vec<f64> = ens_labels.iter().map(|&l| f64::from(l)).collect();
    let ens_scored = scored(&ens_as_scores, labels);
    let ensemble = EnsembleBlock {
        members: ["network", "baseline"],
        recall: recall(&ens_scored, 0.5).map_err(|e| fail(4, "evaluate", e))?,
        accuracy: accuracy(&ens_scored, 0.5),
        auc_strict: match &fused {
            Some(f) => Some(auc(&scored(f, labels), TiePolicy::Strict).map_err(|e| fail(4, "evaluate", e))?),
            None => None,
        },
        config: vote,
    };

    prepare_out(out)?;
    for (name, p) in [("roc.csv", &p_net), ("roc_baseline.csv", &p_base)] {
        let points = roc_points(&scored(p, labels)).map_err(|e| fail(4, "roc", e))?;
        let file = fs::File::create(out.join(name)).map_err(|e| fail(2, name, e))?;
        write_roc_csv(&points, std::io::BufWriter::new(file)).map_err(usage(name))?;
    }
    let report = EvaluateReport {
        model: &a.model,
        data: &a.data,
        threshold: a.threshold,
        n_test: table.n_rows(),
        class_counts: ClassCounts {
            non_churn: neg,
            churn: pos,
        },
        network: score_block(&p_net, labels, a.threshold)?,
        baseline: score_block(&p_base, labels, a.threshold)?,
        ensemble,
        roc: ["roc.csv", "roc_baseline.csv"],
    };
    write_json(out, "evaluate.json", &report)
}

#[derive(Serialize)]
struct CausalEntry {
    estimate: EffectEstimate,
    refutation: RefutationResult,
}

#[derive(Serialize)]
struct CausalReport<'a> {
    data: &'a Path,
    graph: &'a Path,
    seed: u64,
    treatment: &'a str,
    outcome: &'a str,
    naive_difference: f64,
    results: Vec<CausalEntry>,
}

fn causal_failure(table: &FeatureTable, g: &CausalGraph, e: Error) -> Failure {
    match e {
        Error::Identification(msg) => {
            let latent: Vec<&str> = g
                .nodes()
                .iter()
                .map(String::as_str)
                .filter(|n| table.values(n).is_err())
                .collect();
            fail(5, "identification", format!("{msg}; graph nodes absent from the data: {latent:?}"))
        }
        Error::Graph(_) | Error::Estimation(_) => fail(5, "causal", e),
        other => fail(2, "causal", other),
    }
}

fn cmd_causal(a: CausalArgs) -> Outcome<()> {
    let out = &a.common.out;
    let seed = a.common.seed;
    let table = load(&resolve(out, &a.data))?;
    let spec: GraphSpec = read_json(&resolve(out, &a.graph))?;
    let g = CausalGraph::from_spec(&spec).map_err(|e| match e {
        Error::Graph(_) => fail(5, "graph", e),
        other => fail(2, "graph", other),
    })?;
    for v in [&a.treatment, &a.outcome] {
        g.id(v).map_err(|e| causal_failure(&table, &g, e))?;
        table.values(v).map_err(usage("data"))?;
    }
    let mut results = Vec::new();
    if a.estimator != Which::Ipw {
        let est = estimate_ate_linear(&table, &g, &a.treatment, &a.outcome).map_err(|e| causal_failure(&table, &g, e))?;
        let refutation = refute_random_common_cause(&table, &g, &est, seed).map_err(|e| causal_failure(&table, &g, e))?;
        results.push(CausalEntry {
            estimate: est,
            refutation,
        });
    }
    if a.estimator != Which::Linear {
        let est = estimate_ate_ipw(&table, &g, &a.treatment, &a.outcome, a.clip).map_err(|e| causal_failure(&table, &g, e))?;
        let refutation = refute_random_common_cause(&table, &g, &est, seed).map_err(|e| causal_failure(&table, &g, e))?;
        results.push(CausalEntry {
            estimate: est,
            refutation,
        });
    }
    let naive = naive_difference(&table, &a.treatment, &a.outcome).map_err(|e| causal_failure(&table, &g, e))?;
    prepare_out(out)?;
    write_json(
        out,
        "causal.json",
        &CausalReport {
            data: &a.data,
            graph: &a.graph,
            seed,
            treatment: &a.treatment,
            outcome: &a.outcome,
            naive_difference: naive,
            results,
        },
    )
}

#[derive(Serialize)]
struct SampleExplanation<'a> {
    sample: usize,
    row_id: &'a str,
    features: &'a [String],
    feature_values: &'a [f64],
    values: Vec<f64>,
    base_value: f64,
    prediction: f64,
    std_errors: Option<Vec<f64>>,
    efficiency_gap: f64,
}

#[derive(Serialize)]
struct ExplainReport<'a> {
    model: &'a Path,
    data: &'a Path,
    background_data: &'a Path,
    background_size: usize,
    seed: u64,
    method: ShapleyMethod,
    space: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample: Option<SampleExplanation<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    explained_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<FeatureImportance>>,
}

fn cmd_explain(a: ExplainArgs) -> Outcome<()> {
    let out = &a.common.out;
    let seed = a.common.seed;
    let (bundle, net) = load_bundle(&resolve(out, &a.model))?;
    let data = load(&resolve(out, &a.data))?;
    let bg_raw = load(&resolve(out, &a.background_data))?;
    let x = scaled(&bundle, &data)?;
    let bg = sample_background(&scaled(&bundle, &bg_raw)?, a.background, seed);
    let method = match a.mc {
        Some(n) => ShapleyMethod::MonteCarlo {
            n_permutations: n,
            seed,
        },
        None => ShapleyMethod::Exact,
    };
    let mut report = ExplainReport {
        model: &a.model,
        data: &a.data,
        background_data: &a.background_data,
        background_size: bg.n_rows(),
        seed,
        method,
        space: "probability",
        sample: None,
        explained_rows: None,
        ranking: None,
    };
    if let Some(i) = a.sample {
        if i >= x.n_rows() {
            return Err(fail(2, "explain", format!("sample {i} out of range for {} rows", x.n_rows())));
        }
        let att = attribute(&net, x.row(i), &bg, method).map_err(usage("explain"))?;
        report.sample = Some(SampleExplanation {
            sample: i,
            row_id: &data.row_ids()[i],
            features: &bundle.features,
            feature_values: data.row(i),
            efficiency_gap: att.efficiency_gap(),
            values: att.values,
            base_value: att.base_value,
            prediction: att.prediction,
            std_errors: att.std_errors,
        });
    } else {
        let rows = sample_background(&x, a.rows, seed.wrapping_add(1));
        report.explained_rows = Some(rows.n_rows());
        report.ranking = Some(global_importance(&net, &rows, &bg, method).map_err(usage("explain"))?);
    }
    prepare_out(out)?;
    write_json(out, "explain.json", &report)
}

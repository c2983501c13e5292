use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ikg_kge::eval::{evaluate_classification, evaluate_ranks, ClassificationMetrics, RankMetrics, SideSelection};
use ikg_kge::generator::{gen_ikg, IkgGenSpec};
use ikg_kge::model::{load_model, save_model, Kg2eModel, ModelConfig};
use ikg_kge::ns;
use ikg_kge::pipeline::{
    predict_candidates, verify_triples, KeywordCorpus, Knowledge, Prediction, Role, RoleMap, Translator, Verdict,
    DEFAULT_K,
};
use ikg_kge::rdf::{parse, serialize, Format, Graph};
use ikg_kge::training::{evaluation_negatives, fit, split_dataset, TrainConfig, TrainReport, EVAL_SEED_SALT};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] ikg_kge::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0} triple(s) classified invalid")]
    Unverified(usize),
}

impl CliError {
    fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "parse",
            CliError::Unverified(_) => "verification-failed",
        }
    }

    fn exit_code(&self) -> u8 {
        match self.category() {
            "parse" => 2,
            "vocab" => 3,
            "train-diverged" => 4,
            "unresolved-slot" => 5,
            "verification-failed" => 6,
            _ => 7,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "ikg", version, about = "Intent knowledge graph embedding and intent translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic intent knowledge graph.
    GenIkg(GenArgs),
    /// Write the seeded train/valid/test partition of an IKG.
    Split(SplitArgs),
    /// Train a model and select classification thresholds.
    Train(TrainArgs),
    /// Classification and ranking metrics on the test split.
    Evaluate(EvaluateArgs),
    /// Rank completions of a triple with one `???`.
    Predict(PredictArgs),
    /// Classify every triple of an intent graph.
    Verify(VerifyArgs),
    /// Turn a text request into a verified network intent.
    Translate(TranslateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Turtle,
    Ntriples,
}

impl From<GraphFormat> for Format {
    fn from(f: GraphFormat) -> Self {
        match f {
            GraphFormat::Turtle => Format::TurtleSubset,
            GraphFormat::Ntriples => Format::NTriples,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = IkgGenSpec::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = IkgGenSpec::default().n_services)]
    n_services: usize,
    #[arg(long, default_value_t = IkgGenSpec::default().n_resources)]
    n_resources: usize,
    #[arg(long, default_value_t = IkgGenSpec::default().n_kpis)]
    n_kpis: usize,
    #[arg(long, default_value_t = IkgGenSpec::default().target_triples)]
    target_triples: usize,
    #[arg(long, value_enum, default_value_t = GraphFormat::Turtle)]
    format: GraphFormat,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    ikg: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory that receives train.ttl, valid.ttl and test.ttl.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    ikg: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Training report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    ikg: PathBuf,
    /// Must match the configuration used for training.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    ikg: PathBuf,
    /// One triple in Turtle syntax with the standard prefixes, e.g.
    /// `icm:PropertyExpectation icm:hasTarget ???`.
    #[arg(long)]
    triple: String,
    /// Overrides the role implied by the relation.
    #[arg(long)]
    role: Option<Role>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    intent: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    ikg: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    blueprint: PathBuf,
    #[arg(long)]
    text: String,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Network intent Turtle path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-slot report path. Also written when verification fails.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// TOML configuration file with optional `[train]` and `[model]` tables.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    train: TrainConfig,
    model: ModelConfig,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("nt") => Format::NTriples,
        _ => Format::TurtleSubset,
    }
}

fn read_graph(path: &Path) -> CliResult<Graph> {
    Ok(parse(&read(path)?, format_of(path))?)
}

fn read_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let config: Config = toml::from_str(&read(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
    config.train.validate()?;
    config.model.validate()?;
    Ok(config)
}

fn read_model(path: &Path) -> CliResult<Kg2eModel> {
    Ok(load_model(&read(path)?)?)
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let text = serde_json::to_string_pretty(value).map_err(ikg_kge::Error::from)?;
    Ok(text + "\n")
}

#[derive(Serialize)]
struct GenReport<'a> {
    spec: &'a IkgGenSpec,
    triples: usize,
    /// The target counts positive facts only; classification negatives are
    /// generated later by corruption.
    counts: &'static str,
}

fn gen_cmd(a: GenArgs) -> CliResult<()> {
    let spec = IkgGenSpec {
        seed: a.seed,
        n_services: a.n_services,
        n_resources: a.n_resources,
        n_kpis: a.n_kpis,
        target_triples: a.target_triples,
    };
    let graph = gen_ikg(&spec)?;
    write(&a.out, &serialize(&graph, a.format.into()))?;
    let report = GenReport {
        spec: &spec,
        triples: graph.len(),
        counts: "positive triples",
    };
    emit(None, &to_json(&report)?)
}

fn split_cmd(a: SplitArgs) -> CliResult<()> {
    let config = read_config(a.config.as_deref())?;
    let graph = read_graph(&a.ikg)?;
    let split = split_dataset(&graph, config.train.split, config.train.seed)?;
    fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    let mut sizes = BTreeMap::new();
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        write(&a.out_dir.join(format!("{name}.ttl")), &serialize(part, Format::TurtleSubset))?;
        sizes.insert(name, part.len());
    }
    emit(None, &to_json(&sizes)?)
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    #[serde(flatten)]
    report: &'a TrainReport,
    model: &'a ModelConfig,
    thresholds: BTreeMap<&'a str, f64>,
    fallback_threshold: f64,
}

fn train_cmd(a: TrainArgs) -> CliResult<()> {
    let config = read_config(a.config.as_deref())?;
    let graph = read_graph(&a.ikg)?;
    let fitted = fit(&graph, config.model, &config.train)?;
    write(&a.out, &save_model(&fitted.model)?)?;
    let table = fitted.model.thresholds.as_ref().expect("fit selects thresholds");
    let thresholds = table
        .per_relation
        .iter()
        .filter_map(|(&r, &th)| Some((fitted.model.vocab.relation(r)?, th)))
        .collect();
    let out = TrainOutput {
        report: &fitted.report,
        model: &fitted.model.config,
        thresholds,
        fallback_threshold: table.fallback,
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct EvalReport {
    test_triples: usize,
    classification: ClassificationMetrics,
    filtered: RankMetrics,
    raw: RankMetrics,
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult<()> {
    let config = read_config(a.config.as_deref())?;
    let model = read_model(&a.model)?;
    let graph = read_graph(&a.ikg)?;
    let split = split_dataset(&graph, config.train.split, config.train.seed)?;
    if split.vocab != model.vocab {
        return Err(ikg_kge::Error::VocabMismatch.into());
    }
    let thresholds = model
        .thresholds
        .as_ref()
        .ok_or_else(|| ikg_kge::Error::ModelFormat("model has no classification thresholds".into()))?;
    let (_, test_neg) = evaluation_negatives(&split, config.train.seed ^ EVAL_SEED_SALT)?;
    let test = split.vocab.encode_graph(&split.test)?;
    let known = split.known();
    let hits = [1, 3, 10];
    let report = EvalReport {
        test_triples: test.len(),
        classification: evaluate_classification(&model, &test, &test_neg, thresholds)?,
        filtered: evaluate_ranks(&model, &test, &known, true, SideSelection::Both, &hits)?,
        raw: evaluate_ranks(&model, &test, &known, false, SideSelection::Both, &hits)?,
    };
    emit(a.out.as_deref(), &to_json(&report)?)
}

fn prefix_header() -> String {
    ns::standard_prefixes()
        .iter()
        .map(|(p, iri)| format!("@prefix {p}: <{iri}> .\n"))
        .collect()
}

fn predict_cmd(a: PredictArgs) -> CliResult<()> {
    let model = read_model(&a.model)?;
    let ikg = read_graph(&a.ikg)?;
    let query = parse(
        &format!("{}{} .\n", prefix_header(), a.triple.trim().trim_end_matches('.')),
        Format::TurtleSubset,
    )?;
    let [triple] = query.triples() else {
        return Err(CliError::Usage(format!("expected exactly one triple, got {}", query.len())));
    };
    let role = a
        .role
        .or_else(|| RoleMap::default().by_relation.get(triple.relation_iri()).copied())
        .unwrap_or(Role::Service);
    let predictions: Vec<Prediction> = predict_candidates(&model, &ikg, triple, role, a.k)?;
    emit(None, &to_json(&predictions)?)
}

#[derive(Serialize)]
struct VerifyReport {
    verified: bool,
    triples: Vec<Verdict>,
}

fn verify_cmd(a: VerifyArgs) -> CliResult<()> {
    let model = read_model(&a.model)?;
    let intent = read_graph(&a.intent)?;
    let thresholds = model
        .thresholds
        .as_ref()
        .ok_or_else(|| ikg_kge::Error::ModelFormat("model has no classification thresholds".into()))?;
    let triples = verify_triples(&intent, &model, thresholds)?;
    let report = VerifyReport {
        verified: triples.iter().all(|v| v.valid),
        triples,
    };
    emit(a.out.as_deref(), &to_json(&report)?)?;
    match report.triples.iter().filter(|v| !v.valid).count() {
        0 => Ok(()),
        n => Err(CliError::Unverified(n)),
    }
}

fn translate_cmd(a: TranslateArgs) -> CliResult<()> {
    let model = read_model(&a.model)?;
    let ikg = read_graph(&a.ikg)?;
    let blueprint = read_graph(&a.blueprint)?;
    let mut prefixes = ns::standard_prefixes();
    prefixes.extend(ikg.prefixes().clone());
    let corpus = KeywordCorpus::parse(&read(&a.corpus)?, &prefixes, &model.vocab)?;
    let thresholds = model
        .thresholds
        .as_ref()
        .ok_or_else(|| ikg_kge::Error::ModelFormat("model has no classification thresholds".into()))?;
    let translator = Translator {
        model: &model,
        knowledge: Knowledge::new(&ikg),
        corpus: &corpus,
        blueprint: &blueprint,
        thresholds,
        k: a.k,
    };
    match translator.translate(&a.text) {
        Ok(intent) => {
            if let Some(path) = &a.report {
                write(path, &intent.report_json()?)?;
            }
            emit(a.out.as_deref(), &serialize(&intent.to_graph(&prefixes), Format::TurtleSubset))
        }
        Err(ikg_kge::Error::NotVerified(intent)) => {
            if let Some(path) = &a.report {
                write(path, &intent.report_json()?)?;
            }
            Err(ikg_kge::Error::NotVerified(intent).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenIkg(a) => gen_cmd(a),
        Command::Split(a) => split_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Translate(a) => translate_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_owned());
            eprintln!("error[{}]: {err}", err.category());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

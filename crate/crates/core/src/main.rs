use std::error::Error;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use segshap::attribution::{shapley_sampling, AttributionDocument, BackgroundKind, BackgroundSet, ExpansionMode};
use segshap::data::{compute_channel_stats, synth_bump_dataset, write_ts_file, LabeledDataset};
use segshap::evaluation::{aucd, interpret_time, EvalConfig, Perturbation};
use segshap::model::{argmax, serve_protocol, ClassifierSpec};
use segshap::runner::{
    aggregate, align_classes, entropy_report, load_dataset_file, normalization_delta_report, read_records,
    run_experiment, write_aggregates, write_entropy_rows, write_run_output, ExperimentConfig, Factor,
};
use segshap::segmentation::{segment, SegmentationConfig, SegmentationMethod};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "segshap", version, about = "Segment-based SHAP explanations for time series classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one instance (or all) of a dataset file and print the boundaries as JSON.
    Segment(SegmentArgs),
    /// List the built-in classifiers.
    Classifiers,
    /// Explain one test instance with segment-level Shapley values.
    Explain(ExplainArgs),
    /// Score an attribution produced by `explain`.
    Evaluate(EvaluateArgs),
    /// Run an experiment grid from a TOML config.
    Run(RunArgs),
    /// Aggregate a records file by factors.
    Aggregate(AggregateArgs),
    /// Normalisation-delta or segmentation-entropy report.
    Report(ReportArgs),
    /// Serve a built-in classifier over the line-delimited JSON protocol on stdin/stdout.
    Serve(ServeArgs),
    /// Write a synthetic bump dataset in .ts format.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SegmentParams {
    /// equal, binseg, bottomup, kernelcpd, infogain, greedy_gaussian, nnsegment or clasp.
    #[arg(long = "segmentation", alias = "method", default_value = "equal")]
    method: SegmentationMethod,
    #[arg(long, default_value_t = 10)]
    n_segments: usize,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_size: Option<usize>,
}

impl SegmentParams {
    fn config(&self) -> SegmentationConfig {
        let mut cfg = SegmentationConfig::new(self.method, self.n_segments);
        if let Some(p) = self.period {
            cfg.period = p;
        }
        if let Some(m) = self.min_size {
            cfg.min_size = m;
        }
        cfg.window = self.window;
        cfg
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// Channel count for CSV input.
    #[arg(long)]
    channels: Option<usize>,
    #[command(flatten)]
    params: SegmentParams,
    #[arg(long, default_value_t = 0, conflicts_with = "all")]
    instance: usize,
    /// Segment every instance and print a JSON array.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Channel count for CSV input.
    #[arg(long)]
    channels: Option<usize>,
    /// nearest_centroid, minirocket or external:<command>.
    #[arg(long, default_value = "nearest_centroid")]
    classifier: ClassifierSpec,
    /// Test instance index.
    #[arg(long, default_value_t = 0)]
    instance: usize,
}

impl DataArgs {
    fn load(&self) -> CliResult<(LabeledDataset, LabeledDataset)> {
        let train = load_dataset_file(&self.train, self.channels)?;
        let test = align_classes(&train, load_dataset_file(&self.test, self.channels)?)?;
        if self.instance >= test.len() {
            return Err(format!("instance {} out of range for {} test instances", self.instance, test.len()).into());
        }
        Ok((train, test))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundArg {
    Zero,
    Average,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: SegmentParams,
    #[arg(long, value_enum, default_value = "zero")]
    background: BackgroundArg,
    /// Spread each segment value over its timepoints instead of replicating it.
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,
    #[arg(long, default_value_t = 25)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Interprettime,
    Aucd,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Attribution JSON written by `explain` for the same instance.
    #[arg(long)]
    attribution: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long, default_value = "normal")]
    perturbation: Perturbation,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated factors: dataset, classifier, segmentation, background,
    /// normalization, perturbation, instance.
    #[arg(long, value_delimiter = ',', default_value = "dataset,classifier")]
    group_by: Vec<Factor>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Normalization,
    Entropy,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_enum)]
    kind: ReportKind,
    /// Records file, for the normalization report.
    #[arg(long, required_if_eq("kind", "normalization"))]
    input: Option<PathBuf>,
    /// Experiment config, for the entropy report.
    #[arg(long, required_if_eq("kind", "entropy"))]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, default_value = "nearest_centroid")]
    classifier: ClassifierSpec,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    n_instances: usize,
    #[arg(long, default_value_t = 1)]
    channels: usize,
    #[arg(long, default_value_t = 100)]
    length: usize,
    #[arg(long, default_value_t = 2)]
    n_classes: usize,
    #[arg(long, default_value_t = 10)]
    bump_width: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()).into()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialisable") + "\n"
}

fn cmd_segment(args: SegmentArgs) -> CliResult<()> {
    let ds = load_dataset_file(&args.input, args.channels)?;
    let cfg = args.params.config();
    let json = if args.all {
        let segs = ds.instances().iter().map(|x| segment(x, &cfg)).collect::<Result<Vec<_>, _>>()?;
        to_json(&segs)
    } else {
        let x = ds.instances().get(args.instance).ok_or("instance out of range")?;
        to_json(&segment(x, &cfg)?)
    };
    emit(args.out.as_deref(), &json)
}

fn cmd_classifiers() {
    println!("nearest_centroid  softmax over negative scaled distances to class centroids");
    println!("minirocket        84 fixed kernels with dyadic dilations, PPV features, ridge classifier");
    println!("external:<cmd>    a process speaking the line-delimited JSON protocol");
}

fn cmd_explain(args: ExplainArgs) -> CliResult<()> {
    let (train, test) = args.data.load()?;
    let model = args.data.classifier.build(&train)?;
    let x = &test.instances()[args.data.instance];
    let seg = segment(x, &args.params.config())?;
    let kind = match args.background {
        BackgroundArg::Zero => BackgroundKind::Zero,
        BackgroundArg::Average => BackgroundKind::Average,
    };
    let background = BackgroundSet::build(kind, &train)?;
    let class = argmax(&model.predict_proba(std::slice::from_ref(x))?[0]);
    let attr = shapley_sampling(model.as_ref(), x, &seg, &background, class, args.permutations, args.seed)?;
    let mode = if args.normalize && !args.no_normalize { ExpansionMode::Normalized } else { ExpansionMode::Replicated };
    let doc = AttributionDocument::new(&attr, &mode.expand(&attr));
    emit(args.out.as_deref(), &to_json(&doc))
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let (train, test) = args.data.load()?;
    let model = args.data.classifier.build(&train)?;
    let x = &test.instances()[args.data.instance];
    let text = std::fs::read_to_string(&args.attribution)
        .map_err(|e| format!("cannot read {}: {e}", args.attribution.display()))?;
    let doc: AttributionDocument = serde_json::from_str(&text)?;
    let attr = doc.timepoint_attribution()?;
    let cfg = EvalConfig::with_seed(args.seed);
    let json = match args.metric {
        MetricArg::Interprettime => {
            let stats = compute_channel_stats(&train)?;
            to_json(&interpret_time(model.as_ref(), x, &attr, args.perturbation, &stats, &cfg)?)
        }
        MetricArg::Aucd => to_json(&aucd(model.as_ref(), x, &attr, &train, &cfg)?),
    };
    emit(args.out.as_deref(), &json)
}

fn cmd_run(args: RunArgs) -> CliResult<ExitCode> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let dir = args
        .out
        .or_else(|| cfg.out_dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .ok_or("no output directory: pass --out or set out_dir")?;
    let output = run_experiment(&cfg)?;
    write_run_output(&output, &dir)?;
    eprintln!(
        "{} records ({} values, {} skipped) written to {}",
        output.records.len(),
        output.n_values,
        output.n_skipped,
        dir.join("records.csv").display()
    );
    Ok(if output.n_skipped > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn read_records_file(path: &Path) -> CliResult<Vec<segshap::runner::ResultRecord>> {
    let file = std::fs::File::open(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(read_records(std::io::BufReader::new(file))?)
}

fn cmd_aggregate(args: AggregateArgs) -> CliResult<()> {
    let records = read_records_file(&args.input)?;
    let rows = aggregate(&records, &args.group_by)?;
    let mut buf = Vec::new();
    write_aggregates(&args.group_by, &rows, &mut buf)?;
    emit(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let mut buf = Vec::new();
    match args.kind {
        ReportKind::Normalization => {
            let records = read_records_file(args.input.as_deref().expect("required by clap"))?;
            let rows = normalization_delta_report(&records)?;
            write_aggregates(&[Factor::Dataset, Factor::Segmentation], &rows, &mut buf)?;
        }
        ReportKind::Entropy => {
            let cfg = ExperimentConfig::load(args.config.as_deref().expect("required by clap"))?;
            write_entropy_rows(&entropy_report(&cfg)?, &mut buf)?;
        }
    }
    emit(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn cmd_serve(args: ServeArgs) -> CliResult<()> {
    if matches!(args.classifier, ClassifierSpec::External(_)) {
        return Err("serve needs a built-in classifier".into());
    }
    let train = load_dataset_file(&args.train, args.channels)?;
    let model = args.classifier.build(&train)?;
    let stdin = std::io::stdin();
    serve_protocol(model.as_ref(), stdin.lock(), std::io::stdout().lock())?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let ds = synth_bump_dataset(
        args.n_instances,
        args.channels,
        args.length,
        args.n_classes,
        args.bump_width,
        args.noise_std,
        args.seed,
    )?;
    emit(args.out.as_deref(), &write_ts_file(&ds, "SyntheticBumps"))
}

fn dispatch(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Segment(a) => cmd_segment(a)?,
        Command::Classifiers => cmd_classifiers(),
        Command::Explain(a) => cmd_explain(a)?,
        Command::Evaluate(a) => cmd_evaluate(a)?,
        Command::Run(a) => return cmd_run(a),
        Command::Aggregate(a) => cmd_aggregate(a)?,
        Command::Report(a) => cmd_report(a)?,
        Command::Serve(a) => cmd_serve(a)?,
        Command::Synth(a) => cmd_synth(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use disco_core::config::parse_kv;
use disco_core::corpus::{corpus_stats, generate_corpus, generate_split, load_corpus, save_corpus, AnnotatedSentence, GenConfig};
use disco_core::crf::{train_crf, CrfTagger, Heuristic};
use disco_core::eval::score;
use disco_core::hypergraph::SegmentalHypergraph;
use disco_core::pipeline::{train, Checkpoint, Embeddings, JointModel, ModelKind, TrainConfig};

#[derive(Parser)]
#[command(name = "disco", version, about = "Discontiguous and overlapping entity recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic annotated corpus.
    GenData(GenDataArgs),
    /// Train the joint extraction and merging model.
    Train(TrainArgs),
    /// Tag a corpus with a trained checkpoint.
    Predict(PredictArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Train or apply the linear-chain CRF baseline.
    #[command(subcommand)]
    BaselineCrf(CrfCommand),
    /// Print the hypergraph of a sentence, one edge per line.
    InspectHypergraph(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Synthetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Enough,
    All,
}

impl From<HeuristicArg> for Heuristic {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::Enough => Heuristic::Enough,
            HeuristicArg::All => Heuristic::All,
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Output file; with --split, a directory receiving train/dev/test.jsonl.
    #[arg(long)]
    out: PathBuf,
    /// key=value generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sentences: Option<usize>,
    /// Sizes of a train,dev,test split drawn from one stream.
    #[arg(long, value_delimiter = ',', value_name = "TRAIN,DEV,TEST")]
    split: Option<Vec<usize>>,
}

#[derive(Args)]
struct ModelConfigArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    preset: Preset,
    /// key=value training settings applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Text embeddings: a word followed by its values on each line.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[command(flatten)]
    model: ModelConfigArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Decoding heuristic for CRF checkpoints.
    #[arg(long, value_enum, default_value = "enough")]
    heuristic: HeuristicArg,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum CrfCommand {
    Train(CrfTrainArgs),
    Predict(PredictArgs),
}

#[derive(Args)]
struct CrfTrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Heuristic used to score the dev set during training.
    #[arg(long, value_enum, default_value = "enough")]
    heuristic: HeuristicArg,
    #[command(flatten)]
    model: ModelConfigArgs,
}

#[derive(Args)]
struct InspectArgs {
    /// Whitespace-separated sentence.
    #[arg(long)]
    text: String,
    /// Score edges with this joint checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of types when no model is given.
    #[arg(long, default_value_t = 1)]
    types: usize,
    /// Maximum segment length when no model is given.
    #[arg(long, default_value_t = 6)]
    max_len: usize,
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("no such file: {}", path.display());
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => bail!("output directory does not exist: {}", p.display()),
        _ => Ok(()),
    }
}

fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_kv(&text).with_context(|| path.display().to_string())
}

fn train_config(args: &ModelConfigArgs) -> Result<TrainConfig> {
    let mut cfg = match args.preset {
        Preset::Paper => TrainConfig::paper(),
        Preset::Synthetic => TrainConfig::synthetic(),
    };
    if let Some(path) = &args.config {
        require_file(path)?;
        for (k, v) in read_kv(path)? {
            cfg.set(&k, &v).with_context(|| path.display().to_string())?;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    Ok(load_corpus(path)?)
}

fn load_embeddings(path: &Path) -> Result<Embeddings> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values = fields
            .map(str::parse)
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{} line {}: bad number", path.display(), i + 1))?;
        out.insert(word.to_string(), values);
    }
    Ok(out)
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let mut cfg = GenConfig::default();
    if let Some(path) = &args.config {
        require_file(path)?;
        for (k, v) in read_kv(path)? {
            cfg.set(&k, &v).with_context(|| path.display().to_string())?;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.sentences {
        cfg.sentences = n;
    }
    let all = if let Some(sizes) = &args.split {
        if sizes.len() != 3 {
            bail!("--split takes three sizes, got {}", sizes.len());
        }
        if !args.out.is_dir() {
            bail!("output directory does not exist: {}", args.out.display());
        }
        let parts = generate_split(&cfg, sizes[0], sizes[1], sizes[2])?;
        for (name, part) in ["train", "dev", "test"].iter().zip(&parts) {
            save_corpus(&args.out.join(format!("{name}.jsonl")), part)?;
        }
        parts.concat()
    } else {
        require_parent(&args.out)?;
        let corpus = generate_corpus(&cfg)?;
        save_corpus(&args.out, &corpus)?;
        corpus
    };
    println!("{}", serde_json::to_string(&corpus_stats(&all))?);
    Ok(())
}

fn train_joint(args: TrainArgs) -> Result<()> {
    require_file(&args.train)?;
    require_file(&args.dev)?;
    require_parent(&args.out)?;
    let cfg = train_config(&args.model)?;
    let emb = match &args.embeddings {
        Some(p) => {
            require_file(p)?;
            Some(load_embeddings(p)?)
        }
        None => None,
    };
    let (tr, dev) = (load(&args.train)?, load(&args.dev)?);
    let ckpt = train(&tr, &dev, &cfg, emb.as_ref())?;
    ckpt.save(&args.out)?;
    log::info!("wrote {}", args.out.display());
    report_history(&ckpt);
    Ok(())
}

fn train_baseline(args: CrfTrainArgs) -> Result<()> {
    require_file(&args.train)?;
    require_file(&args.dev)?;
    require_parent(&args.out)?;
    let cfg = train_config(&args.model)?;
    let (tr, dev) = (load(&args.train)?, load(&args.dev)?);
    let ckpt = train_crf(&tr, &dev, &cfg, args.heuristic.into())?;
    ckpt.save(&args.out)?;
    log::info!("wrote {}", args.out.display());
    report_history(&ckpt);
    Ok(())
}

fn report_history(ckpt: &Checkpoint) {
    if let Some(best) = ckpt.history.iter().max_by(|a, b| a.f1.total_cmp(&b.f1)) {
        println!(
            "trained {} epochs; best dev F1 {:.4} at epoch {}",
            ckpt.history.len(),
            best.f1,
            best.epoch
        );
    }
}

/// Types annotated in `corpus` that the checkpoint has never seen.
fn unknown_types(corpus: &[AnnotatedSentence], known: &[String]) -> Vec<String> {
    let mut out: Vec<String> = corpus
        .iter()
        .flat_map(|s| &s.entities)
        .filter(|e| !known.contains(&e.etype))
        .map(|e| e.etype.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

fn predict(args: PredictArgs, expect: Option<ModelKind>) -> Result<()> {
    require_file(&args.model)?;
    require_file(&args.input)?;
    require_parent(&args.out)?;
    let ckpt = Checkpoint::load(&args.model)?;
    if let Some(kind) = expect {
        ckpt.expect_kind(kind)?;
    }
    let input = load(&args.input)?;
    let missing = unknown_types(&input, &ckpt.types);
    if !missing.is_empty() {
        bail!("input annotates types unknown to the checkpoint: {}", missing.join(", "));
    }
    let out: Vec<AnnotatedSentence> = match ckpt.kind {
        ModelKind::Joint => JointModel::from_checkpoint(&ckpt)?.predict_corpus(&input),
        ModelKind::Crf => {
            let tagger = CrfTagger::from_checkpoint(&ckpt)?;
            let h = args.heuristic.into();
            input
                .iter()
                .map(|s| AnnotatedSentence::new(s.tokens.clone(), tagger.predict(&s.tokens, h)))
                .collect()
        }
    };
    save_corpus(&args.out, &out)?;
    log::info!("wrote {} sentences to {}", out.len(), args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    require_file(&args.pred)?;
    require_file(&args.gold)?;
    let (pred, gold) = (load(&args.pred)?, load(&args.gold)?);
    for (i, (p, g)) in pred.iter().zip(&gold).enumerate() {
        if p.tokens != g.tokens {
            bail!("sentence {} has different tokens in prediction and gold", i + 1);
        }
    }
    let p: Vec<_> = pred.into_iter().map(|s| s.entities).collect();
    let g: Vec<_> = gold.into_iter().map(|s| s.entities).collect();
    let report = score(&p, &g)?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let tokens: Vec<String> = args.text.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        bail!("--text has no words");
    }
    let (hg, scores) = match &args.model {
        Some(path) => {
            require_file(path)?;
            let model = JointModel::from_checkpoint(&Checkpoint::load(path)?)?;
            let (hg, s) = model.edge_scores(&tokens);
            (hg, Some(s))
        }
        None => {
            if args.types == 0 || args.max_len == 0 {
                bail!("--types and --max-len must be positive");
            }
            (SegmentalHypergraph::build(tokens.len(), args.types, args.max_len), None)
        }
    };
    print!("{}", hg.dump(scores.as_deref()));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_joint(a),
        Command::Predict(a) => predict(a, None),
        Command::Eval(a) => eval(a),
        Command::BaselineCrf(CrfCommand::Train(a)) => train_baseline(a),
        Command::BaselineCrf(CrfCommand::Predict(a)) => predict(a, Some(ModelKind::Crf)),
        Command::InspectHypergraph(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

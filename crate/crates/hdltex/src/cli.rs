//! Command-line entry points.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use hdltex_core::corpus::stratified_split;
use hdltex_core::hierarchy::{
    evaluate_flat, evaluate_hierarchy, predict_document, train_flat, HdltexConfig, Level, ModelKind,
};
use hdltex_core::nn::gradcheck::{family_check, Family};
use hdltex_core::synthetic::{generate, SyntheticSpec};

use crate::config::{load_config, render_config};
use crate::container::{load_model, save_model};
use crate::embeddings::load_embeddings;
use crate::error::{Error, Result};
use crate::report::{render_epoch, render_flat, render_metrics, ReportFormat};
use crate::train::{train_hierarchy_parallel, WallClock};
use crate::tsv::{parse_tsv, read_wos, write_tsv, LabelMap};

/// Finite-difference tolerance the gradient check must meet.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "hdltex", version, about = "Two-level hierarchical text classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a corpus to TSV and split it into train and test files.
    Prepare(PrepareArgs),
    /// Train a hierarchical model and write it to a model file.
    Train(TrainArgs),
    /// Score a model on a labelled TSV file.
    Evaluate(EvaluateArgs),
    /// Label new documents.
    Predict(PredictArgs),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Train and score a flat classifier over all child labels.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true)))]
struct PrepareArgs {
    /// Three-column TSV: parent, child, text.
    #[arg(long, group = "source")]
    tsv: Option<PathBuf>,
    /// Directory holding X.txt, YL1.txt and YL2.txt.
    #[arg(long, group = "source")]
    wos: Option<PathBuf>,
    /// Names for the WOS label codes.
    #[arg(long, requires = "wos")]
    label_map: Option<PathBuf>,
    /// Generate the 4 x 3 synthetic corpus instead of reading one.
    #[arg(long, group = "source")]
    synthetic: bool,
    #[arg(long, default_value_t = 0)]
    synthetic_seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Seed of the split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training TSV.
    #[arg(long, required_unless_present = "print_config")]
    data: Option<PathBuf>,
    /// Model file to write.
    #[arg(long, required_unless_present = "print_config")]
    out: Option<PathBuf>,
    /// Experiment file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Pretrained vectors for the sequence models (GloVe text layout).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Worker threads for the child models; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Suppress the per-epoch log.
    #[arg(long)]
    quiet: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labelled test TSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true)))]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single document.
    #[arg(long, group = "input")]
    text: Option<String>,
    /// One document per line.
    #[arg(long, group = "input")]
    file: Option<PathBuf>,
    /// Also print every class probability.
    #[arg(long)]
    probs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    All,
    Dense,
    Lstm,
    Gru,
    Cnn,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::All)]
    family: FamilyArg,
    /// Random fixtures per family.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "nbc", value_parser = parse_kind)]
    kind: ModelKind,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    ModelKind::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// Output streams of a command. `err` carries logs and diagnostics.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut (dyn Write + Send),
}

fn write_out(w: &mut dyn Write, text: &str) -> Result<()> {
    w.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status: 0 success, 1 usage, 2 data error, 3 divergence or
/// failed gradient check.
pub fn run<I, T>(argv: I, io: Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { io.out.write_all(text.as_bytes()) } else { io.err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, io.out, io.err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> Result<i32> {
    match cmd {
        Command::Prepare(a) => prepare(a, out).map(|_| 0),
        Command::Train(a) => train(a, out, err).map(|_| 0),
        Command::Evaluate(a) => {
            let model = load_model(&a.model)?;
            let test = parse_tsv(&a.data)?;
            let metrics = evaluate_hierarchy(&model, &test)?;
            write_out(out, &render_metrics(&metrics, a.report)).map(|_| 0)
        }
        Command::Predict(a) => predict(a, out).map(|_| 0),
        Command::Gradcheck(a) => gradcheck(a, out),
        Command::Baseline(a) => baseline(a, out, err).map(|_| 0),
    }
}

fn prepare(a: PrepareArgs, out: &mut dyn Write) -> Result<()> {
    let ds = if let Some(path) = &a.tsv {
        parse_tsv(path)?
    } else if let Some(dir) = &a.wos {
        let map = match &a.label_map {
            Some(p) => LabelMap::load(p)?,
            None => LabelMap::default(),
        };
        read_wos(dir, &map)?
    } else {
        generate(&SyntheticSpec {
            seed: a.synthetic_seed,
            ..Default::default()
        })?
    };
    if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
        return Err(Error::Usage("--train-fraction must lie strictly between 0 and 1".into()));
    }
    let (train, test) = stratified_split(&ds, a.train_fraction, a.seed)?;
    write_tsv(&a.train_out, &train)?;
    write_tsv(&a.test_out, &test)?;
    let children: usize = ds.labels.num_children();
    write_out(
        out,
        &format!(
            "{} documents, {} domains, {} areas\ntrain {} -> {}\ntest {} -> {}\n",
            ds.len(),
            ds.labels.parents.len(),
            children,
            train.len(),
            a.train_out.display(),
            test.len(),
            a.test_out.display()
        ),
    )
}

fn effective_config(path: Option<&Path>, seed: Option<u64>) -> Result<HdltexConfig> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => HdltexConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn embeddings_for(
    path: Option<&Path>,
    cfg: &HdltexConfig,
    err: &mut dyn Write,
) -> Result<Option<Arc<hdltex_core::features::EmbeddingTable>>> {
    let Some(path) = path else { return Ok(None) };
    let loaded = load_embeddings(path, cfg.features.embed_dim)?;
    for d in &loaded.duplicates {
        let _ = writeln!(
            err,
            "warning: {}:{}: token {:?} repeated, keeping this line",
            path.display(),
            d.line,
            d.token
        );
    }
    Ok(Some(Arc::new(loaded.table)))
}

fn train(a: TrainArgs, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = effective_config(a.config.as_deref(), a.seed)?;
    if a.print_config {
        return write_out(out, &render_config(&cfg));
    }
    let (Some(data), Some(model_path)) = (&a.data, &a.out) else {
        return Err(Error::Usage("--data and --out are required".into()));
    };
    let train = parse_tsv(data)?;
    let embeddings = embeddings_for(a.embeddings.as_deref(), &cfg, err)?;
    let quiet = a.quiet;
    let log = Mutex::new(&mut *err);
    let observer = |level: Level, e: &hdltex_core::nn::EpochLog| {
        if !quiet {
            let mut w = log.lock().unwrap_or_else(|p| p.into_inner());
            let _ = writeln!(w, "{}", render_epoch(level, e));
        }
    };
    let model = train_hierarchy_parallel(&cfg, &train, embeddings, a.threads, &observer, &WallClock::default())?;
    save_model(&model, model_path)?;
    write_out(
        out,
        &format!(
            "trained {} / {} on {} documents: 1 parent + {} children\nsaved {}\n",
            cfg.parent_kind.name(),
            cfg.child_kind.name(),
            train.len(),
            model.children.len(),
            model_path.display()
        ),
    )
}

fn format_probs(labels: &[String], probs: &[f64]) -> String {
    labels
        .iter()
        .zip(probs)
        .map(|(l, p)| format!("{l}={p:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let docs: Vec<String> = match (&a.text, &a.file) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => fs::read_to_string(p)
            .map_err(|e| Error::io(p, e))?
            .lines()
            .map(str::to_string)
            .collect(),
        (None, None) => unreachable!("clap requires one input"),
    };
    let mut text = String::new();
    for doc in &docs {
        let p = predict_document(&model, doc)?;
        let pi = model.labels.parent_index(&p.parent_label).expect("predicted parent is known");
        let ci = model.children[pi]
            .labels
            .iter()
            .position(|c| *c == p.child_label)
            .expect("predicted child is known");
        text.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}",
            p.parent_label, p.child_label, p.parent_probs[pi], p.child_probs[ci]
        ));
        if a.probs {
            text.push('\t');
            text.push_str(&format_probs(&model.labels.parents, &p.parent_probs));
            text.push('\t');
            text.push_str(&format_probs(&model.children[pi].labels, &p.child_probs));
        }
        text.push('\n');
    }
    write_out(out, &text)
}

fn gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    if !(1e-6..=1e-4).contains(&a.epsilon) {
        return Err(Error::Usage("--epsilon must lie in [1e-6, 1e-4]".into()));
    }
    if a.seeds == 0 {
        return Err(Error::Usage("--seeds must be at least 1".into()));
    }
    let families: Vec<Family> = Family::standard()
        .into_iter()
        .filter(|f| match a.family {
            FamilyArg::All => true,
            FamilyArg::Dense => matches!(f, Family::Dense(_)),
            FamilyArg::Lstm => *f == Family::Lstm,
            FamilyArg::Gru => *f == Family::Gru,
            FamilyArg::Cnn => *f == Family::Cnn,
        })
        .collect();
    let mut all_ok = true;
    write_out(out, &format!("{:<8} {:>12} {:>7} {:>6}  status\n", "family", "max_rel_err", "probes", "kinks"))?;
    for family in families {
        let mut worst = 0.0f64;
        let (mut probes, mut kinks) = (0, 0);
        for seed in 1..=a.seeds {
            let r = family_check(family, seed, a.epsilon)?;
            worst = worst.max(r.max_relative_error);
            probes += r.probes;
            kinks += r.kinks;
        }
        let ok = worst < GRADCHECK_TOLERANCE;
        all_ok &= ok;
        write_out(
            out,
            &format!(
                "{:<8} {:>12.3e} {:>7} {:>6}  {}\n",
                family.name(),
                worst,
                probes,
                kinks,
                if ok { "ok" } else { "FAIL" }
            ),
        )?;
    }
    Ok(if all_ok { 0 } else { 3 })
}

fn baseline(a: BaselineArgs, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = effective_config(a.config.as_deref(), a.seed)?;
    let train = parse_tsv(&a.train)?;
    let test = parse_tsv(&a.test)?;
    let embeddings = embeddings_for(a.embeddings.as_deref(), &cfg, err)?;
    let model = train_flat(&cfg, a.kind, &train, embeddings, &mut |_| {}, &WallClock::default())?;
    let acc = evaluate_flat(&model, &test)?;
    write_out(out, &render_flat(&format!("flat {}", a.kind.name()), test.len(), acc, a.report))
}

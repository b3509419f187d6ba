//! `dialab`: corpus generation, augmentation, training, evaluation and
//! probing from one binary.
//!
//! Every command reads an optional `[command]` section of the file given by
//! `--config`; flags on the command line take precedence.

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dialab::corpus::{SlotCatalog, SplitSizes, TemplateSet};
use dialab::disfluency::DisfluencyConfig;
use dialab::experiment::TrainConfig;
use dialab::probe::ProbeConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("gradient check failed: max relative error {0:.3e}")]
    GradCheck(f64),
    #[error(transparent)]
    Core(#[from] dialab::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// 1 usage or configuration, 2 data or format, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use dialab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 1,
            CliError::GradCheck(_) | CliError::Core(E::NonFinite(_) | E::Diverged(_)) => 3,
            CliError::Data(_) | CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dialab", version, about = "Seq2seq dialogue models on fluent and disfluent bAbI-style data")]
struct Cli {
    /// TOML file with one section per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate train/dev/test/test_oov corpora and their statistics.
    Gen(GenArgs),
    /// Add disfluencies to a corpus and write its annotation sidecar.
    Augment(AugmentArgs),
    /// Print corpus statistics and, given annotations, disfluency rates.
    Stats(StatsArgs),
    /// Train one model with early stopping on the dev loss.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus and optionally persist predictions.
    Eval(EvalArgs),
    /// Train and test over fluent and disfluent data, or over editing-term variants with --et.
    Grid(GridArgs),
    /// Diagnostic classifiers for reparandum, editing term and repair.
    ProbeStructure(ProbeStructureArgs),
    /// Per-slot probes of encoder states against offset from mention.
    ProbeSlots(ProbeSlotsArgs),
    /// Attention alignment for API calls, or render an existing grid file.
    AttentionMap(AttentionMapArgs),
    /// Prompt the model for an API call after every user turn.
    Trigger(TriggerArgs),
    /// Classify wrong utterances from persisted prediction records.
    Taxonomy(TaxonomyArgs),
    /// Finite-difference check of the full model gradient.
    Gradcheck(GradcheckArgs),
}

/// Model and optimisation overrides shared by `train` and `grid`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Maximum epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Hidden size 100, three epochs.
    #[arg(long)]
    pub smoke: bool,
    /// Full training configuration; config file only.
    #[arg(skip)]
    pub training: Option<TrainConfig>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GenArgs {
    /// Output directory [default: $DIALAB_DATA_DIR or ./data].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dialogues per split.
    #[arg(long)]
    pub dialogues: Option<usize>,
    #[arg(skip)]
    pub sizes: Option<SplitSizes>,
    #[arg(skip)]
    pub catalog: Option<SlotCatalog>,
    #[arg(skip)]
    pub templates: Option<TemplateSet>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output corpus [default: <in>_plus.txt]; the sidecar goes next to it with extension .ann.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// noET, realET or fullET.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// train, dev, test or test_oov [default: from the file name].
    #[arg(long)]
    pub split: Option<String>,
    #[arg(skip)]
    pub disfluency: Option<DisfluencyConfig>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsArgs {
    #[arg(long = "in", num_args = 1..)]
    #[serde(rename = "in")]
    pub input: Option<Vec<PathBuf>>,
    /// Also report disfluency rates from each file's .ann sidecar.
    #[arg(long)]
    pub annotations: bool,
    /// Accept files with dangling or unusual lines.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_attention: bool,
    /// Per-epoch losses as TSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Per-response prediction records (TSV).
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Metrics as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GridArgs {
    /// Directory holding train.txt, dev.txt and test.txt [default: $DIALAB_DATA_DIR or ./data].
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Editing-term grid: attentive models over noET, realET and fullET data.
    #[arg(long)]
    pub et: bool,
    /// Seed for the in-memory disfluency augmentation [default: 1].
    #[arg(long)]
    pub augment_seed: Option<u64>,
    /// Train attentive models only.
    #[arg(long)]
    pub attention_only: bool,
    /// Report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one checkpoint per trained model.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(skip)]
    pub disfluency: Option<DisfluencyConfig>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

/// A checkpoint and an annotated corpus; shared by the probing commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeInput {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Annotation sidecar [default: the corpus path with extension .ann; a corpus without one is treated as fluent].
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeStructureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: ProbeInput,
    /// Persist the collected encoder states.
    #[arg(long)]
    pub save_states: Option<PathBuf>,
    /// Probe a persisted state file instead of running a model.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Report as text.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSlotsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: ProbeInput,
    /// Predict the value from the state this many tokens later.
    #[arg(long)]
    pub delay: Option<usize>,
    #[arg(long)]
    pub include_unmentioned: bool,
    /// Report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accuracy-against-offset plot (SVG).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Last offset bucket of the plot.
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(skip)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionMapArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Render this grid file instead of computing one.
    #[arg(long)]
    pub render: Option<PathBuf>,
    /// Output directory, or the image path (.svg or .ppm) with --render.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cells below this are left blank when rendered [default: 0.2].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Per-example dumps to keep; all of them when absent.
    #[arg(long)]
    pub dumps: Option<usize>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TriggerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: ProbeInput,
    /// Use the shortened prompt wording instead of the corpus utterance.
    #[arg(long)]
    pub printed_prompt: bool,
    /// Custom system side of the prompt.
    #[arg(long)]
    pub prompt_system: Option<String>,
    /// Custom user side of the prompt.
    #[arg(long)]
    pub prompt_user: Option<String>,
    /// Report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxonomyArgs {
    /// Prediction records written by `eval --records`.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub no_attention: bool,
    /// Check with dropout active.
    #[arg(long)]
    pub dropout: bool,
    /// Coordinates compared.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest accepted relative error [default: 1e-3].
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Nested settings each command takes from its config section only.
fn tables(command: &str) -> &'static [&'static str] {
    match command {
        "gen" => &["sizes", "catalog", "templates"],
        "augment" => &["disfluency"],
        "train" => &["training"],
        "grid" => &["training", "disfluency"],
        "probe-structure" | "probe-slots" => &["probe"],
        _ => &[],
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    if let Some(p) = cfg {
        if !p.is_file() {
            return Err(CliError::Usage(format!("config file {} does not exist", p.display())));
        }
    }
    use config::resolve;
    match cli.command {
        Command::Gen(a) => commands::gen(resolve("gen", cfg, &a, tables("gen"))?),
        Command::Augment(a) => commands::augment(resolve("augment", cfg, &a, tables("augment"))?),
        Command::Stats(a) => commands::stats(resolve("stats", cfg, &a, tables("stats"))?),
        Command::Train(a) => commands::train(resolve("train", cfg, &a, tables("train"))?),
        Command::Eval(a) => commands::eval(resolve("eval", cfg, &a, tables("eval"))?),
        Command::Grid(a) => commands::grid(resolve("grid", cfg, &a, tables("grid"))?),
        Command::ProbeStructure(a) => commands::probe_structure(resolve("probe-structure", cfg, &a, tables("probe-structure"))?),
        Command::ProbeSlots(a) => commands::probe_slots(resolve("probe-slots", cfg, &a, tables("probe-slots"))?),
        Command::AttentionMap(a) => commands::attention_map(resolve("attention-map", cfg, &a, tables("attention-map"))?),
        Command::Trigger(a) => commands::trigger(resolve("trigger", cfg, &a, tables("trigger"))?),
        Command::Taxonomy(a) => commands::taxonomy(resolve("taxonomy", cfg, &a, tables("taxonomy"))?),
        Command::Gradcheck(a) => commands::gradcheck(resolve("gradcheck", cfg, &a, tables("gradcheck"))?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use config::resolve;

    /// Every section of the committed configs maps onto its command's arguments.
    #[test]
    fn committed_configs_resolve() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        for name in ["fluency_grid.toml", "et_grid.toml", "probes.toml"] {
            let path = dir.join(name);
            let doc: toml::Table = std::fs::read_to_string(&path).unwrap().parse().unwrap();
            for section in doc.keys() {
                let f = Some(path.as_path());
                let r = match section.as_str() {
                    "gen" => resolve(section, f, &GenArgs::default(), tables(section)).map(|a| assert!(a.seed.is_some())),
                    "augment" => resolve(section, f, &AugmentArgs::default(), tables(section)).map(|a| assert!(a.input.is_some())),
                    "train" => resolve(section, f, &TrainArgs::default(), tables(section)).map(|a| assert!(a.model.hidden_dim.is_some())),
                    "eval" => resolve(section, f, &EvalArgs::default(), tables(section)).map(|a| assert!(a.records.is_some())),
                    "grid" => resolve(section, f, &GridArgs::default(), tables(section)).map(|a| assert!(a.model.training.is_some())),
                    "probe-structure" => resolve(section, f, &ProbeStructureArgs::default(), tables(section)).map(|a| assert!(a.probe.is_some())),
                    "probe-slots" => resolve(section, f, &ProbeSlotsArgs::default(), tables(section)).map(|a| assert!(a.plot.is_some())),
                    "trigger" => resolve(section, f, &TriggerArgs::default(), tables(section)).map(|a| assert!(a.input.model.is_some())),
                    "taxonomy" => resolve(section, f, &TaxonomyArgs::default(), tables(section)).map(|a| assert!(a.records.is_some())),
                    "attention-map" => resolve(section, f, &AttentionMapArgs::default(), tables(section)).map(|a| assert!(a.tau.is_some())),
                    other => panic!("{name}: unknown section [{other}]"),
                };
                r.unwrap_or_else(|e| panic!("{name} [{section}]: {e}"));
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[gen]\nseeed = 3\n").unwrap();
        assert!(resolve("gen", Some(&path), &GenArgs::default(), tables("gen")).is_err());
    }
}

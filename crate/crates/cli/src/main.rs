use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cotrace_core::analytics::behavior::HttpTransport;
use cotrace_core::analytics::{ClassifierBackend, LlmBackend, RuleBackend};
use cotrace_core::config::ClassifierKind;
use cotrace_core::model::{validate_timeline, Origin, Timeline};
use cotrace_core::pipeline::{load_corpus, run_pipeline};
use cotrace_core::score::score_attributions;
use cotrace_core::synth::{
    generate_corpus, write_corpus, GroundTruth, Perturbation, ShadowLayout, SynthConfig,
};
use cotrace_core::{Exec, PipelineConfig};

/// Attribute edits in IDE shadow histories to AI chat responses, humans,
/// or outside sources, and export per-user timelines.
#[derive(Parser)]
#[command(name = "cotrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a corpus and print an ingestion summary.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Run the full pipeline, writing timeline_<user>.json files and report.json.
    Run {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth(SynthArgs),
    /// Score attributions on a synthetic corpus against its truth.json.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Ground truth file; defaults to <CORPUS>/truth.json.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Check exported timeline files against the schema invariants.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus root containing chats/ and shadow/.
    #[arg(required_unless_present_all = ["chats", "shadow"])]
    corpus: Option<PathBuf>,
    /// Chat session directory (overrides <CORPUS>/chats).
    #[arg(long)]
    chats: Option<PathBuf>,
    /// Directory of per-user shadow repositories or bundles (overrides <CORPUS>/shadow).
    #[arg(long)]
    shadow: Option<PathBuf>,
}

impl CorpusArgs {
    fn resolve(&self) -> Result<(PathBuf, PathBuf)> {
        let pick = |explicit: &Option<PathBuf>, sub: &str| -> Result<PathBuf> {
            match (explicit, &self.corpus) {
                (Some(p), _) => {
                    if !p.is_dir() {
                        bail!("{} is not a directory", p.display());
                    }
                    Ok(p.clone())
                }
                (None, Some(root)) => Ok(root.join(sub)),
                (None, None) => bail!("give a corpus directory or --{sub}"),
            }
        };
        if let Some(root) = &self.corpus {
            if !root.is_dir() {
                bail!("corpus {} is not a directory", root.display());
            }
        }
        Ok((pick(&self.chats, "chats")?, pick(&self.shadow, "shadow")?))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Rules,
    Llm,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Attribution window in seconds.
    #[arg(long)]
    window_s: Option<f64>,
    /// Inactivity gap between work sessions, in minutes.
    #[arg(long)]
    gap_min: Option<f64>,
    /// Number of progress bins in the overview.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Endpoint for the LLM classifier.
    #[arg(long)]
    llm_endpoint: Option<String>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Process users one at a time.
    #[arg(long)]
    sequential: bool,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(w) = self.window_s {
            cfg.attribution.window_s = w;
        }
        if let Some(g) = self.gap_min {
            cfg.analytics.gap_min = g;
        }
        if let Some(b) = self.bins {
            cfg.analytics.bins = b;
        }
        if let Some(c) = self.classifier {
            cfg.analytics.classifier = match c {
                ClassifierArg::Rules => ClassifierKind::Rules,
                ClassifierArg::Llm => ClassifierKind::Llm,
            };
        }
        if let Some(e) = &self.llm_endpoint {
            cfg.llm.endpoint = Some(e.clone());
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn exec(&self) -> Result<Exec> {
        if let Some(n) = self.jobs {
            if n == 0 {
                bail!("--jobs must be at least 1");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring worker threads")?;
        }
        Ok(if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        })
    }
}

fn backend(cfg: &PipelineConfig) -> Result<Box<dyn ClassifierBackend>> {
    Ok(match cfg.analytics.classifier {
        ClassifierKind::Rules => Box::new(RuleBackend::new()),
        ClassifierKind::Llm => {
            let endpoint = cfg
                .llm
                .endpoint
                .clone()
                .context("the llm classifier needs an endpoint")?;
            Box::new(LlmBackend::new(HttpTransport::new(
                endpoint,
                cfg.llm.api_key_env.as_deref(),
            )?))
        }
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum PerturbationArg {
    None,
    Whitespace,
    PartialRewrite,
    ExternalPaste,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; must be absent or empty.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    users: u32,
    #[arg(long, default_value_t = 1)]
    sessions: u32,
    #[arg(long, default_value_t = 2)]
    prompts: u32,
    /// Probability that an AI suggestion is accepted.
    #[arg(long, default_value_t = 1.0)]
    p_accept: f64,
    #[arg(long, value_enum, default_value = "none")]
    perturbation: PerturbationArg,
    #[arg(long, default_value_t = 0.4)]
    rewrite_fraction: f64,
    #[arg(long, default_value_t = 3000)]
    paste_chars: usize,
    #[arg(long, default_value_t = 1)]
    max_edit_groups: u32,
    /// Write shadow histories as git bundles instead of repositories.
    #[arg(long)]
    bundle: bool,
    /// Leave out trivial prompts, agent tool calls and file housekeeping.
    #[arg(long)]
    no_chatter: bool,
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_ingest(corpus: &CorpusArgs, pipeline: &PipelineArgs) -> Result<()> {
    let (chats, shadow) = corpus.resolve()?;
    let cfg = pipeline.config()?;
    let exec = pipeline.exec()?;
    let loaded = load_corpus(&chats, &shadow, &cfg, exec)?;
    warn_all(&loaded.chat_report.warnings);
    warn_all(&loaded.warnings);
    let users: Vec<_> = loaded
        .inputs
        .iter()
        .map(|u| {
            json!({
                "user": u.user,
                "commits": u.commits.len(),
                "chat_sessions": u.sessions.len(),
                "requests": u.sessions.iter().map(|s| s.requests.len()).sum::<usize>(),
            })
        })
        .collect();
    print_json(&json!({
        "chat": loaded.chat_report,
        "users": users,
        "warnings": loaded.warnings,
    }))
}

/// Write `contents` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().context("output path has no parent")?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_run(corpus: &CorpusArgs, pipeline: &PipelineArgs, out: &Path) -> Result<()> {
    let (chats, shadow) = corpus.resolve()?;
    let cfg = pipeline.config()?;
    let exec = pipeline.exec()?;
    if out.exists() && !out.is_dir() {
        bail!("{} exists and is not a directory", out.display());
    }
    let loaded = load_corpus(&chats, &shadow, &cfg, exec)?;
    let mut warnings = loaded.chat_report.warnings.clone();
    warnings.extend(loaded.warnings.iter().cloned());
    let backend = backend(&cfg)?;
    let output = run_pipeline(&loaded.inputs, &cfg, backend.as_ref(), exec, warnings)?;
    warn_all(&output.report.warnings);

    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for t in &output.timelines {
        files.push((
            out.join(format!("timeline_{}.json", t.user)),
            t.to_json_pretty()? + "\n",
        ));
    }
    files.push((
        out.join("report.json"),
        serde_json::to_string_pretty(&output.report)? + "\n",
    ));
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (path, contents) in &files {
        write_atomic(path, contents)?;
    }
    print_json(&json!({
        "out": out,
        "users": output.timelines.len(),
        "files": files.iter().map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "warnings": output.report.warnings.len(),
    }))
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        n_users: args.users,
        sessions_per_user: args.sessions,
        prompts_per_session: args.prompts,
        p_accept: args.p_accept,
        perturbation: match args.perturbation {
            PerturbationArg::None => Perturbation::None,
            PerturbationArg::Whitespace => Perturbation::Whitespace,
            PerturbationArg::PartialRewrite => Perturbation::PartialRewrite,
            PerturbationArg::ExternalPaste => Perturbation::ExternalPaste,
        },
        rewrite_fraction: args.rewrite_fraction,
        paste_chars: args.paste_chars,
        max_edit_groups: args.max_edit_groups,
        chatter: !args.no_chatter,
        ..SynthConfig::default()
    };
    let layout = if args.bundle {
        ShadowLayout::Bundle
    } else {
        ShadowLayout::Repository
    };
    let corpus = generate_corpus(&cfg)?;
    write_corpus(&corpus, &args.out, layout)?;
    let mut by_origin: BTreeMap<Origin, usize> = BTreeMap::new();
    for e in &corpus.truth.entries {
        *by_origin.entry(e.origin).or_default() += 1;
    }
    print_json(&json!({
        "out": args.out,
        "users": corpus.users.iter().map(|u| &u.user).collect::<Vec<_>>(),
        "commits": corpus.users.iter().map(|u| u.commits.len()).sum::<usize>(),
        "chat_sessions": corpus.users.iter().map(|u| u.sessions.len()).sum::<usize>(),
        "truth_entries": corpus.truth.entries.len(),
        "truth_by_origin": by_origin,
    }))
}

fn cmd_score(corpus: &CorpusArgs, pipeline: &PipelineArgs, truth: Option<&Path>) -> Result<()> {
    let (chats, shadow) = corpus.resolve()?;
    let truth_path = match (truth, &corpus.corpus) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(root)) => root.join("truth.json"),
        (None, None) => bail!("give a corpus directory or --truth"),
    };
    let truth: GroundTruth = serde_json::from_slice(
        &fs::read(&truth_path).with_context(|| format!("reading {}", truth_path.display()))?,
    )
    .with_context(|| format!("parsing {}", truth_path.display()))?;
    let cfg = pipeline.config()?;
    let exec = pipeline.exec()?;
    let loaded = load_corpus(&chats, &shadow, &cfg, exec)?;
    let output = run_pipeline(&loaded.inputs, &cfg, &RuleBackend::new(), exec, Vec::new())?;
    let score = score_attributions(&truth, &output.timelines)?;
    print_json(&serde_json::to_value(&score)?)
}

fn cmd_validate(files: &[PathBuf]) -> Result<bool> {
    let mut ok = true;
    let mut results = Vec::new();
    for path in files {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let timeline =
            Timeline::from_json(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        let violations: Vec<String> = validate_timeline(&timeline)
            .iter()
            .map(|v| v.to_string())
            .collect();
        ok &= violations.is_empty();
        results.push(json!({"file": path, "violations": violations}));
    }
    print_json(&json!(results))?;
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest { corpus, pipeline } => cmd_ingest(corpus, pipeline).map(|_| true),
        Command::Run {
            corpus,
            pipeline,
            out,
        } => cmd_run(corpus, pipeline, out).map(|_| true),
        Command::Synth(args) => cmd_synth(args).map(|_| true),
        Command::Score {
            corpus,
            pipeline,
            truth,
        } => cmd_score(corpus, pipeline, truth.as_deref()).map(|_| true),
        Command::Validate { files } => cmd_validate(files),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

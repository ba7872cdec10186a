use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use par_core::corpus::{annotation_stats, corpus_stats, load_corpus};
use par_core::judge::aggregate;
use par_core::pipeline::{
    check_fixed_sources, load_outcomes, make_provider, materialize_mock, prepare_prompts, read_json, run_repair,
    write_json, write_metrics, MockScript, PipelineConfig, PipelineError, ProviderKind, Workspace,
};
use par_core::prompting::{BaseVariant, PromptVariant};
use par_core::similarity::{PassVector, PsmWeights};

/// Peer-aided repair of C programming assignments.
#[derive(Parser)]
#[command(name = "par", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus root; overrides the config.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Prompt variant, e.g. `basic`, `par`, `par+bl+bt`.
    #[arg(long, global = true)]
    variant: Option<PromptVariant>,
    /// PSM weights `a,b,g,d[,e]`.
    #[arg(long, global = true)]
    weights: Option<PsmWeights>,
    /// Samples per prompt.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderKind>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load the corpus and check that every fixed program passes its tests.
    Validate,
    /// Print corpus and annotation statistics.
    Stats {
        #[arg(long)]
        json: bool,
    },
    /// Print the selected peer of every submission as JSON.
    Select {
        /// Buggy-program pass vectors from an earlier run; computed when absent.
        #[arg(long)]
        pass_vectors: Option<PathBuf>,
    },
    /// Render prompts: one to stdout, or all into the output directory.
    Prompt {
        #[arg(long)]
        submission: Option<String>,
        #[arg(long)]
        pass_vectors: Option<PathBuf>,
    },
    /// Run the whole pipeline and write the output tree.
    Repair,
    /// Recompute metrics from the verdicts in an output directory.
    Report,
    /// Write canned mock responses from a reply script.
    MockMaterialize {
        #[arg(long)]
        script: PathBuf,
        /// Destination; defaults to the configured mock directory.
        #[arg(long)]
        dest: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config(g: &GlobalArgs) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &g.corpus {
        cfg.corpus = v.clone();
    }
    if let Some(v) = g.variant {
        cfg.variant = v;
    }
    if let Some(v) = g.weights {
        cfg.weights = v;
    }
    if let Some(v) = g.samples {
        cfg.llm.samples_per_prompt = v;
    }
    if let Some(v) = g.temperature {
        cfg.llm.temperature = v;
    }
    if let Some(v) = g.provider {
        cfg.provider = v;
    }
    if let Some(v) = &g.out {
        cfg.out = v.clone();
    }
    if let Some(v) = g.workers {
        cfg.workers = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pass_vectors(path: &Option<PathBuf>) -> Result<Option<BTreeMap<String, PassVector>>, PipelineError> {
    path.as_deref().map(read_json).transpose()
}

fn run(cli: Cli) -> Result<u8, PipelineError> {
    let cfg = config(&cli.global)?;
    match cli.command {
        Command::Validate => validate(&cfg),
        Command::Stats { json } => stats(&cfg.corpus, json),
        Command::Select { pass_vectors: pv } => {
            let ws = Workspace::open(&cfg)?;
            let cfg = PipelineConfig { variant: PromptVariant { base: BaseVariant::PaR, ..cfg.variant }, ..cfg };
            let (_, prompts) = prepare_prompts(&cfg, &ws, pass_vectors(&pv)?)?;
            let mut selections = BTreeMap::new();
            let mut code = 0;
            for (id, p) in prompts {
                match (p.selection, p.prompt) {
                    (Some(sel), _) => {
                        selections.insert(id, sel);
                    }
                    (None, Err(e)) => {
                        eprintln!("{id}: {e}");
                        code = 2;
                    }
                    (None, Ok(_)) => {}
                }
            }
            println!("{}", serde_json::to_string_pretty(&selections).expect("serializable"));
            Ok(code)
        }
        Command::Prompt { submission, pass_vectors: pv } => {
            let ws = Workspace::open(&cfg)?;
            if let Some(id) = &submission {
                if ws.corpus.submission(id).is_none() {
                    return Err(PipelineError::Config(format!("unknown submission {id:?}")));
                }
            }
            let (_, prompts) = prepare_prompts(&cfg, &ws, pass_vectors(&pv)?)?;
            let mut code = 0;
            for (id, p) in prompts {
                match (&submission, p.prompt) {
                    (Some(want), Ok(prompt)) if *want == id => print!("{}", prompt.rendered),
                    (Some(want), Err(e)) if *want == id => {
                        eprintln!("{id}: {e}");
                        code = 2;
                    }
                    (Some(_), _) => {}
                    (None, Ok(prompt)) => {
                        let dir = cfg.out.join("submissions").join(&id);
                        std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
                        let path = dir.join("prompt.txt");
                        std::fs::write(&path, prompt.rendered).map_err(|e| PipelineError::io(&path, e))?;
                    }
                    (None, Err(e)) => {
                        eprintln!("{id}: {e}");
                        code = 2;
                    }
                }
            }
            Ok(code)
        }
        Command::Repair => {
            let ws = Workspace::open(&cfg)?;
            let provider = make_provider(&cfg)?;
            let run = run_repair(&cfg, &ws, provider.as_ref())?;
            run.write(&cfg.out)?;
            print!("{}", run.metrics.to_table());
            let failures = run.failures();
            for (id, e) in &failures {
                eprintln!("{id}: {e}");
            }
            Ok(if failures.is_empty() { 0 } else { 2 })
        }
        Command::Report => {
            let corpus = load_corpus(&cfg.corpus)?;
            let outcomes = load_outcomes(&cfg.out)?;
            if let Some(id) = outcomes.keys().find(|id| corpus.submission(id).is_none()) {
                return Err(PipelineError::Config(format!("output names submission {id:?} missing from the corpus")));
            }
            let metrics = aggregate(&outcomes, &corpus);
            write_json(&cfg.out.join("outcomes.json"), &outcomes)?;
            write_metrics(&cfg.out, &metrics)?;
            print!("{}", metrics.to_table());
            Ok(0)
        }
        Command::MockMaterialize { script, dest } => {
            let ws = Workspace::open(&cfg)?;
            let parsed = MockScript::load(&script)?;
            let dest = dest.unwrap_or_else(|| cfg.mock_dir.clone());
            let base = script.parent().unwrap_or(Path::new("."));
            let n = materialize_mock(&cfg, &ws, &parsed, base, &dest)?;
            println!("wrote {n} responses to {}", dest.display());
            Ok(0)
        }
    }
}

fn validate(cfg: &PipelineConfig) -> Result<u8, PipelineError> {
    let corpus = load_corpus(&cfg.corpus)?;
    let failures = check_fixed_sources(&corpus, &cfg.limits, &cfg.compiler, cfg.workers)?;
    if failures.is_empty() {
        println!(
            "ok: {} assignments, {} submissions; every fixed program passes its tests",
            corpus.assignments.len(),
            corpus.submissions.len()
        );
        return Ok(0);
    }
    for f in &failures {
        println!("{}: {}", f.submission, f.reason);
    }
    println!("{} of {} submissions failed validation", failures.len(), corpus.submissions.len());
    Ok(1)
}

fn stats(root: &Path, json: bool) -> Result<u8, PipelineError> {
    let corpus = load_corpus(root)?;
    let report = corpus_stats(&corpus).map_err(|e| PipelineError::Config(format!("cannot analyse corpus: {e}")))?;
    let annotations = annotation_stats(&corpus).ok();
    if json {
        let value = serde_json::json!({ "corpus": report, "annotations": annotations });
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    } else {
        print!("{}", report.to_table());
        match &annotations {
            Some(a) => print!("\n{}", a.to_table()),
            None => println!("\nno annotated submissions"),
        }
    }
    Ok(0)
}

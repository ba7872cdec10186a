//! End-to-end repair runs: baseline testing, peer selection, prompting,
//! sampling, judging and aggregation, with every intermediate persisted.
//!
//! Output layout:
//!
//! ```text
//! out/pass_vectors.json        buggy-program pass vectors
//! out/outcomes.json            majority-vote outcome per submission
//! out/failures.json            per-submission stage errors
//! out/metrics.json, metrics.txt
//! out/submissions/<sid>/selection.json, prompt.txt, error.txt
//! out/submissions/<sid>/<k>/response.txt, error.txt, candidate.c, verdict.json, compile_error.txt
//! ```

mod config;
mod mock_script;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

pub use config::{PipelineConfig, ProviderKind};
pub use mock_script::{materialize_mock, MockScript, ScriptedReply};

use crate::analysis::StdlibNames;
use crate::corpus::{load_corpus, Corpus, CorpusError};
use crate::gateway::{
    extract_code, sample_repairs, CandidateProgram, GatewayError, HttpProvider, MockProvider, Provider,
};
use crate::judge::{
    aggregate, compile_c99, judge_candidate, majority_vote, run_tests, CompilerConfig, ExecLimits, JudgeError,
    MetricsReport, ProgramOutcome, Verdict,
};
use crate::prompting::{Prompt, PromptBuilder, PromptError, PromptTemplates};
use crate::similarity::{PassVector, PeerSelection, PeerSelector, SimilarityError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 1 for bad input (config, corpus, artifacts), 2 for provider and runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Corpus(_) | Self::Prompt(_) | Self::Malformed { .. } => 1,
            _ => 2,
        }
    }
}

/// A loaded corpus plus the shared analysis and prompting resources.
pub struct Workspace {
    pub corpus: Corpus,
    pub stdlib: StdlibNames,
    pub builder: PromptBuilder,
}

impl Workspace {
    pub fn open(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let corpus = load_corpus(&cfg.corpus)?;
        let stdlib = match &cfg.stdlib_names {
            Some(p) => StdlibNames::from_file(p).map_err(|e| PipelineError::io(p, e))?,
            None => StdlibNames::default(),
        };
        let templates = match &cfg.templates {
            Some(p) => PromptTemplates::from_file(p)?,
            None => PromptTemplates::default(),
        };
        let builder = PromptBuilder::new(templates).with_max_tokens(cfg.max_prompt_tokens);
        Ok(Self { corpus, stdlib, builder })
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))
}

/// Pass vector of every buggy program on its assignment's tests. A buggy
/// program that does not compile passes nothing.
pub fn baseline_pass_vectors(
    corpus: &Corpus,
    limits: &ExecLimits,
    cc: &CompilerConfig,
    workers: usize,
) -> Result<BTreeMap<String, PassVector>, PipelineError> {
    let pool = thread_pool(workers)?;
    let vectors = pool.install(|| {
        corpus
            .submissions
            .par_iter()
            .map(|(id, s)| {
                let tests = &corpus.assignments[&s.assignment_id].tests;
                let pv = match compile_c99(&s.buggy_source, None, cc) {
                    Ok(b) => run_tests(&b, tests, limits)?.pass_vector,
                    Err(JudgeError::CompileError { .. }) => PassVector::empty(tests.len()),
                    Err(e) => return Err(e),
                };
                Ok((id.clone(), pv))
            })
            .collect::<Result<BTreeMap<_, _>, JudgeError>>()
    })?;
    Ok(vectors)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanityFailure {
    pub submission: String,
    pub reason: String,
}

/// Every submission's fixed program must compile and pass all of its tests.
pub fn check_fixed_sources(
    corpus: &Corpus,
    limits: &ExecLimits,
    cc: &CompilerConfig,
    workers: usize,
) -> Result<Vec<SanityFailure>, PipelineError> {
    let pool = thread_pool(workers)?;
    let failures = pool.install(|| {
        corpus
            .submissions
            .par_iter()
            .map(|(id, s)| {
                let tests = &corpus.assignments[&s.assignment_id].tests;
                let reason = match compile_c99(&s.fixed_source, None, cc) {
                    Ok(b) => {
                        let run = run_tests(&b, tests, limits)?;
                        let failed: Vec<String> = run
                            .outcomes
                            .iter()
                            .zip(tests)
                            .filter(|(o, _)| **o != crate::judge::TestOutcome::Correct)
                            .map(|(o, t)| format!("test {} ({o:?})", t.index))
                            .collect();
                        (!failed.is_empty()).then(|| format!("fixed.c fails {}", failed.join(", ")))
                    }
                    Err(JudgeError::CompileError { diagnostics }) => {
                        Some(format!("fixed.c does not compile:\n{}", diagnostics.trim_end()))
                    }
                    Err(e) => return Err(e),
                };
                Ok(reason.map(|reason| SanityFailure { submission: id.clone(), reason }))
            })
            .collect::<Result<Vec<_>, JudgeError>>()
    })?;
    Ok(failures.into_iter().flatten().collect())
}

/// Peer selection and prompt for one submission; `prompt` holds the stage
/// error when either step failed.
#[derive(Debug, Clone)]
pub struct PreparedPrompt {
    pub selection: Option<PeerSelection>,
    pub prompt: Result<Prompt, String>,
}

pub type PreparedRun = (BTreeMap<String, PassVector>, BTreeMap<String, PreparedPrompt>);

/// Baseline pass vectors plus the prompt of every submission under the
/// configured variant. `pass_vectors` skips the baseline stage when given.
pub fn prepare_prompts(
    cfg: &PipelineConfig,
    ws: &Workspace,
    pass_vectors: Option<BTreeMap<String, PassVector>>,
) -> Result<PreparedRun, PipelineError> {
    let corpus = &ws.corpus;
    let pass_vectors = match pass_vectors {
        Some(pv) => pv,
        None => baseline_pass_vectors(corpus, &cfg.limits, &cfg.compiler, cfg.workers)?,
    };
    let selector = if cfg.variant.needs_peer() { Some(PeerSelector::new(corpus, &ws.stdlib)?) } else { None };
    let pool = thread_pool(cfg.workers)?;
    let prompts = pool.install(|| {
        corpus
            .submissions
            .par_iter()
            .map(|(id, s)| {
                let selection = match &selector {
                    Some(sel) => match sel.select(id, &cfg.weights, &pass_vectors) {
                        Ok(p) => Some(p),
                        Err(e) => return (id.clone(), PreparedPrompt { selection: None, prompt: Err(e.to_string()) }),
                    },
                    None => None,
                };
                let peer = selection.as_ref().and_then(|p| corpus.submission(&p.chosen));
                let assignment = &corpus.assignments[&s.assignment_id];
                let prompt = ws.builder.build(cfg.variant, assignment, s, peer, None).map_err(|e| e.to_string());
                (id.clone(), PreparedPrompt { selection, prompt })
            })
            .collect()
    });
    Ok((pass_vectors, prompts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub response: Option<String>,
    pub error: Option<String>,
    pub candidate: Option<CandidateProgram>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct SubmissionRun {
    pub id: String,
    pub selection: Option<PeerSelection>,
    pub prompt: Option<String>,
    pub samples: Vec<SampleRecord>,
    pub outcome: ProgramOutcome,
    /// Stage error that kept this submission from being repaired.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RepairRun {
    pub pass_vectors: BTreeMap<String, PassVector>,
    pub submissions: BTreeMap<String, SubmissionRun>,
    pub metrics: MetricsReport,
}

impl RepairRun {
    pub fn outcomes(&self) -> BTreeMap<String, ProgramOutcome> {
        self.submissions.iter().map(|(id, s)| (id.clone(), s.outcome.clone())).collect()
    }

    pub fn failures(&self) -> BTreeMap<String, String> {
        self.submissions.iter().filter_map(|(id, s)| s.error.clone().map(|e| (id.clone(), e))).collect()
    }

    /// Writes the output tree. Existing per-submission directories are replaced.
    pub fn write(&self, out: &Path) -> Result<(), PipelineError> {
        mkdir(out)?;
        write_json(&out.join("pass_vectors.json"), &self.pass_vectors)?;
        write_json(&out.join("outcomes.json"), &self.outcomes())?;
        write_json(&out.join("failures.json"), &self.failures())?;
        write_metrics(out, &self.metrics)?;
        for (id, run) in &self.submissions {
            let dir = out.join("submissions").join(id);
            if dir.exists() {
                std::fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
            }
            mkdir(&dir)?;
            if let Some(sel) = &run.selection {
                write_json(&dir.join("selection.json"), sel)?;
            }
            if let Some(p) = &run.prompt {
                write_file(&dir.join("prompt.txt"), p.as_bytes())?;
            }
            if let Some(e) = &run.error {
                write_file(&dir.join("error.txt"), format!("{e}\n").as_bytes())?;
            }
            for sample in &run.samples {
                let sdir = dir.join(sample.index.to_string());
                mkdir(&sdir)?;
                if let Some(r) = &sample.response {
                    write_file(&sdir.join("response.txt"), r.as_bytes())?;
                }
                if let Some(e) = &sample.error {
                    write_file(&sdir.join("error.txt"), format!("{e}\n").as_bytes())?;
                }
                if let Some(c) = &sample.candidate {
                    write_file(&sdir.join("candidate.c"), c.source.as_bytes())?;
                }
                if let Some(d) = &sample.verdict.compile_error {
                    write_file(&sdir.join("compile_error.txt"), d.as_bytes())?;
                }
                write_json(&sdir.join("verdict.json"), &sample.verdict)?;
            }
        }
        Ok(())
    }
}

/// The provider named by the config.
pub fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn Provider>, PipelineError> {
    Ok(match cfg.provider {
        ProviderKind::Mock => Box::new(MockProvider::new(&cfg.mock_dir)),
        ProviderKind::Http => Box::new(HttpProvider::new(&cfg.llm)?),
    })
}

/// Runs every stage for every submission. Stage errors are recorded per
/// submission, whose samples then count as failed votes; authentication and
/// toolchain failures abort the run.
pub fn run_repair(cfg: &PipelineConfig, ws: &Workspace, provider: &dyn Provider) -> Result<RepairRun, PipelineError> {
    cfg.validate()?;
    let (pass_vectors, prompts) = prepare_prompts(cfg, ws, None)?;
    let pool = thread_pool(cfg.workers)?;
    let submissions = pool.install(|| {
        prompts
            .into_par_iter()
            .map(|(id, prepared)| {
                let baseline = &pass_vectors[&id];
                repair_one(cfg, ws, provider, &id, prepared, baseline).map(|r| (id, r))
            })
            .collect::<Result<BTreeMap<_, _>, PipelineError>>()
    })?;
    let outcomes = submissions.iter().map(|(id, s)| (id.clone(), s.outcome.clone())).collect();
    let metrics = aggregate(&outcomes, &ws.corpus);
    Ok(RepairRun { pass_vectors, submissions, metrics })
}

fn repair_one(
    cfg: &PipelineConfig,
    ws: &Workspace,
    provider: &dyn Provider,
    id: &str,
    prepared: PreparedPrompt,
    baseline: &PassVector,
) -> Result<SubmissionRun, PipelineError> {
    let submission = &ws.corpus.submissions[id];
    let assignment = &ws.corpus.assignments[&submission.assignment_id];
    let n = cfg.llm.samples_per_prompt;
    let k = assignment.tests.len();
    let failed_run = |prompt: Option<String>, error: String, selection: Option<PeerSelection>| {
        let samples: Vec<SampleRecord> = (0..n)
            .map(|index| SampleRecord {
                index,
                response: None,
                error: None,
                candidate: None,
                verdict: Verdict::no_code(k),
            })
            .collect();
        let outcome = majority_vote(samples.iter().map(|s| s.verdict.clone()).collect())?;
        Ok::<_, PipelineError>(SubmissionRun {
            id: id.to_string(),
            selection,
            prompt,
            samples,
            outcome,
            error: Some(error),
        })
    };
    let prompt = match prepared.prompt {
        Ok(p) => p,
        Err(e) => return failed_run(None, e, prepared.selection),
    };
    let responses = match sample_repairs(&prompt.rendered, &cfg.llm, provider) {
        Ok(r) => r,
        Err(GatewayError::ProviderUnavailable { samples, last }) => {
            let e = GatewayError::ProviderUnavailable { samples, last }.to_string();
            log::warn!("{id}: {e}");
            return failed_run(Some(prompt.rendered), e, prepared.selection);
        }
        Err(e) => return Err(e.into()),
    };

    // Verdicts by candidate source.
    let mut judged: HashMap<String, Verdict> = HashMap::new();
    let mut samples = Vec::with_capacity(n);
    for r in responses {
        let candidate = r.text.as_deref().and_then(|t| extract_code(t).ok());
        let verdict = match &candidate {
            Some(c) => match judged.get(&c.source) {
                Some(v) => v.clone(),
                None => {
                    let v = judge_candidate(Some(c), assignment, baseline, &cfg.limits, &cfg.compiler, None)?;
                    judged.insert(c.source.clone(), v.clone());
                    v
                }
            },
            None => Verdict::no_code(k),
        };
        samples.push(SampleRecord { index: r.sample_index, response: r.text, error: r.error, candidate, verdict });
    }
    let outcome = majority_vote(samples.iter().map(|s| s.verdict.clone()).collect())?;
    Ok(SubmissionRun {
        id: id.to_string(),
        selection: prepared.selection,
        prompt: Some(prompt.rendered),
        samples,
        outcome,
        error: None,
    })
}

/// Re-votes persisted sample verdicts from an output tree.
pub fn load_outcomes(out: &Path) -> Result<BTreeMap<String, ProgramOutcome>, PipelineError> {
    let root = out.join("submissions");
    let mut outcomes = BTreeMap::new();
    for id in sorted_dir_names(&root)? {
        let dir = root.join(&id);
        let mut verdicts = Vec::new();
        for k in 0.. {
            let path = dir.join(k.to_string()).join("verdict.json");
            if !path.exists() {
                break;
            }
            verdicts.push(read_json::<Verdict>(&path)?);
        }
        let outcome = majority_vote(verdicts)
            .map_err(|e| PipelineError::Malformed { path: dir.clone(), reason: e.to_string() })?;
        outcomes.insert(id, outcome);
    }
    Ok(outcomes)
}

pub fn write_metrics(out: &Path, metrics: &MetricsReport) -> Result<(), PipelineError> {
    mkdir(out)?;
    write_json(&out.join("metrics.json"), metrics)?;
    write_file(&out.join("metrics.txt"), metrics.to_table().as_bytes())
}

fn sorted_dir_names(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Malformed { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

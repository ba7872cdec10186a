//! C ABI over `par-core`.
//!
//! Every fallible call returns a [`ParStatus`]; on failure a message is kept
//! per thread and read with [`par_last_error`]. Strings returned through
//! `char **` out-parameters are owned by the caller and released with
//! [`par_string_free`]. Handles are released with their `*_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use par_core::analysis::StdlibNames;
use par_core::judge::{classify, Classification};
use par_core::pipeline::{make_provider, prepare_prompts, run_repair, PipelineConfig, PipelineError, Workspace};
use par_core::similarity::{
    psm, score_ast, score_df, score_tc, ComponentScores, FeatureError, PassVector, ProgramFeatures, PsmWeights,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    ConfigError = 5,
    CorpusError = 6,
    SimilarityError = 7,
    PromptError = 8,
    JudgeError = 9,
    GatewayError = 10,
    IoError = 11,
    NotFound = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParClassification {
    Pass = 0,
    PartialRepair = 1,
    Fail = 2,
    CompileError = 3,
    NoCode = 4,
}

impl From<Classification> for ParClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Pass => Self::Pass,
            Classification::PartialRepair => Self::PartialRepair,
            Classification::Fail => Self::Fail,
            Classification::CompileError => Self::CompileError,
            Classification::NoCode => Self::NoCode,
        }
    }
}

/// Component similarity scores; `bt` is read only when `has_bt` is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ParComponentScores {
    pub tc: f64,
    pub df: f64,
    pub ast: f64,
    pub bm25: f64,
    pub bt: f64,
    pub has_bt: i32,
}

/// PSM coefficients; `eta` is read only when `has_eta` is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ParWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub has_eta: i32,
}

/// Analysis results for one C source file.
pub struct ParFeatures {
    inner: ProgramFeatures,
}

/// A pipeline config with its loaded corpus.
pub struct ParWorkspace {
    cfg: PipelineConfig,
    ws: Workspace,
}

struct Failure(ParStatus, String);

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> ParStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ParStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ParStatus::Panic
        }
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let status = match &e {
        PipelineError::Config(_) => ParStatus::ConfigError,
        PipelineError::Corpus(_) => ParStatus::CorpusError,
        PipelineError::Judge(_) => ParStatus::JudgeError,
        PipelineError::Similarity(_) => ParStatus::SimilarityError,
        PipelineError::Prompt(_) => ParStatus::PromptError,
        PipelineError::Gateway(_) => ParStatus::GatewayError,
        PipelineError::Io { .. } | PipelineError::Malformed { .. } => ParStatus::IoError,
    };
    Failure(status, e.to_string())
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ParStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `p` is null or a nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(ParStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(ParStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `p` is null or a nul-terminated string.
unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

/// # Safety
/// `p` is null or valid for writes.
unsafe fn write_out<T>(p: *mut T, value: T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(Failure(ParStatus::NullArgument, format!("{name} is null")));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// `p` is null or points to a live value.
unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure(ParStatus::NullArgument, format!("{name} is null")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

fn pass_vector(s: &str, name: &str) -> FfiResult<PassVector> {
    s.parse().map_err(|e| invalid(format!("{name}: {e}")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn par_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn par_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn par_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Tokenizes, parses and analyses `source` with the bundled identifier list.
///
/// # Safety
/// `source` is a nul-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_features_compute(source: *const c_char, out: *mut *mut ParFeatures) -> ParStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        let inner = ProgramFeatures::compute(src, &StdlibNames::default()).map_err(|e| match e {
            FeatureError::Lex(e) => Failure(ParStatus::ParseError, e.to_string()),
            FeatureError::Parse(e) => Failure(ParStatus::ParseError, e.to_string()),
        })?;
        write_out(out, Box::into_raw(Box::new(ParFeatures { inner })), "out")
    })
}

/// # Safety
/// `f` is null or was returned by [`par_features_compute`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn par_features_free(f: *mut ParFeatures) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of anonymized tokens, or 0 for a null handle.
///
/// # Safety
/// `f` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn par_features_token_count(f: *const ParFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.inner.tokens.len())
}

/// Number of subtrees (one per internal syntax node), or 0 for a null handle.
///
/// # Safety
/// `f` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn par_features_subtree_count(f: *const ParFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.inner.subtrees.len())
}

/// Number of def-use edges, or 0 for a null handle.
///
/// # Safety
/// `f` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn par_features_dataflow_count(f: *const ParFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.inner.dataflow.len())
}

/// Share of the buggy program's subtrees found in the peer.
///
/// # Safety
/// Both handles are live; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_score_ast(
    buggy: *const ParFeatures,
    peer: *const ParFeatures,
    out: *mut f64,
) -> ParStatus {
    guard(|| {
        let (b, p) = (handle(buggy, "buggy")?, handle(peer, "peer")?);
        write_out(out, score_ast(&b.inner.subtrees, &p.inner.subtrees), "out")
    })
}

/// Share of the buggy program's def-use edges found in the peer.
///
/// # Safety
/// Both handles are live; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_score_df(buggy: *const ParFeatures, peer: *const ParFeatures, out: *mut f64) -> ParStatus {
    guard(|| {
        let (b, p) = (handle(buggy, "buggy")?, handle(peer, "peer")?);
        write_out(out, score_df(&b.inner.dataflow, &p.inner.dataflow), "out")
    })
}

/// Test-case overlap of two pass vectors written as bit strings like `"10110"`.
///
/// # Safety
/// `a` and `b` are nul-terminated strings; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_score_tc(a: *const c_char, b: *const c_char, out: *mut f64) -> ParStatus {
    guard(|| {
        let a = pass_vector(str_arg(a, "a")?, "a")?;
        let b = pass_vector(str_arg(b, "b")?, "b")?;
        let v = score_tc(&a, &b).map_err(|e| Failure(ParStatus::SimilarityError, e.to_string()))?;
        write_out(out, v, "out")
    })
}

/// Weighted PSM score.
///
/// # Safety
/// `scores` and `weights` point to initialized structs; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_psm(
    scores: *const ParComponentScores,
    weights: *const ParWeights,
    out: *mut f64,
) -> ParStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        let w = handle(weights, "weights")?;
        let c = ComponentScores { tc: s.tc, df: s.df, ast: s.ast, bm25: s.bm25, bt: (s.has_bt != 0).then_some(s.bt) };
        let w = PsmWeights::new(w.alpha, w.beta, w.gamma, w.delta, (w.has_eta != 0).then_some(w.eta));
        let v = psm(&c, &w).map_err(|e| Failure(ParStatus::SimilarityError, e.to_string()))?;
        write_out(out, v, "out")
    })
}

/// Classifies a candidate's pass vector against the buggy program's.
///
/// # Safety
/// `baseline` and `candidate` are nul-terminated strings; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_classify(
    baseline: *const c_char,
    candidate: *const c_char,
    out: *mut ParClassification,
) -> ParStatus {
    guard(|| {
        let b = pass_vector(str_arg(baseline, "baseline")?, "baseline")?;
        let c = pass_vector(str_arg(candidate, "candidate")?, "candidate")?;
        write_out(out, classify(&b, &c).into(), "out")
    })
}

/// Loads a TOML pipeline config and its corpus.
///
/// # Safety
/// `config_path` is a nul-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_workspace_open(config_path: *const c_char, out: *mut *mut ParWorkspace) -> ParStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        let cfg = PipelineConfig::load(Path::new(path)).map_err(pipeline_failure)?;
        cfg.validate().map_err(pipeline_failure)?;
        let ws = Workspace::open(&cfg).map_err(pipeline_failure)?;
        write_out(out, Box::into_raw(Box::new(ParWorkspace { cfg, ws })), "out")
    })
}

/// # Safety
/// `w` is null or was returned by [`par_workspace_open`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn par_workspace_free(w: *mut ParWorkspace) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Number of submissions in the corpus, or 0 for a null handle.
///
/// # Safety
/// `w` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn par_workspace_submission_count(w: *const ParWorkspace) -> usize {
    w.as_ref().map_or(0, |w| w.ws.corpus.submissions.len())
}

/// Renders the configured prompt for one submission. `pass_vectors_json` maps
/// submission ids to bit strings; when null, the buggy programs are compiled
/// and run to compute them.
///
/// # Safety
/// `w` is live; strings are nul-terminated (`pass_vectors_json` may be null);
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_workspace_prompt(
    w: *const ParWorkspace,
    submission: *const c_char,
    pass_vectors_json: *const c_char,
    out: *mut *mut c_char,
) -> ParStatus {
    guard(|| {
        let w = handle(w, "workspace")?;
        let id = str_arg(submission, "submission")?;
        if w.ws.corpus.submission(id).is_none() {
            return Err(Failure(ParStatus::NotFound, format!("unknown submission {id:?}")));
        }
        let pv = match opt_str_arg(pass_vectors_json, "pass_vectors_json")? {
            Some(text) => Some(
                serde_json::from_str::<BTreeMap<String, PassVector>>(text)
                    .map_err(|e| invalid(format!("pass_vectors_json: {e}")))?,
            ),
            None => None,
        };
        let (_, mut prompts) = prepare_prompts(&w.cfg, &w.ws, pv).map_err(pipeline_failure)?;
        let prompt = prompts.remove(id).expect("every submission gets a prompt").prompt;
        let prompt = prompt.map_err(|e| Failure(ParStatus::PromptError, e))?;
        write_out(out, into_c_string(prompt.rendered), "out")
    })
}

/// Runs the whole pipeline with the configured provider, writes the output
/// tree to the configured directory and returns the metrics as JSON.
///
/// # Safety
/// `w` is live; `metrics_json` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn par_workspace_repair(w: *const ParWorkspace, metrics_json: *mut *mut c_char) -> ParStatus {
    guard(|| {
        let w = handle(w, "workspace")?;
        let provider = make_provider(&w.cfg).map_err(pipeline_failure)?;
        let run = run_repair(&w.cfg, &w.ws, provider.as_ref()).map_err(pipeline_failure)?;
        run.write(&w.cfg.out).map_err(pipeline_failure)?;
        let json = serde_json::to_string(&run.metrics).expect("metrics serialize");
        write_out(metrics_json, into_c_string(json), "metrics_json")
    })
}

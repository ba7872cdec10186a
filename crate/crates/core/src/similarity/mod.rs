//! Peer solution matching: component scores, the weighted PSM score and
//! argmax peer selection.

pub mod bm25;
mod scores;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    anonymize, enumerate_subtrees, extract_dataflow, parse_ast, tokenize, DataFlowGraph, LexError, ParseError,
    StdlibNames, SubtreeBag,
};
use crate::corpus::{Corpus, Submission};
use bm25::{min_max_normalize, Bm25Index};

pub use scores::{psm, score_ast, score_bt, score_df, score_tc, ComponentScores, PassVector, PsmWeights};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("pass vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("no peer candidates for {query}")]
    EmptyPool { query: String },
    #[error("no pass vector for {id}")]
    MissingPassVector { id: String },
    #[error("missing bug annotations{}", .id.as_ref().map(|i| format!(" for {i}")).unwrap_or_default())]
    MissingAnnotations { id: Option<String> },
    #[error("eta must be set exactly when a bug-type score is present")]
    WeightScoreMismatch,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("unknown submission {0}")]
    UnknownSubmission(String),
    #[error("{id}: {source}")]
    Lex { id: String, source: LexError },
    #[error("{id}: {source}")]
    Parse { id: String, source: ParseError },
}

/// Analysis results for one source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramFeatures {
    /// Anonymized token texts.
    pub tokens: Vec<String>,
    pub subtrees: SubtreeBag,
    pub dataflow: DataFlowGraph,
}

impl ProgramFeatures {
    pub fn compute(source: &str, stdlib: &StdlibNames) -> Result<Self, FeatureError> {
        let stream = tokenize(source).map_err(FeatureError::Lex)?;
        let tokens = anonymize(&stream, stdlib).tokens.into_iter().map(|t| t.text).collect();
        let ast = parse_ast(source).map_err(FeatureError::Parse)?;
        Ok(Self { tokens, subtrees: enumerate_subtrees(&ast), dataflow: extract_dataflow(&ast, stdlib) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    Lex(LexError),
    Parse(ParseError),
}

impl FeatureError {
    fn with_id(self, id: &str) -> SimilarityError {
        match self {
            FeatureError::Lex(source) => SimilarityError::Lex { id: id.to_string(), source },
            FeatureError::Parse(source) => SimilarityError::Parse { id: id.to_string(), source },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionFeatures {
    pub buggy: ProgramFeatures,
    pub fixed: ProgramFeatures,
}

impl SubmissionFeatures {
    pub fn compute(s: &Submission, stdlib: &StdlibNames) -> Result<Self, SimilarityError> {
        Ok(Self {
            buggy: ProgramFeatures::compute(&s.buggy_source, stdlib).map_err(|e| e.with_id(&s.id))?,
            fixed: ProgramFeatures::compute(&s.fixed_source, stdlib).map_err(|e| e.with_id(&s.id))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPeer {
    pub id: String,
    pub psm: f64,
    pub components: ComponentScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerSelection {
    pub query: String,
    /// Chosen submission; its fixed source is the reference code.
    pub chosen: String,
    pub psm: f64,
    pub components: ComponentScores,
    /// Every candidate, best first.
    pub ranked: Vec<RankedPeer>,
}

/// PSM values this close to the maximum count as tied and fall back to the id order.
const TIE_TOLERANCE: f64 = 1e-12;

/// Normalized anonymized BM25 of the query's buggy tokens against each pool
/// member's fixed tokens.
pub fn score_bm25_anon(
    query: &Submission,
    pool: &[&Submission],
    stdlib: &StdlibNames,
) -> Result<BTreeMap<String, f64>, SimilarityError> {
    if pool.is_empty() {
        return Err(SimilarityError::EmptyPool { query: query.id.clone() });
    }
    let q = ProgramFeatures::compute(&query.buggy_source, stdlib).map_err(|e| e.with_id(&query.id))?;
    let docs = pool
        .iter()
        .map(|s| ProgramFeatures::compute(&s.fixed_source, stdlib).map(|f| f.tokens).map_err(|e| e.with_id(&s.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = bm25_scores(&q.tokens, &docs);
    Ok(pool.iter().map(|s| s.id.clone()).zip(scores).collect())
}

fn bm25_scores(query: &[String], docs: &[Vec<String>]) -> Vec<f64> {
    let index = Bm25Index::new(docs);
    min_max_normalize(&index.score_all(query))
}

/// Precomputed features for every submission of a corpus.
pub struct PeerSelector<'a> {
    corpus: &'a Corpus,
    features: BTreeMap<String, SubmissionFeatures>,
}

impl<'a> PeerSelector<'a> {
    pub fn new(corpus: &'a Corpus, stdlib: &StdlibNames) -> Result<Self, SimilarityError> {
        let features = corpus
            .submissions
            .par_iter()
            .map(|(id, s)| SubmissionFeatures::compute(s, stdlib).map(|f| (id.clone(), f)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Ok(Self { corpus, features })
    }

    pub fn features(&self, id: &str) -> Option<&SubmissionFeatures> {
        self.features.get(id)
    }

    pub fn select(
        &self,
        query_id: &str,
        weights: &PsmWeights,
        pass_vectors: &BTreeMap<String, PassVector>,
    ) -> Result<PeerSelection, SimilarityError> {
        weights.validate()?;
        let query =
            self.corpus.submission(query_id).ok_or_else(|| SimilarityError::UnknownSubmission(query_id.to_string()))?;
        let pool: Vec<&Submission> =
            self.corpus.submissions_of(&query.assignment_id).filter(|s| s.id != query.id).collect();
        if pool.is_empty() {
            return Err(SimilarityError::EmptyPool { query: query.id.clone() });
        }
        let feat = |id: &str| self.features.get(id).ok_or_else(|| SimilarityError::UnknownSubmission(id.to_string()));
        let pv =
            |id: &str| pass_vectors.get(id).ok_or_else(|| SimilarityError::MissingPassVector { id: id.to_string() });
        let q_feat = feat(&query.id)?;
        let q_pv = pv(&query.id)?;
        let q_ann = match weights.eta {
            Some(_) => Some(
                query
                    .bug_annotations()
                    .ok_or_else(|| SimilarityError::MissingAnnotations { id: Some(query.id.clone()) })?,
            ),
            None => None,
        };

        let docs = pool.iter().map(|s| feat(&s.id).map(|f| f.fixed.tokens.clone())).collect::<Result<Vec<_>, _>>()?;
        let bm25 = bm25_scores(&q_feat.buggy.tokens, &docs);

        let ranked = pool
            .par_iter()
            .zip(bm25.par_iter())
            .map(|(cand, &bm25)| {
                let c_feat = feat(&cand.id)?;
                let bt = match q_ann {
                    Some(qa) => {
                        let ca = cand
                            .bug_annotations()
                            .ok_or_else(|| SimilarityError::MissingAnnotations { id: Some(cand.id.clone()) })?;
                        Some(score_bt(qa, ca)?)
                    }
                    None => None,
                };
                let components = ComponentScores {
                    tc: score_tc(q_pv, pv(&cand.id)?)?,
                    df: score_df(&q_feat.buggy.dataflow, &c_feat.fixed.dataflow),
                    ast: score_ast(&q_feat.buggy.subtrees, &c_feat.fixed.subtrees),
                    bm25,
                    bt,
                };
                Ok(RankedPeer { id: cand.id.clone(), psm: psm(&components, weights)?, components })
            })
            .collect::<Result<Vec<_>, SimilarityError>>()?;

        let ranked = rank(ranked);
        let best = &ranked[0];
        Ok(PeerSelection {
            query: query.id.clone(),
            chosen: best.id.clone(),
            psm: best.psm,
            components: best.components,
            ranked,
        })
    }
}

/// Orders candidates best first. Candidates within [`TIE_TOLERANCE`] of the
/// maximum form the leading group, sorted by id; the rest follow by
/// descending PSM, then id.
fn rank(mut peers: Vec<RankedPeer>) -> Vec<RankedPeer> {
    let max = peers.iter().map(|p| p.psm).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs().max(1.0);
    let top = |p: &RankedPeer| p.psm >= max - tol;
    peers.sort_by(|a, b| match (top(a), top(b)) {
        (true, true) => a.id.cmp(&b.id),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => b.psm.total_cmp(&a.psm).then_with(|| a.id.cmp(&b.id)),
    });
    peers
}

/// One-shot selection for a single query; see [`PeerSelector`] to reuse
/// analysis results across queries.
pub fn select_peer(
    query: &Submission,
    corpus: &Corpus,
    weights: &PsmWeights,
    pass_vectors: &BTreeMap<String, PassVector>,
    stdlib: &StdlibNames,
) -> Result<PeerSelection, SimilarityError> {
    let mut features = BTreeMap::new();
    for s in corpus.submissions_of(&query.assignment_id) {
        features.insert(s.id.clone(), SubmissionFeatures::compute(s, stdlib)?);
    }
    PeerSelector { corpus, features }.select(&query.id, weights, pass_vectors)
}

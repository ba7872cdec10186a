use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SimilarityError;
use crate::analysis::{DataFlowGraph, SubtreeBag};
use crate::corpus::{BugAnnotation, BugType, RepairType};

/// Which of a program's K tests pass; rendered as a bit string such as `"10110"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PassVector {
    bits: Vec<bool>,
}

impl PassVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn empty(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    /// `indices` are 1-based.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in indices {
            bits[i - 1] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whether test `index` (1-based) passes.
    pub fn passes(&self, index: usize) -> bool {
        index >= 1 && self.bits.get(index - 1).copied().unwrap_or(false)
    }

    pub fn passed_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn passed_indices(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&i| self.passes(i)).collect()
    }

    pub fn is_complete(&self) -> bool {
        !self.bits.is_empty() && self.bits.iter().all(|b| *b)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn set(&mut self, index: usize, pass: bool) {
        self.bits[index - 1] = pass;
    }
}

impl fmt::Display for PassVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for PassVector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(format!("invalid pass-vector character {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(PassVector::new)
    }
}

impl Serialize for PassVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PassVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `2|a ∩ b| / (|a| + |b|)`; two programs that pass nothing score 1.0.
pub fn score_tc(a: &PassVector, b: &PassVector) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let both = a.bits.iter().zip(&b.bits).filter(|(x, y)| **x && **y).count();
    let denom = a.passed_count() + b.passed_count();
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / denom as f64)
}

/// Share of the buggy program's subtrees also found in the peer's.
pub fn score_ast(buggy: &SubtreeBag, peer: &SubtreeBag) -> f64 {
    if buggy.is_empty() {
        return if peer.is_empty() { 1.0 } else { 0.0 };
    }
    buggy.intersection_len(peer) as f64 / buggy.len() as f64
}

/// Share of the buggy program's def-use edges also found in the peer's.
pub fn score_df(buggy: &DataFlowGraph, peer: &DataFlowGraph) -> f64 {
    if buggy.is_empty() {
        return 1.0;
    }
    buggy.intersection_len(peer) as f64 / buggy.len() as f64
}

/// Twice the number of matched bugs over the total bug count; a match needs
/// equal bug type and repair type.
pub fn score_bt(a: &[BugAnnotation], b: &[BugAnnotation]) -> Result<f64, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::MissingAnnotations { id: None });
    }
    let mut counts: HashMap<(&BugType, RepairType), usize> = HashMap::new();
    for ann in a {
        *counts.entry((&ann.bug_type, ann.repair_type)).or_default() += 1;
    }
    let mut matched = 0;
    for ann in b {
        if let Some(n) = counts.get_mut(&(&ann.bug_type, ann.repair_type)) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    Ok(2.0 * matched as f64 / (a.len() + b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub tc: f64,
    pub df: f64,
    pub ast: f64,
    pub bm25: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsmWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl Default for PsmWeights {
    fn default() -> Self {
        Self { alpha: 0.25, beta: 0.25, gamma: 0.25, delta: 0.25, eta: None }
    }
}

impl PsmWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, eta: Option<f64>) -> Self {
        Self { alpha, beta, gamma, delta, eta }
    }

    pub fn validate(&self) -> Result<(), SimilarityError> {
        let all = [self.alpha, self.beta, self.gamma, self.delta, self.eta.unwrap_or(0.0)];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SimilarityError::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(SimilarityError::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor,
            beta: self.beta * factor,
            gamma: self.gamma * factor,
            delta: self.delta * factor,
            eta: self.eta.map(|e| e * factor),
        }
    }
}

/// Parses `a,b,g,d[,e]`; each entry is a decimal or a fraction such as `1/9`.
impl FromStr for PsmWeights {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s.split(',').map(|p| parse_weight(p.trim())).collect::<Result<Vec<_>, _>>()?;
        let w = match values[..] {
            [a, b, g, d] => PsmWeights::new(a, b, g, d, None),
            [a, b, g, d, e] => PsmWeights::new(a, b, g, d, Some(e)),
            _ => {
                return Err(SimilarityError::InvalidWeights(format!(
                    "expected 4 or 5 comma-separated weights, got {}",
                    values.len()
                )))
            }
        };
        w.validate()?;
        Ok(w)
    }
}

fn parse_weight(s: &str) -> Result<f64, SimilarityError> {
    let bad = || SimilarityError::InvalidWeights(format!("cannot parse weight {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// `α·tc + β·df + γ·ast + δ·bm25 (+ η·bt)`.
pub fn psm(c: &ComponentScores, w: &PsmWeights) -> Result<f64, SimilarityError> {
    w.validate()?;
    let base = w.alpha * c.tc + w.beta * c.df + w.gamma * c.ast + w.delta * c.bm25;
    match (w.eta, c.bt) {
        (None, None) => Ok(base),
        (Some(eta), Some(bt)) => Ok(base + eta * bt),
        _ => Err(SimilarityError::WeightScoreMismatch),
    }
}

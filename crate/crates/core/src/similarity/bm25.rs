//! Okapi BM25 over pre-tokenized documents.

use std::collections::HashMap;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    avgdl: f64,
    doc_lens: Vec<usize>,
    term_freqs: Vec<HashMap<String, usize>>,
    doc_freq: HashMap<String, usize>,
}

impl Bm25Index {
    pub fn new<D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        Self::with_params(docs, DEFAULT_K1, DEFAULT_B)
    }

    pub fn with_params<D, T>(docs: D, k1: f64, b: f64) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        let mut doc_lens = Vec::new();
        let mut term_freqs = Vec::new();
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let mut tf: HashMap<String, usize> = HashMap::new();
            let mut len = 0;
            for term in doc {
                *tf.entry(term.as_ref().to_string()).or_default() += 1;
                len += 1;
            }
            for term in tf.keys() {
                *doc_freq.entry(term.clone()).or_default() += 1;
            }
            doc_lens.push(len);
            term_freqs.push(tf);
        }
        let total: usize = doc_lens.iter().sum();
        let avgdl = if doc_lens.is_empty() { 0.0 } else { total as f64 / doc_lens.len() as f64 };
        Self { k1, b, avgdl, doc_lens, term_freqs, doc_freq }
    }

    pub fn len(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lens.is_empty()
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Score of document `doc` for a query; repeated query terms count once per occurrence.
    pub fn score<Q>(&self, query: Q, doc: usize) -> f64
    where
        Q: IntoIterator,
        Q::Item: AsRef<str>,
    {
        if self.avgdl == 0.0 {
            return 0.0;
        }
        let tf_map = &self.term_freqs[doc];
        let norm = self.k1 * (1.0 - self.b + self.b * self.doc_lens[doc] as f64 / self.avgdl);
        let mut total = 0.0;
        for term in query {
            let term = term.as_ref();
            let Some(&tf) = tf_map.get(term) else { continue };
            let tf = tf as f64;
            total += self.idf(term) * tf * (self.k1 + 1.0) / (tf + norm);
        }
        total
    }

    pub fn score_all<Q>(&self, query: Q) -> Vec<f64>
    where
        Q: IntoIterator + Clone,
        Q::Item: AsRef<str>,
    {
        (0..self.len()).map(|d| self.score(query.clone(), d)).collect()
    }
}

/// Min-max normalization into [0, 1]; an all-equal input maps to all 1.0.
pub fn min_max_normalize(raw: &[f64]) -> Vec<f64> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if raw.is_empty() || max <= min {
        return vec![1.0; raw.len()];
    }
    raw.iter().map(|x| (x - min) / (max - min)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs() -> Vec<Vec<&'static str>> {
        vec![vec!["a", "b", "a"], vec!["b", "c"], vec!["c", "c", "c", "d"]]
    }

    #[test]
    fn matches_hand_computation() {
        let idx = Bm25Index::new(docs());
        let avgdl = 9.0 / 3.0;
        let idf_a = ((3.0 - 1.0 + 0.5) / (1.0 + 0.5) + 1.0f64).ln();
        let idf_b = ((3.0 - 2.0 + 0.5) / (2.0 + 0.5) + 1.0f64).ln();
        let norm0 = 1.2 * (1.0 - 0.75 + 0.75 * 3.0 / avgdl);
        let expected = idf_a * 2.0 * 2.2 / (2.0 + norm0) + idf_b * 1.0 * 2.2 / (1.0 + norm0);
        assert!((idx.score(["a", "b"], 0) - expected).abs() < 1e-12);
        assert_eq!(idx.score(["z"], 0), 0.0);
    }

    #[test]
    fn repeated_query_terms_add_up() {
        let idx = Bm25Index::new(docs());
        let once = idx.score(["a"], 0);
        assert!((idx.score(["a", "a"], 0) - 2.0 * once).abs() < 1e-12);
    }

    #[test]
    fn idf_positive_even_for_common_terms() {
        let idx = Bm25Index::new(vec![vec!["x"], vec!["x"]]);
        assert!(idx.idf("x") > 0.0);
    }

    #[test]
    fn normalization() {
        assert_eq!(min_max_normalize(&[3.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(min_max_normalize(&[2.0]), vec![1.0]);
        assert_eq!(min_max_normalize(&[0.5, 0.5, 0.5]), vec![1.0, 1.0, 1.0]);
        assert_eq!(min_max_normalize(&[1.0, 2.0, 3.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn empty_documents_score_zero() {
        let idx = Bm25Index::new(vec![Vec::<&str>::new(), Vec::new()]);
        assert_eq!(idx.score_all(["a"]), vec![0.0, 0.0]);
    }
}

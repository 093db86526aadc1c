//! LDA topic model fitted by collapsed Gibbs sampling, fold-in inference for
//! unseen documents, and cosine similarity between topic vectors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT_TAG: &str = "kickrec-lda 1";

/// Point on the K-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicVector {
    weights: Vec<f64>,
}

impl TopicVector {
    /// Normalizes non-negative weights to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Topics("topic weights must be finite and non-negative".into()));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::Topics("topic weights sum to zero".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / s).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
            .0
    }
}

pub fn cosine_similarity(a: &TopicVector, b: &TopicVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let dot: f64 = a.weights.iter().zip(&b.weights).map(|(x, y)| x * y).sum();
    let na: f64 = a.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document-topic smoothing; `None` means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Words seen fewer times than this across all documents are dropped.
    pub min_count: usize,
    pub infer_iterations: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 30,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 42,
            min_count: 2,
            infer_iterations: 50,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rng_seed: u64,
    pub vocabulary: Vec<String>,
    index: HashMap<String, u32>,
    /// K rows of V word probabilities.
    pub topic_word: Vec<Vec<f64>>,
}

/// Result of `fit_lda`: the model plus topic vectors of the training
/// documents from the final sampler state.
#[derive(Debug, Clone)]
pub struct LdaFit {
    pub model: LdaModel,
    pub doc_topics: Vec<TopicVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub vector: TopicVector,
    /// True when no token was in the vocabulary and the uniform fallback was used.
    pub out_of_vocabulary: bool,
}

/// Collapsed Gibbs sampler state. Exposed so callers can inspect counts
/// between sweeps.
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    /// V x K, word-major
    n_wk: Vec<u32>,
    n_dk: Vec<u32>,
    n_k: Vec<u32>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: Vec<Vec<u32>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_wk = vec![0u32; v * k];
        let mut n_dk = vec![0u32; docs.len() * k];
        let mut n_k = vec![0u32; k];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        n_wk[w as usize * k + t] += 1;
                        n_dk[d * k + t] += 1;
                        n_k[t] += 1;
                        t as u16
                    })
                    .collect()
            })
            .collect();
        Self {
            k,
            v,
            alpha,
            beta,
            docs,
            z,
            n_wk,
            n_dk,
            n_k,
            rng,
            probs: vec![0.0; k],
        }
    }

    pub fn sweep(&mut self) {
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_wk[w * k + old] -= 1;
                self.n_dk[d * k + old] -= 1;
                self.n_k[old] -= 1;

                let wrow = &self.n_wk[w * k..(w + 1) * k];
                let drow = &self.n_dk[d * k..(d + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (drow[t] as f64 + self.alpha) * (wrow[t] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    self.probs[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.partition_point(|&c| c <= u).min(k - 1);

                self.z[d][i] = new as u16;
                self.n_wk[w * k + new] += 1;
                self.n_dk[d * k + new] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Sums of the three count tables; each must equal `total_tokens`.
    pub fn count_totals(&self) -> (u64, u64, u64) {
        let s = |v: &[u32]| v.iter().map(|&x| x as u64).sum::<u64>();
        (s(&self.n_wk), s(&self.n_dk), s(&self.n_k))
    }

    fn topic_word(&self) -> Vec<Vec<f64>> {
        let vbeta = self.v as f64 * self.beta;
        (0..self.k)
            .map(|t| {
                let denom = self.n_k[t] as f64 + vbeta;
                (0..self.v)
                    .map(|w| (self.n_wk[w * self.k + t] as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    fn doc_topics(&self) -> Vec<TopicVector> {
        (0..self.docs.len())
            .map(|d| {
                let row = &self.n_dk[d * self.k..(d + 1) * self.k];
                TopicVector::from_weights(row.iter().map(|&c| c as f64 + self.alpha).collect())
                    .expect("alpha > 0")
            })
            .collect()
    }
}

/// Vocabulary of words occurring at least `min_count` times, sorted.
pub fn build_vocabulary(documents: &[Vec<String>], min_count: usize) -> Vec<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        for w in doc {
            *counts.entry(w.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<String> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .map(|(w, _)| w.to_string())
        .collect();
    vocab.sort_unstable();
    vocab
}

pub fn fit_lda(documents: &[Vec<String>], config: &LdaConfig) -> Result<LdaFit> {
    let k = config.topics;
    if documents.len() < 2 {
        return Err(Error::Topics("need at least two documents".into()));
    }
    if k < 2 {
        return Err(Error::Topics("need at least two topics".into()));
    }
    if k > u16::MAX as usize {
        return Err(Error::Topics("too many topics".into()));
    }
    if let Some(i) = documents.iter().position(Vec::is_empty) {
        return Err(Error::Topics(format!("document {i} is empty")));
    }
    let alpha = config.alpha();
    if !(alpha > 0.0 && config.beta > 0.0) {
        return Err(Error::Topics("alpha and beta must be positive".into()));
    }
    let vocabulary = build_vocabulary(documents, config.min_count);
    if vocabulary.is_empty() {
        return Err(Error::Topics("empty vocabulary".into()));
    }
    if k > vocabulary.len() {
        return Err(Error::Topics(format!(
            "{k} topics exceed vocabulary size {}",
            vocabulary.len()
        )));
    }
    let index: HashMap<String, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    let docs: Vec<Vec<u32>> = documents
        .iter()
        .map(|d| d.iter().filter_map(|w| index.get(w).copied()).collect())
        .collect();

    let mut sampler = GibbsSampler::new(docs, vocabulary.len(), k, alpha, config.beta, config.seed);
    for it in 0..config.iterations {
        sampler.sweep();
        if (it + 1) % 100 == 0 {
            log::debug!("lda sweep {}/{}", it + 1, config.iterations);
        }
    }
    let model = LdaModel {
        k,
        alpha,
        beta: config.beta,
        rng_seed: config.seed,
        topic_word: sampler.topic_word(),
        vocabulary,
        index,
    };
    Ok(LdaFit {
        doc_topics: sampler.doc_topics(),
        model,
    })
}

impl LdaModel {
    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Fold-in Gibbs inference with the topic-word matrix frozen. Returns the
    /// document-topic estimate averaged over the second half of the chain.
    pub fn infer(&self, tokens: &[String], iterations: usize, seed: u64) -> Result<Inference> {
        if tokens.is_empty() {
            return Err(Error::Topics("cannot infer topics of an empty document".into()));
        }
        let words: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.word_index(t).map(|i| i as usize))
            .collect();
        if words.is_empty() {
            return Ok(Inference {
                vector: TopicVector::uniform(self.k),
                out_of_vocabulary: true,
            });
        }
        let k = self.k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_dk = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                n_dk[t] += 1;
                t
            })
            .collect();
        let iterations = iterations.max(2);
        let burn_in = iterations / 2;
        let mut acc = vec![0.0; k];
        let mut probs = vec![0.0; k];
        for it in 0..iterations {
            for (i, &w) in words.iter().enumerate() {
                n_dk[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[t] as f64 + self.alpha) * self.topic_word[t][w];
                    probs[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = probs.partition_point(|&c| c <= u).min(k - 1);
                z[i] = new;
                n_dk[new] += 1;
            }
            if it >= burn_in {
                for t in 0..k {
                    acc[t] += n_dk[t] as f64 + self.alpha;
                }
            }
        }
        Ok(Inference {
            vector: TopicVector::from_weights(acc)?,
            out_of_vocabulary: false,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_TAG}");
        let _ = writeln!(s, "K {}", self.k);
        let _ = writeln!(s, "alpha {}", self.alpha);
        let _ = writeln!(s, "beta {}", self.beta);
        let _ = writeln!(s, "V {}", self.vocabulary.len());
        let _ = writeln!(s, "seed {}", self.rng_seed);
        s.push_str("vocab\n");
        for w in &self.vocabulary {
            s.push_str(w);
            s.push('\n');
        }
        s.push_str("topic_word\n");
        for row in &self.topic_word {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Topics(format!("model file: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_TAG) {
            return Err(bad("missing format tag"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected {name}")))
        };
        let parse_err = |e: &dyn std::fmt::Display| bad(&e.to_string());
        let k: usize = field("K")?.parse().map_err(|e| parse_err(&e))?;
        let alpha: f64 = field("alpha")?.parse().map_err(|e| parse_err(&e))?;
        let beta: f64 = field("beta")?.parse().map_err(|e| parse_err(&e))?;
        let v: usize = field("V")?.parse().map_err(|e| parse_err(&e))?;
        let seed: u64 = field("seed")?.parse().map_err(|e| parse_err(&e))?;
        if lines.next() != Some("vocab") {
            return Err(bad("expected vocab section"));
        }
        let vocabulary: Vec<String> = (&mut lines).take(v).map(str::to_string).collect();
        if vocabulary.len() != v {
            return Err(bad("truncated vocabulary"));
        }
        if lines.next() != Some("topic_word") {
            return Err(bad("expected topic_word section"));
        }
        let mut topic_word = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines.next().ok_or_else(|| bad("truncated topic_word"))?;
            let row = line
                .split(' ')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(&e))?;
            if row.len() != v {
                return Err(bad("topic_word row has wrong length"));
            }
            topic_word.push(row);
        }
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(Self {
            k,
            alpha,
            beta,
            rng_seed: seed,
            vocabulary,
            index,
            topic_word,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput("topic model file", path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(w: &[f64]) -> TopicVector {
        TopicVector::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn cosine_identity_orthogonal_and_hand_value() {
        let a = tv(&[0.2, 0.3, 0.5]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&tv(&[1.0, 0.0]), &tv(&[0.0, 1.0])).unwrap(), 0.0);
        // 0.25 / (sqrt(0.5) * sqrt(0.5))
        let c = cosine_similarity(&tv(&[0.5, 0.5, 0.0]), &tv(&[0.5, 0.0, 0.5])).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert!(matches!(
            cosine_similarity(&tv(&[1.0, 1.0]), &tv(&[1.0, 1.0, 1.0])),
            Err(Error::Dimension { .. })
        ));
    }

    fn docs(spec: &[&str]) -> Vec<Vec<String>> {
        spec.iter()
            .map(|d| d.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn fit_rejects_bad_input() {
        let cfg = LdaConfig {
            topics: 2,
            iterations: 5,
            min_count: 1,
            ..Default::default()
        };
        assert!(fit_lda(&docs(&["a b"]), &cfg).is_err());
        assert!(fit_lda(&docs(&["a b", ""]), &cfg).is_err());
        let big = LdaConfig { topics: 5, ..cfg.clone() };
        assert!(fit_lda(&docs(&["a b", "a b"]), &big).is_err());
        let strict = LdaConfig { min_count: 10, ..cfg };
        assert!(matches!(fit_lda(&docs(&["a b", "c d"]), &strict), Err(Error::Topics(_))));
    }

    #[test]
    fn empty_document_inference_errors_and_oov_is_uniform() {
        let cfg = LdaConfig {
            topics: 2,
            iterations: 10,
            min_count: 1,
            ..Default::default()
        };
        let fit = fit_lda(&docs(&["a b a b", "c d c d"]), &cfg).unwrap();
        assert!(fit.model.infer(&[], 10, 1).is_err());
        let inf = fit.model.infer(&["zzz".to_string()], 10, 1).unwrap();
        assert!(inf.out_of_vocabulary);
        assert_eq!(inf.vector, TopicVector::uniform(2));
    }

    #[test]
    fn counts_consistent_after_every_sweep() {
        let d: Vec<Vec<u32>> = vec![vec![0, 1, 2, 1], vec![3, 3, 4], vec![0, 4, 2, 2, 1]];
        let mut s = GibbsSampler::new(d, 5, 3, 0.5, 0.1, 9);
        let n = s.total_tokens() as u64;
        for _ in 0..20 {
            s.sweep();
            assert_eq!(s.count_totals(), (n, n, n));
        }
    }

    #[test]
    fn text_round_trip() {
        let cfg = LdaConfig {
            topics: 2,
            iterations: 10,
            min_count: 1,
            ..Default::default()
        };
        let fit = fit_lda(&docs(&["a b a b", "c d c d"]), &cfg).unwrap();
        let back = LdaModel::from_text(&fit.model.to_text()).unwrap();
        assert_eq!(back, fit.model);
    }
}

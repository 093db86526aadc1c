use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{InvestorId, ProjectId};
use crate::error::{Error, Result};
use crate::features::{positive_pairs, PairSpec};
use crate::ingest::Corpus;

/// Uniform sample of `round(ratio * positives.len())` (investor, project)
/// pairs from `investors` x all projects, excluding every actual backing by
/// those investors. Pairs carry their draw order in `neg_index`, so the
/// first k negatives form a uniform sample of size k.
pub fn sample_negatives(
    corpus: &Corpus,
    investors: &[InvestorId],
    positives: &[PairSpec],
    ratio: f64,
    seed: u64,
) -> Result<Vec<PairSpec>> {
    if !(ratio >= 0.0) {
        return Err(Error::Invalid(format!("negative ratio {ratio}")));
    }
    let count = (ratio * positives.len() as f64).round() as usize;
    let projects: Vec<&ProjectId> = corpus.projects.keys().collect();
    let mut backed: HashSet<(usize, usize)> = HashSet::new();
    let pidx: BTreeMap<&ProjectId, usize> = projects.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    for (ii, iid) in investors.iter().enumerate() {
        let inv = corpus
            .investor(iid)
            .ok_or_else(|| Error::Invalid(format!("unknown investor {iid}")))?;
        for p in &inv.pledges {
            backed.insert((ii, pidx[&p.project_id]));
        }
    }
    let iidx: BTreeMap<&InvestorId, usize> = investors.iter().enumerate().map(|(i, v)| (v, i)).collect();
    for p in positives {
        if let (Some(&ii), Some(&pi)) = (iidx.get(&p.investor_id), pidx.get(&p.project_id)) {
            backed.insert((ii, pi));
        }
    }
    let universe = investors.len() * projects.len() - backed.len();
    if universe < count {
        return Err(Error::Invalid(format!(
            "negative universe has {universe} pairs, {count} requested"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = projects.len();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(count);
    if count * 2 <= universe {
        let mut seen = HashSet::with_capacity(count);
        while chosen.len() < count {
            let k = rand::Rng::random_range(&mut rng, 0..investors.len() * np);
            let pair = (k / np, k % np);
            if !backed.contains(&pair) && seen.insert(pair) {
                chosen.push(pair);
            }
        }
    } else {
        let all: Vec<(usize, usize)> = (0..investors.len())
            .flat_map(|i| (0..np).map(move |p| (i, p)))
            .filter(|pair| !backed.contains(pair))
            .collect();
        chosen = index::sample(&mut rng, all.len(), count).into_iter().map(|k| all[k]).collect();
    }
    Ok(chosen
        .into_iter()
        .enumerate()
        .map(|(n, (ii, pi))| {
            let project = &corpus.projects[projects[pi]];
            PairSpec {
                project_id: project.id.clone(),
                investor_id: investors[ii].clone(),
                label: 0,
                cutoff: project.midpoint(),
                neg_index: Some(n),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    /// Cap on positive pairs; a uniform subset is kept when exceeded.
    pub max_positives: Option<usize>,
    /// Negatives drawn per positive; the balanced set uses the first
    /// `n_pos` and the imbalanced test variant the first `ratio * n_pos`.
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self { max_positives: Some(3000), negative_ratio: 4.0, seed: 42 }
    }
}

/// Positive pairs of `investors` plus sampled negatives.
pub fn build_pairs(corpus: &Corpus, investors: &[InvestorId], cfg: &PairConfig) -> Result<Vec<PairSpec>> {
    let all = positive_pairs(corpus, investors);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let positives: Vec<PairSpec> = match cfg.max_positives {
        Some(m) if m < all.len() => {
            let mut keep = index::sample(&mut rng, all.len(), m).into_vec();
            keep.sort_unstable();
            keep.into_iter().map(|k| all[k].clone()).collect()
        }
        _ => all,
    };
    let negatives = sample_negatives(corpus, investors, &positives, cfg.negative_ratio, cfg.seed ^ 0x9e37_79b9)?;
    let mut pairs = positives;
    pairs.extend(negatives);
    Ok(pairs)
}

/// Project-level fold assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub folds: usize,
    pub seed: u64,
    assignment: BTreeMap<ProjectId, usize>,
}

impl SplitPlan {
    /// Shuffle the distinct projects of `pairs` and deal them into folds.
    /// Requires at least `folds` projects with a positive pair.
    pub fn new(pairs: &[&PairSpec], folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
        }
        let mut projects: Vec<&ProjectId> = pairs.iter().map(|p| &p.project_id).collect();
        projects.sort();
        projects.dedup();
        let with_pos: HashSet<&ProjectId> = pairs.iter().filter(|p| p.label == 1).map(|p| &p.project_id).collect();
        if with_pos.len() < folds {
            return Err(Error::Eval(format!(
                "{} projects with positives, {folds} folds requested",
                with_pos.len()
            )));
        }
        projects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let assignment = projects.into_iter().enumerate().map(|(i, p)| (p.clone(), i % folds)).collect();
        Ok(Self { folds, seed, assignment })
    }

    pub fn fold_of(&self, project: &ProjectId) -> Option<usize> {
        self.assignment.get(project).copied()
    }

    pub fn projects_in(&self, fold: usize) -> Vec<&ProjectId> {
        self.assignment.iter().filter(|(_, &f)| f == fold).map(|(p, _)| p).collect()
    }
}

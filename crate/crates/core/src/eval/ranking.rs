use std::collections::{BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::SplitPlan;
use crate::domain::{InvestorId, Project, ProjectId};
use crate::error::{Error, Result};
use crate::features::{pair_features, FeatureVector, PairSpec, ProjectSnapshot, TopicIndex};
use crate::ingest::Corpus;
use crate::models::TrainedModel;

/// Anything that scores a candidate pair; higher means more likely to back.
pub trait Scorer {
    fn score(&self, pair: &PairSpec, x: &FeatureVector) -> Result<f64>;
}

impl Scorer for TrainedModel {
    fn score(&self, _pair: &PairSpec, x: &FeatureVector) -> Result<f64> {
        self.predict_proba(x)
    }
}

/// Uniform scores that depend only on (seed, project, investor).
#[derive(Debug, Clone, Copy)]
pub struct RandomScorer {
    pub seed: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Scorer for RandomScorer {
    fn score(&self, pair: &PairSpec, _x: &FeatureVector) -> Result<f64> {
        let mut h = mix(self.seed);
        for b in pair.project_id.as_str().bytes().chain([0]).chain(pair.investor_id.as_str().bytes()) {
            h = mix(h ^ b as u64);
        }
        Ok((h >> 11) as f64 / (1u64 << 53) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub investor_id: InvestorId,
    pub score: f64,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub project_id: ProjectId,
    pub entries: Vec<RankedEntry>,
}

/// Sort by score descending, ties by ascending investor id; position j of N
/// gets percentile j/(N-1), and a single candidate gets 0.
pub fn rank_scores(project_id: ProjectId, mut scores: Vec<(InvestorId, f64)>) -> Result<RankedList> {
    if scores.is_empty() {
        return Err(Error::Eval(format!("empty candidate pool for project {project_id}")));
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n = scores.len();
    let entries = scores
        .into_iter()
        .enumerate()
        .map(|(j, (investor_id, score))| RankedEntry {
            investor_id,
            score,
            percentile: if n > 1 { j as f64 / (n - 1) as f64 } else { 0.0 },
        })
        .collect();
    Ok(RankedList { project_id, entries })
}

/// Score every candidate for `project` with features at the campaign
/// midpoint and rank them.
pub fn rank_investors(
    corpus: &Corpus,
    topics: &TopicIndex,
    scorer: &dyn Scorer,
    project: &Project,
    candidates: &[InvestorId],
    growth_window: f64,
) -> Result<RankedList> {
    let cutoff = project.midpoint();
    let snap = ProjectSnapshot::at(corpus, project, cutoff, growth_window);
    let mut scores = Vec::with_capacity(candidates.len());
    for iid in candidates {
        let inv = corpus
            .investor(iid)
            .ok_or_else(|| Error::Invalid(format!("unknown candidate {iid}")))?;
        let pair = PairSpec {
            project_id: project.id.clone(),
            investor_id: iid.clone(),
            label: 0,
            cutoff,
            neg_index: None,
        };
        let x = pair_features(corpus, topics, &snap, project, inv);
        scores.push((iid.clone(), scorer.score(&pair, &x)?));
    }
    rank_scores(project.id.clone(), scores)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectRank {
    pub project_id: ProjectId,
    pub pool_size: usize,
    pub true_percentiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    /// Sum of true-investor percentiles over the number of true investors.
    pub average_percentile: f64,
    /// The same numerator over the sum of all percentiles in the lists.
    pub average_percentile_printed: f64,
    pub mean_rr: f64,
    pub max_rr: f64,
    pub projects: Vec<ProjectRank>,
    /// Ranked projects without any true investor in the pool.
    pub excluded: usize,
}

/// Aggregate ranking quality; `is_true(project, investor)` marks backers.
pub fn rank_metrics(rankings: &[RankedList], is_true: impl Fn(&ProjectId, &InvestorId) -> bool) -> Result<RankReport> {
    let mut projects = Vec::new();
    let mut excluded = 0;
    let (mut funded_sum, mut funded_n, mut all_sum) = (0.0, 0usize, 0.0);
    for list in rankings {
        let tp: Vec<f64> = list
            .entries
            .iter()
            .filter(|e| is_true(&list.project_id, &e.investor_id))
            .map(|e| e.percentile)
            .collect();
        if tp.is_empty() {
            excluded += 1;
            continue;
        }
        funded_sum += tp.iter().sum::<f64>();
        funded_n += tp.len();
        all_sum += list.entries.iter().map(|e| e.percentile).sum::<f64>();
        projects.push(ProjectRank {
            project_id: list.project_id.clone(),
            pool_size: list.entries.len(),
            true_percentiles: tp,
        });
    }
    if projects.is_empty() {
        return Err(Error::Eval("no ranked project has a true investor in its pool".into()));
    }
    let n = projects.len() as f64;
    let mean_rr = projects
        .iter()
        .map(|p| p.true_percentiles.iter().sum::<f64>() / p.true_percentiles.len() as f64)
        .sum::<f64>()
        / n;
    let max_rr = projects
        .iter()
        .map(|p| p.true_percentiles.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / n;
    Ok(RankReport {
        average_percentile: funded_sum / funded_n as f64,
        average_percentile_printed: if all_sum > 0.0 { funded_sum / all_sum } else { 0.0 },
        mean_rr,
        max_rr,
        projects,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    /// Held-out projects ranked per fold; all when `None`.
    pub projects_per_fold: Option<usize>,
    /// Candidate pool cap per project; the full pool when `None`.
    pub max_pool: Option<usize>,
    pub growth_window: f64,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            projects_per_fold: Some(20),
            max_pool: Some(1000),
            growth_window: crate::features::DEFAULT_GROWTH_WINDOW,
            seed: 42,
        }
    }
}

/// Rank the pool for held-out projects of each fold with that fold's
/// scorer. Only projects with at least one backer in the pool are ranked.
pub fn rank_folds(
    corpus: &Corpus,
    topics: &TopicIndex,
    plan: &SplitPlan,
    scorers: &[&dyn Scorer],
    pool: &[InvestorId],
    cfg: &RankConfig,
) -> Result<RankReport> {
    if scorers.len() != plan.folds {
        return Err(Error::Dimension { expected: plan.folds, got: scorers.len() });
    }
    if pool.is_empty() {
        return Err(Error::Eval("empty candidate pool".into()));
    }
    let pool_set: HashSet<&InvestorId> = pool.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lists = Vec::new();
    for (fold, scorer) in scorers.iter().enumerate() {
        let mut eligible: Vec<&ProjectId> = plan
            .projects_in(fold)
            .into_iter()
            .filter(|p| corpus.backings(p).iter().any(|b| pool_set.contains(&b.investor_id)))
            .collect();
        eligible.shuffle(&mut rng);
        if let Some(k) = cfg.projects_per_fold {
            eligible.truncate(k);
        }
        eligible.sort();
        for pid in eligible {
            let candidates: Vec<InvestorId> = match cfg.max_pool {
                Some(m) if m < pool.len() => {
                    let mut idx = index::sample(&mut rng, pool.len(), m).into_vec();
                    idx.sort_unstable();
                    idx.into_iter().map(|i| pool[i].clone()).collect()
                }
                _ => pool.to_vec(),
            };
            lists.push(rank_investors(corpus, topics, *scorer, &corpus.projects[pid], &candidates, cfg.growth_window)?);
        }
        log::info!("ranking fold {}/{} done", fold + 1, plan.folds);
    }
    let truth: BTreeSet<(ProjectId, InvestorId)> = lists
        .iter()
        .flat_map(|l| corpus.backings(&l.project_id).iter().map(|b| (l.project_id.clone(), b.investor_id.clone())))
        .collect();
    rank_metrics(&lists, |p, i| truth.contains(&(p.clone(), i.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<InvestorId> {
        (0..n).map(|i| InvestorId(format!("i{i:02}"))).collect()
    }

    #[test]
    fn percentiles_and_ties() {
        let l = rank_scores("p".into(), vec![("b".into(), 0.5), ("a".into(), 0.5)]).unwrap();
        assert_eq!(l.entries[0].investor_id.as_str(), "a");
        assert_eq!(l.entries[0].percentile, 0.0);
        assert_eq!(l.entries[1].percentile, 1.0);
        let one = rank_scores("p".into(), vec![("a".into(), 0.1)]).unwrap();
        assert_eq!(one.entries[0].percentile, 0.0);
        assert!(rank_scores("p".into(), vec![]).is_err());
    }

    #[test]
    fn mean_and_max_rr_arithmetic() {
        let inv = ids(5);
        let scores = inv.iter().enumerate().map(|(k, i)| (i.clone(), 1.0 - k as f64 / 10.0)).collect();
        let l = rank_scores("p".into(), scores).unwrap();
        let truth = |_: &ProjectId, i: &InvestorId| i.as_str() == "i01" || i.as_str() == "i03";
        let r = rank_metrics(&[l], truth).unwrap();
        assert_eq!(r.mean_rr, 0.5);
        assert_eq!(r.max_rr, 0.75);
        assert_eq!(r.average_percentile, 0.5);
    }

    #[test]
    fn perfect_ranking_is_zero_and_empty_truth_excluded() {
        let inv = ids(4);
        let l = rank_scores("p".into(), inv.iter().map(|i| (i.clone(), 0.0)).collect()).unwrap();
        let l2 = RankedList { project_id: "q".into(), entries: l.entries.clone() };
        let r = rank_metrics(&[l, l2], |p, i| p.as_str() == "p" && i.as_str() == "i00").unwrap();
        assert_eq!((r.average_percentile, r.mean_rr, r.max_rr), (0.0, 0.0, 0.0));
        assert_eq!(r.excluded, 1);
    }

    #[test]
    fn random_scorer_is_deterministic_and_uniform() {
        let s = RandomScorer { seed: 7 };
        let pair = |i: usize| PairSpec {
            project_id: "p".into(),
            investor_id: InvestorId(format!("i{i}")),
            label: 0,
            cutoff: 0,
            neg_index: None,
        };
        let v: Vec<f64> = (0..10_000).map(|i| s.score(&pair(i), &vec![]).unwrap()).collect();
        assert_eq!(v[17], s.score(&pair(17), &vec![]).unwrap());
        let m = v.iter().sum::<f64>() / v.len() as f64;
        assert!((m - 0.5).abs() < 0.01);
        assert!(v.iter().all(|x| (0.0..1.0).contains(x)));
    }
}

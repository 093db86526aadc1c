//! Behavioural analyses: how likely investors of each activity bucket are
//! to back projects with given characteristics, feature correlations, and
//! the per-hypothesis correlation with investor activity.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::{ActivityBucket, BucketScheme, Category, InvestorId, Project, ProjectId};
use crate::error::{Error, Result};
use crate::features::{geo_dispersion, growth_rate, TopicIndex, DEFAULT_GROWTH_WINDOW};
use crate::ingest::Corpus;
use crate::stats::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectFeature {
    Updates,
    Comments,
    RewardLevel,
    Website,
    Goal,
    GeoDispersion,
    GrowthRate,
    FacebookFriends,
    Category,
}

impl ProjectFeature {
    pub const ALL: [ProjectFeature; 9] = [
        ProjectFeature::Updates,
        ProjectFeature::Comments,
        ProjectFeature::RewardLevel,
        ProjectFeature::Website,
        ProjectFeature::Goal,
        ProjectFeature::GeoDispersion,
        ProjectFeature::GrowthRate,
        ProjectFeature::FacebookFriends,
        ProjectFeature::Category,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProjectFeature::Updates => "updates",
            ProjectFeature::Comments => "comments",
            ProjectFeature::RewardLevel => "reward_level",
            ProjectFeature::Website => "website",
            ProjectFeature::Goal => "goal",
            ProjectFeature::GeoDispersion => "geo_dispersion",
            ProjectFeature::GrowthRate => "growth_rate",
            ProjectFeature::FacebookFriends => "facebook_friends",
            ProjectFeature::Category => "category",
        }
    }

    pub fn default_binning(self) -> Binning {
        match self {
            ProjectFeature::Updates
            | ProjectFeature::Comments
            | ProjectFeature::RewardLevel
            | ProjectFeature::FacebookFriends => Binning::PowersOf2,
            ProjectFeature::Goal => Binning::PowersOf10,
            ProjectFeature::GeoDispersion | ProjectFeature::GrowthRate => Binning::Quantiles(5),
            ProjectFeature::Website | ProjectFeature::Category => Binning::Categorical,
        }
    }
}

/// Raw end-of-campaign value of a project feature. Category is its index.
pub fn project_value(corpus: &Corpus, p: &Project, feature: ProjectFeature) -> Option<f64> {
    match feature {
        ProjectFeature::Updates => Some(p.update_events.len() as f64),
        ProjectFeature::Comments => Some(p.comment_events.len() as f64),
        ProjectFeature::RewardLevel => Some(p.reward_level_count as f64),
        ProjectFeature::Website => Some(if p.has_dedicated_website { 1.0 } else { 0.0 }),
        ProjectFeature::Goal => Some(p.goal_usd),
        ProjectFeature::GeoDispersion => {
            let backers = corpus.backings(&p.id).iter().filter_map(|b| corpus.investor(&b.investor_id));
            geo_dispersion(p.founder_location.as_ref(), backers)
        }
        ProjectFeature::GrowthRate => growth_rate(p, DEFAULT_GROWTH_WINDOW, None),
        ProjectFeature::FacebookFriends => p.facebook_friend_count.map(|f| f as f64),
        ProjectFeature::Category => Some(p.category.index() as f64),
    }
}

/// Value used in correlations: skewed quantities are log(1+x) transformed,
/// matching the model features.
pub fn correlation_value(corpus: &Corpus, p: &Project, feature: ProjectFeature) -> Option<f64> {
    let v = project_value(corpus, p, feature)?;
    Some(match feature {
        ProjectFeature::Updates
        | ProjectFeature::Comments
        | ProjectFeature::Goal
        | ProjectFeature::GeoDispersion
        | ProjectFeature::FacebookFriends => v.ln_1p(),
        _ => v,
    })
}

fn distinct_backers<'a>(corpus: &'a Corpus, p: &ProjectId) -> BTreeSet<&'a InvestorId> {
    corpus.backings(p).iter().map(|b| &b.investor_id).collect()
}

/// Fraction of (investor, project) backings of projects passing `filter`
/// whose investor falls in activity bucket `bucket`. `None` when no such
/// backing exists.
pub fn conditional_probability(
    corpus: &Corpus,
    scheme: &BucketScheme,
    bucket: ActivityBucket,
    filter: impl Fn(&Project) -> bool,
) -> Option<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for p in corpus.projects.values().filter(|p| filter(p)) {
        for iid in distinct_backers(corpus, &p.id) {
            let inv = &corpus.investors[iid];
            total += 1;
            if scheme.bucket_for_count(inv.activity_level()).map(|b| b.index) == Some(bucket.index) {
                hit += 1;
            }
        }
    }
    (total > 0).then(|| hit as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Binning {
    /// {0}, [1,2), [2,4), [4,8), ...
    PowersOf2,
    /// [1,10), [10,100), ...
    PowersOf10,
    /// Equal-count bins over observed values.
    Quantiles(usize),
    /// One bin per distinct value.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub label: String,
    pub lo: f64,
    /// Exclusive upper bound; inclusive for the last quantile bin.
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityCurve {
    pub feature: ProjectFeature,
    pub bins: Vec<Bin>,
    pub buckets: Vec<String>,
    /// probabilities[bin][bucket]; `None` for bins without backings.
    pub probabilities: Vec<Vec<Option<f64>>>,
    pub support: Vec<Vec<usize>>,
}

fn make_bins(feature: ProjectFeature, binning: Binning, values: &[f64]) -> Vec<Bin> {
    let max = values.iter().copied().fold(0.0, f64::max);
    match binning {
        Binning::PowersOf2 => {
            let mut bins = vec![Bin { label: "0".into(), lo: 0.0, hi: 1.0 }];
            let mut lo = 1.0;
            while lo <= max {
                bins.push(Bin { label: format!("[{lo},{})", lo * 2.0), lo, hi: lo * 2.0 });
                lo *= 2.0;
            }
            bins
        }
        Binning::PowersOf10 => {
            let mut bins = vec![Bin { label: "[0,10)".into(), lo: 0.0, hi: 10.0 }];
            let mut lo = 10.0;
            while lo <= max {
                bins.push(Bin { label: format!("[{lo},{})", lo * 10.0), lo, hi: lo * 10.0 });
                lo *= 10.0;
            }
            bins
        }
        Binning::Quantiles(k) => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let k = k.max(1);
            let n = sorted.len();
            let mut edges: Vec<f64> = (0..=k).map(|i| sorted[((i * (n - 1)) as f64 / k as f64).round() as usize]).collect();
            edges.dedup();
            if edges.len() == 1 {
                edges.push(edges[0]);
            }
            let last = edges.len() - 2;
            edges
                .windows(2)
                .enumerate()
                .map(|(i, w)| Bin {
                    label: if i == last { format!("[{:.4},{:.4}]", w[0], w[1]) } else { format!("[{:.4},{:.4})", w[0], w[1]) },
                    lo: w[0],
                    hi: w[1],
                })
                .collect()
        }
        Binning::Categorical => {
            if feature == ProjectFeature::Category {
                Category::ALL
                    .iter()
                    .filter(|c| values.contains(&(c.index() as f64)))
                    .map(|c| Bin { label: c.name().into(), lo: c.index() as f64, hi: c.index() as f64 + 1.0 })
                    .collect()
            } else {
                let mut distinct: Vec<f64> = values.to_vec();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                distinct.into_iter().map(|v| Bin { label: format!("{v}"), lo: v, hi: v + 1.0 }).collect()
            }
        }
    }
}

fn bin_of(bins: &[Bin], v: f64, binning: Binning) -> Option<usize> {
    let last = bins.len().checked_sub(1)?;
    bins.iter().enumerate().position(|(i, b)| {
        v >= b.lo && (v < b.hi || (matches!(binning, Binning::Quantiles(_)) && i == last && v <= b.hi))
    })
}

/// Per-bin bucket probabilities of backing projects binned by `feature`.
pub fn probability_curve(
    corpus: &Corpus,
    scheme: &BucketScheme,
    feature: ProjectFeature,
    binning: Binning,
) -> Result<ProbabilityCurve> {
    let values: Vec<(&Project, f64)> = corpus
        .projects
        .values()
        .filter_map(|p| project_value(corpus, p, feature).map(|v| (p, v)))
        .collect();
    if values.is_empty() {
        return Err(Error::Invalid(format!("{} is not available for any project", feature.name())));
    }
    let raw: Vec<f64> = values.iter().map(|v| v.1).collect();
    let bins = make_bins(feature, binning, &raw);
    let nb = scheme.len();
    let mut support = vec![vec![0usize; nb]; bins.len()];
    for (p, v) in &values {
        let Some(b) = bin_of(&bins, *v, binning) else { continue };
        for iid in distinct_backers(corpus, &p.id) {
            if let Some(k) = scheme.bucket_for_count(corpus.investors[iid].activity_level()) {
                support[b][k.index] += 1;
            }
        }
    }
    if support.iter().all(|row| row.iter().all(|&c| c == 0)) {
        return Err(Error::Invalid(format!("every {} bin is empty", feature.name())));
    }
    let probabilities = support
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter().map(|&c| (total > 0).then(|| c as f64 / total as f64)).collect()
        })
        .collect();
    Ok(ProbabilityCurve {
        feature,
        bins,
        buckets: scheme.buckets().map(|b| b.label()).collect(),
        probabilities,
        support,
    })
}

impl ProbabilityCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,bucket,probability,n\n");
        for (b, bin) in self.bins.iter().enumerate() {
            for (k, bucket) in self.buckets.iter().enumerate() {
                let p = self.probabilities[b][k].map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(s, "\"{}\",\"{}\",{},{}", bin.label, bucket, p, self.support[b][k]);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Symmetric table of pairwise project-feature correlations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub features: Vec<ProjectFeature>,
    pub cells: Vec<Vec<Option<Correlation>>>,
}

pub const TABLE_FEATURES: [ProjectFeature; 6] = [
    ProjectFeature::Updates,
    ProjectFeature::Comments,
    ProjectFeature::RewardLevel,
    ProjectFeature::Goal,
    ProjectFeature::GrowthRate,
    ProjectFeature::GeoDispersion,
];

pub fn correlation_table(corpus: &Corpus, features: &[ProjectFeature]) -> CorrelationTable {
    let cols: Vec<Vec<Option<f64>>> = features
        .iter()
        .map(|&f| corpus.projects.values().map(|p| correlation_value(corpus, p, f)).collect())
        .collect();
    let k = features.len();
    let mut cells = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let (x, y): (Vec<f64>, Vec<f64>) = cols[a].iter().zip(&cols[b]).filter_map(|(u, v)| Some(((*u)?, (*v)?))).unzip();
            let c = pearson(&x, &y).ok().map(|(r, p_value)| Correlation { r, p_value, n: x.len() });
            cells[a][b] = c;
            cells[b][a] = c;
        }
    }
    CorrelationTable { features: features.to_vec(), cells }
}

impl CorrelationTable {
    pub fn get(&self, a: ProjectFeature, b: ProjectFeature) -> Option<Correlation> {
        let i = self.features.iter().position(|&f| f == a)?;
        let j = self.features.iter().position(|&f| f == b)?;
        self.cells[i][j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisResult {
    pub id: &'static str,
    pub statement: &'static str,
    pub variable: &'static str,
    pub correlation: Option<Correlation>,
    pub direction: Direction,
    pub expected: Direction,
    /// p < 0.05.
    pub significant: bool,
}

impl HypothesisResult {
    pub fn sign_matches(&self) -> bool {
        self.direction == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub results: Vec<HypothesisResult>,
    pub correlations: CorrelationTable,
}

/// The hypotheses paired with the project variable whose correlation with
/// backer activity tests them. `None` marks topical similarity.
pub const HYPOTHESES: [(&str, &str, Option<ProjectFeature>); 8] = [
    ("H1.1", "frequent investors back frequently updated projects", Some(ProjectFeature::Updates)),
    ("H1.2", "frequent investors back projects whose founders answer requests", Some(ProjectFeature::Comments)),
    ("H1.3", "frequent investors back projects with fine-grained funding levels", Some(ProjectFeature::RewardLevel)),
    ("H1.4", "frequent investors back projects with a dedicated web site", Some(ProjectFeature::Website)),
    ("H2", "frequent investors back high-goal projects", Some(ProjectFeature::Goal)),
    ("H3", "occasional investors back local projects", Some(ProjectFeature::GeoDispersion)),
    ("H4", "frequent investors back fast-growing projects", Some(ProjectFeature::GrowthRate)),
    ("H5", "active investors back projects matching their interests", None),
];

fn activity(corpus: &Corpus, iid: &InvestorId) -> f64 {
    (corpus.investors[iid].activity_level() as f64).ln_1p()
}

/// Correlate log activity of each backer with a project variable over all
/// distinct (investor, project) backings.
pub fn activity_correlation(corpus: &Corpus, value: impl Fn(&Project, &InvestorId) -> Option<f64>) -> Option<Correlation> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for p in corpus.projects.values() {
        for iid in distinct_backers(corpus, &p.id) {
            if let Some(v) = value(p, iid) {
                x.push(activity(corpus, iid));
                y.push(v);
            }
        }
    }
    pearson(&x, &y).ok().map(|(r, p_value)| Correlation { r, p_value, n: x.len() })
}

pub fn hypothesis_report(corpus: &Corpus, topics: Option<&TopicIndex>) -> HypothesisReport {
    let results = HYPOTHESES
        .iter()
        .map(|&(id, statement, feature)| {
            let correlation = match feature {
                Some(f) => {
                    let cache: std::collections::HashMap<&ProjectId, Option<f64>> =
                        corpus.projects.values().map(|p| (&p.id, correlation_value(corpus, p, f))).collect();
                    activity_correlation(corpus, |p, _| cache[&p.id])
                }
                None => topics.and_then(|t| {
                    activity_correlation(corpus, |p, iid| t.similarity(&p.id, &corpus.investors[iid]))
                }),
            };
            let direction = match correlation {
                Some(c) if c.r > 0.0 => Direction::Positive,
                Some(c) if c.r < 0.0 => Direction::Negative,
                _ => Direction::NotEvaluable,
            };
            HypothesisResult {
                id,
                statement,
                variable: feature.map_or("topic_similarity", ProjectFeature::name),
                correlation,
                direction,
                expected: Direction::Positive,
                significant: correlation.is_some_and(|c| c.p_value < 0.05),
            }
        })
        .collect();
    HypothesisReport { results, correlations: correlation_table(corpus, &TABLE_FEATURES) }
}

impl HypothesisReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<5} {:<17} {:>7} {:>9} {:>7}  {:<13} statement", "id", "variable", "r", "p", "n", "direction");
        for h in &self.results {
            let (r, p, n) = h
                .correlation
                .map_or(("-".to_string(), "-".to_string(), "-".to_string()), |c| {
                    (format!("{:.3}", c.r), format!("{:.2e}", c.p_value), c.n.to_string())
                });
            let dir = match h.direction {
                Direction::Positive => "positive",
                Direction::Negative => "negative",
                Direction::NotEvaluable => "not evaluable",
            };
            let _ = writeln!(s, "{:<5} {:<17} {:>7} {:>9} {:>7}  {:<13} {}", h.id, h.variable, r, p, n, dir, h.statement);
        }
        let _ = writeln!(s);
        let _ = write!(s, "{:<15}", "");
        for f in &self.correlations.features {
            let _ = write!(s, " {:>15}", f.name());
        }
        let _ = writeln!(s);
        for (i, f) in self.correlations.features.iter().enumerate() {
            let _ = write!(s, "{:<15}", f.name());
            for j in 0..self.correlations.features.len() {
                let cell = self.correlations.cells[i][j].map_or("-".to_string(), |c| {
                    format!("{:.2}{}", c.r, if c.r.abs() > 0.5 && c.p_value < 0.05 { "*" } else { "" })
                });
                let _ = write!(s, " {cell:>15}");
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_two_bins() {
        let bins = make_bins(ProjectFeature::Updates, Binning::PowersOf2, &[0.0, 3.0, 9.0]);
        let labels: Vec<&str> = bins.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["0", "[1,2)", "[2,4)", "[4,8)", "[8,16)"]);
        assert_eq!(bin_of(&bins, 3.0, Binning::PowersOf2), Some(2));
        assert_eq!(bin_of(&bins, 0.0, Binning::PowersOf2), Some(0));
    }

    #[test]
    fn quantile_bins_cover_range() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let bins = make_bins(ProjectFeature::GrowthRate, Binning::Quantiles(5), &v);
        assert_eq!(bins.len(), 5);
        assert!(v.iter().all(|&x| bin_of(&bins, x, Binning::Quantiles(5)).is_some()));
        assert_eq!(bin_of(&bins, 99.0, Binning::Quantiles(5)), Some(4));
    }
}

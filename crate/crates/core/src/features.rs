//! Static, dynamic and Twitter-derived features of (project, investor)
//! pairs, the feature-matrix file format and z-score standardization.
//!
//! Dynamic features only see events strictly before a per-pair cutoff: the
//! pledge time for positive pairs and the campaign midpoint otherwise.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    days_between, format_timestamp, parse_timestamp, Category, GeoPoint, Investor, InvestorId,
    Project, ProjectId, Timestamp, TwitterProfile,
};
use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::text::tokenize;
use crate::topics::{cosine_similarity, LdaModel, TopicVector};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DEFAULT_GROWTH_WINDOW: f64 = 0.15;

/// Great-circle distance in kilometres.
pub fn haversine_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (la1, lo1) = (a.latitude.to_radians(), a.longitude.to_radians());
    let (la2, lo2) = (b.latitude.to_radians(), b.longitude.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Mean founder-to-backer distance over backers with a known location.
/// `None` when the founder location is unknown or no backer is located.
pub fn geo_dispersion<'a>(
    founder: Option<&GeoPoint>,
    backers: impl IntoIterator<Item = &'a Investor>,
) -> Option<f64> {
    let founder = founder?;
    let mut seen = BTreeSet::new();
    let (mut sum, mut n) = (0.0, 0usize);
    for b in backers {
        if !seen.insert(&b.id) {
            continue;
        }
        if let Some(loc) = &b.location {
            sum += haversine_km(founder, loc);
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

fn interpolate(points: &[(Timestamp, f64)], t: Timestamp) -> f64 {
    match points.iter().position(|&(pt, _)| pt >= t) {
        None => points.last().map_or(0.0, |p| p.1),
        Some(0) => points[0].1,
        Some(i) => {
            let (t0, v0) = points[i - 1];
            let (t1, v1) = points[i];
            if t1 == t0 {
                v1
            } else {
                v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64
            }
        }
    }
}

/// Pledged-amount growth over the opening `window_fraction` of the
/// campaign, as a fraction of the goal per day. The window end is clipped to
/// `cutoff` and only series points strictly before the cutoff are used.
/// Values at the window bounds are linearly interpolated, with an implicit
/// zero at launch. `None` when fewer than two series points fall inside the
/// window.
pub fn growth_rate(project: &Project, window_fraction: f64, cutoff: Option<Timestamp>) -> Option<f64> {
    let start = project.launch_time;
    let mut end = start + ((project.deadline - start) as f64 * window_fraction).round() as i64;
    if let Some(c) = cutoff {
        end = end.min(c);
    }
    if end <= start {
        return None;
    }
    let visible = project
        .pledge_series
        .iter()
        .filter(|p| cutoff.is_none_or(|c| p.time < c));
    let mut points: Vec<(Timestamp, f64)> = Vec::new();
    if project.pledge_series.first().is_none_or(|p| p.time > start) {
        points.push((start, 0.0));
    }
    points.extend(visible.map(|p| (p.time, p.pledged_usd)));
    let inside = project
        .pledge_series
        .iter()
        .filter(|p| p.time >= start && p.time <= end && cutoff.is_none_or(|c| p.time < c))
        .count();
    if inside < 2 {
        return None;
    }
    let delta = interpolate(&points, end) - interpolate(&points, start);
    Some(delta / (project.goal_usd * days_between(start, end)))
}

/// Fraction of the investor's distinct projects pledged before the project's
/// launch that share its category. `None` without prior pledges.
pub fn category_match(corpus: &Corpus, investor: &Investor, project: &Project) -> Option<f64> {
    let prior: BTreeSet<&ProjectId> = investor
        .pledges
        .iter()
        .filter(|p| p.timestamp < project.launch_time && p.project_id != project.id)
        .map(|p| &p.project_id)
        .collect();
    if prior.is_empty() {
        return None;
    }
    let same = prior
        .iter()
        .filter(|id| corpus.project(id).is_some_and(|p| p.category == project.category))
        .count();
    Some(same as f64 / prior.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwitterFeatures {
    pub activity: f64,
    pub status: f64,
    pub influence: f64,
}

pub fn twitter_features(profile: &TwitterProfile) -> TwitterFeatures {
    TwitterFeatures {
        activity: (profile.total_tweets as f64).ln_1p(),
        status: ((1.0 + profile.followers as f64) / (1.0 + profile.followees as f64)).ln(),
        influence: profile.avg_retweets + profile.avg_favorites + profile.avg_mentions,
    }
}

// Column layout. Category one-hot occupies CATEGORY_START..CATEGORY_START+13.
pub const GOAL_LOG: usize = 0;
pub const REWARD_LEVELS: usize = 1;
pub const HAS_WEBSITE: usize = 2;
pub const CATEGORY_START: usize = 3;
pub const CATEGORY_MATCH: usize = CATEGORY_START + Category::COUNT;
pub const TOPIC_SIMILARITY: usize = CATEGORY_MATCH + 1;
pub const GROWTH_RATE: usize = TOPIC_SIMILARITY + 1;
pub const UPDATE_COUNT_LOG: usize = GROWTH_RATE + 1;
pub const COMMENT_COUNT_LOG: usize = UPDATE_COUNT_LOG + 1;
pub const GEO_DISPERSION: usize = COMMENT_COUNT_LOG + 1;
pub const TWITTER_ACTIVITY: usize = GEO_DISPERSION + 1;
pub const TWITTER_STATUS: usize = TWITTER_ACTIVITY + 1;
pub const TWITTER_INFLUENCE: usize = TWITTER_STATUS + 1;
pub const N_FEATURES: usize = TWITTER_INFLUENCE + 1;

pub fn feature_names() -> Vec<String> {
    let mut v = vec![
        "goal_log".to_string(),
        "reward_level_count".to_string(),
        "has_website".to_string(),
    ];
    v.extend(Category::ALL.iter().map(|c| format!("category_{}", c.name().to_lowercase())));
    v.extend(
        [
            "category_match",
            "topic_similarity",
            "growth_rate",
            "update_count_log",
            "comment_count_log",
            "geo_dispersion_km",
            "twitter_activity",
            "twitter_status",
            "twitter_influence",
        ]
        .map(String::from),
    );
    v
}

/// Named subset of feature columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    pub name: String,
    pub columns: Vec<usize>,
}

fn project_static() -> Vec<usize> {
    let mut v = vec![GOAL_LOG, REWARD_LEVELS, HAS_WEBSITE];
    v.extend(CATEGORY_START..CATEGORY_START + Category::COUNT);
    v
}

fn dynamic() -> Vec<usize> {
    vec![GROWTH_RATE, UPDATE_COUNT_LOG, COMMENT_COUNT_LOG, GEO_DISPERSION]
}

impl FeatureSet {
    /// Accepts `static`, `dynamic`, `twitter` (project static + dynamic +
    /// Twitter-derived, no pledge history), `all`, or a `+`-joined list of
    /// codes: C comments, R reward levels, S geographic span, G growth,
    /// E category match, TS topic similarity, U updates, GL goal, W website,
    /// K category one-hot, TW the three Twitter features.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let mut columns = match spec.to_ascii_lowercase().as_str() {
            "static" => {
                let mut v = project_static();
                v.extend([CATEGORY_MATCH, TOPIC_SIMILARITY]);
                v
            }
            "dynamic" => dynamic(),
            "twitter" => {
                let mut v = project_static();
                v.extend(dynamic());
                v.extend([TWITTER_ACTIVITY, TWITTER_STATUS, TWITTER_INFLUENCE]);
                v
            }
            "all" => (0..N_FEATURES).collect(),
            _ => {
                let mut v = Vec::new();
                for code in spec.split('+') {
                    match code.trim().to_ascii_uppercase().as_str() {
                        "C" => v.push(COMMENT_COUNT_LOG),
                        "R" => v.push(REWARD_LEVELS),
                        "S" => v.push(GEO_DISPERSION),
                        "G" => v.push(GROWTH_RATE),
                        "E" => v.push(CATEGORY_MATCH),
                        "TS" => v.push(TOPIC_SIMILARITY),
                        "U" => v.push(UPDATE_COUNT_LOG),
                        "GL" => v.push(GOAL_LOG),
                        "W" => v.push(HAS_WEBSITE),
                        "K" => v.extend(CATEGORY_START..CATEGORY_START + Category::COUNT),
                        "TW" => v.extend([TWITTER_ACTIVITY, TWITTER_STATUS, TWITTER_INFLUENCE]),
                        other => {
                            return Err(Error::Config(format!(
                                "unknown feature code {other:?} in {spec:?}"
                            )))
                        }
                    }
                }
                v
            }
        };
        columns.sort_unstable();
        columns.dedup();
        Ok(Self {
            name: spec.to_string(),
            columns,
        })
    }

    pub fn all() -> Self {
        Self::parse("all").expect("builtin")
    }

    pub fn names(&self) -> Vec<String> {
        let all = feature_names();
        self.columns.iter().map(|&c| all[c].clone()).collect()
    }
}

/// The six ablation features and every non-empty combination of them, in
/// order of subset size.
pub fn ablation_subsets() -> Vec<String> {
    const CODES: [&str; 6] = ["C", "R", "S", "G", "E", "TS"];
    let mut subsets: Vec<Vec<&str>> = (1u32..(1 << CODES.len()))
        .map(|mask| {
            CODES
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| *c)
                .collect()
        })
        .collect();
    subsets.sort_by_key(|s| s.len());
    subsets.into_iter().map(|s| s.join("+")).collect()
}

/// Topic vectors of project descriptions and Twitter timelines.
#[derive(Debug, Clone, Default)]
pub struct TopicIndex {
    pub projects: HashMap<ProjectId, TopicVector>,
    pub handles: HashMap<String, TopicVector>,
}

/// Deterministic per-document seed.
fn doc_seed(base: u64, key: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn project_document(p: &Project) -> Vec<String> {
    tokenize(&p.description_text)
}

pub fn profile_document(t: &TwitterProfile) -> Vec<String> {
    t.recent_tweets.iter().flat_map(|s| tokenize(s)).collect()
}

impl TopicIndex {
    /// Infer topic vectors for every project and every Twitter profile.
    /// Empty documents get no vector.
    pub fn build(corpus: &Corpus, model: &LdaModel, iterations: usize) -> Self {
        let mut idx = TopicIndex::default();
        for p in corpus.projects.values() {
            let doc = project_document(p);
            if let Ok(inf) = model.infer(&doc, iterations, doc_seed(model.rng_seed, p.id.as_str())) {
                idx.projects.insert(p.id.clone(), inf.vector);
            }
        }
        for t in corpus.profiles.values() {
            let doc = profile_document(t);
            if let Ok(inf) = model.infer(&doc, iterations, doc_seed(model.rng_seed, &t.handle)) {
                idx.handles.insert(t.handle.clone(), inf.vector);
            }
        }
        idx
    }

    pub fn similarity(&self, project: &ProjectId, investor: &Investor) -> Option<f64> {
        let pv = self.projects.get(project)?;
        let iv = self.handles.get(&investor.twitter.as_ref()?.handle)?;
        cosine_similarity(pv, iv).ok()
    }
}

/// A pair to featurize.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub project_id: ProjectId,
    pub investor_id: InvestorId,
    pub label: u8,
    pub cutoff: Timestamp,
    /// Draw order of a sampled negative; `None` for positives.
    pub neg_index: Option<usize>,
}

/// Feature values of one pair; `None` marks a masked feature.
pub type FeatureVector = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub pair: PairSpec,
    pub values: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

/// Project-side features at a cutoff; shared by every investor paired with
/// the project at that cutoff.
#[derive(Debug, Clone)]
pub struct ProjectSnapshot {
    values: Vec<(usize, Option<f64>)>,
}

impl ProjectSnapshot {
    pub fn at(corpus: &Corpus, project: &Project, cutoff: Timestamp, growth_window: f64) -> Self {
        let mut values = vec![
            (GOAL_LOG, Some(project.goal_usd.ln_1p())),
            (REWARD_LEVELS, Some(project.reward_level_count as f64)),
            (HAS_WEBSITE, Some(if project.has_dedicated_website { 1.0 } else { 0.0 })),
        ];
        for c in Category::ALL {
            let hot = if c == project.category { 1.0 } else { 0.0 };
            values.push((CATEGORY_START + c.index(), Some(hot)));
        }
        let before = |v: &[Timestamp]| v.iter().filter(|&&t| t < cutoff).count() as f64;
        values.push((GROWTH_RATE, growth_rate(project, growth_window, Some(cutoff))));
        values.push((UPDATE_COUNT_LOG, Some(before(&project.update_events).ln_1p())));
        values.push((COMMENT_COUNT_LOG, Some(before(&project.comment_events).ln_1p())));
        let backers = corpus
            .backings(&project.id)
            .iter()
            .take_while(|b| b.timestamp < cutoff)
            .filter_map(|b| corpus.investor(&b.investor_id));
        values.push((GEO_DISPERSION, geo_dispersion(project.founder_location.as_ref(), backers)));
        Self { values }
    }
}

pub fn pair_features(
    corpus: &Corpus,
    topics: &TopicIndex,
    snapshot: &ProjectSnapshot,
    project: &Project,
    investor: &Investor,
) -> FeatureVector {
    let mut v: FeatureVector = vec![None; N_FEATURES];
    for &(i, x) in &snapshot.values {
        v[i] = x;
    }
    v[CATEGORY_MATCH] = category_match(corpus, investor, project);
    v[TOPIC_SIMILARITY] = topics.similarity(&project.id, investor);
    if let Some(tw) = &investor.twitter {
        let f = twitter_features(tw);
        v[TWITTER_ACTIVITY] = Some(f.activity);
        v[TWITTER_STATUS] = Some(f.status);
        v[TWITTER_INFLUENCE] = Some(f.influence);
    }
    v
}

pub fn build_pair_features(
    corpus: &Corpus,
    topics: &TopicIndex,
    pairs: &[PairSpec],
    growth_window: f64,
) -> Result<FeatureMatrix> {
    let mut snapshots: HashMap<(&ProjectId, Timestamp), ProjectSnapshot> = HashMap::new();
    let mut rows = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let project = corpus.project(&pair.project_id).ok_or_else(|| Error::Dangling {
            kind: "project_id",
            from: "feature pair".into(),
            to: pair.project_id.to_string(),
        })?;
        let investor = corpus.investor(&pair.investor_id).ok_or_else(|| Error::Dangling {
            kind: "investor_id",
            from: "feature pair".into(),
            to: pair.investor_id.to_string(),
        })?;
        let snap = snapshots
            .entry((&pair.project_id, pair.cutoff))
            .or_insert_with(|| ProjectSnapshot::at(corpus, project, pair.cutoff, growth_window));
        rows.push(FeatureRow {
            pair: pair.clone(),
            values: pair_features(corpus, topics, snap, project, investor),
        });
    }
    Ok(FeatureMatrix {
        columns: feature_names(),
        rows,
    })
}

/// Positive pairs: each (investor, project) backing among `investors`, with
/// the cutoff at the investor's first pledge to the project.
pub fn positive_pairs<'a>(corpus: &Corpus, investors: impl IntoIterator<Item = &'a InvestorId>) -> Vec<PairSpec> {
    let mut out = Vec::new();
    for iid in investors {
        let Some(inv) = corpus.investor(iid) else { continue };
        let mut first: std::collections::BTreeMap<&ProjectId, Timestamp> = Default::default();
        for p in &inv.pledges {
            let e = first.entry(&p.project_id).or_insert(p.timestamp);
            *e = (*e).min(p.timestamp);
        }
        for (pid, t) in first {
            out.push(PairSpec {
                project_id: pid.clone(),
                investor_id: iid.clone(),
                label: 1,
                cutoff: t,
                neg_index: None,
            });
        }
    }
    out
}

const META_COLUMNS: [&str; 5] = ["project_id", "investor_id", "label", "cutoff", "neg_index"];

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(f);
        let csv_err = |e: csv::Error| Error::Invalid(e.to_string());
        let mut header: Vec<&str> = META_COLUMNS.to_vec();
        header.extend(self.columns.iter().map(String::as_str));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.pair.project_id.0.clone(),
                r.pair.investor_id.0.clone(),
                r.pair.label.to_string(),
                format_timestamp(r.pair.cutoff),
                r.pair.neg_index.map(|i| i.to_string()).unwrap_or_default(),
            ];
            rec.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput("feature matrix", path.to_path_buf()));
        }
        let label = path.display().to_string();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(f);
        let header = rdr.headers().map_err(|e| Error::malformed(&label, 1, e.to_string()))?.clone();
        if header.len() < META_COLUMNS.len() || header.iter().zip(META_COLUMNS).any(|(a, b)| a != b) {
            return Err(Error::malformed(&label, 1, "unexpected header"));
        }
        let columns: Vec<String> = header.iter().skip(META_COLUMNS.len()).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::malformed(&label, line, e.to_string()))?;
            let m = |e: &dyn std::fmt::Display| Error::malformed(&label, line, e.to_string());
            let values = rec
                .iter()
                .skip(META_COLUMNS.len())
                .map(|s| if s.is_empty() { Ok(None) } else { s.parse::<f64>().map(Some) })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| m(&e))?;
            if values.len() != columns.len() {
                return Err(m(&"wrong number of fields"));
            }
            rows.push(FeatureRow {
                pair: PairSpec {
                    project_id: ProjectId(rec[0].to_string()),
                    investor_id: InvestorId(rec[1].to_string()),
                    label: rec[2].parse().map_err(|e| m(&e))?,
                    cutoff: parse_timestamp(&rec[3])?,
                    neg_index: if rec[4].is_empty() { None } else { Some(rec[4].parse().map_err(|e| m(&e))?) },
                },
                values,
            });
        }
        Ok(Self { columns, rows })
    }
}

/// Per-column z-score parameters fitted on observed (unmasked) values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureVector>, columns: &[usize]) -> Self {
        let k = columns.len();
        let (mut sum, mut sq, mut n) = (vec![0.0; k], vec![0.0; k], vec![0usize; k]);
        let rows: Vec<&FeatureVector> = rows.into_iter().collect();
        for r in &rows {
            for (j, &c) in columns.iter().enumerate() {
                if let Some(x) = r[c] {
                    sum[j] += x;
                    n[j] += 1;
                }
            }
        }
        let mean: Vec<f64> = (0..k).map(|j| if n[j] > 0 { sum[j] / n[j] as f64 } else { 0.0 }).collect();
        for r in &rows {
            for (j, &c) in columns.iter().enumerate() {
                if let Some(x) = r[c] {
                    sq[j] += (x - mean[j]).powi(2);
                }
            }
        }
        let std = (0..k)
            .map(|j| {
                let s = if n[j] > 0 { (sq[j] / n[j] as f64).sqrt() } else { 0.0 };
                // constant columns stay at zero
                if s > 1e-12 * mean[j].abs().max(1.0) { s } else { 0.0 }
            })
            .collect();
        Self {
            columns: columns.to_vec(),
            mean,
            std,
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Standardize the selected columns; masked values become 0 (the mean).
    pub fn transform(&self, row: &FeatureVector) -> Vec<f64> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, &c)| match row.get(c).copied().flatten() {
                Some(x) if self.std[j] > 0.0 => (x - self.mean[j]) / self.std[j],
                _ => 0.0,
            })
            .collect()
    }
}

/// Columns to drop among {goal, updates} when strongly correlated (|r| >
/// `threshold`) with each other or with the comment count, which is kept.
pub fn correlated_exclusions(rows: &[&FeatureVector], columns: &[usize], threshold: f64) -> Vec<usize> {
    let present = |c| columns.contains(&c);
    let corr = |a: usize, b: usize| -> Option<f64> {
        let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r[a]?, r[b]?))).collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        crate::stats::pearson_r(&x, &y).ok()
    };
    let mut drop = Vec::new();
    for c in [GOAL_LOG, UPDATE_COUNT_LOG] {
        if !present(c) {
            continue;
        }
        let others = [GOAL_LOG, UPDATE_COUNT_LOG, COMMENT_COUNT_LOG];
        if others
            .iter()
            .filter(|&&o| o != c && present(o))
            .any(|&o| corr(c, o).is_some_and(|r| r.abs() > threshold))
        {
            drop.push(c);
        }
    }
    drop
}

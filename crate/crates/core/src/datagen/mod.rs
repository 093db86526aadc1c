//! Synthetic corpus generator with recorded ground truth.
//!
//! Project management features are log-normal marginals coupled by a
//! Gaussian copula. Investor activity follows a shifted power law. Each
//! investor backs exactly as many projects as its activity level, drawn
//! without replacement with weights from a logistic pledge model.

pub mod activity;
pub mod copula;
pub mod lexicon;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    parse_timestamp, Category, GeoPoint, Investor, InvestorId, Outcome, Pledge, PledgePoint, Project, ProjectId,
    Timestamp, TwitterProfile, SECONDS_PER_DAY,
};
use crate::error::{Error, Result};
use crate::features::haversine_km;
use crate::ingest::{dump_corpus, match_tweets, Corpus, RawTweet};
use crate::models::lr::sigmoid;
use crate::stats::mean;

use activity::{solve_activity, PowerLaw};
use copula::{calibrate_latent, cholesky, correlate, whitened_normals};
use lexicon::{name_variant, person_names, pseudo_words, NameVariant, CITIES};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Log-normal marginal with a given mean. Counts are floored and shifted
/// so that `min` is the smallest value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marginal {
    pub mean: f64,
    pub sigma: f64,
    pub min: f64,
    pub discrete: bool,
}

impl Marginal {
    pub fn value(&self, z: f64) -> f64 {
        let m = self.mean - self.min + if self.discrete { 0.5 } else { 0.0 };
        let mu = m.ln() - 0.5 * self.sigma * self.sigma;
        let x = (mu + self.sigma * z).exp();
        if self.discrete {
            self.min + x.floor()
        } else {
            (self.min + x).round()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Marginals {
    pub updates: Marginal,
    pub comments: Marginal,
    pub reward_levels: Marginal,
    pub goal_usd: Marginal,
}

impl Default for Marginals {
    fn default() -> Self {
        Self {
            updates: Marginal { mean: 6.0, sigma: 0.9, min: 0.0, discrete: true },
            comments: Marginal { mean: 40.0, sigma: 1.3, min: 0.0, discrete: true },
            reward_levels: Marginal { mean: 8.0, sigma: 0.45, min: 1.0, discrete: true },
            goal_usd: Marginal { mean: 20_875.38, sigma: 1.0, min: 100.0, discrete: false },
        }
    }
}

/// Target Pearson correlations of the observed project variables, with
/// counts and goal on a log1p scale and reward levels raw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureCorrelations {
    pub updates_comments: f64,
    pub updates_reward: f64,
    pub comments_reward: f64,
    pub updates_goal: f64,
    pub comments_goal: f64,
    pub reward_goal: f64,
}

impl Default for FeatureCorrelations {
    fn default() -> Self {
        Self {
            updates_comments: 0.67,
            updates_reward: 0.12,
            comments_reward: 0.03,
            updates_goal: 0.60,
            comments_goal: 0.85,
            reward_goal: 0.19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityTargets {
    /// Share of investors with fewer than `occasional_below` projects.
    pub occasional_mass: f64,
    pub occasional_below: usize,
    /// Share of investors with at least `frequent_from` projects.
    pub frequent_mass: f64,
    pub frequent_from: usize,
    pub max_activity: usize,
}

impl Default for ActivityTargets {
    fn default() -> Self {
        Self {
            occasional_mass: 0.51,
            occasional_below: 4,
            frequent_mass: 0.11,
            frequent_from: 32,
            max_activity: 200,
        }
    }
}

/// Coefficients of the pledge model. For investor i and project p the
/// log-odds are
///
/// ```text
/// b_i + pop_p
///     + a_i (updates zU + comments zC + reward zR + website w + goal zG + growth h)
///     + (category + topic a_i) interest_i(cat_p)
///     - locality occ_i d(i,p)/1000km
///     + taste t_i zG
/// ```
///
/// where a_i is the centred log activity, occ_i marks occasional investors,
/// t_i = ±1 is a hidden taste exposed through Twitter status and b_i makes
/// the expected number of backings equal the activity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Effects {
    pub success_popularity: f64,
    pub popularity_noise: f64,
    pub updates: f64,
    pub comments: f64,
    pub reward: f64,
    pub website: f64,
    pub goal: f64,
    pub growth: f64,
    pub topic: f64,
    pub category: f64,
    pub locality: f64,
    pub taste: f64,
}

impl Default for Effects {
    fn default() -> Self {
        Self {
            success_popularity: 0.5,
            popularity_noise: 0.5,
            updates: 0.25,
            comments: 0.15,
            reward: 0.1,
            website: 0.2,
            goal: 0.3,
            growth: 0.4,
            topic: 0.8,
            category: 0.8,
            locality: 1.5,
            taste: 2.0,
        }
    }
}

/// Observable Twitter statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwitterParams {
    /// Share of investors with a Twitter account.
    pub coverage: f64,
    /// log total tweets = base + slope ln(activity) + N(0, noise)
    pub activity_base: f64,
    pub activity_slope: f64,
    pub activity_noise: f64,
    /// log follower ratio = base + gain taste + N(0, noise)
    pub status_base: f64,
    pub status_gain: f64,
    pub status_noise: f64,
    pub recent_tweets: usize,
    pub tokens_per_tweet: usize,
    /// Accounts that tweet about projects without backing any.
    pub bystanders: usize,
}

impl Default for TwitterParams {
    fn default() -> Self {
        Self {
            coverage: 0.85,
            activity_base: 4.0,
            activity_slope: 0.3,
            activity_noise: 0.9,
            status_base: 0.2,
            status_gain: 1.0,
            status_noise: 0.35,
            recent_tweets: 20,
            tokens_per_tweet: 8,
            bystanders: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub n_projects: usize,
    pub n_investors: usize,
    pub success_rate: f64,
    /// Relative frequency of each category in declaration order.
    pub category_weights: Vec<f64>,
    pub marginals: Marginals,
    pub correlations: FeatureCorrelations,
    pub activity: ActivityTargets,
    pub effects: Effects,
    pub twitter: TwitterParams,
    /// Weights of goal, growth latent and noise in the success score.
    pub success_goal_weight: f64,
    pub success_growth_weight: f64,
    /// Mean final amount as a share of goal.
    pub successful_final_ratio: f64,
    pub failed_final_ratio: f64,
    pub website_rate: f64,
    pub facebook_rate: f64,
    pub start_time: String,
    pub launch_spread_days: f64,
    pub duration_mean_days: f64,
    pub duration_sd_days: f64,
    /// Early-pledge share is sigmoid(base + gain h).
    pub early_base: f64,
    pub early_gain: f64,
    pub words_per_topic: usize,
    pub description_tokens: usize,
    pub description_focus: f64,
    pub missing_investor_city: f64,
    pub missing_founder_city: f64,
    pub calibration_samples: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_projects: 1149,
            n_investors: 7429,
            success_rate: 0.453,
            category_weights: vec![17.0, 15.0, 12.0, 10.0, 8.0, 8.0, 7.0, 5.0, 3.0, 5.0, 4.0, 4.0, 2.0],
            marginals: Marginals::default(),
            correlations: FeatureCorrelations::default(),
            activity: ActivityTargets::default(),
            effects: Effects::default(),
            twitter: TwitterParams::default(),
            success_goal_weight: 1.0,
            success_growth_weight: 0.8,
            successful_final_ratio: 1.69,
            failed_final_ratio: 0.195,
            website_rate: 0.4,
            facebook_rate: 0.7,
            start_time: "2013-07-01T00:00:00Z".into(),
            launch_spread_days: 100.0,
            duration_mean_days: 29.0,
            duration_sd_days: 6.0,
            early_base: -1.0,
            early_gain: 1.0,
            words_per_topic: 40,
            description_tokens: 60,
            description_focus: 0.85,
            missing_investor_city: 0.1,
            missing_founder_city: 0.03,
            calibration_samples: 40_000,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("gen: {m}")));
        if self.n_projects < 2 || self.n_investors < 2 {
            return bad("need at least two projects and two investors");
        }
        if self.category_weights.len() != Category::COUNT
            || self.category_weights.iter().any(|w| !(*w >= 0.0))
            || self.category_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("category_weights needs 13 non-negative weights with a positive sum");
        }
        for (name, p) in [
            ("success_rate", self.success_rate),
            ("twitter.coverage", self.twitter.coverage),
            ("website_rate", self.website_rate),
            ("facebook_rate", self.facebook_rate),
            ("description_focus", self.description_focus),
            ("missing_investor_city", self.missing_investor_city),
            ("missing_founder_city", self.missing_founder_city),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, m) in [
            ("updates", &self.marginals.updates),
            ("comments", &self.marginals.comments),
            ("reward_levels", &self.marginals.reward_levels),
            ("goal_usd", &self.marginals.goal_usd),
        ] {
            if !(m.sigma > 0.0 && m.mean > m.min && m.min >= 0.0) {
                return bad(&format!("marginal {name} needs sigma > 0 and mean > min >= 0"));
            }
        }
        if self.marginals.goal_usd.min <= 0.0 {
            return bad("goal_usd.min must be positive");
        }
        if !(self.successful_final_ratio > 1.01 && self.failed_final_ratio > 0.0 && self.failed_final_ratio < 0.99) {
            return bad("final ratios must satisfy failed < 0.99 and successful > 1.01");
        }
        if self.duration_mean_days < 2.0 || self.words_per_topic < 2 || self.description_tokens == 0 {
            return bad("duration, vocabulary and description sizes must be positive");
        }
        parse_timestamp(&self.start_time)?;
        Ok(())
    }

    /// Latent correlation matrix over (updates, comments, reward, goal).
    pub fn latent_correlations(&self) -> Result<Vec<Vec<f64>>> {
        let m = &self.marginals;
        let tr = |g: Marginal, log: bool| move |z: f64| if log { g.value(z).ln_1p() } else { g.value(z) };
        let (u, c, r, g) = (tr(m.updates, true), tr(m.comments, true), tr(m.reward_levels, false), tr(m.goal_usd, true));
        let t = &self.correlations;
        let n = self.calibration_samples.max(1000);
        let s = self.seed ^ 0xc0_9a1a;
        let uc = calibrate_latent(t.updates_comments, u, c, n, s)?;
        let ur = calibrate_latent(t.updates_reward, u, r, n, s)?;
        let cr = calibrate_latent(t.comments_reward, c, r, n, s)?;
        let ug = calibrate_latent(t.updates_goal, u, g, n, s)?;
        let cg = calibrate_latent(t.comments_goal, c, g, n, s)?;
        let rg = calibrate_latent(t.reward_goal, r, g, n, s)?;
        Ok(vec![
            vec![1.0, uc, ur, ug],
            vec![uc, 1.0, cr, cg],
            vec![ur, cr, 1.0, rg],
            vec![ug, cg, rg, 1.0],
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectTruth {
    pub id: ProjectId,
    pub category: usize,
    pub city: Option<usize>,
    pub popularity: f64,
    /// Standardized log1p updates, comments, goal and raw reward levels.
    pub z_updates: f64,
    pub z_comments: f64,
    pub z_reward: f64,
    pub z_goal: f64,
    pub website: f64,
    pub growth: f64,
    pub early_share: f64,
    pub successful: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestorTruth {
    pub id: InvestorId,
    pub handle: Option<String>,
    pub activity: usize,
    pub centred_log_activity: f64,
    pub occasional: bool,
    pub intercept: f64,
    pub taste: f64,
    pub favourite: usize,
    pub second: usize,
    pub city: Option<usize>,
}

/// Everything needed to recompute any pair's pledge probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: GenConfig,
    pub activity_tau: f64,
    pub activity_shift: f64,
    pub activity_max: usize,
    pub latent_correlations: Vec<Vec<f64>>,
    pub projects: Vec<ProjectTruth>,
    pub investors: Vec<InvestorTruth>,
}

fn city_point(i: usize) -> GeoPoint {
    let (name, lat, lon, _) = CITIES[i];
    GeoPoint { latitude: lat, longitude: lon, city_name: name.to_string() }
}

fn interest(inv: &InvestorTruth, category: usize) -> f64 {
    if category == inv.favourite {
        1.0
    } else if category == inv.second {
        0.5
    } else {
        0.0
    }
}

impl GroundTruth {
    /// Pair log-odds without the investor intercept.
    pub fn pair_score(&self, investor: usize, project: usize) -> f64 {
        let e = &self.config.effects;
        let i = &self.investors[investor];
        let p = &self.projects[project];
        let a = i.centred_log_activity;
        let mut s = p.popularity
            + a * (e.updates * p.z_updates
                + e.comments * p.z_comments
                + e.reward * p.z_reward
                + e.website * p.website
                + e.goal * p.z_goal
                + e.growth * p.growth)
            + (e.category + e.topic * a) * interest(i, p.category)
            + e.taste * i.taste * p.z_goal;
        if i.occasional {
            if let (Some(ci), Some(cp)) = (i.city, p.city) {
                s -= e.locality * haversine_km(&city_point(ci), &city_point(cp)) / 1000.0;
            }
        }
        s
    }

    pub fn pledge_probability(&self, investor: usize, project: usize) -> f64 {
        sigmoid(self.investors[investor].intercept + self.pair_score(investor, project))
    }

    pub fn investor_index(&self, id: &InvestorId) -> Option<usize> {
        self.investors.binary_search_by(|i| i.id.cmp(id)).ok()
    }

    pub fn project_index(&self, id: &ProjectId) -> Option<usize> {
        self.projects.binary_search_by(|p| p.id.cmp(id)).ok()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Generator(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput("ground truth file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(&path.display().to_string(), e.line(), e.to_string()))
    }
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

fn weighted_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    v.iter().map(|x| if sd > 0.0 { (x - m) / sd } else { 0.0 }).collect()
}

/// Intercept b with sum_p sigmoid(b + s_p) = target.
fn solve_intercept(scores: &[f64], target: f64) -> f64 {
    let f = |b: f64| scores.iter().map(|s| sigmoid(b + s)).sum::<f64>() - target;
    let (mut lo, mut hi) = (-60.0, 60.0);
    let mut b = (target / (scores.len() as f64 - target)).ln() - mean(scores);
    b = b.clamp(lo, hi);
    for _ in 0..100 {
        let fb = f(b);
        if fb.abs() < 1e-9 {
            break;
        }
        if fb > 0.0 {
            hi = b;
        } else {
            lo = b;
        }
        let d: f64 = scores.iter().map(|s| {
            let q = sigmoid(b + s);
            q * (1.0 - q)
        }).sum();
        let next = b - fb / d;
        b = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    b
}

/// Weighted sampling of `k` indices without replacement (exponential keys).
fn sample_weighted(weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / w.max(1e-300), i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keys.truncate(k);
    keys.into_iter().map(|(_, i)| i).collect()
}

struct Vocabulary {
    topics: Vec<Vec<String>>,
    title_words: Vec<String>,
}

impl Vocabulary {
    /// Topic k < 13 belongs to category k; the last topic is background.
    fn new(words_per_topic: usize, n_titles: usize, rng: &mut impl Rng) -> Self {
        let k = Category::COUNT + 1;
        let mut words = pseudo_words(k * words_per_topic + n_titles, rng);
        let title_words = words.split_off(k * words_per_topic);
        let topics = words.chunks(words_per_topic).map(<[String]>::to_vec).collect();
        Self { topics, title_words }
    }

    fn background(&self) -> usize {
        Category::COUNT
    }

    fn word(&self, topic: usize, rng: &mut impl Rng) -> &str {
        let t = &self.topics[topic];
        &t[rng.random_range(0..t.len())]
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|h| h.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Generate a corpus and its ground truth.
pub fn generate(cfg: &GenConfig) -> Result<(Corpus, GroundTruth)> {
    cfg.validate()?;
    let start = parse_timestamp(&cfg.start_time)?;
    let m = cfg.n_projects;
    let a = &cfg.activity;
    let law: PowerLaw = solve_activity(
        a.occasional_mass,
        a.occasional_below,
        a.frequent_mass,
        a.frequent_from,
        a.max_activity.min(m),
    )?;
    let latent = cfg.latent_correlations()?;
    let chol = cholesky(&latent)?;

    let mut rng = stream(cfg.seed, 1);
    let vocab = Vocabulary::new(cfg.words_per_topic, m, &mut rng);
    let city_weights: Vec<f64> = CITIES.iter().map(|c| c.3).collect();

    // projects: static draws
    let mut rng = stream(cfg.seed, 2);
    let latent_draws = whitened_normals(m, 4, &mut rng)?;
    let mut raw = Vec::with_capacity(m);
    for e in &latent_draws {
        let z = correlate(&chol, e);
        let mg = &cfg.marginals;
        let updates = mg.updates.value(z[0]) as usize;
        let comments = mg.comments.value(z[1]) as usize;
        let reward = mg.reward_levels.value(z[2]) as u32;
        let goal = mg.goal_usd.value(z[3]);
        let category = weighted_index(&cfg.category_weights, &mut rng);
        let website = rng.random_bool(cfg.website_rate);
        let growth: f64 = rng.sample(StandardNormal);
        let noise: f64 = rng.sample(StandardNormal);
        let pop_noise: f64 = rng.sample(StandardNormal);
        let city = (!rng.random_bool(cfg.missing_founder_city)).then(|| weighted_index(&city_weights, &mut rng));
        let launch = start + (rng.random::<f64>() * cfg.launch_spread_days * SECONDS_PER_DAY) as i64;
        let days = (cfg.duration_mean_days + cfg.duration_sd_days * rng.sample::<f64, _>(StandardNormal))
            .round()
            .clamp(7.0, 60.0);
        let deadline = launch + (days * SECONDS_PER_DAY) as i64;
        let facebook = rng
            .random_bool(cfg.facebook_rate)
            .then(|| LogNormal::<f64>::new(5.5, 1.0).expect("valid").sample(&mut rng).round() as u64);
        raw.push((updates, comments, reward, goal, category, website, growth, noise, pop_noise, city, launch, deadline, facebook));
    }
    let zu = standardize(&raw.iter().map(|r| (r.0 as f64).ln_1p()).collect::<Vec<_>>());
    let zc = standardize(&raw.iter().map(|r| (r.1 as f64).ln_1p()).collect::<Vec<_>>());
    let zr = standardize(&raw.iter().map(|r| r.2 as f64).collect::<Vec<_>>());
    let zg = standardize(&raw.iter().map(|r| r.3.ln_1p()).collect::<Vec<_>>());
    let web_rate = raw.iter().filter(|r| r.5).count() as f64 / m as f64;

    let n_success = (cfg.success_rate * m as f64).round() as usize;
    let mut order: Vec<usize> = (0..m).collect();
    let success_score = |p: usize| -cfg.success_goal_weight * zg[p] + cfg.success_growth_weight * raw[p].6 + raw[p].7;
    order.sort_by(|&x, &y| success_score(y).total_cmp(&success_score(x)).then(x.cmp(&y)));
    let mut successful = vec![false; m];
    for &p in order.iter().take(n_success) {
        successful[p] = true;
    }

    let width = (m.max(2) - 1).to_string().len().max(4);
    let e = &cfg.effects;
    let projects: Vec<ProjectTruth> = (0..m)
        .map(|p| ProjectTruth {
            id: ProjectId(format!("p{p:0width$}")),
            category: raw[p].4,
            city: raw[p].9,
            popularity: e.success_popularity * f64::from(u8::from(successful[p])) + e.popularity_noise * raw[p].8,
            z_updates: zu[p],
            z_comments: zc[p],
            z_reward: zr[p],
            z_goal: zg[p],
            website: f64::from(u8::from(raw[p].5)) - web_rate,
            growth: raw[p].6,
            early_share: sigmoid(cfg.early_base + cfg.early_gain * raw[p].6),
            successful: successful[p],
        })
        .collect();

    // investors
    let n = cfg.n_investors;
    let mut rng = stream(cfg.seed, 3);
    let names = person_names(n + cfg.twitter.bystanders, &mut rng);
    let activity: Vec<usize> = (0..n).map(|_| law.sample(&mut rng)).collect();
    let logs: Vec<f64> = activity.iter().map(|&k| (k as f64).ln()).collect();
    let total: f64 = activity.iter().sum::<usize>() as f64;
    let wmean = activity.iter().zip(&logs).map(|(&k, l)| k as f64 * l).sum::<f64>() / total;
    let wsd = (activity.iter().zip(&logs).map(|(&k, l)| k as f64 * (l - wmean).powi(2)).sum::<f64>() / total).sqrt();
    let iwidth = (n.max(2) - 1).to_string().len().max(5);
    let mut investors: Vec<InvestorTruth> = (0..n)
        .map(|i| {
            let favourite = weighted_index(&cfg.category_weights, &mut rng);
            let mut w2 = cfg.category_weights.clone();
            w2[favourite] = 0.0;
            let second = if w2.iter().sum::<f64>() > 0.0 { weighted_index(&w2, &mut rng) } else { favourite };
            let city = (!rng.random_bool(cfg.missing_investor_city)).then(|| weighted_index(&city_weights, &mut rng));
            InvestorTruth {
                id: InvestorId(format!("u{i:0iwidth$}")),
                handle: None,
                activity: activity[i],
                centred_log_activity: if wsd > 0.0 { (logs[i] - wmean) / wsd } else { 0.0 },
                occasional: activity[i] < a.occasional_below,
                intercept: 0.0,
                taste: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                favourite,
                second,
                city,
            }
        })
        .collect();

    let mut truth = GroundTruth {
        config: cfg.clone(),
        activity_tau: law.tau,
        activity_shift: law.shift,
        activity_max: law.n_max,
        latent_correlations: latent,
        projects,
        investors: Vec::new(),
    };

    // backings
    let mut rng = stream(cfg.seed, 4);
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        truth.investors.push(investors[i].clone());
        let scores: Vec<f64> = (0..m).map(|p| truth.pair_score(i, p)).collect();
        let b = solve_intercept(&scores, activity[i] as f64);
        investors[i].intercept = b;
        truth.investors[i].intercept = b;
        let w: Vec<f64> = scores.iter().map(|s| sigmoid(b + s)).collect();
        let mut picks = sample_weighted(&w, activity[i], &mut rng);
        picks.sort_unstable();
        chosen.push(picks);
    }
    let mut backers: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, picks) in chosen.iter().enumerate() {
        for &p in picks {
            backers[p].push(i);
        }
    }

    // pledge times, amounts and series
    let mut rng = stream(cfg.seed, 5);
    let mut pledges: Vec<Vec<Pledge>> = vec![Vec::new(); n];
    let mut domain_projects = Vec::with_capacity(m);
    let succ_extra = LogNormal::new(
        (cfg.successful_final_ratio - 1.01).ln() - 0.5 * 0.7f64.powi(2),
        0.7,
    )
    .map_err(|e| Error::Generator(e.to_string()))?;
    let fail_beta = Beta::new(1.2, 1.2 * (0.99 / cfg.failed_final_ratio - 1.0)).map_err(|e| Error::Generator(e.to_string()))?;
    let share = LogNormal::<f64>::new(0.0, 0.8).expect("valid");
    let mut desc_rng = stream(cfg.seed, 6);
    for p in 0..m {
        let t = &truth.projects[p];
        let (launch, deadline) = (raw[p].10, raw[p].11);
        let goal = raw[p].3;
        let span = deadline - launch;
        let early_end = launch + (span as f64 * 0.15) as i64;
        let list = &backers[p];
        let k = list.len();
        let target = if t.successful && k > 0 {
            goal * (1.01 + succ_extra.sample(&mut rng))
        } else {
            goal * 0.99 * fail_beta.sample(&mut rng)
        };
        let weights: Vec<f64> = (0..k).map(|_| share.sample(&mut rng)).collect();
        let wsum: f64 = weights.iter().sum();
        let mut amounts: Vec<f64> = weights.iter().map(|w| ((target * w / wsum) * 100.0).round().max(1.0) / 100.0).collect();
        let sum: f64 = amounts.iter().sum();
        if t.successful && k > 0 && sum < goal {
            amounts[k - 1] += ((goal - sum) * 100.0).ceil() / 100.0 + 0.01;
        }
        if !t.successful && sum >= goal {
            let scale = 0.98 * goal / sum;
            for a in amounts.iter_mut() {
                *a = (*a * scale * 100.0).floor() / 100.0;
            }
        }
        let mut events: Vec<(Timestamp, f64)> = Vec::with_capacity(k);
        for (j, &i) in list.iter().enumerate() {
            let ts = if rng.random_bool(t.early_share) {
                rng.random_range(launch..early_end.max(launch + 1))
            } else {
                rng.random_range(early_end..=deadline)
            };
            events.push((ts, amounts[j]));
            pledges[i].push(Pledge {
                investor_id: truth.investors[i].id.clone(),
                project_id: t.id.clone(),
                timestamp: ts,
                amount_usd: Some(amounts[j]),
            });
        }
        events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut series = Vec::new();
        let mut times: Vec<Timestamp> = (0..).map(|d| launch + d * SECONDS_PER_DAY as i64).take_while(|&x| x < deadline).collect();
        times.push(deadline);
        let (mut idx, mut pledged, mut count) = (0, 0.0, 0u64);
        for time in times {
            while idx < events.len() && events[idx].0 <= time {
                pledged += events[idx].1;
                count += 1;
                idx += 1;
            }
            series.push(PledgePoint { time, pledged_usd: (pledged * 100.0f64).round() / 100.0, backers: count });
        }
        let reached = series.last().is_some_and(|s| s.pledged_usd >= goal);
        let outcome = if reached { Outcome::Successful } else { Outcome::Failed };
        let uniform_times = |count: usize, rng: &mut ChaCha8Rng| {
            let mut v: Vec<Timestamp> = (0..count).map(|_| rng.random_range(launch..=deadline)).collect();
            v.sort_unstable();
            v
        };
        let update_events = uniform_times(raw[p].0, &mut rng);
        let comment_events = uniform_times(raw[p].1, &mut rng);
        let description: Vec<&str> = (0..cfg.description_tokens)
            .map(|_| {
                let topic = if desc_rng.random_bool(cfg.description_focus) { t.category } else { vocab.background() };
                vocab.word(topic, &mut desc_rng)
            })
            .collect();
        let title = format!("{} {}", capitalize(&vocab.title_words[p]), capitalize(vocab.word(t.category, &mut desc_rng)));
        domain_projects.push(Project {
            id: t.id.clone(),
            title,
            category: Category::from_index(t.category).expect("category index"),
            goal_usd: goal,
            launch_time: launch,
            deadline,
            founder_location: t.city.map(city_point),
            reward_level_count: raw[p].2,
            has_dedicated_website: raw[p].5,
            facebook_friend_count: raw[p].12,
            description_text: description.join(" "),
            short_urls: vec![format!("kck.st/{}", short_code(p, cfg.seed))],
            update_events,
            comment_events,
            pledge_series: series,
            outcome,
        });
    }
    for (p, dp) in domain_projects.iter().enumerate() {
        truth.projects[p].successful = dp.outcome == Outcome::Successful;
    }

    // twitter
    let tw = &cfg.twitter;
    let mut rng = stream(cfg.seed, 7);
    let mut profiles = Vec::new();
    let mut raw_tweets = Vec::new();
    let mut handles = HashSet::new();
    let mut make_handle = |name: &str, rng: &mut ChaCha8Rng| loop {
        let base: String = crate::text::normalize_name(name).chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let h = format!("{base}{}", rng.random_range(0..100));
        if handles.insert(h.clone()) {
            return h;
        }
    };
    let act_noise = Normal::new(0.0, tw.activity_noise).map_err(|e| Error::Generator(e.to_string()))?;
    let status_noise = Normal::new(0.0, tw.status_noise).map_err(|e| Error::Generator(e.to_string()))?;
    let followees = LogNormal::<f64>::new(5.0, 1.0).expect("valid");
    let engagement = LogNormal::<f64>::new(-1.0, 1.0).expect("valid");
    let profile_for = |handle: String, name: String, inv: Option<&InvestorTruth>, rng: &mut ChaCha8Rng| {
        let act = inv.map_or(1.0, |i| i.activity as f64);
        let total_tweets = (tw.activity_base + tw.activity_slope * act.ln() + act_noise.sample(rng)).exp().round() as u64;
        let fe = followees.sample(rng).round();
        let taste = inv.map_or(0.0, |i| i.taste);
        let status = tw.status_base + tw.status_gain * taste + status_noise.sample(rng);
        let followers = ((1.0 + fe) * status.exp() - 1.0).round().max(0.0) as u64;
        let (fav, second) = inv.map_or_else(
            || (rng.random_range(0..Category::COUNT), rng.random_range(0..Category::COUNT)),
            |i| (i.favourite, i.second),
        );
        let recent_tweets = (0..tw.recent_tweets)
            .map(|_| {
                let u: f64 = rng.random();
                let topic = if u < 0.55 { fav } else if u < 0.75 { second } else { vocab.background() };
                (0..tw.tokens_per_tweet).map(|_| vocab.word(topic, rng)).collect::<Vec<_>>().join(" ")
            })
            .collect();
        TwitterProfile {
            handle,
            name,
            total_tweets,
            followers,
            followees: fe as u64,
            avg_retweets: engagement.sample(rng),
            avg_favorites: engagement.sample(rng),
            avg_mentions: engagement.sample(rng),
            recent_tweets,
        }
    };
    let mention = |p: &Project, deadline: Timestamp, after: Timestamp, rng: &mut ChaCha8Rng| {
        let text = if rng.random_bool(0.75) {
            format!("Just backed this on kickstarter: {} http://{}", p.title, p.short_urls[0])
        } else {
            format!("Check out {} on kickstarter!", p.title)
        };
        (text, rng.random_range(after..=deadline))
    };
    for i in 0..n {
        if !rng.random_bool(tw.coverage) {
            continue;
        }
        let variant = match rng.random_range(0..20) {
            0..=10 => NameVariant::Same,
            11..=13 => NameVariant::Lowercase,
            14..=17 => NameVariant::MiddleInitial,
            _ => NameVariant::Accented,
        };
        let shown = name_variant(&names[i], variant, &mut rng);
        let handle = make_handle(&names[i], &mut rng);
        truth.investors[i].handle = Some(handle.clone());
        profiles.push(profile_for(handle.clone(), shown, Some(&truth.investors[i]), &mut rng));
        let mine = &pledges[i];
        let count = rng.random_range(1..=2).min(mine.len());
        let mut idx: Vec<usize> = (0..mine.len()).collect();
        idx.shuffle(&mut rng);
        for &k in idx.iter().take(count) {
            let pl = &mine[k];
            let p = &domain_projects[truth.project_index(&pl.project_id).expect("project")];
            let (text, ts) = mention(p, p.deadline, pl.timestamp, &mut rng);
            raw_tweets.push(RawTweet { author_handle: handle.clone(), text, timestamp: ts });
        }
    }
    for b in 0..tw.bystanders {
        let name = names[n + b].clone();
        let handle = make_handle(&name, &mut rng);
        profiles.push(profile_for(handle.clone(), name, None, &mut rng));
        for _ in 0..rng.random_range(1..=3) {
            let p = &domain_projects[rng.random_range(0..m)];
            let (text, ts) = mention(p, p.deadline, p.launch_time, &mut rng);
            raw_tweets.push(RawTweet { author_handle: handle.clone(), text, timestamp: ts });
        }
        if rng.random_bool(0.3) {
            let ts = start + (rng.random::<f64>() * cfg.launch_spread_days * SECONDS_PER_DAY) as i64;
            raw_tweets.push(RawTweet { author_handle: handle, text: "loving all the new kickstarter campaigns".into(), timestamp: ts });
        }
    }
    raw_tweets.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.author_handle.cmp(&b.author_handle)));
    let (tweets, _) = match_tweets(&raw_tweets, &domain_projects);

    let domain_investors: Vec<Investor> = investors
        .iter()
        .zip(pledges)
        .enumerate()
        .map(|(i, (t, mut pl))| {
            pl.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.project_id.cmp(&b.project_id)));
            Investor {
                id: t.id.clone(),
                display_name: names[i].clone(),
                location: t.city.map(city_point),
                pledges: pl,
                twitter: None,
            }
        })
        .collect();
    let geocode: BTreeMap<String, GeoPoint> = (0..CITIES.len()).map(|c| (CITIES[c].0.to_string(), city_point(c))).collect();
    let corpus = Corpus::from_parts(domain_projects, domain_investors, tweets, profiles, geocode)?;
    Ok((corpus, truth))
}

fn short_code(p: usize, seed: u64) -> String {
    const ALPHABET: &[u8] = b"abcdefghijkmnpqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    // bijective in p for a fixed seed, so codes never collide
    let mut x = (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed.rotate_left(17);
    let mut s = String::new();
    for _ in 0..7 {
        s.push(ALPHABET[(x % ALPHABET.len() as u64) as usize] as char);
        x /= ALPHABET.len() as u64;
    }
    s
}

/// Generate and write corpus files plus the ground truth into `dir`.
pub fn generate_to_dir(cfg: &GenConfig, dir: &Path) -> Result<(Corpus, GroundTruth)> {
    let (corpus, truth) = generate(cfg)?;
    dump_corpus(&corpus, dir)?;
    truth.write(&dir.join(GROUND_TRUTH_FILE))?;
    Ok((corpus, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig { n_projects: 150, n_investors: 500, calibration_samples: 5000, ..Default::default() }
    }

    #[test]
    fn marginal_means_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mg = Marginals::default();
        for m in [mg.updates, mg.comments, mg.reward_levels, mg.goal_usd] {
            let v: Vec<f64> = (0..200_000).map(|_| m.value(rng.sample(StandardNormal))).collect();
            let got = mean(&v);
            assert!((got - m.mean).abs() / m.mean < 0.05, "{got} vs {}", m.mean);
        }
    }

    #[test]
    fn intercept_hits_expected_count() {
        let s: Vec<f64> = (0..300).map(|i| (i as f64 / 30.0).sin() * 3.0).collect();
        for target in [1.0, 7.0, 150.0] {
            let b = solve_intercept(&s, target);
            let got: f64 = s.iter().map(|x| sigmoid(b + x)).sum();
            assert!((got - target).abs() < 1e-6);
        }
    }

    #[test]
    fn short_codes_unique() {
        let codes: HashSet<String> = (0..5000).map(|p| short_code(p, 42)).collect();
        assert_eq!(codes.len(), 5000);
    }

    #[test]
    fn small_corpus_is_consistent() {
        let cfg = small();
        let (corpus, truth) = generate(&cfg).unwrap();
        assert_eq!(corpus.projects.len(), 150);
        assert_eq!(corpus.investors.len(), 500);
        for (i, inv) in corpus.investors.values().enumerate() {
            assert_eq!(inv.activity_level(), truth.investors[i].activity);
        }
        let (again, _) = generate(&cfg).unwrap();
        assert_eq!(corpus.tweets, again.tweets);
        assert_eq!(corpus.investors, again.investors);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small();
        cfg.success_rate = 1.5;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.correlations.updates_goal = -0.9;
        cfg.correlations.comments_goal = 0.9;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.activity.frequent_mass = 0.6;
        assert!(generate(&cfg).is_err());
    }
}

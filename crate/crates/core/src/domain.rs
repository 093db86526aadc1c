//! Core records shared by every stage: projects, investors, pledges and
//! Twitter profiles, plus the activity-bucket scheme used to separate
//! occasional from frequent investors.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// UTC seconds since the Unix epoch.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Most recent tweets kept per profile.
pub const MAX_RECENT_TWEETS: usize = 200;

pub fn parse_timestamp(text: &str) -> Result<Timestamp> {
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc).timestamp())
        .map_err(|e| Error::Invalid(format!("bad timestamp {text:?}: {e}")))
}

pub fn format_timestamp(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.to_string())
}

pub fn days_between(from: Timestamp, to: Timestamp) -> f64 {
    (to - from) as f64 / SECONDS_PER_DAY
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(ProjectId);
string_id!(InvestorId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Film,
    Music,
    Publishing,
    Art,
    Design,
    Technology,
    Games,
    Comics,
    Dance,
    Theater,
    Food,
    Fashion,
    Photography,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Category::Film,
        Category::Music,
        Category::Publishing,
        Category::Art,
        Category::Design,
        Category::Technology,
        Category::Games,
        Category::Comics,
        Category::Dance,
        Category::Theater,
        Category::Food,
        Category::Fashion,
        Category::Photography,
    ];

    pub const COUNT: usize = 13;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Category> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Film => "Film",
            Category::Music => "Music",
            Category::Publishing => "Publishing",
            Category::Art => "Art",
            Category::Design => "Design",
            Category::Technology => "Technology",
            Category::Games => "Games",
            Category::Comics => "Comics",
            Category::Dance => "Dance",
            Category::Theater => "Theater",
            Category::Food => "Food",
            Category::Fashion => "Fashion",
            Category::Photography => "Photography",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    pub city_name: String,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64, city_name: impl Into<String>) -> Result<Self> {
        let city_name = city_name.into();
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::Invalid(format!(
                "coordinates out of range for {city_name:?}: ({latitude}, {longitude})"
            )));
        }
        Ok(Self {
            latitude,
            longitude,
            city_name,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Successful,
    Failed,
    Ongoing,
}

/// One snapshot of a campaign's funding progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PledgePoint {
    pub time: Timestamp,
    pub pledged_usd: f64,
    pub backers: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub id: ProjectId,
    pub title: String,
    pub category: Category,
    pub goal_usd: f64,
    pub launch_time: Timestamp,
    pub deadline: Timestamp,
    pub founder_location: Option<GeoPoint>,
    pub reward_level_count: u32,
    pub has_dedicated_website: bool,
    pub facebook_friend_count: Option<u64>,
    pub description_text: String,
    /// Short-URL tokens that point at the project page.
    pub short_urls: Vec<String>,
    pub update_events: Vec<Timestamp>,
    pub comment_events: Vec<Timestamp>,
    pub pledge_series: Vec<PledgePoint>,
    pub outcome: Outcome,
}

impl Project {
    pub fn duration_days(&self) -> f64 {
        days_between(self.launch_time, self.deadline)
    }

    pub fn midpoint(&self) -> Timestamp {
        self.launch_time + (self.deadline - self.launch_time) / 2
    }

    pub fn in_window(&self, t: Timestamp) -> bool {
        t >= self.launch_time && t <= self.deadline
    }

    /// True when the cumulative pledged amount reached the goal at or before
    /// the deadline.
    pub fn reached_goal(&self) -> bool {
        self.pledge_series
            .iter()
            .any(|p| p.time <= self.deadline && p.pledged_usd >= self.goal_usd)
    }

    pub fn final_pledged(&self) -> f64 {
        self.pledge_series.last().map_or(0.0, |p| p.pledged_usd)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if self.deadline <= self.launch_time {
            return Err(Error::Invalid(format!("project {id}: deadline not after launch")));
        }
        if !(self.goal_usd > 0.0 && self.goal_usd.is_finite()) {
            return Err(Error::Invalid(format!("project {id}: goal must be positive")));
        }
        for w in self.pledge_series.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::Invalid(format!(
                    "project {id}: pledge series timestamps not strictly increasing"
                )));
            }
            if w[1].pledged_usd < w[0].pledged_usd || w[1].backers < w[0].backers {
                return Err(Error::Invalid(format!(
                    "project {id}: pledge series decreases"
                )));
            }
        }
        if self.pledge_series.iter().any(|p| !(p.pledged_usd >= 0.0)) {
            return Err(Error::Invalid(format!("project {id}: negative pledged amount")));
        }
        let reached = self.reached_goal();
        if reached != (self.outcome == Outcome::Successful) {
            return Err(Error::Invalid(format!(
                "project {id}: outcome {:?} disagrees with pledge series (goal reached: {reached})",
                self.outcome
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pledge {
    pub investor_id: InvestorId,
    pub project_id: ProjectId,
    pub timestamp: Timestamp,
    pub amount_usd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwitterProfile {
    pub handle: String,
    /// Display name shown on the account; used for identity linking.
    pub name: String,
    pub total_tweets: u64,
    pub followers: u64,
    pub followees: u64,
    pub avg_retweets: f64,
    pub avg_favorites: f64,
    pub avg_mentions: f64,
    pub recent_tweets: Vec<String>,
}

impl TwitterProfile {
    pub fn validate(&self) -> Result<()> {
        if self.recent_tweets.len() > MAX_RECENT_TWEETS {
            return Err(Error::Invalid(format!(
                "profile @{}: {} recent tweets exceeds {MAX_RECENT_TWEETS}",
                self.handle,
                self.recent_tweets.len()
            )));
        }
        for v in [self.avg_retweets, self.avg_favorites, self.avg_mentions] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "profile @{}: engagement averages must be non-negative",
                    self.handle
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Investor {
    pub id: InvestorId,
    pub display_name: String,
    pub location: Option<GeoPoint>,
    pub pledges: Vec<Pledge>,
    pub twitter: Option<TwitterProfile>,
}

impl Investor {
    /// Distinct projects supported; duplicate pledges to one project count once.
    pub fn supported_projects(&self) -> BTreeSet<&ProjectId> {
        self.pledges.iter().map(|p| &p.project_id).collect()
    }

    pub fn activity_level(&self) -> usize {
        self.supported_projects().len()
    }

    pub fn has_pledged(&self, project: &ProjectId) -> bool {
        self.pledges.iter().any(|p| &p.project_id == project)
    }
}

/// Activity ranges by count of distinct supported projects.
///
/// The default scheme is `[1,4) [4,8) [8,16) [16,32) [32,inf)`: the first
/// bucket holds occasional investors, the last frequent ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketScheme {
    lower_bounds: Vec<usize>,
}

impl Default for BucketScheme {
    fn default() -> Self {
        Self {
            lower_bounds: vec![1, 4, 8, 16, 32],
        }
    }
}

impl BucketScheme {
    pub fn new(lower_bounds: Vec<usize>) -> Result<Self> {
        if lower_bounds.first() != Some(&1) {
            return Err(Error::Config("activity buckets must start at 1".into()));
        }
        if lower_bounds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "activity bucket bounds must be strictly increasing".into(),
            ));
        }
        Ok(Self { lower_bounds })
    }

    pub fn len(&self) -> usize {
        self.lower_bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower_bounds.is_empty()
    }

    pub fn bucket_for_count(&self, count: usize) -> Option<ActivityBucket> {
        if count == 0 {
            return None;
        }
        let index = self
            .lower_bounds
            .iter()
            .rposition(|&lo| count >= lo)
            .expect("first bound is 1");
        Some(self.bucket(index))
    }

    pub fn bucket(&self, index: usize) -> ActivityBucket {
        ActivityBucket {
            index,
            lo: self.lower_bounds[index],
            hi: self.lower_bounds.get(index + 1).copied(),
            of: self.lower_bounds.len(),
        }
    }

    pub fn buckets(&self) -> impl Iterator<Item = ActivityBucket> + '_ {
        (0..self.len()).map(|i| self.bucket(i))
    }

    pub fn activity_bucket(&self, investor: &Investor) -> Result<ActivityBucket> {
        self.bucket_for_count(investor.activity_level())
            .ok_or_else(|| Error::NoActivity(investor.id.to_string()))
    }
}

/// Half-open range `[lo, hi)` of supported-project counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivityBucket {
    pub index: usize,
    pub lo: usize,
    pub hi: Option<usize>,
    of: usize,
}

impl ActivityBucket {
    pub fn is_occasional(&self) -> bool {
        self.index == 0
    }

    pub fn is_frequent(&self) -> bool {
        self.index + 1 == self.of
    }

    pub fn contains(&self, count: usize) -> bool {
        count >= self.lo && self.hi.is_none_or(|hi| count < hi)
    }

    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) => format!("[{},{})", self.lo, hi),
            None => format!("[{},inf)", self.lo),
        }
    }
}

impl fmt::Display for ActivityBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Bucket under the default power-of-two scheme.
pub fn activity_bucket(investor: &Investor) -> Result<ActivityBucket> {
    BucketScheme::default().activity_bucket(investor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn investor_with(projects: &[&str]) -> Investor {
        Investor {
            id: "i1".into(),
            display_name: "Test".into(),
            location: None,
            pledges: projects
                .iter()
                .map(|p| Pledge {
                    investor_id: "i1".into(),
                    project_id: (*p).into(),
                    timestamp: 0,
                    amount_usd: None,
                })
                .collect(),
            twitter: None,
        }
    }

    fn numbered(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn three_projects_is_occasional() {
        let ids = numbered(3);
        let inv = investor_with(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        let b = activity_bucket(&inv).unwrap();
        assert!(b.is_occasional());
        assert_eq!(b.label(), "[1,4)");
    }

    #[test]
    fn thirty_three_projects_is_frequent() {
        let ids = numbered(33);
        let inv = investor_with(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        let b = activity_bucket(&inv).unwrap();
        assert!(b.is_frequent());
        assert_eq!(b.label(), "[32,inf)");
    }

    #[test]
    fn single_project_is_occasional() {
        assert!(activity_bucket(&investor_with(&["a"])).unwrap().is_occasional());
    }

    #[test]
    fn no_pledges_is_an_error() {
        assert!(matches!(
            activity_bucket(&investor_with(&[])),
            Err(Error::NoActivity(_))
        ));
    }

    #[test]
    fn duplicate_pledges_collapse() {
        let inv = investor_with(&["a", "a", "b", "a"]);
        assert_eq!(inv.activity_level(), 2);
    }

    #[test]
    fn bucket_edges() {
        let s = BucketScheme::default();
        let idx = |n| s.bucket_for_count(n).unwrap().index;
        assert_eq!(idx(1), 0);
        assert_eq!(idx(3), 0);
        assert_eq!(idx(4), 1);
        assert_eq!(idx(7), 1);
        assert_eq!(idx(8), 2);
        assert_eq!(idx(16), 3);
        assert_eq!(idx(31), 3);
        assert_eq!(idx(32), 4);
        assert_eq!(idx(10_000), 4);
        assert!(s.bucket_for_count(0).is_none());
    }

    #[test]
    fn bad_schemes_rejected() {
        assert!(BucketScheme::new(vec![2, 4]).is_err());
        assert!(BucketScheme::new(vec![1, 4, 4]).is_err());
        assert!(BucketScheme::new(vec![1, 10, 100]).is_ok());
    }

    #[test]
    fn category_parse_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.name().parse::<Category>().unwrap(), c);
        }
        assert!("Knitting".parse::<Category>().is_err());
    }

    #[test]
    fn timestamps_round_trip() {
        let t = parse_timestamp("2013-07-15T12:30:00Z").unwrap();
        assert_eq!(format_timestamp(t), "2013-07-15T12:30:00Z");
    }

    proptest::proptest! {
        #[test]
        fn bucket_stable_under_reordering(mut counts in proptest::collection::vec(0usize..40, 1..60)) {
            let ids: Vec<String> = counts.iter().map(|c| format!("p{c}")).collect();
            let a = investor_with(&ids.iter().map(String::as_str).collect::<Vec<_>>());
            counts.reverse();
            let ids_rev: Vec<String> = counts.iter().map(|c| format!("p{c}")).collect();
            let b = investor_with(&ids_rev.iter().map(String::as_str).collect::<Vec<_>>());
            proptest::prop_assert_eq!(activity_bucket(&a).unwrap(), activity_bucket(&b).unwrap());
            let bucket = activity_bucket(&a).unwrap();
            proptest::prop_assert!(bucket.contains(a.activity_level()));
        }
    }
}

//! Corpus files: line-delimited JSON records plus a CSV geocoding table.
//!
//! A corpus directory holds
//!
//! | file                     | one record per line                               |
//! |--------------------------|---------------------------------------------------|
//! | `projects.jsonl`         | campaign, event timelines and pledge series       |
//! | `investors.jsonl`        | `{id, name, city}`                                |
//! | `pledges.jsonl`          | `{investor_id, project_id, time, amount_usd}`     |
//! | `tweets.jsonl`           | `{author, text, time, matched_project_id?}`       |
//! | `twitter_profiles.jsonl` | handle, display name, counts, recent tweets       |
//! | `geocode.csv`            | `city,lat,lon` centroid table                     |
//!
//! All timestamps are RFC 3339 UTC strings. Cities missing from the geocode
//! table leave the location absent.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{
    format_timestamp, parse_timestamp, GeoPoint, Investor, InvestorId, Outcome, Pledge,
    PledgePoint, Project, ProjectId, Timestamp, TwitterProfile,
};
use crate::error::{Error, Result};
use crate::text::normalize;

pub const PROJECTS_FILE: &str = "projects.jsonl";
pub const INVESTORS_FILE: &str = "investors.jsonl";
pub const PLEDGES_FILE: &str = "pledges.jsonl";
pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const PROFILES_FILE: &str = "twitter_profiles.jsonl";
pub const GEOCODE_FILE: &str = "geocode.csv";

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub projects: PathBuf,
    pub investors: PathBuf,
    pub pledges: PathBuf,
    pub tweets: PathBuf,
    pub profiles: PathBuf,
    pub geocode: PathBuf,
}

impl CorpusPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        Self {
            projects: d.join(PROJECTS_FILE),
            investors: d.join(INVESTORS_FILE),
            pledges: d.join(PLEDGES_FILE),
            tweets: d.join(TWEETS_FILE),
            profiles: d.join(PROFILES_FILE),
            geocode: d.join(GEOCODE_FILE),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesRecord {
    pub time: String,
    pub pledged_usd: f64,
    pub backers: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectRecord {
    pub id: String,
    pub title: String,
    pub category: String,
    pub goal_usd: f64,
    pub launch_time: String,
    pub deadline: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub founder_city: Option<String>,
    pub reward_level_count: u32,
    pub has_dedicated_website: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facebook_friend_count: Option<u64>,
    pub description: String,
    #[serde(default)]
    pub short_urls: Vec<String>,
    #[serde(default)]
    pub update_times: Vec<String>,
    #[serde(default)]
    pub comment_times: Vec<String>,
    pub pledge_series: Vec<SeriesRecord>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestorRecord {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PledgeRecord {
    pub investor_id: String,
    pub project_id: String,
    pub time: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount_usd: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TweetLine {
    pub author: String,
    pub text: String,
    pub time: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_project_id: Option<String>,
}

/// A raw tweet before project matching.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTweet {
    pub author_handle: String,
    pub text: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub author_handle: String,
    pub text: String,
    pub timestamp: Timestamp,
    pub matched_project_id: Option<ProjectId>,
}

/// One backing of a project, in time order within the project index.
#[derive(Debug, Clone, PartialEq)]
pub struct Backing {
    pub timestamp: Timestamp,
    pub investor_id: InvestorId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchReport {
    pub matched: usize,
    pub unmatched: usize,
    pub ambiguous: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub projects: usize,
    pub investors: usize,
    pub pledges: usize,
    pub tweets: usize,
    pub profiles: usize,
    pub cities: usize,
    pub tweet_matches: MatchReport,
    pub warnings: Vec<String>,
}

/// Cross-validated, immutable corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub projects: BTreeMap<ProjectId, Project>,
    pub investors: BTreeMap<InvestorId, Investor>,
    pub tweets: Vec<TweetRecord>,
    pub profiles: BTreeMap<String, TwitterProfile>,
    pub geocode: BTreeMap<String, GeoPoint>,
    backings: BTreeMap<ProjectId, Vec<Backing>>,
}

impl Corpus {
    /// Validate every invariant and build the per-project backing index.
    pub fn from_parts(
        projects: Vec<Project>,
        investors: Vec<Investor>,
        tweets: Vec<TweetRecord>,
        profiles: Vec<TwitterProfile>,
        geocode: BTreeMap<String, GeoPoint>,
    ) -> Result<Self> {
        let mut pmap = BTreeMap::new();
        for p in projects {
            p.validate()?;
            if pmap.contains_key(&p.id) {
                return Err(Error::Invalid(format!("duplicate project id {}", p.id)));
            }
            pmap.insert(p.id.clone(), p);
        }
        let mut imap = BTreeMap::new();
        let mut backings: BTreeMap<ProjectId, Vec<Backing>> = BTreeMap::new();
        for inv in investors {
            for pl in &inv.pledges {
                if pl.investor_id != inv.id {
                    return Err(Error::Dangling {
                        kind: "investor_id",
                        from: format!("pledge in investor {}", inv.id),
                        to: pl.investor_id.to_string(),
                    });
                }
                let project = pmap.get(&pl.project_id).ok_or_else(|| Error::Dangling {
                    kind: "project_id",
                    from: format!("pledge by investor {}", inv.id),
                    to: pl.project_id.to_string(),
                })?;
                if !project.in_window(pl.timestamp) {
                    return Err(Error::Invalid(format!(
                        "pledge by {} to {} at {} outside campaign window",
                        inv.id,
                        pl.project_id,
                        format_timestamp(pl.timestamp)
                    )));
                }
                backings
                    .entry(pl.project_id.clone())
                    .or_default()
                    .push(Backing {
                        timestamp: pl.timestamp,
                        investor_id: inv.id.clone(),
                    });
            }
            if let Some(tw) = &inv.twitter {
                tw.validate()?;
            }
            if imap.contains_key(&inv.id) {
                return Err(Error::Invalid(format!("duplicate investor id {}", inv.id)));
            }
            imap.insert(inv.id.clone(), inv);
        }
        for list in backings.values_mut() {
            list.sort_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.investor_id.cmp(&b.investor_id))
            });
        }
        for t in &tweets {
            if let Some(pid) = &t.matched_project_id {
                if !pmap.contains_key(pid) {
                    return Err(Error::Dangling {
                        kind: "project_id",
                        from: format!("tweet by @{}", t.author_handle),
                        to: pid.to_string(),
                    });
                }
            }
        }
        let mut prmap = BTreeMap::new();
        for p in profiles {
            p.validate()?;
            if prmap.contains_key(&p.handle) {
                return Err(Error::Invalid(format!("duplicate twitter handle @{}", p.handle)));
            }
            prmap.insert(p.handle.clone(), p);
        }
        Ok(Self {
            projects: pmap,
            investors: imap,
            tweets,
            profiles: prmap,
            geocode,
            backings,
        })
    }

    pub fn project(&self, id: &ProjectId) -> Option<&Project> {
        self.projects.get(id)
    }

    pub fn investor(&self, id: &InvestorId) -> Option<&Investor> {
        self.investors.get(id)
    }

    /// Backings of a project ordered by time.
    pub fn backings(&self, id: &ProjectId) -> &[Backing] {
        self.backings.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn pledge_count(&self) -> usize {
        self.investors.values().map(|i| i.pledges.len()).sum()
    }

    /// Copy of the corpus with Twitter profiles attached to linked investors.
    pub fn with_links(&self, links: &[(InvestorId, String)]) -> Result<Corpus> {
        let mut c = self.clone();
        for inv in c.investors.values_mut() {
            inv.twitter = None;
        }
        for (iid, handle) in links {
            let profile = self.profiles.get(handle).cloned().ok_or_else(|| Error::Dangling {
                kind: "handle",
                from: format!("link for investor {iid}"),
                to: handle.clone(),
            })?;
            let inv = c.investors.get_mut(iid).ok_or_else(|| Error::Dangling {
                kind: "investor_id",
                from: format!("link to @{handle}"),
                to: iid.to_string(),
            })?;
            inv.twitter = Some(profile);
        }
        Ok(c)
    }

    /// Drop every event later than `cutoff`: pledges, updates, comments,
    /// series points and tweets.
    pub fn truncated_at(&self, cutoff: Timestamp) -> Result<Corpus> {
        let projects = self
            .projects
            .values()
            .map(|p| {
                let mut p = p.clone();
                p.update_events.retain(|&t| t <= cutoff);
                p.comment_events.retain(|&t| t <= cutoff);
                p.pledge_series.retain(|s| s.time <= cutoff);
                if p.outcome == Outcome::Successful && !p.reached_goal() {
                    p.outcome = Outcome::Ongoing;
                }
                p
            })
            .collect();
        let investors = self
            .investors
            .values()
            .map(|i| {
                let mut i = i.clone();
                i.pledges.retain(|pl| pl.timestamp <= cutoff);
                i
            })
            .collect();
        let tweets = self
            .tweets
            .iter()
            .filter(|t| t.timestamp <= cutoff)
            .cloned()
            .collect();
        Corpus::from_parts(
            projects,
            investors,
            tweets,
            self.profiles.values().cloned().collect(),
            self.geocode.clone(),
        )
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parse a JSON-lines file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let label = file_label(path);
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::malformed(&label, i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct GeocodeRow {
    city: String,
    lat: f64,
    lon: f64,
}

pub fn read_geocode(path: &Path) -> Result<BTreeMap<String, GeoPoint>> {
    let label = file_label(path);
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.deserialize::<GeocodeRow>().enumerate() {
        // header is line 1
        let row = row.map_err(|e| Error::malformed(&label, i + 2, e.to_string()))?;
        let p = GeoPoint::new(row.lat, row.lon, row.city.clone())
            .map_err(|e| Error::malformed(&label, i + 2, e.to_string()))?;
        out.insert(row.city, p);
    }
    Ok(out)
}

pub fn write_geocode(path: &Path, geocode: &BTreeMap<String, GeoPoint>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    for p in geocode.values() {
        w.serialize(GeocodeRow {
            city: p.city_name.clone(),
            lat: p.latitude,
            lon: p.longitude,
        })
        .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn lookup_city(
    geocode: &BTreeMap<String, GeoPoint>,
    city: &Option<String>,
    who: &str,
    warnings: &mut Vec<String>,
) -> Option<GeoPoint> {
    let name = city.as_ref()?;
    let hit = geocode.get(name).cloned();
    if hit.is_none() {
        warnings.push(format!("{who}: city {name:?} not in geocode table"));
    }
    hit
}

fn ts_list(v: &[String]) -> Result<Vec<Timestamp>> {
    let mut out = v.iter().map(|s| parse_timestamp(s)).collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    Ok(out)
}

pub fn project_from_record(
    r: ProjectRecord,
    geocode: &BTreeMap<String, GeoPoint>,
    warnings: &mut Vec<String>,
) -> Result<Project> {
    let founder_location = lookup_city(geocode, &r.founder_city, &format!("project {}", r.id), warnings);
    Ok(Project {
        id: ProjectId(r.id),
        title: r.title,
        category: r.category.parse()?,
        goal_usd: r.goal_usd,
        launch_time: parse_timestamp(&r.launch_time)?,
        deadline: parse_timestamp(&r.deadline)?,
        founder_location,
        reward_level_count: r.reward_level_count,
        has_dedicated_website: r.has_dedicated_website,
        facebook_friend_count: r.facebook_friend_count,
        description_text: r.description,
        short_urls: r.short_urls,
        update_events: ts_list(&r.update_times)?,
        comment_events: ts_list(&r.comment_times)?,
        pledge_series: r
            .pledge_series
            .into_iter()
            .map(|s| {
                Ok(PledgePoint {
                    time: parse_timestamp(&s.time)?,
                    pledged_usd: s.pledged_usd,
                    backers: s.backers,
                })
            })
            .collect::<Result<_>>()?,
        outcome: r.outcome,
    })
}

pub fn project_to_record(p: &Project) -> ProjectRecord {
    let ts = |v: &[Timestamp]| v.iter().map(|&t| format_timestamp(t)).collect();
    ProjectRecord {
        id: p.id.0.clone(),
        title: p.title.clone(),
        category: p.category.name().to_string(),
        goal_usd: p.goal_usd,
        launch_time: format_timestamp(p.launch_time),
        deadline: format_timestamp(p.deadline),
        founder_city: p.founder_location.as_ref().map(|g| g.city_name.clone()),
        reward_level_count: p.reward_level_count,
        has_dedicated_website: p.has_dedicated_website,
        facebook_friend_count: p.facebook_friend_count,
        description: p.description_text.clone(),
        short_urls: p.short_urls.clone(),
        update_times: ts(&p.update_events),
        comment_times: ts(&p.comment_events),
        pledge_series: p
            .pledge_series
            .iter()
            .map(|s| SeriesRecord {
                time: format_timestamp(s.time),
                pledged_usd: s.pledged_usd,
                backers: s.backers,
            })
            .collect(),
        outcome: p.outcome,
    }
}

fn strip_url(token: &str) -> &str {
    let t = token.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | '(' | ')' | '"' | '\'' | ';' | ':'));
    t.strip_prefix("https://")
        .or_else(|| t.strip_prefix("http://"))
        .unwrap_or(t)
}

/// Assign each tweet to at most one project.
///
/// A short-URL token match wins over title matching. Titles match as
/// case-insensitive whole-token phrases of the normalized text. A tweet that
/// hits two distinct projects by the same rule is left unmatched and counted
/// as ambiguous.
pub fn match_tweets<'a>(
    tweets: &[RawTweet],
    projects: impl IntoIterator<Item = &'a Project>,
) -> (Vec<TweetRecord>, MatchReport) {
    let mut by_url: HashMap<String, Vec<ProjectId>> = HashMap::new();
    // first title token -> (title tokens, project)
    let mut by_head: HashMap<String, Vec<(Vec<String>, ProjectId)>> = HashMap::new();
    for p in projects {
        for u in &p.short_urls {
            let key = strip_url(u).to_string();
            if !key.is_empty() {
                let list = by_url.entry(key).or_default();
                if !list.contains(&p.id) {
                    list.push(p.id.clone());
                }
            }
        }
        let toks: Vec<String> = normalize(&p.title).split(' ').map(str::to_string).collect();
        if let Some(head) = toks.first().filter(|h| !h.is_empty()) {
            by_head
                .entry(head.clone())
                .or_default()
                .push((toks.clone(), p.id.clone()));
        }
    }

    let mut report = MatchReport::default();
    let out = tweets
        .iter()
        .map(|t| {
            let mut url_hits: Vec<&ProjectId> = Vec::new();
            for tok in t.text.split_whitespace() {
                if let Some(ids) = by_url.get(strip_url(tok)) {
                    for id in ids {
                        if !url_hits.contains(&id) {
                            url_hits.push(id);
                        }
                    }
                }
            }
            let decided = match url_hits.len() {
                1 => Some(Some(url_hits[0].clone())),
                0 => None,
                _ => Some(None),
            };
            let url_ambiguous = decided == Some(None);
            let matched = match decided {
                Some(m) => m,
                None => {
                    let norm = normalize(&t.text);
                    let words: Vec<&str> = norm.split(' ').collect();
                    let mut hits: Vec<&ProjectId> = Vec::new();
                    for start in 0..words.len() {
                        if let Some(cands) = by_head.get(words[start]) {
                            for (toks, id) in cands {
                                let end = start + toks.len();
                                if end <= words.len()
                                    && toks.iter().zip(&words[start..end]).all(|(a, b)| a == b)
                                    && !hits.contains(&id)
                                {
                                    hits.push(id);
                                }
                            }
                        }
                    }
                    match hits.len() {
                        1 => Some(hits[0].clone()),
                        0 => None,
                        _ => {
                            report.ambiguous += 1;
                            None
                        }
                    }
                }
            };
            if url_ambiguous {
                report.ambiguous += 1;
            }
            if matched.is_some() {
                report.matched += 1;
            } else {
                report.unmatched += 1;
            }
            TweetRecord {
                author_handle: t.author_handle.clone(),
                text: t.text.clone(),
                timestamp: t.timestamp,
                matched_project_id: matched,
            }
        })
        .collect();
    (out, report)
}

/// Load, validate and cross-link a corpus.
pub fn load_corpus(paths: &CorpusPaths) -> Result<(Corpus, LoadReport)> {
    for (what, p) in [
        ("projects file", &paths.projects),
        ("investors file", &paths.investors),
        ("pledges file", &paths.pledges),
        ("tweets file", &paths.tweets),
        ("twitter profiles file", &paths.profiles),
        ("geocode table", &paths.geocode),
    ] {
        if !p.exists() {
            return Err(Error::MissingInput(what, p.clone()));
        }
    }
    let mut report = LoadReport::default();
    let geocode = read_geocode(&paths.geocode)?;

    let plabel = file_label(&paths.projects);
    let mut projects = Vec::new();
    for (i, r) in read_jsonl::<ProjectRecord>(&paths.projects)?.into_iter().enumerate() {
        let p = project_from_record(r, &geocode, &mut report.warnings).map_err(|e| match e {
            Error::UnknownCategory(_) => e,
            other => Error::malformed(&plabel, i + 1, other.to_string()),
        })?;
        projects.push(p);
    }

    let mut investors: BTreeMap<InvestorId, Investor> = BTreeMap::new();
    for r in read_jsonl::<InvestorRecord>(&paths.investors)? {
        let location = lookup_city(&geocode, &r.city, &format!("investor {}", r.id), &mut report.warnings);
        let id = InvestorId(r.id);
        if investors.contains_key(&id) {
            return Err(Error::Invalid(format!("duplicate investor id {id}")));
        }
        investors.insert(
            id.clone(),
            Investor {
                id,
                display_name: r.name,
                location,
                pledges: Vec::new(),
                twitter: None,
            },
        );
    }

    let pledges = read_jsonl::<PledgeRecord>(&paths.pledges)?;
    if pledges.is_empty() {
        report.warnings.push("pledge file is empty".into());
    }
    let project_ids: std::collections::BTreeSet<&ProjectId> = projects.iter().map(|p| &p.id).collect();
    let ledger_label = file_label(&paths.pledges);
    for (i, r) in pledges.into_iter().enumerate() {
        let pid = ProjectId(r.project_id);
        let iid = InvestorId(r.investor_id);
        if !project_ids.contains(&pid) {
            return Err(Error::Dangling {
                kind: "project_id",
                from: format!("{ledger_label}:{} (investor {iid})", i + 1),
                to: pid.to_string(),
            });
        }
        let timestamp = parse_timestamp(&r.time).map_err(|e| Error::malformed(&ledger_label, i + 1, e.to_string()))?;
        let inv = investors.get_mut(&iid).ok_or_else(|| Error::Dangling {
            kind: "investor_id",
            from: format!("{ledger_label}:{} (project {pid})", i + 1),
            to: iid.to_string(),
        })?;
        inv.pledges.push(Pledge {
            investor_id: iid,
            project_id: pid,
            timestamp,
            amount_usd: r.amount_usd,
        });
    }

    let tlabel = file_label(&paths.tweets);
    let mut raw = Vec::new();
    for (i, t) in read_jsonl::<TweetLine>(&paths.tweets)?.into_iter().enumerate() {
        raw.push(RawTweet {
            author_handle: t.author,
            text: t.text,
            timestamp: parse_timestamp(&t.time).map_err(|e| Error::malformed(&tlabel, i + 1, e.to_string()))?,
        });
    }
    let (tweets, matches) = match_tweets(&raw, projects.iter());
    report.tweet_matches = matches;

    let profiles = read_jsonl::<TwitterProfile>(&paths.profiles)?;

    let corpus = Corpus::from_parts(projects, investors.into_values().collect(), tweets, profiles, geocode)?;
    report.projects = corpus.projects.len();
    report.investors = corpus.investors.len();
    report.pledges = corpus.pledge_count();
    report.tweets = corpus.tweets.len();
    report.profiles = corpus.profiles.len();
    report.cities = corpus.geocode.len();
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok((corpus, report))
}

/// Write the corpus in normalized form: records sorted by id, pledges sorted
/// by (investor, time, project), tweets in load order with their matches.
pub fn dump_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = CorpusPaths::in_dir(dir);
    let projects: Vec<ProjectRecord> = corpus.projects.values().map(project_to_record).collect();
    write_jsonl(&paths.projects, &projects)?;
    let investors: Vec<InvestorRecord> = corpus
        .investors
        .values()
        .map(|i| InvestorRecord {
            id: i.id.0.clone(),
            name: i.display_name.clone(),
            city: i.location.as_ref().map(|g| g.city_name.clone()),
        })
        .collect();
    write_jsonl(&paths.investors, &investors)?;
    let mut pledges: Vec<&Pledge> = corpus.investors.values().flat_map(|i| &i.pledges).collect();
    pledges.sort_by(|a, b| {
        (&a.investor_id, a.timestamp, &a.project_id).cmp(&(&b.investor_id, b.timestamp, &b.project_id))
    });
    let pledges: Vec<PledgeRecord> = pledges
        .into_iter()
        .map(|p| PledgeRecord {
            investor_id: p.investor_id.0.clone(),
            project_id: p.project_id.0.clone(),
            time: format_timestamp(p.timestamp),
            amount_usd: p.amount_usd,
        })
        .collect();
    write_jsonl(&paths.pledges, &pledges)?;
    let tweets: Vec<TweetLine> = corpus
        .tweets
        .iter()
        .map(|t| TweetLine {
            author: t.author_handle.clone(),
            text: t.text.clone(),
            time: format_timestamp(t.timestamp),
            matched_project_id: t.matched_project_id.as_ref().map(|p| p.0.clone()),
        })
        .collect();
    write_jsonl(&paths.tweets, &tweets)?;
    let profiles: Vec<&TwitterProfile> = corpus.profiles.values().collect();
    write_jsonl(&paths.profiles, &profiles)?;
    write_geocode(&paths.geocode, &corpus.geocode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn project(id: &str, title: &str, urls: &[&str]) -> Project {
        Project {
            id: id.into(),
            title: title.into(),
            category: crate::domain::Category::Games,
            goal_usd: 1000.0,
            launch_time: 0,
            deadline: 30 * 86_400,
            founder_location: None,
            reward_level_count: 3,
            has_dedicated_website: false,
            facebook_friend_count: None,
            description_text: String::new(),
            short_urls: urls.iter().map(|s| s.to_string()).collect(),
            update_events: vec![],
            comment_events: vec![],
            pledge_series: vec![],
            outcome: Outcome::Failed,
        }
    }

    fn raw(text: &str) -> RawTweet {
        RawTweet {
            author_handle: "someone".into(),
            text: text.into(),
            timestamp: 10,
        }
    }

    #[test]
    fn url_match_wins() {
        let ps = [
            project("p1", "Moon Garden", &["kck.st/aaa"]),
            project("p2", "Star Forge", &["kck.st/bbb"]),
        ];
        let (out, rep) = match_tweets(&[raw("loving Star Forge http://kck.st/aaa!")], ps.iter());
        assert_eq!(out[0].matched_project_id, Some("p1".into()));
        assert_eq!(rep.matched, 1);
    }

    #[test]
    fn title_match_is_case_insensitive() {
        let ps = [project("p1", "Moon Garden", &[])];
        let (out, _) = match_tweets(&[raw("Back the MOON garden on #kickstarter")], ps.iter());
        assert_eq!(out[0].matched_project_id, Some("p1".into()));
    }

    #[test]
    fn no_signal_is_unmatched() {
        let ps = [project("p1", "Moon Garden", &["kck.st/aaa"])];
        let (out, rep) = match_tweets(&[raw("nice weather on kickstarter today")], ps.iter());
        assert_eq!(out[0].matched_project_id, None);
        assert_eq!(rep, MatchReport { matched: 0, unmatched: 1, ambiguous: 0 });
    }

    #[test]
    fn two_titles_are_ambiguous() {
        let ps = [project("p1", "Moon Garden", &[]), project("p2", "Star Forge", &[])];
        let (out, rep) = match_tweets(&[raw("Moon Garden and Star Forge both rock")], ps.iter());
        assert_eq!(out[0].matched_project_id, None);
        assert_eq!(rep.ambiguous, 1);
        assert_eq!(rep.unmatched, 1);
    }

    #[test]
    fn title_inside_a_longer_word_does_not_match() {
        let ps = [project("p1", "Art", &[])];
        let (out, _) = match_tweets(&[raw("let's start")], ps.iter());
        assert_eq!(out[0].matched_project_id, None);
    }
}

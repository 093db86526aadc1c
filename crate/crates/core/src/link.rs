//! Kickstarter-to-Twitter identity linking by display-name matching within
//! a shared project context.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{InvestorId, ProjectId};
use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::text::{name_token_set, normalize_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    TokenSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkResult {
    pub investor_id: InvestorId,
    pub handle: String,
    pub confidence: Confidence,
    pub project_context_id: ProjectId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkReport {
    pub links: Vec<LinkResult>,
    /// Investors matching two or more distinct handles.
    pub ambiguous_investors: usize,
    /// Handles matched by two or more investors.
    pub ambiguous_handles: usize,
}

struct NameKey {
    exact: String,
    tokens: BTreeSet<String>,
}

impl NameKey {
    fn new(name: &str) -> Self {
        Self {
            exact: normalize_name(name),
            tokens: name_token_set(name),
        }
    }

    fn compare(&self, other: &NameKey) -> Option<Confidence> {
        if self.exact.is_empty() {
            None
        } else if self.exact == other.exact {
            Some(Confidence::Exact)
        } else if !self.tokens.is_empty() && self.tokens == other.tokens {
            Some(Confidence::TokenSet)
        } else {
            None
        }
    }
}

/// Link investors to Twitter handles.
///
/// Candidate pairs are (pledgers of P) x (authors of tweets matched to P).
/// A pair links on equal normalized names (exact) or equal name token sets
/// ignoring initials (token_set). Investors matching several handles, and
/// handles matched by several investors, stay unlinked.
pub fn link_accounts(corpus: &Corpus) -> LinkReport {
    let mut tweeters: BTreeMap<&ProjectId, BTreeSet<&str>> = BTreeMap::new();
    for t in &corpus.tweets {
        if let Some(pid) = &t.matched_project_id {
            if corpus.profiles.contains_key(&t.author_handle) {
                tweeters.entry(pid).or_default().insert(t.author_handle.as_str());
            }
        }
    }
    let handle_keys: HashMap<&str, NameKey> = corpus
        .profiles
        .values()
        .map(|p| (p.handle.as_str(), NameKey::new(&p.name)))
        .collect();
    let mut investor_keys: HashMap<&InvestorId, NameKey> = HashMap::new();

    // investor -> handle -> (best confidence, first context)
    let mut found: BTreeMap<&InvestorId, BTreeMap<&str, (Confidence, &ProjectId)>> = BTreeMap::new();
    for (pid, handles) in &tweeters {
        let pledgers: BTreeSet<&InvestorId> = corpus.backings(pid).iter().map(|b| &b.investor_id).collect();
        for iid in pledgers {
            let inv = &corpus.investors[iid];
            let ikey = investor_keys
                .entry(iid)
                .or_insert_with(|| NameKey::new(&inv.display_name));
            for &h in handles {
                if let Some(conf) = ikey.compare(&handle_keys[h]) {
                    let slot = found.entry(iid).or_default().entry(h).or_insert((conf, *pid));
                    // tweeters is iterated in project-id order, so the first
                    // context seen at the best confidence is the smallest id
                    if conf < slot.0 {
                        *slot = (conf, *pid);
                    }
                }
            }
        }
    }

    let mut report = LinkReport::default();
    let mut claims: BTreeMap<&str, Vec<&InvestorId>> = BTreeMap::new();
    for (iid, handles) in &found {
        if handles.len() > 1 {
            report.ambiguous_investors += 1;
            continue;
        }
        let (h, _) = handles.iter().next().expect("non-empty");
        claims.entry(h).or_default().push(iid);
    }
    for (h, iids) in claims {
        if iids.len() > 1 {
            report.ambiguous_handles += 1;
            continue;
        }
        let iid = iids[0];
        let (conf, pid) = found[iid][h];
        report.links.push(LinkResult {
            investor_id: iid.clone(),
            handle: h.to_string(),
            confidence: conf,
            project_context_id: pid.clone(),
        });
    }
    report.links.sort_by(|a, b| a.investor_id.cmp(&b.investor_id));
    report
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkRow {
    investor_id: String,
    handle: String,
    confidence: Confidence,
    project_id: String,
}

pub fn write_links(path: &Path, links: &[LinkResult]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    for l in links {
        w.serialize(LinkRow {
            investor_id: l.investor_id.0.clone(),
            handle: l.handle.clone(),
            confidence: l.confidence,
            project_id: l.project_context_id.0.clone(),
        })
        .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_links(path: &Path) -> Result<Vec<LinkResult>> {
    if !path.exists() {
        return Err(Error::MissingInput("links file", path.to_path_buf()));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(f);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<LinkRow>().enumerate() {
        let row = row.map_err(|e| Error::malformed("links", i + 2, e.to_string()))?;
        out.push(LinkResult {
            investor_id: InvestorId(row.investor_id),
            handle: row.handle,
            confidence: row.confidence,
            project_context_id: ProjectId(row.project_id),
        });
    }
    Ok(out)
}

pub fn link_pairs(links: &[LinkResult]) -> Vec<(InvestorId, String)> {
    links
        .iter()
        .map(|l| (l.investor_id.clone(), l.handle.clone()))
        .collect()
}

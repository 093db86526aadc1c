//! Stage helpers shared by the command-line tool and the acceptance suite.

use crate::domain::InvestorId;
use crate::error::{Error, Result};
use crate::eval::{build_pairs, PairConfig};
use crate::features::{build_pair_features, profile_document, project_document, FeatureMatrix, TopicIndex};
use crate::ingest::Corpus;
use crate::link::{link_accounts, link_pairs, LinkReport};
use crate::topics::{fit_lda, LdaConfig, LdaModel};

/// Link accounts and attach the matched profiles.
pub fn link(corpus: &Corpus) -> Result<(Corpus, LinkReport)> {
    let report = link_accounts(corpus);
    let linked = corpus.with_links(&link_pairs(&report.links))?;
    Ok((linked, report))
}

/// Investors with an attached Twitter profile, in id order.
pub fn linked_investors(corpus: &Corpus) -> Vec<InvestorId> {
    corpus
        .investors
        .values()
        .filter(|i| i.twitter.is_some())
        .map(|i| i.id.clone())
        .collect()
}

/// Project descriptions followed by profile timelines.
pub fn topic_documents(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .projects
        .values()
        .map(project_document)
        .chain(corpus.profiles.values().map(profile_document))
        .filter(|d| !d.is_empty())
        .collect()
}

pub fn fit_topics(corpus: &Corpus, cfg: &LdaConfig) -> Result<LdaModel> {
    Ok(fit_lda(&topic_documents(corpus), cfg)?.model)
}

pub fn topic_index(corpus: &Corpus, model: &LdaModel, cfg: &LdaConfig) -> TopicIndex {
    TopicIndex::build(corpus, model, cfg.infer_iterations)
}

/// Labelled pairs over linked investors and their features.
pub fn feature_matrix(
    corpus: &Corpus,
    topics: &TopicIndex,
    pairs: &PairConfig,
    growth_window: f64,
) -> Result<FeatureMatrix> {
    let investors = linked_investors(corpus);
    if investors.is_empty() {
        return Err(Error::Invalid("no linked investors; run the link stage first".into()));
    }
    let specs = build_pairs(corpus, &investors, pairs)?;
    build_pair_features(corpus, topics, &specs, growth_window)
}

//! File-to-file pipeline stages behind the command-line subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{hypothesis_report, probability_curve, HypothesisReport, ProjectFeature};
use crate::config::RunConfig;
use crate::datagen::generate_to_dir;
use crate::domain::BucketScheme;
use crate::error::{Error, Result};
use crate::eval::{
    ablation, cross_validate, eval_csv, eval_table, rank_csv, rank_folds, rank_table, EvalReport, RandomScorer,
    RankReport, Scorer, SplitPlan,
};
use crate::features::{ablation_subsets, FeatureMatrix, FeatureSet, TopicIndex};
use crate::ingest::{dump_corpus, load_corpus, Corpus, CorpusPaths, LoadReport};
use crate::link::{link_accounts, link_pairs, read_links, write_links, LinkReport};
use crate::models::{train as train_model, ModelKind, TrainedModel};
use crate::pipeline;
use crate::topics::LdaModel;

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn gen(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (corpus, _) = generate_to_dir(&cfg.gen, out)?;
    log::info!(
        "generated {} projects, {} investors, {} pledges, {} tweets into {}",
        corpus.projects.len(),
        corpus.investors.len(),
        corpus.pledge_count(),
        corpus.tweets.len(),
        out.display()
    );
    Ok(())
}

/// Validate raw corpus files and write the normalized corpus.
pub fn ingest(input: &Path, out: &Path) -> Result<LoadReport> {
    let (corpus, report) = load_corpus(&CorpusPaths::in_dir(input))?;
    dump_corpus(&corpus, out)?;
    let m = &report.tweet_matches;
    let mut s = String::new();
    let _ = writeln!(s, "projects {}", report.projects);
    let _ = writeln!(s, "investors {}", report.investors);
    let _ = writeln!(s, "pledges {}", report.pledges);
    let _ = writeln!(s, "tweets {} (matched {}, unmatched {}, ambiguous {})", report.tweets, m.matched, m.unmatched, m.ambiguous);
    let _ = writeln!(s, "profiles {}", report.profiles);
    let _ = writeln!(s, "cities {}", report.cities);
    let _ = writeln!(s, "warnings {}", report.warnings.len());
    for w in &report.warnings {
        let _ = writeln!(s, "  {w}");
    }
    write_text(&out.join("ingest_report.txt"), &s)?;
    log::info!("ingested {} projects and {} pledges", report.projects, report.pledges);
    Ok(report)
}

pub fn load(dir: &Path) -> Result<Corpus> {
    Ok(load_corpus(&CorpusPaths::in_dir(dir))?.0)
}

pub fn link(input: &Path, out: &Path) -> Result<LinkReport> {
    let corpus = load(input)?;
    let report = link_accounts(&corpus);
    write_links(out, &report.links)?;
    log::info!(
        "linked {} investors ({} ambiguous investors, {} ambiguous handles)",
        report.links.len(),
        report.ambiguous_investors,
        report.ambiguous_handles
    );
    Ok(report)
}

/// Corpus with profiles attached from a links file.
pub fn load_linked(corpus_dir: &Path, links: &Path) -> Result<Corpus> {
    if !links.exists() {
        return Err(Error::MissingInput("links file", links.to_path_buf()));
    }
    let corpus = load(corpus_dir)?;
    corpus.with_links(&link_pairs(&read_links(links)?))
}

pub fn topics(cfg: &RunConfig, corpus_dir: &Path, links: &Path, out: &Path) -> Result<LdaModel> {
    let corpus = load_linked(corpus_dir, links)?;
    let model = pipeline::fit_topics(&corpus, &cfg.lda)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    model.save(out)?;
    log::info!("fitted {} topics over {} words", cfg.lda.topics, model.vocabulary_size());
    Ok(model)
}

fn topic_index(cfg: &RunConfig, corpus: &Corpus, topics: &Path) -> Result<TopicIndex> {
    let model = LdaModel::load(topics)?;
    Ok(pipeline::topic_index(corpus, &model, &cfg.lda))
}

pub fn features(cfg: &RunConfig, corpus_dir: &Path, links: &Path, topics: &Path, out: &Path) -> Result<FeatureMatrix> {
    let corpus = load_linked(corpus_dir, links)?;
    let index = topic_index(cfg, &corpus, topics)?;
    let matrix = pipeline::feature_matrix(&corpus, &index, &cfg.pairs, cfg.features.growth_window)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    matrix.write_csv(out)?;
    log::info!("wrote {} feature rows", matrix.rows.len());
    Ok(matrix)
}

/// Fit one model on the balanced pair set.
pub fn train(cfg: &RunConfig, matrix_path: &Path, kind: ModelKind, features: &FeatureSet, out: &Path) -> Result<TrainedModel> {
    let matrix = FeatureMatrix::read_csv(matrix_path)?;
    let n_pos = matrix.rows.iter().filter(|r| r.pair.label == 1).count();
    let rows: Vec<_> = matrix.rows.iter().filter(|r| crate::eval::cv::in_ratio(r, n_pos, 1.0)).collect();
    let x: Vec<_> = rows.iter().map(|r| &r.values).collect();
    let y: Vec<u8> = rows.iter().map(|r| r.pair.label).collect();
    let model = train_model(kind, &cfg.model, &x, &y, features)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    model.save(out)?;
    log::info!("trained {kind} on {} rows with features {}", rows.len(), features.name);
    Ok(model)
}

fn split(cfg: &RunConfig, matrix: &FeatureMatrix, folds: usize) -> Result<SplitPlan> {
    let refs: Vec<_> = matrix.rows.iter().map(|r| &r.pair).collect();
    SplitPlan::new(&refs, folds, cfg.eval.seed)
}

fn model_spec(model_path: &Path) -> Result<(ModelKind, FeatureSet)> {
    let model = TrainedModel::load(model_path)?;
    Ok((model.kind, FeatureSet::parse(&model.feature_set)?))
}

/// Cross-validate the model kind and feature set stored in a model file.
pub fn evaluate(cfg: &RunConfig, model_path: &Path, matrix_path: &Path, folds: usize, ratios: &[f64], out: &Path) -> Result<Vec<EvalReport>> {
    let (kind, features) = model_spec(model_path)?;
    let matrix = FeatureMatrix::read_csv(matrix_path)?;
    let plan = split(cfg, &matrix, folds)?;
    let mut reports = cross_validate(&matrix, kind, &cfg.model, &features, &plan, ratios)?.reports;
    if cfg.eval.ablation {
        let subsets: Vec<String> = ablation_subsets();
        for &r in ratios {
            reports.extend(ablation(&matrix, kind, &cfg.model, &plan, &subsets, r)?);
        }
    }
    ensure_dir(out)?;
    write_text(&out.join("eval.csv"), &eval_csv(&reports))?;
    let table = eval_table(&reports);
    write_text(&out.join("eval.txt"), &table)?;
    eprint!("{table}");
    Ok(reports)
}

/// Rank held-out projects' candidate pools with per-fold models and with a
/// random scorer.
#[allow(clippy::too_many_arguments)]
pub fn rank(
    cfg: &RunConfig,
    model_path: &Path,
    matrix_path: &Path,
    corpus_dir: &Path,
    links: &Path,
    topics: &Path,
    folds: usize,
    out: &Path,
) -> Result<Vec<(String, String, RankReport)>> {
    let (kind, features) = model_spec(model_path)?;
    let matrix = FeatureMatrix::read_csv(matrix_path)?;
    let corpus = load_linked(corpus_dir, links)?;
    let index = topic_index(cfg, &corpus, topics)?;
    let plan = split(cfg, &matrix, folds)?;
    let run = cross_validate(&matrix, kind, &cfg.model, &features, &plan, &[1.0])?;
    let pool = pipeline::linked_investors(&corpus);
    let scorers: Vec<&dyn Scorer> = run.models.iter().map(|m| m as &dyn Scorer).collect();
    let model_report = rank_folds(&corpus, &index, &plan, &scorers, &pool, &cfg.rank)?;
    let random: Vec<RandomScorer> = (0..folds).map(|f| RandomScorer { seed: cfg.rank.seed.wrapping_add(f as u64) }).collect();
    let random_refs: Vec<&dyn Scorer> = random.iter().map(|m| m as &dyn Scorer).collect();
    let random_report = rank_folds(&corpus, &index, &plan, &random_refs, &pool, &cfg.rank)?;
    let rows = vec![
        (kind.to_string(), features.name.clone(), model_report),
        ("random".to_string(), "-".to_string(), random_report),
    ];
    ensure_dir(out)?;
    write_text(&out.join("rank.csv"), &rank_csv(&rows))?;
    let table = rank_table(&rows);
    write_text(&out.join("rank.txt"), &table)?;
    eprint!("{table}");
    Ok(rows)
}

/// Hypothesis report, correlation table and probability-curve CSVs. Topic
/// similarity is only evaluated when a topic model file exists.
pub fn analyze(cfg: &RunConfig, corpus_dir: &Path, links: &Path, topics: &Path, out: &Path) -> Result<HypothesisReport> {
    let corpus = load_linked(corpus_dir, links)?;
    let index = if topics.exists() { Some(topic_index(cfg, &corpus, topics)?) } else { None };
    let report = hypothesis_report(&corpus, index.as_ref());
    ensure_dir(out)?;
    write_text(&out.join("hypotheses.txt"), &report.to_text())?;
    let scheme = BucketScheme::default();
    for f in ProjectFeature::ALL {
        match probability_curve(&corpus, &scheme, f, f.default_binning()) {
            Ok(curve) => write_text(&out.join(format!("curve_{}.csv", f.name())), &curve.to_csv())?,
            Err(e) => log::warn!("skipping {} curve: {e}", f.name()),
        }
    }
    eprint!("{}", report.to_text());
    Ok(report)
}

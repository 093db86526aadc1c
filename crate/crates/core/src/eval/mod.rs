//! Negative sampling, project-level cross validation, classification and
//! ranking metrics, and report formatting.

pub mod cv;
pub mod metrics;
pub mod ranking;
pub mod report;
pub mod sampling;

pub use cv::{cross_validate, fold_rows, CvRun, EvalReport, FoldReport};
pub use metrics::{auc, Confusion, Metrics};
pub use ranking::{rank_folds, rank_investors, rank_metrics, rank_scores, RandomScorer, RankConfig, RankReport, RankedList, Scorer};
pub use report::{ablation, eval_csv, eval_table, rank_csv, rank_table};
pub use sampling::{build_pairs, sample_negatives, PairConfig, SplitPlan};

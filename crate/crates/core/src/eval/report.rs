use std::fmt::Write as _;

use super::cv::{cross_validate, EvalReport};
use super::ranking::RankReport;
use super::sampling::SplitPlan;
use crate::error::Result;
use crate::features::{FeatureMatrix, FeatureSet};
use crate::models::{ModelKind, ModelParams};

/// Cross-validate every feature subset with one model kind.
pub fn ablation(
    matrix: &FeatureMatrix,
    kind: ModelKind,
    params: &ModelParams,
    plan: &SplitPlan,
    subsets: &[String],
    test_ratio: f64,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::with_capacity(subsets.len());
    for s in subsets {
        let fs = FeatureSet::parse(s)?;
        let mut run = cross_validate(matrix, kind, params, &fs, plan, &[test_ratio])?;
        out.push(run.reports.remove(0));
    }
    Ok(out)
}

fn ratio_label(r: f64) -> String {
    if r == 1.0 {
        "50/50".into()
    } else {
        let pos = 100.0 / (1.0 + r);
        format!("{:.0}/{:.0}", pos, 100.0 - pos)
    }
}

pub fn eval_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<11} {:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "model", "features", "split", "ACC", "P", "R", "F1", "AUC"
    );
    for r in reports {
        let m = &r.mean;
        let _ = writeln!(
            s,
            "{:<11} {:<16} {:>6} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            r.model,
            r.features,
            ratio_label(r.test_ratio),
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            m.auc
        );
    }
    s
}

pub fn eval_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("model,features,test_ratio,fold,n_train,n_test,tp,fp,tn,fn,accuracy,precision,recall,f1,auc\n");
    for r in reports {
        for f in &r.folds {
            let (m, c) = (&f.metrics, &f.confusion);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.model, r.features, r.test_ratio, f.fold, f.n_train, f.n_test, c.tp, c.fp, c.tn, c.fn_,
                m.accuracy, m.precision, m.recall, m.f1, m.auc
            );
        }
        let m = &r.mean;
        let _ = writeln!(
            s,
            "{},{},{},mean,,,,,,,{},{},{},{},{}",
            r.model, r.features, r.test_ratio, m.accuracy, m.precision, m.recall, m.f1, m.auc
        );
    }
    s
}

/// (model, features, report) rows.
pub fn rank_table(rows: &[(String, String, RankReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<11} {:<16} {:>8} {:>7} {:>7} {:>9}",
        "model", "features", "avg rank", "MeanRR", "MaxRR", "projects"
    );
    for (model, features, r) in rows {
        let _ = writeln!(
            s,
            "{:<11} {:<16} {:>8.3} {:>7.3} {:>7.3} {:>9}",
            model,
            features,
            r.average_percentile,
            r.mean_rr,
            r.max_rr,
            r.projects.len()
        );
    }
    s
}

pub fn rank_csv(rows: &[(String, String, RankReport)]) -> String {
    let mut s = String::from("model,features,project_id,pool_size,n_true,mean_percentile,max_percentile\n");
    for (model, features, r) in rows {
        for p in &r.projects {
            let n = p.true_percentiles.len();
            let mean = p.true_percentiles.iter().sum::<f64>() / n as f64;
            let max = p.true_percentiles.iter().copied().fold(0.0, f64::max);
            let _ = writeln!(s, "{model},{features},{},{},{n},{mean},{max}", p.project_id, p.pool_size);
        }
        let _ = writeln!(
            s,
            "{model},{features},ALL,,,{},{}",
            r.mean_rr, r.max_rr
        );
    }
    s
}

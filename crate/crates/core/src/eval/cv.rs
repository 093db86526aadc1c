use serde::Serialize;

use super::metrics::{Confusion, Metrics};
use super::sampling::SplitPlan;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, FeatureSet, FeatureVector};
use crate::models::{train, ModelKind, ModelParams, TrainedModel};

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model: String,
    pub features: String,
    /// Negatives per positive in the test folds.
    pub test_ratio: f64,
    pub folds: Vec<FoldReport>,
    pub mean: Metrics,
}

/// Per-fold trained models plus one report per requested test ratio.
#[derive(Debug, Clone)]
pub struct CvRun {
    pub models: Vec<TrainedModel>,
    pub reports: Vec<EvalReport>,
}

fn positives(matrix: &FeatureMatrix) -> usize {
    matrix.rows.iter().filter(|r| r.pair.label == 1).count()
}

/// Rows within the first `ratio * n_pos` negatives, plus all positives.
pub fn in_ratio(row: &FeatureRow, n_pos: usize, ratio: f64) -> bool {
    let limit = (ratio * n_pos as f64).round() as usize;
    row.pair.label == 1 || row.pair.neg_index.is_some_and(|k| k < limit)
}

/// Training rows (balanced) and test rows (`test_ratio` negatives per
/// positive) of one fold.
pub fn fold_rows<'a>(
    matrix: &'a FeatureMatrix,
    plan: &SplitPlan,
    fold: usize,
    test_ratio: f64,
) -> (Vec<&'a FeatureRow>, Vec<&'a FeatureRow>) {
    let n_pos = positives(matrix);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in &matrix.rows {
        match plan.fold_of(&r.pair.project_id) {
            Some(f) if f == fold && in_ratio(r, n_pos, test_ratio) => test.push(r),
            Some(f) if f != fold && in_ratio(r, n_pos, 1.0) => train.push(r),
            _ => {}
        }
    }
    (train, test)
}

pub fn train_on(
    rows: &[&FeatureRow],
    kind: ModelKind,
    params: &ModelParams,
    features: &FeatureSet,
) -> Result<TrainedModel> {
    let x: Vec<&FeatureVector> = rows.iter().map(|r| &r.values).collect();
    let y: Vec<u8> = rows.iter().map(|r| r.pair.label).collect();
    train(kind, params, &x, &y, features)
}

/// K-fold cross validation split by project. Standardization and
/// calibration are fitted inside each training fold. Each fold model is
/// scored on every ratio in `test_ratios`.
pub fn cross_validate(
    matrix: &FeatureMatrix,
    kind: ModelKind,
    params: &ModelParams,
    features: &FeatureSet,
    plan: &SplitPlan,
    test_ratios: &[f64],
) -> Result<CvRun> {
    let mut models = Vec::with_capacity(plan.folds);
    let mut per_ratio: Vec<Vec<FoldReport>> = vec![Vec::new(); test_ratios.len()];
    for fold in 0..plan.folds {
        let (train_rows, _) = fold_rows(matrix, plan, fold, 1.0);
        let model = train_on(&train_rows, kind, params, features).map_err(|e| match e {
            Error::SingleClass(m) => Error::SingleClass(format!("fold {fold}: {m}")),
            other => other,
        })?;
        for (k, &ratio) in test_ratios.iter().enumerate() {
            let (_, test_rows) = fold_rows(matrix, plan, fold, ratio);
            let proba = test_rows
                .iter()
                .map(|r| model.predict_proba(&r.values))
                .collect::<Result<Vec<f64>>>()?;
            let truth: Vec<u8> = test_rows.iter().map(|r| r.pair.label).collect();
            let (metrics, confusion) = Metrics::compute(&proba, &truth, 0.5)
                .map_err(|e| Error::Eval(format!("fold {fold}: {e}")))?;
            per_ratio[k].push(FoldReport {
                fold,
                n_train: train_rows.len(),
                n_test: test_rows.len(),
                metrics,
                confusion,
            });
        }
        log::info!("{kind} [{}] fold {}/{} done", features.name, fold + 1, plan.folds);
        models.push(model);
    }
    let reports = test_ratios
        .iter()
        .zip(per_ratio)
        .map(|(&test_ratio, folds)| EvalReport {
            model: kind.to_string(),
            features: features.name.clone(),
            test_ratio,
            mean: Metrics::mean(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>()),
            folds,
        })
        .collect();
    Ok(CvRun { models, reports })
}

//! Logistic regression and kernel SVM classifiers with probability output.

pub mod kernel;
pub mod lr;
pub mod platt;
pub mod smo;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{correlated_exclusions, FeatureSet, FeatureVector, Standardizer};
pub use kernel::Kernel;
pub use platt::Platt;
pub use smo::WorkingSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lr")]
    Lr,
    #[serde(rename = "svm-linear")]
    SvmLinear,
    #[serde(rename = "svm-poly")]
    SvmPoly,
    #[serde(rename = "svm-rbf")]
    SvmRbf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::SvmLinear, ModelKind::SvmPoly, ModelKind::SvmRbf];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::SvmLinear => "svm-linear",
            ModelKind::SvmPoly => "svm-poly",
            ModelKind::SvmRbf => "svm-rbf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?} (expected lr, svm-linear, svm-poly, svm-rbf)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkingSetRule {
    MaxViolating,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// SVM box constraint.
    pub c: f64,
    /// LR L2 penalty.
    pub lambda: f64,
    pub degree: u32,
    pub coef0: f64,
    /// Kernel width; `None` picks 1/(d var X) for RBF and 1/d for poly.
    pub gamma: Option<f64>,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub cache_mb: usize,
    pub working_set: WorkingSetRule,
    pub lr_tol: f64,
    pub lr_max_iter: usize,
    pub platt_folds: usize,
    /// Drop goal/updates when strongly correlated with comments. Defaults
    /// to on for LR and off for SVMs.
    pub drop_correlated: Option<bool>,
    pub correlation_threshold: f64,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            lambda: 1e-3,
            degree: 3,
            coef0: 1.0,
            gamma: None,
            svm_tol: 1e-3,
            svm_max_iter: 10_000_000,
            cache_mb: 1024,
            working_set: WorkingSetRule::MaxViolating,
            lr_tol: 1e-6,
            lr_max_iter: 1000,
            platt_folds: 3,
            drop_correlated: None,
            correlation_threshold: 0.5,
            seed: 42,
        }
    }
}

impl ModelParams {
    fn smo(&self) -> smo::SmoConfig {
        smo::SmoConfig {
            c: self.c,
            tol: self.svm_tol,
            max_iter: self.svm_max_iter,
            cache_mb: self.cache_mb,
            working_set: match self.working_set {
                WorkingSetRule::MaxViolating => WorkingSet::MaxViolating,
                WorkingSetRule::SecondOrder => WorkingSet::SecondOrder,
            },
        }
    }

    pub fn kernel_for(&self, kind: ModelKind, x: &[Vec<f64>]) -> Option<Kernel> {
        let d = x.first().map_or(1, Vec::len).max(1) as f64;
        match kind {
            ModelKind::Lr => None,
            ModelKind::SvmLinear => Some(Kernel::Linear),
            ModelKind::SvmPoly => Some(Kernel::Poly {
                degree: self.degree,
                gamma: self.gamma.unwrap_or(1.0 / d),
                coef0: self.coef0,
            }),
            ModelKind::SvmRbf => Some(Kernel::Rbf { gamma: self.gamma.unwrap_or_else(|| kernel::scale_gamma(x)) }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub platt: Platt,
    norms: Vec<f64>,
    flat: Vec<f64>,
    linear_w: Option<Vec<f64>>,
}

impl SvmModel {
    pub fn new(kernel: Kernel, c: f64, support: Vec<Vec<f64>>, coef: Vec<f64>, bias: f64, platt: Platt) -> Self {
        let norms = support.iter().map(|s| kernel::dot(s, s)).collect();
        let linear_w = (kernel == Kernel::Linear).then(|| {
            let d = support.first().map_or(0, Vec::len);
            let mut w = vec![0.0; d];
            for (s, a) in support.iter().zip(&coef) {
                for (wk, sk) in w.iter_mut().zip(s) {
                    *wk += a * sk;
                }
            }
            w
        });
        let flat = support.iter().flatten().copied().collect();
        Self { kernel, c, support, coef, bias, platt, norms, flat, linear_w }
    }

    pub fn decision(&self, z: &[f64]) -> f64 {
        if let Some(w) = &self.linear_w {
            return kernel::dot(w, z) + self.bias;
        }
        let nz = kernel::dot(z, z);
        let d = z.len();
        if d > 0 && self.flat.len() == d * self.support.len() {
            return self
                .flat
                .chunks_exact(d)
                .zip(&self.coef)
                .zip(&self.norms)
                .map(|((s, a), &ns)| a * self.kernel.eval_normed(s, ns, z, nz))
                .sum::<f64>()
                + self.bias;
        }
        self.support
            .iter()
            .zip(&self.coef)
            .zip(&self.norms)
            .map(|((s, a), &ns)| a * self.kernel.eval_normed(s, ns, z, nz))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Logistic { weights: Vec<f64>, bias: f64, lambda: f64 },
    Svm(SvmModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub feature_set: String,
    pub standardizer: Standardizer,
    pub body: ModelBody,
}

fn check_classes(y: &[u8]) -> Result<()> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::SingleClass(format!(
            "need at least 2 examples per class, got {pos} positive and {neg} negative"
        )));
    }
    Ok(())
}

fn to_pm(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect()
}

/// Train an SVM on standardized inputs and return (support, coef, bias).
pub fn fit_svm(x: &[Vec<f64>], y: &[u8], kernel: Kernel, params: &ModelParams) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    kernel.check_psd(x, 64)?;
    let all: Vec<usize> = (0..x.len()).collect();
    let fit = fit_subset(x, &all, y, kernel, params, None, None)?;
    Ok((fit.support.iter().map(|&i| x[i].clone()).collect(), fit.coef, fit.bias))
}

struct SubsetFit {
    /// Indices into the full training set.
    support: Vec<usize>,
    coef: Vec<f64>,
    bias: f64,
}

/// Fit on the rows `idx` of `x`, through the shared kernel matrix if given.
fn fit_subset(
    x: &[Vec<f64>],
    idx: &[usize],
    y: &[u8],
    kernel: Kernel,
    params: &ModelParams,
    gram: Option<&mut smo::Gram>,
    start: Option<&[f64]>,
) -> Result<SubsetFit> {
    let ty: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
    check_classes(&ty)?;
    let ypm = to_pm(&ty);
    let sol = match gram {
        Some(g) => smo::solve_shared(g, idx, &ypm, &params.smo(), start),
        None => {
            let tx: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
            smo::solve(&tx, &ypm, kernel, &params.smo())
        }
    };
    if !sol.converged {
        log::warn!("SMO stopped after {} iterations without reaching tolerance", sol.iterations);
    }
    let mut fit = SubsetFit { support: Vec::new(), coef: Vec::new(), bias: sol.bias };
    for (k, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            fit.support.push(idx[k]);
            fit.coef.push(a * ypm[k]);
        }
    }
    Ok(fit)
}

/// Platt parameters from out-of-fold decision values, plus the mean of the
/// fold duals. Every point sits in `k - 1` training folds, so the mean is a
/// feasible dual point for the full set.
fn fit_platt_cv(
    x: &[Vec<f64>],
    y: &[u8],
    kernel: Kernel,
    params: &ModelParams,
    mut gram: Option<&mut smo::Gram>,
) -> Result<(Platt, Vec<f64>)> {
    let k = params.platt_folds.max(2);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    let mut dec = vec![0.0; x.len()];
    let mut mean_alpha = vec![0.0; x.len()];
    for fold in 0..k {
        let train: Vec<usize> = order.iter().enumerate().filter(|(pos, _)| pos % k != fold).map(|(_, &i)| i).collect();
        let fit = fit_subset(x, &train, y, kernel, params, gram.as_deref_mut(), None)?;
        for (&s, a) in fit.support.iter().zip(&fit.coef) {
            mean_alpha[s] += a.abs() / (k - 1) as f64;
        }
        let held = order.iter().enumerate().filter(|(pos, _)| pos % k == fold).map(|(_, &i)| i);
        match gram.as_deref_mut() {
            Some(g) => {
                for i in held {
                    let row = g.row(i);
                    dec[i] = fit.support.iter().zip(&fit.coef).map(|(&s, a)| a * row[s]).sum::<f64>() + fit.bias;
                }
            }
            None => {
                let support = fit.support.iter().map(|&i| x[i].clone()).collect();
                let m = SvmModel::new(kernel, params.c, support, fit.coef, fit.bias, Platt { a: -1.0, b: 0.0 });
                for i in held {
                    dec[i] = m.decision(&x[i]);
                }
            }
        }
    }
    Ok((platt::fit_platt(&dec, y), mean_alpha))
}

/// Train a model on the selected columns of raw feature rows. The
/// standardizer is fitted on `rows` only.
pub fn train(
    kind: ModelKind,
    params: &ModelParams,
    rows: &[&FeatureVector],
    labels: &[u8],
    features: &FeatureSet,
) -> Result<TrainedModel> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension { expected: rows.len(), got: labels.len() });
    }
    check_classes(labels)?;
    let mut columns = features.columns.clone();
    if params.drop_correlated.unwrap_or(kind == ModelKind::Lr) {
        let drop = correlated_exclusions(rows, &columns, params.correlation_threshold);
        columns.retain(|c| !drop.contains(c));
    }
    let standardizer = Standardizer::fit(rows.iter().copied(), &columns);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.transform(r)).collect();
    let body = match params.kernel_for(kind, &x) {
        None => {
            let cfg = lr::LrConfig { lambda: params.lambda, max_iter: params.lr_max_iter, tol: params.lr_tol };
            let fit = lr::fit(&x, labels, &cfg);
            if !fit.converged {
                log::warn!("logistic regression stopped after {} iterations", fit.iterations);
            }
            ModelBody::Logistic { weights: fit.weights, bias: fit.bias, lambda: params.lambda }
        }
        Some(kernel) => {
            kernel.check_psd(&x, 64)?;
            let mut gram = smo::Gram::fits(x.len(), params.cache_mb).then(|| smo::Gram::new(&x, kernel));
            let (platt, warm) = fit_platt_cv(&x, labels, kernel, params, gram.as_mut())?;
            let all: Vec<usize> = (0..x.len()).collect();
            let fit = fit_subset(&x, &all, labels, kernel, params, gram.as_mut(), Some(&warm))?;
            let support = fit.support.iter().map(|&i| x[i].clone()).collect();
            ModelBody::Svm(SvmModel::new(kernel, params.c, support, fit.coef, fit.bias, platt))
        }
    };
    Ok(TrainedModel { kind, feature_set: features.name.clone(), standardizer, body })
}

const FORMAT_TAG: &str = "kickrec-model 1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Decision value of an already standardized input.
    pub fn decision_standardized(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: z.len() });
        }
        Ok(match &self.body {
            ModelBody::Logistic { weights, bias, .. } => kernel::dot(weights, z) + bias,
            ModelBody::Svm(m) => m.decision(z),
        })
    }

    pub fn proba_of_decision(&self, f: f64) -> f64 {
        match &self.body {
            ModelBody::Logistic { .. } => lr::sigmoid(f),
            ModelBody::Svm(m) => m.platt.predict(f),
        }
    }

    pub fn predict_proba_standardized(&self, z: &[f64]) -> Result<f64> {
        Ok(self.proba_of_decision(self.decision_standardized(z)?))
    }

    /// Probability of label 1 for a raw (unstandardized) feature vector.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        let need = self.standardizer.columns.iter().max().map_or(0, |c| c + 1);
        if x.len() < need {
            return Err(Error::Dimension { expected: need, got: x.len() });
        }
        self.predict_proba_standardized(&self.standardizer.transform(x))
    }

    /// 1 when the probability reaches `threshold`; ties go to 1.
    pub fn predict_label(&self, x: &FeatureVector, threshold: f64) -> Result<u8> {
        Ok(label_for(self.predict_proba(x)?, threshold))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = self.standardizer.columns.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{FORMAT_TAG}");
        let _ = writeln!(s, "kind {}", self.kind);
        let _ = writeln!(s, "features {}", self.feature_set);
        let _ = writeln!(s, "columns {}", cols.join(" "));
        let _ = writeln!(s, "mean {}", join(&self.standardizer.mean));
        let _ = writeln!(s, "std {}", join(&self.standardizer.std));
        match &self.body {
            ModelBody::Logistic { weights, bias, lambda } => {
                let _ = writeln!(s, "lambda {lambda}");
                let _ = writeln!(s, "bias {bias}");
                let _ = writeln!(s, "weights {}", join(weights));
            }
            ModelBody::Svm(m) => {
                let _ = writeln!(s, "kernel {}", m.kernel);
                let _ = writeln!(s, "c {}", m.c);
                let _ = writeln!(s, "bias {}", m.bias);
                let _ = writeln!(s, "platt {} {}", m.platt.a, m.platt.b);
                let _ = writeln!(s, "support {}", m.support.len());
                for (sv, a) in m.support.iter().zip(&m.coef) {
                    let _ = writeln!(s, "{a} {}", join(sv));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::malformed("model file", line, msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (n, l) = lines.next().ok_or_else(|| bad(0, &format!("missing {key}")))?;
            if key.is_empty() {
                return Ok((n, l.to_string()));
            }
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or((r.is_empty()).then_some("")))
                .ok_or_else(|| bad(n, &format!("expected {key}")))?;
            Ok((n, rest.to_string()))
        };
        let floats = |n: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| bad(n, "bad number"))).collect()
        };
        let (n, tag) = next("")?;
        if tag != FORMAT_TAG {
            return Err(bad(n, "unknown format tag"));
        }
        let (n, kind) = next("kind")?;
        let kind: ModelKind = kind.parse().map_err(|_| bad(n, "unknown kind"))?;
        let (_, feature_set) = next("features")?;
        let (n, cols) = next("columns")?;
        let columns = cols
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad(n, "bad column")))
            .collect::<Result<Vec<_>>>()?;
        let (n, mean) = next("mean")?;
        let mean = floats(n, &mean)?;
        let (n, std) = next("std")?;
        let std = floats(n, &std)?;
        if mean.len() != columns.len() || std.len() != columns.len() {
            return Err(bad(n, "standardization length mismatch"));
        }
        let standardizer = Standardizer { columns, mean, std };
        let d = standardizer.dim();
        let body = if kind == ModelKind::Lr {
            let (n, lambda) = next("lambda")?;
            let lambda = lambda.parse().map_err(|_| bad(n, "bad lambda"))?;
            let (n, bias) = next("bias")?;
            let bias = bias.parse().map_err(|_| bad(n, "bad bias"))?;
            let (n, w) = next("weights")?;
            let weights = floats(n, &w)?;
            if weights.len() != d {
                return Err(bad(n, "weight length mismatch"));
            }
            ModelBody::Logistic { weights, bias, lambda }
        } else {
            let (n, k) = next("kernel")?;
            let kernel: Kernel = k.parse().map_err(|_| bad(n, "bad kernel"))?;
            let (n, c) = next("c")?;
            let c = c.parse().map_err(|_| bad(n, "bad c"))?;
            let (n, bias) = next("bias")?;
            let bias = bias.parse().map_err(|_| bad(n, "bad bias"))?;
            let (n, p) = next("platt")?;
            let p = floats(n, &p)?;
            if p.len() != 2 {
                return Err(bad(n, "platt needs A and B"));
            }
            let (n, count) = next("support")?;
            let count: usize = count.parse().map_err(|_| bad(n, "bad support count"))?;
            let (mut support, mut coef) = (Vec::with_capacity(count), Vec::with_capacity(count));
            for _ in 0..count {
                let (n, l) = next("")?;
                let v = floats(n, &l)?;
                if v.len() != d + 1 {
                    return Err(bad(n, "support vector length mismatch"));
                }
                coef.push(v[0]);
                support.push(v[1..].to_vec());
            }
            ModelBody::Svm(SvmModel::new(kernel, c, support, coef, bias, Platt { a: p[0], b: p[1] }))
        };
        Ok(Self { kind, feature_set, standardizer, body })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput("model file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn label_for(proba: f64, threshold: f64) -> u8 {
    u8::from(proba >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::N_FEATURES;

    fn xor_rows(n: usize) -> (Vec<FeatureVector>, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let a = ((i * 37) % 101) as f64 / 50.0 - 1.0;
            let b = ((i * 53) % 97) as f64 / 48.0 - 1.0;
            let mut v = vec![Some(0.0); N_FEATURES];
            v[0] = Some(a);
            v[1] = Some(b);
            rows.push(v);
            labels.push(u8::from(a * b > 0.0));
        }
        (rows, labels)
    }

    fn accuracy(m: &TrainedModel, rows: &[FeatureVector], y: &[u8]) -> f64 {
        let hit = rows.iter().zip(y).filter(|(r, &l)| m.predict_label(r, 0.5).unwrap() == l).count();
        hit as f64 / y.len() as f64
    }

    #[test]
    fn xor_rbf_separates_linear_does_not() {
        let (rows, y) = xor_rows(120);
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let fs = FeatureSet::parse("GL+R").unwrap();
        let params = ModelParams { c: 100.0, gamma: Some(2.0), ..Default::default() };
        let rbf = train(ModelKind::SvmRbf, &params, &refs, &y, &fs).unwrap();
        let lin = train(ModelKind::SvmLinear, &params, &refs, &y, &fs).unwrap();
        assert_eq!(accuracy(&rbf, &rows, &y), 1.0);
        assert!(accuracy(&lin, &rows, &y) <= 0.75);
    }

    #[test]
    fn model_text_round_trip() {
        let (rows, y) = xor_rows(60);
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let fs = FeatureSet::parse("GL+R").unwrap();
        for kind in ModelKind::ALL {
            let m = train(kind, &ModelParams::default(), &refs, &y, &fs).unwrap();
            let back = TrainedModel::from_text(&m.to_text()).unwrap();
            assert_eq!(back.to_text(), m.to_text());
            for r in &rows {
                assert_eq!(back.predict_proba(r).unwrap(), m.predict_proba(r).unwrap());
            }
        }
    }

    #[test]
    fn single_class_and_dimension_errors() {
        let (rows, _) = xor_rows(10);
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let fs = FeatureSet::all();
        let e = train(ModelKind::Lr, &ModelParams::default(), &refs, &[1; 10], &fs).unwrap_err();
        assert!(matches!(e, Error::SingleClass(_)));
        let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let m = train(ModelKind::Lr, &ModelParams::default(), &refs, &y, &fs).unwrap();
        assert!(m.predict_proba(&vec![None; 3]).is_err());
        assert!(m.decision_standardized(&[0.0]).is_err());
    }

    #[test]
    fn ties_at_threshold_go_to_one() {
        assert_eq!(label_for(0.5, 0.5), 1);
        assert_eq!(label_for(0.7, 0.5), 1);
        assert_eq!(label_for(0.3, 0.5), 0);
    }

    #[test]
    fn zero_weight_lr_predicts_half() {
        let m = TrainedModel {
            kind: ModelKind::Lr,
            feature_set: "GL".into(),
            standardizer: Standardizer { columns: vec![0], mean: vec![0.0], std: vec![1.0] },
            body: ModelBody::Logistic { weights: vec![0.0], bias: 0.0, lambda: 1e-3 },
        };
        assert_eq!(m.predict_proba(&vec![Some(3.0); N_FEATURES]).unwrap(), 0.5);
    }
}

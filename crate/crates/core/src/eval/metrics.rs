use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(predicted: &[u8], truth: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Area under the ROC curve via the Mann-Whitney U statistic with mid-ranks
/// for ties.
pub fn auc(scores: &[(f64, u8)]) -> Result<f64> {
    let pos = scores.iter().filter(|s| s.1 == 1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Eval("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| scores[k].1 == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

impl Metrics {
    pub fn compute(proba: &[f64], truth: &[u8], threshold: f64) -> Result<(Self, Confusion)> {
        let predicted: Vec<u8> = proba.iter().map(|&p| crate::models::label_for(p, threshold)).collect();
        let c = Confusion::from_labels(&predicted, truth);
        let scored: Vec<(f64, u8)> = proba.iter().copied().zip(truth.iter().copied()).collect();
        Ok((
            Metrics {
                accuracy: c.accuracy(),
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
                auc: auc(&scored)?,
            },
            c,
        ))
    }

    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len().max(1) as f64;
        let s = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: s(|m| m.accuracy),
            precision: s(|m| m.precision),
            recall: s(|m| m.recall),
            f1: s(|m| m.f1),
            auc: s(|m| m.auc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_endpoints_and_ties() {
        let perfect = [(0.1, 0), (0.2, 0), (0.8, 1), (0.9, 1)];
        assert_eq!(auc(&perfect).unwrap(), 1.0);
        let reversed = [(0.9, 0), (0.8, 0), (0.2, 1), (0.1, 1)];
        assert_eq!(auc(&reversed).unwrap(), 0.0);
        let tied = [(0.5, 0), (0.5, 1)];
        assert_eq!(auc(&tied).unwrap(), 0.5);
        assert!(auc(&[(0.5, 1), (0.6, 1)]).is_err());
    }

    #[test]
    fn constant_positive_classifier() {
        let truth = [1, 1, 0, 0];
        let (m, c) = Metrics::compute(&[1.0; 4], &truth, 0.5).unwrap();
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(c, Confusion { tp: 2, fp: 2, tn: 0, fn_: 0 });
        assert!((m.f1 - 2.0 * 0.5 / 1.5).abs() < 1e-15);
    }
}

//! Reference computations written independently of the library code.

use std::collections::BTreeMap;

use kickrec::models::kernel::Kernel;
use kickrec::models::lr;
use kickrec::models::smo::{dual_objective, solve, SmoConfig, WorkingSet};
use kickrec::topics::TopicVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn two_blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        x.push(vec![0.6 * label + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        y.push(label);
    }
    (x, y)
}

fn project_feasible(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let gap = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient ascent on the SVM dual with an exact
/// projection onto the box and the equality constraint.
pub fn qp_oracle(x: &[Vec<f64>], y: &[f64], kernel: Kernel, c: f64) -> Vec<f64> {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * kernel.eval(&x[i], &x[j])).collect())
        .collect();
    let lipschitz: f64 = q.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..40_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>()).collect();
        let v: Vec<f64> = (0..n).map(|i| z[i] + step * grad[i]).collect();
        let next = project_feasible(&v, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - a[i])).collect();
        a = next;
        t = t_next;
    }
    a
}

pub struct SmoCheck {
    /// Largest relative gap between the SMO and reference dual objectives.
    pub objective_gap: f64,
    pub feasible: bool,
    pub converged: bool,
}

/// SMO against the reference solver over three kernels, two C values and
/// both working-set rules on a 20-point problem.
pub fn smo_against_qp() -> SmoCheck {
    let (x, y) = two_blobs(20, 3);
    let mut out = SmoCheck { objective_gap: 0.0, feasible: true, converged: true };
    for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }, Kernel::Poly { degree: 2, gamma: 0.5, coef0: 1.0 }] {
        for c in [0.5, 10.0] {
            let want = dual_objective(&x, &y, kernel, &qp_oracle(&x, &y, kernel, c));
            for ws in [WorkingSet::MaxViolating, WorkingSet::SecondOrder] {
                let sol = solve(&x, &y, kernel, &SmoConfig { c, tol: 1e-9, working_set: ws, ..Default::default() });
                let got = dual_objective(&x, &y, kernel, &sol.alpha);
                let scale = want.abs().max(1.0);
                out.objective_gap = out
                    .objective_gap
                    .max((got - want).abs() / scale)
                    .max((sol.objective - got).abs() / scale);
                let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
                out.feasible &= eq.abs() < 1e-9 && sol.alpha.iter().all(|&a| (0.0..=c).contains(&a));
                out.converged &= sol.converged;
            }
        }
    }
    out
}

/// Largest relative error between the analytic logistic-loss gradient and
/// central finite differences.
pub fn lr_gradient_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] - 0.5 * r[1] + rng.random_range(-1.0..1.0) > 0.0)).collect();
    let w = vec![0.3, -0.7, 0.2, 1.1];
    let b = -0.4;
    let lambda = 0.05;
    let (_, g) = lr::objective(&x, &y, lambda, &w, b);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..=w.len() {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        let (mut bp, mut bm) = (b, b);
        if k < w.len() {
            wp[k] += h;
            wm[k] -= h;
        } else {
            bp += h;
            bm -= h;
        }
        let numeric = (lr::objective(&x, &y, lambda, &wp, bp).0 - lr::objective(&x, &y, lambda, &wm, bm).0) / (2.0 * h);
        worst = worst.max((numeric - g[k]).abs() / g[k].abs().max(1e-3));
    }
    worst
}

/// Scores with heavy ties; `n` points, roughly 30% positives.
pub fn tied_scores(n: usize, seed: u64) -> Vec<(f64, u8)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = u8::from(rng.random_bool(0.3));
            ((rng.random_range(0.0..10.0) + 2.0 * label as f64).round(), label)
        })
        .collect()
}

/// AUC by counting every (positive, negative) pair.
pub fn pair_count_auc(scores: &[(f64, u8)]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for &(sp, lp) in scores {
        for &(sn, ln) in scores {
            if lp == 1 && ln == 0 {
                pairs += 1.0;
                wins += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

pub fn pearson_inputs() -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..40).map(|i| (0.7 * i as f64).sin() + 0.05 * i as f64).collect();
    let y: Vec<f64> = (0..40).map(|i| 0.3 * x[i] + (1.3 * i as f64).cos()).collect();
    (x, y)
}

/// Pearson r from raw sums.
pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Great-circle distance by the spherical law of cosines on a 6371 km sphere.
pub fn cosine_law_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    6371.0 * c.clamp(-1.0, 1.0).acos()
}

pub const PLANTED_TOPICS: usize = 5;

/// Documents drawn from disjoint 20-word blocks, 90% from the document's
/// own block; returns the documents and their block labels.
pub fn planted_documents(n_docs: usize, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for d in 0..n_docs {
        let t = d % PLANTED_TOPICS;
        let doc = (0..50)
            .map(|_| {
                let topic = if rng.random_bool(0.9) { t } else { rng.random_range(0..PLANTED_TOPICS) };
                format!("w{topic}x{}", rng.random_range(0..20))
            })
            .collect();
        docs.push(doc);
        labels.push(t);
    }
    (docs, labels)
}

/// Share of documents whose dominant topic agrees with the majority label
/// of that topic.
pub fn purity(vectors: &[TopicVector], labels: &[usize]) -> f64 {
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (v, &l) in vectors.iter().zip(labels) {
        *table.entry(v.argmax()).or_default().entry(l).or_default() += 1;
    }
    let majority: usize = table.values().map(|m| m.values().max().copied().unwrap_or(0)).sum();
    majority as f64 / labels.len() as f64
}

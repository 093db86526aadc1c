use serde::{Deserialize, Serialize};

/// Sigmoid calibration P(y=1 | f) = 1 / (1 + exp(A f + B)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn predict(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

fn objective(dec: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    dec.iter()
        .zip(t)
        .map(|(&f, &ti)| {
            let z = f * a + b;
            if z >= 0.0 {
                ti * z + (-z).exp().ln_1p()
            } else {
                (ti - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Fit (A, B) by Newton's method with backtracking on the regularized
/// targets of Lin, Lin and Weng. `labels` are 0/1.
pub fn fit_platt(dec: &[f64], labels: &[u8]) -> Platt {
    let prior1 = labels.iter().filter(|&&y| y == 1).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&y| if y == 1 { hi } else { lo }).collect();
    let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
    let mut fval = objective(dec, &t, a, b);
    const SIGMA: f64 = 1e-12;
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            g1 += f * (ti - p);
            g2 += ti - p;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(dec, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    Platt { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_increasing_for_informative_scores() {
        let dec: Vec<f64> = (-20..20).map(|i| i as f64 / 10.0).collect();
        let labels: Vec<u8> = dec.iter().enumerate().map(|(i, &d)| u8::from(d > 0.0 || i % 7 == 0)).collect();
        let p = fit_platt(&dec, &labels);
        assert!(p.a < 0.0);
        assert!(p.predict(1.0) > p.predict(0.0));
        assert!(p.predict(-1e6) >= 0.0 && p.predict(1e6) <= 1.0);
    }

    #[test]
    fn uninformative_scores_give_base_rate() {
        let dec = vec![0.0; 40];
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i < 10)).collect();
        let p = fit_platt(&dec, &labels);
        assert!((p.predict(0.0) - 11.0 / 42.0).abs() < 0.02);
    }
}

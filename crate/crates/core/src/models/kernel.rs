use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// SVM kernel functions. `Sigmoid` is not positive semidefinite in general
/// and is checked before training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// (gamma * <a,b> + coef0)^degree
    Poly { degree: u32, gamma: f64, coef0: f64 },
    /// exp(-gamma * |a-b|^2)
    Rbf { gamma: f64 },
    /// tanh(gamma * <a,b> + coef0)
    Sigmoid { gamma: f64, coef0: f64 },
}

/// Inner product with four independent partial sums.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Poly { degree, gamma, coef0 } => (gamma * dot(a, b) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Sigmoid { gamma, coef0 } => (gamma * dot(a, b) + coef0).tanh(),
        }
    }

    /// Same as `eval` given precomputed squared norms (used by RBF only).
    #[inline]
    pub fn eval_normed(&self, a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => (-gamma * (na + nb - 2.0 * dot(a, b)).max(0.0)).exp(),
            _ => self.eval(a, b),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Poly { .. } => "poly",
            Kernel::Rbf { .. } => "rbf",
            Kernel::Sigmoid { .. } => "sigmoid",
        }
    }

    /// Reject kernels whose Gram matrix has a negative eigenvalue on any
    /// 1x1 or 2x2 principal submatrix of the sampled points.
    pub fn check_psd(&self, points: &[Vec<f64>], max_points: usize) -> Result<()> {
        if !matches!(self, Kernel::Sigmoid { .. }) {
            return Ok(());
        }
        let step = (points.len() / max_points.max(1)).max(1);
        let sample: Vec<&Vec<f64>> = points.iter().step_by(step).take(max_points).collect();
        let diag: Vec<f64> = sample.iter().map(|p| self.eval(p, p)).collect();
        const TOL: f64 = -1e-10;
        for (i, a) in sample.iter().enumerate() {
            if diag[i] < TOL {
                return Err(Error::Model(format!("kernel is not PSD: K(x,x) = {} < 0", diag[i])));
            }
            for (j, b) in sample.iter().enumerate().skip(i + 1) {
                let k = self.eval(a, b);
                let (tr, det) = (diag[i] + diag[j], diag[i] * diag[j] - k * k);
                let min_eig = tr / 2.0 - ((tr * tr / 4.0) - det).max(0.0).sqrt();
                if min_eig < TOL {
                    return Err(Error::Model(format!(
                        "kernel is not PSD: 2x2 Gram submatrix has eigenvalue {min_eig:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Poly { degree, gamma, coef0 } => write!(f, "poly {degree} {gamma} {coef0}"),
            Kernel::Rbf { gamma } => write!(f, "rbf {gamma}"),
            Kernel::Sigmoid { gamma, coef0 } => write!(f, "sigmoid {gamma} {coef0}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::Model(format!("bad kernel spec {s:?}")))
        };
        match parts.first().copied() {
            Some("linear") => Ok(Kernel::Linear),
            Some("poly") => Ok(Kernel::Poly { degree: num(1)? as u32, gamma: num(2)?, coef0: num(3)? }),
            Some("rbf") => Ok(Kernel::Rbf { gamma: num(1)? }),
            Some("sigmoid") => Ok(Kernel::Sigmoid { gamma: num(1)?, coef0: num(2)? }),
            _ => Err(Error::Model(format!("bad kernel spec {s:?}"))),
        }
    }
}

/// RBF width heuristic 1 / (d * var(X)) over all entries of `x`.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, Vec::len);
    let n = (x.len() * d) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0 / d.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let a = [1.0, 2.0];
        let b = [3.0, -1.0];
        assert_eq!(Kernel::Linear.eval(&a, &b), 1.0);
        assert_eq!(Kernel::Poly { degree: 3, gamma: 0.5, coef0: 1.0 }.eval(&a, &b), 3.375);
        let r = Kernel::Rbf { gamma: 0.1 };
        assert!((r.eval(&a, &b) - (-0.1f64 * 13.0).exp()).abs() < 1e-15);
        assert!((r.eval_normed(&a, 5.0, &b, 10.0) - r.eval(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trip() {
        for k in [
            Kernel::Linear,
            Kernel::Poly { degree: 3, gamma: 0.04, coef0: 1.0 },
            Kernel::Rbf { gamma: 0.123456789 },
            Kernel::Sigmoid { gamma: 0.5, coef0: -1.0 },
        ] {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
    }

    #[test]
    fn psd_check_flags_sigmoid() {
        let mut pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 - 5.0, (i * i) as f64 / 10.0]).collect();
        pts.push(vec![0.5, 0.0]);
        assert!(Kernel::Rbf { gamma: 1.0 }.check_psd(&pts, 20).is_ok());
        let bad = Kernel::Sigmoid { gamma: 1.0, coef0: -2.0 };
        assert!(bad.check_psd(&pts, 20).is_err());
    }
}

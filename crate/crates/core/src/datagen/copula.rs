use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stats::pearson_r;

/// Lower-triangular L with L L' = a. Fails unless `a` is symmetric
/// positive definite.
pub fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension { expected: n, got: row.len() });
        }
        for (j, other) in a.iter().enumerate().take(i) {
            if (row[j] - other[i]).abs() > 1e-12 {
                return Err(Error::Generator("correlation matrix is not symmetric".into()));
            }
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 1e-12 {
                    return Err(Error::Generator("correlation matrix is not positive semidefinite".into()));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// `rows` standard normal vectors of length `dim` whose sample mean is
/// exactly zero and sample covariance exactly the identity.
pub fn whitened_normals(rows: usize, dim: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    if rows <= dim {
        return Err(Error::Generator(format!("need more than {dim} samples to whiten")));
    }
    let mut e: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect();
    for k in 0..dim {
        let m = e.iter().map(|r| r[k]).sum::<f64>() / rows as f64;
        for r in e.iter_mut() {
            r[k] -= m;
        }
    }
    let cov: Vec<Vec<f64>> = (0..dim)
        .map(|a| (0..dim).map(|b| e.iter().map(|r| r[a] * r[b]).sum::<f64>() / rows as f64).collect())
        .collect();
    let l = cholesky(&cov)?;
    // solve L w = r for each row
    for r in e.iter_mut() {
        for a in 0..dim {
            let s: f64 = (0..a).map(|b| l[a][b] * r[b]).sum();
            r[a] = (r[a] - s) / l[a][a];
        }
    }
    Ok(e)
}

/// Apply the Cholesky factor: z = L e.
pub fn correlate(l: &[Vec<f64>], e: &[f64]) -> Vec<f64> {
    l.iter().map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum()).collect()
}

/// Latent normal correlation whose transformed pair has Pearson
/// correlation `target`, found by bisection over a fixed Monte Carlo sample.
pub fn calibrate_latent(
    target: f64,
    fa: impl Fn(f64) -> f64,
    fb: impl Fn(f64) -> f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e1: Vec<f64> = (0..samples).map(|_| rng.sample(StandardNormal)).collect();
    let e2: Vec<f64> = (0..samples).map(|_| rng.sample(StandardNormal)).collect();
    let xa: Vec<f64> = e1.iter().map(|&z| fa(z)).collect();
    let observed = |rho: f64| -> f64 {
        let xb: Vec<f64> = e1
            .iter()
            .zip(&e2)
            .map(|(&a, &b)| fb(rho * a + (1.0 - rho * rho).sqrt() * b))
            .collect();
        pearson_r(&xa, &xb).unwrap_or(0.0)
    };
    let (mut lo, mut hi) = (-0.999, 0.999);
    if target < observed(lo) || target > observed(hi) {
        return Err(Error::Generator(format!("correlation {target} is unattainable with these marginals")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if observed(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

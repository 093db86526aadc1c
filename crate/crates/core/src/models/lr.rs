use super::kernel::dot;

#[derive(Debug, Clone, Copy)]
pub struct LrConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LrFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting at the initial point.
    pub trace: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus (lambda/2)|w|^2 and its gradient.
/// The last gradient entry is the (unregularized) intercept.
pub fn objective(x: &[Vec<f64>], y: &[u8], lambda: f64, w: &[f64], b: f64) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let d = w.len();
    let mut f = 0.0;
    let mut g = vec![0.0; d + 1];
    for (xi, &yi) in x.iter().zip(y) {
        let z = dot(w, xi) + b;
        f += softplus(z) - yi as f64 * z;
        let r = sigmoid(z) - yi as f64;
        for (gk, xk) in g.iter_mut().zip(xi) {
            *gk += r * xk;
        }
        g[d] += r;
    }
    f /= n;
    for v in g.iter_mut() {
        *v /= n;
    }
    for k in 0..d {
        f += 0.5 * lambda * w[k] * w[k];
        g[k] += lambda * w[k];
    }
    (f, g)
}

/// Gradient descent with Armijo backtracking.
pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &LrConfig) -> LrFit {
    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let mut b = (pos / (y.len() as f64 - pos)).ln();
    let (mut f, mut g) = objective(x, y, cfg.lambda, &w, b);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        step *= 2.0;
        loop {
            let nw: Vec<f64> = w.iter().zip(&g).map(|(wk, gk)| wk - step * gk).collect();
            let nb = b - step * g[d];
            let (nf, ng) = objective(x, y, cfg.lambda, &nw, nb);
            if nf <= f - 1e-4 * step * gnorm2 {
                w = nw;
                b = nb;
                f = nf;
                g = ng;
                trace.push(f);
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                // no further progress is possible at machine precision
                return LrFit { weights: w, bias: b, iterations, converged: false, trace };
            }
        }
    }
    LrFit { weights: w, bias: b, iterations, converged, trace }
}

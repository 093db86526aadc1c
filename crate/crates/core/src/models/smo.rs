//! Sequential minimal optimization for the soft-margin SVM dual
//!
//!   min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,
//!
//! with Q_ij = y_i y_j K(x_i, x_j).

use std::rc::Rc;

use super::kernel::{dot, Kernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkingSet {
    /// The maximal violating pair.
    MaxViolating,
    /// First index by maximal violation, second by largest objective decrease.
    SecondOrder,
}

#[derive(Debug, Clone, Copy)]
pub struct SmoConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
    pub working_set: WorkingSet,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_mb: 1024,
            working_set: WorkingSet::MaxViolating,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function f(x) = sum_i alpha_i y_i K(x_i, x) + bias.
    pub bias: f64,
    /// Dual objective e'a - 1/2 a'Qa (maximized).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Training points with precomputed squared norms.
struct Points {
    kernel: Kernel,
    flat: Vec<f64>,
    d: usize,
    norms: Vec<f64>,
}

impl Points {
    fn new(kernel: Kernel, x: &[Vec<f64>]) -> Self {
        Self {
            kernel,
            flat: x.iter().flatten().copied().collect(),
            d: x.first().map_or(0, Vec::len),
            norms: x.iter().map(|v| dot(v, v)).collect(),
        }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        let d = self.d;
        self.kernel.eval_normed(&self.flat[i * d..(i + 1) * d], self.norms[i], &self.flat[j * d..(j + 1) * d], self.norms[j])
    }
}

/// Kernel matrix of one training set, filled a row at
/// a time on first use. Solves over subsets of the set share it.
pub struct Gram {
    points: Points,
    n: usize,
    data: Vec<f64>,
    ready: Vec<bool>,
}

impl Gram {
    pub fn new(x: &[Vec<f64>], kernel: Kernel) -> Self {
        let n = x.len();
        Self { points: Points::new(kernel, x), n, data: vec![0.0; n * n], ready: vec![false; n] }
    }

    /// Whether an `n` by `n` matrix fits in `cache_mb` megabytes.
    pub fn fits(n: usize, cache_mb: usize) -> bool {
        n.saturating_mul(n).saturating_mul(std::mem::size_of::<f64>()) <= cache_mb << 20
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&mut self, i: usize) -> &[f64] {
        let n = self.n;
        if !self.ready[i] {
            for j in 0..n {
                self.data[i * n + j] = self.points.k(i, j);
            }
            self.ready[i] = true;
        }
        &self.data[i * n..(i + 1) * n]
    }
}

enum Source<'a> {
    Direct(Points),
    Shared { gram: &'a mut Gram, idx: &'a [usize] },
}

struct QMatrix<'a> {
    source: Source<'a>,
    y: &'a [f64],
    rows: Vec<Option<Rc<Vec<f64>>>>,
    stamp: Vec<u64>,
    cached: Vec<usize>,
    clock: u64,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(source: Source<'a>, y: &'a [f64], cache_mb: usize) -> Self {
        let n = y.len();
        let row_bytes = std::mem::size_of_val(y).max(1);
        Self {
            source,
            y,
            rows: vec![None; n],
            stamp: vec![0; n],
            cached: Vec::new(),
            clock: 0,
            capacity: (cache_mb * (1 << 20) / row_bytes).max(2),
        }
    }

    fn diag(&self, i: usize) -> f64 {
        match &self.source {
            Source::Direct(p) => p.k(i, i),
            Source::Shared { gram, idx } => gram.points.k(idx[i], idx[i]),
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.stamp[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return Rc::clone(r);
        }
        if self.cached.len() >= self.capacity {
            let (pos, _) = self
                .cached
                .iter()
                .enumerate()
                .filter(|(_, &r)| r != i)
                .min_by_key(|(_, &r)| self.stamp[r])
                .expect("cache non-empty");
            let victim = self.cached.swap_remove(pos);
            self.rows[victim] = None;
        }
        let (y, yi) = (self.y, self.y[i]);
        let row: Vec<f64> = match &mut self.source {
            Source::Direct(p) => (0..y.len()).map(|j| yi * y[j] * p.k(i, j)).collect(),
            Source::Shared { gram, idx } => {
                let k = gram.row(idx[i]);
                idx.iter().zip(y).map(|(&g, &yj)| yi * yj * k[g]).collect()
            }
        };
        let row = Rc::new(row);
        self.rows[i] = Some(Rc::clone(&row));
        self.cached.push(i);
        row
    }
}

/// Solve the dual for labels `y` in {-1, +1}.
pub fn solve(x: &[Vec<f64>], y: &[f64], kernel: Kernel, cfg: &SmoConfig) -> SmoSolution {
    run(QMatrix::new(Source::Direct(Points::new(kernel, x)), y, cfg.cache_mb), cfg, None)
}

/// Solve the dual over the points `idx` of `gram`, with `y[k]` the label of
/// point `idx[k]`. A feasible `start` (inside the box, `y'a = 0`) replaces
/// the zero starting point.
pub fn solve_shared(gram: &mut Gram, idx: &[usize], y: &[f64], cfg: &SmoConfig, start: Option<&[f64]>) -> SmoSolution {
    assert_eq!(idx.len(), y.len(), "one label per index");
    if let Some(a) = start {
        assert_eq!(a.len(), y.len(), "one starting value per index");
    }
    run(QMatrix::new(Source::Shared { gram, idx }, y, cfg.cache_mb), cfg, start)
}

fn run(mut q: QMatrix<'_>, cfg: &SmoConfig, start: Option<&[f64]>) -> SmoSolution {
    let y = q.y;
    let n = y.len();
    let c = cfg.c;
    let qd: Vec<f64> = (0..n).map(|i| q.diag(i)).collect();
    let mut alpha = start.map_or_else(|| vec![0.0; n], |a| a.iter().map(|&v| v.clamp(0.0, c)).collect());
    let mut grad = vec![-1.0; n];
    for (s, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            let qs = q.row(s);
            for (g, &v) in grad.iter_mut().zip(qs.iter()) {
                *g += a * v;
            }
        }
    }
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    const TAU: f64 = 1e-12;

    // Membership in the up/low sets as additive penalties (0 or an infinity)
    // so the selection scan has no data-dependent branches.
    let pen_up = |a: f64, yi: f64| if up(a, yi) { 0.0 } else { f64::NEG_INFINITY };
    let pen_low = |a: f64, yi: f64| if low(a, yi) { 0.0 } else { f64::INFINITY };
    let mut in_up: Vec<f64> = (0..n).map(|t| pen_up(alpha[t], y[t])).collect();
    let mut in_low: Vec<f64> = (0..n).map(|t| pen_low(alpha[t], y[t])).collect();

    // i maximizes -y_t G_t over the up set, j minimizes it over the low set
    let (mut gmax, mut i, mut gmin, mut j_mv) = select(&mut grad, &[], &[], 0.0, 0.0, y, &in_up, &in_low);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        if i == usize::MAX || j_mv == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        let qi = q.row(i);
        let j = match cfg.working_set {
            WorkingSet::MaxViolating => j_mv,
            WorkingSet::SecondOrder => {
                let (mut best, mut jj) = (f64::INFINITY, usize::MAX);
                for t in 0..n {
                    if in_low[t] != 0.0 {
                        continue;
                    }
                    let b = gmax + y[t] * grad[t];
                    if b > 0.0 {
                        let a = qd[i] + qd[t] - 2.0 * y[i] * y[t] * qi[t];
                        let a = if a > 0.0 { a } else { TAU };
                        let gain = -(b * b) / a;
                        if gain <= best {
                            best = gain;
                            jj = t;
                        }
                    }
                }
                if jj == usize::MAX {
                    converged = true;
                    break;
                }
                jj
            }
        };
        let qj = q.row(j);
        iterations += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (ai_old, aj_old);
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        for t in [i, j] {
            in_up[t] = pen_up(alpha[t], y[t]);
            in_low[t] = pen_low(alpha[t], y[t]);
        }
        let (di, dj) = (ai - ai_old, aj - aj_old);
        // gradient update fused with the next selection pass
        (gmax, i, gmin, j_mv) = select(&mut grad, &qi, &qj, di, dj, y, &in_up, &in_low);
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb, mut sum, mut nfree) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            nfree += 1;
            sum += yg;
        }
    }
    let rho = if nfree > 0 { sum / nfree as f64 } else { (ub + lb) / 2.0 };
    let objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    SmoSolution {
        alpha,
        bias: -rho,
        objective,
        iterations,
        converged,
    }
}
const LANES: usize = 8;

/// Applies `grad += di*qi + dj*qj` (skipped when `qi` is empty) and returns
/// (max, argmax) over the up set and (min, argmin) over the low set of
/// `-y*grad`, taking the lowest index on ties. Extremes are found with
/// lane-wise max/min first and their positions located afterwards.
#[allow(clippy::too_many_arguments)]
fn select(
    grad: &mut [f64],
    qi: &[f64],
    qj: &[f64],
    di: f64,
    dj: f64,
    y: &[f64],
    in_up: &[f64],
    in_low: &[f64],
) -> (f64, usize, f64, usize) {
    let n = grad.len();
    let (y, in_up, in_low) = (&y[..n], &in_up[..n], &in_low[..n]);
    let mut hi = [f64::NEG_INFINITY; LANES];
    let mut lo = [f64::INFINITY; LANES];
    let full = n - n % LANES;
    if qi.is_empty() {
        for base in (0..full).step_by(LANES) {
            for l in 0..LANES {
                let t = base + l;
                let v = -y[t] * grad[t];
                hi[l] = hi[l].max(v + in_up[t]);
                lo[l] = lo[l].min(v + in_low[t]);
            }
        }
    } else {
        let (qi, qj) = (&qi[..n], &qj[..n]);
        for base in (0..full).step_by(LANES) {
            for l in 0..LANES {
                let t = base + l;
                grad[t] += qi[t] * di + qj[t] * dj;
                let v = -y[t] * grad[t];
                hi[l] = hi[l].max(v + in_up[t]);
                lo[l] = lo[l].min(v + in_low[t]);
            }
        }
        for t in full..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }
    for t in full..n {
        let v = -y[t] * grad[t];
        hi[0] = hi[0].max(v + in_up[t]);
        lo[0] = lo[0].min(v + in_low[t]);
    }
    let gmax = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmin = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let i = if gmax > f64::NEG_INFINITY {
        (0..n).find(|&t| -y[t] * grad[t] + in_up[t] == gmax).expect("maximum is attained")
    } else {
        usize::MAX
    };
    let j = if gmin < f64::INFINITY {
        (0..n).find(|&t| -y[t] * grad[t] + in_low[t] == gmin).expect("minimum is attained")
    } else {
        usize::MAX
    };
    (gmax, i, gmin, j)
}

/// Dual objective e'a - 1/2 a'Qa computed directly.
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], kernel: Kernel, alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..x.len() {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..x.len() {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (cx, cy, lab) in [(1.0, 1.0, 1.0), (-1.0, -1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0)] {
            for k in 0..5 {
                let e = k as f64 * 0.05;
                x.push(vec![cx + e, cy - e]);
                y.push(lab);
            }
        }
        (x, y)
    }

    #[test]
    fn constraints_and_reported_objective() {
        let (x, y) = xor();
        for ws in [WorkingSet::MaxViolating, WorkingSet::SecondOrder] {
            let cfg = SmoConfig { c: 2.0, tol: 1e-8, working_set: ws, ..Default::default() };
            let k = Kernel::Rbf { gamma: 0.5 };
            let s = solve(&x, &y, k, &cfg);
            assert!(s.converged);
            assert!(s.alpha.iter().all(|&a| (0.0..=2.0).contains(&a)));
            let balance: f64 = s.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(balance.abs() < 1e-9);
            assert!((s.objective - dual_objective(&x, &y, k, &s.alpha)).abs() < 1e-9);
        }
    }

    #[test]
    fn shared_gram_matches_direct_solve() {
        let (x, y) = xor();
        let k = Kernel::Poly { degree: 3, gamma: 0.5, coef0: 1.0 };
        let cfg = SmoConfig { tol: 1e-10, ..Default::default() };
        let idx: Vec<usize> = (0..x.len()).filter(|i| i % 3 != 1).collect();
        let sx: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let sy: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let direct = solve(&sx, &sy, k, &cfg);
        let mut gram = Gram::new(&x, k);
        let shared = solve_shared(&mut gram, &idx, &sy, &cfg, None);
        assert_eq!(direct.alpha, shared.alpha);
        assert_eq!(direct.bias, shared.bias);
        assert_eq!(gram.len(), x.len());
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let (x, y) = xor();
        let k = Kernel::Rbf { gamma: 0.5 };
        let cfg = SmoConfig { c: 2.0, tol: 1e-10, ..Default::default() };
        let idx: Vec<usize> = (0..x.len()).collect();
        let mut gram = Gram::new(&x, k);
        let cold = solve_shared(&mut gram, &idx, &y, &cfg, None);
        // feasible: one point per class at C/2
        let mut start = vec![0.0; x.len()];
        start[0] = 1.0;
        start[10] = 1.0;
        let warm = solve_shared(&mut gram, &idx, &y, &cfg, Some(&start));
        assert!(warm.converged);
        assert!((warm.objective - cold.objective).abs() < 1e-8);
        assert!((warm.objective - dual_objective(&x, &y, k, &warm.alpha)).abs() < 1e-9);
    }

    #[test]
    fn tiny_cache_gives_same_solution() {
        let (x, y) = xor();
        let k = Kernel::Rbf { gamma: 0.5 };
        let big = solve(&x, &y, k, &SmoConfig { tol: 1e-10, ..Default::default() });
        let small = solve(&x, &y, k, &SmoConfig { tol: 1e-10, cache_mb: 0, ..Default::default() });
        assert_eq!(big.alpha, small.alpha);
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shifted, truncated discrete power law P(n) ∝ (n + shift)^-tau on
/// 1..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub tau: f64,
    pub shift: f64,
    pub n_max: usize,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl PowerLaw {
    pub fn new(tau: f64, shift: f64, n_max: usize) -> Self {
        let w: Vec<f64> = (1..=n_max).map(|n| (n as f64 + shift).powf(-tau)).collect();
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        let cdf = w
            .iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect();
        Self { tau, shift, n_max, cdf }
    }

    /// P(n < k).
    pub fn mass_below(&self, k: usize) -> f64 {
        if k <= 1 {
            0.0
        } else {
            self.cdf[(k - 2).min(self.n_max - 1)]
        }
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut m = 0.0;
        for (i, &c) in self.cdf.iter().enumerate() {
            m += (i + 1) as f64 * (c - prev);
            prev = c;
        }
        m
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u).min(self.n_max - 1) + 1
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Find the power law with P(n < occasional_below) = occasional_mass and
/// P(n >= frequent_from) = frequent_mass.
pub fn solve_activity(
    occasional_mass: f64,
    occasional_below: usize,
    frequent_mass: f64,
    frequent_from: usize,
    n_max: usize,
) -> Result<PowerLaw> {
    let infeasible = || {
        Error::Generator(format!(
            "no power law on 1..={n_max} puts {occasional_mass} below {occasional_below} and {frequent_mass} at or above {frequent_from}"
        ))
    };
    if !(0.0..1.0).contains(&occasional_mass)
        || !(0.0..1.0).contains(&frequent_mass)
        || occasional_mass + frequent_mass >= 1.0
        || frequent_from > n_max
        || occasional_below >= frequent_from
    {
        return Err(infeasible());
    }
    let shift_for = |tau: f64| bisect(-0.999, 1e4, |c| PowerLaw::new(tau, c, n_max).mass_below(occasional_below) - occasional_mass);
    let tail = |tau: f64| shift_for(tau).map(|c| 1.0 - PowerLaw::new(tau, c, n_max).mass_below(frequent_from));
    let tau = bisect(0.05, 8.0, |t| tail(t).map_or(f64::NAN, |m| m - frequent_mass))
        .filter(|t| t.is_finite())
        .ok_or_else(infeasible)?;
    let shift = shift_for(tau).ok_or_else(infeasible)?;
    let law = PowerLaw::new(tau, shift, n_max);
    let ok = (law.mass_below(occasional_below) - occasional_mass).abs() < 1e-6
        && (1.0 - law.mass_below(frequent_from) - frequent_mass).abs() < 1e-6;
    if ok {
        Ok(law)
    } else {
        Err(infeasible())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_both_bucket_masses() {
        let law = solve_activity(0.51, 4, 0.11, 32, 200).unwrap();
        assert!((law.mass_below(4) - 0.51).abs() < 1e-9);
        assert!((1.0 - law.mass_below(32) - 0.11).abs() < 1e-9);
        assert!(law.tau > 1.0 && law.tau < 2.5);
    }

    #[test]
    fn infeasible_targets_rejected() {
        assert!(solve_activity(0.51, 4, 0.11, 32, 20).is_err());
        assert!(solve_activity(0.7, 4, 0.4, 32, 200).is_err());
    }
}

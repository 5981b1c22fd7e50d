use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAIL_LIMIT: f64 = 1e-10;
const MAX_LEVELS: usize = 100_000;

/// Steady-state occupation probabilities `p[n]`, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationDist {
    pub p: Vec<f64>,
}

impl OccupationDist {
    /// Wraps explicit probabilities, checking non-negativity and normalization.
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("occupation distribution needs at least one level"));
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("occupation probabilities must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("occupation probabilities sum to {total}, not 1")));
        }
        Ok(Self { p })
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Unfiltered `⟨n(n-1)⟩/⟨n⟩²`.
    pub fn unfiltered_g2(&self) -> Result<f64> {
        g2_zero_analytic(self, &vec![1.0; self.p.len()])
    }
}

/// Geometric (black-body) occupation `p[n] = (1 - x)xⁿ` with `x = A/C` the
/// gain-to-loss ratio. `n_max` is extended if needed so that `p[n_max] < 1e-10`;
/// the truncated distribution is renormalized.
pub fn thermal_occupation(a_over_c: f64, n_max: usize) -> Result<OccupationDist> {
    if !(0.0..1.0).contains(&a_over_c) {
        return Err(Error::invalid(format!(
            "A/C must lie in [0, 1) below threshold, got {a_over_c}"
        )));
    }
    let mut p = vec![1.0 - a_over_c];
    loop {
        let last = *p.last().expect("non-empty");
        if p.len() > n_max && last < TAIL_LIMIT {
            break;
        }
        if p.len() > MAX_LEVELS {
            return Err(Error::Truncation(format!(
                "geometric tail still {last:e} after {MAX_LEVELS} levels (A/C = {a_over_c})"
            )));
        }
        p.push(last * a_over_c);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(OccupationDist { p })
}

/// Zero-delay correlation of filtered emission,
/// `Σ P[n]P[n-1]n(n-1)p[n] / (Σ P[n]·n·p[n])²`.
///
/// `transmissions[n]` is the probability that a photon from the `n → n-1`
/// transition passes the filter; it must cover every populated level.
pub fn g2_zero_analytic(dist: &OccupationDist, transmissions: &[f64]) -> Result<f64> {
    let p = &dist.p;
    let highest = p.iter().rposition(|&v| v > 0.0).unwrap_or(0);
    if transmissions.len() <= highest {
        return Err(Error::invalid(format!(
            "transmissions cover levels up to {} but the distribution reaches {highest}",
            transmissions.len().saturating_sub(1)
        )));
    }
    if transmissions.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("transmissions must be finite and non-negative"));
    }
    let mut numerator = 0.0;
    let mut emission = 0.0;
    for n in 1..=highest {
        let nf = n as f64;
        emission += transmissions[n] * nf * p[n];
        if n >= 2 {
            numerator += transmissions[n] * transmissions[n - 1] * nf * (nf - 1.0) * p[n];
        }
    }
    if !(emission > 0.0) {
        return Err(Error::Degenerate("no detectable emission (zero denominator)".into()));
    }
    Ok(numerator / (emission * emission))
}

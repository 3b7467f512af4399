//! Escort power mean: `((Σ p^r α^q) / (Σ p^r))^(1/q)` over the support of
//! `p(· | prompt)`.
//!
//! `q` picks whether large or small compliances dominate, `r` whether the
//! bulk or the tail of the distribution does. Evaluation is in log space, so
//! large finite `q` and `r` stay usable as numerical approaches to the
//! infinite limits. Limit conventions:
//!
//! * `r = 0`: uniform weight on the support.
//! * `r = +∞`: uniform weight on the modes (probabilities within
//!   [`MODE_TOLERANCE`] of the maximum).
//! * `q = 0`: geometric mean.
//! * `q = ±∞`: max / min compliance over the weighted set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TokenString, TrajectoryModel};
use crate::numeric::{ln0, log_sum_exp};
use crate::structures::Structure;

pub const MODE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscortParams {
    pub q: f64,
    pub r: f64,
}

impl EscortParams {
    pub const fn new(q: f64, r: f64) -> Self {
        Self { q, r }
    }

    /// The plain structure core.
    pub const STANDARD: Self = Self::new(1.0, 1.0);

    fn validate(&self) -> Result<()> {
        if self.q.is_nan() {
            return Err(Error::InvalidEscort("q is NaN".into()));
        }
        if !(self.r >= 0.0) {
            return Err(Error::InvalidEscort(format!("r must lie in [0, ∞], got {}", self.r)));
        }
        Ok(())
    }
}

/// Generalized structure core of `s` under `p(· | prompt)`.
pub fn generalized_core(
    model: &TrajectoryModel,
    prompt: &TokenString,
    s: &Structure,
    params: EscortParams,
) -> Result<f64> {
    let trajectories = model.enumerate_trajectories(prompt)?;
    let weighted = trajectories
        .iter()
        .map(|t| Ok((t.prob, s.evaluate(&t.string)?)))
        .collect::<Result<Vec<_>>>()?;
    generalized_core_from(&weighted, params)
}

/// Escort power mean over explicit `(probability, compliance)` pairs. Pairs
/// with zero probability are outside the support and ignored.
pub fn generalized_core_from(pairs: &[(f64, f64)], params: EscortParams) -> Result<f64> {
    params.validate()?;
    let support: Vec<(f64, f64)> = pairs.iter().copied().filter(|(p, _)| *p > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidEscort("empty support".into()));
    }
    let EscortParams { q, r } = params;
    // Checked on the whole support, not only the selected modes, so the
    // domain at r = ∞ matches every finite r.
    if q <= 0.0 && support.iter().any(|(_, a)| *a <= 0.0) {
        return Err(Error::InvalidEscort(format!("q = {q} requires strictly positive compliance on the support")));
    }

    let log_weights: Vec<f64> = if r == f64::INFINITY {
        let p_max = support.iter().map(|(p, _)| *p).fold(0.0, f64::max);
        support
            .iter()
            .map(|(p, _)| if *p >= p_max - MODE_TOLERANCE { 0.0 } else { f64::NEG_INFINITY })
            .collect()
    } else if r == 0.0 {
        vec![0.0; support.len()]
    } else {
        support.iter().map(|(p, _)| r * p.ln()).collect()
    };
    let selected: Vec<(f64, f64)> = log_weights
        .iter()
        .zip(&support)
        .filter(|(lw, _)| **lw > f64::NEG_INFINITY)
        .map(|(lw, (_, a))| (*lw, *a))
        .collect();

    let lo = selected.iter().map(|(_, a)| *a).fold(f64::INFINITY, f64::min);
    let hi = selected.iter().map(|(_, a)| *a).fold(f64::NEG_INFINITY, f64::max);
    if q == f64::INFINITY {
        return Ok(hi);
    }
    if q == f64::NEG_INFINITY {
        return Ok(lo);
    }

    let lws: Vec<f64> = selected.iter().map(|(lw, _)| *lw).collect();
    let log_norm = log_sum_exp(&lws);
    let value = if q == 0.0 {
        let mean_log = crate::numeric::sum(selected.iter().map(|(lw, a)| (lw - log_norm).exp() * a.ln()));
        mean_log.exp()
    } else {
        let terms: Vec<f64> = selected.iter().map(|(lw, a)| lw + q * ln0(*a)).collect();
        ((log_sum_exp(&terms) - log_norm) / q).exp()
    };
    Ok(value.clamp(lo, hi))
}

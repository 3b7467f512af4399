//! Generalized orientation/deviance pairs: plain subtraction measured by a
//! difference metric, and the store-both orientation measured by Rényi
//! relative entropy (Hill excess and deficit).

use serde::{Deserialize, Serialize};

use crate::cores::normalized_core;
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, sum};
use crate::structures::DiffMetric;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// An orientation map paired with the scalar that measures it.
pub trait GeneralizedDeviance {
    type Orientation;

    fn orient(&self, v: &[f64], core: &[f64]) -> Result<Self::Orientation>;

    fn measure(&self, o: &Self::Orientation) -> Result<f64>;

    fn deviance(&self, v: &[f64], core: &[f64]) -> Result<f64> {
        self.measure(&self.orient(v, core)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Subtraction(pub DiffMetric);

impl GeneralizedDeviance for Subtraction {
    type Orientation = Vec<f64>;

    fn orient(&self, v: &[f64], core: &[f64]) -> Result<Vec<f64>> {
        if v.len() != core.len() {
            return Err(Error::DimensionMismatch { expected: core.len(), found: v.len() });
        }
        Ok(v.iter().zip(core).map(|(a, c)| a - c).collect())
    }

    fn measure(&self, o: &Vec<f64>) -> Result<f64> {
        self.0.norm(o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HillSide {
    Excess,
    Deficit,
}

/// Keeps both normalized vectors and reports one Hill deviance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillPair {
    pub q: f64,
    pub side: HillSide,
}

impl GeneralizedDeviance for HillPair {
    type Orientation = (Vec<f64>, Vec<f64>);

    fn orient(&self, v: &[f64], core: &[f64]) -> Result<Self::Orientation> {
        if v.len() != core.len() {
            return Err(Error::DimensionMismatch { expected: core.len(), found: v.len() });
        }
        Ok((normalize_compliance(v)?, normalized_core(core)?))
    }

    fn measure(&self, (v, c): &Self::Orientation) -> Result<f64> {
        let (excess, deficit) = hill_deviances(v, c, self.q)?;
        Ok(match self.side {
            HillSide::Excess => excess,
            HillSide::Deficit => deficit,
        })
    }
}

fn normalize_compliance(v: &[f64]) -> Result<Vec<f64>> {
    normalized_core(v).map_err(|e| match e {
        Error::DegenerateCore => Error::InvalidArgument("compliance vector is all zero and cannot be normalized".into()),
        other => other,
    })
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyVector);
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::NotNormalized(format!("{name} has a negative or non-finite component")));
    }
    let total = sum(p.iter().copied());
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// `Σ_{supp p} p ln(p / r)`; `+∞` when `r` vanishes inside `supp p`.
pub fn kl_divergence(p: &[f64], r: &[f64]) -> Result<f64> {
    check_pair(p, r)?;
    let mut acc = crate::numeric::CompensatedSum::new();
    for (&pi, &ri) in p.iter().zip(r) {
        if pi > 0.0 {
            if ri == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc.add(pi * (pi / ri).ln());
        }
    }
    Ok(acc.value().max(0.0))
}

fn check_pair(p: &[f64], r: &[f64]) -> Result<()> {
    if p.len() != r.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: r.len() });
    }
    check_distribution(p, "p")?;
    check_distribution(r, "r")
}

/// Rényi relative entropy `H_q(p ‖ r)` of order `q ∈ [0, ∞]`, summed over
/// `supp p`. `q = 1` is the KL divergence and `q = ∞` is `ln max p/r`.
/// A zero of `r` inside `supp p` gives `+∞` for `q ≥ 1`.
pub fn renyi_relative_entropy(p: &[f64], r: &[f64], q: f64) -> Result<f64> {
    check_pair(p, r)?;
    if !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!("Rényi order must lie in [0, ∞], got {q}")));
    }
    if p == r {
        return Ok(0.0);
    }
    if q == 1.0 {
        return kl_divergence(p, r);
    }
    let support: Vec<(f64, f64)> = p.iter().copied().zip(r.iter().copied()).filter(|(pi, _)| *pi > 0.0).collect();
    let hits_zero = support.iter().any(|(_, ri)| *ri == 0.0);
    if q == f64::INFINITY {
        if hits_zero {
            return Ok(f64::INFINITY);
        }
        let max = support.iter().map(|(pi, ri)| pi / ri).fold(0.0, f64::max);
        return Ok(max.ln().max(0.0));
    }
    if q > 1.0 && hits_zero {
        return Ok(f64::INFINITY);
    }
    let terms: Vec<f64> = support
        .iter()
        .filter(|(_, ri)| *ri > 0.0)
        .map(|(pi, ri)| q * pi.ln() + (1.0 - q) * ri.ln())
        .collect();
    Ok((log_sum_exp(&terms) / (q - 1.0)).max(0.0))
}

/// `(exp H_q(v ‖ c), exp H_q(c ‖ v))` for normalized inputs.
pub fn hill_deviances(v_norm: &[f64], c_norm: &[f64], q: f64) -> Result<(f64, f64)> {
    let excess = renyi_relative_entropy(v_norm, c_norm, q)?.exp();
    let deficit = renyi_relative_entropy(c_norm, v_norm, q)?.exp();
    Ok((excess, deficit))
}

/// Hill deviances of a raw compliance vector against a raw core; both are
/// normalized first.
pub fn hill_deviances_for(v: &[f64], core: &[f64], q: f64) -> Result<(f64, f64)> {
    let (vn, cn) = HillPair { q, side: HillSide::Excess }.orient(v, core)?;
    hill_deviances(&vn, &cn, q)
}

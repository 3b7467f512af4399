use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar system score over a compliance vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Mean,
    Min,
    Max,
    /// `(Σ |v_i|^p)^(1/p) / n^(1/p)`, p ≥ 1.
    PNorm(f64),
}

impl Aggregator {
    pub fn apply(&self, v: &[f64]) -> Result<f64> {
        if v.is_empty() {
            return Err(Error::EmptyVector);
        }
        let n = v.len() as f64;
        Ok(match *self {
            Aggregator::Mean => crate::numeric::sum(v.iter().copied()) / n,
            Aggregator::Min => v.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregator::PNorm(p) => {
                if !(p >= 1.0) {
                    return Err(Error::InvalidConfig(format!("p-norm needs p >= 1, got {p}")));
                }
                if p.is_infinite() {
                    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
                } else {
                    (crate::numeric::sum(v.iter().map(|x| x.abs().powf(p))) / n).powf(1.0 / p)
                }
            }
        })
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregator::Mean => f.write_str("mean"),
            Aggregator::Min => f.write_str("min"),
            Aggregator::Max => f.write_str("max"),
            Aggregator::PNorm(p) => write!(f, "p_norm({p})"),
        }
    }
}

/// Norm applied to a difference of compliance vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMetric {
    /// L1 / n.
    AbsMean,
    /// L2 / √n.
    #[default]
    L2norm,
    Linf,
    /// Plain Euclidean norm; may exceed 1.
    L2raw,
}

impl DiffMetric {
    /// Norm of a deviation vector.
    pub fn norm(&self, d: &[f64]) -> Result<f64> {
        if d.is_empty() {
            return Err(Error::EmptyVector);
        }
        let n = d.len() as f64;
        Ok(match self {
            DiffMetric::AbsMean => crate::numeric::sum(d.iter().map(|x| x.abs())) / n,
            DiffMetric::L2norm => (crate::numeric::sum(d.iter().map(|x| x * x)) / n).sqrt(),
            DiffMetric::Linf => d.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
            DiffMetric::L2raw => crate::numeric::sum(d.iter().map(|x| x * x)).sqrt(),
        })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }

    /// Whether the metric maps `[0,1]^n` differences into `[0,1]`.
    pub fn is_unit_bounded(&self) -> bool {
        !matches!(self, DiffMetric::L2raw)
    }
}

impl fmt::Display for DiffMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffMetric::AbsMean => "abs_mean",
            DiffMetric::L2norm => "l2norm",
            DiffMetric::Linf => "linf",
            DiffMetric::L2raw => "l2raw",
        })
    }
}

pub const ALL_METRICS: [DiffMetric; 4] =
    [DiffMetric::AbsMean, DiffMetric::L2norm, DiffMetric::Linf, DiffMetric::L2raw];

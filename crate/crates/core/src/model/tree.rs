use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::string::{Alphabet, Next, TokenString};
use crate::error::{Error, Result};

/// Tolerance on branch normalization when a model is built or loaded.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of trajectories an exact enumeration may visit.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 1 << 20;

/// Model-spec document.
///
/// `branches` maps a prefix (tokens joined by spaces, `""` for the root) to
/// a mapping from token or end marker to probability. Outcomes missing from
/// a mapping have probability zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub tokens: Vec<String>,
    pub max_len: usize,
    pub branches: BTreeMap<String, BTreeMap<String, f64>>,
}

/// A terminal string together with its probability given the prompt it was
/// enumerated from.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub string: TokenString,
    pub prob: f64,
    pub log_prob: f64,
}

/// Finite autoregressive generator stored as an explicit prefix tree.
///
/// Each non-terminal prefix maps to a dense row of next-outcome
/// probabilities indexed by token id with the end marker in the last slot.
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct TrajectoryModel {
    alphabet: Arc<Alphabet>,
    max_len: usize,
    branches: BTreeMap<TokenString, Vec<f64>>,
}

impl TrajectoryModel {
    pub fn new(
        alphabet: Arc<Alphabet>,
        max_len: usize,
        branches: BTreeMap<TokenString, Vec<f64>>,
    ) -> Result<Self> {
        let model = Self { alphabet, max_len, branches };
        model.validate()?;
        Ok(model)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let alphabet = Arc::new(Alphabet::new(spec.tokens.iter().cloned())?);
        let mut branches = BTreeMap::new();
        for (key, dist) in &spec.branches {
            let prefix = alphabet.parse(key).map_err(|e| Error::Malformed(e.to_string()))?;
            if prefix.is_terminal() {
                return Err(Error::Malformed(format!("branch key '{key}' is terminal")));
            }
            let mut row = vec![0.0; alphabet.outcomes()];
            for (symbol, &p) in dist {
                let next = alphabet.next_symbol(symbol).ok_or_else(|| {
                    Error::Malformed(format!("unknown symbol '{symbol}' in branch '{key}'"))
                })?;
                row[alphabet.outcome_index(next)] = p;
            }
            if branches.insert(prefix, row).is_some() {
                return Err(Error::Malformed(format!("duplicate branch key '{key}'")));
            }
        }
        Self::new(alphabet, spec.max_len, branches)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_spec(&self) -> ModelSpec {
        let a = &self.alphabet;
        let branches = self
            .branches
            .iter()
            .map(|(prefix, row)| {
                let dist = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(i, &p)| (a.symbol_name(a.outcome(i)).to_owned(), p))
                    .collect();
                (a.prefix_key(prefix), dist)
            })
            .collect();
        ModelSpec { tokens: a.tokens().to_vec(), max_len: self.max_len, branches }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_arc(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn branches(&self) -> &BTreeMap<TokenString, Vec<f64>> {
        &self.branches
    }

    pub fn branch(&self, prefix: &TokenString) -> Option<&[f64]> {
        self.branches.get(prefix).map(Vec::as_slice)
    }

    pub fn render(&self, s: &TokenString) -> String {
        self.alphabet.render(s)
    }

    pub fn parse(&self, text: &str) -> Result<TokenString> {
        self.alphabet.parse(text)
    }

    fn validate(&self) -> Result<()> {
        let a = &*self.alphabet;
        if self.max_len == 0 {
            return Err(Error::Malformed("max_len must be positive".into()));
        }
        if !self.branches.contains_key(&TokenString::root()) {
            return Err(Error::UndefinedPrefix(a.render(&TokenString::root())));
        }
        for (prefix, row) in &self.branches {
            let name = || a.render(prefix);
            if prefix.is_terminal() {
                return Err(Error::Malformed(format!("branch at terminal string '{}'", name())));
            }
            if row.len() != a.outcomes() {
                return Err(Error::Malformed(format!(
                    "branch at '{}' has {} outcomes, expected {}",
                    name(),
                    row.len(),
                    a.outcomes()
                )));
            }
            if let Some(&bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::InvalidProbability { prefix: name(), value: bad });
            }
            let sum = crate::numeric::sum(row.iter().copied());
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::Normalization { prefix: name(), sum });
            }
            let depth = prefix.tokens().len();
            if depth + 1 > self.max_len {
                return Err(Error::NonTermination { prefix: name(), max_len: self.max_len });
            }
            if let Some(parent) = prefix.parent() {
                if !self.branches.contains_key(&parent) {
                    return Err(Error::UnreachablePrefix(name()));
                }
            }
            for (i, &p) in row.iter().enumerate() {
                let next = a.outcome(i);
                if p == 0.0 || next == Next::End {
                    continue;
                }
                let child = prefix.child(next);
                if depth + 2 > self.max_len {
                    return Err(Error::NonTermination { prefix: a.render(&child), max_len: self.max_len });
                }
                if !self.branches.contains_key(&child) {
                    return Err(Error::UndefinedPrefix(a.render(&child)));
                }
            }
        }
        Ok(())
    }

    fn check_prompt(&self, prompt: &TokenString) -> Result<&[f64]> {
        if prompt.is_terminal() {
            return Err(Error::TerminalPrompt(self.render(prompt)));
        }
        self.branch(prompt).ok_or_else(|| Error::MissingBranch(self.render(prompt)))
    }

    /// Probability of one step.
    pub fn next_prob(&self, prefix: &TokenString, next: Next) -> Result<f64> {
        let row = self.check_prompt(prefix)?;
        Ok(row[self.alphabet.outcome_index(next)])
    }

    /// `p(x | prompt)` for any string `x` extending `prompt`, terminal or not.
    pub fn continuation_probability(&self, prompt: &TokenString, x: &TokenString) -> Result<f64> {
        if !prompt.is_prefix_of(x) {
            return Err(Error::NotExtension { string: self.render(x), prompt: self.render(prompt) });
        }
        let mut prob = 1.0;
        for k in prompt.len()..x.len() {
            let prefix = x.prefix(k);
            let next = x.symbol_at(k + 1).expect("step within string");
            prob *= self.next_prob(&prefix, next)?;
        }
        Ok(prob)
    }

    /// Log of [`TrajectoryModel::continuation_probability`], accumulated in
    /// log space.
    pub fn continuation_log_probability(&self, prompt: &TokenString, x: &TokenString) -> Result<f64> {
        if !prompt.is_prefix_of(x) {
            return Err(Error::NotExtension { string: self.render(x), prompt: self.render(prompt) });
        }
        let mut log_prob = 0.0;
        for k in prompt.len()..x.len() {
            let prefix = x.prefix(k);
            let next = x.symbol_at(k + 1).expect("step within string");
            log_prob += crate::numeric::ln0(self.next_prob(&prefix, next)?);
        }
        Ok(log_prob)
    }

    /// `p(y | prompt)` for a trajectory `y`: the product of branch
    /// probabilities along the path from `prompt` to `y`.
    pub fn trajectory_probability(&self, prompt: &TokenString, y: &TokenString) -> Result<f64> {
        if !y.is_terminal() {
            return Err(Error::NotTerminal(self.render(y)));
        }
        self.continuation_probability(prompt, y)
    }

    pub fn enumerate_trajectories(&self, prompt: &TokenString) -> Result<Vec<Trajectory>> {
        self.enumerate_trajectories_limited(prompt, DEFAULT_ENUMERATION_LIMIT)
    }

    /// Exhaustive list of positive-probability trajectories extending
    /// `prompt`, in depth-first order with the end marker visited before the
    /// tokens at each node.
    pub fn enumerate_trajectories_limited(
        &self,
        prompt: &TokenString,
        limit: usize,
    ) -> Result<Vec<Trajectory>> {
        self.check_prompt(prompt)?;
        let mut out = Vec::new();
        self.enumerate_from(prompt, 1.0, 0.0, limit, &mut out)?;
        Ok(out)
    }

    fn enumerate_from(
        &self,
        prefix: &TokenString,
        prob: f64,
        log_prob: f64,
        limit: usize,
        out: &mut Vec<Trajectory>,
    ) -> Result<()> {
        let row = self.branch(prefix).ok_or_else(|| Error::MissingBranch(self.render(prefix)))?;
        let order = std::iter::once(self.alphabet.len()).chain(0..self.alphabet.len());
        for i in order {
            let p = row[i];
            if p == 0.0 {
                continue;
            }
            let child = prefix.child(self.alphabet.outcome(i));
            if child.is_terminal() {
                if out.len() == limit {
                    return Err(Error::NotEnumerable { limit });
                }
                out.push(Trajectory { string: child, prob: prob * p, log_prob: log_prob + p.ln() });
            } else {
                self.enumerate_from(&child, prob * p, log_prob + p.ln(), limit, out)?;
            }
        }
        Ok(())
    }

    /// Non-terminal prefixes with a defined branch, in key order.
    pub fn prefixes(&self) -> impl Iterator<Item = &TokenString> {
        self.branches.keys()
    }
}

/// Branch rows compare equal within `tol`.
pub fn branches_close(a: &TrajectoryModel, b: &TrajectoryModel, tol: f64) -> bool {
    a.alphabet() == b.alphabet()
        && a.branches.len() == b.branches.len()
        && a.branches.iter().zip(&b.branches).all(|((ka, ra), (kb, rb))| {
            ka == kb && ra.iter().zip(rb).all(|(x, y)| (x - y).abs() <= tol)
        })
}

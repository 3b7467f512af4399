//! Ancestral sampling with counter-based seed streams.
//!
//! Draw `i` of a batch always uses stream `i` of the ChaCha generator keyed
//! by the batch seed, so a batch is reproducible regardless of how many
//! workers produce it.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::string::{Alphabet, TokenString};
use super::tree::TrajectoryModel;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Anything that can report the next-outcome distribution after a prefix.
///
/// Explicit models implement this by table lookup; a callback source wraps
/// an arbitrary function for sampling-only workflows where exact
/// enumeration is unavailable.
pub trait NextTokenSource: Sync {
    fn alphabet(&self) -> &Alphabet;

    fn max_len(&self) -> usize;

    /// Dense row over tokens followed by the end marker.
    fn next_distribution(&self, prefix: &TokenString) -> Result<Cow<'_, [f64]>>;
}

impl NextTokenSource for TrajectoryModel {
    fn alphabet(&self) -> &Alphabet {
        TrajectoryModel::alphabet(self)
    }

    fn max_len(&self) -> usize {
        TrajectoryModel::max_len(self)
    }

    fn next_distribution(&self, prefix: &TokenString) -> Result<Cow<'_, [f64]>> {
        self.branch(prefix)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::MissingBranch(self.render(prefix)))
    }
}

/// Next-token source backed by a closure.
pub struct CallbackSource<F> {
    alphabet: Alphabet,
    max_len: usize,
    next: F,
}

impl<F> CallbackSource<F>
where
    F: Fn(&TokenString) -> Vec<f64> + Sync,
{
    pub fn new(alphabet: Alphabet, max_len: usize, next: F) -> Self {
        Self { alphabet, max_len, next }
    }
}

impl<F> NextTokenSource for CallbackSource<F>
where
    F: Fn(&TokenString) -> Vec<f64> + Sync,
{
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn next_distribution(&self, prefix: &TokenString) -> Result<Cow<'_, [f64]>> {
        let row = (self.next)(prefix);
        if row.len() != self.alphabet.outcomes() {
            return Err(Error::DimensionMismatch { expected: self.alphabet.outcomes(), found: row.len() });
        }
        Ok(Cow::Owned(row))
    }
}

/// Generator for stream `stream` of the batch keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF draw from unnormalized non-negative weights. Returns `None`
/// when the weights carry no mass.
pub fn draw_index(weights: &[f64], u: f64) -> Option<usize> {
    let total = crate::numeric::sum(weights.iter().copied());
    if !(total > 0.0) {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

pub fn sample_with<S: NextTokenSource + ?Sized, R: Rng>(
    source: &S,
    prompt: &TokenString,
    rng: &mut R,
) -> Result<TokenString> {
    let alphabet = source.alphabet();
    if prompt.is_terminal() {
        return Err(Error::TerminalPrompt(alphabet.render(prompt)));
    }
    let mut current = prompt.clone();
    while !current.is_terminal() {
        if current.len() >= source.max_len() {
            return Err(Error::NonTermination { prefix: alphabet.render(&current), max_len: source.max_len() });
        }
        let row = source.next_distribution(&current)?;
        let i = draw_index(&row, rng.gen::<f64>())
            .ok_or_else(|| Error::Normalization { prefix: alphabet.render(&current), sum: 0.0 })?;
        current = current.child(alphabet.outcome(i));
    }
    Ok(current)
}

/// One trajectory drawn by ancestral sampling; deterministic in
/// `(source, prompt, seed)`.
pub fn sample_trajectory<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    seed: u64,
) -> Result<TokenString> {
    sample_with(source, prompt, &mut stream_rng(seed, 0))
}

/// `count` independent draws; draw `i` uses stream `i`.
pub fn sample_trajectories<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    seed: u64,
    count: usize,
    exec: Exec,
) -> Result<Vec<TokenString>> {
    exec.try_map_range(count, |i| sample_with(source, prompt, &mut stream_rng(seed, i as u64)))
}

//! Reference expectations by direct traversal of the branch table, sharing
//! no code with enumeration or the core estimators.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{TokenString, TrajectoryModel, DEFAULT_ENUMERATION_LIMIT};

/// Exact rational value of a float's shortest round-trip decimal, so `0.1`
/// maps to `1/10` rather than its binary expansion.
pub fn to_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot convert {x} to a rational")));
    }
    let text = x.to_string();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse decimal '{text}'")))?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(numer, denom);
    Ok(if negative { -r } else { r })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Every positive-probability trajectory under `prompt` with its exact
/// rational probability, collected by an explicit-stack walk.
pub fn exact_distribution(model: &TrajectoryModel, prompt: &TokenString) -> Result<Vec<(TokenString, BigRational)>> {
    if prompt.is_terminal() {
        return Ok(vec![(prompt.clone(), BigRational::one())]);
    }
    let alphabet = model.alphabet();
    let mut out = Vec::new();
    let mut stack = vec![(prompt.clone(), BigRational::one())];
    while let Some((prefix, mass)) = stack.pop() {
        let row = model.branch(&prefix).ok_or_else(|| Error::MissingBranch(model.render(&prefix)))?;
        for (i, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let child = prefix.child(alphabet.outcome(i));
            let child_mass = &mass * to_rational(p)?;
            if child.is_terminal() {
                out.push((child, child_mass));
                if out.len() > DEFAULT_ENUMERATION_LIMIT {
                    return Err(Error::NotEnumerable { limit: DEFAULT_ENUMERATION_LIMIT });
                }
            } else {
                stack.push((child, child_mass));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// `Σ_y p(y | prompt)·f(y)` in exact rational arithmetic, with `f`'s values
/// read as decimals.
pub fn brute_force_expectation_exact<F>(model: &TrajectoryModel, prompt: &TokenString, f: F) -> Result<BigRational>
where
    F: Fn(&TokenString) -> Result<f64>,
{
    let mut total = BigRational::zero();
    for (y, p) in exact_distribution(model, prompt)? {
        total += p * to_rational(f(&y)?)?;
    }
    Ok(total)
}

/// Float version of [`brute_force_expectation_exact`] by plain recursion.
pub fn brute_force_expectation<F>(model: &TrajectoryModel, prompt: &TokenString, f: F) -> Result<f64>
where
    F: Fn(&TokenString) -> Result<f64>,
{
    fn walk<F: Fn(&TokenString) -> Result<f64>>(
        model: &TrajectoryModel,
        prefix: &TokenString,
        f: &F,
        visited: &mut usize,
    ) -> Result<f64> {
        if prefix.is_terminal() {
            *visited += 1;
            if *visited > DEFAULT_ENUMERATION_LIMIT {
                return Err(Error::NotEnumerable { limit: DEFAULT_ENUMERATION_LIMIT });
            }
            return f(prefix);
        }
        let row = model.branch(prefix).ok_or_else(|| Error::MissingBranch(model.render(prefix)))?;
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p * walk(model, &prefix.child(model.alphabet().outcome(i)), f, visited)?;
            }
        }
        Ok(acc)
    }
    walk(model, prompt, &f, &mut 0)
}

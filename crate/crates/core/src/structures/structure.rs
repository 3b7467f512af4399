use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::callback::{clamp_compliance, ComplianceCallback, SubprocessCallback, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};
use crate::model::{Alphabet, TokenId, TokenString};

/// Structure record as written in system-spec documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: StructureParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StructureParams {
    TokenIndicator {
        token: String,
    },
    NgramIndicator {
        tokens: Vec<String>,
    },
    /// Pattern over the space-joined tokens, markers excluded.
    RegexMatch {
        pattern: String,
    },
    /// Keys are strings in document syntax (`"a <eos>"`).
    Tabulated {
        table: BTreeMap<String, f64>,
        #[serde(default)]
        default: Option<f64>,
    },
    MembershipSet {
        strings: Vec<String>,
    },
    WeightedCombination {
        components: Vec<WeightedComponent>,
    },
    ExternalCallback {
        command: Vec<String>,
        #[serde(default)]
        timeout_ms: Option<u64>,
        #[serde(default)]
        reentrant: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedComponent {
    pub weight: f64,
    pub structure: StructureSpec,
}

#[derive(Clone)]
pub(crate) struct CallbackHandle {
    callback: Arc<dyn ComplianceCallback>,
    lock: Arc<Mutex<()>>,
    alphabet: Arc<Alphabet>,
}

#[derive(Clone)]
pub enum StructureKind {
    TokenIndicator(TokenId),
    NgramIndicator(Vec<TokenId>),
    RegexMatch(Regex, Arc<Alphabet>),
    Tabulated { table: HashMap<TokenString, f64>, default: Option<f64> },
    MembershipSet(HashSet<TokenString>),
    WeightedCombination(Vec<(f64, Structure)>),
    #[allow(private_interfaces)]
    ExternalCallback(CallbackHandle),
}

/// A compliance function from strings (prefixes or trajectories) to `[0, 1]`.
#[derive(Clone)]
pub struct Structure {
    name: String,
    kind: StructureKind,
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            StructureKind::TokenIndicator(_) => "token_indicator",
            StructureKind::NgramIndicator(_) => "ngram_indicator",
            StructureKind::RegexMatch(..) => "regex_match",
            StructureKind::Tabulated { .. } => "tabulated",
            StructureKind::MembershipSet(_) => "membership_set",
            StructureKind::WeightedCombination(_) => "weighted_combination",
            StructureKind::ExternalCallback(_) => "external_callback",
        };
        f.debug_struct("Structure").field("name", &self.name).field("kind", &kind).finish()
    }
}

fn unit(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::InvalidStructure { name: name.to_owned(), reason: format!("value {v} outside [0, 1]") })
    }
}

impl Structure {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &StructureKind {
        &self.kind
    }

    pub fn token_indicator(name: impl Into<String>, token: TokenId) -> Self {
        Self { name: name.into(), kind: StructureKind::TokenIndicator(token) }
    }

    pub fn ngram_indicator(name: impl Into<String>, gram: Vec<TokenId>) -> Self {
        Self { name: name.into(), kind: StructureKind::NgramIndicator(gram) }
    }

    pub fn membership(name: impl Into<String>, members: impl IntoIterator<Item = TokenString>) -> Self {
        Self { name: name.into(), kind: StructureKind::MembershipSet(members.into_iter().collect()) }
    }

    pub fn tabulated(
        name: impl Into<String>,
        table: impl IntoIterator<Item = (TokenString, f64)>,
        default: Option<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let table: HashMap<_, _> = table.into_iter().collect();
        for &v in table.values().chain(default.iter()) {
            unit(&name, v)?;
        }
        Ok(Self { name, kind: StructureKind::Tabulated { table, default } })
    }

    pub fn regex(name: impl Into<String>, pattern: &str, alphabet: Arc<Alphabet>) -> Result<Self> {
        Ok(Self { name: name.into(), kind: StructureKind::RegexMatch(Regex::new(pattern)?, alphabet) })
    }

    /// Convex combination; weights must be non-negative and sum to 1.
    pub fn weighted(name: impl Into<String>, components: Vec<(f64, Structure)>) -> Result<Self> {
        let name = name.into();
        if components.is_empty() {
            return Err(Error::InvalidStructure { name, reason: "no components".into() });
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidStructure { name, reason: "weights must be non-negative".into() });
        }
        let total = crate::numeric::sum(components.iter().map(|(w, _)| *w));
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidStructure { name, reason: format!("weights sum to {total}, expected 1") });
        }
        Ok(Self { name, kind: StructureKind::WeightedCombination(components) })
    }

    pub fn callback(name: impl Into<String>, callback: Arc<dyn ComplianceCallback>, alphabet: Arc<Alphabet>) -> Self {
        Self {
            name: name.into(),
            kind: StructureKind::ExternalCallback(CallbackHandle {
                callback,
                lock: Arc::new(Mutex::new(())),
                alphabet,
            }),
        }
    }

    pub fn from_spec(spec: &StructureSpec, alphabet: &Arc<Alphabet>) -> Result<Self> {
        let name = spec.name.clone();
        let bad = |reason: String| Error::InvalidStructure { name: spec.name.clone(), reason };
        let parse = |s: &str| alphabet.parse(s).map_err(|e| bad(e.to_string()));
        Ok(match &spec.params {
            StructureParams::TokenIndicator { token } => {
                let id = alphabet.id(token).ok_or_else(|| bad(format!("unknown token '{token}'")))?;
                Self::token_indicator(name, id)
            }
            StructureParams::NgramIndicator { tokens } => {
                if tokens.is_empty() {
                    return Err(bad("empty n-gram".into()));
                }
                Self::ngram_indicator(name, alphabet.resolve_tokens(tokens).map_err(|e| bad(e.to_string()))?)
            }
            StructureParams::RegexMatch { pattern } => Self::regex(name, pattern, alphabet.clone())?,
            StructureParams::Tabulated { table, default } => {
                let entries = table.iter().map(|(k, &v)| Ok((parse(k)?, v))).collect::<Result<Vec<_>>>()?;
                Self::tabulated(name, entries, *default)?
            }
            StructureParams::MembershipSet { strings } => {
                Self::membership(name, strings.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?)
            }
            StructureParams::WeightedCombination { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, Structure::from_spec(&c.structure, alphabet)?)))
                    .collect::<Result<Vec<_>>>()?;
                Self::weighted(name, parts)?
            }
            StructureParams::ExternalCallback { command, timeout_ms, reentrant } => {
                let timeout = timeout_ms.map_or(DEFAULT_TIMEOUT, Duration::from_millis);
                let mut cb = SubprocessCallback::new(command, timeout).map_err(bad)?;
                cb.reentrant = *reentrant;
                Self::callback(name, Arc::new(cb), alphabet.clone())
            }
        })
    }

    /// Compliance of `x`. Indicator kinds match against `x` as given, so a
    /// prefix is scored on the tokens it already holds.
    pub fn evaluate(&self, x: &TokenString) -> Result<f64> {
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        match &self.kind {
            StructureKind::TokenIndicator(t) => Ok(indicator(x.contains_token(*t))),
            StructureKind::NgramIndicator(g) => Ok(indicator(x.contains_ngram(g))),
            StructureKind::RegexMatch(re, alphabet) => Ok(indicator(re.is_match(&alphabet.detokenize(x)))),
            StructureKind::MembershipSet(set) => Ok(indicator(set.contains(x))),
            StructureKind::Tabulated { table, default } => {
                table.get(x).copied().or(*default).ok_or_else(|| Error::TabulatedMiss {
                    structure: self.name.clone(),
                    string: format!("{x:?}"),
                })
            }
            StructureKind::WeightedCombination(parts) => {
                let mut acc = crate::numeric::CompensatedSum::new();
                for (w, s) in parts {
                    acc.add(w * s.evaluate(x)?);
                }
                Ok(acc.value().clamp(0.0, 1.0))
            }
            StructureKind::ExternalCallback(handle) => {
                let text = handle.alphabet.detokenize(x);
                let raw = if handle.callback.reentrant() {
                    handle.callback.call(&text)
                } else {
                    let _guard = handle.lock.lock().unwrap_or_else(|p| p.into_inner());
                    handle.callback.call(&text)
                };
                let raw = raw.map_err(|reason| Error::Callback { structure: self.name.clone(), reason })?;
                clamp_compliance(raw).map_err(|value| Error::ComplianceRange { structure: self.name.clone(), value })
            }
        }
    }
}

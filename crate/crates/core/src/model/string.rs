use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const DEFAULT_BOS: &str = "<bos>";
pub const DEFAULT_EOS: &str = "<eos>";

/// One outcome of a next-token distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Next {
    Token(TokenId),
    End,
}

/// Finite token alphabet plus the start and end markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr", into = "AlphabetRepr")]
pub struct Alphabet {
    tokens: Vec<String>,
    bos: String,
    eos: String,
    index: HashMap<String, TokenId>,
}

#[derive(Serialize, Deserialize)]
struct AlphabetRepr {
    tokens: Vec<String>,
    #[serde(default = "default_bos")]
    bos: String,
    #[serde(default = "default_eos")]
    eos: String,
}

fn default_bos() -> String {
    DEFAULT_BOS.to_owned()
}

fn default_eos() -> String {
    DEFAULT_EOS.to_owned()
}

impl TryFrom<AlphabetRepr> for Alphabet {
    type Error = Error;

    fn try_from(r: AlphabetRepr) -> Result<Self> {
        Alphabet::with_markers(r.tokens, r.bos, r.eos)
    }
}

impl From<Alphabet> for AlphabetRepr {
    fn from(a: Alphabet) -> Self {
        AlphabetRepr { tokens: a.tokens, bos: a.bos, eos: a.eos }
    }
}

impl Alphabet {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_markers(
            tokens.into_iter().map(Into::into).collect(),
            DEFAULT_BOS.to_owned(),
            DEFAULT_EOS.to_owned(),
        )
    }

    pub fn with_markers(tokens: Vec<String>, bos: String, eos: String) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::InvalidAlphabet("token list is empty".into()));
        }
        if bos == eos {
            return Err(Error::InvalidAlphabet("start and end markers coincide".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!("token '{t}' is empty or contains whitespace")));
            }
            if *t == bos || *t == eos {
                return Err(Error::InvalidAlphabet(format!("token '{t}' collides with a marker")));
            }
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate token '{t}'")));
            }
        }
        Ok(Self { tokens, bos, eos, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn bos(&self) -> &str {
        &self.bos
    }

    pub fn eos(&self) -> &str {
        &self.eos
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Resolves a token name or the end marker.
    pub fn next_symbol(&self, symbol: &str) -> Option<Next> {
        if symbol == self.eos {
            Some(Next::End)
        } else {
            self.id(symbol).map(Next::Token)
        }
    }

    pub fn symbol_name(&self, next: Next) -> &str {
        match next {
            Next::Token(t) => self.token(t),
            Next::End => &self.eos,
        }
    }

    /// Number of outcomes of a branch: every token plus the end marker.
    pub fn outcomes(&self) -> usize {
        self.tokens.len() + 1
    }

    /// Index of an outcome inside a dense branch row. The end marker is last.
    pub fn outcome_index(&self, next: Next) -> usize {
        match next {
            Next::Token(t) => t as usize,
            Next::End => self.tokens.len(),
        }
    }

    pub fn outcome(&self, index: usize) -> Next {
        if index == self.tokens.len() {
            Next::End
        } else {
            Next::Token(index as TokenId)
        }
    }

    pub fn resolve_tokens<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<TokenId>> {
        names
            .iter()
            .map(|n| {
                self.id(n.as_ref())
                    .ok_or_else(|| Error::InvalidString(format!("unknown token '{}'", n.as_ref())))
            })
            .collect()
    }

    /// Parses whitespace-separated symbols. A leading start marker is optional;
    /// a trailing end marker makes the string terminal.
    pub fn parse(&self, text: &str) -> Result<TokenString> {
        let mut symbols: Vec<&str> = text.split_whitespace().collect();
        if symbols.first() == Some(&self.bos.as_str()) {
            symbols.remove(0);
        }
        let terminal = symbols.last() == Some(&self.eos.as_str());
        if terminal {
            symbols.pop();
        }
        let mut tokens = Vec::with_capacity(symbols.len());
        for s in symbols {
            if s == self.bos || s == self.eos {
                return Err(Error::InvalidString(format!("marker '{s}' out of place in '{text}'")));
            }
            tokens.push(
                self.id(s)
                    .ok_or_else(|| Error::InvalidString(format!("unknown token '{s}' in '{text}'")))?,
            );
        }
        Ok(TokenString { tokens, terminal })
    }

    /// Renders with both markers, e.g. `<bos> a <eos>`.
    pub fn render(&self, s: &TokenString) -> String {
        let mut out = self.bos.clone();
        for &t in &s.tokens {
            out.push(' ');
            out.push_str(self.token(t));
        }
        if s.terminal {
            out.push(' ');
            out.push_str(&self.eos);
        }
        out
    }

    /// The key form used by model documents: tokens joined by spaces, root is
    /// the empty string.
    pub fn prefix_key(&self, s: &TokenString) -> String {
        self.detokenize(s)
    }

    /// Space-joined tokens without markers, the text seen by regex and
    /// callback structures.
    pub fn detokenize(&self, s: &TokenString) -> String {
        s.tokens.iter().map(|&t| self.token(t)).collect::<Vec<_>>().join(" ")
    }
}

/// A string beginning with the (implicit) start marker, optionally terminated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenString {
    tokens: Vec<TokenId>,
    terminal: bool,
}

impl TokenString {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(tokens: Vec<TokenId>, terminal: bool) -> Self {
        Self { tokens, terminal }
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_root(&self) -> bool {
        self.tokens.is_empty() && !self.terminal
    }

    /// Number of symbols after the start marker, end marker included.
    pub fn len(&self) -> usize {
        self.tokens.len() + usize::from(self.terminal)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one outcome. Panics if the string is already terminal.
    pub fn child(&self, next: Next) -> Self {
        assert!(!self.terminal, "cannot extend a terminal string");
        let mut out = self.clone();
        match next {
            Next::Token(t) => out.tokens.push(t),
            Next::End => out.terminal = true,
        }
        out
    }

    /// The symbol at step `k` (1-based after the start marker).
    pub fn symbol_at(&self, k: usize) -> Option<Next> {
        if k == 0 {
            return None;
        }
        if k <= self.tokens.len() {
            Some(Next::Token(self.tokens[k - 1]))
        } else if k == self.tokens.len() + 1 && self.terminal {
            Some(Next::End)
        } else {
            None
        }
    }

    /// Prefix made of the first `k` symbols after the start marker.
    pub fn prefix(&self, k: usize) -> Self {
        if k <= self.tokens.len() {
            Self { tokens: self.tokens[..k].to_vec(), terminal: false }
        } else {
            self.clone()
        }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.terminal {
            Some(Self { tokens: self.tokens.clone(), terminal: false })
        } else if self.tokens.is_empty() {
            None
        } else {
            Some(Self { tokens: self.tokens[..self.tokens.len() - 1].to_vec(), terminal: false })
        }
    }

    /// True if `self` equals `other` or `other` continues `self`.
    pub fn is_prefix_of(&self, other: &TokenString) -> bool {
        if self.terminal {
            return self == other;
        }
        other.tokens.len() >= self.tokens.len() && other.tokens[..self.tokens.len()] == self.tokens[..]
    }

    pub fn contains_token(&self, t: TokenId) -> bool {
        self.tokens.contains(&t)
    }

    pub fn contains_ngram(&self, gram: &[TokenId]) -> bool {
        if gram.is_empty() {
            return true;
        }
        self.tokens.windows(gram.len()).any(|w| w == gram)
    }

    /// Drops the first `n` tokens; used when a prompt is folded into the root.
    pub(crate) fn strip_prefix(&self, n: usize) -> Self {
        Self { tokens: self.tokens[n..].to_vec(), terminal: self.terminal }
    }
}

/// Display helper binding a string to its alphabet.
pub struct Rendered<'a>(pub &'a Alphabet, pub &'a TokenString);

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.render(self.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn alphabet_rejects_bad_inputs() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["a", "<eos>"]).is_err());
        assert!(Alphabet::with_markers(vec!["a".into()], "x".into(), "x".into()).is_err());
    }

    #[test]
    fn parse_and_render() {
        let a = ab();
        let s = a.parse("a b <eos>").unwrap();
        assert!(s.is_terminal());
        assert_eq!(s.len(), 3);
        assert_eq!(a.render(&s), "<bos> a b <eos>");
        assert_eq!(a.parse("<bos> a b <eos>").unwrap(), s);
        assert!(a.parse("").unwrap().is_root());
        assert!(a.parse("a <eos> b").is_err());
        assert!(a.parse("a <bos>").is_err());
        assert!(a.parse("c").is_err());
    }

    #[test]
    fn prefix_relations() {
        let a = ab();
        let p = a.parse("a").unwrap();
        let y = a.parse("a b <eos>").unwrap();
        assert!(p.is_prefix_of(&y));
        assert!(TokenString::root().is_prefix_of(&y));
        assert!(!y.is_prefix_of(&p));
        assert!(y.is_prefix_of(&y));
        assert_eq!(y.prefix(1), p);
        assert_eq!(y.prefix(3), y);
        assert_eq!(y.parent().unwrap(), a.parse("a b").unwrap());
        assert_eq!(y.symbol_at(3), Some(Next::End));
        assert!(y.contains_ngram(&[0, 1]));
        assert!(!y.contains_ngram(&[1, 0]));
    }
}

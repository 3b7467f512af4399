use std::collections::HashSet;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::aggregate::{Aggregator, DiffMetric};
use super::structure::{Structure, StructureSpec};
use crate::error::{Error, Result};
use crate::model::{Alphabet, TokenString};

/// Per-structure compliances of one string, aligned with its system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplianceVector(pub Vec<f64>);

impl Deref for ComplianceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ComplianceVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Ordered, non-empty list of uniquely named structures.
#[derive(Clone, Debug)]
pub struct System {
    structures: Vec<Structure>,
}

impl System {
    pub fn new(structures: Vec<Structure>) -> Result<Self> {
        if structures.is_empty() {
            return Err(Error::InvalidSystem("a system needs at least one structure".into()));
        }
        let mut seen = HashSet::new();
        for s in &structures {
            if !seen.insert(s.name()) {
                return Err(Error::InvalidSystem(format!("duplicate structure name '{}'", s.name())));
            }
        }
        Ok(Self { structures })
    }

    pub fn from_specs(specs: &[StructureSpec], alphabet: &Arc<Alphabet>) -> Result<Self> {
        Self::new(specs.iter().map(|s| Structure::from_spec(s, alphabet)).collect::<Result<_>>()?)
    }

    pub fn from_json_str(text: &str, alphabet: &Arc<Alphabet>) -> Result<Self> {
        let specs: Vec<StructureSpec> =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_specs(&specs, alphabet)
    }

    pub fn load(path: impl AsRef<Path>, alphabet: &Arc<Alphabet>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?, alphabet)
    }

    pub fn singleton(structure: Structure) -> Self {
        Self { structures: vec![structure] }
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn names(&self) -> Vec<String> {
        self.structures.iter().map(|s| s.name().to_owned()).collect()
    }

    /// Sub-system holding structure `i` alone.
    pub fn component(&self, i: usize) -> System {
        Self::singleton(self.structures[i].clone())
    }

    pub fn evaluate(&self, x: &TokenString) -> Result<ComplianceVector> {
        self.structures.iter().map(|s| s.evaluate(x)).collect::<Result<Vec<_>>>().map(ComplianceVector)
    }
}

pub fn evaluate_structure(s: &Structure, x: &TokenString) -> Result<f64> {
    s.evaluate(x)
}

pub fn evaluate_system(system: &System, x: &TokenString) -> Result<ComplianceVector> {
    system.evaluate(x)
}

pub fn system_score(v: &[f64], agg: Aggregator) -> Result<f64> {
    agg.apply(v)
}

pub fn difference_score(a: &[f64], b: &[f64], m: DiffMetric) -> Result<f64> {
    m.distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use proptest::prelude::*;

    #[test]
    fn evaluate_system_examples() {
        let m = fixtures::m2();
        let s2 = fixtures::s2(&m);
        assert_eq!(s2.evaluate(&m.parse("a <eos>").unwrap()).unwrap().0, vec![1.0, 0.0]);
        assert_eq!(s2.evaluate(&TokenString::root()).unwrap().0, vec![0.0, 0.0]);
        let s1 = fixtures::s1(&m);
        let y = m.parse("a <eos>").unwrap();
        assert_eq!(s1.evaluate(&y).unwrap().0, vec![s1.structures()[0].evaluate(&y).unwrap()]);
        assert_eq!(s2.names(), vec!["has_a", "has_b"]);
    }

    #[test]
    fn duplicate_names_and_empty_systems_are_rejected() {
        let a = Structure::token_indicator("x", 0);
        assert!(System::new(vec![a.clone(), a]).is_err());
        assert!(System::new(vec![]).is_err());
        let m = fixtures::m2();
        assert!(matches!(System::from_json_str("{", m.alphabet_arc()), Err(Error::Malformed(_))));
    }

    fn arb_string() -> impl Strategy<Value = TokenString> {
        (prop::collection::vec(0u32..3, 0..6), any::<bool>()).prop_map(|(t, term)| TokenString::new(t, term))
    }

    proptest! {
        #[test]
        fn every_kind_stays_in_unit_interval(x in arb_string(), v in 0.0..=1.0f64, w in 0.0..=1.0f64) {
            let alphabet = Arc::new(Alphabet::new(["a", "b", "c"]).unwrap());
            let structures = vec![
                Structure::token_indicator("t", 1),
                Structure::ngram_indicator("g", vec![0, 2]),
                Structure::regex("r", "a c", alphabet.clone()).unwrap(),
                Structure::tabulated("tab", [(x.clone(), v)], Some(w)).unwrap(),
                Structure::membership("m", [x.clone()]),
                Structure::weighted("w", vec![(w, Structure::token_indicator("u", 0)), (1.0 - w, Structure::tabulated("k", [], Some(v)).unwrap())]).unwrap(),
            ];
            let system = System::new(structures).unwrap();
            let a = system.evaluate(&x).unwrap();
            let b = system.evaluate(&x).unwrap();
            prop_assert_eq!(&a, &b);
            for c in a.iter() {
                prop_assert!((0.0..=1.0).contains(c));
            }
        }
    }
}

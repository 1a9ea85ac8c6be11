//! Deterministic finite automata for trace properties.
//!
//! The transition map may be partial: a missing transition means the
//! automaton rejects every extension of the word read so far, which is how
//! safety violations are encoded. Determinism is enforced at construction
//! because the trace algebra's event operator distributes over intersection
//! only for deterministic automata.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DfaError {
    #[error("automaton has no states")]
    NoStates,
    #[error("state `{0}` is not declared")]
    UnknownState(String),
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),
    #[error("nondeterministic: state `{state}` has two transitions on `{symbol}`")]
    Nondeterministic { state: String, symbol: String },
    #[error("invalid automaton JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTransition {
    from: String,
    symbol: String,
    to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDfa {
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<RawTransition>,
    initial: String,
    finals: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dfa {
    states: BTreeSet<String>,
    alphabet: BTreeSet<String>,
    transitions: BTreeMap<(String, String), String>,
    initial: String,
    finals: BTreeSet<String>,
}

impl Dfa {
    /// Build and validate. Transitions are given as a relation; a duplicate
    /// (state, symbol) pair is rejected as nondeterminism.
    pub fn from_parts(
        states: impl IntoIterator<Item = String>,
        alphabet: impl IntoIterator<Item = String>,
        transitions: impl IntoIterator<Item = (String, String, String)>,
        initial: String,
        finals: impl IntoIterator<Item = String>,
    ) -> Result<Dfa, DfaError> {
        let states: BTreeSet<String> = states.into_iter().collect();
        let alphabet: BTreeSet<String> = alphabet.into_iter().collect();
        if states.is_empty() {
            return Err(DfaError::NoStates);
        }
        if !states.contains(&initial) {
            return Err(DfaError::UnknownState(initial));
        }
        let finals: BTreeSet<String> = finals.into_iter().collect();
        for q in &finals {
            if !states.contains(q) {
                return Err(DfaError::UnknownState(q.clone()));
            }
        }
        let mut map = BTreeMap::new();
        for (from, symbol, to) in transitions {
            if !states.contains(&from) {
                return Err(DfaError::UnknownState(from));
            }
            if !states.contains(&to) {
                return Err(DfaError::UnknownState(to));
            }
            if !alphabet.contains(&symbol) {
                return Err(DfaError::UnknownSymbol(symbol));
            }
            if map.insert((from.clone(), symbol.clone()), to).is_some() {
                return Err(DfaError::Nondeterministic { state: from, symbol });
            }
        }
        Ok(Dfa { states, alphabet, transitions: map, initial, finals })
    }

    pub fn from_json(text: &str) -> Result<Dfa, DfaError> {
        let raw: RawDfa = serde_json::from_str(text).map_err(|e| DfaError::Json(e.to_string()))?;
        Dfa::from_parts(
            raw.states,
            raw.alphabet,
            raw.transitions.into_iter().map(|t| (t.from, t.symbol, t.to)),
            raw.initial,
            raw.finals,
        )
    }

    pub fn to_json(&self) -> String {
        let raw = RawDfa {
            states: self.states.iter().cloned().collect(),
            alphabet: self.alphabet.iter().cloned().collect(),
            transitions: self
                .transitions
                .iter()
                .map(|((from, symbol), to)| RawTransition {
                    from: from.clone(),
                    symbol: symbol.clone(),
                    to: to.clone(),
                })
                .collect(),
            initial: self.initial.clone(),
            finals: self.finals.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&raw).expect("automaton serializes")
    }

    /// Non-fatal well-formedness findings. The trace reduction assumes all
    /// states are final; anything else narrows acceptance beyond it.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.finals != self.states {
            out.push(
                "not every state is final; the trace reduction assumes all states accept"
                    .to_string(),
            );
        }
        out
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn finals(&self) -> &BTreeSet<String> {
        &self.finals
    }

    pub fn step(&self, state: &str, symbol: &str) -> Option<&str> {
        self.transitions.get(&(state.to_string(), symbol.to_string())).map(|s| s.as_str())
    }

    /// The state reached from `state` on `word`, if every step is defined.
    pub fn run<'a>(
        &self,
        state: &str,
        word: impl IntoIterator<Item = &'a str>,
    ) -> Option<String> {
        let mut cur = state.to_string();
        for sym in word {
            cur = self.step(&cur, sym)?.to_string();
        }
        Some(cur)
    }

    /// Predecessors of `set` under one symbol.
    pub fn pre(&self, symbol: &str, set: &BTreeSet<String>) -> Result<BTreeSet<String>, DfaError> {
        if !self.alphabet.contains(symbol) {
            return Err(DfaError::UnknownSymbol(symbol.to_string()));
        }
        Ok(self
            .states
            .iter()
            .filter(|q| self.step(q, symbol).is_some_and(|q2| set.contains(q2)))
            .cloned()
            .collect())
    }

    /// Predecessors of `set` under a whole word: states from which reading
    /// the word is defined and lands in `set`.
    pub fn pre_word<'a, I>(&self, word: I, set: &BTreeSet<String>) -> Result<BTreeSet<String>, DfaError>
    where
        I: IntoIterator<Item = &'a str>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut cur = set.clone();
        for sym in word.into_iter().rev() {
            cur = self.pre(sym, &cur)?;
        }
        Ok(cur)
    }
}

/// The trace algebra's event operator: predecessor set under one symbol.
pub fn trace_event(
    dfa: &Dfa,
    symbol: &str,
    set: &BTreeSet<String>,
) -> Result<BTreeSet<String>, DfaError> {
    dfa.pre(symbol, set)
}

/// The trace algebra's conjunction: plain intersection.
pub fn trace_meet(a: &BTreeSet<String>, b: &BTreeSet<String>) -> BTreeSet<String> {
    a.intersection(b).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn two_state() -> Dfa {
        Dfa::from_parts(
            ["q0".into(), "q1".into()],
            ["a".into(), "b".into()],
            [
                ("q0".into(), "a".into(), "q1".into()),
                ("q1".into(), "b".into(), "q0".into()),
            ],
            "q0".into(),
            ["q0".into(), "q1".into()],
        )
        .unwrap()
    }

    #[test]
    fn preimage_selects_predecessors() {
        let dfa = two_state();
        assert_eq!(dfa.pre("a", &set(&["q1"])).unwrap(), set(&["q0"]));
        assert_eq!(dfa.pre("a", &set(&[])).unwrap(), set(&[]));
        assert_eq!(dfa.pre("b", &set(&["q0"])).unwrap(), set(&["q1"]));
    }

    #[test]
    fn word_preimage_composes_stepwise() {
        let dfa = two_state();
        // Reading "ab" from q0: q0 -a-> q1 -b-> q0.
        assert_eq!(dfa.pre_word(["a", "b"], &set(&["q0"])).unwrap(), set(&["q0"]));
        // "aa" is undefined everywhere: q1 has no a-transition.
        assert_eq!(dfa.pre_word(["a", "a"], &dfa.states().clone()).unwrap(), set(&[]));
    }

    #[test]
    fn duplicate_transition_is_rejected_as_nondeterminism() {
        let err = Dfa::from_parts(
            ["q0".into(), "q1".into()],
            ["a".into()],
            [
                ("q0".into(), "a".into(), "q0".into()),
                ("q0".into(), "a".into(), "q1".into()),
            ],
            "q0".into(),
            ["q0".into()],
        )
        .unwrap_err();
        assert!(matches!(err, DfaError::Nondeterministic { state, symbol } if state == "q0" && symbol == "a"));
    }

    #[test]
    fn unknown_symbol_is_an_error_not_an_empty_preimage() {
        let dfa = two_state();
        assert!(matches!(dfa.pre("c", &set(&["q0"])), Err(DfaError::UnknownSymbol(s)) if s == "c"));
    }

    #[test]
    fn json_round_trips() {
        let dfa = two_state();
        let back = Dfa::from_json(&dfa.to_json()).unwrap();
        assert_eq!(back.states(), dfa.states());
        assert_eq!(back.initial(), dfa.initial());
        assert_eq!(back.step("q0", "a"), Some("q1"));
    }

    #[test]
    fn partial_finals_warn() {
        let dfa = Dfa::from_parts(
            ["q0".into(), "q1".into()],
            ["a".into()],
            [("q0".into(), "a".into(), "q1".into())],
            "q0".into(),
            ["q0".into()],
        )
        .unwrap();
        assert_eq!(dfa.warnings().len(), 1);
        assert!(two_state().warnings().is_empty());
    }
}

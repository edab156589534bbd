//! Stateful encoder / stateless decoder pairs built from domatic partitions.
//!
//! The encoder state is the last word put on the bus. For message `m` it
//! moves to the lexicographically smallest word of class `m` inside the
//! closed neighborhood of the current word, so every transition is
//! transition free and the decoder only has to look up the class of the word
//! it sees.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subdp::{check_domatic_partition, DomaticPartition, PartitionCheck};
use crate::tfgraph::{build_graph, TransitionFreeGraph};
use crate::word::{is_transition_free, BitWord, ForbiddenPair};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codec {
    n: usize,
    fp: ForbiddenPair,
    message_count: usize,
    states: Vec<BitWord>,
    decode: BTreeMap<BitWord, u32>,
    // encode[(m - 1) * states.len() + state_index]
    encode: Vec<BitWord>,
}

/// Builds the codec of `part`, a domatic partition of an induced subgraph
/// of `G(fp, n)`.
pub fn synthesize(part: &DomaticPartition, fp: &ForbiddenPair, n: usize) -> Result<Codec> {
    let tfg = build_graph(fp, n)?;
    synthesize_on(&tfg, part)
}

pub fn synthesize_on(tfg: &TransitionFreeGraph, part: &DomaticPartition) -> Result<Codec> {
    let g = tfg.graph();
    if let PartitionCheck::Undominated { vertex, class } = check_domatic_partition(g, part)? {
        return Err(Error::invalid(format!(
            "not a domatic partition: class {class} does not dominate {}",
            tfg.word(vertex)
        )));
    }
    let m = part.class_count();
    let members: Vec<usize> = part.subgraph().members().collect();
    let states: Vec<BitWord> = members.iter().map(|&v| tfg.word(v)).collect();
    let decode = members
        .iter()
        .map(|&v| (tfg.word(v), part.class_of(v).expect("member") as u32))
        .collect();

    // best[c][i]: smallest vertex of class c+1 in N[members[i]]
    let mut best = vec![usize::MAX; m * members.len()];
    for (i, &s) in members.iter().enumerate() {
        for x in std::iter::once(s).chain(g.neighbors(s)) {
            if let Some(c) = part.class_of(x) {
                let slot = &mut best[(c - 1) * members.len() + i];
                *slot = (*slot).min(x);
            }
        }
    }
    let encode = best
        .into_iter()
        .map(|v| {
            debug_assert_ne!(v, usize::MAX);
            tfg.word(v)
        })
        .collect();
    Ok(Codec {
        n: tfg.n(),
        fp: *tfg.fp(),
        message_count: m,
        states,
        decode,
        encode,
    })
}

impl Codec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fp(&self) -> &ForbiddenPair {
        &self.fp
    }

    /// Message alphabet size `M`; messages are `1..=M`.
    pub fn message_count(&self) -> usize {
        self.message_count
    }

    /// The state set in lexicographic order.
    pub fn states(&self) -> &[BitWord] {
        &self.states
    }

    /// `log2(M) / n`.
    pub fn rate(&self) -> f64 {
        (self.message_count as f64).log2() / self.n as f64
    }

    pub fn default_initial_state(&self) -> BitWord {
        self.states[0]
    }

    pub fn is_state(&self, w: &BitWord) -> bool {
        self.state_index(w).is_some()
    }

    fn state_index(&self, w: &BitWord) -> Option<usize> {
        self.states.binary_search(w).ok()
    }

    pub fn encode(&self, message: u32, state: &BitWord) -> Result<BitWord> {
        if message == 0 || message as usize > self.message_count {
            return Err(Error::invalid(format!(
                "message {message} outside 1..={}",
                self.message_count
            )));
        }
        let i = self
            .state_index(state)
            .ok_or_else(|| Error::invalid(format!("{state} is not an encoder state")))?;
        Ok(self.encode[(message as usize - 1) * self.states.len() + i])
    }

    /// Class of `word`, or `None` for a word outside the state set.
    pub fn decode(&self, word: &BitWord) -> Option<u32> {
        self.decode.get(word).copied()
    }
}

/// Why a `(message, state)` pair failed verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Violation {
    /// The decoder does not return the message for the encoded word.
    Mismatch { decoded: Option<u32> },
    /// State and encoded word form a forbidden transition.
    ForbiddenTransition,
    /// The encoded word is outside the state set.
    LeavesStateSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub message: u32,
    pub state: BitWord,
    pub word: BitWord,
    pub violation: Violation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub checked: usize,
    pub counterexample: Option<Counterexample>,
}

/// Checks `decode(encode(m, s)) = m`, closure and transition freeness for
/// every message and state.
pub fn verify_consistency(c: &Codec) -> ConsistencyReport {
    let mut checked = 0;
    for m in 1..=c.message_count as u32 {
        for (i, s) in c.states.iter().enumerate() {
            checked += 1;
            let word = c.encode[(m as usize - 1) * c.states.len() + i];
            let violation =
                if word.len() != s.len() || !is_transition_free(s, &word, &c.fp).unwrap_or(false) {
                    Some(Violation::ForbiddenTransition)
                } else if !c.is_state(&word) {
                    Some(Violation::LeavesStateSet)
                } else if c.decode(&word) != Some(m) {
                    Some(Violation::Mismatch {
                        decoded: c.decode(&word),
                    })
                } else {
                    None
                };
            if let Some(violation) = violation {
                return ConsistencyReport {
                    consistent: false,
                    checked,
                    counterexample: Some(Counterexample {
                        message: m,
                        state: *s,
                        word,
                        violation,
                    }),
                };
            }
        }
    }
    ConsistencyReport {
        consistent: true,
        checked,
        counterexample: None,
    }
}

/// `s_{i+1} = E(m_i, s_i)`; returns `s_1..s_T`.
pub fn encode_stream(c: &Codec, s0: &BitWord, messages: &[u32]) -> Result<Vec<BitWord>> {
    if !c.is_state(s0) {
        return Err(Error::invalid(format!(
            "initial word {s0} is not an encoder state"
        )));
    }
    let mut state = *s0;
    messages
        .iter()
        .map(|&m| {
            state = c.encode(m, &state)?;
            Ok(state)
        })
        .collect()
}

/// Word-by-word decoding. A word outside the state set decodes to `None`
/// and does not affect its neighbors.
pub fn decode_stream(c: &Codec, words: &[BitWord]) -> Vec<Option<u32>> {
    words.iter().map(|w| c.decode(w)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub messages: usize,
    pub violations: usize,
    pub mismatches: usize,
    pub rate: f64,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.mismatches == 0
    }
}

/// Encodes `count` uniformly random messages from `s0`, then checks every
/// bus transition and the round trip.
pub fn simulate(c: &Codec, s0: &BitWord, count: usize, seed: u64) -> Result<SimulationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let messages: Vec<u32> = (0..count)
        .map(|_| rng.gen_range(1..=c.message_count as u32))
        .collect();
    let words = encode_stream(c, s0, &messages)?;
    let mut violations = 0;
    let mut prev = *s0;
    for w in &words {
        if !is_transition_free(&prev, w, &c.fp)? {
            violations += 1;
        }
        prev = *w;
    }
    let mismatches = decode_stream(c, &words)
        .iter()
        .zip(&messages)
        .filter(|(d, m)| **d != Some(**m))
        .count();
    Ok(SimulationReport {
        messages: count,
        violations,
        mismatches,
        rate: c.rate(),
    })
}

/// On-disk codec: `{n, k, p, q, M, states, decode, encode}`. Encode keys are
/// `"<m>,<state>"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecJson {
    pub n: usize,
    pub k: usize,
    pub p: BitWord,
    pub q: BitWord,
    #[serde(rename = "M")]
    pub message_count: usize,
    pub states: Vec<BitWord>,
    pub decode: BTreeMap<BitWord, u32>,
    pub encode: BTreeMap<String, BitWord>,
}

impl From<&Codec> for CodecJson {
    fn from(c: &Codec) -> Self {
        let mut encode = BTreeMap::new();
        for m in 1..=c.message_count {
            for (i, s) in c.states.iter().enumerate() {
                encode.insert(format!("{m},{s}"), c.encode[(m - 1) * c.states.len() + i]);
            }
        }
        CodecJson {
            n: c.n,
            k: c.fp.k(),
            p: c.fp.p(),
            q: c.fp.q(),
            message_count: c.message_count,
            states: c.states.clone(),
            decode: c.decode.clone(),
            encode,
        }
    }
}

impl TryFrom<CodecJson> for Codec {
    type Error = Error;

    /// Structural checks only; table contents are left to [`verify_consistency`].
    fn try_from(j: CodecJson) -> Result<Codec> {
        let fp = ForbiddenPair::new(j.p, j.q)?;
        if fp.k() != j.k {
            return Err(Error::invalid(format!(
                "k = {} but patterns have length {}",
                j.k,
                fp.k()
            )));
        }
        if j.message_count == 0 {
            return Err(Error::invalid("M must be at least 1"));
        }
        let mut states = j.states.clone();
        states.sort();
        states.dedup();
        if states.is_empty() || states.len() != j.states.len() {
            return Err(Error::invalid("state list is empty or has duplicates"));
        }
        if let Some(w) = states.iter().find(|w| w.len() != j.n) {
            return Err(Error::invalid(format!(
                "state {w} does not have length {}",
                j.n
            )));
        }
        let mut encode = Vec::with_capacity(j.message_count * states.len());
        for m in 1..=j.message_count {
            for s in &states {
                let w = j
                    .encode
                    .get(&format!("{m},{s}"))
                    .ok_or_else(|| Error::invalid(format!("missing encode entry ({m},{s})")))?;
                encode.push(*w);
            }
        }
        if j.encode.len() != encode.len() {
            return Err(Error::invalid(
                "encode table has entries outside M x states",
            ));
        }
        Ok(Codec {
            n: j.n,
            fp,
            message_count: j.message_count,
            states,
            decode: j.decode,
            encode,
        })
    }
}

impl Codec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CodecJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Codec> {
        let j: CodecJson = serde_json::from_str(text)?;
        Codec::try_from(j)
    }
}

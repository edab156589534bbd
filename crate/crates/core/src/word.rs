//! Bus words, forbidden transition pairs and the violation predicate.
//!
//! A word of length `n` is stored as the big-endian integer of its bits:
//! position 1 (leftmost, printed first) is the most significant bit. Windows
//! are addressed by their 1-based start position, so the window starting at
//! `i` covers positions `i..i+k-1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word a [`BitWord`] can hold.
pub const MAX_WORD_LEN: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitWord {
    // `len` first so the derived ordering is length-major, then lexicographic.
    len: u8,
    bits: u64,
}

impl BitWord {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_WORD_LEN {
            return Err(Error::invalid(format!(
                "word length must be in 1..={MAX_WORD_LEN}, got {len}"
            )));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::invalid(format!(
                "value {bits:#x} does not fit in {len} bits"
            )));
        }
        Ok(BitWord {
            len: len as u8,
            bits,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Always false; words have at least one bit.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Big-endian integer value of the word.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Symbol at 1-based `pos`.
    pub fn bit(&self, pos: usize) -> u8 {
        assert!(pos >= 1 && pos <= self.len(), "position {pos} out of range");
        ((self.bits >> (self.len() - pos)) & 1) as u8
    }

    /// All words of length `len` in lexicographic order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = BitWord>> {
        BitWord::new(0, len)?;
        if len >= 32 {
            return Err(Error::ResourceLimit {
                what: format!("enumerating 2^{len} words"),
                cap: 31,
                suggestion: "use the transfer-matrix counting routines instead".into(),
            });
        }
        Ok((0..1u64 << len).map(move |bits| BitWord {
            len: len as u8,
            bits,
        }))
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in 1..=self.len() {
            f.write_str(if self.bit(pos) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({self})")
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("empty bit string"));
        }
        if s.len() > MAX_WORD_LEN {
            return Err(Error::invalid(format!(
                "bit string longer than {MAX_WORD_LEN} characters"
            )));
        }
        let mut bits = 0u64;
        for c in s.chars() {
            let b = match c {
                '0' => 0,
                '1' => 1,
                other => {
                    return Err(Error::invalid(format!(
                        "unexpected character {other:?} in bit string {s:?}"
                    )))
                }
            };
            bits = (bits << 1) | b;
        }
        BitWord::new(bits, s.len())
    }
}

impl TryFrom<String> for BitWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BitWord> for String {
    fn from(w: BitWord) -> String {
        w.to_string()
    }
}

/// The pattern pair `(p, q)`: `p` above `q` (or `q` above `p`) must never
/// appear at the same positions of two consecutive words.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct ForbiddenPair {
    p: BitWord,
    q: BitWord,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    p: BitWord,
    q: BitWord,
}

impl TryFrom<RawPair> for ForbiddenPair {
    type Error = Error;
    fn try_from(raw: RawPair) -> Result<Self> {
        ForbiddenPair::new(raw.p, raw.q)
    }
}

impl From<ForbiddenPair> for RawPair {
    fn from(fp: ForbiddenPair) -> RawPair {
        RawPair { p: fp.p, q: fp.q }
    }
}

impl ForbiddenPair {
    pub fn new(p: BitWord, q: BitWord) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::invalid(format!(
                "patterns {p} and {q} differ in length"
            )));
        }
        if p.len() < 2 {
            return Err(Error::invalid("pattern length k must be at least 2"));
        }
        if p == q {
            return Err(Error::invalid(format!("p and q must differ (both {p})")));
        }
        Ok(ForbiddenPair { p, q })
    }

    pub fn parse(p: &str, q: &str) -> Result<Self> {
        ForbiddenPair::new(p.parse()?, q.parse()?)
    }

    /// Forbidden transition coding pair `(10, 01)`.
    pub fn ftc() -> Self {
        ForbiddenPair::parse("10", "01").expect("valid literal")
    }

    /// Forbidden overlap coding pair `(101, 010)`.
    pub fn foc() -> Self {
        ForbiddenPair::parse("101", "010").expect("valid literal")
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> BitWord {
        self.p
    }

    pub fn q(&self) -> BitWord {
        self.q
    }

    /// The same constraint with the roles of `p` and `q` exchanged.
    pub fn swapped(&self) -> Self {
        ForbiddenPair {
            p: self.q,
            q: self.p,
        }
    }

    /// Whether the window pair `(a, b)` (both `k` bits) is one of the
    /// forbidden combinations.
    pub fn forbids(&self, a: u64, b: u64) -> bool {
        let (p, q) = (self.p.bits(), self.q.bits());
        (a == p && b == q) || (a == q && b == p)
    }

    /// Bitmasks of the windows of `word` (of length `len`) equal to `p` and
    /// to `q`. Bit `s` stands for the window whose last position is `s` bits
    /// from the right end, i.e. the window starting at position `len - k - s + 1`.
    pub fn match_masks(&self, word: u64, len: usize) -> (u64, u64) {
        let k = self.k();
        if len < k {
            return (0, 0);
        }
        let mask = low_mask(k);
        let (p, q) = (self.p.bits(), self.q.bits());
        let (mut pm, mut qm) = (0u64, 0u64);
        for s in 0..=(len - k) {
            let w = (word >> s) & mask;
            if w == p {
                pm |= 1 << s;
            }
            if w == q {
                qm |= 1 << s;
            }
        }
        (pm, qm)
    }
}

impl fmt::Display for ForbiddenPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

impl fmt::Debug for ForbiddenPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ForbiddenPair{self}")
    }
}

pub(crate) fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn check_same_len(x: &BitWord, y: &BitWord) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "word lengths differ: {x} has {} bits, {y} has {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// 1-based start of the leftmost window where `x` and `y` show `(p,q)` or
/// `(q,p)`, if any.
pub fn first_violation(x: &BitWord, y: &BitWord, fp: &ForbiddenPair) -> Result<Option<usize>> {
    check_same_len(x, y)?;
    let n = x.len();
    let (xp, xq) = fp.match_masks(x.bits(), n);
    let (yp, yq) = fp.match_masks(y.bits(), n);
    let hits = (xp & yq) | (xq & yp);
    if hits == 0 {
        return Ok(None);
    }
    // Highest shift is the leftmost window.
    let s = 63 - hits.leading_zeros() as usize;
    Ok(Some(n - fp.k() - s + 1))
}

pub fn is_violating(x: &BitWord, y: &BitWord, fp: &ForbiddenPair) -> Result<bool> {
    Ok(first_violation(x, y, fp)?.is_some())
}

pub fn is_transition_free(x: &BitWord, y: &BitWord, fp: &ForbiddenPair) -> Result<bool> {
    Ok(!is_violating(x, y, fp)?)
}

/// True when every consecutive pair of `words` is transition free.
pub fn is_sequence_transition_free(words: &[BitWord], fp: &ForbiddenPair) -> Result<bool> {
    if let Some(first) = words.first() {
        if let Some(bad) = words.iter().find(|w| w.len() != first.len()) {
            return Err(Error::invalid(format!(
                "mixed word lengths in sequence: {first} and {bad}"
            )));
        }
    }
    for pair in words.windows(2) {
        if is_violating(&pair[0], &pair[1], fp)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> BitWord {
        s.parse().unwrap()
    }

    // Straight transcription of the definition: compare each window symbol by symbol.
    fn naive_violating(x: &BitWord, y: &BitWord, fp: &ForbiddenPair) -> bool {
        let (n, k) = (x.len(), fp.k());
        if n < k {
            return false;
        }
        (0..=n - k).any(|i| {
            let xs: Vec<u8> = (1..=k).map(|j| x.bit(i + j)).collect();
            let ys: Vec<u8> = (1..=k).map(|j| y.bit(i + j)).collect();
            let ps: Vec<u8> = (1..=k).map(|j| fp.p().bit(j)).collect();
            let qs: Vec<u8> = (1..=k).map(|j| fp.q().bit(j)).collect();
            (xs == ps && ys == qs) || (xs == qs && ys == ps)
        })
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(w("0110").to_string(), "0110");
        assert_eq!(w("0110").bits(), 6);
        assert_eq!(w("100").bit(1), 1);
        assert!("012".parse::<BitWord>().is_err());
        assert!("".parse::<BitWord>().is_err());
        assert_eq!(BitWord::new(u64::MAX, 64).unwrap().len(), 64);
        assert!(BitWord::new(4, 2).is_err());
    }

    #[test]
    fn pair_construction_rules() {
        assert!(ForbiddenPair::parse("1", "0").is_err());
        assert!(ForbiddenPair::parse("10", "10").is_err());
        assert!(ForbiddenPair::parse("10", "011").is_err());
        assert_eq!(ForbiddenPair::foc().k(), 3);
    }

    #[test]
    fn violation_examples() {
        let ftc = ForbiddenPair::ftc();
        assert!(is_violating(&w("101"), &w("010"), &ftc).unwrap());
        assert_eq!(
            first_violation(&w("101"), &w("010"), &ftc).unwrap(),
            Some(1)
        );
        assert!(!is_violating(&w("00"), &w("11"), &ftc).unwrap());
        assert!(!is_transition_free(&w("101"), &w("010"), &ftc).unwrap());
        assert!(!is_transition_free(&w("010"), &w("101"), &ForbiddenPair::foc()).unwrap());
        // Window only at the right end.
        assert_eq!(
            first_violation(&w("0010"), &w("0001"), &ftc).unwrap(),
            Some(3)
        );
    }

    #[test]
    fn short_words_never_violate() {
        let foc = ForbiddenPair::foc();
        assert!(!is_violating(&w("10"), &w("01"), &foc).unwrap());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let ftc = ForbiddenPair::ftc();
        assert!(matches!(
            is_violating(&w("10"), &w("010"), &ftc),
            Err(Error::InvalidArgument(_))
        ));
        assert!(is_sequence_transition_free(&[w("10"), w("010")], &ftc).is_err());
    }

    #[test]
    fn sequences() {
        let ftc = ForbiddenPair::ftc();
        assert!(is_sequence_transition_free(&[w("000"), w("111"), w("000")], &ftc).unwrap());
        assert!(!is_sequence_transition_free(&[w("101"), w("010")], &ftc).unwrap());
        assert!(is_sequence_transition_free(&[], &ftc).unwrap());
        assert!(is_sequence_transition_free(&[w("1")], &ftc).unwrap());
    }

    #[test]
    fn exhaustive_agreement_small() {
        for fp in [ForbiddenPair::ftc(), ForbiddenPair::foc()] {
            for n in 1..=6 {
                for x in BitWord::all(n).unwrap() {
                    for y in BitWord::all(n).unwrap() {
                        assert_eq!(
                            is_violating(&x, &y, &fp).unwrap(),
                            naive_violating(&x, &y, &fp),
                            "{x} {y} {fp}"
                        );
                    }
                }
            }
        }
    }

    fn arb_pair() -> impl Strategy<Value = ForbiddenPair> {
        (2usize..=4)
            .prop_flat_map(|k| (Just(k), 0u64..(1 << k), 0u64..(1 << k)))
            .prop_filter("p != q", |(_, p, q)| p != q)
            .prop_map(|(k, p, q)| {
                ForbiddenPair::new(BitWord::new(p, k).unwrap(), BitWord::new(q, k).unwrap())
                    .unwrap()
            })
    }

    fn arb_words() -> impl Strategy<Value = (BitWord, BitWord)> {
        (1usize..=12).prop_flat_map(|n| {
            (0u64..(1 << n), 0u64..(1 << n))
                .prop_map(move |(a, b)| (BitWord::new(a, n).unwrap(), BitWord::new(b, n).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn agrees_with_window_scan(fp in arb_pair(), (x, y) in arb_words()) {
            prop_assert_eq!(is_violating(&x, &y, &fp).unwrap(), naive_violating(&x, &y, &fp));
        }

        #[test]
        fn symmetric(fp in arb_pair(), (x, y) in arb_words()) {
            prop_assert_eq!(is_violating(&x, &y, &fp).unwrap(), is_violating(&y, &x, &fp).unwrap());
        }

        #[test]
        fn reflexive_freeness(fp in arb_pair(), (x, _) in arb_words()) {
            prop_assert!(is_transition_free(&x, &x, &fp).unwrap());
        }

        #[test]
        fn display_round_trip((x, _) in arb_words()) {
            prop_assert_eq!(x.to_string().parse::<BitWord>().unwrap(), x);
        }
    }
}

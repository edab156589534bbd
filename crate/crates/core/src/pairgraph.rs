//! Transfer matrix over pairs of bit tracks.
//!
//! A state is the interleaved label `(a1,b1,...,a_{k-1},b_{k-1})` of the last
//! `k-1` positions of two words `a` and `b`, read as a big-endian integer. A
//! walk of `n-k+1` edges spells out one ordered pair of length-`n` words, and
//! the edges that would complete a forbidden window are absent, so walk counts
//! give `N(p,q,n)` exactly.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{low_mask, ForbiddenPair};

/// Largest pattern length for which the pair graph is built (`dim = 4^(k-1)`).
pub const MAX_PAIR_GRAPH_K: usize = 8;
/// Largest pattern length whose dense JSON export is produced.
pub const MAX_EXPORT_K: usize = 6;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct PairTransferMatrix {
    k: usize,
    fp: Option<ForbiddenPair>,
    succ: Vec<Vec<u32>>,
}

impl PairTransferMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.succ.len()
    }

    /// `None` for the unconstrained matrix.
    pub fn forbidden_pair(&self) -> Option<ForbiddenPair> {
        self.fp
    }

    pub fn entry(&self, u: usize, v: usize) -> u8 {
        self.succ[u].binary_search(&(v as u32)).is_ok() as u8
    }

    pub fn successors(&self, u: usize) -> &[u32] {
        &self.succ[u]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.succ[u].len()
    }

    /// Interleaved label of state `u`, e.g. `"0110"` for `(a1,b1,a2,b2) = (0,1,1,0)`.
    pub fn state_label(&self, u: usize) -> String {
        let bits = 2 * (self.k - 1);
        (0..bits)
            .map(|i| {
                if (u >> (bits - 1 - i)) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        if label.len() != 2 * (self.k - 1) {
            return None;
        }
        usize::from_str_radix(label, 2).ok()
    }

    /// Row-major dense 0/1 entries.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        (0..self.dim())
            .map(|u| (0..self.dim()).map(|v| self.entry(u, v)).collect())
            .collect()
    }

    /// Every overlap-consistent transition allowed (no constraint at all).
    pub fn unconstrained(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(build(k, None))
    }

    pub fn to_json(&self) -> Result<MatrixJson> {
        if self.k > MAX_EXPORT_K {
            return Err(Error::ResourceLimit {
                what: format!("dense export of a {0}x{0} matrix", self.dim()),
                cap: MAX_EXPORT_K,
                suggestion: "inspect successors() programmatically instead".into(),
            });
        }
        Ok(MatrixJson {
            k: self.k,
            p: self.fp.map(|fp| fp.p().to_string()),
            q: self.fp.map(|fp| fp.q().to_string()),
            dim: self.dim(),
            states: (0..self.dim()).map(|u| self.state_label(u)).collect(),
            entries: self.dense(),
        })
    }
}

/// JSON form of a pair transfer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<String>,
    pub dim: usize,
    pub states: Vec<String>,
    pub entries: Vec<Vec<u8>>,
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid("pattern length k must be at least 2"));
    }
    if k > MAX_PAIR_GRAPH_K {
        return Err(Error::ResourceLimit {
            what: format!("pair graph for k = {k}"),
            cap: MAX_PAIR_GRAPH_K,
            suggestion: "shorter forbidden patterns are required".into(),
        });
    }
    Ok(())
}

/// Split an interleaved `a1 b1 a2 b2 ...` value of `2*len` bits into its
/// `a` and `b` tracks.
fn deinterleave(w: u64, len: usize) -> (u64, u64) {
    let (mut a, mut b) = (0u64, 0u64);
    for j in 0..len {
        let shift = 2 * (len - 1 - j);
        a = (a << 1) | ((w >> (shift + 1)) & 1);
        b = (b << 1) | ((w >> shift) & 1);
    }
    (a, b)
}

fn build(k: usize, fp: Option<ForbiddenPair>) -> PairTransferMatrix {
    let dim = 1usize << (2 * (k - 1));
    let overlap_mask = low_mask(2 * (k - 2)) as usize;
    let succ = (0..dim)
        .map(|u| {
            // v must start with u's last k-2 pairs; only its final pair is free.
            let base = (u & overlap_mask) << 2;
            (0..4usize)
                .map(|last| base | last)
                .filter(|&v| match fp {
                    None => true,
                    Some(fp) => {
                        let window = ((u as u64) << 2) | (v as u64 & 3);
                        let (a, b) = deinterleave(window, k);
                        !fp.forbids(a, b)
                    }
                })
                .map(|v| v as u32)
                .collect()
        })
        .collect();
    PairTransferMatrix { k, fp, succ }
}

pub fn build_pair_graph(fp: &ForbiddenPair) -> Result<PairTransferMatrix> {
    check_k(fp.k())?;
    Ok(build(fp.k(), Some(*fp)))
}

/// All-ones row times `m^steps` times all-ones column.
pub fn count_walks(m: &PairTransferMatrix, steps: usize) -> BigUint {
    let mut v: Vec<BigUint> = vec![BigUint::one(); m.dim()];
    for _ in 0..steps {
        let next: Vec<BigUint> = (0..m.dim())
            .map(|u| {
                m.successors(u)
                    .iter()
                    .fold(BigUint::zero(), |acc, &s| acc + &v[s as usize])
            })
            .collect();
        v = next;
    }
    v.into_iter().sum()
}

/// Exact number `N(p,q,n)` of ordered transition-free pairs of length-`n` words.
pub fn count_pairs(fp: &ForbiddenPair, n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::invalid("word length n must be at least 1"));
    }
    if n < fp.k() {
        return Ok(BigUint::one() << (2 * n));
    }
    let m = build_pair_graph(fp)?;
    Ok(count_walks(&m, n - fp.k() + 1))
}

/// Perron root of `m` by power iteration on `m + I` from the all-ones vector.
///
/// Converged once successive Rayleigh quotients differ by less than `tol`.
pub fn spectral_radius(m: &PairTransferMatrix, tol: f64) -> Result<f64> {
    spectral_radius_with_cap(m, tol, MAX_POWER_ITERATIONS)
}

pub fn spectral_radius_with_cap(m: &PairTransferMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let dim = m.dim();
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut y = vec![0.0; dim];
    let mut prev = f64::NAN;
    for _ in 0..max_iter {
        for u in 0..dim {
            y[u] = x[u] + m.successors(u).iter().map(|&s| x[s as usize]).sum::<f64>();
        }
        // x has unit norm, so the Rayleigh quotient is x.y
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (rq - prev).abs() < tol {
            return Ok(rq - 1.0);
        }
        prev = rq;
    }
    Err(Error::NumericalFailure {
        iterations: max_iter,
        last_estimate: prev - 1.0,
    })
}

/// Edge-density growth rate `log2(lambda / 2)` of the transition free graphs.
pub fn alpha(fp: &ForbiddenPair, tol: f64) -> Result<f64> {
    Ok(growth_rate_of_n(fp, tol)? - 1.0)
}

/// Exponent `log2(lambda)` of `N(p,q,n)`.
pub fn growth_rate_of_n(fp: &ForbiddenPair, tol: f64) -> Result<f64> {
    let m = build_pair_graph(fp)?;
    Ok(spectral_radius(&m, tol)?.log2())
}

/// `log2` of a big integer without overflowing `f64`.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        // f64 holds values up to ~2^1023 exactly enough for a log
        return num_traits::ToPrimitive::to_f64(x)
            .unwrap_or(f64::INFINITY)
            .log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap().log2() + shift as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{is_transition_free, BitWord};

    fn brute_force_count(fp: &ForbiddenPair, n: usize) -> u64 {
        let words: Vec<BitWord> = BitWord::all(n).unwrap().collect();
        let mut count = 0;
        for x in &words {
            for y in &words {
                if is_transition_free(x, y, fp).unwrap() {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn ftc_matrix_matches_published_a() {
        let m = build_pair_graph(&ForbiddenPair::ftc()).unwrap();
        let expected = vec![
            vec![1, 1, 1, 1],
            vec![1, 1, 0, 1],
            vec![1, 0, 1, 1],
            vec![1, 1, 1, 1],
        ];
        assert_eq!(m.dense(), expected);
        assert_eq!(m.state_label(1), "01");
    }

    #[test]
    fn foc_matrix_degrees() {
        let m = build_pair_graph(&ForbiddenPair::foc()).unwrap();
        assert_eq!(m.dim(), 16);
        let a = m.state_index("0110").unwrap();
        let b = m.state_index("1001").unwrap();
        assert_eq!(m.entry(a, b), 0);
        assert_eq!(m.entry(b, a), 0);
        for u in 0..16 {
            let expected = if u == a || u == b { 3 } else { 4 };
            assert_eq!(m.out_degree(u), expected, "state {}", m.state_label(u));
        }
    }

    #[test]
    fn zeros_over_ones_forbids_two_entries() {
        let m = build_pair_graph(&ForbiddenPair::parse("00", "11").unwrap()).unwrap();
        let zeros: Vec<(usize, usize)> = (0..4)
            .flat_map(|u| (0..4).map(move |v| (u, v)))
            .filter(|&(u, v)| m.entry(u, v) == 0)
            .collect();
        // a = 00 over b = 11 is the pair label (0,1) twice in a row, so the
        // forbidden transitions are the self-loops 01 -> 01 and 10 -> 10.
        assert_eq!(zeros, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn overlap_consistency() {
        let m = build_pair_graph(&ForbiddenPair::parse("1101", "0100").unwrap()).unwrap();
        for u in 0..m.dim() {
            for &v in m.successors(u) {
                assert_eq!(m.state_label(u)[2..], m.state_label(v as usize)[..4]);
            }
        }
    }

    #[test]
    fn small_counts() {
        let ftc = ForbiddenPair::ftc();
        assert_eq!(count_pairs(&ftc, 1).unwrap(), BigUint::from(4u32));
        assert_eq!(count_pairs(&ftc, 2).unwrap(), BigUint::from(14u32));
        assert_eq!(count_pairs(&ftc, 3).unwrap(), BigUint::from(50u32));
        assert_eq!(
            count_pairs(&ForbiddenPair::foc(), 2).unwrap(),
            BigUint::from(16u32)
        );
        assert!(count_pairs(&ftc, 0).is_err());
    }

    #[test]
    fn counts_agree_with_brute_force() {
        let pairs = [
            ForbiddenPair::ftc(),
            ForbiddenPair::foc(),
            ForbiddenPair::parse("0011", "1110").unwrap(),
            ForbiddenPair::parse("11", "00").unwrap(),
        ];
        for fp in pairs {
            for n in 1..=7 {
                assert_eq!(
                    count_pairs(&fp, n).unwrap(),
                    BigUint::from(brute_force_count(&fp, n)),
                    "{fp} n={n}"
                );
            }
        }
    }

    #[test]
    fn count_invariants() {
        for fp in [
            ForbiddenPair::ftc(),
            ForbiddenPair::foc(),
            ForbiddenPair::parse("011", "100").unwrap(),
        ] {
            for n in 1..=40 {
                let c = count_pairs(&fp, n).unwrap();
                let lo = BigUint::one() << n;
                let hi = BigUint::one() << (2 * n);
                assert!(lo <= c && c <= hi);
                assert!(((&c - &lo) % 2u32).is_zero());
                assert_eq!(c, count_pairs(&fp.swapped(), n).unwrap());
            }
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let m = build_pair_graph(&ForbiddenPair::ftc()).unwrap();
        let lambda = spectral_radius(&m, DEFAULT_TOL).unwrap();
        assert!((lambda - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-9);

        let ones = PairTransferMatrix::unconstrained(2).unwrap();
        assert!((spectral_radius(&ones, DEFAULT_TOL).unwrap() - 4.0).abs() < 1e-12);
        assert!(spectral_radius(&ones, 0.0).is_err());
    }

    #[test]
    fn non_convergence_reports_last_estimate() {
        let m = build_pair_graph(&ForbiddenPair::foc()).unwrap();
        match spectral_radius_with_cap(&m, 1e-300, 5) {
            Err(Error::NumericalFailure {
                iterations,
                last_estimate,
            }) => {
                assert_eq!(iterations, 5);
                assert!(last_estimate > 3.0 && last_estimate < 4.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn alpha_values() {
        let a = alpha(&ForbiddenPair::ftc(), DEFAULT_TOL).unwrap();
        assert!((a - (-2.0 + (3.0 + 17f64.sqrt()).log2())).abs() < 1e-9);
        assert!((a - 0.8325064).abs() < 1e-6);
        let foc = alpha(&ForbiddenPair::foc(), DEFAULT_TOL).unwrap();
        assert!((foc - 0.9636).abs() < 1e-3);
        let free = PairTransferMatrix::unconstrained(2).unwrap();
        let free_alpha = (spectral_radius(&free, DEFAULT_TOL).unwrap() / 2.0).log2();
        assert!((free_alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_rate_matches_finite_counts() {
        let ftc = ForbiddenPair::ftc();
        let g = growth_rate_of_n(&ftc, DEFAULT_TOL).unwrap();
        assert!((g - 1.8325064).abs() < 1e-6);
        for n in [8usize, 16, 32, 64] {
            let est = log2_big(&count_pairs(&ftc, n).unwrap()) / n as f64;
            assert!((est - g).abs() < 2.0 / n as f64, "n={n} est={est}");
        }
        let est64 = log2_big(&count_pairs(&ftc, 64).unwrap()) / 64.0;
        assert!((est64 - g).abs() < 0.01);
        let foc = growth_rate_of_n(&ForbiddenPair::foc(), DEFAULT_TOL).unwrap();
        assert!((foc - 1.9636).abs() < 1e-3);
    }

    #[test]
    fn json_export() {
        let m = build_pair_graph(&ForbiddenPair::ftc()).unwrap();
        let j = m.to_json().unwrap();
        assert_eq!(j.states, vec!["00", "01", "10", "11"]);
        let text = serde_json::to_string(&j).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn log2_of_huge_counts() {
        let x = BigUint::one() << 5000u32;
        assert!((log2_big(&x) - 5000.0).abs() < 1e-9);
        assert!((log2_big(&BigUint::from(1024u32)) - 10.0).abs() < 1e-12);
    }
}

//! Dyadic exponent sequences, words over {1,2}, cell addresses over {0,1,2},
//! and the combinatorics of the cut `S(x)`.
//!
//! A point `x` in (0, 1] is carried as its increasing exponent sequence
//! `x = sum 2^{-n_k}`. Internally the sequence is stored by its gaps
//! `n_k - n_{k-1}` (with `n_0 = 0`), because every quantity downstream depends
//! on gaps only and the shift `y = 2^{n_1} R x` is just "drop the first gap".
//! A sequence is either *truncated* (exactly `K` known exponents; it then
//! describes the dyadic rational `x_[K]`) or *eventually periodic* (a head of
//! gaps followed by a repeating cycle), in which case exponents past the
//! truncation depth are available and ratio quantities can be evaluated
//! exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GasketError, Result};
use crate::mesh::Cell;

pub const DEFAULT_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicSequence {
    head: Vec<u32>,
    cycle: Vec<u32>,
    depth: usize,
}

impl DyadicSequence {
    /// Truncated sequence from explicit exponents.
    pub fn from_exponents(exponents: &[u32]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(GasketError::InvalidSequence("empty".into()));
        }
        let mut prev = 0;
        let mut head = Vec::with_capacity(exponents.len());
        for &n in exponents {
            if n <= prev {
                return Err(GasketError::InvalidSequence(format!(
                    "exponents must be strictly increasing and >= 1, got {exponents:?}"
                )));
            }
            head.push(n - prev);
            prev = n;
        }
        Ok(Self { depth: head.len(), head, cycle: Vec::new() })
    }

    /// Parses an x-spec: a decimal in (0, 1], an exponent list `1,3,5`
    /// (optionally prefixed `seq:`), `arith:a,d` for `n_k = a + (k-1)d`, or
    /// `periodic:p1,...,pr` for repeating gaps. `depth` defaults to
    /// [`DEFAULT_DEPTH`] except for lists, which keep their length unless cut.
    pub fn parse_spec(spec: &str, depth: Option<usize>) -> Result<Self> {
        let spec = spec.trim();
        let nums = |body: &str| -> Result<Vec<u32>> {
            body.split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|_| GasketError::Parse(format!("bad integer '{t}' in '{spec}'"))))
                .collect()
        };
        let d = depth.unwrap_or(DEFAULT_DEPTH);
        if let Some(body) = spec.strip_prefix("arith:") {
            match nums(body)?.as_slice() {
                [a, step] => Self::arithmetic(*a, *step, d),
                _ => Err(GasketError::Parse(format!("expected arith:a,d, got '{spec}'"))),
            }
        } else if let Some(body) = spec.strip_prefix("periodic:") {
            Self::periodic(&nums(body)?, d)
        } else if spec.starts_with("seq:") || spec.contains(',') {
            let seq = Self::from_exponents(&nums(spec.trim_start_matches("seq:"))?)?;
            match depth {
                Some(k) => seq.with_depth(k),
                None => Ok(seq),
            }
        } else {
            let x: f64 = spec.parse().map_err(|_| GasketError::Parse(format!("unrecognised x-spec '{spec}'")))?;
            Self::from_value(x, d)
        }
    }

    /// Gaps `head` followed by `cycle` repeated forever, truncated at `depth`.
    pub fn with_cycle(head: &[u32], cycle: &[u32], depth: usize) -> Result<Self> {
        if cycle.is_empty() || head.iter().chain(cycle).any(|&g| g == 0) {
            return Err(GasketError::InvalidSequence("gaps must be positive and the cycle nonempty".into()));
        }
        if depth == 0 {
            return Err(GasketError::InvalidParameter("depth must be at least 1".into()));
        }
        Ok(Self { head: head.to_vec(), cycle: cycle.to_vec(), depth })
    }

    /// `n_k = first + (k - 1) * step`.
    pub fn arithmetic(first: u32, step: u32, depth: usize) -> Result<Self> {
        if first == 0 || step == 0 {
            return Err(GasketError::InvalidSequence("arith needs first >= 1 and step >= 1".into()));
        }
        Self::with_cycle(&[first], &[step], depth)
    }

    /// Exponent gaps `p_1, ..., p_r` repeated from the start, so `n_1 = p_1`.
    pub fn periodic(gaps: &[u32], depth: usize) -> Result<Self> {
        Self::with_cycle(&[], gaps, depth)
    }

    /// First `depth` exponents of the binary expansion, built greedily with
    /// strictly increasing exponents. The expansion stops early when it
    /// terminates, except that `x = 1` yields the non-terminating `n_k = k`
    /// (returned in exact periodic form).
    pub fn from_value(x: f64, depth: usize) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) || !x.is_finite() {
            return Err(GasketError::ValueOutOfRange(x));
        }
        if depth == 0 {
            return Err(GasketError::InvalidParameter("depth must be at least 1".into()));
        }
        if x == 1.0 {
            return Self::periodic(&[1], depth);
        }
        let mut exps = Vec::new();
        let mut r = x;
        let mut n = 0u32;
        while r > 0.0 && exps.len() < depth {
            n += 1;
            r *= 2.0;
            if r >= 1.0 {
                exps.push(n);
                r -= 1.0;
            }
        }
        Self::from_exponents(&exps)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn head_gaps(&self) -> &[u32] {
        &self.head
    }

    /// Repeating gaps; empty for truncated sequences.
    pub fn cycle_gaps(&self) -> &[u32] {
        &self.cycle
    }

    pub fn is_periodic(&self) -> bool {
        !self.cycle.is_empty()
    }

    /// Same sequence with a different truncation depth. Truncated sequences
    /// can only be shortened.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if depth == 0 || (!self.is_periodic() && depth > self.depth) {
            return Err(GasketError::SequenceTooShort { needed: depth, have: self.depth });
        }
        let mut s = self.clone();
        if !s.is_periodic() {
            s.head.truncate(depth);
        }
        s.depth = depth;
        Ok(s)
    }

    /// The first `depth` exponents as a truncated sequence.
    pub fn truncated(&self) -> Self {
        if self.is_periodic() {
            Self::from_exponents(&self.exponents()).expect("exponents of a valid sequence")
        } else {
            self.clone()
        }
    }

    /// Gap `n_k - n_{k-1}` for 1-based `k`; `None` past a truncated end.
    pub fn gap(&self, k: usize) -> Option<u32> {
        if k == 0 {
            return None;
        }
        if k <= self.head.len() {
            return Some(self.head[k - 1]);
        }
        if self.cycle.is_empty() {
            return None;
        }
        let i = (k - 1 - self.head.len()) % self.cycle.len();
        Some(self.cycle[i])
    }

    /// Exponent `n_k` for 1-based `k` (and `n_0 = 0`). Periodic sequences
    /// answer past the truncation depth.
    pub fn exponent(&self, k: usize) -> Option<u32> {
        if k == 0 {
            return Some(0);
        }
        if !self.is_periodic() && k > self.depth {
            return None;
        }
        let mut n = 0u32;
        for i in 1..=k {
            n = n.checked_add(self.gap(i)?)?;
        }
        Some(n)
    }

    /// `n_k` for `k <= depth`.
    pub fn n(&self, k: usize) -> u32 {
        self.exponent(k).expect("exponent index within truncation depth")
    }

    pub fn exponents(&self) -> Vec<u32> {
        (1..=self.depth).map(|k| self.n(k)).collect()
    }

    /// Partial sum `x_[m]`.
    pub fn partial_sum(&self, m: usize) -> f64 {
        (1..=m.min(self.depth)).map(|k| 0.5f64.powi(self.n(k) as i32)).sum()
    }

    /// Best float value of `x`: `x_[K]` for truncated sequences, the limit for
    /// periodic ones (summed until terms vanish in double precision).
    pub fn value(&self) -> f64 {
        if !self.is_periodic() {
            return self.partial_sum(self.depth);
        }
        let mut s = 0.0;
        let mut k = 1;
        while let Some(n) = self.exponent(k) {
            if n > 1100 {
                break;
            }
            s += 0.5f64.powi(n as i32);
            k += 1;
        }
        s
    }

    /// `x_[m] * 2^level` as an integer; requires `level >= n_m`.
    pub fn partial_sum_units(&self, m: usize, level: u32) -> u64 {
        (1..=m.min(self.depth)).map(|k| 1u64 << (level - self.n(k))).sum()
    }

    /// The sequence of `y = 2^{n_1} R x`, i.e. `{n_{k+1} - n_1}`.
    pub fn shift_normalized(&self) -> Result<Self> {
        self.shifted(1)
    }

    /// `m`-fold shift: the sequence of `y_m = 2^{n_m} R^m x`.
    pub fn shifted(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Ok(self.clone());
        }
        if self.depth < m + 1 {
            return Err(GasketError::SequenceTooShort { needed: m + 1, have: self.depth });
        }
        let mut head: Vec<u32> = self.head.iter().skip(m).copied().collect();
        let mut cycle = self.cycle.clone();
        if m > self.head.len() && !cycle.is_empty() {
            let r = (m - self.head.len()) % cycle.len();
            cycle.rotate_left(r);
            head.clear();
        }
        Ok(Self { head, cycle, depth: self.depth - m })
    }

    /// Smallest `N >= 2` such that no `N` consecutive integers occur. For a
    /// truncated prefix the final run may continue past the truncation, so
    /// the answer is absent when that run is at least as long as every
    /// earlier run. Periodic sequences are judged exactly.
    pub fn nonconsecutive_bound(&self) -> Option<u32> {
        if self.is_periodic() {
            if self.cycle.iter().all(|&g| g == 1) {
                return None;
            }
            // head plus two full cycles covers every run shape
            let len = self.head.len() + 2 * self.cycle.len() + 1;
            let runs = runs_of_ones(&(1..=len).map(|k| self.gap(k).unwrap()).collect::<Vec<_>>());
            return Some(runs.into_iter().max().unwrap_or(1).max(1) + 1);
        }
        let runs = runs_of_ones(&self.head);
        let (last, earlier) = runs.split_last()?;
        let longest_earlier = earlier.iter().copied().max().unwrap_or(0);
        if *last > longest_earlier {
            None
        } else {
            Some(longest_earlier.max(1) + 1)
        }
    }

    /// Cell address of `F~_w = F_0^{n_1-1} F_{w_1} F_0^{n_2-n_1-1} F_{w_2} ...`.
    pub fn tilde_f(&self, word: &Word) -> Result<CellAddress> {
        let m = word.len();
        if m > self.depth && !self.is_periodic() {
            return Err(GasketError::WordTooDeep { len: m, depth: self.depth });
        }
        let mut letters = Vec::new();
        for (k, &w) in word.letters().iter().enumerate() {
            let g = self.gap(k + 1).ok_or(GasketError::WordTooDeep { len: m, depth: self.depth })?;
            letters.extend(std::iter::repeat_n(0u8, g as usize - 1));
            letters.push(w);
        }
        Ok(CellAddress { letters })
    }

    /// The upper neighbour cell `F~~_w` sharing the vertex `F~_w q_0`:
    /// `F~_{w'} F_0^{n_m - n_{m-1}}` where `w'` drops the last letter.
    pub fn tilde_tilde_f(&self, word: &Word) -> Result<CellAddress> {
        if word.is_empty() {
            return Err(GasketError::InvalidWord("tilde-tilde map needs a nonempty word".into()));
        }
        let m = word.len();
        let mut addr = self.tilde_f(&word.parent())?;
        let g = self.gap(m).ok_or(GasketError::WordTooDeep { len: m, depth: self.depth })?;
        addr.letters.extend(std::iter::repeat_n(0u8, g as usize));
        Ok(addr)
    }

    /// Number of consecutive exponents starting at `n_{m+1}`, capped at the
    /// truncation depth: the largest `r` with `n_{m+s} = n_{m+1} + s - 1` for
    /// all `s <= r`.
    pub fn run_length_from(&self, m: usize) -> usize {
        let mut r = 1;
        while m + r < self.depth && self.gap(m + r + 1) == Some(1) {
            r += 1;
        }
        r
    }
}

fn runs_of_ones(gaps: &[u32]) -> Vec<u32> {
    // a run of r consecutive exponents is a block of r-1 unit gaps
    // (ignoring the first gap, which is measured from 0)
    let mut runs = Vec::new();
    let mut cur = 1u32;
    for &g in gaps.iter().skip(1) {
        if g == 1 {
            cur += 1;
        } else {
            runs.push(cur);
            cur = 1;
        }
    }
    runs.push(cur);
    runs
}

impl Serialize for DyadicSequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.exponents().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        DyadicSequence::from_exponents(&v).map_err(serde::de::Error::custom)
    }
}

/// Unique positive root of `2 - 2^s - 2^{-Ns} = 0`.
pub fn hausdorff_dimension(n: u32) -> Result<f64> {
    Ok(1.0 - hausdorff_deficit(n)?)
}

/// `1 - s` for the root `s` of [`hausdorff_dimension`], computed to full
/// relative precision. The deficit decays like `2^-N`, so past `N` of about
/// 50 the dimension itself rounds to 1 in double precision while the
/// deficit still separates consecutive `N`.
pub fn hausdorff_deficit(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(GasketError::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    let ln2 = std::f64::consts::LN_2;
    // with s = 1 - d: 2 (1 - 2^-d) - 2^{-N (1 - d)}, negative near d = 0 and
    // positive just below d = 1 (where s = 0 is the trivial root)
    let g = |d: f64| -2.0 * (-d * ln2).exp_m1() - (-(n as f64) * (1.0 - d) * ln2).exp();
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-9);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A finite word over {1, 2}, ordered by length and then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<u8>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if letters.iter().any(|&l| l != 1 && l != 2) {
            return Err(GasketError::InvalidWord(format!("{letters:?}")));
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn child(&self, letter: u8) -> Word {
        let mut l = self.letters.clone();
        l.push(letter);
        Word { letters: l }
    }

    pub fn parent(&self) -> Word {
        let mut l = self.letters.clone();
        l.pop();
        Word { letters: l }
    }

    /// The word with its last letter flipped.
    pub fn sibling(&self) -> Word {
        let mut l = self.letters.clone();
        if let Some(x) = l.last_mut() {
            *x = 3 - *x;
        }
        Word { letters: l }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.letters.starts_with(&self.letters)
    }

    /// All words of length `m` in lexicographic order (index = binary value).
    pub fn all_of_length(m: usize) -> Vec<Word> {
        (0..1usize << m).map(|i| Word::from_index(i, m)).collect()
    }

    pub fn from_index(i: usize, m: usize) -> Word {
        Word { letters: (0..m).map(|k| 1 + ((i >> (m - 1 - k)) & 1) as u8).collect() }
    }

    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, &l| (acc << 1) | (l as usize - 1))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = GasketError;
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                _ => Err(GasketError::InvalidWord(s.to_string())),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word { letters })
    }
}

/// A cell `F_w(SG)` addressed by a string over {0,1,2}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CellAddress {
    letters: Vec<u8>,
}

impl CellAddress {
    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if letters.iter().any(|&l| l > 2) {
            return Err(GasketError::InvalidWord(format!("{letters:?}")));
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn then(&self, more: &[u8]) -> CellAddress {
        let mut l = self.letters.clone();
        l.extend_from_slice(more);
        CellAddress { letters: l }
    }

    pub fn cell(&self) -> Cell {
        self.letters.iter().fold(Cell::ROOT, |c, &i| c.child(i))
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for CellAddress {
    type Err = GasketError;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(CellAddress::default());
        }
        let letters = s
            .split(',')
            .map(|t| t.trim().parse::<u8>().map_err(|_| GasketError::InvalidWord(s.to_string())))
            .collect::<Result<Vec<u8>>>()?;
        CellAddress::new(letters)
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn parse_specs() {
        use super::DyadicSequence as S;
        assert_eq!(S::parse_spec("1.0", Some(4)).unwrap(), S::periodic(&[1], 4).unwrap());
        assert_eq!(S::parse_spec("1,3,5,7", None).unwrap().exponents(), vec![1, 3, 5, 7]);
        assert_eq!(S::parse_spec("seq:2", None).unwrap().exponents(), vec![2]);
        assert_eq!(S::parse_spec("arith:1,2", Some(3)).unwrap().exponents(), vec![1, 3, 5]);
        assert_eq!(S::parse_spec("periodic:1,2", Some(4)).unwrap().exponents(), vec![1, 3, 4, 6]);
        assert_eq!(S::parse_spec("0.625", None).unwrap().exponents(), vec![1, 3]);
        for bad in ["", "abc", "arith:1", "3,1", "1.5", "periodic:0"] {
            assert!(S::parse_spec(bad, None).is_err(), "{bad}");
        }
    }

    use super::*;

    fn seq(v: &[u32]) -> DyadicSequence {
        DyadicSequence::from_exponents(v).unwrap()
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(DyadicSequence::from_value(0.75, 2).unwrap().exponents(), vec![1, 2]);
        assert_eq!(DyadicSequence::from_value(1.0, 5).unwrap().exponents(), vec![1, 2, 3, 4, 5]);
        let s = DyadicSequence::from_value(0.65625, 4).unwrap();
        assert_eq!(s.exponents(), vec![1, 3, 5]);
        assert_eq!(s.depth(), 3);
        assert!(DyadicSequence::from_value(0.0, 3).is_err());
        assert!(DyadicSequence::from_value(1.5, 3).is_err());
    }

    #[test]
    fn invalid_exponents_rejected() {
        assert!(DyadicSequence::from_exponents(&[2, 2]).is_err());
        assert!(DyadicSequence::from_exponents(&[0, 1]).is_err());
        assert!(DyadicSequence::from_exponents(&[]).is_err());
    }

    #[test]
    fn shift_examples() {
        let one = DyadicSequence::periodic(&[1], 6).unwrap();
        assert_eq!(one.shift_normalized().unwrap().exponents(), vec![1, 2, 3, 4, 5]);
        assert_eq!(seq(&[1, 3, 5, 7]).shift_normalized().unwrap().exponents(), vec![2, 4, 6]);
        let s = seq(&[2, 3, 7, 8]).shift_normalized().unwrap().shift_normalized().unwrap();
        assert_eq!(s.exponents(), vec![4, 5]);
        assert!(seq(&[3]).shift_normalized().is_err());
    }

    #[test]
    fn shift_of_periodic_rotates_cycle() {
        let s = DyadicSequence::with_cycle(&[2], &[1, 3], 8).unwrap();
        let e = s.exponents();
        for m in 0..5 {
            let y = s.shifted(m).unwrap();
            let expected: Vec<u32> = e[m..].iter().map(|n| n - if m == 0 { 0 } else { e[m - 1] }).collect();
            assert_eq!(y.exponents(), expected, "m = {m}");
        }
    }

    #[test]
    fn tilde_f_examples() {
        let one = DyadicSequence::periodic(&[1], 8).unwrap();
        assert_eq!(one.tilde_f(&"1".parse().unwrap()).unwrap().to_string(), "1");
        assert_eq!(seq(&[2, 3]).tilde_f(&"21".parse().unwrap()).unwrap().to_string(), "0,2,1");
        assert_eq!(seq(&[1, 3]).tilde_f(&"12".parse().unwrap()).unwrap().to_string(), "1,0,2");
        assert!(seq(&[1, 3]).tilde_f(&"121".parse().unwrap()).is_err());
    }

    #[test]
    fn tilde_tilde_f_examples() {
        let s = seq(&[2, 4, 5]);
        assert_eq!(s.tilde_tilde_f(&"1".parse().unwrap()).unwrap().to_string(), "0,0");
        assert_eq!(s.tilde_tilde_f(&"21".parse().unwrap()).unwrap().to_string(), "0,2,0,0");
    }

    #[test]
    fn nonconsecutive_examples() {
        assert_eq!(seq(&[1, 3, 5, 7]).nonconsecutive_bound(), Some(2));
        assert_eq!(seq(&[1, 2, 4, 5, 8]).nonconsecutive_bound(), Some(3));
        assert_eq!(seq(&[1, 2, 3, 4]).nonconsecutive_bound(), None);
        assert_eq!(DyadicSequence::arithmetic(1, 2, 4).unwrap().nonconsecutive_bound(), Some(2));
        assert_eq!(DyadicSequence::periodic(&[1], 4).unwrap().nonconsecutive_bound(), None);
        assert_eq!(DyadicSequence::periodic(&[1, 1, 3], 4).unwrap().nonconsecutive_bound(), Some(4));
    }

    #[test]
    fn hausdorff_examples() {
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).log2();
        assert!((hausdorff_dimension(2).unwrap() - golden).abs() < 1e-10);
        let s50 = hausdorff_dimension(50).unwrap();
        assert!(s50 > 0.999 && s50 < 1.0);
        for n in 2..=10 {
            let s = hausdorff_dimension(n).unwrap();
            assert!((2.0 - s.exp2() - (-(n as f64) * s).exp2()).abs() < 1e-10);
        }
        assert!(hausdorff_dimension(1).is_err());
    }

    #[test]
    fn word_order_and_parse() {
        let w: Word = "12".parse().unwrap();
        assert_eq!(w.to_string(), "12");
        assert_eq!(w.sibling().to_string(), "11");
        assert!("13".parse::<Word>().is_err());
        let mut v = [Word::from_index(1, 2), Word::empty(), Word::from_index(0, 1)];
        v.sort();
        assert_eq!(v.iter().map(|w| w.to_string()).collect::<Vec<_>>(), vec!["", "1", "12"]);
        for m in 0..4 {
            for (i, w) in Word::all_of_length(m).iter().enumerate() {
                assert_eq!(w.index(), i);
            }
        }
    }

    #[test]
    fn sequence_json_round_trip() {
        let s = seq(&[1, 3, 4]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "[1,3,4]");
        let back: DyadicSequence = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    proptest::proptest! {
        #[test]
        fn expansion_round_trip(x in 1e-6f64..1.0, k in 1usize..30) {
            let s = DyadicSequence::from_value(x, k).unwrap();
            let sum = s.partial_sum(s.depth());
            let last = s.n(s.depth());
            proptest::prop_assert!(x - sum >= 0.0);
            proptest::prop_assert!(x - sum <= 0.5f64.powi(last as i32));
        }

        #[test]
        fn tilde_f_letters(gaps in proptest::collection::vec(1u32..4, 1..6), bits in 0usize..64) {
            let s = DyadicSequence::with_cycle(&gaps, &[2], 8).unwrap();
            let m = gaps.len();
            let w = Word::from_index(bits % (1 << m), m);
            let a = s.tilde_f(&w).unwrap();
            proptest::prop_assert_eq!(a.len() as u32, s.n(m));
            for (i, l) in a.letters().iter().enumerate() {
                let pos = (1..=m).find(|&k| s.n(k) as usize == i + 1);
                match pos {
                    Some(k) => proptest::prop_assert_eq!(*l, w.letters()[k - 1]),
                    None => proptest::prop_assert_eq!(*l, 0),
                }
            }
        }

        #[test]
        fn equal_gap_sequence_is_shift_fixed(d in 1u32..5, k in 2usize..10) {
            let s = DyadicSequence::arithmetic(d, d, k).unwrap();
            let y = s.shift_normalized().unwrap();
            proptest::prop_assert_eq!(y.exponents(), s.with_depth(k - 1).unwrap().exponents());
        }
    }

    #[test]
    fn hausdorff_strictly_increasing() {
        let mut prev = f64::INFINITY;
        for n in 2..=60 {
            let d = hausdorff_deficit(n).unwrap();
            assert!(d < prev, "N = {n}");
            prev = d;
        }
    }
}

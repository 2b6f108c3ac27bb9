//! Bit arrays, number sets, truth tables and sampling sets.
//!
//! Points of `B^n` are carried as `u64` indices. The bit string
//! `b_1 b_2 ... b_n` maps to the index whose most significant of the low
//! `n` bits is `b_1`, so tables enumerate points in ascending binary order
//! and position `i` of a string is bit `n - 1 - i` of the index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::*;

/// Longest accepted bit array.
pub const MAX_BIT_ARRAY_LEN: usize = 1 << 20;
/// Largest arity that may be tabulated.
pub const MAX_TABLE_ARITY: u32 = 20;
/// Largest arity of a sampling set (points must fit a `u64`).
pub const MAX_POINT_ARITY: u32 = 63;

/// Bit `i` (string position) of a point of arity `n`.
#[inline]
pub fn point_bit(point: u64, arity: u32, i: u32) -> bool {
    (point >> (arity - 1 - i)) & 1 == 1
}

/// Renders a point as an `arity`-character `0`/`1` string.
pub fn point_to_string(point: u64, arity: u32) -> String {
    (0..arity)
        .map(|i| if point_bit(point, arity, i) { '1' } else { '0' })
        .collect()
}

/// Parses a `0`/`1` string into a point index.
pub fn parse_point(s: &str) -> Result<(u64, u32)> {
    let s = s.trim();
    if s.len() > MAX_POINT_ARITY as usize {
        return Err(Error::Capacity(format!(
            "point of length {} exceeds {MAX_POINT_ARITY}",
            s.len()
        )));
    }
    let mut v = 0u64;
    for c in s.chars() {
        v = (v << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::Parse(format!("unexpected bit character {other:?}"))),
            };
    }
    Ok((v, s.len() as u32))
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// An ordered bit string of fixed length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitArray {
    bits: Vec<bool>,
}

impl BitArray {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() || bits.len() > MAX_BIT_ARRAY_LEN {
            return Err(Error::Capacity(format!(
                "bit array length {} outside 1..={MAX_BIT_ARRAY_LEN}",
                bits.len()
            )));
        }
        Ok(Self { bits })
    }

    /// The `len`-bit array whose ascending-order index is `index`.
    pub fn from_index(index: u64, len: u32) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(Error::Capacity(format!(
                "cannot index a bit array of length {len}"
            )));
        }
        Self::new((0..len).map(|i| point_bit(index, len, i)).collect())
    }

    /// Ascending-order index, when the array fits in 64 bits.
    pub fn to_index(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    /// Big-endian value of `bits[start..start+width]`.
    fn read(&self, start: usize, width: usize) -> u64 {
        self.bits[start..start + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Concatenates the `k`-bit big-endian encodings of `values`.
    pub fn encode_numbers(values: &[u64], k: u32) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(Error::Domain(format!(
                "bits per number must be in 1..=64, got {k}"
            )));
        }
        let mut bits = Vec::with_capacity(values.len() * k as usize);
        for &v in values {
            if v > low_mask(k) {
                return Err(Error::Range(format!("{v} does not fit in {k} bits")));
            }
            bits.extend((0..k).rev().map(|j| (v >> j) & 1 == 1));
        }
        Self::new(bits)
    }
}

impl fmt::Display for BitArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitArray {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

impl TryFrom<String> for BitArray {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BitArray> for String {
    fn from(b: BitArray) -> String {
        b.to_string()
    }
}

/// An ordered list of non-negative integers with a declared upper bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "NumberSetRepr")]
pub struct NumberSet {
    values: Vec<u64>,
    range_bound: u64,
}

#[derive(Deserialize)]
struct NumberSetRepr {
    values: Vec<u64>,
    range_bound: u64,
}

impl TryFrom<NumberSetRepr> for NumberSet {
    type Error = Error;

    fn try_from(r: NumberSetRepr) -> Result<Self> {
        NumberSet::new(r.values, r.range_bound)
    }
}

impl NumberSet {
    pub fn new(values: Vec<u64>, range_bound: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain(
                "a number set needs at least one value".into(),
            ));
        }
        if let Some(v) = values.iter().find(|&&v| v > range_bound) {
            return Err(Error::Range(format!(
                "{v} exceeds range bound {range_bound}"
            )));
        }
        Ok(Self {
            values,
            range_bound,
        })
    }

    /// Uses the largest value as the range bound.
    pub fn from_values(values: Vec<u64>) -> Result<Self> {
        let m = values.iter().copied().max().unwrap_or(0);
        Self::new(values, m)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn range_bound(&self) -> u64 {
        self.range_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u128 {
        self.values.iter().map(|&v| v as u128).sum()
    }
}

/// Cuts `x` left to right into `n` big-endian `k`-bit numbers.
pub fn cut_bits(x: &BitArray, k: u32, n: u32) -> Result<NumberSet> {
    if k == 0 || n == 0 {
        return Err(Error::Dimension(format!(
            "k and n must be positive (k={k}, n={n})"
        )));
    }
    if k > 64 {
        return Err(Error::Capacity(format!("{k}-bit numbers exceed 64 bits")));
    }
    if x.len() as u64 != k as u64 * n as u64 {
        return Err(Error::Dimension(format!(
            "bit array has length {}, expected k*n = {}",
            x.len(),
            k as u64 * n as u64
        )));
    }
    let values = (0..n as usize)
        .map(|i| x.read(i * k as usize, k as usize))
        .collect();
    NumberSet::new(values, low_mask(k))
}

/// Fast path of [`cut_bits`] for a point index with `k * n <= 64`.
#[inline]
pub fn cut_index(point: u64, k: u32, n: u32) -> Vec<u64> {
    let mask = low_mask(k);
    (0..n)
        .map(|i| (point >> ((n - 1 - i) * k)) & mask)
        .collect()
}

/// Result of the variable-length cut: `k = floor(sqrt(l))`, and `n` numbers
/// of which the last may be shorter than `k` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneralCut {
    pub k: u32,
    pub n: u32,
    pub numbers: NumberSet,
}

/// Integer square root (floor).
pub fn isqrt(l: u64) -> u64 {
    let mut r = (l as f64).sqrt() as u64;
    while r * r > l {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= l {
        r += 1;
    }
    r
}

/// Cuts a bit array of any length `l > 2` into numbers of
/// `floor(sqrt(l))` bits, keeping a shorter trailing number when the
/// length is not a multiple.
pub fn cut_bits_general(x: &BitArray) -> Result<GeneralCut> {
    let l = x.len();
    if l <= 2 {
        return Err(Error::Domain(format!(
            "general cut needs length > 2, got {l}"
        )));
    }
    let k = isqrt(l as u64) as usize;
    if k > 64 {
        return Err(Error::Capacity(format!("{k}-bit numbers exceed 64 bits")));
    }
    let full = l / k;
    let mut values: Vec<u64> = (0..full).map(|i| x.read(i * k, k)).collect();
    let rest = l - full * k;
    if rest > 0 {
        values.push(x.read(full * k, rest));
    }
    let n = values.len() as u32;
    Ok(GeneralCut {
        k: k as u32,
        n,
        numbers: NumberSet::new(values, low_mask(k as u32))?,
    })
}

/// Bit-packed table of a boolean function on `B^arity`, `arity <= 20`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TruthTableRepr", into = "TruthTableRepr")]
pub struct TruthTable {
    arity: u32,
    words: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct TruthTableRepr {
    arity: u32,
    table: String,
}

impl TryFrom<TruthTableRepr> for TruthTable {
    type Error = Error;

    fn try_from(r: TruthTableRepr) -> Result<Self> {
        TruthTable::from_hex(r.arity, &r.table)
    }
}

impl From<TruthTable> for TruthTableRepr {
    fn from(t: TruthTable) -> Self {
        TruthTableRepr {
            arity: t.arity,
            table: t.to_hex(),
        }
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({}, {})", self.arity, self.to_hex())
    }
}

impl TruthTable {
    fn word_count(arity: u32) -> usize {
        (1usize << arity).div_ceil(64)
    }

    /// The all-zero table.
    pub fn zeros(arity: u32) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::Capacity(format!(
                "arity {arity} exceeds table cap {MAX_TABLE_ARITY}"
            )));
        }
        Ok(Self {
            arity,
            words: vec![0; Self::word_count(arity)],
        })
    }

    /// Builds a table from packed words, clearing bits beyond `2^arity`.
    pub fn from_words(arity: u32, mut words: Vec<u64>) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::Capacity(format!(
                "arity {arity} exceeds table cap {MAX_TABLE_ARITY}"
            )));
        }
        if words.len() != Self::word_count(arity) {
            return Err(Error::Dimension(format!(
                "expected {} words for arity {arity}, got {}",
                Self::word_count(arity),
                words.len()
            )));
        }
        if arity < 6 {
            words[0] &= low_mask(1 << arity);
        }
        Ok(Self { arity, words })
    }

    pub fn from_bools(arity: u32, values: &[bool]) -> Result<Self> {
        let mut t = Self::zeros(arity)?;
        if values.len() != t.len() {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                t.len(),
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            t.set(i as u64, v);
        }
        Ok(t)
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    /// Number of entries, `2^arity`.
    pub fn len(&self) -> usize {
        1usize << self.arity
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, point: u64) -> bool {
        (self.words[(point >> 6) as usize] >> (point & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, point: u64, value: bool) {
        let w = &mut self.words[(point >> 6) as usize];
        if value {
            *w |= 1 << (point & 63);
        } else {
            *w &= !(1 << (point & 63));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Points where the table is 1, ascending.
    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len() as u64).filter(move |&p| self.get(p))
    }

    /// Hex encoding, lowest index first: nibble `i` holds entries
    /// `4i..4i+3`, entry `4i + j` in bit `j`.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len().div_ceil(4);
        (0..nibbles)
            .map(|i| {
                let v = (self.words[i / 16] >> ((i % 16) * 4)) & 0xf;
                char::from_digit(v as u32, 16).unwrap_or('0')
            })
            .collect()
    }

    pub fn from_hex(arity: u32, s: &str) -> Result<Self> {
        let mut t = Self::zeros(arity)?;
        let nibbles = t.len().div_ceil(4);
        let s = s.trim();
        if s.len() != nibbles {
            return Err(Error::Dimension(format!(
                "arity {arity} needs {nibbles} hex digits, got {}",
                s.len()
            )));
        }
        for (i, c) in s.chars().enumerate() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?
                as u64;
            t.words[i / 16] |= v << ((i % 16) * 4);
        }
        if arity < 2 && t.words[0] >> (1 << arity) != 0 {
            return Err(Error::Range(
                "hex digit sets entries beyond the table".into(),
            ));
        }
        Ok(t)
    }
}

/// Tabulates `eval` over every point of `B^arity`.
pub fn table_from_evaluator<F>(arity: u32, eval: F) -> Result<TruthTable>
where
    F: Fn(u64) -> bool + Sync,
{
    let template = TruthTable::zeros(arity)?;
    let len = template.len() as u64;
    let words: Vec<u64> = (0..template.words.len())
        .into_par_iter()
        .map(|w| {
            let base = w as u64 * 64;
            let mut word = 0u64;
            for lane in 0..64u64 {
                let p = base + lane;
                if p < len && eval(p) {
                    word |= 1 << lane;
                }
            }
            word
        })
        .collect();
    TruthTable::from_words(arity, words)
}

/// Points of `B^arity` paired with assigned bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SamplingSetRepr", into = "SamplingSetRepr")]
pub struct SamplingSet {
    arity: u32,
    points: BTreeMap<u64, bool>,
}

#[derive(Serialize, Deserialize)]
struct SampleRepr {
    x: String,
    v: u8,
}

#[derive(Serialize, Deserialize)]
struct SamplingSetRepr {
    arity: u32,
    points: Vec<SampleRepr>,
}

impl TryFrom<SamplingSetRepr> for SamplingSet {
    type Error = Error;

    fn try_from(r: SamplingSetRepr) -> Result<Self> {
        let mut s = SamplingSet::new(r.arity)?;
        for p in r.points {
            let (x, len) = parse_point(&p.x)?;
            if len != r.arity {
                return Err(Error::Arity(format!(
                    "point {:?} has {len} bits, expected {}",
                    p.x, r.arity
                )));
            }
            let v = match p.v {
                0 => false,
                1 => true,
                other => return Err(Error::Parse(format!("assigned value {other} is not a bit"))),
            };
            s.insert(x, v)?;
        }
        Ok(s)
    }
}

impl From<SamplingSet> for SamplingSetRepr {
    fn from(s: SamplingSet) -> Self {
        SamplingSetRepr {
            arity: s.arity,
            points: s
                .points
                .iter()
                .map(|(&x, &v)| SampleRepr {
                    x: point_to_string(x, s.arity),
                    v: v as u8,
                })
                .collect(),
        }
    }
}

impl SamplingSet {
    pub fn new(arity: u32) -> Result<Self> {
        if arity == 0 || arity > MAX_POINT_ARITY {
            return Err(Error::Capacity(format!(
                "sampling arity {arity} outside 1..={MAX_POINT_ARITY}"
            )));
        }
        Ok(Self {
            arity,
            points: BTreeMap::new(),
        })
    }

    /// Adds a point; a point may appear only once.
    pub fn insert(&mut self, point: u64, value: bool) -> Result<()> {
        if point > low_mask(self.arity) {
            return Err(Error::Arity(format!(
                "point {point} is outside B^{}",
                self.arity
            )));
        }
        if self.points.insert(point, value).is_some() {
            return Err(Error::Construction(format!(
                "point {} appears twice",
                point_to_string(point, self.arity)
            )));
        }
        Ok(())
    }

    /// The sampling of `f` on `points` (duplicates in `points` are an error).
    pub fn of_function(points: &[u64], f: &TruthTable) -> Result<Self> {
        let mut s = Self::new(f.arity().max(1))?;
        if f.arity() == 0 {
            return Err(Error::Arity("functions of arity 0 are not sampled".into()));
        }
        for &p in points {
            if p >= f.len() as u64 {
                return Err(Error::Arity(format!(
                    "point {p} is outside B^{}",
                    f.arity()
                )));
            }
            s.insert(p, f.get(p))?;
        }
        Ok(s)
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, point: u64) -> Option<bool> {
        self.points.get(&point).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, bool)> + '_ {
        self.points.iter().map(|(&p, &v)| (p, v))
    }

    pub fn points(&self) -> Vec<u64> {
        self.points.keys().copied().collect()
    }

    /// True when `t` agrees with every sample.
    pub fn fits(&self, t: &TruthTable) -> bool {
        t.arity() == self.arity && self.iter().all(|(p, v)| t.get(p) == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitArray {
        s.parse().unwrap()
    }

    #[test]
    fn cut_worked_examples() {
        let c = cut_bits(&bits("110101101001"), 2, 6).unwrap();
        assert_eq!(c.values(), &[3, 1, 1, 2, 2, 1]);
        assert_eq!(c.range_bound(), 3);
        assert_eq!(
            cut_bits(&bits("000000"), 2, 3).unwrap().values(),
            &[0, 0, 0]
        );
        assert_eq!(
            cut_bits(&bits("110101101000"), 3, 4).unwrap().values(),
            &[6, 5, 5, 0]
        );
    }

    #[test]
    fn cut_length_mismatch() {
        assert!(matches!(
            cut_bits(&bits("11010"), 2, 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn general_cut_examples() {
        let g = cut_bits_general(&bits("110101101000")).unwrap();
        assert_eq!((g.k, g.n), (3, 4));
        assert_eq!(g.numbers.values(), &[6, 5, 5, 0]);
        let g = cut_bits_general(&bits("1001011010111")).unwrap();
        assert_eq!((g.k, g.n), (3, 5));
        assert_eq!(g.numbers.values(), &[4, 5, 5, 3, 1]);
        let g = cut_bits_general(&bits("1111")).unwrap();
        assert_eq!((g.k, g.n), (2, 2));
        assert_eq!(g.numbers.values(), &[3, 3]);
        assert!(matches!(
            cut_bits_general(&bits("10")),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tables_from_evaluators() {
        let id = table_from_evaluator(1, |p| p == 1).unwrap();
        assert_eq!(id.ones().collect::<Vec<_>>(), vec![1]);
        let and = table_from_evaluator(2, |p| p == 3).unwrap();
        assert_eq!(
            (0..4).map(|p| and.get(p)).collect::<Vec<_>>(),
            vec![false, false, false, true]
        );
        assert!(matches!(
            table_from_evaluator(21, |_| true),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn hex_is_little_index_first() {
        let and = table_from_evaluator(2, |p| p == 3).unwrap();
        assert_eq!(and.to_hex(), "8");
        let t = table_from_evaluator(3, |p| p == 0 || p == 4).unwrap();
        assert_eq!(t.to_hex(), "11");
        assert_eq!(TruthTable::from_hex(3, "11").unwrap(), t);
        assert!(TruthTable::from_hex(1, "4").is_err());
    }

    #[test]
    fn sampling_rejects_duplicates() {
        let mut s = SamplingSet::new(4).unwrap();
        s.insert(0b0100, true).unwrap();
        assert!(s.insert(0b0100, false).is_err());
        assert!(s.insert(16, false).is_err());
    }

    #[test]
    fn sampling_json_shape() {
        let mut s = SamplingSet::new(4).unwrap();
        s.insert(0b0101, true).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"arity":4,"points":[{"x":"0101","v":1}]}"#);
        let back: SamplingSet = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn number_set_json_checks_bound() {
        let n: NumberSet = serde_json::from_str(r#"{"values":[1,2],"range_bound":3}"#).unwrap();
        assert_eq!(n.values(), &[1, 2]);
        assert!(serde_json::from_str::<NumberSet>(r#"{"values":[5],"range_bound":3}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cut_inverts_encoding(k in 1u32..8, values in prop::collection::vec(0u64..256, 1..8)) {
                let values: Vec<u64> = values.into_iter().map(|v| v & low_mask(k)).collect();
                let x = BitArray::encode_numbers(&values, k).unwrap();
                let cut = cut_bits(&x, k, values.len() as u32).unwrap();
                prop_assert_eq!(cut.values(), &values[..]);
                prop_assert_eq!(cut.range_bound(), low_mask(k));
            }

            #[test]
            fn general_cut_on_squares_matches_plain(n in 2u32..7, seed in any::<u64>()) {
                let len = n * n;
                let x = BitArray::from_index(seed & low_mask(len), len).unwrap();
                let g = cut_bits_general(&x).unwrap();
                prop_assert_eq!((g.k, g.n), (n, n));
                prop_assert_eq!(g.numbers, cut_bits(&x, n, n).unwrap());
            }

            #[test]
            fn index_cut_agrees(k in 1u32..5, n in 1u32..5, seed in any::<u64>()) {
                let len = k * n;
                let p = seed & low_mask(len);
                let x = BitArray::from_index(p, len).unwrap();
                prop_assert_eq!(cut_index(p, k, n), cut_bits(&x, k, n).unwrap().values().to_vec());
                prop_assert_eq!(x.to_index(), Some(p));
            }

            #[test]
            fn tabulation_is_repeatable(arity in 0u32..10, salt in any::<u64>()) {
                let f = |p: u64| (p.wrapping_mul(salt | 1) >> 7) & 1 == 1;
                prop_assert_eq!(table_from_evaluator(arity, f).unwrap(), table_from_evaluator(arity, f).unwrap());
            }
        }
    }
}

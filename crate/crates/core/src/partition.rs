//! Partition vectors and the partition functions built on them.
//!
//! A partition vector of length `N` is a sign vector with a leading `+1`
//! that is not all `+1`; there are `2^(N-1) - 1` of them. Internally a
//! vector is kept as its *minus mask*: bit `N - 1 - i` is set when
//! component `i` is `-1`. The canonical order of the space is ascending
//! minus mask, which is lexicographic order with `+1 < -1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{cut_bits, cut_bits_general, cut_index, BitArray, NumberSet, TruthTable};
use crate::error::{Error, Result};
use crate::par::*;

/// Largest length for which the partition vector space is traversed.
pub const MAX_PV_LEN: u32 = 24;
/// Largest `k * n` for which a witness chain is materialised.
pub const MAX_CHAIN_BITS: u32 = 20;

/// A sign vector `p` with `p_1 = +1`, not all `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PartitionVector {
    len: u32,
    minus: u64,
}

impl PartitionVector {
    /// From signs, `true` meaning `+1`.
    pub fn new(signs: &[bool]) -> Result<Self> {
        let len = signs.len() as u32;
        let minus = signs
            .iter()
            .fold(0u64, |acc, &plus| (acc << 1) | (!plus) as u64);
        Self::from_minus_mask(len, minus)
    }

    /// From a `+1`/`-1` slice.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let plus = signs
            .iter()
            .map(|&s| match s {
                1 => Ok(true),
                -1 => Ok(false),
                other => Err(Error::Domain(format!("sign {other} is not +1 or -1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&plus)
    }

    pub fn from_minus_mask(len: u32, minus: u64) -> Result<Self> {
        if !(2..=63).contains(&len) {
            return Err(Error::Domain(format!(
                "partition vector length {len} outside 2..=63"
            )));
        }
        if minus >> (len - 1) != 0 {
            return Err(Error::Domain("first component must be +1".into()));
        }
        if minus == 0 {
            return Err(Error::Domain(
                "the all-(+1) vector does not represent a partition".into(),
            ));
        }
        Ok(Self { len, minus })
    }

    /// Boolean form: bit `i` (string order) is 1 for `+1`, 0 for `-1`.
    pub fn from_boolean(len: u32, bits: u64) -> Result<Self> {
        if len == 0 || len > 63 {
            return Err(Error::Domain(format!("length {len} outside 1..=63")));
        }
        Self::from_minus_mask(len, !bits & ((1u64 << len) - 1))
    }

    pub fn to_boolean(&self) -> u64 {
        !self.minus & ((1u64 << self.len) - 1)
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn minus_mask(&self) -> u64 {
        self.minus
    }

    /// `+1` or `-1` for component `i` (0-based).
    pub fn sign(&self, i: u32) -> i8 {
        if self.is_minus(i) {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn is_minus(&self, i: u32) -> bool {
        (self.minus >> (self.len - 1 - i)) & 1 == 1
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.sign(i)).collect()
    }

    pub fn plus_count(&self) -> u32 {
        self.len - self.minus.count_ones()
    }
}

impl fmt::Display for PartitionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_minus(i) { "-" } else { "+" })?;
        }
        Ok(())
    }
}

impl FromStr for PartitionVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .trim()
            .chars()
            .filter(|&c| c != '\u{200b}')
            .map(|c| match c {
                '+' => Ok(true),
                // ASCII hyphen plus the usual typographic dashes
                '-' | '\u{2212}' | '\u{2013}' | '\u{2014}' => Ok(false),
                other => Err(Error::Parse(format!("unexpected sign character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&signs)
    }
}

impl TryFrom<String> for PartitionVector {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PartitionVector> for String {
    fn from(p: PartitionVector) -> String {
        p.to_string()
    }
}

/// Sum of `p_i * v_i` over a raw value slice of the same length.
#[inline]
pub fn signed_sum_values(p: &PartitionVector, values: &[u64]) -> i128 {
    let n = p.len;
    values.iter().enumerate().fold(0i128, |acc, (i, &v)| {
        if (p.minus >> (n - 1 - i as u32)) & 1 == 1 {
            acc - v as i128
        } else {
            acc + v as i128
        }
    })
}

/// `<p, Omega>`; zero exactly when `p` splits `Omega` into equal halves.
pub fn signed_sum(p: &PartitionVector, omega: &NumberSet) -> Result<i128> {
    if p.len() as usize != omega.len() {
        return Err(Error::Dimension(format!(
            "vector length {} vs {} numbers",
            p.len(),
            omega.len()
        )));
    }
    Ok(signed_sum_values(p, omega.values()))
}

/// All admissible vectors of one length, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionVectorSpace {
    n: u32,
    vectors: Vec<PartitionVector>,
}

impl PartitionVectorSpace {
    /// Number of admissible vectors of length `n`.
    pub fn size(n: u32) -> u64 {
        (1u64 << (n - 1)) - 1
    }

    /// Reorders the space; `vectors` must be a permutation of it.
    pub fn with_order(n: u32, vectors: Vec<PartitionVector>) -> Result<Self> {
        check_pv_len(n)?;
        if vectors.len() as u64 != Self::size(n) {
            return Err(Error::Dimension(format!(
                "order lists {} vectors, space has {}",
                vectors.len(),
                Self::size(n)
            )));
        }
        let mut seen = vec![false; Self::size(n) as usize + 1];
        for v in &vectors {
            if v.len() != n || seen[v.minus as usize] {
                return Err(Error::Construction(format!(
                    "order is not a permutation of PV_{n} (at {v})"
                )));
            }
            seen[v.minus as usize] = true;
        }
        Ok(Self { n, vectors })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PartitionVector] {
        &self.vectors
    }

    /// Short digest of the order, for reports.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.vectors {
            h.update(v.to_string().as_bytes());
            h.update(b",");
        }
        hex::encode(&h.finalize()[..8])
    }
}

fn check_pv_len(n: u32) -> Result<()> {
    if !(2..=MAX_PV_LEN).contains(&n) {
        return Err(Error::Capacity(format!(
            "partition vector length {n} outside 2..={MAX_PV_LEN}"
        )));
    }
    Ok(())
}

/// Every admissible vector of length `n`, in canonical order.
pub fn enumerate_pv(n: u32) -> Result<PartitionVectorSpace> {
    check_pv_len(n)?;
    let vectors = (1..1u64 << (n - 1))
        .map(|minus| PartitionVector { len: n, minus })
        .collect();
    Ok(PartitionVectorSpace { n, vectors })
}

/// Traverses the whole vector space looking for an equal split. Needs at
/// least two values; stops at the first zero sum.
pub fn exists_equal_partition(values: &[u64]) -> bool {
    let n = values.len();
    debug_assert!((2..=MAX_PV_LEN as usize).contains(&n));
    let total: u128 = values.iter().map(|&v| v as u128).sum();
    if total % 2 == 1 {
        return false;
    }
    let half = total / 2;
    // Minus masks range over subsets of positions 2..N, skipping the empty one.
    let tail = &values[1..];
    let m = tail.len();
    (1u64..1u64 << m).any(|mask| {
        let mut s = 0u128;
        for (j, &v) in tail.iter().enumerate() {
            if (mask >> (m - 1 - j)) & 1 == 1 {
                s += v as u128;
            }
        }
        s == half
    })
}

/// Partition function of integers with range bound `m`.
pub fn par_range(omega: &NumberSet, m: u64) -> Result<bool> {
    let n = omega.len() as u32;
    if !(3..=MAX_PV_LEN).contains(&n) {
        return Err(Error::Capacity(format!(
            "partition function needs 3..={MAX_PV_LEN} numbers, got {n}"
        )));
    }
    if let Some(v) = omega.values().iter().find(|&&v| v > m) {
        return Err(Error::Range(format!("{v} exceeds range bound {m}")));
    }
    Ok(exists_equal_partition(omega.values()))
}

/// Partition function of a `k*n`-bit array.
pub fn par_bits(x: &BitArray, k: u32, n: u32) -> Result<bool> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "partition function needs n >= 3, got {n}"
        )));
    }
    let omega = cut_bits(x, k, n)?;
    par_range(&omega, omega.range_bound())
}

/// Partition function on a point index of `B^{k n}` (`k * n <= 64`).
#[inline]
pub fn par_index(point: u64, k: u32, n: u32) -> bool {
    exists_equal_partition(&cut_index(point, k, n))
}

/// General partition function for any length above 2.
pub fn gpar(x: &BitArray) -> Result<bool> {
    let cut = cut_bits_general(x)?;
    check_pv_len(cut.n)?;
    Ok(exists_equal_partition(cut.numbers.values()))
}

fn check_subset(subset: &[PartitionVector], n: u32) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Domain(
            "sub-partition needs a non-empty vector set".into(),
        ));
    }
    if let Some(p) = subset.iter().find(|p| p.len() != n) {
        return Err(Error::Dimension(format!(
            "vector {p} does not have length {n}"
        )));
    }
    Ok(())
}

/// Sub-partition function: 1 when some vector of `subset` splits the cut.
pub fn spar(x: &BitArray, k: u32, n: u32, subset: &[PartitionVector]) -> Result<bool> {
    check_subset(subset, n)?;
    let omega = cut_bits(x, k, n)?;
    Ok(subset
        .iter()
        .any(|p| signed_sum_values(p, omega.values()) == 0))
}

/// Builds numbers in `1..2^N` that `p` splits equally and no other
/// admissible vector does.
///
/// The vector is first reduced to a block form `(+1 x J, -1 x (N-J))`
/// with `J <= N/2`: negate when it has more than `N/2` plus signs, then
/// move plus positions to the front (stably). The block vector gets
/// `2^N - 2^J - 2^(J-1) + 1, 2^(J-2), ..., 1` on its plus side and
/// `2^(N-1), ..., 2^J` on its minus side, and the numbers are moved back.
pub fn unique_omega(p: &PartitionVector) -> Result<NumberSet> {
    let n = p.len();
    if n <= 2 {
        return Err(Error::Domain(format!("needs length > 2, got {n}")));
    }
    let plus: Vec<bool> = (0..n).map(|i| !p.is_minus(i)).collect();
    let flip = p.plus_count() > n / 2;
    let block_plus: Vec<bool> = plus.iter().map(|&b| b != flip).collect();
    let j = block_plus.iter().filter(|&&b| b).count() as u32;

    let mut block = Vec::with_capacity(n as usize);
    block.push((1u64 << n) - (1u64 << j) - (1u64 << (j - 1)) + 1);
    block.extend((2..=j).map(|i| 1u64 << (j - i)));
    block.extend((1..=n - j).map(|i| 1u64 << (n - i)));

    let mut values = vec![0u64; n as usize];
    let (mut next_plus, mut next_minus) = (0usize, j as usize);
    for (pos, &is_plus) in block_plus.iter().enumerate() {
        if is_plus {
            values[pos] = block[next_plus];
            next_plus += 1;
        } else {
            values[pos] = block[next_minus];
            next_minus += 1;
        }
    }
    NumberSet::new(values, (1u64 << n) - 1)
}

/// Exhaustively checks that `p` is the only admissible vector with a zero
/// signed sum on `omega`.
pub fn verify_uniqueness(omega: &NumberSet, p: &PartitionVector) -> Result<bool> {
    if p.len() as usize != omega.len() {
        return Err(Error::Dimension(format!(
            "vector length {} vs {} numbers",
            p.len(),
            omega.len()
        )));
    }
    let space = enumerate_pv(p.len())?;
    if signed_sum_values(p, omega.values()) != 0 {
        return Ok(false);
    }
    let values = omega.values();
    Ok(!space
        .vectors()
        .par_iter()
        .any(|q| q != p && signed_sum_values(q, values) == 0))
}

/// The sets `Z`, `W` and `W_1 ⊆ ... ⊆ W_J` for one ordering of `PV_n`,
/// where `W_j` holds the points on which one of the first `j` vectors
/// gives a zero signed sum.
#[derive(Debug, Clone)]
pub struct WitnessChain {
    pub k: u32,
    pub n: u32,
    pub order: PartitionVectorSpace,
    /// Characteristic tables of `W_1 .. W_J`.
    pub w_sets: Vec<TruthTable>,
    pub z_set: TruthTable,
    pub w_set: TruthTable,
}

/// Serializable summary of a [`WitnessChain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessChainReport {
    pub k: u32,
    pub n: u32,
    pub order_fingerprint: String,
    pub order: Vec<PartitionVector>,
    pub w_sizes: Vec<u64>,
    pub z_size: u64,
    pub w_size: u64,
    /// Entry `j` (0-based) is true when `W_{j+2} \ W_{j+1}` is non-empty.
    pub strict: Vec<bool>,
    pub all_strict: bool,
}

impl WitnessChain {
    pub fn sizes(&self) -> Vec<u64> {
        self.w_sets.iter().map(|t| t.count_ones()).collect()
    }

    /// `strict[j]` tells whether `W_{j+2}` gains a point over `W_{j+1}`.
    pub fn strict_flags(&self) -> Vec<bool> {
        self.sizes().windows(2).map(|w| w[1] > w[0]).collect()
    }

    pub fn report(&self) -> WitnessChainReport {
        let strict = self.strict_flags();
        WitnessChainReport {
            k: self.k,
            n: self.n,
            order_fingerprint: self.order.fingerprint(),
            order: self.order.vectors().to_vec(),
            w_sizes: self.sizes(),
            z_size: self.z_set.count_ones(),
            w_size: self.w_set.count_ones(),
            all_strict: strict.iter().all(|&s| s),
            strict,
        }
    }
}

/// Computes the witness chain by brute force over `B^{k n}`.
pub fn witness_chain(k: u32, n: u32, order: &PartitionVectorSpace) -> Result<WitnessChain> {
    if order.n() != n {
        return Err(Error::Dimension(format!(
            "order is over PV_{}, expected PV_{n}",
            order.n()
        )));
    }
    if k == 0 || k * n > MAX_CHAIN_BITS {
        return Err(Error::Capacity(format!(
            "k*n = {} outside 1..={MAX_CHAIN_BITS}",
            k * n
        )));
    }
    let arity = k * n;
    let vectors = order.vectors();
    let points = 1u64 << arity;
    // first[x] = 1-based index of the first vector in the order that splits x, 0 if none
    let first: Vec<u32> = (0..points)
        .into_par_iter()
        .map(|x| {
            let values = cut_index(x, k, n);
            vectors
                .iter()
                .position(|p| signed_sum_values(p, &values) == 0)
                .map_or(0, |i| i as u32 + 1)
        })
        .collect();

    let mut w_sets = vec![TruthTable::zeros(arity)?; vectors.len()];
    let mut z_set = TruthTable::zeros(arity)?;
    for (x, &f) in first.iter().enumerate() {
        if f == 0 {
            z_set.set(x as u64, true);
        } else {
            for w in &mut w_sets[f as usize - 1..] {
                w.set(x as u64, true);
            }
        }
    }
    let w_set = w_sets
        .last()
        .cloned()
        .ok_or_else(|| Error::Domain("empty vector space".into()))?;
    Ok(WitnessChain {
        k,
        n,
        order: order.clone(),
        w_sets,
        z_set,
        w_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::table_from_evaluator;

    fn pv(s: &str) -> PartitionVector {
        s.parse().unwrap()
    }

    fn set(v: &[u64]) -> NumberSet {
        NumberSet::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn signed_sum_examples() {
        // printed as an equal split, but the literal sum is 3-1-1+2+2-1+2+2-4
        let p = PartitionVector::from_signs(&[1, -1, -1, 1, 1, -1, 1, 1, -1]).unwrap();
        assert_eq!(
            signed_sum(&p, &set(&[3, 1, 1, 2, 2, 1, 2, 2, 4])).unwrap(),
            4
        );
        let p = PartitionVector::from_signs(&[1, 1, 1, 1, 1, -1, -1, -1, -1]).unwrap();
        assert_eq!(
            signed_sum(&p, &set(&[3, 1, 1, 2, 2, 1, 2, 2, 4])).unwrap(),
            0
        );
        let p = PartitionVector::from_signs(&[1, -1, 1, -1, -1]).unwrap();
        assert_eq!(signed_sum(&p, &set(&[3, 1, 2, 4, 1])).unwrap(), -1);
        assert_eq!(signed_sum(&pv("+-"), &set(&[5, 5])).unwrap(), 0);
        assert!(matches!(
            signed_sum(&pv("+-"), &set(&[5, 5, 1])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn vector_invariants() {
        assert!(PartitionVector::from_signs(&[-1, 1, 1]).is_err());
        assert!(PartitionVector::from_signs(&[1, 1, 1]).is_err());
        assert!(PartitionVector::from_signs(&[1]).is_err());
        assert_eq!(pv("+--+-").to_string(), "+--+-");
        assert_eq!(pv("+−−").to_string(), "+--");
        let p = pv("+-+");
        assert_eq!(p.to_boolean(), 0b101);
        assert_eq!(PartitionVector::from_boolean(3, 0b101).unwrap(), p);
    }

    #[test]
    fn enumeration_small() {
        let s = enumerate_pv(3).unwrap();
        let got: Vec<String> = s.vectors().iter().map(|v| v.to_string()).collect();
        assert_eq!(got, vec!["++-", "+-+", "+--"]);
        assert_eq!(enumerate_pv(9).unwrap().count(), 255);
        let two = enumerate_pv(2).unwrap();
        assert_eq!(two.vectors(), &[pv("+-")]);
        assert!(matches!(enumerate_pv(25), Err(Error::Capacity(_))));
        assert!(matches!(enumerate_pv(1), Err(Error::Capacity(_))));
    }

    #[test]
    fn par_range_examples() {
        assert!(par_range(&set(&[3, 1, 1, 2, 2, 1, 2, 2, 4]), 4).unwrap());
        assert!(!par_range(&set(&[3, 1, 2, 4, 1]), 4).unwrap());
        assert!(!par_range(&set(&[3, 1, 2, 4, 12]), 12).unwrap());
        assert!(matches!(
            par_range(&set(&[3, 1, 9]), 4),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            par_range(&set(&[3, 3]), 4),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn par_bits_examples() {
        let x: BitArray = "110101101001".parse().unwrap();
        assert!(par_bits(&x, 2, 6).unwrap());
        let x: BitArray = "110101101000".parse().unwrap();
        assert!(!par_bits(&x, 2, 6).unwrap());
        for (k, n) in [(1, 3), (2, 3), (3, 5)] {
            let zero = BitArray::new(vec![false; (k * n) as usize]).unwrap();
            assert!(par_bits(&zero, k, n).unwrap());
        }
    }

    #[test]
    fn gpar_examples() {
        assert!(!gpar(&"110101101000".parse().unwrap()).unwrap());
        assert!(gpar(&"1001011010111".parse().unwrap()).unwrap());
        assert!(gpar(&"1111".parse().unwrap()).unwrap());
        assert!(gpar(&"11".parse().unwrap()).is_err());
    }

    #[test]
    fn spar_examples() {
        let sub = [pv("++-")];
        let x = BitArray::encode_numbers(&[1, 1, 2], 3).unwrap();
        assert!(spar(&x, 3, 3, &sub).unwrap());
        let x = BitArray::encode_numbers(&[1, 2, 2], 3).unwrap();
        assert!(!spar(&x, 3, 3, &sub).unwrap());
        assert!(spar(&x, 3, 3, &[]).is_err());
    }

    #[test]
    fn unique_omega_examples() {
        assert_eq!(unique_omega(&pv("+---")).unwrap().values(), &[14, 8, 4, 2]);
        assert_eq!(
            unique_omega(&pv("++---")).unwrap().values(),
            &[27, 1, 16, 8, 4]
        );
        let p = pv("+-+--");
        let omega = unique_omega(&p).unwrap();
        assert_eq!(omega.values(), &[27, 16, 1, 8, 4]);
        assert_eq!(signed_sum(&p, &omega).unwrap(), 0);
        assert!(verify_uniqueness(&omega, &p).unwrap());
        assert!(unique_omega(&pv("+-")).is_err());
    }

    #[test]
    fn unique_omega_flips_plus_heavy_vectors() {
        let p = pv("+++-");
        let omega = unique_omega(&p).unwrap();
        assert_eq!(signed_sum(&p, &omega).unwrap(), 0);
        assert!(verify_uniqueness(&omega, &p).unwrap());
    }

    #[test]
    fn uniqueness_examples() {
        assert!(verify_uniqueness(&set(&[3, 2, 2, 1, 6]), &pv("+++--")).unwrap());
        assert!(verify_uniqueness(&set(&[15, 8, 4, 2, 1]), &pv("+----")).unwrap());
        assert!(!verify_uniqueness(&set(&[3, 1, 1, 2, 1]), &pv("++---")).unwrap());
        assert!(verify_uniqueness(&set(&[6, 1, 3, 2, 2]), &pv("++---")).unwrap());
        // a zero entry lets its sign flip freely
        assert!(!verify_uniqueness(&set(&[2, 2, 0]), &pv("+-+")).unwrap());
    }

    #[test]
    fn table_of_par33_matches_pointwise() {
        let t = table_from_evaluator(9, |x| par_index(x, 3, 3)).unwrap();
        let space = enumerate_pv(3).unwrap();
        for x in 0..512u64 {
            let values = cut_index(x, 3, 3);
            let brute = space
                .vectors()
                .iter()
                .any(|p| signed_sum_values(p, &values) == 0);
            assert_eq!(t.get(x), brute);
            let bits = BitArray::from_index(x, 9).unwrap();
            assert_eq!(t.get(x), par_bits(&bits, 3, 3).unwrap());
        }
    }

    #[test]
    fn chain_k3_n3_is_strict() {
        let c = witness_chain(3, 3, &enumerate_pv(3).unwrap()).unwrap();
        assert_eq!(c.strict_flags(), vec![true, true]);
        assert_eq!(c.w_sets[2], c.w_set);
        assert_eq!(c.z_set.count_ones() + c.w_set.count_ones(), 512);
    }

    #[test]
    fn chain_k1_n3_is_not_strict() {
        let c = witness_chain(1, 3, &enumerate_pv(3).unwrap()).unwrap();
        assert_eq!(c.sizes(), vec![3, 4, 4]);
        assert_eq!(c.strict_flags(), vec![true, false]);
        assert!(witness_chain(5, 5, &enumerate_pv(5).unwrap()).is_err());
    }

    #[test]
    fn order_must_be_permutation() {
        let v = enumerate_pv(3).unwrap().vectors().to_vec();
        assert!(PartitionVectorSpace::with_order(3, vec![v[0], v[0], v[1]]).is_err());
        assert!(PartitionVectorSpace::with_order(3, vec![v[2], v[0], v[1]]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_pv() -> impl Strategy<Value = PartitionVector> {
            (3u32..10).prop_flat_map(|n| {
                (1u64..(1 << (n - 1)))
                    .prop_map(move |m| PartitionVector::from_minus_mask(n, m).unwrap())
            })
        }

        proptest! {
            #[test]
            fn signed_sum_is_positive_minus_negative(p in arb_pv(), seed in prop::collection::vec(0u64..1000, 9)) {
                let values = &seed[..p.len() as usize];
                let (mut pos, mut neg) = (0i128, 0i128);
                for (i, &v) in values.iter().enumerate() {
                    if p.sign(i as u32) == 1 { pos += v as i128 } else { neg += v as i128 }
                }
                let s = signed_sum_values(&p, values);
                prop_assert_eq!(s, pos - neg);
                let total: i128 = values.iter().map(|&v| v as i128).sum();
                prop_assert_eq!(s.rem_euclid(2), total.rem_euclid(2));
            }

            #[test]
            fn k1_partition_is_even_parity(n in 3u32..12, x in any::<u64>()) {
                let x = x & ((1 << n) - 1);
                prop_assert_eq!(par_index(x, 1, n), x.count_ones() % 2 == 0);
            }

            #[test]
            fn chain_is_monotone_for_any_order(seed in any::<u64>(), (k, n) in prop_oneof![Just((1u32, 3u32)), Just((2, 3)), Just((3, 3)), Just((2, 4))]) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut v = enumerate_pv(n).unwrap().vectors().to_vec();
                v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let order = PartitionVectorSpace::with_order(n, v).unwrap();
                let c = witness_chain(k, n, &order).unwrap();
                for w in c.w_sets.windows(2) {
                    for x in w[0].ones() {
                        prop_assert!(w[1].get(x));
                    }
                }
                prop_assert_eq!(c.w_sets.last().unwrap(), &c.w_set);
            }
        }
    }
}

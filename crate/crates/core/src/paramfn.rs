//! Boolean functions with parameters and the trial operator.
//!
//! `trial(phi, [p_1, ..., p_K], x)` is 1 when `phi(x, p_k) = 1` for some
//! entry. Parameter vectors are point indices of `B^J` in the same string
//! order as inputs.

use serde::{Deserialize, Serialize};

use crate::bits::{
    cut_index, parse_point, point_bit, point_to_string, table_from_evaluator, TruthTable,
};
use crate::error::{Error, Result};
use crate::partition::{PartitionVector, PartitionVectorSpace};

/// A total, deterministic map `B^n x B^J -> B`.
pub trait ParamBoolFn: Sync {
    fn input_arity(&self) -> u32;
    fn param_arity(&self) -> u32;
    fn eval(&self, x: u64, p: u64) -> bool;
}

/// An ordered list of `J`-bit parameter vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParameterListRepr", into = "ParameterListRepr")]
pub struct ParameterList {
    param_arity: u32,
    entries: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct ParameterListRepr {
    param_arity: u32,
    entries: Vec<String>,
}

impl TryFrom<ParameterListRepr> for ParameterList {
    type Error = Error;

    fn try_from(r: ParameterListRepr) -> Result<Self> {
        let entries = r
            .entries
            .iter()
            .map(|s| {
                let (v, len) = parse_point(s)?;
                if len != r.param_arity {
                    return Err(Error::Arity(format!(
                        "entry {s:?} has {len} bits, expected {}",
                        r.param_arity
                    )));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        ParameterList::new(r.param_arity, entries)
    }
}

impl From<ParameterList> for ParameterListRepr {
    fn from(l: ParameterList) -> Self {
        ParameterListRepr {
            param_arity: l.param_arity,
            entries: l
                .entries
                .iter()
                .map(|&e| point_to_string(e, l.param_arity))
                .collect(),
        }
    }
}

impl ParameterList {
    pub fn new(param_arity: u32, entries: Vec<u64>) -> Result<Self> {
        if param_arity > 63 {
            return Err(Error::Capacity(format!(
                "parameter arity {param_arity} exceeds 63"
            )));
        }
        if let Some(e) = entries.iter().find(|&&e| e >> param_arity != 0) {
            return Err(Error::Arity(format!(
                "entry {e} does not fit in {param_arity} bits"
            )));
        }
        let list = Self {
            param_arity,
            entries,
        };
        if list.duplicate_count() > 0 {
            log::warn!(
                "parameter list has {} duplicate entries",
                list.duplicate_count()
            );
        }
        Ok(list)
    }

    /// Partition vectors in boolean form (`+1 -> 1`, `-1 -> 0`).
    pub fn from_vectors(vectors: &[PartitionVector]) -> Result<Self> {
        let n = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("vectors of mixed length".into()));
        }
        Self::new(n, vectors.iter().map(|v| v.to_boolean()).collect())
    }

    pub fn from_space(space: &PartitionVectorSpace) -> Self {
        Self {
            param_arity: space.n(),
            entries: space.vectors().iter().map(|v| v.to_boolean()).collect(),
        }
    }

    pub fn param_arity(&self) -> u32 {
        self.param_arity
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries that repeat an earlier one. They have no effect on trials.
    pub fn duplicate_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.entries.iter().filter(|e| !seen.insert(**e)).count()
    }
}

fn check_trial<F: ParamBoolFn + ?Sized>(phi: &F, plist: &ParameterList) -> Result<()> {
    if plist.param_arity() != phi.param_arity() {
        return Err(Error::Arity(format!(
            "parameter list has arity {}, function expects {}",
            plist.param_arity(),
            phi.param_arity()
        )));
    }
    Ok(())
}

/// `phi ⊙ P` at one point. Entries are tried in order and the first
/// success ends the trial.
pub fn trial<F: ParamBoolFn + ?Sized>(phi: &F, plist: &ParameterList, x: u64) -> Result<bool> {
    check_trial(phi, plist)?;
    if phi.input_arity() < 64 && x >> phi.input_arity() != 0 {
        return Err(Error::Arity(format!(
            "point {x} is outside B^{}",
            phi.input_arity()
        )));
    }
    Ok(plist.entries().iter().any(|&p| phi.eval(x, p)))
}

/// Truth table of `phi ⊙ P` over the whole input space.
pub fn trial_table<F: ParamBoolFn + ?Sized>(phi: &F, plist: &ParameterList) -> Result<TruthTable> {
    check_trial(phi, plist)?;
    table_from_evaluator(phi.input_arity(), |x| {
        plist.entries().iter().any(|&p| phi.eval(x, p))
    })
}

/// The partition test on `k*n`-bit inputs: `phi(x, p) = 1` iff the signed
/// sum of the numbers cut from `x` under `p` is zero.
///
/// Parameter bit 1 means `+1` and 0 means `-1`. Vectors outside the
/// admissible space (leading 0, or all ones) are evaluated by the same
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionPhi {
    k: u32,
    n: u32,
}

pub fn phi_partition(k: u32, n: u32) -> Result<PartitionPhi> {
    if k == 0 || n < 3 {
        return Err(Error::Domain(format!(
            "need k >= 1 and n >= 3 (k={k}, n={n})"
        )));
    }
    if k * n > 63 {
        return Err(Error::Capacity(format!("k*n = {} exceeds 63", k * n)));
    }
    Ok(PartitionPhi { k, n })
}

impl PartitionPhi {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

impl ParamBoolFn for PartitionPhi {
    fn input_arity(&self) -> u32 {
        self.k * self.n
    }

    fn param_arity(&self) -> u32 {
        self.n
    }

    fn eval(&self, x: u64, p: u64) -> bool {
        let values = cut_index(x, self.k, self.n);
        let s = values.iter().enumerate().fold(0i128, |acc, (i, &v)| {
            if point_bit(p, self.n, i as u32) {
                acc + v as i128
            } else {
                acc - v as i128
            }
        });
        s == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateBase {
    And,
    Or,
}

/// `x1 ^s∘^t x2`: a two-input gate whose inputs pass when the matching
/// switch parameter is 1 and are negated when it is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchableGate {
    base: GateBase,
}

pub fn switchable_gate(base: GateBase) -> SwitchableGate {
    SwitchableGate { base }
}

impl ParamBoolFn for SwitchableGate {
    fn input_arity(&self) -> u32 {
        2
    }

    fn param_arity(&self) -> u32 {
        2
    }

    fn eval(&self, x: u64, p: u64) -> bool {
        let a = point_bit(x, 2, 0) == point_bit(p, 2, 0);
        let b = point_bit(x, 2, 1) == point_bit(p, 2, 1);
        match self.base {
            GateBase::And => a && b,
            GateBase::Or => a || b,
        }
    }
}

/// Adapts a closure into a [`ParamBoolFn`].
pub struct FnParams<F> {
    input_arity: u32,
    param_arity: u32,
    f: F,
}

impl<F: Fn(u64, u64) -> bool + Sync> FnParams<F> {
    pub fn new(input_arity: u32, param_arity: u32, f: F) -> Self {
        Self {
            input_arity,
            param_arity,
            f,
        }
    }
}

impl<F: Fn(u64, u64) -> bool + Sync> ParamBoolFn for FnParams<F> {
    fn input_arity(&self) -> u32 {
        self.input_arity
    }

    fn param_arity(&self) -> u32 {
        self.param_arity
    }

    fn eval(&self, x: u64, p: u64) -> bool {
        (self.f)(x, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitArray;
    use crate::partition::{enumerate_pv, par_index, unique_omega};

    #[test]
    fn switch_gate_examples() {
        let g = switchable_gate(GateBase::And);
        assert!(!g.eval(0b11, 0b01));
        assert!(g.eval(0b01, 0b01));
        for x in 0..4 {
            assert_eq!(g.eval(x, 0b11), x == 0b11);
        }
    }

    #[test]
    fn switch_trial_is_xor() {
        let g = switchable_gate(GateBase::And);
        let s = ParameterList::new(2, vec![0b10, 0b01]).unwrap();
        for x in 0..4u64 {
            let xor = point_bit(x, 2, 0) ^ point_bit(x, 2, 1);
            assert_eq!(trial(&g, &s, x).unwrap(), xor);
        }
    }

    #[test]
    fn empty_list_is_false() {
        let g = switchable_gate(GateBase::Or);
        let empty = ParameterList::new(2, vec![]).unwrap();
        assert!((0..4).all(|x| !trial(&g, &empty, x).unwrap()));
    }

    #[test]
    fn trial_checks_arity() {
        let g = switchable_gate(GateBase::Or);
        let bad = ParameterList::new(3, vec![0]).unwrap();
        assert!(matches!(trial(&g, &bad, 0), Err(Error::Arity(_))));
        let ok = ParameterList::new(2, vec![0]).unwrap();
        assert!(matches!(trial(&g, &ok, 4), Err(Error::Arity(_))));
    }

    #[test]
    fn partition_phi_examples() {
        let phi = phi_partition(2, 3).unwrap();
        let x = BitArray::encode_numbers(&[1, 1, 2], 2)
            .unwrap()
            .to_index()
            .unwrap();
        assert!(phi.eval(x, 0b110));
        for p in 0..8 {
            assert!(phi.eval(0, p));
        }
    }

    #[test]
    fn constructed_witness_is_unique_under_phi() {
        let phi = phi_partition(3, 3).unwrap();
        let p: PartitionVector = "+--".parse().unwrap();
        let omega = unique_omega(&p).unwrap();
        let x = BitArray::encode_numbers(omega.values(), 3)
            .unwrap()
            .to_index()
            .unwrap();
        for q in enumerate_pv(3).unwrap().vectors() {
            assert_eq!(phi.eval(x, q.to_boolean()), *q == p);
        }
    }

    #[test]
    fn trial_with_full_space_is_par() {
        for (k, n) in [(1, 3), (2, 3), (1, 4)] {
            let phi = phi_partition(k, n).unwrap();
            let all = ParameterList::from_space(&enumerate_pv(n).unwrap());
            let t = trial_table(&phi, &all).unwrap();
            for x in 0..1u64 << (k * n) {
                assert_eq!(t.get(x), par_index(x, k, n));
            }
        }
    }

    #[test]
    fn duplicates_are_counted() {
        let l = ParameterList::new(2, vec![1, 2, 1, 1]).unwrap();
        assert_eq!(l.duplicate_count(), 2);
        let j = serde_json::to_string(&l).unwrap();
        assert_eq!(j, r#"{"param_arity":2,"entries":["01","10","01","01"]}"#);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trial_is_monotone_and_order_free(
                base in prop::collection::vec(0u64..8, 0..6),
                extra in prop::collection::vec(0u64..8, 0..4),
                x in 0u64..512,
            ) {
                let phi = phi_partition(3, 3).unwrap();
                let small = ParameterList::new(3, base.clone()).unwrap();
                let mut grown = base.clone();
                grown.extend(extra);
                let big = ParameterList::new(3, grown.clone()).unwrap();
                prop_assert!(trial(&phi, &small, x).unwrap() <= trial(&phi, &big, x).unwrap());
                grown.reverse();
                let rev = ParameterList::new(3, grown).unwrap();
                prop_assert_eq!(trial(&phi, &big, x).unwrap(), trial(&phi, &rev, x).unwrap());
            }
        }
    }
}

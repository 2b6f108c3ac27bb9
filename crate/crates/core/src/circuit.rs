//! Fan-in-2 AND/OR circuits with free negation on wires.
//!
//! `d(C)` counts AND/OR gates only; negations and constants are free.
//! Input `i` of a circuit is position `i` of the input bit string, so the
//! adders take `x_{k-1} .. x_0 y_{k-1} .. y_0`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::{point_bit, TruthTable, MAX_TABLE_ARITY};
use crate::error::{Error, Result};
use crate::par::*;
use crate::partition::PartitionVector;

/// (kind, index or canonical id, negated) for ordering gate operands.
type OperandKey = (u8, u32, bool);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Const(bool),
    Input(u32),
    Gate(u32),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(b) => write!(f, "c{}", *b as u8),
            Node::Input(i) => write!(f, "i{i}"),
            Node::Gate(g) => write!(f, "g{g}"),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad wire reference {s:?}"));
        let (kind, idx) = s.split_at(1.min(s.len()));
        let idx: u32 = idx.parse().map_err(|_| bad())?;
        match kind {
            "c" if idx <= 1 => Ok(Node::Const(idx == 1)),
            "i" => Ok(Node::Input(idx)),
            "g" => Ok(Node::Gate(idx)),
            _ => Err(bad()),
        }
    }
}

/// A reference to a node, optionally negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire {
    pub node: Node,
    pub neg: bool,
}

impl Wire {
    pub fn input(i: u32) -> Self {
        Self {
            node: Node::Input(i),
            neg: false,
        }
    }

    pub fn constant(v: bool) -> Self {
        Self {
            node: Node::Const(v),
            neg: false,
        }
    }

    pub fn gate(g: u32) -> Self {
        Self {
            node: Node::Gate(g),
            neg: false,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Self {
            neg: !self.neg,
            ..self
        }
    }

    pub fn negated_if(self, cond: bool) -> Self {
        if cond {
            self.not()
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub op: GateOp,
    pub left: Wire,
    pub right: Wire,
}

/// `(d, d')`: gate count, and gate count plus negation flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCount {
    pub d: usize,
    pub d_prime: usize,
}

/// A single-output circuit over `arity` inputs with gates in topological
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct Circuit {
    arity: u32,
    gates: Vec<Gate>,
    output: Wire,
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    op: GateOp,
    l: String,
    ln: bool,
    r: String,
    rn: bool,
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    arity: u32,
    gates: Vec<GateRepr>,
    out: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    outn: bool,
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        let wire = |s: &str, neg: bool| -> Result<Wire> {
            Ok(Wire {
                node: s.parse()?,
                neg,
            })
        };
        let gates = r
            .gates
            .iter()
            .map(|g| {
                Ok(Gate {
                    op: g.op,
                    left: wire(&g.l, g.ln)?,
                    right: wire(&g.r, g.rn)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(r.arity, gates, wire(&r.out, r.outn)?)
    }
}

impl From<Circuit> for CircuitRepr {
    fn from(c: Circuit) -> Self {
        CircuitRepr {
            arity: c.arity,
            gates: c
                .gates
                .iter()
                .map(|g| GateRepr {
                    op: g.op,
                    l: g.left.node.to_string(),
                    ln: g.left.neg,
                    r: g.right.node.to_string(),
                    rn: g.right.neg,
                })
                .collect(),
            out: c.output.node.to_string(),
            outn: c.output.neg,
        }
    }
}

fn input_words(arity: u32, block: u64) -> Vec<u64> {
    // lane l of block b is the point b*64 + l
    (0..arity)
        .map(|i| {
            let shift = arity - 1 - i;
            if shift >= 6 {
                if (block >> (shift - 6)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                }
            } else {
                (0..64u64).fold(0u64, |w, l| w | (((l >> shift) & 1) << l))
            }
        })
        .collect()
}

impl Circuit {
    pub fn new(arity: u32, gates: Vec<Gate>, output: Wire) -> Result<Self> {
        let check = |w: &Wire, limit: u32, ctx: &str| -> Result<()> {
            match w.node {
                Node::Input(i) if i >= arity => Err(Error::Construction(format!(
                    "{ctx} references input {i} of a {arity}-input circuit"
                ))),
                Node::Gate(g) if g >= limit => Err(Error::Construction(format!(
                    "{ctx} references gate {g} which does not precede it"
                ))),
                _ => Ok(()),
            }
        };
        for (k, g) in gates.iter().enumerate() {
            check(&g.left, k as u32, &format!("gate {k}"))?;
            check(&g.right, k as u32, &format!("gate {k}"))?;
        }
        check(&output, gates.len() as u32, "output")?;
        Ok(Self {
            arity,
            gates,
            output,
        })
    }

    pub fn constant(arity: u32, value: bool) -> Self {
        Self {
            arity,
            gates: vec![],
            output: Wire::constant(value),
        }
    }

    pub fn literal(arity: u32, input: u32, neg: bool) -> Result<Self> {
        Self::new(arity, vec![], Wire::input(input).negated_if(neg))
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Wire {
        self.output
    }

    /// Number of AND/OR gates.
    pub fn d(&self) -> usize {
        self.gates.len()
    }

    pub fn node_count(&self) -> NodeCount {
        let negs = self
            .gates
            .iter()
            .map(|g| g.left.neg as usize + g.right.neg as usize)
            .sum::<usize>()
            + self.output.neg as usize;
        NodeCount {
            d: self.gates.len(),
            d_prime: self.gates.len() + negs,
        }
    }

    /// Evaluates on an explicit bit vector.
    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.arity as usize {
            return Err(Error::Arity(format!(
                "circuit has {} inputs, point has {}",
                self.arity,
                x.len()
            )));
        }
        let mut vals = Vec::with_capacity(self.gates.len());
        let read = |w: &Wire, vals: &[bool]| -> bool {
            let v = match w.node {
                Node::Const(b) => b,
                Node::Input(i) => x[i as usize],
                Node::Gate(g) => vals[g as usize],
            };
            v != w.neg
        };
        for g in &self.gates {
            let (a, b) = (read(&g.left, &vals), read(&g.right, &vals));
            vals.push(match g.op {
                GateOp::And => a && b,
                GateOp::Or => a || b,
            });
        }
        Ok(read(&self.output, &vals))
    }

    /// Evaluates on a point index (`arity <= 64`).
    pub fn eval_index(&self, point: u64) -> bool {
        let x: Vec<bool> = (0..self.arity)
            .map(|i| point_bit(point, self.arity, i))
            .collect();
        self.eval(&x).unwrap_or(false)
    }

    /// Evaluates 64 points at once; `inputs[i]` holds input `i` per lane.
    /// Returns the output word and every gate word.
    pub fn simulate(&self, inputs: &[u64]) -> (u64, Vec<u64>) {
        let mut vals = Vec::with_capacity(self.gates.len());
        let read = |w: &Wire, vals: &[u64]| -> u64 {
            let v = match w.node {
                Node::Const(b) => {
                    if b {
                        u64::MAX
                    } else {
                        0
                    }
                }
                Node::Input(i) => inputs[i as usize],
                Node::Gate(g) => vals[g as usize],
            };
            if w.neg {
                !v
            } else {
                v
            }
        };
        for g in &self.gates {
            let (a, b) = (read(&g.left, &vals), read(&g.right, &vals));
            vals.push(match g.op {
                GateOp::And => a & b,
                GateOp::Or => a | b,
            });
        }
        (read(&self.output, &vals), vals)
    }

    /// Full truth table (`arity <= 20`), evaluated 64 points per pass.
    pub fn truth_table(&self) -> Result<TruthTable> {
        if self.arity > MAX_TABLE_ARITY {
            return Err(Error::Capacity(format!(
                "arity {} exceeds table cap {MAX_TABLE_ARITY}",
                self.arity
            )));
        }
        let blocks = (1u64 << self.arity).div_ceil(64);
        let words: Vec<u64> = (0..blocks)
            .into_par_iter()
            .map(|b| self.simulate(&input_words(self.arity, b)).0)
            .collect();
        TruthTable::from_words(self.arity, words)
    }

    /// Gates reachable from the output, renumbered in order.
    pub fn pruned(&self) -> Circuit {
        let mut live = vec![false; self.gates.len()];
        if let Node::Gate(g) = self.output.node {
            live[g as usize] = true;
        }
        for k in (0..self.gates.len()).rev() {
            if live[k] {
                for w in [self.gates[k].left, self.gates[k].right] {
                    if let Node::Gate(g) = w.node {
                        live[g as usize] = true;
                    }
                }
            }
        }
        let mut remap = vec![u32::MAX; self.gates.len()];
        let mut gates = Vec::new();
        let map = |w: Wire, remap: &[u32]| match w.node {
            Node::Gate(g) => Wire {
                node: Node::Gate(remap[g as usize]),
                neg: w.neg,
            },
            _ => w,
        };
        for (k, g) in self.gates.iter().enumerate() {
            if live[k] {
                remap[k] = gates.len() as u32;
                gates.push(Gate {
                    op: g.op,
                    left: map(g.left, &remap),
                    right: map(g.right, &remap),
                });
            }
        }
        Circuit {
            arity: self.arity,
            gates,
            output: map(self.output, &remap),
        }
    }

    /// Order-independent serialization: gates are grouped by depth, sorted
    /// by operation and (normalized, sorted) operands, and renumbered.
    pub fn canonical_encode(&self) -> String {
        let mut depth = vec![0usize; self.gates.len()];
        for (k, g) in self.gates.iter().enumerate() {
            let dep = |w: &Wire| match w.node {
                Node::Gate(j) => depth[j as usize],
                _ => 0,
            };
            depth[k] = 1 + dep(&g.left).max(dep(&g.right));
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        let mut canon = vec![u32::MAX; self.gates.len()];
        let mut next = 0u32;
        let mut lines = Vec::with_capacity(self.gates.len());
        // operand key: (kind, index, negation) with kinds c < i < g
        let key = |w: &Wire, canon: &[u32]| -> (u8, u32, bool) {
            match w.node {
                Node::Const(b) => (0, b as u32, w.neg),
                Node::Input(i) => (1, i, w.neg),
                Node::Gate(g) => (2, canon[g as usize], w.neg),
            }
        };
        for level in 1..=max_depth {
            let mut at: Vec<(GateOp, OperandKey, OperandKey, usize)> = self
                .gates
                .iter()
                .enumerate()
                .filter(|(k, _)| depth[*k] == level)
                .map(|(k, g)| {
                    let (a, b) = (key(&g.left, &canon), key(&g.right, &canon));
                    (g.op, a.min(b), a.max(b), k)
                })
                .collect();
            at.sort();
            for (op, a, b, k) in at {
                canon[k] = next;
                next += 1;
                lines.push(format!(
                    "{}({},{})",
                    match op {
                        GateOp::And => "and",
                        GateOp::Or => "or",
                    },
                    fmt_key(a),
                    fmt_key(b)
                ));
            }
        }
        let out = key(&self.output, &canon);
        format!("n{};{};out={}", self.arity, lines.join(";"), fmt_key(out))
    }
}

fn fmt_key((kind, idx, neg): (u8, u32, bool)) -> String {
    let k = match kind {
        0 => 'c',
        1 => 'i',
        _ => 'g',
    };
    format!("{}{k}{idx}", if neg { "!" } else { "" })
}

/// Incremental construction of gate lists.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    arity: u32,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(arity: u32) -> Self {
        Self {
            arity,
            gates: Vec::new(),
        }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn input(&self, i: u32) -> Wire {
        debug_assert!(i < self.arity);
        Wire::input(i)
    }

    pub fn gate(&mut self, op: GateOp, left: Wire, right: Wire) -> Wire {
        self.gates.push(Gate { op, left, right });
        Wire::gate(self.gates.len() as u32 - 1)
    }

    pub fn and(&mut self, a: Wire, b: Wire) -> Wire {
        self.gate(GateOp::And, a, b)
    }

    pub fn or(&mut self, a: Wire, b: Wire) -> Wire {
        self.gate(GateOp::Or, a, b)
    }

    /// `(a ∨ b) ∧ (¬a ∨ ¬b)`, always three gates.
    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        let l = self.or(a, b);
        let r = self.or(a.not(), b.not());
        self.and(l, r)
    }

    /// `(s ∧ a) ∨ (¬s ∧ b)`.
    pub fn mux(&mut self, s: Wire, a: Wire, b: Wire) -> Wire {
        let l = self.and(s, a);
        let r = self.and(s.not(), b);
        self.or(l, r)
    }

    /// `(a ∧ b) ∨ (a ∧ c) ∨ (b ∧ c)`.
    pub fn majority(&mut self, a: Wire, b: Wire, c: Wire) -> Wire {
        let ab = self.and(a, b);
        let ac = self.and(a, c);
        let bc = self.and(b, c);
        let t = self.or(ab, ac);
        self.or(t, bc)
    }

    /// Conjunction of all wires; one wire needs no gate, none gives `c1`.
    pub fn and_all(&mut self, wires: &[Wire]) -> Wire {
        let Some((&first, rest)) = wires.split_first() else {
            return Wire::constant(true);
        };
        rest.iter().fold(first, |acc, &w| self.and(acc, w))
    }

    /// Disjunction of all wires; none gives `c0`.
    pub fn or_all(&mut self, wires: &[Wire]) -> Wire {
        let Some((&first, rest)) = wires.split_first() else {
            return Wire::constant(false);
        };
        rest.iter().fold(first, |acc, &w| self.or(acc, w))
    }

    /// Copies `c` into this builder, feeding its inputs from `inputs`.
    pub fn embed(&mut self, c: &Circuit, inputs: &[Wire]) -> Result<Wire> {
        if inputs.len() != c.arity as usize {
            return Err(Error::Arity(format!(
                "embedding a {}-input circuit with {} wires",
                c.arity,
                inputs.len()
            )));
        }
        let offset = self.gates.len() as u32;
        let map = |w: Wire| -> Wire {
            match w.node {
                Node::Input(i) => inputs[i as usize].negated_if(w.neg),
                Node::Gate(g) => Wire {
                    node: Node::Gate(g + offset),
                    neg: w.neg,
                },
                Node::Const(_) => w,
            }
        };
        for g in &c.gates {
            self.gates.push(Gate {
                op: g.op,
                left: map(g.left),
                right: map(g.right),
            });
        }
        Ok(map(c.output))
    }

    pub fn finish(self, output: Wire) -> Result<Circuit> {
        Circuit::new(self.arity, self.gates, output)
    }

    pub fn finish_bundle(self, outputs: Vec<(String, Wire)>) -> Result<CircuitBundle> {
        // validate references through Circuit::new
        for (_, w) in &outputs {
            Circuit::new(self.arity, self.gates.clone(), *w)?;
        }
        Ok(CircuitBundle {
            arity: self.arity,
            gates: self.gates,
            outputs,
        })
    }
}

/// Several named outputs over one shared gate list.
#[derive(Debug, Clone)]
pub struct CircuitBundle {
    arity: u32,
    gates: Vec<Gate>,
    outputs: Vec<(String, Wire)>,
}

impl CircuitBundle {
    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.outputs.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// The cone of one output as a standalone circuit.
    pub fn output(&self, name: &str) -> Option<Circuit> {
        let (_, w) = self.outputs.iter().find(|(n, _)| n == name)?;
        Some(
            Circuit {
                arity: self.arity,
                gates: self.gates.clone(),
                output: *w,
            }
            .pruned(),
        )
    }

    /// All outputs at one point, in declaration order.
    pub fn eval(&self, point: u64) -> Vec<(String, bool)> {
        let inputs: Vec<u64> = (0..self.arity)
            .map(|i| {
                if point_bit(point, self.arity, i) {
                    u64::MAX
                } else {
                    0
                }
            })
            .collect();
        let c = Circuit {
            arity: self.arity,
            gates: self.gates.clone(),
            output: Wire::constant(false),
        };
        let (_, vals) = c.simulate(&inputs);
        self.outputs
            .iter()
            .map(|(n, w)| {
                let v = match w.node {
                    Node::Const(b) => b,
                    Node::Input(i) => inputs[i as usize] & 1 == 1,
                    Node::Gate(g) => vals[g as usize] & 1 == 1,
                };
                (n.clone(), v != w.neg)
            })
            .collect()
    }

    /// Reads outputs named `{prefix}{hi}..{prefix}0` as a big-endian integer.
    pub fn eval_number(&self, point: u64, prefix: &str, hi: u32) -> u64 {
        let vals = self.eval(point);
        (0..=hi).rev().fold(0u64, |acc, i| {
            let name = format!("{prefix}{i}");
            let bit = vals
                .iter()
                .find(|(n, _)| *n == name)
                .is_some_and(|(_, v)| *v);
            (acc << 1) | bit as u64
        })
    }
}

/// Little-endian wires (`w[0]` has weight 1) for the `k`-bit number whose
/// most significant bit is input `first`.
fn number_inputs(first: u32, k: u32) -> Vec<Wire> {
    (0..k).map(|j| Wire::input(first + k - 1 - j)).collect()
}

/// Ripple-carry addition of equal-width little-endian operands. Without a
/// carry-in, bit 0 is a half adder. Returns `width + 1` sum bits and the
/// carries.
fn ripple_add(
    b: &mut CircuitBuilder,
    xs: &[Wire],
    ys: &[Wire],
    carry_in: Option<Wire>,
) -> (Vec<Wire>, Vec<Wire>) {
    debug_assert_eq!(xs.len(), ys.len());
    let mut sum = Vec::with_capacity(xs.len() + 1);
    let mut carries = Vec::with_capacity(xs.len());
    let mut carry = carry_in;
    for (&x, &y) in xs.iter().zip(ys) {
        let p = b.xor(x, y);
        let (z, t) = match carry {
            None => (p, b.and(x, y)),
            Some(c) => (b.xor(p, c), b.majority(x, y, c)),
        };
        sum.push(z);
        carries.push(t);
        carry = Some(t);
    }
    sum.push(carry.unwrap_or(Wire::constant(false)));
    (sum, carries)
}

/// `[x >= y]` as the carry out of `x + ~y + 1`.
fn compare_ge(b: &mut CircuitBuilder, xs: &[Wire], ys: &[Wire]) -> Wire {
    xs.iter().zip(ys).fold(Wire::constant(true), |c, (&x, &y)| {
        b.majority(x, y.not(), c)
    })
}

/// Sign-magnitude `x - y`: the sign is 1 when `x < y`. For `x >= y` the
/// magnitude is `x + ~y + 1`, otherwise `~x + 1 + y`; the comparator
/// selects between the two paths.
fn subtract(b: &mut CircuitBuilder, xs: &[Wire], ys: &[Wire]) -> (Wire, Vec<Wire>) {
    let ge = compare_ge(b, xs, ys);
    let not_y: Vec<Wire> = ys.iter().map(|w| w.not()).collect();
    let not_x: Vec<Wire> = xs.iter().map(|w| w.not()).collect();
    let (pos, _) = ripple_add(b, xs, &not_y, Some(Wire::constant(true)));
    let (neg, _) = ripple_add(b, &not_x, ys, Some(Wire::constant(true)));
    let mag = (0..xs.len()).map(|i| b.mux(ge, pos[i], neg[i])).collect();
    (ge.not(), mag)
}

/// `k`-bit adder: outputs `z0..zk` and carries `t0..t{k-1}`.
pub fn build_adder(k: u32) -> Result<CircuitBundle> {
    if k == 0 {
        return Err(Error::Domain("adder width must be positive".into()));
    }
    let mut b = CircuitBuilder::new(2 * k);
    let (sum, carries) = ripple_add(&mut b, &number_inputs(0, k), &number_inputs(k, k), None);
    let mut outputs: Vec<(String, Wire)> = sum
        .iter()
        .enumerate()
        .map(|(i, &w)| (format!("z{i}"), w))
        .collect();
    outputs.extend(
        carries
            .iter()
            .enumerate()
            .map(|(i, &w)| (format!("t{i}"), w)),
    );
    b.finish_bundle(outputs)
}

/// `k`-bit subtractor: `zk` is the sign (1 when negative), `z{k-1}..z0`
/// the magnitude of `x - y`; `g` is the embedded comparator.
pub fn build_subtractor(k: u32) -> Result<CircuitBundle> {
    if k == 0 {
        return Err(Error::Domain("subtractor width must be positive".into()));
    }
    let mut b = CircuitBuilder::new(2 * k);
    let (xs, ys) = (number_inputs(0, k), number_inputs(k, k));
    let (sign, mag) = subtract(&mut b, &xs, &ys);
    let mut outputs: Vec<(String, Wire)> = mag
        .iter()
        .enumerate()
        .map(|(i, &w)| (format!("z{i}"), w))
        .collect();
    outputs.push((format!("z{k}"), sign));
    outputs.push(("g".into(), sign.not()));
    b.finish_bundle(outputs)
}

/// `[x >= y]` over `2k` inputs.
pub fn build_ge(k: u32) -> Result<Circuit> {
    if k == 0 {
        return Err(Error::Domain("comparator width must be positive".into()));
    }
    let mut b = CircuitBuilder::new(2 * k);
    let g = compare_ge(&mut b, &number_inputs(0, k), &number_inputs(k, k));
    b.finish(g)
}

/// Conjunction of the negated inputs: 1 only on the all-zero point.
pub fn build_zero_test(l: u32) -> Result<Circuit> {
    if l == 0 {
        return Err(Error::Domain("zero test needs at least one input".into()));
    }
    let mut b = CircuitBuilder::new(l);
    let lits: Vec<Wire> = (0..l).map(|i| Wire::input(i).not()).collect();
    let out = b.and_all(&lits);
    b.finish(out)
}

/// `[x = y]`: the subtractor's magnitude fed to a zero test.
pub fn build_equality(k: u32) -> Result<Circuit> {
    if k == 0 {
        return Err(Error::Domain("equality width must be positive".into()));
    }
    let mut b = CircuitBuilder::new(2 * k);
    let (_, mag) = subtract(&mut b, &number_inputs(0, k), &number_inputs(k, k));
    let negs: Vec<Wire> = mag.iter().map(|w| w.not()).collect();
    let out = b.and_all(&negs);
    b.finish(out)
}

/// Largest `k * n` accepted by [`build_phi_circuit`].
pub const MAX_PHI_BITS: u32 = 64;

fn append_phi(b: &mut CircuitBuilder, p: &PartitionVector, k: u32) -> Wire {
    let n = p.len();
    // accumulator: sign wire and little-endian magnitude, widened by one bit per stage
    let mut sign = Wire::constant(false);
    let mut mag = number_inputs(0, k);
    for j in 1..n {
        let mut alpha = number_inputs(j * k, k);
        alpha.resize(mag.len(), Wire::constant(false));
        let (add, _) = ripple_add(b, &mag, &alpha, None);
        let (sub_sign, sub_mag) = subtract(b, &mag, &alpha);
        // same sign: magnitudes add; otherwise they subtract
        let same = sign.negated_if(!p.is_minus(j));
        let flipped = b.xor(sign, sub_sign);
        let new_sign = b.mux(same, sign, flipped);
        let mut new_mag = Vec::with_capacity(add.len());
        for (i, &a) in add.iter().enumerate() {
            let s = sub_mag.get(i).copied().unwrap_or(Wire::constant(false));
            new_mag.push(b.mux(same, a, s));
        }
        sign = new_sign;
        mag = new_mag;
    }
    let negs: Vec<Wire> = mag.iter().map(|w| w.not()).collect();
    b.and_all(&negs)
}

/// Circuit for `x -> [<p, Omega_x> = 0]` on `k*n` inputs: `n-1` signed
/// add/subtract stages on a sign-magnitude accumulator that grows to
/// `k+n-1` magnitude bits, then a zero test on the magnitude.
pub fn build_phi_circuit(p: &PartitionVector, k: u32, n: u32) -> Result<Circuit> {
    if p.len() != n {
        return Err(Error::Domain(format!(
            "vector {p} does not have length {n}"
        )));
    }
    if k == 0 || k * n > MAX_PHI_BITS {
        return Err(Error::Capacity(format!(
            "k*n = {} outside 1..={MAX_PHI_BITS}",
            k * n
        )));
    }
    let mut b = CircuitBuilder::new(k * n);
    let out = append_phi(&mut b, p, k);
    b.finish(out)
}

/// A circuit over `input_arity + param_arity` inputs whose last
/// `param_arity` inputs are parameter slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricCircuit {
    circuit: Circuit,
    input_arity: u32,
    param_arity: u32,
    /// Structure indicators this circuit was assembled from.
    indicators: Vec<u64>,
}

impl ParametricCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn input_arity(&self) -> u32 {
        self.input_arity
    }

    pub fn param_arity(&self) -> u32 {
        self.param_arity
    }

    pub fn indicators(&self) -> &[u64] {
        &self.indicators
    }

    /// Substitutes constants for the parameter slots. No simplification.
    pub fn instantiate(&self, p: u64) -> Result<Circuit> {
        if self.param_arity < 64 && p >> self.param_arity != 0 {
            return Err(Error::Arity(format!(
                "parameter {p} does not fit in {} bits",
                self.param_arity
            )));
        }
        let n = self.input_arity;
        let j = self.param_arity;
        let subst = |w: Wire| -> Wire {
            match w.node {
                Node::Input(i) if i >= n => Wire {
                    node: Node::Const(point_bit(p, j, i - n)),
                    neg: w.neg,
                },
                _ => w,
            }
        };
        let gates = self
            .circuit
            .gates
            .iter()
            .map(|g| Gate {
                op: g.op,
                left: subst(g.left),
                right: subst(g.right),
            })
            .collect();
        Circuit::new(n, gates, subst(self.circuit.output))
    }
}

fn indicator_wire(b: &mut CircuitBuilder, first_slot: u32, q: u64, j: u32) -> Wire {
    let lits: Vec<Wire> = (0..j)
        .map(|s| Wire::input(first_slot + s).negated_if(!point_bit(q, j, s)))
        .collect();
    b.and_all(&lits)
}

/// `O_p^q`: conjunction over parameter slots, slot `s` negated when
/// `q_s = 0`, so it is 1 exactly when `p = q`.
pub fn build_indicator(q: u64, j: u32) -> Result<ParametricCircuit> {
    if j == 0 || j > 63 || q >> j != 0 {
        return Err(Error::Domain(format!(
            "indicator {q} does not fit in {j} bits"
        )));
    }
    let mut b = CircuitBuilder::new(j);
    let out = indicator_wire(&mut b, 0, q, j);
    Ok(ParametricCircuit {
        circuit: b.finish(out)?,
        input_arity: 0,
        param_arity: j,
        indicators: vec![q],
    })
}

/// `V(p) = ⋁_q (C_q ∧ O_p^q)` over the listed members.
pub fn build_parametric_union(
    members: &[(u64, Circuit)],
    param_arity: u32,
) -> Result<ParametricCircuit> {
    if param_arity == 0 || param_arity > 63 {
        return Err(Error::Domain(format!(
            "parameter arity {param_arity} outside 1..=63"
        )));
    }
    let n = members.first().map_or(0, |(_, c)| c.arity());
    let mut seen = HashSet::new();
    for (q, c) in members {
        if c.arity() != n {
            return Err(Error::Construction(
                "member circuits differ in arity".into(),
            ));
        }
        if q >> param_arity != 0 {
            return Err(Error::Construction(format!(
                "indicator {q} does not fit in {param_arity} bits"
            )));
        }
        if !seen.insert(*q) {
            return Err(Error::Construction(format!("duplicate indicator {q}")));
        }
    }
    let mut b = CircuitBuilder::new(n + param_arity);
    let inputs: Vec<Wire> = (0..n).map(Wire::input).collect();
    let mut terms = Vec::with_capacity(members.len());
    for (q, c) in members {
        let cq = b.embed(c, &inputs)?;
        let o = indicator_wire(&mut b, n, *q, param_arity);
        terms.push(b.and(cq, o));
    }
    let out = b.or_all(&terms);
    Ok(ParametricCircuit {
        circuit: b.finish(out)?,
        input_arity: n,
        param_arity,
        indicators: members.iter().map(|(q, _)| *q).collect(),
    })
}

/// `D_P`: the disjunction of the φ-circuits of every vector in `plist`.
/// An empty list yields the constant-0 circuit.
pub fn build_subpartition_circuit(plist: &[PartitionVector], k: u32, n: u32) -> Result<Circuit> {
    if k == 0 || k * n > MAX_PHI_BITS {
        return Err(Error::Capacity(format!(
            "k*n = {} outside 1..={MAX_PHI_BITS}",
            k * n
        )));
    }
    if plist.is_empty() {
        log::warn!("empty vector list: sub-partition circuit is constant 0");
    }
    if let Some(p) = plist.iter().find(|p| p.len() != n) {
        return Err(Error::Domain(format!(
            "vector {p} does not have length {n}"
        )));
    }
    let mut b = CircuitBuilder::new(k * n);
    let terms: Vec<Wire> = plist.iter().map(|p| append_phi(&mut b, p, k)).collect();
    let out = b.or_all(&terms);
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_point;
    use crate::paramfn::{phi_partition, ParamBoolFn};
    use crate::partition::{enumerate_pv, par_index};

    fn xor_circuit() -> Circuit {
        let mut b = CircuitBuilder::new(2);
        let (x, y) = (Wire::input(0), Wire::input(1));
        let out = b.xor(x, y);
        b.finish(out).unwrap()
    }

    fn pt(s: &str) -> u64 {
        parse_point(s).unwrap().0
    }

    #[test]
    fn eval_examples() {
        let c0 = Circuit::constant(3, false);
        assert!((0..8).all(|p| !c0.eval_index(p)));
        let lit = Circuit::literal(1, 0, true).unwrap();
        assert!(!lit.eval(&[true]).unwrap());
        assert!(xor_circuit().eval(&[true, false]).unwrap());
        assert!(matches!(xor_circuit().eval(&[true]), Err(Error::Arity(_))));
    }

    #[test]
    fn counts() {
        let c0 = Circuit::constant(3, false);
        assert_eq!(c0.node_count(), NodeCount { d: 0, d_prime: 0 });
        assert_eq!(xor_circuit().node_count(), NodeCount { d: 3, d_prime: 5 });
        let lit = Circuit::literal(2, 1, false).unwrap();
        assert_eq!(lit.node_count(), NodeCount { d: 0, d_prime: 0 });
    }

    #[test]
    fn rejects_forward_references() {
        let g = Gate {
            op: GateOp::And,
            left: Wire::gate(0),
            right: Wire::input(0),
        };
        assert!(Circuit::new(1, vec![g], Wire::gate(0)).is_err());
        assert!(Circuit::new(1, vec![], Wire::input(1)).is_err());
    }

    #[test]
    fn adder_examples() {
        let a = build_adder(4).unwrap();
        assert_eq!(a.eval_number(pt("10011010"), "z", 4), 0b10011);
        let a = build_adder(2).unwrap();
        assert_eq!(a.eval_number(pt("1101"), "z", 2), 0b100);
        let a = build_adder(3).unwrap();
        assert_eq!(a.eval_number(0, "z", 3), 0);
    }

    #[test]
    fn subtractor_examples() {
        let s = build_subtractor(5).unwrap();
        assert_eq!(s.eval_number(pt("1010111010"), "z", 5), 0b100101);
        let s = build_subtractor(4).unwrap();
        assert_eq!(s.eval_number(pt("11011010"), "z", 4), 0b00011);
        let s = build_subtractor(3).unwrap();
        assert_eq!(s.eval_number(pt("101101"), "z", 3), 0);
        assert!(build_equality(3).unwrap().eval_index(pt("101101")));
    }

    #[test]
    fn ge_examples() {
        let g = build_ge(2).unwrap();
        assert!(g.eval_index(pt("1101")));
        assert!(!g.eval_index(pt("0110")));
    }

    #[test]
    fn zero_test_examples() {
        let z = build_zero_test(3).unwrap();
        assert!(z.eval_index(0));
        assert!(!z.eval_index(0b010));
        assert_eq!(z.d(), 2);
    }

    #[test]
    fn equality_is_zero_difference() {
        for k in 1..=4u32 {
            let v = build_equality(k).unwrap().truth_table().unwrap();
            for p in 0..1u64 << (2 * k) {
                assert_eq!(v.get(p), p >> k == p & ((1 << k) - 1), "k={k} p={p}");
            }
        }
    }

    #[test]
    fn phi_circuit_examples() {
        let p: PartitionVector = "++-".parse().unwrap();
        let c = build_phi_circuit(&p, 2, 3).unwrap();
        assert!(c.eval_index(pt("010110")));
        let p: PartitionVector = "+-".parse().unwrap();
        assert!(build_phi_circuit(&p, 2, 2).unwrap().eval_index(pt("1111")));
        assert!(build_phi_circuit(&p, 2, 3).is_err());
    }

    #[test]
    fn phi_circuit_matches_phi() {
        for (k, n) in [(1, 3), (2, 3), (3, 3), (2, 4), (3, 4), (2, 5)] {
            let phi = phi_partition(k, n).unwrap();
            for p in enumerate_pv(n).unwrap().vectors() {
                let t = build_phi_circuit(p, k, n).unwrap().truth_table().unwrap();
                for x in 0..1u64 << (k * n) {
                    assert_eq!(t.get(x), phi.eval(x, p.to_boolean()), "k={k} n={n} p={p}");
                }
            }
        }
    }

    #[test]
    fn indicator_sweep() {
        for q in 0..8 {
            let o = build_indicator(q, 3).unwrap();
            for p in 0..8 {
                assert_eq!(o.instantiate(p).unwrap().eval(&[]).unwrap(), p == q);
            }
        }
        assert_eq!(build_indicator(0b101, 3).unwrap().circuit().d(), 2);
    }

    #[test]
    fn union_instantiates_members() {
        let and = {
            let mut b = CircuitBuilder::new(2);
            let o = b.and(Wire::input(0), Wire::input(1));
            b.finish(o).unwrap()
        };
        let members = vec![(0b01, xor_circuit()), (0b10, and.clone())];
        let v = build_parametric_union(&members, 2).unwrap();
        let tx = xor_circuit().truth_table().unwrap();
        let ta = and.truth_table().unwrap();
        assert_eq!(v.instantiate(0b01).unwrap().truth_table().unwrap(), tx);
        assert_eq!(v.instantiate(0b10).unwrap().truth_table().unwrap(), ta);
        for p in [0b00, 0b11] {
            assert_eq!(
                v.instantiate(p)
                    .unwrap()
                    .truth_table()
                    .unwrap()
                    .count_ones(),
                0
            );
        }
        let single = build_parametric_union(&[(0b1, and.clone())], 1).unwrap();
        assert_eq!(single.instantiate(1).unwrap().truth_table().unwrap(), ta);
        assert!(build_parametric_union(&[(1, and.clone()), (1, and)], 1).is_err());
    }

    #[test]
    fn subpartition_circuit_is_par33() {
        let pv = enumerate_pv(3).unwrap();
        let t = build_subpartition_circuit(pv.vectors(), 3, 3)
            .unwrap()
            .truth_table()
            .unwrap();
        for x in 0..512 {
            assert_eq!(t.get(x), par_index(x, 3, 3));
        }
        let empty = build_subpartition_circuit(&[], 3, 3).unwrap();
        assert_eq!(empty.truth_table().unwrap().count_ones(), 0);
    }

    #[test]
    fn canonical_encoding() {
        let mut b1 = CircuitBuilder::new(2);
        let o = b1.and(Wire::input(0), Wire::input(1));
        let mut b2 = CircuitBuilder::new(2);
        let o2 = b2.and(Wire::input(1), Wire::input(0));
        assert_eq!(
            b1.finish(o).unwrap().canonical_encode(),
            b2.finish(o2).unwrap().canonical_encode()
        );

        // the two OR gates swapped in topological order
        let mut b3 = CircuitBuilder::new(2);
        let r = b3.or(Wire::input(0).not(), Wire::input(1).not());
        let l = b3.or(Wire::input(0), Wire::input(1));
        let o3 = b3.and(r, l);
        assert_eq!(
            b3.finish(o3).unwrap().canonical_encode(),
            xor_circuit().canonical_encode()
        );

        let mut b4 = CircuitBuilder::new(2);
        let (x, y) = (Wire::input(0), Wire::input(1));
        let l = b4.and(x, y.not());
        let r = b4.and(x.not(), y);
        let o4 = b4.or(l, r);
        let alt = b4.finish(o4).unwrap();
        assert_eq!(
            alt.truth_table().unwrap(),
            xor_circuit().truth_table().unwrap()
        );
        assert_ne!(alt.canonical_encode(), xor_circuit().canonical_encode());
    }

    #[test]
    fn json_round_trip() {
        let c = xor_circuit();
        let j = serde_json::to_string(&c).unwrap();
        assert!(j.starts_with(r#"{"arity":2,"gates":[{"op":"or","l":"i0","ln":false"#));
        let back: Circuit = serde_json::from_str(&j).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Circuit>(r#"{"arity":1,"gates":[],"out":"g0"}"#).is_err());
    }
}

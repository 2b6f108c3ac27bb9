//! Exact fitting-extremum search, proper sampling sets and bound audits.
//!
//! The search enumerates AND-inverter circuits: an OR gate is an AND gate
//! with negated operands and output, so minimal gate counts over
//! `{AND, OR, free NOT}` equal minimal AND counts with free inversion. For
//! each arity the enumerator builds level sets `L_g`, the tables whose
//! minimal gate count is exactly `g`, each with one representative
//! circuit. Levels are computed once per process and shared.
//!
//! Gate sequences are pruned by rules that never remove every minimal
//! circuit of a function:
//! - a gate table is non-constant and differs from every earlier node
//!   table and its complement;
//! - two adjacent gates where the later does not read the earlier appear
//!   in ascending table order;
//! - every gate except the last is read by a later gate, so with `r`
//!   gates still to place at most `r + 1` gates may be unread.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::bits::{point_bit, point_to_string, SamplingSet, TruthTable};
use crate::circuit::{Circuit, Gate, GateOp, Wire};
use crate::error::{Error, Result};
use crate::par::*;
use crate::paramfn::{phi_partition, ParamBoolFn};
use crate::partition::{PartitionVector, MAX_CHAIN_BITS};

/// Largest arity the exhaustive backend accepts.
pub const MAX_FE_ARITY: u32 = 8;
/// Largest gate cap the exhaustive backend accepts.
pub const MAX_GATE_CAP: u32 = 12;
/// Largest arity accepted by [`mpss_search`].
pub const MAX_MPSS_ARITY: u32 = 4;

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub gate_cap: u32,
    pub minimizer_cap: usize,
    /// Enumeration nodes allowed across all levels up to the answer.
    pub node_budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            gate_cap: 10,
            minimizer_cap: 64,
            node_budget: 4_000_000_000,
        }
    }
}

type Wide = [u64; 4];

trait Word: Copy + Eq + Ord + Hash + Send + Sync {
    fn and(self, o: Self) -> Self;
    fn xor(self, o: Self) -> Self;
    fn from_wide(w: Wide) -> Self;
    fn to_wide(self) -> Wide;
}

impl Word for u64 {
    #[inline]
    fn and(self, o: Self) -> Self {
        self & o
    }

    #[inline]
    fn xor(self, o: Self) -> Self {
        self ^ o
    }

    fn from_wide(w: Wide) -> Self {
        w[0]
    }

    fn to_wide(self) -> Wide {
        [self, 0, 0, 0]
    }
}

impl Word for Wide {
    #[inline]
    fn and(self, o: Self) -> Self {
        [
            self[0] & o[0],
            self[1] & o[1],
            self[2] & o[2],
            self[3] & o[3],
        ]
    }

    #[inline]
    fn xor(self, o: Self) -> Self {
        [
            self[0] ^ o[0],
            self[1] ^ o[1],
            self[2] ^ o[2],
            self[3] ^ o[3],
        ]
    }

    fn from_wide(w: Wide) -> Self {
        w
    }

    fn to_wide(self) -> Wide {
        self
    }
}

#[inline]
fn wide_and(a: &Wide, b: &Wide) -> Wide {
    [a[0] & b[0], a[1] & b[1], a[2] & b[2], a[3] & b[3]]
}

#[inline]
fn wide_xor(a: &Wide, b: &Wide) -> Wide {
    [a[0] ^ b[0], a[1] ^ b[1], a[2] ^ b[2], a[3] ^ b[3]]
}

#[inline]
fn wide_is_zero(a: &Wide) -> bool {
    a.iter().all(|&w| w == 0)
}

fn domain_mask(arity: u32) -> Wide {
    let mut m = [0u64; 4];
    let bits = 1usize << arity;
    for (i, w) in m.iter_mut().enumerate() {
        let lo = i * 64;
        if bits >= lo + 64 {
            *w = u64::MAX;
        } else if bits > lo {
            *w = (1u64 << (bits - lo)) - 1;
        }
    }
    m
}

fn input_table(arity: u32, i: u32) -> Wide {
    let mut t = [0u64; 4];
    for p in 0..1u64 << arity {
        if point_bit(p, arity, i) {
            t[(p >> 6) as usize] |= 1 << (p & 63);
        }
    }
    t
}

fn wide_from_table(t: &TruthTable) -> Wide {
    let mut w = [0u64; 4];
    for (dst, src) in w.iter_mut().zip(t.words()) {
        *dst = *src;
    }
    w
}

fn table_from_wide(arity: u32, w: &Wide) -> TruthTable {
    let words = (1usize << arity).div_ceil(64);
    TruthTable::from_words(arity, w[..words].to_vec()).expect("arity within table cap")
}

fn lowest_bit(w: &Wide) -> Option<u64> {
    w.iter()
        .enumerate()
        .find(|(_, &x)| x != 0)
        .map(|(i, &x)| i as u64 * 64 + x.trailing_zeros() as u64)
}

/// A representative circuit: gate keys in order, then the output code.
/// Ordering is lexicographic, which is the enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Rep {
    keys: Vec<u32>,
    /// 0 and 1 are constants; `2 + 2*node + neg` is a node literal.
    out: u32,
}

fn gate_key(a: usize, b: usize, pol: u32) -> u32 {
    ((b as u32) << 12) | ((a as u32) << 2) | pol
}

impl Rep {
    fn to_circuit(&self, arity: u32) -> Circuit {
        let n = arity as usize;
        let wire = |node: usize, neg: bool| -> Wire {
            let w = if node < n {
                Wire::input(node as u32)
            } else {
                Wire::gate((node - n) as u32)
            };
            w.negated_if(neg)
        };
        let gates = self
            .keys
            .iter()
            .map(|&k| {
                let b = (k >> 12) as usize;
                let a = ((k >> 2) & 0x3ff) as usize;
                Gate {
                    op: GateOp::And,
                    left: wire(a, k & 2 != 0),
                    right: wire(b, k & 1 != 0),
                }
            })
            .collect();
        let output = match self.out {
            0 | 1 => Wire::constant(self.out == 1),
            o => wire(((o - 2) / 2) as usize, o & 1 == 1),
        };
        Circuit::new(arity, gates, output).expect("representative is well formed")
    }
}

#[derive(Debug)]
struct Exhausted;

struct Frame<W> {
    tabs: Vec<W>,
    keys: Vec<u32>,
    used: Vec<bool>,
    unused: usize,
}

struct Enumerator<'a, W> {
    n: usize,
    depth: usize,
    mask: W,
    limit: u64,
    spent: &'a AtomicU64,
    abort: &'a AtomicBool,
}

const FLUSH: u64 = 1 << 12;

impl<W: Word> Enumerator<'_, W> {
    /// Calls `visit(table, key, new_unused)` for each admissible next gate.
    #[inline]
    fn children(&self, f: &Frame<W>, mut visit: impl FnMut(W, u32, usize, usize, usize) -> bool) {
        let m = f.tabs.len();
        let k = f.keys.len();
        let zero = self.mask.xor(self.mask);
        let remaining = self.depth - (k + 1);
        let prev = if k > 0 { Some(m - 1) } else { None };
        for b in 0..m {
            for a in 0..b {
                for pol in 0..4u32 {
                    let la = if pol & 2 != 0 {
                        f.tabs[a].xor(self.mask)
                    } else {
                        f.tabs[a]
                    };
                    let lb = if pol & 1 != 0 {
                        f.tabs[b].xor(self.mask)
                    } else {
                        f.tabs[b]
                    };
                    let t = la.and(lb);
                    if t == zero || t == self.mask {
                        continue;
                    }
                    let tc = t.xor(self.mask);
                    if f.tabs.iter().any(|&s| s == t || s == tc) {
                        continue;
                    }
                    if let Some(p) = prev {
                        if a != p && b != p && t <= f.tabs[p] {
                            continue;
                        }
                    }
                    let freed =
                        (a >= self.n && !f.used[a]) as usize + (b >= self.n && !f.used[b]) as usize;
                    let unused = f.unused + 1 - freed;
                    if unused > remaining + 1 {
                        continue;
                    }
                    if !visit(t, gate_key(a, b, pol), unused, a, b) {
                        return;
                    }
                }
            }
        }
    }

    fn push(f: &mut Frame<W>, t: W, key: u32, unused: usize, a: usize, b: usize) -> (bool, bool) {
        let saved = (f.used[a], f.used[b]);
        f.used[a] = true;
        f.used[b] = true;
        f.tabs.push(t);
        f.keys.push(key);
        f.used.push(false);
        f.unused = unused;
        saved
    }

    fn pop(f: &mut Frame<W>, a: usize, b: usize, saved: (bool, bool), unused: usize) {
        f.tabs.pop();
        f.keys.pop();
        f.used.pop();
        f.used[b] = saved.1;
        f.used[a] = saved.0;
        f.unused = unused;
    }

    fn tick(&self, count: &mut u64, pending: &mut u64) -> bool {
        *count += 1;
        *pending += 1;
        if *pending >= FLUSH {
            let total = self.spent.fetch_add(*pending, Ordering::Relaxed) + *pending;
            *pending = 0;
            if total > self.limit {
                self.abort.store(true, Ordering::Relaxed);
            }
            if self.abort.load(Ordering::Relaxed) {
                return false;
            }
        }
        true
    }

    fn dfs(
        &self,
        f: &mut Frame<W>,
        found: &mut HashMap<W, Rep>,
        count: &mut u64,
        pending: &mut u64,
    ) -> bool {
        let last = f.keys.len() + 1 == self.depth;
        let node = f.tabs.len() as u32;
        let mut alive = true;
        let mut moves = Vec::new();
        self.children(f, |t, key, unused, a, b| {
            moves.push((t, key, unused, a, b));
            true
        });
        for (t, key, unused, a, b) in moves {
            if !self.tick(count, pending) {
                alive = false;
                break;
            }
            if last {
                for neg in [false, true] {
                    let table = if neg { t.xor(self.mask) } else { t };
                    found.entry(table).or_insert_with(|| {
                        let mut keys = f.keys.clone();
                        keys.push(key);
                        Rep {
                            keys,
                            out: 2 + 2 * node + neg as u32,
                        }
                    });
                }
            } else {
                let before = f.unused;
                let saved = Self::push(f, t, key, unused, a, b);
                let ok = self.dfs(f, found, count, pending);
                Self::pop(f, a, b, saved, before);
                if !ok {
                    alive = false;
                    break;
                }
            }
        }
        alive
    }
}

fn merge_found<W: Word>(into: &mut HashMap<W, Rep>, from: HashMap<W, Rep>) {
    for (t, r) in from {
        match into.get_mut(&t) {
            Some(old) if *old <= r => {}
            Some(old) => *old = r,
            None => {
                into.insert(t, r);
            }
        }
    }
}

/// All tables produced by an admissible `depth`-gate sequence, with the
/// least representative for each, and the number of enumeration nodes.
fn enumerate_depth<W: Word>(
    arity: u32,
    depth: usize,
    limit: u64,
) -> std::result::Result<(Vec<(Wide, Rep)>, u64), Exhausted> {
    let n = arity as usize;
    let mask = W::from_wide(domain_mask(arity));
    let spent = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let en = Enumerator {
        n,
        depth,
        mask,
        limit,
        spent: &spent,
        abort: &abort,
    };
    let root = Frame {
        tabs: (0..arity)
            .map(|i| W::from_wide(input_table(arity, i)))
            .collect(),
        keys: Vec::new(),
        used: vec![false; n],
        unused: 0,
    };
    // expand a short prefix sequentially, then search subtrees in parallel
    let prefix_depth = (depth - 1).min(2);
    let mut prefixes = vec![root];
    let mut prefix_nodes = 0u64;
    for _ in 0..prefix_depth {
        let mut next = Vec::new();
        for f in &prefixes {
            en.children(f, |t, key, unused, a, b| {
                let mut g = Frame {
                    tabs: f.tabs.clone(),
                    keys: f.keys.clone(),
                    used: f.used.clone(),
                    unused: f.unused,
                };
                Enumerator::<W>::push(&mut g, t, key, unused, a, b);
                next.push(g);
                true
            });
        }
        prefix_nodes += next.len() as u64;
        prefixes = next;
    }
    if prefix_nodes > limit {
        return Err(Exhausted);
    }
    spent.fetch_add(prefix_nodes, Ordering::Relaxed);
    let parts: Vec<(HashMap<W, Rep>, u64)> = prefixes
        .into_par_iter()
        .map(|mut f| {
            let mut found = HashMap::new();
            let (mut count, mut pending) = (0u64, 0u64);
            if !abort.load(Ordering::Relaxed) {
                en.dfs(&mut f, &mut found, &mut count, &mut pending);
            }
            (found, count)
        })
        .collect();
    let total = prefix_nodes + parts.iter().map(|(_, c)| c).sum::<u64>();
    if abort.load(Ordering::Relaxed) || total > limit {
        return Err(Exhausted);
    }
    let mut found = HashMap::new();
    for (part, _) in parts {
        merge_found(&mut found, part);
    }
    Ok((
        found.into_iter().map(|(t, r)| (t.to_wide(), r)).collect(),
        total,
    ))
}

/// Tables of minimal gate count exactly `g`, ascending, with
/// representatives.
struct Level {
    tables: Vec<Wide>,
    reps: Vec<Rep>,
    nodes: u64,
}

#[derive(Default)]
struct ArityLevels {
    levels: Vec<Arc<Level>>,
    known: HashSet<Wide>,
}

fn cache() -> &'static Mutex<HashMap<u32, ArityLevels>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, ArityLevels>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops every cached enumeration level, so the next search rebuilds
/// them. Results do not depend on the cache; this only affects timing.
pub fn clear_level_cache() {
    cache().lock().unwrap_or_else(|e| e.into_inner()).clear();
}

fn level_zero(arity: u32) -> Level {
    let mask = domain_mask(arity);
    let mut entries = vec![([0u64; 4], 0u32), (mask, 1u32)];
    for i in 0..arity {
        let t = input_table(arity, i);
        entries.push((t, 2 + 2 * i));
        entries.push((wide_xor(&t, &mask), 3 + 2 * i));
    }
    entries.sort();
    Level {
        tables: entries.iter().map(|e| e.0).collect(),
        reps: entries
            .iter()
            .map(|e| Rep {
                keys: vec![],
                out: e.1,
            })
            .collect(),
        nodes: 0,
    }
}

/// Levels `0..=g` for `arity`, computing missing ones within `budget`
/// total enumeration nodes.
fn levels_upto(arity: u32, g: u32, budget: u64) -> std::result::Result<Vec<Arc<Level>>, Exhausted> {
    loop {
        let (have, known, spent) = {
            let mut c = cache().lock().expect("level cache poisoned");
            let entry = c.entry(arity).or_default();
            if entry.levels.is_empty() {
                let l0 = level_zero(arity);
                entry.known.extend(l0.tables.iter().copied());
                entry.levels.push(Arc::new(l0));
            }
            let spent: u64 = entry
                .levels
                .iter()
                .take(g as usize + 1)
                .map(|l| l.nodes)
                .sum();
            if spent > budget {
                return Err(Exhausted);
            }
            if entry.levels.len() > g as usize {
                return Ok(entry.levels[..=g as usize].to_vec());
            }
            (entry.levels.len(), entry.known.clone(), spent)
        };
        // compute the next level outside the lock
        let depth = have;
        let limit = budget - spent;
        let (found, nodes) = if arity <= 4 && known.len() == 1 << (1 << arity) {
            // every function already has a level
            (Vec::new(), 0)
        } else if arity <= 6 {
            enumerate_depth::<u64>(arity, depth, limit)?
        } else {
            enumerate_depth::<Wide>(arity, depth, limit)?
        };
        let mut fresh: Vec<(Wide, Rep)> = found
            .into_iter()
            .filter(|(t, _)| !known.contains(t))
            .collect();
        fresh.sort();
        log::debug!(
            "arity {arity}: level {depth} has {} tables after {nodes} nodes",
            fresh.len()
        );
        let level = Level {
            tables: fresh.iter().map(|e| e.0).collect(),
            reps: fresh.into_iter().map(|e| e.1).collect(),
            nodes,
        };
        let mut c = cache().lock().expect("level cache poisoned");
        let entry = c.entry(arity).or_default();
        if entry.levels.len() == depth {
            entry.known.extend(level.tables.iter().copied());
            entry.levels.push(Arc::new(level));
        }
    }
}

/// Number of tables with minimal gate count exactly `g`, for each `g` up
/// to `max_gates`, with the enumeration nodes spent per level.
pub fn level_profile(arity: u32, max_gates: u32, budget: u64) -> Result<Vec<(u32, usize, u64)>> {
    check_fe_arity(arity)?;
    let levels = levels_upto(arity, max_gates, budget)
        .map_err(|_| Error::Capacity(format!("node budget {budget} exhausted")))?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(g, l)| (g as u32, l.tables.len(), l.nodes))
        .collect())
}

/// Tables reached by admissible `depth`-gate sequences and the nodes
/// spent, computed afresh without touching the level cache.
pub fn level_census(arity: u32, depth: u32, budget: u64) -> Result<(usize, u64)> {
    check_fe_arity(arity)?;
    if depth == 0 {
        return Ok((level_zero(arity).tables.len(), 0));
    }
    let run = if arity <= 6 {
        enumerate_depth::<u64>(arity, depth as usize, budget)
    } else {
        enumerate_depth::<Wide>(arity, depth as usize, budget)
    };
    let (found, nodes) =
        run.map_err(|_| Error::Capacity(format!("node budget {budget} exhausted")))?;
    Ok((found.len(), nodes))
}

/// Minimal gate count of a fully specified function, if within `caps`.
pub fn circuit_complexity(f: &TruthTable, caps: &Caps) -> Result<Option<u32>> {
    check_fe_arity(f.arity())?;
    let t = wide_from_table(f);
    for g in 0..=caps.gate_cap {
        match levels_upto(f.arity(), g, caps.node_budget) {
            Ok(levels) => {
                if levels[g as usize].tables.binary_search(&t).is_ok() {
                    return Ok(Some(g));
                }
            }
            Err(Exhausted) => return Ok(None),
        }
    }
    Ok(None)
}

fn check_fe_arity(arity: u32) -> Result<()> {
    if arity > MAX_FE_ARITY {
        return Err(Error::Capacity(format!(
            "arity {arity} exceeds the exhaustive backend limit {MAX_FE_ARITY}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeStatus {
    Solved,
    BudgetExhausted,
    GateCapReached,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Enumeration nodes over every level searched.
    pub nodes_explored: u64,
    pub node_budget: u64,
    pub levels_searched: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FESolution {
    pub arity: u32,
    pub sample_size: usize,
    pub status: FeStatus,
    pub min_d: Option<u32>,
    /// No fitting circuit has fewer gates than this.
    pub lower_bound: u32,
    /// Distinct truth tables of minimal fits, ascending, capped.
    pub minimizers: Vec<TruthTable>,
    pub minimizer_count: usize,
    pub minimizers_complete: bool,
    pub witness_circuit: Option<Circuit>,
    pub witness_encoding: Option<String>,
    /// `d < n·|S|`; absent when `|S| = 0` or unsolved.
    pub sample_bound_holds: Option<bool>,
    pub search_stats: SearchStats,
}

/// A solve before presentation: every fitting table at the minimal level.
struct Core {
    status: FeStatus,
    min_d: Option<u32>,
    lower_bound: u32,
    /// Fitting tables with their index in `level`.
    fits: Vec<(Wide, usize)>,
    level: Option<Arc<Level>>,
    stats: SearchStats,
}

fn solve_core(arity: u32, care: Wide, value: Wide, caps: &Caps) -> Result<Core> {
    check_fe_arity(arity)?;
    if caps.gate_cap > MAX_GATE_CAP {
        return Err(Error::Capacity(format!(
            "gate cap {} exceeds {MAX_GATE_CAP}",
            caps.gate_cap
        )));
    }
    let mut nodes = 0u64;
    for g in 0..=caps.gate_cap {
        let levels = match levels_upto(arity, g, caps.node_budget) {
            Ok(l) => l,
            Err(Exhausted) => {
                return Ok(Core {
                    status: FeStatus::BudgetExhausted,
                    min_d: None,
                    lower_bound: g,
                    fits: vec![],
                    level: None,
                    stats: SearchStats {
                        nodes_explored: nodes,
                        node_budget: caps.node_budget,
                        levels_searched: g,
                    },
                });
            }
        };
        let level = &levels[g as usize];
        nodes += level.nodes;
        let fits: Vec<(Wide, usize)> = level
            .tables
            .iter()
            .enumerate()
            .filter(|(_, t)| wide_is_zero(&wide_and(&wide_xor(t, &value), &care)))
            .map(|(i, t)| (*t, i))
            .collect();
        if !fits.is_empty() {
            return Ok(Core {
                status: FeStatus::Solved,
                min_d: Some(g),
                lower_bound: g,
                fits,
                level: Some(level.clone()),
                stats: SearchStats {
                    nodes_explored: nodes,
                    node_budget: caps.node_budget,
                    levels_searched: g + 1,
                },
            });
        }
    }
    Ok(Core {
        status: FeStatus::GateCapReached,
        min_d: None,
        lower_bound: caps.gate_cap + 1,
        fits: vec![],
        level: None,
        stats: SearchStats {
            nodes_explored: nodes,
            node_budget: caps.node_budget,
            levels_searched: caps.gate_cap + 1,
        },
    })
}

fn sample_masks(sv: &SamplingSet) -> (Wide, Wide) {
    let (mut care, mut value) = ([0u64; 4], [0u64; 4]);
    for (p, v) in sv.iter() {
        care[(p >> 6) as usize] |= 1 << (p & 63);
        if v {
            value[(p >> 6) as usize] |= 1 << (p & 63);
        }
    }
    (care, value)
}

fn present(arity: u32, sample_size: usize, core: Core, caps: &Caps) -> FESolution {
    let witness = core
        .fits
        .iter()
        .filter_map(|&(_, i)| core.level.as_ref().map(|l| &l.reps[i]))
        .map(|r| {
            let c = r.to_circuit(arity);
            (c.canonical_encode(), c)
        })
        .min_by(|a, b| a.0.cmp(&b.0));
    let count = core.fits.len();
    FESolution {
        arity,
        sample_size,
        status: core.status,
        min_d: core.min_d,
        lower_bound: core.lower_bound,
        minimizers: core
            .fits
            .iter()
            .take(caps.minimizer_cap)
            .map(|(t, _)| table_from_wide(arity, t))
            .collect(),
        minimizer_count: count,
        minimizers_complete: count <= caps.minimizer_cap,
        sample_bound_holds: core
            .min_d
            .filter(|_| sample_size > 0)
            .map(|d| (d as u64) < arity as u64 * sample_size as u64),
        witness_encoding: witness.as_ref().map(|w| w.0.clone()),
        witness_circuit: witness.map(|w| w.1),
        search_stats: core.stats,
    }
}

/// Fewest-gate circuits agreeing with `sv`, by iterative deepening on the
/// gate count.
pub fn fe_solve(sv: &SamplingSet, caps: &Caps) -> Result<FESolution> {
    let (care, value) = sample_masks(sv);
    let core = solve_core(sv.arity(), care, value, caps)?;
    Ok(present(sv.arity(), sv.len(), core, caps))
}

fn point_set_mask(arity: u32, points: &[u64]) -> Result<Wide> {
    let mut care = [0u64; 4];
    for &p in points {
        if p >> arity != 0 {
            return Err(Error::Arity(format!("point {p} is outside B^{arity}")));
        }
        care[(p >> 6) as usize] |= 1 << (p & 63);
    }
    Ok(care)
}

/// [`fe_solve`] on `{(x, f(x)) | x ∈ s}`.
pub fn fe_solve_fn(s: &[u64], f: &TruthTable, caps: &Caps) -> Result<FESolution> {
    check_fe_arity(f.arity())?;
    let care = point_set_mask(f.arity(), s)?;
    let distinct = s.iter().collect::<BTreeSet<_>>().len();
    let core = solve_core(f.arity(), care, wide_from_table(f), caps)?;
    Ok(present(f.arity(), distinct, core, caps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PssVerdict {
    Proper,
    NotProper,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSSReport {
    pub verdict: PssVerdict,
    pub is_pss: Option<bool>,
    pub min_d: Option<u32>,
    pub minimizer_count: usize,
    pub disagreeing_minimizer: Option<TruthTable>,
    /// Lowest point where the disagreeing minimizer differs from the target.
    pub disagreement_point: Option<String>,
    pub semantics: String,
    pub search_stats: SearchStats,
}

const SEMANTICS: &str = "forall-minimizer";

fn pss_core(s: &[u64], f: &TruthTable, caps: &Caps) -> Result<(PSSReport, Core)> {
    check_fe_arity(f.arity())?;
    let care = point_set_mask(f.arity(), s)?;
    let target = wide_from_table(f);
    let core = solve_core(f.arity(), care, target, caps)?;
    let mut report = PSSReport {
        verdict: PssVerdict::Indeterminate,
        is_pss: None,
        min_d: core.min_d,
        minimizer_count: core.fits.len(),
        disagreeing_minimizer: None,
        disagreement_point: None,
        semantics: SEMANTICS.into(),
        search_stats: core.stats.clone(),
    };
    if core.status == FeStatus::Solved {
        match core.fits.iter().find(|(t, _)| *t != target) {
            Some((t, _)) => {
                report.verdict = PssVerdict::NotProper;
                report.is_pss = Some(false);
                report.disagreeing_minimizer = Some(table_from_wide(f.arity(), t));
                report.disagreement_point =
                    lowest_bit(&wide_xor(t, &target)).map(|p| point_to_string(p, f.arity()));
            }
            None => {
                report.verdict = PssVerdict::Proper;
                report.is_pss = Some(true);
            }
        }
    }
    Ok((report, core))
}

/// Whether every minimal circuit fitting `f` on `s` expresses `f`.
///
/// All minimal fits are inspected, not only the listed ones, so the
/// verdict is definitive whenever the search finishes within `caps`.
pub fn pss_check(s: &[u64], f: &TruthTable, caps: &Caps) -> Result<PSSReport> {
    Ok(pss_core(s, f, caps)?.0)
}

/// Fast path for repeated checks: `Some(true/false)` or `None` when the
/// search did not finish.
fn is_pss_mask(arity: u32, care: Wide, target: Wide, caps: &Caps) -> Result<Option<bool>> {
    let core = solve_core(arity, care, target, caps)?;
    Ok(match core.status {
        FeStatus::Solved => Some(core.fits.iter().all(|(t, _)| *t == target)),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpssResult {
    /// Exact minimal size when every smaller subset was decided.
    pub size: Option<usize>,
    pub witness: Option<Vec<String>>,
    /// Every subset smaller than this was decided and is not proper.
    pub lower_bound: usize,
    /// Size of the smallest proper set found, if any.
    pub upper_bound: Option<usize>,
    pub subsets_checked: u64,
    pub undecided_subsets: u64,
}

fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut idx: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let cur = idx.clone()?;
        // advance to the next combination in lexicographic order
        let mut next = cur.clone();
        let mut i = k;
        loop {
            if i == 0 {
                idx = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                idx = Some(next);
                break;
            }
        }
        Some(cur)
    })
}

/// Smallest proper sampling set, by subsets in ascending size and
/// lexicographic order.
pub fn mpss_search(f: &TruthTable, caps: &Caps) -> Result<MpssResult> {
    let n = f.arity();
    if n > MAX_MPSS_ARITY {
        return Err(Error::Capacity(format!(
            "minimal PSS search is limited to arity {MAX_MPSS_ARITY}"
        )));
    }
    let target = wide_from_table(f);
    let size = 1usize << n;
    let mut checked = 0u64;
    let mut undecided = 0u64;
    let mut lower = 0usize;
    for k in 0..=size {
        let subsets: Vec<Vec<usize>> = combinations(size, k).collect();
        let verdicts: Vec<Result<Option<bool>>> = subsets
            .par_iter()
            .map(|sub| {
                let mut care = [0u64; 4];
                for &p in sub {
                    care[p >> 6] |= 1 << (p & 63);
                }
                is_pss_mask(n, care, target, caps)
            })
            .collect();
        checked += subsets.len() as u64;
        let mut level_undecided = 0;
        for (sub, v) in subsets.iter().zip(verdicts) {
            match v? {
                Some(true) => {
                    let witness = sub.iter().map(|&p| point_to_string(p as u64, n)).collect();
                    let exact = undecided == 0 && level_undecided == 0;
                    return Ok(MpssResult {
                        size: exact.then_some(k),
                        witness: Some(witness),
                        lower_bound: if exact { k } else { lower },
                        upper_bound: Some(k),
                        subsets_checked: checked,
                        undecided_subsets: undecided + level_undecided,
                    });
                }
                Some(false) => {}
                None => level_undecided += 1,
            }
        }
        undecided += level_undecided;
        if undecided == 0 {
            lower = k + 1;
        }
    }
    Ok(MpssResult {
        size: None,
        witness: None,
        lower_bound: lower,
        upper_bound: None,
        subsets_checked: checked,
        undecided_subsets: undecided,
    })
}

/// Every proper sampling set of `f`, by exhaustive subset enumeration.
/// Returns the sets as point-index lists plus the undecided count.
pub fn all_pss(f: &TruthTable, caps: &Caps) -> Result<(Vec<Vec<u64>>, u64)> {
    let n = f.arity();
    if n > MAX_MPSS_ARITY {
        return Err(Error::Capacity(format!(
            "PSS enumeration is limited to arity {MAX_MPSS_ARITY}"
        )));
    }
    let target = wide_from_table(f);
    let size = 1u64 << n;
    // warm the level cache before fanning out
    is_pss_mask(n, domain_mask(n), target, caps)?;
    let verdicts: Vec<Result<Option<bool>>> = (0..1u64 << size)
        .into_par_iter()
        .map(|bits| is_pss_mask(n, [bits, 0, 0, 0], target, caps))
        .collect();
    let mut sets = Vec::new();
    let mut undecided = 0;
    for (bits, v) in verdicts.into_iter().enumerate() {
        match v? {
            Some(true) => sets.push((0..size).filter(|p| (bits >> p) & 1 == 1).collect()),
            Some(false) => {}
            None => undecided += 1,
        }
    }
    Ok((sets, undecided))
}

/// Arithmetic consequences of the sample-size and circuit-size bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub n: u32,
    pub sample_size: u64,
    pub d: u64,
    /// `d < n·|S|`; absent when `|S| = 0`, where it says nothing.
    pub sample_bound_holds: Option<bool>,
    pub pss_size_bound: u64,
    /// `3d = 0` bounds nothing.
    pub pss_bound_degenerate: bool,
    pub pv_length: Option<u32>,
    /// `2^(N-1)`: lower bound on a minimal PSS of the partition function.
    pub mpss_lower: Option<u64>,
    /// Least `d` with `2^(N-1) <= 3d`.
    pub mpss_min_d: Option<u64>,
    /// `ceil(2^N / 6)`.
    pub gate_lower: Option<u64>,
    pub eta: f64,
    pub general: Option<GeneralBound>,
}

/// The general-length bound at input length `L = N²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralBound {
    pub length: u64,
    pub floor_sqrt: u64,
    /// `eta · 2^floor(sqrt L)`, the form the argument establishes.
    pub bound: f64,
    /// `eta · L · 2^floor(sqrt L)`, the form as stated.
    pub stated_bound: f64,
}

pub const ETA: f64 = 1.0 / 6.0;

pub fn general_bound(length: u64) -> GeneralBound {
    let k = crate::bits::isqrt(length);
    let p = 2f64.powi(k as i32);
    GeneralBound {
        length,
        floor_sqrt: k,
        bound: ETA * p,
        stated_bound: ETA * length as f64 * p,
    }
}

/// Pure arithmetic report; see [`BoundAudit`].
pub fn bound_audit(n: u32, sample_size: u64, d: u64, pv_length: Option<u32>) -> BoundAudit {
    let pv = pv_length.filter(|&big_n| (1..=63).contains(&big_n));
    BoundAudit {
        n,
        sample_size,
        d,
        sample_bound_holds: (sample_size > 0)
            .then(|| (d as u128) < n as u128 * sample_size as u128),
        pss_size_bound: 3 * d,
        pss_bound_degenerate: d == 0,
        pv_length,
        mpss_lower: pv.map(|big_n| 1u64 << (big_n - 1)),
        mpss_min_d: pv.map(|big_n| (1u64 << (big_n - 1)).div_ceil(3)),
        gate_lower: pv.map(|big_n| (1u64 << big_n).div_ceil(6)),
        eta: ETA,
        general: pv
            .filter(|&big_n| big_n <= 31)
            .map(|big_n| general_bound(big_n as u64 * big_n as u64)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CegisResult {
    pub arity: u32,
    /// Sample points in insertion order.
    pub points: Vec<String>,
    pub terminated: bool,
    pub iterations: u32,
    pub final_min_d: Option<u32>,
    pub circuit_d: u64,
    /// `|S| <= 3·d(C)`; absent when the loop did not finish.
    pub within_pss_bound: Option<bool>,
    pub audit: BoundAudit,
}

/// Counterexample-guided extraction of a proper sampling set: starting
/// from the empty set, add the lowest point where some minimal fit
/// disagrees with `f`, until none does.
pub fn pss_from_circuit(f: &TruthTable, c: &Circuit, caps: &Caps) -> Result<CegisResult> {
    check_fe_arity(f.arity())?;
    if c.arity() != f.arity() {
        return Err(Error::Arity(format!(
            "circuit has {} inputs, function has {}",
            c.arity(),
            f.arity()
        )));
    }
    if c.truth_table()? != *f {
        return Err(Error::Domain(
            "circuit does not express the function".into(),
        ));
    }
    let n = f.arity();
    let target = wide_from_table(f);
    let mut care = [0u64; 4];
    let mut points = Vec::new();
    let mut iterations = 0;
    let (terminated, final_min_d) = loop {
        iterations += 1;
        let core = solve_core(n, care, target, caps)?;
        if core.status != FeStatus::Solved {
            break (false, None);
        }
        let diff = core.fits.iter().fold([0u64; 4], |acc, (t, _)| {
            let d = wide_xor(t, &target);
            [acc[0] | d[0], acc[1] | d[1], acc[2] | d[2], acc[3] | d[3]]
        });
        match lowest_bit(&diff) {
            None => break (true, core.min_d),
            Some(p) => {
                care[(p >> 6) as usize] |= 1 << (p & 63);
                points.push(p);
            }
        }
    };
    let d = c.d() as u64;
    let audit = bound_audit(n, points.len() as u64, d, None);
    Ok(CegisResult {
        arity: n,
        points: points.iter().map(|&p| point_to_string(p, n)).collect(),
        terminated,
        iterations,
        final_min_d,
        circuit_d: d,
        within_pss_bound: terminated.then(|| points.len() as u64 <= 3 * d),
        audit,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementEntry {
    /// 1-based position in the vector list.
    pub index: usize,
    pub vector: PartitionVector,
    pub met: bool,
    /// Lowest sample point where only this vector splits.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub k: u32,
    pub n: u32,
    pub sample_size: usize,
    pub entries: Vec<RequirementEntry>,
    pub all_met: bool,
    pub missing: Vec<usize>,
}

/// For each `p_i`, whether `s` holds a point split by `p_i` and by no
/// other listed vector. A proper sampling set of the sub-partition
/// function must meet every requirement.
pub fn witness_requirement_check(
    s: &[u64],
    plist: &[PartitionVector],
    k: u32,
    n: u32,
) -> Result<RequirementReport> {
    if k * n > MAX_CHAIN_BITS {
        return Err(Error::Capacity(format!(
            "k*n = {} exceeds {MAX_CHAIN_BITS}",
            k * n
        )));
    }
    if let Some(p) = plist.iter().find(|p| p.len() != n) {
        return Err(Error::Dimension(format!(
            "vector {p} does not have length {n}"
        )));
    }
    let phi = phi_partition(k, n)?;
    let mut points: Vec<u64> = s.to_vec();
    points.sort_unstable();
    points.dedup();
    if let Some(&p) = points.iter().find(|&&p| p >> (k * n) != 0) {
        return Err(Error::Arity(format!("point {p} is outside B^{}", k * n)));
    }
    let mut witness: Vec<Option<u64>> = vec![None; plist.len()];
    for &x in &points {
        let mut hits = plist
            .iter()
            .enumerate()
            .filter(|(_, p)| phi.eval(x, p.to_boolean()))
            .map(|(i, _)| i);
        if let (Some(i), None) = (hits.next(), hits.next()) {
            witness[i].get_or_insert(x);
        }
    }
    let entries: Vec<RequirementEntry> = plist
        .iter()
        .zip(&witness)
        .enumerate()
        .map(|(i, (p, w))| RequirementEntry {
            index: i + 1,
            vector: *p,
            met: w.is_some(),
            witness: w.map(|x| point_to_string(x, k * n)),
        })
        .collect();
    let missing: Vec<usize> = entries.iter().filter(|e| !e.met).map(|e| e.index).collect();
    Ok(RequirementReport {
        k,
        n,
        sample_size: points.len(),
        all_met: missing.is_empty(),
        entries,
        missing,
    })
}

/// Reference minimizer for small arities, independent of the level-set
/// enumerator: breadth-first search over the sets of functions a circuit
/// has computed so far, one AND gate per step.
pub mod oracle {
    use std::collections::HashSet;

    use crate::bits::point_bit;
    use crate::error::{Error, Result};

    /// Largest arity the oracle handles.
    pub const MAX_ORACLE_ARITY: u32 = 3;

    /// Minimal gate count of every function on `B^arity`, indexed by the
    /// function's table (bit `p` = value at point `p`). `None` marks
    /// functions not reached within `max_gates`.
    pub fn complexities(arity: u32, max_gates: u32) -> Result<Vec<Option<u32>>> {
        if arity > MAX_ORACLE_ARITY {
            return Err(Error::Capacity(format!(
                "oracle is limited to arity {MAX_ORACLE_ARITY}"
            )));
        }
        let size = 1u32 << arity;
        let full: u32 = if size == 32 {
            u32::MAX
        } else {
            (1 << size) - 1
        };
        let count = 1usize << size;
        let mut best: Vec<Option<u32>> = vec![None; count];
        // tables are normalized to value 0 at point 0; a set of normalized
        // node functions fully determines what a next gate can compute
        let norm = |t: u32| if t & 1 == 1 { t ^ full } else { t };
        let inputs: Vec<u32> = (0..arity)
            .map(|i| {
                (0..size)
                    .filter(|&p| point_bit(p as u64, arity, i))
                    .fold(0, |t, p| t | 1 << p)
            })
            .collect();
        let mark = |t: u32, g: u32, best: &mut Vec<Option<u32>>| {
            for v in [t, t ^ full] {
                if best[v as usize].is_none() {
                    best[v as usize] = Some(g);
                }
            }
        };
        mark(0, 0, &mut best);
        for &x in &inputs {
            mark(x, 0, &mut best);
        }
        let mut frontier: HashSet<Vec<u32>> = HashSet::from([Vec::new()]);
        for g in 1..=max_gates {
            if best.iter().all(Option::is_some) {
                break;
            }
            let last = g == max_gates;
            let mut next = HashSet::new();
            for state in &frontier {
                let nodes: Vec<u32> = inputs.iter().chain(state.iter()).copied().collect();
                for (i, &a) in nodes.iter().enumerate() {
                    for &b in &nodes[i + 1..] {
                        for (na, nb) in [(0, 0), (0, full), (full, 0), (full, full)] {
                            let t = norm((a ^ na) & (b ^ nb));
                            if t == 0 || nodes.contains(&t) {
                                continue;
                            }
                            mark(t, g, &mut best);
                            if !last {
                                let mut s = state.clone();
                                let pos = s.partition_point(|&v| v < t);
                                s.insert(pos, t);
                                next.insert(s);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(best)
    }

    /// Minimal gate count over all functions agreeing with `value` on the
    /// points in `care`.
    pub fn min_d(table: &[Option<u32>], care: u32, value: u32) -> Option<u32> {
        table
            .iter()
            .enumerate()
            .filter(|(t, _)| (*t as u32 ^ value) & care == 0)
            .filter_map(|(_, c)| *c)
            .min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_point;
    use crate::circuit::CircuitBuilder;

    fn pt(s: &str) -> u64 {
        parse_point(s).unwrap().0
    }

    fn caps() -> Caps {
        Caps::default()
    }

    fn xor2() -> TruthTable {
        TruthTable::from_bools(2, &[false, true, true, false]).unwrap()
    }

    fn z0() -> TruthTable {
        crate::bits::table_from_evaluator(4, |p| point_bit(p, 4, 1) != point_bit(p, 4, 3)).unwrap()
    }

    #[test]
    fn level_zero_contents() {
        let p = level_profile(2, 0, 1).unwrap();
        assert_eq!(p, vec![(0, 6, 0)]);
    }

    #[test]
    fn two_input_levels() {
        // 16 functions: 6 trivial, 8 single gates, 2 parities of 3 gates
        let p = level_profile(2, 3, u64::MAX).unwrap();
        let sizes: Vec<usize> = p.iter().map(|e| e.1).collect();
        assert_eq!(sizes, vec![6, 8, 0, 2]);
    }

    #[test]
    fn solve_examples() {
        let mut sv = SamplingSet::new(4).unwrap();
        for (x, v) in [
            ("0000", false),
            ("0100", true),
            ("0001", true),
            ("0101", false),
        ] {
            sv.insert(pt(x), v).unwrap();
        }
        let s = fe_solve(&sv, &caps()).unwrap();
        assert_eq!(s.min_d, Some(3));
        assert_eq!(s.sample_bound_holds, Some(true));
        assert!(s.minimizers.iter().all(|t| sv.fits(t)));

        let mut zeros = SamplingSet::new(3).unwrap();
        for p in [1, 4, 6] {
            zeros.insert(p, false).unwrap();
        }
        let s = fe_solve(&zeros, &caps()).unwrap();
        assert_eq!(s.min_d, Some(0));
        assert!(s.minimizers.contains(&TruthTable::zeros(3).unwrap()));

        let mut one = SamplingSet::new(3).unwrap();
        one.insert(5, true).unwrap();
        assert_eq!(fe_solve(&one, &caps()).unwrap().min_d, Some(0));
    }

    #[test]
    fn solve_fn_examples() {
        let s = fe_solve_fn(&[0, 1, 2, 3], &xor2(), &caps()).unwrap();
        assert_eq!(s.min_d, Some(3));
        assert_eq!(s.minimizers, vec![xor2()]);
        assert_eq!(s.witness_circuit.unwrap().truth_table().unwrap(), xor2());

        assert_eq!(fe_solve_fn(&[], &xor2(), &caps()).unwrap().min_d, Some(0));
        assert_eq!(
            fe_solve_fn(&[0, 1, 2], &xor2(), &caps()).unwrap().min_d,
            Some(1)
        );
    }

    #[test]
    fn pss_examples() {
        let s: Vec<u64> = ["0000", "0100", "0001", "0101"]
            .iter()
            .map(|x| pt(x))
            .collect();
        let r = pss_check(&s, &z0(), &caps()).unwrap();
        assert_ne!(r.verdict, PssVerdict::Indeterminate);

        let r = pss_check(&[0], &z0(), &caps()).unwrap();
        assert_eq!(r.is_pss, Some(false));

        for t in 0..16u64 {
            let f = TruthTable::from_words(2, vec![t]).unwrap();
            assert_eq!(
                pss_check(&[0, 1, 2, 3], &f, &caps()).unwrap().is_pss,
                Some(true)
            );
        }
    }

    #[test]
    fn mpss_of_xor() {
        let r = mpss_search(&xor2(), &caps()).unwrap();
        assert_eq!(r.size, Some(4));
    }

    #[test]
    fn cegis_examples() {
        let mut b = CircuitBuilder::new(2);
        let o = b.xor(Wire::input(0), Wire::input(1));
        let c = b.finish(o).unwrap();
        let r = pss_from_circuit(&xor2(), &c, &caps()).unwrap();
        assert!(r.terminated);
        assert_eq!(r.within_pss_bound, Some(true));

        let zero = Circuit::constant(2, false);
        let r = pss_from_circuit(&TruthTable::zeros(2).unwrap(), &zero, &caps()).unwrap();
        assert!(r.terminated);
        assert!(r.audit.pss_bound_degenerate);

        let mut b = CircuitBuilder::new(2);
        let o = b.and(Wire::input(0), Wire::input(1));
        let c = b.finish(o).unwrap();
        let r = pss_from_circuit(&c.truth_table().unwrap(), &c, &caps()).unwrap();
        assert!(r.terminated && r.points.len() <= 4);

        assert!(pss_from_circuit(&xor2(), &zero, &caps()).is_err());
    }

    #[test]
    fn audit_examples() {
        let a = bound_audit(4, 4, 3, None);
        assert_eq!(a.sample_bound_holds, Some(true));
        let a = bound_audit(3, 0, 0, Some(3));
        assert_eq!(a.mpss_lower, Some(4));
        assert_eq!(a.gate_lower, Some(2));
        assert_eq!(a.sample_bound_holds, None);
        assert!(a.pss_bound_degenerate);
        assert_eq!(a.pss_size_bound, 0);
    }

    #[test]
    fn requirement_examples() {
        let pv = crate::partition::enumerate_pv(3).unwrap();
        let witnesses: Vec<u64> = pv
            .vectors()
            .iter()
            .map(|p| {
                let omega = crate::partition::unique_omega(p).unwrap();
                crate::bits::BitArray::encode_numbers(omega.values(), 3)
                    .unwrap()
                    .to_index()
                    .unwrap()
            })
            .collect();
        let r = witness_requirement_check(&witnesses, pv.vectors(), 3, 3).unwrap();
        assert!(r.all_met);
        let r = witness_requirement_check(&[], pv.vectors(), 3, 3).unwrap();
        assert_eq!(r.missing, vec![1, 2, 3]);
        let r =
            witness_requirement_check(&[witnesses[0], witnesses[2]], pv.vectors(), 3, 3).unwrap();
        assert_eq!(r.missing, vec![2]);
    }

    #[test]
    fn oracle_two_inputs() {
        let t = oracle::complexities(2, 4).unwrap();
        assert_eq!(t[0b0110], Some(3));
        assert_eq!(t[0b1000], Some(1));
        assert_eq!(t[0b1010], Some(0));
    }
}

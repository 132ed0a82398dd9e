//! Lock-based implementations of transactions.
//!
//! [`translate`] replaces every transaction block by a protocol over plain
//! accesses and MRSW lock operations. The lock of location `x` is the lock
//! name `x.lock`; locks are acquired and promoted in lexicographic order of
//! location names. Local bookkeeping (snapshots, write sequences) lives in
//! registers starting with `_`, which are hidden from outcomes.
//!
//! Promotion blocks until it succeeds, and retry loops are collapsed to
//! their successful iteration: a snapshot that must be re-read until two
//! reads agree becomes a second read plus an `assume`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consistency::{rsi_hb, ModelId};
use crate::enumerate::{for_each_consistent, EnumError, EnumOptions};
use crate::litmus::{Cond, Expr, LockOp, Program, Stmt, Thread};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImplVariant {
    #[serde(rename = "eager-si")]
    EagerSi,
    #[serde(rename = "lazy-si")]
    LazySi,
    #[serde(rename = "eager-rsi")]
    EagerRsi,
    #[serde(rename = "lazy-rsi")]
    LazyRsi,
    /// Snapshot under reader locks, then write locks: unsound.
    #[serde(rename = "cand-a")]
    CandA,
    /// Write locks before the snapshot: incomplete.
    #[serde(rename = "cand-b")]
    CandB,
    /// Promotion interleaved with reader unlocks: incomplete.
    #[serde(rename = "cand-c")]
    CandC,
}

impl ImplVariant {
    pub const ALL: [ImplVariant; 7] = [
        ImplVariant::EagerSi,
        ImplVariant::LazySi,
        ImplVariant::EagerRsi,
        ImplVariant::LazyRsi,
        ImplVariant::CandA,
        ImplVariant::CandB,
        ImplVariant::CandC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImplVariant::EagerSi => "eager-si",
            ImplVariant::LazySi => "lazy-si",
            ImplVariant::EagerRsi => "eager-rsi",
            ImplVariant::LazyRsi => "lazy-rsi",
            ImplVariant::CandA => "cand-a",
            ImplVariant::CandB => "cand-b",
            ImplVariant::CandC => "cand-c",
        }
    }
}

impl fmt::Display for ImplVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImplVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ImplVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown implementation `{s}` (expected eager-si, lazy-si, eager-rsi, lazy-rsi, cand-a, cand-b or cand-c)"))
    }
}

/// Read and write sets of a transaction, both sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessSets {
    /// Locations read before being written in the block.
    pub read_set: BTreeSet<String>,
    pub write_set: BTreeSet<String>,
}

impl AccessSets {
    pub fn all(&self) -> BTreeSet<String> {
        self.read_set.union(&self.write_set).cloned().collect()
    }
}

pub fn extract_access_sets(block: &[Stmt]) -> AccessSets {
    let mut sets = AccessSets::default();
    for s in block {
        match s {
            Stmt::Read { loc, .. } if !sets.write_set.contains(loc) => {
                sets.read_set.insert(loc.clone());
            }
            Stmt::Write { loc, .. } => {
                sets.write_set.insert(loc.clone());
            }
            _ => {}
        }
    }
    sets
}

pub fn lock_name(loc: &str) -> String {
    format!("{loc}.lock")
}

fn lock(op: LockOp, loc: &str) -> Stmt {
    Stmt::Lock { op, lock: lock_name(loc) }
}

fn locks<'a>(op: LockOp, locs: impl IntoIterator<Item = &'a String>) -> Vec<Stmt> {
    locs.into_iter().map(|x| lock(op, x)).collect()
}

fn read(reg: String, loc: &str) -> Stmt {
    Stmt::Read { reg, loc: loc.to_string() }
}

fn let_reg(reg: impl Into<String>, expr: Expr) -> Stmt {
    Stmt::Let { reg: reg.into(), expr }
}

fn assume_eq(a: &str, b: &str) -> Stmt {
    Stmt::Assume(Cond::Eq(Expr::Reg(a.to_string()), Expr::Reg(b.to_string())))
}

/// Hidden register names for transaction `k`.
fn hidden(prefix: &str, k: usize, x: &str) -> String {
    format!("_{prefix}{k}_{x}")
}

/// Replaces every transaction of `p` by the protocol of `v`. Transactions
/// are numbered from 1 in program order to keep hidden registers distinct.
pub fn translate(p: &Program, v: ImplVariant) -> Program {
    let mut k = 0;
    let threads = p
        .threads
        .iter()
        .map(|th| {
            let mut body = Vec::new();
            for s in &th.body {
                match s {
                    Stmt::Tx(block) => {
                        k += 1;
                        body.extend(translate_block(block, k, v));
                    }
                    other => body.push(other.clone()),
                }
            }
            Thread { name: th.name.clone(), body }
        })
        .collect();
    let name = if p.has_transactions() { format!("{}_{}", p.name, v.name().replace('-', "_")) } else { p.name.clone() };
    Program { name, locations: p.locations.clone(), threads }
}

pub fn translate_block(block: &[Stmt], k: usize, v: ImplVariant) -> Vec<Stmt> {
    match v {
        ImplVariant::EagerSi | ImplVariant::EagerRsi | ImplVariant::CandA | ImplVariant::CandB | ImplVariant::CandC => eager(block, k, v),
        ImplVariant::LazySi => lazy_si(block, k),
        ImplVariant::LazyRsi => lazy_rsi(block, k),
    }
}

fn snapshot(sets: &AccessSets, k: usize, rsi: bool) -> Vec<Stmt> {
    let mut out: Vec<Stmt> = sets.read_set.iter().map(|x| read(hidden("s", k, x), x)).collect();
    if rsi {
        for x in &sets.read_set {
            out.push(read(hidden("c", k, x), x));
            out.push(assume_eq(&hidden("c", k, x), &hidden("s", k, x)));
        }
    }
    out
}

/// Body with reads served from the snapshot and writes in place.
fn eager_body(block: &[Stmt], k: usize) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in block {
        match s {
            Stmt::Read { reg, loc } => out.push(let_reg(reg.clone(), Expr::Reg(hidden("s", k, loc)))),
            Stmt::Write { loc, expr } => {
                out.push(s.clone());
                out.push(let_reg(hidden("s", k, loc), expr.clone()));
            }
            other => out.push(other.clone()),
        }
    }
    out
}

fn eager(block: &[Stmt], k: usize, v: ImplVariant) -> Vec<Stmt> {
    let sets = extract_access_sets(block);
    let (r, w) = (&sets.read_set, &sets.write_set);
    let r_only: BTreeSet<String> = r.difference(w).cloned().collect();
    let mut out = Vec::new();
    match v {
        ImplVariant::EagerSi | ImplVariant::EagerRsi => {
            out.extend(locks(LockOp::LockR, &sets.all()));
            out.extend(snapshot(&sets, k, v == ImplVariant::EagerRsi));
            out.extend(locks(LockOp::UnlockR, &r_only));
            out.extend(locks(LockOp::Promote, w));
        }
        ImplVariant::CandA => {
            out.extend(locks(LockOp::LockR, r));
            out.extend(snapshot(&sets, k, false));
            out.extend(locks(LockOp::UnlockR, r));
            out.extend(locks(LockOp::LockW, w));
        }
        ImplVariant::CandB => {
            out.extend(locks(LockOp::LockW, w));
            out.extend(locks(LockOp::LockR, &r_only));
            out.extend(snapshot(&sets, k, false));
            out.extend(locks(LockOp::UnlockR, &r_only));
        }
        ImplVariant::CandC => {
            let all = sets.all();
            out.extend(locks(LockOp::LockR, &all));
            out.extend(snapshot(&sets, k, false));
            for x in &all {
                out.push(lock(if w.contains(x) { LockOp::Promote } else { LockOp::UnlockR }, x));
            }
        }
        ImplVariant::LazySi | ImplVariant::LazyRsi => unreachable!(),
    }
    out.extend(eager_body(block, k));
    out.extend(locks(LockOp::UnlockW, w));
    out
}

fn lazy_si(block: &[Stmt], k: usize) -> Vec<Stmt> {
    let mut r = BTreeSet::new();
    let mut w = BTreeSet::new();
    let mut out = Vec::new();
    for s in block {
        match s {
            Stmt::Read { reg, loc } => {
                if !r.contains(loc) && !w.contains(loc) {
                    out.push(lock(LockOp::LockR, loc));
                    r.insert(loc.clone());
                    out.push(read(hidden("s", k, loc), loc));
                }
                out.push(let_reg(reg.clone(), Expr::Reg(hidden("s", k, loc))));
            }
            Stmt::Write { loc, expr } => {
                if !r.contains(loc) && !w.contains(loc) {
                    out.push(lock(LockOp::LockR, loc));
                }
                w.insert(loc.clone());
                out.push(let_reg(hidden("s", k, loc), expr.clone()));
            }
            other => out.push(other.clone()),
        }
    }
    let r_only: BTreeSet<String> = r.difference(&w).cloned().collect();
    out.extend(locks(LockOp::UnlockR, &r_only));
    out.extend(locks(LockOp::Promote, &w));
    for x in &w {
        out.push(Stmt::Write { loc: x.clone(), expr: Expr::Reg(hidden("s", k, x)) });
    }
    out.extend(locks(LockOp::UnlockW, &w));
    out
}

fn lazy_rsi(block: &[Stmt], k: usize) -> Vec<Stmt> {
    let mut r = BTreeSet::new();
    let mut w = BTreeSet::new();
    // Register holding the transaction's current view of each location.
    let mut current: BTreeMap<String, String> = BTreeMap::new();
    let mut wseq: Vec<(String, String)> = Vec::new();
    let mut out = Vec::new();
    for s in block {
        match s {
            Stmt::Read { reg, loc } => {
                if !r.contains(loc) && !w.contains(loc) {
                    out.push(lock(LockOp::LockR, loc));
                    r.insert(loc.clone());
                    let first = hidden("r", k, loc);
                    out.push(read(first.clone(), loc));
                    current.insert(loc.clone(), first);
                }
                out.push(let_reg(reg.clone(), Expr::Reg(current[loc].clone())));
            }
            Stmt::Write { loc, expr } => {
                if !r.contains(loc) && !w.contains(loc) {
                    out.push(lock(LockOp::LockR, loc));
                }
                w.insert(loc.clone());
                let entry = format!("_w{k}_{}", wseq.len());
                out.push(let_reg(entry.clone(), expr.clone()));
                current.insert(loc.clone(), entry.clone());
                wseq.push((loc.clone(), entry));
            }
            other => out.push(other.clone()),
        }
    }
    for x in &r {
        let check = hidden("v", k, x);
        out.push(read(check.clone(), x));
        out.push(assume_eq(&check, &hidden("r", k, x)));
    }
    let r_only: BTreeSet<String> = r.difference(&w).cloned().collect();
    out.extend(locks(LockOp::UnlockR, &r_only));
    out.extend(locks(LockOp::Promote, &w));
    for (x, entry) in wseq {
        out.push(Stmt::Write { loc: x, expr: Expr::Reg(entry) });
    }
    out.extend(locks(LockOp::UnlockW, &w));
    out
}

/// A maximal run of top-level non-transactional reads and writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NtBlock {
    pub thread: usize,
    pub stmts: Range<usize>,
}

pub fn nt_blocks(p: &Program) -> Vec<NtBlock> {
    let mut out = Vec::new();
    for (t, th) in p.threads.iter().enumerate() {
        let mut start = None;
        for (i, s) in th.body.iter().enumerate() {
            let plain = matches!(s, Stmt::Read { .. } | Stmt::Write { .. });
            match (plain, start) {
                (true, None) => start = Some(i),
                (false, Some(b)) => {
                    out.push(NtBlock { thread: t, stmts: b..i });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(b) = start {
            out.push(NtBlock { thread: t, stmts: b..th.body.len() });
        }
    }
    out
}

/// `p` with `block` wrapped in a new transaction.
pub fn wrap(p: &Program, block: &NtBlock) -> Program {
    let mut q = p.clone();
    let body = &mut q.threads[block.thread].body;
    let inner: Vec<Stmt> = body.drain(block.stmts.clone()).collect();
    body.insert(block.stmts.start, Stmt::Tx(inner));
    q.name = format!("{}_wrap{}_{}", p.name, block.thread, block.stmts.start);
    q
}

/// Checks that in every RSI-consistent execution of `p`, for every
/// location and value, there is at most one non-transactional write of that
/// value, or every such write is `rsi-hb`-ordered with every transaction
/// accessing the location. Initialisation writes are not counted.
pub fn check_rsi_side_condition(p: &Program, opts: &EnumOptions) -> Result<bool, EnumError> {
    let ok = std::sync::atomic::AtomicBool::new(true);
    for_each_consistent(p, ModelId::Rsi, opts, |g, _| {
        if !ok.load(std::sync::atomic::Ordering::Relaxed) {
            return;
        }
        let mut groups: BTreeMap<(&str, i64), Vec<usize>> = BTreeMap::new();
        for e in g.events() {
            if e.kind.is_write() && e.txid == 0 && !e.is_init() {
                groups.entry((e.loc.as_str(), e.wval.unwrap_or_default())).or_default().push(e.id);
            }
        }
        if groups.values().all(|ws| ws.len() <= 1) {
            return;
        }
        let hb = rsi_hb(g);
        for ((loc, _), ws) in groups.iter().filter(|(_, ws)| ws.len() > 1) {
            let mut txns: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for e in g.events().iter().filter(|e| e.txid != 0) {
                txns.entry(e.txid).or_default().push(e.id);
            }
            for events in txns.values().filter(|evs| evs.iter().any(|&e| g.event(e).loc == *loc)) {
                for &w in ws {
                    let before = events.iter().all(|&e| hb.contains(w, e));
                    let after = events.iter().all(|&e| hb.contains(e, w));
                    if !before && !after {
                        ok.store(false, std::sync::atomic::Ordering::Relaxed);
                        return;
                    }
                }
            }
        }
    })?;
    Ok(ok.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::skeleton;
    use crate::graph::Kind;
    use crate::litmus::{parse_program, serialize};

    fn prog(text: &str) -> Program {
        parse_program(text).unwrap()
    }

    fn block(text: &str) -> Vec<Stmt> {
        let p = prog(&format!("litmus b\nlocations x y\nthread t\n  tx {{ {text} }}\n"));
        match &p.threads[0].body[0] {
            Stmt::Tx(b) => b.clone(),
            _ => unreachable!(),
        }
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn access_sets() {
        let lu = extract_access_sets(&block("a = x; x = a + 1"));
        assert_eq!((lu.read_set, lu.write_set), (set(&["x"]), set(&["x"])));
        let ws = extract_access_sets(&block("a = x; y = 1"));
        assert_eq!((ws.read_set, ws.write_set), (set(&["x"]), set(&["y"])));
        let late = extract_access_sets(&block("x = 1; a = x"));
        assert_eq!((late.read_set, late.write_set), (set(&[]), set(&["x"])));
    }

    const LU: &str = "litmus LU\nlocations x\nthread t1\n  tx { a = x; x = a + 1 }\nthread t2\n  tx { b = x; x = b + 1 }\n";

    #[test]
    fn eager_si_event_shape() {
        let q = translate(&prog(LU), ImplVariant::EagerSi);
        let sk = skeleton(&q);
        let t1: Vec<Kind> = sk.events.iter().filter(|e| e.tid == 1).map(|e| e.kind).collect();
        assert_eq!(t1, vec![Kind::RL, Kind::R, Kind::PL, Kind::W, Kind::WU]);
    }

    #[test]
    fn translations_reparse() {
        for v in ImplVariant::ALL {
            let q = translate(&prog(LU), v);
            assert_eq!(parse_program(&serialize(&q)).unwrap(), q, "{v}");
            assert!(crate::litmus::validate(&q).is_empty(), "{v}");
        }
    }

    #[test]
    fn transaction_free_translation_is_identity() {
        let p = prog("litmus n\nlocations x\nthread t\n  x = 1\n  a = x\n");
        assert_eq!(translate(&p, ImplVariant::LazyRsi), p);
    }

    #[test]
    fn lazy_rsi_replays_every_write() {
        let q = translate(&prog("litmus w\nlocations x\nthread t\n  tx { x = 1; x = 2 }\n"), ImplVariant::LazyRsi);
        let writes = q.threads[0].body.iter().filter(|s| matches!(s, Stmt::Write { .. })).count();
        assert_eq!(writes, 2);
        let q = translate(&prog("litmus w\nlocations x\nthread t\n  tx { x = 1; x = 2 }\n"), ImplVariant::LazySi);
        let writes = q.threads[0].body.iter().filter(|s| matches!(s, Stmt::Write { .. })).count();
        assert_eq!(writes, 1);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ImplVariant::ALL {
            assert_eq!(v.name().parse::<ImplVariant>().unwrap(), v);
        }
        assert!("eager".parse::<ImplVariant>().is_err());
    }

    #[test]
    fn nt_blocks_and_wrap() {
        let p = prog("litmus s\nlocations x y z\nthread t1\n  x = 1\n  tx { a = z }\n  b = y\nthread t2\n  y = 1\n  d = x\n");
        let blocks = nt_blocks(&p);
        assert_eq!(blocks, vec![NtBlock { thread: 0, stmts: 0..1 }, NtBlock { thread: 0, stmts: 2..3 }, NtBlock { thread: 1, stmts: 0..2 }]);
        let w = wrap(&p, &blocks[2]);
        assert_eq!(w.threads[1].body.len(), 1);
        assert_eq!(w.transaction_count(), 2);
    }
}

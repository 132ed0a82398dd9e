//! Concrete MRSW lock algorithms and their derived lock orders.
//!
//! [`expand_lock_ops`] replaces each lock statement of a client program by
//! the accesses of a lock implementation, giving plain programs whose
//! RA-consistent executions can be enumerated. [`derive_lo`] reads a lock
//! order over the client's lock operations back off such an execution, and
//! [`verify_lock_axioms`] checks WSync, WEx, RShare, RSync and Acyc on the
//! resulting abstract graphs.
//!
//! Two implementations are provided:
//!
//! * `full-sync`: one counter cell per lock named after the lock. 0 is free,
//!   1 write-held, `2n` held by `n` readers, odd while a promotion waits for
//!   readers to leave.
//! * `write-sync`: one cell `l[t]` per thread id `t`. 0 means no lock, 2 a
//!   read lock of `t`, 1 that some writer holds or is acquiring the lock.
//!   The lowest thread id plays the privileged role in promotion.
//!
//! Spin loops are unrolled: a variant fixes how many iterations of each loop
//! fail (fewer than `spin_bound`) and how. A thread whose loop fails
//! `spin_bound` times stops there; executions of such variants are counted
//! as dropped, not checked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::{self, Axiom, ModelId};
use crate::enumerate::{for_each_consistent, graph_key, skeleton, EnumError, EnumOptions, Skeleton};
use crate::graph::{lock_trace_wellformed, Event, EventId, ExecutionGraph, Kind};
use crate::litmus::{self, Cond, Expr, LockOp, Program, Stmt, Thread, HIDDEN_PREFIX};
use crate::relation::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LockKind {
    #[serde(rename = "full-sync")]
    FullSync,
    #[serde(rename = "write-sync")]
    WriteSync,
}

impl LockKind {
    pub const ALL: [LockKind; 2] = [LockKind::FullSync, LockKind::WriteSync];

    pub fn name(self) -> &'static str {
        match self {
            LockKind::FullSync => "full-sync",
            LockKind::WriteSync => "write-sync",
        }
    }

    /// Axioms the implementation is expected to satisfy on every execution.
    pub fn guaranteed_axioms(self) -> &'static [Axiom] {
        match self {
            LockKind::FullSync => &[Axiom::WSync, Axiom::WEx, Axiom::RShare, Axiom::RSync, Axiom::Acyc],
            LockKind::WriteSync => &[Axiom::WSync, Axiom::WEx, Axiom::RShare, Axiom::Acyc],
        }
    }
}

impl fmt::Display for LockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        LockKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown lock implementation `{s}` (expected full-sync or write-sync)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockImpl {
    pub kind: LockKind,
    /// Iterations tried per spin loop; at least 1.
    pub spin_bound: usize,
}

impl LockImpl {
    pub fn new(kind: LockKind) -> LockImpl {
        LockImpl { kind, spin_bound: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MrswError {
    #[error("spin bound must be at least 1")]
    ZeroSpinBound,
    #[error("invalid lock client `{program}`: {reason}")]
    InvalidClient { program: String, reason: String },
    #[error("derived lock order is cyclic in an execution of `{program}`")]
    CyclicLockOrder { program: String },
    #[error(transparent)]
    Enum(#[from] EnumError),
}

/// A client lock operation and the implementation statements standing for
/// it: per lock cell, the index of the access that orders it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpSpan {
    pub thread: usize,
    pub client_stmt: usize,
    pub op: LockOp,
    pub lock: String,
    pub reps: BTreeMap<String, usize>,
}

/// One unrolling of a client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub program: Program,
    pub spans: Vec<OpSpan>,
    /// Per thread, the expanded statement of each client statement that is a
    /// memory access.
    pub accesses: Vec<BTreeMap<usize, usize>>,
    /// Some thread spins `spin_bound` times without success.
    pub stuck: bool,
}

enum Piece {
    Plain(Stmt, Option<String>),
    Spin { failures: Vec<Vec<Stmt>>, success: Vec<(Stmt, Option<String>)> },
}

fn reg(r: &str) -> Expr {
    Expr::Reg(r.to_string())
}

fn rd(r: &str, c: &str) -> Stmt {
    Stmt::Read { reg: r.to_string(), loc: c.to_string() }
}

fn assume(c: Cond) -> Stmt {
    Stmt::Assume(c)
}

fn cas(c: &str, expected: Expr, new: Expr) -> Stmt {
    Stmt::Cas { reg: None, loc: c.to_string(), expected, new }
}

fn write(c: &str, v: i64) -> Stmt {
    Stmt::Write { loc: c.to_string(), expr: Expr::Const(v) }
}

/// `while (!CAS(c, 0, v)) skip`
fn spin_cas(c: &str, v: i64, f: &str) -> Piece {
    Piece::Spin {
        failures: vec![vec![rd(f, c), assume(Cond::Ne(reg(f), Expr::Const(0)))]],
        success: vec![(cas(c, Expr::Const(0), Expr::Const(v)), Some(c.to_string()))],
    }
}

/// Read `a`, require it even, CAS it to `a + delta`; retries on odd values
/// and on CAS failure.
fn spin_even_cas(c: &str, delta: i64, a: &str, f: &str, g: &str) -> Piece {
    Piece::Spin {
        failures: vec![
            vec![rd(f, c), assume(Cond::Odd(reg(f)))],
            vec![rd(f, c), assume(Cond::Even(reg(f))), rd(g, c), assume(Cond::Ne(reg(g), reg(f)))],
        ],
        success: vec![
            (rd(a, c), None),
            (assume(Cond::Even(reg(a))), None),
            (cas(c, reg(a), Expr::Add(a.to_string(), delta)), Some(c.to_string())),
        ],
    }
}

pub fn cell(lock: &str, tid: u32) -> String {
    format!("{lock}[{tid}]")
}

fn pieces(kind: LockKind, op: LockOp, lock: &str, tid: u32, dom: &[u32], n: usize) -> Vec<Piece> {
    let a = format!("{HIDDEN_PREFIX}m{n}a");
    let f = format!("{HIDDEN_PREFIX}m{n}f");
    let g = format!("{HIDDEN_PREFIX}m{n}g");
    let plain = |s: Stmt, c: &str| Piece::Plain(s, Some(c.to_string()));
    match kind {
        LockKind::FullSync => {
            let c = lock;
            match op {
                LockOp::LockR => vec![spin_even_cas(c, 2, &a, &f, &g)],
                LockOp::UnlockR => vec![plain(Stmt::Faa { reg: None, loc: c.to_string(), delta: -2 }, c)],
                LockOp::LockW => vec![spin_cas(c, 1, &f)],
                LockOp::UnlockW => vec![plain(write(c, 0), c)],
                LockOp::Promote => vec![
                    spin_even_cas(c, -1, &a, &f, &g),
                    Piece::Spin {
                        failures: vec![vec![rd(&f, c), assume(Cond::Ne(reg(&f), Expr::Const(1)))]],
                        success: vec![(rd(&g, c), Some(c.to_string())), (assume(Cond::Eq(reg(&g), Expr::Const(1))), None)],
                    },
                ],
            }
        }
        LockKind::WriteSync => {
            let own = cell(lock, tid);
            let top = dom[0];
            match op {
                LockOp::LockR => vec![spin_cas(&own, 2, &f)],
                LockOp::UnlockR => vec![plain(write(&own, 0), &own)],
                LockOp::LockW => dom.iter().map(|&i| spin_cas(&cell(lock, i), 1, &f)).collect(),
                LockOp::UnlockW => dom.iter().map(|&i| plain(write(&cell(lock, i), 0), &cell(lock, i))).collect(),
                LockOp::Promote => {
                    let mut out = Vec::new();
                    if tid != top {
                        let c0 = cell(lock, top);
                        out.push(Piece::Spin {
                            failures: vec![
                                vec![rd(&f, &c0), assume(Cond::Eq(reg(&f), Expr::Const(1)))],
                                vec![rd(&f, &c0), assume(Cond::Ne(reg(&f), Expr::Const(1))), rd(&g, &c0), assume(Cond::Ne(reg(&g), Expr::Const(0)))],
                            ],
                            success: vec![
                                (rd(&a, &c0), None),
                                (assume(Cond::Ne(reg(&a), Expr::Const(1))), None),
                                (cas(&c0, Expr::Const(0), Expr::Const(1)), Some(c0.clone())),
                            ],
                        });
                    }
                    out.push(plain(write(&own, 1), &own));
                    for &i in dom.iter().filter(|&&i| i != top && i != tid) {
                        out.push(spin_cas(&cell(lock, i), 1, &f));
                    }
                    out
                }
            }
        }
    }
}

struct ThreadVariant {
    body: Vec<Stmt>,
    spans: Vec<OpSpan>,
    accesses: BTreeMap<usize, usize>,
    stuck: bool,
}

/// Sequences of failure kinds of length `len`.
fn failure_sequences(kinds: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|s| (0..kinds).map(move |k| [s.clone(), vec![k]].concat())).collect();
    }
    out
}

/// A client statement: its index, the lock operation it performs if any, and
/// its expansion.
type Item = (usize, Option<(LockOp, String)>, Vec<Piece>);

fn thread_variants(items: &[Item], t: usize, bound: usize) -> Vec<ThreadVariant> {
    let mut out = Vec::new();
    let start = ThreadVariant { body: Vec::new(), spans: Vec::new(), accesses: BTreeMap::new(), stuck: false };
    unroll(items, 0, 0, t, bound, start, &mut out);
    out
}

fn unroll(
    items: &[Item],
    i: usize,
    p: usize,
    t: usize,
    bound: usize,
    mut cur: ThreadVariant,
    out: &mut Vec<ThreadVariant>,
) {
    let Some((client_stmt, op, ps)) = items.get(i) else {
        out.push(cur);
        return;
    };
    if p == 0 && op.is_some() {
        let (op, lock) = op.clone().unwrap();
        cur.spans.push(OpSpan { thread: t, client_stmt: *client_stmt, op, lock, reps: BTreeMap::new() });
    }
    let Some(piece) = ps.get(p) else {
        unroll(items, i + 1, 0, t, bound, cur, out);
        return;
    };
    let record = |cur: &mut ThreadVariant, s: &Stmt, rep: &Option<String>| {
        if let Some(c) = rep {
            cur.spans.last_mut().unwrap().reps.insert(c.clone(), cur.body.len());
        } else if op.is_none() {
            cur.accesses.insert(*client_stmt, cur.body.len());
        }
        cur.body.push(s.clone());
    };
    match piece {
        Piece::Plain(s, rep) => {
            let mut next = cur;
            record(&mut next, s, rep);
            unroll(items, i, p + 1, t, bound, next, out);
        }
        Piece::Spin { failures, success } => {
            for fails in 0..=bound {
                for seq in failure_sequences(failures.len(), fails) {
                    let mut next = ThreadVariant { body: cur.body.clone(), spans: cur.spans.clone(), accesses: cur.accesses.clone(), stuck: false };
                    for &k in &seq {
                        next.body.extend(failures[k].iter().cloned());
                    }
                    if fails == bound {
                        next.stuck = true;
                        out.push(next);
                        continue;
                    }
                    for (s, rep) in success {
                        record(&mut next, s, rep);
                    }
                    unroll(items, i, p + 1, t, bound, next, out);
                }
            }
        }
    }
}

/// Every unrolling of `client` under `imp`, including the stuck ones.
pub fn expand_lock_ops(client: &Program, imp: LockImpl) -> Result<Vec<Expansion>, MrswError> {
    if imp.spin_bound == 0 {
        return Err(MrswError::ZeroSpinBound);
    }
    check_client(client)?;
    let dom: Vec<u32> = (1..=client.threads.len() as u32).collect();
    let mut cells = BTreeSet::new();
    let mut n = 0;
    let mut per_thread = Vec::new();
    for (t, th) in client.threads.iter().enumerate() {
        let tid = t as u32 + 1;
        let mut items = Vec::new();
        for (i, s) in th.body.iter().enumerate() {
            match s {
                Stmt::Lock { op, lock } => {
                    n += 1;
                    let ps = pieces(imp.kind, *op, lock, tid, &dom, n);
                    for p in &ps {
                        let stmts: Vec<&Stmt> = match p {
                            Piece::Plain(s, _) => vec![s],
                            Piece::Spin { failures, success } => failures.iter().flatten().chain(success.iter().map(|(s, _)| s)).collect(),
                        };
                        cells.extend(stmts.iter().filter_map(|s| s.location().map(str::to_string)));
                    }
                    items.push((i, Some((*op, lock.clone())), ps));
                }
                other => items.push((i, None, vec![Piece::Plain(other.clone(), None)])),
            }
        }
        per_thread.push(thread_variants(&items, t, imp.spin_bound));
    }
    let mut locations = client.locations.clone();
    locations.extend(cells);
    let mut out = vec![Expansion {
        program: Program { name: format!("{}_{}", client.name, imp.kind.name().replace('-', "_")), locations, threads: Vec::new() },
        spans: Vec::new(),
        accesses: Vec::new(),
        stuck: false,
    }];
    for (t, variants) in per_thread.iter().enumerate() {
        out = out
            .into_iter()
            .flat_map(|e| {
                variants.iter().map(move |v| {
                    let mut e = e.clone();
                    e.program.threads.push(Thread { name: client.threads[t].name.clone(), body: v.body.clone() });
                    e.spans.extend(v.spans.iter().cloned());
                    e.accesses.push(v.accesses.clone());
                    e.stuck |= v.stuck;
                    e
                })
            })
            .collect();
    }
    Ok(out)
}

fn check_client(client: &Program) -> Result<(), MrswError> {
    let invalid = |reason: String| Err(MrswError::InvalidClient { program: client.name.clone(), reason });
    if let Some(d) = litmus::validate(client).first() {
        return invalid(d.to_string());
    }
    if client.has_transactions() {
        return invalid("lock clients cannot contain transactions".into());
    }
    if !lock_trace_wellformed(&skeleton(client).base_graph()) {
        return invalid("lock operations are not well nested in some thread".into());
    }
    Ok(())
}

/// A client lock operation located in an expanded execution.
#[derive(Debug, Clone)]
struct Op {
    client_event: EventId,
    thread: usize,
    kind: Kind,
    lock: String,
    reps: BTreeMap<String, EventId>,
}

/// Links an expansion's events back to the client's.
pub struct Correspondence {
    client: Skeleton,
    ops: Vec<Op>,
    /// Expanded event to client event, for memory accesses and
    /// initialisation writes of client locations.
    data: BTreeMap<EventId, EventId>,
}

impl Correspondence {
    pub fn new(client: &Program, e: &Expansion) -> Correspondence {
        let client_sk = skeleton(client);
        let exp_sk = skeleton(&e.program);
        let mut data = BTreeMap::new();
        for ce in client_sk.events.iter().filter(|ev| ev.is_init()) {
            let xe = exp_sk.events.iter().find(|ev| ev.is_init() && ev.loc == ce.loc).expect("client location initialised");
            data.insert(xe.id, ce.id);
        }
        for t in 0..client.threads.len() {
            let client_steps = client_sk.step_events(t);
            let exp_steps = exp_sk.step_events(t);
            for (&cs, &xs) in &e.accesses[t] {
                if let (Some(c), Some(x)) = (client_steps[cs], exp_steps[xs]) {
                    data.insert(x, c);
                }
            }
        }
        let ops = e
            .spans
            .iter()
            .map(|s| {
                let exp_steps = exp_sk.step_events(s.thread);
                let client_event = client_sk.step_events(s.thread)[s.client_stmt].expect("lock statement has an event");
                Op {
                    client_event,
                    thread: s.thread,
                    kind: client_sk.events[client_event].kind,
                    lock: s.lock.clone(),
                    reps: s.reps.iter().map(|(c, &i)| (c.clone(), exp_steps[i].expect("lock access has an event"))).collect(),
                }
            })
            .collect();
        Correspondence { client: client_sk, ops, data }
    }
}

/// `(po ∪ rf)⁺` restricted to the events on `loc`.
fn cell_order(g: &ExecutionGraph, loc: &str) -> Relation {
    let on = g.select(|e| e.loc == loc);
    g.po.union(&g.rf).restrict(&on).trans_closure()
}

/// The lock order over the client's lock events induced by an execution
/// of one of its expansions.
pub fn derive_lo(g: &ExecutionGraph, corr: &Correspondence, kind: LockKind) -> Result<Relation, MrswError> {
    let n = corr.client.len();
    let mut lo = Relation::empty(n);
    let mut orders: BTreeMap<String, Relation> = BTreeMap::new();
    let mut order = |c: &str| orders.entry(c.to_string()).or_insert_with(|| cell_order(g, c)).clone();
    let top = 1u32;
    for a in &corr.ops {
        for b in &corr.ops {
            if a.client_event == b.client_event || a.lock != b.lock {
                continue;
            }
            let ordered = if a.thread == b.thread {
                corr.client.po.contains(a.client_event, b.client_event)
            } else {
                let c = match kind {
                    LockKind::FullSync => a.lock.clone(),
                    LockKind::WriteSync => {
                        let reader_thread = match (a.kind.is_reader_lock(), b.kind.is_reader_lock()) {
                            (false, false) => top,
                            (true, false) => a.thread as u32 + 1,
                            (false, true) => b.thread as u32 + 1,
                            (true, true) => continue,
                        };
                        cell(&a.lock, reader_thread)
                    }
                };
                let r = order(&c);
                r.contains(a.reps[&c], b.reps[&c])
            };
            if ordered {
                lo.insert(a.client_event, b.client_event);
            }
        }
    }
    let lo = lo.trans_closure();
    if !lo.irreflexive() {
        return Err(MrswError::CyclicLockOrder { program: corr.client.program.clone() });
    }
    Ok(lo)
}

/// The client-level graph of an expanded execution: client events with
/// their values, `rf` and `mo` on client locations, and the derived `lo`.
pub fn abstract_graph(g: &ExecutionGraph, corr: &Correspondence, lo: Relation) -> ExecutionGraph {
    let n = corr.client.len();
    let mut events: Vec<Event> = corr.client.events.clone();
    for (&x, &c) in &corr.data {
        events[c].rval = g.event(x).rval;
        events[c].wval = g.event(x).wval;
    }
    let map = |r: &Relation| {
        Relation::from_pairs(n, r.pairs().filter_map(|(a, b)| Some((*corr.data.get(&a)?, *corr.data.get(&b)?))))
    };
    ExecutionGraph::from_parts(events, corr.client.po.clone(), map(&g.rf), map(&g.mo), lo)
}

/// Reader lock events of different threads on the same lock that `lo`
/// leaves unordered.
pub fn unordered_reader_pairs(g: &ExecutionGraph) -> Vec<(EventId, EventId)> {
    let readers: Vec<&Event> = g.events().iter().filter(|e| e.kind.is_reader_lock()).collect();
    let mut out = Vec::new();
    for (i, a) in readers.iter().enumerate() {
        for b in &readers[i + 1..] {
            if a.tid != b.tid && a.loc == b.loc && !g.lo.contains(a.id, b.id) && !g.lo.contains(b.id, a.id) {
                out.push((a.id, b.id));
            }
        }
    }
    out
}

pub const CHECKED_AXIOMS: [Axiom; 5] = [Axiom::WSync, Axiom::WEx, Axiom::RShare, Axiom::RSync, Axiom::Acyc];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionVerdict {
    /// Index of the unrolling the execution belongs to.
    pub variant: usize,
    pub axioms: BTreeMap<Axiom, bool>,
    pub unordered_readers: Vec<(EventId, EventId)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub holds: usize,
    pub fails: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockReport {
    pub client: String,
    pub implementation: LockKind,
    pub spin_bound: usize,
    pub variants: usize,
    pub executions: usize,
    /// Executions in which some spin loop never succeeded.
    pub dropped: usize,
    pub tallies: BTreeMap<Axiom, Tally>,
    /// Executions with at least one unordered reader pair.
    pub reader_unordered_executions: usize,
    pub per_execution: Vec<ExecutionVerdict>,
}

impl LockReport {
    pub fn always_holds(&self, a: Axiom) -> bool {
        self.tallies.get(&a).is_some_and(|t| t.fails == 0)
    }

    /// Every axiom the implementation guarantees held on every execution.
    pub fn guarantees_hold(&self) -> bool {
        self.implementation.guaranteed_axioms().iter().all(|&a| self.always_holds(a))
    }
}

pub fn verify_lock_axioms(client: &Program, imp: LockImpl, opts: &EnumOptions) -> Result<LockReport, MrswError> {
    let expansions = expand_lock_ops(client, imp)?;
    let mut per_execution = Vec::new();
    let mut dropped = 0;
    for (v, e) in expansions.iter().enumerate() {
        if e.stuck {
            dropped += for_each_consistent(&e.program, ModelId::Ra, opts, |_, _| {})?;
            continue;
        }
        let corr = Correspondence::new(client, e);
        let found = Mutex::new(Vec::new());
        let failure = Mutex::new(None);
        for_each_consistent(&e.program, ModelId::Ra, opts, |g, _| {
            match derive_lo(g, &corr, imp.kind) {
                Ok(lo) => {
                    let abs = abstract_graph(g, &corr, lo);
                    let verdict = consistency::check(ModelId::RaRsync, &abs).expect("client graphs have RA shape");
                    let axioms = CHECKED_AXIOMS.iter().map(|&a| (a, !verdict.violated_axioms.contains(&a))).collect();
                    let ev = ExecutionVerdict { variant: v, axioms, unordered_readers: unordered_reader_pairs(&abs) };
                    found.lock().unwrap().push((graph_key(g), ev));
                }
                Err(err) => *failure.lock().unwrap() = Some(err),
            }
        })?;
        if let Some(err) = failure.into_inner().unwrap() {
            return Err(err);
        }
        let mut found = found.into_inner().unwrap();
        found.sort_by(|a, b| a.0.cmp(&b.0));
        per_execution.extend(found.into_iter().map(|(_, ev)| ev));
    }
    let mut tallies: BTreeMap<Axiom, Tally> = CHECKED_AXIOMS.iter().map(|&a| (a, Tally::default())).collect();
    for ev in &per_execution {
        for (a, ok) in &ev.axioms {
            let t = tallies.get_mut(a).unwrap();
            if *ok {
                t.holds += 1;
            } else {
                t.fails += 1;
            }
        }
    }
    Ok(LockReport {
        client: client.name.clone(),
        implementation: imp.kind,
        spin_bound: imp.spin_bound,
        variants: expansions.len(),
        executions: per_execution.len(),
        dropped,
        tallies,
        reader_unordered_executions: per_execution.iter().filter(|e| !e.unordered_readers.is_empty()).count(),
        per_execution,
    })
}

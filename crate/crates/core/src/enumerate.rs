//! Exhaustive enumeration of the execution graphs of a litmus program.
//!
//! A program is first turned into a [`Skeleton`]: its events with kinds,
//! locations and `po`, but no values. Because programs are straight-line the
//! skeleton does not depend on what reads return. The search then proceeds
//!
//! 1. `rf`: each read picks a same-location write. Candidates that close a
//!    `po ∪ rf` cycle are dropped: such a cycle makes `hb`, `si-hb` and
//!    `rsi-hb` relate some event to itself, which every model rejects. The
//!    partially assigned `rf` is evaluated eagerly so failed `assume`s and
//!    CAS expectations prune early.
//! 2. `mo`: one total order per location, built as a sequence; the placed
//!    prefix is already `mo`-before every unplaced write, so the partial order
//!    is a subset of every completion and the monotone checks prune soundly.
//! 3. `lo` (RA only): per lock, a choice from the orders satisfying WSync,
//!    WEx and RShare for that lock; these depend only on `po` and are
//!    computed once.
//!
//! Under plain RA, `lo` is enumerated as a total order of the writer-class
//! events (WL, WU, PL) with each reader event (RL, RU) placed at a cut of
//! that order. Reader pairs are left unordered unless transitivity forces
//! them: removing such edges keeps every axiom satisfied, so no outcome is
//! lost. Under RA with RSync every pair must be ordered, so `lo` ranges over
//! all total orders of each lock's events.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consistency::{Frame, ModelId};
use crate::graph::{Event, EventId, ExecutionGraph, Kind};
use crate::litmus::{self, Outcome, Program, Stmt, HIDDEN_PREFIX};
use crate::relation::Relation;

pub const DEFAULT_MAX_EVENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumOptions {
    /// Enumeration refuses skeletons with more events than this.
    pub max_events: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { max_events: DEFAULT_MAX_EVENTS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("program `{program}` has {events} events, above the limit of {limit} (raise --max-events)")]
    TooManyEvents { program: String, events: usize, limit: usize },
    #[error("model {model} does not apply to program `{program}`: {reason}")]
    ModelMismatch { model: ModelId, program: String, reason: String },
    #[error("invalid program `{program}`: {reason}")]
    Invalid { program: String, reason: String },
}

#[derive(Debug, Clone)]
enum Step {
    Event(EventId, Stmt),
    Local(Stmt),
}

/// Events, `po` and per-thread evaluation steps of a program.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub program: String,
    pub thread_names: Vec<String>,
    /// Events in id order; read and written values are unset except for the
    /// initialisation writes.
    pub events: Vec<Event>,
    pub po: Relation,
    steps: Vec<Vec<Step>>,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Reads and updates, in id order.
    pub fn reads(&self) -> Vec<EventId> {
        self.events.iter().filter(|e| e.kind.is_read()).map(|e| e.id).collect()
    }

    /// Writes and updates (including initialisation) per location.
    pub fn writes_by_loc(&self) -> BTreeMap<String, Vec<EventId>> {
        let mut m: BTreeMap<String, Vec<EventId>> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.kind.is_write()) {
            m.entry(e.loc.clone()).or_default().push(e.id);
        }
        m
    }

    pub fn locks_by_loc(&self) -> BTreeMap<String, Vec<EventId>> {
        let mut m: BTreeMap<String, Vec<EventId>> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.kind.is_lock()) {
            m.entry(e.loc.clone()).or_default().push(e.id);
        }
        m
    }

    /// For thread `t`, the event of each non-transaction statement in
    /// flattened program order (`None` for `let` and `assume`).
    pub fn step_events(&self, t: usize) -> Vec<Option<EventId>> {
        self.steps[t]
            .iter()
            .map(|s| match s {
                Step::Event(e, _) => Some(*e),
                Step::Local(_) => None,
            })
            .collect()
    }

    /// The skeleton as a graph with empty `rf`, `mo` and `lo`.
    pub fn base_graph(&self) -> ExecutionGraph {
        let n = self.len();
        ExecutionGraph::from_parts(self.events.clone(), self.po.clone(), Relation::empty(n), Relation::empty(n), Relation::empty(n))
    }

    /// Runs every thread as far as `src` allows. `src[r]` is the write read
    /// by read `r`.
    pub fn evaluate(&self, src: &[Option<EventId>]) -> Evaluation {
        let n = self.len();
        let mut rval = vec![None; n];
        let mut wval: Vec<Option<i64>> = self.events.iter().map(|e| e.wval).collect();
        let mut regs = vec![BTreeMap::new(); self.steps.len()];
        let mut pc = vec![0usize; self.steps.len()];
        loop {
            let mut progress = false;
            for t in 0..self.steps.len() {
                while pc[t] < self.steps[t].len() {
                    match exec_step(&self.steps[t][pc[t]], src, &mut rval, &mut wval, &mut regs[t]) {
                        StepResult::Done => {
                            pc[t] += 1;
                            progress = true;
                        }
                        StepResult::Blocked => break,
                        StepResult::Reject => return Evaluation::Reject,
                    }
                }
            }
            if !progress {
                break;
            }
        }
        if (0..self.steps.len()).any(|t| pc[t] < self.steps[t].len()) {
            return Evaluation::Partial;
        }
        Evaluation::Done(Valuation { rval, wval, regs })
    }

    pub fn outcome(&self, v: &Valuation) -> Outcome {
        let mut o = Outcome::new();
        for (t, regs) in v.regs.iter().enumerate() {
            for (r, val) in regs {
                if !r.starts_with(HIDDEN_PREFIX) {
                    o.insert(format!("{}:{}", self.thread_names[t], r), *val);
                }
            }
        }
        o
    }

    /// Events carrying the values of `v`.
    pub fn valued_events(&self, v: &Valuation) -> Vec<Event> {
        self.events
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if e.kind.is_read() {
                    e.rval = v.rval[e.id];
                }
                if e.kind.is_write() {
                    e.wval = v.wval[e.id];
                }
                e
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    pub rval: Vec<Option<i64>>,
    pub wval: Vec<Option<i64>>,
    /// Final registers per thread.
    pub regs: Vec<BTreeMap<String, i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluation {
    Done(Valuation),
    /// Some thread waits on a read whose source is unassigned or unevaluated.
    Partial,
    /// An `assume` or a CAS expectation failed.
    Reject,
}

enum StepResult {
    Done,
    Blocked,
    Reject,
}

fn exec_step(
    step: &Step,
    src: &[Option<EventId>],
    rval: &mut [Option<i64>],
    wval: &mut [Option<i64>],
    regs: &mut BTreeMap<String, i64>,
) -> StepResult {
    let read_value = |e: EventId, wval: &[Option<i64>]| src[e].and_then(|w| wval[w]);
    match step {
        Step::Local(Stmt::Let { reg, expr }) => {
            let v = expr.eval(regs).expect("validated program");
            regs.insert(reg.clone(), v);
        }
        Step::Local(Stmt::Assume(c)) => {
            if !c.eval(regs).expect("validated program") {
                return StepResult::Reject;
            }
        }
        Step::Event(e, Stmt::Read { reg, .. }) => {
            let Some(v) = read_value(*e, wval) else { return StepResult::Blocked };
            rval[*e] = Some(v);
            regs.insert(reg.clone(), v);
        }
        Step::Event(e, Stmt::Write { expr, .. }) => {
            wval[*e] = Some(expr.eval(regs).expect("validated program"));
        }
        Step::Event(e, Stmt::Cas { reg, expected, new, .. }) => {
            let Some(v) = read_value(*e, wval) else { return StepResult::Blocked };
            if Some(v) != expected.eval(regs) {
                return StepResult::Reject;
            }
            rval[*e] = Some(v);
            wval[*e] = new.eval(regs);
            if let Some(r) = reg {
                regs.insert(r.clone(), v);
            }
        }
        Step::Event(e, Stmt::Faa { reg, delta, .. }) => {
            let Some(v) = read_value(*e, wval) else { return StepResult::Blocked };
            rval[*e] = Some(v);
            wval[*e] = Some(v + delta);
            if let Some(r) = reg {
                regs.insert(r.clone(), v);
            }
        }
        Step::Event(_, Stmt::Lock { .. }) => {}
        Step::Event(..) | Step::Local(_) => unreachable!("transactions are flattened"),
    }
    StepResult::Done
}

/// Builds the skeleton: initialisation writes first (one per accessed
/// location, sorted), then each thread's events in program order. Thread
/// `i` gets id `i + 1`; transactions are numbered from 1 in program order.
pub fn skeleton(p: &Program) -> Skeleton {
    let mut events = Vec::new();
    for loc in p.memory_locations() {
        let id = events.len();
        events.push(Event { id, tid: 0, txid: 0, kind: Kind::W, loc, rval: None, wval: Some(0) });
    }
    let inits = events.len();
    let mut steps = Vec::new();
    let mut txid = 0;
    let mut thread_events = Vec::new();
    for (t, th) in p.threads.iter().enumerate() {
        let tid = t as u32 + 1;
        let mut st = Vec::new();
        let mut ids = Vec::new();
        let push = |s: &Stmt, tx: u32, events: &mut Vec<Event>, st: &mut Vec<Step>| {
            let (kind, loc) = match s {
                Stmt::Read { loc, .. } => (Kind::R, loc.clone()),
                Stmt::Write { loc, .. } => (Kind::W, loc.clone()),
                Stmt::Cas { loc, .. } | Stmt::Faa { loc, .. } => (Kind::U, loc.clone()),
                Stmt::Lock { op, lock } => (op.kind(), lock.clone()),
                Stmt::Let { .. } | Stmt::Assume(_) => {
                    st.push(Step::Local(s.clone()));
                    return None;
                }
                Stmt::Tx(_) => unreachable!(),
            };
            let id = events.len();
            events.push(Event { id, tid, txid: tx, kind, loc, rval: None, wval: None });
            st.push(Step::Event(id, s.clone()));
            Some(id)
        };
        for s in &th.body {
            if let Stmt::Tx(body) = s {
                txid += 1;
                for s2 in body {
                    ids.extend(push(s2, txid, &mut events, &mut st));
                }
            } else {
                ids.extend(push(s, 0, &mut events, &mut st));
            }
        }
        steps.push(st);
        thread_events.push(ids);
    }
    let n = events.len();
    let mut po = Relation::empty(n);
    for i in 0..inits {
        for j in inits..n {
            po.insert(i, j);
        }
    }
    for ids in &thread_events {
        for (k, &a) in ids.iter().enumerate() {
            for &b in &ids[k + 1..] {
                po.insert(a, b);
            }
        }
    }
    Skeleton {
        program: p.name.clone(),
        thread_names: p.threads.iter().map(|t| t.name.clone()).collect(),
        events,
        po,
        steps,
    }
}

/// Checks that `p` has the shape `m` is defined on.
pub fn check_program(p: &Program, m: ModelId) -> Result<(), EnumError> {
    let mismatch = |reason: &str| Err(EnumError::ModelMismatch { model: m, program: p.name.clone(), reason: reason.to_string() });
    let diags = litmus::validate(p);
    if let Some(d) = diags.first() {
        return Err(EnumError::Invalid { program: p.name.clone(), reason: d.to_string() });
    }
    match m {
        ModelId::SiAxiomatic | ModelId::SiHb => {
            if p.has_locks() {
                return mismatch("SI programs cannot use locks");
            }
            if p.has_non_transactional() {
                return mismatch("SI applies to transaction-only programs; it has non-transactional accesses");
            }
        }
        ModelId::Rsi => {
            if p.has_locks() {
                return mismatch("RSI programs cannot use locks");
            }
        }
        ModelId::Ra | ModelId::RaRsync => {
            if p.has_transactions() {
                return mismatch("RA applies to implementation programs without transactions (translate it first)");
            }
        }
    }
    Ok(())
}

fn check_size(sk: &Skeleton, opts: &EnumOptions) -> Result<(), EnumError> {
    if sk.len() > opts.max_events {
        return Err(EnumError::TooManyEvents { program: sk.program.clone(), events: sk.len(), limit: opts.max_events });
    }
    Ok(())
}

/// An `rf` choice together with the values it induces.
#[derive(Debug, Clone)]
pub struct RfCandidate {
    pub rf: Relation,
    pub valuation: Valuation,
}

/// Every `rf` that is acyclic with `po` and whose induced values satisfy all
/// `assume`s and CAS expectations.
pub fn enumerate_rf(sk: &Skeleton) -> Vec<RfCandidate> {
    let n = sk.len();
    let reads = {
        let mut r = sk.reads();
        // Interleave threads by position so evaluation can progress early.
        let mut pos = vec![0usize; n];
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        for e in &sk.events {
            let c = seen.entry(e.tid).or_default();
            pos[e.id] = *c;
            *c += 1;
        }
        r.sort_by_key(|&e| (pos[e], sk.events[e].tid));
        r
    };
    let by_loc = sk.writes_by_loc();
    let options: Vec<Vec<EventId>> = reads
        .iter()
        .map(|&r| {
            by_loc
                .get(&sk.events[r].loc)
                .map(|ws| ws.iter().copied().filter(|&w| w != r && !sk.po.contains(r, w)).collect())
                .unwrap_or_default()
        })
        .collect();
    let mut out = Vec::new();
    let mut src = vec![None; n];
    let mut porf = sk.po.clone();
    rf_dfs(sk, &reads, &options, 0, &mut src, &mut porf, &mut out);
    out
}

fn rf_dfs(
    sk: &Skeleton,
    reads: &[EventId],
    options: &[Vec<EventId>],
    i: usize,
    src: &mut Vec<Option<EventId>>,
    porf: &mut Relation,
    out: &mut Vec<RfCandidate>,
) {
    if i == reads.len() {
        if let Evaluation::Done(valuation) = sk.evaluate(src) {
            let rf = Relation::from_pairs(sk.len(), reads.iter().map(|&r| (src[r].unwrap(), r)));
            out.push(RfCandidate { rf, valuation });
        }
        return;
    }
    let r = reads[i];
    for &w in &options[i] {
        porf.insert(w, r);
        src[r] = Some(w);
        if porf.acyclic() && sk.evaluate(src) != Evaluation::Reject {
            rf_dfs(sk, reads, options, i + 1, src, porf, out);
        }
        src[r] = None;
        porf.remove(w, r);
    }
}

/// All per-location total orders over writes, without filtering.
pub fn enumerate_mo(sk: &Skeleton) -> Vec<Relation> {
    let n = sk.len();
    let groups: Vec<Vec<EventId>> = sk.writes_by_loc().into_values().collect();
    let mut out = vec![Relation::empty(n)];
    for g in groups {
        let perms = permutations(&g);
        out = out
            .iter()
            .flat_map(|base| {
                perms.iter().map(move |p| {
                    let mut r = base.clone();
                    add_chain(&mut r, p);
                    r
                })
            })
            .collect();
    }
    out
}

fn permutations(items: &[EventId]) -> Vec<Vec<EventId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Adds the strict total order given by `seq`.
fn add_chain(r: &mut Relation, seq: &[EventId]) {
    for (i, &a) in seq.iter().enumerate() {
        for &b in &seq[i + 1..] {
            r.insert(a, b);
        }
    }
}

/// The `lo` choices for each lock: relations over that lock's events
/// satisfying WSync, WEx and RShare (and RSync when `rsync`), acyclic with
/// `po`, transitively closed.
pub fn enumerate_lo(sk: &Skeleton, rsync: bool) -> Vec<Vec<Relation>> {
    let g = sk.base_graph();
    let frame = Frame::new(&g);
    sk.locks_by_loc()
        .into_values()
        .map(|events| {
            let candidates = if rsync {
                linear_extensions(&events, &sk.po)
                    .into_iter()
                    .map(|seq| {
                        let mut r = Relation::empty(sk.len());
                        add_chain(&mut r, &seq);
                        r
                    })
                    .collect()
            } else {
                writer_cut_orders(sk, &events)
            };
            candidates.into_iter().filter(|lo| frame.lock_axioms_local(lo) && sk.po.union(lo).acyclic()).collect()
        })
        .collect()
}

/// Orders of `items` that extend `po`.
fn linear_extensions(items: &[EventId], po: &Relation) -> Vec<Vec<EventId>> {
    fn go(rest: &mut Vec<EventId>, prefix: &mut Vec<EventId>, po: &Relation, out: &mut Vec<Vec<EventId>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest[i];
            if rest.iter().any(|&y| y != x && po.contains(y, x)) {
                continue;
            }
            rest.remove(i);
            prefix.push(x);
            go(rest, prefix, po, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut items.to_vec(), &mut Vec::new(), po, &mut out);
    out
}

fn writer_cut_orders(sk: &Skeleton, events: &[EventId]) -> Vec<Relation> {
    let n = sk.len();
    let (writers, readers): (Vec<EventId>, Vec<EventId>) = events.iter().partition(|&&e| sk.events[e].kind.is_writer_lock());
    let mut out = Vec::new();
    for seq in linear_extensions(&writers, &sk.po) {
        let mut base = Relation::empty(n);
        add_chain(&mut base, &seq);
        // cut c: the reader follows seq[..c] and precedes seq[c..].
        let bounds: Vec<(usize, usize)> = readers
            .iter()
            .map(|&r| {
                let lo = seq.iter().rposition(|&w| sk.po.contains(w, r)).map_or(0, |i| i + 1);
                let hi = seq.iter().position(|&w| sk.po.contains(r, w)).unwrap_or(seq.len());
                (lo, hi)
            })
            .collect();
        let mut cuts = vec![0usize; readers.len()];
        cut_dfs(&seq, &readers, &bounds, 0, &mut cuts, &base, sk, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cut_dfs(
    seq: &[EventId],
    readers: &[EventId],
    bounds: &[(usize, usize)],
    i: usize,
    cuts: &mut Vec<usize>,
    base: &Relation,
    sk: &Skeleton,
    out: &mut Vec<Relation>,
) {
    if i == readers.len() {
        let mut lo = base.clone();
        for (k, &r) in readers.iter().enumerate() {
            for (j, &w) in seq.iter().enumerate() {
                if j < cuts[k] {
                    lo.insert(w, r);
                } else {
                    lo.insert(r, w);
                }
            }
        }
        out.push(lo.trans_closure());
        return;
    }
    let (lo, hi) = bounds[i];
    for c in lo..=hi.max(lo) {
        if c > hi {
            break;
        }
        // A reader po-after another may not sit at an earlier cut.
        if (0..i).any(|k| sk.po.contains(readers[k], readers[i]) && cuts[k] > c || sk.po.contains(readers[i], readers[k]) && c > cuts[k]) {
            continue;
        }
        cuts[i] = c;
        cut_dfs(seq, readers, bounds, i + 1, cuts, base, sk, out);
    }
}

/// A graph admitted by a model, with the outcome it produces.
#[derive(Debug, Clone)]
pub struct Found {
    pub graph: ExecutionGraph,
    pub outcome: Outcome,
}

struct Search<'a> {
    sk: &'a Skeleton,
    model: ModelId,
    frame: Frame,
    mo_groups: Vec<Vec<EventId>>,
    lo_choices: Vec<Vec<Relation>>,
}

impl Search<'_> {
    fn run_candidate(&self, c: &RfCandidate, f: &(impl Fn(&ExecutionGraph, &Outcome) + Sync)) -> usize {
        let n = self.sk.len();
        let events = self.sk.valued_events(&c.valuation);
        let outcome = self.sk.outcome(&c.valuation);
        let mut count = 0;
        let mut emit = |mo: &Relation, lo: &Relation| {
            let g = ExecutionGraph::from_parts(events.clone(), self.sk.po.clone(), c.rf.clone(), mo.clone(), lo.clone());
            count += 1;
            f(&g, &outcome);
        };
        let empty = Relation::empty(n);
        if !self.frame.may_extend(self.model, &c.rf, &empty, &empty) {
            return 0;
        }
        let mut mo = Relation::empty(n);
        self.mo_dfs(&c.rf, 0, &mut Vec::new(), &mut mo, &mut emit);
        count
    }

    fn mo_dfs(&self, rf: &Relation, g: usize, placed: &mut Vec<EventId>, mo: &mut Relation, emit: &mut impl FnMut(&Relation, &Relation)) {
        if g == self.mo_groups.len() {
            let empty = Relation::empty(self.sk.len());
            self.lo_dfs(rf, mo, 0, &empty, emit);
            return;
        }
        let group = &self.mo_groups[g];
        if placed.len() == group.len() {
            let saved = std::mem::take(placed);
            self.mo_dfs(rf, g + 1, placed, mo, emit);
            *placed = saved;
            return;
        }
        for &w in group {
            if placed.contains(&w) {
                continue;
            }
            let before = mo.clone();
            for &u in group {
                if u != w && !placed.contains(&u) {
                    mo.insert(w, u);
                }
            }
            placed.push(w);
            if self.frame.may_extend(self.model, rf, mo, &Relation::empty(self.sk.len())) {
                self.mo_dfs(rf, g, placed, mo, emit);
            }
            placed.pop();
            *mo = before;
        }
    }

    fn lo_dfs(&self, rf: &Relation, mo: &Relation, i: usize, lo: &Relation, emit: &mut impl FnMut(&Relation, &Relation)) {
        if i == self.lo_choices.len() {
            if self.frame.verdict(self.model, rf, mo, lo).consistent {
                emit(mo, lo);
            }
            return;
        }
        for choice in &self.lo_choices[i] {
            let next = lo.union(choice);
            if self.frame.may_extend(self.model, rf, mo, &next) {
                self.lo_dfs(rf, mo, i + 1, &next, emit);
            }
        }
    }
}

/// Calls `f` on every graph of `p` consistent under `m`, in parallel over
/// `rf` candidates. Returns the number of graphs.
pub fn for_each_consistent(
    p: &Program,
    m: ModelId,
    opts: &EnumOptions,
    f: impl Fn(&ExecutionGraph, &Outcome) + Sync,
) -> Result<usize, EnumError> {
    check_program(p, m)?;
    let sk = skeleton(p);
    check_size(&sk, opts)?;
    let g = sk.base_graph();
    let search = Search {
        sk: &sk,
        model: m,
        frame: Frame::new(&g),
        mo_groups: sk.writes_by_loc().into_values().filter(|ws| ws.len() > 1).collect(),
        lo_choices: if m.is_ra() { enumerate_lo(&sk, m == ModelId::RaRsync) } else { Vec::new() },
    };
    let candidates = enumerate_rf(&sk);
    Ok(candidates.par_iter().map(|c| search.run_candidate(c, &f)).sum())
}

/// Every consistent graph, in a deterministic order.
pub fn enumerate_consistent(p: &Program, m: ModelId, opts: &EnumOptions) -> Result<Vec<ExecutionGraph>, EnumError> {
    let found = std::sync::Mutex::new(Vec::new());
    for_each_consistent(p, m, opts, |g, _| found.lock().unwrap().push(g.clone()))?;
    let mut out = found.into_inner().unwrap();
    out.sort_by_cached_key(graph_key);
    Ok(out)
}

/// `rf`, `mo` and `lo` as sorted pair lists.
pub type GraphKey = (Vec<(usize, usize)>, Vec<(usize, usize)>, Vec<(usize, usize)>);

/// A total, deterministic sort key for graphs over the same skeleton.
pub fn graph_key(g: &ExecutionGraph) -> GraphKey {
    (g.rf.pairs().collect(), g.mo.pairs().collect(), g.lo.pairs().collect())
}

/// Outcomes of all consistent graphs, with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSet {
    pub model: ModelId,
    pub program: String,
    pub program_hash: String,
    pub graph_count: usize,
    pub outcomes: BTreeSet<Outcome>,
}

impl OutcomeSet {
    pub fn contains_matching(&self, partial: &Outcome) -> bool {
        self.outcomes.iter().any(|o| partial.iter().all(|(k, v)| o.get(k) == Some(v)))
    }

    /// Outcomes restricted to `keys`.
    pub fn project(&self, keys: &BTreeSet<String>) -> BTreeSet<Outcome> {
        self.outcomes
            .iter()
            .map(|o| o.iter().filter(|(k, _)| keys.contains(*k)).map(|(k, v)| (k.clone(), *v)).collect())
            .collect()
    }
}

pub fn program_hash(p: &Program) -> String {
    let digest = Sha256::digest(litmus::serialize(p).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn outcomes(p: &Program, m: ModelId, opts: &EnumOptions) -> Result<OutcomeSet, EnumError> {
    let found = std::sync::Mutex::new(BTreeSet::new());
    let graph_count = for_each_consistent(p, m, opts, |_, o| {
        let mut set = found.lock().unwrap();
        if !set.contains(o) {
            set.insert(o.clone());
        }
    })?;
    Ok(OutcomeSet {
        model: m,
        program: p.name.clone(),
        program_hash: program_hash(p),
        graph_count,
        outcomes: found.into_inner().unwrap(),
    })
}

/// Every graph over `rf × mo` with consistent values, whether or not any
/// model admits it; `lo` is empty.
pub fn enumerate_candidates(p: &Program, opts: &EnumOptions) -> Result<Vec<ExecutionGraph>, EnumError> {
    let diags = litmus::validate(p);
    if let Some(d) = diags.first() {
        return Err(EnumError::Invalid { program: p.name.clone(), reason: d.to_string() });
    }
    let sk = skeleton(p);
    check_size(&sk, opts)?;
    let mos = enumerate_mo(&sk);
    let n = sk.len();
    let mut out = Vec::new();
    for c in enumerate_rf(&sk) {
        let events = sk.valued_events(&c.valuation);
        for mo in &mos {
            out.push(ExecutionGraph::from_parts(events.clone(), sk.po.clone(), c.rf.clone(), mo.clone(), Relation::empty(n)));
        }
    }
    Ok(out)
}

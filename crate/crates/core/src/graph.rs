//! Events, execution graphs and the derived relations shared by every model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::{EventSet, Relation};

pub type EventId = usize;

/// Event type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    R,
    W,
    U,
    RL,
    RU,
    WL,
    WU,
    PL,
}

impl Kind {
    pub fn is_read(self) -> bool {
        matches!(self, Kind::R | Kind::U)
    }

    pub fn is_write(self) -> bool {
        matches!(self, Kind::W | Kind::U)
    }

    pub fn is_lock(self) -> bool {
        matches!(self, Kind::RL | Kind::RU | Kind::WL | Kind::WU | Kind::PL)
    }

    /// Lock events that synchronise with every other call on the same lock.
    pub fn is_writer_lock(self) -> bool {
        matches!(self, Kind::WL | Kind::WU | Kind::PL)
    }

    pub fn is_reader_lock(self) -> bool {
        matches!(self, Kind::RL | Kind::RU)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    /// Thread id; 0 is reserved for initialisation writes.
    pub tid: u32,
    /// Transaction id; 0 marks non-transactional events.
    pub txid: u32,
    pub kind: Kind,
    pub loc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rval: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wval: Option<i64>,
}

impl Event {
    pub fn is_init(&self) -> bool {
        self.tid == 0
    }

    pub fn is_transactional(&self) -> bool {
        self.txid != 0
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}({}", self.id, self.kind, self.loc)?;
        if let Some(v) = self.rval {
            write!(f, ",r={v}")?;
        }
        if let Some(v) = self.wval {
            write!(f, ",w={v}")?;
        }
        write!(f, ")@t{}", self.tid)?;
        if self.txid != 0 {
            write!(f, "/tx{}", self.txid)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("event ids must be dense and in order: position {pos} holds id {id}")]
    NonDenseIds { pos: usize, id: EventId },
    #[error("edge ({0}, {1}) references an unknown event")]
    UnknownEvent(EventId, EventId),
    #[error("event {0}: {1}")]
    BadEvent(EventId, String),
    #[error("initialisation: {0}")]
    BadInit(String),
    #[error("po: {0}")]
    BadPo(String),
    #[error("rf: {0}")]
    BadRf(String),
    #[error("mo: {0}")]
    BadMo(String),
    #[error("lo: {0}")]
    BadLo(String),
    #[error("transaction {0} is not po-contiguous within a single thread")]
    NonContiguousTx(u32),
    #[error("malformed graph document: {0}")]
    Json(String),
}

/// An execution graph `(E, po, rf, mo, lo)`.
///
/// Event ids coincide with positions in `events`. Relations are owned and
/// immutable once the graph is handed out.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExecutionGraph {
    events: Vec<Event>,
    loc_ids: Vec<usize>,
    pub po: Relation,
    pub rf: Relation,
    pub mo: Relation,
    pub lo: Relation,
}

impl fmt::Debug for ExecutionGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExecutionGraph")
            .field("events", &self.events.iter().map(|e| e.to_string()).collect::<Vec<_>>())
            .field("po", &self.po)
            .field("rf", &self.rf)
            .field("mo", &self.mo)
            .field("lo", &self.lo)
            .finish()
    }
}

impl ExecutionGraph {
    /// Builds a graph without checking well-formedness. `lo` is closed
    /// transitively.
    pub fn from_parts(events: Vec<Event>, po: Relation, rf: Relation, mo: Relation, lo: Relation) -> Self {
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &events {
            let next = names.len();
            names.entry(e.loc.as_str()).or_insert(next);
        }
        let loc_ids = events.iter().map(|e| names[e.loc.as_str()]).collect();
        let lo = lo.trans_closure();
        ExecutionGraph { events, loc_ids, po, rf, mo, lo }
    }

    /// Builds a graph and checks every well-formedness invariant.
    pub fn new(events: Vec<Event>, po: Relation, rf: Relation, mo: Relation, lo: Relation) -> Result<Self, GraphError> {
        let g = Self::from_parts(events, po, rf, mo, lo);
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> &Event {
        &self.events[id]
    }

    pub fn same_loc(&self, a: EventId, b: EventId) -> bool {
        self.loc_ids[a] == self.loc_ids[b]
    }

    pub(crate) fn loc_ids(&self) -> &[usize] {
        &self.loc_ids
    }

    pub fn select(&self, mut pred: impl FnMut(&Event) -> bool) -> EventSet {
        EventSet::from_iter_n(self.len(), self.events.iter().filter(|e| pred(e)).map(|e| e.id))
    }

    pub fn reads(&self) -> EventSet {
        self.select(|e| e.kind.is_read())
    }

    pub fn writes(&self) -> EventSet {
        self.select(|e| e.kind.is_write())
    }

    pub fn updates(&self) -> EventSet {
        self.select(|e| e.kind == Kind::U)
    }

    pub fn lock_events(&self) -> EventSet {
        self.select(|e| e.kind.is_lock())
    }

    pub fn of_kinds(&self, kinds: &[Kind]) -> EventSet {
        self.select(|e| kinds.contains(&e.kind))
    }

    pub fn transactional(&self) -> EventSet {
        self.select(|e| e.is_transactional())
    }

    pub fn non_transactional(&self) -> EventSet {
        self.select(|e| !e.is_transactional())
    }

    pub fn init_events(&self) -> EventSet {
        self.select(|e| e.is_init())
    }

    /// `r|loc`: keeps the pairs whose endpoints share a location.
    pub fn restrict_same_loc(&self, r: &Relation) -> Relation {
        r.filter(|a, b| self.same_loc(a, b))
    }

    /// Events of thread `tid` in program order.
    pub fn thread_order(&self, tid: u32) -> Vec<EventId> {
        let mut ids: Vec<EventId> = self.events.iter().filter(|e| e.tid == tid).map(|e| e.id).collect();
        ids.sort_by_key(|&id| ids_before(&self.po, id));
        ids
    }

    pub fn threads(&self) -> BTreeSet<u32> {
        self.events.iter().map(|e| e.tid).filter(|&t| t != 0).collect()
    }

    /// Checks every structural invariant of execution graphs.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.len();
        for (pos, e) in self.events.iter().enumerate() {
            if e.id != pos {
                return Err(GraphError::NonDenseIds { pos, id: e.id });
            }
            self.validate_event(e)?;
        }
        for r in [&self.po, &self.rf, &self.mo, &self.lo] {
            if r.universe() != n {
                return Err(GraphError::BadEvent(n, "relation universe does not match event count".into()));
            }
        }
        self.validate_init()?;
        self.validate_po()?;
        self.validate_rf()?;
        self.validate_mo()?;
        self.validate_lo()?;
        self.validate_transactions()
    }

    fn validate_event(&self, e: &Event) -> Result<(), GraphError> {
        let bad = |msg: &str| Err(GraphError::BadEvent(e.id, msg.to_string()));
        if e.is_transactional() && !matches!(e.kind, Kind::R | Kind::W) {
            return bad("transactions contain only reads and writes");
        }
        match e.kind {
            Kind::R if e.rval.is_none() || e.wval.is_some() => bad("a read carries exactly a read value"),
            Kind::W if e.wval.is_none() || e.rval.is_some() => bad("a write carries exactly a written value"),
            Kind::U if e.rval.is_none() || e.wval.is_none() => bad("an update carries both values"),
            k if k.is_lock() && (e.rval.is_some() || e.wval.is_some()) => bad("lock events carry no values"),
            _ => Ok(()),
        }
    }

    fn validate_init(&self) -> Result<(), GraphError> {
        let mut inits: BTreeMap<&str, usize> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.is_init()) {
            if e.kind != Kind::W || e.wval != Some(0) || e.txid != 0 {
                return Err(GraphError::BadInit(format!("event {} is not a non-transactional write of 0", e.id)));
            }
            *inits.entry(e.loc.as_str()).or_default() += 1;
        }
        let mem_locs: BTreeSet<&str> =
            self.events.iter().filter(|e| !e.kind.is_lock()).map(|e| e.loc.as_str()).collect();
        for loc in mem_locs {
            match inits.get(loc) {
                Some(1) => {}
                Some(k) => return Err(GraphError::BadInit(format!("{k} initialisation writes to {loc}"))),
                None => return Err(GraphError::BadInit(format!("no initialisation write to {loc}"))),
            }
        }
        Ok(())
    }

    fn validate_po(&self) -> Result<(), GraphError> {
        let po = &self.po;
        for a in &self.events {
            for b in &self.events {
                let (ab, ba) = (po.contains(a.id, b.id), po.contains(b.id, a.id));
                let expect_some = match (a.is_init(), b.is_init()) {
                    (true, true) => false,
                    (true, false) => {
                        if !ab || ba {
                            return Err(GraphError::BadPo(format!("init {} must precede {}", a.id, b.id)));
                        }
                        continue;
                    }
                    (false, true) => continue,
                    (false, false) => a.tid == b.tid && a.id != b.id,
                };
                if expect_some {
                    if ab == ba {
                        return Err(GraphError::BadPo(format!(
                            "events {} and {} of thread {} must be ordered exactly one way",
                            a.id, b.id, a.tid
                        )));
                    }
                } else if ab {
                    return Err(GraphError::BadPo(format!("unexpected edge ({}, {})", a.id, b.id)));
                }
            }
        }
        if !po.is_transitive() {
            return Err(GraphError::BadPo("not transitive".into()));
        }
        Ok(())
    }

    fn validate_rf(&self) -> Result<(), GraphError> {
        let mut sources = vec![0usize; self.len()];
        for (w, r) in self.rf.pairs() {
            let (we, re) = (&self.events[w], &self.events[r]);
            if !we.kind.is_write() || !re.kind.is_read() {
                return Err(GraphError::BadRf(format!("({w}, {r}) is not write-to-read")));
            }
            if we.loc != re.loc {
                return Err(GraphError::BadRf(format!("({w}, {r}) crosses locations")));
            }
            if we.wval != re.rval {
                return Err(GraphError::BadRf(format!("({w}, {r}) value mismatch")));
            }
            sources[r] += 1;
        }
        for e in self.events.iter().filter(|e| e.kind.is_read()) {
            if sources[e.id] != 1 {
                return Err(GraphError::BadRf(format!("read {} has {} sources", e.id, sources[e.id])));
            }
        }
        Ok(())
    }

    fn validate_mo(&self) -> Result<(), GraphError> {
        let mo = &self.mo;
        for (a, b) in mo.pairs() {
            if !self.events[a].kind.is_write() || !self.events[b].kind.is_write() || !self.same_loc(a, b) {
                return Err(GraphError::BadMo(format!("({a}, {b}) is not between same-location writes")));
            }
        }
        if !mo.irreflexive() || !mo.is_transitive() {
            return Err(GraphError::BadMo("not a strict order".into()));
        }
        for a in self.events.iter().filter(|e| e.kind.is_write()) {
            for b in self.events.iter().filter(|e| e.kind.is_write()) {
                if a.id < b.id && a.loc == b.loc && mo.contains(a.id, b.id) == mo.contains(b.id, a.id) {
                    return Err(GraphError::BadMo(format!("writes {} and {} not totally ordered", a.id, b.id)));
                }
            }
        }
        Ok(())
    }

    fn validate_lo(&self) -> Result<(), GraphError> {
        for (a, b) in self.lo.pairs() {
            if !self.events[a].kind.is_lock() || !self.events[b].kind.is_lock() {
                return Err(GraphError::BadLo(format!("({a}, {b}) relates non-lock events")));
            }
            if !self.same_loc(a, b) {
                return Err(GraphError::BadLo(format!("({a}, {b}) relates different locks")));
            }
        }
        if !self.lo.irreflexive() || !self.lo.is_transitive() {
            return Err(GraphError::BadLo("not a strict order".into()));
        }
        Ok(())
    }

    fn validate_transactions(&self) -> Result<(), GraphError> {
        let mut members: BTreeMap<u32, Vec<&Event>> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.is_transactional()) {
            members.entry(e.txid).or_default().push(e);
        }
        for (tx, evs) in members {
            let tid = evs[0].tid;
            if evs.iter().any(|e| e.tid != tid || e.is_init()) {
                return Err(GraphError::NonContiguousTx(tx));
            }
            let order = self.thread_order(tid);
            let idx: Vec<usize> =
                order.iter().enumerate().filter(|(_, &id)| self.events[id].txid == tx).map(|(i, _)| i).collect();
            if idx.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(GraphError::NonContiguousTx(tx));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphDoc::from(self)).expect("graph serialisation cannot fail")
    }

    /// Parses the JSON exchange format. `po`, `mo` and `lo` may be given as
    /// generating edges; they are closed transitively before validation.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        doc.try_into()
    }
}

fn ids_before(po: &Relation, id: EventId) -> usize {
    (0..po.universe()).filter(|&a| po.contains(a, id)).count()
}

/// Serialised form of an execution graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub events: Vec<Event>,
    #[serde(default)]
    pub po: Vec<(EventId, EventId)>,
    #[serde(default)]
    pub rf: Vec<(EventId, EventId)>,
    #[serde(default)]
    pub mo: Vec<(EventId, EventId)>,
    #[serde(default)]
    pub lo: Vec<(EventId, EventId)>,
}

impl From<&ExecutionGraph> for GraphDoc {
    fn from(g: &ExecutionGraph) -> Self {
        GraphDoc {
            events: g.events.clone(),
            po: g.po.pairs().collect(),
            rf: g.rf.pairs().collect(),
            mo: g.mo.pairs().collect(),
            lo: g.lo.pairs().collect(),
        }
    }
}

impl TryFrom<GraphDoc> for ExecutionGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDoc) -> Result<Self, GraphError> {
        let n = doc.events.len();
        for (pos, e) in doc.events.iter().enumerate() {
            if e.id != pos {
                return Err(GraphError::NonDenseIds { pos, id: e.id });
            }
        }
        let build = |pairs: &[(EventId, EventId)]| -> Result<Relation, GraphError> {
            let mut r = Relation::empty(n);
            for &(a, b) in pairs {
                if a >= n || b >= n {
                    return Err(GraphError::UnknownEvent(a, b));
                }
                r.insert(a, b);
            }
            Ok(r)
        };
        let po = build(&doc.po)?.trans_closure();
        let rf = build(&doc.rf)?;
        let mo = build(&doc.mo)?.trans_closure();
        let lo = build(&doc.lo)?;
        ExecutionGraph::new(doc.events, po, rf, mo, lo)
    }
}

/// `fr = (rf⁻¹ ; mo) \ [E]`.
pub fn derived_fr(g: &ExecutionGraph) -> Relation {
    let mut fr = g.rf.inverse().compose(&g.mo);
    for a in 0..g.len() {
        fr.remove(a, a);
    }
    fr
}

/// `st`: pairs of transactional events with equal transaction ids.
pub fn same_transaction(g: &ExecutionGraph) -> Relation {
    let mut st = Relation::empty(g.len());
    for a in g.events().iter().filter(|e| e.is_transactional()) {
        for b in g.events().iter().filter(|e| e.txid == a.txid) {
            st.insert(a.id, b.id);
        }
    }
    st
}

/// `st ; (r \ st) ; st`.
pub fn tlift(r: &Relation, st: &Relation) -> Relation {
    st.compose(&r.difference(st)).compose(st)
}

/// `r ∩ st`.
pub fn tin(r: &Relation, st: &Relation) -> Relation {
    r.intersection(st)
}

/// `r \ st`.
pub fn tout(r: &Relation, st: &Relation) -> Relation {
    r.difference(st)
}

/// Per thread and lock, the po-ordered lock events must follow a prefix of
/// `(RL·RU | WL·WU | RL·PL·WU)*`.
pub fn lock_trace_wellformed(g: &ExecutionGraph) -> bool {
    g.threads().into_iter().all(|tid| {
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        g.thread_order(tid).into_iter().map(|id| g.event(id)).filter(|e| e.kind.is_lock()).all(|e| {
            lock_step(state.entry(e.loc.as_str()).or_insert(0), e.kind)
        })
    })
}

/// One transition of the lock-trace automaton: 0 free, 1 read-held,
/// 2 write-held.
pub(crate) fn lock_step(state: &mut u8, kind: Kind) -> bool {
    let next = match (*state, kind) {
        (0, Kind::RL) => 1,
        (0, Kind::WL) => 2,
        (1, Kind::RU) => 0,
        (1, Kind::PL) => 2,
        (2, Kind::WU) => 0,
        _ => return false,
    };
    *state = next;
    true
}

/// Small builder for hand-written graphs in tests and fixtures.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    events: Vec<Event>,
    threads: BTreeMap<u32, Vec<EventId>>,
    rf: Vec<(EventId, EventId)>,
    mo: Vec<(EventId, EventId)>,
    lo: Vec<(EventId, EventId)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, tid: u32, txid: u32, kind: Kind, loc: &str, rval: Option<i64>, wval: Option<i64>) -> EventId {
        let id = self.events.len();
        self.events.push(Event { id, tid, txid, kind, loc: loc.to_string(), rval, wval });
        if tid != 0 {
            self.threads.entry(tid).or_default().push(id);
        }
        id
    }

    pub fn init(&mut self, loc: &str) -> EventId {
        self.push(0, 0, Kind::W, loc, None, Some(0))
    }

    pub fn read(&mut self, tid: u32, txid: u32, loc: &str, v: i64) -> EventId {
        self.push(tid, txid, Kind::R, loc, Some(v), None)
    }

    pub fn write(&mut self, tid: u32, txid: u32, loc: &str, v: i64) -> EventId {
        self.push(tid, txid, Kind::W, loc, None, Some(v))
    }

    pub fn update(&mut self, tid: u32, loc: &str, r: i64, w: i64) -> EventId {
        self.push(tid, 0, Kind::U, loc, Some(r), Some(w))
    }

    pub fn lock(&mut self, tid: u32, kind: Kind, loc: &str) -> EventId {
        assert!(kind.is_lock());
        self.push(tid, 0, kind, loc, None, None)
    }

    pub fn rf(&mut self, w: EventId, r: EventId) -> &mut Self {
        self.rf.push((w, r));
        self
    }

    /// Adds `mo` edges along the given chain.
    pub fn mo(&mut self, chain: &[EventId]) -> &mut Self {
        self.mo.extend(chain.windows(2).map(|w| (w[0], w[1])));
        self
    }

    pub fn lo(&mut self, chain: &[EventId]) -> &mut Self {
        self.lo.extend(chain.windows(2).map(|w| (w[0], w[1])));
        self
    }

    fn relations(&self) -> (Relation, Relation, Relation, Relation) {
        let n = self.events.len();
        let mut po = Relation::empty(n);
        for init in self.events.iter().filter(|e| e.is_init()) {
            for other in self.events.iter().filter(|e| !e.is_init()) {
                po.insert(init.id, other.id);
            }
        }
        for ids in self.threads.values() {
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    po.insert(a, b);
                }
            }
        }
        let rf = Relation::from_pairs(n, self.rf.iter().copied());
        let mo = Relation::from_pairs(n, self.mo.iter().copied()).trans_closure();
        let lo = Relation::from_pairs(n, self.lo.iter().copied());
        (po, rf, mo, lo)
    }

    pub fn build(&self) -> Result<ExecutionGraph, GraphError> {
        let (po, rf, mo, lo) = self.relations();
        ExecutionGraph::new(self.events.clone(), po, rf, mo, lo)
    }

    /// Builds without validation, for deliberately malformed fixtures.
    pub fn build_unchecked(&self) -> ExecutionGraph {
        let (po, rf, mo, lo) = self.relations();
        ExecutionGraph::from_parts(self.events.clone(), po, rf, mo, lo)
    }
}

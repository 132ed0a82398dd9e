//! Declarative consistency predicates: SI (two formulations), RA with lock
//! axioms, and RSI.
//!
//! Every predicate is a pure function of the graph. The enumerator evaluates
//! the same checks on partial graphs (some reads, writes or locks not yet
//! ordered); all checks except the lock axioms WSync/WEx/RShare/RSync are
//! monotone in `rf`, `mo` and `lo`, which is what makes that pruning sound.
//!
//! Initialisation writes carry transaction id 0. The SI predicates treat them
//! as one extra transaction that precedes everything (SI graphs are otherwise
//! fully transactional); RSI treats them as ordinary non-transactional writes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{derived_fr, same_transaction, tlift, ExecutionGraph, Kind};
use crate::relation::{EventSet, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "si")]
    SiAxiomatic,
    #[serde(rename = "si-hb")]
    SiHb,
    #[serde(rename = "ra")]
    Ra,
    #[serde(rename = "ra-rsync")]
    RaRsync,
    #[serde(rename = "rsi")]
    Rsi,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [ModelId::SiAxiomatic, ModelId::SiHb, ModelId::Ra, ModelId::RaRsync, ModelId::Rsi];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::SiAxiomatic => "si",
            ModelId::SiHb => "si-hb",
            ModelId::Ra => "ra",
            ModelId::RaRsync => "ra-rsync",
            ModelId::Rsi => "rsi",
        }
    }

    pub fn is_si(self) -> bool {
        matches!(self, ModelId::SiAxiomatic | ModelId::SiHb)
    }

    pub fn is_ra(self) -> bool {
        matches!(self, ModelId::Ra | ModelId::RaRsync)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}` (expected si, si-hb, ra, ra-rsync or rsi)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axiom {
    /// rf, mo and fr inside a transaction follow po.
    #[serde(rename = "int")]
    Int,
    /// Acyclicity of the lifted dependency relation.
    #[serde(rename = "ext")]
    Ext,
    /// Irreflexivity of SI-happens-before.
    #[serde(rename = "si-hb")]
    SiHb,
    WSync,
    WEx,
    RShare,
    Acyc,
    RSync,
    /// Acyclicity of `rsi-hb|loc ∪ mo ∪ fr`.
    #[serde(rename = "rsi-acyc")]
    RsiAcyc,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::Int => "int",
            Axiom::Ext => "ext",
            Axiom::SiHb => "si-hb",
            Axiom::WSync => "WSync",
            Axiom::WEx => "WEx",
            Axiom::RShare => "RShare",
            Axiom::Acyc => "Acyc",
            Axiom::RSync => "RSync",
            Axiom::RsiAcyc => "rsi-acyc",
        }
    }

    /// Human-readable name of the relation whose cycle violates the axiom.
    pub fn cycle_relation(self) -> Option<&'static str> {
        match self {
            Axiom::Ext => Some("(tlift(po) ∪ tlift(rf) ∪ tlift(mo)) ; tlift(fr)?"),
            Axiom::SiHb => Some("tlift(po) ∪ tlift(rf) ∪ tlift(mo) ∪ si-rb"),
            Axiom::Acyc => Some("hb|loc ∪ mo ∪ fr"),
            Axiom::RsiAcyc => Some("rsi-hb|loc ∪ mo ∪ fr"),
            _ => None,
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub consistent: bool,
    pub violated_axioms: Vec<Axiom>,
    /// A cycle in the relation of `witness_axiom`, when an acyclicity axiom
    /// failed.
    pub witness_cycle: Option<Vec<usize>>,
    pub witness_axiom: Option<Axiom>,
}

impl Verdict {
    fn from_checks(checks: Vec<(Axiom, Check)>) -> Verdict {
        let mut violated = Vec::new();
        let mut witness = None;
        for (axiom, check) in checks {
            match check {
                Check::Pass => {}
                Check::Fail => violated.push(axiom),
                Check::Cycle(c) => {
                    violated.push(axiom);
                    if witness.is_none() {
                        witness = Some((axiom, c));
                    }
                }
            }
        }
        Verdict {
            consistent: violated.is_empty(),
            violated_axioms: violated,
            witness_axiom: witness.as_ref().map(|w| w.0),
            witness_cycle: witness.map(|w| w.1),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.consistent {
            return f.write_str("consistent");
        }
        let names: Vec<&str> = self.violated_axioms.iter().map(|a| a.name()).collect();
        write!(f, "inconsistent [{}]", names.join(", "))?;
        if let (Some(axiom), Some(cycle)) = (self.witness_axiom, &self.witness_cycle) {
            let path: Vec<String> = cycle.iter().chain(cycle.first()).map(|e| e.to_string()).collect();
            write!(f, " ({} cycle: {})", axiom.cycle_relation().unwrap_or(axiom.name()), path.join(" -> "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsistencyError {
    #[error("{model} applies only to graphs without {what} (event {event})")]
    WrongShape { model: ModelId, what: &'static str, event: usize },
}

enum Check {
    Pass,
    Fail,
    Cycle(Vec<usize>),
}

fn acyclic_check(r: &Relation) -> Check {
    match r.find_cycle() {
        Some(c) => Check::Cycle(c),
        None => Check::Pass,
    }
}

fn bool_check(ok: bool) -> Check {
    if ok {
        Check::Pass
    } else {
        Check::Fail
    }
}

/// Relations and event classes that depend only on the events and `po`.
///
/// The enumerator builds one frame per skeleton and re-evaluates the
/// predicates as `rf`, `mo` and `lo` are filled in.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub n: usize,
    pub po: Relation,
    pub same_loc: Relation,
    pub writes: EventSet,
    pub nt: EventSet,
    /// Transactional events only.
    pub st: Relation,
    /// `st` plus one class holding all initialisation writes.
    pub st_init: Relation,
    pub tlift_po_init: Relation,
    pub rsi_po: Relation,
    pub kinds: Vec<Kind>,
}

impl Frame {
    pub fn new(g: &ExecutionGraph) -> Frame {
        let n = g.len();
        let st = same_transaction(g);
        let inits = g.init_events();
        let st_init = st.union(&Relation::product(&inits, &inits));
        let ids = g.loc_ids();
        let mut same_loc = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if ids[a] == ids[b] {
                    same_loc.insert(a, b);
                }
            }
        }
        let writes = g.writes();
        let po_internal = g.po.intersection(&st);
        let rsi_po = g.po.difference(&po_internal).union(&po_internal.restrict(&writes));
        Frame {
            n,
            tlift_po_init: tlift(&g.po, &st_init),
            po: g.po.clone(),
            same_loc,
            writes,
            nt: g.non_transactional(),
            st,
            st_init,
            rsi_po,
            kinds: g.events().iter().map(|e| e.kind).collect(),
        }
    }

    fn of_kinds(&self, kinds: &[Kind]) -> EventSet {
        EventSet::from_iter_n(self.n, (0..self.n).filter(|&i| kinds.contains(&self.kinds[i])))
    }

    fn fr(&self, rf: &Relation, mo: &Relation) -> Relation {
        let mut fr = rf.inverse().compose(mo);
        for a in 0..self.n {
            fr.remove(a, a);
        }
        fr
    }

    /// `rf_i ∪ mo_i ∪ fr_i ⊆ po`, with `_i` the intra-transactional part.
    fn int(&self, rf: &Relation, mo: &Relation, fr: &Relation) -> bool {
        let internal = rf.union(mo).union(fr).intersection(&self.st);
        internal.is_subset(&self.po)
    }

    fn si_rb(&self, rf: &Relation, fr: &Relation, st: &Relation) -> Relation {
        let ext_reads = rf.difference(st).range();
        tlift(fr, st).restrict_domain(&ext_reads).restrict_range(&self.writes)
    }

    pub fn si_ext_relation(&self, rf: &Relation, mo: &Relation) -> Relation {
        let fr = self.fr(rf, mo);
        let st = &self.st_init;
        let base = self.tlift_po_init.union(&tlift(rf, st)).union(&tlift(mo, st));
        base.union(&base.compose(&tlift(&fr, st)))
    }

    pub fn si_hb_base(&self, rf: &Relation, mo: &Relation) -> Relation {
        let fr = self.fr(rf, mo);
        let st = &self.st_init;
        self.tlift_po_init
            .union(&tlift(rf, st))
            .union(&tlift(mo, st))
            .union(&self.si_rb(rf, &fr, st))
    }

    pub fn rsi_hb(&self, rf: &Relation, mo: &Relation) -> Relation {
        let fr = self.fr(rf, mo);
        let st = &self.st;
        let rf_to_nt = rf.restrict_range(&self.nt);
        let nt_rf_st = rf.restrict_domain(&self.nt).compose(st);
        let rsi_rf = rf_to_nt
            .union(&nt_rf_st)
            .union(&tlift(rf, st))
            .union(&tlift(&mo.compose(rf), st));
        self.rsi_po
            .union(&rsi_rf)
            .union(&tlift(mo, st))
            .union(&self.si_rb(rf, &fr, st))
            .trans_closure()
    }

    pub fn rsi_acyc_relation(&self, rf: &Relation, mo: &Relation) -> Relation {
        let fr = self.fr(rf, mo);
        self.rsi_hb(rf, mo).intersection(&self.same_loc).union(mo).union(&fr)
    }

    pub fn ra_hb(&self, rf: &Relation, lo: &Relation) -> Relation {
        self.po.union(rf).union(lo).trans_closure()
    }

    pub fn ra_acyc_relation(&self, rf: &Relation, mo: &Relation, lo: &Relation) -> Relation {
        let fr = self.fr(rf, mo);
        self.ra_hb(rf, lo).intersection(&self.same_loc).union(mo).union(&fr)
    }

    fn wsync(&self, lo: &Relation) -> bool {
        let writers = self.of_kinds(&[Kind::WL, Kind::WU, Kind::PL]);
        let locks = self.of_kinds(&[Kind::RL, Kind::RU, Kind::WL, Kind::WU, Kind::PL]);
        comparable_within(lo, &self.same_loc, &writers, &locks)
    }

    fn rsync(&self, lo: &Relation) -> bool {
        let readers = self.of_kinds(&[Kind::RL, Kind::RU]);
        comparable_within(lo, &self.same_loc, &readers, &readers)
    }

    /// `[WL ∪ PL] ; (lo \ po) ; [L] ⊆ po ; [WU] ; lo`
    fn wex(&self, lo: &Relation) -> bool {
        let acquirers = self.of_kinds(&[Kind::WL, Kind::PL]);
        let locks = self.of_kinds(&[Kind::RL, Kind::RU, Kind::WL, Kind::WU, Kind::PL]);
        let lhs = lo.difference(&self.po).restrict_domain(&acquirers).restrict_range(&locks);
        let rhs = self.po.restrict_range(&self.of_kinds(&[Kind::WU])).compose(lo);
        lhs.is_subset(&rhs)
    }

    /// `[RL] ; (lo \ po) ; [WL ∪ PL] ⊆ po ; [RU ∪ PL] ; lo`
    fn rshare(&self, lo: &Relation) -> bool {
        let lhs = lo
            .difference(&self.po)
            .restrict_domain(&self.of_kinds(&[Kind::RL]))
            .restrict_range(&self.of_kinds(&[Kind::WL, Kind::PL]));
        let rhs = self.po.restrict_range(&self.of_kinds(&[Kind::RU, Kind::PL])).compose(lo);
        lhs.is_subset(&rhs)
    }

    /// WEx and RShare for a relation holding the `lo` edges of one lock.
    pub fn lock_axioms_local(&self, lo: &Relation) -> bool {
        self.wex(lo) && self.rshare(lo)
    }

    pub fn verdict(&self, model: ModelId, rf: &Relation, mo: &Relation, lo: &Relation) -> Verdict {
        let fr = self.fr(rf, mo);
        let checks = match model {
            ModelId::SiAxiomatic => vec![
                (Axiom::Int, bool_check(self.int(rf, mo, &fr))),
                (Axiom::Ext, acyclic_check(&self.si_ext_relation(rf, mo))),
            ],
            ModelId::SiHb => vec![
                (Axiom::Int, bool_check(self.int(rf, mo, &fr))),
                (Axiom::SiHb, acyclic_check(&self.si_hb_base(rf, mo))),
            ],
            ModelId::Rsi => vec![
                (Axiom::Int, bool_check(self.int(rf, mo, &fr))),
                (Axiom::RsiAcyc, acyclic_check(&self.rsi_acyc_relation(rf, mo))),
            ],
            ModelId::Ra | ModelId::RaRsync => {
                let mut checks = vec![
                    (Axiom::WSync, bool_check(self.wsync(lo))),
                    (Axiom::WEx, bool_check(self.wex(lo))),
                    (Axiom::RShare, bool_check(self.rshare(lo))),
                    (Axiom::Acyc, acyclic_check(&self.ra_acyc_relation(rf, mo, lo))),
                ];
                if model == ModelId::RaRsync {
                    checks.push((Axiom::RSync, bool_check(self.rsync(lo))));
                }
                checks
            }
        };
        Verdict::from_checks(checks)
    }

    /// The monotone part of `verdict`: false means no extension of the
    /// partial `rf`/`mo`/`lo` can be consistent.
    pub fn may_extend(&self, model: ModelId, rf: &Relation, mo: &Relation, lo: &Relation) -> bool {
        let fr = self.fr(rf, mo);
        match model {
            ModelId::SiAxiomatic => self.int(rf, mo, &fr) && self.si_ext_relation(rf, mo).acyclic(),
            ModelId::SiHb => self.int(rf, mo, &fr) && self.si_hb_base(rf, mo).acyclic(),
            ModelId::Rsi => self.int(rf, mo, &fr) && self.rsi_acyc_relation(rf, mo).acyclic(),
            ModelId::Ra | ModelId::RaRsync => self.ra_acyc_relation(rf, mo, lo).acyclic(),
        }
    }
}

/// Every `a ∈ left` is lo-comparable with every distinct same-location `b ∈ right`.
fn comparable_within(lo: &Relation, same_loc: &Relation, left: &EventSet, right: &EventSet) -> bool {
    left.iter().all(|a| {
        right
            .iter()
            .filter(|&b| b != a && same_loc.contains(a, b))
            .all(|b| lo.contains(a, b) || lo.contains(b, a))
    })
}

fn require(model: ModelId, g: &ExecutionGraph, what: &'static str, bad: impl Fn(&crate::graph::Event) -> bool) -> Result<(), ConsistencyError> {
    match g.events().iter().find(|e| bad(e)) {
        Some(e) => Err(ConsistencyError::WrongShape { model, what, event: e.id }),
        None => Ok(()),
    }
}

/// Checks that `g` has the event discipline `model` is defined on.
pub fn check_shape(model: ModelId, g: &ExecutionGraph) -> Result<(), ConsistencyError> {
    match model {
        ModelId::SiAxiomatic | ModelId::SiHb => {
            require(model, g, "non-transactional events", |e| !e.is_init() && !e.is_transactional())?;
            require(model, g, "updates or lock events", |e| !matches!(e.kind, Kind::R | Kind::W))?;
        }
        ModelId::Rsi => {
            require(model, g, "lock events", |e| e.kind.is_lock())?;
            require(model, g, "transactional updates", |e| e.is_transactional() && e.kind == Kind::U)?;
        }
        ModelId::Ra | ModelId::RaRsync => {
            require(model, g, "transactional events", |e| e.is_transactional())?;
        }
    }
    if !model.is_ra() && !g.lo.is_empty() {
        let (a, _) = g.lo.pairs().next().unwrap();
        return Err(ConsistencyError::WrongShape { model, what: "lock order edges", event: a });
    }
    Ok(())
}

/// Dispatches to the predicate of `model`.
pub fn check(model: ModelId, g: &ExecutionGraph) -> Result<Verdict, ConsistencyError> {
    check_shape(model, g)?;
    Ok(Frame::new(g).verdict(model, &g.rf, &g.mo, &g.lo))
}

/// SI consistency as `int` plus acyclicity of the lifted dependencies.
pub fn si_consistent_axiomatic(g: &ExecutionGraph) -> Result<Verdict, ConsistencyError> {
    check(ModelId::SiAxiomatic, g)
}

/// SI consistency as `int` plus irreflexivity of SI-happens-before.
pub fn si_consistent_hb(g: &ExecutionGraph) -> Result<Verdict, ConsistencyError> {
    check(ModelId::SiHb, g)
}

pub fn ra_consistent(g: &ExecutionGraph) -> Result<Verdict, ConsistencyError> {
    check(ModelId::Ra, g)
}

pub fn rsi_consistent(g: &ExecutionGraph) -> Result<Verdict, ConsistencyError> {
    check(ModelId::Rsi, g)
}

/// Every pair of same-lock reader events is lo-ordered.
pub fn rsync_holds(g: &ExecutionGraph) -> bool {
    Frame::new(g).rsync(&g.lo)
}

pub fn wsync_holds(g: &ExecutionGraph) -> bool {
    Frame::new(g).wsync(&g.lo)
}

pub fn wex_holds(g: &ExecutionGraph) -> bool {
    Frame::new(g).wex(&g.lo)
}

pub fn rshare_holds(g: &ExecutionGraph) -> bool {
    Frame::new(g).rshare(&g.lo)
}

/// `si-hb = (tlift(po) ∪ tlift(rf) ∪ tlift(mo) ∪ si-rb)⁺`.
pub fn si_hb(g: &ExecutionGraph) -> Relation {
    Frame::new(g).si_hb_base(&g.rf, &g.mo).trans_closure()
}

/// `si-rb = [R_ext] ; tlift(fr) ; [W]`, with the initialisation class.
pub fn si_rb(g: &ExecutionGraph) -> Relation {
    let f = Frame::new(g);
    f.si_rb(&g.rf, &derived_fr(g), &f.st_init)
}

/// `(po \ po_i) ∪ [W] ; po_i ; [W]`.
pub fn rsi_po(g: &ExecutionGraph) -> Relation {
    Frame::new(g).rsi_po
}

/// `(rf ; [NT]) ∪ ([NT] ; rf ; st) ∪ tlift(rf) ∪ tlift(mo ; rf)`.
pub fn rsi_rf(g: &ExecutionGraph) -> Relation {
    let st = same_transaction(g);
    let nt = g.non_transactional();
    g.rf.restrict_range(&nt)
        .union(&g.rf.restrict_domain(&nt).compose(&st))
        .union(&tlift(&g.rf, &st))
        .union(&tlift(&g.mo.compose(&g.rf), &st))
}

pub fn rsi_hb(g: &ExecutionGraph) -> Relation {
    Frame::new(g).rsi_hb(&g.rf, &g.mo)
}

/// `hb = (po ∪ rf ∪ lo)⁺`.
pub fn ra_hb(g: &ExecutionGraph) -> Relation {
    Frame::new(g).ra_hb(&g.rf, &g.lo)
}

/// The relation an acyclicity axiom requires to be acyclic; used to
/// re-check witness cycles.
pub fn axiom_relation(g: &ExecutionGraph, axiom: Axiom) -> Option<Relation> {
    let f = Frame::new(g);
    match axiom {
        Axiom::Ext => Some(f.si_ext_relation(&g.rf, &g.mo)),
        Axiom::SiHb => Some(f.si_hb_base(&g.rf, &g.mo)),
        Axiom::Acyc => Some(f.ra_acyc_relation(&g.rf, &g.mo, &g.lo)),
        Axiom::RsiAcyc => Some(f.rsi_acyc_relation(&g.rf, &g.mo)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    /// LU with both transactions reading the initial x and x finally 1.
    fn lost_update() -> ExecutionGraph {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let r1 = b.read(1, 1, "x", 0);
        let w1 = b.write(1, 1, "x", 1);
        let r2 = b.read(2, 2, "x", 0);
        let w2 = b.write(2, 2, "x", 1);
        b.rf(ix, r1).rf(ix, r2).mo(&[ix, w1, w2]);
        b.build().unwrap()
    }

    fn write_skew() -> ExecutionGraph {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let iy = b.init("y");
        let a = b.read(1, 1, "x", 0);
        let wy = b.write(1, 1, "y", 1);
        let bb = b.read(2, 2, "y", 0);
        let wx = b.write(2, 2, "x", 1);
        b.rf(ix, a).rf(iy, bb).mo(&[ix, wx]).mo(&[iy, wy]);
        b.build().unwrap()
    }

    #[test]
    fn lost_update_is_si_inconsistent() {
        let g = lost_update();
        let v = si_consistent_axiomatic(&g).unwrap();
        assert!(!v.consistent);
        assert_eq!(v.violated_axioms, vec![Axiom::Ext]);
        let cyc = v.witness_cycle.unwrap();
        assert!(axiom_relation(&g, Axiom::Ext).unwrap().has_cycle_path(&cyc));
        assert!(!si_consistent_hb(&g).unwrap().consistent);
    }

    #[test]
    fn write_skew_is_si_consistent() {
        let g = write_skew();
        assert!(si_consistent_axiomatic(&g).unwrap().consistent);
        assert!(si_consistent_hb(&g).unwrap().consistent);
        assert!(rsi_consistent(&g).unwrap().consistent);
    }

    #[test]
    fn single_transaction_reading_own_write() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let w = b.write(1, 1, "x", 1);
        let r = b.read(1, 1, "x", 1);
        b.rf(w, r).mo(&[ix, w]);
        let g = b.build().unwrap();
        assert!(si_consistent_axiomatic(&g).unwrap().consistent);
    }

    #[test]
    fn transaction_reading_stale_value_after_own_write_violates_int() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let w = b.write(1, 1, "x", 1);
        let r = b.read(1, 1, "x", 0);
        b.rf(ix, r).mo(&[ix, w]);
        let g = b.build().unwrap();
        let v = si_consistent_axiomatic(&g).unwrap();
        assert_eq!(v.violated_axioms, vec![Axiom::Int]);
    }

    #[test]
    fn init_only_graph_is_consistent_everywhere() {
        let mut b = GraphBuilder::new();
        b.init("x");
        let g = b.build().unwrap();
        for m in ModelId::ALL {
            assert!(check(m, &g).unwrap().consistent, "{m}");
        }
    }

    #[test]
    fn si_rejects_non_transactional_events() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let r = b.read(1, 0, "x", 0);
        b.rf(ix, r);
        let g = b.build().unwrap();
        assert!(matches!(si_consistent_axiomatic(&g), Err(ConsistencyError::WrongShape { .. })));
        assert!(matches!(si_consistent_hb(&g), Err(ConsistencyError::WrongShape { .. })));
        assert!(ra_consistent(&lost_update()).is_err());
    }

    #[test]
    fn message_passing_violates_acyc() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let iy = b.init("y");
        let wx = b.write(1, 0, "x", 1);
        let wy = b.write(1, 0, "y", 1);
        let ry = b.read(2, 0, "y", 1);
        let rx = b.read(2, 0, "x", 0);
        b.rf(wy, ry).rf(ix, rx).mo(&[ix, wx]).mo(&[iy, wy]);
        let g = b.build().unwrap();
        let v = ra_consistent(&g).unwrap();
        assert_eq!(v.violated_axioms, vec![Axiom::Acyc]);
        assert!(axiom_relation(&g, Axiom::Acyc).unwrap().has_cycle_path(v.witness_cycle.as_ref().unwrap()));
    }

    #[test]
    fn store_buffering_is_ra_consistent() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let iy = b.init("y");
        let wx = b.write(1, 0, "x", 1);
        let ry = b.read(1, 0, "y", 0);
        let wy = b.write(2, 0, "y", 1);
        let rx = b.read(2, 0, "x", 0);
        b.rf(iy, ry).rf(ix, rx).mo(&[ix, wx]).mo(&[iy, wy]);
        assert!(ra_consistent(&b.build().unwrap()).unwrap().consistent);
    }

    #[test]
    fn interleaved_write_sections_violate_wex() {
        let mut b = GraphBuilder::new();
        let wl1 = b.lock(1, Kind::WL, "l");
        let wu1 = b.lock(1, Kind::WU, "l");
        let wl2 = b.lock(2, Kind::WL, "l");
        let wu2 = b.lock(2, Kind::WU, "l");
        b.lo(&[wl1, wl2, wu1, wu2]);
        let g = b.build().unwrap();
        let v = ra_consistent(&g).unwrap();
        assert!(v.violated_axioms.contains(&Axiom::WEx));
        assert!(!wex_holds(&g));
        assert!(wsync_holds(&g));
    }

    #[test]
    fn reader_entering_write_section_violates_wex() {
        let mut b = GraphBuilder::new();
        let wl = b.lock(1, Kind::WL, "l");
        let wu = b.lock(1, Kind::WU, "l");
        let rl = b.lock(2, Kind::RL, "l");
        let ru = b.lock(2, Kind::RU, "l");
        b.lo(&[wl, rl, wu, ru]);
        assert!(!wex_holds(&b.build().unwrap()));
    }

    #[test]
    fn writer_overtaking_reader_violates_rshare() {
        let mut b = GraphBuilder::new();
        let rl = b.lock(1, Kind::RL, "l");
        let ru = b.lock(1, Kind::RU, "l");
        let wl = b.lock(2, Kind::WL, "l");
        let wu = b.lock(2, Kind::WU, "l");
        b.lo(&[rl, wl, wu, ru]);
        let g = b.build().unwrap();
        assert!(!rshare_holds(&g));
        assert!(wex_holds(&g));
    }

    #[test]
    fn unordered_readers_fail_rsync_only() {
        let mut b = GraphBuilder::new();
        let r1 = b.lock(1, Kind::RL, "l");
        let u1 = b.lock(1, Kind::RU, "l");
        let r2 = b.lock(2, Kind::RL, "l");
        let u2 = b.lock(2, Kind::RU, "l");
        let _ = (r1, u1, r2, u2);
        let g = b.build().unwrap();
        assert!(!rsync_holds(&g));
        assert!(ra_consistent(&g).unwrap().consistent);
        let v = check(ModelId::RaRsync, &g).unwrap();
        assert_eq!(v.violated_axioms, vec![Axiom::RSync]);

        let mut b = GraphBuilder::new();
        let r1 = b.lock(1, Kind::RL, "l");
        let u1 = b.lock(1, Kind::RU, "l");
        let r2 = b.lock(2, Kind::RL, "l");
        let u2 = b.lock(2, Kind::RU, "l");
        b.lo(&[r1, u1, r2, u2]);
        assert!(rsync_holds(&b.build().unwrap()));
    }

    /// Transactional W-W in one transaction, read in the opposite order by
    /// non-transactional code.
    #[test]
    fn rsi_po_forbids_transactional_message_passing() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let iy = b.init("y");
        let w1 = b.write(1, 1, "y", 1);
        let w2 = b.write(1, 1, "x", 1);
        let rx = b.read(2, 0, "x", 1);
        let ry = b.read(2, 0, "y", 0);
        b.rf(w2, rx).rf(iy, ry).mo(&[iy, w1]).mo(&[ix, w2]);
        let g = b.build().unwrap();
        let v = rsi_consistent(&g).unwrap();
        assert!(!v.consistent);
        assert!(rsi_po(&g).contains(w1, w2));
        let cyc = v.witness_cycle.unwrap();
        assert!(axiom_relation(&g, Axiom::RsiAcyc).unwrap().has_cycle_path(&cyc));
    }

    #[test]
    fn rsi_rf_edges() {
        let mut b = GraphBuilder::new();
        let ix = b.init("x");
        let iy = b.init("y");
        let r1 = b.read(1, 1, "y", 0);
        let r2 = b.read(1, 1, "x", 1);
        let wy = b.write(2, 0, "y", 1);
        let wx = b.write(2, 0, "x", 1);
        b.rf(wx, r2).rf(iy, r1).mo(&[iy, wy]).mo(&[ix, wx]);
        let g = b.build().unwrap();
        let rf = rsi_rf(&g);
        assert!(rf.contains(wx, r1), "[NT];rf;st reaches the whole transaction");
        assert!(!rsi_consistent(&g).unwrap().consistent);
    }
}

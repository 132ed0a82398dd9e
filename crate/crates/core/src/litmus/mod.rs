//! Loop-free litmus programs mixing transactions and plain accesses.
//!
//! The text format is line oriented:
//!
//! ```text
//! litmus LU
//! locations x
//! thread t1
//!   tx { a = x; x = a + 1 }
//! thread t2
//!   tx { b = x; x = b + 1 }
//! expect si forbidden: a=0, b=0
//! ```
//!
//! Names listed after `locations` are shared memory; every other name is a
//! thread-local register. `r = X` reads location `X`, `X = e` writes it.
//! Implementation programs additionally use `let r = e`, `assume`, `cas`,
//! `faa` and the lock statements `lock_r`, `unlock_r`, `lock_w`, `unlock_w`
//! and `promote`, whose operand names a lock.

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::consistency::ModelId;

pub use parser::{parse_litmus, parse_program, ParseError, Pos};

/// Registers whose name starts with this prefix are bookkeeping introduced
/// by translations; they are dropped from outcomes.
pub const HIDDEN_PREFIX: char = '_';

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Const(i64),
    Reg(String),
    /// `reg + c`; subtraction is stored with a negative constant.
    Add(String, i64),
}

impl Expr {
    pub fn reg(&self) -> Option<&str> {
        match self {
            Expr::Const(_) => None,
            Expr::Reg(r) | Expr::Add(r, _) => Some(r),
        }
    }

    pub fn eval(&self, regs: &BTreeMap<String, i64>) -> Option<i64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Reg(r) => regs.get(r).copied(),
            Expr::Add(r, c) => regs.get(r).map(|v| v + c),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Reg(r) => f.write_str(r),
            Expr::Add(r, c) if *c < 0 => write!(f, "{r} - {}", c.unsigned_abs()),
            Expr::Add(r, c) => write!(f, "{r} + {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cond {
    Eq(Expr, Expr),
    Ne(Expr, Expr),
    Even(Expr),
    Odd(Expr),
}

impl Cond {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Cond::Eq(a, b) | Cond::Ne(a, b) => vec![a, b],
            Cond::Even(a) | Cond::Odd(a) => vec![a],
        }
    }

    pub fn eval(&self, regs: &BTreeMap<String, i64>) -> Option<bool> {
        Some(match self {
            Cond::Eq(a, b) => a.eval(regs)? == b.eval(regs)?,
            Cond::Ne(a, b) => a.eval(regs)? != b.eval(regs)?,
            Cond::Even(a) => a.eval(regs)?.rem_euclid(2) == 0,
            Cond::Odd(a) => a.eval(regs)?.rem_euclid(2) == 1,
        })
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Eq(a, b) => write!(f, "{a} == {b}"),
            Cond::Ne(a, b) => write!(f, "{a} != {b}"),
            Cond::Even(a) => write!(f, "even {a}"),
            Cond::Odd(a) => write!(f, "odd {a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LockOp {
    LockR,
    UnlockR,
    LockW,
    UnlockW,
    Promote,
}

impl LockOp {
    pub const ALL: [LockOp; 5] = [LockOp::LockR, LockOp::UnlockR, LockOp::LockW, LockOp::UnlockW, LockOp::Promote];

    pub fn keyword(self) -> &'static str {
        match self {
            LockOp::LockR => "lock_r",
            LockOp::UnlockR => "unlock_r",
            LockOp::LockW => "lock_w",
            LockOp::UnlockW => "unlock_w",
            LockOp::Promote => "promote",
        }
    }

    pub fn kind(self) -> crate::graph::Kind {
        use crate::graph::Kind;
        match self {
            LockOp::LockR => Kind::RL,
            LockOp::UnlockR => Kind::RU,
            LockOp::LockW => Kind::WL,
            LockOp::UnlockW => Kind::WU,
            LockOp::Promote => Kind::PL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stmt {
    Tx(Vec<Stmt>),
    Read { reg: String, loc: String },
    Write { loc: String, expr: Expr },
    /// Thread-local assignment; generates no event.
    Let { reg: String, expr: Expr },
    /// A compare-and-swap that blocks until it succeeds: one update event
    /// whose read value equals `expected`.
    Cas { reg: Option<String>, loc: String, expected: Expr, new: Expr },
    Faa { reg: Option<String>, loc: String, delta: i64 },
    /// Executions where the condition is false are discarded.
    Assume(Cond),
    Lock { op: LockOp, lock: String },
}

impl Stmt {
    /// Registers this statement assigns.
    pub fn defines(&self) -> Option<&str> {
        match self {
            Stmt::Read { reg, .. } | Stmt::Let { reg, .. } => Some(reg),
            Stmt::Cas { reg, .. } | Stmt::Faa { reg, .. } => reg.as_deref(),
            _ => None,
        }
    }

    /// Registers this statement reads.
    pub fn uses(&self) -> Vec<&str> {
        match self {
            Stmt::Write { expr, .. } | Stmt::Let { expr, .. } => expr.reg().into_iter().collect(),
            Stmt::Cas { expected, new, .. } => expected.reg().into_iter().chain(new.reg()).collect(),
            Stmt::Assume(c) => c.exprs().into_iter().filter_map(|e| e.reg()).collect(),
            _ => Vec::new(),
        }
    }

    /// Memory location accessed, if any.
    pub fn location(&self) -> Option<&str> {
        match self {
            Stmt::Read { loc, .. } | Stmt::Write { loc, .. } | Stmt::Cas { loc, .. } | Stmt::Faa { loc, .. } => Some(loc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    /// Declared shared locations.
    pub locations: BTreeSet<String>,
    pub threads: Vec<Thread>,
}

/// Visits every statement, descending into transactions.
fn walk<'a>(body: &'a [Stmt], in_tx: bool, f: &mut impl FnMut(&'a Stmt, bool)) {
    for s in body {
        f(s, in_tx);
        if let Stmt::Tx(inner) = s {
            walk(inner, true, f);
        }
    }
}

impl Program {
    pub fn new(name: impl Into<String>) -> Program {
        Program { name: name.into(), locations: BTreeSet::new(), threads: Vec::new() }
    }

    pub fn for_each_stmt<'a>(&'a self, mut f: impl FnMut(usize, &'a Stmt, bool)) {
        for (t, th) in self.threads.iter().enumerate() {
            walk(&th.body, false, &mut |s, in_tx| f(t, s, in_tx));
        }
    }

    /// Locations accessed by reads, writes and updates, sorted.
    pub fn memory_locations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_stmt(|_, s, _| {
            if let Some(l) = s.location() {
                out.insert(l.to_string());
            }
        });
        out
    }

    pub fn lock_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_stmt(|_, s, _| {
            if let Stmt::Lock { lock, .. } = s {
                out.insert(lock.clone());
            }
        });
        out
    }

    pub fn transaction_count(&self) -> usize {
        let mut n = 0;
        self.for_each_stmt(|_, s, _| n += matches!(s, Stmt::Tx(_)) as usize);
        n
    }

    pub fn has_transactions(&self) -> bool {
        self.transaction_count() > 0
    }

    /// True when some access or lock statement lies outside every transaction.
    pub fn has_non_transactional(&self) -> bool {
        let mut found = false;
        self.for_each_stmt(|_, s, in_tx| {
            if !in_tx && !matches!(s, Stmt::Tx(_) | Stmt::Let { .. } | Stmt::Assume(_)) {
                found = true;
            }
        });
        found
    }

    pub fn has_locks(&self) -> bool {
        !self.lock_names().is_empty()
    }

    /// Registers of thread `t`, in order of first assignment.
    pub fn registers(&self, t: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        walk(&self.threads[t].body, false, &mut |s, _| {
            if let Some(r) = s.defines() {
                if !out.iter().any(|o| o == r) {
                    out.push(r.to_string());
                }
            }
        });
        out
    }

    /// Visible registers keyed as `thread:reg`.
    pub fn outcome_keys(&self) -> Vec<String> {
        let mut keys = Vec::new();
        for (t, th) in self.threads.iter().enumerate() {
            for r in self.registers(t) {
                if !r.starts_with(HIDDEN_PREFIX) {
                    keys.push(format!("{}:{}", th.name, r));
                }
            }
        }
        keys.sort();
        keys
    }

    /// Values the program can produce: constants, 0, and `v + c` for the
    /// increments occurring in it, iterated to a fixpoint bounded by the
    /// number of arithmetic statements.
    pub fn value_domain(&self) -> BTreeSet<i64> {
        let mut consts = BTreeSet::from([0]);
        let mut deltas = Vec::new();
        let add = |e: &Expr, consts: &mut BTreeSet<i64>, deltas: &mut Vec<i64>| match e {
            Expr::Const(c) => {
                consts.insert(*c);
            }
            Expr::Add(_, c) => deltas.push(*c),
            Expr::Reg(_) => {}
        };
        self.for_each_stmt(|_, s, _| match s {
            Stmt::Write { expr, .. } | Stmt::Let { expr, .. } => add(expr, &mut consts, &mut deltas),
            Stmt::Cas { expected, new, .. } => {
                add(expected, &mut consts, &mut deltas);
                add(new, &mut consts, &mut deltas);
            }
            Stmt::Faa { delta, .. } => deltas.push(*delta),
            Stmt::Assume(c) => {
                for e in c.exprs() {
                    add(e, &mut consts, &mut deltas);
                }
            }
            _ => {}
        });
        let mut dom = consts;
        for _ in 0..deltas.len() {
            let next: BTreeSet<i64> = dom.iter().flat_map(|v| deltas.iter().map(move |d| v + d)).collect();
            let before = dom.len();
            dom.extend(next);
            if dom.len() == before {
                break;
            }
        }
        dom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Allowed,
    Forbidden,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expected::Allowed => "allowed",
            Expected::Forbidden => "forbidden",
        })
    }
}

/// A final register valuation, keyed `thread:reg`.
pub type Outcome = BTreeMap<String, i64>;

/// Renders an outcome as `a=0, b=1`, dropping the thread prefix when the
/// register name alone is unambiguous.
pub fn format_outcome(o: &Outcome) -> String {
    let short: Vec<&str> = o.keys().map(|k| k.split_once(':').map_or(k.as_str(), |p| p.1)).collect();
    o.iter()
        .zip(&short)
        .map(|((k, v), s)| {
            if short.iter().filter(|x| *x == s).count() > 1 {
                format!("{k}={v}")
            } else {
                format!("{s}={v}")
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Expectation {
    pub model: ModelId,
    pub verdict: Expected,
    /// Partial outcome: the expectation concerns every outcome agreeing with
    /// these registers.
    pub outcome: Outcome,
}

impl Expectation {
    pub fn matches(&self, o: &Outcome) -> bool {
        self.outcome.iter().all(|(k, v)| o.get(k) == Some(v))
    }

    /// Met when some outcome matches (allowed) or none does (forbidden).
    pub fn met_by<'a>(&self, outcomes: impl IntoIterator<Item = &'a Outcome>) -> bool {
        let seen = outcomes.into_iter().any(|o| self.matches(o));
        seen == (self.verdict == Expected::Allowed)
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.model, self.verdict, format_outcome(&self.outcome))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Litmus {
    pub program: Program,
    pub expectations: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub thread: usize,
    /// Statement index path (outer index, then index inside a transaction).
    pub path: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thread {}, statement {:?}: {}", self.thread, self.path, self.message)
    }
}

/// Structural checks: no nested transactions, only reads and writes inside
/// transactions, registers assigned before use, names used consistently.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let memory = p.memory_locations();
    let locks = p.lock_names();
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for th in &p.threads {
        if !names.insert(th.name.as_str()) {
            out.push(Diagnostic { thread: 0, path: vec![], message: format!("duplicate thread name `{}`", th.name) });
        }
    }
    for (t, th) in p.threads.iter().enumerate() {
        let mut defined: BTreeSet<&str> = BTreeSet::new();
        for (i, s) in th.body.iter().enumerate() {
            match s {
                Stmt::Tx(inner) => {
                    for (j, s2) in inner.iter().enumerate() {
                        let path = vec![i, j];
                        match s2 {
                            Stmt::Tx(_) => out.push(diag(t, path, "nested transactions are not supported")),
                            Stmt::Read { .. } | Stmt::Write { .. } => check_stmt(p, t, path, s2, &mut defined, &memory, &locks, &mut out),
                            Stmt::Cas { .. } | Stmt::Faa { .. } => out.push(diag(t, path, "updates forbidden in transactions")),
                            _ => out.push(diag(t, path, "only reads and writes are allowed in transactions")),
                        }
                    }
                }
                _ => check_stmt(p, t, vec![i], s, &mut defined, &memory, &locks, &mut out),
            }
        }
    }
    out
}

fn diag(thread: usize, path: Vec<usize>, message: impl Into<String>) -> Diagnostic {
    Diagnostic { thread, path, message: message.into() }
}

#[allow(clippy::too_many_arguments)]
fn check_stmt<'a>(
    p: &Program,
    t: usize,
    path: Vec<usize>,
    s: &'a Stmt,
    defined: &mut BTreeSet<&'a str>,
    memory: &BTreeSet<String>,
    locks: &BTreeSet<String>,
    out: &mut Vec<Diagnostic>,
) {
    for r in s.uses() {
        if !defined.contains(r) {
            out.push(diag(t, path.clone(), format!("register `{r}` used before assignment")));
        }
    }
    if let Some(l) = s.location() {
        if !p.locations.contains(l) {
            out.push(diag(t, path.clone(), format!("location `{l}` is not declared")));
        }
        if locks.contains(l) {
            out.push(diag(t, path.clone(), format!("`{l}` is used both as a lock and as a location")));
        }
    }
    if let Stmt::Lock { lock, .. } = s {
        if p.locations.contains(lock) || memory.contains(lock) {
            out.push(diag(t, path.clone(), format!("`{lock}` is used both as a lock and as a location")));
        }
    }
    if let Some(r) = s.defines() {
        if p.locations.contains(r) {
            out.push(diag(t, path.clone(), format!("`{r}` is a location, not a register")));
        }
        defined.insert(r);
    }
}

/// Canonical text form; `parse_program(&serialize(p))` equals `p`.
pub fn serialize(p: &Program) -> String {
    let mut out = String::new();
    write_program(&mut out, p);
    out
}

pub fn serialize_litmus(l: &Litmus) -> String {
    let mut out = String::new();
    write_program(&mut out, &l.program);
    for e in &l.expectations {
        let regs: Vec<String> = e.outcome.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "expect {} {}: {}", e.model, e.verdict, regs.join(", "));
    }
    out
}

fn write_program(out: &mut String, p: &Program) {
    let _ = writeln!(out, "litmus {}", p.name);
    if !p.locations.is_empty() {
        let locs: Vec<&str> = p.locations.iter().map(String::as_str).collect();
        let _ = writeln!(out, "locations {}", locs.join(" "));
    }
    for th in &p.threads {
        let _ = writeln!(out, "thread {}", th.name);
        for s in &th.body {
            write_stmt(out, s, 1);
        }
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match s {
        Stmt::Tx(body) => {
            let _ = writeln!(out, "{pad}tx {{");
            for s2 in body {
                write_stmt(out, s2, depth + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        other => {
            let _ = writeln!(out, "{pad}{other}");
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Tx(body) => {
                let inner: Vec<String> = body.iter().map(|s| s.to_string()).collect();
                write!(f, "tx {{ {} }}", inner.join("; "))
            }
            Stmt::Read { reg, loc } => write!(f, "{reg} = {loc}"),
            Stmt::Write { loc, expr } => write!(f, "{loc} = {expr}"),
            Stmt::Let { reg, expr } => write!(f, "let {reg} = {expr}"),
            Stmt::Cas { reg, loc, expected, new } => {
                if let Some(r) = reg {
                    write!(f, "{r} = ")?;
                }
                write!(f, "cas {loc} {} {}", paren(expected), paren(new))
            }
            Stmt::Faa { reg, loc, delta } => {
                if let Some(r) = reg {
                    write!(f, "{r} = ")?;
                }
                write!(f, "faa {loc} {delta}")
            }
            Stmt::Assume(c) => write!(f, "assume {c}"),
            Stmt::Lock { op, lock } => write!(f, "{} {lock}", op.keyword()),
        }
    }
}

/// CAS operands are juxtaposed, so compound expressions are parenthesised.
fn paren(e: &Expr) -> String {
    match e {
        Expr::Add(..) => format!("({e})"),
        Expr::Const(c) if *c < 0 => format!("({e})"),
        _ => e.to_string(),
    }
}

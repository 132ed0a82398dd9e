//! The bundled check suites: the anomaly table, the implementation and
//! model correspondences, and the lock implementations.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::consistency::{rsi_consistent, si_consistent_axiomatic, si_consistent_hb, ModelId};
use crate::corpus;
use crate::enumerate::{enumerate_candidates, outcomes, EnumError, EnumOptions};
use crate::litmus::{format_outcome, Expected, Litmus, Outcome};
use crate::mrsw::{verify_lock_axioms, LockImpl, LockKind, MrswError};
use crate::stm::{check_rsi_side_condition, nt_blocks, translate, wrap, ImplVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fig1,
    Theorems,
    Locks,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Fig1, Suite::Theorems, Suite::Locks];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fig1 => "fig1",
            Suite::Theorems => "theorems",
            Suite::Locks => "locks",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown suite `{s}` (expected fig1, theorems or locks)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub test: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub rows: Vec<Row>,
    pub passed: usize,
    pub failed: usize,
    pub wall_time_ms: f64,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Mrsw(#[from] MrswError),
}

pub fn run_suite(suite: Suite, opts: &EnumOptions, spin_bound: usize) -> Result<SuiteReport, SuiteError> {
    let start = Instant::now();
    let rows = match suite {
        Suite::Fig1 => fig1_rows(opts)?,
        Suite::Theorems => theorem_rows(opts)?,
        Suite::Locks => lock_rows(opts, spin_bound)?,
    };
    let passed = rows.iter().filter(|r| r.passed).count();
    Ok(SuiteReport { suite, failed: rows.len() - passed, passed, rows, wall_time_ms: start.elapsed().as_secs_f64() * 1000.0 })
}

fn row(test: &str, check: impl Into<String>, passed: bool, detail: impl Into<String>) -> Row {
    Row { test: test.to_string(), check: check.into(), passed, detail: detail.into() }
}

fn expectation_rows(l: &Litmus, opts: &EnumOptions) -> Result<Vec<Row>, EnumError> {
    let mut rows = Vec::new();
    for e in &l.expectations {
        let set = outcomes(&l.program, e.model, opts)?;
        let verdict = match e.verdict {
            Expected::Allowed => "allows",
            Expected::Forbidden => "forbids",
        };
        rows.push(row(
            &l.program.name,
            format!("{} {verdict} {}", e.model, format_outcome(&e.outcome)),
            e.met_by(&set.outcomes),
            format!("{} outcomes, {} graphs", set.outcomes.len(), set.graph_count),
        ));
    }
    Ok(rows)
}

/// One row per anomaly test, combining its expectations.
fn fig1_rows(opts: &EnumOptions) -> Result<Vec<Row>, EnumError> {
    let mut rows = Vec::new();
    for l in corpus::fig1() {
        let parts = expectation_rows(&l, opts)?;
        let check = parts.iter().map(|r| r.check.as_str()).collect::<Vec<_>>().join("; ");
        let passed = parts.iter().all(|r| r.passed);
        rows.push(row(&l.program.name, check, passed, parts.first().map(|r| r.detail.clone()).unwrap_or_default()));
    }
    Ok(rows)
}

fn first_outcome(l: &Litmus, model: ModelId) -> Option<Outcome> {
    l.expectations.iter().find(|e| e.model == model).map(|e| e.outcome.clone())
}

fn theorem_rows(opts: &EnumOptions) -> Result<Vec<Row>, EnumError> {
    let programs = corpus::theorem_programs();
    let mut rows = Vec::new();
    for l in &programs {
        let p = &l.program;
        rows.extend(expectation_rows(l, opts)?);
        if !p.has_non_transactional() {
            let candidates = enumerate_candidates(p, opts)?;
            let axiomatic_vs_hb = candidates
                .iter()
                .filter(|g| si_consistent_axiomatic(g).unwrap().consistent != si_consistent_hb(g).unwrap().consistent)
                .count();
            rows.push(row(&p.name, "si ⇔ si-hb on every candidate graph", axiomatic_vs_hb == 0, format!("{} candidates, {axiomatic_vs_hb} disagreements", candidates.len())));
            let rsi_vs_si = candidates.iter().filter(|g| rsi_consistent(g).unwrap().consistent != si_consistent_hb(g).unwrap().consistent).count();
            rows.push(row(&p.name, "rsi ⇔ si-hb on every candidate graph", rsi_vs_si == 0, format!("{} candidates, {rsi_vs_si} disagreements", candidates.len())));
            let si = outcomes(p, ModelId::SiAxiomatic, opts)?.outcomes;
            for (v, m) in [(ImplVariant::EagerSi, ModelId::Ra), (ImplVariant::LazySi, ModelId::Ra), (ImplVariant::EagerSi, ModelId::RaRsync)] {
                let imp = outcomes(&translate(p, v), m, opts)?;
                rows.push(row(&p.name, format!("si = {v} under {m}"), imp.outcomes == si, format!("{} vs {} outcomes", si.len(), imp.outcomes.len())));
            }
        } else if check_rsi_side_condition(p, opts)? {
            let rsi = outcomes(p, ModelId::Rsi, opts)?.outcomes;
            for v in [ImplVariant::EagerRsi, ImplVariant::LazyRsi] {
                let imp = outcomes(&translate(p, v), ModelId::Ra, opts)?;
                rows.push(row(&p.name, format!("rsi = {v} under ra"), imp.outcomes == rsi, format!("{} vs {} outcomes", rsi.len(), imp.outcomes.len())));
            }
        } else {
            rows.push(row(&p.name, "rsi side condition", true, "not satisfied; implementation equality not required"));
        }
        if p.has_non_transactional() {
            let rsi = outcomes(p, ModelId::Rsi, opts)?;
            for b in nt_blocks(p) {
                let wrapped = outcomes(&wrap(p, &b), ModelId::Rsi, opts)?;
                let extra = wrapped.outcomes.difference(&rsi.outcomes).count();
                let check = format!("wrapping {}[{}..{}] adds no rsi outcome", p.threads[b.thread].name, b.stmts.start, b.stmts.end);
                rows.push(row(&p.name, check, extra == 0, format!("{} ⊆ {} outcomes, {extra} new", wrapped.outcomes.len(), rsi.outcomes.len())));
            }
        }
    }
    let find = |name: &str| programs.iter().find(|l| l.program.name == name).expect("bundled anomaly test");
    for (name, v, model, present) in [
        ("LU", ImplVariant::CandA, ModelId::SiAxiomatic, true),
        ("LU2", ImplVariant::CandA, ModelId::SiAxiomatic, true),
        ("WS", ImplVariant::CandB, ModelId::SiAxiomatic, false),
        ("WS2", ImplVariant::CandC, ModelId::SiAxiomatic, false),
    ] {
        let l = find(name);
        let target = first_outcome(l, model).expect("anomaly outcome");
        let set = outcomes(&translate(&l.program, v), ModelId::Ra, opts)?;
        let verb = if present { "admits" } else { "excludes" };
        rows.push(row(name, format!("{v} {verb} {}", format_outcome(&target)), set.contains_matching(&target) == present, format!("{} outcomes", set.outcomes.len())));
    }
    let sbt = find("SBT");
    let weak = first_outcome(sbt, ModelId::Rsi).expect("SBT outcome");
    let eager = translate(&sbt.program, ImplVariant::EagerRsi);
    let ra = outcomes(&eager, ModelId::Ra, opts)?;
    let rsync = outcomes(&eager, ModelId::RaRsync, opts)?;
    rows.push(row(
        "SBT",
        format!("eager-rsi admits {} under ra but not under ra-rsync", format_outcome(&weak)),
        ra.contains_matching(&weak) && !rsync.contains_matching(&weak),
        format!("{} outcomes under ra, {} under ra-rsync", ra.outcomes.len(), rsync.outcomes.len()),
    ));
    Ok(rows)
}

fn lock_rows(opts: &EnumOptions, spin_bound: usize) -> Result<Vec<Row>, MrswError> {
    let mut rows = Vec::new();
    let mut witnesses = 0;
    let mut full_rsync = true;
    for client in corpus::lock_clients() {
        for kind in LockKind::ALL {
            let r = verify_lock_axioms(&client, LockImpl { kind, spin_bound }, opts)?;
            let axioms = kind.guaranteed_axioms().iter().map(|a| a.name()).collect::<Vec<_>>().join(", ");
            rows.push(row(
                &client.name,
                format!("{kind}: {axioms} on every execution"),
                r.guarantees_hold() && r.executions > 0,
                format!("{} executions, {} dropped, {} with unordered readers", r.executions, r.dropped, r.reader_unordered_executions),
            ));
            match kind {
                LockKind::FullSync => full_rsync &= r.reader_unordered_executions == 0,
                LockKind::WriteSync => witnesses += r.reader_unordered_executions,
            }
        }
    }
    rows.push(row("all clients", "full-sync orders every pair of reader operations", full_rsync, ""));
    rows.push(row("all clients", "write-sync leaves some reader pair unordered", witnesses > 0, format!("{witnesses} executions")));
    Ok(rows)
}

mod common;

use std::time::{Duration, Instant};

use common::oracle::{all_candidates, lock_events_per_lock, matches_enumerator, shared_events};
use silab::consistency::{rsi_consistent, si_consistent_axiomatic, si_consistent_hb, Axiom, ModelId};
use silab::corpus;
use silab::enumerate::{outcomes, EnumOptions};
use silab::litmus::{parse_litmus, Outcome, Program};
use silab::mrsw::{verify_lock_axioms, LockImpl, LockKind};
use silab::stm::{check_rsi_side_condition, nt_blocks, translate, wrap, ImplVariant};

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(pairs: &[(&str, i64)]) -> Outcome {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn fig1(name: &str) -> Program {
    corpus::fig1().into_iter().find(|l| l.program.name == name).expect("bundled test").program
}

fn opts() -> EnumOptions {
    EnumOptions::default()
}

fn tx_only() -> Vec<Program> {
    corpus::theorem_programs().into_iter().map(|l| l.program).filter(|p| p.has_transactions() && !p.has_non_transactional()).collect()
}

fn mixed() -> Vec<Program> {
    corpus::theorem_programs().into_iter().map(|l| l.program).filter(|p| p.has_non_transactional()).collect()
}

fn anomaly_table() -> Criterion {
    let table: [(&str, ModelId, Outcome, bool); 6] = [
        ("LU", ModelId::SiAxiomatic, outcome(&[("t1:a", 0), ("t2:b", 0)]), false),
        ("WS", ModelId::SiAxiomatic, outcome(&[("t1:a", 0), ("t2:b", 0)]), true),
        ("WS2", ModelId::SiAxiomatic, outcome(&[("t1:a", 0), ("t2:b", 0)]), true),
        ("LU2", ModelId::SiAxiomatic, outcome(&[("t1:a", 2), ("t2:b", 0)]), false),
        ("SBT", ModelId::Rsi, outcome(&[("t1:b", 0), ("t2:d", 0)]), true),
        ("MPT", ModelId::Rsi, outcome(&[("t2:a", 1), ("t2:b", 0)]), false),
    ];
    let start = Instant::now();
    let mut matched = 0;
    let mut misses = Vec::new();
    for (name, model, o, allowed) in &table {
        let set = outcomes(&fig1(name), *model, &opts()).unwrap();
        if set.contains_matching(o) == *allowed {
            matched += 1;
        } else {
            misses.push(*name);
        }
    }
    let elapsed = start.elapsed();
    Criterion {
        name: "anomaly table: LU, LU2 forbidden and WS, WS2 allowed under SI; SBT allowed and MPT forbidden under RSI",
        passed: matched == 6 && elapsed < Duration::from_secs(10),
        detail: format!("{matched}/6 in {elapsed:.2?}, mismatches {misses:?}"),
    }
}

fn candidate_defects() -> Criterion {
    let start = Instant::now();
    let lost = outcome(&[("t1:a", 0), ("t2:b", 0)]);
    let skew = outcome(&[("t1:a", 0), ("t2:b", 0)]);
    let lu = outcomes(&translate(&fig1("LU"), ImplVariant::CandA), ModelId::Ra, &opts()).unwrap();
    let ws = outcomes(&translate(&fig1("WS"), ImplVariant::CandB), ModelId::Ra, &opts()).unwrap();
    let ws2 = outcomes(&translate(&fig1("WS2"), ImplVariant::CandC), ModelId::Ra, &opts()).unwrap();
    let checks = [lu.contains_matching(&lost), !ws.contains_matching(&skew), !ws2.contains_matching(&skew)];
    let elapsed = start.elapsed();
    Criterion {
        name: "candidate defects: (a) admits LU, (b) excludes WS, (c) excludes WS2",
        passed: checks.iter().all(|&c| c) && elapsed < Duration::from_secs(60),
        detail: format!("{checks:?} in {elapsed:.2?}"),
    }
}

fn si_equivalence() -> Criterion {
    let mut graphs = 0;
    let mut disagreements = 0;
    for p in tx_only() {
        for g in all_candidates(&p) {
            graphs += 1;
            if si_consistent_axiomatic(&g).unwrap().consistent != si_consistent_hb(&g).unwrap().consistent {
                disagreements += 1;
            }
        }
    }
    Criterion {
        name: "si and si-hb agree on every rf × mo candidate of the transactional corpus",
        passed: disagreements == 0 && graphs > 0,
        detail: format!("{graphs} candidates, {disagreements} disagreements"),
    }
}

fn rsi_matches_si() -> Criterion {
    let mut graphs = 0;
    let mut disagreements = 0;
    for p in tx_only() {
        for g in all_candidates(&p) {
            graphs += 1;
            if rsi_consistent(&g).unwrap().consistent != si_consistent_hb(&g).unwrap().consistent {
                disagreements += 1;
            }
        }
    }
    Criterion {
        name: "rsi and si-hb agree on every candidate without non-transactional events",
        passed: disagreements == 0 && graphs > 0,
        detail: format!("{graphs} candidates, {disagreements} disagreements"),
    }
}

fn si_implementations() -> Criterion {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for p in tx_only() {
        let txs = p.transaction_count();
        if txs > 3 || shared_events(&p) > 8 {
            continue;
        }
        let start = Instant::now();
        let si = outcomes(&p, ModelId::SiAxiomatic, &opts()).unwrap().outcomes;
        let eager = outcomes(&translate(&p, ImplVariant::EagerSi), ModelId::Ra, &opts()).unwrap().outcomes;
        let lazy = outcomes(&translate(&p, ImplVariant::LazySi), ModelId::Ra, &opts()).unwrap().outcomes;
        slowest = slowest.max(start.elapsed());
        checked += 1;
        if si != eager || si != lazy {
            failures.push(p.name.clone());
        }
    }
    Criterion {
        name: "si = eager-si = lazy-si under ra on the transactional corpus",
        passed: failures.is_empty() && checked >= 5 && slowest < Duration::from_secs(300),
        detail: format!("{checked} programs, slowest {slowest:.2?}, failures {failures:?}"),
    }
}

fn rsi_implementations() -> Criterion {
    let mut checked = 0;
    let mut failures = Vec::new();
    for p in mixed() {
        if !check_rsi_side_condition(&p, &opts()).unwrap() {
            continue;
        }
        let rsi = outcomes(&p, ModelId::Rsi, &opts()).unwrap().outcomes;
        let eager = outcomes(&translate(&p, ImplVariant::EagerRsi), ModelId::Ra, &opts()).unwrap().outcomes;
        let lazy = outcomes(&translate(&p, ImplVariant::LazyRsi), ModelId::Ra, &opts()).unwrap().outcomes;
        checked += 1;
        if rsi != eager || rsi != lazy {
            failures.push(p.name.clone());
        }
    }
    Criterion {
        name: "rsi = eager-rsi = lazy-rsi under ra on mixed programs meeting the side condition",
        passed: failures.is_empty() && checked >= 5,
        detail: format!("{checked} programs, failures {failures:?}"),
    }
}

fn monotonicity() -> Criterion {
    let mut pairs = 0;
    let mut counterexamples = Vec::new();
    for p in mixed() {
        let base = outcomes(&p, ModelId::Rsi, &opts()).unwrap().outcomes;
        for b in nt_blocks(&p) {
            let w = wrap(&p, &b);
            pairs += 1;
            if !outcomes(&w, ModelId::Rsi, &opts()).unwrap().outcomes.is_subset(&base) {
                counterexamples.push(w.name.clone());
            }
        }
    }
    Criterion {
        name: "wrapping plain code in a transaction adds no rsi outcome",
        passed: counterexamples.is_empty() && pairs >= 5,
        detail: format!("{pairs} pairs, counterexamples {counterexamples:?}"),
    }
}

fn lock_sensitivity() -> Criterion {
    let weak = outcome(&[("t1:b", 0), ("t2:d", 0)]);
    let eager = translate(&fig1("SBT"), ImplVariant::EagerRsi);
    let ra = outcomes(&eager, ModelId::Ra, &opts()).unwrap().contains_matching(&weak);
    let rsync = outcomes(&eager, ModelId::RaRsync, &opts()).unwrap().contains_matching(&weak);
    Criterion {
        name: "eager-rsi SBT shows b=0, d=0 under ra and not under ra-rsync",
        passed: ra && !rsync,
        detail: format!("ra {ra}, ra-rsync {rsync}"),
    }
}

fn lock_implementations() -> Criterion {
    let full = [Axiom::WSync, Axiom::WEx, Axiom::RShare, Axiom::RSync];
    let write = [Axiom::WSync, Axiom::WEx, Axiom::RShare];
    let mut ok = true;
    let mut executions = [0usize; 2];
    let mut unordered = 0;
    for client in corpus::lock_clients() {
        let bounds: &[usize] = if client.threads.len() <= 2 && lock_events_per_lock(&client) <= 4 { &[1, 2] } else { &[1] };
        for &spin_bound in bounds {
            let f = verify_lock_axioms(&client, LockImpl { kind: LockKind::FullSync, spin_bound }, &opts()).unwrap();
            let w = verify_lock_axioms(&client, LockImpl { kind: LockKind::WriteSync, spin_bound }, &opts()).unwrap();
            ok &= f.executions > 0 && w.executions > 0;
            ok &= full.iter().all(|&a| f.always_holds(a));
            ok &= write.iter().all(|&a| w.always_holds(a));
            executions[0] += f.executions;
            executions[1] += w.executions;
            unordered += w.reader_unordered_executions;
        }
    }
    Criterion {
        name: "full-sync meets WSync, WEx, RShare, RSync; write-sync meets WSync, WEx, RShare and leaves readers unordered",
        passed: ok && unordered >= 1,
        detail: format!("{} full-sync and {} write-sync executions, {unordered} with unordered readers", executions[0], executions[1]),
    }
}

fn oracle_equivalence() -> Criterion {
    let extra = [
        "litmus plain_mp\nlocations x y\nthread t1\n  x = 1\n  y = 1\nthread t2\n  a = y\n  b = x\n",
        "litmus locked_sb\nlocations x y\nthread t1\n  lock_w l\n  x = 1\n  a = y\n  unlock_w l\nthread t2\n  lock_r l\n  y = 1\n  b = x\n  unlock_r l\n",
    ];
    let programs: Vec<Program> = corpus::theorem_programs()
        .into_iter()
        .map(|l| l.program)
        .chain(corpus::lock_clients())
        .chain(extra.iter().map(|t| parse_litmus(t).unwrap().program))
        .filter(|p| shared_events(p) <= 8 && lock_events_per_lock(p) <= 5)
        .collect();
    let mut comparisons = 0;
    let mut failures = Vec::new();
    for p in &programs {
        match matches_enumerator(p) {
            Ok(n) => comparisons += n,
            Err(e) => failures.push(e),
        }
    }
    Criterion {
        name: "pruned enumerator equals the generate-and-filter oracle on programs with at most 8 shared events",
        passed: failures.is_empty() && comparisons > 0,
        detail: format!("{} programs, {comparisons} model comparisons, failures {failures:?}", programs.len()),
    }
}

fn main() {
    let criteria = [
        anomaly_table(),
        candidate_defects(),
        si_equivalence(),
        rsi_matches_si(),
        si_implementations(),
        rsi_implementations(),
        monotonicity(),
        lock_sensitivity(),
        lock_implementations(),
        oracle_equivalence(),
    ];
    for c in &criteria {
        println!("{} {} [{}]", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = criteria.iter().filter(|c| !c.passed).count();
    println!("acceptance: {}/{} criteria met", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

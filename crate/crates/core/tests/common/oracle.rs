//! A generate-and-filter enumerator with no pruning. Every source map for
//! the reads, every per-location write permutation and every strict partial
//! order over each lock's events is built, and the whole graph is handed to
//! the model's checker.

use std::collections::BTreeSet;

use silab::consistency::{check, ModelId};
use silab::enumerate::{check_program, enumerate_consistent, graph_key, outcomes, GraphKey, skeleton, EnumOptions, Evaluation, Skeleton};
use silab::litmus::{Outcome, Program};
use silab::{EventId, ExecutionGraph, Relation};

pub struct OracleResult {
    pub graphs: BTreeSet<GraphKey>,
    pub outcomes: BTreeSet<Outcome>,
}

/// Events other than the initialisation writes.
pub fn shared_events(p: &Program) -> usize {
    skeleton(p).events.iter().filter(|e| e.tid != 0).count()
}

pub fn lock_events_per_lock(p: &Program) -> usize {
    skeleton(p).locks_by_loc().values().map(Vec::len).max().unwrap_or(0)
}

fn product<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x.clone());
                    p
                })
            })
            .collect();
    }
    out
}

fn permutations(items: &[EventId]) -> Vec<Vec<EventId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn chain(n: usize, seq: &[EventId]) -> Relation {
    let mut r = Relation::empty(n);
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            r.insert(seq[i], seq[j]);
        }
    }
    r
}

/// Every strict partial order over `items`.
fn strict_orders(n: usize, items: &[EventId]) -> Vec<Relation> {
    let pairs: Vec<(EventId, EventId)> =
        items.iter().enumerate().flat_map(|(i, &a)| items[i + 1..].iter().map(move |&b| (a, b))).collect();
    let choices: Vec<Vec<Option<(EventId, EventId)>>> = pairs.iter().map(|&(a, b)| vec![None, Some((a, b)), Some((b, a))]).collect();
    product(&choices)
        .into_iter()
        .map(|c| Relation::from_pairs(n, c.into_iter().flatten()))
        .filter(|r| r.trans_closure() == *r)
        .collect()
}

/// `lo` is reader-minimal when it is generated by its writer-involving
/// pairs.
pub fn reader_minimal(g: &ExecutionGraph) -> bool {
    let writerish = g.lo.filter(|a, b| g.event(a).kind.is_writer_lock() || g.event(b).kind.is_writer_lock());
    writerish.trans_closure() == g.lo
}

fn candidates(sk: &Skeleton, with_lo: bool) -> Vec<(ExecutionGraph, Outcome)> {
    let n = sk.len();
    let reads = sk.reads();
    let by_loc = sk.writes_by_loc();
    let sources: Vec<Vec<EventId>> =
        reads.iter().map(|&r| by_loc[&sk.events[r].loc].iter().copied().filter(|&w| w != r).collect()).collect();
    let mos: Vec<Relation> = product(&by_loc.values().map(|ws| permutations(ws)).collect::<Vec<_>>())
        .into_iter()
        .map(|seqs| seqs.iter().fold(Relation::empty(n), |acc, s| acc.union(&chain(n, s))))
        .collect();
    let los: Vec<Relation> = if with_lo {
        product(&sk.locks_by_loc().values().map(|es| strict_orders(n, es)).collect::<Vec<_>>())
            .into_iter()
            .map(|parts| parts.iter().fold(Relation::empty(n), |acc, r| acc.union(r)))
            .collect()
    } else {
        vec![Relation::empty(n)]
    };
    let mut out = Vec::new();
    for choice in product(&sources) {
        let mut src = vec![None; n];
        for (&r, &w) in reads.iter().zip(&choice) {
            src[r] = Some(w);
        }
        let rf = Relation::from_pairs(n, reads.iter().zip(&choice).map(|(&r, &w)| (w, r)));
        let v = match sk.evaluate(&src) {
            Evaluation::Done(v) => v,
            Evaluation::Reject => continue,
            Evaluation::Partial => {
                assert!(!sk.po.union(&rf).acyclic(), "evaluation can only stall on a po ∪ rf cycle");
                continue;
            }
        };
        let events = sk.valued_events(&v);
        let outcome = sk.outcome(&v);
        for mo in &mos {
            for lo in &los {
                let g = ExecutionGraph::from_parts(events.clone(), sk.po.clone(), rf.clone(), mo.clone(), lo.clone());
                out.push((g, outcome.clone()));
            }
        }
    }
    out
}

/// Graphs of `p` consistent under `m`, optionally restricted by `keep`.
pub fn oracle(p: &Program, m: ModelId, keep: impl Fn(&ExecutionGraph) -> bool) -> OracleResult {
    let sk = skeleton(p);
    let mut graphs = BTreeSet::new();
    let mut outcomes = BTreeSet::new();
    for (g, o) in candidates(&sk, m.is_ra()) {
        if check(m, &g).expect("shape matches the model").consistent && keep(&g) {
            graphs.insert(graph_key(&g));
            outcomes.insert(o);
        }
    }
    OracleResult { graphs, outcomes }
}

/// Every candidate over `rf × mo` (values consistent, cycles included),
/// unfiltered.
pub fn all_candidates(p: &Program) -> Vec<ExecutionGraph> {
    candidates(&skeleton(p), false).into_iter().map(|(g, _)| g).collect()
}

/// Checks the enumerator against the oracle under every model that applies
/// to `p`. Under RA the graph sets are compared on reader-minimal `lo` and
/// the outcome sets in full. Returns the number of models compared.
pub fn matches_enumerator(p: &Program) -> Result<usize, String> {
    let opts = EnumOptions::default();
    let models: Vec<ModelId> = ModelId::ALL.into_iter().filter(|&m| check_program(p, m).is_ok()).collect();
    for &m in &models {
        let graphs: BTreeSet<GraphKey> = enumerate_consistent(p, m, &opts).map_err(|e| e.to_string())?.iter().map(graph_key).collect();
        let found = outcomes(p, m, &opts).map_err(|e| e.to_string())?.outcomes;
        let full = oracle(p, m, |_| true);
        let expected = if m == ModelId::Ra { oracle(p, m, reader_minimal).graphs } else { full.graphs };
        if graphs != expected {
            return Err(format!("{} under {m}: {} graphs, oracle has {}", p.name, graphs.len(), expected.len()));
        }
        if found != full.outcomes {
            return Err(format!("{} under {m}: outcomes {found:?}, oracle has {:?}", p.name, full.outcomes));
        }
    }
    Ok(models.len())
}

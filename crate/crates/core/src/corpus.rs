//! The bundled litmus tests, lock clients and example graphs.

use crate::litmus::{parse_litmus, parse_program, Litmus, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub name: &'static str,
    pub text: &'static str,
}

/// In table order: LU, WS, WS2, LU2, SBT, MPT.
pub const FIG1: &[Entry] = &[
    Entry { name: "lu", text: include_str!("../corpus/fig1/lu.litmus") },
    Entry { name: "ws", text: include_str!("../corpus/fig1/ws.litmus") },
    Entry { name: "ws2", text: include_str!("../corpus/fig1/ws2.litmus") },
    Entry { name: "lu2", text: include_str!("../corpus/fig1/lu2.litmus") },
    Entry { name: "sbt", text: include_str!("../corpus/fig1/sbt.litmus") },
    Entry { name: "mpt", text: include_str!("../corpus/fig1/mpt.litmus") },
];

pub const THEOREMS: &[Entry] = &[
    Entry { name: "counter", text: include_str!("../corpus/theorems/counter.litmus") },
    Entry { name: "double_write", text: include_str!("../corpus/theorems/double_write.litmus") },
    Entry { name: "mixed_double_write", text: include_str!("../corpus/theorems/mixed_double_write.litmus") },
    Entry { name: "mixed_mp_tx_reader", text: include_str!("../corpus/theorems/mixed_mp_tx_reader.litmus") },
    Entry { name: "mixed_mp_tx_writer", text: include_str!("../corpus/theorems/mixed_mp_tx_writer.litmus") },
    Entry { name: "mixed_sb", text: include_str!("../corpus/theorems/mixed_sb.litmus") },
    Entry { name: "mixed_snapshot", text: include_str!("../corpus/theorems/mixed_snapshot.litmus") },
    Entry { name: "mp", text: include_str!("../corpus/theorems/mp.litmus") },
    Entry { name: "racy_equal_writes", text: include_str!("../corpus/theorems/racy_equal_writes.litmus") },
    Entry { name: "read_own_write", text: include_str!("../corpus/theorems/read_own_write.litmus") },
    Entry { name: "sb", text: include_str!("../corpus/theorems/sb.litmus") },
    Entry { name: "write_skew3", text: include_str!("../corpus/theorems/write_skew3.litmus") },
];

pub const LOCKS: &[Entry] = &[
    Entry { name: "message_passing", text: include_str!("../corpus/locks/message_passing.litmus") },
    Entry { name: "promote_reader", text: include_str!("../corpus/locks/promote_reader.litmus") },
    Entry { name: "reader_promote", text: include_str!("../corpus/locks/reader_promote.litmus") },
    Entry { name: "reader_writer", text: include_str!("../corpus/locks/reader_writer.litmus") },
    Entry { name: "single_promote", text: include_str!("../corpus/locks/single_promote.litmus") },
    Entry { name: "three_threads", text: include_str!("../corpus/locks/three_threads.litmus") },
    Entry { name: "two_locks", text: include_str!("../corpus/locks/two_locks.litmus") },
    Entry { name: "two_readers", text: include_str!("../corpus/locks/two_readers.litmus") },
    Entry { name: "two_writers", text: include_str!("../corpus/locks/two_writers.litmus") },
];

pub const GRAPHS: &[Entry] = &[
    Entry { name: "plain_sees_partial_tx", text: include_str!("../corpus/graphs/plain_sees_partial_tx.json") },
    Entry { name: "tx_sees_partial_plain", text: include_str!("../corpus/graphs/tx_sees_partial_plain.json") },
    Entry { name: "overwritten_tx_write", text: include_str!("../corpus/graphs/overwritten_tx_write.json") },
    Entry { name: "init_only", text: include_str!("../corpus/graphs/init_only.json") },
    Entry { name: "ws", text: include_str!("../corpus/graphs/ws.json") },
];

fn parsed(entries: &[Entry]) -> Vec<Litmus> {
    entries.iter().map(|e| parse_litmus(e.text).unwrap_or_else(|err| panic!("bundled test {}: {err}", e.name))).collect()
}

/// The six anomaly tests.
pub fn fig1() -> Vec<Litmus> {
    parsed(FIG1)
}

/// The anomaly tests plus the additional programs used for the
/// implementation and monotonicity checks.
pub fn theorem_programs() -> Vec<Litmus> {
    let mut all = parsed(FIG1);
    all.extend(parsed(THEOREMS));
    all
}

pub fn lock_clients() -> Vec<Program> {
    LOCKS.iter().map(|e| parse_program(e.text).unwrap_or_else(|err| panic!("bundled client {}: {err}", e.name))).collect()
}

pub fn graph(name: &str) -> Option<&'static str> {
    GRAPHS.iter().find(|e| e.name == name).map(|e| e.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_parses() {
        assert_eq!(fig1().len(), 6);
        assert!(theorem_programs().len() > 6);
        assert!(!lock_clients().is_empty());
        for e in GRAPHS {
            crate::ExecutionGraph::from_json(e.text).unwrap();
        }
    }
}

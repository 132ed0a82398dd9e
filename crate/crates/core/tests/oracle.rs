mod common;

use common::gen;
use common::oracle::{lock_events_per_lock, matches_enumerator, shared_events};
use proptest::prelude::*;
use silab::corpus;
use silab::litmus::Program;

fn small_corpus() -> Vec<Program> {
    corpus::theorem_programs()
        .into_iter()
        .map(|l| l.program)
        .chain(corpus::lock_clients())
        .filter(|p| shared_events(p) <= 8 && lock_events_per_lock(p) <= 5)
        .collect()
}

#[test]
fn corpus_programs_match_the_oracle() {
    let programs = small_corpus();
    assert!(programs.len() >= 15, "only {} corpus programs are small enough", programs.len());
    for p in &programs {
        matches_enumerator(p).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_transactional_programs(p in gen::transactional(6)) {
        prop_assert!(matches_enumerator(&p).map_err(TestCaseError::fail)? > 0);
    }

    #[test]
    fn random_locked_programs(p in gen::locked(5)) {
        prop_assert!(matches_enumerator(&p).map_err(TestCaseError::fail)? > 0);
    }
}

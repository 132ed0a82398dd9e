//! Random small litmus programs, produced as text so that the parser is
//! exercised too.

use proptest::prelude::*;
use silab::litmus::{parse_litmus, Program};

#[derive(Debug, Clone)]
pub enum Access {
    Read(usize),
    Write(usize, i64),
}

#[derive(Debug, Clone)]
pub enum Item {
    Plain(Access),
    Tx(Vec<Access>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    None,
    Reader,
    Writer,
    Promoted,
}

const LOCS: [&str; 2] = ["x", "y"];

fn access() -> impl Strategy<Value = Access> {
    prop_oneof![(0..2usize).prop_map(Access::Read), (0..2usize, 1..3i64).prop_map(|(l, v)| Access::Write(l, v))]
}

fn item(tx: bool) -> BoxedStrategy<Item> {
    if tx {
        prop_oneof![access().prop_map(Item::Plain), prop::collection::vec(access(), 1..3).prop_map(Item::Tx)].boxed()
    } else {
        access().prop_map(Item::Plain).boxed()
    }
}

fn render_access(a: &Access, thread: usize, reg: &mut usize) -> String {
    match a {
        Access::Read(l) => {
            *reg += 1;
            format!("r{thread}{} = {}", reg, LOCS[*l])
        }
        Access::Write(l, v) => format!("{} = {v}", LOCS[*l]),
    }
}

pub fn render(threads: &[(Guard, Vec<Item>)]) -> String {
    let mut s = String::from("litmus gen\nlocations x y\n");
    for (t, (guard, items)) in threads.iter().enumerate() {
        s.push_str(&format!("thread t{}\n", t + 1));
        let (open, close) = match guard {
            Guard::None => ("", ""),
            Guard::Reader => ("lock_r l", "unlock_r l"),
            Guard::Writer => ("lock_w l", "unlock_w l"),
            Guard::Promoted => ("lock_r l\n  promote l", "unlock_w l"),
        };
        if !open.is_empty() {
            s.push_str(&format!("  {open}\n"));
        }
        let mut reg = 0;
        for it in items {
            match it {
                Item::Plain(a) => s.push_str(&format!("  {}\n", render_access(a, t + 1, &mut reg))),
                Item::Tx(body) => {
                    let parts: Vec<String> = body.iter().map(|a| render_access(a, t + 1, &mut reg)).collect();
                    s.push_str(&format!("  tx {{ {} }}\n", parts.join("; ")));
                }
            }
        }
        if !close.is_empty() {
            s.push_str(&format!("  {close}\n"));
        }
    }
    s
}

fn count(items: &[Item]) -> usize {
    items.iter().map(|i| if let Item::Tx(b) = i { b.len() } else { 1 }).sum()
}

/// Programs with transactions and plain accesses and no locks, at most
/// `max_events` accesses.
pub fn transactional(max_events: usize) -> impl Strategy<Value = Program> {
    prop::collection::vec(prop::collection::vec(item(true), 1..3), 2..4)
        .prop_filter("too many events", move |ts| ts.iter().map(|t| count(t)).sum::<usize>() <= max_events)
        .prop_map(|ts| {
            let threads: Vec<(Guard, Vec<Item>)> = ts.into_iter().map(|t| (Guard::None, t)).collect();
            parse_litmus(&render(&threads)).expect("generated program parses").program
        })
}

fn guard() -> impl Strategy<Value = Guard> {
    prop_oneof![Just(Guard::None), Just(Guard::Reader), Just(Guard::Writer), Just(Guard::Promoted)]
}

fn lock_events(g: Guard) -> usize {
    match g {
        Guard::None => 0,
        Guard::Reader | Guard::Writer => 2,
        Guard::Promoted => 3,
    }
}

/// Plain programs where each thread may hold lock `l` around its body, with
/// at most four lock events.
pub fn locked(max_events: usize) -> impl Strategy<Value = Program> {
    prop::collection::vec((guard(), prop::collection::vec(item(false), 1..3)), 2..4)
        .prop_filter("too many lock events", |ts| ts.iter().map(|(g, _)| lock_events(*g)).sum::<usize>() <= 4)
        .prop_filter("too many events", move |ts| ts.iter().map(|(_, t)| count(t)).sum::<usize>() <= max_events)
        .prop_map(|ts| parse_litmus(&render(&ts)).expect("generated program parses").program)
}

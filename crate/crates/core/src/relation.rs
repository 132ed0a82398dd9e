//! Finite binary relations over dense event ids.
//!
//! Relations are stored as square bit matrices, one row of `u64` words per
//! event. Graphs at desk scale stay well under a few hundred events, so the
//! cubic closure algorithms are cheap.

use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("immediate edges are only defined for strict partial orders; relation has a cycle through {0}")]
    NotStrictOrder(usize),
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// A subset of the event universe `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EventSet {
    n: usize,
    bits: Vec<u64>,
}

impl EventSet {
    pub fn empty(n: usize) -> Self {
        EventSet { n, bits: vec![0; words_for(n)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn from_iter_n(n: usize, items: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "event {i} outside universe of {}", self.n);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        iter_bits(&self.bits)
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        assert_eq!(self.n, other.n);
        EventSet {
            n: self.n,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn intersection(&self, other: &EventSet) -> EventSet {
        assert_eq!(self.n, other.n);
        EventSet {
            n: self.n,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn difference(&self, other: &EventSet) -> EventSet {
        assert_eq!(self.n, other.n);
        EventSet {
            n: self.n,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect(),
        }
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            }
        })
    })
}

/// A binary relation over the universe `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        let words = words_for(n);
        Relation { n, words, bits: vec![0; n * words] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// `[A]`: the identity relation restricted to `set`.
    pub fn identity_on(set: &EventSet) -> Self {
        let mut r = Self::empty(set.universe());
        for i in set.iter() {
            r.insert(i, i);
        }
        r
    }

    /// `A × B`.
    pub fn product(a: &EventSet, b: &EventSet) -> Self {
        assert_eq!(a.universe(), b.universe());
        let mut r = Self::empty(a.universe());
        for i in a.iter() {
            r.row_mut(i).copy_from_slice(&b.bits);
        }
        r
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n, "pair ({a}, {b}) outside universe of {}", self.n);
        let w = self.words;
        self.bits[a * w + b / 64] |= 1 << (b % 64);
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        let w = self.words;
        self.bits[a * w + b / 64] &= !(1 << (b % 64));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.bits[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| iter_bits(self.row(a)).map(move |b| (a, b)))
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(a))
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        assert_eq!(self.n, other.n);
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &Relation) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let mut r = self.clone();
        r.union_with(other);
        r
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        Relation {
            n: self.n,
            words: self.words,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn difference(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        Relation {
            n: self.n,
            words: self.words,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect(),
        }
    }

    /// `self ; other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        let mut out = Relation::empty(self.n);
        for a in 0..self.n {
            for c in iter_bits(self.row(a)).collect::<Vec<_>>() {
                let w = self.words;
                let (src, dst) = (c * w, a * w);
                for k in 0..w {
                    out.bits[dst + k] |= other.bits[src + k];
                }
            }
        }
        out
    }

    pub fn inverse(&self) -> Relation {
        let mut out = Relation::empty(self.n);
        for (a, b) in self.pairs() {
            out.insert(b, a);
        }
        out
    }

    /// `r⁺`, by Warshall's algorithm on bit rows.
    pub fn trans_closure(&self) -> Relation {
        let mut r = self.clone();
        let w = self.words;
        for k in 0..self.n {
            let row_k: Vec<u64> = r.row(k).to_vec();
            for i in 0..self.n {
                if r.bits[i * w + k / 64] & (1 << (k % 64)) != 0 {
                    for (b, k) in r.bits[i * w..(i + 1) * w].iter_mut().zip(&row_k) {
                        *b |= k;
                    }
                }
            }
        }
        r
    }

    /// `r?` over the whole universe.
    pub fn refl_closure(&self) -> Relation {
        self.union(&Relation::identity_on(&EventSet::full(self.n)))
    }

    /// `r*` over the whole universe.
    pub fn refl_trans_closure(&self) -> Relation {
        self.trans_closure().refl_closure()
    }

    /// `r ∩ (A × A)`.
    pub fn restrict(&self, set: &EventSet) -> Relation {
        self.restrict_domain(set).restrict_range(set)
    }

    /// `[A] ; r`.
    pub fn restrict_domain(&self, set: &EventSet) -> Relation {
        let mut out = self.clone();
        for a in 0..self.n {
            if !set.contains(a) {
                out.row_mut(a).fill(0);
            }
        }
        out
    }

    /// `r ; [A]`.
    pub fn restrict_range(&self, set: &EventSet) -> Relation {
        let mut out = self.clone();
        for a in 0..self.n {
            for (dst, mask) in out.row_mut(a).iter_mut().zip(&set.bits) {
                *dst &= mask;
            }
        }
        out
    }

    /// Keeps the pairs accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Relation {
        let mut out = Relation::empty(self.n);
        for (a, b) in self.pairs() {
            if keep(a, b) {
                out.insert(a, b);
            }
        }
        out
    }

    pub fn domain(&self) -> EventSet {
        EventSet::from_iter_n(self.n, (0..self.n).filter(|&a| self.row(a).iter().any(|w| *w != 0)))
    }

    pub fn range(&self) -> EventSet {
        let mut s = EventSet::empty(self.n);
        for a in 0..self.n {
            for (dst, src) in s.bits.iter_mut().zip(self.row(a)) {
                *dst |= src;
            }
        }
        s
    }

    pub fn irreflexive(&self) -> bool {
        (0..self.n).all(|a| !self.contains(a, a))
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self).is_subset(self)
    }

    pub fn acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Immediate edges of a strict partial order.
    pub fn imm(&self) -> Result<Relation, RelationError> {
        let closed = self.trans_closure();
        if let Some(a) = (0..self.n).find(|&a| closed.contains(a, a)) {
            return Err(RelationError::NotStrictOrder(a));
        }
        let two_step = self.compose(self);
        Ok(self.difference(&two_step))
    }

    /// Returns some cycle `e0 -> e1 -> ... -> e0` as the list `[e0, e1, ...]`,
    /// each consecutive pair (and the closing pair) being an edge of `self`.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut colour = vec![0u8; self.n];
        for root in 0..self.n {
            if colour[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
            colour[root] = 1;
            stack.push((root, self.successors(root).collect(), 0));
            while let Some(frame) = stack.last_mut() {
                let (node, succs, idx) = (frame.0, &frame.1, frame.2);
                if idx < succs.len() {
                    let next = succs[idx];
                    frame.2 += 1;
                    match colour[next] {
                        0 => {
                            colour[next] = 1;
                            let s = self.successors(next).collect();
                            stack.push((next, s, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|f| f.0 == next).unwrap();
                            return Some(stack[start..].iter().map(|f| f.0).collect());
                        }
                        _ => {}
                    }
                } else {
                    colour[node] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// True iff `cycle` is a non-empty closed walk along edges of `self`.
    pub fn has_cycle_path(&self, cycle: &[usize]) -> bool {
        !cycle.is_empty()
            && cycle
                .iter()
                .zip(cycle.iter().cycle().skip(1))
                .all(|(&a, &b)| self.contains(a, b))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl BitOr for &Relation {
    type Output = Relation;
    fn bitor(self, rhs: &Relation) -> Relation {
        self.union(rhs)
    }
}

impl BitAnd for &Relation {
    type Output = Relation;
    fn bitand(self, rhs: &Relation) -> Relation {
        self.intersection(rhs)
    }
}

impl Sub for &Relation {
    type Output = Relation;
    fn sub(self, rhs: &Relation) -> Relation {
        self.difference(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(usize, usize)]) -> Relation {
        Relation::from_pairs(4, pairs.iter().copied())
    }

    #[test]
    fn closure_of_chain() {
        let r = rel(&[(0, 1), (1, 2)]);
        assert_eq!(r.trans_closure(), rel(&[(0, 1), (1, 2), (0, 2)]));
    }

    #[test]
    fn two_cycle_is_not_acyclic() {
        let r = rel(&[(0, 1), (1, 0)]);
        assert!(!r.acyclic());
        let c = r.find_cycle().unwrap();
        assert!(r.has_cycle_path(&c));
    }

    #[test]
    fn compose_and_inverse() {
        let r = rel(&[(0, 1), (2, 3)]);
        let s = rel(&[(1, 2), (3, 0)]);
        assert_eq!(r.compose(&s), rel(&[(0, 2), (2, 0)]));
        assert_eq!(r.inverse(), rel(&[(1, 0), (3, 2)]));
    }

    #[test]
    fn imm_drops_transitive_edges() {
        let r = rel(&[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(r.imm().unwrap(), rel(&[(0, 1), (1, 2)]));
        assert!(rel(&[(0, 1), (1, 0)]).imm().is_err());
    }

    #[test]
    fn restrictions() {
        let r = rel(&[(0, 1), (1, 2), (2, 3)]);
        let s = EventSet::from_iter_n(4, [1, 2]);
        assert_eq!(r.restrict(&s), rel(&[(1, 2)]));
        assert_eq!(r.restrict_domain(&s), rel(&[(1, 2), (2, 3)]));
        assert_eq!(r.restrict_range(&s), rel(&[(0, 1), (1, 2)]));
        assert_eq!(Relation::identity_on(&s), rel(&[(1, 1), (2, 2)]));
    }

    #[test]
    fn wide_universe_uses_multiple_words() {
        let mut r = Relation::empty(130);
        r.insert(0, 129);
        r.insert(129, 64);
        let c = r.trans_closure();
        assert!(c.contains(0, 64));
        assert_eq!(c.len(), 3);
        assert!(c.acyclic());
    }
}

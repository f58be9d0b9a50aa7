//! Growable bit set over small non-negative integers.
//!
//! Assortments, offering sets and vertex subsets all use this type. Ordering
//! treats the set as a binary number (bit `i` has weight `2^i`), which gives
//! the "sorted by mask" order used for deterministic output.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSet {
    // invariant: no trailing zero words
    words: Vec<u64>,
}

/// An assortment is a set of product indices; valid ones contain product 0.
pub type Assortment = BitSet;

impl BitSet {
    pub fn new() -> Self {
        BitSet { words: Vec::new() }
    }

    pub fn from_slice(items: &[usize]) -> Self {
        items.iter().copied().collect()
    }

    /// The set `{0, 1, ..., len - 1}`.
    pub fn full(len: usize) -> Self {
        let mut s = BitSet { words: vec![u64::MAX; len / 64] };
        if len % 64 != 0 {
            s.words.push((1u64 << (len % 64)) - 1);
        }
        s.trim();
        s
    }

    /// Build from a 64-bit mask.
    pub fn from_mask(mask: u64) -> Self {
        let mut s = BitSet { words: vec![mask] };
        s.trim();
        s
    }

    /// Low 64 bits of the set as a mask.
    pub fn mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let had = self.words[w] >> (i % 64) & 1 == 1;
        self.words[w] |= 1 << (i % 64);
        !had
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let w = i / 64;
        if w >= self.words.len() {
            return false;
        }
        let had = self.words[w] >> (i % 64) & 1 == 1;
        self.words[w] &= !(1 << (i % 64));
        self.trim();
        had
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest element, if any.
    pub fn max_item(&self) -> Option<usize> {
        let w = self.words.len().checked_sub(1)?;
        Some(w * 64 + 63 - self.words[w].leading_zeros() as usize)
    }

    pub fn min_item(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { words: &self.words, word: 0, cur: self.words.first().copied().unwrap_or(0) }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.len() <= other.words.len()
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let (long, short) = if self.words.len() >= other.words.len() { (self, other) } else { (other, self) };
        let mut words = long.words.clone();
        for (w, s) in words.iter_mut().zip(&short.words) {
            *w |= s;
        }
        BitSet { words }
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = BitSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() };
        s.trim();
        s
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut words = self.words.clone();
        for (w, o) in words.iter_mut().zip(&other.words) {
            *w &= !o;
        }
        let mut s = BitSet { words };
        s.trim();
        s
    }

    pub fn union_with(&mut self, other: &BitSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        self.words.truncate(other.words.len());
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= o;
        }
        self.trim();
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= !o;
        }
        self.trim();
    }

    /// Parse a comma separated list such as `0,2,4`.
    pub fn parse_list(text: &str) -> Option<BitSet> {
        let mut s = BitSet::new();
        for part in text.split(',') {
            let part = part.trim().trim_start_matches('{').trim_end_matches('}').trim();
            if part.is_empty() {
                continue;
            }
            s.insert(part.parse().ok()?);
        }
        Some(s)
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    word: usize,
    cur: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let tz = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.word * 64 + tz);
            }
            self.word += 1;
            if self.word >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.word];
        }
    }
}

impl<'a> IntoIterator for &'a BitSet {
    type Item = usize;
    type IntoIter = Iter<'a>;
    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl FromIterator<usize> for BitSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = BitSet::new();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl Ord for BitSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for BitSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for BitSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for BitSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(deserializer)?;
        Ok(items.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = BitSet::from_slice(&[0, 2, 4, 70]);
        let b = BitSet::from_slice(&[2, 3, 70]);
        assert_eq!(a.len(), 4);
        assert_eq!(a.max_item(), Some(70));
        assert_eq!(a.intersection(&b).to_vec(), vec![2, 70]);
        assert_eq!(a.difference(&b).to_vec(), vec![0, 4]);
        assert_eq!(a.union(&b).to_vec(), vec![0, 2, 3, 4, 70]);
        assert!(BitSet::from_slice(&[2, 70]).is_subset(&a));
        assert!(!b.is_subset(&a));
        assert_eq!(BitSet::full(66).len(), 66);
        assert_eq!(format!("{}", BitSet::from_slice(&[0, 2, 4])), "{0,2,4}");
    }

    #[test]
    fn removal_keeps_canonical_form() {
        let mut a = BitSet::from_slice(&[1, 100]);
        a.remove(100);
        assert_eq!(a, BitSet::from_slice(&[1]));
        assert_eq!(a.cmp(&BitSet::from_slice(&[1])), Ordering::Equal);
    }

    #[test]
    fn ordering_is_numeric() {
        let small = BitSet::from_slice(&[0, 1, 2]);
        let big = BitSet::from_slice(&[3]);
        assert!(small < big);
        assert!(BitSet::from_slice(&[64]) > BitSet::from_slice(&[0, 63]));
    }

    #[test]
    fn parse_list_accepts_braces() {
        assert_eq!(BitSet::parse_list("{0,2,4}").unwrap().to_vec(), vec![0, 2, 4]);
        assert_eq!(BitSet::parse_list("0, 3").unwrap().to_vec(), vec![0, 3]);
        assert!(BitSet::parse_list("a").is_none());
    }
}

//! Pair partitions of `{1, ..., k}` and non-crossing set partitions.
//!
//! Pair partitions index the matched factors in the trace expansion of
//! `(1/n) E tr X^k`; their crossing structure and height decide how each one
//! contributes to the limiting moments. Non-crossing set partitions drive the
//! free moment-cumulant recursion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ground set for which pair partitions are enumerated (`11!! = 10395`).
pub const PAIR_PARTITION_CAP: usize = 12;

/// Largest ground set for which non-crossing set partitions are enumerated
/// (`C_12 = 208012`).
pub const NONCROSSING_SET_PARTITION_CAP: usize = 12;

/// A partition of `{1, ..., k}` into two-element blocks.
///
/// Blocks are stored as `(i, j)` with `i < j`, sorted by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PairPartition {
    blocks: Vec<(usize, usize)>,
    // mates[i] is the partner of i; index 0 unused
    mates: Vec<usize>,
}

pub(crate) fn check_order(k: usize) -> Result<()> {
    if k % 2 == 1 {
        return Err(Error::OddOrder(k));
    }
    if k < 2 {
        return Err(Error::OrderTooSmall(k));
    }
    Ok(())
}

impl PairPartition {
    /// Builds a pair partition from arbitrary-order blocks, validating that
    /// they cover `{1, ..., 2 * blocks.len()}` exactly once.
    pub fn new<I>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut blocks: Vec<(usize, usize)> = blocks
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        blocks.sort_unstable();
        let k = 2 * blocks.len();
        if k == 0 {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut mates = vec![0usize; k + 1];
        for &(i, j) in &blocks {
            if i == j {
                return Err(Error::InvalidPartition(format!("block {{{i},{j}}} is a singleton")));
            }
            for x in [i, j] {
                if x == 0 || x > k {
                    return Err(Error::InvalidPartition(format!(
                        "element {x} outside {{1..{k}}}"
                    )));
                }
                if mates[x] != 0 {
                    return Err(Error::InvalidPartition(format!("element {x} used twice")));
                }
            }
            mates[i] = j;
            mates[j] = i;
        }
        Ok(Self { blocks, mates })
    }

    /// Size of the ground set.
    pub fn k(&self) -> usize {
        2 * self.blocks.len()
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Partner of `i` (1-based).
    pub fn mate(&self, i: usize) -> usize {
        self.mates[i]
    }

    /// True iff some blocks `{i, l}`, `{j, m}` satisfy `i < j < l < m`.
    pub fn is_crossing(&self) -> bool {
        self.blocks.iter().enumerate().any(|(s, &(a, b))| {
            self.blocks[s + 1..]
                .iter()
                .any(|&(c, d)| a < c && c < b && b < d)
        })
    }

    /// Whether `{lo..=hi}` is a union of blocks. An empty interval
    /// (`lo > hi`) counts as a pair partition.
    pub fn restriction_is_pair_partition(&self, lo: usize, hi: usize) -> bool {
        if lo > hi {
            return true;
        }
        if lo == 0 || hi > self.k() {
            return false;
        }
        (lo..=hi).all(|x| (lo..=hi).contains(&self.mates[x]))
    }

    /// Number of blocks `{i, j}` whose enclosed interval `{i+1..j-1}` is
    /// itself a union of blocks (adjacent blocks included).
    pub fn height(&self) -> usize {
        self.blocks
            .iter()
            .filter(|&&(i, j)| self.restriction_is_pair_partition(i + 1, j - 1))
            .count()
    }

    /// Image under the reflection `i -> k + 1 - i`.
    pub fn reflect(&self) -> Self {
        let k = self.k();
        Self::new(self.blocks.iter().map(|&(i, j)| (k + 1 - j, k + 1 - i)))
            .expect("reflection of a pair partition is a pair partition")
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in &self.blocks {
            write!(f, "{{{i},{j}}}")?;
        }
        Ok(())
    }
}

impl FromStr for PairPartition {
    type Err = Error;

    /// Parses the `{1,4}{2,3}` notation; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            kind: "pair partition",
            input: s.to_string(),
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .ok_or_else(err)?;
        let mut blocks = Vec::new();
        for block in body.split("}{") {
            let (a, b) = block.split_once(',').ok_or_else(err)?;
            let a = a.parse().map_err(|_| err())?;
            let b = b.parse().map_err(|_| err())?;
            blocks.push((a, b));
        }
        Self::new(blocks)
    }
}

impl TryFrom<String> for PairPartition {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PairPartition> for String {
    fn from(p: PairPartition) -> String {
        p.to_string()
    }
}

/// All pair partitions of `{1, ..., k}` in canonical order: the smallest
/// unmatched element is paired with each candidate partner in ascending
/// order, so block lists come out lexicographically sorted.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    check_order(k)?;
    if k > PAIR_PARTITION_CAP {
        return Err(Error::EnumerationCap {
            what: "pair partition enumeration",
            requested: k,
            cap: PAIR_PARTITION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut remaining: Vec<usize> = (1..=k).collect();
    let mut current = Vec::with_capacity(k / 2);
    pair_up(&mut remaining, &mut current, &mut out);
    Ok(out)
}

fn pair_up(
    remaining: &mut Vec<usize>,
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<PairPartition>,
) {
    if remaining.is_empty() {
        out.push(PairPartition::new(current.iter().copied()).expect("enumeration yields valid blocks"));
        return;
    }
    let first = remaining.remove(0);
    for idx in 0..remaining.len() {
        let partner = remaining.remove(idx);
        current.push((first, partner));
        pair_up(remaining, current, out);
        current.pop();
        remaining.insert(idx, partner);
    }
    remaining.insert(0, first);
}

/// Number of non-crossing pair partitions of `{1, ..., k}`, by enumeration.
pub fn count_noncrossing(k: usize) -> Result<usize> {
    Ok(enumerate_pair_partitions(k)?
        .iter()
        .filter(|p| !p.is_crossing())
        .count())
}

/// A partition of `{1, ..., n}` into nonempty blocks, each sorted, blocks
/// ordered by their minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        let mut seen = vec![false; n + 1];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &x in b {
                if x == 0 || x > n || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidPartition(format!("bad element {x}")));
                }
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(Error::InvalidPartition("blocks do not cover the ground set".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block sizes in block order.
    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    /// No `a < b < c < d` with `a, c` in one block and `b, d` in another.
    pub fn is_noncrossing(&self) -> bool {
        let mut owner = vec![0usize; self.n + 1];
        for (idx, b) in self.blocks.iter().enumerate() {
            for &x in b {
                owner[x] = idx;
            }
        }
        // A block may only resume once every block opened after it has closed.
        let mut open: Vec<usize> = Vec::new();
        for x in 1..=self.n {
            let b = owner[x];
            let block = &self.blocks[b];
            if x != block[0] && open.last() != Some(&b) {
                return false;
            }
            if x == block[0] && block.len() > 1 {
                open.push(b);
            } else if x == *block.last().unwrap() && block.len() > 1 {
                open.pop();
            }
        }
        true
    }
}

/// All non-crossing set partitions of `{1, ..., n}`; there are `C_n` of them.
pub fn enumerate_noncrossing_set_partitions(n: usize) -> Result<Vec<SetPartition>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > NONCROSSING_SET_PARTITION_CAP {
        return Err(Error::EnumerationCap {
            what: "non-crossing set partition enumeration",
            requested: n,
            cap: NONCROSSING_SET_PARTITION_CAP,
        });
    }
    // by_len[m] holds the partitions of {0, ..., m-1}
    let mut by_len: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![Vec::new()]];
    for len in 1..=n {
        let mut parts = Vec::new();
        // element 0 alone
        for rest in &by_len[len - 1] {
            let mut p = vec![vec![0]];
            p.extend(shifted(rest, 1));
            parts.push(p);
        }
        // element 0 followed in its block by b; {1..b-1} is closed off
        for b in 1..len {
            for inner in &by_len[b - 1] {
                for rest in &by_len[len - b] {
                    let mut tail = shifted(rest, b);
                    tail[0].insert(0, 0);
                    let mut p = tail;
                    p.extend(shifted(inner, 1));
                    parts.push(p);
                }
            }
        }
        by_len.push(parts);
    }
    Ok(by_len
        .pop()
        .unwrap()
        .into_iter()
        .map(|blocks| {
            let blocks = blocks
                .into_iter()
                .map(|b| b.into_iter().map(|x| x + 1).collect())
                .collect();
            SetPartition::new(n, blocks).expect("generated partition is valid")
        })
        .collect())
}

fn shifted(p: &[Vec<usize>], by: usize) -> Vec<Vec<usize>> {
    p.iter()
        .map(|b| b.iter().map(|x| x + by).collect())
        .collect()
}

//! Partition enumeration.
//!
//! Partitions are listed with parts in decreasing order, and lists of
//! partitions are in lexicographically descending order (`[4]` before
//! `[3, 1]` before `[2, 2]`).

use alloc::vec;
use alloc::vec::Vec;

/// Constraints describing a family of partitions of `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSet {
    pub target: i64,
    pub min_part: i64,
    pub distinct: bool,
}

impl PartitionSet {
    pub fn new(target: i64, min_part: i64, distinct: bool) -> Self {
        PartitionSet {
            target,
            min_part,
            distinct,
        }
    }

    pub fn enumerate(&self) -> Vec<Vec<i64>> {
        enumerate_partitions(self.target, self.min_part, self.distinct)
    }

    pub fn count(&self) -> usize {
        self.enumerate().len()
    }
}

/// All partitions of `n` into parts `>= min_part` (strictly decreasing when
/// `distinct`), in lexicographically descending order. `min_part` is clamped
/// to at least 1; `n < 0` gives an empty list.
pub fn enumerate_partitions(n: i64, min_part: i64, distinct: bool) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if n < 0 {
        return out;
    }
    let min_part = min_part.max(1);
    let mut cur = Vec::new();
    rec(n, n, min_part, distinct, &mut cur, &mut out);
    out
}

fn rec(rem: i64, max: i64, min: i64, distinct: bool, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if rem == 0 {
        out.push(cur.clone());
        return;
    }
    let mut part = max.min(rem);
    while part >= min {
        cur.push(part);
        let next_max = if distinct { part - 1 } else { part };
        rec(rem - part, next_max, min, distinct, cur, out);
        cur.pop();
        part -= 1;
    }
}

/// Number of `colors`-colored partitions of each `n <= max_n`, i.e. the
/// coefficients of `∏ (1 - q^k)^{-colors}`, computed by counting multisets
/// one part size at a time.
pub fn colored_partition_counts(colors: usize, max_n: usize) -> Vec<u128> {
    let mut counts = vec![0u128; max_n + 1];
    counts[0] = 1;
    for part in 1..=max_n {
        for _ in 0..colors {
            for n in part..=max_n {
                counts[n] += counts[n - part];
            }
        }
    }
    counts
}

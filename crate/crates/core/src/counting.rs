//! Exact block-repetition counts and frequency power sums for every block
//! length, derived from a [`SubstringIndex`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::SubstringIndex;

/// Supported Renyi orders.
pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub m: usize,
    /// Block positions, `n - m + 1`.
    pub total: u64,
    /// Distinct block types.
    pub distinct: u64,
    /// Repetitions, `total - distinct`.
    pub repeats: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStatsSeries {
    pub n: usize,
    /// Rows for `m = 1..=m_cap`, in order.
    pub rows: Vec<BlockStats>,
}

impl BlockStatsSeries {
    pub fn m_cap(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, m: usize) -> Option<&BlockStats> {
        m.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    /// Largest `m` with at least one repetition, 0 if none in range.
    pub fn last_repeated_length(&self) -> usize {
        self.rows.iter().rev().find(|r| r.repeats > 0).map_or(0, |r| r.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSumRow {
    pub m: usize,
    /// Sum of `count^order` over block types occurring at least `order` times.
    pub power_sum: u128,
    /// Number of block types occurring at least `order` times.
    pub eligible_types: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSumSeries {
    pub order: u32,
    pub rows: Vec<PowerSumRow>,
}

impl PowerSumSeries {
    pub fn m_cap(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, m: usize) -> Option<&PowerSumRow> {
        m.checked_sub(1).and_then(|i| self.rows.get(i))
    }
}

/// `m_max + 1`, clipped to the text length.
pub fn default_m_cap(index: &SubstringIndex) -> usize {
    (index.max_repeat_len() + 1).min(index.len()).max(1)
}

fn check_cap(index: &SubstringIndex, m_cap: usize) -> Result<()> {
    if m_cap == 0 || m_cap > index.len() {
        return Err(Error::CapExceedsLength {
            m_cap,
            n: index.len(),
        });
    }
    Ok(())
}

pub fn check_order(order: u32) -> Result<()> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(())
}

/// `T_m`, `K_m` and `D_m` for `m = 1..=m_cap`. `D_m` is the number of
/// adjacent suffix-array neighbours sharing a prefix of length `m`.
pub fn block_stats(index: &SubstringIndex, m_cap: usize) -> Result<BlockStatsSeries> {
    check_cap(index, m_cap)?;
    let n = index.len();
    let pairs = index.adjacent_pairs_at_least(m_cap);
    let rows = (1..=m_cap)
        .map(|m| {
            let total = (n - m + 1) as u64;
            let repeats = pairs[m];
            BlockStats {
                m,
                total,
                distinct: total - repeats,
                repeats,
            }
        })
        .collect();
    Ok(BlockStatsSeries { n, rows })
}

/// Power sums `P_order(m)` restricted to block types with count >= order.
///
/// Orders above [`MAX_ORDER`] are accepted here (the sum is well defined)
/// as long as the accumulation cannot overflow; the entropy corrections
/// downstream only exist for orders 2 to 4.
pub fn power_sums(index: &SubstringIndex, order: u32, m_cap: usize) -> Result<PowerSumSeries> {
    if order < MIN_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    check_cap(index, m_cap)?;
    // count^order <= n^order must fit comfortably in u128.
    if (index.len() as f64).log2() * order as f64 > 120.0 {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut sum_delta = vec![0i128; m_cap + 2];
    let mut type_delta = vec![0i64; m_cap + 2];
    for class in index.repeated_classes() {
        if class.count < order {
            continue;
        }
        let lo = class.shortest as usize;
        if lo > m_cap {
            continue;
        }
        let hi = (class.longest as usize).min(m_cap);
        let weight = (class.count as i128).pow(order);
        sum_delta[lo] += weight;
        sum_delta[hi + 1] -= weight;
        type_delta[lo] += 1;
        type_delta[hi + 1] -= 1;
    }
    let mut sum = 0i128;
    let mut types = 0i64;
    let rows = (1..=m_cap)
        .map(|m| {
            sum += sum_delta[m];
            types += type_delta[m];
            PowerSumRow {
                m,
                power_sum: sum as u128,
                eligible_types: types as u64,
            }
        })
        .collect();
    Ok(PowerSumSeries { order, rows })
}

/// Longest block length occurring at two distinct (possibly overlapping)
/// start positions.
pub fn max_repetition(index: &SubstringIndex) -> usize {
    index.max_repeat_len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(s: &str) -> SubstringIndex {
        SubstringIndex::from_symbols(&s.chars().collect::<Vec<_>>())
    }

    #[test]
    fn banana_block_stats() {
        let stats = block_stats(&index("banana"), 6).unwrap();
        let triple = |m: usize| {
            let r = stats.get(m).unwrap();
            (r.total, r.distinct, r.repeats)
        };
        assert_eq!(triple(1), (6, 3, 3));
        assert_eq!(triple(2), (5, 3, 2));
        assert_eq!(triple(3), (4, 3, 1));
        assert_eq!(triple(4), (3, 3, 0));
        assert_eq!(stats.last_repeated_length(), 3);
    }

    #[test]
    fn banana_power_sums() {
        let idx = index("banana");
        let p2 = power_sums(&idx, 2, 4).unwrap();
        assert_eq!(p2.get(2).unwrap().power_sum, 8);
        assert_eq!(p2.get(2).unwrap().eligible_types, 2);
        // "a" x3, "n" x2
        assert_eq!(p2.get(1).unwrap().power_sum, 9 + 4);
        let p3 = power_sums(&idx, 3, 4).unwrap();
        assert_eq!(p3.get(2).unwrap().power_sum, 0);
        assert_eq!(p3.get(1).unwrap().power_sum, 27);
    }

    #[test]
    fn constant_text_power_sum() {
        let p = power_sums(&index("aaaa"), 2, 1).unwrap();
        assert_eq!(p.get(1).unwrap().power_sum, 16);
    }

    #[test]
    fn cap_and_order_errors() {
        let idx = index("banana");
        assert!(matches!(block_stats(&idx, 0), Err(Error::CapExceedsLength { .. })));
        assert!(matches!(block_stats(&idx, 7), Err(Error::CapExceedsLength { .. })));
        assert!(matches!(power_sums(&idx, 1, 3), Err(Error::UnsupportedOrder(1))));
        assert_eq!(default_m_cap(&idx), 4);
        assert_eq!(default_m_cap(&index("abc")), 1);
    }

    #[test]
    fn max_repetition_examples() {
        assert_eq!(max_repetition(&index("banana")), 3);
        assert_eq!(max_repetition(&index("abcdef")), 0);
        assert_eq!(max_repetition(&index("abab")), 2);
    }

    #[test]
    fn large_counts_do_not_overflow() {
        let n = 200_000;
        let idx = SubstringIndex::from_symbols(&vec!['z'; n]);
        let p4 = power_sums(&idx, 4, 2).unwrap();
        assert_eq!(p4.get(1).unwrap().power_sum, (n as u128).pow(4));
        assert_eq!(p4.get(2).unwrap().power_sum, ((n - 1) as u128).pow(4));
    }
}

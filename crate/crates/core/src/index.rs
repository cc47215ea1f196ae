//! Suffix array + LCP index over a symbol sequence.
//!
//! Every distinct substring of the text belongs to exactly one
//! [`RepeatClass`]: either an LCP interval (internal node of the implicit
//! suffix tree) or the unique tail of a single suffix (a leaf). All substrings
//! of one class share the same occurrence count, so per-length statistics
//! reduce to range updates over the class list.

use crate::text::AnalyzedText;

const EMPTY: usize = usize::MAX;

/// Substrings of lengths `shortest..=longest` that all occur exactly `count`
/// times (overlaps allowed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepeatClass {
    pub count: u32,
    pub shortest: u32,
    pub longest: u32,
}

impl RepeatClass {
    pub fn covers(&self, m: usize) -> bool {
        (self.shortest as usize) <= m && m <= (self.longest as usize)
    }
}

#[derive(Debug, Clone)]
pub struct SubstringIndex {
    n: usize,
    suffix_array: Vec<u32>,
    /// `lcp[i]` is the longest common prefix of suffixes `sa[i - 1]` and
    /// `sa[i]`; `lcp[0] == 0`.
    lcp: Vec<u32>,
    repeated: Vec<RepeatClass>,
    max_repeat: usize,
}

impl SubstringIndex {
    pub fn build(text: &AnalyzedText) -> Self {
        Self::from_symbols(text.symbols())
    }

    pub fn from_symbols(symbols: &[char]) -> Self {
        let (ranks, upper) = dense_ranks(symbols);
        let sa = sa_is(&ranks, upper);
        let lcp = kasai(&ranks, &sa);
        let repeated = lcp_intervals(&lcp);
        let max_repeat = lcp.iter().copied().max().unwrap_or(0);
        SubstringIndex {
            n: symbols.len(),
            suffix_array: sa.into_iter().map(|i| i as u32).collect(),
            lcp: lcp.into_iter().map(|v| v as u32).collect(),
            repeated,
            max_repeat,
        }
    }

    /// Length of the indexed text.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn suffix_array(&self) -> &[u32] {
        &self.suffix_array
    }

    pub fn lcp(&self) -> &[u32] {
        &self.lcp
    }

    /// Longest block length occurring at two distinct positions; 0 if none.
    pub fn max_repeat_len(&self) -> usize {
        self.max_repeat
    }

    /// For `m` in `0..=m_cap`, the number of adjacent suffix pairs whose
    /// common prefix is at least `m` long (index 0 is unused and set to
    /// `n - 1`).
    pub fn adjacent_pairs_at_least(&self, m_cap: usize) -> Vec<u64> {
        let mut hist = vec![0u64; m_cap + 2];
        for &v in self.lcp.iter().skip(1) {
            hist[(v as usize).min(m_cap + 1)] += 1;
        }
        let mut out = vec![0u64; m_cap + 1];
        let mut running = hist[m_cap + 1];
        for m in (0..=m_cap).rev() {
            running += hist[m];
            out[m] = running;
        }
        out
    }

    /// Classes of substrings occurring at least twice.
    pub fn repeated_classes(&self) -> &[RepeatClass] {
        &self.repeated
    }

    /// All classes, repeated ones first, then one singleton class per suffix
    /// that has a unique tail.
    pub fn classes(&self) -> impl Iterator<Item = RepeatClass> + '_ {
        let n = self.n;
        let singles = (0..n).filter_map(move |i| {
            let suffix_len = (n - self.suffix_array[i] as usize) as u32;
            let left = self.lcp[i];
            let right = if i + 1 < n { self.lcp[i + 1] } else { 0 };
            let shared = left.max(right);
            (shared < suffix_len).then_some(RepeatClass {
                count: 1,
                shortest: shared + 1,
                longest: suffix_len,
            })
        });
        self.repeated.iter().copied().chain(singles)
    }
}

/// Maps symbols to ranks `0..=upper` preserving order.
fn dense_ranks(symbols: &[char]) -> (Vec<usize>, usize) {
    let mut alphabet: Vec<char> = symbols.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let ranks = symbols
        .iter()
        .map(|c| alphabet.binary_search(c).expect("symbol in alphabet"))
        .collect();
    (ranks, alphabet.len().saturating_sub(1))
}

/// Bottom-up traversal of LCP intervals. Each interval with LCP value `l`,
/// enclosing interval value `p < l` and width `c` yields a class of count `c`
/// for lengths `p+1..=l`.
fn lcp_intervals(lcp: &[usize]) -> Vec<RepeatClass> {
    let n = lcp.len();
    let mut out = Vec::new();
    // (lcp value, left boundary)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    for i in 1..=n {
        let cur = if i < n { lcp[i] } else { 0 };
        let mut lb = i - 1;
        while cur < stack.last().expect("root stays on stack").0 {
            let (value, left) = stack.pop().expect("nonempty");
            lb = left;
            let parent = cur.max(stack.last().expect("root stays on stack").0);
            out.push(RepeatClass {
                count: (i - left) as u32,
                shortest: (parent + 1) as u32,
                longest: value as u32,
            });
        }
        if cur > stack.last().expect("root stays on stack").0 {
            stack.push((cur, lb));
        }
    }
    out
}

/// Kasai et al. linear-time LCP construction.
fn kasai(s: &[usize], sa: &[usize]) -> Vec<usize> {
    let n = s.len();
    let mut rank = vec![0usize; n];
    for (i, &p) in sa.iter().enumerate() {
        rank[p] = i;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] == 0 {
            h = 0;
            continue;
        }
        let j = sa[rank[i] - 1];
        while i + h < n && j + h < n && s[i + h] == s[j + h] {
            h += 1;
        }
        lcp[rank[i]] = h;
        h = h.saturating_sub(1);
    }
    lcp
}

/// SA-IS suffix sorting for an integer alphabet `0..=upper`.
fn sa_is(s: &[usize], upper: usize) -> Vec<usize> {
    let n = s.len();
    match n {
        0 => return vec![],
        1 => return vec![0],
        2 => return if s[0] < s[1] { vec![0, 1] } else { vec![1, 0] },
        _ => {}
    }
    let mut sa = vec![EMPTY; n];
    let mut ls = vec![false; n];
    for i in (0..n - 1).rev() {
        ls[i] = if s[i] == s[i + 1] { ls[i + 1] } else { s[i] < s[i + 1] };
    }
    let mut sum_l = vec![0usize; upper + 2];
    let mut sum_s = vec![0usize; upper + 2];
    for i in 0..n {
        if !ls[i] {
            sum_s[s[i]] += 1;
        } else {
            sum_l[s[i] + 1] += 1;
        }
    }
    for i in 0..=upper {
        sum_s[i] += sum_l[i];
        if i < upper {
            sum_l[i + 1] += sum_s[i];
        }
    }

    let induce = |lms: &[usize], sa: &mut [usize]| {
        sa.fill(EMPTY);
        let mut buf = sum_s.clone();
        for &d in lms {
            if d == n {
                continue;
            }
            sa[buf[s[d]]] = d;
            buf[s[d]] += 1;
        }
        buf.copy_from_slice(&sum_l);
        sa[buf[s[n - 1]]] = n - 1;
        buf[s[n - 1]] += 1;
        for i in 0..n {
            let v = sa[i];
            if v != EMPTY && v >= 1 && !ls[v - 1] {
                sa[buf[s[v - 1]]] = v - 1;
                buf[s[v - 1]] += 1;
            }
        }
        buf.copy_from_slice(&sum_l);
        for i in (0..n).rev() {
            let v = sa[i];
            if v != EMPTY && v >= 1 && ls[v - 1] {
                buf[s[v - 1] + 1] -= 1;
                sa[buf[s[v - 1] + 1]] = v - 1;
            }
        }
    };

    let mut lms_map = vec![EMPTY; n + 1];
    let mut lms = Vec::new();
    for i in 1..n {
        if !ls[i - 1] && ls[i] {
            lms_map[i] = lms.len();
            lms.push(i);
        }
    }
    let m = lms.len();
    induce(&lms, &mut sa);

    if m > 0 {
        let mut sorted_lms: Vec<usize> = sa.iter().copied().filter(|&v| lms_map[v] != EMPTY).collect();
        let mut rec_s = vec![0usize; m];
        let mut rec_upper = 0usize;
        rec_s[lms_map[sorted_lms[0]]] = 0;
        for i in 1..m {
            let mut l = sorted_lms[i - 1];
            let mut r = sorted_lms[i];
            let end_l = if lms_map[l] + 1 < m { lms[lms_map[l] + 1] } else { n };
            let end_r = if lms_map[r] + 1 < m { lms[lms_map[r] + 1] } else { n };
            let mut same = true;
            if end_l - l != end_r - r {
                same = false;
            } else {
                while l < end_l {
                    if s[l] != s[r] {
                        break;
                    }
                    l += 1;
                    r += 1;
                }
                if l == n || s[l] != s[r] {
                    same = false;
                }
            }
            if !same {
                rec_upper += 1;
            }
            rec_s[lms_map[sorted_lms[i]]] = rec_upper;
        }
        let rec_sa = sa_is(&rec_s, rec_upper);
        for (slot, &r) in sorted_lms.iter_mut().zip(rec_sa.iter()) {
            *slot = lms[r];
        }
        induce(&sorted_lms, &mut sa);
    }
    sa
}

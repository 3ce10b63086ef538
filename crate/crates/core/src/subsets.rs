//! Binomial coefficients and canonical k-subset enumeration.
//!
//! All subset-indexed structures in the coded caching scheme (sub-packet
//! groups, codeword subsets) use the colexicographic order produced here,
//! so ranks are stable across runs and across the library/CLI boundary.

/// Binomial coefficient C(n, k); zero when k > n. Panics on u64
/// overflow; use [`binomial_checked`] to probe sizes first.
pub fn binomial(n: usize, k: usize) -> u64 {
    binomial_checked(n, k).expect("binomial overflows u64")
}

/// C(n, k), or None when the value does not fit in a u64.
pub fn binomial_checked(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// All k-subsets of `{0, .., n-1}` in colexicographic order (sorted by the
/// largest differing element). Each subset is returned sorted ascending.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // successor: bump the lowest element with headroom, reset those below
        let mut i = 0;
        loop {
            let limit = if i + 1 < k { cur[i + 1] } else { n };
            if cur[i] + 1 < limit {
                cur[i] += 1;
                for (j, slot) in cur.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                break;
            }
            i += 1;
            if i == k {
                return out;
            }
        }
    }
}

/// Rank of a sorted subset in the colexicographic enumeration above:
/// sum of C(s_i, i + 1).
pub fn colex_rank(subset: &[usize]) -> u64 {
    subset
        .iter()
        .enumerate()
        .map(|(i, &s)| binomial(s, i + 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pascal-triangle recursion, used as an independent oracle.
    fn binomial_pascal(n: usize, k: usize) -> u64 {
        if k > n {
            return 0;
        }
        let mut row = vec![0u64; k + 1];
        row[0] = 1;
        for _ in 0..n {
            for j in (1..=k).rev() {
                row[j] += row[j - 1];
            }
        }
        row[k]
    }

    #[test]
    fn binomial_matches_pascal_recursion() {
        for n in 0..=20 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial_pascal(n, k), "C({n},{k})");
            }
        }
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn colex_order_for_pairs_of_four() {
        let expected = vec![
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
            vec![0, 3],
            vec![1, 3],
            vec![2, 3],
        ];
        assert_eq!(k_subsets(4, 2), expected);
    }

    #[test]
    fn enumeration_count_and_rank_agree() {
        for n in 1..=8 {
            for k in 1..=n {
                let subs = k_subsets(n, k);
                assert_eq!(subs.len() as u64, binomial(n, k));
                for (idx, s) in subs.iter().enumerate() {
                    assert_eq!(colex_rank(s), idx as u64, "rank of {s:?}");
                }
            }
        }
    }

    #[test]
    fn checked_binomial_reports_overflow() {
        assert_eq!(binomial_checked(100, 50), None);
        assert_eq!(binomial_checked(60, 30), Some(118_264_581_564_861_424));
        assert_eq!(binomial_checked(5, 9), Some(0));
    }

    #[test]
    fn edge_subsets() {
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(k_subsets(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(k_subsets(1, 1), vec![vec![0]]);
    }
}

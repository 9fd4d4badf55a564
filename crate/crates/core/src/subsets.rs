//! Enumeration of index subsets in lexicographic order.

use crate::error::{Error, Result};

/// Default limit on the number of k-subsets any enumerating path will visit.
pub const DEFAULT_CAP: u128 = 20_000;

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn check_cap(n: usize, k: usize, cap: u128) -> Result<()> {
    let count = binomial(n, k);
    if count > cap {
        return Err(Error::CapExceeded { n, k, count, cap });
    }
    Ok(())
}

/// All k-subsets of `0..n` in lexicographic order (0-based, sorted).
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All non-empty subsets of `0..n` with at most `k` elements, in
/// lexicographic order of their sorted index sequences ({0} < {0,1} < {0,1,2}
/// < {0,2} < {1} ...).
pub fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn walk(start: usize, n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..n {
            prefix.push(i);
            out.push(prefix.clone());
            if prefix.len() < k {
                walk(i + 1, n, k, prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        walk(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

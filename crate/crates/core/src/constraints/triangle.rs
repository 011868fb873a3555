//! Row-by-row counting over the triangular arrangement of a two-generator
//! semigroup.
//!
//! With `S = <p, q>` every element is `p^a q^b`, a cell `(a, b)` of the grid.
//! The positions of one stream up to `N` form the truncated sector
//! `{ p^a q^b <= N }`, whose row `b` is a contiguous run `a = 0..len_b`.
//! A rule instance `s * (n_1, ..., n_r)` occupies a fixed pattern of cells,
//! e.g. the corner `(a, b), (a + 1, b), (a, b + 1)` for scales `(1, p, q)`.
//! Rows are generated one at a time as bit vectors; configurations are kept
//! only while every instance completed by the new row is allowed, and
//! configurations that agree on the rows still visible to future instances
//! are merged.

use std::collections::HashMap;

use num_bigint::BigUint;

use super::{ExtensionMode, Mask, OmegaSpec};
use crate::error::{Error, Result};

struct Instance {
    rule: usize,
    /// `(column, row)` per slot, in scale order.
    cells: Vec<(u32, u32)>,
}

fn exponents(mut n: u64, p: u64, q: u64) -> (u32, u32) {
    let mut a = 0;
    let mut b = 0;
    while n.is_multiple_of(p) {
        n /= p;
        a += 1;
    }
    while n.is_multiple_of(q) {
        n /= q;
        b += 1;
    }
    debug_assert_eq!(n, 1);
    (a, b)
}

fn row_lengths(p: u64, q: u64, bound: u64) -> Vec<u32> {
    let mut rows = Vec::new();
    let mut head = 1u64;
    while head <= bound {
        let mut len = 0;
        let mut v = head;
        loop {
            len += 1;
            match v.checked_mul(p) {
                Some(next) if next <= bound => v = next,
                _ => break,
            }
        }
        rows.push(len);
        match head.checked_mul(q) {
            Some(h) => head = h,
            None => break,
        }
    }
    rows
}

/// `A_1..A_depth` via the triangle arrangement.
///
/// Requires a two-prime basis, a binary alphabet and a spec in
/// [`ExtensionMode::Local`]; agrees exactly with
/// [`count_prefixes`](super::count_prefixes).
pub fn count_prefixes_triangle(spec: &OmegaSpec, depth: usize) -> Result<Vec<BigUint>> {
    let primes = spec.basis().primes();
    if primes.len() != 2 {
        return Err(Error::UnsupportedMethod(format!(
            "triangle counting needs a two-prime basis, got {} primes",
            primes.len()
        )));
    }
    if spec.alphabet() != 2 {
        return Err(Error::UnsupportedMethod("triangle counting needs a binary alphabet".into()));
    }
    if spec.mode() != ExtensionMode::Local {
        return Err(Error::UnsupportedMethod("triangle counting needs a locally extendable family".into()));
    }
    if depth > spec.depth() {
        return Err(Error::DepthOutOfRange { requested: depth, available: spec.depth() });
    }
    let (p, q) = (primes[0], primes[1]);
    let table = spec.table();
    (1..=depth).map(|k| count_sector(spec, p, q, table.ell(k)?)).collect()
}

fn count_sector(spec: &OmegaSpec, p: u64, q: u64, bound: u64) -> Result<BigUint> {
    let rows = row_lengths(p, q, bound);
    if rows.iter().any(|&l| l > 63) {
        return Err(Error::UnsupportedMethod("triangle row longer than 63 cells".into()));
    }

    // Instances grouped by the row that completes them.
    let mut span = 0u32;
    let mut by_row: Vec<Vec<Instance>> = (0..rows.len()).map(|_| Vec::new()).collect();
    for (rule_idx, rule) in spec.family().rules().iter().enumerate() {
        let shape: Vec<(u32, u32)> = rule.scales().iter().map(|&n| exponents(n, p, q)).collect();
        let lo = shape.iter().map(|c| c.1).min().unwrap();
        let hi = shape.iter().map(|c| c.1).max().unwrap();
        span = span.max(hi - lo);
        let last = *rule.scales().last().unwrap();
        for &s in spec.table().elements() {
            if s.checked_mul(last).is_none_or(|top| top > bound) {
                break;
            }
            let (a0, b0) = exponents(s, p, q);
            let cells: Vec<(u32, u32)> = shape.iter().map(|&(a, b)| (a0 + a, b0 + b)).collect();
            by_row[(b0 + hi) as usize].push(Instance { rule: rule_idx, cells });
        }
    }

    let masks = &spec.masks;
    let window = span as usize;
    // state: the last `window` rows, oldest first
    let mut states: HashMap<Vec<u64>, u128> = HashMap::new();
    states.insert(vec![0; window], 1);
    let mut digits = Vec::with_capacity(8);
    for (r, &len) in rows.iter().enumerate() {
        let mut next: HashMap<Vec<u64>, u128> = HashMap::with_capacity(states.len());
        for (state, &count) in &states {
            for config in 0u64..(1u64 << len) {
                let ok = by_row[r].iter().all(|inst| {
                    digits.clear();
                    for &(a, b) in &inst.cells {
                        let row_bits = if b as usize == r { config } else { state[window - (r - b as usize)] };
                        digits.push((row_bits >> a & 1) as u8);
                    }
                    accepts(&masks[inst.rule], &digits)
                });
                if !ok {
                    continue;
                }
                let mut key = Vec::with_capacity(window);
                if window > 0 {
                    key.extend_from_slice(&state[1..]);
                    key.push(config);
                }
                *next.entry(key).or_insert(0) += count;
            }
        }
        states = next;
    }
    Ok(BigUint::from(states.values().sum::<u128>()))
}

fn accepts(mask: &Mask, digits: &[u8]) -> bool {
    match mask {
        Mask::ProductZero { .. } => digits.contains(&0),
        Mask::Table { partial } => {
            let code = digits.iter().fold(0usize, |c, &d| c * 2 + d as usize);
            partial[digits.len() - 1][code]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_rows_for_27() {
        // 1 2 4 8 16 / 3 6 12 24 / 9 18 / 27
        assert_eq!(row_lengths(2, 3, 27), vec![5, 4, 2, 1]);
    }

    #[test]
    fn exponent_split() {
        assert_eq!(exponents(72, 2, 3), (3, 2));
        assert_eq!(exponents(1, 2, 3), (0, 0));
    }
}

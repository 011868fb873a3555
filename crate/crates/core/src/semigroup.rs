//! The multiplicative semigroup `S = <p_1, ..., p_J>` and the arithmetic
//! quantities built on it.
//!
//! Elements are enumerated in increasing order `1 = l_1 < l_2 < ...` by a
//! J-way merge of the streams `p_j * l_i`, the same scheme used for Hamming
//! numbers. Every value is kept below `2^63`.

use std::collections::HashMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Largest element value a table may hold.
pub const VALUE_CAP: u64 = i64::MAX as u64;

/// Slack allowed when a tail of the inverse series rounds slightly negative.
const TAIL_SLACK: f64 = 1e-12;

/// Ascending list of distinct primes generating the semigroup.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct PrimeBasis {
    primes: Vec<u64>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeBasis {
    pub fn new(primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidBasis);
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::NotPrime(p));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBasis);
        }
        Ok(Self { primes })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// `gamma(S) = sum_k 1/l_k = prod_j p_j / (p_j - 1)`, reduced as a
    /// rational before the single conversion to `f64`.
    pub fn gamma(&self) -> f64 {
        let (num, den) = self.gamma_ratio();
        num as f64 / den as f64
    }

    /// `gamma(S)` as a reduced fraction `(numerator, denominator)`.
    pub fn gamma_ratio(&self) -> (u128, u128) {
        let mut num: u128 = 1;
        let mut den: u128 = 1;
        for &p in &self.primes {
            num *= p as u128;
            den *= (p - 1) as u128;
            let g = num.gcd(&den);
            num /= g;
            den /= g;
        }
        (num, den)
    }

    /// True iff no basis prime divides `i`, written `(i, S) = 1`.
    pub fn is_coprime(&self, i: u64) -> bool {
        self.primes.iter().all(|&p| !i.is_multiple_of(p))
    }

    /// True iff `n` factors entirely over the basis.
    pub fn is_smooth(&self, mut n: u64) -> bool {
        if n == 0 {
            return false;
        }
        for &p in &self.primes {
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        n == 1
    }

    /// `beta_n = |{ i <= n : (i, S) = 1 }|`, by inclusion-exclusion over
    /// subsets of the basis.
    pub fn beta(&self, n: u64) -> u64 {
        let j = self.primes.len();
        let mut total: i128 = 0;
        for mask in 0u64..(1u64 << j) {
            let mut prod: u64 = 1;
            let mut overflow = false;
            for (bit, &p) in self.primes.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    match prod.checked_mul(p) {
                        Some(v) if v <= n => prod = v,
                        _ => {
                            overflow = true;
                            break;
                        }
                    }
                }
            }
            if overflow {
                continue;
            }
            let term = (n / prod) as i128;
            if mask.count_ones() % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total as u64
    }
}

impl TryFrom<Vec<u64>> for PrimeBasis {
    type Error = Error;

    fn try_from(primes: Vec<u64>) -> Result<Self> {
        PrimeBasis::new(primes)
    }
}

impl From<PrimeBasis> for Vec<u64> {
    fn from(b: PrimeBasis) -> Self {
        b.primes
    }
}

/// Sorted elements of `S`, complete up to a known value bound.
#[derive(Debug, Clone)]
pub struct SemigroupTable {
    basis: PrimeBasis,
    elements: Vec<u64>,
    /// Every element of `S` that is `<= complete_to` is in `elements`.
    complete_to: u64,
    index: HashMap<u64, usize>,
}

/// Merge-generate elements until `stop` says so.
fn generate(basis: &PrimeBasis, mut stop: impl FnMut(usize, u64) -> bool) -> Vec<u64> {
    let primes = basis.primes();
    let mut elements = vec![1u64];
    let mut heads = vec![0usize; primes.len()];
    let mut candidates: Vec<Option<u64>> = primes.iter().map(|&p| Some(p)).collect();
    loop {
        let next = candidates.iter().flatten().copied().min();
        let Some(next) = next else { break };
        if next > VALUE_CAP || stop(elements.len(), next) {
            break;
        }
        elements.push(next);
        for (j, &p) in primes.iter().enumerate() {
            if candidates[j] == Some(next) {
                heads[j] += 1;
                candidates[j] = elements[heads[j]].checked_mul(p);
            }
        }
    }
    elements
}

impl SemigroupTable {
    /// All basis-smooth integers in `[1, value_bound]`, ascending.
    pub fn build(basis: &PrimeBasis, value_bound: u64) -> Result<Self> {
        if value_bound == 0 {
            return Err(Error::Invalid("value bound must be at least 1".into()));
        }
        if value_bound > VALUE_CAP {
            return Err(Error::BoundOverflow { bound: value_bound });
        }
        let elements = generate(basis, |_, next| next > value_bound);
        Ok(Self::from_parts(basis.clone(), elements, value_bound))
    }

    /// The first `count` elements of `S`.
    pub fn with_count(basis: &PrimeBasis, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Invalid("element count must be at least 1".into()));
        }
        let elements = generate(basis, |len, _| len >= count);
        if elements.len() < count {
            return Err(Error::BoundOverflow { bound: VALUE_CAP });
        }
        let last = *elements.last().unwrap();
        Ok(Self::from_parts(basis.clone(), elements, last))
    }

    fn from_parts(basis: PrimeBasis, elements: Vec<u64>, complete_to: u64) -> Self {
        let index = elements.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
        Self { basis, elements, complete_to, index }
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn complete_to(&self) -> u64 {
        self.complete_to
    }

    /// `l_k` for 1-based `k`.
    pub fn ell(&self, k: usize) -> Result<u64> {
        if k == 0 || k > self.elements.len() {
            return Err(Error::TableTooShort { needed: k as u64, available: self.elements.len() as u64 });
        }
        Ok(self.elements[k - 1])
    }

    /// 1-based rank of `value` if it is an element.
    pub fn rank(&self, value: u64) -> Option<usize> {
        self.index.get(&value).copied()
    }

    /// `K(n)`: the unique rank with `l_K <= n < l_{K+1}`.
    pub fn k_of(&self, n: u64) -> Result<usize> {
        if n == 0 {
            return Err(Error::Invalid("K(n) needs n >= 1".into()));
        }
        if n > self.complete_to {
            return Err(Error::TableTooShort { needed: n, available: self.complete_to });
        }
        Ok(self.elements.partition_point(|&v| v <= n))
    }

    /// `B_k^(n)`: integers `i` in `(n / l_{k+1}, n / l_k]` coprime to `S`.
    pub fn block_b(&self, k: usize, n: u64) -> Result<Vec<u64>> {
        let hi = n / self.ell(k)?;
        let lo = n / self.ell(k + 1)?;
        Ok((lo + 1..=hi).filter(|&i| self.basis.is_coprime(i)).collect())
    }

    /// Partial sum `sum_{k <= r} 1/l_k`, compensated.
    pub fn inverse_partial_sum(&self, r: usize) -> Result<f64> {
        if r > self.elements.len() {
            return Err(Error::TableTooShort { needed: r as u64, available: self.elements.len() as u64 });
        }
        let acc: CompensatedSum = self.elements[..r].iter().map(|&v| 1.0 / v as f64).collect();
        Ok(acc.value())
    }

    /// `T_r = sum_{i > r} 1/l_i = gamma(S) - sum_{i <= r} 1/l_i`.
    ///
    /// The tail is obtained from the closed form of `gamma(S)`, so it carries
    /// no truncation error.
    pub fn tail_inverse_sum(&self, r: usize) -> Result<f64> {
        let (num, den) = self.basis.gamma_ratio();
        let mut acc = CompensatedSum::new();
        acc.add(num as f64 / den as f64);
        for &v in &self.elements[..r.min(self.elements.len())] {
            acc.add(-1.0 / v as f64);
        }
        if r > self.elements.len() {
            return Err(Error::TableTooShort { needed: r as u64, available: self.elements.len() as u64 });
        }
        let t = acc.value();
        if t < -TAIL_SLACK {
            return Err(Error::Inconsistent(format!("negative inverse tail {t} at r = {r}")));
        }
        Ok(t.max(0.0))
    }
}

//! Binary digit functions `F(x, y, z)` constraining `(x_l, x_{pl}, x_{ql})`.
//!
//! Only the zero set of `F` matters. `F` is deterministic of type
//! (i), (ii) or (iii) when the equation `F = 0` has exactly one solution
//! for the last, middle or first digit respectively, whatever the other two.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::constraints::{Allowed, ConstraintFamily, Rule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeterminismType {
    /// `z` is determined by `(x, y)`.
    I,
    /// `y` is determined by `(x, z)`.
    Ii,
    /// `x` is determined by `(y, z)`.
    Iii,
}

impl fmt::Display for DeterminismType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeterminismType::I => "i",
            DeterminismType::Ii => "ii",
            DeterminismType::Iii => "iii",
        })
    }
}

/// Zero set of `F`, indexed by `4x + 2y + z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TernaryDigitFunction {
    zero_table: [bool; 8],
}

impl TernaryDigitFunction {
    pub fn from_zero_table(zero_table: [bool; 8]) -> Self {
        Self { zero_table }
    }

    pub fn from_fn(is_zero: impl Fn(u8, u8, u8) -> bool) -> Self {
        let mut zero_table = [false; 8];
        for (c, slot) in zero_table.iter_mut().enumerate() {
            *slot = is_zero((c >> 2 & 1) as u8, (c >> 1 & 1) as u8, (c & 1) as u8);
        }
        Self { zero_table }
    }

    /// Eight `0`/`1` characters for `(x, y, z) = 000, 001, ..., 111`;
    /// `1` marks a zero of `F`, i.e. an allowed triple.
    pub fn from_truth_table(text: &str) -> Result<Self> {
        let bits: Vec<char> = text.trim().chars().collect();
        if bits.len() != 8 || bits.iter().any(|c| !matches!(c, '0' | '1')) {
            return Err(Error::Invalid(format!("truth table must be 8 characters of 0/1, got {text:?}")));
        }
        let mut zero_table = [false; 8];
        for (slot, c) in zero_table.iter_mut().zip(bits) {
            *slot = c == '1';
        }
        Ok(Self { zero_table })
    }

    pub fn truth_table(&self) -> String {
        self.zero_table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// `(2x-1)(2y-1)(2z-1) - 1`: an odd number of ones.
    pub fn ledrappier() -> Self {
        Self::from_fn(|x, y, z| (x + y + z) % 2 == 1)
    }

    /// `(x-y)^2 + (x-z)^2`.
    pub fn all_equal() -> Self {
        Self::from_fn(|x, y, z| x == y && y == z)
    }

    /// `x y z`.
    pub fn product() -> Self {
        Self::from_fn(|x, y, z| x * y * z == 0)
    }

    /// `(y - xz)^2`.
    pub fn y_eq_xz() -> Self {
        Self::from_fn(|x, y, z| y == x * z)
    }

    /// `(x - yz)^2`.
    pub fn x_eq_yz() -> Self {
        Self::from_fn(|x, y, z| x == y * z)
    }

    pub fn is_zero(&self, x: u8, y: u8, z: u8) -> bool {
        self.zero_table[(4 * x + 2 * y + z) as usize]
    }

    /// Allowed triples in lexicographic order.
    pub fn zero_set(&self) -> Vec<Vec<u8>> {
        (0..8u8).filter(|&c| self.zero_table[c as usize]).map(|c| vec![c >> 2 & 1, c >> 1 & 1, c & 1]).collect()
    }

    /// Swap the digits 0 and 1 in every slot.
    pub fn relabeled(&self) -> Self {
        Self::from_fn(|x, y, z| self.is_zero(1 - x, 1 - y, 1 - z))
    }
}

/// The determinism types `F` satisfies; empty if it is not deterministic.
pub fn classify(f: &TernaryDigitFunction) -> BTreeSet<DeterminismType> {
    let unique = |place: fn(u8, u8, u8) -> (u8, u8, u8)| {
        (0..2).all(|i| {
            (0..2).all(|j| {
                (0..2)
                    .filter(|&k| {
                        let (x, y, z) = place(i, j, k);
                        f.is_zero(x, y, z)
                    })
                    .count()
                    == 1
            })
        })
    };
    let mut out = BTreeSet::new();
    if unique(|i, j, k| (i, j, k)) {
        out.insert(DeterminismType::I);
    }
    if unique(|i, j, k| (i, k, j)) {
        out.insert(DeterminismType::Ii);
    }
    if unique(|i, j, k| (k, i, j)) {
        out.insert(DeterminismType::Iii);
    }
    out
}

pub fn is_deterministic(f: &TernaryDigitFunction) -> bool {
    !classify(f).is_empty()
}

fn check_pair(p: u64, q: u64) -> Result<()> {
    if p < 2 || p >= q {
        return Err(Error::Invalid(format!("need 2 <= p < q, got p = {p}, q = {q}")));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    Ok(())
}

/// `(q - 1) / q`, the common dimension for deterministic `F`.
pub fn rigidity_dimension(p: u64, q: u64) -> Result<f64> {
    check_pair(p, q)?;
    Ok((q - 1) as f64 / q as f64)
}

/// `1 - (p + q - 1) / (pq)`, the Minkowski dimension for the all-equal `F`.
pub fn all_equal_dimension(p: u64, q: u64) -> Result<f64> {
    check_pair(p, q)?;
    Ok(1.0 - (p + q - 1) as f64 / (p * q) as f64)
}

/// The single rule `F(x_l, x_{pl}, x_{ql}) = 0` over a binary alphabet.
pub fn omega_from_f(p: u64, q: u64, f: &TernaryDigitFunction) -> Result<ConstraintFamily> {
    check_pair(p, q)?;
    let tuples = f.zero_set();
    if tuples.is_empty() {
        return Err(Error::EmptyAllowedSet { rule: 0 });
    }
    ConstraintFamily::new(2, vec![Rule::new(vec![1, p, q], Allowed::Tuples(tuples))?])
}

//! Two-sided Minkowski dimension bounds from a prefix census.
//!
//! With `a_k = log_m A_k` the dimension is `gamma^{-1} sum a_k (1/l_k - 1/l_{k+1})`,
//! or after summation by parts `gamma^{-1} (a_1 + sum_{j>=2} log_m(A_j/A_{j-1}) / l_j)`.
//! The truncated first form is a lower bound; its tail is bounded by
//! `a_k <= k`. The second form is used when bounds on the growth ratio
//! `A_{k+1}/A_k` are supplied; those are validated against the census, never
//! assumed.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::constraints::LevelProfile;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::semigroup::SemigroupTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionInterval {
    pub lower: f64,
    pub upper: f64,
    /// Series terms (Minkowski) or tree depth (Hausdorff) used.
    pub terms_used: usize,
    pub tail_ratio_bounds: Option<(f64, f64)>,
    /// False if `lower` rests on over-approximated counts.
    #[serde(default = "certified_default")]
    pub certified: bool,
}

fn certified_default() -> bool {
    true
}

impl DimensionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check_r(profile: &LevelProfile, table: &SemigroupTable, r: usize) -> Result<()> {
    if r + 1 > profile.depth() {
        return Err(Error::DepthOutOfRange { requested: r + 1, available: profile.depth() });
    }
    if r + 1 > table.len() {
        return Err(Error::TableTooShort { needed: r as u64 + 1, available: table.len() as u64 });
    }
    Ok(())
}

fn gamma_of(table: &SemigroupTable) -> f64 {
    table.basis().gamma()
}

/// `sum_{k<=r} a_k (1/l_k - 1/l_{k+1})`, not yet divided by gamma.
fn first_form(profile: &LevelProfile, table: &SemigroupTable, r: usize) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    for k in 1..=r {
        let w = 1.0 / table.ell(k)? as f64 - 1.0 / table.ell(k + 1)? as f64;
        sum.add(profile.log_count(k)? * w);
    }
    Ok(sum.value())
}

/// `a_1 + sum_{j=2}^{r+1} log_m(A_j/A_{j-1}) / l_j`, not yet divided by gamma.
fn ratio_form(profile: &LevelProfile, table: &SemigroupTable, r: usize) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    sum.add(profile.log_count(1)?);
    for j in 2..=r + 1 {
        let step = profile.log_count(j)? - profile.log_count(j - 1)?;
        sum.add(step / table.ell(j)? as f64);
    }
    Ok(sum.value())
}

/// `gamma^{-1} sum_{k=1}^r log_m(A_k) (1/l_k - 1/l_{k+1})`.
pub fn minkowski_lower(profile: &LevelProfile, table: &SemigroupTable, r: usize) -> Result<f64> {
    check_r(profile, table, r)?;
    Ok(first_form(profile, table, r)? / gamma_of(table))
}

/// Upper bound from the first `r` terms.
///
/// Without `ratio_hi` the tail uses `log_m A_k <= k`. With it, terms beyond
/// `A_{r+1}` are bounded by `log_m(ratio_hi) / l_j`; `ratio_hi` must lie in
/// `(1, m]` and dominate every ratio `A_{k+1}/A_k` in the profile.
pub fn minkowski_upper(profile: &LevelProfile, table: &SemigroupTable, r: usize, ratio_hi: Option<f64>) -> Result<f64> {
    check_r(profile, table, r)?;
    let gamma = gamma_of(table);
    let m = profile.alphabet() as f64;
    match ratio_hi {
        None => {
            let tail = r as f64 / table.ell(r + 1)? as f64 + table.tail_inverse_sum(r)?;
            Ok((first_form(profile, table, r)? + tail) / gamma)
        }
        Some(hi) => {
            validate_hi(profile, hi)?;
            let tail = hi.ln() / m.ln() * table.tail_inverse_sum(r + 1)?;
            Ok((ratio_form(profile, table, r)? + tail) / gamma)
        }
    }
}

/// Both bounds. Passing either ratio bound switches on the ratio form, with
/// the missing side filled by its trivial value (`1` below, `m` above); the
/// tighter of the two forms is reported on each side.
pub fn minkowski_bounds(
    profile: &LevelProfile,
    table: &SemigroupTable,
    r: usize,
    ratio_lo: Option<f64>,
    ratio_hi: Option<f64>,
) -> Result<DimensionInterval> {
    check_r(profile, table, r)?;
    let gamma = gamma_of(table);
    let m = profile.alphabet() as f64;
    let mut lower = minkowski_lower(profile, table, r)?;
    let mut upper = minkowski_upper(profile, table, r, None)?;
    let mut ratios = None;
    if ratio_lo.is_some() || ratio_hi.is_some() {
        let lo = ratio_lo.unwrap_or(1.0);
        let hi = ratio_hi.unwrap_or(m);
        validate_lo(profile, lo)?;
        if lo > hi {
            return Err(Error::RatioBound(format!("lower ratio {lo} exceeds upper ratio {hi}")));
        }
        let tail = table.tail_inverse_sum(r + 1)?;
        let base = ratio_form(profile, table, r)?;
        lower = lower.max((base + lo.ln() / m.ln() * tail) / gamma);
        upper = upper.min(minkowski_upper(profile, table, r, Some(hi))?);
        ratios = Some((lo, hi));
    }
    let lower = lower.clamp(0.0, 1.0);
    let upper = upper.clamp(lower, 1.0);
    Ok(DimensionInterval { lower, upper, terms_used: r, tail_ratio_bounds: ratios, certified: profile.is_exact() })
}

fn exact(x: f64, what: &str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::RatioBound(format!("{what} ratio {x} is not finite")))
}

fn observed_ratios(profile: &LevelProfile) -> impl Iterator<Item = (usize, BigRational)> + '_ {
    profile
        .counts()
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, BigRational::new(BigInt::from(w[1].clone()), BigInt::from(w[0].clone()))))
}

fn validate_hi(profile: &LevelProfile, hi: f64) -> Result<()> {
    let m = profile.alphabet() as f64;
    if !(hi > 1.0 && hi <= m) {
        return Err(Error::RatioBound(format!("upper ratio {hi} must lie in (1, {m}]")));
    }
    let h = exact(hi, "upper")?;
    if let Some((k, ratio)) = observed_ratios(profile).find(|(_, r)| r > &h) {
        return Err(Error::RatioBound(format!("upper ratio {hi} is below A_{}/A_{k} = {ratio}", k + 1)));
    }
    Ok(())
}

fn validate_lo(profile: &LevelProfile, lo: f64) -> Result<()> {
    if lo.is_nan() || lo < 1.0 {
        return Err(Error::RatioBound(format!("lower ratio {lo} must be at least 1")));
    }
    let l = exact(lo, "lower")?;
    if let Some((k, ratio)) = observed_ratios(profile).find(|(_, r)| r < &l) {
        return Err(Error::RatioBound(format!("lower ratio {lo} exceeds A_{}/A_{k} = {ratio}", k + 1)));
    }
    Ok(())
}

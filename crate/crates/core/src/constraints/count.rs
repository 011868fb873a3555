use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::OmegaSpec;
use crate::error::{Error, Result};

/// Levels above which subtrees are handed to separate workers.
pub const DEFAULT_SPLIT_DEPTH: usize = 8;

/// Per-level census of the prefix tree `Pref(Omega)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelProfile {
    alphabet: u8,
    /// `counts[k - 1] = A_k`.
    counts: Vec<BigUint>,
    /// `child_histograms[k]`: child count -> number of parents of length `k`.
    child_histograms: Vec<BTreeMap<usize, u64>>,
    symmetric_through: usize,
    exact: bool,
}

impl LevelProfile {
    /// A profile from externally supplied counts; histograms may be empty.
    pub fn from_counts(alphabet: u8, counts: Vec<BigUint>, child_histograms: Vec<BTreeMap<usize, u64>>) -> Self {
        let symmetric_through = child_histograms.iter().position(|h| h.len() > 1).unwrap_or(child_histograms.len());
        Self { alphabet, counts, child_histograms, symmetric_through, exact: true }
    }

    pub fn with_exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    /// False when the counts come from a lookahead spec: they are then upper
    /// estimates of `A_k`, and only upper dimension bounds remain rigorous.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `A_k` for 1-based `k`.
    pub fn count(&self, k: usize) -> Result<&BigUint> {
        if k == 0 || k > self.counts.len() {
            return Err(Error::DepthOutOfRange { requested: k, available: self.counts.len() });
        }
        Ok(&self.counts[k - 1])
    }

    /// `log_m A_k`.
    pub fn log_count(&self, k: usize) -> Result<f64> {
        let a = self.count(k)?.to_f64().unwrap_or(f64::INFINITY);
        Ok(a.ln() / (self.alphabet as f64).ln())
    }

    pub fn child_histograms(&self) -> &[BTreeMap<usize, u64>] {
        &self.child_histograms
    }

    /// Largest level through which every vertex of a level has the same
    /// number of children.
    pub fn symmetric_through(&self) -> usize {
        self.symmetric_through
    }
}

#[derive(Debug, Clone)]
struct Census {
    counts: Vec<u64>,
    hist: Vec<Vec<u64>>,
}

impl Census {
    fn new(depth: usize, m: u8) -> Self {
        Self { counts: vec![0; depth + 1], hist: vec![vec![0; m as usize + 1]; depth] }
    }

    fn merge(mut self, other: Census) -> Census {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (ha, hb) in self.hist.iter_mut().zip(other.hist) {
            for (a, b) in ha.iter_mut().zip(hb) {
                *a += b;
            }
        }
        self
    }
}

fn walk(spec: &OmegaSpec, prefix: &mut Vec<u8>, target: usize, split: usize, census: &mut Census) {
    let k = prefix.len();
    census.counts[k] += 1;
    if k == target {
        return;
    }
    let mask = spec.child_mask(prefix);
    census.hist[k][mask.count_ones() as usize] += 1;
    if k < split {
        let digits = super::digits_of(mask);
        let m = spec.alphabet();
        let sub = digits
            .par_iter()
            .map(|&d| {
                let mut p = prefix.clone();
                p.push(d);
                let mut c = Census::new(target, m);
                walk(spec, &mut p, target, split, &mut c);
                c
            })
            .reduce(|| Census::new(target, m), Census::merge);
        *census = std::mem::replace(census, Census::new(0, m)).merge(sub);
    } else {
        let mut rest = mask;
        while rest != 0 {
            let d = rest.trailing_zeros() as u8;
            rest &= rest - 1;
            prefix.push(d);
            walk(spec, prefix, target, split, census);
            prefix.pop();
        }
    }
}

/// `A_1..A_depth` by depth-first traversal; nothing is materialized.
/// Exact in local mode, an upper estimate in lookahead mode.
pub fn count_prefixes(spec: &OmegaSpec, depth: usize) -> Result<LevelProfile> {
    count_prefixes_with_split(spec, depth, DEFAULT_SPLIT_DEPTH)
}

/// As [`count_prefixes`], with subtrees below `split` levels counted by
/// independent workers.
pub fn count_prefixes_with_split(spec: &OmegaSpec, depth: usize, split: usize) -> Result<LevelProfile> {
    if depth > spec.depth() {
        return Err(Error::DepthOutOfRange { requested: depth, available: spec.depth() });
    }
    let m = spec.alphabet();
    let mut census = Census::new(depth, m);
    walk(spec, &mut Vec::with_capacity(depth), depth, split.min(depth), &mut census);
    let counts = census.counts[1..].iter().map(|&c| BigUint::from(c)).collect();
    let histograms = census
        .hist
        .iter()
        .map(|h| h.iter().enumerate().filter(|(_, &n)| n > 0).map(|(c, &n)| (c, n)).collect())
        .collect();
    Ok(LevelProfile::from_counts(m, counts, histograms).with_exact(spec.mode() == super::ExtensionMode::Local))
}

/// Outcome of the spherical-symmetry scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry {
    pub symmetric: bool,
    /// First parent level `k` whose vertices have unequal child counts, so
    /// the asymmetry shows between levels `k` and `k + 1`.
    pub first_asymmetric: Option<usize>,
}

pub fn is_spherically_symmetric(spec: &OmegaSpec, depth: usize) -> Result<Symmetry> {
    let profile = count_prefixes(spec, depth)?;
    Ok(symmetry_of(&profile))
}

pub(crate) fn symmetry_of(profile: &LevelProfile) -> Symmetry {
    let first = profile.child_histograms.iter().position(|h| h.len() > 1);
    Symmetry { symmetric: first.is_none(), first_asymmetric: first }
}

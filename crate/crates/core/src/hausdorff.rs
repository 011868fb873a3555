//! Hausdorff dimension brackets from the truncated t-system.
//!
//! On the prefix tree cut at depth `n`, leaves get a boundary value and
//! interior values follow from `t(u)^{l_{k+1}/l_k} = sum_j t(uj)` and
//! `t()^gamma = sum_j t(j)`. Leaves equal to `1` (all later digits zero)
//! give a lower bound for `log_m t()`, leaves at the box maximum
//! `m^{l_n T_n}` (no further restriction) an upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{OmegaSpec, PrefixTree};
use crate::error::{Error, Result};
use crate::minkowski::DimensionInterval;
use crate::semigroup::SemigroupTable;

/// Node budget for [`solve_t_table`].
pub const TABLE_NODE_CAP: usize = 2_000_000;

/// Levels evaluated by parallel workers in streaming mode.
const SPLIT_DEPTH: usize = 8;

/// Relative slack for the box and residual checks.
pub const CHECK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Lower,
    Upper,
}

impl BoundaryMode {
    /// Leaf value at depth `n`.
    pub fn leaf_value(self, table: &SemigroupTable, m: u8, n: usize) -> Result<f64> {
        Ok(match self {
            BoundaryMode::Lower => 1.0,
            BoundaryMode::Upper => (m as f64).powf(table.ell(n)? as f64 * table.tail_inverse_sum(n)?),
        })
    }
}

/// `m^{l_k T_k}`: the largest value `t(u)` can take on level `k >= 1`.
pub fn box_upper(table: &SemigroupTable, m: u8, k: usize) -> Result<f64> {
    BoundaryMode::Upper.leaf_value(table, m, k)
}

#[derive(Debug, Clone)]
pub struct TVector {
    depth: usize,
    mode: BoundaryMode,
    alphabet: u8,
    root: f64,
    table: Option<(PrefixTree, Vec<Vec<f64>>)>,
}

impl TVector {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    /// `t()`.
    pub fn root_value(&self) -> f64 {
        self.root
    }

    /// `log_m t()`.
    pub fn log_root(&self) -> f64 {
        self.root.ln() / (self.alphabet as f64).ln()
    }

    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    pub fn tree(&self) -> Result<&PrefixTree> {
        self.table.as_ref().map(|(t, _)| t).ok_or(Error::NotMaterialized)
    }

    /// Values on level `k`, indexed like [`PrefixTree::level`].
    pub fn level_values(&self, k: usize) -> Result<&[f64]> {
        let (_, values) = self.table.as_ref().ok_or(Error::NotMaterialized)?;
        values.get(k).map(Vec::as_slice).ok_or(Error::DepthOutOfRange { requested: k, available: self.depth })
    }

    /// `t(u)` for a stored word.
    pub fn value(&self, word: &[u8]) -> Result<Option<f64>> {
        let (tree, values) = self.table.as_ref().ok_or(Error::NotMaterialized)?;
        Ok(tree.find(word).map(|i| values[word.len()][i]))
    }

    /// Largest relative defect of the defining equations over all interior
    /// nodes, root included.
    pub fn max_residual(&self, table: &SemigroupTable) -> Result<f64> {
        let (tree, values) = self.table.as_ref().ok_or(Error::NotMaterialized)?;
        let gamma = table.basis().gamma();
        let mut worst = 0.0f64;
        for k in 0..self.depth {
            let power = if k == 0 { gamma } else { table.ell(k + 1)? as f64 / table.ell(k)? as f64 };
            for (i, &t) in values[k].iter().enumerate() {
                let sum: f64 = tree.children(k, i).map(|c| values[k + 1][c]).sum();
                let lhs = t.powf(power);
                let scale = lhs.abs().max(sum.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max((lhs - sum).abs() / scale);
            }
        }
        Ok(worst)
    }

    /// Nodes (level, index) whose value leaves `[1, m^{l_k T_k}]`
    /// (`[1, m]` at the root) by more than [`CHECK_SLACK`] relative.
    pub fn box_violations(&self, table: &SemigroupTable) -> Result<Vec<(usize, usize)>> {
        let (_, values) = self.table.as_ref().ok_or(Error::NotMaterialized)?;
        let m = self.alphabet;
        let mut out = Vec::new();
        for (k, level) in values.iter().enumerate() {
            let hi = if k == 0 { m as f64 } else { box_upper(table, m, k)? };
            for (i, &t) in level.iter().enumerate() {
                if t < 1.0 - CHECK_SLACK || t > hi * (1.0 + CHECK_SLACK) {
                    out.push((k, i));
                }
            }
        }
        Ok(out)
    }
}

struct Setup {
    /// `exps[k] = l_k / l_{k+1}` for `k >= 1`, `exps[0] = 1 / gamma`.
    exps: Vec<f64>,
    leaf: f64,
}

fn setup(spec: &OmegaSpec, depth: usize, mode: BoundaryMode) -> Result<Setup> {
    if depth == 0 {
        return Err(Error::Invalid("Hausdorff depth must be at least 1".into()));
    }
    if depth > spec.depth() {
        return Err(Error::DepthOutOfRange { requested: depth, available: spec.depth() });
    }
    let table = spec.table();
    let mut exps = vec![1.0 / table.basis().gamma()];
    for k in 1..depth {
        exps.push(table.ell(k)? as f64 / table.ell(k + 1)? as f64);
    }
    let leaf = mode.leaf_value(table, spec.alphabet(), depth)?;
    Ok(Setup { exps, leaf })
}

fn fold(sum: f64, exp: f64) -> f64 {
    if sum == 0.0 {
        0.0
    } else {
        (sum.ln() * exp).exp()
    }
}

fn stream_value(spec: &OmegaSpec, s: &Setup, prefix: &mut Vec<u8>, depth: usize) -> f64 {
    let k = prefix.len();
    if k == depth {
        return s.leaf;
    }
    let mask = spec.child_mask(prefix);
    let sum = if k < SPLIT_DEPTH {
        let children: Vec<f64> = crate::constraints::digits_of(mask)
            .par_iter()
            .map(|&d| {
                let mut p = prefix.clone();
                p.push(d);
                stream_value(spec, s, &mut p, depth)
            })
            .collect();
        children.iter().sum()
    } else {
        let mut sum = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let d = rest.trailing_zeros() as u8;
            rest &= rest - 1;
            prefix.push(d);
            sum += stream_value(spec, s, prefix, depth);
            prefix.pop();
        }
        sum
    };
    fold(sum, s.exps[k])
}

/// Root value only, by depth-first traversal with `O(depth)` memory.
pub fn solve_t(spec: &OmegaSpec, depth: usize, mode: BoundaryMode) -> Result<TVector> {
    let s = setup(spec, depth, mode)?;
    let root = stream_value(spec, &s, &mut Vec::with_capacity(depth), depth);
    Ok(TVector { depth, mode, alphabet: spec.alphabet(), root, table: None })
}

/// Every `t(u)`, `|u| <= depth`, stored alongside the prefix tree.
pub fn solve_t_table(spec: &OmegaSpec, depth: usize, mode: BoundaryMode) -> Result<TVector> {
    solve_t_table_with_cap(spec, depth, mode, TABLE_NODE_CAP)
}

pub fn solve_t_table_with_cap(spec: &OmegaSpec, depth: usize, mode: BoundaryMode, cap: usize) -> Result<TVector> {
    let s = setup(spec, depth, mode)?;
    let tree = PrefixTree::build(spec, depth, cap)?;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    values[depth] = vec![s.leaf; tree.level(depth).len()];
    for k in (0..depth).rev() {
        let below = &values[k + 1];
        let exp = s.exps[k];
        let level: Vec<f64> = (0..tree.level(k).len())
            .into_par_iter()
            .map(|i| fold(tree.children(k, i).map(|c| below[c]).sum(), exp))
            .collect();
        values[k] = level;
    }
    let root = values[0][0];
    Ok(TVector { depth, mode, alphabet: spec.alphabet(), root, table: Some((tree, values)) })
}

/// `(log_m t_lower(), log_m t_upper())` at depth `n`.
pub fn hausdorff_bounds(spec: &OmegaSpec, n: usize) -> Result<DimensionInterval> {
    let lower = solve_t(spec, n, BoundaryMode::Lower)?.log_root();
    let upper = solve_t(spec, n, BoundaryMode::Upper)?.log_root();
    let certified = spec.mode() == crate::constraints::ExtensionMode::Local;
    Ok(DimensionInterval { lower, upper, terms_used: n, tail_ratio_bounds: None, certified })
}

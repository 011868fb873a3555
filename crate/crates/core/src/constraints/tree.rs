use super::OmegaSpec;
use crate::error::{Error, Result};

/// A vertex of a materialized prefix tree. Children of a node are stored
/// contiguously on the next level, in increasing digit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub parent: u32,
    pub digit: u8,
    pub first_child: u32,
    pub child_count: u8,
}

/// `Pref_0(Omega), ..., Pref_n(Omega)` stored level by level.
#[derive(Debug, Clone)]
pub struct PrefixTree {
    levels: Vec<Vec<Node>>,
}

impl PrefixTree {
    /// Materialize the tree to `depth`, failing once more than `node_cap`
    /// vertices would be stored.
    pub fn build(spec: &OmegaSpec, depth: usize, node_cap: usize) -> Result<Self> {
        if depth > spec.depth() {
            return Err(Error::DepthOutOfRange { requested: depth, available: spec.depth() });
        }
        let mut levels: Vec<Vec<Node>> = vec![Vec::new(); depth + 1];
        levels[0].push(Node { parent: u32::MAX, digit: 0, first_child: 0, child_count: 0 });
        let mut total = 1usize;
        let mut prefix = Vec::with_capacity(depth);
        fill(spec, &mut levels, &mut prefix, 0, depth, node_cap, &mut total)?;
        Ok(Self { levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[Node] {
        &self.levels[k]
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Index range of the children of node `idx` on level `k`.
    pub fn children(&self, k: usize, idx: usize) -> std::ops::Range<usize> {
        let n = &self.levels[k][idx];
        n.first_child as usize..n.first_child as usize + n.child_count as usize
    }

    /// Locate `word`, returning its index on level `word.len()`.
    pub fn find(&self, word: &[u8]) -> Option<usize> {
        if word.len() > self.depth() {
            return None;
        }
        let mut idx = 0usize;
        for (k, &d) in word.iter().enumerate() {
            idx = self.children(k, idx).find(|&c| self.levels[k + 1][c].digit == d)?;
        }
        Some(idx)
    }

    /// The word spelled by the path to node `idx` on level `k`.
    pub fn word(&self, k: usize, mut idx: usize) -> Vec<u8> {
        let mut out = vec![0u8; k];
        for level in (1..=k).rev() {
            let n = &self.levels[level][idx];
            out[level - 1] = n.digit;
            idx = n.parent as usize;
        }
        out
    }
}

fn fill(
    spec: &OmegaSpec,
    levels: &mut [Vec<Node>],
    prefix: &mut Vec<u8>,
    idx: usize,
    depth: usize,
    cap: usize,
    total: &mut usize,
) -> Result<()> {
    let k = prefix.len();
    if k == depth {
        return Ok(());
    }
    let mut mask = spec.child_mask(prefix);
    let first = levels[k + 1].len();
    let count = mask.count_ones() as usize;
    *total += count;
    if *total > cap {
        return Err(Error::ResourceBudget(format!("prefix tree exceeds {cap} nodes before depth {depth}")));
    }
    levels[k][idx].first_child = first as u32;
    levels[k][idx].child_count = count as u8;
    while mask != 0 {
        let d = mask.trailing_zeros() as u8;
        mask &= mask - 1;
        levels[k + 1].push(Node { parent: idx as u32, digit: d, first_child: 0, child_count: 0 });
    }
    for child in first..first + count {
        prefix.push(levels[k + 1][child].digit);
        fill(spec, levels, prefix, child, depth, cap, total)?;
        prefix.pop();
    }
    Ok(())
}

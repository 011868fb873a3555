//! Markov measures on the prefix tree and the product measures they induce
//! on `X_Omega^(S)`.
//!
//! A [`TreeMeasure`] stores `mu[uj | u]` for every stored node. Past the stored
//! depth a [`TailRule`] continues it: the measure built from a lower-mode
//! t-vector follows its boundary assumption and puts every later digit on
//! the smallest allowed one, all other measures spread uniformly over the
//! allowed continuations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{OmegaSpec, PrefixTree};
use crate::error::{Error, Result};
use crate::hausdorff::{BoundaryMode, TVector, TABLE_NODE_CAP};
use crate::numeric::CompensatedSum;
use crate::semigroup::SemigroupTable;

const NORMALIZATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRule {
    /// Probability one on the smallest allowed digit.
    Frozen,
    /// Equal mass on every allowed digit.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Uniform,
    Optimal(BoundaryMode),
}

#[derive(Debug, Clone)]
pub struct TreeMeasure {
    spec: OmegaSpec,
    tree: PrefixTree,
    /// `cond[k][i]`: probability of node `i` on level `k` given its parent;
    /// `cond[0]` is `[1.0]`.
    cond: Vec<Vec<f64>>,
    tail: TailRule,
    kind: MeasureKind,
}

/// `mu[j] = t(j) / t()^gamma` and `mu[uj | u] = t(uj) / t(u)^{l_{k+1}/l_k}`.
pub fn measure_from_t(spec: &OmegaSpec, tvec: &TVector) -> Result<TreeMeasure> {
    let tree = tvec.tree()?.clone();
    let table = spec.table();
    let gamma = table.basis().gamma();
    let depth = tvec.depth();
    let mut cond = vec![vec![1.0]];
    for k in 0..depth {
        let parents = tvec.level_values(k)?;
        let children = tvec.level_values(k + 1)?;
        let power = if k == 0 { gamma } else { table.ell(k + 1)? as f64 / table.ell(k)? as f64 };
        let mut level = vec![0.0; children.len()];
        for (i, &t) in parents.iter().enumerate() {
            let denom = t.powf(power);
            for c in tree.children(k, i) {
                level[c] = if denom > 0.0 { children[c] / denom } else { 0.0 };
            }
        }
        cond.push(level);
    }
    let tail = match tvec.mode() {
        BoundaryMode::Lower => TailRule::Frozen,
        BoundaryMode::Upper => TailRule::Uniform,
    };
    let m = TreeMeasure { spec: spec.clone(), tree, cond, tail, kind: MeasureKind::Optimal(tvec.mode()) };
    m.check_normalized()?;
    Ok(m)
}

/// Equal mass on the allowed extensions of every node.
pub fn uniform_measure(spec: &OmegaSpec, depth: usize) -> Result<TreeMeasure> {
    let tree = PrefixTree::build(spec, depth, TABLE_NODE_CAP)?;
    let mut cond = vec![vec![1.0]];
    for k in 0..depth {
        let mut level = vec![0.0; tree.level(k + 1).len()];
        for i in 0..tree.level(k).len() {
            let r = tree.children(k, i);
            let p = 1.0 / r.len() as f64;
            for c in r {
                level[c] = p;
            }
        }
        cond.push(level);
    }
    Ok(TreeMeasure { spec: spec.clone(), tree, cond, tail: TailRule::Uniform, kind: MeasureKind::Uniform })
}

/// A probability together with its base-`m` logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    /// `log_m` of the probability; `-inf` for inadmissible words.
    pub log_m: f64,
    pub admissible: bool,
}

impl TreeMeasure {
    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn tail_rule(&self) -> TailRule {
        self.tail
    }

    pub fn spec(&self) -> &OmegaSpec {
        &self.spec
    }

    pub fn tree(&self) -> &PrefixTree {
        &self.tree
    }

    fn ln_m(&self) -> f64 {
        (self.spec.alphabet() as f64).ln()
    }

    /// `(digit, mu[uj | u])` for the stored node `idx` on level `k < depth`.
    pub fn conditional(&self, k: usize, idx: usize) -> Vec<(u8, f64)> {
        self.tree.children(k, idx).map(|c| (self.tree.level(k + 1)[c].digit, self.cond[k + 1][c])).collect()
    }

    fn check_normalized(&self) -> Result<()> {
        for k in 0..self.depth() {
            for i in 0..self.tree.level(k).len() {
                let r = self.tree.children(k, i);
                if r.is_empty() {
                    continue;
                }
                let sum: f64 = r.clone().map(|c| self.cond[k + 1][c]).sum();
                // nodes with zero t are unreachable and carry no mass
                if sum == 0.0 {
                    continue;
                }
                if (sum - 1.0).abs() > NORMALIZATION_SLACK || r.clone().any(|c| self.cond[k + 1][c] < 0.0) {
                    return Err(Error::Inconsistent(format!(
                        "conditional distribution at level {k} node {i} sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn tail_step(&self, prefix: &[u8], digit: u8) -> Result<f64> {
        let ext = self.spec.allowed_extensions(prefix)?;
        if !ext.contains(&digit) {
            return Ok(0.0);
        }
        Ok(match self.tail {
            TailRule::Frozen => (ext[0] == digit) as u8 as f64,
            TailRule::Uniform => 1.0 / ext.len() as f64,
        })
    }

    /// Natural log of `mu[word]`, `-inf` if the word carries no mass.
    pub fn ln_cylinder(&self, word: &[u8]) -> Result<f64> {
        let mut sum = CompensatedSum::new();
        let mut idx = 0usize;
        let stored = word.len().min(self.depth());
        for (k, &d) in word[..stored].iter().enumerate() {
            let Some(c) = self.tree.children(k, idx).find(|&c| self.tree.level(k + 1)[c].digit == d) else {
                return Ok(f64::NEG_INFINITY);
            };
            let p = self.cond[k + 1][c];
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            sum.add(p.ln());
            idx = c;
        }
        for k in stored..word.len() {
            let p = self.tail_step(&word[..k], word[k])?;
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            sum.add(p.ln());
        }
        Ok(sum.value())
    }

    /// `mu[word]`.
    pub fn cylinder(&self, word: &[u8]) -> Result<f64> {
        Ok(self.ln_cylinder(word)?.exp())
    }

    /// `ln mu[u]` on level `j` from the values on level `j - 1`.
    fn descend(&self, ln: &[f64], j: usize) -> Vec<f64> {
        self.tree
            .level(j)
            .iter()
            .zip(&self.cond[j])
            .map(|(node, &p)| if p > 0.0 { ln[node.parent as usize] + p.ln() } else { f64::NEG_INFINITY })
            .collect()
    }

    fn entropy_of(&self, ln: &[f64]) -> f64 {
        let mut h = CompensatedSum::new();
        for &l in ln.iter().filter(|l| l.is_finite()) {
            h.add(-l.exp() * l);
        }
        h.value() / self.ln_m()
    }

    /// Masses `mu[u]` of every stored word of length `k`.
    pub fn level_masses(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.depth() {
            return Err(Error::DepthOutOfRange { requested: k, available: self.depth() });
        }
        let mut ln = vec![0.0];
        for j in 1..=k {
            ln = self.descend(&ln, j);
        }
        Ok(ln.into_iter().map(f64::exp).collect())
    }

    /// `H(alpha_k) = -sum_{|u| = k} mu[u] log_m mu[u]`.
    ///
    /// Beyond the stored depth only the frozen tail is supported, where the
    /// entropy stays at its last stored value.
    pub fn level_entropy(&self, k: usize) -> Result<f64> {
        Ok(*self.level_entropies(k)?.last().unwrap_or(&0.0))
    }

    /// `H(alpha_1) .. H(alpha_upto)`.
    fn level_entropies(&self, upto: usize) -> Result<Vec<f64>> {
        let n = self.depth();
        if upto > n && self.tail == TailRule::Uniform {
            return Err(Error::DepthOutOfRange { requested: upto, available: n });
        }
        let mut out = Vec::with_capacity(upto);
        let mut ln = vec![0.0];
        for j in 1..=upto.min(n) {
            ln = self.descend(&ln, j);
            out.push(self.entropy_of(&ln));
        }
        let last = out.last().copied().unwrap_or(0.0);
        out.resize(upto, last);
        Ok(out)
    }
}

/// `gamma^{-1} sum_{k=1}^r H(alpha_k) (1/l_k - 1/l_{k+1})`, base-`m` entropies.
pub fn entropy_series(measure: &TreeMeasure, table: &SemigroupTable, r: usize) -> Result<f64> {
    if r + 1 > table.len() {
        return Err(Error::TableTooShort { needed: r as u64 + 1, available: table.len() as u64 });
    }
    let h = measure.level_entropies(r)?;
    let mut sum = CompensatedSum::new();
    for k in 1..=r {
        sum.add(h[k - 1] * (1.0 / table.ell(k)? as f64 - 1.0 / table.ell(k + 1)? as f64));
    }
    Ok(sum.value() / table.basis().gamma())
}

/// The full series `s(Omega, mu)` for a measure with a frozen tail: levels past
/// the stored depth `n` repeat `H(alpha_n)`, so the remainder sums to
/// `H(alpha_n) / l_n`.
pub fn entropy_limit(measure: &TreeMeasure, table: &SemigroupTable) -> Result<f64> {
    if measure.tail != TailRule::Frozen {
        return Err(Error::UnsupportedMethod("closed-form entropy needs a frozen tail".into()));
    }
    let n = measure.depth();
    let partial = if n > 1 { entropy_series(measure, table, n - 1)? } else { 0.0 };
    Ok(partial + measure.level_entropy(n)? / table.ell(n)? as f64 / table.basis().gamma())
}

/// `gamma^{-1} (sum_{k<n} H_k (1/l_k - 1/l_{k+1}) + H_n / l_n + [upper] T_n)`,
/// which equals `log_m t()` for the measure built from that t-vector.
pub fn telescoped_log_root(measure: &TreeMeasure, table: &SemigroupTable) -> Result<f64> {
    let n = measure.depth();
    let gamma = table.basis().gamma();
    let partial = if n > 1 { entropy_series(measure, table, n - 1)? } else { 0.0 };
    let mut v = partial + measure.level_entropy(n)? / table.ell(n)? as f64 / gamma;
    if measure.kind == MeasureKind::Optimal(BoundaryMode::Upper) {
        v += table.tail_inverse_sum(n)? / gamma;
    }
    Ok(v)
}

/// `word|_{iS}`: the digits at positions `i l_1, i l_2, ... <= |word|`.
pub fn stream_of(word: &[u8], i: u64, table: &SemigroupTable) -> Vec<u8> {
    let n = word.len() as u64;
    table
        .elements()
        .iter()
        .map_while(|&l| i.checked_mul(l).filter(|&p| p <= n))
        .map(|p| word[(p - 1) as usize])
        .collect()
}

fn check_length(measure: &TreeMeasure, n: u64) -> Result<()> {
    let table = measure.spec.table();
    if table.complete_to() < n {
        return Err(Error::TableTooShort { needed: n, available: table.complete_to() });
    }
    if n > 0 {
        let k = table.k_of(n)?;
        if k > measure.spec.depth() {
            return Err(Error::DepthOutOfRange { requested: k, available: measure.spec.depth() });
        }
    }
    Ok(())
}

/// Largest word length whose streams the measure's compiled spec covers.
pub fn max_word_length(measure: &TreeMeasure) -> u64 {
    let spec = &measure.spec;
    let table = spec.table();
    match table.ell(spec.depth() + 1) {
        Ok(next) => (next - 1).min(table.complete_to()),
        Err(_) => table.complete_to(),
    }
}

/// `Prob_mu[word] = prod_{i <= n, (i,S)=1} mu[word|_{iS}]`.
pub fn prob_mu(word: &[u8], measure: &TreeMeasure) -> Result<Probability> {
    let n = word.len() as u64;
    check_length(measure, n)?;
    let m = measure.spec.alphabet();
    if let Some(&d) = word.iter().find(|&&d| d >= m) {
        return Err(Error::InvalidDigit { digit: d as u64, alphabet: m as u64 });
    }
    let table = measure.spec.table();
    let basis = table.basis();
    let mut ln = CompensatedSum::new();
    for i in (1..=n).filter(|&i| basis.is_coprime(i)) {
        let l = measure.ln_cylinder(&stream_of(word, i, table))?;
        if l == f64::NEG_INFINITY {
            let admissible = crate::constraints::is_admissible_word(&measure.spec, word)?;
            return Ok(Probability { value: 0.0, log_m: f64::NEG_INFINITY, admissible });
        }
        ln.add(l);
    }
    let ln = ln.value();
    Ok(Probability { value: ln.exp(), log_m: ln / measure.ln_m(), admissible: true })
}

/// Draw `x_1 .. x_n` from `Prob_mu`: each coprime stream is sampled
/// independently from the tree measure, streams in increasing order of `i`.
pub fn sample_prefix(measure: &TreeMeasure, n: u64, seed: u64) -> Result<Vec<u8>> {
    check_length(measure, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = measure.spec.table();
    let basis = table.basis();
    let mut word = vec![0u8; n as usize];
    let mut stream = Vec::new();
    for i in (1..=n).filter(|&i| basis.is_coprime(i)) {
        let len = table.k_of(n / i)?;
        sample_stream(measure, len, &mut rng, &mut stream)?;
        for (k, &d) in stream.iter().enumerate() {
            word[(i * table.elements()[k] - 1) as usize] = d;
        }
    }
    Ok(word)
}

fn sample_stream(measure: &TreeMeasure, len: usize, rng: &mut ChaCha8Rng, out: &mut Vec<u8>) -> Result<()> {
    out.clear();
    let tree = &measure.tree;
    let mut idx = 0usize;
    for k in 0..len.min(measure.depth()) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        let mut last_positive = None;
        for c in tree.children(k, idx) {
            let p = measure.cond[k + 1][c];
            if p > 0.0 {
                last_positive = Some(c);
            }
            acc += p;
            if u < acc && p > 0.0 {
                chosen = Some(c);
                break;
            }
        }
        // rounding can leave u just above the cumulative total
        let c = chosen.or(last_positive).ok_or_else(|| Error::Inconsistent(format!("no mass below level {k}")))?;
        out.push(tree.level(k + 1)[c].digit);
        idx = c;
    }
    while out.len() < len {
        let ext = measure.spec.allowed_extensions(out)?;
        if ext.is_empty() {
            return Err(Error::Inconsistent(format!("dead end at stream length {}", out.len())));
        }
        let d = match measure.tail {
            TailRule::Frozen => ext[0],
            TailRule::Uniform => ext[rng.gen_range(0..ext.len())],
        };
        out.push(d);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::constraints::{compile, is_admissible_word, ConstraintFamily, Rule};
    use crate::hausdorff::solve_t_table;
    use crate::minkowski::minkowski_lower;
    use crate::semigroup::PrimeBasis;
    use crate::{constraints::parse_word, count_prefixes};

    fn x23(depth: usize) -> OmegaSpec {
        let fam = ConstraintFamily::new(2, vec![Rule::product_zero(vec![1, 2, 3]).unwrap()]).unwrap();
        compile(&fam, &PrimeBasis::new(vec![2, 3]).unwrap(), depth).unwrap()
    }

    fn free(depth: usize) -> OmegaSpec {
        compile(&ConstraintFamily::new(2, vec![]).unwrap(), &PrimeBasis::new(vec![2, 3]).unwrap(), depth).unwrap()
    }

    #[test]
    fn optimal_depth_one() {
        let s = x23(10);
        let t = solve_t_table(&s, 1, BoundaryMode::Lower).unwrap();
        let mu = measure_from_t(&s, &t).unwrap();
        assert_eq!(mu.conditional(0, 0), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(mu.tail_rule(), TailRule::Frozen);
    }

    #[test]
    fn forced_continuation() {
        let s = x23(10);
        let t = solve_t_table(&s, 6, BoundaryMode::Upper).unwrap();
        let mu = measure_from_t(&s, &t).unwrap();
        let idx = mu.tree().find(&[1, 1]).unwrap();
        let c = mu.conditional(2, idx);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].0, 0);
        assert_abs_diff_eq!(c[0].1, 1.0, epsilon = 1e-12);
        let u = uniform_measure(&s, 6).unwrap();
        assert_eq!(u.conditional(2, idx), vec![(0, 1.0)]);
        let idx = u.tree().find(&[1, 0]).unwrap();
        assert_eq!(u.conditional(2, idx), vec![(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn free_tree_upper_is_fair() {
        let s = free(8);
        let t = solve_t_table(&s, 8, BoundaryMode::Upper).unwrap();
        let mu = measure_from_t(&s, &t).unwrap();
        for k in 0..8 {
            for i in 0..mu.tree().level(k).len() {
                for (_, p) in mu.conditional(k, i) {
                    assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn golden_mean_root_is_fair() {
        let fam = ConstraintFamily::new(2, vec![Rule::product_zero(vec![1, 2]).unwrap()]).unwrap();
        let s = compile(&fam, &PrimeBasis::new(vec![2]).unwrap(), 6).unwrap();
        assert_eq!(uniform_measure(&s, 6).unwrap().conditional(0, 0), vec![(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn uniform_entropy_first_term() {
        let s = x23(10);
        let u = uniform_measure(&s, 5).unwrap();
        assert_abs_diff_eq!(entropy_series(&u, s.table(), 1).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn telescoping() {
        let s = x23(16);
        for n in [1, 2, 5, 10, 15] {
            for mode in [BoundaryMode::Lower, BoundaryMode::Upper] {
                let t = solve_t_table(&s, n, mode).unwrap();
                let mu = measure_from_t(&s, &t).unwrap();
                assert_abs_diff_eq!(telescoped_log_root(&mu, s.table()).unwrap(), t.log_root(), epsilon = 1e-9);
            }
            let t = solve_t_table(&s, n, BoundaryMode::Lower).unwrap();
            let mu = measure_from_t(&s, &t).unwrap();
            assert_abs_diff_eq!(entropy_limit(&mu, s.table()).unwrap(), t.log_root(), epsilon = 1e-9);
        }
    }

    #[test]
    fn frozen_series_converges_to_limit() {
        let s = x23(60);
        let t = solve_t_table(&s, 8, BoundaryMode::Lower).unwrap();
        let mu = measure_from_t(&s, &t).unwrap();
        let limit = entropy_limit(&mu, s.table()).unwrap();
        let far = entropy_series(&mu, s.table(), 59).unwrap();
        let h8 = mu.level_entropy(8).unwrap();
        // remainder is H_8 / (gamma l_60)
        assert_abs_diff_eq!(limit - far, h8 / 3.0 / s.table().ell(60).unwrap() as f64, epsilon = 1e-12);
    }

    #[test]
    fn uniform_below_minkowski() {
        let s = x23(12);
        let u = uniform_measure(&s, 12).unwrap();
        let p = count_prefixes(&s, 12).unwrap();
        let sym = p.symmetric_through();
        for k in 1..=12 {
            let h = u.level_entropy(k).unwrap();
            let a = p.log_count(k).unwrap();
            assert!(h <= a + 1e-12);
            if k <= sym {
                assert_abs_diff_eq!(h, a, epsilon = 1e-12);
            } else {
                assert!(h < a - 1e-9);
            }
        }
        for r in 1..12 {
            assert!(entropy_series(&u, s.table(), r).unwrap() <= minkowski_lower(&p, s.table(), r).unwrap() + 1e-12);
        }
    }

    #[test]
    fn prob_examples() {
        let s = x23(20);
        let u = uniform_measure(&s, 10).unwrap();
        assert_abs_diff_eq!(prob_mu(&[0], &u).unwrap().value, 0.5, epsilon = 1e-15);
        assert_eq!(prob_mu(&[], &u).unwrap().value, 1.0);
        let w = parse_word("00000", 2).unwrap();
        let expect = u.cylinder(&[0, 0, 0, 0]).unwrap() * u.cylinder(&[0]).unwrap();
        assert_abs_diff_eq!(prob_mu(&w, &u).unwrap().value, expect, epsilon = 1e-15);
        // streams 1: 0000 -> 1/2 * 1/2 * 1/2 * 1/2 ("000" has 2 children)
        assert_abs_diff_eq!(expect, 1.0 / 32.0, epsilon = 1e-15);
        let bad = prob_mu(&[1, 1, 1], &u).unwrap();
        assert_eq!(bad.value, 0.0);
        assert!(!bad.admissible);
        assert_eq!(stream_of(&[9, 8, 7, 6, 5, 4], 5, s.table()), vec![5]);
        assert_eq!(stream_of(&[9, 8, 7, 6, 5, 4], 1, s.table()), vec![9, 8, 7, 6, 4]);
    }

    #[test]
    fn sampled_words_are_admissible() {
        let s = x23(40);
        let t = solve_t_table(&s, 10, BoundaryMode::Upper).unwrap();
        let mu = measure_from_t(&s, &t).unwrap();
        for seed in 0..200 {
            let w = sample_prefix(&mu, 200, seed).unwrap();
            assert!(is_admissible_word(&s, &w).unwrap());
            assert!(prob_mu(&w, &mu).unwrap().value > 0.0);
        }
        assert_eq!(sample_prefix(&mu, 200, 7).unwrap(), sample_prefix(&mu, 200, 7).unwrap());
    }

    #[test]
    fn sample_length_limits() {
        let s = x23(5);
        let u = uniform_measure(&s, 5).unwrap();
        // the table stops at l_5 = 6
        assert_eq!(max_word_length(&u), 6);
        assert!(sample_prefix(&u, 6, 1).is_ok());
        assert!(sample_prefix(&u, 7, 1).is_err());
    }

    #[test]
    fn fair_coin_frequency() {
        let s = free(120);
        let u = uniform_measure(&s, 10).unwrap();
        let w = sample_prefix(&u, 10_000, 3).unwrap();
        let ones = w.iter().filter(|&&d| d == 1).count() as f64 / 1e4;
        assert!((ones - 0.5).abs() < 0.02, "{ones}");
    }
}

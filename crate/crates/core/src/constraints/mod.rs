//! Constraint families, their compilation into the companion shift `Omega`
//! over a semigroup, and prefix-tree counting.
//!
//! A [`ConstraintFamily`] is a list of scaled tuple rules: for every `k` the
//! digits at positions `k*n_1, ..., k*n_r` must form an allowed tuple.
//! Along each coprime stream `iS` the rule instances are indexed by `s` in
//! `S` (positions `s*n_j`), which after compilation become tuples of ranks
//! in the sorted semigroup table.
//!
//! Admissibility of a prefix is decided by forward checking: when a digit is
//! placed, every compiled tuple that contains its position must still admit a
//! completion of the digits known so far. For families where every locally
//! consistent word extends to an infinite one (a digit completing every tuple
//! exists, or a single rule whose last digit can always be completed) this is
//! exact. Otherwise the compiled family runs in [`ExtensionMode::Lookahead`]
//! and a child is only kept if it extends consistently until every tuple it
//! opened is closed. That keeps every extendable word but may keep dead ones,
//! so lookahead counts are upper estimates.

mod count;
pub mod spec_file;
mod tree;
mod triangle;

pub use count::{count_prefixes, count_prefixes_with_split, is_spherically_symmetric, LevelProfile, Symmetry};
pub use tree::{Node, PrefixTree};
pub use triangle::count_prefixes_triangle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::{PrimeBasis, SemigroupTable, VALUE_CAP};

/// Largest alphabet supported; digit sets are held in a `u64` mask.
pub const MAX_ALPHABET: u8 = 64;

/// Largest `m^r` for an explicit allowed-tuple table.
const MAX_TABLE_CELLS: u64 = 1 << 22;

/// Digits allowed on one rule instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Allowed {
    /// At least one digit of the tuple is zero, i.e. the product vanishes.
    ProductZero,
    /// An explicit list of allowed digit tuples.
    Tuples(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    scales: Vec<u64>,
    allowed: Allowed,
}

impl Rule {
    pub fn new(scales: Vec<u64>, allowed: Allowed) -> Result<Self> {
        if scales.len() < 2 {
            return Err(Error::InvalidRule("a rule needs at least two scales".into()));
        }
        if scales[0] == 0 {
            return Err(Error::InvalidRule("scales must be positive".into()));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRule("scales must be strictly increasing".into()));
        }
        if let Allowed::Tuples(tuples) = &allowed {
            if let Some(t) = tuples.iter().find(|t| t.len() != scales.len()) {
                return Err(Error::InvalidRule(format!(
                    "allowed tuple {t:?} has arity {} but the rule has {} scales",
                    t.len(),
                    scales.len()
                )));
            }
        }
        Ok(Self { scales, allowed })
    }

    pub fn product_zero(scales: Vec<u64>) -> Result<Self> {
        Self::new(scales, Allowed::ProductZero)
    }

    pub fn scales(&self) -> &[u64] {
        &self.scales
    }

    pub fn allowed(&self) -> &Allowed {
        &self.allowed
    }

    pub fn arity(&self) -> usize {
        self.scales.len()
    }

    /// Direct membership test of a full digit tuple.
    pub fn accepts(&self, digits: &[u8]) -> bool {
        match &self.allowed {
            Allowed::ProductZero => digits.contains(&0),
            Allowed::Tuples(tuples) => tuples.iter().any(|t| t.as_slice() == digits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintFamily {
    alphabet: u8,
    rules: Vec<Rule>,
}

impl ConstraintFamily {
    pub fn new(alphabet: u8, rules: Vec<Rule>) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&alphabet) {
            return Err(Error::Invalid(format!("alphabet size must be in 2..={MAX_ALPHABET}, got {alphabet}")));
        }
        for (i, rule) in rules.iter().enumerate() {
            if let Allowed::Tuples(tuples) = &rule.allowed {
                if tuples.is_empty() {
                    return Err(Error::EmptyAllowedSet { rule: i });
                }
                for &d in tuples.iter().flatten() {
                    if d >= alphabet {
                        return Err(Error::InvalidDigit { digit: d as u64, alphabet: alphabet as u64 });
                    }
                }
            }
        }
        Ok(Self { alphabet, rules })
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }
}

/// How a locally consistent prefix is certified to be a true prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionMode {
    /// Every forward-consistent word extends; no search needed.
    Local,
    /// Children must extend consistently through the closing horizon.
    Lookahead,
}

/// One compiled rule instance: positions `s*n_1 < ... < s*n_r` as 0-based ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub rule: usize,
    pub s: u64,
    positions: Vec<u32>,
}

impl Trigger {
    /// 1-based ranks `(i_1, ..., i_r)`; `i_r` is the level that closes it.
    pub fn ranks(&self) -> Vec<usize> {
        self.positions.iter().map(|&p| p as usize + 1).collect()
    }
}

#[derive(Debug, Clone)]
enum Mask {
    ProductZero {
        arity: usize,
    },
    /// `partial[j][code]`: some allowed tuple starts with the `j + 1` digits
    /// encoded base-m in `code`.
    Table {
        partial: Vec<Vec<bool>>,
    },
}

impl Mask {
    fn compile(rule: &Rule, m: u8) -> Result<Self> {
        let r = rule.arity();
        match &rule.allowed {
            Allowed::ProductZero => Ok(Mask::ProductZero { arity: r }),
            Allowed::Tuples(tuples) => {
                let cells = (m as u64).checked_pow(r as u32).filter(|&c| c <= MAX_TABLE_CELLS);
                if cells.is_none() {
                    return Err(Error::InvalidRule(format!("tuple table {m}^{r} is too large")));
                }
                let mut partial: Vec<Vec<bool>> = (1..=r).map(|j| vec![false; (m as usize).pow(j as u32)]).collect();
                for t in tuples {
                    let mut code = 0usize;
                    for (j, &d) in t.iter().enumerate() {
                        code = code * m as usize + d as usize;
                        partial[j][code] = true;
                    }
                }
                Ok(Mask::Table { partial })
            }
        }
    }

    /// Digits `d` such that every tuple ending in `d` is allowed.
    fn universal_last_digits(&self, m: u8) -> u64 {
        match self {
            Mask::ProductZero { .. } => 1,
            Mask::Table { partial } => {
                let full = partial.last().unwrap();
                let heads = full.len() / m as usize;
                (0..m as usize).filter(|&d| (0..heads).all(|h| full[h * m as usize + d])).fold(0, |acc, d| acc | 1 << d)
            }
        }
    }

    /// Every `(r-1)`-digit head has at least one allowed last digit.
    fn always_completable(&self, m: u8) -> bool {
        match self {
            Mask::ProductZero { .. } => true,
            Mask::Table { partial } => {
                let full = partial.last().unwrap();
                full.chunks(m as usize).all(|c| c.iter().any(|&b| b))
            }
        }
    }
}

/// The compiled companion shift: tuples over ranks of the semigroup table.
#[derive(Debug, Clone)]
pub struct OmegaSpec {
    family: ConstraintFamily,
    table: SemigroupTable,
    masks: Vec<Mask>,
    tuples: Vec<Trigger>,
    /// Per 0-based level: tuples closing there, ordered by rule then `s`.
    closing: Vec<Vec<u32>>,
    /// Per 0-based level: `(tuple, slot)` for every tuple containing it.
    touching: Vec<Vec<(u32, u8)>>,
    depth: usize,
    levels: usize,
    mode: ExtensionMode,
    /// `horizon[k]`: prefix length a word of length `k` must extend to.
    horizon: Vec<usize>,
}

/// Compile `family` over `basis` so that prefixes up to length `depth` can be
/// queried.
pub fn compile(family: &ConstraintFamily, basis: &PrimeBasis, depth: usize) -> Result<OmegaSpec> {
    OmegaSpec::compile(family, basis, depth)
}

impl OmegaSpec {
    pub fn compile(family: &ConstraintFamily, basis: &PrimeBasis, depth: usize) -> Result<Self> {
        let m = family.alphabet;
        for rule in &family.rules {
            if let Some(&scale) = rule.scales.iter().find(|&&n| !basis.is_smooth(n)) {
                return Err(Error::NonSmoothScale { scale });
            }
        }
        let masks = family.rules.iter().map(|r| Mask::compile(r, m)).collect::<Result<Vec<_>>>()?;

        let universal = masks.iter().fold(u64::MAX, |acc, k| acc & k.universal_last_digits(m));
        let mode = if universal != 0 || (masks.len() == 1 && masks[0].always_completable(m)) {
            ExtensionMode::Local
        } else {
            ExtensionMode::Lookahead
        };

        let base = SemigroupTable::with_count(basis, depth.max(1))?;
        let top = base.ell(depth.max(1))?;
        let table = match mode {
            ExtensionMode::Local => base,
            ExtensionMode::Lookahead => {
                // Closing positions of tuples opened below `top` reach at most
                // `top * n_r / n_1`.
                let mut bound = top;
                for rule in &family.rules {
                    let reach = (top / rule.scales[0])
                        .checked_mul(*rule.scales.last().unwrap())
                        .filter(|&v| v <= VALUE_CAP)
                        .ok_or(Error::BoundOverflow { bound: VALUE_CAP })?;
                    bound = bound.max(reach);
                }
                SemigroupTable::build(basis, bound)?
            }
        };
        let levels = match mode {
            ExtensionMode::Local => depth,
            ExtensionMode::Lookahead => table.len(),
        };
        let limit = if levels == 0 { 0 } else { table.ell(levels)? };

        let mut tuples = Vec::new();
        let mut closing = vec![Vec::new(); levels];
        let mut touching = vec![Vec::new(); levels];
        for (rule_idx, rule) in family.rules.iter().enumerate() {
            let last = *rule.scales.last().unwrap();
            for &s in table.elements() {
                let Some(top_pos) = s.checked_mul(last).filter(|&v| v <= limit) else { break };
                let positions: Vec<u32> = rule
                    .scales
                    .iter()
                    .map(|&n| table.rank(s * n).expect("smooth position inside table") as u32 - 1)
                    .collect();
                debug_assert_eq!(table.rank(top_pos).unwrap() as u32 - 1, *positions.last().unwrap());
                let id = tuples.len() as u32;
                for (slot, &p) in positions.iter().enumerate() {
                    touching[p as usize].push((id, slot as u8));
                }
                closing[*positions.last().unwrap() as usize].push(id);
                tuples.push(Trigger { rule: rule_idx, s, positions });
            }
        }
        // Closing lists come out grouped by rule then s already; touching
        // lists likewise.

        let mut horizon = Vec::with_capacity(depth + 1);
        for k in 0..=depth {
            let h = match mode {
                ExtensionMode::Local => k,
                ExtensionMode::Lookahead if k == 0 => 0,
                ExtensionMode::Lookahead => {
                    let ell_k = table.ell(k)?;
                    let mut h = k;
                    for rule in &family.rules {
                        let cap = ell_k / rule.scales[0];
                        if cap == 0 {
                            continue;
                        }
                        let s = table.elements()[table.k_of(cap)? - 1];
                        let close = s * rule.scales.last().unwrap();
                        if let Some(rank) = table.rank(close) {
                            h = h.max(rank.min(levels));
                        }
                    }
                    h
                }
            };
            horizon.push(h);
        }

        Ok(Self { family: family.clone(), table, masks, tuples, closing, touching, depth, levels, mode, horizon })
    }

    pub fn family(&self) -> &ConstraintFamily {
        &self.family
    }

    pub fn alphabet(&self) -> u8 {
        self.family.alphabet
    }

    pub fn basis(&self) -> &PrimeBasis {
        self.table.basis()
    }

    pub fn table(&self) -> &SemigroupTable {
        &self.table
    }

    /// Longest prefix length that may be queried.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    /// Tuples closing at 1-based `level`.
    pub fn triggers_at(&self, level: usize) -> Result<Vec<&Trigger>> {
        if level == 0 || level > self.levels {
            return Err(Error::DepthOutOfRange { requested: level, available: self.levels });
        }
        Ok(self.closing[level - 1].iter().map(|&t| &self.tuples[t as usize]).collect())
    }

    fn full_mask(&self) -> u64 {
        let m = self.family.alphabet as u32;
        if m == 64 {
            u64::MAX
        } else {
            (1u64 << m) - 1
        }
    }

    /// Digits that keep `prefix` forward-consistent. No lookahead.
    #[inline]
    pub(crate) fn local_mask(&self, prefix: &[u8]) -> u64 {
        let v = prefix.len();
        let m = self.family.alphabet as usize;
        let mut mask = self.full_mask();
        for &(t, slot) in &self.touching[v] {
            let tuple = &self.tuples[t as usize];
            let slot = slot as usize;
            match &self.masks[tuple.rule] {
                Mask::ProductZero { arity } => {
                    if slot + 1 == *arity && tuple.positions[..slot].iter().all(|&p| prefix[p as usize] != 0) {
                        mask &= 1;
                    }
                }
                Mask::Table { partial } => {
                    let mut code = 0usize;
                    for &p in &tuple.positions[..slot] {
                        code = code * m + prefix[p as usize] as usize;
                    }
                    let row = &partial[slot][code * m..code * m + m];
                    for (d, &ok) in row.iter().enumerate() {
                        if !ok {
                            mask &= !(1u64 << d);
                        }
                    }
                }
            }
            if mask == 0 {
                break;
            }
        }
        mask
    }

    /// True iff `prefix` has a forward-consistent extension of length `target`.
    fn extends_to(&self, prefix: &mut Vec<u8>, target: usize) -> bool {
        if prefix.len() >= target {
            return true;
        }
        let mut mask = self.local_mask(prefix);
        while mask != 0 {
            let d = mask.trailing_zeros() as u8;
            mask &= mask - 1;
            prefix.push(d);
            let ok = self.extends_to(prefix, target);
            prefix.pop();
            if ok {
                return true;
            }
        }
        false
    }

    /// Children of an admissible `prefix`, as a digit bitmask.
    #[inline]
    pub(crate) fn child_mask(&self, prefix: &mut Vec<u8>) -> u64 {
        let mask = self.local_mask(prefix);
        match self.mode {
            ExtensionMode::Local => mask,
            ExtensionMode::Lookahead => {
                let target = self.horizon_for(prefix.len() + 1);
                let mut kept = 0;
                let mut rest = mask;
                while rest != 0 {
                    let d = rest.trailing_zeros() as u8;
                    rest &= rest - 1;
                    prefix.push(d);
                    if self.extends_to(prefix, target) {
                        kept |= 1 << d;
                    }
                    prefix.pop();
                }
                kept
            }
        }
    }

    fn horizon_for(&self, k: usize) -> usize {
        self.horizon.get(k).copied().unwrap_or(self.levels).min(self.levels)
    }

    fn check_level(&self, next_level: usize) -> Result<()> {
        let limit = match self.mode {
            ExtensionMode::Local => self.levels,
            ExtensionMode::Lookahead => self.depth,
        };
        if next_level > limit {
            return Err(Error::DepthOutOfRange { requested: next_level, available: limit });
        }
        Ok(())
    }

    /// Digits `j` such that `prefix . j` is again a prefix of `Omega`.
    ///
    /// The caller keeps `prefix` admissible. The result is non-empty for
    /// every admissible prefix of a [`ExtensionMode::Local`] spec.
    pub fn allowed_extensions(&self, prefix: &[u8]) -> Result<Vec<u8>> {
        self.check_level(prefix.len() + 1)?;
        let mut buf = prefix.to_vec();
        let mask = self.child_mask(&mut buf);
        if self.mode == ExtensionMode::Local {
            assert!(mask != 0, "admissible prefix without continuation");
        }
        Ok(digits_of(mask))
    }

    /// Whether `word` is a prefix of some point of `Omega`.
    pub fn contains_prefix(&self, word: &[u8]) -> Result<bool> {
        if word.is_empty() {
            return Ok(true);
        }
        self.check_level(word.len())?;
        let m = self.family.alphabet;
        let mut buf = Vec::with_capacity(word.len());
        for &d in word {
            if d >= m {
                return Err(Error::InvalidDigit { digit: d as u64, alphabet: m as u64 });
            }
            if self.local_mask(&buf) >> d & 1 == 0 {
                return Ok(false);
            }
            buf.push(d);
        }
        Ok(match self.mode {
            ExtensionMode::Local => true,
            ExtensionMode::Lookahead => {
                let target = self.horizon_for(word.len());
                self.extends_to(&mut buf, target)
            }
        })
    }
}

pub(crate) fn digits_of(mut mask: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as u8);
        mask &= mask - 1;
    }
    out
}

/// Route (a): test every rule instance `k*n_r <= |word|` on `word` directly.
///
/// This only sees instances that are complete inside the word.
pub fn admissible_by_rules(family: &ConstraintFamily, word: &[u8]) -> bool {
    let n = word.len() as u64;
    let mut buf = Vec::new();
    for rule in &family.rules {
        let last = *rule.scales.last().unwrap();
        let mut k = 1u64;
        while k * last <= n {
            buf.clear();
            buf.extend(rule.scales.iter().map(|&s| word[(k * s - 1) as usize]));
            if !rule.accepts(&buf) {
                return false;
            }
            k += 1;
        }
    }
    true
}

/// Route (b): split `word` into its coprime streams `word|_{iS}` and check
/// each against the compiled `Omega`.
pub fn admissible_by_streams(spec: &OmegaSpec, word: &[u8]) -> Result<bool> {
    let n = word.len() as u64;
    let table = spec.table();
    let basis = spec.basis();
    if table.complete_to() < n {
        return Err(Error::TableTooShort { needed: n, available: table.complete_to() });
    }
    let mut stream = Vec::new();
    for i in (1..=n).filter(|&i| basis.is_coprime(i)) {
        stream.clear();
        for &ell in table.elements() {
            match i.checked_mul(ell) {
                Some(pos) if pos <= n => stream.push(word[(pos - 1) as usize]),
                _ => break,
            }
        }
        if !spec.contains_prefix(&stream)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `word` is a prefix of a point of `X_Omega^(S)`.
///
/// Decided stream by stream against `spec`; for specs in
/// [`ExtensionMode::Local`] the direct rule check must agree, which is
/// asserted in debug builds.
pub fn is_admissible_word(spec: &OmegaSpec, word: &[u8]) -> Result<bool> {
    let by_streams = admissible_by_streams(spec, word)?;
    if spec.mode() == ExtensionMode::Local {
        debug_assert_eq!(by_streams, admissible_by_rules(spec.family(), word));
    }
    Ok(by_streams)
}

/// Parse a word written as digit characters, e.g. `"0110"`.
pub fn parse_word(text: &str, alphabet: u8) -> Result<Vec<u8>> {
    text.chars()
        .map(|c| {
            let d = c.to_digit(36).ok_or_else(|| Error::Invalid(format!("bad digit character {c:?}")))?;
            if d >= alphabet as u32 {
                return Err(Error::InvalidDigit { digit: d as u64, alphabet: alphabet as u64 });
            }
            Ok(d as u8)
        })
        .collect()
}

/// Inverse of [`parse_word`].
pub fn format_word(word: &[u8]) -> String {
    word.iter().map(|&d| std::char::from_digit(d as u32, 36).unwrap()).collect()
}

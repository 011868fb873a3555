//! JSON description of a basis plus constraint family.
//!
//! ```json
//! { "alphabet": 2, "primes": [2, 3],
//!   "rules": [ { "scales": [1, 2, 3], "allowed": "product_zero" } ] }
//! ```
//!
//! `allowed` is either `"product_zero"` or a list of digit tuples.

use serde::{Deserialize, Serialize};

use super::{Allowed, ConstraintFamily, Rule};
use crate::error::{Error, Result};
use crate::semigroup::PrimeBasis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub alphabet: u8,
    pub primes: Vec<u64>,
    pub rules: Vec<RuleFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub scales: Vec<u64>,
    pub allowed: AllowedFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AllowedFile {
    Keyword(Keyword),
    Tuples(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    ProductZero,
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SpecFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec file serializes")
    }

    /// Validate and split into basis and family.
    pub fn resolve(&self) -> Result<(PrimeBasis, ConstraintFamily)> {
        let basis = PrimeBasis::new(self.primes.clone())?;
        let rules = self
            .rules
            .iter()
            .map(|r| {
                let allowed = match &r.allowed {
                    AllowedFile::Keyword(Keyword::ProductZero) => Allowed::ProductZero,
                    AllowedFile::Tuples(t) => Allowed::Tuples(t.clone()),
                };
                Rule::new(r.scales.clone(), allowed)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((basis, ConstraintFamily::new(self.alphabet, rules)?))
    }

    pub fn from_parts(basis: &PrimeBasis, family: &ConstraintFamily) -> Self {
        Self {
            alphabet: family.alphabet(),
            primes: basis.primes().to_vec(),
            rules: family
                .rules()
                .iter()
                .map(|r| RuleFile {
                    scales: r.scales().to_vec(),
                    allowed: match r.allowed() {
                        Allowed::ProductZero => AllowedFile::Keyword(Keyword::ProductZero),
                        Allowed::Tuples(t) => AllowedFile::Tuples(t.clone()),
                    },
                })
                .collect(),
        }
    }
}

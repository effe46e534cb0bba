use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational};
use crate::tree::{Spin, TreeAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Spins range over `0..q`.
    #[default]
    FiniteAlphabet,
    /// Spins outside a configuration are aggregated into a per-vertex tail
    /// mass `G_x = sum_{t unused} g_{t,x}` supplied as data.
    ExplicitTail,
}

/// Multiplicative boundary fields `g_{t,x} = exp(h_{t,x}) > 0`.
///
/// Entries that are not listed fall back to `default` when one is set;
/// otherwise looking them up is an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableLiteral", into = "TableLiteral")]
pub struct FieldTable {
    mode: FieldMode,
    default: Option<BigRational>,
    entries: BTreeMap<(TreeAddress, Spin), BigRational>,
    tail: BTreeMap<TreeAddress, BigRational>,
}

impl FieldTable {
    pub fn new(mode: FieldMode, default: Option<BigRational>) -> Result<Self> {
        if let Some(d) = &default {
            check_positive(d, "default field")?;
        }
        Ok(Self {
            mode,
            default,
            entries: BTreeMap::new(),
            tail: BTreeMap::new(),
        })
    }

    /// Finite-alphabet table with `g ≡ 1` (zero field).
    pub fn uniform() -> Self {
        Self::new(FieldMode::FiniteAlphabet, Some(BigRational::one())).expect("one is positive")
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    pub fn default_value(&self) -> Option<&BigRational> {
        self.default.as_ref()
    }

    pub fn set(&mut self, spin: Spin, vertex: TreeAddress, g: BigRational) -> Result<()> {
        check_positive(&g, "field")?;
        self.entries.insert((vertex, spin), g);
        Ok(())
    }

    pub fn with(mut self, spin: Spin, vertex: TreeAddress, g: BigRational) -> Result<Self> {
        self.set(spin, vertex, g)?;
        Ok(self)
    }

    pub fn set_tail_mass(&mut self, vertex: TreeAddress, mass: BigRational) -> Result<()> {
        if mass.is_negative() {
            return Err(Error::InvalidParameter {
                name: "tail mass",
                reason: format!("must be non-negative, got {}", format_rational(&mass)),
            });
        }
        self.tail.insert(vertex, mass);
        Ok(())
    }

    pub fn get(&self, spin: Spin, vertex: &TreeAddress) -> Result<&BigRational> {
        self.entries
            .get(&(vertex.clone(), spin))
            .or(self.default.as_ref())
            .ok_or_else(|| Error::MissingField {
                spin,
                vertex: vertex.path().to_vec(),
            })
    }

    pub fn tail_mass(&self, vertex: &TreeAddress) -> Result<&BigRational> {
        self.tail
            .get(vertex)
            .ok_or_else(|| Error::MissingTailMass(vertex.path().to_vec()))
    }

    /// Explicit entries as `(vertex, spin, g)`.
    pub fn entries(&self) -> impl Iterator<Item = (&TreeAddress, Spin, &BigRational)> {
        self.entries.iter().map(|((v, s), g)| (v, *s, g))
    }
}

fn check_positive(g: &BigRational, name: &'static str) -> Result<()> {
    if !g.is_positive() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive, got {}", format_rational(g)),
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableLiteral {
    #[serde(default)]
    mode: FieldMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<String>,
    #[serde(default)]
    entries: Vec<EntryLiteral>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tail: Vec<TailLiteral>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryLiteral {
    spin: Spin,
    vertex: TreeAddress,
    g: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailLiteral {
    vertex: TreeAddress,
    mass: String,
}

impl TryFrom<TableLiteral> for FieldTable {
    type Error = Error;

    fn try_from(lit: TableLiteral) -> Result<Self> {
        let default = lit.default.as_deref().map(parse_rational).transpose()?;
        let mut table = FieldTable::new(lit.mode, default)?;
        for e in lit.entries {
            table.set(e.spin, e.vertex, parse_rational(&e.g)?)?;
        }
        for t in lit.tail {
            if lit.mode != FieldMode::ExplicitTail {
                return Err(Error::InvalidParameter {
                    name: "tail",
                    reason: "tail masses are only meaningful in explicit_tail mode".into(),
                });
            }
            table.set_tail_mass(t.vertex, parse_rational(&t.mass)?)?;
        }
        Ok(table)
    }
}

impl From<FieldTable> for TableLiteral {
    fn from(table: FieldTable) -> Self {
        TableLiteral {
            mode: table.mode,
            default: table.default.as_ref().map(format_rational),
            entries: table
                .entries
                .into_iter()
                .map(|((vertex, spin), g)| EntryLiteral {
                    spin,
                    vertex,
                    g: format_rational(&g),
                })
                .collect(),
            tail: table
                .tail
                .into_iter()
                .map(|(vertex, mass)| TailLiteral {
                    vertex,
                    mass: format_rational(&mass),
                })
                .collect(),
        }
    }
}

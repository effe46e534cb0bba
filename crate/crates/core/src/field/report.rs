use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{FieldMode, FieldPlacement};
use crate::exact::{decimal_string, format_rational, rational_to_f64, MutationRate};
use crate::tree::{GrowthStep, Spin, TreeAddress};

/// A value as it crosses a report boundary: the exact `"p/q"` form when one
/// exists, always a decimal string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Number {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub decimal: String,
}

impl Number {
    pub fn exact(value: &BigRational) -> Self {
        Self {
            exact: Some(format_rational(value)),
            decimal: decimal_string(rational_to_f64(value)),
        }
    }

    pub fn real(value: f64) -> Self {
        Self {
            exact: None,
            decimal: decimal_string(value),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.decimal.parse().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub k: usize,
    pub base: Vec<TreeAddress>,
    pub added: TreeAddress,
    pub anchor: TreeAddress,
}

impl From<&GrowthStep> for StepSummary {
    fn from(step: &GrowthStep) -> Self {
        Self {
            k: step.base().k(),
            base: step.base().vertices().cloned().collect(),
            added: step.added().clone(),
            anchor: step.anchor().clone(),
        }
    }
}

/// One base configuration of a marginal check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationResidual {
    /// Spins on the base region, in vertex order.
    pub spins: Vec<Spin>,
    pub p_lambda: Number,
    /// `sum_s P_Δ(σ_Λ ∨ s)`.
    pub marginal: Number,
    /// `marginal - p_lambda`.
    pub residual: Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Number>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyVerdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverVerdict {
    Converged,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub verdict: SolverVerdict,
    pub iterations: usize,
    /// `(max rhs - min rhs) / max rhs` at the returned table.
    pub spread: f64,
    pub tolerance: f64,
    /// `g_{s,v}` for `s = 0..q`.
    pub fields_at_added: Vec<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub step: StepSummary,
    pub theta: MutationRate,
    pub beta: f64,
    pub q: Spin,
    pub mode: FieldMode,
    pub placement: FieldPlacement,
    /// `"exact"` or `"real"`.
    pub arithmetic: String,
    pub entries: Vec<ConfigurationResidual>,
    pub max_abs_residual: Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_min: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_max: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_relative_spread: Option<f64>,
    /// `Z_Δ / Z_Λ` from enumeration.
    pub z_ratio_enumerated: Number,
    /// `(|Λ| + θ) / (|Λ| + 1)`.
    pub z_ratio_closed_form: Number,
    pub z_ratios_agree: bool,
    pub tolerance: f64,
    pub verdict: ConsistencyVerdict,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
}

impl ConsistencyReport {
    pub fn max_residual(&self) -> f64 {
        self.max_abs_residual.to_f64()
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == ConsistencyVerdict::Consistent
    }
}

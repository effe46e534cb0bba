//! Boundary-field finite-dimensional distributions on tree regions.
//!
//! The unnormalized weight of `σ_Λ` is
//! `exp(-β H_Λ(σ_Λ)) * prod_{x in B} g_{σ(x), x}`, where `g = exp(h)` is a
//! multiplicative field table and `B` is a set of vertices of `Λ`. With
//! `β = -1` and `g ≡ 1` this is the Ewens weight.
//!
//! For a growth step `Δ = Λ ∪ {v}` anchored at `u` the field of `Λ` is read
//! at `u` and the field of `Δ` at `v` ([`FieldPlacement::GrowthPair`]). Under
//! that placement `sum_s W_Δ(σ ∨ s) / W_Λ(σ)` equals [`consistency_rhs`], and
//! the family is consistent across the step exactly when that quantity does
//! not depend on `σ`.
//!
//! Every computation is generic over [`Arith`]: exact rationals when `β` is
//! an integer, doubles otherwise.

mod arith;
mod report;
mod solver;
mod table;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::MutationRate;
use crate::hamiltonian::{ewens_weight, increment_factor, increment_from_occupancy, occupancy};
use crate::tree::{
    configurations, inner_boundary, GrowthStep, Spin, SpinConfiguration, TreeAddress, TreeRegion,
};

pub use arith::Arith;
pub use report::{
    ConfigurationResidual, ConsistencyReport, ConsistencyVerdict, Number, SolverSummary,
    SolverVerdict, StepSummary,
};
pub use solver::{solve_boundary_field, SolverOptions};
pub use table::{FieldMode, FieldTable};

/// Default cap on the number of configurations a single enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Residual tolerance used for the consistency verdict.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

/// Signed inverse temperature. `β = -1` recovers the Ewens law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be finite, got {beta}"),
            });
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `Some(β)` when `β` is an integer small enough for exact powers.
    pub fn integral(self) -> Option<i32> {
        (self.0.fract() == 0.0 && self.0.abs() <= 64.0).then_some(self.0 as i32)
    }
}

impl TryFrom<f64> for InverseTemperature {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

impl From<InverseTemperature> for f64 {
    fn from(beta: InverseTemperature) -> f64 {
        beta.0
    }
}

/// Where the boundary-field term of each region is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldPlacement {
    /// `Λ` reads its field at the anchor `u`, `Δ` at the added vertex `v`.
    #[default]
    GrowthPair,
    /// Each region reads its field on its own inner boundary.
    InnerBoundary,
}

impl FieldPlacement {
    /// Field vertices for the base and extended regions of `step`.
    pub fn vertex_sets(self, step: &GrowthStep) -> (BTreeSet<TreeAddress>, BTreeSet<TreeAddress>) {
        match self {
            FieldPlacement::GrowthPair => (
                BTreeSet::from([step.anchor().clone()]),
                BTreeSet::from([step.added().clone()]),
            ),
            FieldPlacement::InnerBoundary => (
                inner_boundary(step.base()),
                inner_boundary(&step.extended()),
            ),
        }
    }
}

/// Parameters shared by every field computation.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub theta: MutationRate,
    pub beta: InverseTemperature,
    pub fields: FieldTable,
}

impl FieldModel {
    pub fn new(theta: MutationRate, beta: InverseTemperature, fields: FieldTable) -> Self {
        Self {
            theta,
            beta,
            fields,
        }
    }

    /// Whether the exact rational path applies.
    pub fn is_exact(&self) -> bool {
        self.beta.integral().is_some()
    }
}

/// `exp(-β H_Λ(σ)) * prod_{x in boundary} g_{σ(x), x}`.
pub fn field_weight<S: Arith>(
    config: &SpinConfiguration,
    model: &FieldModel,
    boundary: &BTreeSet<TreeAddress>,
) -> Result<S> {
    let mut w = S::energy_factor(&ewens_weight(config, &model.theta), model.beta)?;
    for x in boundary {
        let s = config
            .spin(x)
            .ok_or_else(|| Error::MissingSpin(x.path().to_vec()))?;
        w = w * S::from_rational(model.fields.get(s, x)?);
    }
    Ok(w)
}

pub fn field_weight_exact(
    config: &SpinConfiguration,
    model: &FieldModel,
    boundary: &BTreeSet<TreeAddress>,
) -> Result<BigRational> {
    field_weight(config, model, boundary)
}

pub fn field_weight_real(
    config: &SpinConfiguration,
    model: &FieldModel,
    boundary: &BTreeSet<TreeAddress>,
) -> Result<f64> {
    field_weight(config, model, boundary)
}

pub(crate) fn check_budget(region_size: usize, q: Spin, budget: u128) -> Result<u128> {
    let required = (q as u128)
        .checked_pow(region_size as u32)
        .unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::ResourceBound {
            what: "configuration enumeration",
            required,
            limit: budget,
        });
    }
    Ok(required)
}

fn require_finite_alphabet(model: &FieldModel, what: &str) -> Result<()> {
    if model.fields.mode() != FieldMode::FiniteAlphabet {
        return Err(Error::InvalidParameter {
            name: "fields",
            reason: format!(
                "{what} enumerates a finite alphabet; explicit-tail tables are not enumerable"
            ),
        });
    }
    Ok(())
}

/// `Z_Λ = sum over all q^{|Λ|} configurations of the field weight`.
pub fn region_partition_function<S: Arith>(
    region: &TreeRegion,
    model: &FieldModel,
    q: Spin,
    boundary: &BTreeSet<TreeAddress>,
    budget: u128,
) -> Result<S> {
    require_finite_alphabet(model, "the partition function")?;
    if q == 0 {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: "alphabet must be non-empty".into(),
        });
    }
    check_budget(region.len(), q, budget)?;
    configurations(region, q).try_fold(S::zero(), |acc, c| {
        Ok(acc + field_weight::<S>(&c, model, boundary)?)
    })
}

/// `Z_{n+1}(θ) / Z_n(θ) = (n + θ) / (n + 1)`.
pub fn esf_ratio(n: usize, theta: &MutationRate) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::EmptyDomain("normalizer ratio needs |Λ| >= 1"));
    }
    let n = BigRational::from_integer(BigInt::from(n));
    Ok((&n + theta.value()) / (n + BigRational::from_integer(1.into())))
}

/// Source of the `Z_Λ / Z_Δ` factor in [`multiplicative_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizerSource {
    /// `(|Λ| + 1) / (|Λ| + θ)`.
    EsfClosedForm,
    /// Enumerated partition functions with the growth-pair field placement.
    Enumerated { q: Spin, budget: u128 },
}

/// `P_Δ(σ_Δ) / P_Λ(σ_Λ) = (Z_Λ/Z_Δ) exp(-β H_{Δ,Λ}) g_{σ(v),v} / g_{σ(u),u}`.
pub fn multiplicative_kernel<S: Arith>(
    step: &GrowthStep,
    sigma_delta: &SpinConfiguration,
    model: &FieldModel,
    normalizers: NormalizerSource,
) -> Result<S> {
    step.validate()?;
    if sigma_delta.region() != step.extended() {
        return Err(Error::Structural(
            "configuration is not defined on the extended region".into(),
        ));
    }
    let sigma_lambda = sigma_delta.restrict(step.base());
    let s_v = sigma_delta.spin(step.added()).expect("checked above");
    let s_u = sigma_lambda
        .spin(step.anchor())
        .expect("anchor lies in base");
    let increment = increment_factor(&sigma_lambda, s_v, &model.theta);
    let z_lambda_over_delta = match normalizers {
        NormalizerSource::EsfClosedForm => {
            let ratio = esf_ratio(step.base().len(), &model.theta)?;
            S::from_rational(&(BigRational::from_integer(1.into()) / ratio))
        }
        NormalizerSource::Enumerated { q, budget } => {
            let (b_lambda, b_delta) = FieldPlacement::GrowthPair.vertex_sets(step);
            let z_lambda: S = region_partition_function(step.base(), model, q, &b_lambda, budget)?;
            let z_delta: S =
                region_partition_function(&step.extended(), model, q, &b_delta, budget)?;
            z_lambda / z_delta
        }
    };
    Ok(z_lambda_over_delta
        * S::energy_factor(&increment.factor, model.beta)?
        * S::from_rational(model.fields.get(s_v, step.added())?)
        / S::from_rational(model.fields.get(s_u, step.anchor())?))
}

/// Right side of the sufficient consistency condition for one base
/// configuration:
///
/// `sum_{s fresh} (θ/(b_1+1))^{-β} g_{s,v} / g_{σ(u),u}
///  + sum_{s used} (i0 b_{i0} / ((i0+1)(b_{i0+1}+1)))^{-β} g_{s,v} / g_{σ(u),u}`
///
/// with `i0` the number of occurrences of `s` in `σ_Λ`. In finite-alphabet
/// mode the fresh sum runs over the unused spins of `0..q`; in explicit-tail
/// mode it is `(θ/(b_1+1))^{-β} G_v / g_{σ(u),u}` and `q` is ignored.
pub fn consistency_rhs<S: Arith>(
    sigma_lambda: &SpinConfiguration,
    step: &GrowthStep,
    model: &FieldModel,
    q: Spin,
) -> Result<S> {
    step.validate()?;
    if &sigma_lambda.region() != step.base() {
        return Err(Error::Structural(
            "configuration is not defined on the base region".into(),
        ));
    }
    let s_u = sigma_lambda
        .spin(step.anchor())
        .ok_or_else(|| Error::MissingSpin(step.anchor().path().to_vec()))?;
    let g_u = S::from_rational(model.fields.get(s_u, step.anchor())?);
    let b = occupancy(sigma_lambda);
    let used: BTreeSet<Spin> = sigma_lambda.spins().collect();
    let v = step.added();

    let mut repeat_sum = S::zero();
    for &s in &used {
        let i0 = sigma_lambda.spins().filter(|&t| t == s).count();
        let inc = increment_from_occupancy(&b, i0, &model.theta);
        repeat_sum = repeat_sum
            + S::energy_factor(&inc.factor, model.beta)?
                * S::from_rational(model.fields.get(s, v)?);
    }

    let fresh = S::energy_factor(
        &increment_from_occupancy(&b, 0, &model.theta).factor,
        model.beta,
    )?;
    let fresh_mass = match model.fields.mode() {
        FieldMode::FiniteAlphabet => {
            let mut mass = S::zero();
            for s in (0..q).filter(|s| !used.contains(s)) {
                mass = mass + S::from_rational(model.fields.get(s, v)?);
            }
            mass
        }
        FieldMode::ExplicitTail => S::from_rational(model.fields.tail_mass(v)?),
    };
    Ok((fresh * fresh_mass + repeat_sum) / g_u)
}

/// Enumerates every `σ_Λ` over `0..q` and compares `sum_s P_Δ(σ_Λ ∨ s)`
/// with `P_Λ(σ_Λ)`, each normalized by its own enumerated partition
/// function. Uses exact arithmetic when `β` is an integer.
pub fn marginal_check(
    step: &GrowthStep,
    model: &FieldModel,
    q: Spin,
    placement: FieldPlacement,
    budget: u128,
) -> Result<ConsistencyReport> {
    if model.is_exact() {
        marginal_check_with::<BigRational>(step, model, q, placement, budget)
    } else {
        marginal_check_with::<f64>(step, model, q, placement, budget)
    }
}

pub fn marginal_check_with<S: Arith>(
    step: &GrowthStep,
    model: &FieldModel,
    q: Spin,
    placement: FieldPlacement,
    budget: u128,
) -> Result<ConsistencyReport> {
    step.validate()?;
    require_finite_alphabet(model, "the marginal check")?;
    if q == 0 {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: "alphabet must be non-empty".into(),
        });
    }
    let delta = step.extended();
    check_budget(delta.len(), q, budget)?;
    let (b_lambda, b_delta) = placement.vertex_sets(step);

    let lambda_weights: Vec<(SpinConfiguration, S)> = configurations(step.base(), q)
        .map(|c| {
            let w = field_weight::<S>(&c, model, &b_lambda)?;
            Ok((c, w))
        })
        .collect::<Result<_>>()?;
    let z_lambda = lambda_weights
        .iter()
        .fold(S::zero(), |acc, (_, w)| acc + w.clone());

    let mut marginal_weights = Vec::with_capacity(lambda_weights.len());
    let mut z_delta = S::zero();
    for (sigma, _) in &lambda_weights {
        let mut sum = S::zero();
        for s in 0..q {
            let extended = sigma.extend(step.added().clone(), s)?;
            sum = sum + field_weight::<S>(&extended, model, &b_delta)?;
        }
        z_delta = z_delta + sum.clone();
        marginal_weights.push(sum);
    }

    let mut entries = Vec::with_capacity(lambda_weights.len());
    let mut max_abs = S::zero();
    let mut rhs_values = Vec::new();
    for ((sigma, w), m) in lambda_weights.iter().zip(marginal_weights) {
        let p_lambda = w.clone() / z_lambda.clone();
        let marginal = m / z_delta.clone();
        let residual = marginal.clone() - p_lambda.clone();
        let abs = residual.clone().abs();
        if abs > max_abs {
            max_abs = abs;
        }
        let rhs = match placement {
            FieldPlacement::GrowthPair => {
                let r = consistency_rhs::<S>(sigma, step, model, q)?;
                rhs_values.push(r.to_f64());
                Some(r.to_number())
            }
            FieldPlacement::InnerBoundary => None,
        };
        entries.push(ConfigurationResidual {
            spins: sigma.spins().collect(),
            p_lambda: p_lambda.to_number(),
            marginal: marginal.to_number(),
            residual: residual.to_number(),
            rhs,
        });
    }

    let z_ratio_enumerated = z_delta / z_lambda;
    let z_ratio_esf = esf_ratio(step.base().len(), &model.theta)?;
    let agree = (z_ratio_enumerated.to_f64() - crate::exact::rational_to_f64(&z_ratio_esf)).abs()
        <= 1e-12 * z_ratio_enumerated.to_f64().abs().max(1.0);
    let (rhs_min, rhs_max, rhs_spread) = spread_of(&rhs_values);
    let max_abs_f = max_abs.to_f64();
    let notes = vec![
        "repeat-spin index i0 is the number of occurrences of the added spin in the base configuration".to_string(),
        format!("field placement: {placement:?}; outer boundary vertices carry no spin and are never evaluated"),
    ];

    Ok(ConsistencyReport {
        step: StepSummary::from(step),
        theta: model.theta.clone(),
        beta: model.beta.value(),
        q,
        mode: model.fields.mode(),
        placement,
        arithmetic: S::NAME.to_string(),
        entries,
        max_abs_residual: max_abs.to_number(),
        rhs_min: rhs_min.map(Number::real),
        rhs_max: rhs_max.map(Number::real),
        rhs_relative_spread: rhs_spread,
        z_ratio_enumerated: z_ratio_enumerated.to_number(),
        z_ratio_closed_form: Number::exact(&z_ratio_esf),
        z_ratios_agree: agree,
        tolerance: CONSISTENCY_TOLERANCE,
        verdict: if max_abs_f <= CONSISTENCY_TOLERANCE {
            ConsistencyVerdict::Consistent
        } else {
            ConsistencyVerdict::Inconsistent
        },
        notes,
        solver: None,
    })
}

/// `(min, max, (max - min) / max)` of a list of positive values.
pub(crate) fn spread_of(values: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    (Some(min), Some(max), Some(spread))
}

#[cfg(test)]
mod tests;

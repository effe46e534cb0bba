//! Occupancy statistics, exact Ewens weights `exp(H)`, one-vertex increments
//! and the divergence diagnostic for the Ewens potential.
//!
//! Hamiltonians are carried multiplicatively: [`ewens_weight`] returns
//! `exp(H_Λ)` as an exact rational and [`hamiltonian`] is its logarithm.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exact::{ln_rational, MutationRate};
use crate::partition::{esf_normalizer, esf_probability, multiplicity_weight, AlleleCounts};
use crate::tree::{Spin, SpinConfiguration};

/// `b_j` = number of distinct spin values occurring exactly `j` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Occupancy {
    counts: Vec<u64>,
}

impl Occupancy {
    pub fn from_spins(spins: impl IntoIterator<Item = Spin>) -> Self {
        let mut freq: BTreeMap<Spin, usize> = BTreeMap::new();
        let mut size = 0;
        for s in spins {
            *freq.entry(s).or_default() += 1;
            size += 1;
        }
        let mut counts = vec![0u64; size];
        for &m in freq.values() {
            counts[m - 1] += 1;
        }
        Self { counts }
    }

    /// `|Λ|`.
    pub fn size(&self) -> usize {
        self.counts.len()
    }

    /// `b_j`, zero for `j == 0` or `j > |Λ|`.
    pub fn get(&self, j: usize) -> u64 {
        if j == 0 {
            0
        } else {
            self.counts.get(j - 1).copied().unwrap_or(0)
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// The same vector viewed as a partition of `|Λ|`; `None` for the empty region.
    pub fn as_partition(&self) -> Option<AlleleCounts> {
        AlleleCounts::new(self.counts.clone()).ok()
    }
}

pub fn occupancy(config: &SpinConfiguration) -> Occupancy {
    Occupancy::from_spins(config.spins())
}

/// `exp(H_Λ(σ)) = prod_j (θ/j)^{b_j} / b_j!`; equals 1 on the empty region.
pub fn ewens_weight(config: &SpinConfiguration, theta: &MutationRate) -> BigRational {
    multiplicity_weight(occupancy(config).counts(), theta)
}

/// `H_Λ(σ)` as a double.
pub fn hamiltonian(config: &SpinConfiguration, theta: &MutationRate) -> f64 {
    ln_rational(&ewens_weight(config, theta))
}

/// `exp(H_Λ(σ)) / Z_{|Λ|}(θ)`.
pub fn config_probability(config: &SpinConfiguration, theta: &MutationRate) -> Result<BigRational> {
    if config.is_empty() {
        return Err(Error::EmptyDomain(
            "configuration probability needs a non-empty region",
        ));
    }
    let p = ewens_weight(config, theta) / esf_normalizer(config.len(), theta)?;
    debug_assert_eq!(
        Some(&p),
        occupancy(config)
            .as_partition()
            .and_then(|a| esf_probability(&a, theta).ok())
            .as_ref()
            .map(|e| e.value())
    );
    Ok(p)
}

/// Number of vertices of `config` carrying spin `s`.
pub fn multiplicity(config: &SpinConfiguration, s: Spin) -> usize {
    config.spins().filter(|&t| t == s).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum IncrementCase {
    /// The added spin does not occur in the base configuration.
    Fresh,
    /// The added spin already occurs `i0` times.
    Repeat { i0: usize },
}

/// `exp(H_Δ - H_Λ)` for a one-vertex extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementFactor {
    #[serde(with = "crate::exact::rational_string")]
    pub factor: BigRational,
    #[serde(flatten)]
    pub case: IncrementCase,
}

/// Ratio `ewens_weight(σ ∨ s) / ewens_weight(σ)` in closed form:
/// `θ / (b_1 + 1)` for a fresh spin, and
/// `i0 b_{i0} / ((i0 + 1)(b_{i0+1} + 1))` when `s` already occurs `i0` times.
pub fn increment_factor(
    config: &SpinConfiguration,
    s: Spin,
    theta: &MutationRate,
) -> IncrementFactor {
    increment_from_occupancy(&occupancy(config), multiplicity(config, s), theta)
}

pub(crate) fn increment_from_occupancy(
    b: &Occupancy,
    i0: usize,
    theta: &MutationRate,
) -> IncrementFactor {
    let int = |x: u64| BigRational::from_integer(BigInt::from(x));
    if i0 == 0 {
        IncrementFactor {
            factor: theta.value() / int(b.get(1) + 1),
            case: IncrementCase::Fresh,
        }
    } else {
        let i = i0 as u64;
        IncrementFactor {
            factor: int(i * b.get(i0)) / int((i + 1) * (b.get(i0 + 1) + 1)),
            case: IncrementCase::Repeat { i0 },
        }
    }
}

/// `t_n = |n ln θ - ln n!|`, the sup-norm of the Ewens potential on a region
/// of `n` vertices (attained at all-distinct spins).
pub fn potential_sup_term(n: usize, theta: &MutationRate) -> f64 {
    (n as f64 * theta.ln() - ln_factorial(n)).abs()
}

pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Smallest `n > θ` with `n (ln(n/θ) - 1) > bound`. Since
/// `ln n! >= n ln n - n`, `t_n > bound` is guaranteed there.
pub fn stirling_crossing_index(theta: &MutationRate, bound: f64) -> u64 {
    let th = theta.to_f64();
    let lower = |n: u64| {
        let x = n as f64;
        if x <= th {
            f64::NEG_INFINITY
        } else {
            x * ((x / th).ln() - 1.0)
        }
    };
    // the lower bound is increasing for n >= θ, so bracket then bisect
    let mut lo = th.floor().max(0.0) as u64;
    let mut hi = lo.max(1);
    while lower(hi) <= bound {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            return hi;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if lower(mid) > bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityVerdict {
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTerm {
    pub n: u64,
    pub t_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub theta: MutationRate,
    pub bound: f64,
    pub n_max: u64,
    /// `t_n` at `n = 1, 2, 4, 8, ...` up to the last scanned index, plus the crossing.
    pub probes: Vec<ProbeTerm>,
    pub first_crossing: Option<ProbeTerm>,
    pub stirling_index: u64,
    pub verdict: SummabilityVerdict,
}

/// Scans `n = 1..=n_max` for the first `t_n > bound`.
pub fn summability_scan(theta: &MutationRate, bound: f64, n_max: u64) -> Result<SummabilityReport> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "bound",
            reason: format!("must be positive and finite, got {bound}"),
        });
    }
    let mut probes = Vec::new();
    let mut first_crossing = None;
    let mut next_probe = 1u64;
    let mut last = 0u64;
    for n in 1..=n_max {
        let t_n = potential_sup_term(n as usize, theta);
        last = n;
        if n == next_probe {
            probes.push(ProbeTerm { n, t_n });
            next_probe = next_probe.saturating_mul(2);
        }
        if t_n > bound {
            first_crossing = Some(ProbeTerm { n, t_n });
            break;
        }
    }
    if let Some(c) = &first_crossing {
        if probes.last().map(|p| p.n) != Some(c.n) {
            probes.push(c.clone());
        }
    } else if last > 0 && probes.last().map(|p| p.n) != Some(last) {
        probes.push(ProbeTerm {
            n: last,
            t_n: potential_sup_term(last as usize, theta),
        });
    }
    let verdict = if first_crossing.is_some() {
        SummabilityVerdict::Divergent
    } else {
        SummabilityVerdict::Inconclusive
    };
    Ok(SummabilityReport {
        theta: theta.clone(),
        bound,
        n_max,
        probes,
        first_crossing,
        stirling_index: stirling_crossing_index(theta, bound),
        verdict,
    })
}

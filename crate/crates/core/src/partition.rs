//! Integer partitions as allele-count vectors, the Ewens sampling formula,
//! its normalizer, a Chinese restaurant process sampler and a brute-force
//! permutation cycle-type oracle.
//!
//! Partitions are always written in multiplicity form `(a_1, ..., a_n)`,
//! where `a_j` counts the blocks of size `j`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{factorial, MutationRate};

/// Largest `n` accepted by [`permutation_cycle_oracle`].
pub const PERMUTATION_ORACLE_MAX_N: usize = 8;

/// Multiplicity vector `(a_1, ..., a_n)` with `sum j * a_j = n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct AlleleCounts {
    counts: Vec<u64>,
}

impl AlleleCounts {
    /// `counts[j - 1]` is `a_j`; the sample size is `counts.len()`.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyDomain("allele counts need n >= 1"));
        }
        let n = counts.len();
        let weighted_sum = weighted_sum(&counts);
        if weighted_sum != n as u128 {
            return Err(Error::Constraint { n, weighted_sum });
        }
        Ok(Self { counts })
    }

    /// Multiplicity vector of a list of block sizes, e.g. `[2, 1]` gives `(1, 1, 0)`.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut counts = vec![0u64; n];
        for &size in sizes {
            if size == 0 {
                return Err(Error::InvalidParameter {
                    name: "block size",
                    reason: "blocks must be non-empty".into(),
                });
            }
            counts[size - 1] += 1;
        }
        Self::new(counts)
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `a_j` for `j >= 1`; zero outside `1..=n`.
    pub fn get(&self, j: usize) -> u64 {
        if j == 0 {
            0
        } else {
            self.counts.get(j - 1).copied().unwrap_or(0)
        }
    }

    /// Number of blocks (distinct alleles).
    pub fn blocks(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Block sizes in non-increasing order.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for j in (1..=self.n()).rev() {
            for _ in 0..self.get(j) {
                sizes.push(j);
            }
        }
        sizes
    }
}

fn weighted_sum(counts: &[u64]) -> u128 {
    counts
        .iter()
        .enumerate()
        .map(|(i, &a)| (i as u128 + 1) * a as u128)
        .sum()
}

impl TryFrom<Vec<u64>> for AlleleCounts {
    type Error = Error;

    fn try_from(counts: Vec<u64>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<AlleleCounts> for Vec<u64> {
    fn from(a: AlleleCounts) -> Vec<u64> {
        a.counts
    }
}

impl fmt::Display for AlleleCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Exact ESF probability, always in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EsfProbability(BigRational);

impl EsfProbability {
    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }
}

/// Every partition of `n`, each once.
///
/// Order: descending lexicographic on `(a_n, ..., a_1)`, which is the same
/// as listing block-size sequences `[n], [n-1, 1], [n-2, 2], ...,
/// [1, ..., 1]` in reverse lexicographic order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<AlleleCounts>> {
    if n == 0 {
        return Err(Error::EmptyDomain("partitions need n >= 1"));
    }
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(n);
    push_partitions(n, n, &mut parts, &mut out);
    Ok(out)
}

fn push_partitions(
    remaining: usize,
    max_part: usize,
    parts: &mut Vec<usize>,
    out: &mut Vec<AlleleCounts>,
) {
    if remaining == 0 {
        out.push(AlleleCounts::from_block_sizes(parts).expect("generated partition is valid"));
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        parts.push(part);
        push_partitions(remaining - part, part, parts, out);
        parts.pop();
    }
}

/// Rising factorial `θ (θ + 1) ... (θ + n - 1)`.
pub fn rising_factorial(theta: &MutationRate, n: usize) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, i| {
        acc * (theta.value() + BigRational::from_integer(BigInt::from(i)))
    })
}

/// `Z_n(θ) = θ (θ + 1) ... (θ + n - 1) / n!`.
pub fn esf_normalizer(n: usize, theta: &MutationRate) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::EmptyDomain("normalizer needs n >= 1"));
    }
    Ok(rising_factorial(theta, n) / BigRational::from_integer(factorial(n as u64)))
}

/// Unnormalized ESF weight `prod_j (θ / j)^{a_j} / a_j!` of a multiplicity
/// vector. The vector does not need to satisfy the partition constraint.
pub(crate) fn multiplicity_weight(counts: &[u64], theta: &MutationRate) -> BigRational {
    let mut weight = BigRational::one();
    for (idx, &a) in counts.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let ratio = theta.value() / BigRational::from_integer(BigInt::from(idx + 1));
        weight *= num_traits::pow(ratio, a as usize);
        weight /= BigRational::from_integer(factorial(a));
    }
    weight
}

pub fn esf_probability(a: &AlleleCounts, theta: &MutationRate) -> Result<EsfProbability> {
    // Re-validate: deserialized values pass through `new`, but keep the
    // guarantee local.
    let checked = AlleleCounts::new(a.counts.clone())?;
    let z = esf_normalizer(checked.n(), theta)?;
    Ok(EsfProbability(
        multiplicity_weight(&checked.counts, theta) / z,
    ))
}

/// Exact ESF law over all partitions of `n`, in enumeration order.
pub fn esf_distribution(
    n: usize,
    theta: &MutationRate,
) -> Result<Vec<(AlleleCounts, BigRational)>> {
    enumerate_partitions(n)?
        .into_iter()
        .map(|a| {
            let p = esf_probability(&a, theta)?.into_inner();
            Ok((a, p))
        })
        .collect()
}

/// Sequential table-assignment sampler. Owns its RNG; the stream is fully
/// determined by the seed.
#[derive(Debug, Clone)]
pub struct CrpSampler {
    n: usize,
    theta: f64,
    rng: ChaCha8Rng,
}

impl CrpSampler {
    pub fn new(n: usize, theta: &MutationRate, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain("sampling needs n >= 1"));
        }
        Ok(Self {
            n,
            theta: theta.to_f64(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One draw: table label per customer, plus the table-size multiplicities.
    pub fn draw(&mut self) -> (Vec<usize>, AlleleCounts) {
        let mut labels = Vec::with_capacity(self.n);
        let mut table_sizes: Vec<usize> = Vec::new();
        for i in 0..self.n {
            // customer i + 1 arrives with i already seated
            let u: f64 = self.rng.random::<f64>() * (i as f64 + self.theta);
            let mut acc = 0.0;
            let mut chosen = None;
            for (t, &size) in table_sizes.iter().enumerate() {
                acc += size as f64;
                if u < acc {
                    chosen = Some(t);
                    break;
                }
            }
            let table = match chosen {
                Some(t) => t,
                None => {
                    table_sizes.push(0);
                    table_sizes.len() - 1
                }
            };
            table_sizes[table] += 1;
            labels.push(table);
        }
        let counts = AlleleCounts::from_block_sizes(&table_sizes).expect("table sizes sum to n");
        (labels, counts)
    }
}

/// Single CRP draw for `seed`.
pub fn crp_sample(n: usize, theta: &MutationRate, seed: u64) -> Result<(Vec<usize>, AlleleCounts)> {
    Ok(CrpSampler::new(n, theta, seed)?.draw())
}

/// Cycle-type law of a uniform permutation of `n` points, by enumerating
/// all `n!` permutations. Limited to `n <= 8`.
pub fn permutation_cycle_oracle(n: usize) -> Result<BTreeMap<AlleleCounts, BigRational>> {
    if n == 0 {
        return Err(Error::EmptyDomain("permutations need n >= 1"));
    }
    if n > PERMUTATION_ORACLE_MAX_N {
        return Err(Error::ResourceBound {
            what: "permutation enumeration (n)",
            required: n as u128,
            limit: PERMUTATION_ORACLE_MAX_N as u128,
        });
    }
    let mut tally: BTreeMap<AlleleCounts, u64> = BTreeMap::new();
    let mut perm: Vec<usize> = (0..n).collect();
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    *tally.entry(cycle_type(&perm)).or_default() += 1;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            *tally.entry(cycle_type(&perm)).or_default() += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let total = BigRational::from_integer(factorial(n as u64));
    Ok(tally
        .into_iter()
        .map(|(a, count)| (a, BigRational::from_integer(count.into()) / &total))
        .collect())
}

fn cycle_type(perm: &[usize]) -> AlleleCounts {
    let mut seen = vec![false; perm.len()];
    let mut lengths = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = perm[x];
            len += 1;
        }
        lengths.push(len);
    }
    AlleleCounts::from_block_sizes(&lengths).expect("cycle lengths sum to n")
}

/// Pearson chi-square goodness of fit of observed partition counts against
/// exact probabilities. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(
    observed: &BTreeMap<AlleleCounts, u64>,
    expected: &[(AlleleCounts, BigRational)],
) -> (f64, usize, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let total: u64 = observed.values().sum();
    let mut stat = 0.0;
    for (a, p) in expected {
        let e = crate::exact::rational_to_f64(p) * total as f64;
        let o = observed.get(a).copied().unwrap_or(0) as f64;
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = expected.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(stat)
    };
    (stat, df, p_value)
}

/// Tally `count` CRP draws from one seeded stream.
pub fn crp_tally(
    n: usize,
    theta: &MutationRate,
    count: usize,
    seed: u64,
) -> Result<BTreeMap<AlleleCounts, u64>> {
    let mut sampler = CrpSampler::new(n, theta, seed)?;
    let mut tally = BTreeMap::new();
    for _ in 0..count {
        let (_, a) = sampler.draw();
        *tally.entry(a).or_insert(0u64) += 1;
    }
    Ok(tally)
}

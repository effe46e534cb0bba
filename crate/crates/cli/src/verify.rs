//! Invariant suites run by `ewens-tree verify`.
//!
//! Each suite sweeps a finite domain, compares the library against an
//! independent computation and records the largest deviation it saw. The
//! `quick` level caps regions at three vertices, alphabets at three spins and
//! partitions at `n = 6`; `full` uses the larger bounds listed per suite.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use ewens_tree_core::exact::rational_to_f64;
use ewens_tree_core::field::{
    consistency_rhs, esf_ratio, field_weight, marginal_check, multiplicative_kernel,
    region_partition_function, solve_boundary_field, FieldMode, FieldModel, FieldPlacement,
    FieldTable, InverseTemperature, NormalizerSource, SolverOptions, SolverVerdict, DEFAULT_BUDGET,
};
use ewens_tree_core::hamiltonian::{
    ewens_weight, increment_factor, occupancy, potential_sup_term, stirling_crossing_index,
    summability_scan, IncrementCase, IncrementFactor,
};
use ewens_tree_core::partition::{
    chi_square_gof, crp_tally, esf_distribution, esf_normalizer, permutation_cycle_oracle,
};
use ewens_tree_core::tree::{
    ball_size, build_ball, configurations, connected_subregions, growth_step, outer_boundary,
    GrowthStep, Spin, SpinConfiguration, TreeAddress, TreeRegion,
};
use ewens_tree_core::{MutationRate, Result};

/// Significance level of the sampler goodness-of-fit checks.
pub const SAMPLER_ALPHA: f64 = 0.001;

/// Relative tolerance of the `ln 100!` spot value.
pub const SPOT_TOLERANCE: f64 = 1e-6;

/// Tolerance for comparisons made in floating point.
pub const REAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

/// Weight increment under test. The verifier checks whatever function it is
/// handed against an independent computation.
pub type IncrementFn = fn(&SpinConfiguration, Spin, &MutationRate) -> IncrementFactor;

#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    pub increment: IncrementFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            increment: increment_factor,
        }
    }
}

/// Deliberately broken increment: the repeat-spin fraction is inverted.
pub fn inverted_repeat_increment(
    config: &SpinConfiguration,
    s: Spin,
    theta: &MutationRate,
) -> IncrementFactor {
    let mut inc = increment_factor(config, s, theta);
    if matches!(inc.case, IncrementCase::Repeat { .. }) {
        inc.factor = inc.factor.recip();
    }
    inc
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub suite: &'static str,
    pub check: &'static str,
    pub identity: &'static str,
    pub domain: String,
    pub cases: u64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub level: Level,
    pub records: Vec<CheckRecord>,
    pub failed_suites: Vec<&'static str>,
    pub overall: Verdict,
    pub duration_seconds: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.overall == Verdict::Pass
    }
}

struct Bounds {
    esf_n: usize,
    oracle_n: usize,
    recursion_n: usize,
    samples: usize,
    ball_r: usize,
    subset_size: usize,
    increment_sites: usize,
    increment_q: Spin,
    field_sites: usize,
    field_q: Spin,
    solver_sites: usize,
    scan_n: usize,
}

impl Bounds {
    fn for_level(level: Level) -> Self {
        match level {
            Level::Quick => Self {
                esf_n: 6,
                oracle_n: 6,
                recursion_n: 6,
                samples: 20_000,
                ball_r: 3,
                subset_size: 3,
                increment_sites: 3,
                increment_q: 3,
                field_sites: 3,
                field_q: 3,
                solver_sites: 2,
                scan_n: 200,
            },
            Level::Full => Self {
                esf_n: 12,
                oracle_n: 7,
                recursion_n: 20,
                samples: 100_000,
                ball_r: 5,
                subset_size: 6,
                increment_sites: 5,
                increment_q: 5,
                field_sites: 4,
                field_q: 3,
                solver_sites: 2,
                scan_n: 2000,
            },
        }
    }
}

/// Accumulates the worst deviation seen by one check.
struct Tally {
    cases: u64,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            worst: 0.0,
        }
    }

    fn observe(&mut self, deviation: f64) {
        self.cases += 1;
        if deviation.is_nan() || deviation > self.worst {
            self.worst = if deviation.is_nan() {
                f64::INFINITY
            } else {
                deviation
            };
        }
    }

    fn finish(
        self,
        suite: &'static str,
        check: &'static str,
        identity: &'static str,
        domain: String,
        tolerance: f64,
    ) -> CheckRecord {
        CheckRecord {
            suite,
            check,
            identity,
            domain,
            cases: self.cases,
            max_deviation: self.worst,
            tolerance,
            passed: self.cases > 0 && self.worst <= tolerance,
        }
    }
}

fn rate(n: i64, d: i64) -> MutationRate {
    MutationRate::from_ratio(n, d).expect("positive literal")
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn exact_gap(a: &BigRational, b: &BigRational) -> f64 {
    rational_to_f64(&(a - b).abs())
}

fn relative_gap(a: &BigRational, b: &BigRational) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = rational_to_f64(&a.abs()).max(rational_to_f64(&b.abs()));
    rational_to_f64(&(a - b).abs()) / scale
}

/// Runs every suite at `level`.
pub fn run(level: Level, hooks: Hooks) -> Result<VerificationReport> {
    let start = Instant::now();
    let bounds = Bounds::for_level(level);
    let mut records = Vec::new();
    records.extend(partition_suite(&bounds)?);
    records.extend(sampler_suite(&bounds)?);
    records.extend(tree_suite(&bounds)?);
    records.extend(increment_suite(&bounds, hooks));
    records.extend(summability_suite(&bounds)?);
    records.extend(field_suite(&bounds)?);

    let mut failed_suites: Vec<&'static str> = Vec::new();
    for r in records.iter().filter(|r| !r.passed) {
        if !failed_suites.contains(&r.suite) {
            failed_suites.push(r.suite);
        }
    }
    let overall = if failed_suites.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(VerificationReport {
        suite: format!("verify-{}", level_name(level)),
        level,
        records,
        failed_suites,
        overall,
        duration_seconds: start.elapsed().as_secs_f64(),
    })
}

fn level_name(level: Level) -> &'static str {
    match level {
        Level::Quick => "quick",
        Level::Full => "full",
    }
}

fn partition_suite_thetas() -> [MutationRate; 4] {
    [rate(1, 2), rate(1, 1), rate(2, 1), rate(7, 3)]
}

fn partition_suite(b: &Bounds) -> Result<Vec<CheckRecord>> {
    let mut norm = Tally::new();
    for theta in partition_suite_thetas() {
        for n in 1..=b.esf_n {
            let total = esf_distribution(n, &theta)?
                .into_iter()
                .fold(BigRational::zero(), |acc, (_, p)| acc + p);
            norm.observe(exact_gap(&total, &BigRational::one()));
        }
    }

    let mut oracle = Tally::new();
    let one = rate(1, 1);
    for n in 1..=b.oracle_n {
        let counts = permutation_cycle_oracle(n)?;
        let esf = esf_distribution(n, &one)?;
        if esf.len() != counts.len() {
            oracle.observe(f64::INFINITY);
        }
        for (a, p) in esf {
            let deviation = counts.get(&a).map_or(f64::INFINITY, |c| exact_gap(&p, c));
            oracle.observe(deviation);
        }
    }

    let mut ratio = Tally::new();
    for theta in [rate(1, 2), rate(1, 1), rate(3, 1)] {
        for n in 1..=b.recursion_n {
            let lhs = esf_ratio(n, &theta)? * esf_normalizer(n, &theta)?;
            ratio.observe(relative_gap(&lhs, &esf_normalizer(n + 1, &theta)?));
        }
    }

    Ok(vec![
        norm.finish(
            "partition",
            "esf_normalization",
            "sum over partitions of n of the ESF probability equals 1",
            format!("n <= {}, theta in {{1/2, 1, 2, 7/3}}, exact", b.esf_n),
            0.0,
        ),
        oracle.finish(
            "partition",
            "permutation_oracle",
            "ESF at theta = 1 equals the cycle-type law of a uniform permutation",
            format!("n <= {}, exhaustive over S_n, exact", b.oracle_n),
            0.0,
        ),
        ratio.finish(
            "normalizer",
            "normalizer_ratio",
            "esf_ratio(n) * Z_n = Z_{n+1}",
            format!("n <= {}, theta in {{1/2, 1, 3}}, exact", b.recursion_n),
            0.0,
        ),
    ])
}

/// `(n, θ, seed)` of the sampler goodness-of-fit checks.
pub const SAMPLER_CASES: [(usize, i64, i64, u64); 2] =
    [(6, 1, 1, 20_240_601), (4, 2, 1, 20_240_602)];

fn sampler_suite(b: &Bounds) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for (n, num, den, seed) in SAMPLER_CASES {
        let theta = rate(num, den);
        let tally = crp_tally(n, &theta, b.samples, seed)?;
        let expected = esf_distribution(n, &theta)?;
        let (stat, df, _) = chi_square_gof(&tally, &expected);
        let critical = ChiSquared::new(df as f64)
            .expect("at least two partitions")
            .inverse_cdf(1.0 - SAMPLER_ALPHA);
        let mut t = Tally::new();
        t.observe(stat);
        out.push(t.finish(
            "sampler",
            "crp_chi_square",
            "CRP partition frequencies fit the ESF (chi-square statistic below the 0.999 quantile)",
            format!("n = {n}, theta = {theta}, {} draws, seed {seed}", b.samples),
            critical,
        ));
    }
    Ok(out)
}

fn tree_suite(b: &Bounds) -> Result<Vec<CheckRecord>> {
    let mut sizes = Tally::new();
    for k in 1..=3 {
        for r in 0..=b.ball_r {
            let got = build_ball(k, r)?.len();
            sizes.observe(got.abs_diff(ball_size(k, r)) as f64);
        }
    }

    let ball = build_ball(2, 2)?;
    let subsets = connected_subregions(&ball, b.subset_size);
    let mut anchors = Tally::new();
    let mut update = Tally::new();
    for region in &subsets {
        let before = outer_boundary(region);
        for v in &before {
            let inside: Vec<TreeAddress> = v
                .neighbors(2)
                .into_iter()
                .filter(|y| region.contains(y))
                .collect();
            let step = growth_step(region, v.clone())?;
            anchors.observe(if inside.len() == 1 && step.anchor() == &inside[0] {
                0.0
            } else {
                1.0
            });

            let grown = region.with_vertex(v.clone())?;
            let mut expected = before.clone();
            expected.remove(v);
            expected.extend(v.neighbors(2).into_iter().filter(|y| !grown.contains(y)));
            update.observe(
                outer_boundary(&grown)
                    .symmetric_difference(&expected)
                    .count() as f64,
            );
        }
    }

    Ok(vec![
        sizes.finish(
            "tree",
            "ball_sizes",
            "ball(k, r) has the closed-form number of vertices",
            format!("k in 1..=3, r <= {}", b.ball_r),
            0.0,
        ),
        anchors.finish(
            "tree",
            "anchor_uniqueness",
            "a boundary vertex of a connected region has exactly one neighbour inside it",
            format!(
                "connected subsets of ball(2, 2) with at most {} vertices",
                b.subset_size
            ),
            0.0,
        ),
        update.finish(
            "tree",
            "boundary_update",
            "outer boundary after adding v = old boundary minus v plus v's new outside neighbours",
            format!(
                "connected subsets of ball(2, 2) with at most {} vertices",
                b.subset_size
            ),
            0.0,
        ),
    ])
}

/// Occupancy numbers `b_0..b_{n+1}` counted directly from the spin list
/// (`b_0` and `b_{n+1}` are always zero).
fn occupancy_oracle(spins: &[Spin]) -> Vec<u64> {
    let mut counts: BTreeMap<Spin, usize> = BTreeMap::new();
    for &s in spins {
        *counts.entry(s).or_default() += 1;
    }
    let mut b = vec![0u64; spins.len() + 2];
    for &c in counts.values() {
        b[c] += 1;
    }
    b
}

fn increment_suite(b: &Bounds, hooks: Hooks) -> Vec<CheckRecord> {
    let thetas = [rate(1, 2), rate(1, 1), rate(3, 1)];
    let ball = build_ball(2, 2).expect("k = 2 is valid");
    let v = TreeAddress::new(vec![2, 1]);
    let mut weight = Tally::new();
    let mut closed = Tally::new();
    let mut bookkeeping = Tally::new();

    for q in 1..=b.increment_q {
        for size in 0..=b.increment_sites {
            let region = ball.restrict_to(size);
            for sigma in configurations(&region, q) {
                let spins: Vec<Spin> = sigma.spins().collect();
                let b_before = occupancy_oracle(&spins);
                for s in 0..q {
                    let extended = sigma
                        .extend(v.clone(), s)
                        .expect("v lies outside ball(2, 2)");
                    let i0 = spins.iter().filter(|&&x| x == s).count();

                    let mut b_after = b_before.clone();
                    if i0 == 0 {
                        b_after[1] += 1;
                    } else {
                        b_after[i0] -= 1;
                        b_after[i0 + 1] += 1;
                    }
                    let got = occupancy(&extended);
                    let mismatch = (1..b_after.len())
                        .filter(|&j| got.get(j) != b_after[j])
                        .count();
                    bookkeeping.observe(mismatch as f64);

                    for theta in &thetas {
                        let inc = (hooks.increment)(&sigma, s, theta);
                        let lhs = ewens_weight(&extended, theta);
                        let rhs = &inc.factor * ewens_weight(&sigma, theta);
                        weight.observe(relative_gap(&lhs, &rhs));

                        let expected = if i0 == 0 {
                            theta.value() / int(b_before[1] + 1)
                        } else {
                            let i = i0 as u64;
                            int(i * b_before[i0]) / int((i + 1) * (b_before[i0 + 1] + 1))
                        };
                        let case_ok = match inc.case {
                            IncrementCase::Fresh => i0 == 0,
                            IncrementCase::Repeat { i0: got } => got == i0,
                        };
                        closed.observe(if case_ok {
                            relative_gap(&inc.factor, &expected)
                        } else {
                            f64::INFINITY
                        });
                    }
                }
            }
        }
    }

    let domain = format!(
        "|Lambda| <= {}, alphabets of size <= {}, theta in {{1/2, 1, 3}}, exact",
        b.increment_sites, b.increment_q
    );
    vec![
        weight.finish(
            "increment",
            "weight_increment",
            "ewens_weight(sigma with s at v) = increment * ewens_weight(sigma)",
            domain.clone(),
            0.0,
        ),
        closed.finish(
            "increment",
            "increment_closed_form",
            "increment is theta/(b_1+1) for a fresh spin and i0 b_i0/((i0+1)(b_{i0+1}+1)) for a repeat",
            domain.clone(),
            0.0,
        ),
        bookkeeping.finish(
            "increment",
            "occupancy_update",
            "adding a spin seen i0 times moves one value from b_i0 to b_{i0+1}",
            domain,
            0.0,
        ),
    ]
}

/// `ln n!` accumulated term by term.
fn ln_factorial_by_sum(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn summability_suite(b: &Bounds) -> Result<Vec<CheckRecord>> {
    let mut crossing = Tally::new();
    for theta in [rate(1, 2), rate(1, 1), rate(10, 1)] {
        for bound in [10.0, 100.0, 1000.0] {
            let stirling = stirling_crossing_index(&theta, bound);
            let report = summability_scan(&theta, bound, stirling)?;
            let late = match &report.first_crossing {
                Some(c) => c.n.saturating_sub(stirling) as f64,
                None => f64::INFINITY,
            };
            crossing.observe(late);
        }
    }

    let mut spot = Tally::new();
    let oracle = ln_factorial_by_sum(100);
    spot.observe((potential_sup_term(100, &rate(1, 1)) - oracle).abs() / oracle);

    let mut growth = Tally::new();
    for theta in [rate(1, 2), rate(1, 1), rate(10, 1)] {
        let ln_theta = theta.ln();
        let mut prev: Option<f64> = None;
        let mut ln_fact = 0.0;
        for n in 1..=b.scan_n {
            ln_fact += (n as f64).ln();
            let t_n = potential_sup_term(n, &theta);
            if n as f64 >= theta.to_f64() && ln_fact >= n as f64 * ln_theta {
                if let Some(p) = prev {
                    growth.observe(if t_n >= p { 0.0 } else { p - t_n });
                }
                prev = Some(t_n);
            }
        }
    }

    Ok(vec![
        crossing.finish(
            "summability",
            "crossing_before_stirling_index",
            "the first n with t_n > B is at most the Stirling-predicted index",
            "theta in {1/2, 1, 10}, B in {10, 100, 1000}".into(),
            0.0,
        ),
        spot.finish(
            "summability",
            "ln_factorial_spot_value",
            "t_100 at theta = 1 equals ln 100! (relative error)",
            "n = 100, theta = 1".into(),
            SPOT_TOLERANCE,
        ),
        growth.finish(
            "summability",
            "sup_term_growth",
            "t_n is nondecreasing once n >= theta and n ln theta <= ln n!",
            format!("n <= {}, theta in {{1/2, 1, 10}}", b.scan_n),
            0.0,
        ),
    ])
}

/// Growth steps out of every connected region containing the root with at
/// most `max_sites` vertices. Every connected region is the image of one of
/// these under a tree automorphism.
pub fn rooted_growth_steps(k: usize, max_sites: usize) -> Result<Vec<GrowthStep>> {
    let ball = build_ball(k, max_sites.saturating_sub(1))?;
    let root = TreeAddress::root();
    let mut steps = Vec::new();
    for region in connected_subregions(&ball, max_sites) {
        if !region.contains(&root) {
            continue;
        }
        for v in outer_boundary(&region) {
            steps.push(growth_step(&region, v)?);
        }
    }
    Ok(steps)
}

/// Finite-alphabet table with a random entry `p/d`, `p, d in 1..=9`, for
/// every spin in `0..q` at every vertex of `region`.
pub fn random_small_fields(region: &TreeRegion, q: Spin, rng: &mut ChaCha8Rng) -> FieldTable {
    let mut table = FieldTable::new(FieldMode::FiniteAlphabet, None).expect("no default");
    for x in region.vertices() {
        for s in 0..q {
            let g = BigRational::new(
                BigInt::from(rng.random_range(1..=9)),
                BigInt::from(rng.random_range(1..=9)),
            );
            table.set(s, x.clone(), g).expect("positive entry");
        }
    }
    table
}

/// Single-vertex instance with a known solution: random fields `g*` at the
/// added vertex, then anchor fields `g_{t,u}` set to the right-hand side that
/// `g*` produces with `g_{·,u} ≡ 1`. The returned model has `g ≡ 1` at the
/// added vertex, so the solver must rediscover a multiple of `g*`.
fn planted_instance(
    step: &GrowthStep,
    q: Spin,
    theta: MutationRate,
    beta: InverseTemperature,
    rng: &mut ChaCha8Rng,
) -> Result<FieldModel> {
    let mut hidden = random_small_fields(
        &TreeRegion::new(step.base().k(), [step.added().clone()])?,
        q,
        rng,
    );
    for t in 0..q {
        hidden.set(t, step.anchor().clone(), BigRational::one())?;
    }
    let probe = FieldModel::new(theta.clone(), beta, hidden);
    let mut fields = FieldTable::new(FieldMode::FiniteAlphabet, None)?;
    for sigma in configurations(step.base(), q) {
        let t = sigma.spin(step.anchor()).expect("anchor lies in base");
        let rhs = consistency_rhs::<f64>(&sigma, step, &probe, q)?;
        fields.set(
            t,
            step.anchor().clone(),
            ewens_tree_core::exact::rational_from_f64(rhs)?,
        )?;
    }
    for s in 0..q {
        fields.set(s, step.added().clone(), BigRational::one())?;
    }
    Ok(FieldModel::new(theta, beta, fields))
}

fn betas() -> [InverseTemperature; 3] {
    [-1.0, 0.0, 1.0].map(|b| InverseTemperature::new(b).expect("finite"))
}

fn field_suite(b: &Bounds) -> Result<Vec<CheckRecord>> {
    let thetas = [rate(1, 2), rate(1, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
    let ball = build_ball(2, 2)?;

    let mut normalization = Tally::new();
    let mut real_normalization = Tally::new();
    for size in 1..=b.field_sites {
        let region = ball.restrict_to(size);
        let boundary = region.vertices().cloned().collect();
        for q in 1..=b.field_q {
            let fields = random_small_fields(&region, q, &mut rng);
            for theta in &thetas {
                for beta in betas() {
                    let model = FieldModel::new(theta.clone(), beta, fields.clone());
                    let z: BigRational =
                        region_partition_function(&region, &model, q, &boundary, DEFAULT_BUDGET)?;
                    let mut total = BigRational::zero();
                    for sigma in configurations(&region, q) {
                        total += field_weight::<BigRational>(&sigma, &model, &boundary)? / &z;
                    }
                    normalization.observe(exact_gap(&total, &BigRational::one()));
                }
                let model =
                    FieldModel::new(theta.clone(), InverseTemperature::new(0.5)?, fields.clone());
                let z: f64 =
                    region_partition_function(&region, &model, q, &boundary, DEFAULT_BUDGET)?;
                let mut total = 0.0;
                for sigma in configurations(&region, q) {
                    total += field_weight::<f64>(&sigma, &model, &boundary)? / z;
                }
                real_normalization.observe((total - 1.0).abs());
            }
        }
    }

    let mut bridge = Tally::new();
    for size in 1..=b.field_sites {
        let region = ball.restrict_to(size);
        let boundary = region.vertices().cloned().collect();
        for q in 1..=b.field_q {
            for theta in &thetas {
                let model = FieldModel::new(
                    theta.clone(),
                    InverseTemperature::new(-1.0)?,
                    FieldTable::uniform(),
                );
                let z: BigRational =
                    region_partition_function(&region, &model, q, &boundary, DEFAULT_BUDGET)?;
                let probs: Vec<BigRational> = configurations(&region, q)
                    .map(|c| ewens_tree_core::hamiltonian::config_probability(&c, theta))
                    .collect::<Result<_>>()?;
                let mass: BigRational = probs.iter().fold(BigRational::zero(), |acc, p| acc + p);
                for (sigma, p) in configurations(&region, q).zip(&probs) {
                    let field_p = field_weight::<BigRational>(&sigma, &model, &boundary)? / &z;
                    bridge.observe(exact_gap(&field_p, &(p / &mass)));
                }
            }
        }
    }

    let steps = rooted_growth_steps(2, b.field_sites)?;
    let mut equivalence = Tally::new();
    for step in &steps {
        let (b_lambda, b_delta) = FieldPlacement::GrowthPair.vertex_sets(step);
        for q in 1..=b.field_q {
            let fields = random_small_fields(&step.extended(), q, &mut rng);
            for theta in &thetas {
                for beta in betas() {
                    let model = FieldModel::new(theta.clone(), beta, fields.clone());
                    for sigma in configurations(step.base(), q) {
                        let w = field_weight::<BigRational>(&sigma, &model, &b_lambda)?;
                        let mut sum = BigRational::zero();
                        for s in 0..q {
                            let ext = sigma.extend(step.added().clone(), s)?;
                            sum += field_weight::<BigRational>(&ext, &model, &b_delta)?;
                        }
                        let rhs = consistency_rhs::<BigRational>(&sigma, step, &model, q)?;
                        equivalence.observe(relative_gap(&(sum / w), &rhs));
                    }
                }
            }
        }
    }

    let mut kernel = Tally::new();
    for step in rooted_growth_steps(2, 2)? {
        let (b_lambda, b_delta) = FieldPlacement::GrowthPair.vertex_sets(&step);
        let q = 2;
        let fields = random_small_fields(&step.extended(), q, &mut rng);
        for theta in &thetas {
            for beta in [-1.0, 0.5, 1.0] {
                let model = FieldModel::new(
                    theta.clone(),
                    InverseTemperature::new(beta)?,
                    fields.clone(),
                );
                let z_lambda: f64 =
                    region_partition_function(step.base(), &model, q, &b_lambda, DEFAULT_BUDGET)?;
                let z_delta: f64 = region_partition_function(
                    &step.extended(),
                    &model,
                    q,
                    &b_delta,
                    DEFAULT_BUDGET,
                )?;
                for sigma_delta in configurations(&step.extended(), q) {
                    let sigma_lambda = sigma_delta.restrict(step.base());
                    let p_delta = field_weight::<f64>(&sigma_delta, &model, &b_delta)? / z_delta;
                    let p_lambda =
                        field_weight::<f64>(&sigma_lambda, &model, &b_lambda)? / z_lambda;
                    let k: f64 = multiplicative_kernel(
                        &step,
                        &sigma_delta,
                        &model,
                        NormalizerSource::Enumerated {
                            q,
                            budget: DEFAULT_BUDGET,
                        },
                    )?;
                    kernel.observe((p_delta - k * p_lambda).abs() / p_delta);
                }
            }
        }
    }

    let mut soundness = Tally::new();
    let mut planted = Tally::new();
    let mut converged = 0u64;
    let mut attempted = 0u64;
    let mut solve_and_check = |step: &GrowthStep, model: &FieldModel, q: Spin| -> Result<bool> {
        let (table, report) = solve_boundary_field(step, model, q, SolverOptions::default())?;
        attempted += 1;
        if report.solver.as_ref().map(|s| s.verdict) != Some(SolverVerdict::Converged) {
            return Ok(false);
        }
        converged += 1;
        let solved = FieldModel::new(model.theta.clone(), model.beta, table);
        let check = marginal_check(step, &solved, q, FieldPlacement::GrowthPair, DEFAULT_BUDGET)?;
        soundness.observe(check.max_residual());
        Ok(true)
    };
    for step in rooted_growth_steps(2, b.solver_sites)? {
        for q in [2, 3] {
            for theta in [rate(1, 2), rate(1, 1), rate(2, 1)] {
                for beta in [-1.0, 0.5, 1.0] {
                    let mut fields = random_small_fields(step.base(), q, &mut rng);
                    for s in 0..q {
                        fields.set(s, step.added().clone(), BigRational::one())?;
                    }
                    let model =
                        FieldModel::new(theta.clone(), InverseTemperature::new(beta)?, fields);
                    solve_and_check(&step, &model, q)?;
                }
            }
        }
    }
    let planted_steps = rooted_growth_steps(2, 1)?;
    for step in &planted_steps {
        for q in [2, 3, 4] {
            for theta in [rate(1, 2), rate(1, 1), rate(2, 1)] {
                for beta in [-1.0, 0.5, 1.0] {
                    let model = planted_instance(
                        step,
                        q,
                        theta.clone(),
                        InverseTemperature::new(beta)?,
                        &mut rng,
                    )?;
                    let ok = solve_and_check(step, &model, q)?;
                    planted.observe(if ok { 0.0 } else { 1.0 });
                }
            }
        }
    }

    Ok(vec![
        normalization.finish(
            "field",
            "normalization_exact",
            "sum over configurations of field_weight / Z equals 1",
            format!(
                "|Lambda| <= {}, q <= {}, beta in {{-1, 0, 1}}, theta in {{1/2, 1}}, random fields, exact",
                b.field_sites, b.field_q
            ),
            0.0,
        ),
        real_normalization.finish(
            "field",
            "normalization_real",
            "sum over configurations of field_weight / Z equals 1",
            format!(
                "|Lambda| <= {}, q <= {}, beta = 1/2, theta in {{1/2, 1}}, random fields, floating point",
                b.field_sites, b.field_q
            ),
            1e-14,
        ),
        bridge.finish(
            "field",
            "ewens_bridge",
            "at beta = -1 and zero field the region law is the Ewens law conditioned on the alphabet",
            format!("|Lambda| <= {}, q <= {}, theta in {{1/2, 1}}, exact", b.field_sites, b.field_q),
            0.0,
        ),
        equivalence.finish(
            "field",
            "rhs_marginal_equivalence",
            "sum_s W_Delta(sigma with s at v) / W_Lambda(sigma) equals the consistency right-hand side",
            format!(
                "{} growth steps out of rooted connected regions with |Lambda| <= {}, q <= {}, \
                 beta in {{-1, 0, 1}}, theta in {{1/2, 1}}, random fields, exact",
                steps.len(),
                b.field_sites,
                b.field_q
            ),
            0.0,
        ),
        kernel.finish(
            "field",
            "kernel_factorization",
            "P_Delta(sigma) = kernel * P_Lambda(sigma restricted to Lambda) with enumerated normalizers",
            "|Lambda| <= 2, q = 2, beta in {-1, 1/2, 1}, theta in {1/2, 1}, random fields".into(),
            REAL_TOLERANCE,
        ),
        soundness.finish(
            "solver",
            "solver_soundness",
            "when the solver converges, an independent marginal check has residual at most 1e-10",
            format!(
                "{converged} of {attempted} instances converged; random base fields with |Lambda| <= {}, \
                 q in {{2, 3}}, plus planted single-vertex instances with q <= 4; \
                 beta in {{-1, 1/2, 1}}, theta in {{1/2, 1, 2}}",
                b.solver_sites
            ),
            ewens_tree_core::field::CONSISTENCY_TOLERANCE,
        ),
        planted.finish(
            "solver",
            "solver_finds_planted_solution",
            "the solver converges when base fields are built from a known solution (count of misses)",
            format!(
                "{} single-vertex steps, q in {{2, 3, 4}}, beta in {{-1, 1/2, 1}}, theta in {{1/2, 1, 2}}",
                planted_steps.len()
            ),
            0.0,
        ),
    ])
}

//! The work behind each subcommand, separated from argument parsing so it
//! can be driven directly from tests.

use std::fmt;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use ewens_tree_core::exact::{decimal_string, format_rational, rational_to_f64};
use ewens_tree_core::field::{
    marginal_check, solve_boundary_field, ConsistencyReport, FieldMode, FieldModel, FieldPlacement,
    FieldTable, InverseTemperature, SolverOptions, CONSISTENCY_TOLERANCE,
};
use ewens_tree_core::hamiltonian::{summability_scan, SummabilityVerdict};
use ewens_tree_core::partition::{chi_square_gof, crp_tally, esf_distribution, AlleleCounts};
use ewens_tree_core::tree::{build_ball, growth_step, Spin, TreeAddress, TreeRegion};
use ewens_tree_core::MutationRate;

use crate::verify::{self, Hooks, Level, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Whether a command met its success condition (exit 0) or not (exit 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failure,
}

/// Rendered command output.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub status: Status,
    /// Short diagnostic for stderr.
    pub note: Option<String>,
}

/// Bad input: reported on stderr with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl From<ewens_tree_core::Error> for UsageError {
    fn from(e: ewens_tree_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<Outcome, UsageError>;

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// CSV table preceded by `# key=value` summary lines.
fn csv_with_summary<T: Serialize>(summary: &[(&str, String)], rows: &[T]) -> String {
    let mut out = String::new();
    for (k, v) in summary {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("flat rows serialize");
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    out.push_str(std::str::from_utf8(&bytes).expect("utf-8 rows"));
    out
}

fn success(body: String) -> Outcome {
    Outcome {
        body,
        status: Status::Success,
        note: None,
    }
}

#[derive(Debug, Serialize)]
pub struct EsfRow {
    pub partition: AlleleCounts,
    pub exact: String,
    pub decimal: String,
}

#[derive(Debug, Serialize)]
pub struct EsfTable {
    pub n: usize,
    pub theta: MutationRate,
    pub rows: Vec<EsfRow>,
}

#[derive(Serialize)]
struct EsfCsvRow<'a> {
    partition: String,
    exact: &'a str,
    decimal: &'a str,
}

pub fn esf(n: usize, theta: &MutationRate, format: Format) -> CmdResult {
    let dist = esf_distribution(n, theta)?;
    let total = dist.iter().fold(BigRational::zero(), |acc, (_, p)| acc + p);
    assert!(total.is_one(), "ESF probabilities sum to {total}");
    let table = EsfTable {
        n,
        theta: theta.clone(),
        rows: dist
            .into_iter()
            .map(|(partition, p)| EsfRow {
                partition,
                exact: format_rational(&p),
                decimal: decimal_string(rational_to_f64(&p)),
            })
            .collect(),
    };
    Ok(success(match format {
        Format::Json => json(&table),
        Format::Csv => {
            let rows: Vec<_> = table
                .rows
                .iter()
                .map(|r| EsfCsvRow {
                    partition: r.partition.to_string(),
                    exact: &r.exact,
                    decimal: &r.decimal,
                })
                .collect();
            csv_with_summary(&[("n", n.to_string()), ("theta", theta.to_string())], &rows)
        }
    }))
}

#[derive(Debug, Serialize)]
pub struct SampleRow {
    pub partition: AlleleCounts,
    pub observed: u64,
    pub frequency: String,
    pub exact: String,
    pub decimal: String,
}

#[derive(Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

#[derive(Debug, Serialize)]
pub struct SampleReport {
    pub n: usize,
    pub theta: MutationRate,
    pub count: usize,
    pub seed: u64,
    pub rows: Vec<SampleRow>,
    pub chi_square: ChiSquare,
}

#[derive(Serialize)]
struct SampleCsvRow<'a> {
    partition: String,
    observed: u64,
    frequency: &'a str,
    exact: &'a str,
    decimal: &'a str,
}

pub fn sample(
    n: usize,
    theta: &MutationRate,
    count: usize,
    seed: u64,
    format: Format,
) -> CmdResult {
    if count == 0 {
        return Err(UsageError("--count must be at least 1".into()));
    }
    let tally = crp_tally(n, theta, count, seed)?;
    let expected = esf_distribution(n, theta)?;
    let (statistic, degrees_of_freedom, p_value) = chi_square_gof(&tally, &expected);
    let report = SampleReport {
        n,
        theta: theta.clone(),
        count,
        seed,
        rows: expected
            .into_iter()
            .map(|(partition, p)| {
                let observed = tally.get(&partition).copied().unwrap_or(0);
                SampleRow {
                    partition,
                    observed,
                    frequency: decimal_string(observed as f64 / count as f64),
                    exact: format_rational(&p),
                    decimal: decimal_string(rational_to_f64(&p)),
                }
            })
            .collect(),
        chi_square: ChiSquare {
            statistic,
            degrees_of_freedom,
            p_value,
        },
    };
    Ok(success(match format {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<_> = report
                .rows
                .iter()
                .map(|r| SampleCsvRow {
                    partition: r.partition.to_string(),
                    observed: r.observed,
                    frequency: &r.frequency,
                    exact: &r.exact,
                    decimal: &r.decimal,
                })
                .collect();
            csv_with_summary(
                &[
                    ("n", n.to_string()),
                    ("theta", theta.to_string()),
                    ("count", count.to_string()),
                    ("seed", seed.to_string()),
                    ("chi_square", statistic.to_string()),
                    ("degrees_of_freedom", degrees_of_freedom.to_string()),
                    ("p_value", p_value.to_string()),
                ],
                &rows,
            )
        }
    }))
}

pub fn summability(theta: &MutationRate, bound: f64, n_max: u64, format: Format) -> CmdResult {
    let report = summability_scan(theta, bound, n_max)?;
    let status = match report.verdict {
        SummabilityVerdict::Divergent => Status::Success,
        SummabilityVerdict::Inconclusive => Status::Failure,
    };
    let body = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let verdict = match report.verdict {
                SummabilityVerdict::Divergent => "divergent",
                SummabilityVerdict::Inconclusive => "inconclusive",
            };
            let crossing = report
                .first_crossing
                .as_ref()
                .map_or_else(|| "none".to_string(), |c| c.n.to_string());
            csv_with_summary(
                &[
                    ("theta", theta.to_string()),
                    ("bound", bound.to_string()),
                    ("n_max", n_max.to_string()),
                    ("verdict", verdict.into()),
                    ("first_crossing", crossing),
                    ("stirling_index", report.stirling_index.to_string()),
                ],
                &report.probes,
            )
        }
    };
    Ok(Outcome {
        body,
        status,
        note: (status == Status::Failure).then(|| format!("no t_n above {bound} for n <= {n_max}")),
    })
}

/// `ball:k,r` or the path of a JSON region file.
pub fn parse_region(spec: &str) -> Result<TreeRegion, UsageError> {
    if let Some(rest) = spec.strip_prefix("ball:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let [k, r] = parts.as_slice() else {
            return Err(UsageError(format!("region {spec:?}: expected ball:k,r")));
        };
        let k: usize = k
            .parse()
            .map_err(|_| UsageError(format!("region {spec:?}: bad branching {k:?}")))?;
        let r: usize = r
            .parse()
            .map_err(|_| UsageError(format!("region {spec:?}: bad radius {r:?}")))?;
        return Ok(build_ball(k, r)?);
    }
    read_json(Path::new(spec), "region")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("invalid {what} file {}: {e}", path.display())))
}

pub fn read_fields(path: &Path) -> Result<FieldTable, UsageError> {
    read_json(path, "fields")
}

#[derive(Debug, Clone)]
pub struct ConsistencyArgs {
    pub region: TreeRegion,
    pub vertex: TreeAddress,
    pub theta: MutationRate,
    pub beta: InverseTemperature,
    pub q: Spin,
    pub fields: FieldTable,
    pub placement: FieldPlacement,
    pub solve: bool,
    pub budget: u128,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyOutput {
    pub report: ConsistencyReport,
    /// The field table the report was computed with (the solved one under `--solve`).
    pub fields: FieldTable,
}

#[derive(Serialize)]
struct ResidualCsvRow {
    spins: String,
    p_lambda: String,
    marginal: String,
    residual: String,
    rhs: String,
}

pub fn consistency(args: ConsistencyArgs, format: Format) -> CmdResult {
    if args.fields.mode() != FieldMode::FiniteAlphabet {
        return Err(UsageError(
            "explicit-tail field tables cannot be enumerated; use a finite-alphabet table".into(),
        ));
    }
    if args.solve && args.placement != FieldPlacement::GrowthPair {
        return Err(UsageError(
            "--solve works with the growth_pair placement only".into(),
        ));
    }
    args.vertex.validate(args.region.k())?;
    let step = growth_step(&args.region, args.vertex.clone())?;
    let model = FieldModel::new(args.theta.clone(), args.beta, args.fields.clone());
    let (fields, report) = if args.solve {
        let options = SolverOptions {
            budget: args.budget,
            ..SolverOptions::default()
        };
        solve_boundary_field(&step, &model, args.q, options)?
    } else {
        let report = marginal_check(&step, &model, args.q, args.placement, args.budget)?;
        (args.fields, report)
    };
    let residual = report.max_residual();
    let status = if residual <= CONSISTENCY_TOLERANCE {
        Status::Success
    } else {
        Status::Failure
    };
    let note = (status == Status::Failure)
        .then(|| format!("max |residual| = {residual:e} exceeds {CONSISTENCY_TOLERANCE:e}"));
    let body = match format {
        Format::Json => json(&ConsistencyOutput { report, fields }),
        Format::Csv => {
            let rows: Vec<_> = report
                .entries
                .iter()
                .map(|e| ResidualCsvRow {
                    spins: e
                        .spins
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    p_lambda: e
                        .p_lambda
                        .exact
                        .clone()
                        .unwrap_or_else(|| e.p_lambda.decimal.clone()),
                    marginal: e
                        .marginal
                        .exact
                        .clone()
                        .unwrap_or_else(|| e.marginal.decimal.clone()),
                    residual: e
                        .residual
                        .exact
                        .clone()
                        .unwrap_or_else(|| e.residual.decimal.clone()),
                    rhs: e
                        .rhs
                        .as_ref()
                        .map(|r| r.exact.clone().unwrap_or_else(|| r.decimal.clone()))
                        .unwrap_or_default(),
                })
                .collect();
            let mut summary = vec![
                ("added", report.step.added.to_string()),
                ("anchor", report.step.anchor.to_string()),
                ("theta", report.theta.to_string()),
                ("beta", report.beta.to_string()),
                ("q", report.q.to_string()),
                ("max_abs_residual", report.max_abs_residual.decimal.clone()),
                (
                    "z_ratio_enumerated",
                    report.z_ratio_enumerated.decimal.clone(),
                ),
                (
                    "z_ratio_closed_form",
                    report.z_ratio_closed_form.decimal.clone(),
                ),
            ];
            if let Some(s) = &report.solver {
                summary.push(("solver_iterations", s.iterations.to_string()));
                summary.push(("solver_spread", s.spread.to_string()));
            }
            csv_with_summary(&summary, &rows)
        }
    };
    Ok(Outcome { body, status, note })
}

#[derive(Serialize)]
struct RecordCsvRow<'a> {
    suite: &'a str,
    check: &'a str,
    cases: u64,
    max_deviation: f64,
    tolerance: f64,
    passed: bool,
    domain: &'a str,
}

pub fn verify(level: Level, hooks: Hooks, format: Format) -> CmdResult {
    let report: VerificationReport = verify::run(level, hooks)?;
    let status = if report.passed() {
        Status::Success
    } else {
        Status::Failure
    };
    let note = (status == Status::Failure)
        .then(|| format!("failing suites: {}", report.failed_suites.join(", ")));
    let body = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<_> = report
                .records
                .iter()
                .map(|r| RecordCsvRow {
                    suite: r.suite,
                    check: r.check,
                    cases: r.cases,
                    max_deviation: r.max_deviation,
                    tolerance: r.tolerance,
                    passed: r.passed,
                    domain: &r.domain,
                })
                .collect();
            csv_with_summary(
                &[
                    ("suite", report.suite.clone()),
                    (
                        "overall",
                        if report.passed() { "pass" } else { "fail" }.into(),
                    ),
                    ("duration_seconds", report.duration_seconds.to_string()),
                ],
                &rows,
            )
        }
    };
    Ok(Outcome { body, status, note })
}

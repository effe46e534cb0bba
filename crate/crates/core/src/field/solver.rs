//! Damped fixed-point search for fields at the added vertex that make the
//! consistency right-hand side independent of the base configuration.
//!
//! With `x_s = ln g_{s,v}` and `A[σ][s] = increment(σ, s)^{-β}`, the
//! right-hand side is `rhs_σ = sum_s A[σ][s] e^{x_s} / g_{σ(u),u}`. Each
//! sweep takes a damped Gauss-Newton step on the centered residuals
//! `ln rhs_σ - mean_σ ln rhs_σ`; the Jacobian entries are the shares
//! `A[σ][s] e^{x_s} / sum_t A[σ][t] e^{x_t}`. The
//! system has one equation per base configuration and only `q` unknowns, so
//! it is often unsolvable; the solver then stops once the spread stalls (or
//! at its iteration cap), keeps the best table it saw and reports
//! `unresolved`.

use nalgebra::{DMatrix, DVector};

use super::{
    check_budget, marginal_check, spread_of, Arith, ConsistencyReport, FieldMode, FieldModel,
    FieldPlacement, FieldTable, Number, SolverSummary, SolverVerdict,
};
use crate::error::{Error, Result};
use crate::exact::{rational_from_f64, rational_to_f64};
use crate::hamiltonian::increment_factor;
use crate::tree::{configurations, GrowthStep, Spin};

/// Largest ratio, in log scale, between fields at the added vertex.
const LOG_RANGE: f64 = 600.0;

/// Largest change of one log-field per sweep.
const MAX_STEP: f64 = 10.0;

/// The search stops early after this many sweeps without the spread
/// shrinking by a relative `STALL_GAIN`.
const STALL_SWEEPS: usize = 200;
const STALL_GAIN: f64 = 1e-9;

/// Singular values below this are treated as zero in the step solve.
const SINGULAR_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub damping: f64,
    /// Convergence threshold on the relative spread of the right-hand side.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub budget: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 10_000,
            budget: super::DEFAULT_BUDGET,
        }
    }
}

pub fn solve_boundary_field(
    step: &GrowthStep,
    model: &FieldModel,
    q: Spin,
    options: SolverOptions,
) -> Result<(FieldTable, ConsistencyReport)> {
    step.validate()?;
    if q < 2 {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("solver needs at least two spins, got {q}"),
        });
    }
    if model.fields.mode() != FieldMode::FiniteAlphabet {
        return Err(Error::InvalidParameter {
            name: "fields",
            reason: "solver works on finite-alphabet tables".into(),
        });
    }
    check_budget(step.base().len() + 1, q, options.budget)?;

    let v = step.added();
    let rows: Vec<(Vec<f64>, f64)> = configurations(step.base(), q)
        .map(|sigma| {
            let s_u = sigma.spin(step.anchor()).expect("anchor lies in base");
            let g_u = rational_to_f64(model.fields.get(s_u, step.anchor())?);
            let coeffs = (0..q)
                .map(|s| {
                    f64::energy_factor(
                        &increment_factor(&sigma, s, &model.theta).factor,
                        model.beta,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((coeffs, g_u))
        })
        .collect::<Result<_>>()?;

    let mut log_g: Vec<f64> = (0..q)
        .map(|s| model.fields.get(s, v).map(|g| rational_to_f64(g).ln()))
        .collect::<Result<_>>()?;

    let rhs_of = |log_g: &[f64]| -> Vec<f64> {
        let g: Vec<f64> = log_g.iter().map(|x| x.exp()).collect();
        rows.iter()
            .map(|(a, g_u)| a.iter().zip(&g).map(|(a, g)| a * g).sum::<f64>() / g_u)
            .collect()
    };

    let top = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut iterations = 0;
    let mut rhs = rhs_of(&log_g);
    let mut spread = spread_of(&rhs).2.unwrap_or(0.0);
    let mut best = (spread, log_g.clone());
    let mut since_progress = 0;
    while best.0 > options.tolerance
        && iterations < options.max_iterations
        && since_progress < STALL_SWEEPS
    {
        let g: Vec<f64> = log_g.iter().map(|x| x.exp()).collect();
        let log_rhs: Vec<f64> = rhs.iter().map(|r| r.ln()).collect();
        let mean = log_rhs.iter().sum::<f64>() / log_rhs.len() as f64;
        // share[σ][s] = d ln rhs_σ / d x_s
        let mut jac = DMatrix::from_fn(rows.len(), q as usize, |i, s| {
            let a = &rows[i].0;
            let total: f64 = a.iter().zip(&g).map(|(a, g)| a * g).sum();
            a[s] * g[s] / total
        });
        for mut col in jac.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        let residual = DVector::from_iterator(log_rhs.len(), log_rhs.iter().map(|l| l - mean));
        let step = jac
            .svd(true, true)
            .solve(&residual, SINGULAR_CUTOFF)
            .map_err(|e| Error::Structural(format!("solver step failed: {e}")))?;
        for (x, d) in log_g.iter_mut().zip(step.iter()) {
            *x -= options.damping * d.clamp(-MAX_STEP, MAX_STEP);
        }
        // rhs_σ is homogeneous in g_{·,v}, so pinning the largest entry
        // loses nothing; the floor keeps every entry a positive double.
        let shift = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - top;
        for x in log_g.iter_mut() {
            *x = (*x - shift).max(top - LOG_RANGE);
        }
        iterations += 1;
        rhs = rhs_of(&log_g);
        spread = spread_of(&rhs).2.unwrap_or(0.0);
        if spread < best.0 * (1.0 - STALL_GAIN) {
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        if spread < best.0 {
            best = (spread, log_g.clone());
        }
    }
    let (spread, log_g) = best;

    let mut table = model.fields.clone();
    for (s, x) in log_g.iter().enumerate() {
        table.set(s as Spin, v.clone(), rational_from_f64(x.exp())?)?;
    }
    let solved = FieldModel::new(model.theta.clone(), model.beta, table.clone());
    let mut report = marginal_check(step, &solved, q, FieldPlacement::GrowthPair, options.budget)?;
    report.solver = Some(SolverSummary {
        verdict: if spread <= options.tolerance {
            SolverVerdict::Converged
        } else {
            SolverVerdict::Unresolved
        },
        iterations,
        spread,
        tolerance: options.tolerance,
        fields_at_added: (0..q)
            .map(|s| table.get(s, v).map(|g| Number::real(rational_to_f64(g))))
            .collect::<Result<_>>()?,
    });
    Ok((table, report))
}

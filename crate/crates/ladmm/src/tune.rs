//! HBIC-based selection of the penalty levels (lambda1, lambda2).
//!
//! HBIC(beta) = log(sum_i L(y_i - x_i' beta)) + |S| * (log log n / n) * C_n
//! with C_n = 6 log p by default. The lambda1 grid is walked from sparse to
//! dense with warm starts; ties break toward the larger lambda1 (sparser
//! model). The grid top is the smallest lambda1 that zeroes every
//! coefficient, found by bisection.

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;
use crate::solver::{fit_sequential, fit_sequential_warm, resolve_eta, resolve_mu, FitResult, SolverConfig, WarmStart};
use serde::Serialize;

/// Coefficients with absolute value above this count as selected.
pub const NONZERO_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 0.01;
pub const DEFAULT_LAMBDA2_GRID: [f64; 3] = [0.0, 0.1, 1.0];

pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > NONZERO_THRESHOLD)
        .map(|(j, _)| j)
        .collect()
}

pub fn num_nonzero(beta: &[f64]) -> usize {
    beta.iter().filter(|b| b.abs() > NONZERO_THRESHOLD).count()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum CnRule {
    SixLogP,
    Custom(f64),
}

impl CnRule {
    pub fn value(&self, p: usize) -> f64 {
        match self {
            CnRule::SixLogP => 6.0 * (p as f64).ln(),
            CnRule::Custom(c) => *c,
        }
    }
}

/// High-dimensional BIC. A zero residual loss returns negative infinity
/// (perfect-fit sentinel); callers see it win every comparison.
pub fn hbic(residual_loss_sum: f64, support_size: usize, n: usize, p: usize, rule: CnRule) -> f64 {
    debug_assert!(n >= 3, "log log n needs n >= 3");
    if residual_loss_sum <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n_f = n as f64;
    residual_loss_sum.ln() + support_size as f64 * (n_f.ln().ln() / n_f) * rule.value(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneGrid {
    /// Strictly descending positive values.
    pub lambda1: Vec<f64>,
    /// Nonnegative ridge levels.
    pub lambda2: Vec<f64>,
}

impl TuneGrid {
    pub fn new(mut lambda1: Vec<f64>, lambda2: Vec<f64>) -> Result<Self> {
        if lambda1.is_empty() || lambda2.is_empty() {
            return Err(Error::InvalidSpec { what: "tuning grid", why: "empty grid".into() });
        }
        lambda1.sort_by(|a, b| b.total_cmp(a));
        lambda1.dedup();
        if lambda1.iter().any(|&l| !(l > 0.0) || !l.is_finite())
            || lambda2.iter().any(|&l| !(l >= 0.0) || !l.is_finite())
        {
            return Err(Error::InvalidSpec {
                what: "tuning grid",
                why: "lambda1 must be positive and lambda2 nonnegative".into(),
            });
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// `points` log-spaced lambda1 values from `lambda_max` down to
    /// `ratio * lambda_max`.
    pub fn log_spaced(lambda_max: f64, points: usize, ratio: f64, lambda2: Vec<f64>) -> Result<Self> {
        if !(lambda_max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || points < 2 {
            return Err(Error::InvalidSpec {
                what: "tuning grid",
                why: format!("need lambda_max > 0, 0 < ratio < 1, points >= 2; got {lambda_max}, {ratio}, {points}"),
            });
        }
        let log_hi = lambda_max.ln();
        let log_lo = (ratio * lambda_max).ln();
        let lambda1 = (0..points)
            .map(|i| (log_hi + (log_lo - log_hi) * i as f64 / (points - 1) as f64).exp())
            .collect();
        Self::new(lambda1, lambda2)
    }
}

/// Smallest lambda1 (up to bisection precision) at which the fit is
/// identically zero, found by doubling then bisection. Returns the upper
/// bracket end, so the grid top is guaranteed sparse.
pub fn estimate_lambda_max(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<f64> {
    let all_zero = |l1: f64| -> Result<bool> {
        let pen = penalty.with_lambda1(l1)?;
        let fit = fit_sequential(x, y, loss, &pen, config)?;
        Ok(num_nonzero(&fit.beta) == 0)
    };
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while !all_zero(hi)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::TuneFailed("no lambda1 zeroes the fit".into()));
        }
    }
    let mut lo = hi / 2.0;
    while all_zero(lo)? {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-10 {
            return Err(Error::TuneFailed(
                "the fit is zero at arbitrarily small lambda1; nothing to select".into(),
            ));
        }
    }
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if all_zero(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Default grid: 50 log-spaced lambda1 values spanning two decades below the
/// estimated lambda_max, crossed with lambda2 in {0, 0.1, 1}.
pub fn auto_grid(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    lambda2: Option<Vec<f64>>,
) -> Result<TuneGrid> {
    let lambda_max = estimate_lambda_max(x, y, loss, penalty, config)?;
    TuneGrid::log_spaced(
        lambda_max,
        DEFAULT_GRID_POINTS,
        DEFAULT_GRID_RATIO,
        lambda2.unwrap_or_else(|| DEFAULT_LAMBDA2_GRID.to_vec()),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct PathEntry {
    pub lambda1: f64,
    pub lambda2: f64,
    pub hbic: f64,
    pub nonzero: usize,
    pub residual_loss_sum: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub hbic: f64,
    pub penalty: PenaltySpec,
    pub fit: FitResult,
    pub path: Vec<PathEntry>,
}

/// Fits every grid point, warm-starting each lambda1 step from the previous
/// solution at the same lambda2, and returns the HBIC minimizer. Equal HBIC
/// keeps the earlier (larger lambda1, then smaller lambda2) point.
pub fn tune(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty_template: &PenaltySpec,
    grid: &TuneGrid,
    config: &SolverConfig,
    rule: CnRule,
) -> Result<TuneResult> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 3 {
        return Err(Error::TuneFailed("HBIC needs n >= 3".into()));
    }
    // mu and eta depend only on (X, loss); resolve once and pin across fits
    let mu = config.mu.unwrap_or_else(|| resolve_mu(loss, n));
    let eta = match config.eta {
        Some(e) => e,
        None => resolve_eta(x, mu, config.eta_safety),
    };
    let cfg = SolverConfig { mu: Some(mu), eta: Some(eta), record_trace: false, ..config.clone() };

    let mut best: Option<(f64, TuneResult)> = None;
    let mut path = Vec::with_capacity(grid.lambda1.len() * grid.lambda2.len());
    for &l2 in &grid.lambda2 {
        let mut prev: Option<FitResult> = None;
        for &l1 in &grid.lambda1 {
            let pen = PenaltySpec::new(penalty_template.kind(), penalty_template.a(), l1, l2)?;
            let warm = prev.as_ref().map(|f| WarmStart { beta: &f.beta, r: &f.r, d: &f.d });
            let fit = fit_sequential_warm(x, y, loss, &pen, &cfg, warm, |_, _, _, _| {})?;
            let xb = x.matvec(&fit.beta);
            let rls: f64 = y.iter().zip(&xb).map(|(&yi, &xi)| loss.value(yi - xi)).sum();
            let nz = num_nonzero(&fit.beta);
            let score = hbic(rls, nz, n, p, rule);
            path.push(PathEntry {
                lambda1: l1,
                lambda2: l2,
                hbic: score,
                nonzero: nz,
                residual_loss_sum: rls,
                iterations: fit.iterations,
            });
            let better = match &best {
                Some((b, _)) => score < *b,
                None => true,
            };
            if better {
                best = Some((
                    score,
                    TuneResult {
                        lambda1: l1,
                        lambda2: l2,
                        hbic: score,
                        penalty: pen,
                        fit: fit.clone(),
                        path: Vec::new(),
                    },
                ));
            }
            prev = Some(fit);
        }
    }
    match best {
        Some((_, mut res)) => {
            res.path = path;
            Ok(res)
        }
        None => Err(Error::TuneFailed("no grid point produced a fit".into())),
    }
}

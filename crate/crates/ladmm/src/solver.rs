//! Sequential linearized ADMM on the split `X beta + r = y`.
//!
//! The beta step linearizes the quadratic coupling, so each iteration costs
//! two matrix-vector products plus two elementwise proxes; the matrix
//! `eta*I - mu*X'X` is never formed. `eta` must dominate the largest
//! eigenvalue of `mu*X'X`, which is estimated by the power method unless the
//! caller pins a value.

use crate::error::{Error, Result};
use crate::linalg::{shard_spectral_bound, DesignMatrix};
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;
use serde::Serialize;
use std::time::Instant;

/// Headroom multiplier applied to the estimated spectral bound.
pub const DEFAULT_ETA_SAFETY: f64 = 1.01;
/// Headroom multiplier applied to the theoretical lower bound on mu.
pub const DEFAULT_MU_SAFETY: f64 = 1.05;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Augmented Lagrangian parameter; `None` picks the default for the loss.
    pub mu: Option<f64>,
    /// Linearization constant; `None` estimates it via the power method.
    pub eta: Option<f64>,
    /// Multiplier on the spectral estimate when `eta` is auto-selected.
    pub eta_safety: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Run exactly this many iterations, ignoring the tolerance.
    pub exact_iters: Option<usize>,
    /// Record per-iteration diagnostics (objective, Lagrangian, residuals).
    pub record_trace: bool,
    /// Verify a pinned `eta` against a fresh spectral estimate before running.
    pub check_eta: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: None,
            eta: None,
            eta_safety: DEFAULT_ETA_SAFETY,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            exact_iters: None,
            record_trace: false,
            check_eta: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Converged,
    MaxIter,
    ExactIters,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    /// Penalized objective at the current beta (true residual `y - X beta`).
    pub objective: f64,
    /// Augmented Lagrangian at (beta, r, d).
    pub lagrangian: f64,
    /// `||X beta + r - y||_2`.
    pub primal_residual_norm: f64,
    /// Relative beta change, the stopping quantity.
    pub beta_change: f64,
    /// `max_i |grad L(r_i) - d_i|`; `None` when the loss is non-smooth.
    pub dual_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub r: Vec<f64>,
    pub d: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub mu_used: f64,
    pub eta_used: f64,
    pub trace: Vec<TraceEntry>,
    pub wall_time_secs: f64,
}

impl FitResult {
    pub fn objective(&self, x: &DesignMatrix, y: &[f64], loss: &LossSpec, penalty: &PenaltySpec) -> f64 {
        objective(x, y, &self.beta, loss, penalty)
    }
}

/// Default augmented Lagrangian parameter. The smooth quantile losses take
/// the descent threshold `sqrt(2n)/width` with headroom; the other losses
/// have no such constraint and use 1.
pub fn resolve_mu(loss: &LossSpec, n: usize) -> f64 {
    match loss.smoothing_width() {
        Some(width) => DEFAULT_MU_SAFETY * (2.0 * n as f64).sqrt() / width,
        None => 1.0,
    }
}

/// Spectral bound of `mu X'X` scaled by the safety factor.
pub fn resolve_eta(x: &DesignMatrix, mu: f64, eta_safety: f64) -> f64 {
    eta_safety * shard_spectral_bound(&x.shard(0..x.nrows()), mu)
}

/// Penalized objective `sum_i L(y_i - x_i' beta) + P(beta)`.
pub fn objective(x: &DesignMatrix, y: &[f64], beta: &[f64], loss: &LossSpec, penalty: &PenaltySpec) -> f64 {
    let xb = x.matvec(beta);
    let loss_sum: f64 = y.iter().zip(&xb).map(|(&yi, &xi)| loss.value(yi - xi)).sum();
    loss_sum + penalty.value(beta)
}

/// Augmented Lagrangian `L(r) + P(beta) - d'(Xb + r - y) + (mu/2)||Xb + r - y||^2`
/// computed from the precomputed products.
pub fn augmented_lagrangian(
    loss: &LossSpec,
    penalty: &PenaltySpec,
    beta: &[f64],
    r: &[f64],
    d: &[f64],
    resid: &[f64],
    mu: f64,
) -> f64 {
    let loss_sum = loss.value_sum(r);
    let pen = penalty.value(beta);
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..r.len() {
        lin += d[i] * resid[i];
        quad += resid[i] * resid[i];
    }
    loss_sum + pen - lin + 0.5 * mu * quad
}

/// Indices of trace entries whose Lagrangian exceeds the previous one beyond
/// relative rounding slack. Empty means the descent certificate holds.
pub fn check_descent_certificate(trace: &[TraceEntry]) -> Vec<usize> {
    let mut bad = Vec::new();
    for w in 1..trace.len() {
        let prev = trace[w - 1].lagrangian;
        let cur = trace[w].lagrangian;
        if cur > prev + 1e-8 * (1.0 + prev.abs()) {
            bad.push(w);
        }
    }
    bad
}

/// `max_i |grad L(r_i) - d_i|`. The r-update makes this identity hold
/// algebraically at every iterate for differentiable losses.
pub fn check_dual_optimality(loss: &LossSpec, r: &[f64], d: &[f64]) -> Result<f64> {
    if !loss.is_differentiable() {
        return Err(Error::NotApplicable("dual identity needs a differentiable loss"));
    }
    let mut gap = 0.0f64;
    for (&ri, &di) in r.iter().zip(d) {
        gap = gap.max((loss.grad(ri)? - di).abs());
    }
    Ok(gap)
}

/// Starting point for a warm-started fit (the default is beta = 0, r = y,
/// d = 0, which the parallel engine also pins for equivalence audits).
#[derive(Debug, Clone, Copy)]
pub struct WarmStart<'a> {
    pub beta: &'a [f64],
    pub r: &'a [f64],
    pub d: &'a [f64],
}

/// Sequential fit with a per-iteration observer called as
/// `observer(iter, beta, r, d)` after each full update.
pub fn fit_sequential_observed<F>(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    observer: F,
) -> Result<FitResult>
where
    F: FnMut(usize, &[f64], &[f64], &[f64]),
{
    fit_sequential_warm(x, y, loss, penalty, config, None, observer)
}

/// Sequential fit from an explicit starting point.
pub fn fit_sequential_warm<F>(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    warm: Option<WarmStart<'_>>,
    mut observer: F,
) -> Result<FitResult>
where
    F: FnMut(usize, &[f64], &[f64], &[f64]),
{
    let start = Instant::now();
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has {} entries but X has {n} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec { what: "response", why: "y must be finite".into() });
    }
    let mu = match config.mu {
        Some(m) if m > 0.0 && m.is_finite() => m,
        Some(m) => {
            return Err(Error::InvalidSpec { what: "solver config", why: format!("mu must be positive, got {m}") })
        }
        None => resolve_mu(loss, n),
    };
    let eta = match config.eta {
        Some(e) => {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidSpec { what: "solver config", why: format!("eta must be positive, got {e}") });
            }
            if config.check_eta {
                let bound = shard_spectral_bound(&x.shard(0..n), mu);
                if e <= bound {
                    return Err(Error::EtaBelowSpectralBound { eta: e, bound });
                }
            }
            e
        }
        None => resolve_eta(x, mu, config.eta_safety),
    };
    penalty.check_prox_condition(eta)?;

    let max_iter = config.exact_iters.unwrap_or(config.max_iter);
    let (mut beta, mut r, mut d) = match warm {
        Some(w) => {
            if w.beta.len() != p || w.r.len() != n || w.d.len() != n {
                return Err(Error::DimensionMismatch("warm start shapes do not match the problem".into()));
            }
            (w.beta.to_vec(), w.r.to_vec(), w.d.to_vec())
        }
        None => (vec![0.0f64; p], y.to_vec(), vec![0.0f64; n]),
    };
    let mut xb = x.matvec(&beta);
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut stop_reason = StopReason::MaxIter;
    let mut work_n = vec![0.0f64; n];
    let mut beta_new = vec![0.0f64; p];
    let mut r_new = vec![0.0f64; n];

    for k in 0..max_iter {
        // beta step: prox at beta - (mu/eta) X'(Xb + r - y - d/mu)
        for i in 0..n {
            work_n[i] = xb[i] + r[i] - y[i] - d[i] / mu;
        }
        let grad = x.matvec_t(&work_n);
        let scale = mu / eta;
        for j in 0..p {
            beta_new[j] = penalty.prox(eta, beta[j] - scale * grad[j]);
        }
        xb = x.matvec(&beta_new);

        // r step: prox at y + d/mu - X beta
        for i in 0..n {
            work_n[i] = y[i] + d[i] / mu - xb[i];
        }
        loss.prox_into(mu, &work_n, &mut r_new);

        // dual step on the constraint residual
        for i in 0..n {
            let resid = xb[i] + r_new[i] - y[i];
            d[i] -= mu * resid;
            work_n[i] = resid;
        }

        let mut change_sq = 0.0f64;
        let mut beta_norm_sq = 0.0f64;
        for j in 0..p {
            let delta = beta_new[j] - beta[j];
            change_sq += delta * delta;
            beta_norm_sq += beta_new[j] * beta_new[j];
        }
        let beta_change = change_sq.sqrt() / beta_norm_sq.sqrt().max(1.0);

        std::mem::swap(&mut beta, &mut beta_new);
        std::mem::swap(&mut r, &mut r_new);
        iterations = k + 1;

        if beta.iter().any(|v| !v.is_finite()) || r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(iterations));
        }

        if config.record_trace {
            let loss_sum: f64 = y.iter().zip(&xb).map(|(&yi, &xi)| loss.value(yi - xi)).sum();
            let lagrangian = augmented_lagrangian(loss, penalty, &beta, &r, &d, &work_n, mu);
            let primal = work_n.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dual_gap = check_dual_optimality(loss, &r, &d).ok();
            trace.push(TraceEntry {
                iter: iterations,
                objective: loss_sum + penalty.value(&beta),
                lagrangian,
                primal_residual_norm: primal,
                beta_change,
                dual_gap,
            });
        }

        observer(iterations, &beta, &r, &d);

        match config.exact_iters {
            Some(target) => {
                if iterations == target {
                    stop_reason = StopReason::ExactIters;
                    break;
                }
            }
            None => {
                // the pinned init (beta = 0, r = y) makes the first beta
                // update a no-op, so the change criterion starts at k = 2
                if iterations >= 2 && beta_change <= config.tol {
                    stop_reason = StopReason::Converged;
                    break;
                }
            }
        }
    }

    Ok(FitResult {
        beta,
        r,
        d,
        iterations,
        stop_reason,
        mu_used: mu,
        eta_used: eta,
        trace,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn fit_sequential(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<FitResult> {
    fit_sequential_observed(x, y, loss, penalty, config, |_, _, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, n: usize, p: usize) -> (DesignMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = DesignMatrix::new(n, p, data).unwrap();
        let beta_true: Vec<f64> = (0..p).map(|j| if j < 2 { 2.0 } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..p {
                    s += x.get(i, j) * beta_true[j];
                }
                s + 0.1 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        (x, y)
    }

    // dense symmetric solve by Gaussian elimination, used as an oracle
    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let p = b.len();
        for col in 0..p {
            let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..p {
                let f = a[row][col] / a[col][col];
                for k in col..p {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut xsol = vec![0.0; p];
        for row in (0..p).rev() {
            let mut s = b[row];
            for k in row + 1..p {
                s -= a[row][k] * xsol[k];
            }
            xsol[row] = s / a[row][row];
        }
        xsol
    }

    #[test]
    fn least_squares_ridge_matches_normal_equations() {
        let (x, y) = random_problem(3, 40, 5);
        let (n, p) = (x.nrows(), x.ncols());
        let lambda2 = 0.3;
        let loss = LossSpec::least_squares();
        let penalty = PenaltySpec::elastic_net(0.0, lambda2).unwrap();
        let cfg = SolverConfig { tol: 1e-12, max_iter: 20000, ..Default::default() };
        let fit = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();

        // oracle: (X'X + lambda2 I) beta = X'y
        let mut a = vec![vec![0.0; p]; p];
        for i in 0..n {
            for j in 0..p {
                for k in 0..p {
                    a[j][k] += x.get(i, j) * x.get(i, k);
                }
            }
        }
        for j in 0..p {
            a[j][j] += lambda2;
        }
        let b = x.matvec_t(&y);
        let oracle = solve_dense(a, b);
        for j in 0..p {
            assert!(
                (fit.beta[j] - oracle[j]).abs() < 1e-6,
                "j = {j}: {} vs {}",
                fit.beta[j],
                oracle[j]
            );
        }
        assert_eq!(fit.stop_reason, StopReason::Converged);
    }

    #[test]
    fn smooth_quantile_run_has_monotone_lagrangian_and_dual_identity() {
        let (x, y) = random_problem(9, 120, 10);
        let loss = LossSpec::smooth_quantile_c(0.7, 0.2).unwrap();
        let penalty = PenaltySpec::snet(3.7, 0.2, 0.1).unwrap();
        let cfg = SolverConfig { record_trace: true, max_iter: 300, tol: 1e-8, ..Default::default() };
        let fit = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();
        assert!(fit.mu_used >= (2.0 * 120.0f64).sqrt() / 0.2);
        assert!(check_descent_certificate(&fit.trace).is_empty());
        for e in &fit.trace {
            let gap = e.dual_gap.unwrap();
            assert!(gap <= 1e-10, "iter {} gap {gap}", e.iter);
        }
        let final_gap = check_dual_optimality(&loss, &fit.r, &fit.d).unwrap();
        assert!(final_gap <= 1e-10);
    }

    #[test]
    fn exact_iteration_count_is_honored() {
        let (x, y) = random_problem(5, 30, 4);
        let loss = LossSpec::least_squares();
        let penalty = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        let cfg = SolverConfig { exact_iters: Some(17), ..Default::default() };
        let fit = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();
        assert_eq!(fit.iterations, 17);
        assert_eq!(fit.stop_reason, StopReason::ExactIters);
    }

    #[test]
    fn max_iter_stop_is_reported() {
        let (x, y) = random_problem(5, 30, 4);
        let loss = LossSpec::quantile(0.5).unwrap();
        let penalty = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        let cfg = SolverConfig { max_iter: 2, tol: 1e-14, ..Default::default() };
        let fit = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();
        assert_eq!(fit.stop_reason, StopReason::MaxIter);
        // non-smooth loss: dual identity not applicable
        assert!(check_dual_optimality(&loss, &fit.r, &fit.d).is_err());
    }

    #[test]
    fn pinned_eta_below_bound_is_rejected_when_checked() {
        let (x, y) = random_problem(2, 50, 6);
        let loss = LossSpec::least_squares();
        let penalty = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        let cfg = SolverConfig { eta: Some(1e-6), check_eta: true, ..Default::default() };
        assert!(matches!(
            fit_sequential(&x, &y, &loss, &penalty, &cfg),
            Err(Error::EtaBelowSpectralBound { .. })
        ));
        let cfg = SolverConfig { eta: Some(1e6), check_eta: true, ..Default::default() };
        assert!(fit_sequential(&x, &y, &loss, &penalty, &cfg).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (x, _) = random_problem(2, 10, 3);
        let loss = LossSpec::least_squares();
        let penalty = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        let y = vec![0.0; 9];
        assert!(matches!(
            fit_sequential(&x, &y, &loss, &penalty, &SolverConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }
}

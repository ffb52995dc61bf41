//! Coordinator/worker engine over contiguous row shards.
//!
//! Each of the `M` logical workers owns one shard `X_m, y_m` plus its local
//! `r_m, d_m`. Per iteration the protocol exchanges exactly two vectors per
//! worker: the worker's gathered p-vector
//! `xi_m = X_m'(X_m beta + r_m - y_m - d_m/mu)` and the coordinator's beta
//! broadcast. At setup each worker reports its spectral bound
//! `eta_m = eigen(mu X_m' X_m)` as one scalar; the coordinator linearizes at
//! `eta = safety * sum_m eta_m` unless a value is pinned. The final
//! state gather (r_m, d_m) is bookkeeping, not part of the iteration
//! protocol, and is not logged.
//!
//! Logical workers are multiplexed over `min(M, PIPADMM_THREADS)` pool
//! threads; the message log records protocol messages per logical worker, so
//! counts do not depend on the thread pool size. The coordinator reduces the
//! xi vectors in ascending shard order, which makes the float result
//! independent of message arrival order.

use crate::error::{Error, Result};
use crate::linalg::{partition_rows, shard_spectral_bound, DesignMatrix, Partition, Shard};
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;
use crate::solver::{fit_sequential_observed, FitResult, SolverConfig, StopReason, TraceEntry};
use serde::Serialize;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Instant;

pub const THREADS_ENV_VAR: &str = "PIPADMM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    ToCoordinator,
    ToWorker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PayloadKind {
    Xi,
    Beta,
    EtaScalar,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MessageRecord {
    /// 0 is setup; iteration k's gather and broadcast share round k.
    pub round: usize,
    pub direction: Direction,
    pub shard_id: usize,
    pub payload_kind: PayloadKind,
    /// Number of f64 entries in the payload.
    pub len: usize,
    /// L2 norm of the payload (absolute value for scalars).
    pub payload_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ParallelConfig {
    pub solver: SolverConfig,
    /// Pool thread cap; `None` reads `PIPADMM_THREADS`, defaulting to `M`.
    pub threads: Option<usize>,
    pub log_messages: bool,
    /// Keep a copy of beta after every iteration (used by the audit).
    pub record_beta_trace: bool,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            threads: None,
            log_messages: false,
            record_beta_trace: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParallelFit {
    pub result: FitResult,
    pub num_shards: usize,
    pub threads_used: usize,
    /// Per-shard spectral bounds; empty when eta was pinned.
    pub eta_components: Vec<f64>,
    pub messages: Vec<MessageRecord>,
    pub beta_trace: Vec<Vec<f64>>,
}

impl ParallelFit {
    pub fn vector_message_count(&self) -> usize {
        self.messages.iter().filter(|m| m.payload_kind != PayloadKind::EtaScalar).count()
    }

    pub fn scalar_message_count(&self) -> usize {
        self.messages.iter().filter(|m| m.payload_kind == PayloadKind::EtaScalar).count()
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `safety * sum_m eigen(mu X_m' X_m)`, the default parallel linearization
/// constant. It dominates `eigen(mu X'X)` because `X'X = sum_m X_m' X_m`.
pub fn aggregate_eta(x: &DesignMatrix, partition: &Partition, mu: f64, safety: f64) -> f64 {
    safety
        * partition
            .ranges()
            .iter()
            .map(|r| shard_spectral_bound(&x.shard(r.clone()), mu))
            .sum::<f64>()
}

pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV_VAR).ok()?.trim().parse::<usize>().ok().filter(|&t| t > 0)
}

#[derive(Debug, Clone, Copy, Default)]
struct ShardStats {
    loss_fit: f64,
    loss_r: f64,
    lin: f64,
    resid_sq: f64,
    dual_gap: Option<f64>,
}

enum CoordMsg {
    Round { beta: Arc<Vec<f64>>, last: bool },
}

enum WorkerMsg {
    Eta { shard: usize, value: f64 },
    Xi { shard: usize, xi: Vec<f64>, stats: Option<ShardStats> },
    Final { shard: usize, r: Vec<f64>, d: Vec<f64>, stats: ShardStats },
}

struct WorkerLocal<'a> {
    shard_id: usize,
    x: Shard<'a>,
    y: &'a [f64],
    r: Vec<f64>,
    d: Vec<f64>,
}

impl<'a> WorkerLocal<'a> {
    fn new(shard_id: usize, x: Shard<'a>, y: &'a [f64]) -> Self {
        let nm = x.nrows();
        Self { shard_id, x, y, r: y.to_vec(), d: vec![0.0; nm] }
    }

    fn xi(&self, xb: &[f64], mu: f64) -> Vec<f64> {
        let work: Vec<f64> = (0..self.r.len())
            .map(|i| xb[i] + self.r[i] - self.y[i] - self.d[i] / mu)
            .collect();
        self.x.matvec_t(&work)
    }

    /// r and d updates for the freshly broadcast beta; returns `X_m beta`.
    fn advance(&mut self, beta: &[f64], loss: &LossSpec, mu: f64) -> Vec<f64> {
        let xb = self.x.matvec(beta);
        for i in 0..self.r.len() {
            let v = self.y[i] + self.d[i] / mu - xb[i];
            self.r[i] = loss.prox(mu, v);
            self.d[i] -= mu * (xb[i] + self.r[i] - self.y[i]);
        }
        xb
    }

    fn stats(&self, xb: &[f64], loss: &LossSpec) -> ShardStats {
        let mut s = ShardStats::default();
        let mut gap: Option<f64> = None;
        for i in 0..self.r.len() {
            s.loss_fit += loss.value(self.y[i] - xb[i]);
            s.loss_r += loss.value(self.r[i]);
            let resid = xb[i] + self.r[i] - self.y[i];
            s.lin += self.d[i] * resid;
            s.resid_sq += resid * resid;
            if loss.is_differentiable() {
                let g = (loss.grad(self.r[i]).unwrap() - self.d[i]).abs();
                gap = Some(gap.unwrap_or(0.0).max(g));
            }
        }
        s.dual_gap = gap;
        s
    }
}

fn worker_loop(
    workers: &mut [WorkerLocal<'_>],
    loss: LossSpec,
    mu: f64,
    send_eta: bool,
    want_stats: bool,
    rx: mpsc::Receiver<CoordMsg>,
    tx: mpsc::Sender<WorkerMsg>,
) {
    if send_eta {
        for w in workers.iter() {
            let value = shard_spectral_bound(&w.x, mu);
            if tx.send(WorkerMsg::Eta { shard: w.shard_id, value }).is_err() {
                return;
            }
        }
    }
    // initial gather from (beta = 0, r = y, d = 0)
    for w in workers.iter() {
        let xb = vec![0.0f64; w.r.len()];
        let xi = w.xi(&xb, mu);
        if tx.send(WorkerMsg::Xi { shard: w.shard_id, xi, stats: None }).is_err() {
            return;
        }
    }
    while let Ok(CoordMsg::Round { beta, last }) = rx.recv() {
        for w in workers.iter_mut() {
            let xb = w.advance(&beta, &loss, mu);
            if last {
                let stats = w.stats(&xb, &loss);
                let msg = WorkerMsg::Final {
                    shard: w.shard_id,
                    r: std::mem::take(&mut w.r),
                    d: std::mem::take(&mut w.d),
                    stats,
                };
                if tx.send(msg).is_err() {
                    return;
                }
            } else {
                let stats = want_stats.then(|| w.stats(&xb, &loss));
                let xi = w.xi(&xb, mu);
                if tx.send(WorkerMsg::Xi { shard: w.shard_id, xi, stats }).is_err() {
                    return;
                }
            }
        }
        if last {
            return;
        }
    }
}

/// Parallel fit over `M = partition.num_shards()` logical workers.
pub fn fit_parallel(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    partition: &Partition,
    config: &ParallelConfig,
) -> Result<ParallelFit> {
    let start = Instant::now();
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has {} entries but X has {n} rows",
            y.len()
        )));
    }
    let m = partition.num_shards();
    let cfg = &config.solver;
    let mu = match cfg.mu {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(Error::InvalidSpec { what: "solver config", why: format!("mu must be positive, got {v}") })
        }
        None => crate::solver::resolve_mu(loss, n),
    };
    let auto_eta = cfg.eta.is_none();
    let threads_used = config
        .threads
        .or_else(thread_cap_from_env)
        .unwrap_or(m)
        .clamp(1, m);
    let want_stats = cfg.record_trace;

    // chunk logical workers contiguously over pool threads
    let chunk_part = partition_rows(m, threads_used, None)?;

    let (reply_tx, reply_rx) = mpsc::channel::<WorkerMsg>();

    std::thread::scope(|scope| -> Result<ParallelFit> {
        // round_txs must live inside the scope: dropping them on an early
        // error return is what unblocks worker recv() so the join succeeds
        let mut round_txs: Vec<mpsc::Sender<CoordMsg>> = Vec::with_capacity(threads_used);
        for chunk in chunk_part.ranges() {
            let (tx, rx) = mpsc::channel::<CoordMsg>();
            round_txs.push(tx);
            let mut locals: Vec<WorkerLocal<'_>> = chunk
                .clone()
                .map(|sid| {
                    let rows = partition.ranges()[sid].clone();
                    WorkerLocal::new(sid, x.shard(rows.clone()), &y[rows])
                })
                .collect();
            let reply = reply_tx.clone();
            let loss = *loss;
            scope.spawn(move || worker_loop(&mut locals, loss, mu, auto_eta, want_stats, rx, reply));
        }
        drop(reply_tx);

        let mut messages: Vec<MessageRecord> = Vec::new();
        let mut log = |rec: MessageRecord| {
            if config.log_messages {
                messages.push(rec);
            }
        };

        // setup: collect the per-shard spectral bounds (when eta is auto)
        // and the round-1 xi vectors; with several pool threads the two
        // message kinds interleave arbitrarily on the shared channel
        let mut eta_components = vec![0.0f64; if auto_eta { m } else { 0 }];
        let mut first_xis: Vec<Option<Vec<f64>>> = vec![None; m];
        let need_eta = if auto_eta { m } else { 0 };
        let (mut got_eta, mut got_xi) = (0usize, 0usize);
        while got_eta < need_eta || got_xi < m {
            match reply_rx.recv() {
                Ok(WorkerMsg::Eta { shard, value }) if auto_eta => {
                    eta_components[shard] = value;
                    got_eta += 1;
                }
                Ok(WorkerMsg::Xi { shard, xi, .. }) => {
                    first_xis[shard] = Some(xi);
                    got_xi += 1;
                }
                Ok(_) => return Err(Error::WorkerFailure("unexpected message during setup".into())),
                Err(e) => return Err(Error::WorkerFailure(e.to_string())),
            }
        }
        if auto_eta {
            for shard in 0..m {
                log(MessageRecord {
                    round: 0,
                    direction: Direction::ToCoordinator,
                    shard_id: shard,
                    payload_kind: PayloadKind::EtaScalar,
                    len: 1,
                    payload_norm: eta_components[shard].abs(),
                });
            }
        }
        let eta = match cfg.eta {
            Some(e) if e > 0.0 && e.is_finite() => {
                if cfg.check_eta {
                    let bound = aggregate_eta(x, partition, mu, 1.0);
                    if e <= bound {
                        return Err(Error::EtaBelowSpectralBound { eta: e, bound });
                    }
                }
                e
            }
            Some(e) => {
                return Err(Error::InvalidSpec { what: "solver config", why: format!("eta must be positive, got {e}") })
            }
            None => cfg.eta_safety * eta_components.iter().sum::<f64>(),
        };
        penalty.check_prox_condition(eta)?;

        let max_iter = cfg.exact_iters.unwrap_or(cfg.max_iter);
        let mut beta = vec![0.0f64; p];
        let mut beta_trace: Vec<Vec<f64>> = Vec::new();
        let mut trace: Vec<TraceEntry> = Vec::new();
        // trace data for iteration k arrives with round k+1's gather
        let mut pending: Option<(usize, f64, f64)> = None;
        let mut iterations = 0usize;
        let mut stop_reason = StopReason::MaxIter;
        let scale = mu / eta;
        let mut buffered: Option<(Vec<Vec<f64>>, Vec<Option<ShardStats>>)> = Some((
            first_xis.into_iter().map(Option::unwrap).collect(),
            vec![None; m],
        ));

        let gather = |reply_rx: &mpsc::Receiver<WorkerMsg>| -> Result<(Vec<Vec<f64>>, Vec<Option<ShardStats>>)> {
            let mut xis: Vec<Option<Vec<f64>>> = vec![None; m];
            let mut stats: Vec<Option<ShardStats>> = vec![None; m];
            for _ in 0..m {
                match reply_rx.recv() {
                    Ok(WorkerMsg::Xi { shard, xi, stats: s }) => {
                        xis[shard] = Some(xi);
                        stats[shard] = s;
                    }
                    Ok(_) => return Err(Error::WorkerFailure("unexpected message during gather".into())),
                    Err(e) => return Err(Error::WorkerFailure(e.to_string())),
                }
            }
            Ok((xis.into_iter().map(Option::unwrap).collect(), stats))
        };

        let assemble_entry = |pending: &(usize, f64, f64), stats: &[Option<ShardStats>]| -> TraceEntry {
            let &(iter, pen, beta_change) = pending;
            let mut loss_fit = 0.0;
            let mut loss_r = 0.0;
            let mut lin = 0.0;
            let mut resid_sq = 0.0;
            let mut gap: Option<f64> = None;
            for s in stats.iter().flatten() {
                loss_fit += s.loss_fit;
                loss_r += s.loss_r;
                lin += s.lin;
                resid_sq += s.resid_sq;
                if let Some(g) = s.dual_gap {
                    gap = Some(gap.unwrap_or(0.0).max(g));
                }
            }
            TraceEntry {
                iter,
                objective: loss_fit + pen,
                lagrangian: loss_r + pen - lin + 0.5 * mu * resid_sq,
                primal_residual_norm: resid_sq.sqrt(),
                beta_change,
                dual_gap: gap,
            }
        };

        loop {
            let (xis, stats) = match buffered.take() {
                Some(g) => g,
                None => gather(&reply_rx)?,
            };
            for shard in 0..m {
                log(MessageRecord {
                    round: iterations + 1,
                    direction: Direction::ToCoordinator,
                    shard_id: shard,
                    payload_kind: PayloadKind::Xi,
                    len: p,
                    payload_norm: l2_norm(&xis[shard]),
                });
            }
            if want_stats {
                if let Some(pend) = pending.take() {
                    trace.push(assemble_entry(&pend, &stats));
                }
            }

            // beta update, reducing xi in ascending shard order
            let mut xi_sum = vec![0.0f64; p];
            for xi in &xis {
                for (a, b) in xi_sum.iter_mut().zip(xi) {
                    *a += b;
                }
            }
            let mut change_sq = 0.0f64;
            let mut norm_sq = 0.0f64;
            for j in 0..p {
                let new = penalty.prox(eta, beta[j] - scale * xi_sum[j]);
                let delta = new - beta[j];
                change_sq += delta * delta;
                norm_sq += new * new;
                beta[j] = new;
            }
            let beta_change = change_sq.sqrt() / norm_sq.sqrt().max(1.0);
            iterations += 1;
            if beta.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged(iterations));
            }
            if config.record_beta_trace {
                beta_trace.push(beta.clone());
            }
            if want_stats {
                pending = Some((iterations, penalty.value(&beta), beta_change));
            }

            // same convention as the sequential loop: the change criterion
            // starts at iteration 2 because the first beta update is a no-op
            let converged = iterations >= 2 && beta_change <= cfg.tol;
            let last = match cfg.exact_iters {
                Some(t) => iterations == t,
                None => converged || iterations == max_iter,
            };
            if last {
                stop_reason = match cfg.exact_iters {
                    Some(_) => StopReason::ExactIters,
                    None if converged => StopReason::Converged,
                    None => StopReason::MaxIter,
                };
            }

            let shared = Arc::new(beta.clone());
            for tx in &round_txs {
                if tx.send(CoordMsg::Round { beta: Arc::clone(&shared), last }).is_err() {
                    return Err(Error::WorkerFailure("a worker thread exited early".into()));
                }
            }
            let beta_norm = l2_norm(&beta);
            for shard in 0..m {
                log(MessageRecord {
                    round: iterations,
                    direction: Direction::ToWorker,
                    shard_id: shard,
                    payload_kind: PayloadKind::Beta,
                    len: p,
                    payload_norm: beta_norm,
                });
            }

            if last {
                // unlogged bookkeeping gather of the final local states
                let mut r = vec![0.0f64; n];
                let mut d = vec![0.0f64; n];
                let mut final_stats: Vec<Option<ShardStats>> = vec![None; m];
                for _ in 0..m {
                    match reply_rx.recv() {
                        Ok(WorkerMsg::Final { shard, r: rm, d: dm, stats }) => {
                            let range = partition.ranges()[shard].clone();
                            r[range.clone()].copy_from_slice(&rm);
                            d[range].copy_from_slice(&dm);
                            final_stats[shard] = Some(stats);
                        }
                        Ok(_) => return Err(Error::WorkerFailure("unexpected message at shutdown".into())),
                        Err(e) => return Err(Error::WorkerFailure(e.to_string())),
                    }
                }
                if want_stats {
                    if let Some(pend) = pending.take() {
                        trace.push(assemble_entry(&pend, &final_stats));
                    }
                }
                let result = FitResult {
                    beta,
                    r,
                    d,
                    iterations,
                    stop_reason,
                    mu_used: mu,
                    eta_used: eta,
                    trace,
                    wall_time_secs: start.elapsed().as_secs_f64(),
                };
                return Ok(ParallelFit {
                    result,
                    num_shards: m,
                    threads_used,
                    eta_components,
                    messages,
                    beta_trace,
                });
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub iterations: usize,
    pub eta: f64,
    pub mu: f64,
    /// `(M, max over iterations and coordinates of |beta_parallel - beta_sequential|)`.
    pub deviations: Vec<(usize, f64)>,
    /// Per-iteration deviation, maximized over shard counts and coordinates.
    pub per_iteration: Vec<f64>,
    pub max_deviation: f64,
}

/// Runs the same problem sequentially and with each shard count in `ms`,
/// all for exactly `iters` iterations under one pinned `eta`, and reports
/// the worst per-M deviation of the beta iterates from the sequential run.
pub fn run_equivalence_audit(
    x: &DesignMatrix,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    base: &SolverConfig,
    ms: &[usize],
    iters: usize,
) -> Result<AuditReport> {
    let eta = base.eta.ok_or(Error::AuditRequiresPinnedEta)?;
    let seq_cfg = SolverConfig { exact_iters: Some(iters), record_trace: false, ..base.clone() };
    let mut seq_trace: Vec<Vec<f64>> = Vec::with_capacity(iters);
    let seq = fit_sequential_observed(x, y, loss, penalty, &seq_cfg, |_, beta, _, _| {
        seq_trace.push(beta.to_vec());
    })?;

    let mut deviations = Vec::with_capacity(ms.len());
    let mut per_iteration = vec![0.0f64; seq_trace.len()];
    let mut max_deviation = 0.0f64;
    for &m in ms {
        let partition = partition_rows(x.nrows(), m, None)?;
        let pcfg = ParallelConfig {
            solver: seq_cfg.clone(),
            record_beta_trace: true,
            ..Default::default()
        };
        let fit = fit_parallel(x, y, loss, penalty, &partition, &pcfg)?;
        if fit.beta_trace.len() != seq_trace.len() {
            return Err(Error::WorkerFailure(format!(
                "audit trace length mismatch for M = {m}: {} vs {}",
                fit.beta_trace.len(),
                seq_trace.len()
            )));
        }
        let mut dev = 0.0f64;
        for (k, (a, b)) in fit.beta_trace.iter().zip(&seq_trace).enumerate() {
            let mut iter_dev = 0.0f64;
            for (ai, bi) in a.iter().zip(b) {
                iter_dev = iter_dev.max((ai - bi).abs());
            }
            per_iteration[k] = per_iteration[k].max(iter_dev);
            dev = dev.max(iter_dev);
        }
        deviations.push((m, dev));
        max_deviation = max_deviation.max(dev);
    }
    Ok(AuditReport { iterations: iters, eta, mu: seq.mu_used, deviations, per_iteration, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::fit_sequential;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(seed: u64, n: usize, p: usize) -> (DesignMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = DesignMatrix::new(n, p, data).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * x.get(i, 0) - x.get(i, 1) + 0.1 * rng.gen_range(-1.0..1.0))
            .collect();
        (x, y)
    }

    #[test]
    fn single_shard_matches_sequential_exactly() {
        let (x, y) = problem(1, 60, 7);
        let loss = LossSpec::smooth_quantile_c(0.6, 0.3).unwrap();
        let penalty = PenaltySpec::snet(3.7, 0.1, 0.05).unwrap();
        let eta = aggregate_eta(&x, &partition_rows(60, 1, None).unwrap(), crate::solver::resolve_mu(&loss, 60), 1.01);
        let cfg = SolverConfig { eta: Some(eta), tol: 1e-8, max_iter: 400, ..Default::default() };
        let seq = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();
        let par = fit_parallel(
            &x,
            &y,
            &loss,
            &penalty,
            &partition_rows(60, 1, None).unwrap(),
            &ParallelConfig { solver: cfg, ..Default::default() },
        )
        .unwrap();
        assert_eq!(par.result.iterations, seq.iterations);
        assert_eq!(par.result.beta, seq.beta);
        assert_eq!(par.result.r, seq.r);
        assert_eq!(par.result.d, seq.d);
    }

    #[test]
    fn audit_is_tight_across_shard_counts() {
        let (x, y) = problem(2, 90, 8);
        let loss = LossSpec::smooth_quantile_kappa(0.7, 0.2).unwrap();
        let penalty = PenaltySpec::mnet(3.0, 0.15, 0.1).unwrap();
        let mu = crate::solver::resolve_mu(&loss, 90);
        let eta = aggregate_eta(&x, &partition_rows(90, 5, None).unwrap(), mu, 1.01);
        let cfg = SolverConfig { eta: Some(eta), mu: Some(mu), ..Default::default() };
        let report = run_equivalence_audit(&x, &y, &loss, &penalty, &cfg, &[1, 2, 5], 60).unwrap();
        assert!(report.max_deviation <= 1e-10, "deviation {}", report.max_deviation);
        assert_eq!(report.deviations.len(), 3);
    }

    #[test]
    fn audit_requires_pinned_eta() {
        let (x, y) = problem(3, 30, 4);
        let loss = LossSpec::least_squares();
        let penalty = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        assert!(matches!(
            run_equivalence_audit(&x, &y, &loss, &penalty, &SolverConfig::default(), &[1, 2], 10),
            Err(Error::AuditRequiresPinnedEta)
        ));
    }

    #[test]
    fn message_economy_two_vectors_per_worker_round() {
        let (x, y) = problem(4, 50, 6);
        let loss = LossSpec::smooth_quantile_c(0.5, 0.2).unwrap();
        let penalty = PenaltySpec::snet(3.7, 0.2, 0.0).unwrap();
        let m = 3;
        let partition = partition_rows(50, m, None).unwrap();
        let cfg = ParallelConfig { log_messages: true, ..Default::default() };
        let fit = fit_parallel(&x, &y, &loss, &penalty, &partition, &cfg).unwrap();
        let iters = fit.result.iterations;
        assert!(iters > 1);
        assert_eq!(fit.vector_message_count(), 2 * m * iters);
        assert_eq!(fit.scalar_message_count(), m);
        // every logged vector carries exactly p floats
        assert!(fit
            .messages
            .iter()
            .filter(|r| r.payload_kind != PayloadKind::EtaScalar)
            .all(|r| r.len == 6));
    }

    #[test]
    fn thread_cap_does_not_change_results() {
        let (x, y) = problem(5, 70, 5);
        let loss = LossSpec::huber(0.8).unwrap();
        let penalty = PenaltySpec::cnet(2.0, 0.1, 0.05).unwrap();
        let partition = partition_rows(70, 4, None).unwrap();
        let base = SolverConfig { eta: Some(200.0), ..Default::default() };
        let one = fit_parallel(
            &x, &y, &loss, &penalty, &partition,
            &ParallelConfig { solver: base.clone(), threads: Some(1), ..Default::default() },
        )
        .unwrap();
        let four = fit_parallel(
            &x, &y, &loss, &penalty, &partition,
            &ParallelConfig { solver: base, threads: Some(4), ..Default::default() },
        )
        .unwrap();
        assert_eq!(one.threads_used, 1);
        assert_eq!(four.threads_used, 4);
        assert_eq!(one.result.beta, four.result.beta);
        assert_eq!(one.result.iterations, four.result.iterations);
    }

    #[test]
    fn parallel_trace_matches_sequential_trace() {
        let (x, y) = problem(6, 40, 5);
        let loss = LossSpec::smooth_quantile_c(0.7, 0.25).unwrap();
        let penalty = PenaltySpec::snet(3.7, 0.1, 0.0).unwrap();
        let cfg = SolverConfig { eta: Some(150.0), record_trace: true, exact_iters: Some(25), ..Default::default() };
        let seq = fit_sequential(&x, &y, &loss, &penalty, &cfg).unwrap();
        let par = fit_parallel(
            &x, &y, &loss, &penalty,
            &partition_rows(40, 2, None).unwrap(),
            &ParallelConfig { solver: cfg, ..Default::default() },
        )
        .unwrap();
        assert_eq!(par.result.trace.len(), seq.trace.len());
        for (a, b) in par.result.trace.iter().zip(&seq.trace) {
            assert_eq!(a.iter, b.iter);
            assert!((a.objective - b.objective).abs() <= 1e-8 * (1.0 + b.objective.abs()));
            assert!((a.lagrangian - b.lagrangian).abs() <= 1e-8 * (1.0 + b.lagrangian.abs()));
            assert!(a.dual_gap.unwrap() <= 1e-9);
        }
    }
}

//! Shared test infrastructure: a brute-force scalar minimizer used to
//! cross-check the closed-form proximal operators, plus the randomized
//! case generators for every loss and penalty family.
#![allow(dead_code)]

use ladmm::loss::LossSpec;
use ladmm::penalty::{PenaltyKind, PenaltySpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CASES_PER_PAIR: usize = 10_000;
pub const ORACLE_TOL: f64 = 1e-6;

/// Minimizes `f` over `[lo, hi]` with a coarse grid to locate the basin,
/// then golden-section refinement inside the bracketing grid cell.
pub fn oracle_argmin<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> f64 {
    debug_assert!(grid >= 3 && hi > lo);
    let step = (hi - lo) / (grid as f64 - 1.0);
    let mut best_i = 0usize;
    let mut best = f64::INFINITY;
    for i in 0..grid {
        let v = f(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..90 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy)]
pub enum LossFamily {
    SmoothQuantileC,
    SmoothQuantileKappa,
    Quantile,
    LeastSquares,
    Huber,
}

pub const ALL_LOSSES: [LossFamily; 5] = [
    LossFamily::SmoothQuantileC,
    LossFamily::SmoothQuantileKappa,
    LossFamily::Quantile,
    LossFamily::LeastSquares,
    LossFamily::Huber,
];

pub const ALL_PENALTIES: [PenaltyKind; 4] = [
    PenaltyKind::Snet,
    PenaltyKind::Mnet,
    PenaltyKind::Cnet,
    PenaltyKind::ElasticNet,
];

pub fn draw_loss(family: LossFamily, rng: &mut ChaCha8Rng) -> LossSpec {
    match family {
        LossFamily::SmoothQuantileC => {
            LossSpec::smooth_quantile_c(rng.gen_range(0.05..0.95), rng.gen_range(0.05..1.0))
                .unwrap()
        }
        LossFamily::SmoothQuantileKappa => {
            LossSpec::smooth_quantile_kappa(rng.gen_range(0.05..0.95), rng.gen_range(0.05..1.0))
                .unwrap()
        }
        LossFamily::Quantile => LossSpec::quantile(rng.gen_range(0.05..0.95)).unwrap(),
        LossFamily::LeastSquares => LossSpec::least_squares(),
        LossFamily::Huber => LossSpec::huber(rng.gen_range(0.2..3.0)).unwrap(),
    }
}

/// Random penalty plus a linearization constant satisfying its prox
/// validity condition (eta >= 1 keeps every family valid for the a ranges
/// below).
pub fn draw_penalty(kind: PenaltyKind, rng: &mut ChaCha8Rng) -> (PenaltySpec, f64) {
    let lambda1 = rng.gen_range(0.0..2.0);
    let lambda2 = rng.gen_range(0.0..1.0);
    let eta = rng.gen_range(1.0..10.0);
    let a = match kind {
        PenaltyKind::Snet => rng.gen_range(2.05..5.0),
        PenaltyKind::Mnet => rng.gen_range(1.2..4.0),
        PenaltyKind::Cnet => rng.gen_range(0.5..3.0),
        PenaltyKind::ElasticNet => 1.0,
    };
    let pen = PenaltySpec::new(kind, a, lambda1, lambda2).unwrap();
    pen.check_prox_condition(eta).unwrap();
    (pen, eta)
}

/// The capped-L1 prox argmin jumps where its two branches tie; a draw
/// landing on the tie (a measure-zero set) has two equally valid answers,
/// so randomized cases near it are redrawn.
pub fn near_cnet_tie(pen: &PenaltySpec, eta: f64, v: f64) -> bool {
    if pen.kind() != PenaltyKind::Cnet {
        return false;
    }
    let tie = (pen.a() * (eta + pen.lambda2()) + 0.5 * pen.lambda1()) / eta;
    (v.abs() - tie).abs() < 0.01 * (1.0 + tie)
}

/// Runs `CASES_PER_PAIR` randomized scalar prox checks for one loss/penalty
/// pair against the grid + golden-section oracle.
pub fn run_pair(family: LossFamily, kind: PenaltyKind, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0usize;
    while done < CASES_PER_PAIR {
        let loss = draw_loss(family, &mut rng);
        let mu = rng.gen_range(0.1..10.0);
        let v = rng.gen_range(-5.0..5.0);
        let ours = loss.prox(mu, v);
        let oracle = oracle_argmin(
            |u| loss.value(u) + 0.5 * mu * (u - v) * (u - v),
            v.min(0.0) - 1.5,
            v.max(0.0) + 1.5,
            600,
        );
        if (ours - oracle).abs() > ORACLE_TOL {
            return Err(format!(
                "loss prox mismatch: {loss:?}, mu = {mu}, v = {v}: ours {ours} vs oracle {oracle}"
            ));
        }

        let (pen, eta) = draw_penalty(kind, &mut rng);
        let w = rng.gen_range(-5.0..5.0);
        if near_cnet_tie(&pen, eta, w) {
            continue;
        }
        let ours = pen.prox(eta, w);
        let oracle = oracle_argmin(
            |u| pen.value(&[u]) + 0.5 * eta * (u - w) * (u - w),
            w.min(0.0) - 0.5,
            w.max(0.0) + 0.5,
            1500,
        );
        if (ours - oracle).abs() > ORACLE_TOL {
            return Err(format!(
                "penalty prox mismatch: {pen:?}, eta = {eta}, v = {w}: ours {ours} vs oracle {oracle}"
            ));
        }
        done += 1;
    }
    Ok(())
}

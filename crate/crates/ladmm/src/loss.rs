//! Scalar loss functions and their proximal operators.
//!
//! The two smooth quantile losses replace the kink of the check function
//! `rho_tau(u) = u*(tau - 1{u<0})` by a quadratic piece of width `c`
//! (respectively `kappa`), which makes the gradient Lipschitz and the
//! proximal operator piecewise linear in its argument.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LossKind {
    SmoothQuantileC,
    SmoothQuantileKappa,
    Quantile,
    LeastSquares,
    Huber,
}

/// A validated loss specification. Construct through the named
/// constructors; invalid parameters are rejected there, not per call.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossSpec {
    kind: LossKind,
    tau: f64,
    c: f64,
    kappa: f64,
    huber_delta: f64,
}

impl LossSpec {
    pub fn smooth_quantile_c(tau: f64, c: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidSpec {
                what: "loss",
                why: format!("c must be a positive real, got {c}"),
            });
        }
        Ok(Self { kind: LossKind::SmoothQuantileC, tau, c, kappa: 0.0, huber_delta: 0.0 })
    }

    pub fn smooth_quantile_kappa(tau: f64, kappa: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidSpec {
                what: "loss",
                why: format!("kappa must be a positive real, got {kappa}"),
            });
        }
        Ok(Self { kind: LossKind::SmoothQuantileKappa, tau, c: 0.0, kappa, huber_delta: 0.0 })
    }

    pub fn quantile(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { kind: LossKind::Quantile, tau, c: 0.0, kappa: 0.0, huber_delta: 0.0 })
    }

    pub fn least_squares() -> Self {
        Self { kind: LossKind::LeastSquares, tau: 0.5, c: 0.0, kappa: 0.0, huber_delta: 0.0 }
    }

    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidSpec {
                what: "loss",
                why: format!("huber delta must be a positive real, got {delta}"),
            });
        }
        Ok(Self { kind: LossKind::Huber, tau: 0.5, c: 0.0, kappa: 0.0, huber_delta: delta })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn huber_delta(&self) -> f64 {
        self.huber_delta
    }

    /// Width of the quadratic smoothing zone, when the loss has one.
    pub fn smoothing_width(&self) -> Option<f64> {
        match self.kind {
            LossKind::SmoothQuantileC => Some(self.c),
            LossKind::SmoothQuantileKappa => Some(self.kappa),
            _ => None,
        }
    }

    /// Lipschitz constant of the gradient, when the loss is differentiable.
    pub fn grad_lipschitz(&self) -> Option<f64> {
        match self.kind {
            LossKind::SmoothQuantileC => Some(self.tau.max(1.0 - self.tau) / self.c),
            LossKind::SmoothQuantileKappa => Some(1.0 / self.kappa),
            LossKind::LeastSquares | LossKind::Huber => Some(1.0),
            LossKind::Quantile => None,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        self.kind != LossKind::Quantile
    }

    /// Scalar loss evaluation.
    pub fn value(&self, u: f64) -> f64 {
        let tau = self.tau;
        match self.kind {
            LossKind::SmoothQuantileC => {
                let c = self.c;
                if u >= c {
                    tau * (u - 0.5 * c)
                } else if u >= 0.0 {
                    tau * u * u / (2.0 * c)
                } else if u >= -c {
                    (1.0 - tau) * u * u / (2.0 * c)
                } else {
                    (tau - 1.0) * (u + 0.5 * c)
                }
            }
            LossKind::SmoothQuantileKappa => {
                let k = self.kappa;
                if u > tau * k {
                    tau * (u - 0.5 * tau * k)
                } else if u >= (tau - 1.0) * k {
                    u * u / (2.0 * k)
                } else {
                    (tau - 1.0) * (u - 0.5 * (tau - 1.0) * k)
                }
            }
            LossKind::Quantile => {
                if u < 0.0 {
                    u * (tau - 1.0)
                } else {
                    u * tau
                }
            }
            LossKind::LeastSquares => 0.5 * u * u,
            LossKind::Huber => {
                let d = self.huber_delta;
                if u.abs() <= d {
                    0.5 * u * u
                } else {
                    d * u.abs() - 0.5 * d * d
                }
            }
        }
    }

    /// Sum of the scalar loss over a residual vector.
    pub fn value_sum(&self, u: &[f64]) -> f64 {
        u.iter().map(|&ui| self.value(ui)).sum()
    }

    /// Gradient of the scalar loss. Errors for the (non-smooth) quantile loss.
    pub fn grad(&self, u: f64) -> Result<f64> {
        let tau = self.tau;
        Ok(match self.kind {
            LossKind::SmoothQuantileC => {
                let c = self.c;
                if u >= c {
                    tau
                } else if u >= 0.0 {
                    tau * u / c
                } else if u >= -c {
                    (1.0 - tau) * u / c
                } else {
                    tau - 1.0
                }
            }
            LossKind::SmoothQuantileKappa => {
                let k = self.kappa;
                if u > tau * k {
                    tau
                } else if u >= (tau - 1.0) * k {
                    u / k
                } else {
                    tau - 1.0
                }
            }
            LossKind::Quantile => return Err(Error::NotApplicable("quantile loss is not differentiable")),
            LossKind::LeastSquares => u,
            LossKind::Huber => u.clamp(-self.huber_delta, self.huber_delta),
        })
    }

    /// `argmin_u { L(u) + (mu/2)(u - v)^2 }`, evaluated in closed form.
    pub fn prox(&self, mu: f64, v: f64) -> f64 {
        debug_assert!(mu > 0.0);
        let tau = self.tau;
        match self.kind {
            LossKind::SmoothQuantileC => {
                let c = self.c;
                if v >= c + tau / mu {
                    v - tau / mu
                } else if v >= 0.0 {
                    c * mu * v / (c * mu + tau)
                } else if v >= -c + (tau - 1.0) / mu {
                    c * mu * v / (c * mu + 1.0 - tau)
                } else {
                    v - (tau - 1.0) / mu
                }
            }
            LossKind::SmoothQuantileKappa => {
                let k = self.kappa;
                if v >= tau * k + tau / mu {
                    v - tau / mu
                } else if v >= (tau - 1.0) * k + (tau - 1.0) / mu {
                    k * mu * v / (k * mu + 1.0)
                } else {
                    v - (tau - 1.0) / mu
                }
            }
            LossKind::Quantile => {
                // width-zero limit of the smooth variants
                if v >= tau / mu {
                    v - tau / mu
                } else if v >= (tau - 1.0) / mu {
                    0.0
                } else {
                    v - (tau - 1.0) / mu
                }
            }
            LossKind::LeastSquares => mu * v / (mu + 1.0),
            LossKind::Huber => {
                let d = self.huber_delta;
                if v.abs() <= d * (mu + 1.0) / mu {
                    mu * v / (mu + 1.0)
                } else {
                    v - d * v.signum() / mu
                }
            }
        }
    }

    /// Elementwise prox into `out` (lengths must agree).
    pub fn prox_into(&self, mu: f64, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), out.len());
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = self.prox(mu, vi);
        }
    }

    /// Elementwise prox of a vector.
    pub fn prox_vec(&self, mu: f64, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&vi| self.prox(mu, vi)).collect()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidSpec {
            what: "loss",
            why: format!("tau must lie strictly in (0,1), got {tau}"),
        });
    }
    Ok(())
}

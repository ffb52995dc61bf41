//! Nonconvex combined penalties and their proximal operators.
//!
//! Each penalty is `base(|beta|) + (lambda2/2)*||beta||^2` with base one of
//! SCAD, MCP, capped-L1, or the plain L1 norm. All proxes are evaluated on a
//! scalar kernel and applied elementwise; the sign of the output always
//! matches the sign of the input (or is zero).

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PenaltyKind {
    Snet,
    Mnet,
    Cnet,
    ElasticNet,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    a: f64,
    lambda1: f64,
    lambda2: f64,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, a: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::InvalidSpec {
                what: "penalty",
                why: format!("lambda1/lambda2 must be nonnegative, got {lambda1}, {lambda2}"),
            });
        }
        let a_ok = match kind {
            PenaltyKind::Snet => a > 2.0,
            PenaltyKind::Mnet => a > 1.0,
            PenaltyKind::Cnet => a > 0.0,
            PenaltyKind::ElasticNet => true,
        };
        if !a_ok || !a.is_finite() {
            return Err(Error::InvalidSpec {
                what: "penalty",
                why: format!("a = {a} out of range for {kind:?}"),
            });
        }
        Ok(Self { kind, a, lambda1, lambda2 })
    }

    pub fn snet(a: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(PenaltyKind::Snet, a, lambda1, lambda2)
    }

    pub fn mnet(a: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mnet, a, lambda1, lambda2)
    }

    pub fn cnet(a: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(PenaltyKind::Cnet, a, lambda1, lambda2)
    }

    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(PenaltyKind::ElasticNet, 1.0, lambda1, lambda2)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn with_lambda1(&self, lambda1: f64) -> Result<Self> {
        Self::new(self.kind, self.a, lambda1, self.lambda2)
    }

    /// Scalar penalty at `u` (including the ridge term).
    pub fn scalar_value(&self, u: f64) -> f64 {
        let t = u.abs();
        let (a, l1, l2) = (self.a, self.lambda1, self.lambda2);
        let base = match self.kind {
            PenaltyKind::Snet => {
                // SCAD
                if t <= l1 {
                    l1 * t
                } else if t <= a * l1 {
                    (2.0 * a * l1 * t - t * t - l1 * l1) / (2.0 * (a - 1.0))
                } else {
                    l1 * l1 * (a + 1.0) / 2.0
                }
            }
            PenaltyKind::Mnet => {
                // MCP
                if t <= a * l1 {
                    l1 * t - t * t / (2.0 * a)
                } else {
                    0.5 * a * l1 * l1
                }
            }
            PenaltyKind::Cnet => l1 * t.min(a),
            PenaltyKind::ElasticNet => l1 * t,
        };
        base + 0.5 * l2 * u * u
    }

    /// Penalty of a coefficient vector.
    pub fn value(&self, beta: &[f64]) -> f64 {
        beta.iter().map(|&b| self.scalar_value(b)).sum()
    }

    /// Checks the validity condition of the closed-form prox for this
    /// penalty at linearization constant `eta`.
    pub fn check_prox_condition(&self, eta: f64) -> Result<()> {
        let s = eta + self.lambda2;
        match self.kind {
            PenaltyKind::Snet if (self.a - 1.0) * s <= 1.0 => {
                Err(Error::SnetConditionViolated((self.a - 1.0) * s))
            }
            PenaltyKind::Mnet if self.a * s <= 1.0 => Err(Error::MnetConditionViolated(self.a * s)),
            _ => Ok(()),
        }
    }

    /// `argmin_u { P(|u|) + (eta/2)(u - v)^2 }` in closed form.
    ///
    /// The validity condition is checked by [`Self::check_prox_condition`];
    /// callers on hot paths should check once and use this directly.
    pub fn prox(&self, eta: f64, v: f64) -> f64 {
        debug_assert!(eta > 0.0);
        let (a, l1, l2) = (self.a, self.lambda1, self.lambda2);
        let s = eta + l2;
        let t = v.abs();
        match self.kind {
            PenaltyKind::Snet => {
                if t <= l1 * (1.0 + eta + l2) / eta {
                    v.signum() * ((eta * t - l1) / s).max(0.0)
                } else if t < a * l1 * s / eta {
                    v.signum() * (((a - 1.0) * eta * t - a * l1) / ((a - 1.0) * s - 1.0)).max(0.0)
                } else {
                    eta * v / s
                }
            }
            PenaltyKind::Mnet => {
                if t < a * l1 * s / eta {
                    v.signum() * ((a * eta * t - a * l1) / (a * s - 1.0)).max(0.0)
                } else {
                    eta * v / s
                }
            }
            PenaltyKind::Cnet => {
                // The two candidate minimizers (soft-thresholded interior
                // point vs. the ridge point past the cap) tie at
                // |v| = (a*(eta+l2) + l1/2)/eta, not at a*(eta+l2)/eta;
                // switching there keeps the exact argmin on both sides.
                if t < (a * s + 0.5 * l1) / eta {
                    v.signum() * ((eta * t - l1) / s).max(0.0)
                } else {
                    eta * v / s
                }
            }
            PenaltyKind::ElasticNet => v.signum() * ((eta * t - l1) / s).max(0.0),
        }
    }

    /// Elementwise prox into `out`; validity condition checked once.
    pub fn prox_into(&self, eta: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_prox_condition(eta)?;
        debug_assert_eq!(v.len(), out.len());
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = self.prox(eta, vi);
        }
        Ok(())
    }

    /// Elementwise prox of a vector.
    pub fn prox_vec(&self, eta: f64, v: &[f64]) -> Result<Vec<f64>> {
        self.check_prox_condition(eta)?;
        Ok(v.iter().map(|&vi| self.prox(eta, vi)).collect())
    }
}

//! The convex loss family: square, check (quantile), epsilon-insensitive,
//! logistic, and hinge, with value and chosen-subgradient evaluation.
//!
//! All five are convex and locally Lipschitz in the prediction argument.
//! The margin losses (logistic, hinge) expect labels in {-1, +1}; the
//! subgradient convention at kink points is to return 0 whenever 0 is an
//! admissible subgradient, which holds for every kink of the check, hinge,
//! and epsilon-insensitive losses.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// What values the response may take under a given loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelConvention {
    /// Any finite real response.
    RealValued,
    /// Labels restricted to {-1, +1}.
    Signs,
}

/// One of the five supported losses, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Square,
    Check { tau: f64 },
    EpsInsensitive { epsilon: f64 },
    Logistic,
    Hinge,
}

impl Loss {
    /// Check loss (quantile regression) at level `tau` in (0, 1).
    pub fn check(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 && tau.is_finite() {
            Ok(Loss::Check { tau })
        } else {
            Err(Error::InvalidParameter(format!(
                "check loss requires tau in (0, 1), got {tau}"
            )))
        }
    }

    /// Epsilon-insensitive loss with tube half-width `epsilon > 0`.
    pub fn eps_insensitive(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(Loss::EpsInsensitive { epsilon })
        } else {
            Err(Error::InvalidParameter(format!(
                "eps-insensitive loss requires epsilon > 0, got {epsilon}"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Square => "square",
            Loss::Check { .. } => "check",
            Loss::EpsInsensitive { .. } => "eps-insensitive",
            Loss::Logistic => "logistic",
            Loss::Hinge => "hinge",
        }
    }

    /// Growth order q of the loss (metadata only; 2 for square, 1 otherwise).
    pub fn growth_order(&self) -> u32 {
        match self {
            Loss::Square => 2,
            _ => 1,
        }
    }

    pub fn label_convention(&self) -> LabelConvention {
        match self {
            Loss::Logistic | Loss::Hinge => LabelConvention::Signs,
            _ => LabelConvention::RealValued,
        }
    }

    /// True for losses differentiable everywhere in the prediction.
    pub fn is_smooth(&self) -> bool {
        matches!(self, Loss::Square | Loss::Logistic)
    }

    /// Loss value L(y, t), nonnegative.
    pub fn value(&self, y: f64, t: f64) -> f64 {
        match *self {
            Loss::Square => {
                let r = y - t;
                r * r
            }
            Loss::Check { tau } => {
                let r = y - t;
                r * (tau - if y < t { 1.0 } else { 0.0 })
            }
            Loss::EpsInsensitive { epsilon } => ((y - t).abs() - epsilon).max(0.0),
            Loss::Logistic => LN2_INV * ln_1p_exp(-y * t),
            Loss::Hinge => (1.0 - y * t).max(0.0),
        }
    }

    /// One element of the subdifferential of t -> L(y, t).
    ///
    /// Exact derivative where differentiable; at a kink, 0 when admissible,
    /// otherwise the midpoint of the subgradient interval.
    pub fn subgradient(&self, y: f64, t: f64) -> f64 {
        match *self {
            Loss::Square => 2.0 * (t - y),
            Loss::Check { tau } => {
                if t < y {
                    -tau
                } else if t > y {
                    1.0 - tau
                } else {
                    // kink: [-tau, 1-tau] contains 0
                    0.0
                }
            }
            Loss::EpsInsensitive { epsilon } => {
                let r = t - y;
                if r > epsilon {
                    1.0
                } else if r < -epsilon {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => -LN2_INV * y * sigmoid(-y * t),
            Loss::Hinge => {
                if y * t < 1.0 {
                    -y
                } else {
                    // at the margin the interval between -y and 0 contains 0
                    0.0
                }
            }
        }
    }

    /// Validate that every response conforms to the label convention.
    pub fn validate_labels<'a, I>(&self, ys: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a f64>,
    {
        for (row, &y) in ys.into_iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite("response"));
            }
            if self.label_convention() == LabelConvention::Signs && y != 1.0 && y != -1.0 {
                return Err(Error::LabelConvention {
                    loss: self.name(),
                    value: y,
                    row: row + 1,
                });
            }
        }
        Ok(())
    }
}

const LN2_INV: f64 = std::f64::consts::LOG2_E; // 1/ln(2)

/// Numerically stable ln(1 + exp(z)).
fn ln_1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

//! Spatial weights `ρ(x)` and time weights `φ(t)` used by the decay estimates
//! and by the envelope fits.

use crate::error::{invalid, Result};
use crate::grid::ChebGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialWeight {
    /// `ρ ≡ 1`; gives the plain norms.
    Unit,
    /// `ρ = 1 + |x/x0|`
    LinearAbs { x0: f64 },
    /// `ρ = 1 + |x/x0| + (x/x0)²`
    QuadraticAbs { x0: f64 },
    /// `ρ² = exp(((x + x_shift)/σ)²)`
    Gaussian { sigma: f64, x_shift: f64 },
}

/// A weight-like function split as `smooth(x) + |x|·abs(x) + sgn(x)·sign(x)`
/// with each coefficient smooth, so product quadrature can integrate the kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkSplit {
    pub smooth: f64,
    pub abs: f64,
    pub sign: f64,
}

impl KinkSplit {
    fn smooth(v: f64) -> Self {
        Self { smooth: v, abs: 0.0, sign: 0.0 }
    }

    pub fn value(&self, x: f64) -> f64 {
        let sgn = if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
        self.smooth + x.abs() * self.abs + sgn * self.sign
    }
}

/// Constants of the weight condition `β1 ≤ |ρ'| ≤ β2`, when they exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialValidity {
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub theory_valid: bool,
}

impl SpatialWeight {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpatialWeight::Unit => true,
            SpatialWeight::LinearAbs { x0 } | SpatialWeight::QuadraticAbs { x0 } => x0 > 0.0 && x0.is_finite(),
            SpatialWeight::Gaussian { sigma, x_shift } => sigma > 0.0 && sigma.is_finite() && x_shift.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid spatial weight {self:?}")))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SpatialWeight::Unit => 1.0,
            SpatialWeight::LinearAbs { x0 } => 1.0 + (x / x0).abs(),
            SpatialWeight::QuadraticAbs { x0 } => {
                let s = x / x0;
                1.0 + s.abs() + s * s
            }
            SpatialWeight::Gaussian { sigma, x_shift } => {
                let q = (x + x_shift) / sigma;
                (0.5 * q * q).exp()
            }
        }
    }

    pub fn eval_sq(&self, x: f64) -> f64 {
        let r = self.eval(x);
        r * r
    }

    /// `log ρ²(x)`, finite even where `ρ²` overflows.
    pub fn log_sq(&self, x: f64) -> f64 {
        match *self {
            SpatialWeight::Gaussian { sigma, x_shift } => {
                let q = (x + x_shift) / sigma;
                q * q
            }
            _ => 2.0 * self.eval(x).ln(),
        }
    }

    /// `ρ'(x)`; one-sided limits are averaged at the kink.
    pub fn derivative(&self, x: f64) -> f64 {
        let sgn = if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
        match *self {
            SpatialWeight::Unit => 0.0,
            SpatialWeight::LinearAbs { x0 } => sgn / x0,
            SpatialWeight::QuadraticAbs { x0 } => sgn / x0 + 2.0 * x / (x0 * x0),
            SpatialWeight::Gaussian { sigma, x_shift } => {
                let q = (x + x_shift) / sigma;
                q / sigma * self.eval(x)
            }
        }
    }

    pub fn validity(&self) -> SpatialValidity {
        match *self {
            SpatialWeight::LinearAbs { x0 } => {
                SpatialValidity { beta1: Some(1.0 / x0), beta2: Some(1.0 / x0), theory_valid: true }
            }
            SpatialWeight::QuadraticAbs { x0 } => {
                SpatialValidity { beta1: Some(1.0 / x0), beta2: None, theory_valid: false }
            }
            SpatialWeight::Unit | SpatialWeight::Gaussian { .. } => {
                SpatialValidity { beta1: None, beta2: None, theory_valid: false }
            }
        }
    }

    /// `ρ²` split for product quadrature.
    pub fn sq_split(&self, x: f64) -> KinkSplit {
        match *self {
            SpatialWeight::Unit => KinkSplit::smooth(1.0),
            SpatialWeight::LinearAbs { x0 } => {
                let s = x / x0;
                KinkSplit { smooth: 1.0 + s * s, abs: 2.0 / x0, sign: 0.0 }
            }
            SpatialWeight::QuadraticAbs { x0 } => {
                let s = x / x0;
                KinkSplit { smooth: 1.0 + 3.0 * s * s + s.powi(4), abs: (2.0 + 2.0 * s * s) / x0, sign: 0.0 }
            }
            SpatialWeight::Gaussian { .. } => KinkSplit::smooth(self.eval_sq(x)),
        }
    }

    /// `ρ'²` split for product quadrature.
    pub fn dsq_split(&self, x: f64) -> KinkSplit {
        match *self {
            SpatialWeight::Unit => KinkSplit::smooth(0.0),
            SpatialWeight::LinearAbs { x0 } => KinkSplit::smooth(1.0 / (x0 * x0)),
            SpatialWeight::QuadraticAbs { x0 } => KinkSplit {
                smooth: 1.0 / (x0 * x0) + 4.0 * x * x / x0.powi(4),
                abs: 4.0 / x0.powi(3),
                sign: 0.0,
            },
            SpatialWeight::Gaussian { .. } => {
                let d = self.derivative(x);
                KinkSplit::smooth(d * d)
            }
        }
    }

    /// `ρρ'` split for product quadrature.
    pub fn cross_split(&self, x: f64) -> KinkSplit {
        match *self {
            SpatialWeight::Unit => KinkSplit::smooth(0.0),
            SpatialWeight::LinearAbs { x0 } => KinkSplit { smooth: x / (x0 * x0), abs: 0.0, sign: 1.0 / x0 },
            SpatialWeight::QuadraticAbs { x0 } => {
                let s = x / x0;
                KinkSplit {
                    smooth: (3.0 * s + 2.0 * s.powi(3)) / x0,
                    abs: 2.0 * s / (x0 * x0),
                    sign: (1.0 + s * s) / x0,
                }
            }
            SpatialWeight::Gaussian { .. } => KinkSplit::smooth(self.eval(x) * self.derivative(x)),
        }
    }
}

/// Effective nodal weights `W` with `Σ W_j g_j ≈ ∫ K(x) g(x) dx` for a split kernel `K`.
pub fn split_weights(grid: &ChebGrid, split: impl Fn(f64) -> KinkSplit) -> Vec<f64> {
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let k = split(x);
            k.smooth * grid.qweights()[j] + k.abs * grid.abs_weights()[j] + k.sign * grid.sign_weights()[j]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeWeightForm {
    /// `φ = (1 + γ(t+s0)/t0)^κ`
    Theory,
    /// `φ = (1 + (t+s0)/t0)^κ`, the form used for fitted envelopes.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWeight {
    pub t0: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub s0: f64,
    pub form: TimeWeightForm,
}

impl TimeWeight {
    pub fn theory(t0: f64, kappa: f64, gamma: f64) -> Result<Self> {
        let w = Self { t0, kappa, gamma, s0: 0.0, form: TimeWeightForm::Theory };
        w.validate()?;
        Ok(w)
    }

    pub fn fitted(t0: f64, kappa: f64, s0: f64) -> Result<Self> {
        let w = Self { t0, kappa, gamma: 0.0, s0, form: TimeWeightForm::Fitted };
        w.validate()?;
        Ok(w)
    }

    /// `φ ≡ 1`. Only meaningful for the balance-law reduction checks.
    pub fn unit() -> Self {
        Self { t0: 1.0, kappa: 0.0, gamma: 0.0, s0: 0.0, form: TimeWeightForm::Fitted }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(invalid(format!("time weight t0 must be positive, got {}", self.t0)));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(invalid(format!("time weight exponent must be >= 1, got {}", self.kappa)));
        }
        if !(self.gamma >= 0.0) || !self.s0.is_finite() {
            return Err(invalid("time weight needs gamma >= 0 and a finite offset"));
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        match self.form {
            TimeWeightForm::Theory => self.gamma,
            TimeWeightForm::Fitted => 1.0,
        }
    }

    fn base(&self, t: f64) -> f64 {
        1.0 + self.rate() * (t + self.s0) / self.t0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.base(t).powf(self.kappa)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if self.kappa == 0.0 {
            return 0.0;
        }
        self.kappa * self.rate() / self.t0 * self.base(t).powf(self.kappa - 1.0)
    }

    /// `γ/t0` (κ = 1 regime).
    pub fn delta2(&self) -> f64 {
        self.gamma / self.t0
    }

    /// `γκ/t0` (κ > 1 regime).
    pub fn delta2_prime(&self) -> f64 {
        self.gamma * self.kappa / self.t0
    }

    /// Whether this weight may certify a decay estimate: theory-form weights
    /// need `t0 >= κ` when `κ > 1`; fitted weights are exempt.
    pub fn certifiable(&self) -> bool {
        match self.form {
            TimeWeightForm::Fitted => true,
            TimeWeightForm::Theory => self.kappa <= 1.0 || self.t0 >= self.kappa,
        }
    }
}

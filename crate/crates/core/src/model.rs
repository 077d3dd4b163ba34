//! Problem definitions: the nonlinearity families and the soliton problem
//! metadata shared by every other module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the quintic coefficient for which ground states exist at
/// unit frequency.
pub const CUBIC_QUINTIC_GAMMA_MAX: f64 = 3.0 / 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("derivative of order {order} of s^{sigma} is singular at s = 0")]
    SingularDerivative { order: u8, sigma: f64 },
    #[error("nonlinearity evaluated at negative argument s = {0}")]
    NegativeArgument(f64),
}

/// The two nonlinearity families `f(s)` appearing in `i psi_t + lap psi + f(|psi|^2) psi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f(s) = s^sigma`
    Power { sigma: f64 },
    /// `f(s) = s - gamma s^2`
    CubicQuintic { gamma: f64 },
}

/// `f`, `f'` and `f''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityValues {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

impl Nonlinearity {
    pub fn power(sigma: f64) -> Result<Self, ModelError> {
        let n = Nonlinearity::Power { sigma };
        n.validate()?;
        Ok(n)
    }

    pub fn cubic_quintic(gamma: f64) -> Result<Self, ModelError> {
        let n = Nonlinearity::CubicQuintic { gamma };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Nonlinearity::Power { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(ModelError::InvalidNonlinearity(format!(
                        "power exponent must be positive, got {sigma}"
                    )));
                }
            }
            Nonlinearity::CubicQuintic { gamma } => {
                if !(gamma.is_finite() && (0.0..CUBIC_QUINTIC_GAMMA_MAX).contains(&gamma)) {
                    return Err(ModelError::InvalidNonlinearity(format!(
                        "quintic coefficient must satisfy 0 <= gamma < 3/16, got {gamma}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value of the family parameter (sigma or gamma).
    pub fn parameter(&self) -> f64 {
        match *self {
            Nonlinearity::Power { sigma } => sigma,
            Nonlinearity::CubicQuintic { gamma } => gamma,
        }
    }

    /// Same family with a different parameter value.
    pub fn with_parameter(&self, value: f64) -> Self {
        match self {
            Nonlinearity::Power { .. } => Nonlinearity::Power { sigma: value },
            Nonlinearity::CubicQuintic { .. } => Nonlinearity::CubicQuintic { gamma: value },
        }
    }

    /// Evaluates `f(s)`, `f'(s)` and `f''(s)`.
    ///
    /// For the power family the derivatives at `s = 0` are singular when the
    /// exponent is below 1 (first derivative) or below 2 (second derivative,
    /// except for the cubic case where it vanishes identically).
    pub fn eval(&self, s: f64) -> Result<NonlinearityValues, ModelError> {
        if s < 0.0 || s.is_nan() {
            return Err(ModelError::NegativeArgument(s));
        }
        match *self {
            Nonlinearity::Power { sigma } => {
                let f = s.powf(sigma);
                if s == 0.0 {
                    if sigma < 1.0 {
                        return Err(ModelError::SingularDerivative { order: 1, sigma });
                    }
                    if sigma < 2.0 && sigma != 1.0 {
                        return Err(ModelError::SingularDerivative { order: 2, sigma });
                    }
                }
                let df = if sigma == 1.0 {
                    1.0
                } else {
                    sigma * s.powf(sigma - 1.0)
                };
                let d2f = if sigma == 1.0 {
                    0.0
                } else if sigma == 2.0 {
                    2.0
                } else {
                    sigma * (sigma - 1.0) * s.powf(sigma - 2.0)
                };
                Ok(NonlinearityValues { f, df, d2f })
            }
            Nonlinearity::CubicQuintic { gamma } => Ok(NonlinearityValues {
                f: s - gamma * s * s,
                df: 1.0 - 2.0 * gamma * s,
                d2f: 0.0 - 2.0 * gamma,
            }),
        }
    }

    /// `g(u) = f(u^2) u` and `g'(u) = f(u^2) + 2 f'(u^2) u^2`, evaluated without
    /// touching the singular derivatives of `f` at zero.
    pub fn cubic_term(&self, u: f64) -> (f64, f64) {
        match *self {
            Nonlinearity::Power { sigma } => {
                let a = u.abs();
                if a == 0.0 {
                    return (0.0, 0.0);
                }
                let p = a.powf(2.0 * sigma);
                (p * u, (2.0 * sigma + 1.0) * p)
            }
            Nonlinearity::CubicQuintic { gamma } => {
                let s = u * u;
                (u * (s - gamma * s * s), 3.0 * s - 5.0 * gamma * s * s)
            }
        }
    }

    /// Linearized potentials `(V+, V-) = (-f - 2 f' u^2, -f)` at `s = u^2`,
    /// with their derivatives in `u`.
    pub fn linearized_potentials(&self, u: f64) -> LinearizedPotentials {
        match *self {
            Nonlinearity::Power { sigma } => {
                let a = u.abs();
                if a == 0.0 {
                    return LinearizedPotentials::default();
                }
                let p = a.powf(2.0 * sigma);
                // d/du |u|^{2 sigma} = 2 sigma |u|^{2 sigma - 2} u
                let dp = 2.0 * sigma * p / u;
                LinearizedPotentials {
                    plus: -(2.0 * sigma + 1.0) * p,
                    minus: -p,
                    dplus: -(2.0 * sigma + 1.0) * dp,
                    dminus: -dp,
                }
            }
            Nonlinearity::CubicQuintic { gamma } => {
                let s = u * u;
                LinearizedPotentials {
                    plus: -3.0 * s + 5.0 * gamma * s * s,
                    minus: -s + gamma * s * s,
                    dplus: -6.0 * u + 20.0 * gamma * s * u,
                    dminus: -2.0 * u + 4.0 * gamma * s * u,
                }
            }
        }
    }

    /// Factors `q+ = (3 f' + 2 f'' u^2) u` and `q- = f' u` (at `s = u^2`) with
    /// their `u`-derivatives. The distorted potentials are `r q(R) R'`.
    pub fn distorted_factors(&self, u: f64) -> DistortedFactors {
        match *self {
            Nonlinearity::Power { sigma } => {
                let a = u.abs();
                if a == 0.0 {
                    return DistortedFactors::default();
                }
                // |u|^{2 sigma - 2} u and its derivative (2 sigma - 1) |u|^{2 sigma - 2}
                let w = a.powf(2.0 * sigma - 2.0);
                let q = w * u;
                let dq = (2.0 * sigma - 1.0) * w;
                DistortedFactors {
                    plus: sigma * (2.0 * sigma + 1.0) * q,
                    minus: sigma * q,
                    dplus: sigma * (2.0 * sigma + 1.0) * dq,
                    dminus: sigma * dq,
                }
            }
            Nonlinearity::CubicQuintic { gamma } => {
                let s = u * u;
                DistortedFactors {
                    plus: 3.0 * u - 10.0 * gamma * s * u,
                    minus: u - 2.0 * gamma * s * u,
                    dplus: 3.0 - 30.0 * gamma * s,
                    dminus: 1.0 - 6.0 * gamma * s,
                }
            }
        }
    }
}

/// Values of `V+`, `V-` and their derivatives with respect to the profile value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearizedPotentials {
    pub plus: f64,
    pub minus: f64,
    pub dplus: f64,
    pub dminus: f64,
}

/// See [`Nonlinearity::distorted_factors`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortedFactors {
    pub plus: f64,
    pub minus: f64,
    pub dplus: f64,
    pub dminus: f64,
}

/// Spatial dimension of the problem (radial in 3D, even/odd half line in 1D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    One,
    Three,
}

impl Dimension {
    pub fn value(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Three => 3,
        }
    }

    pub fn from_value(d: usize) -> Result<Self, ModelError> {
        match d {
            1 => Ok(Dimension::One),
            3 => Ok(Dimension::Three),
            other => Err(ModelError::InvalidProblem(format!(
                "dimension must be 1 or 3, got {other}"
            ))),
        }
    }
}

/// One member of the NLS family together with the soliton frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub nonlinearity: Nonlinearity,
    pub dimension: Dimension,
    pub omega: f64,
}

impl ProblemSpec {
    pub fn new(
        nonlinearity: Nonlinearity,
        dimension: Dimension,
        omega: f64,
    ) -> Result<Self, ModelError> {
        let spec = ProblemSpec {
            nonlinearity,
            dimension,
            omega,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 1D power-law NLS at unit frequency.
    pub fn nls1d(sigma: f64) -> Result<Self, ModelError> {
        Self::new(Nonlinearity::power(sigma)?, Dimension::One, 1.0)
    }

    /// 3D power-law NLS at unit frequency.
    pub fn nls3d(sigma: f64) -> Result<Self, ModelError> {
        Self::new(Nonlinearity::power(sigma)?, Dimension::Three, 1.0)
    }

    /// 3D cubic-quintic NLS at unit frequency.
    pub fn cqnls(gamma: f64) -> Result<Self, ModelError> {
        Self::new(Nonlinearity::cubic_quintic(gamma)?, Dimension::Three, 1.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.nonlinearity.validate()?;
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(ModelError::InvalidProblem(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.dimension.value()
    }

    /// Same problem at a different family parameter.
    pub fn with_parameter(&self, value: f64) -> Result<Self, ModelError> {
        Self::new(self.nonlinearity.with_parameter(value), self.dimension, self.omega)
    }

    pub fn with_dimension(&self, dimension: Dimension) -> Self {
        ProblemSpec { dimension, ..*self }
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self, ModelError> {
        Self::new(self.nonlinearity, self.dimension, omega)
    }

    /// Short identifier used in reports, e.g. `nls3d(sigma=1)`.
    pub fn label(&self) -> String {
        match (self.nonlinearity, self.dimension) {
            (Nonlinearity::Power { sigma }, Dimension::One) => format!("nls1d(sigma={sigma})"),
            (Nonlinearity::Power { sigma }, Dimension::Three) => format!("nls3d(sigma={sigma})"),
            (Nonlinearity::CubicQuintic { gamma }, Dimension::Three) => {
                format!("cqnls(gamma={gamma})")
            }
            (Nonlinearity::CubicQuintic { gamma }, Dimension::One) => {
                format!("cqnls1d(gamma={gamma})")
            }
        }
    }
}

/// Free-function form of [`Nonlinearity::eval`].
pub fn eval_nonlinearity(spec: &Nonlinearity, s: f64) -> Result<NonlinearityValues, ModelError> {
    spec.eval(s)
}

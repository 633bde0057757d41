//! Multipliers, loss functions and transport costs shared by every solver.

use crate::error::{Error, Result};

/// Multipliers controlling the adversary.
///
/// `alpha` weights the entropy constraint on the transport plan, `beta` is the
/// inverse price of transport, and `theta` is the relative-entropy multiplier
/// used only by the KL baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl RobustnessParams {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        check_multiplier("alpha", alpha)?;
        check_multiplier("beta", beta)?;
        check_multiplier("theta", theta)?;
        Ok(Self { alpha, beta, theta })
    }

    /// Wasserstein-only parameters (`theta = 0`).
    pub fn wasserstein(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    pub fn kl(theta: f64) -> Result<Self> {
        Self::new(0.0, 0.0, theta)
    }

    /// Both transport multipliers strictly positive, as the entropic kernel needs.
    pub(crate) fn require_entropic(&self) -> Result<()> {
        require_positive("alpha", self.alpha)?;
        require_positive("beta", self.beta)
    }
}

fn check_multiplier(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be finite",
        });
    }
    if v < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be nonnegative",
        });
    }
    Ok(())
}

pub(crate) fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be finite and strictly positive",
        });
    }
    Ok(())
}

/// Loss function `V` on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// `V(x) = x`
    Linear,
    /// `V(x) = (x - center)^2`
    Quadratic { center: f64 },
    /// Piecewise-linear interpolation through `(xs[i], values[i])`; `xs`
    /// strictly increasing. Evaluating outside `[xs[0], xs[last]]` is an error.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl LossSpec {
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::shape(
                format!("{} loss values", xs.len()),
                values.len(),
            ));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput(
                "tabulated loss needs at least two nodes".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "tabulated loss abscissae must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().chain(xs.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite tabulated loss entry {v}"
            )));
        }
        Ok(LossSpec::Tabulated { xs, values })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            LossSpec::Linear => Ok(x),
            LossSpec::Quadratic { center } => Ok((x - center) * (x - center)),
            LossSpec::Tabulated { xs, values } => {
                let n = xs.len();
                // small slack so grids built from the same endpoints do not trip on rounding
                let slack = 1e-12 * (xs[n - 1] - xs[0]).abs().max(1.0);
                if x < xs[0] - slack || x > xs[n - 1] + slack {
                    return Err(Error::InvalidInput(format!(
                        "x = {x} lies outside the tabulated loss range [{}, {}]",
                        xs[0],
                        xs[n - 1]
                    )));
                }
                let k = xs.partition_point(|&t| t <= x).clamp(1, n - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                Ok(values[k - 1] + t * (values[k] - values[k - 1]))
            }
        }
    }

    pub fn eval_all(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Transport cost `c(x, y) = |x - y|^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostSpec {
    power: u32,
}

impl CostSpec {
    pub fn power(power: u32) -> Result<Self> {
        if power < 1 {
            return Err(Error::InvalidParameter {
                name: "power",
                value: power as f64,
                reason: "cost power must be at least 1",
            });
        }
        Ok(Self { power })
    }

    pub fn quadratic() -> Self {
        Self { power: 2 }
    }

    pub fn exponent(&self) -> u32 {
        self.power
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        match self.power {
            1 => d,
            2 => d * d,
            n => d.powi(n as i32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nonfinite_multipliers() {
        assert!(RobustnessParams::new(-1.0, 1.0, 0.0).is_err());
        assert!(RobustnessParams::new(1.0, f64::NAN, 0.0).is_err());
        assert!(RobustnessParams::new(1.0, 1.0, f64::INFINITY).is_err());
        assert!(RobustnessParams::new(0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn tabulated_interpolates_and_guards_range() {
        let loss = LossSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(loss.eval(0.5).unwrap(), 1.0);
        assert_eq!(loss.eval(2.0).unwrap(), 0.0);
        assert!(loss.eval(2.5).is_err());
        assert!(LossSpec::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cost_power_must_be_positive() {
        assert!(CostSpec::power(0).is_err());
        let c = CostSpec::power(3).unwrap();
        assert_eq!(c.eval(1.0, -1.0), 8.0);
    }
}

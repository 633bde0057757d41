//! Delta-hedging model risk by Monte Carlo.
//!
//! Reference paths follow a geometric Brownian motion. An option is hedged
//! with Black-Scholes deltas at the nominal volatility, and the absolute
//! hedging PnL is the loss. The worst case is measured on path space: the
//! reference paths are perturbed, the pooled sample is treated as a finite
//! state space with the quadratic variation of log-price differences as
//! transport cost, and the entropic worst-case weights are applied to the
//! pooled losses.
//!
//! Every random draw comes from a ChaCha stream keyed by the run seed, a
//! domain tag and the path index, so results are the same for any number of
//! worker threads.

mod black_scholes;
mod paths;
mod worst_case;

pub use black_scholes::{bs_price_delta, hedge_pnl};
pub use paths::{gbm_paths, perturb_paths, qv_distance, Path, PathEnsemble, Provenance};
pub use worst_case::{
    kl_hedging_risk, nominal_hedging_risk, volatility_sampling_risk, worst_case_hedging_risk,
    worst_case_weights, HedgeLoss, PoolMode, VolDistribution, WorstCaseConfig,
    WorstCaseLadderResult, DESK_ALPHA, DESK_BETA, DESK_THETA,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    pub s0: f64,
    /// Drift per year.
    pub mu: f64,
    /// Volatility per square-root year.
    pub sigma: f64,
    /// Risk-free rate per year.
    pub r: f64,
}

impl MarketConfig {
    pub fn new(s0: f64, mu: f64, sigma: f64, r: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s0",
                value: s0,
                reason: "spot must be positive",
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "volatility must be finite and nonnegative",
            });
        }
        for (name, v) in [("mu", mu), ("r", r)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        Ok(Self { s0, mu, sigma, r })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.s0, self.mu, sigma, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionType {
    Call,
    Put,
}

impl std::str::FromStr for OptionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "call" => Ok(Self::Call),
            "put" => Ok(Self::Put),
            other => Err(Error::InvalidInput(format!(
                "unknown option type `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeConfig {
    pub strike: f64,
    /// Maturity in years.
    pub maturity: f64,
    /// Number of rebalancing dates.
    pub n_hedge: usize,
    pub option_type: OptionType,
}

impl HedgeConfig {
    pub fn new(
        strike: f64,
        maturity: f64,
        n_hedge: usize,
        option_type: OptionType,
    ) -> Result<Self> {
        for (name, v) in [("strike", strike), ("maturity", maturity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        if n_hedge < 1 {
            return Err(Error::InvalidParameter {
                name: "n_hedge",
                value: n_hedge as f64,
                reason: "at least one hedge date is required",
            });
        }
        Ok(Self {
            strike,
            maturity,
            n_hedge,
            option_type,
        })
    }

    pub fn with_n_hedge(&self, n_hedge: usize) -> Result<Self> {
        Self::new(self.strike, self.maturity, n_hedge, self.option_type)
    }

    pub fn payoff(&self, s: f64) -> f64 {
        match self.option_type {
            OptionType::Call => (s - self.strike).max(0.0),
            OptionType::Put => (self.strike - s).max(0.0),
        }
    }
}

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::paths::{paths_with_vols, qv_raw, stream, DOMAIN_RUNG, DOMAIN_VOL};
use super::{gbm_paths, hedge_pnl, perturb_paths, HedgeConfig, MarketConfig, PathEnsemble};
use crate::discrete_transport::EntropicKernel;
use crate::error::{Error, Result};
use crate::params::RobustnessParams;

/// Which perturbed paths form the state space at a ladder rung.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolMode {
    /// Parents plus the children of every rung so far. The adversary's
    /// choice set only grows, so the risk is nondecreasing along the ladder.
    #[default]
    Cumulative,
    /// Parents plus this rung's children only.
    PerRung,
}

/// Hedging error used as the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HedgeLoss {
    /// `|PnL|`; risk is the weighted mean.
    #[default]
    Absolute,
    /// `PnL^2`; risk is the square root of the weighted mean.
    Squared,
}

impl HedgeLoss {
    fn value(self, pnl: f64) -> f64 {
        match self {
            HedgeLoss::Absolute => pnl.abs(),
            HedgeLoss::Squared => pnl * pnl,
        }
    }

    fn risk(self, weights: &[f64], losses: &[f64]) -> f64 {
        let m: f64 = weights.iter().zip(losses).map(|(w, v)| w * v).sum();
        match self {
            HedgeLoss::Absolute => m,
            HedgeLoss::Squared => m.sqrt(),
        }
    }
}

/// Desk defaults for the path-space worst case. The transport multiplier sits
/// a little above the rate at which added quadratic variation pays for its
/// cost on near-the-money paths. Large perturbations carry paths away from
/// the strike, where gamma is small, so the ladder still reaches a plateau.
pub const DESK_ALPHA: f64 = 1e-3;
pub const DESK_BETA: f64 = 6e-3;
/// Desk default KL multiplier for reweighting reference paths.
pub const DESK_THETA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseConfig {
    /// Reference paths `N`.
    pub n_paths: usize,
    /// Children per reference path `M`.
    pub m_children: usize,
    /// Simulation steps; must be a multiple of every hedge count used.
    pub n_steps: usize,
    pub params: RobustnessParams,
    /// Perturbation volatilities, strictly increasing.
    pub ladder: Vec<f64>,
    /// Relative change between rungs below which the risk has converged.
    pub tol: f64,
    pub seed: u64,
    pub pool: PoolMode,
    pub loss: HedgeLoss,
}

impl WorstCaseConfig {
    /// Desk-scale defaults: 200 paths, 20 children, 200 steps, ladder
    /// `(0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2) x sigma`, 2% tolerance.
    pub fn desk(sigma: f64, params: RobustnessParams, seed: u64) -> Self {
        Self {
            n_paths: 200,
            m_children: 20,
            n_steps: 200,
            params,
            ladder: [0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2]
                .iter()
                .map(|k| k * sigma)
                .collect(),
            tol: 0.02,
            seed,
            pool: PoolMode::Cumulative,
            loss: HedgeLoss::Absolute,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 1 || self.m_children < 1 || self.n_steps < 1 {
            return Err(Error::InvalidInput(
                "path count, children per path and step count must be positive".into(),
            ));
        }
        if self.ladder.is_empty() {
            return Err(Error::InvalidInput("perturbation ladder is empty".into()));
        }
        if let Some(v) = self.ladder.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "ladder",
                value: *v,
                reason: "perturbation volatilities must be positive",
            });
        }
        if self.ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "perturbation ladder must be strictly increasing".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: self.tol,
                reason: "tolerance must be positive",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseLadderResult {
    pub ladder: Vec<f64>,
    /// Risk at each rung evaluated, in ladder order.
    pub risks: Vec<f64>,
    pub converged: bool,
    pub final_risk: f64,
    /// Risk under the reference paths alone.
    pub nominal_risk: f64,
}

impl WorstCaseLadderResult {
    pub fn rungs_used(&self) -> usize {
        self.risks.len()
    }
}

fn losses(
    ensemble: &PathEnsemble,
    range: std::ops::Range<usize>,
    market: &MarketConfig,
    hedge: &HedgeConfig,
    loss: HedgeLoss,
) -> Result<Vec<f64>> {
    range
        .into_par_iter()
        .map(|i| Ok(loss.value(hedge_pnl(&ensemble.path(i), market, hedge)?)))
        .collect()
}

fn uniform_parent_weights(n_parents: usize, pool: usize) -> Vec<f64> {
    let mut w = vec![0.0; pool];
    for v in &mut w[..n_parents] {
        *v = 1.0 / n_parents as f64;
    }
    w
}

/// Worst-case probabilities over a pooled path sample whose first
/// `n_parents` paths are the reference sample (probability `1/N` each).
///
/// The prior is uniform over the pool and the transport cost is
/// [`super::qv_distance`]. `beta = 0` returns the reference weights and
/// `alpha = 0` moves each reference path to its single best pool path.
pub fn worst_case_weights(
    pool: &PathEnsemble,
    n_parents: usize,
    losses: &[f64],
    params: &RobustnessParams,
) -> Result<Vec<f64>> {
    let n = pool.len();
    if losses.len() != n {
        return Err(Error::shape(format!("{n} losses"), losses.len()));
    }
    if n_parents == 0 || n_parents > n {
        return Err(Error::InvalidInput(format!(
            "{n_parents} reference paths in a pool of {n}"
        )));
    }
    if params.beta == 0.0 {
        return Ok(uniform_parent_weights(n_parents, n));
    }
    if params.alpha == 0.0 {
        let targets: Vec<usize> = (0..n_parents)
            .into_par_iter()
            .map(|i| {
                let xi = pool.increments(i);
                let mut best = f64::NEG_INFINITY;
                let mut arg = i;
                for (j, v) in losses.iter().enumerate() {
                    let score = v - qv_raw(xi, pool.increments(j)) / params.beta;
                    if score > best {
                        best = score;
                        arg = j;
                    }
                }
                arg
            })
            .collect();
        let mut w = vec![0.0; n];
        for t in targets {
            w[t] += 1.0 / n_parents as f64;
        }
        return Ok(w);
    }
    let kernel = EntropicKernel {
        log_prior: vec![0.0; n],
        loss_over_alpha: losses.iter().map(|v| v / params.alpha).collect(),
        inv_alpha_beta: 1.0 / (params.alpha * params.beta),
    };
    let source = uniform_parent_weights(n_parents, n);
    kernel.push_forward(&source, |i, out| {
        let xi = pool.increments(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = qv_raw(xi, pool.increments(j));
        }
    })
}

/// Mean hedging loss over `n_paths` reference paths.
pub fn nominal_hedging_risk(
    market: &MarketConfig,
    hedge: &HedgeConfig,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    loss: HedgeLoss,
) -> Result<f64> {
    let parents = gbm_paths(market, hedge.maturity, n_steps, n_paths, seed)?;
    let v = losses(&parents, 0..n_paths, market, hedge, loss)?;
    Ok(loss.risk(&uniform_parent_weights(n_paths, n_paths), &v))
}

/// KL worst case on the reference sample: weights `∝ exp(theta V)` over the
/// reference paths only, so no path outside the sample can gain mass.
pub fn kl_hedging_risk(
    market: &MarketConfig,
    hedge: &HedgeConfig,
    n_paths: usize,
    n_steps: usize,
    theta: f64,
    seed: u64,
    loss: HedgeLoss,
) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must be finite and nonnegative",
        });
    }
    let parents = gbm_paths(market, hedge.maturity, n_steps, n_paths, seed)?;
    let v = losses(&parents, 0..n_paths, market, hedge, loss)?;
    let shift = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(theta * x));
    let raw: Vec<f64> = v.iter().map(|x| (theta * x - shift).exp()).collect();
    let z: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / z).collect();
    Ok(loss.risk(&w, &v))
}

/// Worst-case hedging risk by the perturbation ladder.
///
/// 1. Simulate `N` reference paths.
/// 2. For each rung, give every reference path `M` perturbed children.
/// 3. Pool reference paths with children (see [`PoolMode`]).
/// 4. Compute worst-case weights over the pool ([`worst_case_weights`]).
/// 5. Risk is the weighted mean hedging loss.
/// 6. Stop when the relative change between rungs falls below `tol`;
///    running out of rungs is reported through `converged = false`.
pub fn worst_case_hedging_risk(
    market: &MarketConfig,
    hedge: &HedgeConfig,
    config: &WorstCaseConfig,
) -> Result<WorstCaseLadderResult> {
    config.validate()?;
    let n = config.n_paths;
    let parents = gbm_paths(market, hedge.maturity, config.n_steps, n, config.seed)?;
    let parent_losses = losses(&parents, 0..n, market, hedge, config.loss)?;
    let nominal_risk = config
        .loss
        .risk(&uniform_parent_weights(n, n), &parent_losses);

    let mut pool = parents.clone();
    let mut pool_losses = parent_losses.clone();
    let mut risks = Vec::with_capacity(config.ladder.len());
    let mut converged = false;
    for (rung, &sigma_p) in config.ladder.iter().enumerate() {
        let rung_seed: u64 = stream(config.seed, DOMAIN_RUNG, rung as u64).random();
        let family = perturb_paths(&parents, sigma_p, config.m_children, rung_seed)?;
        let child_losses = losses(&family, n..family.len(), market, hedge, config.loss)?;
        let children = family.tail(n);
        match config.pool {
            PoolMode::Cumulative => {
                pool.extend(&children)?;
                pool_losses.extend_from_slice(&child_losses);
            }
            PoolMode::PerRung => {
                pool = family;
                pool_losses = parent_losses.clone();
                pool_losses.extend_from_slice(&child_losses);
            }
        }
        let w = worst_case_weights(&pool, n, &pool_losses, &config.params)?;
        let risk = config.loss.risk(&w, &pool_losses);
        if let Some(&prev) = risks.last() {
            let prev: f64 = prev;
            if prev > 0.0 && ((risk - prev) / prev).abs() < config.tol {
                risks.push(risk);
                converged = true;
                break;
            }
        }
        risks.push(risk);
    }
    Ok(WorstCaseLadderResult {
        ladder: config.ladder.clone(),
        final_risk: *risks.last().expect("ladder is nonempty"),
        risks,
        converged,
        nominal_risk,
    })
}

/// Distribution of the per-path volatility for the volatility-sampling baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `ln sigma ~ N(m, s^2)`
    LogNormal {
        m: f64,
        s: f64,
    },
}

impl VolDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            VolDistribution::Uniform { lo, hi } => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "uniform volatility support [{lo}, {hi}] must be positive and ordered"
                    )));
                }
            }
            VolDistribution::LogNormal { m, s } => {
                if !(m.is_finite() && s >= 0.0 && s.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "lognormal volatility parameters m = {m}, s = {s} are invalid"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Volatility at quantile `u`.
    fn quantile(&self, u: f64) -> f64 {
        match *self {
            VolDistribution::Uniform { lo, hi } => lo + (hi - lo) * u,
            VolDistribution::LogNormal { m, s } => {
                if s == 0.0 {
                    return m.exp();
                }
                let z = Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(u);
                (m + s * z).exp()
            }
        }
    }
}

/// Mean hedging loss when each path's realized volatility is drawn from
/// `dist` while hedging uses the nominal volatility. Path `i` reuses the
/// normal draws of reference path `i`, and its volatility is the quantile
/// of a per-path uniform, so nested distributions are coupled.
pub fn volatility_sampling_risk(
    market: &MarketConfig,
    hedge: &HedgeConfig,
    dist: VolDistribution,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    loss: HedgeLoss,
) -> Result<f64> {
    dist.validate()?;
    let sigmas: Vec<f64> = (0..n_paths)
        .map(|i| {
            let u: f64 = stream(seed, DOMAIN_VOL, i as u64).random();
            dist.quantile(u)
        })
        .collect();
    let ens = paths_with_vols(market, hedge.maturity, n_steps, &sigmas, seed)?;
    let v = losses(&ens, 0..n_paths, market, hedge, loss)?;
    Ok(loss.risk(&uniform_parent_weights(n_paths, n_paths), &v))
}

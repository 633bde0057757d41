use statrs::distribution::{ContinuousCDF, Normal};

use super::{HedgeConfig, MarketConfig, OptionType, Path};
use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Black-Scholes value and delta at spot `s` and time `t < T`, using the
/// market's nominal volatility and rate.
pub fn bs_price_delta(
    market: &MarketConfig,
    hedge: &HedgeConfig,
    s: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let tau = hedge.maturity - t;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "pricing time must precede maturity",
        });
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            reason: "spot must be positive",
        });
    }
    let k = hedge.strike;
    let disc = (-market.r * tau).exp();
    let vol = market.sigma * tau.sqrt();
    let (call, call_delta) = if vol == 0.0 {
        let fwd = s / disc;
        if fwd > k {
            (s - k * disc, 1.0)
        } else {
            (0.0, 0.0)
        }
    } else {
        let n = std_normal();
        let d1 = ((s / k).ln() + (market.r + 0.5 * market.sigma * market.sigma) * tau) / vol;
        let d2 = d1 - vol;
        (s * n.cdf(d1) - k * disc * n.cdf(d2), n.cdf(d1))
    };
    Ok(match hedge.option_type {
        OptionType::Call => (call, call_delta),
        // put-call parity
        OptionType::Put => (call - s + k * disc, call_delta - 1.0),
    })
}

/// PnL at maturity of a long option hedged with `n_hedge` equally spaced
/// delta rebalances, cash accruing at the risk-free rate.
///
/// Each hedge interval contributes `(C' - C) - delta (S' - S) - (C - delta S)(e^{r h} - 1)`,
/// carried to maturity at rate `r`. The path's step count must be a multiple
/// of `n_hedge`.
pub fn hedge_pnl(path: &Path<'_>, market: &MarketConfig, hedge: &HedgeConfig) -> Result<f64> {
    let n_steps = path.increments.len();
    if n_steps == 0 || !n_steps.is_multiple_of(hedge.n_hedge) {
        return Err(Error::InvalidInput(format!(
            "path has {n_steps} steps, not a multiple of the {} hedge dates",
            hedge.n_hedge
        )));
    }
    let horizon = path.dt * n_steps as f64;
    if (horizon - hedge.maturity).abs() > 1e-9 * hedge.maturity {
        return Err(Error::InvalidInput(format!(
            "path spans {horizon} years but the option matures in {}",
            hedge.maturity
        )));
    }
    let stride = n_steps / hedge.n_hedge;
    let h = path.dt * stride as f64;
    let growth = (market.r * h).exp() - 1.0;

    let mut log_s = path.s0.ln();
    let mut s = path.s0;
    let (mut c, mut delta) = bs_price_delta(market, hedge, s, 0.0)?;
    let mut pnl = 0.0;
    for k in 0..hedge.n_hedge {
        for inc in &path.increments[k * stride..(k + 1) * stride] {
            log_s += inc;
        }
        let s_next = log_s.exp();
        let last = k + 1 == hedge.n_hedge;
        let t_next = (k + 1) as f64 * h;
        let (c_next, delta_next) = if last {
            (hedge.payoff(s_next), 0.0)
        } else {
            bs_price_delta(market, hedge, s_next, t_next)?
        };
        let step = (c_next - c) - delta * (s_next - s) - (c - delta * s) * growth;
        let accrue = if last {
            1.0
        } else {
            (market.r * (hedge.maturity - t_next)).exp()
        };
        pnl += step * accrue;
        s = s_next;
        c = c_next;
        delta = delta_next;
    }
    Ok(pnl)
}

//! Mean-variance portfolios under model risk.
//!
//! The nominal problem `min_a a^T Sigma a - lambda a^T mu` has the solution
//! `a* = (lambda/2) Sigma^{-1} mu`. Replacing the reference normal by its
//! worst case (which depends on `a` through the loss matrix `A = a a^T`) and
//! expanding to first order in the multiplier gives closed-form robust
//! weights. The KL correction only shrinks `a*`; the Wasserstein correction
//! also rotates it away from highly correlated spreads.
//!
//! Frontier points are evaluated under the exact worst-case measure at the
//! chosen weights, not under its first-order expansion. The Wasserstein
//! measure used here has no entropic diffusion term (`alpha = 0`).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian_closed_form::GaussianSpec;
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioProblem {
    /// Excess-return model.
    pub model: GaussianSpec,
    /// Transport metric matrix.
    pub b: DMatrix<f64>,
    /// Risk-appetite multipliers.
    pub lambdas: Vec<f64>,
}

impl PortfolioProblem {
    pub fn new(model: GaussianSpec, b: DMatrix<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let n = model.dim();
        linalg::require_square(&b, n, "metric matrix B")?;
        linalg::require_symmetric(&b, "metric matrix B")?;
        linalg::require_positive_definite(&b, "metric matrix B")?;
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: *l,
                reason: "risk-appetite multipliers must be positive",
            });
        }
        Ok(Self { model, b, lambdas })
    }

    /// Identity metric.
    pub fn with_identity_metric(model: GaussianSpec, lambdas: Vec<f64>) -> Result<Self> {
        let n = model.dim();
        Self::new(model, DMatrix::identity(n, n), lambdas)
    }

    /// Unit-variance two-asset model with correlation `rho`.
    pub fn two_asset(mu: [f64; 2], rho: f64, lambdas: Vec<f64>) -> Result<Self> {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let model = GaussianSpec::new(DVector::from_row_slice(&mu), sigma)?;
        Self::with_identity_metric(model, lambdas)
    }
}

/// Scalars shared by the robust-weight formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioMoments {
    /// `Sigma^{-1} mu`
    pub sigma_inv_mu: DVector<f64>,
    /// `S^2 = mu^T Sigma^{-1} mu`
    pub sharpe_sq: f64,
    /// `Sigma^{-1} B^{-1} Sigma^{-1} mu`
    pub rotated: DVector<f64>,
    /// `R = mu^T Sigma^{-1} B^{-1} Sigma^{-1} mu`
    pub r: f64,
}

fn moments(model: &GaussianSpec, b: &DMatrix<f64>) -> Result<PortfolioMoments> {
    let sim = linalg::solve(
        &model.sigma,
        &model.mu,
        "covariance (nominal weights need Sigma^-1; the robust variants regularize it)",
    )?;
    let b_inv_sim = linalg::solve(b, &sim, "metric matrix B")?;
    let rotated = linalg::solve(&model.sigma, &b_inv_sim, "covariance")?;
    Ok(PortfolioMoments {
        sharpe_sq: model.mu.dot(&sim),
        r: sim.dot(&b_inv_sim),
        sigma_inv_mu: sim,
        rotated,
    })
}

pub fn portfolio_moments(problem: &PortfolioProblem) -> Result<PortfolioMoments> {
    moments(&problem.model, &problem.b)
}

fn require_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must be finite and positive",
        });
    }
    Ok(())
}

fn require_multiplier(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be finite and nonnegative",
        });
    }
    Ok(())
}

/// Nominal mean-variance weights `a* = (lambda/2) Sigma^{-1} mu`.
pub fn mvo_weights(model: &GaussianSpec, lambda: f64) -> Result<DVector<f64>> {
    require_lambda(lambda)?;
    let sim = linalg::solve(
        &model.sigma,
        &model.mu,
        "covariance (nominal weights need Sigma^-1; the robust variants regularize it)",
    )?;
    Ok(sim * (lambda / 2.0))
}

/// Nominal Sharpe ratio `sqrt(mu^T Sigma^{-1} mu)`, the same for every lambda.
pub fn nominal_sharpe(model: &GaussianSpec) -> Result<f64> {
    let n = model.dim();
    Ok(moments(model, &DMatrix::identity(n, n))?.sharpe_sq.sqrt())
}

/// KL shrink factor `c = 1 - theta lambda^2 (1 + S^2)`.
pub fn kl_coefficient(model: &GaussianSpec, lambda: f64, theta: f64) -> Result<f64> {
    require_lambda(lambda)?;
    require_multiplier("theta", theta)?;
    let n = model.dim();
    let m = moments(model, &DMatrix::identity(n, n))?;
    Ok(1.0 - theta * lambda * lambda * (1.0 + m.sharpe_sq))
}

/// Largest theta with a positive KL shrink factor at this lambda.
pub fn max_safe_theta(model: &GaussianSpec, lambda: f64) -> Result<f64> {
    require_lambda(lambda)?;
    let n = model.dim();
    let m = moments(model, &DMatrix::identity(n, n))?;
    Ok(1.0 / (lambda * lambda * (1.0 + m.sharpe_sq)))
}

/// First-order robust weights under KL: `a*_KL = c a*`.
pub fn robust_weights_kl(model: &GaussianSpec, lambda: f64, theta: f64) -> Result<DVector<f64>> {
    let c = kl_coefficient(model, lambda, theta)?;
    if c <= 0.0 {
        return Err(Error::BudgetTooLarge {
            coefficient: c,
            max_safe: max_safe_theta(model, lambda)?,
        });
    }
    Ok(mvo_weights(model, lambda)? * c)
}

/// Wasserstein coefficients `(c, d)`:
/// `c = 1 - (beta lambda^2 / 2) R`, `d = (beta lambda^2 / 2)(1 + S^2)`.
pub fn w_coefficients(problem: &PortfolioProblem, lambda: f64, beta: f64) -> Result<(f64, f64)> {
    require_lambda(lambda)?;
    require_multiplier("beta", beta)?;
    let m = portfolio_moments(problem)?;
    let h = beta * lambda * lambda / 2.0;
    Ok((1.0 - h * m.r, h * (1.0 + m.sharpe_sq)))
}

/// Largest beta with a positive Wasserstein shrink factor at this lambda.
pub fn max_safe_beta(problem: &PortfolioProblem, lambda: f64) -> Result<f64> {
    require_lambda(lambda)?;
    let m = portfolio_moments(problem)?;
    Ok(2.0 / (lambda * lambda * m.r))
}

/// First-order robust weights under Wasserstein:
/// `a*_W = (c I - d Sigma^{-1} B^{-1}) a*`.
pub fn robust_weights_w(
    problem: &PortfolioProblem,
    lambda: f64,
    beta: f64,
) -> Result<DVector<f64>> {
    let (c, d) = w_coefficients(problem, lambda, beta)?;
    if c <= 0.0 {
        return Err(Error::BudgetTooLarge {
            coefficient: c,
            max_safe: max_safe_beta(problem, lambda)?,
        });
    }
    let m = portfolio_moments(problem)?;
    let half = lambda / 2.0;
    Ok(&m.sigma_inv_mu * (c * half) - &m.rotated * (d * half))
}

/// Exact KL worst case for the position `a` (loss matrix `a a^T`):
/// `Sigma_KL = (I - 2 theta Sigma A)^{-1} Sigma`,
/// `mu_KL = mu - lambda theta (I - 2 theta Sigma A)^{-1} Sigma a`.
pub fn kl_worst_case_measure(
    model: &GaussianSpec,
    a: &DVector<f64>,
    lambda: f64,
    theta: f64,
) -> Result<GaussianSpec> {
    require_multiplier("theta", theta)?;
    let n = model.dim();
    if a.len() != n {
        return Err(Error::shape(format!("{n} weights"), a.len()));
    }
    let var = a.dot(&(&model.sigma * a));
    if 1.0 - 2.0 * theta * var <= 0.0 {
        return Err(Error::BudgetTooLarge {
            coefficient: 1.0 - 2.0 * theta * var,
            max_safe: 1.0 / (2.0 * var),
        });
    }
    let m = DMatrix::identity(n, n) - &model.sigma * a * a.transpose() * (2.0 * theta);
    let m_inv = linalg::inverse(&m, "I - 2 theta Sigma A")?;
    let sigma = linalg::symmetrize(&(&m_inv * &model.sigma));
    let mu = &model.mu - &m_inv * (&model.sigma * a) * (lambda * theta);
    Ok(GaussianSpec { mu, sigma })
}

/// Exact Wasserstein worst case (no diffusion) for the position `a`:
/// `Sigma_W = G Sigma G^T` with `G = (I - beta B^{-1} A)^{-1}`,
/// `mu_W = mu - (lambda/2) beta G B^{-1} a`.
pub fn w_worst_case_measure(
    problem: &PortfolioProblem,
    a: &DVector<f64>,
    lambda: f64,
    beta: f64,
) -> Result<GaussianSpec> {
    require_multiplier("beta", beta)?;
    let n = problem.model.dim();
    if a.len() != n {
        return Err(Error::shape(format!("{n} weights"), a.len()));
    }
    let b_inv_a = linalg::solve(&problem.b, a, "metric matrix B")?;
    let q = a.dot(&b_inv_a);
    if 1.0 - beta * q <= 0.0 {
        return Err(Error::BudgetTooLarge {
            coefficient: 1.0 - beta * q,
            max_safe: 1.0 / q,
        });
    }
    let n_mat = DMatrix::identity(n, n) - &b_inv_a * a.transpose() * beta;
    let g = linalg::inverse(&n_mat, "I - beta B^-1 A")?;
    let sigma = linalg::symmetrize(&(&g * &problem.model.sigma * g.transpose()));
    let mu = &problem.model.mu - &g * b_inv_a * (lambda * beta / 2.0);
    Ok(GaussianSpec { mu, sigma })
}

/// `a^T Sigma_Q a - lambda a^T mu_Q` for a worst-case measure `Q`.
pub fn objective(measure: &GaussianSpec, a: &DVector<f64>, lambda: f64) -> f64 {
    a.dot(&(&measure.sigma * a)) - lambda * a.dot(&measure.mu)
}

/// Residual of the first-order KL stationarity condition
/// `2 Sigma a - lambda mu + 2 theta (lambda^2 + 4 a^T Sigma a) Sigma a`.
pub fn kl_stationarity_residual(
    model: &GaussianSpec,
    a: &DVector<f64>,
    lambda: f64,
    theta: f64,
) -> DVector<f64> {
    let sa = &model.sigma * a;
    let var = a.dot(&sa);
    &sa * 2.0 - &model.mu * lambda + &sa * (2.0 * theta * (lambda * lambda + 4.0 * var))
}

/// Residual of the first-order Wasserstein stationarity condition
/// `2 Sigma a - lambda mu + beta (4 a^T B^{-1} a Sigma a + (4 a^T Sigma a + lambda^2) B^{-1} a)`.
pub fn w_stationarity_residual(
    problem: &PortfolioProblem,
    a: &DVector<f64>,
    lambda: f64,
    beta: f64,
) -> Result<DVector<f64>> {
    let sa = &problem.model.sigma * a;
    let b_inv_a = linalg::solve(&problem.b, a, "metric matrix B")?;
    let var = a.dot(&sa);
    let q = a.dot(&b_inv_a);
    Ok(&sa * 2.0 - &problem.model.mu * lambda
        + (&sa * (4.0 * q) + &b_inv_a * (4.0 * var + lambda * lambda)) * beta)
}

/// Worst-case Sharpe ratio of the robust KL portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustSharpe {
    /// `(1 - (theta/4) lambda^2 c (c S^2 + 2)) S`
    pub first_order: f64,
    /// `mu_KL^T a / sqrt(a^T Sigma_KL a)` under the exact worst case.
    pub exact: f64,
}

pub fn robust_sharpe_kl(model: &GaussianSpec, lambda: f64, theta: f64) -> Result<RobustSharpe> {
    let c = kl_coefficient(model, lambda, theta)?;
    let a = robust_weights_kl(model, lambda, theta)?;
    let n = model.dim();
    let s2 = moments(model, &DMatrix::identity(n, n))?.sharpe_sq;
    let s = s2.sqrt();
    let first_order = (1.0 - theta / 4.0 * lambda * lambda * c * (c * s2 + 2.0)) * s;
    let exact = sharpe_under(&kl_worst_case_measure(model, &a, lambda, theta)?, &a);
    Ok(RobustSharpe { first_order, exact })
}

/// `mu^T a / sqrt(a^T Sigma a)`.
pub fn sharpe_under(measure: &GaussianSpec, a: &DVector<f64>) -> f64 {
    a.dot(&measure.mu) / a.dot(&(&measure.sigma * a)).sqrt()
}

/// Effective covariance and the matching eigenvalue adjustment.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCovariance {
    /// `Sigma (c I - d Sigma^{-1})^{-1}`
    pub matrix: DMatrix<f64>,
    /// Eigenvalues `x` of `Sigma`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `x / (c - d/x)`
    pub adjusted: Vec<f64>,
    /// `x + (beta lambda^2 / 2)(1 + S^2 + x R)`, exact to first order in beta.
    pub first_order: Vec<f64>,
    /// Eigenvectors of `Sigma`, shared with the effective covariance.
    pub eigenvectors: DMatrix<f64>,
}

/// Effective covariance of the robust Wasserstein portfolio: `a*_W` equals
/// the nominal weights computed with this matrix in place of `Sigma`.
/// Requires the identity metric.
pub fn effective_covariance(
    problem: &PortfolioProblem,
    lambda: f64,
    beta: f64,
) -> Result<EffectiveCovariance> {
    let n = problem.model.dim();
    if (&problem.b - DMatrix::<f64>::identity(n, n)).amax() > linalg::SYMMETRY_TOL {
        return Err(Error::InvalidInput(
            "the eigenvalue adjustment assumes the identity metric B = I".into(),
        ));
    }
    let (c, d) = w_coefficients(problem, lambda, beta)?;
    let m = portfolio_moments(problem)?;
    let sigma = &problem.model.sigma;
    let sigma_inv = linalg::inverse(sigma, "covariance")?;
    let inner = DMatrix::identity(n, n) * c - sigma_inv * d;
    let matrix = linalg::symmetrize(&(sigma * linalg::inverse(&inner, "c I - d Sigma^-1")?));
    let (eigenvalues, eigenvectors) = linalg::sym_eigen_sorted(sigma);
    let h = beta * lambda * lambda / 2.0;
    let mut adjusted = Vec::with_capacity(n);
    for &x in &eigenvalues {
        let den = c - d / x;
        if den.abs() < 1e-12 * c.abs().max(1.0) {
            return Err(Error::NearSingular {
                what: "c - d/x",
                condition: 1.0 / den.abs(),
            });
        }
        adjusted.push(x / den);
    }
    let first_order = eigenvalues
        .iter()
        .map(|&x| x + h * (1.0 + m.sharpe_sq + x * m.r))
        .collect();
    Ok(EffectiveCovariance {
        matrix,
        eigenvalues,
        adjusted,
        first_order,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierMethod {
    Nominal,
    Kl,
    Wasserstein,
}

impl std::str::FromStr for FrontierMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Self::Nominal),
            "kl" => Ok(Self::Kl),
            "w" | "wasserstein" => Ok(Self::Wasserstein),
            other => Err(Error::InvalidInput(format!(
                "unknown frontier method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub lambda: f64,
    pub std_dev: f64,
    pub excess_return: f64,
    pub sharpe: f64,
    pub weights: DVector<f64>,
}

/// Capital market line: for each lambda, the method's weights evaluated under
/// the method's exact worst case (the reference model for `Nominal`).
/// `multiplier` is theta for KL, beta for Wasserstein, ignored for nominal.
pub fn cml_curve(
    problem: &PortfolioProblem,
    method: FrontierMethod,
    multiplier: f64,
) -> Result<Vec<FrontierPoint>> {
    if problem.lambdas.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    problem
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let (weights, measure) = match method {
                FrontierMethod::Nominal => {
                    (mvo_weights(&problem.model, lambda)?, problem.model.clone())
                }
                FrontierMethod::Kl => {
                    let a = robust_weights_kl(&problem.model, lambda, multiplier)?;
                    let q = kl_worst_case_measure(&problem.model, &a, lambda, multiplier)?;
                    (a, q)
                }
                FrontierMethod::Wasserstein => {
                    let a = robust_weights_w(problem, lambda, multiplier)?;
                    let q = w_worst_case_measure(problem, &a, lambda, multiplier)?;
                    (a, q)
                }
            };
            let var = weights.dot(&(&measure.sigma * &weights)).max(0.0);
            let std_dev = var.sqrt();
            let excess_return = weights.dot(&measure.mu);
            let sharpe = if std_dev > 0.0 {
                excess_return / std_dev
            } else {
                0.0
            };
            Ok(FrontierPoint {
                lambda,
                std_dev,
                excess_return,
                sharpe,
                weights,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(rho: f64) -> PortfolioProblem {
        PortfolioProblem::two_asset([0.65, -0.1], rho, vec![0.5, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn identity_covariance_weights() {
        let model =
            GaussianSpec::new(DVector::from_vec(vec![0.1, 0.2]), DMatrix::identity(2, 2)).unwrap();
        let a = mvo_weights(&model, 2.0).unwrap();
        assert!((a - DVector::from_vec(vec![0.1, 0.2])).norm() < 1e-15);
    }

    #[test]
    fn correlated_pair_weights() {
        let p = pair(0.5);
        let a = mvo_weights(&p.model, 2.0).unwrap();
        // [[1, .5], [.5, 1]]^{-1} (0.65, -0.1) = (2.8/3, -1.7/3)
        assert!((a[0] - 2.8 / 3.0).abs() < 1e-14);
        assert!((a[1] + 1.7 / 3.0).abs() < 1e-14);
        let m = portfolio_moments(&p).unwrap();
        assert!((m.sharpe_sq - (0.65 * 2.8 + 0.1 * 1.7) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn kl_coefficient_on_the_pair() {
        let p = pair(0.5);
        let c = kl_coefficient(&p.model, 2.0, 0.05).unwrap();
        let s2 = (0.65 * 2.8 + 0.1 * 1.7) / 3.0;
        assert!((c - (1.0 - 0.2 * (1.0 + s2))).abs() < 1e-14);
    }

    #[test]
    fn singular_covariance_is_diagnosed() {
        let model = GaussianSpec::new(
            DVector::from_vec(vec![0.1, 0.1]),
            DMatrix::from_element(2, 2, 1.0),
        )
        .unwrap();
        let err = mvo_weights(&model, 1.0).unwrap_err();
        assert!(err.is_numerical());
        assert!(err.to_string().contains("robust"));
    }

    #[test]
    fn budget_too_large_reports_max_safe_value() {
        let p = pair(0.5);
        let max = max_safe_theta(&p.model, 2.0).unwrap();
        match robust_weights_kl(&p.model, 2.0, 1.5 * max).unwrap_err() {
            Error::BudgetTooLarge { max_safe, .. } => assert!((max_safe - max).abs() < 1e-15),
            e => panic!("unexpected {e:?}"),
        }
        let maxb = max_safe_beta(&p, 2.0).unwrap();
        assert!(robust_weights_w(&p, 2.0, 1.5 * maxb).is_err());
    }

    #[test]
    fn zero_multipliers_recover_nominal() {
        let p = pair(0.5);
        let a = mvo_weights(&p.model, 1.0).unwrap();
        assert_eq!(robust_weights_kl(&p.model, 1.0, 0.0).unwrap(), a);
        assert!((robust_weights_w(&p, 1.0, 0.0).unwrap() - &a).norm() < 1e-15);
        let eff = effective_covariance(&p, 1.0, 0.0).unwrap();
        assert!((eff.matrix - &p.model.sigma).norm() < 1e-14);
        for (x, y) in eff.eigenvalues.iter().zip(&eff.adjusted) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn effective_covariance_reproduces_robust_weights() {
        let p = pair(0.9);
        let (lambda, beta) = (1.0, 0.01);
        let eff = effective_covariance(&p, lambda, beta).unwrap();
        let via = linalg::solve(&eff.matrix, &p.model.mu, "eff").unwrap() * (lambda / 2.0);
        let direct = robust_weights_w(&p, lambda, beta).unwrap();
        assert!((via - direct).norm() < 1e-12);
    }

    #[test]
    fn frontier_methods_parse() {
        assert_eq!(
            "w".parse::<FrontierMethod>().unwrap(),
            FrontierMethod::Wasserstein
        );
        assert!("x".parse::<FrontierMethod>().is_err());
    }
}

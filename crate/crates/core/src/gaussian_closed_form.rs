//! Closed-form worst cases for Gaussian and point-mass reference models with
//! quadratic transport cost.
//!
//! Multivariate results use a loss `V(x) = x^T A x` and cost
//! `c(x, y) = (x - y)^T B (x - y)`. The Wasserstein worst case exists iff
//! `B - beta A` is positive definite, whatever the covariance; it is the
//! pushforward of the reference under `G = (B - beta A)^{-1} B` plus an
//! isotropic-in-`B` diffusion of size `alpha beta / 2`. The KL worst case
//! only rescales the covariance and never leaves its support.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{GridDensity, UniformGrid};
use crate::linalg;
use crate::params::{LossSpec, RobustnessParams};

/// Tolerance on negative eigenvalues of a covariance matrix.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl GaussianSpec {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidInput("mean vector is empty".into()));
        }
        if let Some(v) = mu.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mean has non-finite entry {v}"
            )));
        }
        linalg::require_square(&sigma, n, "covariance")?;
        linalg::require_symmetric(&sigma, "covariance")?;
        linalg::require_psd(&sigma, "covariance", PSD_TOL)?;
        Ok(Self { mu, sigma })
    }

    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mean),
            DMatrix::from_element(1, 1, variance),
        )
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.sigma)
    }
}

/// Loss matrix `A` (positive semi-definite) and metric matrix `B`
/// (positive definite).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl QuadraticFormSpec {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        linalg::require_square(&a, n, "loss matrix A")?;
        linalg::require_square(&b, n, "metric matrix B")?;
        linalg::require_symmetric(&a, "loss matrix A")?;
        linalg::require_symmetric(&b, "metric matrix B")?;
        linalg::require_psd(&a, "loss matrix A", PSD_TOL)?;
        linalg::require_positive_definite(&b, "metric matrix B")?;
        Ok(Self { a, b })
    }

    /// `B = I`.
    pub fn with_identity_metric(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `B - beta A`, checked positive definite.
    fn shifted_metric(&self, beta: f64) -> Result<DMatrix<f64>> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be finite and nonnegative",
            });
        }
        let m = linalg::symmetrize(&(&self.b - &self.a * beta));
        linalg::require_positive_definite(&m, "B - beta A")?;
        Ok(m)
    }
}

/// Mean and variance of the worst case around a point mass when it is
/// Gaussian: linear loss, or quadratic loss with `beta < 1`.
pub fn dirac_worst_case_moments(
    point: f64,
    loss: &LossSpec,
    params: &RobustnessParams,
) -> Result<(f64, f64)> {
    params.require_entropic()?;
    let (alpha, beta) = (params.alpha, params.beta);
    match loss {
        LossSpec::Linear => Ok((point + beta / 2.0, alpha * beta / 2.0)),
        LossSpec::Quadratic { center } => {
            if beta >= 1.0 {
                return Err(Error::NonIntegrable(format!(
                    "quadratic loss outgrows the transport cost for beta = {beta} >= 1"
                )));
            }
            Ok((
                (point - beta * center) / (1.0 - beta),
                alpha * beta / (2.0 * (1.0 - beta)),
            ))
        }
        LossSpec::Tabulated { .. } => Err(Error::InvalidInput(
            "tabulated losses have no closed-form worst case; use the grid".into(),
        )),
    }
}

/// Worst case around a point mass:
/// `q(x) ∝ exp(V(x)/alpha - (x - point)^2/(alpha beta))`, tabulated on `grid`.
///
/// Linear and quadratic losses use the exact normal; tabulated losses are
/// normalized on the grid and checked for mass at the edges.
pub fn dirac_worst_case(
    point: f64,
    loss: &LossSpec,
    params: &RobustnessParams,
    grid: UniformGrid,
) -> Result<GridDensity> {
    params.require_entropic()?;
    match loss {
        LossSpec::Linear | LossSpec::Quadratic { .. } => {
            let (mean, var) = dirac_worst_case_moments(point, loss, params)?;
            let q = GridDensity::normal(grid, mean, var.sqrt())?;
            q.check_boundary(None)?;
            Ok(q)
        }
        LossSpec::Tabulated { .. } => {
            let inv_ab = 1.0 / (params.alpha * params.beta);
            let logv = grid
                .points()
                .iter()
                .map(|&x| Ok(loss.eval(x)? / params.alpha - (x - point) * (x - point) * inv_ab))
                .collect::<Result<Vec<f64>>>()?;
            let q = GridDensity::from_log_values(grid, &logv)?;
            q.check_boundary(None)?;
            Ok(q)
        }
    }
}

/// Wasserstein worst-case variance of a normal reference with variance
/// `sigma2t` under the centered quadratic loss:
/// `sigma2t/(1 - beta)^2 + alpha beta/(2 (1 - beta))`.
pub fn worst_case_variance_w(sigma2t: f64, params: &RobustnessParams) -> Result<f64> {
    if !(sigma2t >= 0.0 && sigma2t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma2t",
            value: sigma2t,
            reason: "variance must be finite and nonnegative",
        });
    }
    let (alpha, beta) = (params.alpha, params.beta);
    if beta >= 1.0 {
        return Err(Error::NonIntegrable(format!(
            "quadratic loss outgrows the transport cost for beta = {beta} >= 1"
        )));
    }
    let s = 1.0 - beta;
    Ok(sigma2t / (s * s) + alpha * beta / (2.0 * s))
}

/// KL worst-case variance `sigma2t / (1 - 2 theta sigma2t)`.
pub fn worst_case_variance_kl(sigma2t: f64, theta: f64) -> Result<f64> {
    if !(sigma2t >= 0.0 && sigma2t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma2t",
            value: sigma2t,
            reason: "variance must be finite and nonnegative",
        });
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must be finite and nonnegative",
        });
    }
    let d = 1.0 - 2.0 * theta * sigma2t;
    if d <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "exponential tilt diverges: 2 theta sigma^2 T = {} >= 1",
            2.0 * theta * sigma2t
        )));
    }
    Ok(sigma2t / d)
}

fn check_dims(model: &GaussianSpec, n: usize) -> Result<()> {
    if model.dim() != n {
        return Err(Error::shape(format!("dimension {n}"), model.dim()));
    }
    Ok(())
}

/// Multivariate Wasserstein worst case:
/// `mu_W = (B - beta A)^{-1} B mu`,
/// `Sigma_W = (B - beta A)^{-1} B Sigma B (B - beta A)^{-1} + (alpha beta / 2)(B - beta A)^{-1}`.
pub fn mvn_worst_case_w(
    model: &GaussianSpec,
    forms: &QuadraticFormSpec,
    params: &RobustnessParams,
) -> Result<GaussianSpec> {
    check_dims(model, forms.dim())?;
    let m = forms.shifted_metric(params.beta)?;
    let m_inv = linalg::symmetrize(&linalg::inverse(&m, "B - beta A")?);
    let g = &m_inv * &forms.b;
    let mu = &g * &model.mu;
    let sigma = &g * &model.sigma * g.transpose() + &m_inv * (params.alpha * params.beta / 2.0);
    Ok(GaussianSpec {
        mu,
        sigma: linalg::symmetrize(&sigma),
    })
}

/// Multivariate KL worst case:
/// `mu_KL = (I - 2 theta Sigma A)^{-1} mu`, `Sigma_KL = (I - 2 theta Sigma A)^{-1} Sigma`.
pub fn mvn_worst_case_kl(
    model: &GaussianSpec,
    a: &DMatrix<f64>,
    theta: f64,
) -> Result<GaussianSpec> {
    let n = model.dim();
    linalg::require_square(a, n, "loss matrix A")?;
    linalg::require_symmetric(a, "loss matrix A")?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must be finite and nonnegative",
        });
    }
    let m = DMatrix::identity(n, n) - &model.sigma * a * (2.0 * theta);
    let m_inv = linalg::inverse(&m, "I - 2 theta Sigma A")?;
    let mu = &m_inv * &model.mu;
    let sigma = linalg::symmetrize(&(&m_inv * &model.sigma));
    // the tilt is integrable only while the tilted covariance stays PSD
    let scale = sigma.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1.0);
    let min = linalg::sym_eigenvalues(&sigma)[0];
    if min < -PSD_TOL * scale {
        return Err(Error::NotPositiveDefinite {
            what: "KL worst-case covariance",
            eigenvalue: min,
        });
    }
    Ok(GaussianSpec { mu, sigma })
}

/// The linear map `x -> (B - beta A)^{-1} B x` taking each reference point to
/// its worst-case image when `alpha = 0`.
pub fn worst_case_linear_map(forms: &QuadraticFormSpec, beta: f64) -> Result<DMatrix<f64>> {
    let m = forms.shifted_metric(beta)?;
    Ok(linalg::inverse(&m, "B - beta A")? * &forms.b)
}

/// `G = (I - beta B^{-1} A)^{-1}`, algebraically the same matrix as
/// [`worst_case_linear_map`], computed through `B^{-1}`.
pub fn measure_preserving_map(forms: &QuadraticFormSpec, beta: f64) -> Result<DMatrix<f64>> {
    forms.shifted_metric(beta)?;
    let n = forms.dim();
    let b_inv = linalg::inverse(&forms.b, "metric matrix B")?;
    linalg::inverse(
        &(DMatrix::identity(n, n) - b_inv * &forms.a * beta),
        "I - beta B^-1 A",
    )
}

/// Largest `beta` keeping `B - beta A` positive definite (`inf` when `A = 0`).
pub fn max_safe_beta(forms: &QuadraticFormSpec) -> Result<f64> {
    // generalized eigenvalues of (A, B) via B^{-1/2} A B^{-1/2}
    let (vals, vecs) = linalg::sym_eigen_sorted(&forms.b);
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| 1.0 / v.sqrt()),
    ));
    let b_inv_half = &vecs * inv_sqrt * vecs.transpose();
    let top = *linalg::sym_eigenvalues(&(&b_inv_half * &forms.a * &b_inv_half))
        .last()
        .expect("nonempty");
    Ok(if top > 0.0 { 1.0 / top } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn dirac_linear_and_constant_losses() {
        let params = RobustnessParams::wasserstein(0.1, 0.2).unwrap();
        let (m, v) = dirac_worst_case_moments(0.05, &LossSpec::Linear, &params).unwrap();
        assert!((m - 0.15).abs() < 1e-15 && (v - 0.01).abs() < 1e-15);
        let g = UniformGrid::new(-2.0, 2.0, 2001).unwrap();
        let zero = LossSpec::tabulated(vec![-2.0, 2.0], vec![0.0, 0.0]).unwrap();
        let q = dirac_worst_case(0.3, &zero, &params, g).unwrap();
        assert!((q.mean() - 0.3).abs() < 1e-10);
        assert!((q.variance() - 0.01).abs() < 1e-8);
    }

    #[test]
    fn dirac_quadratic_loss() {
        let params = RobustnessParams::wasserstein(1.0, 0.5).unwrap();
        let loss = LossSpec::Quadratic { center: 0.1 };
        let (m, v) = dirac_worst_case_moments(0.1, &loss, &params).unwrap();
        assert!((m - 0.1).abs() < 1e-15);
        assert!((v - 0.5).abs() < 1e-15);
        let too_big = RobustnessParams::wasserstein(1.0, 1.0).unwrap();
        assert!(dirac_worst_case_moments(0.1, &loss, &too_big)
            .unwrap_err()
            .is_numerical());
    }

    #[test]
    fn variance_spot_values() {
        let p = RobustnessParams::wasserstein(0.1, 0.2).unwrap();
        assert!((worst_case_variance_w(0.04, &p).unwrap() - 0.075).abs() < 1e-15);
        assert!((worst_case_variance_kl(0.04, 2.5).unwrap() - 0.05).abs() < 1e-15);
        let none = RobustnessParams::wasserstein(0.1, 0.0).unwrap();
        assert_eq!(worst_case_variance_w(0.04, &none).unwrap(), 0.04);
        assert_eq!(worst_case_variance_kl(0.04, 0.0).unwrap(), 0.04);
        assert!(worst_case_variance_w(0.0, &p).unwrap() > 0.0);
        assert!(worst_case_variance_kl(0.04, 12.5).is_err());
        let one = RobustnessParams::wasserstein(0.1, 1.0).unwrap();
        assert!(worst_case_variance_w(0.04, &one).is_err());
    }

    #[test]
    fn zero_multipliers_leave_the_model_alone() {
        let model = GaussianSpec::new(
            DVector::from_vec(vec![0.1, -0.2]),
            mat(2, &[1.0, 0.3, 0.3, 2.0]),
        )
        .unwrap();
        let forms = QuadraticFormSpec::with_identity_metric(mat(2, &[1.0, 0.2, 0.2, 0.5])).unwrap();
        let w = mvn_worst_case_w(
            &model,
            &forms,
            &RobustnessParams::wasserstein(0.7, 0.0).unwrap(),
        )
        .unwrap();
        assert!((w.sigma - &model.sigma).norm() < 1e-15);
        assert!((w.mu - &model.mu).norm() < 1e-15);
        let kl = mvn_worst_case_kl(&model, &forms.a, 0.0).unwrap();
        assert!((kl.sigma - &model.sigma).norm() < 1e-15);
        let map = worst_case_linear_map(&forms, 0.0).unwrap();
        assert!((map - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn identity_forms_double_at_half_beta() {
        let forms =
            QuadraticFormSpec::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let map = worst_case_linear_map(&forms, 0.5).unwrap();
        assert!((map - DMatrix::identity(2, 2) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn infeasible_beta_names_the_eigenvalue() {
        let forms =
            QuadraticFormSpec::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let model = GaussianSpec::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let err = mvn_worst_case_w(
            &model,
            &forms,
            &RobustnessParams::wasserstein(0.1, 1.5).unwrap(),
        )
        .unwrap_err();
        match err {
            Error::NotPositiveDefinite { eigenvalue, .. } => {
                assert!((eigenvalue + 0.5).abs() < 1e-12)
            }
            e => panic!("unexpected {e:?}"),
        }
        assert_eq!(max_safe_beta(&forms).unwrap(), 1.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(GaussianSpec::new(DVector::zeros(2), mat(2, &[1.0, 0.0, 0.1, 1.0])).is_err());
        assert!(GaussianSpec::new(DVector::zeros(2), mat(2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(QuadraticFormSpec::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).is_err());
    }
}

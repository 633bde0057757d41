//! Worst-case densities on a one-dimensional grid.
//!
//! For a reference density `p`, loss `V`, cost `c` and prior `q0`, the
//! adversary's transition kernel is
//!
//! `gamma_x(y) = q0(y) exp(V(y)/alpha - c(x,y)/(alpha beta)) / Z(x)`
//!
//! and the worst-case marginal is `q*(y) = int p(x) gamma_x(y) dx`. A uniform
//! prior gives the plain entropic-transport worst case; `alpha -> 0` gives the
//! deterministic transport map, and `q0 = p` with `beta -> inf` reduces to
//! the exponential tilt `p e^{theta V}` of the KL approach.
//!
//! Point masses are represented here by narrow normal proxies with a standard
//! deviation of three grid steps ([`GridDensity::dirac_proxy`]). State spaces
//! are truncated to the grid; results carrying more than
//! [`crate::grid::BOUNDARY_TOLERANCE`] of their mass in the outer cells are
//! rejected with [`Error::BoundaryMass`] rather than silently clipped.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    boundary_fractions, normalized_exp, GridDensity, UniformGrid, BOUNDARY_TOLERANCE,
};
use crate::params::{require_positive, CostSpec, LossSpec, RobustnessParams};

/// Source nodes are processed in fixed-size blocks so the summation order,
/// and hence every output bit, is independent of the thread count.
const BLOCK: usize = 64;

/// Reference mass below which a kernel row is not inspected for boundary mass.
const NEGLIGIBLE_ROW_MASS: f64 = 1e-6;

/// A kernel row whose mass reaches the grid edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RowWarning {
    pub node: usize,
    pub edge: &'static str,
    pub fraction: f64,
}

/// Conditional densities `gamma_x(.)`, one per source node of the grid.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    grid: UniformGrid,
    rows: Vec<Vec<f64>>,
    warnings: Vec<RowWarning>,
}

impl TransitionKernel {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Density values of the row for source node `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn row_density(&self, i: usize) -> GridDensity {
        GridDensity::from_values(self.grid, self.rows[i].clone())
            .expect("kernel rows are normalized densities")
    }

    pub fn row_mean(&self, i: usize) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|j| g.weight(j) * self.rows[i][j] * g.node(j))
            .sum()
    }

    /// Differential entropy of row `i`; averaging it against `p` gives the
    /// conditional entropy `H(Y|X)` bounded by the entropy constraint.
    pub fn row_entropy(&self, i: usize) -> f64 {
        let g = &self.grid;
        -(0..g.len())
            .filter(|&j| self.rows[i][j] > 0.0)
            .map(|j| g.weight(j) * self.rows[i][j] * self.rows[i][j].ln())
            .sum::<f64>()
    }

    /// Rows, among those where the reference has mass, that reach an edge.
    pub fn boundary_warnings(&self) -> &[RowWarning] {
        &self.warnings
    }
}

/// Everything needed to evaluate kernel rows in log space.
struct KernelSetup {
    grid: UniformGrid,
    nodes: Vec<f64>,
    /// `ln q0(y) + V(y)/alpha`
    log_base: Vec<f64>,
    inv_alpha_beta: f64,
    cost: CostSpec,
}

impl KernelSetup {
    fn new(
        p: &GridDensity,
        loss: &LossSpec,
        cost: CostSpec,
        params: &RobustnessParams,
        prior: &GridDensity,
    ) -> Result<Self> {
        params.require_entropic()?;
        let grid = *p.grid();
        same_grid(p, prior)?;
        if let Some(i) = prior.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "prior must be strictly positive on the grid; node {i} (x = {}) has {}",
                grid.node(i),
                prior.values()[i]
            )));
        }
        let nodes = grid.points();
        let v = loss.eval_all(&nodes)?;
        let log_base = prior
            .values()
            .iter()
            .zip(&v)
            .map(|(q0, v)| q0.ln() + v / params.alpha)
            .collect();
        Ok(Self {
            grid,
            nodes,
            log_base,
            inv_alpha_beta: 1.0 / (params.alpha * params.beta),
            cost,
        })
    }

    fn log_row(&self, i: usize) -> Vec<f64> {
        let x = self.nodes[i];
        self.nodes
            .iter()
            .zip(&self.log_base)
            .map(|(&y, b)| b - self.cost.eval(x, y) * self.inv_alpha_beta)
            .collect()
    }

    fn row(&self, i: usize) -> Result<Vec<f64>> {
        normalized_exp(&self.grid, &self.log_row(i))
    }
}

fn same_grid(a: &GridDensity, b: &GridDensity) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidInput(format!(
            "densities live on different grids: [{}, {}] x {} vs [{}, {}] x {}",
            a.grid().lo(),
            a.grid().hi(),
            a.grid().len(),
            b.grid().lo(),
            b.grid().hi(),
            b.grid().len()
        )));
    }
    Ok(())
}

/// Worst-case transition kernel. Rows are built for every grid node; rows that
/// reach the grid edge are reported through
/// [`TransitionKernel::boundary_warnings`] instead of failing.
pub fn transition_kernel(
    p: &GridDensity,
    loss: &LossSpec,
    cost: CostSpec,
    params: &RobustnessParams,
    prior: &GridDensity,
) -> Result<TransitionKernel> {
    let setup = KernelSetup::new(p, loss, cost, params, prior)?;
    let grid = setup.grid;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| setup.row(i))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if p.values()[i] * grid.weight(i) < NEGLIGIBLE_ROW_MASS {
            continue;
        }
        let (l, r) = boundary_fractions(&grid, row);
        for (edge, fraction) in [("lower", l), ("upper", r)] {
            if fraction > BOUNDARY_TOLERANCE {
                warnings.push(RowWarning {
                    node: i,
                    edge,
                    fraction,
                });
            }
        }
    }
    Ok(TransitionKernel {
        grid,
        rows,
        warnings,
    })
}

/// Worst-case marginal `q*(y) = int p(x) gamma_x(y) dx`.
///
/// Fails with [`Error::BoundaryMass`] when `q*` has more mass in the outer
/// cells than both `p` and the prior, which means the grid truncates it.
pub fn worst_case_density(
    p: &GridDensity,
    loss: &LossSpec,
    cost: CostSpec,
    params: &RobustnessParams,
    prior: &GridDensity,
) -> Result<GridDensity> {
    let setup = KernelSetup::new(p, loss, cost, params, prior)?;
    let grid = setup.grid;
    let n = grid.len();
    let mass: Vec<f64> = (0..n).map(|i| p.values()[i] * grid.weight(i)).collect();

    let blocks: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; n];
            for (i, &m) in mass
                .iter()
                .enumerate()
                .take((b + 1) * BLOCK)
                .skip(b * BLOCK)
            {
                if m == 0.0 {
                    continue;
                }
                let row = setup.row(i)?;
                for (a, r) in acc.iter_mut().zip(&row) {
                    *a += m * r;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut q = vec![0.0; n];
    for block in &blocks {
        for (a, b) in q.iter_mut().zip(block) {
            *a += b;
        }
    }
    let q = GridDensity::from_values(grid, q)?;
    check_against(&q, &[p, prior])?;
    Ok(q)
}

/// Boundary check allowing as much edge mass as the most edge-heavy reference.
fn check_against(q: &GridDensity, refs: &[&GridDensity]) -> Result<()> {
    let (l, r) = q.boundary_fractions();
    let (rl, rr) = refs.iter().fold((0.0_f64, 0.0_f64), |(a, b), d| {
        let (x, y) = d.boundary_fractions();
        (a.max(x), b.max(y))
    });
    if l > BOUNDARY_TOLERANCE && l > rl {
        return Err(Error::BoundaryMass {
            edge: "lower",
            fraction: l,
        });
    }
    if r > BOUNDARY_TOLERANCE && r > rr {
        return Err(Error::BoundaryMass {
            edge: "upper",
            fraction: r,
        });
    }
    Ok(())
}

/// Deterministic transport map `T*(x) = argmax_y V(y) - c(x, y)/beta` over grid
/// nodes, the `alpha -> 0` limit of the kernel. Ties go to the smallest `y`.
pub fn transport_map(
    p: &GridDensity,
    loss: &LossSpec,
    cost: CostSpec,
    beta: f64,
) -> Result<Vec<f64>> {
    require_positive("beta", beta)?;
    let nodes = p.grid().points();
    let v = loss.eval_all(&nodes)?;
    Ok(nodes
        .par_iter()
        .map(|&x| {
            let mut best = f64::NEG_INFINITY;
            let mut arg = nodes[0];
            for (&y, vy) in nodes.iter().zip(&v) {
                let score = vy - cost.eval(x, y) / beta;
                if score > best {
                    best = score;
                    arg = y;
                }
            }
            arg
        })
        .collect())
}

/// Exponential tilt `q*(x) ∝ p(x) e^{theta V(x)}`, the KL worst case.
///
/// Zeros of `p` stay zeros. A tilt that piles mass onto the grid edge means
/// the normalizer diverges on the untruncated state space and is reported as
/// [`Error::BoundaryMass`].
pub fn kl_worst_case(p: &GridDensity, loss: &LossSpec, theta: f64) -> Result<GridDensity> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must be finite and nonnegative",
        });
    }
    let grid = *p.grid();
    let v = loss.eval_all(&grid.points())?;
    let logv: Vec<f64> = p
        .values()
        .iter()
        .zip(&v)
        .map(|(&pi, vi)| {
            if pi > 0.0 {
                pi.ln() + theta * vi
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let q = GridDensity::from_log_values(grid, &logv)?;
    q.check_boundary(Some(p))?;
    Ok(q)
}

/// Trapezoid integral of `q V`.
pub fn expected_loss(q: &GridDensity, loss: &LossSpec) -> Result<f64> {
    let g = q.grid();
    let v = loss.eval_all(&g.points())?;
    Ok((0..g.len())
        .map(|i| g.weight(i) * q.values()[i] * v[i])
        .sum())
}

/// Recomputes `q*` as a Bayesian posterior mixture and returns the sup-norm
/// gap to [`worst_case_density`].
///
/// The likelihood `L(x | y) = exp(V(y)/alpha - c(x,y)/(alpha beta))` is
/// tabulated target-major, the evidence `E(x) = int L(x|z) q0(z) dz` is formed
/// per source node, and the posteriors `q0(y) L(x|y) / E(x)` are averaged
/// against `p` one target at a time. This is a different order of operations
/// from the row-by-row kernel, so agreement checks both.
pub fn bayes_posterior_check(
    p: &GridDensity,
    loss: &LossSpec,
    cost: CostSpec,
    params: &RobustnessParams,
    prior: &GridDensity,
) -> Result<f64> {
    let direct = worst_case_density(p, loss, cost, params, prior)?;
    params.require_entropic()?;
    let grid = *p.grid();
    let n = grid.len();
    let nodes = grid.points();
    let v = loss.eval_all(&nodes)?;
    let inv_ab = 1.0 / (params.alpha * params.beta);

    // log L(x | y), stored y-major
    let log_lik: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let vy = v[j] / params.alpha;
            nodes
                .iter()
                .map(|&x| vy - cost.eval(x, nodes[j]) * inv_ab)
                .collect()
        })
        .collect();

    // log E(x) by log-sum-exp over y
    let q0 = prior.values();
    let log_evidence: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let shift = (0..n)
                .map(|j| log_lik[j][i])
                .fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = (0..n)
                .map(|j| grid.weight(j) * q0[j] * (log_lik[j][i] - shift).exp())
                .sum();
            shift + s.ln()
        })
        .collect();

    let px = p.values();
    let posterior_mix: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let s: f64 = (0..n)
                .filter(|&i| px[i] > 0.0)
                .map(|i| grid.weight(i) * px[i] * (log_lik[j][i] - log_evidence[i]).exp())
                .sum();
            q0[j] * s
        })
        .collect();
    let bayes = GridDensity::from_values(grid, posterior_mix)?;
    Ok(direct
        .values()
        .iter()
        .zip(bayes.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> UniformGrid {
        UniformGrid::new(lo, hi, n).unwrap()
    }

    #[test]
    fn linear_loss_rows_are_shifted_normals() {
        let g = grid(-6.0, 6.0, 1201);
        let p = GridDensity::normal(g, 0.0, 1.0).unwrap();
        let prior = GridDensity::uniform(g);
        let params = RobustnessParams::wasserstein(0.4, 0.5).unwrap();
        let k = transition_kernel(
            &p,
            &LossSpec::Linear,
            CostSpec::quadratic(),
            &params,
            &prior,
        )
        .unwrap();
        for i in [400, 600, 800] {
            let x = g.node(i);
            let row = k.row_density(i);
            assert!((row.mean() - (x + 0.25)).abs() < 1e-6, "mean at {x}");
            assert!((row.variance() - 0.1).abs() < 1e-6, "variance at {x}");
        }
        assert!(k.boundary_warnings().is_empty());
    }

    #[test]
    fn tiny_beta_keeps_rows_in_place() {
        let g = grid(-3.0, 3.0, 601);
        let p = GridDensity::normal(g, 0.0, 0.5).unwrap();
        let prior = GridDensity::uniform(g);
        let params = RobustnessParams::wasserstein(1.0, 1e-8).unwrap();
        let k = transition_kernel(
            &p,
            &LossSpec::Linear,
            CostSpec::quadratic(),
            &params,
            &prior,
        )
        .unwrap();
        for i in [100, 300, 500] {
            assert!((k.row_mean(i) - g.node(i)).abs() < 1e-6);
        }
    }

    #[test]
    fn huge_beta_rows_follow_the_prior() {
        let g = grid(-8.0, 8.0, 801);
        let p = GridDensity::normal(g, 1.0, 0.5).unwrap();
        let prior = GridDensity::normal(g, 0.0, 1.5).unwrap();
        let params = RobustnessParams::wasserstein(1.0, 1e8).unwrap();
        let zero = LossSpec::tabulated(vec![-8.0, 8.0], vec![0.0, 0.0]).unwrap();
        let k = transition_kernel(&p, &zero, CostSpec::quadratic(), &params, &prior).unwrap();
        for i in [200, 400, 600] {
            assert!(k.row_density(i).l1_distance(&prior).unwrap() < 1e-6);
        }
    }

    #[test]
    fn kernel_rejects_nonpositive_prior_and_multipliers() {
        let g = grid(0.0, 1.0, 11);
        let p = GridDensity::uniform(g);
        let mut vals = vec![1.0; 11];
        vals[3] = 0.0;
        let holey = GridDensity::from_values(g, vals).unwrap();
        let params = RobustnessParams::wasserstein(1.0, 1.0).unwrap();
        let loss = LossSpec::Linear;
        assert!(transition_kernel(&p, &loss, CostSpec::quadratic(), &params, &holey).is_err());
        let bad = RobustnessParams::wasserstein(0.0, 1.0).unwrap();
        assert!(transition_kernel(&p, &loss, CostSpec::quadratic(), &bad, &p).is_err());
        let other = GridDensity::uniform(grid(0.0, 2.0, 11));
        assert!(worst_case_density(&p, &loss, CostSpec::quadratic(), &params, &other).is_err());
    }

    #[test]
    fn transport_map_for_linear_loss() {
        let g = grid(-2.0, 2.0, 401);
        let p = GridDensity::uniform(g);
        let t = transport_map(&p, &LossSpec::Linear, CostSpec::quadratic(), 0.6).unwrap();
        for i in (0..300).step_by(37) {
            assert!((t[i] - (g.node(i) + 0.3)).abs() <= g.dx());
        }
    }

    #[test]
    fn transport_map_limits() {
        let g = grid(-2.0, 2.0, 401);
        let p = GridDensity::uniform(g);
        let t = transport_map(&p, &LossSpec::Linear, CostSpec::quadratic(), 1e-9).unwrap();
        for (i, ti) in t.iter().enumerate() {
            assert_eq!(*ti, g.node(i));
        }
        // V(y) = -(y - 0.5)^2 tabulated on the grid nodes
        let xs = g.points();
        let vals: Vec<f64> = xs.iter().map(|y| -(y - 0.5) * (y - 0.5)).collect();
        let loss = LossSpec::tabulated(xs, vals).unwrap();
        let t = transport_map(&p, &loss, CostSpec::quadratic(), 1e9).unwrap();
        assert!(t.iter().all(|&y| (y - 0.5).abs() < 1e-12));
    }

    #[test]
    fn kl_tilt_limits() {
        let g = grid(-10.0, 10.0, 2001);
        let p = GridDensity::normal(g, 0.1, 1.0).unwrap();
        let same = kl_worst_case(&p, &LossSpec::Linear, 0.0).unwrap();
        assert!(same.l1_distance(&p).unwrap() < 1e-14);
        let q = kl_worst_case(&p, &LossSpec::Linear, 0.7).unwrap();
        let expected = GridDensity::normal(g, 0.8, 1.0).unwrap();
        assert!(q.l1_distance(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn kl_tilt_of_exponential_by_square_is_not_integrable() {
        let g = grid(0.0, 30.0, 3001);
        let p = GridDensity::exponential(g, 1.0).unwrap();
        let err = kl_worst_case(&p, &LossSpec::Quadratic { center: 0.0 }, 0.1).unwrap_err();
        assert!(matches!(err, Error::BoundaryMass { edge: "upper", .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn kl_tilt_preserves_zeros() {
        let g = grid(-10.0, 10.0, 201);
        let vals: Vec<f64> = (0..201)
            .map(|i| {
                if i % 3 == 0 {
                    0.0
                } else {
                    (-0.5 * g.node(i).powi(2)).exp()
                }
            })
            .collect();
        let p = GridDensity::from_values(g, vals).unwrap();
        let q = kl_worst_case(&p, &LossSpec::Linear, 2.0).unwrap();
        for (a, b) in p.values().iter().zip(q.values()) {
            assert_eq!(*a == 0.0, *b == 0.0);
        }
    }

    #[test]
    fn expected_loss_examples() {
        let u = GridDensity::uniform(grid(0.0, 1.0, 1001));
        assert!((expected_loss(&u, &LossSpec::Linear).unwrap() - 0.5).abs() < 1e-12);
        let g = grid(-10.0, 10.0, 2001);
        let n = GridDensity::normal(g, 0.0, 1.0).unwrap();
        let v = expected_loss(&n, &LossSpec::Quadratic { center: 0.0 }).unwrap();
        assert!((v - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bayes_route_agrees_with_dirac_proxy() {
        let g = grid(-4.0, 4.0, 401);
        let p = GridDensity::dirac_proxy(g, 0.2).unwrap();
        let prior = GridDensity::uniform(g);
        let params = RobustnessParams::wasserstein(0.3, 0.8).unwrap();
        let gap = bayes_posterior_check(
            &p,
            &LossSpec::Linear,
            CostSpec::quadratic(),
            &params,
            &prior,
        )
        .unwrap();
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn row_entropy_of_normal_row() {
        let g = grid(-6.0, 6.0, 1201);
        let p = GridDensity::normal(g, 0.0, 1.0).unwrap();
        let prior = GridDensity::uniform(g);
        let params = RobustnessParams::wasserstein(0.4, 0.5).unwrap();
        let k = transition_kernel(
            &p,
            &LossSpec::Linear,
            CostSpec::quadratic(),
            &params,
            &prior,
        )
        .unwrap();
        // entropy of N(., 0.1)
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 0.1).ln();
        assert!((k.row_entropy(600) - expected).abs() < 1e-6);
    }
}

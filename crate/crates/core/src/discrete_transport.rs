//! Finite-state probability arithmetic: relative entropy, transport plans,
//! the exact Wasserstein distance and the entropic worst-case measure.
//!
//! Everything here is exact at desk scale (tens of states). The Wasserstein
//! distance is solved with the transportation simplex, so the module can act
//! as a brute-force reference for the grid and closed-form solvers.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::RobustnessParams;

const SUM_TOLERANCE: f64 = 1e-12;

/// Probabilities over an ordered list of named states.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::shape(
                format!("{} probabilities", labels.len()),
                probs.len(),
            ));
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("distribution has no states".into()));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::LabelMismatch(format!(
                    "duplicate label `{l}` at positions {j} and {i}"
                )));
            }
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "probability of state {} is {p}",
                labels[i]
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { labels, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidInput(format!("weights sum to {total}")));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(labels, probs)
    }

    /// States named `s0, s1, ...`.
    pub fn unlabeled(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| format!("s{i}")).collect();
        Self::new(labels, probs)
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::new(labels, vec![1.0 / n as f64; n])
    }

    /// Point mass on state `at`.
    pub fn dirac(labels: Vec<String>, at: usize) -> Result<Self> {
        let mut probs = vec![0.0; labels.len()];
        *probs
            .get_mut(at)
            .ok_or_else(|| Error::InvalidInput(format!("dirac index {at} out of range")))? = 1.0;
        Self::new(labels, probs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `other`'s probabilities listed in `self`'s label order.
    fn aligned(&self, other: &DiscreteDistribution) -> Result<Vec<f64>> {
        if self.labels == other.labels {
            return Ok(other.probs.clone());
        }
        if self.len() != other.len() {
            return Err(Error::LabelMismatch(format!(
                "{} states vs {} states",
                self.len(),
                other.len()
            )));
        }
        let index: HashMap<&str, usize> = other
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        self.labels
            .iter()
            .map(|l| {
                index
                    .get(l.as_str())
                    .map(|&j| other.probs[j])
                    .ok_or_else(|| Error::LabelMismatch(format!("state `{l}` missing")))
            })
            .collect()
    }
}

/// Relative entropy `D(q || p) = sum q ln(q / p)` with `0 ln 0 = 0`.
///
/// Returns `f64::INFINITY` when `q` puts mass where `p` has none; that is a
/// sentinel, not an error, so budgets can be compared against it.
pub fn relative_entropy(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    let p_aligned = q.aligned(p)?;
    let mut total = 0.0;
    for (&qi, &pi) in q.probs.iter().zip(&p_aligned) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += qi * (qi / pi).ln();
    }
    // rounding can leave tiny negatives for q == p
    Ok(total.max(0.0))
}

/// Transport cost matrix `c(i, j) = d(i, j)^power` for a metric `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: DMatrix<f64>,
    power: u32,
}

impl CostMatrix {
    /// Validates that `entries^(1/power)` is a metric.
    pub fn new(entries: DMatrix<f64>, power: u32) -> Result<Self> {
        if power < 1 {
            return Err(Error::InvalidParameter {
                name: "power",
                value: power as f64,
                reason: "cost power must be at least 1",
            });
        }
        let n = entries.nrows();
        if entries.ncols() != n || n == 0 {
            return Err(Error::shape(
                "a nonempty square cost matrix",
                format!("{}x{}", entries.nrows(), entries.ncols()),
            ));
        }
        let scale = entries.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let tol = 1e-12 * scale;
        for i in 0..n {
            if entries[(i, i)].abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "cost diagonal entry ({i},{i}) is {}",
                    entries[(i, i)]
                )));
            }
            for j in 0..n {
                let c = entries[(i, j)];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidInput(format!("cost entry ({i},{j}) is {c}")));
                }
                if (c - entries[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "cost matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let d = entries.map(|c| c.powf(1.0 / power as f64));
        let dtol = 1e-9 * d.iter().fold(0.0_f64, |m, v| m.max(*v)).max(1.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[(i, j)] > d[(i, k)] + d[(k, j)] + dtol {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality fails for d({i},{j}) via {k}"
                        )));
                    }
                }
            }
        }
        Ok(Self { entries, power })
    }

    /// Raises a metric to `power`.
    pub fn from_metric(metric: DMatrix<f64>, power: u32) -> Result<Self> {
        let entries = metric.map(|d| d.powi(power as i32));
        Self::new(entries, power)
    }

    /// States placed on a line at `positions`; `d(i, j) = |x_i - x_j|`.
    /// For rating ladders the positions are rating-step indices.
    pub fn ladder(positions: &[f64], power: u32) -> Result<Self> {
        let n = positions.len();
        let metric = DMatrix::from_fn(n, n, |i, j| (positions[i] - positions[j]).abs());
        Self::from_metric(metric, power)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// Joint distribution over (source, target) state pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    gamma: DMatrix<f64>,
}

impl TransportPlan {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = gamma.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "plan entry {v} is negative or non-finite"
            )));
        }
        Ok(Self { gamma })
    }

    /// All mass stays put.
    pub fn identity(p: &DiscreteDistribution) -> Self {
        Self {
            gamma: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(p.probs())),
        }
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.row_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.gamma.column_iter().map(|c| c.sum()).collect()
    }

    /// Checks the source marginal against `p` within `tol`.
    pub fn check_source(&self, p: &DiscreteDistribution, tol: f64) -> Result<()> {
        if self.gamma.nrows() != p.len() {
            return Err(Error::shape(
                format!("{} plan rows", p.len()),
                self.gamma.nrows(),
            ));
        }
        for (i, (r, pi)) in self.row_sums().iter().zip(p.probs()).enumerate() {
            if (r - pi).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "plan row {i} sums to {r}, source probability is {pi}"
                )));
            }
        }
        Ok(())
    }
}

/// `sum_ij gamma_ij c_ij`.
pub fn plan_cost(plan: &TransportPlan, cost: &CostMatrix) -> Result<f64> {
    let g = &plan.gamma;
    if g.nrows() != cost.len() || g.ncols() != cost.len() {
        return Err(Error::shape(
            format!("{0}x{0} plan", cost.len()),
            format!("{}x{}", g.nrows(), g.ncols()),
        ));
    }
    Ok(g.iter().zip(cost.entries.iter()).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone)]
pub struct WassersteinSolution {
    /// `W_n = (min cost)^(1/n)`
    pub distance: f64,
    /// Minimal transport cost.
    pub cost: f64,
    /// Optimal plan, rows in the first argument's label order.
    pub plan: TransportPlan,
}

/// Exact Wasserstein distance between two distributions on the same states.
pub fn wasserstein_distance(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cost: &CostMatrix,
) -> Result<WassersteinSolution> {
    let q_aligned = p.aligned(q)?;
    if cost.len() != p.len() {
        return Err(Error::shape(format!("{} cost rows", p.len()), cost.len()));
    }
    let gamma = transportation_simplex(p.probs(), &q_aligned, &cost.entries)?;
    let plan = TransportPlan { gamma };
    let total = plan_cost(&plan, cost)?.max(0.0);
    Ok(WassersteinSolution {
        distance: total.powf(1.0 / cost.power as f64),
        cost: total,
        plan,
    })
}

/// Transportation simplex (MODI) with a spanning-tree basis of `m + n - 1`
/// cells. Switches to Bland's rule after a run of degenerate pivots.
fn transportation_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (m, n) = (supply.len(), demand.len());
    let mut x = DMatrix::<f64>::zeros(m, n);
    let mut basic = vec![vec![false; n]; m];

    // north-west corner start
    let (mut a, mut b) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let t = a[i].min(b[j]).max(0.0);
        x[(i, j)] = t;
        basic[i][j] = true;
        a[i] -= t;
        b[j] -= t;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if (a[i] <= b[j] || j == n - 1) && i < m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    // the last cell absorbs rounding between the two marginals
    x[(m - 1, n - 1)] = (x[(m - 1, n - 1)] + a[m - 1].max(b[n - 1])).max(0.0);

    let scale = cost.iter().fold(0.0_f64, |s, c| s.max(c.abs())).max(1e-300);
    let eps = 1e-12 * scale;
    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;

    for _ in 0..max_iter {
        let (u, v) = potentials(&basic, cost, m, n);
        let bland = degenerate_run > 2 * (m + n);
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -eps;
        'scan: for r in 0..m {
            for c in 0..n {
                if basic[r][c] {
                    continue;
                }
                let red = cost[(r, c)] - u[r] - v[c];
                if red < best {
                    entering = Some((r, c));
                    if bland {
                        break 'scan;
                    }
                    best = red;
                }
            }
        }
        let Some((er, ec)) = entering else {
            return Ok(x);
        };

        let path = tree_path(&basic, m, n, er, ec);
        // path holds basic cells from row `er` to column `ec`; signs alternate
        // starting with the cell touching column `ec`, which loses mass
        let mut theta = f64::INFINITY;
        let mut leave = None;
        for (k, &(r, c)) in path.iter().rev().enumerate() {
            if k % 2 == 0 && x[(r, c)] < theta {
                theta = x[(r, c)];
                leave = Some((r, c));
            }
        }
        let (lr, lc) = leave.expect("cycle always has a donor cell");
        for (k, &(r, c)) in path.iter().rev().enumerate() {
            if k % 2 == 0 {
                x[(r, c)] = (x[(r, c)] - theta).max(0.0);
            } else {
                x[(r, c)] += theta;
            }
        }
        x[(er, ec)] = theta;
        x[(lr, lc)] = 0.0;
        basic[er][ec] = true;
        basic[lr][lc] = false;
        if theta <= 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }
    Err(Error::NonIntegrable(
        "transportation simplex did not terminate".into(),
    ))
}

fn potentials(
    basic: &[Vec<bool>],
    cost: &DMatrix<f64>,
    m: usize,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    u[0] = 0.0;
    // nodes 0..m are rows, m..m+n are columns
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        if node < m {
            let r = node;
            for c in 0..n {
                if basic[r][c] && v[c].is_nan() {
                    v[c] = cost[(r, c)] - u[r];
                    stack.push(m + c);
                }
            }
        } else {
            let c = node - m;
            for r in 0..m {
                if basic[r][c] && u[r].is_nan() {
                    u[r] = cost[(r, c)] - v[c];
                    stack.push(r);
                }
            }
        }
    }
    (u, v)
}

/// Basic cells on the tree path from row `from_row` to column `to_col`.
fn tree_path(
    basic: &[Vec<bool>],
    m: usize,
    n: usize,
    from_row: usize,
    to_col: usize,
) -> Vec<(usize, usize)> {
    let mut parent = vec![usize::MAX; m + n];
    parent[from_row] = from_row;
    let mut queue = std::collections::VecDeque::from([from_row]);
    let target = m + to_col;
    while let Some(node) = queue.pop_front() {
        if node == target {
            break;
        }
        if node < m {
            for c in 0..n {
                if basic[node][c] && parent[m + c] == usize::MAX {
                    parent[m + c] = node;
                    queue.push_back(m + c);
                }
            }
        } else {
            let c = node - m;
            for r in 0..m {
                if basic[r][c] && parent[r] == usize::MAX {
                    parent[r] = node;
                    queue.push_back(r);
                }
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = target;
    while node != from_row {
        let prev = parent[node];
        let cell = if node < m {
            (node, prev - m)
        } else {
            (prev, node - m)
        };
        cells.push(cell);
        node = prev;
    }
    cells.reverse();
    cells
}

/// Entropic worst-case measure on a finite state space:
///
/// `q*[j] = sum_i p[i] prior[j] exp(V[j]/alpha - c[i][j]/(alpha beta)) / Z_i`
///
/// with `Z_i` the row normalizer. The support of `q*` is the support of the
/// prior, whatever the support of `p`.
pub fn discrete_worst_case(
    p: &DiscreteDistribution,
    loss: &[f64],
    cost: &CostMatrix,
    params: &RobustnessParams,
    prior: &DiscreteDistribution,
) -> Result<DiscreteDistribution> {
    params.require_entropic()?;
    let n = p.len();
    if loss.len() != n {
        return Err(Error::shape(format!("{n} loss values"), loss.len()));
    }
    if cost.len() != n {
        return Err(Error::shape(format!("{n} cost rows"), cost.len()));
    }
    if let Some(v) = loss.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("loss value {v} is not finite")));
    }
    let prior_probs = p.aligned(prior)?;
    if let Some(i) = prior_probs.iter().position(|&w| w <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "prior must be strictly positive; state {} has {}",
            p.labels[i], prior_probs[i]
        )));
    }
    let kernel = EntropicKernel {
        log_prior: prior_probs.iter().map(|w| w.ln()).collect(),
        loss_over_alpha: loss.iter().map(|v| v / params.alpha).collect(),
        inv_alpha_beta: 1.0 / (params.alpha * params.beta),
    };
    let q = kernel.push_forward(p.probs(), |i, out| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = cost.get(i, j);
        }
    })?;
    DiscreteDistribution::from_weights(p.labels.clone(), q)
}

/// Row-normalized Gibbs kernel `prior[j] exp(V[j]/alpha - c(i,j)/(alpha beta))`
/// over a finite target set, shared by the discrete and path-space solvers.
pub(crate) struct EntropicKernel {
    pub log_prior: Vec<f64>,
    pub loss_over_alpha: Vec<f64>,
    pub inv_alpha_beta: f64,
}

impl EntropicKernel {
    /// Transition row for a source state given its cost row.
    pub fn row(&self, costs: &[f64]) -> Result<Vec<f64>> {
        let logits: Vec<f64> = costs
            .iter()
            .zip(&self.log_prior)
            .zip(&self.loss_over_alpha)
            .map(|((c, lp), v)| lp + v - c * self.inv_alpha_beta)
            .collect();
        let shift = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::NonIntegrable(format!(
                "kernel row maximum is {shift}"
            )));
        }
        let mut row: Vec<f64> = logits.iter().map(|l| (l - shift).exp()).collect();
        let z: f64 = row.iter().sum();
        for r in &mut row {
            *r /= z;
        }
        Ok(row)
    }

    /// `sum_i source[i] * row_i`. Rows are built in parallel and summed in
    /// index order, so the result does not depend on the worker count.
    pub fn push_forward<F>(&self, source: &[f64], cost_row: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let n_target = self.log_prior.len();
        let active: Vec<usize> = (0..source.len()).filter(|&i| source[i] > 0.0).collect();
        let rows: Vec<Vec<f64>> = active
            .par_iter()
            .map(|&i| {
                let mut costs = vec![0.0; n_target];
                cost_row(i, &mut costs);
                self.row(&costs)
            })
            .collect::<Result<_>>()?;
        let mut q = vec![0.0; n_target];
        for (&i, row) in active.iter().zip(&rows) {
            let w = source[i];
            for (qj, r) in q.iter_mut().zip(row) {
                *qj += w * r;
            }
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// A+, A-, BBB+ on the rating ladder A+, A, A-, BBB+, BBB.
    fn rating_example() -> (DiscreteDistribution, DiscreteDistribution, CostMatrix) {
        let l = labels(&["A+", "A-", "BBB+"]);
        let p = DiscreteDistribution::new(l.clone(), vec![0.25, 0.5, 0.25]).unwrap();
        let q = DiscreteDistribution::new(l, vec![0.2, 0.5, 0.3]).unwrap();
        let cost = CostMatrix::ladder(&[0.0, 2.0, 3.0], 1).unwrap();
        (p, q, cost)
    }

    #[test]
    fn relative_entropy_of_shifted_rating() {
        let (p, q, _) = rating_example();
        let re = relative_entropy(&q, &p).unwrap();
        // mpmath, 50 digits
        assert!((re - 0.010_067_756_775_344_437).abs() < 1e-15);
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn relative_entropy_is_infinite_off_support() {
        let l = labels(&["A+", "A-", "BBB+", "BBB"]);
        let p = DiscreteDistribution::new(l.clone(), vec![0.25, 0.5, 0.25, 0.0]).unwrap();
        let q = DiscreteDistribution::new(l, vec![0.2, 0.5, 0.25, 0.05]).unwrap();
        assert_eq!(relative_entropy(&q, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn relative_entropy_rejects_mismatched_labels() {
        let p = DiscreteDistribution::new(labels(&["a", "b"]), vec![0.5, 0.5]).unwrap();
        let q = DiscreteDistribution::new(labels(&["a", "c"]), vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            relative_entropy(&q, &p),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn relative_entropy_aligns_permuted_labels() {
        let p = DiscreteDistribution::new(labels(&["a", "b"]), vec![0.3, 0.7]).unwrap();
        let q = DiscreteDistribution::new(labels(&["b", "a"]), vec![0.7, 0.3]).unwrap();
        assert_eq!(relative_entropy(&q, &p).unwrap(), 0.0);
    }

    #[test]
    fn plan_costs_of_the_two_perturbations() {
        // A+, A, A-, BBB+, BBB at rating steps 0..4
        let l = labels(&["A+", "A", "A-", "BBB+", "BBB"]);
        let p = DiscreteDistribution::new(l, vec![0.25, 0.0, 0.5, 0.25, 0.0]).unwrap();
        let cost = CostMatrix::ladder(&[0.0, 1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let base = TransportPlan::identity(&p).gamma().clone();

        let mut to_bbb_plus = base.clone();
        to_bbb_plus[(0, 0)] -= 0.05;
        to_bbb_plus[(0, 3)] += 0.05;
        let c1 = plan_cost(&TransportPlan::new(to_bbb_plus).unwrap(), &cost).unwrap();
        assert!((c1 - 0.15).abs() < 1e-15);

        let mut to_bbb = base;
        to_bbb[(0, 0)] -= 0.05;
        to_bbb[(0, 4)] += 0.05;
        let c2 = plan_cost(&TransportPlan::new(to_bbb).unwrap(), &cost).unwrap();
        assert!((c2 - 0.20).abs() < 1e-15);

        assert_eq!(plan_cost(&TransportPlan::identity(&p), &cost).unwrap(), 0.0);
    }

    #[test]
    fn cost_matrix_validation() {
        let bad_diag = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(CostMatrix::new(bad_diag, 1).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(CostMatrix::new(asym, 1).is_err());
        // d(0,2) = 5 > d(0,1) + d(1,2) = 2
        let tri = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]);
        assert!(CostMatrix::new(tri.clone(), 1).is_err());
        // squared distances on a line pass because the check runs on the root
        assert!(CostMatrix::ladder(&[0.0, 1.0, 2.0], 2).is_ok());
        assert!(CostMatrix::new(tri, 0).is_err());
    }

    #[test]
    fn wasserstein_of_point_masses_is_their_distance() {
        let l = labels(&["A", "B"]);
        let p = DiscreteDistribution::dirac(l.clone(), 0).unwrap();
        let q = DiscreteDistribution::dirac(l, 1).unwrap();
        let cost = CostMatrix::ladder(&[0.0, 3.0], 1).unwrap();
        let w = wasserstein_distance(&p, &q, &cost).unwrap();
        assert!((w.distance - 3.0).abs() < 1e-15);
        let w0 = wasserstein_distance(&p, &p, &cost).unwrap();
        assert_eq!(w0.distance, 0.0);
    }

    #[test]
    fn wasserstein_takes_root_of_power_cost() {
        let l = labels(&["A", "B"]);
        let p = DiscreteDistribution::dirac(l.clone(), 0).unwrap();
        let q = DiscreteDistribution::dirac(l, 1).unwrap();
        let cost = CostMatrix::ladder(&[0.0, 3.0], 2).unwrap();
        let w = wasserstein_distance(&p, &q, &cost).unwrap();
        assert!((w.cost - 9.0).abs() < 1e-12);
        assert!((w.distance - 3.0).abs() < 1e-12);
    }

    #[test]
    fn worst_case_matches_high_precision_summation() {
        let (p, _, cost) = rating_example();
        let prior = DiscreteDistribution::uniform(p.labels().to_vec()).unwrap();
        let params = RobustnessParams::wasserstein(1.0, 1.0).unwrap();
        let q = discrete_worst_case(&p, &[0.0, 0.0, 1.0], &cost, &params, &prior).unwrap();
        // direct summation in mpmath at 50 digits
        let expected = [
            0.232_405_039_701_035_13,
            0.290_109_617_103_090_37,
            0.477_485_343_195_874_5,
        ];
        for (a, b) in q.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn worst_case_collapses_to_reference_for_tiny_beta() {
        let (p, _, cost) = rating_example();
        let prior = DiscreteDistribution::uniform(p.labels().to_vec()).unwrap();
        let params = RobustnessParams::wasserstein(1.0, 1e-8).unwrap();
        let q = discrete_worst_case(&p, &[0.0, 0.0, 1.0], &cost, &params, &prior).unwrap();
        for (a, b) in q.probs().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_case_spreads_a_point_mass_over_the_prior_support() {
        let l = labels(&["A+", "A", "A-", "BBB+", "BBB"]);
        let p = DiscreteDistribution::dirac(l.clone(), 0).unwrap();
        let prior = DiscreteDistribution::uniform(l).unwrap();
        let cost = CostMatrix::ladder(&[0.0, 1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let params = RobustnessParams::wasserstein(0.5, 2.0).unwrap();
        let q =
            discrete_worst_case(&p, &[0.0, 0.1, 0.2, 0.5, 1.0], &cost, &params, &prior).unwrap();
        assert!(q.probs().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn worst_case_rejects_bad_parameters() {
        let (p, _, cost) = rating_example();
        let prior = DiscreteDistribution::uniform(p.labels().to_vec()).unwrap();
        let zero_beta = RobustnessParams::wasserstein(1.0, 0.0).unwrap();
        assert!(discrete_worst_case(&p, &[0.0; 3], &cost, &zero_beta, &prior).is_err());
        let zero_alpha = RobustnessParams::wasserstein(0.0, 1.0).unwrap();
        assert!(discrete_worst_case(&p, &[0.0; 3], &cost, &zero_alpha, &prior).is_err());
        let holey = DiscreteDistribution::new(p.labels().to_vec(), vec![0.5, 0.5, 0.0]).unwrap();
        let ok = RobustnessParams::wasserstein(1.0, 1.0).unwrap();
        assert!(discrete_worst_case(&p, &[0.0; 3], &cost, &ok, &holey).is_err());
    }
}

//! The five computing subcommands. Each returns the body of its output file.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use wrisk_core::discrete_transport::{
    discrete_worst_case, relative_entropy, wasserstein_distance, CostMatrix, DiscreteDistribution,
};
use wrisk_core::gaussian_closed_form::{
    dirac_worst_case, dirac_worst_case_moments, max_safe_beta, mvn_worst_case_kl, mvn_worst_case_w,
    worst_case_linear_map, GaussianSpec, QuadraticFormSpec,
};
use wrisk_core::hedging_sim::{
    kl_hedging_risk, nominal_hedging_risk, volatility_sampling_risk, worst_case_hedging_risk,
    HedgeConfig, HedgeLoss, MarketConfig, PoolMode, VolDistribution, WorstCaseConfig,
};
use wrisk_core::io;
use wrisk_core::robust_portfolio::{cml_curve, FrontierMethod, PortfolioProblem};
use wrisk_core::worstcase_density::{expected_loss, kl_worst_case, worst_case_density};
use wrisk_core::{CostSpec, GridDensity, LossSpec, RobustnessParams, UniformGrid};

use crate::args::{
    DensityArgs, DiscreteArgs, FrontierArgs, GaussianArgs, GaussianMethod, HedgeArgs, HedgeMethod,
    LossArg, PoolArg,
};
use crate::error::{read_text, CliError, Result};
use crate::output::{num, Table};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Comma-separated numbers, exactly `n` of them.
fn numbers(text: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("{what}: `{text}` is not a list of numbers")))?;
    if v.len() != n {
        return Err(usage(format!(
            "{what}: expected {n} numbers, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    Ok(io::parse_matrix(&read_text(path)?)?)
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    Ok(io::parse_vector(&read_text(path)?)?)
}

pub fn discrete(a: &DiscreteArgs) -> Result<String> {
    let p = io::parse_distribution(&read_text(&a.p)?)?;
    let cost = CostMatrix::from_metric(read_matrix(&a.cost)?, a.power)?;
    let worst_case = match (a.alpha, a.beta, &a.loss) {
        (None, None, None) => None,
        (Some(alpha), Some(beta), Some(loss)) => Some((alpha, beta, loss)),
        _ => {
            return Err(usage(
                "the worst case needs --alpha, --beta and --loss together",
            ))
        }
    };
    if a.q.is_none() && worst_case.is_none() {
        return Err(usage(
            "nothing to compute: give --q, or --alpha, --beta and --loss",
        ));
    }

    let mut t = Table::new(&["quantity", "value"]);
    let mut plan = None;
    if let Some(q_path) = &a.q {
        let q = io::parse_distribution(&read_text(q_path)?)?;
        let w = wasserstein_distance(&p, &q, &cost)?;
        t.row(["relative_entropy".into(), num(relative_entropy(&q, &p)?)]);
        t.row(["wasserstein".into(), num(w.distance)]);
        t.row(["transport_cost".into(), num(w.cost)]);
        plan = Some(w.plan);
    }
    let mut q_star = None;
    if let Some((alpha, beta, loss_path)) = worst_case {
        let (labels, values) = io::parse_labeled_row(&read_text(loss_path)?)?;
        // reuse the label alignment of distributions; the values need not sum to one
        let loss: Vec<f64> = p
            .labels()
            .iter()
            .map(|l| {
                labels
                    .iter()
                    .position(|x| x == l)
                    .map(|j| values[j])
                    .ok_or_else(|| {
                        wrisk_core::Error::LabelMismatch(format!("no loss value for state `{l}`"))
                    })
            })
            .collect::<std::result::Result<_, _>>()?;
        let prior = match &a.prior {
            Some(path) => io::parse_distribution(&read_text(path)?)?,
            None => DiscreteDistribution::uniform(p.labels().to_vec())?,
        };
        let params = RobustnessParams::wasserstein(alpha, beta)?;
        let q = discrete_worst_case(&p, &loss, &cost, &params, &prior)?;
        let dot = |d: &DiscreteDistribution| -> f64 {
            d.probs().iter().zip(&loss).map(|(a, b)| a * b).sum()
        };
        t.row(["expected_loss_reference".into(), num(dot(&p))]);
        t.row(["expected_loss_worst_case".into(), num(dot(&q))]);
        t.row([
            "worst_case_transport_cost".into(),
            num(wasserstein_distance(&p, &q, &cost)?.cost),
        ]);
        q_star = Some(q);
    }
    let labels = p.labels();
    if let Some(plan) = plan {
        t.section("optimal transport plan", &["from", "to", "mass"]);
        let g = plan.gamma();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                if g[(i, j)] != 0.0 {
                    t.row([labels[i].clone(), labels[j].clone(), num(g[(i, j)])]);
                }
            }
        }
    }
    if let Some(q) = q_star {
        t.section("worst case", &["label", "p", "q_star"]);
        for (i, l) in labels.iter().enumerate() {
            t.row([l.clone(), num(p.probs()[i]), num(q.probs()[i])]);
        }
    }
    Ok(t.into_string())
}

enum Reference {
    Normal { mean: f64, sd: f64 },
    Dirac(f64),
    Table(Vec<f64>, Vec<f64>),
}

fn parse_reference(s: &str) -> Result<Reference> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "normal" => {
            let v = numbers(rest, 2, "--ref normal:MEAN,STD")?;
            Ok(Reference::Normal {
                mean: v[0],
                sd: v[1],
            })
        }
        "dirac" => Ok(Reference::Dirac(numbers(rest, 1, "--ref dirac:POINT")?[0])),
        "table" => {
            let (xs, ys) = io::parse_two_columns(&read_text(Path::new(rest))?)?;
            Ok(Reference::Table(xs, ys))
        }
        _ => Err(usage(format!(
            "unknown reference `{s}`; use normal:, dirac: or table:"
        ))),
    }
}

fn parse_loss(s: &str) -> Result<LossSpec> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "linear" => Ok(LossSpec::Linear),
        "quadratic" => {
            let center = if rest.is_empty() {
                0.0
            } else {
                numbers(rest, 1, "--loss quadratic:CENTER")?[0]
            };
            Ok(LossSpec::Quadratic { center })
        }
        "table" => {
            let (xs, ys) = io::parse_two_columns(&read_text(Path::new(rest))?)?;
            Ok(LossSpec::tabulated(xs, ys)?)
        }
        _ => Err(usage(format!(
            "unknown loss `{s}`; use linear, quadratic:C or table:FILE"
        ))),
    }
}

/// Density values interpolated from a two-column table onto `grid`.
fn tabulated_density(grid: UniformGrid, xs: Vec<f64>, ys: Vec<f64>) -> Result<GridDensity> {
    let table = LossSpec::tabulated(xs, ys)?;
    Ok(GridDensity::from_values(
        grid,
        table.eval_all(&grid.points())?,
    )?)
}

enum DensityMethod {
    Kl(f64),
    W(RobustnessParams),
}

pub fn density(a: &DensityArgs) -> Result<String> {
    let method = match (a.alpha, a.beta, a.theta) {
        (None, None, Some(theta)) => DensityMethod::Kl(theta),
        (Some(alpha), Some(beta), None) => {
            DensityMethod::W(RobustnessParams::wasserstein(alpha, beta)?)
        }
        _ => {
            return Err(usage(
                "give --theta alone for the KL tilt, or --alpha and --beta for the transport worst case",
            ))
        }
    };
    let reference = parse_reference(&a.reference)?;
    let loss = parse_loss(&a.loss)?;
    let cost = CostSpec::power(a.cost_power)?;
    let uniform_prior = a.prior == "uniform";

    let grid = match &a.grid {
        Some(g) => {
            let v = numbers(g, 3, "--grid LO,HI,N")?;
            if v[2] < 2.0 || v[2].fract() != 0.0 {
                return Err(usage("--grid: N must be an integer of at least 2"));
            }
            UniformGrid::new(v[0], v[1], v[2] as usize)?
        }
        None => match (&reference, &method) {
            (Reference::Normal { mean, sd }, _) => {
                UniformGrid::new(mean - 10.0 * sd, mean + 10.0 * sd, 2001)?
            }
            (Reference::Table(xs, _), _) => UniformGrid::new(xs[0], xs[xs.len() - 1], 2001)?,
            (Reference::Dirac(x), DensityMethod::W(params)) => {
                match dirac_worst_case_moments(*x, &loss, params) {
                    Ok((m, v)) => {
                        let s = v.sqrt();
                        UniformGrid::new(m.min(*x) - 10.0 * s, m.max(*x) + 10.0 * s, 2001)?
                    }
                    Err(_) => UniformGrid::new(x - 1.0, x + 1.0, 2001)?,
                }
            }
            (Reference::Dirac(x), DensityMethod::Kl(_)) => {
                UniformGrid::new(x - 1.0, x + 1.0, 2001)?
            }
        },
    };

    let p = match &reference {
        Reference::Normal { mean, sd } => GridDensity::normal(grid, *mean, *sd)?,
        Reference::Dirac(x) => GridDensity::dirac_proxy(grid, *x)?,
        Reference::Table(xs, ys) => tabulated_density(grid, xs.clone(), ys.clone())?,
    };
    let prior = if uniform_prior {
        GridDensity::uniform(grid)
    } else {
        match a.prior.split_once(':') {
            Some(("table", path)) => {
                let (xs, ys) = io::parse_two_columns(&read_text(Path::new(path))?)?;
                tabulated_density(grid, xs, ys)?
            }
            Some(("normal", rest)) => {
                let v = numbers(rest, 2, "--prior normal:MEAN,STD")?;
                GridDensity::normal(grid, v[0], v[1])?
            }
            _ => return Err(usage(format!("unknown prior `{}`", a.prior))),
        }
    };

    let q = match (&method, &reference) {
        (DensityMethod::Kl(theta), _) => kl_worst_case(&p, &loss, *theta)?,
        // the closed form assumes quadratic cost and a flat prior
        (DensityMethod::W(params), Reference::Dirac(x)) if a.cost_power == 2 && uniform_prior => {
            dirac_worst_case(*x, &loss, params, grid)?
        }
        (DensityMethod::W(params), _) => worst_case_density(&p, &loss, cost, params, &prior)?,
    };

    let mut t = String::new();
    t.push_str(&format!(
        "# mean={} variance={} expected_loss={}\n",
        num(q.mean()),
        num(q.variance()),
        num(expected_loss(&q, &loss)?)
    ));
    let mut table = Table::new(&["x", "q_star"]);
    for (i, v) in q.values().iter().enumerate() {
        table.row([num(grid.node(i)), num(*v)]);
    }
    t.push_str(&table.into_string());
    Ok(t)
}

fn push_vector(t: &mut Table, block: &str, v: &DVector<f64>) {
    for (i, x) in v.iter().enumerate() {
        t.row([block.to_string(), i.to_string(), String::new(), num(*x)]);
    }
}

fn push_matrix(t: &mut Table, block: &str, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.row([
                block.to_string(),
                i.to_string(),
                j.to_string(),
                num(m[(i, j)]),
            ]);
        }
    }
}

pub fn gaussian(a: &GaussianArgs) -> Result<String> {
    let model = GaussianSpec::new(read_vector(&a.mu)?, read_matrix(&a.sigma)?)?;
    let a_mat = read_matrix(&a.a)?;
    let mut t = Table::new(&["block", "i", "j", "value"]);
    let worst = match a.method {
        GaussianMethod::Kl => mvn_worst_case_kl(&model, &a_mat, a.theta)?,
        GaussianMethod::W => {
            let forms = match &a.b {
                Some(b) => QuadraticFormSpec::new(a_mat, read_matrix(b)?)?,
                None => QuadraticFormSpec::with_identity_metric(a_mat)?,
            };
            let params = RobustnessParams::wasserstein(a.alpha, a.beta)?;
            let w = mvn_worst_case_w(&model, &forms, &params)?;
            t.row(["max_safe_beta", "", "", &num(max_safe_beta(&forms)?)]);
            push_matrix(
                &mut t,
                "linear_map",
                &worst_case_linear_map(&forms, a.beta)?,
            );
            w
        }
    };
    push_vector(&mut t, "mu", &worst.mu);
    push_matrix(&mut t, "sigma", &worst.sigma);
    push_vector(
        &mut t,
        "eigenvalue",
        &DVector::from_vec(worst.eigenvalues()),
    );
    Ok(t.into_string())
}

/// `LO:HI:STEP`, inclusive of `HI` up to rounding; node `k` is `LO + k STEP`.
pub fn lambda_grid(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(':')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--lambda: `{s}` is not LO:HI:STEP")))?;
    let [lo, hi, step] = v[..] else {
        return Err(usage(format!("--lambda: `{s}` is not LO:HI:STEP")));
    };
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(usage(format!(
            "--lambda: `{s}` needs LO <= HI and STEP > 0"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

pub fn frontier(a: &FrontierArgs) -> Result<String> {
    let model = GaussianSpec::new(read_vector(&a.mu)?, read_matrix(&a.sigma)?)?;
    let method: FrontierMethod = a.method.parse()?;
    let lambdas = lambda_grid(&a.lambda)?;
    let problem = match &a.b {
        Some(b) => PortfolioProblem::new(model, read_matrix(b)?, lambdas)?,
        None => PortfolioProblem::with_identity_metric(model, lambdas)?,
    };
    let multiplier = match method {
        FrontierMethod::Nominal => 0.0,
        FrontierMethod::Kl => a.theta,
        FrontierMethod::Wasserstein => a.beta,
    };
    let curve = cml_curve(&problem, method, multiplier)?;
    let n = problem.model.dim();
    let mut cols = vec![
        "lambda".to_string(),
        "std_dev".into(),
        "excess_return".into(),
        "sharpe".into(),
    ];
    cols.extend((1..=n).map(|i| format!("w_{i}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&cols);
    for pt in &curve {
        let mut row = vec![
            num(pt.lambda),
            num(pt.std_dev),
            num(pt.excess_return),
            num(pt.sharpe),
        ];
        row.extend(pt.weights.iter().map(|w| num(*w)));
        t.row(row);
    }
    Ok(t.into_string())
}

fn parse_vol(s: &str) -> Result<VolDistribution> {
    match s.split_once(':') {
        Some(("uniform", rest)) => {
            let v = numbers(rest, 2, "--vol uniform:LO,HI")?;
            Ok(VolDistribution::Uniform { lo: v[0], hi: v[1] })
        }
        Some(("lognormal", rest)) => {
            let v = numbers(rest, 2, "--vol lognormal:M,S")?;
            Ok(VolDistribution::LogNormal { m: v[0], s: v[1] })
        }
        _ => Err(usage(format!("unknown volatility distribution `{s}`"))),
    }
}

pub fn hedge_loss(l: LossArg) -> HedgeLoss {
    match l {
        LossArg::Abs => HedgeLoss::Absolute,
        LossArg::Rms => HedgeLoss::Squared,
    }
}

pub fn pool_mode(p: PoolArg) -> PoolMode {
    match p {
        PoolArg::Cumulative => PoolMode::Cumulative,
        PoolArg::PerRung => PoolMode::PerRung,
    }
}

pub fn hedge(a: &HedgeArgs) -> Result<String> {
    let market = MarketConfig::new(a.s0, a.mu, a.sigma, a.r)?;
    let option = a.option.parse()?;
    let loss = hedge_loss(a.loss);
    let vol = match a.method {
        HedgeMethod::Volsample => Some(parse_vol(&a.vol)?),
        _ => None,
    };
    if a.n_hedge.is_empty() {
        return Err(usage("--n-hedge needs at least one value"));
    }
    let mut t = Table::new(&["n_hedge", "method", "risk", "converged", "rungs_used"]);
    for &n_hedge in &a.n_hedge {
        let hedge = HedgeConfig::new(a.strike, a.maturity, n_hedge, option)?;
        let (name, risk, converged, rungs) = match a.method {
            HedgeMethod::Nominal => {
                let r = nominal_hedging_risk(&market, &hedge, a.n_paths, a.n_steps, a.seed, loss)?;
                ("nominal", r, "na".to_string(), "na".to_string())
            }
            HedgeMethod::Kl => {
                let r =
                    kl_hedging_risk(&market, &hedge, a.n_paths, a.n_steps, a.theta, a.seed, loss)?;
                ("kl", r, "na".into(), "na".into())
            }
            HedgeMethod::Volsample => {
                let dist = vol.expect("parsed above");
                let r = volatility_sampling_risk(
                    &market, &hedge, dist, a.n_paths, a.n_steps, a.seed, loss,
                )?;
                ("volsample", r, "na".into(), "na".into())
            }
            HedgeMethod::W => {
                let params = RobustnessParams::wasserstein(a.alpha, a.beta)?;
                let mut config = WorstCaseConfig::desk(a.sigma, params, a.seed);
                config.n_paths = a.n_paths;
                config.m_children = a.m_children;
                config.n_steps = a.n_steps;
                config.tol = a.tol;
                config.pool = pool_mode(a.pool);
                config.loss = loss;
                if let Some(ladder) = &a.ladder {
                    config.ladder = ladder.clone();
                }
                let res = worst_case_hedging_risk(&market, &hedge, &config)?;
                (
                    "w",
                    res.final_risk,
                    res.converged.to_string(),
                    res.rungs_used().to_string(),
                )
            }
        };
        t.row([
            n_hedge.to_string(),
            name.into(),
            num(risk),
            converged,
            rungs,
        ]);
    }
    Ok(t.into_string())
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::MarketConfig;
use crate::error::{Error, Result};

/// Random-stream domains, so that different uses of one seed never share draws.
pub(crate) const DOMAIN_GBM: u64 = 1;
pub(crate) const DOMAIN_PERTURB: u64 = 2;
pub(crate) const DOMAIN_VOL: u64 = 3;
pub(crate) const DOMAIN_RUNG: u64 = 4;

/// Independent stream for (`seed`, `domain`, `index`).
pub(crate) fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Reference,
    Perturbed {
        sigma_perturb: f64,
        parent_index: usize,
    },
}

/// Log-price paths on a common time grid, stored as increments.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    s0: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
    /// Path-major, `n_steps` increments per path.
    increments: Vec<f64>,
    provenance: Vec<Provenance>,
}

/// A borrowed view of one path.
#[derive(Debug, Clone, Copy)]
pub struct Path<'a> {
    pub s0: f64,
    pub dt: f64,
    pub increments: &'a [f64],
}

impl Path<'_> {
    /// Prices at every grid time, starting with `s0`.
    pub fn prices(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut l = self.s0.ln();
        out.push(self.s0);
        for inc in self.increments {
            l += inc;
            out.push(l.exp());
        }
        out
    }

    pub fn terminal(&self) -> f64 {
        (self.s0.ln() + self.increments.iter().sum::<f64>()).exp()
    }
}

impl PathEnsemble {
    /// Builds an ensemble from explicit increments (path-major).
    pub fn from_increments(
        s0: f64,
        dt: f64,
        n_steps: usize,
        increments: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        if n_steps == 0 || increments.is_empty() || !increments.len().is_multiple_of(n_steps) {
            return Err(Error::shape(
                format!("a positive multiple of {n_steps} increments"),
                increments.len(),
            ));
        }
        if !(s0 > 0.0 && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "s0 = {s0} and dt = {dt} must be positive"
            )));
        }
        if let Some(v) = increments.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite increment {v}")));
        }
        let n = increments.len() / n_steps;
        Ok(Self {
            s0,
            dt,
            n_steps,
            seed,
            increments,
            provenance: vec![Provenance::Reference; n],
        })
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn increments(&self, i: usize) -> &[f64] {
        &self.increments[i * self.n_steps..(i + 1) * self.n_steps]
    }

    pub fn path(&self, i: usize) -> Path<'_> {
        Path {
            s0: self.s0,
            dt: self.dt,
            increments: self.increments(i),
        }
    }

    /// Appends another ensemble on the same grid. Parent indices in `other`
    /// are kept as they are.
    pub fn extend(&mut self, other: &PathEnsemble) -> Result<()> {
        if other.n_steps != self.n_steps || other.dt != self.dt || other.s0 != self.s0 {
            return Err(Error::InvalidInput(
                "ensembles live on different time grids".into(),
            ));
        }
        self.increments.extend_from_slice(&other.increments);
        self.provenance.extend_from_slice(&other.provenance);
        Ok(())
    }

    /// The first `n` paths.
    pub fn head(&self, n: usize) -> PathEnsemble {
        let n = n.min(self.len());
        PathEnsemble {
            s0: self.s0,
            dt: self.dt,
            n_steps: self.n_steps,
            seed: self.seed,
            increments: self.increments[..n * self.n_steps].to_vec(),
            provenance: self.provenance[..n].to_vec(),
        }
    }

    /// Every path from index `start` on.
    pub fn tail(&self, start: usize) -> PathEnsemble {
        let start = start.min(self.len());
        PathEnsemble {
            s0: self.s0,
            dt: self.dt,
            n_steps: self.n_steps,
            seed: self.seed,
            increments: self.increments[start * self.n_steps..].to_vec(),
            provenance: self.provenance[start..].to_vec(),
        }
    }
}

/// GBM paths by the exact log scheme
/// `d ln S = (mu - sigma^2/2) dt + sigma sqrt(dt) Z`.
pub fn gbm_paths(
    market: &MarketConfig,
    maturity: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let sigmas = vec![market.sigma; n_paths];
    paths_with_vols(market, maturity, n_steps, &sigmas, seed)
}

/// GBM paths where path `i` has volatility `sigmas[i]`. Path `i` always
/// uses the same normal draws whatever its volatility.
pub(crate) fn paths_with_vols(
    market: &MarketConfig,
    maturity: f64,
    n_steps: usize,
    sigmas: &[f64],
    seed: u64,
) -> Result<PathEnsemble> {
    if n_steps < 1 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "at least one time step is required",
        });
    }
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: 0.0,
            reason: "at least one path is required",
        });
    }
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "maturity",
            value: maturity,
            reason: "must be positive",
        });
    }
    let dt = maturity / n_steps as f64;
    let sq = dt.sqrt();
    let increments: Vec<f64> = sigmas
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &sigma)| {
            let mut rng = stream(seed, DOMAIN_GBM, i as u64);
            let drift = (market.mu - 0.5 * sigma * sigma) * dt;
            (0..n_steps)
                .map(move |_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    drift + sigma * sq * z
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(PathEnsemble {
        s0: market.s0,
        dt,
        n_steps,
        seed,
        increments,
        provenance: vec![Provenance::Reference; sigmas.len()],
    })
}

/// Quadratic variation of the difference of two log-price paths,
/// `sum_i (dx_i - dy_i)^2`.
pub fn qv_distance(x: &Path<'_>, y: &Path<'_>) -> Result<f64> {
    if x.increments.len() != y.increments.len() || x.dt != y.dt {
        return Err(Error::InvalidInput(format!(
            "paths on different grids: {} steps of {} vs {} steps of {}",
            x.increments.len(),
            x.dt,
            y.increments.len(),
            y.dt
        )));
    }
    Ok(qv_raw(x.increments, y.increments))
}

#[inline]
pub(crate) fn qv_raw(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Parents followed by `m` children per parent, child increments being the
/// parent's plus independent `N(0, sigma_perturb^2 dt)` noise. Children are
/// ordered parent by parent; their provenance records the parent's index.
pub fn perturb_paths(
    ensemble: &PathEnsemble,
    sigma_perturb: f64,
    m: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if m < 1 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
            reason: "at least one child per path is required",
        });
    }
    if !(sigma_perturb >= 0.0 && sigma_perturb.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma_perturb",
            value: sigma_perturb,
            reason: "must be finite and nonnegative",
        });
    }
    let n = ensemble.len();
    let steps = ensemble.n_steps;
    let scale = sigma_perturb * ensemble.dt.sqrt();
    let children: Vec<f64> = (0..n * m)
        .into_par_iter()
        .flat_map_iter(|k| {
            let parent = k / m;
            let mut rng = stream(seed, DOMAIN_PERTURB, k as u64);
            ensemble
                .increments(parent)
                .iter()
                .map(|inc| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    inc + scale * z
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = ensemble.clone();
    out.increments.reserve(children.len());
    out.increments.extend(children);
    out.provenance
        .extend((0..n * m).map(|k| Provenance::Perturbed {
            sigma_perturb,
            parent_index: k / m,
        }));
    debug_assert_eq!(out.increments.len(), out.provenance.len() * steps);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn market(sigma: f64) -> MarketConfig {
        MarketConfig::new(100.0, 0.05, sigma, 0.0).unwrap()
    }

    #[test]
    fn zero_vol_paths_are_deterministic() {
        let e = gbm_paths(&market(0.0), 1.0, 10, 3, 7).unwrap();
        for i in 0..3 {
            assert!((e.path(i).terminal() - 100.0 * 0.05_f64.exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let a = gbm_paths(&market(0.2), 1.0, 16, 20, 42).unwrap();
        let b = gbm_paths(&market(0.2), 1.0, 16, 20, 42).unwrap();
        assert_eq!(a, b);
        let c = gbm_paths(&market(0.2), 1.0, 16, 20, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn qv_examples() {
        let x = [0.1, -0.2, 0.05];
        let shifted = Path {
            s0: 120.0,
            dt: 0.1,
            increments: &x,
        };
        let base = Path {
            s0: 100.0,
            dt: 0.1,
            increments: &x,
        };
        assert_eq!(qv_distance(&base, &base).unwrap(), 0.0);
        assert_eq!(qv_distance(&base, &shifted).unwrap(), 0.0);
        let y: Vec<f64> = x.iter().map(|v| v + 0.01).collect();
        let bumped = Path {
            s0: 100.0,
            dt: 0.1,
            increments: &y,
        };
        assert!((qv_distance(&base, &bumped).unwrap() - 3.0 * 1e-4).abs() < 1e-15);
        let short = Path {
            s0: 100.0,
            dt: 0.1,
            increments: &x[..2],
        };
        assert!(qv_distance(&base, &short).is_err());
    }

    #[test]
    fn perturbation_layout_and_zero_noise() {
        let e = gbm_paths(&market(0.2), 1.0, 8, 4, 1).unwrap();
        let p = perturb_paths(&e, 0.0, 10, 9).unwrap();
        assert_eq!(p.len(), 4 * 11);
        for k in 0..40 {
            match p.provenance()[4 + k] {
                Provenance::Perturbed { parent_index, .. } => {
                    assert_eq!(parent_index, k / 10);
                    assert_eq!(p.increments(4 + k), e.increments(parent_index));
                }
                Provenance::Reference => panic!("child marked as reference"),
            }
        }
        assert!(p.provenance()[..4]
            .iter()
            .all(|v| *v == Provenance::Reference));
    }
}

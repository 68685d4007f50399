//! Covariance matrix adaptation evolution strategy with the standard default
//! parameter set (population, log-rank weights, cumulative step-size
//! adaptation, rank-one plus rank-μ covariance updates).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::config::TOLERANCES;
use crate::error::{Error, Result};
use crate::{par, split_rng, Rng};

/// Anything the strategy can rank. Lower is better; scores must be finite.
pub trait Fitness {
    fn score(&self) -> f64;
}

impl Fitness for f64 {
    fn score(&self) -> f64 {
        *self
    }
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub theta: Vec<f64>,
    pub value: T,
}

/// A generation's candidates, best first (ties keep sampling order).
#[derive(Debug, Clone, PartialEq)]
pub struct Generation<T> {
    pub index: usize,
    pub candidates: Vec<Candidate<T>>,
}

impl<T> Generation<T> {
    pub fn best(&self) -> &Candidate<T> {
        &self.candidates[0]
    }
}

/// Strategy parameters derived from dimension and population size.
#[derive(Debug, Clone, PartialEq)]
pub struct EsParams {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// `E‖N(0, I)‖`.
    pub chi_n: f64,
}

impl EsParams {
    /// Defaults for dimension `dim` with population `4 + ⌊3 ln dim⌋`.
    pub fn for_dimension(dim: usize) -> Self {
        Self::with_population(dim, default_population(dim))
    }

    pub fn with_population(dim: usize, lambda: usize) -> Self {
        let nf = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// `4 + ⌊3 ln dim⌋`.
pub fn default_population(dim: usize) -> usize {
    4 + (3.0 * (dim.max(1) as f64).ln()).floor() as usize
}

/// Full optimizer state.
#[derive(Debug, Clone)]
pub struct EsState {
    params: EsParams,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    path_sigma: DVector<f64>,
    path_c: DVector<f64>,
    generation: usize,
}

impl EsState {
    /// Fresh state at `mean` with step size `sigma` and identity covariance.
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let lambda = default_population(mean.len());
        Self::with_population(mean, sigma, lambda)
    }

    pub fn with_population(mean: Vec<f64>, sigma: f64, lambda: usize) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Precondition("empty parameter vector".into()));
        }
        if lambda < 2 {
            return Err(Error::Precondition(format!("population {lambda} below 2")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Precondition(format!("step size {sigma} not positive")));
        }
        let dim = mean.len();
        Ok(Self {
            params: EsParams::with_population(dim, lambda),
            mean: DVector::from_vec(mean),
            sigma,
            cov: DMatrix::identity(dim, dim),
            basis: DMatrix::identity(dim, dim),
            scales: DVector::from_element(dim, 1.0),
            path_sigma: DVector::zeros(dim),
            path_c: DVector::zeros(dim),
            generation: 0,
        })
    }

    pub fn params(&self) -> &EsParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Sample, evaluate and update once.
    ///
    /// Normal draws and per-candidate generators are taken from `rng` in
    /// candidate order before evaluation, so results do not depend on how
    /// the evaluations are scheduled.
    pub fn step<T, F>(&mut self, loss: F, rng: &mut Rng) -> Generation<T>
    where
        T: Fitness + Send,
        F: Fn(&[f64], &mut Rng) -> T + Sync + Send,
    {
        let dim = self.dim();
        let lambda = self.params.lambda;
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        let mut steps = Vec::with_capacity(lambda);
        let mut jobs = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            let y = &bd * z;
            let x = &self.mean + self.sigma * &y;
            jobs.push((x.as_slice().to_vec(), split_rng(rng)));
            steps.push(y);
        }
        let values = par::map_owned(jobs, |(theta, mut local)| {
            let value = loss(&theta, &mut local);
            (theta, value)
        });
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| values[a].1.score().total_cmp(&values[b].1.score()).then(a.cmp(&b)));

        self.update(&order, &steps);

        let mut slots: Vec<Option<(Vec<f64>, T)>> = values.into_iter().map(Some).collect();
        let candidates = order
            .iter()
            .map(|&i| {
                let (theta, value) = slots[i].take().expect("each index once");
                Candidate { theta, value }
            })
            .collect();
        Generation {
            index: self.generation - 1,
            candidates,
        }
    }

    fn update(&mut self, order: &[usize], steps: &[DVector<f64>]) {
        let p = &self.params;
        let dim = self.dim();
        let y_w: DVector<f64> = order
            .iter()
            .zip(&p.weights)
            .map(|(&i, w)| *w * &steps[i])
            .fold(DVector::zeros(dim), |acc, v| acc + v);
        self.mean += self.sigma * &y_w;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_scales = self.scales.map(|s| 1.0 / s);
        let whitened = &self.basis * DMatrix::from_diagonal(&inv_scales) * self.basis.transpose() * &y_w;
        self.path_sigma = (1.0 - p.c_sigma) * &self.path_sigma
            + (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt() * whitened;

        self.generation += 1;
        let ps_norm = self.path_sigma.norm();
        let decay = 1.0 - (1.0 - p.c_sigma).powi(2 * self.generation as i32);
        let h_sigma = ps_norm / decay.sqrt() < (1.4 + 2.0 / (dim as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.path_c = (1.0 - p.c_c) * &self.path_c
            + h * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt() * &y_w;

        let delta_h = (1.0 - h) * p.c_c * (2.0 - p.c_c);
        let rank_one = &self.path_c * self.path_c.transpose();
        let rank_mu = order
            .iter()
            .zip(&p.weights)
            .map(|(&i, w)| *w * &steps[i] * steps[i].transpose())
            .fold(DMatrix::zeros(dim, dim), |acc, m| acc + m);
        let weight_sum: f64 = p.weights.iter().sum();
        self.cov = (1.0 + p.c_1 * delta_h - p.c_1 - p.c_mu * weight_sum) * &self.cov
            + p.c_1 * rank_one
            + p.c_mu * rank_mu;

        self.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        self.refresh_eigen();
    }

    fn refresh_eigen(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let floor = TOLERANCES.eigen_floor;
        let mut values = eig.eigenvalues.clone();
        let mut repaired = false;
        for v in values.iter_mut() {
            if v.is_nan() || *v < floor {
                *v = floor;
                repaired = true;
            }
        }
        if repaired {
            log::warn!(
                "covariance repaired at generation {}: eigenvalues floored at {floor:e}",
                self.generation
            );
        }
        self.cov = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
        self.basis = eig.eigenvectors;
        self.scales = values.map(f64::sqrt);
    }
}

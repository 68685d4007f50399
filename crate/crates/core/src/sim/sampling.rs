use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::Rng;

/// Anything that can be measured in the computational basis.
pub trait ShotSource: Sync {
    fn num_qubits(&self) -> usize;

    /// Outcome histogram of `shots` independent measurements as
    /// `(basis index, count)` pairs with nonzero counts, ascending by index.
    fn counts(&self, shots: u64, rng: &mut Rng) -> Vec<(usize, u64)>;
}

/// Probability table over basis states with precomputed cumulative sums.
#[derive(Debug, Clone)]
pub struct BasisDistribution {
    n: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    suffix: Vec<f64>,
}

impl BasisDistribution {
    /// Normalizes `probs`, which must have length `2^n`, be non-negative and
    /// have a positive sum.
    pub fn new(n: usize, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n {
            return Err(Error::Precondition(format!(
                "distribution over {n} qubits needs {} entries, got {}",
                1usize << n,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Precondition("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateState(total));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let mut suffix = vec![0.0; probs.len()];
        let mut acc = 0.0;
        for i in (0..probs.len()).rev() {
            acc += probs[i];
            suffix[i] = acc;
        }
        Ok(Self {
            n,
            probs,
            cdf,
            suffix,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// One draw by inversion of the cumulative table.
    pub fn draw(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let i = self.cdf.partition_point(|&c| c <= u);
        // Skip zero-probability entries that share the cumulative value.
        let mut i = i.min(self.probs.len() - 1);
        while self.probs[i] == 0.0 && i + 1 < self.probs.len() {
            i += 1;
        }
        i
    }
}

impl ShotSource for BasisDistribution {
    fn num_qubits(&self) -> usize {
        self.n
    }

    /// Multinomial histogram drawn as a chain of conditional binomials, which
    /// has the same law as `shots` i.i.d. draws at a cost linear in `2^n`.
    fn counts(&self, shots: u64, rng: &mut Rng) -> Vec<(usize, u64)> {
        let mut out = Vec::new();
        let mut remaining = shots;
        for (i, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if p <= 0.0 {
                continue;
            }
            let ratio = p / self.suffix[i];
            let k = if ratio >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, ratio)
                    .expect("ratio within [0, 1)")
                    .sample(rng)
            };
            if k > 0 {
                out.push((i, k));
                remaining -= k;
            }
        }
        if remaining > 0 {
            // Rounding left a sliver of mass; give it to the last supported state.
            let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            match out.last_mut() {
                Some((i, k)) if *i == last => *k += remaining,
                _ => out.push((last, remaining)),
            }
        }
        out
    }
}

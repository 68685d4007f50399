//! Computational-basis rank: exact values from a statevector, the optimal
//! rank-K truncation, and the two-sample estimator that works from
//! measurement outcomes only.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::amplitude::SparseState;
use crate::config::TOLERANCES;
use crate::error::{Error, Result};
use crate::sim::{Bitstring, ShotSource, Statevector};
use crate::Rng;

/// Slack for cumulative-probability comparisons.
const MASS_SLACK: f64 = 1e-12;

/// Basis indices ordered by decreasing probability, ties by ascending index.
pub fn sorted_support(probs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    idx
}

/// Smallest `K` whose `K` largest probabilities sum to at least `1 - eps`.
/// With `eps = 0` this counts amplitudes with `|α|² > 1e-14`.
pub fn exact_cb_rank(state: &Statevector, eps: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Precondition(format!("eps = {eps} outside [0, 1)")));
    }
    let probs = state.probabilities();
    if eps == 0.0 {
        return Ok(probs
            .iter()
            .filter(|&&p| p > TOLERANCES.zero_probability)
            .count()
            .max(1));
    }
    let order = sorted_support(&probs);
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        acc += probs[i];
        if acc >= (1.0 - eps) * total - MASS_SLACK {
            return Ok(k + 1);
        }
    }
    Ok(order.len())
}

/// Probability mass of the `k` largest amplitudes.
pub fn top_k_mass(state: &Statevector, k: usize) -> f64 {
    let probs = state.probabilities();
    sorted_support(&probs)
        .iter()
        .take(k)
        .map(|&i| probs[i])
        .sum()
}

/// Closest state with at most `k` nonzero amplitudes: the `k` largest
/// amplitudes, renormalized. Its fidelity with `state` is the retained mass.
pub fn best_rank_k_approx(state: &Statevector, k: usize) -> Result<SparseState> {
    if k == 0 || k > state.dim() {
        return Err(Error::Precondition(format!(
            "rank {k} outside 1..={}",
            state.dim()
        )));
    }
    let probs = state.probabilities();
    let n = state.n();
    let entries = sorted_support(&probs)
        .into_iter()
        .take(k)
        .map(|i| (Bitstring::new(n, i).expect("index in range"), state.amplitudes()[i]))
        .collect();
    SparseState::normalized(n, entries)
}

/// One distinct first-sample outcome with its counts in both sample sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub bitstring: Bitstring,
    /// Count in the first sample set (the ranking set).
    pub first: u64,
    /// Count of the same bitstring in the second (validation) set.
    pub second: u64,
}

/// Result of the two-sample rank estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbEstimate {
    /// Estimated rank.
    pub k: usize,
    /// Upper bound on the probability that the true rank exceeds `k`.
    pub p: f64,
    /// Whether some prefix passed both the residual and the confidence test.
    pub success: bool,
    /// Every distinct first-set outcome, by decreasing first count, ties by bitstring.
    pub support: Vec<SupportEntry>,
    /// Second-set shots falling outside the retained top-`k`.
    pub residual: u64,
    /// Shots per sample set.
    pub shots: u64,
    /// Set when the shot budget can never meet `p_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl CbEstimate {
    /// Number of distinct outcomes in the first sample set.
    pub fn distinct(&self) -> usize {
        self.support.len()
    }

    /// The top-`k` bitstrings.
    pub fn retained(&self) -> &[SupportEntry] {
        &self.support[..self.k.min(self.support.len())]
    }

    /// `m / M`.
    pub fn residual_fraction(&self) -> f64 {
        self.residual as f64 / self.shots as f64
    }

    /// CSV form `K,p,F,m,M`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{},{},{}",
            self.k, self.p, self.success, self.residual, self.shots
        )
    }

    pub const CSV_HEADER: &'static str = "K,p,F,m,M";
}

/// `exp(-2 M (eps - m/M)²)`; requires `m < M·eps`.
pub fn hoeffding_bound(shots: u64, eps: f64, residual: u64) -> Result<f64> {
    let m_frac = residual as f64 / shots as f64;
    if shots == 0 || (residual as f64) >= shots as f64 * eps {
        return Err(Error::Precondition(format!(
            "residual {residual} must be below M·eps = {}",
            shots as f64 * eps
        )));
    }
    Ok((-2.0 * shots as f64 * (eps - m_frac).powi(2)).exp())
}

/// Whether `exp(-2 M eps²) < p_m`, the best case of the estimator.
pub fn budget_allows(shots: u64, eps: f64, p_m: f64) -> bool {
    (-2.0 * shots as f64 * eps * eps).exp() < p_m
}

/// Smallest shot count passing [`budget_allows`].
pub fn min_shots(eps: f64, p_m: f64) -> u64 {
    let mut m = ((1.0 / p_m).ln() / (2.0 * eps * eps)).floor().max(0.0) as u64;
    while !budget_allows(m, eps, p_m) {
        m += 1;
    }
    m.max(1)
}

fn check_estimator_args(shots: u64, eps: f64, p_m: f64) -> Result<()> {
    if shots == 0 {
        return Err(Error::Precondition("need at least one shot".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps = {eps} outside (0, 1)")));
    }
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(Error::Precondition(format!("p_m = {p_m} outside (0, 1)")));
    }
    Ok(())
}

/// Two-sample rank estimate.
///
/// Draws two independent sets of `shots` outcomes. Distinct outcomes of the
/// first set are ranked by count; prefixes of that ranking are scanned while
/// the second set's residual `m` (shots outside the prefix) is tracked. The
/// first prefix with `m < M·eps` and `exp(-2M(eps - m/M)²) < p_m` is accepted.
/// Otherwise `k` is the number of distinct outcomes and `success` is false.
pub fn estimate_cb_rank(
    source: &dyn ShotSource,
    shots: u64,
    eps: f64,
    p_m: f64,
    rng: &mut Rng,
) -> Result<CbEstimate> {
    check_estimator_args(shots, eps, p_m)?;
    let n = source.num_qubits();
    let first = source.counts(shots, rng);
    let second = source.counts(shots, rng);
    Ok(scan(n, &first, &second, shots, eps, p_m))
}

/// Scan over prefix sizes given both histograms (ascending by index).
pub(crate) fn scan(
    n: usize,
    first: &[(usize, u64)],
    second: &[(usize, u64)],
    shots: u64,
    eps: f64,
    p_m: f64,
) -> CbEstimate {
    let mut support: Vec<SupportEntry> = first
        .iter()
        .map(|&(i, c)| SupportEntry {
            bitstring: Bitstring::new(n, i).expect("index in range"),
            first: c,
            second: second
                .binary_search_by(|probe| probe.0.cmp(&i))
                .map(|pos| second[pos].1)
                .unwrap_or(0),
        })
        .collect();
    support.sort_by(|a, b| match b.first.cmp(&a.first) {
        Ordering::Equal => a.bitstring.cmp(&b.bitstring),
        o => o,
    });

    let diagnostic = (!budget_allows(shots, eps, p_m)).then(|| {
        format!(
            "exp(-2 M eps^2) >= p_m with M = {shots}: estimation cannot succeed below M = {}",
            min_shots(eps, p_m)
        )
    });

    let budget = shots as f64 * eps;
    let mut residual = shots;
    let mut p = 1.0;
    for (i, e) in support.iter().enumerate() {
        residual -= e.second;
        if (residual as f64) < budget {
            p = hoeffding_bound(shots, eps, residual).expect("checked residual");
            if p < p_m {
                return CbEstimate {
                    k: i + 1,
                    p,
                    success: true,
                    support,
                    residual,
                    shots,
                    diagnostic,
                };
            }
        }
    }
    CbEstimate {
        k: support.len(),
        p,
        success: false,
        support,
        residual,
        shots,
        diagnostic,
    }
}

//! Amplitude estimation for the chop: simulated Hadamard tests, sparse-state
//! reconstruction and the fidelity lower bound that goes with it.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::cbrank::CbEstimate;
use crate::config::TOLERANCES;
use crate::error::{Error, Result};
use crate::sim::{Bitstring, Circuit, Gate, Statevector};
use crate::{par, split_rng, Rng};

/// A state with few nonzero amplitudes, keyed by bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n: usize,
    entries: BTreeMap<Bitstring, C64>,
    renorm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseStateJson {
    n: usize,
    entries: BTreeMap<Bitstring, [f64; 2]>,
    renorm: f64,
}

impl SparseState {
    /// Build from raw amplitudes, dividing by their joint norm. The applied
    /// factor `1/‖raw‖` is kept as [`SparseState::renorm`].
    pub fn normalized(n: usize, raw: Vec<(Bitstring, C64)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (b, a) in raw {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
            *entries.entry(b).or_insert(C64::new(0.0, 0.0)) += a;
        }
        let norm = entries.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < TOLERANCES.degenerate_norm {
            return Err(Error::DegenerateState(norm));
        }
        let renorm = 1.0 / norm;
        entries.values_mut().for_each(|a| *a *= renorm);
        Ok(Self { n, entries, renorm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &BTreeMap<Bitstring, C64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Scale factor applied to the raw amplitudes.
    pub fn renorm(&self) -> f64 {
        self.renorm
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, b: &Bitstring) -> C64 {
        self.entries.get(b).copied().unwrap_or_default()
    }

    pub fn to_statevector(&self) -> Result<Statevector> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n];
        for (b, &a) in &self.entries {
            amps[b.index()] = a;
        }
        Statevector::from_amplitudes(amps)
    }

    /// `|⟨self|ψ⟩|²`.
    pub fn fidelity_with(&self, psi: &Statevector) -> Result<f64> {
        if psi.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: psi.n(),
            });
        }
        let overlap: C64 = self
            .entries
            .iter()
            .map(|(b, a)| a.conj() * psi.amplitudes()[b.index()])
            .sum();
        Ok(overlap.norm_sqr())
    }

    pub fn to_json(&self) -> String {
        let doc = SparseStateJson {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(b, a)| (*b, [a.re, a.im]))
                .collect(),
            renorm: self.renorm,
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SparseStateJson = serde_json::from_str(s)?;
        if let Some(b) = doc.entries.keys().find(|b| b.len() != doc.n) {
            return Err(Error::DimensionMismatch {
                expected: doc.n,
                got: b.len(),
            });
        }
        Ok(Self {
            n: doc.n,
            entries: doc
                .entries
                .into_iter()
                .map(|(b, [re, im])| (b, C64::new(re, im)))
                .collect(),
            renorm: doc.renorm,
        })
    }
}

/// Shot allocation for the two measurement stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBudget {
    /// Shots per sample set of the rank estimator.
    pub probability_shots: u64,
    /// Hadamard-test shots for each of the real and imaginary parts.
    pub phase_shots: u64,
}

impl ShotBudget {
    pub fn new(probability_shots: u64, phase_shots: u64) -> Result<Self> {
        if probability_shots == 0 || phase_shots == 0 {
            return Err(Error::Precondition("shot counts must be at least 1".into()));
        }
        Ok(Self {
            probability_shots,
            phase_shots,
        })
    }
}

/// How an amplitude is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum HadamardMode {
    /// The exact amplitude from the simulator.
    Exact,
    /// Binomial draws from the known acceptance probability.
    Sampled { shots: u64 },
    /// Explicit ancilla circuit, simulated and measured. Small `n` only.
    Circuit { shots: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// Phases as produced by the test itself.
    #[default]
    Absolute,
    /// Global phase fixed so the first support element is real and positive.
    RelativeToLeading,
}

/// `2·Bin(shots, (1+x)/2)/shots - 1`, an unbiased estimate of `x ∈ [-1, 1]`.
pub fn wald_estimate(x: f64, shots: u64, rng: &mut Rng) -> f64 {
    let accept = ((1.0 + x) / 2.0).clamp(0.0, 1.0);
    let hits = Binomial::new(shots, accept)
        .expect("probability clamped to [0, 1]")
        .sample(rng);
    2.0 * hits as f64 / shots as f64 - 1.0
}

/// Independent Wald estimates of the real and imaginary parts of `a`.
pub fn sample_overlap(a: C64, shots: u64, rng: &mut Rng) -> C64 {
    let re = wald_estimate(a.re, shots, rng);
    let im = wald_estimate(a.im, shots, rng);
    C64::new(re, im)
}

/// Probability that the ancilla of the Hadamard test for `⟨b|u1|0⟩` reads 0.
///
/// The circuit is H on the ancilla, `u1` then `X^b` controlled on it, an
/// optional `PHASE(-π/2)` for the imaginary part, and a closing H. The
/// ancilla is qubit 0, the system occupies qubits `1..=n`.
pub fn hadamard_acceptance(u1: &Circuit, b: &Bitstring, imaginary: bool) -> Result<f64> {
    let n = u1.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut s = Statevector::zero(n + 1)?;
    s.apply_gate(&Gate::H(0))?;
    for g in u1.gates() {
        s.apply_controlled(0, &g.shifted(1))?;
    }
    for q in (0..n).filter(|&q| b.bit(q)) {
        s.apply_controlled(0, &Gate::X(q + 1))?;
    }
    if imaginary {
        s.apply_gate(&Gate::Phase(0, -FRAC_PI_2))?;
    }
    s.apply_gate(&Gate::H(0))?;
    let half = 1usize << n;
    Ok(s.amplitudes()[..half].iter().map(|a| a.norm_sqr()).sum())
}

fn circuit_overlap(u1: &Circuit, b: &Bitstring, shots: u64, rng: &mut Rng) -> Result<C64> {
    let mut part = |imaginary: bool| -> Result<f64> {
        let accept = hadamard_acceptance(u1, b, imaginary)?.clamp(0.0, 1.0);
        let hits = Binomial::new(shots, accept)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        Ok(2.0 * hits as f64 / shots as f64 - 1.0)
    };
    let re = part(false)?;
    let im = part(true)?;
    Ok(C64::new(re, im))
}

fn check_shots(mode: HadamardMode) -> Result<()> {
    match mode {
        HadamardMode::Sampled { shots: 0 } | HadamardMode::Circuit { shots: 0 } => Err(
            Error::Precondition("Hadamard test needs at least one shot".into()),
        ),
        _ => Ok(()),
    }
}

/// Estimate of `⟨b|u1|0⟩`.
pub fn hadamard_test_amplitude(
    u1: &Circuit,
    b: &Bitstring,
    mode: HadamardMode,
    rng: &mut Rng,
) -> Result<C64> {
    check_shots(mode)?;
    if let HadamardMode::Circuit { shots } = mode {
        return circuit_overlap(u1, b, shots, rng);
    }
    let mut psi = Statevector::zero(u1.n())?;
    psi.apply_circuit(u1)?;
    let a = psi.amplitude(b)?;
    Ok(match mode {
        HadamardMode::Sampled { shots } => sample_overlap(a, shots, rng),
        _ => a,
    })
}

/// Batch amplitude estimation for one circuit over many bitstrings.
#[derive(Debug, Clone)]
pub struct AmplitudeEstimator<'a> {
    circuit: &'a Circuit,
    state: Statevector,
    mode: HadamardMode,
    convention: PhaseConvention,
}

impl<'a> AmplitudeEstimator<'a> {
    pub fn new(circuit: &'a Circuit, mode: HadamardMode, convention: PhaseConvention) -> Result<Self> {
        check_shots(mode)?;
        let mut state = Statevector::zero(circuit.n())?;
        state.apply_circuit(circuit)?;
        Ok(Self {
            circuit,
            state,
            mode,
            convention,
        })
    }

    /// `u1|0⟩`, computed once.
    pub fn state(&self) -> &Statevector {
        &self.state
    }

    /// One estimate per bitstring, in order. Each bitstring gets its own
    /// generator split from `rng` before any work starts.
    pub fn estimate(&self, support: &[Bitstring], rng: &mut Rng) -> Result<Vec<C64>> {
        let rotation = match (self.convention, support.first()) {
            (PhaseConvention::RelativeToLeading, Some(lead)) => {
                let a = self.state.amplitude(lead)?;
                if a.norm() > 0.0 {
                    a.conj() / a.norm()
                } else {
                    C64::new(1.0, 0.0)
                }
            }
            _ => C64::new(1.0, 0.0),
        };
        let jobs: Vec<(Bitstring, Rng)> = support.iter().map(|&b| (b, split_rng(rng))).collect();
        par::map_owned(jobs, |(b, mut local)| -> Result<C64> {
            let a = self.state.amplitude(&b)? * rotation;
            Ok(match self.mode {
                HadamardMode::Exact => a,
                HadamardMode::Sampled { shots } => sample_overlap(a, shots, &mut local),
                HadamardMode::Circuit { shots } => {
                    circuit_overlap(self.circuit, &b, shots, &mut local)? * rotation
                }
            })
        })
        .into_iter()
        .collect()
    }
}

/// Sparse state from amplitude estimates aligned with `estimate.retained()`.
pub fn reconstruct_state(estimate: &CbEstimate, amplitudes: &[C64]) -> Result<SparseState> {
    let retained = estimate.retained();
    if retained.len() != amplitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: retained.len(),
            got: amplitudes.len(),
        });
    }
    let n = retained
        .first()
        .map(|e| e.bitstring.len())
        .ok_or(Error::EmptySupport)?;
    SparseState::normalized(
        n,
        retained
            .iter()
            .zip(amplitudes)
            .map(|(e, &a)| (e.bitstring, a))
            .collect(),
    )
}

/// Guaranteed fidelity of a reconstruction, with the probability it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityBound {
    pub value: f64,
    pub confidence: f64,
}

/// `max(0, 1 - eps - K / (2·phase_shots·(1 - m/M)))` with confidence
/// `1 - exp(-2M(eps - m/M)²)`. Confidence is 0 once `m ≥ M·eps`.
pub fn fidelity_lower_bound(
    eps: f64,
    rank: usize,
    phase_shots: u64,
    residual: u64,
    probability_shots: u64,
) -> Result<FidelityBound> {
    if residual >= probability_shots {
        return Err(Error::Precondition(format!(
            "residual {residual} must be below {probability_shots} shots"
        )));
    }
    if phase_shots == 0 {
        return Err(Error::Precondition("phase shots must be positive".into()));
    }
    let kept = 1.0 - residual as f64 / probability_shots as f64;
    let value = (1.0 - eps - rank as f64 / (2.0 * phase_shots as f64 * kept)).max(0.0);
    let confidence = crate::cbrank::hoeffding_bound(probability_shots, eps, residual)
        .map(|p| 1.0 - p)
        .unwrap_or(0.0);
    Ok(FidelityBound { value, confidence })
}

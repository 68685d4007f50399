//! Circuit families: the TFIM-style circuit that gets chopped, the
//! hardware-efficient reducer, and gradual-activation paths.
//!
//! Both families live on a ring of qubits. Reported depths count entangling
//! layers in CNOT units: a native ZZ rotation costs two CNOTs, so one TFIM
//! layer reports 4 and one reducer layer (two CZ sub-layers) reports 2.

use std::f64::consts::{PI, TAU};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, Statevector};
use crate::Rng;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ParameterLength { expected, got });
    }
    Ok(())
}

/// Ring edges `(e, e+1 mod n)` packed greedily into layers of disjoint pairs,
/// even-indexed edges first. `n = 2` has a single edge.
fn ring_edge_layers(n: usize, allow_double_edge: bool) -> Vec<Vec<(usize, usize)>> {
    let edges: Vec<(usize, usize)> = match n {
        1 => vec![],
        2 if !allow_double_edge => vec![(0, 1)],
        _ => (0..n).map(|e| (e, (e + 1) % n)).collect(),
    };
    let order = (0..edges.len())
        .step_by(2)
        .chain((1..edges.len()).step_by(2));
    let mut layers: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut busy: Vec<Vec<bool>> = Vec::new();
    for e in order {
        let (a, b) = edges[e];
        let slot = busy.iter().position(|used| !used[a] && !used[b]);
        let slot = match slot {
            Some(s) => s,
            None => {
                layers.push(Vec::new());
                busy.push(vec![false; n]);
                layers.len() - 1
            }
        };
        layers[slot].push((a, b));
        busy[slot][a] = true;
        busy[slot][b] = true;
    }
    layers
}

/// Ring order of the ZZ couplings, matching the parameter vector.
fn tfim_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|e| (e, (e + 1) % n)).collect()
}

/// TFIM-inspired circuit: per layer an RX on every qubit followed by a ZZ
/// rotation on every ring edge.
///
/// Parameters are layer-major; inside a layer the `n` RX angles come first,
/// then the `n` ZZ angles in edge order `(0,1), (1,2), …, (n-1,0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfimAnsatz {
    pub n: usize,
    pub layers: usize,
    pub phi: Vec<f64>,
}

impl TfimAnsatz {
    pub fn num_params(n: usize, layers: usize) -> usize {
        layers * 2 * n
    }

    pub fn new(n: usize, layers: usize, phi: Vec<f64>) -> Result<Self> {
        check_len(Self::num_params(n, layers), phi.len())?;
        Ok(Self { n, layers, phi })
    }

    /// Angles drawn uniformly from `[0, 2π)`.
    pub fn random(n: usize, layers: usize, rng: &mut Rng) -> Self {
        let phi = (0..Self::num_params(n, layers))
            .map(|_| rng.random::<f64>() * TAU)
            .collect();
        Self { n, layers, phi }
    }

    pub fn depth(&self) -> usize {
        4 * self.layers
    }

    pub fn circuit(&self) -> Circuit {
        build_tfim(self.n, self.layers, &self.phi).expect("length checked at construction")
    }

    /// Circuit with only the first `k` parameters live.
    pub fn partially_active(&self, k: usize) -> Circuit {
        build_tfim(self.n, self.layers, &parametric_activation(&self.phi, k))
            .expect("length preserved")
    }

    /// Split after `cut` layers into the two halves of the chop.
    pub fn split(&self, cut: usize) -> Result<(TfimAnsatz, TfimAnsatz)> {
        if cut > self.layers {
            return Err(Error::Precondition(format!(
                "cut {cut} beyond {} layers",
                self.layers
            )));
        }
        let at = Self::num_params(self.n, cut);
        Ok((
            TfimAnsatz::new(self.n, cut, self.phi[..at].to_vec())?,
            TfimAnsatz::new(self.n, self.layers - cut, self.phi[at..].to_vec())?,
        ))
    }
}

/// TFIM circuit on `n` qubits with `layers` layers; reported depth `4·layers`.
pub fn build_tfim(n: usize, layers: usize, phi: &[f64]) -> Result<Circuit> {
    check_len(TfimAnsatz::num_params(n, layers), phi.len())?;
    let edges = tfim_edges(n);
    let packing = ring_edge_layers(n, true);
    let mut out = Vec::new();
    for l in 0..layers {
        let p = &phi[l * 2 * n..(l + 1) * 2 * n];
        out.push((0..n).map(|q| Gate::Rx(q, p[q])).collect());
        for sub in &packing {
            out.push(
                sub.iter()
                    .map(|&(a, b)| {
                        let e = edges
                            .iter()
                            .position(|&x| x == (a, b))
                            .expect("packed edge is a ring edge");
                        Gate::Zz(a, b, p[n + e])
                    })
                    .collect(),
            );
        }
    }
    Ok(Circuit::new(n, out)?.with_reported_depth(4 * layers))
}

/// Hardware-efficient reducer: per layer a U3 on every qubit, then CZ gates
/// on the ring split into two alternating sub-layers; a final U3 layer closes
/// the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaAnsatz {
    pub n: usize,
    pub layers: usize,
    pub theta: Vec<f64>,
}

impl HeaAnsatz {
    pub fn num_params(n: usize, layers: usize) -> usize {
        3 * n * (layers + 1)
    }

    pub fn new(n: usize, layers: usize, theta: Vec<f64>) -> Result<Self> {
        check_len(Self::num_params(n, layers), theta.len())?;
        Ok(Self { n, layers, theta })
    }

    /// All angles zero: CZ layers only, which fix `|0…0⟩`.
    pub fn zeros(n: usize, layers: usize) -> Self {
        Self {
            n,
            layers,
            theta: vec![0.0; Self::num_params(n, layers)],
        }
    }

    pub fn depth(&self) -> usize {
        2 * self.layers
    }

    pub fn circuit(&self) -> Circuit {
        build_hea(self.n, self.layers, &self.theta).expect("length checked at construction")
    }
}

/// Reducer circuit; reported depth `2·layers`.
pub fn build_hea(n: usize, layers: usize, theta: &[f64]) -> Result<Circuit> {
    check_len(HeaAnsatz::num_params(n, layers), theta.len())?;
    let rotations = |block: &[f64]| -> Vec<Gate> {
        (0..n)
            .map(|q| Gate::U3(q, block[3 * q], block[3 * q + 1], block[3 * q + 2]))
            .collect()
    };
    let packing = ring_edge_layers(n, false);
    let mut out = Vec::new();
    for l in 0..=layers {
        out.push(rotations(&theta[l * 3 * n..(l + 1) * 3 * n]));
        if l < layers {
            for sub in &packing {
                out.push(sub.iter().map(|&(a, b)| Gate::Cz(a, b)).collect());
            }
        }
    }
    Ok(Circuit::new(n, out)?.with_reported_depth(2 * layers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationMode {
    /// `ψ(t) ∝ (cos(πt/2)·I + sin(πt/2)·U1)|0⟩`.
    Soft,
    /// Parameters of `U1` switched on one at a time.
    Parametric,
}

/// A point `t ∈ [0, 1]` on an activation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationPath {
    pub mode: ActivationMode,
    pub t: f64,
}

impl ActivationPath {
    /// Activated state for the TFIM circuit `u1`. In parametric mode `t`
    /// selects `round(t · len φ)` live parameters.
    pub fn state(&self, u1: &TfimAnsatz) -> Result<Statevector> {
        match self.mode {
            ActivationMode::Soft => soft_activated_state(&u1.circuit(), self.t),
            ActivationMode::Parametric => {
                check_t(self.t)?;
                let k = (self.t * u1.phi.len() as f64).round() as usize;
                let mut s = Statevector::zero(u1.n)?;
                s.apply_circuit(&u1.partially_active(k))?;
                Ok(s)
            }
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Precondition(format!("activation t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// Normalized `cos(πt/2)|0⟩ + sin(πt/2)·U1|0⟩`.
pub fn soft_activated_state(u1: &Circuit, t: f64) -> Result<Statevector> {
    let mut full = Statevector::zero(u1.n())?;
    full.apply_circuit(u1)?;
    soft_activated_from(&full, t)
}

/// [`soft_activated_state`] with `U1|0⟩` already computed.
pub fn soft_activated_from(u1_state: &Statevector, t: f64) -> Result<Statevector> {
    check_t(t)?;
    let (s, c) = (PI * t / 2.0).sin_cos();
    let mut amps: Vec<_> = u1_state.amplitudes().iter().map(|a| a * s).collect();
    amps[0] += c;
    Statevector::from_amplitudes(amps)
}

/// First `k` entries of `phi_full`, the rest zeroed. `k` beyond the length
/// activates everything.
pub fn parametric_activation(phi_full: &[f64], k: usize) -> Vec<f64> {
    let k = k.min(phi_full.len());
    phi_full[..k]
        .iter()
        .copied()
        .chain(std::iter::repeat_n(0.0, phi_full.len() - k))
        .collect()
}

use num_complex::Complex64 as C64;

use super::bitstring::Bitstring;
use super::circuit::Circuit;
use super::gate::{Gate, GateMatrix};
use super::sampling::{BasisDistribution, ShotSource};
use crate::config::{max_qubits, TOLERANCES};
use crate::error::{Error, Result};
use crate::{par, Rng};

/// Unit-norm amplitude vector over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

fn check_size(n: usize) -> Result<()> {
    let cap = max_qubits();
    if n == 0 {
        return Err(Error::Precondition("state needs at least one qubit".into()));
    }
    if n > cap {
        return Err(Error::TooManyQubits { n, cap });
    }
    Ok(())
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(Bitstring::zeros(n))
    }

    pub fn basis(b: Bitstring) -> Result<Self> {
        let n = b.len();
        check_size(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[b.index()] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wrap `amps`, rescaling to unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_size(n)?;
        let norm = amps.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= TOLERANCES.degenerate_norm {
            return Err(Error::DegenerateState(norm));
        }
        Ok(Self {
            n,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, x: &Bitstring) -> Result<C64> {
        self.check_bitstring(x)?;
        Ok(self.amps[x.index()])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(C64::norm_sqr).sum()
    }

    /// `|α_i|²` for every basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(C64::norm_sqr).collect()
    }

    /// `|⟨x|ψ⟩|²`.
    pub fn probability(&self, x: &Bitstring) -> Result<f64> {
        Ok(self.amplitude(x)?.norm_sqr())
    }

    pub fn distribution(&self) -> BasisDistribution {
        BasisDistribution::new(self.n, self.probabilities()).expect("unit-norm state")
    }

    /// `shots` i.i.d. computational-basis measurements.
    pub fn sample(&self, shots: usize, rng: &mut Rng) -> Vec<Bitstring> {
        let d = self.distribution();
        (0..shots)
            .map(|_| Bitstring::new(self.n, d.draw(rng)).expect("index in range"))
            .collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_bitstring(&self, x: &Bitstring) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Bit shift of qubit `q` inside a basis index.
    fn shift(&self, q: usize) -> usize {
        self.n - 1 - q
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        match (*gate, gate.matrix()) {
            (Gate::Cnot { control, target }, _) => self.apply_cnot(control, target),
            (Gate::Cz(a, b), _) | (Gate::Zz(a, b, _), _) => self.apply_diagonal2(a, b, gate),
            (_, GateMatrix::One(m)) => self.apply_one(gate.qubits()[0], m),
            (_, GateMatrix::Two(_)) => unreachable!("all two-qubit gates handled above"),
        }
        Ok(())
    }

    /// Pure form of [`Statevector::apply_gate`].
    pub fn applied(&self, gate: &Gate) -> Result<Statevector> {
        let mut s = self.clone();
        s.apply_gate(gate)?;
        Ok(s)
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: circuit.n(),
            });
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    fn apply_one(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let stride = 1usize << self.shift(q);
        par::for_each_chunk_mut(&mut self.amps, 2 * stride, |_, chunk| {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        });
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let stride = 1usize << self.shift(target);
        let cshift = self.shift(control);
        par::for_each_chunk_mut(&mut self.amps, 2 * stride, |ci, chunk| {
            let base = ci * 2 * stride;
            let (lo, hi) = chunk.split_at_mut(stride);
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + j) >> cshift & 1 == 1 {
                    std::mem::swap(a, b);
                }
            }
        });
    }

    fn apply_diagonal2(&mut self, qa: usize, qb: usize, gate: &Gate) {
        let (sa, sb) = (self.shift(qa), self.shift(qb));
        let phases = [
            gate.diagonal_phase(false, false).expect("diagonal gate"),
            gate.diagonal_phase(false, true).expect("diagonal gate"),
            gate.diagonal_phase(true, false).expect("diagonal gate"),
            gate.diagonal_phase(true, true).expect("diagonal gate"),
        ];
        par::for_each_indexed_mut(&mut self.amps, |i, a| {
            let k = ((i >> sa & 1) << 1) | (i >> sb & 1);
            *a *= phases[k];
        });
    }

    /// Apply `gate` only on the subspace where qubit `control` is 1.
    ///
    /// Generic gather/scatter kernel; used to build explicit Hadamard-test
    /// circuits with an ancilla control.
    pub fn apply_controlled(&mut self, control: usize, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        if control >= self.n {
            return Err(Error::QubitOutOfRange {
                index: control,
                n: self.n,
            });
        }
        let qs = gate.qubits();
        if qs.contains(&control) {
            return Err(Error::RepeatedTarget(control));
        }
        let m = gate.matrix();
        let d = m.dim();
        let shifts: Vec<usize> = qs.iter().map(|&q| self.shift(q)).collect();
        let gate_mask: usize = shifts.iter().map(|s| 1usize << s).sum();
        let cbit = 1usize << self.shift(control);
        let offset = |local: usize| -> usize {
            shifts
                .iter()
                .enumerate()
                .map(|(k, &s)| ((local >> (shifts.len() - 1 - k)) & 1) << s)
                .sum()
        };
        let offsets: Vec<usize> = (0..d).map(offset).collect();
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for base in 0..self.amps.len() {
            if base & cbit == 0 || base & gate_mask != 0 {
                continue;
            }
            for (r, slot) in buf.iter_mut().enumerate() {
                *slot = (0..d).map(|c| m.get(r, c) * self.amps[base + offsets[c]]).sum();
            }
            for (r, &v) in buf.iter().enumerate() {
                self.amps[base + offsets[r]] = v;
            }
        }
        Ok(())
    }
}

impl ShotSource for Statevector {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn counts(&self, shots: u64, rng: &mut Rng) -> Vec<(usize, u64)> {
        self.distribution().counts(shots, rng)
    }
}

/// Run `circuit` on a copy of `initial`.
pub fn run_circuit(circuit: &Circuit, initial: &Statevector) -> Result<Statevector> {
    let mut s = initial.clone();
    s.apply_circuit(circuit)?;
    Ok(s)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

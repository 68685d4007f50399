use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Closed gate set. Angles are in radians.
///
/// Rotations follow `R_a(θ) = exp(-i σ_a θ / 2)` and `ZZ(θ) = exp(-i σ_z⊗σ_z θ / 2)`.
/// `U3(θ, φ, λ)` is the generic single-qubit gate
/// `[[cos θ/2, -e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Zz(usize, usize, f64),
    U3(usize, f64, f64, f64),
    Phase(usize, f64),
}

/// Dense matrix of a gate in the local basis of [`Gate::qubits`], first qubit
/// most significant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[C64; 2]; 2]),
    Two([[C64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self {
            GateMatrix::One(m) => m[r][c],
            GateMatrix::Two(m) => m[r][c],
        }
    }

    /// Largest entry of `|M†M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Cnot { .. } => "CNOT",
            Gate::Cz(..) => "CZ",
            Gate::Rx(..) => "RX",
            Gate::Rz(..) => "RZ",
            Gate::Zz(..) => "ZZ",
            Gate::U3(..) => "U3",
            Gate::Phase(..) => "PHASE",
        }
    }

    /// Qubits acted on, in matrix order.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Rx(q, _) | Gate::Rz(q, _) | Gate::Phase(q, _) => {
                vec![q]
            }
            Gate::U3(q, ..) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz(a, b) | Gate::Zz(a, b, _) => vec![a, b],
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::H(_) | Gate::X(_) | Gate::Cnot { .. } | Gate::Cz(..) => vec![],
            Gate::Rx(_, t) | Gate::Rz(_, t) | Gate::Zz(_, _, t) | Gate::Phase(_, t) => vec![t],
            Gate::U3(_, a, b, g) => vec![a, b, g],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Cz(..) | Gate::Zz(..))
    }

    /// Number of sequential CNOT-equivalent layers this gate costs on hardware.
    pub fn entangling_cost(&self) -> usize {
        match self {
            Gate::Cnot { .. } | Gate::Cz(..) => 1,
            Gate::Zz(..) => 2,
            _ => 0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::RepeatedTarget(qs[0]));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::H(_) | Gate::X(_) | Gate::Cnot { .. } | Gate::Cz(..) => *self,
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            Gate::Zz(a, b, t) => Gate::Zz(a, b, -t),
            Gate::Phase(q, t) => Gate::Phase(q, -t),
            Gate::U3(q, theta, phi, lambda) => Gate::U3(q, -theta, -lambda, -phi),
        }
    }

    /// Same gate with every qubit index moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(q + offset),
            Gate::X(q) => Gate::X(q + offset),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: control + offset,
                target: target + offset,
            },
            Gate::Cz(a, b) => Gate::Cz(a + offset, b + offset),
            Gate::Rx(q, t) => Gate::Rx(q + offset, t),
            Gate::Rz(q, t) => Gate::Rz(q + offset, t),
            Gate::Zz(a, b, t) => Gate::Zz(a + offset, b + offset, t),
            Gate::U3(q, a, b, c) => Gate::U3(q + offset, a, b, c),
            Gate::Phase(q, t) => Gate::Phase(q + offset, t),
        }
    }

    pub fn matrix(&self) -> GateMatrix {
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        match *self {
            Gate::H(_) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                GateMatrix::One([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
            }
            Gate::X(_) => GateMatrix::One([[zero, one], [one, zero]]),
            Gate::Rx(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                GateMatrix::One([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            Gate::Rz(_, t) => GateMatrix::One([
                [C64::from_polar(1.0, -t / 2.0), zero],
                [zero, C64::from_polar(1.0, t / 2.0)],
            ]),
            Gate::Phase(_, t) => GateMatrix::One([[one, zero], [zero, C64::from_polar(1.0, t)]]),
            Gate::U3(_, theta, phi, lambda) => {
                let (s, co) = (theta / 2.0).sin_cos();
                GateMatrix::One([
                    [c(co, 0.0), -C64::from_polar(s, lambda)],
                    [C64::from_polar(s, phi), C64::from_polar(co, phi + lambda)],
                ])
            }
            Gate::Cnot { .. } => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, zero, one],
                [zero, zero, one, zero],
            ]),
            Gate::Cz(..) => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, one, zero],
                [zero, zero, zero, c(-1.0, 0.0)],
            ]),
            Gate::Zz(_, _, t) => {
                let even = C64::from_polar(1.0, -t / 2.0);
                let odd = C64::from_polar(1.0, t / 2.0);
                GateMatrix::Two([
                    [even, zero, zero, zero],
                    [zero, odd, zero, zero],
                    [zero, zero, odd, zero],
                    [zero, zero, zero, even],
                ])
            }
        }
    }

    /// Diagonal phase for two-qubit diagonal gates given the two qubit values.
    pub(crate) fn diagonal_phase(&self, a: bool, b: bool) -> Option<C64> {
        match *self {
            Gate::Cz(..) => Some(if a && b { c(-1.0, 0.0) } else { c(1.0, 0.0) }),
            Gate::Zz(_, _, t) => Some(if a == b {
                C64::from_polar(1.0, -t / 2.0)
            } else {
                C64::from_polar(1.0, t / 2.0)
            }),
            _ => None,
        }
    }

    /// Build from the serialized `kind` / `targets` / `params` triple.
    pub fn from_parts(kind: &str, targets: &[usize], params: &[f64]) -> Result<Gate> {
        let upper = kind.to_ascii_uppercase();
        let arity = |t: usize, p: usize| -> Result<()> {
            if targets.len() != t || params.len() != p {
                Err(Error::GateArity {
                    kind: upper.clone(),
                    expected: t,
                    params: p,
                })
            } else {
                Ok(())
            }
        };
        let g = match upper.as_str() {
            "H" => {
                arity(1, 0)?;
                Gate::H(targets[0])
            }
            "X" => {
                arity(1, 0)?;
                Gate::X(targets[0])
            }
            "CNOT" | "CX" => {
                arity(2, 0)?;
                Gate::Cnot {
                    control: targets[0],
                    target: targets[1],
                }
            }
            "CZ" => {
                arity(2, 0)?;
                Gate::Cz(targets[0], targets[1])
            }
            "RX" => {
                arity(1, 1)?;
                Gate::Rx(targets[0], params[0])
            }
            "RZ" => {
                arity(1, 1)?;
                Gate::Rz(targets[0], params[0])
            }
            "ZZ" => {
                arity(2, 1)?;
                Gate::Zz(targets[0], targets[1], params[0])
            }
            "U3" => {
                arity(1, 3)?;
                Gate::U3(targets[0], params[0], params[1], params[2])
            }
            "PHASE" | "P" => {
                arity(1, 1)?;
                Gate::Phase(targets[0], params[0])
            }
            _ => return Err(Error::UnknownGate(kind.to_string())),
        };
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::RepeatedTarget(targets[0]));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_kinds() -> Vec<Gate> {
        vec![
            Gate::H(0),
            Gate::X(0),
            Gate::Cnot { control: 0, target: 1 },
            Gate::Cz(0, 1),
            Gate::Rx(0, 0.7),
            Gate::Rz(0, -1.3),
            Gate::Zz(0, 1, 2.1),
            Gate::U3(0, 0.4, 1.9, -0.8),
            Gate::Phase(0, 0.5),
        ]
    }

    #[test]
    fn matrices_are_unitary() {
        for g in all_kinds() {
            assert!(g.matrix().unitarity_defect() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn inverse_matrix_is_adjoint() {
        for g in all_kinds() {
            let m = g.matrix();
            let inv = g.inverse().matrix();
            for r in 0..m.dim() {
                for col in 0..m.dim() {
                    assert!((inv.get(r, col) - m.get(col, r).conj()).norm() < 1e-14, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn parts_round_trip() {
        for g in all_kinds() {
            let back = Gate::from_parts(g.name(), &g.qubits(), &g.params()).unwrap();
            assert_eq!(g, back);
        }
        assert!(Gate::from_parts("CZ", &[1, 1], &[]).is_err());
        assert!(Gate::from_parts("RX", &[0], &[]).is_err());
        assert!(Gate::from_parts("FOO", &[0], &[]).is_err());
    }
}

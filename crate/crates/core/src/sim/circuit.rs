use serde::{Deserialize, Serialize};

use super::gate::Gate;
use crate::error::{Error, Result};

/// Layered circuit. Gates within one layer act on disjoint qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Vec<Gate>>,
    /// Hardware depth reported by the builder, if it differs from the
    /// layer-derived count (native ZZ gates compile to two CNOTs).
    reported_depth: Option<usize>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Vec<Gate>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("circuit needs at least one qubit".into()));
        }
        for (li, layer) in layers.iter().enumerate() {
            let mut used = vec![false; n];
            for g in layer {
                g.validate(n)?;
                for q in g.qubits() {
                    if used[q] {
                        return Err(Error::LayerOverlap { layer: li, qubit: q });
                    }
                    used[q] = true;
                }
            }
        }
        Ok(Self {
            n,
            layers,
            reported_depth: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            layers: Vec::new(),
            reported_depth: None,
        }
    }

    pub fn with_reported_depth(mut self, depth: usize) -> Self {
        self.reported_depth = Some(depth);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn num_gates(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Number of layers holding at least one two-qubit gate.
    pub fn entangling_depth(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.iter().any(Gate::is_two_qubit))
            .count()
    }

    /// Hardware depth: the builder's figure when set, else the sum over
    /// layers of the most expensive entangling gate in the layer.
    pub fn depth(&self) -> usize {
        self.reported_depth.unwrap_or_else(|| {
            self.layers
                .iter()
                .map(|l| l.iter().map(Gate::entangling_cost).max().unwrap_or(0))
                .sum()
        })
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if next.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: next.n,
            });
        }
        let mut layers = self.layers.clone();
        layers.extend(next.layers.iter().cloned());
        Ok(Circuit {
            n: self.n,
            layers,
            reported_depth: Some(self.depth() + next.depth()),
        })
    }

    /// Adjoint: layers reversed, each gate inverted.
    pub fn dagger(&self) -> Circuit {
        Circuit {
            n: self.n,
            layers: self
                .layers
                .iter()
                .rev()
                .map(|l| l.iter().rev().map(Gate::inverse).collect())
                .collect(),
            reported_depth: self.reported_depth,
        }
    }

    /// Split after `k` layers into `(first, rest)`.
    pub fn split_at(&self, k: usize) -> (Circuit, Circuit) {
        let k = k.min(self.layers.len());
        (
            Circuit::new(self.n, self.layers[..k].to_vec()).expect("sub-circuit of valid circuit"),
            Circuit::new(self.n, self.layers[k..].to_vec()).expect("sub-circuit of valid circuit"),
        )
    }

    pub fn to_spec(&self) -> CircuitSpec {
        CircuitSpec {
            n: self.n,
            layers: self
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|g| GateSpec {
                            kind: g.name().to_string(),
                            targets: g.qubits(),
                            params: g.params(),
                        })
                        .collect()
                })
                .collect(),
            depth: self.reported_depth,
        }
    }

    pub fn from_spec(spec: &CircuitSpec) -> Result<Circuit> {
        let layers = spec
            .layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| Gate::from_parts(&g.kind, &g.targets, &g.params))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = Circuit::new(spec.n, layers)?;
        c.reported_depth = spec.depth;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("circuit spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Circuit::from_spec(&serde_json::from_str(s)?)
    }
}

/// Wire form: `{"n": int, "layers": [[{"kind", "targets", "params"}]]}` with an
/// optional reported `depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n: usize,
    pub layers: Vec<Vec<GateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: String,
    pub targets: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlapping_layer() {
        let err = Circuit::new(2, vec![vec![Gate::H(0), Gate::Cz(0, 1)]]).unwrap_err();
        assert!(matches!(err, Error::LayerOverlap { layer: 0, qubit: 0 }));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            Circuit::new(2, vec![vec![Gate::X(2)]]),
            Err(Error::QubitOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn entangling_depth_counts_layers() {
        let c = Circuit::new(
            3,
            vec![
                vec![Gate::H(0)],
                vec![Gate::Cnot { control: 0, target: 1 }],
                vec![Gate::Zz(1, 2, 0.3), Gate::X(0)],
            ],
        )
        .unwrap();
        assert_eq!(c.entangling_depth(), 2);
        assert_eq!(c.depth(), 3);
        assert_eq!(c.dagger().entangling_depth(), 2);
    }

    #[test]
    fn json_round_trip() {
        let c = Circuit::new(
            2,
            vec![vec![Gate::U3(0, 0.1, 0.2, 0.3), Gate::Rx(1, -0.5)], vec![Gate::Zz(0, 1, 1.25)]],
        )
        .unwrap()
        .with_reported_depth(7);
        let json = c.to_json();
        let back = Circuit::from_json(&json).unwrap();
        assert_eq!(c, back);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn json_rejects_unknown_gate() {
        let bad = r#"{"n":1,"layers":[[{"kind":"T","targets":[0],"params":[]}]]}"#;
        assert!(matches!(Circuit::from_json(bad), Err(Error::UnknownGate(_))));
    }
}

//! Numerical tolerances and size caps shared by every module.

/// Environment variable overriding [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "REDUCECHOP_MAX_QUBITS";

/// Hard cap on dense statevector size.
pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Cap on the number of Feynman paths `(2^n)^m` for multi-cut recombination.
pub const DEFAULT_PATH_CAP: u128 = 1 << 20;

/// Largest register for which the exact full-sum recombination is allowed.
pub const EXACT_CHOP_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed drift of `‖ψ‖²` from one.
    pub norm: f64,
    /// Unitarity check for gate matrices.
    pub unitary: f64,
    /// Amplitudes with `|α|²` at or below this count as zero for the exact rank.
    pub zero_probability: f64,
    /// Norms below this cannot be renormalized.
    pub degenerate_norm: f64,
    /// Covariance eigenvalue floor in the evolution strategy.
    pub eigen_floor: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    norm: 1e-12,
    unitary: 1e-12,
    zero_probability: 1e-14,
    degenerate_norm: 1e-12,
    eigen_floor: 1e-12,
};

/// Qubit cap, honoring [`MAX_QUBITS_ENV`] when it parses.
pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| (1..=30).contains(&n))
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

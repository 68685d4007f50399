//! Depth-cutting ("reduce and chop") simulation of quantum circuits.
//!
//! A deep circuit `U = U2 · U1` is split at a chop. The state `R·U1|0⟩`, with
//! `R` a shallow variational reducer, is characterized by sampling: its
//! computational-basis rank is estimated with a two-sample Hoeffding test,
//! its dominant amplitudes are measured with simulated Hadamard tests and the
//! output probabilities `P(x)` are recombined as a sum over the retained
//! basis states.
//!
//! Module map:
//!
//! * [`sim`]: dense statevector simulation, gates, circuits and sampling.
//! * [`ansatz`]: the TFIM-style circuit to be chopped, the hardware-efficient
//!   reducer and the gradual-activation paths.
//! * [`cbrank`]: exact and sampled computational-basis rank.
//! * [`amplitude`]: Hadamard-test amplitude estimation and sparse reconstruction.
//! * [`chop`]: Feynman recombination over one or many chops, Metropolis sampling.
//! * [`es`]: covariance-matrix-adaptation evolution strategy.
//! * [`reducer`]: the gradually activated reducer optimization loop.
//! * [`harness`]: experiment configuration, batch runs, bound verification.
//!
//! With the default `parallel` feature, batch loops (ES candidates, Monte
//! Carlo trials, recombination terms, instances) and large gate kernels run on
//! rayon. Results are bitwise identical with the feature disabled.

pub mod amplitude;
pub mod ansatz;
pub mod cbrank;
pub mod chop;
pub mod config;
pub mod error;
pub mod es;
pub mod harness;
pub mod par;
pub mod reducer;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use sim::{Bitstring, Circuit, Gate, Statevector};

/// Deterministic generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Derive an independent child generator, for example one per ES candidate
/// or per Monte Carlo trial, without disturbing the parent beyond one draw.
pub fn split_rng(parent: &mut Rng) -> Rng {
    use rand::{Rng as _, SeedableRng};
    Rng::seed_from_u64(parent.random())
}

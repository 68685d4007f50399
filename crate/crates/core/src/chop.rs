//! Feynman recombination across one or more chops.
//!
//! A single chop writes `P(x) = |Σ_b ⟨x|U2 R†|b⟩⟨b|R U1|0⟩|²`. Several chops
//! nest the sum over every intermediate bitstring.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::amplitude::{sample_overlap, SparseState};
use crate::config::{DEFAULT_PATH_CAP, EXACT_CHOP_MAX_QUBITS};
use crate::error::{Error, Result};
use crate::sim::{Bitstring, Circuit, Statevector};
use crate::{par, Rng};

/// Entangling depth of one executed stage, plus an optional symbolic
/// measurement overhead `c` for the phase-resolving Hadamard tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDepth {
    pub layers: usize,
    pub with_overhead: bool,
}

impl StageDepth {
    pub fn resolve(&self, overhead: usize) -> usize {
        self.layers + if self.with_overhead { overhead } else { 0 }
    }
}

impl fmt::Display for StageDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.with_overhead {
            write!(f, "{} + c", self.layers)
        } else {
            write!(f, "{}", self.layers)
        }
    }
}

/// Depth bookkeeping for a chop plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthReport {
    /// Depth of the unchopped circuit.
    pub original: usize,
    /// One entry per executed piece `R_i U_i R†_{i-1}`.
    pub stages: Vec<StageDepth>,
    /// `c` when the test uses a GHZ ancilla register and a swap network.
    pub ghz_overhead: usize,
    /// `c` when the test uses a single ancilla.
    pub single_ancilla_overhead: usize,
}

impl DepthReport {
    /// Deepest stage, `c` left out.
    pub fn max_stage(&self) -> usize {
        self.stages.iter().map(|s| s.layers).max().unwrap_or(0)
    }

    /// Deepest stage with a concrete `c`.
    pub fn max_stage_with(&self, overhead: usize) -> usize {
        self.stages
            .iter()
            .map(|s| s.resolve(overhead))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for DepthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} + c", self.original, self.max_stage())
    }
}

/// Pieces `U_1…U_{m+1}` and reducers `R_1…R_m` of an `m`-cut split.
#[derive(Debug, Clone, PartialEq)]
pub struct ChopPlan {
    n: usize,
    pieces: Vec<Circuit>,
    reducers: Vec<Circuit>,
}

impl ChopPlan {
    pub fn new(pieces: Vec<Circuit>, reducers: Vec<Circuit>) -> Result<Self> {
        if reducers.is_empty() || pieces.len() != reducers.len() + 1 {
            return Err(Error::Precondition(format!(
                "{} pieces need {} reducers, got {}",
                pieces.len(),
                pieces.len().saturating_sub(1),
                reducers.len()
            )));
        }
        let n = pieces[0].n();
        for c in pieces.iter().chain(&reducers) {
            if c.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.n(),
                });
            }
        }
        Ok(Self {
            n,
            pieces,
            reducers,
        })
    }

    /// One cut: `U = u2 · u1`, reducer `r` inserted between them.
    pub fn single(u1: Circuit, u2: Circuit, r: Circuit) -> Result<Self> {
        Self::new(vec![u1, u2], vec![r])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cuts(&self) -> usize {
        self.reducers.len()
    }

    pub fn pieces(&self) -> &[Circuit] {
        &self.pieces
    }

    pub fn reducers(&self) -> &[Circuit] {
        &self.reducers
    }

    /// Stage `i` is `R_i U_i R†_{i-1}`, with `R_0` and `R_{m+1}` absent.
    pub fn depth_report(&self) -> DepthReport {
        let m = self.cuts();
        let stages = (0..=m)
            .map(|i| {
                let before = if i > 0 { self.reducers[i - 1].depth() } else { 0 };
                let after = if i < m { self.reducers[i].depth() } else { 0 };
                StageDepth {
                    layers: before + self.pieces[i].depth() + after,
                    with_overhead: true,
                }
            })
            .collect();
        DepthReport {
            original: self.pieces.iter().map(Circuit::depth).sum(),
            stages,
            ghz_overhead: 1,
            single_ancilla_overhead: self.n,
        }
    }

    /// `R_1 U_1 |0⟩`.
    pub fn chop_state(&self) -> Result<Statevector> {
        let mut s = Statevector::zero(self.n)?;
        s.apply_circuit(&self.pieces[0])?;
        s.apply_circuit(&self.reducers[0])?;
        Ok(s)
    }

    /// `U_{m+1} R†_m`, the part after the last chop.
    pub fn tail(&self) -> Result<Circuit> {
        let m = self.cuts();
        self.reducers[m - 1].dagger().then(&self.pieces[m])
    }

    /// `R_i U_i R†_{i-1}` for a middle piece, `1 ≤ i < m` (zero-based `i`).
    fn middle(&self, i: usize) -> Result<Circuit> {
        self.reducers[i - 1]
            .dagger()
            .then(&self.pieces[i])?
            .then(&self.reducers[i])
    }

    /// The unchopped circuit `U_{m+1} … U_1`.
    pub fn full_circuit(&self) -> Result<Circuit> {
        let mut c = self.pieces[0].clone();
        for p in &self.pieces[1..] {
            c = c.then(p)?;
        }
        Ok(c)
    }

    fn single_cut(&self) -> Result<()> {
        if self.cuts() != 1 {
            return Err(Error::Precondition(format!(
                "single-cut operation on a {}-cut plan",
                self.cuts()
            )));
        }
        Ok(())
    }
}

fn check_exact_size(n: usize) -> Result<()> {
    if n > EXACT_CHOP_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            cap: EXACT_CHOP_MAX_QUBITS,
        });
    }
    Ok(())
}

/// Row `x` of `tail`: the amplitudes `⟨x|tail|b⟩` for every `b`, obtained by
/// running `tail†` on `|x⟩` and conjugating.
fn tail_row(tail: &Circuit, x: &Bitstring) -> Result<Vec<C64>> {
    let mut s = Statevector::basis(*x)?;
    s.apply_circuit(&tail.dagger())?;
    Ok(s.amplitudes().iter().map(|a| a.conj()).collect())
}

fn check_x(n: usize, x: &Bitstring) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Full resolution-of-identity sum over every intermediate `b`.
pub fn chop_probability_exact(plan: &ChopPlan, x: &Bitstring) -> Result<f64> {
    plan.single_cut()?;
    check_exact_size(plan.n())?;
    check_x(plan.n(), x)?;
    let row = tail_row(&plan.tail()?, x)?;
    let mid = plan.chop_state()?;
    let total: C64 = row
        .iter()
        .zip(mid.amplitudes())
        .map(|(r, a)| r * a)
        .sum();
    Ok(total.norm_sqr())
}

/// How the second-half amplitudes `⟨x|U2 R†|b⟩` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum TailAmplitudes {
    #[default]
    Exact,
    /// Each amplitude replaced by a simulated Hadamard-test estimate.
    Sampled { shots: u64 },
}

/// Sum restricted to the support of `reconstructed`.
pub fn chop_probability(
    plan: &ChopPlan,
    reconstructed: &SparseState,
    x: &Bitstring,
    tail_mode: TailAmplitudes,
    rng: &mut Rng,
) -> Result<f64> {
    plan.single_cut()?;
    check_x(plan.n(), x)?;
    if reconstructed.is_empty() {
        return Err(Error::EmptySupport);
    }
    if reconstructed.n() != plan.n() {
        return Err(Error::DimensionMismatch {
            expected: plan.n(),
            got: reconstructed.n(),
        });
    }
    let row = tail_row(&plan.tail()?, x)?;
    let mut total = C64::new(0.0, 0.0);
    for (b, amp) in reconstructed.entries() {
        let w = match tail_mode {
            TailAmplitudes::Exact => row[b.index()],
            TailAmplitudes::Sampled { shots } => sample_overlap(row[b.index()], shots, rng),
        };
        total += w * amp;
    }
    Ok(total.norm_sqr())
}

/// Restricted-sum probabilities for every `x` with exact tail amplitudes.
///
/// All `x` at once: the sum over `b` for every row is the product of the
/// tail with the sparse state, so one simulation covers the whole table.
pub fn chop_distribution(plan: &ChopPlan, reconstructed: &SparseState) -> Result<Vec<f64>> {
    plan.single_cut()?;
    check_exact_size(plan.n())?;
    if reconstructed.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut s = reconstructed.to_statevector()?;
    s.apply_circuit(&plan.tail()?)?;
    Ok(s.probabilities())
}

/// Exact single-cut probabilities for every `x`.
pub fn chop_distribution_exact(plan: &ChopPlan) -> Result<Vec<f64>> {
    plan.single_cut()?;
    check_exact_size(plan.n())?;
    let mut s = plan.chop_state()?;
    s.apply_circuit(&plan.tail()?)?;
    Ok(s.probabilities())
}

/// Multi-cut contraction with everything before the final row folded in.
#[derive(Debug, Clone)]
pub struct MultiCut {
    tail: Circuit,
    folded: Vec<C64>,
}

/// `(2^n)^m` with saturation.
pub fn path_count(n: usize, cuts: usize) -> u128 {
    let bits = n.saturating_mul(cuts);
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

impl MultiCut {
    /// Builds the transfer matrices `⟨b_i|R_i U_i R†_{i-1}|b_{i-1}⟩` and folds
    /// them into the first-stage vector, in cut order.
    pub fn prepare(plan: &ChopPlan, path_cap: u128) -> Result<Self> {
        let paths = path_count(plan.n(), plan.cuts());
        if paths > path_cap {
            return Err(Error::PathCapExceeded {
                paths,
                cap: path_cap,
            });
        }
        check_exact_size(plan.n())?;
        let n = plan.n();
        let mut folded = plan.chop_state()?.amplitudes().to_vec();
        for i in 1..plan.cuts() {
            let stage = plan.middle(i)?;
            // Column `b` of the transfer matrix is `stage|b⟩`.
            let columns: Vec<Vec<C64>> = par::map_range(1 << n, |b| {
                let mut s = Statevector::basis(Bitstring::new(n, b).expect("in range"))
                    .expect("size checked");
                s.apply_circuit(&stage).expect("same register");
                s.amplitudes().to_vec()
            });
            let prev = folded;
            folded = par::map_range(1 << n, |row| {
                columns
                    .iter()
                    .zip(&prev)
                    .map(|(col, v)| col[row] * v)
                    .sum()
            });
        }
        Ok(Self {
            tail: plan.tail()?,
            folded,
        })
    }

    pub fn probability(&self, x: &Bitstring) -> Result<f64> {
        check_x(self.tail.n(), x)?;
        let row = tail_row(&self.tail, x)?;
        Ok(row
            .iter()
            .zip(&self.folded)
            .map(|(r, v)| r * v)
            .sum::<C64>()
            .norm_sqr())
    }

    pub fn distribution(&self) -> Result<Vec<f64>> {
        let n = self.tail.n();
        par::map_range(1 << n, |x| self.probability(&Bitstring::new(n, x).expect("in range")))
            .into_iter()
            .collect()
    }
}

/// Nested path sum over all intermediate bitstrings, default path cap.
pub fn multi_cut_probability(plan: &ChopPlan, x: &Bitstring) -> Result<f64> {
    MultiCut::prepare(plan, DEFAULT_PATH_CAP)?.probability(x)
}

/// Settings for [`metropolis_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetropolisConfig {
    pub steps: usize,
    pub burn_in: usize,
    /// Chance per step of proposing a uniform draw from the jump set (the
    /// initial support when given, else every bitstring) instead of a single
    /// bit flip. Zero gives the plain bit-flip chain.
    pub jump_probability: f64,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            burn_in: 1_000,
            jump_probability: 0.1,
        }
    }
}

/// Samples and bookkeeping of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisRun {
    pub samples: Vec<Bitstring>,
    pub accepted: usize,
    pub proposed: usize,
}

impl MetropolisRun {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

const COLD_START_TRIES: usize = 100;

/// Metropolis–Hastings over bitstrings using only pointwise `P̂(x)`.
///
/// Proposals mix single-bit flips with jumps into a fixed set; the Hastings
/// ratio accounts for the asymmetry when the set is not all of `{0,1}^n`.
/// Probabilities are cached, so each distinct `x` is evaluated once.
pub fn metropolis_sample<F>(
    prob: F,
    n: usize,
    config: MetropolisConfig,
    init_support: Option<&[Bitstring]>,
    rng: &mut Rng,
) -> Result<MetropolisRun>
where
    F: Fn(&Bitstring) -> f64,
{
    if config.steps <= config.burn_in {
        return Err(Error::Precondition(format!(
            "steps {} must exceed burn-in {}",
            config.steps, config.burn_in
        )));
    }
    if n == 0 || n >= usize::BITS as usize {
        return Err(Error::Precondition(format!("bad register size {n}")));
    }
    if !(0.0..=1.0).contains(&config.jump_probability) {
        return Err(Error::Precondition("jump probability outside [0, 1]".into()));
    }
    let support: Option<Vec<Bitstring>> = match init_support {
        Some([]) => return Err(Error::EmptySupport),
        Some(s) => {
            if let Some(b) = s.iter().find(|b| b.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
            let mut v = s.to_vec();
            v.sort();
            v.dedup();
            Some(v)
        }
        None => None,
    };

    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut eval = |x: &Bitstring| -> f64 {
        *cache
            .entry(x.index())
            .or_insert_with(|| prob(x).max(0.0))
    };
    let draw_jump = |rng: &mut Rng| -> Bitstring {
        match &support {
            Some(s) => s[rng.random_range(0..s.len())],
            None => Bitstring::new(n, rng.random_range(0..1usize << n)).expect("in range"),
        }
    };
    // Proposal density of reaching `to`, up to the common bit-flip term.
    let jump_density = |to: &Bitstring| -> f64 {
        match &support {
            Some(s) if s.binary_search(to).is_ok() => 1.0 / s.len() as f64,
            Some(_) => 0.0,
            None => 1.0 / (1u64 << n) as f64,
        }
    };
    let q = config.jump_probability;
    let flip_density = (1.0 - q) / n as f64;
    let density = |from: &Bitstring, to: &Bitstring| -> f64 {
        let flip = if (from.index() ^ to.index()).count_ones() == 1 {
            flip_density
        } else {
            0.0
        };
        flip + q * jump_density(to)
    };

    let mut current = None;
    for _ in 0..COLD_START_TRIES {
        let x = draw_jump(rng);
        if eval(&x) > 0.0 {
            current = Some(x);
            break;
        }
    }
    let mut x = current.ok_or(Error::ColdStart(COLD_START_TRIES))?;
    let mut px = eval(&x);

    let mut run = MetropolisRun {
        samples: Vec::with_capacity(config.steps - config.burn_in),
        accepted: 0,
        proposed: 0,
    };
    for step in 0..config.steps {
        let y = if q > 0.0 && rng.random::<f64>() < q {
            draw_jump(rng)
        } else {
            x.flipped(rng.random_range(0..n))
        };
        run.proposed += 1;
        if y != x {
            let py = eval(&y);
            let ratio = py * density(&y, &x) / (px * density(&x, &y));
            if ratio >= 1.0 || rng.random::<f64>() < ratio {
                x = y;
                px = py;
                run.accepted += 1;
            }
        } else {
            run.accepted += 1;
        }
        if step >= config.burn_in {
            run.samples.push(x);
        }
    }
    Ok(run)
}

/// Empirical frequencies of `samples` over `{0,1}^n`.
pub fn empirical_distribution(samples: &[Bitstring], n: usize) -> Vec<f64> {
    let mut freq = vec![0.0; 1 << n];
    for s in samples {
        freq[s.index()] += 1.0;
    }
    let total = samples.len().max(1) as f64;
    freq.iter_mut().for_each(|f| *f /= total);
    freq
}

/// `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{HeaAnsatz, TfimAnsatz};
    use crate::cbrank::best_rank_k_approx;
    use crate::sim::{run_circuit, Gate};

    fn ghz_prep(n: usize) -> Circuit {
        let mut layers = vec![vec![Gate::H(0)]];
        for q in 1..n {
            layers.push(vec![Gate::Cnot { control: q - 1, target: q }]);
        }
        Circuit::new(n, layers).unwrap()
    }

    fn direct(plan: &ChopPlan) -> Vec<f64> {
        run_circuit(&plan.full_circuit().unwrap(), &Statevector::zero(plan.n()).unwrap())
            .unwrap()
            .probabilities()
    }

    fn random_hea(n: usize, layers: usize, rng: &mut Rng) -> Circuit {
        let theta = (0..HeaAnsatz::num_params(n, layers))
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        HeaAnsatz::new(n, layers, theta).unwrap().circuit()
    }

    #[test]
    fn exact_chop_matches_direct() {
        let mut rng = crate::rng_from_seed(1);
        for with_reducer in [false, true] {
            let u1 = TfimAnsatz::random(4, 2, &mut rng).circuit();
            let u2 = TfimAnsatz::random(4, 2, &mut rng).circuit();
            let r = if with_reducer {
                random_hea(4, 2, &mut rng)
            } else {
                Circuit::identity(4)
            };
            let plan = ChopPlan::single(u1, u2, r).unwrap();
            let want = direct(&plan);
            for x in Bitstring::all(4) {
                let got = chop_probability_exact(&plan, &x).unwrap();
                assert!((got - want[x.index()]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ghz_chop_examples() {
        let plan = ChopPlan::single(ghz_prep(3), Circuit::identity(3), Circuit::identity(3)).unwrap();
        for x in ["000", "111"] {
            assert!((chop_probability_exact(&plan, &x.parse().unwrap()).unwrap() - 0.5).abs() < 1e-12);
        }
        let sparse = best_rank_k_approx(&plan.chop_state().unwrap(), 2).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let p = chop_probability(&plan, &sparse, &"000".parse().unwrap(), TailAmplitudes::Exact, &mut rng)
            .unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_support_restricted_equals_exact() {
        let mut rng = crate::rng_from_seed(4);
        let plan = ChopPlan::single(
            TfimAnsatz::random(3, 2, &mut rng).circuit(),
            TfimAnsatz::random(3, 2, &mut rng).circuit(),
            random_hea(3, 1, &mut rng),
        )
        .unwrap();
        let sparse = best_rank_k_approx(&plan.chop_state().unwrap(), 8).unwrap();
        let dist = chop_distribution(&plan, &sparse).unwrap();
        for x in Bitstring::all(3) {
            let exact = chop_probability_exact(&plan, &x).unwrap();
            let restricted =
                chop_probability(&plan, &sparse, &x, TailAmplitudes::Exact, &mut rng).unwrap();
            assert!((exact - restricted).abs() < 1e-12);
            assert!((dist[x.index()] - restricted).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_support_and_shape_errors() {
        assert!(ChopPlan::new(vec![Circuit::identity(2)], vec![]).is_err());
        assert!(ChopPlan::single(Circuit::identity(2), Circuit::identity(3), Circuit::identity(2)).is_err());
    }

    #[test]
    fn depth_report_headline() {
        let mut rng = crate::rng_from_seed(0);
        let (u1, u2) = TfimAnsatz::random(8, 10, &mut rng).split(5).unwrap();
        let r = HeaAnsatz::zeros(8, 2).circuit();
        let report = ChopPlan::single(u1.circuit(), u2.circuit(), r).unwrap().depth_report();
        assert_eq!(report.original, 40);
        assert_eq!(report.stages[0].layers, 24);
        assert_eq!(report.max_stage(), 24);
        assert_eq!(report.max_stage_with(report.ghz_overhead), 25);
        assert_eq!(report.max_stage_with(report.single_ancilla_overhead), 32);
        assert_eq!(report.to_string(), "40 -> 24 + c");
    }

    #[test]
    fn multi_cut_examples() {
        let mut rng = crate::rng_from_seed(8);
        let pieces: Vec<Circuit> = (0..3).map(|_| TfimAnsatz::random(3, 1, &mut rng).circuit()).collect();
        let single = ChopPlan::single(pieces[0].clone(), pieces[1].clone(), Circuit::identity(3)).unwrap();
        for x in Bitstring::all(3) {
            let a = multi_cut_probability(&single, &x).unwrap();
            assert!((a - chop_probability_exact(&single, &x).unwrap()).abs() < 1e-12);
        }
        let two = ChopPlan::new(pieces, vec![random_hea(3, 1, &mut rng), random_hea(3, 1, &mut rng)]).unwrap();
        let want = direct(&two);
        let got = MultiCut::prepare(&two, DEFAULT_PATH_CAP).unwrap().distribution().unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8);
        }
        let idle = ChopPlan::new(vec![Circuit::identity(3); 3], vec![Circuit::identity(3); 2]).unwrap();
        let d = MultiCut::prepare(&idle, DEFAULT_PATH_CAP).unwrap().distribution().unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && d[1..].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn path_cap_enforced() {
        let plan = ChopPlan::new(vec![Circuit::identity(11); 3], vec![Circuit::identity(11); 2]).unwrap();
        assert!(matches!(
            MultiCut::prepare(&plan, DEFAULT_PATH_CAP),
            Err(Error::PathCapExceeded { .. })
        ));
        assert_eq!(path_count(200, 2), u128::MAX);
    }

    #[test]
    fn metropolis_point_mass() {
        let zero = Bitstring::zeros(4);
        let run = metropolis_sample(
            |x| if *x == zero { 1.0 } else { 0.0 },
            4,
            MetropolisConfig { steps: 500, burn_in: 100, jump_probability: 0.1 },
            Some(&[zero]),
            &mut crate::rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(run.samples.len(), 400);
        assert!(run.samples.iter().all(|s| *s == zero));
    }

    #[test]
    fn metropolis_uniform_target() {
        let run = metropolis_sample(
            |_| 0.125,
            3,
            MetropolisConfig { steps: 100_000, burn_in: 1_000, jump_probability: 0.0 },
            None,
            &mut crate::rng_from_seed(1),
        )
        .unwrap();
        assert_eq!(run.acceptance_rate(), 1.0);
        let tv = total_variation(&empirical_distribution(&run.samples, 3), &[0.125; 8]);
        assert!(tv <= 0.05, "{tv}");
    }

    #[test]
    fn metropolis_ghz_mixes_with_jumps() {
        let mut target = vec![0.0; 16];
        target[0] = 0.5;
        target[15] = 0.5;
        let run = metropolis_sample(
            |x| target[x.index()],
            4,
            MetropolisConfig::default(),
            None,
            &mut crate::rng_from_seed(3),
        )
        .unwrap();
        let tv = total_variation(&empirical_distribution(&run.samples, 4), &target);
        assert!(tv <= 0.1, "{tv}");
    }

    #[test]
    fn metropolis_cold_start() {
        let err = metropolis_sample(
            |_| 0.0,
            3,
            MetropolisConfig::default(),
            None,
            &mut crate::rng_from_seed(0),
        );
        assert!(matches!(err, Err(Error::ColdStart(100))));
        let bad = metropolis_sample(
            |_| 1.0,
            3,
            MetropolisConfig { steps: 10, burn_in: 10, jump_probability: 0.0 },
            None,
            &mut crate::rng_from_seed(0),
        );
        assert!(bad.is_err());
    }
}

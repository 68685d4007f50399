//! Experiment configuration, seeded batch runs, Monte Carlo checks of the
//! two concentration bounds, and the end-to-end chop pipeline used by the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::amplitude::{
    fidelity_lower_bound, reconstruct_state, sample_overlap, FidelityBound, SparseState,
};
use crate::ansatz::{ActivationMode, TfimAnsatz};
use crate::cbrank::{budget_allows, estimate_cb_rank, exact_cb_rank, min_shots, CbEstimate};
use crate::chop::{
    chop_distribution, chop_distribution_exact, chop_probability, chop_probability_exact,
    ChopPlan, DepthReport, TailAmplitudes,
};
use crate::config::max_qubits;
use crate::error::{Error, Result};
use crate::reducer::{
    protocol_cb_max, protocol_shots, run_activation, ExperimentRecord, ReducerProblem,
    ReducerSettings,
};
use crate::sim::{Bitstring, Circuit, Gate, Statevector};
use crate::{par, rng_from_seed, split_rng, Rng};

/// Schema version accepted by [`ExperimentConfig`].
pub const CONFIG_VERSION: u32 = 1;

/// Crate version stamped on every output.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_tfim_layers() -> usize {
    10
}
fn default_reducer_layers() -> usize {
    2
}
fn default_chop_fraction() -> f64 {
    0.5
}
fn default_p_m() -> f64 {
    1e-4
}
fn default_instances() -> usize {
    10
}

/// One batch of seeded instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub n: usize,
    #[serde(default = "default_tfim_layers")]
    pub tfim_layers: usize,
    #[serde(default = "default_reducer_layers")]
    pub reducer_layers: usize,
    /// Fraction of TFIM layers placed before the chop, rounded down.
    #[serde(default = "default_chop_fraction")]
    pub chop_fraction: f64,
    pub eps: f64,
    #[serde(default = "default_p_m")]
    pub p_m: f64,
    #[serde(default = "default_schedule")]
    pub schedule: ActivationMode,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rank-estimation shots per sample set; `⌈n³/(4 eps²)⌉` when absent.
    #[serde(default)]
    pub shots: Option<u64>,
    /// Hadamard-test shots; equal to `shots` when absent.
    #[serde(default)]
    pub phase_shots: Option<u64>,
    /// Use exact amplitudes in the reconstruction.
    #[serde(default)]
    pub exact_amplitudes: bool,
    /// Stopping threshold; `⌊n³/5⌋` when absent.
    #[serde(default)]
    pub cb_max: Option<usize>,
    #[serde(default)]
    pub budgets: ReducerSettings,
}

fn default_schedule() -> ActivationMode {
    ActivationMode::Soft
}

impl ExperimentConfig {
    /// Standard protocol for `n` qubits at `eps`.
    pub fn protocol(n: usize, eps: f64) -> Self {
        Self {
            version: CONFIG_VERSION,
            n,
            tfim_layers: default_tfim_layers(),
            reducer_layers: default_reducer_layers(),
            chop_fraction: default_chop_fraction(),
            eps,
            p_m: default_p_m(),
            schedule: default_schedule(),
            instances: default_instances(),
            seed: 0,
            shots: None,
            phase_shots: None,
            exact_amplitudes: false,
            cb_max: None,
            budgets: ReducerSettings::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or_else(|| protocol_shots(self.n, self.eps))
    }

    pub fn phase_shots(&self) -> Option<u64> {
        (!self.exact_amplitudes).then(|| self.phase_shots.unwrap_or_else(|| self.shots()))
    }

    pub fn cb_max(&self) -> usize {
        self.cb_max.unwrap_or_else(|| protocol_cb_max(self.n))
    }

    /// TFIM layers before the chop.
    pub fn cut(&self) -> usize {
        (self.chop_fraction * self.tfim_layers as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.n == 0 || self.n > max_qubits() {
            return bad(format!("n = {} outside 1..={}", self.n, max_qubits()));
        }
        if self.tfim_layers == 0 || self.reducer_layers == 0 {
            return bad("layer counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.chop_fraction) {
            return bad(format!("chop_fraction {} outside [0, 1]", self.chop_fraction));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps {} outside (0, 1)", self.eps));
        }
        if !(self.p_m > 0.0 && self.p_m < 1.0) {
            return bad(format!("p_m {} outside (0, 1)", self.p_m));
        }
        if self.instances == 0 {
            return bad("instances must be positive".into());
        }
        if self.shots == Some(0) || self.phase_shots == Some(0) || self.cb_max == Some(0) {
            return bad("shot counts and cb_max must be positive".into());
        }
        if !budget_allows(self.shots(), self.eps, self.p_m) {
            return Err(Error::InsufficientBudget {
                min_shots: min_shots(self.eps, self.p_m),
            });
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON with defaults filled in.
    pub fn hash(&self) -> String {
        content_hash(self)
    }

    fn problem(&self, circuit: TfimAnsatz) -> ReducerProblem {
        ReducerProblem {
            cut: self.cut(),
            circuit,
            reducer_layers: self.reducer_layers,
            mode: self.schedule,
            eps: self.eps,
            p_m: self.p_m,
            shots: self.shots(),
            phase_shots: self.phase_shots(),
            cb_max: self.cb_max(),
            settings: self.budgets,
        }
    }
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_string(value).expect("plain data serializes");
    hex(&Sha256::digest(canonical.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Seed of instance `id` under `base`, independent of scheduling.
pub fn instance_seed(base: u64, id: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-instance digest written to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub instance_id: usize,
    pub seed: u64,
    pub t: f64,
    pub completed: bool,
    pub success: bool,
    pub failed: bool,
    pub final_k: usize,
    pub final_p: f64,
    pub estimable: bool,
    pub optimizer_invocations: usize,
    pub evaluations: usize,
    pub p_audit: bool,
    pub fidelity: Option<f64>,
    pub bound: Option<FidelityBound>,
    pub bound_holds: Option<bool>,
    pub theta: Vec<f64>,
}

/// Aggregate written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub depth: DepthReport,
    pub instances: Vec<InstanceSummary>,
    /// Final rank → number of instances.
    pub histogram: BTreeMap<usize, usize>,
    pub success_rate: f64,
    pub wall_clock_seconds: f64,
}

/// Everything a batch produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub records: Vec<ExperimentRecord>,
}

impl ExperimentOutcome {
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("instance_id,phase,t,generation,K,p,loss,estimable\n");
        for (id, rec) in self.records.iter().enumerate() {
            for row in &rec.trajectory {
                let generation = row.generation.map(|g| g.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{id},{},{},{generation},{},{},{},{}",
                    row.phase, row.t, row.loss.k, row.loss.p, row.loss.value, row.loss.estimable
                );
            }
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("K,count\n");
        for (k, c) in &self.summary.histogram {
            let _ = writeln!(out, "{k},{c}");
        }
        out
    }

    /// Write `trajectory.csv`, `histogram.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trajectory.csv"), self.trajectory_csv())?;
        fs::write(dir.join("histogram.csv"), self.histogram_csv())?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&self.summary)?,
        )?;
        Ok(())
    }
}

/// Run every instance of `config`, in parallel over `workers` threads
/// (`0` for the default pool), and optionally write the outputs.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let started = Instant::now();
    let records: Vec<Result<ExperimentRecord>> = par::with_workers(workers, || {
        par::map_range(config.instances, |id| {
            let mut rng = rng_from_seed(instance_seed(config.seed, id as u64));
            let circuit = TfimAnsatz::random(config.n, config.tfim_layers, &mut rng);
            run_activation(&config.problem(circuit), &mut rng)
        })
    });
    let records: Vec<ExperimentRecord> = records.into_iter().collect::<Result<_>>()?;

    let mut histogram = BTreeMap::new();
    let instances: Vec<InstanceSummary> = records
        .iter()
        .enumerate()
        .map(|(id, r)| {
            *histogram.entry(r.final_loss.k).or_insert(0) += 1;
            InstanceSummary {
                instance_id: id,
                seed: instance_seed(config.seed, id as u64),
                t: r.t,
                completed: r.completed,
                success: r.success,
                failed: r.failed,
                final_k: r.final_loss.k,
                final_p: r.final_loss.p,
                estimable: r.final_loss.estimable,
                optimizer_invocations: r.optimizer_invocations,
                evaluations: r.evaluations,
                p_audit: r.p_audit,
                fidelity: r.fidelity,
                bound: r.bound,
                bound_holds: r.bound_holds(),
                theta: r.theta.clone(),
            }
        })
        .collect();
    let successes = instances.iter().filter(|i| i.success).count();
    let summary = ExperimentSummary {
        artifact_version: ARTIFACT_VERSION.to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        config: config.clone(),
        depth: records[0].depth.clone(),
        histogram,
        success_rate: successes as f64 / instances.len() as f64,
        instances,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let outcome = ExperimentOutcome { summary, records };
    if let Some(dir) = out_dir {
        outcome.write(dir)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    /// Rank underestimation by the two-sample estimator.
    Lemma2,
    /// Reconstruction fidelity below its guaranteed value.
    Lemma3,
}

/// States used by the bound checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StateFamily {
    /// `|0…0⟩`.
    Basis,
    Ghz,
    /// Top `head` entries share `1 - tail` of the mass, the rest share `tail`.
    TailHeavy { head: usize, tail: f64 },
    /// Fresh random TFIM circuit with `layers` layers per trial.
    Tfim { layers: usize },
}

/// Monte Carlo setup for [`verify_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub which: Lemma,
    pub trials: usize,
    pub n: usize,
    pub eps: f64,
    pub p_m: f64,
    pub shots: u64,
    pub phase_shots: u64,
    pub state: StateFamily,
    pub seed: u64,
}

impl VerifyConfig {
    /// Stress defaults at `n = 6`: a tail-heavy state for the rank bound and
    /// random half-depth TFIM states for the reconstruction bound.
    pub fn standard(which: Lemma, trials: usize) -> Self {
        let (eps, state) = match which {
            Lemma::Lemma2 => (0.05, StateFamily::TailHeavy { head: 8, tail: 0.07 }),
            Lemma::Lemma3 => (0.08, StateFamily::Tfim { layers: 5 }),
        };
        let shots = protocol_shots(6, eps);
        Self {
            which,
            trials,
            n: 6,
            eps,
            p_m: 1e-4,
            shots,
            phase_shots: shots,
            state,
            seed: 0,
        }
    }
}

/// Result of a bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub which: Lemma,
    pub trials: usize,
    /// Trials whose estimate was accepted (`F = true`).
    pub accepted: usize,
    pub violations: usize,
    /// `violations / accepted`.
    pub empirical_rate: f64,
    /// Mean analytic bound over accepted trials.
    pub analytic_bound: f64,
    /// `P(X ≥ violations)` for `X ~ Bin(accepted, analytic_bound)`.
    pub p_value: f64,
    pub pass: bool,
    pub artifact_version: String,
    pub seed: u64,
}

/// One-sided binomial test of "rate ≤ bound" at confidence 0.99: passes
/// unless seeing this many violations would be below 1% likely.
pub fn binomial_upper_tail(trials: usize, bound: f64, violations: usize) -> f64 {
    if violations == 0 {
        return 1.0;
    }
    if bound <= 0.0 {
        return 0.0;
    }
    let dist = Binomial::new(bound.min(1.0), trials as u64).expect("valid binomial");
    dist.sf(violations as u64 - 1)
}

fn family_state(family: StateFamily, n: usize, rng: &mut Rng) -> Result<Statevector> {
    match family {
        StateFamily::Basis => Statevector::zero(n),
        StateFamily::Ghz => {
            let mut s = Statevector::zero(n)?;
            s.apply_gate(&Gate::H(0))?;
            for q in 1..n {
                s.apply_gate(&Gate::Cnot { control: q - 1, target: q })?;
            }
            Ok(s)
        }
        StateFamily::TailHeavy { head, tail } => {
            let dim = 1usize << n;
            if head == 0 || head >= dim || !(0.0..1.0).contains(&tail) {
                return Err(Error::Config("tail-heavy state needs 0 < head < 2^n, tail in [0, 1)".into()));
            }
            let mut amps = Vec::with_capacity(dim);
            for i in 0..dim {
                let mass = if i < head {
                    (1.0 - tail) / head as f64
                } else {
                    tail / (dim - head) as f64
                };
                let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                amps.push(C64::from_polar(mass.sqrt(), phase));
            }
            Statevector::from_amplitudes(amps)
        }
        StateFamily::Tfim { layers } => {
            let mut s = Statevector::zero(n)?;
            s.apply_circuit(&TfimAnsatz::random(n, layers, rng).circuit())?;
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    accepted: bool,
    violated: bool,
    bound: f64,
}

/// Monte Carlo check of one concentration bound.
pub fn verify_bounds(config: &VerifyConfig, workers: usize) -> Result<BoundReport> {
    if config.trials < 100 {
        return Err(Error::Precondition(format!(
            "need at least 100 trials, got {}",
            config.trials
        )));
    }
    if config.n == 0 || config.n > max_qubits() {
        return Err(Error::Config(format!("n = {} outside 1..={}", config.n, max_qubits())));
    }
    if config.shots == 0 || config.phase_shots == 0 {
        return Err(Error::Config("shot counts must be positive".into()));
    }
    // The fixed-state families only need their exact rank once.
    let fixed = match config.state {
        StateFamily::Tfim { .. } => None,
        family => {
            let s = family_state(family, config.n, &mut rng_from_seed(config.seed))?;
            let rank = exact_cb_rank(&s, config.eps)?;
            Some((s, rank))
        }
    };
    let trials: Vec<Result<Trial>> = par::with_workers(workers, || {
        par::map_range(config.trials, |i| {
            let mut rng = rng_from_seed(instance_seed(config.seed, i as u64));
            let (state, rank) = match &fixed {
                Some((s, r)) => (s.clone(), *r),
                None => {
                    let s = family_state(config.state, config.n, &mut rng)?;
                    let r = exact_cb_rank(&s, config.eps)?;
                    (s, r)
                }
            };
            let est = estimate_cb_rank(&state, config.shots, config.eps, config.p_m, &mut rng)?;
            if !est.success {
                return Ok(Trial {
                    accepted: false,
                    violated: false,
                    bound: 0.0,
                });
            }
            let violated = match config.which {
                Lemma::Lemma2 => est.k < rank,
                Lemma::Lemma3 => {
                    let amps: Vec<C64> = est
                        .retained()
                        .iter()
                        .map(|e| sample_overlap(state.amplitudes()[e.bitstring.index()], config.phase_shots, &mut rng))
                        .collect();
                    let bound = fidelity_lower_bound(config.eps, est.k, config.phase_shots, est.residual, config.shots)?;
                    match reconstruct_state(&est, &amps) {
                        Ok(r) => r.fidelity_with(&state)? < bound.value,
                        Err(Error::DegenerateState(_)) => bound.value > 0.0,
                        Err(e) => return Err(e),
                    }
                }
            };
            Ok(Trial {
                accepted: true,
                violated,
                bound: est.p,
            })
        })
    });
    let trials: Vec<Trial> = trials.into_iter().collect::<Result<_>>()?;
    let accepted = trials.iter().filter(|t| t.accepted).count();
    let violations = trials.iter().filter(|t| t.violated).count();
    let analytic_bound = if accepted == 0 {
        0.0
    } else {
        trials.iter().filter(|t| t.accepted).map(|t| t.bound).sum::<f64>() / accepted as f64
    };
    let p_value = binomial_upper_tail(accepted, analytic_bound, violations);
    Ok(BoundReport {
        which: config.which,
        trials: config.trials,
        accepted,
        violations,
        empirical_rate: if accepted == 0 {
            0.0
        } else {
            violations as f64 / accepted as f64
        },
        analytic_bound,
        p_value,
        pass: p_value >= 0.01,
        artifact_version: ARTIFACT_VERSION.to_string(),
        seed: config.seed,
    })
}

/// Which output bitstrings to report.
#[derive(Debug, Clone, PartialEq)]
pub enum Outputs {
    All,
    Some(Vec<Bitstring>),
}

/// Inputs of the end-to-end chop estimate.
#[derive(Debug, Clone)]
pub struct ChopRequest {
    /// Circuit before the chop.
    pub u1: Circuit,
    /// Circuit after the chop.
    pub u2: Circuit,
    /// `None` for the identity.
    pub reducer: Option<Circuit>,
    pub outputs: Outputs,
    pub eps: f64,
    pub p_m: f64,
    /// Rank-estimation shots; protocol value when absent.
    pub shots: Option<u64>,
    /// Hadamard-test shots; `shots` when absent.
    pub phase_shots: Option<u64>,
    /// Full resolution-of-identity sum instead of the estimate.
    pub exact: bool,
    pub seed: u64,
}

/// Result of [`chop_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChopReport {
    pub artifact_version: String,
    pub seed: u64,
    pub n: usize,
    pub exact: bool,
    pub depth: DepthReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<CbEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<FidelityBound>,
    /// Estimated probabilities.
    pub probabilities: BTreeMap<Bitstring, f64>,
    /// Direct simulation, when `n ≤ 10`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<BTreeMap<Bitstring, f64>>,
    /// `Σ_x |P̂(x) - P(x)|` over the reported bitstrings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_error: Option<f64>,
    /// `2 √(1 - bound)`, the largest `l1_error` the bound allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_allowed: Option<f64>,
    #[serde(skip)]
    pub reconstructed: Option<SparseState>,
}

/// Largest register for which the pipeline also reports the direct reference.
pub const REFERENCE_MAX_QUBITS: usize = 10;

/// Rank estimation, Hadamard tests on the retained support and restricted
/// recombination; or the full exact sum when `exact` is set.
pub fn chop_pipeline(req: &ChopRequest) -> Result<ChopReport> {
    let n = req.u1.n();
    let reducer = req.reducer.clone().unwrap_or_else(|| Circuit::identity(n));
    let plan = ChopPlan::single(req.u1.clone(), req.u2.clone(), reducer)?;
    let xs: Vec<Bitstring> = match &req.outputs {
        Outputs::All => Bitstring::all(n).collect(),
        Outputs::Some(v) => v.clone(),
    };
    let mut rng = rng_from_seed(req.seed);

    let (probabilities, estimate, bound, reconstructed) = if req.exact {
        let probs = if matches!(req.outputs, Outputs::All) {
            chop_distribution_exact(&plan)?
                .into_iter()
                .enumerate()
                .map(|(i, p)| (Bitstring::new(n, i).expect("in range"), p))
                .collect()
        } else {
            xs.iter()
                .map(|x| Ok((*x, chop_probability_exact(&plan, x)?)))
                .collect::<Result<BTreeMap<_, _>>>()?
        };
        (probs, None, None, None)
    } else {
        let shots = req.shots.unwrap_or_else(|| protocol_shots(n, req.eps));
        let phase_shots = req.phase_shots.unwrap_or(shots);
        let mid = plan.chop_state()?;
        let est = estimate_cb_rank(&mid, shots, req.eps, req.p_m, &mut rng)?;
        let mut amp_rng = split_rng(&mut rng);
        let amps: Vec<C64> = est
            .retained()
            .iter()
            .map(|e| sample_overlap(mid.amplitudes()[e.bitstring.index()], phase_shots, &mut amp_rng))
            .collect();
        let sparse = reconstruct_state(&est, &amps)?;
        let bound = fidelity_lower_bound(req.eps, est.k, phase_shots, est.residual, shots).ok();
        let probs = if matches!(req.outputs, Outputs::All) {
            chop_distribution(&plan, &sparse)?
                .into_iter()
                .enumerate()
                .map(|(i, p)| (Bitstring::new(n, i).expect("in range"), p))
                .collect()
        } else {
            xs.iter()
                .map(|x| {
                    Ok((*x, chop_probability(&plan, &sparse, x, TailAmplitudes::Exact, &mut rng)?))
                })
                .collect::<Result<BTreeMap<_, _>>>()?
        };
        (probs, Some(est), bound, Some(sparse))
    };

    let reference = if n <= REFERENCE_MAX_QUBITS {
        let mut s = Statevector::zero(n)?;
        s.apply_circuit(&req.u1)?;
        s.apply_circuit(&req.u2)?;
        Some(
            xs.iter()
                .map(|x| Ok((*x, s.probability(x)?)))
                .collect::<Result<BTreeMap<_, _>>>()?,
        )
    } else {
        None
    };
    let l1_error = reference.as_ref().map(|r| {
        r.iter()
            .map(|(x, p)| (probabilities[x] - p).abs())
            .sum::<f64>()
    });
    Ok(ChopReport {
        artifact_version: ARTIFACT_VERSION.to_string(),
        seed: req.seed,
        n,
        exact: req.exact,
        depth: plan.depth_report(),
        estimate,
        l1_allowed: bound.map(|b| 2.0 * (1.0 - b.value).max(0.0).sqrt()),
        bound,
        probabilities,
        reference,
        l1_error,
        reconstructed,
    })
}

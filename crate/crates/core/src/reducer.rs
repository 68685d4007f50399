//! Gradually activated reducer optimization.
//!
//! The first half of the circuit is switched on step by step. Whenever the
//! estimated rank of the intermediate state reaches the stopping threshold,
//! the reducer parameters are optimized with the evolution strategy until the
//! rank drops well below it again.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amplitude::{
    fidelity_lower_bound, reconstruct_state, sample_overlap, FidelityBound, SparseState,
};
use crate::ansatz::{build_hea, soft_activated_from, ActivationMode, HeaAnsatz, TfimAnsatz};
use crate::cbrank::{budget_allows, estimate_cb_rank, min_shots, CbEstimate};
use crate::chop::{ChopPlan, DepthReport};
use crate::error::{Error, Result};
use crate::es::{EsState, Fitness};
use crate::sim::{Circuit, Statevector};
use crate::{split_rng, Rng};

/// Offset placing every non-estimable result behind every estimable one
/// when the strategy ranks candidates.
const NON_ESTIMABLE_SCORE: f64 = 1e9;

/// Rank estimate turned into the optimizer's cost `K - ln(1 - p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub k: usize,
    pub p: f64,
    /// `K - ln(1 - p)`; infinite when `p = 1`.
    pub value: f64,
    pub estimable: bool,
    /// Distinct first-set outcomes.
    pub distinct: usize,
    pub residual: u64,
    pub shots: u64,
}

impl LossValue {
    pub fn from_estimate(est: &CbEstimate) -> Self {
        let rank = if est.success { est.k } else { est.distinct() };
        Self {
            k: rank,
            p: est.p,
            value: rank as f64 - (-est.p).ln_1p(),
            estimable: est.success,
            distinct: est.distinct(),
            residual: est.residual,
            shots: est.shots,
        }
    }
}

impl Fitness for LossValue {
    /// Finite ranking key. Estimable results rank by `value`; the rest sit
    /// above all of them, ordered by distinct outcomes and then residual.
    fn score(&self) -> f64 {
        if self.estimable {
            self.value
        } else {
            NON_ESTIMABLE_SCORE + self.distinct as f64 + self.residual as f64 / self.shots.max(1) as f64
        }
    }
}

/// Everything a single loss evaluation needs besides the state and `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossContext {
    pub n: usize,
    pub reducer_layers: usize,
    pub shots: u64,
    pub eps: f64,
    pub p_m: f64,
}

impl LossContext {
    pub fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Precondition(format!("eps = {} outside (0, 1)", self.eps)));
        }
        if !(self.p_m > 0.0 && self.p_m < 1.0) {
            return Err(Error::Precondition(format!("p_m = {} outside (0, 1)", self.p_m)));
        }
        if self.shots == 0 {
            return Err(Error::Precondition("need at least one shot".into()));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        HeaAnsatz::num_params(self.n, self.reducer_layers)
    }

    pub fn reducer(&self, theta: &[f64]) -> Result<Circuit> {
        build_hea(self.n, self.reducer_layers, theta)
    }

    /// Loss of `R(θ)` applied to an already activated state.
    pub fn evaluate(&self, theta: &[f64], activated: &Statevector, rng: &mut Rng) -> Result<LossValue> {
        let mut s = activated.clone();
        s.apply_circuit(&self.reducer(theta)?)?;
        let est = estimate_cb_rank(&s, self.shots, self.eps, self.p_m, rng)?;
        Ok(LossValue::from_estimate(&est))
    }
}

/// Loss at activation `t` of `u1` in the given mode.
pub fn loss(
    theta: &[f64],
    t: f64,
    u1: &TfimAnsatz,
    mode: ActivationMode,
    ctx: &LossContext,
    rng: &mut Rng,
) -> Result<LossValue> {
    ctx.check()?;
    let state = crate::ansatz::ActivationPath { mode, t }.state(u1)?;
    ctx.evaluate(theta, &state, rng)
}

/// Knobs of the activation and optimization loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReducerSettings {
    /// Base activation step in soft mode.
    pub dt: f64,
    /// Smallest step is `dt / min_dt_divisor`.
    pub min_dt_divisor: u32,
    /// A rank jump by more than this factor between consecutive `t` counts
    /// as an overshoot.
    pub overshoot_factor: f64,
    /// Optimization stops once the best rank is at most this fraction of the threshold.
    pub resume_fraction: f64,
    /// Generations without improvement before an optimization gives up.
    pub stall_window: usize,
    /// Loss evaluations allowed per optimizer invocation.
    pub optimizer_evaluations: usize,
    /// Loss evaluations allowed for a whole instance.
    pub instance_evaluations: usize,
    /// Generations of the bounded pass after each parametric activation.
    pub periodic_generations: usize,
}

impl Default for ReducerSettings {
    fn default() -> Self {
        Self {
            dt: 0.01,
            min_dt_divisor: 64,
            overshoot_factor: 2.0,
            resume_fraction: 0.8,
            stall_window: 20,
            optimizer_evaluations: 4000,
            instance_evaluations: 400_000,
            periodic_generations: 10,
        }
    }
}

/// Why an optimizer invocation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Best rank at or below the resume threshold.
    Resumed,
    Stalled,
    BudgetExhausted,
    /// Fixed number of generations completed (periodic pass).
    Completed,
}

/// Best-of-generation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub loss: LossValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub theta: Vec<f64>,
    /// Loss of `theta`, if it was ever evaluated.
    pub best: Option<LossValue>,
    pub trajectory: Vec<GenerationRecord>,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Ends at or above the threshold, or not estimable.
    pub failed: bool,
}

/// Limits of one optimizer invocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeLimits {
    pub evaluations: usize,
    pub max_generations: Option<usize>,
    pub stall_window: usize,
    /// Stop as soon as an estimable rank at or below this is found.
    pub resume_rank: Option<usize>,
    pub cb_max: usize,
}

/// Evolution-strategy minimization of the loss over reducer parameters,
/// starting from `theta0` with step size `eps` and identity covariance.
///
/// `theta0` is evaluated first so the result is never worse than the start.
pub fn optimize_reducer(
    activated: &Statevector,
    theta0: &[f64],
    ctx: &LossContext,
    limits: OptimizeLimits,
    rng: &mut Rng,
) -> Result<OptimizeOutcome> {
    ctx.check()?;
    if !budget_allows(ctx.shots, ctx.eps, ctx.p_m) {
        return Err(Error::InsufficientBudget {
            min_shots: min_shots(ctx.eps, ctx.p_m),
        });
    }
    if theta0.len() != ctx.num_params() {
        return Err(Error::ParameterLength {
            expected: ctx.num_params(),
            got: theta0.len(),
        });
    }
    let fails = |l: &Option<LossValue>| match l {
        Some(l) => !l.estimable || l.k >= limits.cb_max,
        None => true,
    };
    if limits.evaluations == 0 {
        return Ok(OptimizeOutcome {
            theta: theta0.to_vec(),
            best: None,
            trajectory: Vec::new(),
            evaluations: 0,
            stop: StopReason::BudgetExhausted,
            failed: true,
        });
    }

    let start = ctx.evaluate(theta0, activated, rng)?;
    let mut best_theta = theta0.to_vec();
    let mut best = start;
    let mut evaluations = 1;
    let mut trajectory = Vec::new();
    let done = |l: &LossValue| {
        limits
            .resume_rank
            .is_some_and(|r| l.estimable && l.k <= r)
    };
    if done(&best) {
        return Ok(OptimizeOutcome {
            theta: best_theta,
            best: Some(best),
            trajectory,
            evaluations,
            stop: StopReason::Resumed,
            failed: fails(&Some(best)),
        });
    }

    let mut es = EsState::new(theta0.to_vec(), ctx.eps)?;
    let lambda = es.params().lambda;
    let mut since_improvement = 0;
    let stop = loop {
        if evaluations + lambda > limits.evaluations {
            break StopReason::BudgetExhausted;
        }
        if limits.max_generations.is_some_and(|g| es.generation() >= g) {
            break StopReason::Completed;
        }
        let generation = es.step(
            |theta: &[f64], r: &mut Rng| {
                ctx.evaluate(theta, activated, r)
                    .expect("context validated and parameter length fixed")
            },
            rng,
        );
        evaluations += lambda;
        let top = generation.best();
        trajectory.push(GenerationRecord {
            generation: generation.index,
            loss: top.value,
        });
        if top.value.score() < best.score() {
            best = top.value;
            best_theta = top.theta.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if done(&best) {
            break StopReason::Resumed;
        }
        if since_improvement >= limits.stall_window {
            break StopReason::Stalled;
        }
    };
    Ok(OptimizeOutcome {
        theta: best_theta,
        best: Some(best),
        trajectory,
        evaluations,
        stop,
        failed: fails(&Some(best)),
    })
}

/// One instance of the full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerProblem {
    /// The whole circuit `U`; it is chopped after `cut` layers.
    pub circuit: TfimAnsatz,
    pub cut: usize,
    pub reducer_layers: usize,
    pub mode: ActivationMode,
    pub eps: f64,
    pub p_m: f64,
    /// Shots per sample set of the rank estimator.
    pub shots: u64,
    /// Hadamard-test shots per real/imaginary component; `None` uses exact amplitudes.
    pub phase_shots: Option<u64>,
    /// Stopping threshold on the estimated rank.
    pub cb_max: usize,
    pub settings: ReducerSettings,
}

/// `⌊n³/5⌋`.
pub fn protocol_cb_max(n: usize) -> usize {
    n.pow(3) / 5
}

/// `⌈n³ / (4 eps²)⌉`, with a little slack against rounding up exact integers.
pub fn protocol_shots(n: usize, eps: f64) -> u64 {
    let raw = n.pow(3) as f64 / (4.0 * eps * eps);
    (raw - 1e-9).ceil().max(1.0) as u64
}

impl ReducerProblem {
    /// Standard setup: chop in the middle, two reducer layers, `p_m = 1e-4`,
    /// `M = ⌈n³/(4 eps²)⌉` for both stages and threshold `⌊n³/5⌋`.
    pub fn protocol(circuit: TfimAnsatz, eps: f64, mode: ActivationMode) -> Self {
        let n = circuit.n;
        let shots = protocol_shots(n, eps);
        Self {
            cut: circuit.layers / 2,
            circuit,
            reducer_layers: 2,
            mode,
            eps,
            p_m: 1e-4,
            shots,
            phase_shots: Some(shots),
            cb_max: protocol_cb_max(n),
            settings: ReducerSettings::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.circuit.n
    }

    pub fn context(&self) -> LossContext {
        LossContext {
            n: self.n(),
            reducer_layers: self.reducer_layers,
            shots: self.shots,
            eps: self.eps,
            p_m: self.p_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.context().check()?;
        if self.cut > self.circuit.layers {
            return Err(Error::Precondition(format!(
                "cut {} beyond {} layers",
                self.cut, self.circuit.layers
            )));
        }
        if self.cb_max == 0 {
            return Err(Error::Precondition("stopping threshold must be positive".into()));
        }
        if self.phase_shots == Some(0) {
            return Err(Error::Precondition("phase shots must be positive".into()));
        }
        let s = &self.settings;
        if !(s.dt > 0.0 && s.dt <= 1.0) || s.min_dt_divisor == 0 {
            return Err(Error::Precondition(format!("activation step {} invalid", s.dt)));
        }
        if !(s.resume_fraction > 0.0 && s.resume_fraction <= 1.0) {
            return Err(Error::Precondition("resume fraction outside (0, 1]".into()));
        }
        if !budget_allows(self.shots, self.eps, self.p_m) {
            return Err(Error::InsufficientBudget {
                min_shots: min_shots(self.eps, self.p_m),
            });
        }
        Ok(())
    }

    /// `⌊resume_fraction · cb_max⌋`.
    pub fn resume_rank(&self) -> usize {
        (self.settings.resume_fraction * self.cb_max as f64).floor() as usize
    }

    fn halves(&self) -> Result<(TfimAnsatz, TfimAnsatz)> {
        self.circuit.split(self.cut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Activate,
    Optimize,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Activate => "activate",
            Phase::Optimize => "optimize",
        })
    }
}

/// One row of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub phase: Phase,
    pub t: f64,
    /// Generation inside the current optimizer invocation.
    pub generation: Option<usize>,
    pub loss: LossValue,
}

/// Soft-mode activation bookkeeping: current `t`, step and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationController {
    pub mode: ActivationMode,
    pub t: f64,
    pub dt: f64,
    base_dt: f64,
    min_dt: f64,
    last_t: f64,
    pub cb_max: usize,
    pub history: Vec<TrajectoryRow>,
}

impl ActivationController {
    pub fn new(mode: ActivationMode, dt: f64, min_dt_divisor: u32, cb_max: usize) -> Self {
        Self {
            mode,
            t: 0.0,
            dt,
            base_dt: dt,
            min_dt: dt / min_dt_divisor as f64,
            last_t: 0.0,
            cb_max,
            history: Vec::new(),
        }
    }

    pub fn at_end(&self) -> bool {
        self.t >= 1.0
    }

    /// Step forward, landing exactly on 1 at the end.
    pub fn advance(&mut self) {
        self.last_t = self.t;
        let next = self.t + self.dt;
        self.t = if next > 1.0 - 1e-12 { 1.0 } else { next };
    }

    /// Undo the last step with half the step size. False once the step is
    /// already at its minimum or nothing can be undone.
    pub fn retreat(&mut self) -> bool {
        if self.t <= self.last_t || self.dt / 2.0 < self.min_dt - 1e-15 {
            return false;
        }
        self.dt /= 2.0;
        self.t = self.last_t;
        self.advance();
        true
    }

    pub fn reset_step(&mut self) {
        self.dt = self.base_dt;
    }

    pub fn record(&mut self, phase: Phase, generation: Option<usize>, loss: LossValue) {
        self.history.push(TrajectoryRow {
            phase,
            t: self.t,
            generation,
            loss,
        });
    }
}

/// Outcome of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// Activation reached when the run ended.
    pub t: f64,
    /// Whether the run reached full activation.
    pub completed: bool,
    /// Non-estimable after a full optimization, or instance budget exhausted.
    pub failed: bool,
    /// Last rank estimate of the final state.
    pub final_loss: LossValue,
    /// Completed with an estimable final rank at or below the threshold.
    pub success: bool,
    pub theta: Vec<f64>,
    pub optimizer_invocations: usize,
    pub evaluations: usize,
    /// Every accepted estimate along the way had `p < p_m`.
    pub p_audit: bool,
    /// `|⟨R U1 0|ψ_K⟩|²` against the reconstruction.
    pub fidelity: Option<f64>,
    pub bound: Option<FidelityBound>,
    pub reconstructed_rank: Option<usize>,
    pub depth: DepthReport,
    pub trajectory: Vec<TrajectoryRow>,
    #[serde(skip)]
    pub reconstructed: Option<SparseState>,
}

impl ExperimentRecord {
    /// Fidelity at or above its own bound, when both exist.
    pub fn bound_holds(&self) -> Option<bool> {
        Some(self.fidelity? >= self.bound?.value)
    }
}

struct Run<'a> {
    problem: &'a ReducerProblem,
    ctx: LossContext,
    theta: Vec<f64>,
    evaluations: usize,
    invocations: usize,
    p_audit: bool,
    exhausted: bool,
}

impl Run<'_> {
    fn remaining(&self) -> usize {
        self.problem
            .settings
            .instance_evaluations
            .saturating_sub(self.evaluations)
    }

    fn audit(&mut self, l: &LossValue) {
        if l.estimable && l.p >= self.problem.p_m {
            self.p_audit = false;
        }
    }

    fn estimate(&mut self, state: &Statevector, rng: &mut Rng) -> Result<Option<LossValue>> {
        if self.remaining() == 0 {
            self.exhausted = true;
            return Ok(None);
        }
        let l = self.ctx.evaluate(&self.theta, state, rng)?;
        self.evaluations += 1;
        self.audit(&l);
        Ok(Some(l))
    }

    fn optimize(
        &mut self,
        state: &Statevector,
        ctl: &mut ActivationController,
        periodic: bool,
        rng: &mut Rng,
    ) -> Result<OptimizeOutcome> {
        let s = &self.problem.settings;
        let budget = s.optimizer_evaluations.min(self.remaining());
        let limits = OptimizeLimits {
            evaluations: budget,
            max_generations: periodic.then_some(s.periodic_generations),
            stall_window: s.stall_window,
            resume_rank: (!periodic).then(|| self.problem.resume_rank()),
            cb_max: self.problem.cb_max,
        };
        let out = optimize_reducer(state, &self.theta, &self.ctx, limits, rng)?;
        self.invocations += 1;
        self.evaluations += out.evaluations;
        if budget < s.optimizer_evaluations && out.stop == StopReason::BudgetExhausted {
            self.exhausted = true;
        }
        for rec in &out.trajectory {
            self.audit(&rec.loss);
            ctl.record(Phase::Optimize, Some(rec.generation), rec.loss);
        }
        self.theta = out.theta.clone();
        Ok(out)
    }
}

fn breached(l: &LossValue, cb_max: usize) -> bool {
    !l.estimable || l.k >= cb_max
}

/// Run gradual activation with reducer optimization, then reconstruct the
/// chop state and compare with the exact one.
pub fn run_activation(problem: &ReducerProblem, rng: &mut Rng) -> Result<ExperimentRecord> {
    problem.validate()?;
    let (u1, u2) = problem.halves()?;
    let n = problem.n();
    let s = problem.settings;
    let mut ctl = ActivationController::new(problem.mode, s.dt, s.min_dt_divisor, problem.cb_max);
    let mut run = Run {
        problem,
        ctx: problem.context(),
        theta: vec![0.0; HeaAnsatz::num_params(n, problem.reducer_layers)],
        evaluations: 0,
        invocations: 0,
        p_audit: true,
        exhausted: false,
    };
    let mut failed = false;
    let mut last: Option<LossValue> = None;
    let final_state;

    match problem.mode {
        ActivationMode::Soft => {
            let mut full = Statevector::zero(n)?;
            full.apply_circuit(&u1.circuit())?;
            let mut prev: Option<LossValue> = None;
            let mut state;
            loop {
                state = soft_activated_from(&full, ctl.t)?;
                let Some(l) = run.estimate(&state, rng)? else { break };
                ctl.record(Phase::Activate, None, l);
                last = Some(l);
                if breached(&l, problem.cb_max) {
                    let overshoot = prev.is_some_and(|p| {
                        p.estimable
                            && (!l.estimable || l.k as f64 > s.overshoot_factor * p.k as f64)
                    });
                    if overshoot && ctl.retreat() {
                        continue;
                    }
                    let out = run.optimize(&state, &mut ctl, false, rng)?;
                    last = out.best;
                    ctl.reset_step();
                    if run.exhausted {
                        break;
                    }
                    if out.stop == StopReason::BudgetExhausted
                        && out.best.is_some_and(|b| !b.estimable)
                    {
                        failed = true;
                        break;
                    }
                    prev = out.best;
                } else {
                    prev = Some(l);
                }
                if ctl.at_end() {
                    break;
                }
                ctl.advance();
            }
            // Final pass at full activation unless the rank already sits
            // comfortably below the threshold.
            if ctl.at_end() && !failed && !run.exhausted {
                if let Some(l) = last {
                    if !l.estimable || l.k > problem.resume_rank() {
                        let out = run.optimize(&state, &mut ctl, false, rng)?;
                        last = out.best;
                        if out.stop == StopReason::BudgetExhausted
                            && out.best.is_some_and(|b| !b.estimable)
                        {
                            failed = true;
                        }
                    }
                }
            }
            final_state = full;
        }
        ActivationMode::Parametric => {
            let total = u1.phi.len();
            let mut state = Statevector::zero(n)?;
            for k in 1..=total {
                ctl.t = k as f64 / total as f64;
                state = Statevector::zero(n)?;
                state.apply_circuit(&u1.partially_active(k))?;
                let Some(l) = run.estimate(&state, rng)? else { break };
                ctl.record(Phase::Activate, None, l);
                last = Some(l);
                let full_pass = breached(&l, problem.cb_max);
                let out = run.optimize(&state, &mut ctl, !full_pass, rng)?;
                if out.best.is_some() {
                    last = out.best;
                }
                if run.exhausted {
                    break;
                }
                if full_pass
                    && out.stop == StopReason::BudgetExhausted
                    && out.best.is_some_and(|b| !b.estimable)
                {
                    failed = true;
                    break;
                }
            }
            if total == 0 {
                ctl.t = 1.0;
                let l = run.estimate(&state, rng)?;
                if let Some(l) = l {
                    ctl.record(Phase::Activate, None, l);
                }
                last = l;
            }
            final_state = state;
        }
    }

    failed |= run.exhausted;
    let completed = ctl.at_end() && !failed;
    let reducer = run.ctx.reducer(&run.theta)?;
    let plan = ChopPlan::single(u1.circuit(), u2.circuit(), reducer.clone())?;
    let final_loss = last.ok_or_else(|| Error::Precondition("no estimate was made".into()))?;

    // Reconstruction against the exact chop state R(θ*) U1 |0⟩ of the
    // activation actually reached.
    let mut chop_state = final_state.clone();
    if problem.mode == ActivationMode::Soft && !ctl.at_end() {
        chop_state = soft_activated_from(&final_state, ctl.t)?;
    }
    chop_state.apply_circuit(&reducer)?;
    let est = estimate_cb_rank(&chop_state, problem.shots, problem.eps, problem.p_m, &mut split_rng(rng))?;
    // Hadamard-test estimates of the retained amplitudes, drawn from the
    // exact values (statistically the same as running the ancilla circuit).
    let mut local = split_rng(rng);
    let amps = est
        .retained()
        .iter()
        .map(|e| {
            let a = chop_state.amplitude(&e.bitstring)?;
            Ok(match problem.phase_shots {
                Some(shots) => sample_overlap(a, shots, &mut local),
                None => a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (reconstructed, fidelity) = match reconstruct_state(&est, &amps) {
        Ok(r) => {
            let f = r.fidelity_with(&chop_state)?;
            (Some(r), Some(f))
        }
        Err(Error::DegenerateState(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let bound = fidelity_lower_bound(
        problem.eps,
        est.k,
        problem.phase_shots.unwrap_or(u64::MAX),
        est.residual,
        problem.shots,
    )
    .ok();

    Ok(ExperimentRecord {
        t: ctl.t,
        completed,
        failed,
        success: completed && final_loss.estimable && final_loss.k <= problem.cb_max,
        final_loss,
        theta: run.theta,
        optimizer_invocations: run.invocations,
        evaluations: run.evaluations,
        p_audit: run.p_audit,
        fidelity,
        bound,
        reconstructed_rank: Some(est.k),
        depth: plan.depth_report(),
        trajectory: ctl.history,
        reconstructed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Gate;

    fn ctx(n: usize, shots: u64, eps: f64) -> LossContext {
        LossContext {
            n,
            reducer_layers: 1,
            shots,
            eps,
            p_m: 1e-4,
        }
    }

    #[test]
    fn protocol_constants() {
        assert_eq!(protocol_cb_max(8), 102);
        assert_eq!(protocol_cb_max(6), 43);
        assert_eq!(protocol_shots(8, 0.08), 20_000);
        assert_eq!(protocol_shots(6, 0.08), 8_438);
        assert_eq!(protocol_shots(6, 0.02), 135_000);
        assert_eq!(protocol_shots(8, 0.05), 51_200);
    }

    #[test]
    fn loss_at_origin() {
        let u1 = TfimAnsatz::random(3, 2, &mut crate::rng_from_seed(0));
        let c = ctx(3, 2000, 0.05);
        let theta = vec![0.0; c.num_params()];
        let l = loss(&theta, 0.0, &u1, ActivationMode::Soft, &c, &mut crate::rng_from_seed(1)).unwrap();
        assert_eq!(l.k, 1);
        assert!(l.estimable);
        let p = (-2.0f64 * 2000.0 * 0.05 * 0.05).exp();
        assert!((l.value - (1.0 - (1.0 - p).ln())).abs() < 1e-12);
    }

    #[test]
    fn loss_ordering() {
        let mk = |k, p, estimable, distinct, residual| LossValue {
            k,
            p,
            value: k as f64 - (-p).ln_1p(),
            estimable,
            distinct,
            residual,
            shots: 1000,
        };
        assert!(mk(3, 1e-5, true, 5, 0).score() < mk(3, 2e-5, true, 5, 0).score());
        assert!(mk(90, 1e-5, true, 90, 0).score() < mk(4, 1.0, false, 4, 10).score());
        assert!(mk(4, 1.0, false, 4, 10).score() < mk(4, 1.0, false, 4, 20).score());
        assert!(mk(4, 1.0, false, 4, 10).score().is_finite());
        let fail = LossValue::from_estimate(&crate::cbrank::scan(1, &[(0, 10)], &[(1, 10)], 10, 0.5, 0.5));
        assert!(fail.value.is_infinite() && !fail.estimable);
    }

    #[test]
    fn budget_zero_returns_start() {
        let c = ctx(2, 2000, 0.05);
        let theta = vec![0.1; c.num_params()];
        let out = optimize_reducer(
            &Statevector::zero(2).unwrap(),
            &theta,
            &c,
            OptimizeLimits {
                evaluations: 0,
                max_generations: None,
                stall_window: 20,
                resume_rank: Some(1),
                cb_max: 3,
            },
            &mut crate::rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(out.theta, theta);
        assert!(out.trajectory.is_empty());
        assert!(out.failed);
    }

    #[test]
    fn optimizer_requires_budget_gate() {
        let c = ctx(2, 100, 0.05);
        let err = optimize_reducer(
            &Statevector::zero(2).unwrap(),
            &vec![0.0; c.num_params()],
            &c,
            OptimizeLimits {
                evaluations: 10,
                max_generations: None,
                stall_window: 20,
                resume_rank: None,
                cb_max: 3,
            },
            &mut crate::rng_from_seed(0),
        );
        assert!(matches!(err, Err(Error::InsufficientBudget { min_shots: 1843 })));
    }

    #[test]
    fn inverting_reducer_gives_rank_one() {
        // U1 = U3 layer; a one-layer reducer whose first U3 layer inverts it.
        let n = 3;
        let angles = [(0.7, 0.2, -0.3), (1.9, -0.4, 0.8), (2.5, 1.0, 0.1)];
        let u1 = Circuit::new(
            n,
            vec![angles.iter().enumerate().map(|(q, &(a, b, c))| Gate::U3(q, a, b, c)).collect()],
        )
        .unwrap();
        let mut theta = vec![0.0; HeaAnsatz::num_params(n, 1)];
        for (q, &(a, b, c)) in angles.iter().enumerate() {
            theta[3 * q..3 * q + 3].copy_from_slice(&[-a, -c, -b]);
        }
        let c = ctx(n, 4000, 0.05);
        let mut state = Statevector::zero(n).unwrap();
        state.apply_circuit(&u1).unwrap();
        let l = c.evaluate(&theta, &state, &mut crate::rng_from_seed(2)).unwrap();
        assert_eq!(l.k, 1);
        assert!(l.estimable);
    }

    #[test]
    fn identity_first_half_never_optimizes() {
        let circuit = TfimAnsatz::new(3, 2, vec![0.0; 12]).unwrap();
        let mut problem = ReducerProblem::protocol(circuit, 0.1, ActivationMode::Soft);
        problem.reducer_layers = 1;
        let rec = run_activation(&problem, &mut crate::rng_from_seed(5)).unwrap();
        assert_eq!(rec.optimizer_invocations, 0);
        assert!(rec.completed && rec.success);
        assert_eq!(rec.t, 1.0);
        assert!(rec.trajectory.iter().all(|r| r.loss.k == 1));
        assert!(rec.p_audit);
        assert!((rec.fidelity.unwrap() - 1.0).abs() < 1e-12);
        let ts: Vec<f64> = rec.trajectory.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ts.len(), 101);
    }

    #[test]
    fn controller_steps() {
        let mut c = ActivationController::new(ActivationMode::Soft, 0.25, 4, 10);
        c.advance();
        assert_eq!(c.t, 0.25);
        assert!(c.retreat());
        assert_eq!(c.t, 0.125);
        assert!(c.retreat());
        assert_eq!(c.t, 0.0625);
        assert!(!c.retreat());
        c.reset_step();
        for _ in 0..10 {
            c.advance();
        }
        assert_eq!(c.t, 1.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let circuit = TfimAnsatz::random(4, 2, &mut crate::rng_from_seed(3));
        let mut problem = ReducerProblem::protocol(circuit, 0.13, ActivationMode::Soft);
        problem.reducer_layers = 1;
        problem.settings.dt = 0.1;
        let a = run_activation(&problem, &mut crate::rng_from_seed(7)).unwrap();
        let b = run_activation(&problem, &mut crate::rng_from_seed(7)).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn parametric_mode_runs() {
        let circuit = TfimAnsatz::random(3, 2, &mut crate::rng_from_seed(11));
        let mut problem = ReducerProblem::protocol(circuit, 0.13, ActivationMode::Parametric);
        problem.reducer_layers = 1;
        problem.settings.periodic_generations = 2;
        let rec = run_activation(&problem, &mut crate::rng_from_seed(1)).unwrap();
        let activations: Vec<f64> = rec
            .trajectory
            .iter()
            .filter(|r| r.phase == Phase::Activate)
            .map(|r| r.t)
            .collect();
        assert_eq!(activations.len(), 6);
        assert!(activations.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rec.optimizer_invocations, 6);
    }
}

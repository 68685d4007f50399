//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! `ACCEPTANCE_ONLY=AC-3,AC-6` restricts the run; `ACCEPTANCE_INSTANCES=40`
//! runs the long-form experiment batch.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand::seq::index::sample;

use reducechop::amplitude::SparseState;
use reducechop::ansatz::{ActivationMode, HeaAnsatz, TfimAnsatz};
use reducechop::cbrank::{best_rank_k_approx, estimate_cb_rank, top_k_mass};
use reducechop::chop::{
    chop_probability_exact, empirical_distribution, metropolis_sample, total_variation,
    ChopPlan, MetropolisConfig, MultiCut,
};
use reducechop::config::DEFAULT_PATH_CAP;
use reducechop::harness::{
    chop_pipeline, run_experiment, verify_bounds, ChopRequest, ExperimentConfig, Lemma, Outputs,
    VerifyConfig,
};
use reducechop::reducer::{run_activation, ReducerProblem};
use reducechop::{rng_from_seed, Bitstring, Circuit, Complex64, Gate, Rng, Statevector};

type Criterion = (&'static str, Duration, Box<dyn Fn() -> Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run_circuits(n: usize, circuits: &[&Circuit]) -> Statevector {
    let mut s = Statevector::zero(n).unwrap();
    for c in circuits {
        s.apply_circuit(c).unwrap();
    }
    s
}

fn random_hea(n: usize, layers: usize, rng: &mut Rng) -> Circuit {
    let theta = (0..HeaAnsatz::num_params(n, layers))
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    HeaAnsatz::new(n, layers, theta).unwrap().circuit()
}

fn random_state(n: usize, rng: &mut Rng) -> Statevector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn ghz(n: usize) -> Statevector {
    let mut s = Statevector::zero(n).unwrap();
    s.apply_gate(&Gate::H(0)).unwrap();
    for q in 1..n {
        s.apply_gate(&Gate::Cnot { control: q - 1, target: q }).unwrap();
    }
    s
}

fn overlap_sqr(a: &Statevector, b: &Statevector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

fn ac1() -> Verdict {
    let n = 6;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = rng_from_seed(100 + seed);
        let u1 = TfimAnsatz::random(n, 5, &mut rng).circuit();
        let u2 = TfimAnsatz::random(n, 5, &mut rng).circuit();
        let r = random_hea(n, 2, &mut rng);
        let direct = run_circuits(n, &[&u1, &u2]).probabilities();
        let plan = ChopPlan::single(u1, u2, r).unwrap();
        for x in Bitstring::all(n) {
            let p = chop_probability_exact(&plan, &x).unwrap();
            worst = worst.max((p - direct[x.index()]).abs());
        }
    }
    verdict(worst <= 1e-10, format!("max |P_chop - P| = {worst:.2e} (tol 1e-10)"))
}

fn ac2() -> Verdict {
    let n = 5;
    let mut worst_gap = 0.0f64;
    let mut beaten = 0usize;
    for seed in 0..50 {
        let mut rng = rng_from_seed(200 + seed);
        let psi = random_state(n, &mut rng);
        for k in [1usize, 2, 4, 8] {
            let best = best_rank_k_approx(&psi, k).unwrap();
            let best_f = overlap_sqr(&best.to_statevector().unwrap(), &psi);
            worst_gap = worst_gap.max((best_f - top_k_mass(&psi, k)).abs());
            for trial in 0..1000 {
                let support = sample(&mut rng, 1 << n, k);
                // Half the competitors use the optimal amplitudes on their support.
                let entries: Vec<(Bitstring, Complex64)> = support
                    .iter()
                    .map(|i| {
                        let a = if trial % 2 == 0 {
                            psi.amplitudes()[i]
                        } else {
                            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        };
                        (Bitstring::new(n, i).unwrap(), a)
                    })
                    .collect();
                let Ok(rival) = SparseState::normalized(n, entries) else {
                    continue;
                };
                let f = overlap_sqr(&rival.to_statevector().unwrap(), &psi);
                if f > best_f + 1e-12 {
                    beaten += 1;
                }
            }
        }
    }
    verdict(
        worst_gap <= 1e-12 && beaten == 0,
        format!("max |F_K - top-K mass| = {worst_gap:.2e}, competitors beating best = {beaten}"),
    )
}

fn ac3() -> Verdict {
    let g = ghz(8);
    let mut h = Statevector::zero(8).unwrap();
    for q in 0..8 {
        h.apply_gate(&Gate::H(q)).unwrap();
    }
    let mut ghz_ok = 0;
    let mut flat_rejected = 0;
    let mut flat_large_k = Vec::new();
    for seed in 0..100 {
        let mut rng = rng_from_seed(300 + seed);
        let est = estimate_cb_rank(&g, 4000, 0.05, 1e-4, &mut rng).unwrap();
        if est.k == 2 && est.success {
            ghz_ok += 1;
        }
        let est = estimate_cb_rank(&h, 1000, 0.05, 1e-4, &mut rng).unwrap();
        if !est.success {
            flat_rejected += 1;
        }
        // With 4000 shots the flat state is accepted, but only near its true rank.
        let est = estimate_cb_rank(&h, 4000, 0.05, 1e-4, &mut rng).unwrap();
        if est.success {
            flat_large_k.push(est.k);
        }
    }
    let min_k = flat_large_k.iter().min().copied().unwrap_or(0);
    verdict(
        ghz_ok >= 99 && flat_rejected == 100 && (flat_large_k.is_empty() || min_k >= 244),
        format!(
            "GHZ_8 (M=4000) K=2,F=true in {ghz_ok}/100; H^8 (M=1000) F=false in {flat_rejected}/100; \
             H^8 (M=4000) accepted {}/100 with min K {min_k} >= CB 244",
            flat_large_k.len()
        ),
    )
}

fn ac4() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (which, trials) in [(Lemma::Lemma2, 1000), (Lemma::Lemma3, 500)] {
        let mut cfg = VerifyConfig::standard(which, trials);
        cfg.seed = 400;
        let r = verify_bounds(&cfg, 0).unwrap();
        pass &= r.pass && r.accepted > 0;
        detail.push(format!(
            "{which:?}: {}/{} violations, rate {:.2e} vs bound {:.2e}, p = {:.3}",
            r.violations, r.accepted, r.empirical_rate, r.analytic_bound, r.p_value
        ));
    }
    verdict(pass, detail.join("; "))
}

fn ac5() -> Verdict {
    let n = 6;
    let mut within = 0;
    let mut worst_ratio = 0.0f64;
    for seed in 0..20 {
        let mut rng = rng_from_seed(500 + seed);
        let (u1, u2) = TfimAnsatz::random(n, 10, &mut rng).split(5).unwrap();
        let report = chop_pipeline(&ChopRequest {
            u1: u1.circuit(),
            u2: u2.circuit(),
            reducer: None,
            outputs: Outputs::All,
            eps: 0.08,
            p_m: 1e-4,
            shots: None,
            phase_shots: None,
            exact: false,
            seed: 500 + seed,
        })
        .unwrap();
        let (Some(err), Some(allowed)) = (report.l1_error, report.l1_allowed) else {
            continue;
        };
        worst_ratio = worst_ratio.max(err / allowed);
        if err <= allowed {
            within += 1;
        }
    }
    verdict(
        within >= 18,
        format!("{within}/20 seeds within 2 sqrt(1 - bound), worst ratio {worst_ratio:.3}"),
    )
}

fn ac6(n: usize, seed: u64) -> Verdict {
    let mut cfg = ExperimentConfig::protocol(n, 0.08);
    cfg.seed = seed;
    if let Some(i) = std::env::var("ACCEPTANCE_INSTANCES").ok().and_then(|v| v.parse().ok()) {
        cfg.instances = i;
    }
    let out = run_experiment(&cfg, None, 0).unwrap();
    let s = &out.summary;
    let total = s.instances.len();
    let successes: Vec<_> = s.instances.iter().filter(|i| i.success).collect();
    let bounds_ok = successes.iter().all(|i| i.bound_holds == Some(true));
    let depth_ok = n != 8 || (s.depth.original == 40 && s.depth.max_stage() == 24);
    let ks: Vec<usize> = successes.iter().map(|i| i.final_k).collect();
    verdict(
        2 * successes.len() >= total && bounds_ok && depth_ok,
        format!(
            "{}/{} reached t=1 with K <= {}; final K {:?}; depth {}; fidelity >= bound on all successes: {}",
            successes.len(),
            total,
            cfg.cb_max(),
            ks,
            s.depth,
            bounds_ok
        ),
    )
}

fn ac7() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let n = 3 + (seed % 2) as usize;
        let mut rng = rng_from_seed(700 + seed);
        let pieces: Vec<Circuit> = (0..3).map(|_| TfimAnsatz::random(n, 2, &mut rng).circuit()).collect();
        let direct = run_circuits(n, &pieces.iter().collect::<Vec<_>>()).probabilities();
        let plan = ChopPlan::new(pieces, vec![Circuit::identity(n), Circuit::identity(n)]).unwrap();
        let multi = MultiCut::prepare(&plan, DEFAULT_PATH_CAP).unwrap();
        for x in Bitstring::all(n) {
            worst = worst.max((multi.probability(&x).unwrap() - direct[x.index()]).abs());
        }
    }
    verdict(worst <= 1e-8, format!("max |P_multi - P| = {worst:.2e} (tol 1e-8)"))
}

fn ac8() -> Verdict {
    let median = |mut v: Vec<usize>| -> f64 {
        v.sort_unstable();
        (v[v.len() / 2 - 1] + v[v.len() / 2]) as f64 / 2.0
    };
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    for seed in 0..10 {
        let circuit = TfimAnsatz::random(6, 10, &mut rng_from_seed(800 + seed));
        for (eps, sink) in [(0.02, &mut fine), (0.08, &mut coarse)] {
            let problem = ReducerProblem::protocol(circuit.clone(), eps, ActivationMode::Soft);
            let rec = run_activation(&problem, &mut rng_from_seed(900 + seed)).unwrap();
            sink.push(rec.optimizer_invocations);
        }
    }
    let (mf, mc) = (median(fine.clone()), median(coarse.clone()));
    verdict(
        mf > mc,
        format!("median invocations eps=0.02: {mf} {fine:?}; eps=0.08: {mc} {coarse:?}"),
    )
}

fn ac9() -> Verdict {
    let target = ghz(4).probabilities();
    let config = MetropolisConfig {
        steps: 10_000,
        ..MetropolisConfig::default()
    };
    let run = metropolis_sample(
        |x: &Bitstring| target[x.index()],
        4,
        config,
        None,
        &mut rng_from_seed(900),
    )
    .unwrap();
    let tv = total_variation(&empirical_distribution(&run.samples, 4), &target);
    verdict(
        tv <= 0.1,
        format!("TV = {tv:.4} (tol 0.1), acceptance rate {:.3}", run.acceptance_rate()),
    )
}

fn main() -> ExitCode {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let criteria: Vec<Criterion> = vec![
        ("AC-1", Duration::from_secs(30), Box::new(ac1)),
        ("AC-2", Duration::from_secs(60), Box::new(ac2)),
        ("AC-3", Duration::from_secs(60), Box::new(ac3)),
        ("AC-4", Duration::from_secs(600), Box::new(ac4)),
        ("AC-5", Duration::from_secs(600), Box::new(ac5)),
        ("AC-6", Duration::from_secs(7200), Box::new(|| ac6(8, 6))),
        ("AC-6/n6", Duration::from_secs(900), Box::new(|| ac6(6, 6))),
        ("AC-7", Duration::from_secs(60), Box::new(ac7)),
        ("AC-8", Duration::from_secs(3600), Box::new(ac8)),
        ("AC-9", Duration::from_secs(60), Box::new(ac9)),
    ];
    let mut failures = 0;
    for (name, limit, check) in criteria {
        if let Some(list) = &only {
            if !list.iter().any(|o| name.starts_with(o.as_str())) {
                continue;
            }
        }
        let started = Instant::now();
        let v = check();
        let elapsed = started.elapsed();
        let pass = v.pass && elapsed <= limit;
        if !pass {
            failures += 1;
        }
        println!(
            "{name} {} [{:.1}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            v.detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

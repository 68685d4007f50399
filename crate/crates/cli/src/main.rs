use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use reducechop::cbrank::estimate_cb_rank;
use reducechop::harness::{
    chop_pipeline, content_hash, run_experiment, verify_bounds, ChopRequest, ExperimentConfig,
    Lemma, Outputs, StateFamily, VerifyConfig, ARTIFACT_VERSION,
};
use reducechop::reducer::protocol_shots;
use reducechop::sim::CircuitSpec;
use reducechop::{rng_from_seed, Bitstring, Circuit, Complex64, Error, Statevector};

#[derive(Parser)]
#[command(name = "reducechop", version, about = "Reduce-and-chop circuit simulation")]
struct Cli {
    /// Base seed for every random draw; `run-experiment` falls back to the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every logical core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Print failures as JSON on stdout.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded reducer instances.
    RunExperiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the instance count, e.g. 40 for the long protocol.
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Sample-based computational-basis rank of a state.
    EstimateCb {
        /// State file: `{"amplitudes": [[re, im], ...]}` or a circuit run on |0⟩.
        #[arg(long)]
        state: PathBuf,
        #[arg(long = "M", alias = "shots")]
        shots: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        pm: f64,
    },
    /// Estimate output probabilities of a circuit chopped in two.
    Chop {
        #[arg(long)]
        circuit: PathBuf,
        /// Entries of `layers` before the chop; half of them when absent.
        #[arg(long)]
        cut: Option<usize>,
        /// Reducer circuit file, or `identity`.
        #[arg(long, default_value = "identity")]
        reducer: String,
        /// Comma-separated bitstrings, or `all`.
        #[arg(long, default_value = "all")]
        x: String,
        #[arg(long, default_value_t = 0.08)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        pm: f64,
        #[arg(long = "M", alias = "shots")]
        shots: Option<u64>,
        #[arg(long)]
        phase_shots: Option<u64>,
        /// Full resolution-of-identity sum instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Monte Carlo check of a concentration bound.
    VerifyBounds {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        pm: f64,
        #[arg(long = "M", alias = "shots")]
        shots: Option<u64>,
        #[arg(long, value_enum)]
        state: Option<StateArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Lemma2,
    Lemma3,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateArg {
    Basis,
    Ghz,
    TailHeavy,
    Tfim,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeFile {
    amplitudes: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Amplitudes(AmplitudeFile),
    Circuit(CircuitSpec),
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: 1,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure {
        code: 1,
        kind: "json".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    let spec: CircuitSpec = parse_json(path, &read(path)?)?;
    Ok(Circuit::from_spec(&spec)?)
}

fn load_state(path: &Path) -> Result<Statevector, Failure> {
    let text = read(path)?;
    let file: StateFile = parse_json(path, &text).map_err(|mut f| {
        f.message = format!(
            "{}: expected {{\"amplitudes\": [[re, im], ...]}} or a circuit {{\"n\", \"layers\"}}",
            path.display()
        );
        f
    })?;
    Ok(match file {
        StateFile::Amplitudes(a) => Statevector::from_amplitudes(
            a.amplitudes
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )?,
        StateFile::Circuit(spec) => {
            let circuit = Circuit::from_spec(&spec)?;
            let mut s = Statevector::zero(circuit.n())?;
            s.apply_circuit(&circuit)?;
            s
        }
    })
}

fn parse_outputs(arg: &str) -> Result<Outputs, Failure> {
    if arg == "all" {
        return Ok(Outputs::All);
    }
    let xs = arg
        .split(',')
        .map(|s| s.trim().parse::<Bitstring>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outputs::Some(xs))
}

#[derive(Serialize)]
struct Stamp<'a> {
    artifact_version: &'a str,
    config_hash: String,
    seed: u64,
}

fn stamped(hash_input: &Value, seed: u64, body: Value) -> Value {
    let stamp = Stamp {
        artifact_version: ARTIFACT_VERSION,
        config_hash: content_hash(hash_input),
        seed,
    };
    let mut out = serde_json::to_value(stamp).expect("stamp serializes");
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}

fn run(cli: Cli) -> Result<Value, Failure> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::RunExperiment {
            config,
            out,
            instances,
        } => {
            let text = read(&config)?;
            let mut cfg: ExperimentConfig = parse_json(&config, &text)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(i) = instances {
                cfg.instances = i;
            }
            let outcome = run_experiment(&cfg, Some(&out), cli.workers)?;
            let s = &outcome.summary;
            Ok(json!({
                "artifact_version": s.artifact_version,
                "config_hash": s.config_hash,
                "seed": s.seed,
                "instances": s.instances.len(),
                "success_rate": s.success_rate,
                "histogram": s.histogram,
                "depth": s.depth.to_string(),
                "out": out.display().to_string(),
            }))
        }
        Command::EstimateCb {
            state,
            shots,
            eps,
            pm,
        } => {
            let psi = load_state(&state)?;
            let est = estimate_cb_rank(&psi, shots, eps, pm, &mut rng_from_seed(seed))?;
            let inputs = json!({
                "state": content_hash(&read(&state)?),
                "M": shots, "eps": eps, "p_m": pm,
            });
            Ok(stamped(
                &inputs,
                seed,
                json!({
                    "K": est.k, "p": est.p, "F": est.success,
                    "m": est.residual, "M": est.shots,
                    "diagnostic": est.diagnostic,
                    "support": est.support,
                }),
            ))
        }
        Command::Chop {
            circuit,
            cut,
            reducer,
            x,
            eps,
            pm,
            shots,
            phase_shots,
            exact,
        } => {
            let c = load_circuit(&circuit)?;
            let reducer_circuit = if reducer == "identity" {
                None
            } else {
                Some(load_circuit(Path::new(&reducer))?)
            };
            let cut = cut.unwrap_or(c.layers().len() / 2);
            let inputs = json!({
                "circuit": c.to_spec(),
                "cut": cut,
                "reducer": reducer_circuit.as_ref().map(Circuit::to_spec),
                "x": x, "eps": eps, "p_m": pm,
                "M": shots.unwrap_or_else(|| protocol_shots(c.n(), eps)),
                "phase_shots": phase_shots, "exact": exact,
            });
            if cut > c.layers().len() {
                return Err(Error::Precondition(format!(
                    "cut {cut} beyond {} layers",
                    c.layers().len()
                ))
                .into());
            }
            let (u1, u2) = c.split_at(cut);
            let report = chop_pipeline(&ChopRequest {
                u1,
                u2,
                reducer: reducer_circuit,
                outputs: parse_outputs(&x)?,
                eps,
                p_m: pm,
                shots,
                phase_shots,
                exact,
                seed,
            })?;
            let mut body = serde_json::to_value(&report).map_err(Error::from)?;
            if let Value::Object(o) = &mut body {
                o.insert("depth".into(), json!(report.depth.to_string()));
            }
            Ok(stamped(&inputs, seed, body))
        }
        Command::VerifyBounds {
            which,
            trials,
            n,
            eps,
            pm,
            shots,
            state,
        } => {
            let lemma = match which {
                Which::Lemma2 => Lemma::Lemma2,
                Which::Lemma3 => Lemma::Lemma3,
            };
            let mut cfg = VerifyConfig::standard(lemma, trials);
            cfg.seed = seed;
            cfg.p_m = pm;
            if let Some(n) = n {
                cfg.n = n;
            }
            if let Some(eps) = eps {
                cfg.eps = eps;
            }
            let shots = shots.unwrap_or_else(|| protocol_shots(cfg.n, cfg.eps));
            cfg.shots = shots;
            cfg.phase_shots = shots;
            if let Some(s) = state {
                cfg.state = match s {
                    StateArg::Basis => StateFamily::Basis,
                    StateArg::Ghz => StateFamily::Ghz,
                    StateArg::TailHeavy => StateFamily::TailHeavy {
                        head: 8,
                        tail: cfg.eps + 0.02,
                    },
                    StateArg::Tfim => StateFamily::Tfim { layers: 5 },
                };
            }
            let report = verify_bounds(&cfg, cli.workers)?;
            let pass = report.pass;
            let value = stamped(
                &serde_json::to_value(&cfg).map_err(Error::from)?,
                seed,
                serde_json::to_value(&report).map_err(Error::from)?,
            );
            if pass {
                Ok(value)
            } else {
                emit(&serde_json::to_string_pretty(&value).expect("json"));
                Err(Failure {
                    code: 3,
                    kind: "bound_violated".into(),
                    message: format!(
                        "empirical violation rate {:.3e} exceeds bound {:.3e} (p = {:.3e})",
                        report.empirical_rate, report.analytic_bound, report.p_value
                    ),
                })
            }
        }
    }
}

// A closed pipe (`| head`) is not an error worth a panic.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let error_json = cli.error_json;
    match run(cli) {
        Ok(v) => {
            emit(&serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            if error_json {
                emit(&json!({"error": {"kind": f.kind, "message": f.message}}).to_string());
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use nswsim_core::adversary::{
    gen_mw_hardness, gen_myopic_killer, gen_proportional_killer, AdaptiveAdversary, Banishment, BanishmentConfig,
    MwAdaptive, Unscaled, DEFAULT_BETA,
};
use nswsim_core::format::{run_csv, sweep_csv, InstanceFile, Provenance, ResultFile};
use nswsim_core::harness::{evaluate, evaluate_with, run_online, sweep, RunMetrics, Source, SweepConfig};
use nswsim_core::offline::{eg_solve, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use nswsim_core::{
    competitive_ratio, make_predictions, maxmin, AlgorithmSpec, ErrorModeSpec, MonopolistVector, PredictionVector,
    ValueMatrix,
};

#[derive(Parser)]
#[command(name = "nswsim", version, about = "Online Nash social welfare allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a static hard instance.
    Gen {
        #[arg(long, value_enum)]
        family: StaticFamily,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an online allocator on an instance file.
    Run {
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        instance: PathBuf,
        /// exact, over:F, under:F or random:C,D,SEED. Defaults to the
        /// instance's own predictions, or exact when it has none.
        #[arg(long)]
        predictions: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve the offline Eisenberg-Gale program.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play an allocator against an adaptive adversary.
    Adversary {
        #[arg(long, value_enum)]
        family: AdaptiveFamily,
        #[arg(long)]
        n: usize,
        /// unscaled: value growth parameter. banishment: exponent used to
        /// pick M and L when they are not given.
        #[arg(long)]
        eps: Option<f64>,
        /// banishment month length
        #[arg(long)]
        m: Option<usize>,
        /// banishment year count
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value = "set-aside-greedy")]
        algorithm: String,
        #[arg(long, default_value = "exact")]
        predictions: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every cell of a sweep config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StaticFamily {
    MwHardness,
    ProportionalKiller,
    MyopicKiller,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdaptiveFamily {
    Unscaled,
    Banishment,
    MwAdaptive,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl fmt::Display) -> Self {
        Failure { code: 2, msg: msg.to_string() }
    }
}

impl From<nswsim_core::Error> for Failure {
    fn from(e: nswsim_core::Error) -> Self {
        Failure { code: if e.is_input_error() { 2 } else { 3 }, msg: e.to_string() }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nswsim: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Gen { family, n, seed, out } => cmd_gen(family, n, seed, out.as_deref()),
        Command::Run { algorithm, instance, predictions, out, csv } => {
            cmd_run(&algorithm, &instance, predictions.as_deref(), out.as_deref(), csv.as_deref())
        }
        Command::Oracle { instance, tol, max_iters, out } => cmd_oracle(&instance, tol, max_iters, out.as_deref()),
        Command::Adversary { family, n, eps, m, l, beta, algorithm, predictions, out } => {
            let adv = build_adversary(family, n, eps, m, l, beta)?;
            cmd_adversary(adv, &algorithm, &predictions, out.as_deref())
        }
        Command::Sweep { config, csv } => cmd_sweep(&config, csv.as_deref()),
    }
}

fn command_line() -> Vec<String> {
    std::iter::once("nswsim".to_string()).chain(std::env::args().skip(1)).collect()
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(family: StaticFamily, n: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let mut meta = Map::new();
    meta.insert("n".into(), json!(n));
    let values = match family {
        StaticFamily::MwHardness => {
            let h = gen_mw_hardness(n, seed)?;
            meta.insert("family".into(), json!("mw-hardness"));
            meta.insert("seed".into(), json!(seed));
            meta.insert("special_agents".into(), json!(h.special));
            meta.insert("offline_mw".into(), json!(h.offline_mw));
            h.values
        }
        StaticFamily::ProportionalKiller => {
            meta.insert("family".into(), json!("proportional-killer"));
            gen_proportional_killer(n)?
        }
        StaticFamily::MyopicKiller => {
            meta.insert("family".into(), json!("myopic-killer"));
            gen_myopic_killer(n)?
        }
    };
    let mut file = InstanceFile::from_matrix(&values);
    file.metadata = Some(meta);
    emit(out, &file.to_json()?)
}

fn load_instance(path: &Path) -> Outcome<(InstanceFile, ValueMatrix)> {
    let file = InstanceFile::parse(&read(path)?)?;
    let values = file.matrix()?;
    Ok((file, values))
}

fn cmd_run(
    algorithm: &str,
    instance: &Path,
    predictions: Option<&str>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Outcome {
    let spec: AlgorithmSpec = algorithm.parse()?;
    let (file, values) = load_instance(instance)?;
    let n = values.num_agents();
    let (preds, over, under) = match (predictions, file.prediction_vector()?) {
        (None, Some(p)) => (p, vec![1.0; n], vec![1.0; n]),
        (mode, _) => {
            let mode: ErrorModeSpec = mode.unwrap_or("exact").parse()?;
            let err = mode.to_spec(n);
            let (over, under) = err.declared();
            let p = if spec.kind.uses_predictions() {
                make_predictions(&values.monopolist_values(), &err)?
            } else {
                PredictionVector::ones(n)
            };
            (p, over, under)
        }
    };
    let used = spec.kind.uses_predictions().then_some(&preds);
    let result = run_online(spec, Source::Static(&values), used)?;
    let metrics = evaluate(&result, &over, &under)?;
    let provenance = Provenance::new(command_line(), None);
    let doc = ResultFile::from_run(&result, Some(metrics), provenance);
    if let Some(path) = csv {
        emit(Some(path), &run_csv(&result)?)?;
    }
    emit(out, &doc.to_json()?)
}

fn cmd_oracle(instance: &Path, tol: f64, max_iters: usize, out: Option<&Path>) -> Outcome {
    let (_, values) = load_instance(instance)?;
    let n = values.num_agents();
    let r = eg_solve(&values, tol, max_iters)?;
    let metrics = RunMetrics {
        num_agents: n,
        num_rounds: values.num_rounds(),
        nsw_alg: r.nsw_value,
        mw_alg: maxmin(&r.utilities),
        nsw_opt: r.nsw_value,
        oracle_gap: r.duality_gap,
        oracle_certified: r.certified,
        ratio_nsw: competitive_ratio(r.nsw_value, r.nsw_value),
        mw_opt: None,
        ratio_mw: None,
        dual_bound: None,
        predicted_bound: None,
        theorem_bound: None,
        over_factors: vec![1.0; n],
        under_factors: vec![1.0; n],
    };
    let doc = ResultFile {
        algorithm: "eg-oracle".into(),
        allocation: r.allocation.to_rows(),
        utilities: r.utilities.utilities.clone(),
        nsw: r.nsw_value,
        mw: maxmin(&r.utilities),
        price_trace: None,
        metrics: Some(metrics),
        provenance: Provenance::new(command_line(), None),
        realized_instance: None,
        events: None,
    };
    emit(out, &doc.to_json()?)?;
    if !r.certified {
        return Err(Failure {
            code: 4,
            msg: format!(
                "oracle not certified after {} iterations: gap {:e} > tol {tol:e}",
                r.iterations, r.duality_gap
            ),
        });
    }
    Ok(())
}

fn build_adversary(
    family: AdaptiveFamily,
    n: usize,
    eps: Option<f64>,
    m: Option<usize>,
    l: Option<usize>,
    beta: Option<f64>,
) -> Outcome<Box<dyn AdaptiveAdversary>> {
    Ok(match family {
        AdaptiveFamily::Unscaled => Box::new(Unscaled::new(n, eps.unwrap_or(1e-3))?),
        AdaptiveFamily::MwAdaptive => Box::new(MwAdaptive::new(n)?),
        AdaptiveFamily::Banishment => {
            let config = match (m, l) {
                (Some(m), Some(l)) => BanishmentConfig::new(n, m, l, beta.unwrap_or(DEFAULT_BETA))?,
                (None, None) => BanishmentConfig::suggest(n, eps.unwrap_or(0.1))?,
                _ => return Err(Failure::input("banishment needs both --m and --l, or neither")),
            };
            Box::new(Banishment::new(config)?)
        }
    })
}

fn cmd_adversary(
    mut adv: Box<dyn AdaptiveAdversary>,
    algorithm: &str,
    predictions: &str,
    out: Option<&Path>,
) -> Outcome {
    let spec: AlgorithmSpec = algorithm.parse()?;
    let mode: ErrorModeSpec = predictions.parse()?;
    let n = adv.num_agents();
    let err = mode.to_spec(n);
    let (over, under) = err.declared();
    let preds = make_predictions(&MonopolistVector { totals: vec![1.0; n] }, &err)?;
    let result = run_online(spec, Source::Adaptive(adv.as_mut()), Some(&preds))?;
    let metrics = evaluate_with(&result, &over, &under, result.analytic_mw_opt, DEFAULT_TOL)?;
    let mut doc = ResultFile::from_run(&result, Some(metrics), Provenance::new(command_line(), None));
    let mut realized = InstanceFile::from_matrix(&result.values);
    realized.metadata = Some(Map::from_iter([("family".to_string(), Value::from(adv.family()))]));
    doc.realized_instance = Some(realized);
    doc.events = Some(result.events.clone());
    emit(out, &doc.to_json()?)
}

fn cmd_sweep(config: &Path, csv: Option<&Path>) -> Outcome {
    let cfg: SweepConfig = serde_json::from_str(&read(config)?)
        .map_err(|e| Failure::input(format!("sweep config {}: {e}", config.display())))?;
    let rows = sweep(&cfg)?;
    emit(csv, &sweep_csv(&rows)?)
}

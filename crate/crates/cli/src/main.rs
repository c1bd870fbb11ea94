use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use perceptron::oracle::{cluster_census, enumerate_solutions_capped, margin_census, DEFAULT_ENUM_CAP};
use perceptron::paths::{
    local_path_first, local_path_second, verify_path, wide_web_path, LocalClusterParams, PathSample,
};
use perceptron::stats::{capacity_sbp, prob_abs_normal_le};
use perceptron::{sample_instance, solve, GenConfig, ModelKind, PsiVariant, Schedule, StartPolicy};
use perceptron_cli::experiment::{self, ExperimentConfig, PolicyKind, TAIL_HEADER, TRIAL_HEADER};
use perceptron_cli::io::{format_instance, format_solution, load_instance, load_solution, write_text};
use perceptron_cli::{thread_cap, CliError};

#[derive(Parser)]
#[command(name = "perceptron", version, about = "Multiscale majority solver for binary perceptrons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random instance.
    Gen(GenArgs),
    /// Run the majority algorithm on an instance.
    Solve(SolveArgs),
    /// Check a solution against an instance.
    Verify(VerifyArgs),
    /// Audit an interpolation path.
    Path(PathArgs),
    /// Enumerate all solutions of a small instance and report its clusters.
    Enumerate(EnumerateArgs),
    /// SBP capacity for one or more margins.
    Capacity(CapacityArgs),
    /// Sweep (n, alpha, seed) and write CSV.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Psi {
    Literal,
    Std,
}

impl From<Psi> for PsiVariant {
    fn from(p: Psi) -> Self {
        match p {
            Psi::Literal => PsiVariant::Literal,
            Psi::Std => PsiVariant::StdNormalTail,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Sbp,
    Abp,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Sbp => ModelKind::Sbp,
            Model::Abp => ModelKind::Abp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    AllPlus,
    Random,
}

impl From<Policy> for PolicyKind {
    fn from(p: Policy) -> Self {
        match p {
            Policy::AllPlus => PolicyKind::AllPlus,
            Policy::Random => PolicyKind::Random,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "all-plus")]
    policy: Policy,
    /// Seed for `--policy random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "std")]
    psi: Psi,
    /// Solution file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-round wall-clock times in the JSON outcome.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Check against this margin instead of the instance's own.
    #[arg(long, allow_hyphen_values = true)]
    kappa_prime: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathKind {
    WideWeb,
    LocalFirst,
    LocalSecond,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "wide-web")]
    kind: PathKind,
    #[arg(long, value_enum, default_value = "std")]
    psi: Psi,
    /// Start vector for the wide-web path: `all-plus` or `random` with `--seed`.
    #[arg(long, value_enum, default_value = "random")]
    policy: Policy,
    /// Seeds the start vector and the vertex sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `all` walks every vertex; a number samples that many vertices.
    #[arg(long, default_value = "1000")]
    sample: String,
    /// Large-margin solution for local paths.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_prime: Option<f64>,
    /// Cluster fraction `d`; solved from the margins when omitted.
    #[arg(long)]
    d: Option<f64>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
    cap: usize,
    #[arg(long, allow_hyphen_values = true)]
    kappa_prime: Option<f64>,
    /// Diameter threshold for the κ′ census.
    #[arg(long, default_value_t = 0)]
    threshold: usize,
    /// Also list every solution.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long, required = true, num_args = 1..)]
    kappa: Vec<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Number of seeds per (n, alpha).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "all-plus")]
    policy: Policy,
    #[arg(long, value_enum, default_value = "std")]
    psi: Psi,
    /// Force odd row counts (drops one row when floor(alpha n) is even).
    #[arg(long)]
    odd_m: bool,
    /// Trial CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tail-bound CSV.
    #[arg(long)]
    tails_out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn start_policy(policy: Policy, seed: u64) -> StartPolicy {
    PolicyKind::from(policy).policy(seed)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let inst =
        sample_instance(&GenConfig { model: a.model.into(), n: a.n, alpha: a.alpha, kappa: a.kappa, seed: a.seed })?;
    emit(a.out.as_ref(), &format_instance(&inst))
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let sched = Schedule::build(inst.model(), inst.n(), inst.m(), inst.kappa(), a.psi.into())?;
    let out = solve(&inst, &sched, &start_policy(a.policy, a.seed))?;
    if let Some(p) = &a.out {
        write_text(p, &format_solution(&out.x))?;
    }
    let mut report = json!({
        "success": out.success,
        "rounds_executed": out.rounds_executed,
        "m": inst.m(),
        "n": inst.n(),
        "model": inst.model(),
        "kappa": inst.kappa(),
        "psi_variant": sched.psi_variant.as_str(),
        "block_sizes": sched.block_sizes,
        "row_budgets": sched.row_budgets,
        "final_row_sums": out.round_sums.last(),
    });
    if a.timings {
        report["round_ms"] = json!(out.round_times.iter().map(|t| t.as_secs_f64() * 1e3).collect::<Vec<_>>());
        report["solve_ms"] = json!(out.elapsed().as_secs_f64() * 1e3);
    }
    print_json(&report)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let x = load_solution(&a.solution)?;
    let inst = match a.kappa_prime {
        Some(k) => inst.with_kappa(k)?,
        None => inst,
    };
    let report = inst.margin_report(&x)?;
    print_json(&json!({ "kappa": inst.kappa(), "all_satisfied": report.all_satisfied, "report": report }))
}

fn cmd_path(a: PathArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let sched = Schedule::build(inst.model(), inst.n(), inst.m(), inst.kappa(), a.psi.into())?;
    let sample = if a.sample == "all" {
        PathSample::All
    } else {
        let count =
            a.sample.parse().with_context(|| format!("--sample must be `all` or a count, got {:?}", a.sample))?;
        PathSample::Random { count, seed: a.seed }
    };
    let mut cursor = match a.kind {
        PathKind::WideWeb => {
            let v = start_policy(a.policy, a.seed).start_vector(sched.n0())?;
            wide_web_path(&inst, &sched, &v)?
        }
        PathKind::LocalFirst | PathKind::LocalSecond => {
            let path = a.solution.as_ref().context("local paths need --solution")?;
            let x = load_solution(path)?;
            let kp = a.kappa_prime.context("local paths need --kappa-prime")?;
            let ell = a.ell.context("local paths need --ell")?;
            let params = LocalClusterParams::new(&inst, kp, a.d)?;
            if matches!(a.kind, PathKind::LocalFirst) {
                local_path_first(&inst, &sched, &x, ell, &params)?
            } else {
                local_path_second(&inst, &sched, &x, ell, &params)?
            }
        }
    };
    print_json(&verify_path(&mut cursor, &sample))
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let sols = enumerate_solutions_capped(&inst, a.cap)?;
    let mut report = match a.kappa_prime {
        Some(kp) => serde_json::to_value(margin_census(&inst, &sols, kp, a.threshold)?)?,
        None => serde_json::to_value(cluster_census(&inst, &sols)?)?,
    };
    if a.list {
        report["solutions"] = json!(sols.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }
    print_json(&report)
}

fn cmd_capacity(a: CapacityArgs) -> Result<()> {
    let mut out = String::from("kappa,p_kappa,alpha_c\n");
    for k in a.kappa {
        let c = capacity_sbp(k)?;
        out.push_str(&format!("{k},{:.6},{c:.6}\n", prob_abs_normal_le(k)));
    }
    emit(None, &out)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        model: a.model.into(),
        kappa: a.kappa,
        ns: a.n,
        alphas: a.alpha,
        seeds: a.seeds,
        base_seed: a.seed,
        policy: a.policy.into(),
        psi: a.psi.into(),
        odd_m: a.odd_m,
    };
    let res = experiment::run(&cfg)?;
    let mut buf = Vec::new();
    experiment::write_csv(&res.trials, &TRIAL_HEADER, &mut buf)?;
    emit(a.out.as_ref(), std::str::from_utf8(&buf)?)?;
    if let Some(p) = &a.tails_out {
        let mut buf = Vec::new();
        experiment::write_csv(&res.tails, &TAIL_HEADER, &mut buf)?;
        write_text(p, std::str::from_utf8(&buf)?)?;
    }
    for s in experiment::summarize(&res.trials) {
        eprintln!(
            "n={} alpha={} success {}/{} ({:.2}) median {:.2} ms",
            s.n,
            s.alpha,
            s.successes,
            s.trials,
            s.success_rate,
            s.median_ms.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn error_name(e: &anyhow::Error) -> &'static str {
    if let Some(c) = e.downcast_ref::<CliError>() {
        c.name()
    } else if let Some(c) = e.downcast_ref::<perceptron::Error>() {
        c.name()
    } else {
        "Usage"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = thread_cap() {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Path(a) => cmd_path(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e:#}", error_name(&e));
            ExitCode::FAILURE
        }
    }
}

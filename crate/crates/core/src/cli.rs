//! The `fdpi` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bandit::{improve, linear_closed_form, primal_objective, primal_oracle_bandit, softmax_closed_form, BanditError, BanditInstance};
use crate::distribution::DiscreteDistribution;
use crate::divergence::{AlphaDivergence, Divergence};
use crate::harness::{
    aggregate_and_export, mean_ci, parse_config, run_bandit_experiment, run_mdp_experiment, run_policy_demo, ConfigError,
    ExperimentConfig, ExperimentOutput, HarnessError,
};
use crate::mdp::{
    exact_dual_oracle, joint_stationarity_residual, mdp_dual_objective, ms_objectives, state_action_distribution, DualData,
    FeatureMap, TabularMdp, TabularPolicy, ValueFunction,
};
use crate::table::{conjugate_sample_points, generator_sample_points, named_divergence, named_divergences};

pub const SEED_VAR: &str = "FDIV_SEED";

#[derive(Debug, Parser)]
#[command(name = "fdpi", version, about = "f-divergence policy improvement for bandits and average-reward MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print f, f', f* and (f*)' of one α-divergence at sample points.
    DivergenceTable {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Solve one bandit improvement problem.
    BanditImprove {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long)]
        eta: f64,
        /// Old policy, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        /// Action values, comma separated.
        #[arg(long = "Q", value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Regret sweep over α plus the UCB baseline.
    BanditRegret(SweepArgs),
    /// Repeated improvement at fixed temperature on one set of arm values.
    PolicyDemo(SweepArgs),
    /// Sampled policy iteration on a grid world.
    MdpTrain(SweepArgs),
    /// Check the solvers against closed forms and brute-force oracles.
    SelfCheck,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// chain, cliffwalking, frozenlake or bandit-fig2.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// JSON config file; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// `key=value` overrides applied after the preset or file, e.g. `schedule.eta0=15`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} self-check(s) failed")]
    Checks(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
            CliError::Checks(_) => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Config(c),
            HarnessError::Alpha { .. } | HarnessError::Env(_) | HarnessError::Workers(_) => CliError::Input(e.to_string()),
            HarnessError::Model(_) => CliError::Solver(e.to_string()),
            HarnessError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<BanditError> for CliError {
    fn from(e: BanditError) -> Self {
        match e {
            BanditError::LengthMismatch { .. }
            | BanditError::InvalidTemperature(_)
            | BanditError::NonFiniteValue { .. }
            | BanditError::Distribution(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// `%g`-style formatting with six significant digits.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{v:.*}", (5 - exp) as usize))
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(sig6).collect::<Vec<_>>().join(", ")
}

/// Parse `args` (program name first), run the command and return the exit
/// code. `seed_override` is the value of `FDIV_SEED`, if set.
pub fn run<I, T>(args: I, seed_override: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, seed_override.as_deref(), out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, seed_override: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::DivergenceTable { alpha, points } => divergence_table(alpha, points, out),
        Command::BanditImprove { alpha, eta, q, values } => bandit_improve(alpha, eta, q, values, out),
        Command::BanditRegret(args) => sweep(Sweep::Bandit, args, seed_override, out),
        Command::PolicyDemo(args) => sweep(Sweep::Demo, args, seed_override, out),
        Command::MdpTrain(args) => sweep(Sweep::Mdp, args, seed_override, out),
        Command::SelfCheck => {
            let failed = self_check(out).map_err(io)?;
            if failed == 0 { Ok(()) } else { Err(CliError::Checks(failed)) }
        }
    }
}

fn divergence_table(alpha: f64, points: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let div = AlphaDivergence::new(alpha).map_err(|e| CliError::Input(e.to_string()))?;
    let named = named_divergence(alpha);
    let domain = div.conjugate_domain();
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io);
    w(out, format!("alpha = {}{}", sig6(alpha), named.map_or(String::new(), |n| format!(" ({})", n.name))))?;
    w(out, format!("dom f* = {}", describe_domain(&domain)))?;
    let row = |cells: &[String]| cells.iter().map(|c| format!("{c:>14}")).collect::<String>();
    let mut header = vec!["x".to_string(), "f(x)".into(), "f'(x)".into()];
    if named.is_some() {
        header.extend(["table f".to_string(), "table f'".into()]);
    }
    w(out, row(&header))?;
    for x in generator_sample_points(points) {
        let mut cells = vec![
            sig6(x),
            sig6(div.f(x).map_err(|e| CliError::Solver(e.to_string()))?),
            sig6(div.f_prime(x).map_err(|e| CliError::Solver(e.to_string()))?),
        ];
        if let Some(n) = named {
            cells.extend([sig6((n.f)(x)), sig6((n.f_prime)(x))]);
        }
        w(out, row(&cells))?;
    }
    let mut header = vec!["y".to_string(), "f*(y)".into(), "(f*)'(y)".into()];
    if named.is_some() {
        header.extend(["table f*".to_string(), "table (f*)'".into()]);
    }
    w(out, row(&header))?;
    for y in conjugate_sample_points(&domain, points) {
        let mut cells = vec![
            sig6(y),
            sig6(div.conjugate(y).map_err(|e| CliError::Solver(e.to_string()))?),
            sig6(div.conjugate_prime(y).map_err(|e| CliError::Solver(e.to_string()))?),
        ];
        if let Some(n) = named {
            cells.extend([sig6((n.conjugate)(y)), sig6((n.conjugate_prime)(y))]);
        }
        w(out, row(&cells))?;
    }
    Ok(())
}

fn describe_domain(domain: &crate::divergence::ConjugateDomain) -> String {
    use crate::divergence::DomainKind::*;
    match domain.kind {
        AllReals => "all reals".into(),
        UpperBounded => format!("y < {}", sig6(domain.bound)),
        LowerBounded => format!("y > {}", sig6(domain.bound)),
    }
}

fn bandit_improve(alpha: f64, eta: f64, q: Vec<f64>, values: Vec<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let div = AlphaDivergence::new(alpha).map_err(|e| CliError::Input(e.to_string()))?;
    let q = DiscreteDistribution::new(q).map_err(|e| CliError::Input(e.to_string()))?;
    let inst = BanditInstance::new(q, values, eta, div)?;
    let (pi, sol) = improve(&inst)?;
    writeln!(out, "pi = ({})", join(pi.weights().iter().copied())).map_err(io)?;
    writeln!(out, "lambda = {}", sig6(sol.lambda)).map_err(io)?;
    if sol.kappa.iter().any(|&k| k != 0.0) {
        writeln!(out, "kappa = ({})", join(sol.kappa.iter().copied())).map_err(io)?;
    }
    writeln!(out, "dual = {}", sig6(sol.dual_value)).map_err(io)?;
    writeln!(out, "expected value = {}", sig6(pi.expectation(&inst.values))).map_err(io)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Bandit,
    Demo,
    Mdp,
}

/// Preset or file, then overrides, then `--output`/`--workers`, then the
/// seed variable.
fn resolve_config(kind: Sweep, args: &SweepArgs, seed_override: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => parse_config(path, &args.overrides)?,
        (None, preset) => {
            let default = if kind == Sweep::Mdp { "chain" } else { "bandit-fig2" };
            ExperimentConfig::preset(preset.as_deref().unwrap_or(default))?.with_overrides(&args.overrides)?
        }
    };
    if let Some(dir) = &args.output {
        config.output_dir = dir.clone();
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if let Some(raw) = seed_override {
        config.seed = raw.trim().parse().map_err(|_| ConfigError::Invalid {
            field: "seed",
            reason: format!("{SEED_VAR}={raw} is not an unsigned integer"),
        })?;
    }
    config.validate()?;
    Ok(config)
}

fn sweep(kind: Sweep, args: SweepArgs, seed_override: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let config = resolve_config(kind, &args, seed_override)?;
    let output = match kind {
        Sweep::Bandit => ExperimentOutput::Bandit(run_bandit_experiment(&config)?),
        Sweep::Demo => ExperimentOutput::Demo(run_policy_demo(&config)?),
        Sweep::Mdp => ExperimentOutput::Mdp(run_mdp_experiment(&config)?),
    };
    let written = aggregate_and_export(&output, &config, &config.output_dir)?;
    summarize(&output, &config, out).map_err(io)?;
    for path in written {
        writeln!(out, "wrote {}", path.display()).map_err(io)?;
    }
    Ok(())
}

fn summarize(output: &ExperimentOutput, config: &ExperimentConfig, out: &mut dyn Write) -> std::io::Result<()> {
    match output {
        ExperimentOutput::Bandit(exp) => {
            let horizons: Vec<String> = config.snapshot_horizons.iter().map(|h| format!("regret@{h}")).collect();
            writeln!(out, "{:>8} {} {:>9}", "alpha", horizons.iter().map(|h| format!("{h:>22}")).collect::<String>(), "failures")?;
            for c in exp.curves.iter().chain(std::iter::once(&exp.ucb)) {
                let cells: String = config
                    .snapshot_horizons
                    .iter()
                    .map(|&h| {
                        let finals: Vec<f64> = c.runs.iter().filter_map(|r| r.regret.get(h).copied()).collect();
                        let (mean, ci) = mean_ci(&finals);
                        format!("{:>22}", format!("{} ± {}", sig6(mean), sig6(ci)))
                    })
                    .collect();
                writeln!(out, "{:>8} {cells} {:>9}", c.label(), c.failures)?;
            }
        }
        ExperimentOutput::Demo(demo) => {
            let best = crate::distribution::argmax(&demo.values);
            writeln!(out, "eta = {}, best arm {best} (value {})", sig6(demo.eta), sig6(demo.values[best]))?;
            writeln!(out, "{:>8} {:>10} {:>12} {:>12}", "alpha", "iterations", "p(best)", "support")?;
            for (alpha, sequence) in &demo.policies {
                let last = sequence.last().expect("sequence starts with the uniform policy");
                let support = last.weights().iter().filter(|&&p| p > 1e-9).count();
                writeln!(out, "{:>8} {:>10} {:>12} {:>12}", sig6(*alpha), sequence.len() - 1, sig6(last.get(best)), support)?;
            }
            for f in &demo.failures {
                writeln!(out, "alpha {}: {}", f.alpha.map_or("-".into(), sig6), f.message)?;
            }
        }
        ExperimentOutput::Mdp(exp) => {
            writeln!(
                out,
                "{}: optimal J = {}, uniform J = {}",
                exp.env,
                sig6(exp.optimal_return),
                sig6(exp.initial_return)
            )?;
            writeln!(out, "{:>8} {:>24} {:>9}", "alpha", "final J", "failures")?;
            for c in &exp.curves {
                let last = c.mean.last().copied().unwrap_or(f64::NAN);
                let ci = c.ci95.last().copied().unwrap_or(f64::NAN);
                writeln!(out, "{:>8} {:>24} {:>9}", sig6(c.alpha), format!("{} ± {}", sig6(last), sig6(ci)), c.failures)?;
            }
        }
    }
    Ok(())
}

/// One self-check: a name and `Ok(detail)` or `Err(detail)`.
type Check = (&'static str, fn() -> Result<String, String>);

const CHECKS: [Check; 8] = [
    ("conjugates match the named closed forms", check_table),
    ("Fenchel equality", check_fenchel),
    ("soft-max and linear bandit updates", check_bandit_closed_forms),
    ("bandit dual agrees with primal search", check_bandit_primal),
    ("temperature limits", check_temperature_limits),
    ("improved MDP joint is stationary", check_stationarity),
    ("Pearson MDP dual equals MSDA/2η + J", check_pearson_identity),
    ("bandit dual gradient", check_gradient_fd),
];

/// Print one PASS/FAIL line per check and return the number of failures.
pub fn self_check(out: &mut dyn Write) -> std::io::Result<usize> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(detail) => writeln!(out, "PASS  {name}: {detail}")?,
            Err(detail) => {
                failed += 1;
                writeln!(out, "FAIL  {name}: {detail}")?
            }
        }
    }
    writeln!(out, "{} of {} checks passed", CHECKS.len() - failed, CHECKS.len())?;
    Ok(failed)
}

fn within(label: &str, worst: f64, tol: f64) -> Result<String, String> {
    let text = format!("{label} {} (tol {})", sig6(worst), sig6(tol));
    if worst <= tol { Ok(text) } else { Err(text) }
}

fn random_bandit(rng: &mut ChaCha8Rng, arms: usize) -> (DiscreteDistribution, Vec<f64>) {
    let q = DiscreteDistribution::from_unnormalized((0..arms).map(|_| rng.random_range(0.1..1.0)).collect()).expect("positive weights");
    let values = (0..arms).map(|_| rng.random_range(-1.0..1.0)).collect();
    (q, values)
}

fn random_model(rng: &mut ChaCha8Rng, ns: usize, na: usize) -> TabularMdp {
    let mut transition = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        let row: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = row.iter().sum();
        transition.extend(row.iter().map(|p| p / total));
    }
    let reward = (0..ns * na).map(|_| rng.random_range(-1.0..1.0)).collect();
    TabularMdp::new(ns, na, transition, reward, DiscreteDistribution::uniform(ns)).expect("valid random model")
}

fn random_policy(rng: &mut ChaCha8Rng, ns: usize, na: usize) -> TabularPolicy {
    let rows = (0..ns)
        .map(|_| DiscreteDistribution::from_unnormalized((0..na).map(|_| rng.random::<f64>() + 0.1).collect()).expect("positive"))
        .collect();
    TabularPolicy::new(rows).expect("valid policy")
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn check_table() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for row in named_divergences() {
        let div = AlphaDivergence::new(row.alpha).map_err(err)?;
        for y in conjugate_sample_points(&row.domain, 100) {
            worst = worst.max((div.conjugate(y).map_err(err)? - (row.conjugate)(y)).abs());
            worst = worst.max((div.conjugate_prime(y).map_err(err)? - (row.conjugate_prime)(y)).abs() / (row.conjugate_prime)(y).abs().max(1.0));
        }
    }
    within("max error", worst, 1e-10)
}

fn check_fenchel() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for alpha in [-3.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0] {
        let div = AlphaDivergence::new(alpha).map_err(err)?;
        for y in conjugate_sample_points(&div.conjugate_domain(), 100) {
            let scale = div.conjugate(y).map_err(err)?.abs().max(1.0);
            worst = worst.max(div.fenchel_residual(y).map_err(err)? / scale);
        }
    }
    within("max relative residual", worst, 1e-8)
}

fn check_bandit_closed_forms() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (q, values) = random_bandit(&mut rng, 10);
        let eta = rng.random_range(0.2..3.0);
        let (pi, sol) = improve(&BanditInstance::new(q.clone(), values.clone(), eta, AlphaDivergence::kl()).map_err(err)?).map_err(err)?;
        let (expected, lambda) = softmax_closed_form(&q, &values, eta).map_err(err)?;
        worst = worst.max(pi.max_abs_diff(&expected)).max((sol.lambda - lambda).abs());

        let eta = crate::bandit::eta_min(&q, &values).map_err(err)? * rng.random_range(1.1..3.0);
        let (pi, sol) = improve(&BanditInstance::new(q.clone(), values.clone(), eta, AlphaDivergence::pearson()).map_err(err)?).map_err(err)?;
        let (expected, lambda) = linear_closed_form(&q, &values, eta).map_err(err)?;
        worst = worst.max(pi.max_abs_diff(&expected)).max((sol.lambda - lambda).abs());
    }
    within("max deviation", worst, 1e-6)
}

fn check_bandit_primal() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for alpha in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        for _ in 0..3 {
            let (q, values) = random_bandit(&mut rng, 3);
            let eta = rng.random_range(0.1..2.0);
            let inst = BanditInstance::new(q, values, eta, AlphaDivergence::new(alpha).map_err(err)?).map_err(err)?;
            let (pi, _) = improve(&inst).map_err(err)?;
            let oracle = primal_oracle_bandit(&inst, 40).map_err(err)?;
            let gap = primal_objective(&inst, oracle.weights()) - primal_objective(&inst, pi.weights());
            worst = worst.max(pi.max_abs_diff(&oracle)).max(gap.max(0.0));
        }
    }
    within("max policy deviation or objective gap", worst, 1e-4)
}

fn check_temperature_limits() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (q, values) = random_bandit(&mut rng, 6);
    let best = crate::distribution::argmax(&values);
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 1.0, 2.0] {
        let div = AlphaDivergence::new(alpha).map_err(err)?;
        let (cold, _) = improve(&BanditInstance::new(q.clone(), values.clone(), 1e-4, div).map_err(err)?).map_err(err)?;
        worst = worst.max(0.999 - cold.get(best));
        let (hot, _) = improve(&BanditInstance::new(q.clone(), values.clone(), 1e6, div).map_err(err)?).map_err(err)?;
        worst = worst.max(hot.max_abs_diff(&q) - 1e-3);
    }
    if worst <= 0.0 {
        Ok("α ∈ {0, 1, 2}: greedy at η = 1e-4, unchanged at η = 1e6".into())
    } else {
        Err(format!("limit missed by {}", sig6(worst)))
    }
}

fn check_stationarity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let model = random_model(&mut rng, 4, 3);
        let pi = random_policy(&mut rng, 4, 3);
        let q = state_action_distribution(&model, &pi).map_err(err)?;
        for alpha in [0.0, 1.0, 2.0] {
            let exact = exact_dual_oracle(&model, &q, &AlphaDivergence::new(alpha).map_err(err)?, 0.5).map_err(err)?;
            let mass: f64 = exact.joint.iter().sum();
            worst = worst.max(joint_stationarity_residual(&model, &exact.joint)).max((mass - 1.0).abs());
        }
    }
    within("max residual", worst, 1e-4)
}

fn check_pearson_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let model = random_model(&mut rng, 3, 2);
        let pi = random_policy(&mut rng, 3, 2);
        let q = state_action_distribution(&model, &pi).map_err(err)?;
        let j0 = crate::mdp::expected_return_exact(&model, &pi).map_err(err)?;
        let data = DualData::from_model(&model, &q, FeatureMap::one_hot(3)).map_err(err)?;
        let v = ValueFunction::tabular((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
        let eta = rng.random_range(20.0..100.0);
        let ms = ms_objectives(&model, &q, &v);
        let (value, _) =
            mdp_dual_objective(&data, &AlphaDivergence::pearson(), eta, &v, j0, &vec![0.0; data.len()]).map_err(err)?;
        worst = worst.max((value - (ms.msda / (2.0 * eta) + j0)).abs());
        if !(ms.msdbe <= ms.msda + 1e-12 && ms.msda <= ms.msdtde + 1e-12) {
            return Err("MSDBE ≤ MSDA ≤ MSDTDE violated".into());
        }
    }
    within("max deviation", worst, 1e-10)
}

fn check_gradient_fd() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for alpha in [-1.0, 0.5, 1.0, 2.0] {
        let (q, values) = random_bandit(&mut rng, 5);
        let inst = BanditInstance::new(q, values, 0.7, AlphaDivergence::new(alpha).map_err(err)?).map_err(err)?;
        let (_, sol) = improve(&inst).map_err(err)?;
        let lambda = sol.lambda + 0.05;
        let kappa = vec![0.0; inst.arms()];
        let f = |l: f64| crate::bandit::dual_objective_bandit(&inst, l, &kappa).map(|(v, _)| v);
        let (_, grad) = crate::bandit::dual_objective_bandit(&inst, lambda, &kappa).map_err(err)?;
        let h = 1e-6;
        let fd = (f(lambda + h).map_err(err)? - f(lambda - h).map_err(err)?) / (2.0 * h);
        worst = worst.max((grad[0] - fd).abs() / fd.abs().max(1.0));
    }
    within("max relative error", worst, 1e-5)
}

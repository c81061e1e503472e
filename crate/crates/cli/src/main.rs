use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use errexp::certify::{
    branch_and_bound, certify_upper, check_certificate, nonconvexity_certificate,
    read_certificate_file, resume, verify_upper_bound, write_certificate_file, Certificate,
    LowerCertificate, SearchConfig, SearchOutcome,
};
use errexp::distributions::io::{read_pmf, write_pmf};
use errexp::exponents::{ep_of_eq, eq_of_ep, ExponentPair};
use errexp::hypothesis::{epsilon_margin, read_samples, TestConfig, TestKind};
use errexp::rational::{dyadic, format_rational, parse_rational, to_f64, Rational};
use errexp::simulator::{run_plan, SimPlan};
use errexp::{example1, marginals, Error, FinitePmf};

mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const BUDGET: u8 = 4;
    pub const USAGE: u8 = 64;
}

/// Error exponents for testing a joint distribution against product
/// alternatives.
#[derive(Parser, Debug)]
#[command(name = "errexp", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Top precision used by certified arithmetic.
    #[arg(long, global = true, default_value_t = 256)]
    precision_bits: u32,
    /// Where to write the main result (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Divergences of P, and of P against Q when given.
    Divergence(DivergenceArgs),
    /// Primal and dual estimates of the exponent trade-off.
    Exponent(ExponentArgs),
    /// Runs the three tests on a sample file.
    Test(TestArgs),
    /// Monte Carlo error curves with their envelopes.
    Simulate(SimulateArgs),
    /// Certified bounds.
    #[command(subcommand)]
    Certify(CertifyCommand),
}

#[derive(Args, Debug)]
struct DivergenceArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: Option<PathBuf>,
    /// Rényi orders; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    starts: usize,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ExponentSide {
    /// Evaluate E_P at this E_Q.
    #[arg(long)]
    ep_of_eq: Option<String>,
    /// Evaluate E_Q at this E_P.
    #[arg(long)]
    eq_of_ep: Option<String>,
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[arg(long)]
    p: PathBuf,
    #[command(flatten)]
    side: ExponentSide,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    /// Print how the primal estimate compares with this value.
    #[arg(long)]
    compare: Option<String>,
    /// Write the optimizing R as a PMF file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    ep: String,
    #[arg(long)]
    eq: String,
    #[arg(long)]
    eps: String,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    ep: String,
    #[arg(long)]
    eq: String,
    /// Defaults to half the estimated achievability margin.
    #[arg(long)]
    eps: Option<String>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "50,100,150,200,250,300,350,400"
    )]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Joint PMF files whose marginals form an alternative; defaults to the
    /// marginals of P.
    #[arg(long)]
    alternative: Vec<PathBuf>,
    /// Subset of emi, hoeffding, glrt.
    #[arg(long, value_delimiter = ',', default_value = "emi,hoeffding,glrt")]
    tests: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum CertifyCommand {
    /// Branch and bound for E_P(e_q) ≥ target.
    Lower(LowerArgs),
    /// Verify E_P(e_q) ≤ claim with a witness, searching one if absent.
    Upper(UpperArgs),
    /// Two upper bounds and a midpoint lower bound above their chord.
    Nonconvexity(NonconvexityArgs),
    /// Re-verify a certificate file.
    Check { file: PathBuf },
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 5_000_000)]
    budget: usize,
    #[arg(long, default_value_t = 4096)]
    batch: usize,
    /// α alternatives tried per box.
    #[arg(long, default_value_t = 0)]
    extra_alphas: usize,
}

#[derive(Args, Debug)]
struct LowerArgs {
    #[arg(long, required_unless_present = "resume")]
    p: Option<PathBuf>,
    #[arg(long, required_unless_present = "resume")]
    eq: Option<String>,
    #[arg(long, required_unless_present = "resume")]
    target: Option<String>,
    /// Continue from a frontier written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct UpperArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    eq: String,
    #[arg(long)]
    claim: String,
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    starts: usize,
}

#[derive(Args, Debug)]
struct NonconvexityArgs {
    /// Built-in instance; replaces the explicit arguments.
    #[arg(long, value_parser = ["example1"])]
    preset: Option<String>,
    #[arg(long, required_unless_present = "preset")]
    p: Option<PathBuf>,
    #[arg(long, required_unless_present = "preset")]
    eq1: Option<String>,
    #[arg(long, required_unless_present = "preset")]
    claim1: Option<String>,
    #[arg(long, required_unless_present = "preset")]
    eq2: Option<String>,
    #[arg(long, required_unless_present = "preset")]
    claim2: Option<String>,
    /// Lower bound to prove at the midpoint (default: chord plus 2^-60).
    #[arg(long)]
    target: Option<String>,
    /// Reuse a complete lower-bound certificate instead of searching.
    #[arg(long)]
    lower: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[command(flatten)]
    search: SearchArgs,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) | Error::EmptyRegion(_) | Error::Domain(_) => exit::INFEASIBLE,
            Error::InvalidArgument(_)
            | Error::ShapeMismatch { .. }
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_) => exit::INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: exit::INPUT,
        message: message.into(),
    }
}

fn rational(name: &str, s: &str) -> Result<Rational, Failure> {
    parse_rational(s).map_err(|e| input(format!("--{name}: {e}")))
}

fn real(name: &str, s: &str) -> Result<f64, Failure> {
    rational(name, s).map(|r| to_f64(&r))
}

fn load(path: &Path) -> Result<FinitePmf, Failure> {
    read_pmf(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Writes the report to `--output` or stdout.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_exp(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf (infeasible)".into()
    } else {
        format!("{v:.17}")
    }
}

fn divergence(cli: &Cli, a: &DivergenceArgs) -> CliResult {
    let p = load(&a.p)?;
    let mut out = String::new();
    let backing = |f: &FinitePmf| format!("{:?}", f.backing()).to_lowercase();
    writeln!(out, "backing\t{}", backing(&p)).unwrap();
    if p.require_joint().is_ok() {
        writeln!(out, "I(P)\t{:.17}", errexp::mutual_information(&p)?).unwrap();
        for &alpha in &a.alpha {
            let order = errexp::RenyiOrder::new(alpha)?;
            writeln!(
                out,
                "J_{alpha}(P)\t{:.17}",
                errexp::j_alpha(&p, order, a.starts)?
            )
            .unwrap();
        }
    }
    if let Some(q) = &a.q {
        let q = load(q)?;
        writeln!(out, "D(P||Q)\t{:.17}", errexp::kl_divergence(&p, &q)?).unwrap();
        for &alpha in &a.alpha {
            let order = errexp::RenyiOrder::new(alpha)?;
            writeln!(
                out,
                "D_{alpha}(P||Q)\t{:.17}",
                errexp::renyi_divergence(&p, &q, order)?
            )
            .unwrap();
        }
    }
    emit(&cli.output, &out)?;
    Ok(exit::OK)
}

fn exponent(cli: &Cli, a: &ExponentArgs) -> CliResult {
    let p = load(&a.p)?.to_float();
    let (label, arg, est) = match (&a.side.ep_of_eq, &a.side.eq_of_ep) {
        (Some(e), _) => ("E_P", e, ep_of_eq(&p, real("ep-of-eq", e)?, a.starts)?),
        (_, Some(e)) => ("E_Q", e, eq_of_ep(&p, real("eq-of-ep", e)?, a.starts)?),
        _ => unreachable!("clap enforces one side"),
    };
    let mut out = String::new();
    writeln!(out, "{label}({arg})").unwrap();
    writeln!(out, "primal\t{}", fmt_exp(est.value)).unwrap();
    writeln!(out, "dual\t{}", fmt_exp(est.dual_lower)).unwrap();
    if est.value.is_finite() && est.dual_lower.is_finite() {
        writeln!(out, "gap\t{:.3e}", est.value - est.dual_lower).unwrap();
    }
    if let Some(c) = &a.compare {
        let c = real("compare", c)?;
        let rel = if est.value <= c { "<=" } else { ">" };
        writeln!(
            out,
            "primal {rel} {c:.17} (difference {:.3e})",
            est.value - c
        )
        .unwrap();
    }
    if let (Some(path), Some(w)) = (&a.witness, &est.witness) {
        write_pmf(path, w)?;
    }
    emit(&cli.output, &out)?;
    Ok(if est.value.is_infinite() {
        exit::INFEASIBLE
    } else {
        exit::OK
    })
}

fn pair(ep: &str, eq: &str) -> Result<ExponentPair, Failure> {
    Ok(ExponentPair::new(real("ep", ep)?, real("eq", eq)?)?)
}

fn test(cli: &Cli, a: &TestArgs) -> CliResult {
    let p = load(&a.p)?.to_float();
    let (rows, cols) = p.require_joint()?;
    let samples =
        read_samples(&a.samples).map_err(|e| input(format!("{}: {e}", a.samples.display())))?;
    let t = errexp::hypothesis::empirical_type(rows, cols, &samples)?;
    let cfg = TestConfig::new(pair(&a.ep, &a.eq)?, real("eps", &a.eps)?, p)?;
    let verdicts = TestKind::ALL
        .into_iter()
        .map(|k| k.run(&t, &cfg).map(|v| (k, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = verdicts
        .iter()
        .map(|(k, v)| format!("{}={}", k.name(), v.decision))
        .collect::<Vec<_>>()
        .join(" ");
    out.push('\n');
    for (k, v) in &verdicts {
        writeln!(out, "{}_statistic\t{:.17}", k.name(), v.statistic).unwrap();
    }
    emit(&cli.output, &out)?;
    Ok(exit::OK)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CliResult {
    let p = load(&a.p)?.to_float();
    let pair = pair(&a.ep, &a.eq)?;
    let eps = match &a.eps {
        Some(e) => real("eps", e)?,
        None => epsilon_margin(&p, pair, 8)?,
    };
    let tests = a
        .tests
        .iter()
        .map(|s| s.parse::<TestKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let alternatives = if a.alternative.is_empty() {
        vec![marginals(&p)?]
    } else {
        a.alternative
            .iter()
            .map(|path| Ok(marginals(&load(path)?.to_float())?))
            .collect::<Result<Vec<_>, Failure>>()?
    };
    let plan = SimPlan::new(p.clone(), alternatives, a.n.clone(), a.trials, cli.seed)?;
    let cfg = TestConfig::new(pair, eps, p)?;
    let curve = run_plan(&plan, &cfg, &tests)?;
    let mut out = format!("# epsilon {eps:e}\n");
    out.push_str(&curve.to_table());
    emit(&cli.output, &out)?;
    Ok(exit::OK)
}

fn search_config(cli: &Cli, s: &SearchArgs) -> SearchConfig {
    let ladder = [128usize, 256, 512]
        .into_iter()
        .filter(|&b| b <= cli.precision_bits.max(128) as usize)
        .collect();
    SearchConfig {
        budget: s.budget,
        batch: s.batch.max(1),
        extra_alphas: s.extra_alphas,
        ladder,
    }
}

fn certificate_path(cli: &Cli, default: &str) -> PathBuf {
    cli.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Runs the search; on budget exhaustion writes the frontier and fails with
/// the budget exit code.
fn run_lower(
    cli: &Cli,
    start: Result<LowerCertificate, (FinitePmf, Rational, Rational)>,
    s: &SearchArgs,
    frontier_path: &Path,
) -> Result<LowerCertificate, Failure> {
    let cfg = search_config(cli, s);
    let (outcome, stats) = match start {
        Ok(front) => resume(front, &cfg)?,
        Err((p, e_q, target)) => branch_and_bound(&p, &e_q, &target, &cfg)?,
    };
    eprintln!(
        "evaluated {} boxes: {} leaves ({} above f64), {} empty, depth {}",
        stats.evaluated, stats.leaves, stats.high_precision, stats.empty, stats.max_depth
    );
    match outcome {
        SearchOutcome::Certified(c) => Ok(c),
        SearchOutcome::BudgetExhausted(front) => {
            write_certificate_file(frontier_path, &Certificate::LowerBound(front))?;
            Err(Failure {
                code: exit::BUDGET,
                message: format!(
                    "budget exhausted; frontier written to {}",
                    frontier_path.display()
                ),
            })
        }
    }
}

fn certify(cli: &Cli, c: &CertifyCommand) -> CliResult {
    match c {
        CertifyCommand::Lower(a) => {
            let path = certificate_path(cli, "lower.cert");
            let start = match &a.resume {
                Some(file) => match read_certificate_file(file)? {
                    Certificate::LowerBound(front) => Ok(front),
                    other => {
                        return Err(input(format!(
                            "{} holds a {} certificate",
                            file.display(),
                            other.kind()
                        )))
                    }
                },
                None => {
                    let p = load(a.p.as_deref().expect("clap requires --p"))?;
                    Err((
                        p,
                        rational("eq", a.eq.as_deref().expect("clap requires --eq"))?,
                        rational(
                            "target",
                            a.target.as_deref().expect("clap requires --target"),
                        )?,
                    ))
                }
            };
            let cert = run_lower(cli, start, &a.search, &path)?;
            let report = errexp::certify::check_lower(&cert)?;
            write_certificate_file(&path, &Certificate::LowerBound(cert.clone()))?;
            println!(
                "E_P({}) >= {} certified with {} boxes; written to {}",
                format_rational(&cert.e_q),
                format_rational(&cert.value),
                report.leaves + report.empty,
                path.display()
            );
            Ok(exit::OK)
        }
        CertifyCommand::Upper(a) => {
            let p = load(&a.p)?;
            let e_q = rational("eq", &a.eq)?;
            let claim = rational("claim", &a.claim)?;
            let cert = match &a.witness {
                Some(w) => verify_upper_bound(&p, &load(w)?, &e_q, &claim, cli.precision_bits)?,
                None => certify_upper(&p, &e_q, &claim, cli.precision_bits, a.starts)?,
            };
            let path = certificate_path(cli, "upper.cert");
            write_certificate_file(&path, &Certificate::UpperBound(cert))?;
            println!(
                "E_P({}) <= {} certified; written to {}",
                format_rational(&e_q),
                format_rational(&claim),
                path.display()
            );
            Ok(exit::OK)
        }
        CertifyCommand::Nonconvexity(a) => nonconvexity(cli, a),
        CertifyCommand::Check { file } => {
            let cert = read_certificate_file(file)?;
            let report = check_certificate(&cert)?;
            match report {
                Some(r) => println!(
                    "{} certificate verified: {} leaves, {} empty boxes, depth {}",
                    cert.kind(),
                    r.leaves,
                    r.empty,
                    r.max_depth
                ),
                None => println!("{} certificate verified", cert.kind()),
            }
            Ok(exit::OK)
        }
    }
}

fn nonconvexity(cli: &Cli, a: &NonconvexityArgs) -> CliResult {
    let (p, eq1, c1, eq2, c2) = if a.preset.is_some() {
        (
            example1::pmf(),
            example1::eq_low(),
            example1::claim_low(),
            example1::eq_high(),
            example1::claim_high(),
        )
    } else {
        let need = |v: &Option<String>, name: &str| {
            rational(name, v.as_deref().expect("clap requires it"))
        };
        (
            load(a.p.as_deref().expect("clap requires --p"))?,
            need(&a.eq1, "eq1")?,
            need(&a.claim1, "claim1")?,
            need(&a.eq2, "eq2")?,
            need(&a.claim2, "claim2")?,
        )
    };
    let two = Rational::from_integer(2.into());
    let mid = (&eq1 + &eq2) / &two;
    let chord = (&c1 + &c2) / &two;
    let target = match &a.target {
        Some(t) => rational("target", t)?,
        None if a.preset.is_some() => example1::target_mid(),
        None => chord.clone() + dyadic(1, 60),
    };
    let bits = cli.precision_bits;
    let up1 = certify_upper(&p, &eq1, &c1, bits, a.starts)?;
    eprintln!("upper bound at {} certified", format_rational(&eq1));
    let up2 = certify_upper(&p, &eq2, &c2, bits, a.starts)?;
    eprintln!("upper bound at {} certified", format_rational(&eq2));
    let path = certificate_path(cli, "nonconvexity.cert");
    let lower = match &a.lower {
        Some(file) => match read_certificate_file(file)? {
            Certificate::LowerBound(l) => l,
            other => {
                return Err(input(format!(
                    "{} holds a {} certificate",
                    file.display(),
                    other.kind()
                )))
            }
        },
        None => {
            let frontier = path.with_extension("frontier");
            run_lower(cli, Err((p.clone(), mid, target)), &a.search, &frontier)?
        }
    };
    let cert = nonconvexity_certificate([up1, up2], lower)?;
    let gap = cert.gap.clone();
    let cert = Certificate::Nonconvexity(Box::new(cert));
    check_certificate(&cert)?;
    write_certificate_file(&path, &cert)?;
    println!(
        "non-convexity certified with gap {} ({:.3e}); written to {}",
        format_rational(&gap),
        to_f64(&gap),
        path.display()
    );
    Ok(exit::OK)
}

fn run(cli: &Cli) -> CliResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| input(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Divergence(a) => divergence(cli, a),
        Command::Exponent(a) => exponent(cli, a),
        Command::Test(a) => test(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Certify(c) => certify(cli, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

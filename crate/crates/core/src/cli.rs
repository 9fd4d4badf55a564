//! The `learnwidth` command line.
//!
//! Exit codes: 0 yes / success, 1 no, 2 boundary, 64 usage, 65 unreadable or
//! malformed input, 70 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clique::{decide_clique_with, load_graph, CliqueMethod};
use crate::error::Error;
use crate::incoherence::{self, certificate_from_decomposition, normalize_trace, verify_certificate, Certificate, Config, Method};
use crate::io::{self, Input};
use crate::learnability::{self, fixture_states, witness_povm, Fixture, Verdict, Width, FIXTURE_NAMES, POVM_TOL};
use crate::matrix::{HermitianMatrix, StateList};
use crate::subsets::DEFAULT_CAP;

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_BOUNDARY: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Subset,
    Lowrank,
    Oracle,
    Sdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Human,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "learnwidth", version, about = "k-learnability of state lists and factor width of PSD matrices")]
pub struct Cli {
    /// Weak-membership radius; defaults to 1e-6 (1 + ||G||_F) / n.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Feasibility precision for decompositions and factor width.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub eps: f64,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, global = true, value_enum, default_value_t = OutputArg::Human)]
    pub output: OutputArg,
    /// Seed for `random(n,d)` fixtures written without one.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Subset enumeration cap.
    #[arg(long, global = true, env = "LEARNWIDTH_CAP", default_value_t = DEFAULT_CAP)]
    pub cap: u128,
    #[command(subcommand)]
    pub command: Command,
}

/// Inputs are JSON files, or `fixture:NAME` for a built-in ensemble.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide k-learnability of a state list (exit 0 yes, 1 no, 2 boundary).
    Learnable {
        input: String,
        #[arg(short, long)]
        k: usize,
    },
    /// Learning width of a state list or factor width of a matrix.
    Width { input: String },
    /// Write a membership certificate for a matrix (or G/n of a state list).
    Certificate {
        input: String,
        #[arg(short, long)]
        k: usize,
        /// Destination file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate against a matrix (exit 0 valid, 1 invalid).
    Verify {
        input: String,
        certificate: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Decide whether a graph contains a k-clique (exit 0 yes, 1 no).
    Clique {
        graph: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
    /// Extract a zero-error POVM for a k-learnable state list.
    Povm {
        input: String,
        #[arg(short, long)]
        k: usize,
        /// Destination file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List built-in fixtures, or print one as state-list JSON.
    Fixtures { name: Option<String> },
}

/// Failure carrying its exit code.
struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Contract(_) | Error::CapExceeded { .. } | Error::UnknownFixture { .. } => EXIT_USAGE,
            Error::Solver { .. } | Error::EigenNonConvergence { .. } => EXIT_SOFTWARE,
            _ => EXIT_DATA,
        };
        Fail(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

type CliResult = std::result::Result<i32, Fail>;

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_YES };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn json(&self) -> bool {
        self.cli.output == OutputArg::Json
    }

    fn emit<T: Serialize>(&mut self, value: &T, human: &str) -> std::result::Result<(), Fail> {
        let r = if self.json() {
            writeln!(self.out, "{}", serde_json::to_string(value).expect("serializable"))
        } else {
            writeln!(self.out, "{human}")
        };
        r.map_err(|e| Fail(EXIT_DATA, e.to_string()))
    }

    fn config(&self) -> std::result::Result<Config, Fail> {
        let method = match self.cli.method {
            MethodArg::Auto => Method::Auto,
            MethodArg::Subset => Method::Subset,
            MethodArg::Lowrank => Method::LowRank,
            m => return Err(usage(format!("--method {m:?} applies to the clique command only").to_lowercase())),
        };
        Ok(Config { cap: self.cli.cap, method, ..Config::default() })
    }

    fn artifact(&mut self, path: Option<&Path>, text: &str) -> std::result::Result<(), Fail> {
        match path {
            Some(p) => std::fs::write(p, format!("{text}\n"))
                .map_err(|e| Fail(EXIT_DATA, format!("cannot write {}: {e}", p.display()))),
            None => writeln!(self.out, "{text}").map_err(|e| Fail(EXIT_DATA, e.to_string())),
        }
    }

    /// Summary stream: stdout when the artifact went to a file.
    fn summary(&mut self, to_file: bool) -> &mut dyn Write {
        if to_file {
            &mut *self.out
        } else {
            &mut *self.err
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    for (name, v) in [("--delta", cli.delta), ("--eps", Some(cli.eps))] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{name} must be positive, got {v}")));
            }
        }
    }
    let mut ctx = Ctx { cli, out, err };
    match &cli.command {
        Command::Learnable { input, k } => cmd_learnable(&mut ctx, input, *k),
        Command::Width { input } => cmd_width(&mut ctx, input),
        Command::Certificate { input, k, out } => cmd_certificate(&mut ctx, input, *k, out.as_deref()),
        Command::Verify { input, certificate, tol } => cmd_verify(&mut ctx, input, certificate, *tol),
        Command::Clique { graph, k } => cmd_clique(&mut ctx, graph, *k),
        Command::Povm { input, k, out } => cmd_povm(&mut ctx, input, *k, out.as_deref()),
        Command::Fixtures { name } => cmd_fixtures(&mut ctx, name.as_deref()),
    }
}

fn read_file(path: &Path) -> std::result::Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(EXIT_DATA, format!("cannot read {}: {e}", path.display())))
}

fn parse_fixture(name: &str, seed: u64) -> std::result::Result<Fixture, Fail> {
    Ok(Fixture::parse_seeded(name, seed)?)
}

fn load_input(ctx: &Ctx, source: &str) -> std::result::Result<Input, Fail> {
    if let Some(name) = source.strip_prefix("fixture:") {
        return Ok(Input::States(fixture_states(&parse_fixture(name, ctx.cli.seed)?)?));
    }
    let text = read_file(Path::new(source))?;
    Ok(io::input_from_json(&text)?)
}

fn load_states(ctx: &Ctx, source: &str) -> std::result::Result<StateList, Fail> {
    match load_input(ctx, source)? {
        Input::States(s) => Ok(s),
        Input::Matrix(_) => Err(Fail(EXIT_DATA, format!("{source}: expected a state list, found a matrix"))),
    }
}

/// The point of `I_k` questions: `G/n` for states, the trace-normalized
/// matrix otherwise.
fn load_point(ctx: &Ctx, source: &str) -> std::result::Result<(HermitianMatrix, f64), Fail> {
    Ok(match load_input(ctx, source)? {
        Input::States(s) => (learnability::normalized_gram(&s), 1.0),
        Input::Matrix(m) => normalize_trace(&m),
    })
}

fn delta_for(ctx: &Ctx, states: &StateList) -> f64 {
    ctx.cli.delta.unwrap_or_else(|| learnability::default_delta(states))
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Learnable => EXIT_YES,
        Verdict::NotLearnable => EXIT_NO,
        Verdict::Boundary => EXIT_BOUNDARY,
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Learnable => "LEARNABLE",
        Verdict::NotLearnable => "NOT_LEARNABLE",
        Verdict::Boundary => "BOUNDARY",
    }
}

fn cmd_learnable(ctx: &mut Ctx, input: &str, k: usize) -> CliResult {
    let states = load_states(ctx, input)?;
    let cfg = ctx.config()?;
    let delta = delta_for(ctx, &states);
    let r = learnability::is_k_learnable_with(&cfg, &states, k, delta)?;
    let human = format!(
        "{} (k = {k})\ndistance to I_k: {:.6e}\ndelta: {:.6e}, precision: {:.6e}{}",
        verdict_word(r.verdict),
        r.distance,
        r.delta,
        r.precision,
        r.max_violation.map(|v| format!("\nPOVM max violation: {v:.3e}")).unwrap_or_default()
    );
    ctx.emit(&r, &human)?;
    Ok(verdict_code(r.verdict))
}

#[derive(Serialize)]
struct WidthReport {
    kind: &'static str,
    width: Width,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
}

fn cmd_width(ctx: &mut Ctx, input: &str) -> CliResult {
    let cfg = ctx.config()?;
    let report = match load_input(ctx, input)? {
        Input::States(s) => {
            let delta = delta_for(ctx, &s);
            let width = learnability::learning_width_with(&cfg, &s, delta)?;
            WidthReport { kind: "learning_width", width, delta: Some(delta), eps: None }
        }
        Input::Matrix(m) => {
            let (x, _) = normalize_trace(&m);
            let width = Width::Exact(cfg.factor_width(&x, ctx.cli.eps)?);
            WidthReport { kind: "factor_width", width, delta: None, eps: Some(ctx.cli.eps) }
        }
    };
    let human = report.width.to_string();
    ctx.emit(&report, &human)?;
    Ok(match report.width {
        Width::Exact(_) => EXIT_YES,
        Width::Interval(..) => EXIT_BOUNDARY,
    })
}

#[derive(Serialize)]
struct NonMember {
    k: usize,
    member: bool,
    distance: Option<f64>,
}

fn cmd_certificate(ctx: &mut Ctx, input: &str, k: usize, out: Option<&Path>) -> CliResult {
    let cfg = ctx.config()?;
    let (x, scale) = load_point(ctx, input)?;
    let eps = ctx.cli.eps.min(incoherence::WITNESS_EPS);
    let ladder = [eps / 10.0, eps, 1e-8];
    let fit = 1e-8 * (1.0 + x.frobenius_norm());
    let Some(d) = cfg.search_decomposition(&x, k, &ladder, |d| d.residual(&x) <= fit)? else {
        let distance = cfg.distance_to_ik(&x, k, ctx.cli.eps).ok();
        let human = format!(
            "not {k}-incoherent; distance to I_k: {}",
            distance.map(|d| format!("{d:.6e}")).unwrap_or_else(|| "unavailable".into())
        );
        ctx.emit(&NonMember { k, member: false, distance }, &human)?;
        return Ok(EXIT_NO);
    };
    let cert = certificate_from_decomposition(&d, 1e-12)?;
    ctx.artifact(out, &cert.to_json())?;
    let check = verify_certificate(&x, &cert, 1e-7);
    let w = ctx.summary(out.is_some());
    let _ = writeln!(
        w,
        "certificate: {} vectors (limit {}), trace scale {scale:.6e}, self-check {}",
        cert.vectors.len(),
        x.dim() * x.dim() + 1,
        if check.valid { "passed" } else { "FAILED" }
    );
    Ok(EXIT_YES)
}

fn cmd_verify(ctx: &mut Ctx, input: &str, cert_path: &Path, tol: f64) -> CliResult {
    let (x, _) = load_point(ctx, input)?;
    let cert = Certificate::from_json(&read_file(cert_path)?)?;
    let check = verify_certificate(&x, &cert, tol);
    let human = match check.failed {
        None => format!("valid: {}", check.detail),
        Some(c) => format!("invalid ({c:?} clause): {}", check.detail).to_lowercase(),
    };
    ctx.emit(&check, &human)?;
    Ok(if check.valid { EXIT_YES } else { EXIT_NO })
}

fn cmd_clique(ctx: &mut Ctx, graph: &Path, k: usize) -> CliResult {
    let method = match ctx.cli.method {
        MethodArg::Auto | MethodArg::Oracle => CliqueMethod::Oracle,
        MethodArg::Sdp => CliqueMethod::Sdp,
        m => return Err(usage(format!("--method {m:?} does not apply to the clique command").to_lowercase())),
    };
    let g = load_graph(&read_file(graph)?)?;
    let cfg = Config { cap: ctx.cli.cap, ..Config::default() };
    let r = decide_clique_with(&cfg, &g, k, method)?;
    let human = format!(
        "{} (k = {k})\nmu: {:.12e}\ngamma: {:.12e}, delta: {:.6e}",
        if r.clique { "CLIQUE" } else { "NO_CLIQUE" },
        r.mu,
        r.gamma,
        r.delta
    );
    ctx.emit(&r, &human)?;
    Ok(if r.clique { EXIT_YES } else { EXIT_NO })
}

fn cmd_povm(ctx: &mut Ctx, input: &str, k: usize, out: Option<&Path>) -> CliResult {
    let states = load_states(ctx, input)?;
    let cfg = ctx.config()?;
    let delta = delta_for(ctx, &states);
    let r = learnability::is_k_learnable_with(&cfg, &states, k, delta)?;
    if r.verdict != Verdict::Learnable {
        let human = format!("{} (k = {k}); no POVM written", verdict_word(r.verdict));
        ctx.emit(&r, &human)?;
        return Ok(verdict_code(r.verdict));
    }
    let povm = match r.povm {
        Some(p) => p,
        None => witness_povm(&cfg, &states, k)?
            .ok_or_else(|| Fail(EXIT_SOFTWARE, "learnable within delta but no exact decomposition found".into()))?,
    };
    ctx.artifact(out, &povm.to_json())?;
    let check = learnability::verify_povm(&states, &povm, POVM_TOL);
    let w = ctx.summary(out.is_some());
    let _ = writeln!(
        w,
        "POVM: {} elements, max violation {:.3e}, verification {}",
        povm.elements.len(),
        check.max_violation,
        if check.valid { "passed" } else { "FAILED" }
    );
    Ok(EXIT_YES)
}

fn cmd_fixtures(ctx: &mut Ctx, name: Option<&str>) -> CliResult {
    match name {
        None => {
            for n in FIXTURE_NAMES {
                writeln!(ctx.out, "{n}").map_err(|e| Fail(EXIT_DATA, e.to_string()))?;
            }
        }
        Some(n) => {
            let s = fixture_states(&parse_fixture(n, ctx.cli.seed)?)?;
            writeln!(ctx.out, "{}", io::states_to_json(&s)).map_err(|e| Fail(EXIT_DATA, e.to_string()))?;
        }
    }
    Ok(EXIT_YES)
}

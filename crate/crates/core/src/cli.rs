//! The `lipcert` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or validation error,
//! 3 budget exceeded / bound not applicable / unsupported norm pair.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::activations::{self, certify_averagedness, verify_prox_representation, SamplingPlan};
use crate::certificates::{
    certify_method, CertificateReport, CertifyOptions, Method, DEFAULT_VARTHETA_BUDGET,
};
use crate::error::LipError;
use crate::experiments::{self, MonteCarloConfig};
use crate::linalg::{spectral_norm, NormSpec};
use crate::network::{activation_spec, parse_scalar_spec, Network};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_APPLICABLE: i32 = 3;

/// Environment variable overriding the default ϑ pattern budget.
pub const BUDGET_ENV: &str = "LIPCERT_BUDGET";

#[derive(Parser, Debug)]
#[command(
    name = "lipcert",
    version,
    about = "Lipschitz certificates for layered networks"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute Lipschitz bounds for a lipnet file.
    Certify(CertifyArgs),
    /// Print the structure of a lipnet file.
    Inspect {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List or check the activation catalog.
    Activations {
        #[command(subcommand)]
        command: ActivationsCommand,
    },
    /// Reproduce the numerical studies.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Product,
    Theta,
    Vartheta,
    Positive,
    Absolute,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Product => Method::Product,
            MethodArg::Theta => Method::Theta,
            MethodArg::Vartheta => Method::Vartheta,
            MethodArg::Positive => Method::Positive,
            MethodArg::Absolute => Method::Absolute,
        }
    }
}

#[derive(Args, Debug)]
struct CertifyArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Input norm, `p[:w1,w2,...]` with p in {1, 2, inf, ...}.
    #[arg(long, default_value = "2")]
    norm_in: String,
    /// Output norm, same syntax as --norm-in.
    #[arg(long, default_value = "2")]
    norm_out: String,
    /// Maximum number of diagonal patterns enumerated for vartheta.
    #[arg(long)]
    budget: Option<u64>,
    /// Random starts for the vartheta lower bound when enumeration is too large.
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
    /// Record elapsed_ms in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum ActivationsCommand {
    /// Catalog entries with their averagedness constant.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Check averagedness (and the prox representation, when known).
    Certify {
        /// Catalog name, optionally with parameters, e.g. `elu(beta=0.5)`.
        name: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentName {
    Numeric,
    Tanh,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Layer widths N_0,...,N_m.
    #[arg(long, default_value = "8,10,6,3")]
    dims: String,
    /// Hidden averagedness constants (default 1/2 each).
    #[arg(long)]
    alpha: Option<String>,
    /// Also compute vartheta by enumeration.
    #[arg(long)]
    vartheta: bool,
    /// Write per-trial ratios as CSV.
    #[arg(long)]
    dump_trials: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// A failed command: exit code plus message for stderr.
struct Failure(i32, String);

impl From<LipError> for Failure {
    fn from(e: LipError) -> Self {
        Failure(exit_code(&e), e.to_string())
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &LipError) -> i32 {
    match e {
        LipError::Budget { .. } | LipError::NotApplicable(_) | LipError::UnsupportedNorm(_) => {
            EXIT_NOT_APPLICABLE
        }
        _ => EXIT_INPUT,
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INPUT, msg.into())
}

/// Runs the CLI with the given arguments (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Certify(a) => cmd_certify(a, out, err),
        Command::Inspect { path, json } => cmd_inspect(&path, json, out),
        Command::Activations { command } => cmd_activations(command, out),
        Command::Experiment(a) => cmd_experiment(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load_network(path: &PathBuf) -> Result<Network, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    Network::parse(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn resolve_budget(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            input_error(format!(
                "{BUDGET_ENV} must be a nonnegative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(DEFAULT_VARTHETA_BUDGET),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure(EXIT_INPUT, format!("cannot serialize report: {e}")))?;
    writeln!(out, "{text}").map_err(|e| Failure(EXIT_INPUT, e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn print_report(out: &mut dyn Write, r: &CertificateReport) -> std::io::Result<()> {
    let vartheta_label = if r.vartheta_exact {
        "vartheta (exact)"
    } else {
        "vartheta"
    };
    let rows = [
        ("linear_lower", Some(r.linear_lower)),
        ("theta", r.theta),
        (vartheta_label, r.vartheta),
        ("vartheta_sample_lower", r.vartheta_sample_lower),
        ("positive_collapse", r.positive_collapse),
        ("absolute_bound", r.absolute_bound),
        ("product_bound", Some(r.product_bound)),
    ];
    writeln!(out, "norms      {} -> {}", r.norm_in, r.norm_out)?;
    for (name, v) in rows {
        writeln!(out, "{name:<22} {}", fmt_opt(v))?;
    }
    writeln!(out, "{:<22} {:.6}", "certified", r.certified)?;
    if let Some(ms) = r.elapsed_ms {
        writeln!(out, "{:<22} {ms:.1}", "elapsed_ms")?;
    }
    Ok(())
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let net = load_network(&a.path)?;
    let norm_in: NormSpec = a
        .norm_in
        .parse()
        .map_err(|e: LipError| input_error(format!("--norm-in: {e}")))?;
    let norm_out: NormSpec = a
        .norm_out
        .parse()
        .map_err(|e: LipError| input_error(format!("--norm-out: {e}")))?;
    let opts = CertifyOptions {
        norm_in,
        norm_out,
        vartheta_budget: resolve_budget(a.budget)?,
        sample_trials: a.trials,
        seed: a.seed,
        timings: a.timings,
    };
    let report = certify_method(&net, &opts, a.method.into())?;
    if report.diagnostics.product_fallback {
        let _ = writeln!(
            err,
            "warning: product_bound uses spectral norms; it is not a certificate in the requested norms"
        );
    }
    if a.json {
        emit_json(out, &report)?;
    } else {
        print_report(out, &report).map_err(|e| input_error(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LayerSummary {
    dims: [usize; 2],
    activation: String,
    alpha: f64,
    separable: bool,
    spectral_norm: f64,
}

#[derive(Serialize)]
struct NetworkSummary {
    input_dim: usize,
    depth: usize,
    layers: Vec<LayerSummary>,
}

fn cmd_inspect(path: &PathBuf, json: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let net = load_network(path)?;
    let layers = net
        .layers()
        .iter()
        .map(|l| {
            let mut spec = activation_spec(l.activation());
            if matches!(
                l.activation().kind(),
                activations::VectorKind::Conjugated { .. }
            ) {
                spec.push_str(" (with basis)");
            }
            Ok(LayerSummary {
                dims: [l.output_dim(), l.input_dim()],
                activation: spec,
                alpha: l.alpha(),
                separable: l.activation().is_separable(),
                spectral_norm: spectral_norm(l.weight())?,
            })
        })
        .collect::<Result<Vec<_>, LipError>>()?;
    let summary = NetworkSummary {
        input_dim: net.input_dim(),
        depth: net.depth(),
        layers,
    };
    if json {
        emit_json(out, &summary)?;
        return Ok(EXIT_OK);
    }
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(
            out,
            "input_dim {}  layers {}",
            summary.input_dim, summary.depth
        )?;
        for (i, l) in summary.layers.iter().enumerate() {
            writeln!(
                out,
                "layer {}: {}x{}  {}  alpha {}  {}  ||W|| {:.6}",
                i + 1,
                l.dims[0],
                l.dims[1],
                l.activation,
                l.alpha,
                if l.separable {
                    "separable"
                } else {
                    "non-separable"
                },
                l.spectral_norm
            )?;
        }
        Ok(())
    };
    w(out).map_err(|e| input_error(e.to_string()))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CatalogEntry {
    name: &'static str,
    alpha: f64,
    prox_representable: bool,
}

#[derive(Serialize)]
struct ActivationCheck {
    activation: String,
    alpha: f64,
    pass: bool,
    worst_quotient_low: f64,
    worst_quotient_high: f64,
    prox_gap: Option<f64>,
    prox_pass: Option<bool>,
    seed: u64,
}

fn cmd_activations(cmd: ActivationsCommand, out: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| input_error(e.to_string());
    match cmd {
        ActivationsCommand::List { json } => {
            let entries: Vec<CatalogEntry> = activations::catalog()
                .iter()
                .map(|a| CatalogEntry {
                    name: a.name(),
                    alpha: a.alpha(),
                    prox_representable: a.prox_representable(),
                })
                .collect();
            if json {
                emit_json(out, &entries)?;
            } else {
                for e in &entries {
                    let yn = if e.prox_representable { "yes" } else { "no" };
                    writeln!(out, "{}  {:.5}  {yn}", e.name, e.alpha).map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        ActivationsCommand::Certify {
            name,
            alpha,
            pairs,
            lo,
            hi,
            seed,
            json,
        } => {
            let act = parse_scalar_spec(&name).map_err(input_error)?;
            let alpha = alpha.unwrap_or(act.alpha());
            let plan = SamplingPlan::new(lo, hi, pairs, seed);
            let report = certify_averagedness(&act, alpha, &plan)?;
            let prox = if act.potential().is_some() {
                Some(verify_prox_representation(&act, &plan)?)
            } else {
                None
            };
            let check = ActivationCheck {
                activation: act.spec_string(),
                alpha,
                pass: report.pass,
                worst_quotient_low: report.worst_quotient_low,
                worst_quotient_high: report.worst_quotient_high,
                prox_gap: prox.as_ref().map(|p| p.max_abs_gap),
                prox_pass: prox.as_ref().map(|p| p.pass),
                seed,
            };
            let ok = check.pass && check.prox_pass.unwrap_or(true);
            if json {
                emit_json(out, &check)?;
            } else {
                writeln!(
                    out,
                    "{}  alpha {}  averagedness: {} (quotients in [{:.6}, {:.6}], need [{:.6}, 1])",
                    check.activation,
                    alpha,
                    if check.pass { "pass" } else { "fail" },
                    check.worst_quotient_low,
                    check.worst_quotient_high,
                    1.0 - 2.0 * alpha
                )
                .map_err(io)?;
                match (check.prox_pass, check.prox_gap) {
                    (Some(p), Some(g)) => writeln!(
                        out,
                        "prox representation: {} (max gap {g:.3e})",
                        if p { "pass" } else { "fail" }
                    ),
                    _ => writeln!(out, "prox representation: no closed-form potential"),
                }
                .map_err(io)?;
            }
            Ok(if ok { EXIT_OK } else { EXIT_INPUT })
        }
    }
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| input_error(format!("{flag} must be a comma-separated list of integers")))
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| input_error(format!("{flag} must be a comma-separated list of numbers")))
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| input_error(e.to_string());
    match a.name {
        ExperimentName::Tanh => {
            let r = experiments::run_tanh_toy()?;
            if a.json {
                emit_json(out, &r)?;
            } else {
                for (k, v) in [
                    ("linear", r.linear),
                    ("theta", r.theta),
                    ("vartheta", r.vartheta),
                    ("naive", r.naive),
                    ("empirical_ratio", r.empirical_ratio),
                ] {
                    writeln!(out, "{k:<16} {v:.4}").map_err(io)?;
                }
            }
        }
        ExperimentName::Numeric => {
            let dims = parse_usize_list(&a.dims, "--dims")?;
            let mut cfg = MonteCarloConfig::new(dims, a.trials, a.seed);
            if let Some(al) = &a.alpha {
                cfg.alpha = parse_f64_list(al, "--alpha")?;
            }
            cfg.vartheta = a.vartheta;
            cfg.budget = resolve_budget(None)?;
            let result = experiments::run_monte_carlo(&cfg)?;
            if let Some(path) = &a.dump_trials {
                std::fs::write(path, experiments::trials_csv(&result.per_trial))
                    .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
            }
            let s = &result.stats;
            if a.json {
                emit_json(out, s)?;
            } else {
                writeln!(
                    out,
                    "dims {:?}  trials {}  seed {}",
                    s.dims, s.trials, s.seed
                )
                .map_err(io)?;
                writeln!(
                    out,
                    "{:<16} {:>8} {:>8} {:>8}",
                    "ratio", "mean", "min", "max"
                )
                .map_err(io)?;
                let rows = [
                    ("theta", Some(s.theta_ratio)),
                    ("linear", Some(s.linear_ratio)),
                    ("vartheta", s.vartheta_ratio),
                ];
                for (k, v) in rows {
                    if let Some(v) = v {
                        writeln!(out, "{k:<16} {:>8.4} {:>8.4} {:>8.4}", v.mean, v.min, v.max)
                            .map_err(io)?;
                    }
                }
            }
        }
    }
    Ok(EXIT_OK)
}

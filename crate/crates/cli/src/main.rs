//! `tnn`: command-line front end over `tnn-core`.
//!
//! Exit codes: 0 success, 1 a mathematical check failed, 2 invalid input,
//! 3 an iteration did not converge.

mod render;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tnn_core::decomp::{run_suite, DecompMode, DecompOptions, SuiteConfig};
use tnn_core::norms::{nuclear_sandwich, spectral_bounds, spectral_hopm, CertifyOptions, HopmOptions, NuclearOptions};
use tnn_core::reproduce::{run_criterion, CRITERIA};
use tnn_core::rpca::{
    certify, concentration_trial, default_batches, generate_instance, low_rank_tensor, matrix_trial, AdmmOptions, CertifyConfig,
    ConcentrationOptions, FactorStyle, InstanceArchive, InstanceSpec,
};
use tnn_core::subdiff::{
    is_subgradient, probe_tau, solve_sphere_program, sphere_program, z_membership, SphereOptions, SubdiffOptions,
    TauOptions, PROGRAM_NAMES,
};
use tnn_core::subspace::{ModeSet, SubspaceSelector};
use tnn_core::{DenseTensor, Error, Verdict};

use source::{load_tensor, GalleryRef};

#[derive(Parser)]
#[command(name = "tnn", version, about = "Certified tensor norms, decomposability checks and robust PCA certificates")]
struct Cli {
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Write the report document to this path and print the path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral or nuclear norm of a tensor file or `gallery:` reference.
    Norms {
        #[command(subcommand)]
        which: NormCommand,
    },
    /// Numerical checks; exit code 1 when a check fails.
    Check(CheckArgs),
    /// Robust PCA instances, certificates and experiments.
    Rpca {
        #[command(subcommand)]
        which: RpcaCommand,
    },
    /// Runs the reproduction criteria.
    Reproduce {
        /// Run only these criteria (repeatable).
        #[arg(long)]
        criterion: Vec<u8>,
    },
}

#[derive(Subcommand)]
enum NormCommand {
    Spectral {
        tensor: String,
        /// Relative gap at which branch and bound stops.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    Nuclear {
        tensor: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckName {
    DecompSpectral,
    DecompNuclear,
    LowerBound,
    Weak,
    Subgrad,
    Zmember,
    TauProbe,
    Sphere,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_name = "CHECK")]
    check: CheckName,
    /// Tensor order; defaults to the length of `--dims`, else 3.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Mode ranks of the sampled subspaces (default 1 per mode).
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// One-based index set, e.g. `1,2`.
    #[arg(long = "I", default_value = "1,2")]
    modes: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weak decomposability constant.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gallery: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    /// Gallery tensor to test (default `Z+X` for subgrad, `Z` for zmember).
    #[arg(long)]
    key: Option<String>,
    /// Tensor file for `T` (instead of `--gallery`).
    #[arg(long)]
    tensor: Option<String>,
    /// Tensor file for the candidate subgradient or certificate.
    #[arg(long)]
    z: Option<String>,
    /// Subspace selector for tau-probe, e.g. `sum:[1,2;1,3;2,3;1,2,3]`.
    #[arg(long)]
    selector: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    bisect_tol: f64,
    /// Sphere program name; all programs when absent.
    #[arg(long = "name")]
    program: Option<String>,
}

#[derive(Subcommand)]
enum RpcaCommand {
    /// Writes an instance archive.
    Gen {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        rho: f64,
        /// Golfing batches (default ⌈2 ln n_d⌉).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        style: String,
    },
    /// Builds the dual certificate of an archived instance and checks it.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Matrix instance solved exactly; prints the recovery error.
    Solve2d {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
    /// Monte-Carlo samples of the sampling operators around a low-rank tensor.
    Concentration {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "incoherent")]
        style: String,
        /// Density of the sign tensors (default 1 − q).
        #[arg(long)]
        sign_density: Option<f64>,
    },
}

/// A report and whether a mathematical check inside it failed.
struct Outcome {
    doc: Value,
    failed: bool,
}

impl Outcome {
    fn ok(doc: Value) -> Self {
        Self { doc, failed: false }
    }
}

fn to_doc<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Convergence { .. } | Error::Solver(_) => 3,
        Error::Infeasible(_) => 1,
        _ => 2,
    }
}

fn set_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("TNN_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parameter(format!("TNN_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Parameter(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = set_threads().and_then(|_| run(&cli.command));
    match result {
        Ok(out) => {
            let text = if cli.pretty { render::pretty(&out.doc) } else { out.doc.to_string() + "\n" };
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    println!("{}", path.display());
                }
                None => print!("{text}"),
            }
            ExitCode::from(if out.failed { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: &Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Norms { which } => norms(which),
        Command::Check(a) => check(a),
        Command::Rpca { which } => rpca(which),
        Command::Reproduce { criterion } => reproduce(criterion),
    }
}

fn norms(which: &NormCommand) -> Result<Outcome, Error> {
    match which {
        NormCommand::Spectral { tensor, tol, seed, starts } => {
            let t = load_tensor(tensor)?;
            let hopm = HopmOptions { seed: *seed, starts: *starts, ..HopmOptions::default() };
            let b = spectral_bounds(&t, &hopm, &CertifyOptions { rel_gap: *tol, ..CertifyOptions::default() }, None)?;
            let h = spectral_hopm(&t, &hopm)?;
            Ok(Outcome::ok(json!({
                "norm": "spectral",
                "value": b.lower,
                "bounds": to_doc(&b),
                "local_search": to_doc(&h),
            })))
        }
        NormCommand::Nuclear { tensor, tol, seed } => {
            let t = load_tensor(tensor)?;
            let s = nuclear_sandwich(&t, &NuclearOptions { tol: *tol, seed: *seed, ..NuclearOptions::default() }, None)?;
            Ok(Outcome::ok(json!({ "norm": "nuclear", "mid": s.mid(), "sandwich": to_doc(&s) })))
        }
    }
}

fn verdict_outcome(doc: Value, v: Verdict) -> Outcome {
    Outcome { doc, failed: v == Verdict::Fail }
}

fn check(a: &CheckArgs) -> Result<Outcome, Error> {
    match a.check {
        CheckName::DecompSpectral | CheckName::DecompNuclear | CheckName::LowerBound | CheckName::Weak => {
            let mode = match a.check {
                CheckName::DecompSpectral => DecompMode::Spectral,
                CheckName::DecompNuclear => DecompMode::Nuclear,
                CheckName::LowerBound => DecompMode::LowerBound,
                _ => DecompMode::Weak,
            };
            let shape = match (&a.dims, a.d) {
                (Some(dims), Some(d)) if dims.len() != d => {
                    return Err(Error::Parameter(format!("--dims lists {} modes but --d is {d}", dims.len())));
                }
                (Some(dims), _) => dims.clone(),
                (None, d) => vec![2; d.unwrap_or(3)],
            };
            let ranks = a.ranks.clone().unwrap_or_else(|| vec![1; shape.len()]);
            let modes = ModeSet::from_one_based(&parse_modes(&a.modes)?, shape.len())?;
            let s = run_suite(&SuiteConfig {
                mode,
                shape,
                ranks,
                modes,
                trials: a.trials,
                seed: a.seed,
                alpha: a.alpha,
                opts: DecompOptions::default(),
            })?;
            let v = s.verdict();
            let mut doc = to_doc(&s);
            doc["verdict"] = to_doc(&v);
            Ok(verdict_outcome(doc, v))
        }
        CheckName::Subgrad | CheckName::Zmember => {
            let zmember = matches!(a.check, CheckName::Zmember);
            let (t, g) = pair_from_args(a, if zmember { "Z" } else { "Z+X" })?;
            let opts = SubdiffOptions::default();
            if zmember {
                let r = z_membership(&g, &t, &opts)?;
                Ok(verdict_outcome(to_doc(&r), r.verdict))
            } else {
                let r = is_subgradient(&g, &t, &opts)?;
                Ok(verdict_outcome(to_doc(&r), r.verdict))
            }
        }
        CheckName::TauProbe => {
            let shape = a.dims.clone().unwrap_or_else(|| vec![2; a.d.unwrap_or(3)]);
            let selector: SubspaceSelector = match &a.selector {
                Some(s) => s.parse()?,
                None => SubspaceSelector::at_least(shape.len(), 2),
            };
            let est = probe_tau(&selector, &shape, a.trials, a.seed, a.bisect_tol, &TauOptions::default())?;
            Ok(Outcome::ok(to_doc(&est)))
        }
        CheckName::Sphere => {
            let names: Vec<&str> = match &a.program {
                Some(n) => vec![n.as_str()],
                None => PROGRAM_NAMES.to_vec(),
            };
            let mut doc = serde_json::Map::new();
            for n in names {
                let s = solve_sphere_program(&sphere_program(n)?, &SphereOptions::default())?;
                doc.insert(n.to_string(), to_doc(&s));
            }
            Ok(Outcome::ok(Value::Object(doc)))
        }
    }
}

fn parse_modes(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| Error::Parameter(format!("bad mode index `{p}`"))))
        .collect()
}

/// `(T, candidate)` from `--gallery/--t/--key` or from `--tensor/--z`.
fn pair_from_args(a: &CheckArgs, default_key: &str) -> Result<(DenseTensor, DenseTensor), Error> {
    if let Some(name) = &a.gallery {
        let case = GalleryRef { name: name.clone(), t: a.t, key: None }.case()?;
        let t = case.tensor("T")?.clone();
        let key = a.key.as_deref().unwrap_or(default_key);
        let g = match case.tensors.get(key) {
            Some(g) => g.clone(),
            // `Z+X` and `Z+Y` are assembled when the case only lists the parts.
            None => match key.split_once('+') {
                Some((p, q)) => case.tensor(p)?.add(case.tensor(q)?)?,
                None => return Err(Error::Lookup(format!("{name}: tensor {key}"))),
            },
        };
        return Ok((t, g));
    }
    match (&a.tensor, &a.z) {
        (Some(t), Some(z)) => Ok((load_tensor(t)?, load_tensor(z)?)),
        _ => Err(Error::Parameter("give --gallery, or both --tensor and --z".into())),
    }
}

fn style(s: &str) -> Result<FactorStyle, Error> {
    s.parse()
}

fn rpca(which: &RpcaCommand) -> Result<Outcome, Error> {
    match which {
        RpcaCommand::Gen { dims, r, rho, m, seed, style: st } => {
            let m = m.unwrap_or_else(|| default_batches(dims));
            let spec = InstanceSpec::new(dims, *r, *rho, m, style(st)?, *seed);
            let inst = generate_instance(&spec)?;
            Ok(Outcome::ok(to_doc(&InstanceArchive::from_instance(&inst, Some(&spec)))))
        }
        RpcaCommand::Certify { instance, lambda } => {
            let text = std::fs::read_to_string(instance)?;
            let archive: InstanceArchive = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
            let inst = archive.into_instance()?;
            let report = certify(&inst, &CertifyConfig { lambda: *lambda, ..CertifyConfig::default() })?;
            Ok(verdict_outcome(to_doc(&report), report.verdict))
        }
        RpcaCommand::Solve2d { n, r, rho, seed, lambda, tol, max_iter } => {
            let opts = AdmmOptions { tol: *tol, max_iter: *max_iter, ..AdmmOptions::default() };
            Ok(Outcome::ok(to_doc(&matrix_trial(*n, *r, *rho, *seed, *lambda, &opts)?)))
        }
        RpcaCommand::Concentration { dims, r, q, trials, seed, style: st, sign_density } => {
            let l = low_rank_tensor(dims, *r, style(st)?, *seed)?;
            let opts = ConcentrationOptions { trials: *trials, seed: *seed, sign_density: *sign_density, ..ConcentrationOptions::default() };
            Ok(Outcome::ok(to_doc(&concentration_trial(&l, *q, &opts)?)))
        }
    }
}

fn reproduce(ids: &[u8]) -> Result<Outcome, Error> {
    let ids: Vec<u8> = if ids.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { ids.to_vec() };
    let mut rows = Vec::new();
    let mut failed = false;
    for id in ids {
        let o = run_criterion(id)?;
        // Timings go to stderr so that the report itself is deterministic.
        eprintln!("{} criterion {id} ({}) [{:.2}s]", if o.pass { "PASS" } else { "FAIL" }, o.name, o.seconds);
        failed |= !o.pass;
        rows.push(json!({ "id": o.id, "name": o.name, "pass": o.pass, "summary": o.summary, "metrics": o.metrics }));
    }
    Ok(Outcome { doc: json!({ "criteria": rows }), failed })
}

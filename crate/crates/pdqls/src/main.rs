use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use pdqls::bench::{self, default_seed, emit_csv, fit_loglog, run_sweep, SweepCommand, SweepConfig};
use pdqls::blockenc::{
    gram_encoding, lcu_encoding, SparseMatrixJson, SparseMatrixOracle, SumHamiltonianJson, SumHamiltonianSpec,
};
use pdqls::instances::{check_observables, generate, InstanceJson, InstanceMatrix, QlsInstance};
use pdqls::json::fmt_f64;
use pdqls::linalg::CMat;
use pdqls::poly::{build_inverse_approximant, build_window, least_degree, ErrorTarget};
use pdqls::solver::{promised_kappa, solve_postselect, Mode};
use pdqls::sumqls::sumqls_solve;
use pdqls::vtaa::{build_schedule, simulate_vst, Amplification};
use pdqls::{Error, Result};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "pdqls",
    version,
    about = "Quantum linear-system solvers for positive-definite matrices, simulated densely"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Cmd {
    /// Sample the inverse approximant P_{2l-1,kappa} and 1/(1-x) on [-1, 1].
    Approx {
        #[arg(long)]
        kappa: f64,
        /// Degree parameter; the least one meeting --eps is used if omitted.
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the window polynomial on [-1, 1].
    Window {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a block-encoding and report its block error and unitarity.
    Encode {
        #[arg(value_enum)]
        kind: EncodeKind,
        /// Sparse matrix JSON (gram) or sum-of-terms JSON (lcu).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post-selected or amplified inversion of an instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Amplify)]
        mode: ModeArg,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variable-time amplitude amplification on an instance.
    Vtaa {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = AmpArg::Auto)]
        amplification: AmpArg,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sum-QLS on a sum-of-terms instance.
    Sumqls {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an instance and check its observables.
    Instance {
        #[arg(long)]
        family: String,
        /// Defaults to PDQLS_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Family parameters as a JSON object.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter grid and write one CSV row per point and seed.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Sweep config JSON; command-line grids override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    command: Option<SweepCmdArg>,
    #[arg(long)]
    family: Option<String>,
    /// Base instance parameters as a JSON object.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    j: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    s: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    eta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Seeds; defaults to PDQLS_SEED, then 0.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Approx sweeps: certify the error of P/K rather than of P.
    #[arg(long)]
    block_normalized: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log-log least-squares slope, e.g. degree~kappa.
    #[arg(long)]
    fit: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeKind {
    Gram,
    Lcu,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Postselect,
    Amplify,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Postselect => Mode::Postselect,
            ModeArg::Amplify => Mode::Amplify,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AmpArg {
    Auto,
    Automax,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepCmdArg {
    Approx,
    Window,
    Solve,
    Vtaa,
    Sumqls,
}

impl From<SweepCmdArg> for SweepCommand {
    fn from(c: SweepCmdArg) -> Self {
        match c {
            SweepCmdArg::Approx => SweepCommand::Approx,
            SweepCmdArg::Window => SweepCommand::Window,
            SweepCmdArg::Solve => SweepCommand::Solve,
            SweepCmdArg::Vtaa => SweepCommand::Vtaa,
            SweepCmdArg::Sumqls => SweepCommand::Sumqls,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_VALIDATION
            })
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_at(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_at(p: &Path, e: io::Error) -> Error {
    Error::invalid(format!("{}: {e}", p.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    let text = std::fs::read_to_string(p).map_err(|e| io_at(p, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_instance(p: &Path) -> Result<QlsInstance> {
    QlsInstance::from_json(&read_json::<InstanceJson>(p)?)
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    pdqls::json::to_writer(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_record(out: &Option<PathBuf>, header: &[&str], record: Vec<String>) -> Result<()> {
    let mut w = sink(out)?;
    emit_csv(&mut w, header, &[record])?;
    w.flush()?;
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Approx {
            kappa,
            ell,
            eps,
            grid,
            out,
        } => {
            let p = match ell {
                Some(l) => build_inverse_approximant(l, kappa)?,
                None => least_degree(kappa, ErrorTarget::Absolute(eps))?,
            };
            eprintln!(
                "ell = {}, degree = {}, K = {}, error = {}",
                p.ell,
                p.degree(),
                fmt_f64(p.k_norm),
                fmt_f64(p.approx_error_sup())
            );
            let rows: Vec<Vec<String>> = linspace(-1.0, 1.0, grid)
                .into_iter()
                .map(|x| vec![fmt_f64(x), fmt_f64(p.eval(x)), fmt_f64(1.0 / (1.0 - x))])
                .collect();
            let mut w = sink(&out)?;
            emit_csv(&mut w, &["x", "P", "inverse"], &rows)?;
            w.flush()?;
        }
        Cmd::Window { eps, delta, grid, out } => {
            let wp = build_window(eps, delta)?;
            eprintln!("degree = {}, sigma = {}", wp.degree, fmt_f64(wp.sigma));
            let rows: Vec<Vec<String>> = linspace(-1.0, 1.0, grid)
                .into_iter()
                .map(|x| vec![fmt_f64(x), fmt_f64(wp.eval(x))])
                .collect();
            let mut w = sink(&out)?;
            emit_csv(&mut w, &["x", "W"], &rows)?;
            w.flush()?;
        }
        Cmd::Encode { kind, input, out } => {
            let report = match kind {
                EncodeKind::Gram => {
                    let a = SparseMatrixOracle::from_json(&read_json::<SparseMatrixJson>(&input)?)?;
                    let g = gram_encoding(&a, true)?;
                    let target = CMat::identity(a.dim(), a.dim()) - a.to_dense();
                    json!({
                        "kind": "gram",
                        "N": a.dim(),
                        "ancillas": g.encoding.ancillas(),
                        "alpha": g.encoding.alpha(),
                        "support_dim": g.support_dim,
                        "block_error": g.encoding.block_error(&target),
                        "unitarity_residual": g.encoding.unitarity_residual(),
                        "queries": g.encoding.cost(),
                    })
                }
                EncodeKind::Lcu => {
                    let spec = SumHamiltonianSpec::from_json(&read_json::<SumHamiltonianJson>(&input)?)?;
                    let l = lcu_encoding(&spec)?;
                    let n = spec.dim();
                    let target =
                        CMat::identity(n, n) - spec.assemble() / pdqls::linalg::C64::new(spec.num_terms() as f64, 0.0);
                    json!({
                        "kind": "lcu",
                        "N": n,
                        "J": spec.num_terms(),
                        "ancillas": l.encoding.ancillas(),
                        "alpha": l.encoding.alpha(),
                        "block_error": l.encoding.block_error(&target),
                        "unitarity_residual": l.encoding.unitarity_residual(),
                        "gate_cost": l.gate_cost,
                        "queries": l.encoding.cost(),
                    })
                }
            };
            write_json(&out, &report)?;
        }
        Cmd::Solve {
            instance,
            eta,
            eps,
            mode,
            csv,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let a = inst.solver_operator()?;
            let (_, r) = solve_postselect(&a, &inst.b_state(), eta, eps, mode.into())?;
            if csv {
                write_record(&out, &pdqls::solver::SolveReport::CSV_HEADER, r.csv_record())?;
            } else {
                write_json(&out, &r)?;
            }
        }
        Cmd::Vtaa {
            instance,
            eta,
            eps,
            amplification,
            csv,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let a = inst.solver_operator()?;
            let sched = build_schedule(promised_kappa(&a)?, eta, eps)?;
            let amp = match amplification {
                AmpArg::Auto => Amplification::Auto,
                AmpArg::Automax => Amplification::AutoMax,
            };
            let (_, r) = simulate_vst(&a, &inst.b_state(), &sched, &amp)?;
            if csv {
                write_record(&out, &bench::VTAA_CSV_HEADER, bench::vtaa_csv_record(&r))?;
            } else {
                write_json(&out, &r)?;
            }
        }
        Cmd::Sumqls {
            instance,
            eps,
            csv,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let spec = match &inst.matrix {
                InstanceMatrix::Sum(s) => s,
                InstanceMatrix::Dense(_) => {
                    return Err(Error::invalid(format!(
                        "instance family {:?} is not a sum of terms",
                        inst.family
                    )))
                }
            };
            let (_, r) = sumqls_solve(spec, &inst.b, eps)?;
            if csv {
                write_record(&out, &pdqls::sumqls::SumQlsReport::CSV_HEADER, r.csv_record())?;
            } else {
                write_json(&out, &r)?;
            }
        }
        Cmd::Instance {
            family,
            seed,
            params,
            out,
        } => {
            let params: Value = serde_json::from_str(&params)?;
            let inst = generate(&family, seed.unwrap_or_else(default_seed), &params)?;
            let obs = check_observables(&inst)?;
            for o in &obs {
                eprintln!(
                    "{} {} {:?}: measured {} expected {}",
                    if o.holds() { "ok  " } else { "FAIL" },
                    o.name,
                    o.relation,
                    fmt_f64(o.measured),
                    fmt_f64(o.expected)
                );
            }
            write_json(&out, &inst.to_json())?;
            if let Some(o) = obs.iter().find(|o| !o.holds()) {
                return Err(Error::NumericalCheck(format!("observable {} does not hold", o.name)));
            }
        }
        Cmd::Sweep(args) => sweep(args)?,
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => read_json::<SweepConfig>(p)?,
        None => SweepConfig {
            // a bare --family means a solver sweep
            command: match (args.command, &args.family) {
                (Some(c), _) => c.into(),
                (None, Some(_)) => SweepCommand::Solve,
                (None, None) => return Err(Error::invalid("sweep needs --command, --family or --config")),
            },
            family: None,
            params: Map::new(),
            grid: BTreeMap::new(),
            seeds: Vec::new(),
            mode: None,
            block_normalized: false,
            out: None,
            jobs: None,
        },
    };
    if let Some(c) = args.command {
        cfg.command = c.into();
    }
    if args.family.is_some() {
        cfg.family = args.family;
    }
    if let Some(p) = &args.params {
        match serde_json::from_str::<Value>(p)? {
            Value::Object(m) => cfg.params.extend(m),
            _ => return Err(Error::invalid("--params must be a JSON object")),
        }
    }
    for (key, vals) in [
        ("kappa", args.kappa),
        ("n", args.n),
        ("m", args.m),
        ("j", args.j),
        ("s", args.s),
        ("t", args.t),
        ("eps", args.eps),
        ("eta", args.eta),
        ("delta", args.delta),
    ] {
        if !vals.is_empty() {
            cfg.grid.insert(key.into(), vals);
        }
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    }
    if cfg.seeds.is_empty() {
        cfg.seeds = vec![default_seed()];
    }
    if let Some(m) = args.mode {
        cfg.mode = Some(m.into());
    }
    if args.block_normalized {
        cfg.block_normalized = true;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }

    let result = run_sweep(&cfg)?;
    let mut w = sink(&cfg.out)?;
    emit_csv(&mut w, &result.header, &result.rows)?;
    w.flush()?;
    if let Some(spec) = &args.fit {
        let f = fit_loglog(&result.header, &result.rows, spec)?;
        eprintln!(
            "fit {}~{}: slope = {}, intercept = {}, points = {}",
            f.y,
            f.x,
            fmt_f64(f.slope),
            fmt_f64(f.intercept),
            f.points
        );
    }
    Ok(())
}

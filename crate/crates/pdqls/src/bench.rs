//! Sweep orchestration: grids of parameters, one CSV row per grid point
//! and seed, ordered by grid index whatever the parallelism.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instances::{generate, InstanceMatrix};
use crate::json::fmt_f64;
use crate::ledger::Oracle;
use crate::poly::{build_window, least_degree, ErrorTarget};
use crate::solver::{promised_kappa, solve_postselect, Mode, SolveReport};
use crate::sumqls::{sumqls_solve, SumQlsReport};
use crate::vtaa::{build_schedule, simulate_vst, Amplification, VtaaReport};

pub const BUILD_ID: &str = env!("PDQLS_BUILD_ID");
pub const DEFAULT_SEED: u64 = 0;

/// Seed used when none is given: `PDQLS_SEED` if set and parseable.
pub fn default_seed() -> u64 {
    std::env::var("PDQLS_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCommand {
    Approx,
    Window,
    Solve,
    Vtaa,
    Sumqls,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub command: SweepCommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Base instance parameters; grid values override them per point.
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Parameter grids. `eps`, `eta` and `delta` drive the command, all
    /// other keys are instance parameters.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<f64>>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Approx sweeps: certify the error on the normalized block P/K instead
    /// of on P itself.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub block_normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("sweep needs an explicit, non-empty seed list"));
        }
        if let Some((k, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::invalid(format!("grid {k:?} is empty")));
        }
        let needs_family = matches!(
            self.command,
            SweepCommand::Solve | SweepCommand::Vtaa | SweepCommand::Sumqls
        );
        if needs_family && self.family.is_none() {
            return Err(Error::invalid(format!(
                "sweep command {:?} needs a family",
                self.command
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON, with the
    /// output path and parallelism left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.jobs = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Cartesian product of the grids (last key fastest), each point
    /// repeated for every seed.
    pub fn points(&self) -> Vec<(BTreeMap<String, f64>, u64)> {
        let mut combos: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
        for (k, vals) in &self.grid {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.insert(k.clone(), v);
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .flat_map(|c| self.seeds.iter().map(move |&s| (c.clone(), s)))
            .collect()
    }
}

const DRIVER_KEYS: [&str; 3] = ["eps", "eta", "delta"];

fn instance_params(base: &Map<String, Value>, point: &BTreeMap<String, f64>) -> Value {
    let mut p = base.clone();
    for (k, &v) in point {
        if DRIVER_KEYS.contains(&k.as_str()) {
            continue;
        }
        let val = if v.fract() == 0.0 && v.abs() < 9.0e15 {
            Value::from(v as i64)
        } else {
            Value::from(v)
        };
        p.insert(k.clone(), val);
    }
    Value::Object(p)
}

pub const VTAA_CSV_HEADER: [&str; 13] = [
    "N",
    "kappa",
    "eps",
    "m",
    "K",
    "p_succ",
    "p_succ_amplified",
    "t_avg",
    "t_max",
    "gamma",
    "QUb",
    "QUB",
    "trace_error",
];

pub fn vtaa_csv_record(r: &VtaaReport) -> Vec<String> {
    vec![
        r.n.to_string(),
        fmt_f64(r.kappa),
        fmt_f64(r.eps),
        r.m.to_string(),
        fmt_f64(r.k_norm),
        fmt_f64(r.p_succ),
        fmt_f64(r.p_succ_amplified),
        fmt_f64(r.t_avg),
        r.t_max.to_string(),
        fmt_f64(r.gamma),
        r.queries.get(Oracle::Ub).to_string(),
        r.queries.get(Oracle::UB).to_string(),
        fmt_f64(r.trace_error),
    ]
}

pub fn command_header(cmd: SweepCommand) -> Vec<&'static str> {
    match cmd {
        SweepCommand::Approx => vec!["kappa", "eps", "ell", "degree", "K", "error"],
        SweepCommand::Window => vec!["eps", "delta", "inv_delta", "degree"],
        SweepCommand::Solve => SolveReport::CSV_HEADER.to_vec(),
        SweepCommand::Vtaa => VTAA_CSV_HEADER.to_vec(),
        SweepCommand::Sumqls => SumQlsReport::CSV_HEADER.to_vec(),
    }
}

const PREFIX: [&str; 4] = ["build_id", "config_hash", "index", "seed"];

pub fn sweep_header(cmd: SweepCommand) -> Vec<String> {
    PREFIX
        .iter()
        .chain(command_header(cmd).iter())
        .map(|s| s.to_string())
        .collect()
}

fn get(point: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    point.get(key).copied().unwrap_or(default)
}

/// One grid point, single-threaded apart from library internals.
pub fn run_point(cfg: &SweepConfig, point: &BTreeMap<String, f64>, seed: u64) -> Result<Vec<String>> {
    let eps = get(point, "eps", 0.01);
    let eta = get(point, "eta", 1.0);
    match cfg.command {
        SweepCommand::Approx => {
            let kappa = point
                .get("kappa")
                .copied()
                .ok_or_else(|| Error::invalid("approx sweep needs a kappa grid"))?;
            let target = if cfg.block_normalized {
                ErrorTarget::BlockNormalized(eps)
            } else {
                ErrorTarget::Absolute(eps)
            };
            let p = least_degree(kappa, target)?;
            Ok(vec![
                fmt_f64(kappa),
                fmt_f64(eps),
                p.ell.to_string(),
                p.degree().to_string(),
                fmt_f64(p.k_norm),
                fmt_f64(p.approx_error_sup()),
            ])
        }
        SweepCommand::Window => {
            let delta = point
                .get("delta")
                .copied()
                .ok_or_else(|| Error::invalid("window sweep needs a delta grid"))?;
            let w = build_window(eps, delta)?;
            Ok(vec![
                fmt_f64(eps),
                fmt_f64(delta),
                fmt_f64(1.0 / delta),
                w.degree.to_string(),
            ])
        }
        SweepCommand::Solve | SweepCommand::Vtaa | SweepCommand::Sumqls => {
            let family = cfg.family.as_deref().expect("validated");
            let inst = generate(family, seed, &instance_params(&cfg.params, point))?;
            match cfg.command {
                SweepCommand::Solve => {
                    let a = inst.solver_operator()?;
                    let mode = cfg.mode.unwrap_or(Mode::Amplify);
                    let (_, r) = solve_postselect(&a, &inst.b_state(), eta, eps, mode)?;
                    Ok(r.csv_record())
                }
                SweepCommand::Vtaa => {
                    let a = inst.solver_operator()?;
                    let sched = build_schedule(promised_kappa(&a)?, eta, eps)?;
                    let (_, r) = simulate_vst(&a, &inst.b_state(), &sched, &Amplification::Auto)?;
                    Ok(vtaa_csv_record(&r))
                }
                _ => match &inst.matrix {
                    InstanceMatrix::Sum(spec) => Ok(sumqls_solve(spec, &inst.b, eps)?.1.csv_record()),
                    InstanceMatrix::Dense(_) => Err(Error::invalid(format!(
                        "sumqls sweep needs a sum-of-terms family, {family:?} is dense"
                    ))),
                },
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Runs every grid point (in parallel across points) and returns the rows
/// in grid order. The first failing point aborts the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let hash = cfg.hash();
    let points = cfg.points();
    let work = || -> Result<Vec<Vec<String>>> {
        points
            .par_iter()
            .enumerate()
            .map(|(idx, (point, seed))| {
                let body = run_point(cfg, point, *seed)?;
                let mut row = vec![BUILD_ID.to_string(), hash.clone(), idx.to_string(), seed.to_string()];
                row.extend(body);
                Ok(row)
            })
            .collect()
    };
    let rows = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(SweepOutput {
        header: sweep_header(cfg.command),
        rows,
    })
}

/// Header plus rows; the csv writer applies RFC 4180 quoting.
pub fn emit_csv<W: Write, S: AsRef<str>>(w: W, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header.iter().map(|s| s.as_ref()))?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::invalid(format!(
                "row has {} fields, schema has {}",
                r.len(),
                header.len()
            )));
        }
        wr.write_record(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Fit {
    pub y: String,
    pub x: String,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

type Column = Box<dyn Fn(&Vec<String>) -> Option<f64>>;

/// Least-squares slope of ln y against ln x over rows where both are
/// positive. `degree` falls back to 2·ell − 1 when the rows carry only ell.
pub fn fit_loglog(header: &[String], rows: &[Vec<String>], spec: &str) -> Result<Fit> {
    let (ys, xs) = spec
        .split_once('~')
        .ok_or_else(|| Error::invalid(format!("fit must look like y~x, got {spec:?}")))?;
    let col = |name: &str| header.iter().position(|h| h == name);
    let column = |name: &str| -> Result<Column> {
        if let Some(i) = col(name) {
            return Ok(Box::new(move |r: &Vec<String>| r[i].parse().ok()));
        }
        if name == "degree" {
            if let Some(i) = col("ell") {
                return Ok(Box::new(move |r: &Vec<String>| {
                    r[i].parse::<f64>().ok().map(|l| 2.0 * l - 1.0)
                }));
            }
        }
        Err(Error::invalid(format!("no column {name:?} in {header:?}")))
    };
    let (fy, fx) = (column(ys)?, column(xs)?);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((fx(r)?, fy(r)?)))
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("fit needs at least two positive points"));
    }
    let (slope, intercept) = least_squares(&pts);
    Ok(Fit {
        y: ys.into(),
        x: xs.into(),
        slope,
        intercept,
        points: pts.len(),
    })
}

/// Ordinary least-squares line through (x, y) points: (slope, intercept).
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

//! Runs one experiment and writes its results directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{SecondsFormat, Utc};
use saddlelab_core::analysis::report::Report;
use saddlelab_core::analysis::{
    compare_orbits, escape_sweep, gd_stall_sweep, global_convergence_experiment, reaches_saddle,
    stable_manifold_sample, taylor_estimate_check, AnalysisError, DEFAULT_C, DEFAULT_C1, DEFAULT_C2,
};
use saddlelab_core::flow::{integrate, run_discrete, FlowKind, IntegratorConfig, StepSizes, Termination};
use saddlelab_core::spectral::classify_critical_point;
use saddlelab_core::{DVector, ObjectiveFunction};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{positive, required, Experiment, FlowChoice, Params};
use crate::function_spec::parse_function_spec;
use crate::CliError;

/// Gradient tolerance for accepting a user-supplied critical point.
const CRITICAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Asserted verdicts decide the exit status; the rest are informational.
    pub asserted: bool,
    pub bound: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: Value,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileRecord>,
    pub verdicts: Vec<Verdict>,
    /// Set when the experiment stopped on a violated bound or assumption.
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// The violation that stopped the run, if any.
    pub violation: Option<AnalysisError>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.violation.is_none() && self.manifest.verdicts.iter().all(|v| v.pass || !v.asserted)
    }
}

/// Files produced by an experiment, written once at the end of the run.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    verdicts: Vec<Verdict>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    fn json(&mut self, name: impl Into<String>, value: &Value) {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.add(name, text);
    }

    fn report<R: Report>(&mut self, stem: &str, report: &R, asserted: bool) {
        self.json(format!("{stem}.json"), &report.payload());
        self.add(format!("{stem}.csv"), report.csv_summary());
        self.verdicts.push(Verdict {
            name: report.report_type().to_string(),
            pass: report.pass(),
            asserted,
            bound: report.bound(),
            value: report.max(),
        });
    }

    fn dat(&mut self, name: impl Into<String>, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) {
        let mut s = format!("# {header}\n");
        for (a, b) in rows {
            let _ = writeln!(s, "{a:.16e} {b:.16e}");
        }
        self.add(name, s);
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn point_or_origin(v: &Option<Vec<f64>>, dim: usize, name: &str) -> Result<DVector<f64>, CliError> {
    match v {
        Some(xs) if xs.len() != dim => Err(CliError::Config(format!(
            "{name} has {} components but the function has dimension {dim}",
            xs.len()
        ))),
        Some(xs) => Ok(DVector::from_column_slice(xs)),
        None => Ok(DVector::zeros(dim)),
    }
}

fn point(v: &Option<Vec<f64>>, dim: usize, name: &str) -> Result<DVector<f64>, CliError> {
    required(name, v)?;
    point_or_origin(v, dim, name)
}

/// Splits analysis errors into configuration mistakes and experiment
/// violations that still produce a results directory.
fn classify(e: AnalysisError) -> Result<AnalysisError, CliError> {
    match e {
        AnalysisError::InvalidC(_) | AnalysisError::InvalidArgument(_) => Err(CliError::Config(e.to_string())),
        AnalysisError::Spectral(_) | AnalysisError::Degenerate { .. } => Err(CliError::Config(e.to_string())),
        other => Ok(other),
    }
}

/// Executes `experiment` with `params` and writes the results directory
/// `<out>/<experiment>-<seed>-<timestamp>`.
pub fn run(experiment: Experiment, params: &Params) -> Result<RunOutcome, CliError> {
    params.validate_for(experiment)?;
    let started_at = Utc::now();
    let spec = params.function.clone().expect("validated");
    let f = parse_function_spec(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = params.integrator()?;

    let mut out = Outputs::default();
    let violation = match execute(experiment, params, &f, &cfg, &mut out) {
        Ok(()) => None,
        Err(Failure::Cli(e)) => return Err(e),
        Err(Failure::Violation(e)) => Some(e),
    };

    let base = params.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let seed = params.seed.map_or_else(|| "noseed".to_string(), |s| s.to_string());
    let stamp = started_at.format("%Y%m%dT%H%M%S%.3fZ");
    let dir = unique_dir(&base, &format!("{}-{seed}-{stamp}", experiment.name()))?;

    let mut files = Vec::new();
    for (name, bytes) in &out.files {
        write_file(&dir.join(name), bytes)?;
        files.push(FileRecord {
            name: name.clone(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
    }
    let manifest = RunManifest {
        tool: "saddlelab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.name().into(),
        config: Value::Object(params.to_map()),
        started_at: started_at.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        files,
        verdicts: out.verdicts,
        error: violation.as_ref().map(|e| e.to_string()),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&dir.join("manifest.json"), text.as_bytes())?;
    Ok(RunOutcome {
        dir,
        manifest,
        violation,
    })
}

fn unique_dir(base: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(base).map_err(|e| CliError::Io {
        path: base.to_path_buf(),
        source: e,
    })?;
    for k in 0.. {
        let dir = if k == 0 { base.join(name) } else { base.join(format!("{name}-{k}")) };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::Io { path: dir, source: e }),
        }
    }
    unreachable!()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

enum Failure {
    Cli(CliError),
    Violation(AnalysisError),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match classify(e) {
            Ok(v) => Failure::Violation(v),
            Err(c) => Failure::Cli(c),
        }
    }
}

fn execute(
    experiment: Experiment,
    p: &Params,
    f: &Arc<dyn ObjectiveFunction>,
    cfg: &IntegratorConfig,
    out: &mut Outputs,
) -> Result<(), Failure> {
    let f = f.as_ref();
    let d = f.dim();
    let seed = p.seed.unwrap_or(0);
    match experiment {
        Experiment::Simulate => simulate(p, f, cfg, out)?,
        Experiment::EscapeSweep => {
            let center = point_or_origin(&p.saddle, d, "saddle")?;
            let r = positive("r", required("r", &p.r)?)?;
            let c = p.c.unwrap_or(DEFAULT_C);
            let n_ic = p.n_ic.unwrap_or(256);
            let info = classify_critical_point(f, &center, CRITICAL_TOL).map_err(AnalysisError::from)?;
            let stem = format!("escape_sweep-seed{seed}-r{}-C{}-n{n_ic}", num(r), num(c));
            let (report, violation) = match escape_sweep(f, &info, r, n_ic, seed, c, cfg) {
                Ok(rep) => (rep, None),
                Err(AnalysisError::BoundViolated {
                    ic,
                    occupancy,
                    bound,
                    report,
                }) => {
                    let e = AnalysisError::BoundViolated {
                        ic,
                        occupancy,
                        bound,
                        report: report.clone(),
                    };
                    (*report, Some(e))
                }
                Err(e) => return Err(e.into()),
            };
            out.report(&stem, &report, true);
            if d == 2 {
                out.dat(
                    format!("{stem}-occupancy_vs_angle.dat"),
                    "angle occupancy",
                    report.per_ic.iter().map(|o| {
                        let y = &DVector::from_column_slice(&o.initial_point) - &center;
                        (y[1].atan2(y[0]), o.occupancy)
                    }),
                );
            } else {
                out.dat(
                    format!("{stem}-occupancy_by_ic.dat"),
                    "index occupancy",
                    report.per_ic.iter().enumerate().map(|(i, o)| (i as f64, o.occupancy)),
                );
            }
            if let Some(e) = violation {
                return Err(Failure::Violation(e));
            }
        }
        Experiment::GdStall => {
            let center = point_or_origin(&p.saddle, d, "saddle")?;
            let r = positive("r", p.r.unwrap_or(1.0))?;
            let eps = p.eps.clone().unwrap_or_else(|| vec![1e-2, 1e-4]);
            let ic = match (&p.x0, p.theta) {
                (Some(_), Some(_)) => return Err(CliError::Config("give either --x0 or --theta, not both".into()).into()),
                (Some(_), None) => point(&p.x0, d, "x0")?,
                (None, theta) => {
                    if d < 2 {
                        return Err(CliError::Config("--theta needs a function of dimension at least 2".into()).into());
                    }
                    let theta = theta.unwrap_or(1e-6);
                    let mut dir = DVector::zeros(d);
                    dir[0] = theta.cos();
                    dir[1] = theta.sin();
                    &center + dir * r
                }
            };
            let report = gd_stall_sweep(f, &center, r, &eps, &ic, cfg)?;
            let stem = format!("gd_stall-r{}", num(r));
            out.report(&stem, &report, false);
            out.dat(
                format!("{stem}-stall_vs_log_eps.dat"),
                "-ln(eps) time",
                report
                    .measurements
                    .iter()
                    .filter_map(|m| m.time.map(|t| (-m.eps.ln(), t))),
            );
        }
        Experiment::CompareOrbits => {
            let x0 = point(&p.x0, d, "x0")?;
            let n_grid = p.n_grid.unwrap_or(2000);
            let cmp = compare_orbits(f, &x0, cfg, n_grid)?;
            let stem = format!("compare_orbits-n{n_grid}");
            out.report(&stem, &cmp, false);
            out.dat(format!("{stem}-error_vs_arclength.dat"), "s error", cmp.errors.iter().copied());
        }
        Experiment::StableManifold => {
            let center = point_or_origin(&p.saddle, d, "saddle")?;
            let r = positive("r", p.r.unwrap_or(0.5))?;
            let n_ic = p.n_ic.unwrap_or(1000);
            let report = stable_manifold_sample(f, &center, r, n_ic, seed, cfg)?;
            let stem = format!("stable_manifold-seed{seed}-r{}-n{n_ic}", num(r));
            out.report(&stem, &report, false);
            if p.x0.is_some() {
                let x0 = point(&p.x0, d, "x0")?;
                let hit = reaches_saddle(f, &center, &x0, cfg)?;
                out.json(
                    format!("{stem}-probe.json"),
                    &json!({ "initial_point": p.x0, "reached_saddle": hit }),
                );
            }
        }
        Experiment::TaylorCheck => {
            let center = point_or_origin(&p.saddle, d, "saddle")?;
            let c1 = p.c1.unwrap_or(DEFAULT_C1);
            let c2 = p.c2.unwrap_or(DEFAULT_C2);
            let r_hat = positive("r-hat", p.r_hat.unwrap_or(0.1))?;
            let n = p.n_samples.unwrap_or(100_000);
            let report = taylor_estimate_check(f, &center, c1, c2, r_hat, n, seed)?;
            let stem = format!("taylor_check-seed{seed}-rhat{}-C1{}-C2{}", num(r_hat), num(c1), num(c2));
            out.report(&stem, &report, false);
        }
        Experiment::GlobalBound => {
            let big_r = positive("R", required("R", &p.big_r)?)?;
            let r = positive("r", required("r", &p.r)?)?;
            let c = p.c.unwrap_or(DEFAULT_C);
            let n_ic = p.n_ic.unwrap_or(200);
            let report = global_convergence_experiment(f, big_r, p.nu, r, c, n_ic, seed, cfg)?;
            let stem = format!("global_bound-seed{seed}-R{}-r{}-C{}-n{n_ic}", num(big_r), num(r), num(c));
            out.report(&stem, &report, true);
            out.dat(
                format!("{stem}-convergence_times.dat"),
                "index time",
                report
                    .measured
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.time.map(|t| (i as f64, t))),
            );
        }
    }
    Ok(())
}

fn simulate(p: &Params, f: &dyn ObjectiveFunction, cfg: &IntegratorConfig, out: &mut Outputs) -> Result<(), Failure> {
    let x0 = point(&p.x0, f.dim(), "x0")?;
    let flow = p.flow.unwrap_or(FlowChoice::Ngd);
    let discrete = |steps: StepSizes, normalized: bool| {
        if normalized {
            FlowKind::discrete_ngd(steps)
        } else {
            FlowKind::discrete_gd(steps)
        }
    };
    let kind = match flow {
        FlowChoice::Gd => FlowKind::Gd,
        FlowChoice::Ngd => FlowKind::Ngd,
        FlowChoice::DiscreteGd | FlowChoice::DiscreteNgd => {
            let alpha = p.alpha.unwrap_or(1e-2);
            discrete(StepSizes::Constant(alpha), flow == FlowChoice::DiscreteNgd)
                .map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    let flow_name = serde_json::to_value(flow).expect("flow serializes");
    let flow_name = flow_name.as_str().unwrap_or("flow");

    if kind.is_discrete() {
        let n_steps = p.n_steps.unwrap_or(1000);
        let run = run_discrete(f, &kind, &x0, n_steps, cfg.grad_stop).map_err(AnalysisError::from)?;
        let mut csv = String::from("n,");
        for i in 0..f.dim() {
            let _ = write!(csv, "x_{i},");
        }
        csv.push_str("f\n");
        for (n, (x, fx)) in run.iterates.iter().zip(&run.f_values).enumerate() {
            let _ = write!(csv, "{n},");
            for xi in x.iter() {
                let _ = write!(csv, "{xi:.16e},");
            }
            let _ = writeln!(csv, "{fx:.16e}");
        }
        let stem = format!("simulate-{flow_name}");
        out.add(format!("{stem}.csv"), csv);
        out.dat(
            format!("{stem}-f_vs_n.dat"),
            "n f",
            run.f_values.iter().enumerate().map(|(n, v)| (n as f64, *v)),
        );
        let last = run.iterates.last().expect("at least the initial point");
        out.json(
            format!("{stem}.json"),
            &json!({
                "report_type": "simulate",
                "inputs": { "x0": p.x0, "flow": flow_name, "alpha": p.alpha.unwrap_or(1e-2), "n_steps": n_steps },
                "per_ic": [{
                    "initial_point": p.x0,
                    "steps": run.iterates.len() - 1,
                    "elapsed": run.elapsed.last(),
                    "final_point": last,
                    "stopped_at_critical": run.stopped_at_critical,
                }],
                "bound": null,
                "max": null,
                "pass": true,
                "details": null,
            }),
        );
        return Ok(());
    }

    let traj = integrate(f, &kind, &x0, cfg).map_err(AnalysisError::from)?;
    let stem = format!("simulate-{flow_name}");
    out.add(format!("{stem}.csv"), traj.to_csv_string());
    out.dat(
        format!("{stem}-f_vs_t.dat"),
        "t f",
        traj.times().iter().copied().zip(traj.f_values().iter().copied()),
    );
    out.dat(
        format!("{stem}-arclength_vs_t.dat"),
        "t arclength",
        traj.times().iter().copied().zip(traj.arc_lengths().iter().copied()),
    );
    let end_point = match traj.termination() {
        Termination::CriticalPointReached { point } => Some(point.clone()),
        _ => None,
    };
    out.json(
        format!("{stem}.json"),
        &json!({
            "report_type": "simulate",
            "inputs": { "x0": p.x0, "flow": flow_name, "t_max": cfg.t_max },
            "per_ic": [{
                "initial_point": p.x0,
                "termination": traj.termination(),
                "end_time": traj.end_time(),
                "final_point": traj.final_state().iter().copied().collect::<Vec<_>>(),
                "critical_point": end_point,
                "arc_length": traj.total_arc_length(),
                "nodes": traj.times().len(),
            }],
            "bound": null,
            "max": null,
            "pass": true,
            "details": null,
        }),
    );
    Ok(())
}

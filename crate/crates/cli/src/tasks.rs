//! Task dispatch: one config in, one result table out.
//!
//! Grid points run on the current rayon pool; rows keep grid order whatever
//! the completion order. A failed point keeps its row (non-finite values) and
//! is listed in the failures.

use gaussgme_core::fcs::{count_distribution, cumulants, scgf_sweep, tur_point};
use gaussgme_core::generator::{lindblad_at, tsme_generator};
use gaussgme_core::metrology::{joint_qfi_rate, joint_qfi_series, qfi_series};
use gaussgme_core::replica::bargmann_invariant;
use gaussgme_core::{
    evolve, opo_model, CountingSpec, Error as CoreError, GaussianMomentState, QuadraticModel, ReplicaPlan, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModelName, ModelParameters, ScenarioConfig, Task};
use crate::table::{Cell, ResultTable};

type CoreResult<T> = Result<T, CoreError>;

/// A grid point whose computation failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub row: usize,
    pub grid: String,
    pub value: f64,
    pub code: String,
    pub message: String,
}

impl PointFailure {
    fn new(row: usize, grid: &str, value: f64, err: &CoreError) -> Self {
        log::warn!("{grid} = {value}: {err}");
        Self { row, grid: grid.to_string(), value, code: err.code().to_string(), message: err.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub table: ResultTable,
    pub failures: Vec<PointFailure>,
}

impl TaskOutput {
    fn new(table: ResultTable) -> Self {
        Self { table, failures: Vec::new() }
    }
}

/// The model for a parameter set and the point `θ` at which to expand.
///
/// `opo-tur-deformed` is parametrized by the deformation itself, so its
/// expansion point is always 0.
pub fn build_model(name: ModelName, p: &ModelParameters) -> CoreResult<(QuadraticModel, f64)> {
    let base = opo_model(p.omega, p.chi, p.kappa, p.eta)?;
    Ok(match name {
        ModelName::Opo => (base, p.theta),
        ModelName::OpoTurDeformed => (base.tur_deformed(p.theta), 0.0),
    })
}

fn counting_spec(cfg: &ScenarioConfig, model: &QuadraticModel, theta: f64) -> CoreResult<CountingSpec> {
    match &cfg.counting.weights {
        Some(w) => Ok(CountingSpec::new(w.clone())),
        None => Ok(CountingSpec::unit(model.at(theta)?.monitored.nrows())),
    }
}

/// Parameter grid, or the single configured value of χ.
fn parameter_points(cfg: &ScenarioConfig) -> (String, Vec<(f64, ModelParameters)>) {
    let base = cfg.model.parameters;
    match &cfg.grids.parameter {
        Some(g) => {
            let points = g.values.iter().map(|&v| (v, base.with(&g.name, v).expect("validated name"))).collect();
            (g.name.clone(), points)
        }
        None => ("chi".to_string(), vec![(base.chi, base)]),
    }
}

fn rate(q: f64, t: f64) -> f64 {
    if t > 0.0 {
        q / t
    } else {
        f64::NAN
    }
}

pub fn execute(cfg: &ScenarioConfig) -> TaskOutput {
    log::info!("running task {}", cfg.task.name());
    match cfg.task {
        Task::Evolve => evolve_task(cfg),
        Task::JointQfi => qfi_task(cfg, false),
        Task::EnvQfi => qfi_task(cfg, true),
        Task::QfiRate => qfi_rate_task(cfg),
        Task::Scgf => scgf_task(cfg),
        Task::Cumulants => cumulants_task(cfg),
        Task::CountDistribution => count_task(cfg),
        Task::Tur => tur_task(cfg),
        Task::ReplicaQfi => replica_task(cfg),
    }
}

/// Column names of a trajectory over `dim` phase-space coordinates: `t`,
/// `ξ`, then `d` and the upper triangle of `σ` row by row, each entry as a
/// real/imaginary pair.
pub fn trajectory_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "xi_re".to_string(), "xi_im".to_string()];
    for i in 0..dim {
        cols.push(format!("d{i}_re"));
        cols.push(format!("d{i}_im"));
    }
    for i in 0..dim {
        for j in i..dim {
            cols.push(format!("sigma{i}{j}_re"));
            cols.push(format!("sigma{i}{j}_im"));
        }
    }
    cols
}

pub fn trajectory_table(traj: &Trajectory) -> ResultTable {
    let dim = traj.states.first().map_or(0, GaussianMomentState::dim);
    let mut table = ResultTable::new(trajectory_columns(dim));
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut row: Vec<Cell> = vec![(*t).into(), s.xi.re.into(), s.xi.im.into()];
        for z in s.mean.iter() {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        for i in 0..dim {
            for j in i..dim {
                row.push(s.sigma[(i, j)].re.into());
                row.push(s.sigma[(i, j)].im.into());
            }
        }
        table.push(row);
    }
    table
}

fn evolve_task(cfg: &ScenarioConfig) -> TaskOutput {
    let times = cfg.grids.time.as_deref().expect("validated");
    let run = || -> CoreResult<Trajectory> {
        let (model, theta) = build_model(cfg.model.name, &cfg.model.parameters)?;
        let g = match cfg.evolve.theta_right {
            Some(right) => tsme_generator(&model, theta, right)?,
            None => lindblad_at(&model.at(theta)?)?,
        };
        let co = g.coefficients()?;
        evolve(&GaussianMomentState::vacuum(model.n_modes()), &co, times, &cfg.integrator.to_core())
    };
    match run() {
        Ok(traj) => TaskOutput::new(trajectory_table(&traj)),
        Err(e) => {
            let mut out = TaskOutput::new(ResultTable::new(trajectory_columns(2)));
            out.failures.push(PointFailure::new(0, "t", times[times.len() - 1], &e));
            out
        }
    }
}

/// `(joint, env)` QFI at each time; env is `None` when not requested.
fn qfi_values(
    model: &QuadraticModel,
    theta: f64,
    times: &[f64],
    cfg: &ScenarioConfig,
    with_env: bool,
) -> CoreResult<Vec<(f64, Option<f64>)>> {
    let (fd, integ) = (cfg.fd.to_core(), cfg.integrator.to_core());
    if with_env {
        let s = qfi_series(model, theta, times, &fd, &integ)?;
        Ok(s.joint.into_iter().zip(s.env.into_iter().map(Some)).collect())
    } else {
        Ok(joint_qfi_series(model, theta, times, &fd, &integ)?.into_iter().map(|q| (q, None)).collect())
    }
}

/// Shared trajectories first; if that fails, each time on its own so the
/// good points survive.
fn qfi_rows(
    model: &QuadraticModel,
    theta: f64,
    times: &[f64],
    cfg: &ScenarioConfig,
    with_env: bool,
) -> Vec<CoreResult<(f64, Option<f64>)>> {
    match qfi_values(model, theta, times, cfg, with_env) {
        Ok(v) => v.into_iter().map(Ok).collect(),
        Err(e) => {
            log::info!("shared QFI series failed ({e}); retrying point by point");
            times
                .par_iter()
                .map(|&t| qfi_values(model, theta, &[t], cfg, with_env).map(|v| v[0]))
                .collect()
        }
    }
}

fn qfi_task(cfg: &ScenarioConfig, with_env: bool) -> TaskOutput {
    let times = cfg.grids.time.as_deref().expect("validated");
    let columns: &[&str] = if with_env {
        &["t", "joint_qfi", "env_qfi", "joint_rate", "env_rate"]
    } else {
        &["t", "joint_qfi", "joint_rate"]
    };
    let mut out = TaskOutput::new(ResultTable::new(columns.iter().copied()));
    let rows = match build_model(cfg.model.name, &cfg.model.parameters) {
        Ok((model, theta)) => qfi_rows(&model, theta, times, cfg, with_env),
        Err(e) => times.iter().map(|_| Err(e.clone())).collect(),
    };
    for (i, (&t, row)) in times.iter().zip(rows).enumerate() {
        let (joint, env) = match row {
            Ok((j, e)) => (j, e.unwrap_or(f64::NAN)),
            Err(e) => {
                out.failures.push(PointFailure::new(i, "t", t, &e));
                (f64::NAN, f64::NAN)
            }
        };
        let row: Vec<Cell> = if with_env {
            vec![t.into(), joint.into(), env.into(), rate(joint, t).into(), rate(env, t).into()]
        } else {
            vec![t.into(), joint.into(), rate(joint, t).into()]
        };
        out.table.push(row);
    }
    out
}

fn qfi_rate_task(cfg: &ScenarioConfig) -> TaskOutput {
    let (name, points) = parameter_points(cfg);
    let opts = cfg.steady_options();
    let fd = cfg.fd.to_core();
    let results: Vec<CoreResult<f64>> = points
        .par_iter()
        .map(|(_, p)| {
            let (model, theta) = build_model(cfg.model.name, p)?;
            joint_qfi_rate(&model, theta, &fd, &opts)
        })
        .collect();
    let mut out = TaskOutput::new(ResultTable::new([name.as_str(), "joint_qfi_rate"]));
    for (i, ((v, _), r)) in points.iter().zip(results).enumerate() {
        let q = r.unwrap_or_else(|e| {
            out.failures.push(PointFailure::new(i, &name, *v, &e));
            f64::NAN
        });
        out.table.push(vec![(*v).into(), q.into()]);
    }
    out
}

fn scgf_task(cfg: &ScenarioConfig) -> TaskOutput {
    let lambdas = cfg.grids.lambda.as_deref().expect("validated");
    let run = || -> CoreResult<Vec<CoreResult<gaussgme_core::C64>>> {
        let (model, theta) = build_model(cfg.model.name, &cfg.model.parameters)?;
        let counting = counting_spec(cfg, &model, theta)?;
        scgf_sweep(&model, theta, &counting, lambdas, &cfg.steady_options())
    };
    let values = run().unwrap_or_else(|e| lambdas.iter().map(|_| Err(e.clone())).collect());
    let mut out = TaskOutput::new(ResultTable::new(["lambda", "quantity", "re", "im"]));
    for (i, (&l, v)) in lambdas.iter().zip(values).enumerate() {
        let (re, im) = match v {
            Ok(c) => (c.re, c.im),
            Err(e) => {
                out.failures.push(PointFailure::new(i, "lambda", l, &e));
                (f64::NAN, f64::NAN)
            }
        };
        out.table.push(vec![l.into(), "scgf".into(), re.into(), im.into()]);
    }
    out
}

fn cumulants_task(cfg: &ScenarioConfig) -> TaskOutput {
    let (name, points) = parameter_points(cfg);
    let opts = cfg.steady_options();
    let fd = cfg.fd.to_core();
    let results: Vec<_> = points
        .par_iter()
        .map(|(_, p)| {
            let (model, theta) = build_model(cfg.model.name, p)?;
            let counting = counting_spec(cfg, &model, theta)?;
            cumulants(&model, theta, &counting, &fd, &opts)
        })
        .collect();
    let mut out = TaskOutput::new(ResultTable::new([name.as_str(), "quantity", "re", "im"]));
    for (i, ((v, _), r)) in points.iter().zip(results).enumerate() {
        let values = match r {
            Ok(c) => [c.current, c.noise, c.skewness],
            Err(e) => {
                out.failures.push(PointFailure::new(i, &name, *v, &e));
                [f64::NAN; 3]
            }
        };
        for (q, x) in ["current", "noise", "skewness"].into_iter().zip(values) {
            out.table.push(vec![(*v).into(), q.into(), x.into(), 0.0.into()]);
        }
    }
    out
}

fn count_task(cfg: &ScenarioConfig) -> TaskOutput {
    let t = cfg.grids.time.as_deref().expect("validated")[0];
    let run = || {
        let (model, theta) = build_model(cfg.model.name, &cfg.model.parameters)?;
        let counting = counting_spec(cfg, &model, theta)?;
        count_distribution(
            &model,
            theta,
            &counting,
            t,
            cfg.count.n_max,
            cfg.count.grid_points,
            &cfg.integrator.to_core(),
        )
    };
    let mut out = TaskOutput::new(ResultTable::new(["n", "quantity", "re", "im"]));
    match run() {
        Ok(dist) => {
            log::info!("normalization defect {:e}", dist.normalization_defect);
            for (n, p) in dist.probabilities.iter().enumerate() {
                out.table.push(vec![(n as f64).into(), "probability".into(), (*p).into(), 0.0.into()]);
            }
        }
        Err(e) => out.failures.push(PointFailure::new(0, "t", t, &e)),
    }
    out
}

fn tur_task(cfg: &ScenarioConfig) -> TaskOutput {
    let (name, points) = parameter_points(cfg);
    let opts = cfg.steady_options();
    let fd = cfg.fd.to_core();
    let results: Vec<_> = points
        .par_iter()
        .map(|(_, p)| {
            let (model, theta) = build_model(cfg.model.name, p)?;
            let counting = counting_spec(cfg, &model, theta)?;
            tur_point(&model, theta, &counting, &fd, &fd, &opts)
        })
        .collect();
    let mut out = TaskOutput::new(ResultTable::new(["chi_over_kappa", "D_over_J2", "inv_f", "slack"]));
    for (i, ((v, p), r)) in points.iter().zip(results).enumerate() {
        let values = match r {
            Ok(tp) => [tp.d_over_j2, tp.inv_f, tp.slack()],
            Err(e) => {
                out.failures.push(PointFailure::new(i, &name, *v, &e));
                [f64::NAN; 3]
            }
        };
        let mut row: Vec<Cell> = vec![(p.chi / p.kappa).into()];
        row.extend(values.map(Cell::from));
        out.table.push(row);
    }
    out
}

/// `Q_N(t)` for each order, with the Bargmann invariants of the plan
/// evaluated in parallel.
pub fn replica_orders_at(
    model: &QuadraticModel,
    theta: f64,
    t: f64,
    orders: &[usize],
    settings: &gaussgme_core::ReplicaSettings,
) -> CoreResult<Vec<f64>> {
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let plan = ReplicaPlan::new(theta, max_order, &settings.fd, settings.max_replicas)?;
    let values: CoreResult<Vec<_>> =
        plan.patterns().par_iter().map(|a| bargmann_invariant(model, a, t, settings)).collect();
    plan.assemble(&values?, orders)
}

fn replica_task(cfg: &ScenarioConfig) -> TaskOutput {
    let times = cfg.grids.time.as_deref().expect("validated");
    let orders = &cfg.replica.orders;
    let settings = cfg.replica_settings();
    let mut columns = vec!["t".to_string()];
    columns.extend(orders.iter().map(|n| format!("Q_{n}/t")));
    columns.extend(["tsme_joint_rate".to_string(), "tsme_env_rate".to_string()]);
    let mut out = TaskOutput::new(ResultTable::new(columns));

    let replica: Vec<CoreResult<Vec<f64>>> = match build_model(cfg.model.name, &cfg.model.parameters) {
        Ok((model, theta)) => {
            times.par_iter().map(|&t| replica_orders_at(&model, theta, t, orders, &settings)).collect()
        }
        Err(e) => times.iter().map(|_| Err(e.clone())).collect(),
    };
    let pure = cfg.model.parameters.with("eta", 1.0).expect("known name");
    let tsme: Vec<CoreResult<(f64, Option<f64>)>> = match build_model(cfg.model.name, &pure) {
        Ok((model, theta)) => qfi_rows(&model, theta, times, cfg, true),
        Err(e) => times.iter().map(|_| Err(e.clone())).collect(),
    };
    for (i, ((&t, q), s)) in times.iter().zip(replica).zip(tsme).enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        match q {
            Ok(q) => row.extend(q.iter().map(|&x| Cell::from(rate(x, t)))),
            Err(e) => {
                out.failures.push(PointFailure::new(i, "t", t, &e));
                row.extend(orders.iter().map(|_| Cell::from(f64::NAN)));
            }
        }
        match s {
            Ok((j, e)) => {
                row.push(rate(j, t).into());
                row.push(rate(e.unwrap_or(f64::NAN), t).into());
            }
            Err(e) => {
                out.failures.push(PointFailure::new(i, "t", t, &e));
                row.extend([Cell::from(f64::NAN), Cell::from(f64::NAN)]);
            }
        }
        out.table.push(row);
    }
    out
}

//! Scenario configuration: a TOML key tree, checked in full before any
//! computation starts.
//!
//! ```toml
//! task = "tur"
//!
//! [model]
//! name = "opo"
//! parameters = { kappa = 1.0, chi = 0.2 }
//!
//! [grids.parameter]
//! name = "chi"
//! start = 0.02
//! stop = 0.45
//! step = 0.01
//!
//! [output]
//! directory = "results/tur"
//! format = "csv"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use gaussgme_core::{FdConfig, IntegratorConfig, ReplicaSettings, SteadyStateOptions, Stencil};
use serde::Serialize;
use toml::{Table, Value};

use crate::error::CliError;

/// One schema violation, located by its dotted key path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Opo,
    OpoTurDeformed,
}

impl ModelName {
    pub const ALL: [(&'static str, ModelName); 2] =
        [("opo", ModelName::Opo), ("opo-tur-deformed", ModelName::OpoTurDeformed)];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Evolve,
    JointQfi,
    EnvQfi,
    QfiRate,
    Scgf,
    Cumulants,
    CountDistribution,
    Tur,
    ReplicaQfi,
}

impl Task {
    pub const ALL: [(&'static str, Task); 9] = [
        ("evolve", Task::Evolve),
        ("joint_qfi", Task::JointQfi),
        ("env_qfi", Task::EnvQfi),
        ("qfi_rate", Task::QfiRate),
        ("scgf", Task::Scgf),
        ("cumulants", Task::Cumulants),
        ("count_distribution", Task::CountDistribution),
        ("tur", Task::Tur),
        ("replica_qfi", Task::ReplicaQfi),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, t)| *t == self).map(|(n, _)| *n).expect("every task is listed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

/// OPO parameters; `theta` is the expansion point of every derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParameters {
    pub omega: f64,
    pub chi: f64,
    pub kappa: f64,
    pub eta: f64,
    pub theta: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self { omega: 0.0, chi: 0.2, kappa: 1.0, eta: 1.0, theta: 0.0 }
    }
}

impl ModelParameters {
    pub const NAMES: [&'static str; 5] = ["omega", "chi", "kappa", "eta", "theta"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "omega" => Some(self.omega),
            "chi" => Some(self.chi),
            "kappa" => Some(self.kappa),
            "eta" => Some(self.eta),
            "theta" => Some(self.theta),
            _ => None,
        }
    }

    /// Copy with one parameter replaced; `None` for an unknown name.
    pub fn with(&self, name: &str, value: f64) -> Option<Self> {
        let mut p = *self;
        let slot = match name {
            "omega" => &mut p.omega,
            "chi" => &mut p.chi,
            "kappa" => &mut p.kappa,
            "eta" => &mut p.eta,
            "theta" => &mut p.theta,
            _ => return None,
        };
        *slot = value;
        Some(p)
    }

    fn problems(&self, path: &str) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for name in Self::NAMES {
            let v = self.get(name).expect("listed name");
            if !v.is_finite() {
                out.push(Diagnostic::new(format!("{path}.{name}"), format!("{path}.{name} must be finite")));
            }
        }
        if !(self.kappa > 0.0) {
            out.push(Diagnostic::new(
                format!("{path}.kappa"),
                format!("{path}.kappa must be positive, got {}", self.kappa),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            out.push(Diagnostic::new(
                format!("{path}.eta"),
                format!("{path}.eta must lie in [0, 1], got {}", self.eta),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub name: ModelName,
    pub parameters: ModelParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterGrid {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Grids {
    pub time: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub parameter: Option<ParameterGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdSection {
    pub step: f64,
    pub stencil: &'static str,
    pub richardson: bool,
}

impl Default for FdSection {
    fn default() -> Self {
        Self { step: 1e-3, stencil: "three_point", richardson: false }
    }
}

impl FdSection {
    pub fn to_core(&self) -> FdConfig {
        let stencil = if self.stencil == "five_point" { Stencil::FivePoint } else { Stencil::ThreePoint };
        FdConfig { step: self.step, stencil, richardson: self.richardson }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means unbounded.
    pub max_step: Option<f64>,
    pub blowup_norm: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self { rel_tol: d.rel_tol, abs_tol: d.abs_tol, max_step: None, blowup_norm: d.blowup_norm }
    }
}

impl IntegratorSection {
    pub fn to_core(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            blowup_norm: self.blowup_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateSection {
    pub handoff_tol: f64,
    pub max_time: f64,
    pub newton_max_iter: usize,
    pub residual_tol: f64,
}

impl Default for SteadyStateSection {
    fn default() -> Self {
        let d = SteadyStateOptions::default();
        Self {
            handoff_tol: d.handoff_tol,
            max_time: d.max_time,
            newton_max_iter: d.newton_max_iter,
            residual_tol: d.residual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSection {
    /// One weight per monitored channel; `None` counts every channel once.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountSection {
    pub n_max: usize,
    pub grid_points: usize,
}

impl Default for CountSection {
    fn default() -> Self {
        Self { n_max: 40, grid_points: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSection {
    pub orders: Vec<usize>,
    pub max_replicas: usize,
    pub fd_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ReplicaSection {
    fn default() -> Self {
        let d = ReplicaSettings::default();
        Self {
            orders: vec![5, 10, 20],
            max_replicas: d.max_replicas,
            fd_step: d.fd.step,
            rel_tol: d.integrator.rel_tol,
            abs_tol: d.integrator.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EvolveSection {
    /// Right-hand parameter of a two-sided evolution; `None` evolves the
    /// ordinary master equation.
    pub theta_right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("results"), format: OutputFormat::Csv }
    }
}

/// A fully resolved scenario, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub task: Task,
    pub model: ModelSection,
    pub grids: Grids,
    pub fd: FdSection,
    pub integrator: IntegratorSection,
    pub steady_state: SteadyStateSection,
    pub counting: CountingSection,
    pub count: CountSection,
    pub replica: ReplicaSection,
    pub evolve: EvolveSection,
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn steady_options(&self) -> SteadyStateOptions {
        SteadyStateOptions {
            handoff_tol: self.steady_state.handoff_tol,
            max_time: self.steady_state.max_time,
            newton_max_iter: self.steady_state.newton_max_iter,
            residual_tol: self.steady_state.residual_tol,
            integrator: self.integrator.to_core(),
        }
    }

    pub fn replica_settings(&self) -> ReplicaSettings {
        ReplicaSettings {
            max_replicas: self.replica.max_replicas,
            integrator: IntegratorConfig {
                rel_tol: self.replica.rel_tol,
                abs_tol: self.replica.abs_tol,
                ..self.integrator.to_core()
            },
            fd: FdConfig::with_step(self.replica.fd_step),
        }
    }
}

const TOP_KEYS: [&str; 11] = [
    "task",
    "model",
    "grids",
    "fd",
    "integrator",
    "steady_state",
    "counting",
    "count",
    "replica",
    "evolve",
    "output",
];

/// Reads and checks a config file. Every violation is reported at once.
pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Unreadable { path: path.to_path_buf(), source: e })?;
    parse(&text)
}

/// Diagnostics for a config file; empty when it is valid.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>, CliError> {
    match load(path) {
        Ok(_) => Ok(Vec::new()),
        Err(CliError::Config(d)) => Ok(d),
        Err(e) => Err(e),
    }
}

pub fn parse(text: &str) -> Result<ScenarioConfig, CliError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(vec![Diagnostic::new("", format!("syntax error: {e}"))]))?;
    let mut r = Reader::default();
    let cfg = r.scenario(&root);
    match cfg {
        Some(cfg) if r.diags.is_empty() => Ok(cfg),
        _ => Err(CliError::Config(r.diags)),
    }
}

#[derive(Default)]
struct Reader {
    diags: Vec<Diagnostic>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn list_names<T>(names: &[(&str, T)]) -> String {
    names.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

impl Reader {
    fn report(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(path, message));
    }

    fn check_keys(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                let p = join(path, key);
                self.report(&p, format!("unknown key {p}; expected one of: {}", allowed.join(", ")));
            }
        }
    }

    fn section<'a>(&mut self, parent: &'a Table, path: &str, key: &str, allowed: &[&str]) -> Option<&'a Table> {
        let p = join(path, key);
        match parent.get(key) {
            None => None,
            Some(Value::Table(t)) => {
                self.check_keys(t, &p, allowed);
                Some(t)
            }
            Some(_) => {
                self.report(&p, format!("{p} must be a table"));
                None
            }
        }
    }

    fn number(&mut self, value: &Value, path: &str) -> Option<f64> {
        match value {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.report(path, format!("{path} must be a number"));
                None
            }
        }
    }

    fn f64_or(&mut self, t: Option<&Table>, path: &str, key: &str, default: f64) -> f64 {
        let p = join(path, key);
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(v) => self.number(v, &p).unwrap_or(default),
        }
    }

    fn opt_f64(&mut self, t: Option<&Table>, path: &str, key: &str) -> Option<f64> {
        let p = join(path, key);
        t.and_then(|t| t.get(key)).and_then(|v| self.number(v, &p))
    }

    fn positive(&mut self, t: Option<&Table>, path: &str, key: &str, default: f64) -> f64 {
        let v = self.f64_or(t, path, key, default);
        if !(v > 0.0) || v.is_nan() {
            let p = join(path, key);
            self.report(&p, format!("{p} must be positive"));
        }
        v
    }

    fn count(&mut self, t: Option<&Table>, path: &str, key: &str, default: usize) -> usize {
        let p = join(path, key);
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                self.report(&p, format!("{p} must be a non-negative integer"));
                default
            }
        }
    }

    fn boolean(&mut self, t: Option<&Table>, path: &str, key: &str, default: bool) -> bool {
        let p = join(path, key);
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.report(&p, format!("{p} must be true or false"));
                default
            }
        }
    }

    fn string<'a>(&mut self, t: Option<&'a Table>, path: &str, key: &str) -> Option<&'a str> {
        let p = join(path, key);
        match t.and_then(|t| t.get(key)) {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => {
                self.report(&p, format!("{p} must be a string"));
                None
            }
        }
    }

    fn numbers(&mut self, value: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = value else {
            self.report(path, format!("{path} must be an array of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            out.push(self.number(item, &format!("{path}[{i}]"))?);
        }
        Some(out)
    }

    fn scenario(&mut self, root: &Table) -> Option<ScenarioConfig> {
        self.check_keys(root, "", &TOP_KEYS);
        let task = self.task(root);
        let model = self.model(root);
        let grids = self.grids(root);
        let fd = self.fd(root);
        let integrator = self.integrator(root);
        let steady_state = self.steady_state(root);
        let counting = self.counting(root);
        let count = self.count_section(root);
        let replica = self.replica(root);
        let evolve = self.evolve(root);
        let output = self.output(root);
        let (task, model, grids) = (task?, model?, grids?);
        let cfg = ScenarioConfig {
            task,
            model,
            grids,
            fd,
            integrator,
            steady_state,
            counting,
            count,
            replica,
            evolve,
            output,
        };
        self.task_requirements(&cfg);
        Some(cfg)
    }

    fn task(&mut self, root: &Table) -> Option<Task> {
        let Some(name) = self.string(Some(root), "", "task") else {
            if !root.contains_key("task") {
                self.report("task", format!("task is required; valid tasks: {}", list_names(&Task::ALL)));
            }
            return None;
        };
        let found = Task::ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t);
        if found.is_none() {
            self.report("task", format!("unknown task '{name}'; valid tasks: {}", list_names(&Task::ALL)));
        }
        found
    }

    fn model(&mut self, root: &Table) -> Option<ModelSection> {
        if !root.contains_key("model") {
            self.report("model", "model section is required");
            return None;
        }
        let t = self.section(root, "", "model", &["name", "parameters"]);
        let name = match self.string(t, "model", "name") {
            None => {
                if t.is_some_and(|t| !t.contains_key("name")) {
                    self.report(
                        "model.name",
                        format!("model.name is required; valid models: {}", list_names(&ModelName::ALL)),
                    );
                }
                None
            }
            Some(n) => {
                let found = ModelName::ALL.iter().find(|(k, _)| *k == n).map(|(_, m)| *m);
                if found.is_none() {
                    self.report(
                        "model.name",
                        format!("unknown model '{n}'; valid models: {}", list_names(&ModelName::ALL)),
                    );
                }
                found
            }
        };
        let pt = t.and_then(|t| self.section(t, "model", "parameters", &ModelParameters::NAMES));
        let d = ModelParameters::default();
        let path = "model.parameters";
        let parameters = ModelParameters {
            omega: self.f64_or(pt, path, "omega", d.omega),
            chi: self.f64_or(pt, path, "chi", d.chi),
            kappa: self.f64_or(pt, path, "kappa", d.kappa),
            eta: self.f64_or(pt, path, "eta", d.eta),
            theta: self.f64_or(pt, path, "theta", d.theta),
        };
        self.diags.extend(parameters.problems(path));
        Some(ModelSection { name: name?, parameters })
    }

    fn grid_values(&mut self, value: &Value, path: &str, extra: &[&str]) -> Option<Vec<f64>> {
        let values = match value {
            Value::Array(_) => self.numbers(value, path)?,
            Value::Table(t) => {
                let mut allowed = vec!["values", "start", "stop", "step", "points"];
                allowed.extend_from_slice(extra);
                self.check_keys(t, path, &allowed);
                if let Some(v) = t.get("values") {
                    if ["start", "stop", "step", "points"].iter().any(|k| t.contains_key(*k)) {
                        self.report(path, format!("{path} takes either values or a start/stop range, not both"));
                    }
                    self.numbers(v, &join(path, "values"))?
                } else {
                    self.range(t, path)?
                }
            }
            _ => {
                self.report(path, format!("{path} must be an array or a table"));
                return None;
            }
        };
        if values.is_empty() {
            self.report(path, format!("{path} must not be empty"));
            return None;
        }
        if values.iter().any(|v| !v.is_finite()) {
            self.report(path, format!("{path} values must be finite"));
            return None;
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            self.report(path, format!("{path} must be strictly increasing"));
        }
        Some(values)
    }

    fn range(&mut self, t: &Table, path: &str) -> Option<Vec<f64>> {
        let start = self.opt_f64(Some(t), path, "start");
        let stop = self.opt_f64(Some(t), path, "stop");
        let (Some(start), Some(stop)) = (start, stop) else {
            self.report(path, format!("{path} needs values, or start and stop with step or points"));
            return None;
        };
        match (t.get("step"), t.get("points")) {
            (Some(_), Some(_)) => {
                self.report(path, format!("{path} takes step or points, not both"));
                None
            }
            (Some(v), None) => {
                let step = self.number(v, &join(path, "step"))?;
                if !(step > 0.0) || !step.is_finite() {
                    self.report(join(path, "step"), format!("{path}.step must be positive"));
                    return None;
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n < 0.0 {
                    self.report(path, format!("{path}.stop must not be below {path}.start"));
                    return None;
                }
                let digits = decimals(start).zip(decimals(step)).map(|(a, b)| a.max(b));
                Some((0..=n as usize).map(|i| tidy(start + i as f64 * step, digits)).collect())
            }
            (None, Some(v)) => {
                let p = join(path, "points");
                let n = match v {
                    Value::Integer(i) if *i >= 1 => *i as usize,
                    _ => {
                        self.report(&p, format!("{p} must be a positive integer"));
                        return None;
                    }
                };
                if n == 1 {
                    return Some(vec![start]);
                }
                let h = (stop - start) / (n - 1) as f64;
                Some((0..n).map(|i| if i + 1 == n { stop } else { start + i as f64 * h }).collect())
            }
            (None, None) => {
                self.report(path, format!("{path} needs step or points"));
                None
            }
        }
    }

    fn grids(&mut self, root: &Table) -> Option<Grids> {
        let t = self.section(root, "", "grids", &["time", "lambda", "parameter"]);
        let mut grids = Grids::default();
        let Some(t) = t else { return Some(grids) };
        if let Some(v) = t.get("time") {
            grids.time = self.grid_values(v, "grids.time", &[]);
            if grids.time.as_ref().is_some_and(|g| g[0] < 0.0) {
                self.report("grids.time", "grids.time must be non-negative");
            }
        }
        if let Some(v) = t.get("lambda") {
            grids.lambda = self.grid_values(v, "grids.lambda", &[]);
        }
        if let Some(v) = t.get("parameter") {
            let name = match v {
                Value::Table(pt) => self.string(Some(pt), "grids.parameter", "name").map(str::to_string),
                _ => None,
            };
            let values = self.grid_values(v, "grids.parameter", &["name"]);
            match name {
                None => self.report(
                    "grids.parameter.name",
                    format!("grids.parameter.name is required; one of: {}", ModelParameters::NAMES.join(", ")),
                ),
                Some(n) if !ModelParameters::NAMES.contains(&n.as_str()) => self.report(
                    "grids.parameter.name",
                    format!("unknown parameter '{n}'; one of: {}", ModelParameters::NAMES.join(", ")),
                ),
                Some(n) => {
                    if let Some(values) = values {
                        grids.parameter = Some(ParameterGrid { name: n, values });
                    }
                }
            }
        }
        Some(grids)
    }

    fn fd(&mut self, root: &Table) -> FdSection {
        let t = self.section(root, "", "fd", &["step", "stencil", "richardson"]);
        let d = FdSection::default();
        let step = self.positive(t, "fd", "step", d.step);
        let stencil = match self.string(t, "fd", "stencil") {
            None => d.stencil,
            Some("three_point") => "three_point",
            Some("five_point") => "five_point",
            Some(other) => {
                self.report("fd.stencil", format!("unknown stencil '{other}'; valid stencils: three_point, five_point"));
                d.stencil
            }
        };
        let richardson = self.boolean(t, "fd", "richardson", d.richardson);
        FdSection { step, stencil, richardson }
    }

    fn integrator(&mut self, root: &Table) -> IntegratorSection {
        let t = self.section(root, "", "integrator", &["rel_tol", "abs_tol", "max_step", "blowup_norm"]);
        let d = IntegratorSection::default();
        let p = "integrator";
        let max_step = self.opt_f64(t, p, "max_step");
        if max_step.is_some_and(|s| !(s > 0.0)) {
            self.report("integrator.max_step", "integrator.max_step must be positive");
        }
        IntegratorSection {
            rel_tol: self.positive(t, p, "rel_tol", d.rel_tol),
            abs_tol: self.positive(t, p, "abs_tol", d.abs_tol),
            max_step,
            blowup_norm: self.positive(t, p, "blowup_norm", d.blowup_norm),
        }
    }

    fn steady_state(&mut self, root: &Table) -> SteadyStateSection {
        let keys = ["handoff_tol", "max_time", "newton_max_iter", "residual_tol"];
        let t = self.section(root, "", "steady_state", &keys);
        let d = SteadyStateSection::default();
        let p = "steady_state";
        SteadyStateSection {
            handoff_tol: self.positive(t, p, "handoff_tol", d.handoff_tol),
            max_time: self.positive(t, p, "max_time", d.max_time),
            newton_max_iter: self.count(t, p, "newton_max_iter", d.newton_max_iter),
            residual_tol: self.positive(t, p, "residual_tol", d.residual_tol),
        }
    }

    fn counting(&mut self, root: &Table) -> CountingSection {
        let t = self.section(root, "", "counting", &["weights"]);
        let weights = t.and_then(|t| t.get("weights")).and_then(|v| self.numbers(v, "counting.weights"));
        if weights.as_ref().is_some_and(|w| w.iter().any(|x| !x.is_finite())) {
            self.report("counting.weights", "counting.weights must be finite");
        }
        CountingSection { weights }
    }

    fn count_section(&mut self, root: &Table) -> CountSection {
        let t = self.section(root, "", "count", &["n_max", "grid_points"]);
        let d = CountSection::default();
        let c = CountSection {
            n_max: self.count(t, "count", "n_max", d.n_max),
            grid_points: self.count(t, "count", "grid_points", d.grid_points),
        };
        if 2 * c.n_max >= c.grid_points {
            self.report("count.grid_points", "count.grid_points must exceed 2 * count.n_max");
        }
        c
    }

    fn replica(&mut self, root: &Table) -> ReplicaSection {
        let keys = ["orders", "max_replicas", "fd_step", "rel_tol", "abs_tol"];
        let t = self.section(root, "", "replica", &keys);
        let d = ReplicaSection::default();
        let p = "replica";
        let orders = match t.and_then(|t| t.get("orders")) {
            None => d.orders.clone(),
            Some(Value::Array(items)) if !items.is_empty() => {
                let parsed: Option<Vec<usize>> = items
                    .iter()
                    .map(|v| match v {
                        Value::Integer(i) if *i >= 0 => Some(*i as usize),
                        _ => None,
                    })
                    .collect();
                parsed.unwrap_or_else(|| {
                    self.report("replica.orders", "replica.orders must be non-negative integers");
                    d.orders.clone()
                })
            }
            Some(_) => {
                self.report("replica.orders", "replica.orders must be a nonempty array of integers");
                d.orders.clone()
            }
        };
        let r = ReplicaSection {
            orders,
            max_replicas: self.count(t, p, "max_replicas", d.max_replicas),
            fd_step: self.positive(t, p, "fd_step", d.fd_step),
            rel_tol: self.positive(t, p, "rel_tol", d.rel_tol),
            abs_tol: self.positive(t, p, "abs_tol", d.abs_tol),
        };
        let top = r.orders.iter().copied().max().unwrap_or(0);
        if top + 2 > r.max_replicas {
            self.report(
                "replica.orders",
                format!("replica order {top} needs {} replicas, above replica.max_replicas = {}", top + 2, r.max_replicas),
            );
        }
        r
    }

    fn evolve(&mut self, root: &Table) -> EvolveSection {
        let t = self.section(root, "", "evolve", &["theta_right"]);
        EvolveSection { theta_right: self.opt_f64(t, "evolve", "theta_right") }
    }

    fn output(&mut self, root: &Table) -> OutputSection {
        let t = self.section(root, "", "output", &["directory", "format"]);
        let d = OutputSection::default();
        let directory = self.string(t, "output", "directory").map(PathBuf::from).unwrap_or(d.directory);
        let format = match self.string(t, "output", "format") {
            None => d.format,
            Some(s) => OutputFormat::parse(s).unwrap_or_else(|| {
                self.report("output.format", format!("unknown output format '{s}'; valid formats: csv, json"));
                d.format
            }),
        };
        OutputSection { directory, format }
    }

    fn task_requirements(&mut self, cfg: &ScenarioConfig) {
        let task = cfg.task.name();
        let needs_time = matches!(
            cfg.task,
            Task::Evolve | Task::JointQfi | Task::EnvQfi | Task::CountDistribution | Task::ReplicaQfi
        );
        if needs_time && cfg.grids.time.is_none() {
            self.report("grids.time", format!("task {task} requires grids.time"));
        }
        if cfg.task == Task::CountDistribution && cfg.grids.time.as_ref().is_some_and(|g| g.len() != 1) {
            self.report("grids.time", "task count_distribution takes exactly one time");
        }
        if cfg.task == Task::Scgf && cfg.grids.lambda.is_none() {
            self.report("grids.lambda", "task scgf requires grids.lambda");
        }
        if cfg.task == Task::Tur {
            match &cfg.grids.parameter {
                None => self.report("grids.parameter", "task tur requires grids.parameter over chi"),
                Some(g) if g.name != "chi" => {
                    self.report("grids.parameter.name", "task tur scans chi; set grids.parameter.name = \"chi\"")
                }
                Some(_) => {}
            }
        }
        if let Some(g) = &cfg.grids.parameter {
            for (i, v) in g.values.iter().enumerate() {
                let p = cfg.model.parameters.with(&g.name, *v).expect("name checked");
                for d in p.problems("model.parameters") {
                    self.report(
                        format!("grids.parameter[{i}]"),
                        format!("grids.parameter value {v}: {}", d.message),
                    );
                }
            }
        }
    }
}

/// Decimal places in the shortest representation of `x`, if it has no exponent.
fn decimals(x: f64) -> Option<usize> {
    let s = format!("{x:?}");
    if s.contains('e') {
        return None;
    }
    Some(s.split_once('.').map_or(0, |(_, frac)| frac.len()))
}

/// Rounds `start + i·step` back to the decimal places of its inputs, which
/// removes the representation noise of the sum.
fn tidy(x: f64, digits: Option<usize>) -> f64 {
    match digits {
        Some(d) if d <= 12 => format!("{x:.d$}").parse().unwrap_or(x),
        _ => x,
    }
}

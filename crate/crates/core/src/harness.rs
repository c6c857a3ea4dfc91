//! Configuration-driven convergence studies: scheme x N (or h) sweeps, errors against a
//! selected reference, rates and CSV / Markdown output.

use crate::cq_stepper::solve_cq;
use crate::l1_stepper::solve_l1;
use crate::laplace_reference::{LaplaceReference, DEFAULT_NODES};
use crate::mesh_fem::{l2_error_vs_series, GridFunction, Mesh, MeshKind};
use crate::spacetime_pg::{pg_assemble, pg_l2qt_error, pg_solve, CubicReference, TimeQuadRule, TimeReference};
use crate::spectral_reference::{
    exact_solution, truncation_order, DiscreteEigen, InitialData, ProblemSpec, SeparableTerm, SeriesField,
};
use crate::stepping::{initial_vector, FemScheme, SpaceDisc, VhRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Time discretization named in a config: `bdf1`..`bdf6`, `l1` or `pg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    Bdf(usize),
    L1,
    Pg,
}

impl TryFrom<String> for Scheme {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l1" => Ok(Scheme::L1),
            "pg" => Ok(Scheme::Pg),
            _ => match s.strip_prefix("bdf").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if (1..=6).contains(&k) => Ok(Scheme::Bdf(k)),
                _ => Err(format!("unknown scheme `{s}` (bdf1..bdf6, l1, pg)")),
            },
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bdf(k) => write!(f, "bdf{k}"),
            Scheme::L1 => f.write_str("l1"),
            Scheme::Pg => f.write_str("pg"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: MeshKind,
    pub alpha: Vec<f64>,
    /// Final time t_N; errors are taken there (or over (0, T) for `pg`).
    pub t_final: f64,
    #[serde(default = "zero_initial")]
    pub initial: InitialData,
    #[serde(default)]
    pub source: Vec<SeparableTerm>,
}

fn zero_initial() -> InitialData {
    InitialData::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Cells per direction; h = 1/cells.
    pub cells: Vec<usize>,
    #[serde(default)]
    pub fem: FemScheme,
    #[serde(default)]
    pub v_h: Option<VhRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub corrected: bool,
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// Semidiscrete solution from the dense generalized eigenbasis (interval only).
    DiscreteEigen,
    /// Eigenfunction series of the continuous solution, truncation doubled until the error settles.
    Spectral {
        #[serde(default = "default_series_tol")]
        tol: f64,
    },
    /// Corrected BDF run with `factor` times the largest N.
    FineStep {
        factor: usize,
        #[serde(default = "default_fine_order")]
        order: usize,
    },
    /// Semidiscrete solution by contour inversion of the Laplace transform.
    Laplace {
        #[serde(default)]
        nodes: Option<usize>,
    },
}

fn default_series_tol() -> f64 {
    1e-3
}

fn default_fine_order() -> usize {
    3
}

impl ReferenceConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceConfig::DiscreteEigen => "discrete_eigen",
            ReferenceConfig::Spectral { .. } => "spectral",
            ReferenceConfig::FineStep { .. } => "fine_step",
            ReferenceConfig::Laplace { .. } => "laplace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub label: String,
    pub problem: ProblemConfig,
    pub space: SpaceConfig,
    pub time: TimeConfig,
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub error: ErrorMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub cases: Vec<CaseConfig>,
}

const ROOT_KEYS: [&str; 3] = ["name", "description", "cases"];

/// Sets `path` (dot separated, numeric segments index arrays) to `raw`, parsed as JSON or taken as a string.
fn set_path(target: &mut Value, path: &[&str], value: Value) -> Result<(), String> {
    let (head, rest) = path.split_first().ok_or("empty key")?;
    let slot = match target {
        Value::Object(map) => map.entry(head.to_string()).or_insert(Value::Null),
        Value::Array(items) => {
            let i: usize = head.parse().map_err(|_| format!("`{head}` is not an index"))?;
            items.get_mut(i).ok_or(format!("index {i} out of range"))?
        }
        _ => return Err(format!("cannot descend into `{head}`")),
    };
    if rest.is_empty() {
        *slot = value;
        Ok(())
    } else {
        if slot.is_null() {
            *slot = Value::Object(Default::default());
        }
        set_path(slot, rest, value)
    }
}

/// Applies one `key=value` override. Keys outside the root set apply to every case.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(spec.into()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let bad = |e: String| ConfigError::Invalid(format!("{key}: {e}"));
    if ROOT_KEYS.contains(&path[0]) {
        return set_path(doc, &path, value).map_err(bad);
    }
    let cases = doc.get_mut("cases").and_then(Value::as_array_mut).ok_or_else(|| bad("config has no cases".into()))?;
    for case in cases {
        set_path(case, &path, value.clone()).map_err(bad)?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |label: &str, m: String| Err(ConfigError::Invalid(format!("case `{label}`: {m}")));
        if self.cases.is_empty() {
            return Err(ConfigError::Invalid("no cases".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for c in &self.cases {
            let l = c.label.as_str();
            if l.is_empty() || !l.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch)) {
                return bad(l, "labels must be non-empty and use [A-Za-z0-9._-]".into());
            }
            if !labels.insert(l) {
                return bad(l, "duplicate label".into());
            }
            let p = &c.problem;
            if p.alpha.is_empty() || p.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                return bad(l, "alpha values must lie in (0, 1)".into());
            }
            if !(p.t_final > 0.0 && p.t_final.is_finite()) {
                return bad(l, "t_final must be positive".into());
            }
            let increasing = |v: &[usize]| !v.is_empty() && v[0] > 0 && v.windows(2).all(|w| w[1] > w[0]);
            if !increasing(&c.space.cells) {
                return bad(l, "space.cells must be a non-empty increasing list of positive integers".into());
            }
            if !increasing(&c.time.steps) {
                return bad(l, "time.steps must be a non-empty increasing list of positive integers".into());
            }
            if c.time.schemes.is_empty() {
                return bad(l, "no schemes".into());
            }
            for a in &p.alpha {
                let spec = c.spec(*a);
                if let Err(e) = spec.validate() {
                    return bad(l, e.to_string());
                }
            }
            let pg = c.time.schemes.contains(&Scheme::Pg);
            if pg && c.time.schemes.len() > 1 {
                return bad(l, "pg cannot share a case with time-stepping schemes".into());
            }
            if pg && !p.initial.is_zero() {
                return bad(l, "pg needs zero initial data".into());
            }
            if pg && c.error == ErrorMetric::Relative {
                return bad(l, "pg reports the absolute L2(Q_T) error".into());
            }
            match &c.reference {
                ReferenceConfig::DiscreteEigen if p.domain != MeshKind::Interval => {
                    return bad(l, "discrete_eigen needs the interval".into())
                }
                ReferenceConfig::Spectral { tol } if !(*tol > 0.0) => return bad(l, "spectral tol must be positive".into()),
                ReferenceConfig::Spectral { .. } if pg => return bad(l, "pg needs a time-continuous reference".into()),
                ReferenceConfig::FineStep { factor, order } if *factor == 0 || !(1..=6).contains(order) => {
                    return bad(l, "fine_step needs factor >= 1 and order in 1..=6".into())
                }
                ReferenceConfig::FineStep { order, .. } if pg && *order < 4 => {}
                ReferenceConfig::FineStep { .. } if pg => {
                    return bad(l, "cubic interpolation of the fine-step reference needs order <= 3".into())
                }
                ReferenceConfig::DiscreteEigen if pg => return bad(l, "pg needs a time-continuous reference".into()),
                ReferenceConfig::Laplace { nodes: Some(n) } if *n < 8 => return bad(l, "laplace needs at least 8 nodes".into()),
                _ => {}
            }
        }
        Ok(())
    }
}

impl CaseConfig {
    pub fn spec(&self, alpha: f64) -> ProblemSpec {
        ProblemSpec {
            domain: self.problem.domain,
            alpha,
            t_final: self.problem.t_final,
            initial: self.problem.initial.clone(),
            source: self.problem.source.clone(),
        }
    }

    pub fn vh_rule(&self) -> VhRule {
        self.space.v_h.unwrap_or_else(|| VhRule::default_for(&self.problem.initial))
    }
}

/// Cell outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub alpha: f64,
    pub scheme: Scheme,
    pub corrected: bool,
    pub n: usize,
    pub cells: usize,
    pub error: Option<f64>,
    pub rate: Option<f64>,
    /// Relative change under the reference self-check, when one ran.
    pub self_check: Option<f64>,
    pub failure: Option<String>,
}

impl Row {
    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub label: String,
    pub fem: FemScheme,
    pub reference: String,
    pub metric: ErrorMetric,
    pub t_final: f64,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub description: String,
    pub cases: Vec<CaseReport>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(|c| c.rows.iter().all(|r| r.failure.is_none()))
    }

    pub fn case(&self, label: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.label == label)
    }
}

impl CaseReport {
    /// Rows of one (alpha, scheme) series in sweep order.
    pub fn series(&self, alpha: f64, scheme: Scheme) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.alpha == alpha && r.scheme == scheme).collect()
    }
}

/// rate_i = log2(e_{i-1} / e_i) where the parameter doubles between neighbours, else none.
pub fn compute_rates(errors: &[f64], ns: &[usize]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), ns.len());
    (0..errors.len())
        .map(|i| {
            if i == 0 || ns[i] != 2 * ns[i - 1] {
                return None;
            }
            let (a, b) = (errors[i - 1], errors[i]);
            (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (a / b).log2())
        })
        .collect()
}

/// Reference solution shared by all cells of one (alpha, cells) group.
enum GroupRef {
    Final(Vec<f64>),
    Series(SeriesCache),
    Continuous(Arc<dyn TimeReference + Send>),
}

struct SeriesCache {
    spec: ProblemSpec,
    start: usize,
    cap: usize,
    tol: f64,
    fields: Mutex<BTreeMap<usize, Arc<SeriesField>>>,
}

impl SeriesCache {
    fn field(&self, m: usize) -> Result<Arc<SeriesField>, String> {
        let mut map = self.fields.lock().expect("series cache");
        if let Some(f) = map.get(&m) {
            return Ok(f.clone());
        }
        let f = Arc::new(exact_solution(&self.spec, self.spec.t_final, m, m).map_err(|e| e.to_string())?);
        map.insert(m, f.clone());
        Ok(f)
    }

    /// Error of g, doubling the truncation until successive values agree to `tol`.
    fn error(&self, g: &GridFunction, metric: ErrorMetric) -> Result<(f64, f64), String> {
        let mut m = self.start;
        let eval = |m: usize| -> Result<f64, String> {
            let f = self.field(m)?;
            let e = l2_error_vs_series(g, &f);
            Ok(match metric {
                ErrorMetric::Absolute => e,
                ErrorMetric::Relative => e / f.norm_sq().sqrt(),
            })
        };
        let mut a = eval(m)?;
        loop {
            if 2 * m > self.cap {
                return Err(format!("series truncation did not settle below {} modes", self.cap));
            }
            let b = eval(2 * m)?;
            let change = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            if change <= self.tol {
                return Ok((b, change));
            }
            m *= 2;
            a = b;
        }
    }
}

struct Group {
    alpha: f64,
    cells: usize,
    spec: ProblemSpec,
    disc: SpaceDisc,
    v_h: Vec<f64>,
    reference: Result<GroupRef, String>,
}

fn build_group(case: &CaseConfig, alpha: f64, cells: usize) -> Result<Group, String> {
    let spec = case.spec(alpha);
    let mesh = Mesh::new(spec.domain, cells).map_err(|e| e.to_string())?;
    let disc = SpaceDisc::new(&spec, mesh, case.space.fem).map_err(|e| e.to_string())?;
    let v_h = initial_vector(&mesh, &spec.initial, case.vh_rule()).map_err(|e| e.to_string())?.coeffs;
    let pg = case.time.schemes.contains(&Scheme::Pg);
    let t = spec.t_final;
    let max_n = *case.time.steps.last().expect("validated");
    let reference = (|| -> Result<GroupRef, String> {
        Ok(match &case.reference {
            ReferenceConfig::DiscreteEigen => {
                let eig = DiscreteEigen::new(&disc.mass, &disc.stiff).map_err(|e| e.to_string())?;
                GroupRef::Final(eig.solve(alpha, &v_h, &disc.loads, t).map_err(|e| e.to_string())?)
            }
            ReferenceConfig::Spectral { tol } => {
                let trunc = truncation_order(spec.domain, alpha, t, 50.0);
                let (start, cap) = match spec.domain {
                    MeshKind::Interval => ((16 * cells).max(trunc), 1 << 22),
                    MeshKind::UnitSquare => ((16 * cells).max(trunc), 8192),
                };
                GroupRef::Series(SeriesCache { spec: spec.clone(), start, cap, tol: *tol, fields: Mutex::new(BTreeMap::new()) })
            }
            ReferenceConfig::FineStep { factor, order } => {
                let tr = solve_cq(&spec, mesh, case.space.fem, &v_h, *order, factor * max_n, true).map_err(|e| e.to_string())?;
                if pg {
                    GroupRef::Continuous(Arc::new(CubicReference { traj: tr }))
                } else {
                    GroupRef::Final(tr.last().to_vec())
                }
            }
            ReferenceConfig::Laplace { nodes } => {
                let nodes = nodes.unwrap_or(DEFAULT_NODES);
                if pg {
                    let lo = TimeQuadRule::default().doubled().smallest_node(t / max_n as f64);
                    let r = LaplaceReference::new(&disc, alpha, &v_h, lo, t, nodes).map_err(|e| e.to_string())?;
                    GroupRef::Continuous(Arc::new(r))
                } else {
                    let r = LaplaceReference::new(&disc, alpha, &v_h, t, t, nodes).map_err(|e| e.to_string())?;
                    let mut out = vec![0.0; disc.dof()];
                    r.fill_states(&[t], &mut out).map_err(|e| e.to_string())?;
                    GroupRef::Final(out)
                }
            }
        })
    })();
    Ok(Group { alpha, cells, spec, disc, v_h, reference })
}

fn run_cell(case: &CaseConfig, g: &Group, scheme: Scheme, n: usize) -> Result<(f64, Option<f64>), String> {
    let reference = g.reference.as_ref().map_err(|e| format!("reference: {e}"))?;
    let corrected = case.time.corrected;
    let mesh = g.disc.mesh;
    if scheme == Scheme::Pg {
        let sys = pg_assemble(&g.spec, mesh, case.space.fem, n).map_err(|e| e.to_string())?;
        let tr = pg_solve(&sys).map_err(|e| e.to_string())?;
        let GroupRef::Continuous(r) = reference else {
            return Err("pg needs a time-continuous reference".into());
        };
        let e = pg_l2qt_error(&tr, r.as_ref(), &g.disc.mass, TimeQuadRule::default()).map_err(|e| e.to_string())?;
        return Ok((e.value, Some(e.rel_change)));
    }
    let tr = match scheme {
        Scheme::Bdf(k) => solve_cq(&g.spec, mesh, case.space.fem, &g.v_h, k, n, corrected),
        Scheme::L1 => solve_l1(&g.spec, mesh, case.space.fem, &g.v_h, n, corrected),
        Scheme::Pg => unreachable!(),
    }
    .map_err(|e| e.to_string())?;
    let last = tr.last();
    match reference {
        GroupRef::Final(u) => {
            let diff: Vec<f64> = last.iter().zip(u).map(|(a, b)| a - b).collect();
            let e = g.disc.mass.quad_form(&diff).max(0.0).sqrt();
            Ok(match case.error {
                ErrorMetric::Absolute => (e, None),
                ErrorMetric::Relative => (e / g.disc.mass.quad_form(u).sqrt(), None),
            })
        }
        GroupRef::Series(cache) => {
            let (e, change) = cache.error(&GridFunction::new(mesh, last.to_vec()), case.error)?;
            Ok((e, Some(change)))
        }
        GroupRef::Continuous(_) => Err("time-stepping schemes need a final-time reference".into()),
    }
}

fn run_case(case: &CaseConfig) -> CaseReport {
    let mut keys = Vec::new();
    for &a in &case.problem.alpha {
        for &c in &case.space.cells {
            keys.push((a, c));
        }
    }
    let groups: Vec<Result<Group, (f64, usize, String)>> =
        keys.par_iter().map(|&(a, c)| build_group(case, a, c).map_err(|e| (a, c, e))).collect();
    let mut jobs = Vec::new();
    for &a in &case.problem.alpha {
        for &s in &case.time.schemes {
            for &c in &case.space.cells {
                for &n in &case.time.steps {
                    jobs.push((a, s, c, n));
                }
            }
        }
    }
    let outcomes: Vec<Result<(f64, Option<f64>), String>> = jobs
        .par_iter()
        .map(|&(a, s, c, n)| {
            let g = groups
                .iter()
                .find_map(|g| match g {
                    Ok(g) if g.alpha == a && g.cells == c => Some(Ok(g)),
                    Err((ga, gc, e)) if *ga == a && *gc == c => Some(Err(e.clone())),
                    _ => None,
                })
                .expect("group exists")?;
            run_cell(case, g, s, n)
        })
        .collect();
    let mut rows: Vec<Row> = jobs
        .iter()
        .zip(outcomes)
        .map(|(&(alpha, scheme, cells, n), out)| {
            let (error, self_check, failure) = match out {
                Ok((e, c)) if e.is_finite() => (Some(e), c, None),
                Ok((e, _)) => (None, None, Some(format!("non-finite error {e}"))),
                Err(m) => (None, None, Some(m)),
            };
            Row { alpha, scheme, corrected: case.time.corrected, n, cells, error, rate: None, self_check, failure }
        })
        .collect();
    for i in 1..rows.len() {
        let (p, r) = (&rows[i - 1], &rows[i]);
        if p.alpha != r.alpha || p.scheme != r.scheme {
            continue;
        }
        let doubled = (r.n == 2 * p.n && r.cells == p.cells) || (r.cells == 2 * p.cells && r.n == p.n);
        if let (true, Some(a), Some(b)) = (doubled, p.error, r.error) {
            rows[i].rate = compute_rates(&[a, b], &[1, 2])[1];
        }
    }
    CaseReport {
        label: case.label.clone(),
        fem: case.space.fem,
        reference: case.reference.name().to_string(),
        metric: case.error,
        t_final: case.problem.t_final,
        rows,
    }
}

/// Runs every case; cells run concurrently on at most `jobs` threads.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport, ConfigError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;
    let cases = pool.install(|| cfg.cases.iter().map(run_case).collect());
    Ok(ExperimentReport { name: cfg.name.clone(), description: cfg.description.clone(), cases })
}

/// Three significant digits in e-notation, as in the printed tables.
pub fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

fn fmt_alpha(a: f64) -> String {
    let s = format!("{a}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn emit_csv(case: &CaseReport) -> String {
    let mut out = String::from("alpha,scheme,corrected,N,h,error,rate\n");
    for r in &case.rows {
        let err = match (&r.error, &r.failure) {
            (Some(e), _) => sci(*e),
            _ => "FAILED".to_string(),
        };
        let rate = r.rate.map(|x| format!("{x:.2}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", fmt_alpha(r.alpha), r.scheme, r.corrected, r.n, sci(r.h()), err, rate);
    }
    out
}

/// One table per case: a row per (alpha, scheme), a column per swept N or h, mean rate last.
pub fn emit_markdown(report: &ExperimentReport) -> String {
    let mut out = format!("# {}\n\n", report.name);
    if !report.description.is_empty() {
        let _ = writeln!(out, "{}\n", report.description);
    }
    for case in &report.cases {
        let by_h = {
            let mut cells: Vec<usize> = case.rows.iter().map(|r| r.cells).collect();
            cells.dedup();
            let mut ns: Vec<usize> = case.rows.iter().map(|r| r.n).collect();
            ns.sort_unstable();
            ns.dedup();
            cells.len() > 1 && ns.len() == 1
        };
        let _ = writeln!(
            out,
            "## {}\n\nfem: {:?}, reference: {}, error: {:?}, t_N = {}\n",
            case.label, case.fem, case.reference, case.metric, case.t_final
        );
        let mut cols: Vec<usize> = case.rows.iter().map(|r| if by_h { r.cells } else { r.n }).collect();
        cols.sort_unstable();
        cols.dedup();
        let head: Vec<String> =
            cols.iter().map(|c| if by_h { format!("h=1/{c}") } else { format!("N={c}") }).collect();
        let _ = writeln!(out, "| alpha | scheme | {} | rate |", head.join(" | "));
        let _ = writeln!(out, "|---|---|{}---|", "---|".repeat(cols.len()));
        let mut seen: Vec<(f64, Scheme, usize)> = Vec::new();
        for r in &case.rows {
            let key = (r.alpha, r.scheme, if by_h { r.n } else { r.cells });
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let line: Vec<&Row> = case
                .rows
                .iter()
                .filter(|x| (x.alpha, x.scheme, if by_h { x.n } else { x.cells }) == key)
                .collect();
            let cells: Vec<String> = cols
                .iter()
                .map(|c| {
                    line.iter()
                        .find(|x| (if by_h { x.cells } else { x.n }) == *c)
                        .map(|x| x.error.map(sci).unwrap_or_else(|| "FAILED".into()))
                        .unwrap_or_default()
                })
                .collect();
            let rates: Vec<f64> = line.iter().filter_map(|x| x.rate).collect();
            let rate = if rates.is_empty() {
                String::new()
            } else {
                format!("{:.2}", rates.iter().sum::<f64>() / rates.len() as f64)
            };
            let label = if r.corrected { format!("{} (corrected)", r.scheme) } else { r.scheme.to_string() };
            let _ = writeln!(out, "| {} | {} | {} | {} |", fmt_alpha(r.alpha), label, cells.join(" | "), rate);
        }
        let failures: Vec<&Row> = case.rows.iter().filter(|r| r.failure.is_some()).collect();
        if !failures.is_empty() {
            let _ = writeln!(out, "\nFailed cells:\n");
            for f in failures {
                let _ = writeln!(
                    out,
                    "- alpha={} {} N={} h=1/{}: {}",
                    fmt_alpha(f.alpha),
                    f.scheme,
                    f.n,
                    f.cells,
                    f.failure.as_deref().unwrap_or("")
                );
            }
        }
        out.push('\n');
    }
    out
}

/// Output file name for a case CSV.
pub fn csv_name(report: &ExperimentReport, case: &CaseReport) -> String {
    if report.cases.len() == 1 {
        format!("{}.csv", report.name)
    } else {
        format!("{}-{}.csv", report.name, case.label)
    }
}

/// (x, u(x, t)) samples of the series solution along y = 1/2 (or the interval).
pub fn profile(case: &CaseConfig, alpha: f64, t: f64, points: usize, tol: f64) -> Result<Vec<(f64, f64)>, String> {
    let mut spec = case.spec(alpha);
    spec.t_final = t;
    let xs: Vec<(f64, f64)> = (0..points).map(|i| (i as f64 / (points - 1) as f64, 0.5)).collect();
    let vals = crate::spectral_reference::exact_solution_checked(&spec, t, &xs, tol).map_err(|e| e.to_string())?;
    Ok(xs.iter().map(|p| p.0).zip(vals).collect())
}

/// Bundled preset configurations keyed by file stem.
pub fn presets() -> Vec<(&'static str, &'static str)> {
    vec![
        ("table1", include_str!("../presets/table1.json")),
        ("table2", include_str!("../presets/table2.json")),
        ("table3", include_str!("../presets/table3.json")),
        ("table4", include_str!("../presets/table4.json")),
        ("table5", include_str!("../presets/table5.json")),
        ("table6", include_str!("../presets/table6.json")),
        ("table7", include_str!("../presets/table7.json")),
        ("profiles", include_str!("../presets/profiles.json")),
    ]
}

pub fn preset(name: &str) -> Option<&'static str> {
    presets().into_iter().find(|(n, _)| *n == name).map(|(_, t)| t)
}

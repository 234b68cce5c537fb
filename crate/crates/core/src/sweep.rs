//! Sweep configuration: parsing, validation and evaluation.
//!
//! A config is a TOML document:
//!
//! ```toml
//! kind = "scalar"                     # or "vector"
//! families = ["Theorem1", "Cor1Second", "Cor3First"]
//! format = "csv"                      # or "json"
//! output = "report.csv"               # omit for stdout
//! loss_variance_proxy = 1.0           # only for XuRaginsky / BuEtAl
//!
//! [problem]
//! mu = 0.0            # vector: a list
//! sigma2 = 1.0        # scalar only
//! sigma = [[1.0, 0.0], [0.0, 4.0]]   # vector only
//! a = "identity"      # vector only: "identity", "sigma_inverse" or a matrix
//! sigma_n2 = 0.0
//! n = 10
//! weights = "uniform" # "uniform", "extreme" (all weight on Z_1) or a list
//!
//! [sweep]
//! param = "n"         # n, sigma2, sigma_n2, mu, sigma.i.j, a.i.j
//! values = [2, 5, 10] # or start / stop / step (inclusive)
//!
//! [mc]                # omit for closed-form only
//! samples = 100000
//! seed = 1            # else $INFOBOUND_SEED, else 0
//! ```
//!
//! `key=value` overrides address the same document by dotted path, e.g.
//! `problem.sigma2=2` or `sweep.values=[4,8]`.

use std::fmt;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::mc::{mc_gen_error_scalar, mc_gen_error_vec};
use crate::report::{Report, ReportRow};
use crate::scalar::{evaluate_family, true_gen_error, BoundFamily, BoundResult, ScalarLocationProblem};
use crate::vector::{bound_decomposed_vec, bound_direct_vec, true_gen_error_vec, VectorLocationProblem};

/// Environment variable supplying the default MC seed.
pub const SEED_ENV: &str = "INFOBOUND_SEED";

/// Weights this close to the simplex are renormalized; farther is an error.
pub const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform,
    /// `α = (1, 0, …, 0)`.
    Extreme,
    Explicit(Vec<f64>),
}

impl Weights {
    fn resolve(&self, n: usize) -> Vec<f64> {
        match self {
            Weights::Uniform => vec![1.0 / n as f64; n],
            Weights::Extreme => {
                let mut a = vec![0.0; n];
                a[0] = 1.0;
                a
            }
            Weights::Explicit(a) => a.clone(),
        }
    }

    fn is_uniform(&self, n: usize) -> bool {
        match self {
            Weights::Uniform => true,
            Weights::Extreme => n == 1,
            Weights::Explicit(a) => a.iter().all(|x| (x - a[0]).abs() <= 1e-12),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossMatrix {
    Identity,
    SigmaInverse,
    Explicit(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemTemplate {
    Scalar {
        mu: f64,
        sigma2: f64,
        sigma_n2: f64,
        n: usize,
        weights: Weights,
    },
    Vector {
        mu: Vec<f64>,
        sigma: DMatrix<f64>,
        sigma_n2: f64,
        n: usize,
        weights: Weights,
        a: LossMatrix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    Sigma2,
    SigmaN2,
    Mu,
    /// Symmetric entry `(i, j)` of Σ.
    Sigma(usize, usize),
    /// Symmetric entry `(i, j)` of A.
    A(usize, usize),
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::N => f.write_str("n"),
            SweepParam::Sigma2 => f.write_str("sigma2"),
            SweepParam::SigmaN2 => f.write_str("sigma_n2"),
            SweepParam::Mu => f.write_str("mu"),
            SweepParam::Sigma(i, j) => write!(f, "sigma.{i}.{j}"),
            SweepParam::A(i, j) => write!(f, "a.{i}.{j}"),
        }
    }
}

fn parse_sweep_param(s: &str) -> Option<SweepParam> {
    let index_pair = |rest: &str| -> Option<(usize, usize)> {
        let (i, j) = rest.split_once('.')?;
        Some((i.parse().ok()?, j.parse().ok()?))
    };
    match s {
        "n" => Some(SweepParam::N),
        "sigma2" => Some(SweepParam::Sigma2),
        "sigma_n2" => Some(SweepParam::SigmaN2),
        "mu" => Some(SweepParam::Mu),
        _ => {
            if let Some(rest) = s.strip_prefix("sigma.") {
                index_pair(rest).map(|(i, j)| SweepParam::Sigma(i, j))
            } else if let Some(rest) = s.strip_prefix("a.") {
                index_pair(rest).map(|(i, j)| SweepParam::A(i, j))
            } else {
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: ProblemKind,
    pub template: ProblemTemplate,
    pub families: Vec<BoundFamily>,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub mc: Option<McSettings>,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub loss_variance_proxy: Option<f64>,
}

/// One evaluated problem instance.
#[derive(Debug, Clone)]
pub enum PointProblem {
    Scalar(ScalarLocationProblem),
    Vector(VectorLocationProblem),
}

impl PointProblem {
    pub fn true_gen(&self) -> f64 {
        match self {
            PointProblem::Scalar(p) => true_gen_error(p),
            PointProblem::Vector(p) => true_gen_error_vec(p),
        }
    }
}

/// Parses `key=value`; the value is read as a TOML value, or as a bare
/// string when it is not one.
pub fn parse_override(s: &str) -> std::result::Result<(String, Value), Diagnostic> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Diagnostic::new(s, "override must have the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Diagnostic::new(s, "override key is empty"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn apply_override(doc: &mut Table, key: &str, value: Value) -> std::result::Result<(), Diagnostic> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Diagnostic::new(key, format!("`{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the default seed from [`SEED_ENV`].
pub fn env_seed() -> std::result::Result<Option<u64>, Diagnostic> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Diagnostic::new(SEED_ENV, "must be an unsigned 64-bit integer")),
        Err(_) => Ok(None),
    }
}

/// Collects diagnostics while reading a TOML table.
struct Reader {
    diags: Vec<Diagnostic>,
}

impl Reader {
    fn fail(&mut self, field: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(field, msg));
    }

    fn number(&mut self, v: &Value, field: &str) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.fail(field, "must be a number");
                None
            }
        }
    }

    fn opt_number(&mut self, t: &Table, key: &str, field: &str) -> Option<f64> {
        t.get(key).and_then(|v| self.number(v, field))
    }

    fn count(&mut self, v: &Value, field: &str) -> Option<usize> {
        match v {
            Value::Integer(i) if *i >= 1 => Some(*i as usize),
            _ => {
                self.fail(field, "must be an integer >= 1");
                None
            }
        }
    }

    fn numbers(&mut self, v: &Value, field: &str) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.fail(field, "must be a list of numbers");
                return None;
            }
        };
        let out: Vec<Option<f64>> = arr.iter().map(|x| self.number(x, field)).collect();
        out.into_iter().collect()
    }

    fn matrix(&mut self, v: &Value, field: &str) -> Option<DMatrix<f64>> {
        let rows = match v.as_array() {
            Some(r) if !r.is_empty() => r,
            _ => {
                self.fail(field, "must be a non-empty list of rows");
                return None;
            }
        };
        let parsed: Option<Vec<Vec<f64>>> = rows.iter().map(|r| self.numbers(r, field)).collect();
        let parsed = parsed?;
        let d = parsed.len();
        if parsed.iter().any(|r| r.len() != d) {
            self.fail(field, format!("must be square ({d} rows of {d} entries)"));
            return None;
        }
        Some(DMatrix::from_fn(d, d, |i, j| parsed[i][j]))
    }
}

fn kind_name(k: ProblemKind) -> &'static str {
    match k {
        ProblemKind::Scalar => "scalar",
        ProblemKind::Vector => "vector",
    }
}

const TOP_KEYS: [&str; 8] = ["kind", "families", "format", "output", "loss_variance_proxy", "problem", "sweep", "mc"];

/// Parses and validates a config document. `kind_hint` comes from the CLI
/// subcommand; `env_seed` is used when the config has no `mc.seed`.
pub fn parse_config(
    text: &str,
    overrides: &[String],
    kind_hint: Option<ProblemKind>,
    env_seed: Option<u64>,
) -> std::result::Result<SweepConfig, Vec<Diagnostic>> {
    let mut doc: Table = toml::from_str(text).map_err(|e| vec![Diagnostic::new("config", format!("TOML syntax: {e}"))])?;
    let mut r = Reader { diags: Vec::new() };
    for o in overrides {
        match parse_override(o).and_then(|(k, v)| apply_override(&mut doc, &k, v)) {
            Ok(()) => {}
            Err(d) => r.diags.push(d),
        }
    }
    for key in doc.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            r.fail(key, "unknown key");
        }
    }

    let declared = match doc.get("kind").map(Value::as_str) {
        None => None,
        Some(Some("scalar")) => Some(ProblemKind::Scalar),
        Some(Some("vector")) => Some(ProblemKind::Vector),
        Some(_) => {
            r.fail("kind", "must be \"scalar\" or \"vector\"");
            None
        }
    };
    let kind = match (declared, kind_hint) {
        (Some(k), Some(h)) if k != h => {
            r.fail("kind", format!("config kind does not match the `{}` subcommand", kind_name(h)));
            h
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            if doc.get("kind").is_none() {
                r.fail("kind", "must be \"scalar\" or \"vector\"");
            }
            ProblemKind::Scalar
        }
    };

    let families = read_families(&mut r, &doc, kind);
    let format = match doc.get("format").map(|v| v.as_str()) {
        None | Some(Some("csv")) => OutputFormat::Csv,
        Some(Some("json")) => OutputFormat::Json,
        _ => {
            r.fail("format", "must be \"csv\" or \"json\"");
            OutputFormat::Csv
        }
    };
    let output = match doc.get("output") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            r.fail("output", "must be a path string");
            None
        }
    };
    let loss_variance_proxy = r.opt_number(&doc, "loss_variance_proxy", "loss_variance_proxy");
    if loss_variance_proxy.is_some_and(|p| !(p >= 0.0)) {
        r.fail("loss_variance_proxy", "must be >= 0");
    }

    let empty = Table::new();
    let problem = match doc.get("problem") {
        Some(Value::Table(t)) => t,
        Some(_) => {
            r.fail("problem", "must be a table");
            &empty
        }
        None => {
            r.fail("problem", "missing [problem] table");
            &empty
        }
    };
    let template = read_template(&mut r, problem, kind);
    let (param, values) = read_sweep(&mut r, &doc, &template);
    let mc = read_mc(&mut r, &doc, env_seed);

    if families.iter().any(|f| f.is_baseline()) && loss_variance_proxy.is_none() {
        r.fail("loss_variance_proxy", "required by XuRaginsky / BuEtAl");
    }

    let Some(template) = template else {
        return Err(r.diags);
    };
    if !r.diags.is_empty() {
        return Err(r.diags);
    }
    let config = SweepConfig {
        kind,
        template,
        families,
        param,
        values,
        mc,
        format,
        output,
        loss_variance_proxy,
    };
    let diags = check_points(&config);
    if diags.is_empty() {
        Ok(config)
    } else {
        Err(diags)
    }
}

fn read_families(r: &mut Reader, doc: &Table, kind: ProblemKind) -> Vec<BoundFamily> {
    let Some(list) = doc.get("families").and_then(Value::as_array) else {
        r.fail("families", "must be a list of bound family names");
        return Vec::new();
    };
    if list.is_empty() {
        r.fail("families", "must not be empty");
    }
    let mut out = Vec::new();
    for v in list {
        match v.as_str().map(str::parse::<BoundFamily>) {
            Some(Ok(f)) => {
                let ok = match kind {
                    ProblemKind::Scalar => f.is_scalar(),
                    ProblemKind::Vector => f.is_vector(),
                };
                if !ok {
                    r.fail("families", format!("{f} does not apply to {} problems", kind_name(kind)));
                } else if !out.contains(&f) {
                    out.push(f);
                }
            }
            _ => r.fail("families", format!("unknown bound family {v}")),
        }
    }
    out
}

fn read_weights(r: &mut Reader, problem: &Table) -> Option<Weights> {
    match problem.get("weights") {
        None => Some(Weights::Uniform),
        Some(Value::String(s)) if s == "uniform" => Some(Weights::Uniform),
        Some(Value::String(s)) if s == "extreme" => Some(Weights::Extreme),
        Some(v @ Value::Array(_)) => {
            let w = r.numbers(v, "problem.weights")?;
            if w.is_empty() || w.iter().any(|x| !(*x >= 0.0)) {
                r.fail("problem.weights", "weights must be non-empty and >= 0");
                return None;
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > RENORMALIZE_TOL {
                r.fail("problem.weights", format!("weights must sum to 1 (simplex constraint); sum is {sum}"));
                return None;
            }
            Some(Weights::Explicit(w.iter().map(|x| x / sum).collect()))
        }
        Some(_) => {
            r.fail("problem.weights", "must be \"uniform\", \"extreme\" or a list");
            None
        }
    }
}

fn read_template(r: &mut Reader, p: &Table, kind: ProblemKind) -> Option<ProblemTemplate> {
    let allowed: &[&str] = match kind {
        ProblemKind::Scalar => &["mu", "sigma2", "sigma_n2", "n", "weights"],
        ProblemKind::Vector => &["mu", "sigma", "a", "sigma_n2", "n", "weights"],
    };
    for key in p.keys() {
        if !allowed.contains(&key.as_str()) {
            r.fail(&format!("problem.{key}"), "unknown key for this problem kind");
        }
    }
    let weights = read_weights(r, p);
    let sigma_n2 = r.opt_number(p, "sigma_n2", "problem.sigma_n2").unwrap_or(0.0);
    if !(sigma_n2 >= 0.0 && sigma_n2.is_finite()) {
        r.fail("problem.sigma_n2", "must be finite and >= 0");
    }
    let n = match (p.get("n"), &weights) {
        (Some(v), _) => r.count(v, "problem.n"),
        (None, Some(Weights::Explicit(w))) => Some(w.len()),
        (None, _) => {
            r.fail("problem.n", "missing");
            None
        }
    };
    if let (Some(n), Some(Weights::Explicit(w))) = (n, &weights) {
        if w.len() != n {
            r.fail("problem.weights", format!("has {} entries but n = {n}", w.len()));
        }
    }
    match kind {
        ProblemKind::Scalar => {
            let mu = r.opt_number(p, "mu", "problem.mu").unwrap_or(0.0);
            let sigma2 = match p.get("sigma2") {
                Some(v) => r.number(v, "problem.sigma2"),
                None => {
                    r.fail("problem.sigma2", "missing");
                    None
                }
            };
            if sigma2.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                r.fail("problem.sigma2", "must be finite and > 0");
            }
            Some(ProblemTemplate::Scalar {
                mu,
                sigma2: sigma2?,
                sigma_n2,
                n: n?,
                weights: weights?,
            })
        }
        ProblemKind::Vector => {
            let sigma = match p.get("sigma") {
                Some(v) => r.matrix(v, "problem.sigma"),
                None => {
                    r.fail("problem.sigma", "missing");
                    None
                }
            }?;
            let d = sigma.nrows();
            let mu = match p.get("mu") {
                None => vec![0.0; d],
                Some(v) => r.numbers(v, "problem.mu")?,
            };
            if mu.len() != d {
                r.fail("problem.mu", format!("has {} entries but sigma is {d}×{d}", mu.len()));
            }
            let a = match p.get("a") {
                None => LossMatrix::Identity,
                Some(Value::String(s)) if s == "identity" => LossMatrix::Identity,
                Some(Value::String(s)) if s == "sigma_inverse" => LossMatrix::SigmaInverse,
                Some(v @ Value::Array(_)) => {
                    let m = r.matrix(v, "problem.a")?;
                    if m.nrows() != d {
                        r.fail("problem.a", format!("must be {d}×{d}"));
                    }
                    LossMatrix::Explicit(m)
                }
                Some(_) => {
                    r.fail("problem.a", "must be \"identity\", \"sigma_inverse\" or a matrix");
                    return None;
                }
            };
            Some(ProblemTemplate::Vector {
                mu,
                sigma,
                sigma_n2,
                n: n?,
                weights: weights?,
                a,
            })
        }
    }
}

fn read_sweep(r: &mut Reader, doc: &Table, template: &Option<ProblemTemplate>) -> (SweepParam, Vec<f64>) {
    let Some(sweep) = doc.get("sweep") else {
        // a single point at the template's n
        let n = match template {
            Some(ProblemTemplate::Scalar { n, .. }) | Some(ProblemTemplate::Vector { n, .. }) => *n as f64,
            None => 1.0,
        };
        return (SweepParam::N, vec![n]);
    };
    let Some(t) = sweep.as_table() else {
        r.fail("sweep", "must be a table");
        return (SweepParam::N, Vec::new());
    };
    for key in t.keys() {
        if !["param", "values", "start", "stop", "step"].contains(&key.as_str()) {
            r.fail(&format!("sweep.{key}"), "unknown key");
        }
    }
    let param = match t.get("param").and_then(Value::as_str).map(|s| (s, parse_sweep_param(s))) {
        Some((_, Some(p))) => p,
        Some((s, None)) => {
            r.fail("sweep.param", format!("unknown parameter `{s}`"));
            SweepParam::N
        }
        None => {
            r.fail("sweep.param", "missing");
            SweepParam::N
        }
    };
    let values = match (t.get("values"), t.get("start")) {
        (Some(v), None) => r.numbers(v, "sweep.values").unwrap_or_default(),
        (None, Some(_)) => {
            let start = r.opt_number(t, "start", "sweep.start");
            let stop = r.opt_number(t, "stop", "sweep.stop");
            let step = r.opt_number(t, "step", "sweep.step").unwrap_or(1.0);
            match (start, stop) {
                (Some(a), Some(b)) if step > 0.0 && b >= a => {
                    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
                    (0..count).map(|k| a + step * k as f64).collect()
                }
                _ => {
                    r.fail("sweep", "range needs start <= stop and step > 0");
                    Vec::new()
                }
            }
        }
        _ => {
            r.fail("sweep.values", "give either `values` or `start`/`stop`/`step`");
            Vec::new()
        }
    };
    if values.is_empty() {
        r.fail("sweep.values", "must not be empty");
    }
    let wrong_kind = matches!(
        (template, param),
        (Some(ProblemTemplate::Scalar { .. }), SweepParam::Sigma(..) | SweepParam::A(..))
            | (Some(ProblemTemplate::Vector { .. }), SweepParam::Sigma2 | SweepParam::Mu)
    );
    if wrong_kind {
        r.fail("sweep.param", format!("`{param}` does not apply to this problem kind"));
    }
    if param == SweepParam::N {
        if values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            r.fail("sweep.values", "n must be an integer >= 1");
        }
        if let Some(ProblemTemplate::Scalar { weights: Weights::Explicit(_), .. } | ProblemTemplate::Vector { weights: Weights::Explicit(_), .. }) = template {
            r.fail("sweep.param", "cannot sweep n with an explicit weight list");
        }
    }
    if let (Some(ProblemTemplate::Vector { sigma, .. }), SweepParam::Sigma(i, j) | SweepParam::A(i, j)) = (template, param) {
        if i >= sigma.nrows() || j >= sigma.nrows() {
            r.fail("sweep.param", format!("index ({i}, {j}) out of range for d = {}", sigma.nrows()));
        }
    }
    if let (Some(ProblemTemplate::Vector { a, .. }), SweepParam::A(..)) = (template, param) {
        if !matches!(a, LossMatrix::Explicit(_)) && *a != LossMatrix::Identity {
            r.fail("sweep.param", "a.i.j needs an explicit or identity loss matrix");
        }
    }
    (param, values)
}

fn read_mc(r: &mut Reader, doc: &Table, env_seed: Option<u64>) -> Option<McSettings> {
    let t = match doc.get("mc")? {
        Value::Table(t) => t,
        _ => {
            r.fail("mc", "must be a table");
            return None;
        }
    };
    for key in t.keys() {
        if key != "samples" && key != "seed" {
            r.fail(&format!("mc.{key}"), "unknown key");
        }
    }
    let samples = match t.get("samples") {
        Some(v) => r.count(v, "mc.samples")?,
        None => 100_000,
    };
    if samples < crate::mc::MIN_SAMPLES_GEN {
        r.fail("mc.samples", format!("must be >= {}", crate::mc::MIN_SAMPLES_GEN));
    }
    let seed = match t.get("seed") {
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => {
            r.fail("mc.seed", "must be a non-negative integer");
            0
        }
        None => env_seed.unwrap_or(0),
    };
    Some(McSettings { samples, seed })
}

fn set_symmetric(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] = v;
    m[(j, i)] = v;
}

impl SweepConfig {
    /// The problem at one sweep value.
    pub fn problem_at(&self, value: f64) -> Result<PointProblem> {
        match &self.template {
            ProblemTemplate::Scalar {
                mu,
                sigma2,
                sigma_n2,
                n,
                weights,
            } => {
                let (mut mu, mut sigma2, mut sigma_n2, mut n) = (*mu, *sigma2, *sigma_n2, *n);
                match self.param {
                    SweepParam::N => n = value as usize,
                    SweepParam::Sigma2 => sigma2 = value,
                    SweepParam::SigmaN2 => sigma_n2 = value,
                    SweepParam::Mu => mu = value,
                    _ => return Err(Error::invalid("sweep.param", "not a scalar parameter")),
                }
                ScalarLocationProblem::new(mu, sigma2, weights.resolve(n), sigma_n2).map(PointProblem::Scalar)
            }
            ProblemTemplate::Vector {
                mu,
                sigma,
                sigma_n2,
                n,
                weights,
                a,
            } => {
                let (mut sigma, mut sigma_n2, mut n) = (sigma.clone(), *sigma_n2, *n);
                let mut mu = mu.clone();
                let d = sigma.nrows();
                let mut a = match a {
                    LossMatrix::Explicit(m) => Some(m.clone()),
                    LossMatrix::Identity => Some(DMatrix::identity(d, d)),
                    LossMatrix::SigmaInverse => None,
                };
                match self.param {
                    SweepParam::N => n = value as usize,
                    SweepParam::SigmaN2 => sigma_n2 = value,
                    SweepParam::Sigma(i, j) => set_symmetric(&mut sigma, i, j, value),
                    SweepParam::A(i, j) => {
                        if let Some(a) = a.as_mut() {
                            set_symmetric(a, i, j, value)
                        }
                    }
                    SweepParam::Mu => mu.iter_mut().for_each(|m| *m = value),
                    SweepParam::Sigma2 => return Err(Error::invalid("sweep.param", "not a vector parameter")),
                }
                let a = match a {
                    Some(a) => a,
                    None => sigma
                        .clone()
                        .cholesky()
                        .ok_or_else(|| Error::invalid("problem.sigma", "must be symmetric positive definite"))?
                        .inverse(),
                };
                VectorLocationProblem::new(DVector::from_vec(mu), sigma, weights.resolve(n), sigma_n2, a).map(PointProblem::Vector)
            }
        }
    }

    fn weights_and_n(&self) -> (&Weights, usize) {
        match &self.template {
            ProblemTemplate::Scalar { weights, n, .. } | ProblemTemplate::Vector { weights, n, .. } => (weights, *n),
        }
    }
}

/// Builds every sweep point and checks family requirements against it.
fn check_points(config: &SweepConfig) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let (weights, base_n) = config.weights_and_n();
    for &value in &config.values {
        let point = match config.problem_at(value) {
            Ok(p) => p,
            Err(Error::InvalidInput { field, constraint }) => {
                diags.push(Diagnostic::new(
                    format!("problem.{field} ({} = {value})", config.param),
                    constraint,
                ));
                continue;
            }
            Err(e) => {
                diags.push(Diagnostic::new(format!("{} = {value}", config.param), e.to_string()));
                continue;
            }
        };
        let n = if config.param == SweepParam::N { value as usize } else { base_n };
        for &f in &config.families {
            if f.requires_uniform() && !weights.is_uniform(n) {
                diags.push(Diagnostic::new("families", format!("{f}: family requires uniform weights")));
            }
            if matches!(f, BoundFamily::Cor3Second | BoundFamily::EqMIbSecond) {
                if let PointProblem::Scalar(p) = &point {
                    if p.sigma_n2() != 0.0 {
                        diags.push(Diagnostic::new("families", format!("{f}: family requires sigma_n2 = 0")));
                    }
                }
            }
        }
    }
    diags.dedup();
    diags
}

fn evaluate(point: &PointProblem, family: BoundFamily, proxy: Option<f64>) -> Result<BoundResult> {
    match (point, family) {
        (PointProblem::Scalar(p), f) => evaluate_family(p, f, proxy),
        (PointProblem::Vector(p), BoundFamily::VecDirect) => bound_direct_vec(p),
        (PointProblem::Vector(p), BoundFamily::VecDecomposed) => bound_decomposed_vec(p),
        (PointProblem::Vector(p), BoundFamily::TrueGen) => Ok(BoundResult::new(BoundFamily::TrueGen, true_gen_error_vec(p), None)),
        (PointProblem::Vector(_), f) => Err(Error::Unsupported(format!("{f} applies to scalar problems only"))),
    }
}

/// Evaluates every sweep point (in parallel) and returns the rows in sweep
/// order, one per (point, family). The MC seed for point `k` is
/// `seed + k` (wrapping).
pub fn run_sweep(config: &SweepConfig) -> Result<Report> {
    let per_point: Vec<Vec<ReportRow>> = config
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &value)| {
            let point = config.problem_at(value)?;
            let truth = point.true_gen();
            let mc = match (&config.mc, &point) {
                (None, _) => None,
                (Some(m), PointProblem::Scalar(p)) => Some(mc_gen_error_scalar(p, m.samples, m.seed.wrapping_add(k as u64))?),
                (Some(m), PointProblem::Vector(p)) => Some(mc_gen_error_vec(p, m.samples, m.seed.wrapping_add(k as u64))?),
            };
            config
                .families
                .iter()
                .map(|&f| {
                    let b = evaluate(&point, f, config.loss_variance_proxy)?;
                    Ok(ReportRow {
                        param_value: value,
                        family: f,
                        value: b.value,
                        true_gen: truth,
                        ratio: b.value / truth,
                        mc_mean: mc.as_ref().map(|e| e.mean),
                        mc_se: mc.as_ref().map(|e| e.std_error),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Report {
        param: config.param.to_string(),
        rows: per_point.into_iter().flatten().collect(),
    })
}

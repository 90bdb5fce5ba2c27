//! Configuration-driven driver: one [`RunConfig`] in, JSON and CSV artifacts
//! out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::counterexample::{
    build_example, certify, epsilon_admissible, lambda_schedule, ratio_log2, ExampleConfig,
};
use crate::covering::{count_vs_bound, greedy_cover, probe_grid, verify_cover, CoverConfig};
use crate::domain::{build_domain, holder_check, spike_window_scan, DomainSpec};
use crate::error::{Error, Result};
use crate::exponents::{beta_below_one_threshold, compute_exponents, verify_exponent_identities};
use crate::norms::{norm_report, PotentialField};
use crate::quadrature::QuadRes;
use crate::spectral::{
    assemble, count_below, estimate_poincare_constant, estimate_ps_constant, triangulate, Bc,
    MeshOptions, PoincareTemplate,
};
use crate::weyl::{bracketing_check, clr_bound_check, scan_csv, weyl_scan};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Worker-count variable. Runs are sequential and do not depend on it.
pub const WORKERS_ENV: &str = "ROUGH_WEYL_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Exponents,
    BuildDomain,
    Norms,
    Cover,
    Count,
    WeylScan,
    Bracketing,
    ClrCheck,
    CertifyExample,
    PoincareScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exponents => "exponents",
            Self::BuildDomain => "build-domain",
            Self::Norms => "norms",
            Self::Cover => "cover",
            Self::Count => "count",
            Self::WeylScan => "weyl-scan",
            Self::Bracketing => "bracketing",
            Self::ClrCheck => "clr-check",
            Self::CertifyExample => "certify-example",
            Self::PoincareScan => "poincare-scan",
        }
    }
}

/// Every knob of every command. Knobs a command does not use are ignored;
/// `null` means the command's own default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default = "zero_potential")]
    pub potential: PotentialField,

    #[serde(default = "two")]
    pub d: u32,
    /// Required by `exponents`; `certify-example` defaults to 0.6.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "one")]
    pub c: f64,

    /// Norm exponent; defaults to `ptilde` of the domain.
    #[serde(default)]
    pub p: Option<f64>,
    /// Seminorm weight; defaults to `beta` of the domain.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub eta: f64,

    #[serde(default = "quarter")]
    pub delta0: f64,
    #[serde(default)]
    pub cover: CoverConfig,

    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_mesh_h")]
    pub mesh_h: f64,
    #[serde(default = "one")]
    pub grading: f64,
    #[serde(default = "neumann")]
    pub bc: Bc,
    #[serde(default)]
    pub export_mesh: bool,

    #[serde(default = "two")]
    pub m_level: u32,

    #[serde(default = "ten")]
    pub m: u32,
    #[serde(default = "one_u32")]
    pub n: u32,
    /// Defaults to `max(n, 2)`.
    #[serde(default)]
    pub n_max: Option<u32>,
    /// Defaults to the admissible-range default.
    #[serde(default)]
    pub epsilon: Option<f64>,

    #[serde(default = "hat")]
    pub template: PoincareTemplate,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_rel_h")]
    pub rel_h: f64,
    /// Strip counts `M` for the Poincare-Sobolev scan on `(0, 1/M) x (0, 1)`.
    #[serde(default)]
    pub ps_strips: Vec<u32>,
    #[serde(default = "default_ps_h")]
    pub ps_h: f64,
    #[serde(default = "default_ps_iter")]
    pub ps_max_iter: usize,

    #[serde(default = "default_pairs")]
    pub holder_pairs: usize,
    #[serde(default)]
    pub quad: QuadRes,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn zero_potential() -> PotentialField {
    PotentialField::Zero
}
fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn two() -> u32 {
    2
}
fn ten() -> u32 {
    10
}
fn quarter() -> f64 {
    0.25
}
fn neumann() -> Bc {
    Bc::Neumann
}
fn hat() -> PoincareTemplate {
    PoincareTemplate::Hat
}
fn default_lambdas() -> Vec<f64> {
    vec![250.0, 500.0, 1000.0, 2000.0]
}
fn default_mesh_h() -> f64 {
    1.0 / 64.0
}
fn default_deltas() -> Vec<f64> {
    vec![0.25, 0.125, 0.0625, 0.03125]
}
fn default_rel_h() -> f64 {
    1.0 / 16.0
}
fn default_ps_h() -> f64 {
    1.0 / 32.0
}
fn default_ps_iter() -> usize {
    500
}
fn default_pairs() -> usize {
    10_000
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parses a JSON value; errors carry the path of the offending field.
    pub fn from_value(v: Value) -> Result<Self> {
        serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.inner()))
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(v)
    }

    /// Canonical JSON of the resolved config, defaults included.
    pub fn canonical(&self) -> String {
        // Value maps are sorted, so this is stable
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    fn stem(&self) -> String {
        format!("{}-{}", self.command.name(), self.hash())
    }

    fn domain(&self) -> Result<crate::domain::HolderSubgraphDomain> {
        let spec = self.domain.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "at `domain`: required by `{}`",
                self.command.name()
            ))
        })?;
        build_domain(spec)
    }
}

/// Reads the worker-count variable; unset means 1.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "{WORKERS_ENV}: expected a positive integer, got `{s}`"
            ))),
        },
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: Value,
    /// `(suffix, contents)`; the empty suffix is the primary CSV.
    pub csv: Vec<(String, String)>,
    /// Set when a module reported a numerical failure in its result.
    pub flag: Option<String>,
}

impl Outcome {
    fn json(result: Value) -> Self {
        Self {
            result,
            csv: Vec::new(),
            flag: None,
        }
    }

    fn with_csv(mut self, suffix: &str, contents: String) -> Self {
        self.csv.push((suffix.to_owned(), contents));
        self
    }

    fn flag_if(mut self, cond: bool, msg: impl Into<String>) -> Self {
        if cond {
            self.flag = Some(msg.into());
        }
        self
    }
}

/// Exit status and written files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatus {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// The JSON artifact contents, or the config error.
    pub report: Value,
}

/// Exit code of an error: configuration and precondition errors give 2,
/// numerical failures 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::Config(_)
        | Error::Io(_)
        | Error::ChartMiss { .. }
        | Error::Resolution { .. }
        | Error::SupportTooClose { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn table_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Runs the command without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Exponents => {
            let gamma = cfg
                .gamma
                .ok_or_else(|| Error::Config("at `gamma`: required by `exponents`".into()))?;
            let es = compute_exponents(cfg.d, gamma, cfg.c)?;
            let id = verify_exponent_identities(&es);
            Ok(Outcome::json(json!({
                "exponents": es,
                "identities": id,
                "max_residual": id.max_residual(),
                "beta_below_one_threshold": beta_below_one_threshold(cfg.d),
            })))
        }
        Command::BuildDomain => {
            let dom = cfg.domain()?;
            let mut spikes = Vec::new();
            if let Some(p) = dom.fractal {
                for n in 0..=p.n_max {
                    spikes.push(spike_window_scan(&p, n)?);
                }
            }
            let ratio = holder_check(&dom, cfg.holder_pairs, cfg.rng_seed);
            let (x0, x1) = dom.window;
            Ok(Outcome::json(json!({
                "area": dom.area(),
                "h_omega": dom.h_omega,
                "window": [x0, x1],
                "breakpoints": dom.profile.xs.len(),
                "holder_ratio": ratio,
                "spike_scans": spikes,
            }))
            .with_csv("", dom.breakpoints_csv()))
        }
        Command::Norms => {
            let dom = cfg.domain()?;
            let es = compute_exponents(2, dom.gamma, dom.c)?;
            let p = cfg.p.unwrap_or(es.ptilde);
            let beta = cfg.beta.unwrap_or(es.beta);
            let rep = norm_report(&cfg.potential, &dom, &es, p, beta, cfg.eta, &cfg.quad)?;
            Ok(Outcome::json(
                json!({ "p": p, "beta": beta, "report": rep }),
            ))
        }
        Command::Cover => {
            let dom = cfg.domain()?;
            let es = compute_exponents(2, dom.gamma, dom.c)?;
            let cf = greedy_cover(&dom, &cfg.potential, cfg.delta0, &es, &cfg.cover)?;
            let probe = probe_grid(&dom, cfg.delta0, &es, cfg.cover.probe_refine)?;
            let rep = verify_cover(&cf, &dom, &probe);
            let bad = !rep.pairwise_disjoint || rep.coverage_fraction < 1.0;
            Ok(Outcome::json(json!({
                "families": cf,
                "report": rep,
                "count_vs_bound": count_vs_bound(&cf, 2),
            }))
            .flag_if(bad, "cover not disjoint or incomplete"))
        }
        Command::Count => {
            let dom = cfg.domain()?;
            let opts = MeshOptions {
                grading: cfg.grading,
                ..MeshOptions::new(cfg.mesh_h)
            };
            let mesh = triangulate(&dom, &opts)?;
            let op = assemble(&mesh, &cfg.potential, cfg.lambda, cfg.bc)?;
            let c = count_below(&op, cfg.sigma);
            let mut out = Outcome::json(json!({
                "count": c.count,
                "inertia": c.inertia,
                "sigma": c.sigma,
                "perturbed": c.perturbed,
                "mesh": mesh.stats(),
            }));
            if cfg.export_mesh {
                out = out
                    .with_csv("-vertices", mesh.vertices_csv())
                    .with_csv("-triangles", mesh.triangles_csv());
            }
            Ok(out)
        }
        Command::WeylScan => {
            let dom = cfg.domain()?;
            let rows = weyl_scan(
                &dom,
                &cfg.potential,
                &cfg.lambdas,
                cfg.mesh_h,
                cfg.bc,
                &cfg.quad,
            )?;
            Ok(Outcome::json(json!({ "rows": rows })).with_csv("", scan_csv(&rows)))
        }
        Command::Bracketing => {
            let dom = cfg.domain()?;
            let rep = bracketing_check(
                &dom,
                &cfg.potential,
                cfg.m_level,
                cfg.lambda,
                cfg.mesh_h,
                cfg.sigma,
            )?;
            let csv = table_csv(std::slice::from_ref(&rep))?;
            Ok(Outcome::json(to_value(&rep))
                .with_csv("", csv)
                .flag_if(!rep.holds, "bracketing inequalities violated"))
        }
        Command::ClrCheck => {
            let dom = cfg.domain()?;
            let es = compute_exponents(2, dom.gamma, dom.c)?;
            let table = clr_bound_check(
                &dom,
                &cfg.potential,
                &es,
                &cfg.lambdas,
                cfg.mesh_h,
                &cfg.quad,
            )?;
            Ok(Outcome::json(to_value(&table)))
        }
        Command::CertifyExample => certify_command(cfg),
        Command::PoincareScan => poincare_command(cfg),
    }
}

#[derive(Serialize)]
struct LevelRow {
    n: u32,
    lambda: f64,
    log2_lambda: f64,
    ratio: f64,
    log2_ratio: f64,
}

fn certify_command(cfg: &RunConfig) -> Result<Outcome> {
    let gamma = cfg.gamma.unwrap_or(0.6);
    let n_max = cfg.n_max.unwrap_or(cfg.n.max(2));
    let ec = match cfg.epsilon {
        Some(eps) => ExampleConfig::new(gamma, cfg.m, n_max, eps)?,
        None => ExampleConfig::with_default_epsilon(gamma, cfg.m, n_max)?,
    };
    let ex = build_example(&ec)?;
    let rep = certify(&ex, cfg.n, cfg.rng_seed)?;
    let range = epsilon_admissible(2, gamma)?;
    let mut rows = Vec::new();
    for n in 0..=cfg.n {
        let l = lambda_schedule(&ec, n);
        let r = ratio_log2(2, gamma, cfg.m, ec.epsilon, n);
        rows.push(LevelRow {
            n,
            lambda: l.value,
            log2_lambda: l.log2,
            ratio: r.exp2(),
            log2_ratio: r,
        });
    }
    let bad = !rep.all_negative;
    Ok(Outcome::json(json!({
        "example": ec,
        "certificate": rep,
        "epsilon_range": range,
    }))
    .with_csv("", table_csv(&rows)?)
    .flag_if(bad, "certificate void: a form is nonnegative"))
}

#[derive(Serialize)]
struct PsRow {
    strips: u32,
    width: f64,
    value: f64,
    converged: bool,
}

fn poincare_command(cfg: &RunConfig) -> Result<Outcome> {
    let fit = estimate_poincare_constant(cfg.template, &cfg.deltas, cfg.rel_h)?;
    let mut out = json!({ "poincare": fit });
    if !cfg.ps_strips.is_empty() {
        let gamma = cfg.gamma.unwrap_or(0.75);
        let es = compute_exponents(2, gamma, cfg.c)?;
        let qstar = es.qstar;
        let mut rows = Vec::with_capacity(cfg.ps_strips.len());
        for &m in &cfg.ps_strips {
            if m == 0 {
                return Err(Error::Config(
                    "at `ps_strips`: entries must be positive".into(),
                ));
            }
            let w = 1.0 / m as f64;
            let est = estimate_ps_constant(
                &[0.0, w],
                &[1.0, 1.0],
                qstar,
                cfg.ps_h.min(w / 2.0),
                cfg.ps_max_iter,
                cfg.rng_seed,
            )?;
            rows.push(PsRow {
                strips: m,
                width: w,
                value: est.value,
                converged: est.converged,
            });
        }
        out["ps"] = json!({ "qstar": qstar, "rows": rows });
        return Ok(Outcome::json(out).with_csv("", table_csv(&rows)?));
    }
    Ok(Outcome::json(out))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs the command and writes `<out>/<command>-<hash>.json` (plus CSVs).
/// Numerical failures still write the JSON artifact with the error or the
/// module report attached.
pub fn run(cfg: &RunConfig) -> RunStatus {
    if let Err(e) = workers_from_env() {
        return config_failure(&e);
    }
    let outcome = execute(cfg);
    let (exit, result, flag, csv) = match outcome {
        Ok(o) => {
            let exit = if o.flag.is_some() {
                EXIT_NUMERICAL
            } else {
                EXIT_OK
            };
            (exit, o.result, o.flag, o.csv)
        }
        Err(e) if exit_code(&e) == EXIT_CONFIG => return config_failure(&e),
        Err(e) => (EXIT_NUMERICAL, Value::Null, Some(e.to_string()), Vec::new()),
    };
    let report = json!({
        "command": cfg.command.name(),
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "seed": cfg.rng_seed,
        "version": VERSION,
        "result": result,
        "failure": flag,
    });
    let mut artifacts = Vec::new();
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        return config_failure(&Error::Io(format!("{}: {e}", cfg.out.display())));
    }
    let stem = cfg.stem();
    let json_path = cfg.out.join(format!("{stem}.json"));
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let mut files = vec![(json_path, body)];
    for (suffix, contents) in csv {
        files.push((cfg.out.join(format!("{stem}{suffix}.csv")), contents));
    }
    for (path, contents) in files {
        if let Err(e) = write(&path, &contents) {
            return config_failure(&e);
        }
        artifacts.push(path);
    }
    RunStatus {
        exit_code: exit,
        artifacts,
        report,
    }
}

fn config_failure(e: &Error) -> RunStatus {
    RunStatus {
        exit_code: exit_code(e),
        artifacts: Vec::new(),
        report: json!({ "error": e.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("rough-weyl-cli-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        p
    }

    #[test]
    fn empty_config_names_command() {
        let err = RunConfig::from_json("{}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`command`"), "{msg}");
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn nested_errors_carry_the_path() {
        let err =
            RunConfig::from_json(r#"{"command": "count", "domain": {"flat": {"height": "tall"}}}"#)
                .unwrap_err();
        assert!(err.to_string().contains("domain.flat.height"), "{err}");
        let err = RunConfig::from_json(r#"{"command": "count", "mesh": 1}"#).unwrap_err();
        assert!(err.to_string().contains("mesh"), "{err}");
    }

    #[test]
    fn exponents_run_writes_artifact() {
        let out = tmp("exp");
        let mut cfg =
            RunConfig::from_json(r#"{"command": "exponents", "gamma": 0.75, "c": 1}"#).unwrap();
        cfg.out = out.clone();
        let st = run(&cfg);
        assert_eq!(st.exit_code, EXIT_OK, "{}", st.report);
        let r = &st.report["result"];
        assert!((r["exponents"]["beta"].as_f64().unwrap() - 0.5617).abs() < 1e-4);
        assert!(r["max_residual"].as_f64().unwrap() < 1e-12);
        assert_eq!(st.report["version"], VERSION);
        let first = std::fs::read(&st.artifacts[0]).unwrap();
        let again = run(&cfg);
        assert_eq!(again.artifacts, st.artifacts);
        assert_eq!(std::fs::read(&again.artifacts[0]).unwrap(), first);
        let name = st.artifacts[0].file_name().unwrap().to_str().unwrap();
        assert!(name.starts_with("exponents-") && name.ends_with(".json"));
        let _ = std::fs::remove_dir_all(out);
    }

    #[test]
    fn missing_domain_is_a_config_error() {
        let cfg = RunConfig::from_json(r#"{"command": "count"}"#).unwrap();
        let st = run(&cfg);
        assert_eq!(st.exit_code, EXIT_CONFIG);
        assert!(st.artifacts.is_empty());
        let cfg = RunConfig::from_json(r#"{"command": "exponents", "gamma": 1.5}"#).unwrap();
        assert_eq!(run(&cfg).exit_code, EXIT_CONFIG);
    }

    #[test]
    fn count_on_square_with_mesh_export() {
        let out = tmp("count");
        let cfg = RunConfig::from_value(json!({
            "command": "count",
            "domain": {"flat": {"height": 1.0}},
            "potential": {"kind": "constant", "value": -1.0},
            "lambda": 50.0,
            "mesh_h": 1.0 / 32.0,
            "export_mesh": true,
            "out": out,
        }))
        .unwrap();
        let st = run(&cfg);
        assert_eq!(st.exit_code, EXIT_OK, "{}", st.report);
        // Neumann eigenvalues pi^2 |k|^2 below 50: (0,0),(1,0),(0,1),(1,1),(2,0),(0,2),(2,1),(1,2)
        assert_eq!(st.report["result"]["count"], 8);
        assert_eq!(st.artifacts.len(), 3);
        let _ = std::fs::remove_dir_all(out);
    }

    #[test]
    fn hash_depends_on_resolved_config() {
        let a = RunConfig::from_json(r#"{"command": "exponents", "gamma": 0.75}"#).unwrap();
        let b =
            RunConfig::from_json(r#"{"command": "exponents", "gamma": 0.75, "c": 1.0}"#).unwrap();
        let c = RunConfig::from_json(r#"{"command": "exponents", "gamma": 0.8}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}

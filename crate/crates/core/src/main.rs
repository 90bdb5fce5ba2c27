use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use rough_weyl::cli::{run, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "rough-weyl",
    version,
    about = "Bound-state counting on rough domains"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run whatever command the config file names.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    Exponents(Flags),
    BuildDomain(Flags),
    Norms(Flags),
    Cover(Flags),
    Count(Flags),
    WeylScan(Flags),
    Bracketing(Flags),
    ClrCheck(Flags),
    CertifyExample(Flags),
    PoincareScan(Flags),
}

/// Flat overrides on top of `--config`. `--domain` and `--potential` take
/// inline JSON or `@file`.
#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    mesh_h: Option<f64>,
    #[arg(long)]
    grading: Option<f64>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    export_mesh: bool,
    #[arg(long)]
    m_level: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    template: Option<String>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    rel_h: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    ps_strips: Option<Vec<u32>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_json(s: &str, what: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| format!("{what}: {e}"))
}

fn json_arg(s: &str, what: &str) -> Result<Value, String> {
    match s.strip_prefix('@') {
        Some(path) => parse_json(&read_file(&PathBuf::from(path))?, what),
        None => parse_json(s, what),
    }
}

fn load(path: Option<&PathBuf>) -> Result<Map<String, Value>, String> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    match parse_json(&read_file(path)?, "config")? {
        Value::Object(m) => Ok(m),
        _ => Err("config: top level must be an object".into()),
    }
}

fn merge(command: &str, f: Flags) -> Result<Value, String> {
    let mut m = load(f.config.as_ref())?;
    let mut set = |k: &str, v: Value| {
        m.insert(k.to_owned(), v);
    };
    set("command", command.into());
    if let Some(s) = &f.domain {
        set("domain", json_arg(s, "--domain")?);
    }
    if let Some(s) = &f.potential {
        set("potential", json_arg(s, "--potential")?);
    }
    macro_rules! flag {
        ($($name:ident),*) => {$(
            if let Some(v) = f.$name {
                set(stringify!($name), serde_json::json!(v));
            }
        )*};
    }
    flag!(d, gamma, c, p, beta, eta, delta0, lambda, lambdas, sigma, mesh_h, grading, bc);
    flag!(m_level, m, n, n_max, epsilon, template, deltas, rel_h, ps_strips, out);
    if let Some(seed) = f.seed {
        set("rng_seed", seed.into());
    }
    if f.export_mesh {
        set("export_mesh", true.into());
    }
    Ok(Value::Object(m))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let value = match cli.cmd {
        Cmd::Run { config } => load(Some(&config)).map(Value::Object),
        Cmd::Exponents(f) => merge("exponents", f),
        Cmd::BuildDomain(f) => merge("build-domain", f),
        Cmd::Norms(f) => merge("norms", f),
        Cmd::Cover(f) => merge("cover", f),
        Cmd::Count(f) => merge("count", f),
        Cmd::WeylScan(f) => merge("weyl-scan", f),
        Cmd::Bracketing(f) => merge("bracketing", f),
        Cmd::ClrCheck(f) => merge("clr-check", f),
        Cmd::CertifyExample(f) => merge("certify-example", f),
        Cmd::PoincareScan(f) => merge("poincare-scan", f),
    };
    let cfg = match value
        .map_err(|e| e.to_string())
        .and_then(|v| RunConfig::from_value(v).map_err(|e| e.to_string()))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let st = run(&cfg);
    println!(
        "{}",
        serde_json::to_string_pretty(&st.report).expect("report serializes")
    );
    for a in &st.artifacts {
        eprintln!("wrote {}", a.display());
    }
    ExitCode::from(st.exit_code as u8)
}

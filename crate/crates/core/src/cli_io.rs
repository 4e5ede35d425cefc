//! Configuration, outputs and the run ledger behind the `ergo` command line.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::claims;
use crate::dirichlet_discrete::{
    assemble, gap_trend, gn_suite, local_poincare_check, sharpness_report, spectral_gap, KernelKind,
    SharpnessFamily,
};
use crate::ergodicity_mc::{
    entropy_decay, fit_decay, l2_decay, tv_decay, McConfig, Metric, Observable, Process,
};
use crate::error::{ErgoError, Result};
use crate::generator::{
    default_drift_grid, frac_laplacian, frac_laplacian_truncated, timechanged_generator,
    verify_drift_brownian, verify_drift_lemma32, verify_drift_thm17, TestFunction,
};
use crate::par::{par_map, with_threads};
use crate::simulate::{sample_truncated_path, simulate_time_changed, solve_sde, time_change, Driver, Scheme, SimConfig};
use crate::special_functions::{cot_limit, drift_series_e, drift_series_e_reflected, normalizing_constant};
use crate::weights_rates::{
    beta_rate, classify_ergodicity, compute_rate_profile, weak_rate_alpha, PoincareRateFunctions, WeightDescription,
    WeightKind,
};
use crate::StableIndex;

pub const LEDGER_FILE: &str = "ledger.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config: Value,
    pub config_digest: String,
    pub master_seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRef>,
    pub verdicts: BTreeMap<String, String>,
    pub version: String,
}

pub fn version_string() -> String {
    let describe = option_env!("ERGO_GIT_DESCRIBE").unwrap_or("unknown");
    format!("{} ({describe})", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the compact JSON form; object keys are already sorted.
pub fn config_digest(config: &Value) -> String {
    sha256_hex(serde_json::to_string(config).expect("json value").as_bytes())
}

fn io_err(path: &Path, e: std::io::Error) -> ErgoError {
    ErgoError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn load_config_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| ErgoError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Typed view of a JSON config; errors carry the offending key path.
pub fn parse_config<T: DeserializeOwned>(value: &Value) -> Result<T> {
    serde_path_to_error::deserialize(value.clone()).map_err(|e| ErgoError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Recursively overlays `top` onto `base`; non-object values replace.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Sets `a.b.c` in a JSON object, creating intermediate objects.
pub fn set_dotted(config: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ErgoError::Config { path: key.into(), message: "empty key segment".into() });
    }
    let mut cur = config;
    for (i, p) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => return Err(ErgoError::Config { path: parts[..i].join("."), message: "not an object".into() }),
        };
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!()
}

/// Parses `key=value`; the value is read as JSON and falls back to a plain string.
pub fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| ErgoError::Config { path: raw.into(), message: "override must look like key=value".into() })?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

fn shorthand_numbers(spec: &str, what: &str) -> Result<(String, Vec<f64>)> {
    let mut it = spec.split(':');
    let kind = it.next().unwrap_or_default().to_string();
    let nums = it
        .map(|s| {
            s.parse::<f64>().map_err(|_| ErgoError::Config { path: what.into(), message: format!("bad number '{s}' in '{spec}'") })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((kind, nums))
}

/// `power:2`, `power_log:0.5` or `sde_sigma:1.5[:scale]`, as a weight description without `alpha`.
pub fn weight_shorthand(spec: &str) -> Result<Value> {
    let (kind, n) = shorthand_numbers(spec, "weight")?;
    let bad = || ErgoError::Config { path: "weight".into(), message: format!("cannot read weight '{spec}'") };
    match (kind.as_str(), n.as_slice()) {
        ("power" | "power_log", [g]) => Ok(json!({"kind": kind, "gamma": g})),
        ("sde_sigma", [g]) => Ok(json!({"kind": kind, "gamma": g, "scale": 1.0})),
        ("sde_sigma", [g, s]) => Ok(json!({"kind": kind, "gamma": g, "scale": s})),
        _ => Err(bad()),
    }
}

/// `cosine:1`, `bump:2`, `ramp:4`, `lyapunov_pow:0.3`, `lyapunov_neg:0.3` or `constant:1`.
pub fn function_shorthand(spec: &str) -> Result<Value> {
    let (kind, n) = shorthand_numbers(spec, "f")?;
    let key = match kind.as_str() {
        "cosine" => "xi",
        "bump" | "ramp" => "n",
        "lyapunov_pow" | "lyapunov_neg" => "theta",
        "constant" => "c",
        _ => return Err(ErgoError::Config { path: "f".into(), message: format!("unknown function '{spec}'") }),
    };
    match n.as_slice() {
        [v] => Ok(json!({"kind": kind, key: v})),
        _ => Err(ErgoError::Config { path: "f".into(), message: format!("'{spec}' needs exactly one parameter") }),
    }
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

/// Appends one JSON line under an exclusive lock.
pub fn append_ledger(path: &Path, record: &RunRecord) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
    f.lock().map_err(|e| io_err(path, e))?;
    let res = f.write_all(line.as_bytes()).and_then(|_| f.flush());
    let _ = f.unlock();
    res.map_err(|e| io_err(path, e))
}

/// Reads the ledger and checks each stored digest against its config.
pub fn read_ledger(path: &Path) -> Result<Vec<RunRecord>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(&line)
            .map_err(|e| ErgoError::Config { path: format!("{}:{}", path.display(), i + 1), message: e.to_string() })?;
        if config_digest(&rec.config) != rec.config_digest {
            return Err(ErgoError::Config {
                path: format!("{}:{}", path.display(), i + 1),
                message: "config digest does not match the stored config".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Checks that every listed output exists and still has its recorded digest.
pub fn verify_outputs(record: &RunRecord, base: &Path) -> Result<()> {
    for o in &record.outputs {
        let p = base.join(&o.path);
        let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
        if sha256_hex(&bytes) != o.sha256 {
            return Err(ErgoError::Io(std::io::Error::other(format!("{}: digest mismatch", p.display()))));
        }
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    let wrap = |e: csv::Error| ErgoError::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| ErgoError::Io(std::io::Error::other(e.to_string())))
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Special,
    Rates,
    Drift,
    Genop,
    Gap,
    Counterexample,
    Simulate,
    McErgodicity,
    Reproduce,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Special,
        Command::Rates,
        Command::Drift,
        Command::Genop,
        Command::Gap,
        Command::Counterexample,
        Command::Simulate,
        Command::McErgodicity,
        Command::Reproduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Special => "special",
            Command::Rates => "rates",
            Command::Drift => "drift",
            Command::Genop => "genop",
            Command::Gap => "gap",
            Command::Counterexample => "counterexample",
            Command::Simulate => "simulate",
            Command::McErgodicity => "mc-ergodicity",
            Command::Reproduce => "reproduce",
        }
    }

    /// Config key that `--seed` sets, if the command is random.
    pub fn seed_key(self) -> Option<&'static str> {
        match self {
            Command::Gap => Some("seed"),
            Command::Simulate => Some("sim.master_seed"),
            Command::McErgodicity => Some("mc.master_seed"),
            _ => None,
        }
    }

    pub fn defaults(self) -> Value {
        let w = json!({"kind": "power", "gamma": 2.0, "alpha": 1.5});
        match self {
            Command::Special => json!({"alpha": 1.5, "theta": 1e-3}),
            Command::Rates => json!({"weight": w}),
            Command::Drift => json!({"weight": w, "theta": 0.05}),
            Command::Genop => json!({"f": {"kind": "cosine", "xi": 1.0}, "x": [0.0]}),
            Command::Gap => json!({"weight": w}),
            Command::Counterexample => {
                json!({"weight": {"kind": "power", "gamma": 1.3, "alpha": 1.5}, "family": "weak_alpha"})
            }
            Command::Simulate => json!({
                "sim": {"driver": {"kind": "stable", "alpha": 1.5}, "dt": 0.01, "horizon": 10.0, "n_paths": 1000, "master_seed": 0}
            }),
            Command::McErgodicity => json!({
                "process": {"kind": "time_changed", "weight": w, "driver": {"kind": "stable", "alpha": 1.5}},
                "mc": {"n_paths": 20000, "master_seed": 0}
            }),
            Command::Reproduce => json!({"claims": []}),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = ErgoError;
    fn from_str(s: &str) -> Result<Command> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ErgoError::Config { path: "command".into(), message: format!("unknown command '{s}'") })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialConfig {
    pub alpha: StableIndex,
    pub theta: f64,
}

fn default_radii() -> Vec<f64> {
    (0..=50).map(|k| 10f64.powf(-1.0 + 0.1 * k as f64)).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub weight: WeightDescription,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub rate_functions: PoincareRateFunctions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftCondition {
    #[default]
    Auto,
    Lemma32,
    Thm17,
    Brownian,
}

fn default_per_decade() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub weight: WeightDescription,
    pub theta: f64,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    #[serde(default)]
    pub condition: DriftCondition,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenopConfig {
    pub f: TestFunction,
    pub x: Vec<f64>,
    #[serde(default)]
    pub alpha: Option<StableIndex>,
    #[serde(default)]
    pub weight: Option<WeightDescription>,
    #[serde(default)]
    pub truncated: bool,
}

fn default_radius() -> f64 {
    40.0
}
fn default_spacing() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub weight: WeightDescription,
    #[serde(default = "default_radius")]
    pub window_radius: f64,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default)]
    pub seed: u64,
    /// Random functions for the local Poincaré check; 0 skips it.
    #[serde(default)]
    pub local_poincare_trials: usize,
    /// Extra window radii for a gap trend.
    #[serde(default)]
    pub radii: Vec<f64>,
}

fn default_kernel() -> KernelKind {
    KernelKind::Full
}

fn default_n_values() -> Vec<f64> {
    vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub weight: WeightDescription,
    pub family: SharpnessFamily,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<f64>,
    #[serde(default)]
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    TimeChanged,
    Sde,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Absent means `a = 1`.
    #[serde(default)]
    pub weight: Option<WeightDescription>,
    #[serde(default)]
    pub model: Model,
    pub sim: SimConfig,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub per_path_csv: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessDescription {
    TimeChanged { weight: WeightDescription, driver: Driver },
    Sde { sigma: WeightDescription },
}

impl ProcessDescription {
    pub fn build(&self) -> Result<Process> {
        Ok(match self {
            ProcessDescription::TimeChanged { weight, driver } => Process::TimeChanged { w: weight.build()?, driver: *driver },
            ProcessDescription::Sde { sigma } => Process::Sde { sigma: sigma.build()? },
        })
    }
}

fn default_metric() -> Metric {
    Metric::L2Mu
}
fn default_observable() -> Observable {
    Observable::HalfLine
}
fn default_x0() -> Vec<f64> {
    vec![0.0]
}
fn default_t_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.1 * k as f64).collect()
}
fn default_fit_bootstrap() -> usize {
    200
}
fn default_fit_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McErgodicityConfig {
    pub process: ProcessDescription,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default = "default_observable")]
    pub observable: Observable,
    #[serde(default = "default_x0")]
    pub x0_set: Vec<f64>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    pub mc: McConfig,
    /// Fit the squared distance instead of the distance.
    #[serde(default)]
    pub fit_squared: bool,
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default = "default_fit_seed")]
    pub fit_seed: u64,
    #[serde(default = "default_fit_bootstrap")]
    pub fit_bootstrap: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    /// Claim ids; `all` runs the whole registry.
    pub claims: Vec<String>,
}

/// Files and verdicts produced by one command.
pub struct CommandOutput {
    pub summary: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub verdicts: BTreeMap<String, String>,
}

impl CommandOutput {
    fn new(summary: Value) -> Self {
        CommandOutput { summary, files: vec![], verdicts: BTreeMap::new() }
    }
    fn file(mut self, name: &str, bytes: Vec<u8>) -> Self {
        self.files.push((name.to_string(), bytes));
        self
    }
    fn verdict(mut self, k: &str, v: impl ToString) -> Self {
        self.verdicts.insert(k.to_string(), v.to_string());
        self
    }
}

pub struct RunContext {
    pub out_dir: PathBuf,
    /// 0 keeps the default pool.
    pub threads: usize,
}

pub struct RunResult {
    pub record: RunRecord,
    pub summary: Value,
}

/// Executes one command on a resolved config, writes its outputs and appends the ledger.
pub fn run(cmd: Command, config: Value, ctx: &RunContext) -> Result<RunResult> {
    let started = chrono::Utc::now().to_rfc3339();
    let master_seed = cmd.seed_key().and_then(|k| {
        k.split('.').try_fold(&config, |v, p| v.get(p)).and_then(Value::as_u64)
    });
    let out = with_threads(ctx.threads, || dispatch(cmd, &config))?;
    let mut outputs = vec![];
    for (name, bytes) in &out.files {
        write_atomic(&ctx.out_dir.join(name), bytes)?;
        outputs.push(OutputRef { path: name.clone(), sha256: sha256_hex(bytes) });
    }
    let record = RunRecord {
        command: cmd.name().to_string(),
        config_digest: config_digest(&config),
        config,
        master_seed,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        outputs,
        verdicts: out.verdicts,
        version: version_string(),
    };
    append_ledger(&ctx.out_dir.join(LEDGER_FILE), &record)?;
    Ok(RunResult { record, summary: out.summary })
}

pub fn dispatch(cmd: Command, config: &Value) -> Result<CommandOutput> {
    match cmd {
        Command::Special => special(parse_config(config)?),
        Command::Rates => rates(parse_config(config)?),
        Command::Drift => drift(parse_config(config)?),
        Command::Genop => genop(parse_config(config)?),
        Command::Gap => gap(parse_config(config)?),
        Command::Counterexample => counterexample(parse_config(config)?),
        Command::Simulate => simulate(parse_config(config)?),
        Command::McErgodicity => mc_ergodicity(parse_config(config)?),
        Command::Reproduce => reproduce(parse_config(config)?),
    }
}

fn special(c: SpecialConfig) -> Result<CommandOutput> {
    let e = drift_series_e(c.alpha, c.theta)?;
    let cot = cot_limit(c.alpha);
    let summary = json!({
        "alpha": c.alpha,
        "theta": c.theta,
        "normalizing_constant": normalizing_constant(c.alpha),
        "e": e,
        "e_reflected": drift_series_e_reflected(c.alpha, c.theta).ok(),
        "pi_cot": {"trig": cot.trig, "series": cot.series},
    });
    Ok(CommandOutput::new(summary.clone()).file("special.json", json_bytes(&summary)))
}

fn rates(c: RatesConfig) -> Result<CommandOutput> {
    let w = c.weight.build()?;
    let p = compute_rate_profile(&w, &c.radii)?;
    p.check_invariants()?;
    let class = classify_ergodicity(&w)?;
    let rows: Vec<Vec<String>> = (0..p.radii.len())
        .map(|i| {
            let r = p.radii[i];
            vec![
                num(r),
                num(p.phi[i]),
                num(p.phi0[i]),
                num(p.big_k[i]),
                num(p.small_k[i]),
                num(p.k0[i]),
                num(beta_rate(&w, &c.rate_functions, r).unwrap_or(f64::NAN)),
                num(weak_rate_alpha(&w, &c.rate_functions, r).unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    let csv = csv_bytes(&["r", "phi", "phi0", "K", "k", "K0", "beta", "alpha_weak"], &rows)?;
    let summary = json!({
        "weight": c.weight,
        "class": class,
        "closed_form": p.closed_form,
        "rate_functions": c.rate_functions,
        "radii": p.radii.len(),
    });
    Ok(CommandOutput::new(summary.clone())
        .file("rates.csv", csv)
        .file("rates.json", json_bytes(&summary))
        .verdict("class", serde_json::to_value(class).expect("enum").as_str().unwrap_or_default()))
}

fn drift(c: DriftConfig) -> Result<CommandOutput> {
    let w = c.weight.build()?;
    let grid = c.grid.clone().unwrap_or_else(|| default_drift_grid(c.per_decade));
    let cond = match c.condition {
        DriftCondition::Auto if matches!(w.kind, WeightKind::SdeSigma { .. }) => DriftCondition::Thm17,
        DriftCondition::Auto => DriftCondition::Lemma32,
        other => other,
    };
    let cert = match cond {
        DriftCondition::Thm17 => verify_drift_thm17(&w, c.theta, &grid)?,
        DriftCondition::Brownian => verify_drift_brownian(&w, c.theta, &grid)?,
        _ => verify_drift_lemma32(&w, c.theta, &grid)?,
    };
    let summary = json!({"weight": c.weight, "theta": c.theta, "certificate": cert});
    Ok(CommandOutput::new(json!({"verified": cert.verified, "r0": cert.r0, "outside_points": cert.outside_points}))
        .file("drift.json", json_bytes(&summary))
        .verdict("verified", cert.verified))
}

fn genop(c: GenopConfig) -> Result<CommandOutput> {
    c.f.validate()?;
    let w = c.weight.as_ref().map(|d| d.build()).transpose()?;
    let idx = match (&w, c.alpha) {
        (Some(w), Some(a)) if w.alpha != a => {
            return Err(ErgoError::Config { path: "alpha".into(), message: "alpha differs from the weight's alpha".into() })
        }
        (Some(w), _) => w.alpha,
        (None, Some(a)) => a,
        (None, None) => return Err(ErgoError::Config { path: "alpha".into(), message: "alpha or weight is required".into() }),
    };
    let rows = c
        .x
        .iter()
        .map(|&x| {
            let e = match (&w, c.truncated) {
                (Some(w), t) => timechanged_generator(&c.f, x, w, t)?,
                (None, false) => frac_laplacian(&c.f, x, idx)?,
                (None, true) => frac_laplacian_truncated(&c.f, x, idx)?,
            };
            Ok(json!({"x": x, "value": e.value, "error": e.error}))
        })
        .collect::<Result<Vec<Value>>>()?;
    let summary = json!({"f": c.f, "alpha": idx, "weight": c.weight, "truncated": c.truncated, "values": rows});
    Ok(CommandOutput::new(summary.clone()).file("genop.json", json_bytes(&summary)))
}

fn gap(c: GapConfig) -> Result<CommandOutput> {
    let w = c.weight.build()?;
    let form = assemble(&w, c.window_radius, c.grid_spacing, c.kernel)?;
    let g = spectral_gap(&form)?;
    let local = if c.local_poincare_trials > 0 { Some(local_poincare_check(&form, c.local_poincare_trials, c.seed)?) } else { None };
    let trend: Vec<Value> = if c.radii.is_empty() {
        vec![]
    } else {
        gap_trend(&w, &c.radii, c.grid_spacing, c.kernel)?
            .iter()
            .zip(&c.radii)
            .map(|(e, r)| json!({"window_radius": r, "lambda1": e.lambda1}))
            .collect()
    };
    let summary = json!({
        "weight": c.weight,
        "kernel": c.kernel,
        "lambda1": g.lambda1,
        "window_radius": g.window_radius,
        "grid_spacing": g.grid_spacing,
        "residual": g.residual,
        "mean_defect": g.mean_defect,
        "local_poincare": local,
        "trend": trend,
    });
    let rows: Vec<Vec<String>> = form.nodes.iter().zip(&g.eigvec).map(|(x, v)| vec![num(*x), num(*v)]).collect();
    let mut out = CommandOutput::new(summary.clone())
        .file("gap.json", json_bytes(&summary))
        .file("gap_eigvec.csv", csv_bytes(&["x", "v"], &rows)?);
    if let Some(l) = local {
        out = out.verdict("local_poincare", l.pass);
    }
    Ok(out)
}

fn counterexample(c: CounterexampleConfig) -> Result<CommandOutput> {
    let w = c.weight.build()?;
    let recs = gn_suite(&w, &c.n_values, c.window)?;
    let report = sharpness_report(&w, c.family, &c.n_values)?;
    let rows: Vec<Vec<String>> =
        recs.iter().map(|g| vec![num(g.n), num(g.energy), num(g.variance), num(g.rayleigh)]).collect();
    let summary = json!({"weight": c.weight, "report": report});
    Ok(CommandOutput::new(json!({"mode": report.mode, "bounded_away_from_zero": report.bounded_away_from_zero}))
        .file("counterexample.csv", csv_bytes(&["n", "energy", "variance", "rayleigh"], &rows)?)
        .file("counterexample.json", json_bytes(&summary))
        .verdict("bounded_away_from_zero", report.bounded_away_from_zero))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn simulate(c: SimulateConfig) -> Result<CommandOutput> {
    c.sim.validate()?;
    let sim = c.sim;
    let grid = c.t_grid.clone().unwrap_or_else(|| (1..=10).map(|k| sim.horizon * k as f64 / 10.0).collect());
    if grid.is_empty() || grid.windows(2).any(|p| p[1] <= p[0]) || grid[0] < 0.0 {
        return Err(ErgoError::Config { path: "t_grid".into(), message: "must be nonempty, nonnegative and increasing".into() });
    }
    let w = c.weight.as_ref().map(|d| d.build()).transpose()?;
    let paths: Vec<Result<Vec<f64>>> = par_map(&(0..sim.n_paths as u64).collect::<Vec<_>>(), |&i| -> Result<Vec<f64>> {
        match (c.model, &w) {
            (Model::Sde, Some(s)) => {
                let p = solve_sde(s, &SimConfig { horizon: grid[grid.len() - 1].max(sim.dt), ..sim }, i)?;
                let last = p.states.len() - 1;
                Ok(grid.iter().map(|&t| p.states[((t / sim.dt + 1e-9).floor() as usize).min(last)]).collect())
            }
            (Model::Sde, None) => Err(ErgoError::Config { path: "weight".into(), message: "the sde model needs an sde_sigma weight".into() }),
            (Model::TimeChanged, _) => {
                let a = |x: f64| w.as_ref().map_or(1.0, |w| w.a(x));
                if sim.scheme == Scheme::TruncatedCompoundPoisson {
                    let Driver::Stable { alpha } = sim.driver else {
                        return Err(ErgoError::Config { path: "sim.scheme".into(), message: "compound Poisson needs a stable driver".into() });
                    };
                    let target = grid[grid.len() - 1];
                    let mut horizon = sim.horizon.max(target);
                    for _ in 0..4 {
                        let path = sample_truncated_path(alpha, &SimConfig { horizon, ..sim }, Some(&a), i)?;
                        if path.clock.last().is_some_and(|&t| t >= target) {
                            return time_change(&path, &grid);
                        }
                        horizon *= 2.0;
                    }
                    Err(ErgoError::Resource(format!("clock of path {i} did not reach {target}")))
                } else {
                    simulate_time_changed(&a, &sim, i, &grid)
                }
            }
        }
    });
    let paths: Vec<Vec<f64>> = paths.into_iter().collect::<Result<_>>()?;
    let stats: Vec<Value> = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            col.sort_by(f64::total_cmp);
            let q: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&q| quantile(&col, q)).collect();
            json!({"t": t, "mean": mean, "std": var.sqrt(), "quantiles": q})
        })
        .collect();
    let summary = json!({
        "model": match c.model { Model::Sde => "sde", Model::TimeChanged => "time_changed" },
        "weight": c.weight,
        "sim": sim,
        "quantile_levels": [0.05, 0.25, 0.5, 0.75, 0.95],
        "marginals": stats,
    });
    let mut out = CommandOutput::new(summary.clone()).file("simulate.json", json_bytes(&summary));
    if c.per_path_csv {
        let rows: Vec<Vec<String>> = paths
            .iter()
            .enumerate()
            .flat_map(|(i, p)| grid.iter().zip(p).map(move |(t, x)| vec![i.to_string(), num(*t), num(*x)]))
            .collect();
        out = out.file("paths.csv", csv_bytes(&["path", "t", "x"], &rows)?);
    }
    Ok(out)
}

fn mc_ergodicity(c: McErgodicityConfig) -> Result<CommandOutput> {
    let process = c.process.build()?;
    let curve = match c.metric {
        Metric::L2Mu => l2_decay(&process, &c.observable, &c.mc, &c.t_grid)?,
        Metric::Entropy => entropy_decay(&process, &c.observable, &c.mc, &c.t_grid)?,
        Metric::TvHistogram => tv_decay(&process, &c.mc, &c.x0_set, &c.t_grid)?,
    };
    let fitted = if c.fit_squared { curve.squared() } else { curve.clone() };
    let fit = fit_decay(&fitted, c.burn_in, c.fit_seed, c.fit_bootstrap);
    let rows: Vec<Vec<String>> = (0..curve.t_grid.len())
        .map(|k| vec![num(curve.t_grid[k]), num(curve.values[k]), num(curve.std_errors[k])])
        .collect();
    let (fit_json, law) = match &fit {
        Ok(f) => (json!(f), serde_json::to_value(f.law).expect("enum").as_str().unwrap_or_default().to_string()),
        Err(e) => (json!({"error": e.to_string()}), "inconclusive".to_string()),
    };
    let summary = json!({
        "metric": c.metric,
        "ensemble_size": curve.ensemble_size,
        "seed": curve.seed,
        "warnings": curve.warnings,
        "fit_squared": c.fit_squared,
        "fit": fit_json,
    });
    Ok(CommandOutput::new(summary.clone())
        .file("curve.csv", csv_bytes(&["t", "value", "std_error"], &rows)?)
        .file("fit.json", json_bytes(&summary))
        .verdict("law", law))
}

fn reproduce(c: ReproduceConfig) -> Result<CommandOutput> {
    if c.claims.is_empty() {
        return Err(ErgoError::Config { path: "claims".into(), message: "no claim ids given".into() });
    }
    let list: Vec<claims::Claim> = if c.claims.iter().any(|s| s == "all") {
        claims::registry()
    } else {
        c.claims.iter().map(|id| claims::find(id)).collect::<Result<_>>()?
    };
    let outcomes: Vec<claims::ClaimOutcome> = list.iter().map(|c| c.run()).collect();
    let mut out = CommandOutput::new(json!({"outcomes": outcomes}));
    for o in &outcomes {
        out = out.verdict(&o.id, if o.pass { "PASS" } else { "FAIL" });
    }
    Ok(out.file("reproduce.json", json_bytes(&json!({"outcomes": outcomes}))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_overrides_and_merge() {
        let mut v = json!({"a": {"b": 1}});
        set_dotted(&mut v, "a.c.d", json!(2)).unwrap();
        assert_eq!(v, json!({"a": {"b": 1, "c": {"d": 2}}}));
        assert!(set_dotted(&mut v, "a.b.x", json!(1)).is_err());
        merge(&mut v, json!({"a": {"b": 5}, "e": [1]}));
        assert_eq!(v["a"]["b"], 5);
        assert_eq!(parse_override("x.y=1.5").unwrap(), ("x.y".into(), json!(1.5)));
        assert_eq!(parse_override("k=full").unwrap().1, json!("full"));
    }

    #[test]
    fn config_errors_carry_paths() {
        let v = json!({"weight": {"kind": "power", "gamma": 2, "alpha": 1.5, "bogus": 1}});
        match parse_config::<RatesConfig>(&v) {
            Err(ErgoError::Config { path, .. }) => assert_eq!(path, "weight"),
            other => panic!("{other:?}"),
        }
        let v = json!({"alpha": 1.5, "theta": 0.1, "extra": true});
        assert!(matches!(parse_config::<SpecialConfig>(&v), Err(ErgoError::Config { .. })));
        let v = json!({"alpha": 2.5, "theta": 0.1});
        assert!(matches!(parse_config::<SpecialConfig>(&v), Err(ErgoError::Config { path, .. }) if path == "alpha"));
    }

    #[test]
    fn shorthands() {
        assert_eq!(weight_shorthand("power:2").unwrap(), json!({"kind": "power", "gamma": 2.0}));
        assert_eq!(weight_shorthand("sde_sigma:1.5:2").unwrap()["scale"], 2.0);
        assert!(weight_shorthand("power").is_err());
        assert!(weight_shorthand("cubic:1").is_err());
        assert_eq!(function_shorthand("bump:2").unwrap(), json!({"kind": "bump", "n": 2.0}));
    }

    #[test]
    fn digest_is_key_order_free() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": {"y": 2, "x": 3}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": {"x": 3, "y": 2}, "b": 1}"#).unwrap();
        assert_eq!(config_digest(&a), config_digest(&b));
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn special_limit() {
        let out = dispatch(Command::Special, &json!({"alpha": 1.5, "theta": 1e-3})).unwrap();
        let e = out.summary["e"]["value"].as_f64().unwrap();
        assert!((e + std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn rates_phi_column() {
        let cfg = json!({"weight": {"kind": "power", "gamma": 2.0, "alpha": 1.5}, "radii": [0.5, 1.0, 4.0]});
        let out = dispatch(Command::Rates, &cfg).unwrap();
        let (_, bytes) = out.files.iter().find(|(n, _)| n == "rates.csv").unwrap();
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let rows: Vec<Vec<f64>> =
            rdr.records().map(|r| r.unwrap().iter().take(2).map(|s| s.parse().unwrap()).collect()).collect();
        let c = rows[0][1] / 1.5f64.sqrt();
        for r in rows {
            assert!((r[1] - c * (1.0 + r[0]).sqrt()).abs() < 1e-8 * r[1]);
        }
    }
}

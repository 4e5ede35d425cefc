use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use stable_ergo::cli_io::{
    function_shorthand, load_config_file, merge, parse_override, run, set_dotted, weight_shorthand, Command, RunContext,
};
use stable_ergo::error::ErrorClass;
use stable_ergo::{claims, Result};

#[derive(Parser)]
#[command(name = "ergo", version, about = "Ergodicity laboratory for time-changed symmetric stable processes")]
struct Cli {
    /// Master seed for random commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, global = true, env = "ERGO_THREADS")]
    threads: Option<usize>,
    /// JSON config merged over the command defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and the run ledger.
    #[arg(long, global = true, default_value = "ergo-out")]
    out_dir: PathBuf,
    /// Dotted override, e.g. `--set mc.n_paths=5000` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct WeightArgs {
    /// Weight shorthand: power:G, power_log:G or sde_sigma:G[:SCALE].
    #[arg(long)]
    weight: Option<String>,
    /// Stability index.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalizing constant, drift series E(alpha, theta) and pi cot(pi alpha / 2).
    Special {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Rate profile CSV and ergodicity class of a weight.
    Rates {
        #[command(flatten)]
        w: WeightArgs,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Lyapunov drift certificate on a grid.
    Drift {
        #[command(flatten)]
        w: WeightArgs,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        per_decade: Option<usize>,
        /// auto, lemma32, thm17 or brownian.
        #[arg(long)]
        condition: Option<String>,
    },
    /// Pointwise fractional Laplacian or time-changed generator.
    Genop {
        /// Function shorthand, e.g. cosine:1 or bump:2.
        #[arg(long)]
        f: Option<String>,
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
        #[command(flatten)]
        w: WeightArgs,
        #[arg(long)]
        truncated: bool,
    },
    /// Spectral gap of the discretized Dirichlet form.
    Gap {
        #[command(flatten)]
        w: WeightArgs,
        #[arg(long)]
        window_radius: Option<f64>,
        #[arg(long)]
        grid_spacing: Option<f64>,
        /// full or truncated.
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// g_n test-function sequence and sharpness report.
    Counterexample {
        #[command(flatten)]
        w: WeightArgs,
        /// super_beta or weak_alpha.
        #[arg(long)]
        family: Option<String>,
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<f64>>,
    },
    /// Path ensembles of the time-changed process or the SDE.
    Simulate {
        #[command(flatten)]
        w: WeightArgs,
        /// Use the SDE driven by the stable process (needs an sde_sigma weight).
        #[arg(long)]
        sde: bool,
        /// Brownian driver instead of the stable one.
        #[arg(long)]
        brownian: bool,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        per_path_csv: bool,
    },
    /// Monte Carlo distance-to-equilibrium curves and decay-law fits.
    McErgodicity {
        #[command(flatten)]
        w: WeightArgs,
        #[arg(long)]
        sde: bool,
        #[arg(long)]
        brownian: bool,
        /// l2_mu, tv_histogram or entropy.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
    },
    /// Run named reproduction claims and report PASS/FAIL.
    Reproduce {
        /// Claim ids, or `all`.
        ids: Vec<String>,
        /// List the registry and exit.
        #[arg(long)]
        list: bool,
    },
}

struct Builder {
    config: Value,
}

impl Builder {
    fn set(&mut self, key: &str, v: Option<Value>) -> Result<()> {
        match v {
            Some(v) => set_dotted(&mut self.config, key, v),
            None => Ok(()),
        }
    }

    /// Applies `--weight`/`--alpha` at `key`, keeping the existing alpha when none is given.
    fn weight(&mut self, key: &str, w: &WeightArgs) -> Result<()> {
        if let Some(spec) = &w.weight {
            let mut v = weight_shorthand(spec)?;
            let old = key.split('.').try_fold(&self.config, |c, p| c.get(p)).and_then(|c| c.get("alpha")).cloned();
            v["alpha"] = w.alpha.map(|a| json!(a)).or(old).unwrap_or(json!(1.5));
            set_dotted(&mut self.config, key, v)?;
        } else if let Some(a) = w.alpha {
            set_dotted(&mut self.config, &format!("{key}.alpha"), json!(a))?;
        }
        Ok(())
    }
}

fn driver_json(brownian: bool, alpha: Value) -> Value {
    if brownian {
        json!({"kind": "brownian"})
    } else {
        json!({"kind": "stable", "alpha": alpha})
    }
}

fn resolve(cli: &Cli) -> Result<(Command, Value)> {
    let cmd = match &cli.cmd {
        Cmd::Special { .. } => Command::Special,
        Cmd::Rates { .. } => Command::Rates,
        Cmd::Drift { .. } => Command::Drift,
        Cmd::Genop { .. } => Command::Genop,
        Cmd::Gap { .. } => Command::Gap,
        Cmd::Counterexample { .. } => Command::Counterexample,
        Cmd::Simulate { .. } => Command::Simulate,
        Cmd::McErgodicity { .. } => Command::McErgodicity,
        Cmd::Reproduce { .. } => Command::Reproduce,
    };
    let mut config = cmd.defaults();
    if let Some(p) = &cli.config {
        merge(&mut config, load_config_file(p)?);
    }
    let mut b = Builder { config };
    let n = |v: &Option<f64>| v.map(|x| json!(x));
    let s = |v: &Option<String>| v.as_ref().map(|x| json!(x));
    match &cli.cmd {
        Cmd::Special { alpha, theta } => {
            b.set("alpha", n(alpha))?;
            b.set("theta", n(theta))?;
        }
        Cmd::Rates { w, radii } => {
            b.weight("weight", w)?;
            b.set("radii", radii.as_ref().map(|r| json!(r)))?;
        }
        Cmd::Drift { w, theta, per_decade, condition } => {
            b.weight("weight", w)?;
            b.set("theta", n(theta))?;
            b.set("per_decade", per_decade.map(|v| json!(v)))?;
            b.set("condition", s(condition))?;
        }
        Cmd::Genop { f, x, w, truncated } => {
            if let Some(spec) = f {
                b.set("f", Some(function_shorthand(spec)?))?;
            }
            b.set("x", x.as_ref().map(|v| json!(v)))?;
            if w.weight.is_some() {
                b.weight("weight", w)?;
            } else {
                b.set("alpha", n(&w.alpha))?;
            }
            if *truncated {
                b.set("truncated", Some(json!(true)))?;
            }
        }
        Cmd::Gap { w, window_radius, grid_spacing, kernel, trials } => {
            b.weight("weight", w)?;
            b.set("window_radius", n(window_radius))?;
            b.set("grid_spacing", n(grid_spacing))?;
            b.set("kernel", s(kernel))?;
            b.set("local_poincare_trials", trials.map(|v| json!(v)))?;
        }
        Cmd::Counterexample { w, family, n_values } => {
            b.weight("weight", w)?;
            b.set("family", s(family))?;
            b.set("n_values", n_values.as_ref().map(|v| json!(v)))?;
        }
        Cmd::Simulate { w, sde, brownian, dt, horizon, n_paths, x0, per_path_csv } => {
            if w.weight.is_some() {
                b.weight("weight", w)?;
            }
            let alpha = w.alpha.map(|a| json!(a)).or_else(|| b.config.get("weight").and_then(|v| v.get("alpha")).cloned());
            if *brownian {
                b.set("sim.driver", Some(driver_json(true, Value::Null)))?;
            } else if let Some(a) = alpha {
                b.set("sim.driver", Some(driver_json(false, a)))?;
            }
            if *sde {
                b.set("model", Some(json!("sde")))?;
            }
            b.set("sim.dt", n(dt))?;
            b.set("sim.horizon", n(horizon))?;
            b.set("sim.n_paths", n_paths.map(|v| json!(v)))?;
            b.set("sim.x0", n(x0))?;
            if *per_path_csv {
                b.set("per_path_csv", Some(json!(true)))?;
            }
        }
        Cmd::McErgodicity { w, sde, brownian, metric, n_paths, t_grid, x0 } => {
            if *sde {
                let spec = w.weight.as_deref().unwrap_or("sde_sigma:1");
                let mut sigma = weight_shorthand(spec)?;
                sigma["alpha"] = json!(w.alpha.unwrap_or(1.5));
                b.set("process", Some(json!({"kind": "sde", "sigma": sigma})))?;
            } else {
                b.weight("process.weight", w)?;
                let alpha = b.config["process"]["weight"].get("alpha").cloned().unwrap_or(json!(1.5));
                if *brownian || w.alpha.is_some() {
                    b.set("process.driver", Some(driver_json(*brownian, alpha)))?;
                }
            }
            b.set("metric", s(metric))?;
            b.set("mc.n_paths", n_paths.map(|v| json!(v)))?;
            b.set("t_grid", t_grid.as_ref().map(|v| json!(v)))?;
            b.set("x0_set", x0.as_ref().map(|v| json!(v)))?;
        }
        Cmd::Reproduce { ids, .. } => {
            if !ids.is_empty() {
                b.set("claims", Some(json!(ids)))?;
            }
        }
    }
    if let (Some(seed), Some(key)) = (cli.seed, cmd.seed_key()) {
        b.set(key, Some(json!(seed)))?;
    }
    for raw in &cli.overrides {
        let (k, v) = parse_override(raw)?;
        b.set(&k, Some(v))?;
    }
    Ok((cmd, b.config))
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Cmd::Reproduce { list: true, .. } = cli.cmd {
        for c in claims::registry() {
            println!("{:<26} criterion {:>2}  {}", c.id, c.criterion, c.summary);
        }
        return Ok(true);
    }
    let (cmd, config) = resolve(cli)?;
    let ctx = RunContext { out_dir: cli.out_dir.clone(), threads: cli.threads.unwrap_or(0) };
    let res = run(cmd, config, &ctx)?;
    if cmd == Command::Reproduce {
        let mut all = true;
        for o in res.summary["outcomes"].as_array().into_iter().flatten() {
            let pass = o["pass"].as_bool().unwrap_or(false);
            all &= pass;
            println!(
                "{} {} measured: {} | tolerance: {} | {:.1}s",
                if pass { "PASS" } else { "FAIL" },
                o["id"].as_str().unwrap_or_default(),
                o["measured"].as_str().unwrap_or_default(),
                o["tolerance"].as_str().unwrap_or_default(),
                o["seconds"].as_f64().unwrap_or(0.0),
            );
        }
        return Ok(all);
    }
    println!("{}", serde_json::to_string_pretty(&json!({"summary": res.summary, "outputs": res.record.outputs})).expect("json"));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(ErrorClass::Numeric.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

//! `psq`: batch front end. Every subcommand assembles the same JSON document
//! that `psq run` reads from disk, so flags and config files share one validator.

mod config;
mod error;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{ScenarioConfig, SCHEMA};
use error::CliError;
use output::sha256_hex;

#[derive(Parser)]
#[command(name = "psq", about = "Phase-space quantization scenarios", disable_version_flag = true)]
struct Cli {
    /// Print the tool, library and field-format versions.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config file.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star product of two symbols, on the grid or symbolically.
    Starprod {
        /// `poly:EXPR`, `gaussian:X0,P0,WIDTH` or `file:PATH`; a bare expression is a polynomial.
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        symbolic: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Quasi-distribution of oscillator eigenfunctions `φ_m* ⊗ φ_n`.
    Wigner {
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Lowest levels of an ordered Hamiltonian and their star-genvalue residuals.
    Spectrum {
        #[arg(long)]
        hamiltonian: String,
        #[arg(long)]
        levels: Option<usize>,
        /// Also emit the diagonal eigenfields.
        #[arg(long)]
        eigenfields: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Time evolution in configuration space or on the phase-space lattice.
    Evolve {
        /// free | oscillator | custom
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        hamiltonian: Option<String>,
        /// split_step | matrix_exponential | phase_space_rk4 | liouville_rk4 | star_exponential
        #[arg(long)]
        method: Option<String>,
        /// Truncation order of the star exponential.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        every: Option<usize>,
        /// Comma-separated names: x, p, x2, p2, H or any polynomial.
        #[arg(long)]
        observables: Option<String>,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long)]
        delta_p: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Dump a closed-form state.
    Oracle {
        /// ho | ladder | ground | free_gaussian | coherent | plane_wave
        #[arg(long)]
        state: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long)]
        delta_p: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        x_bar: Option<f64>,
        #[arg(long)]
        p_bar: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Pairings of a state family with a test function as hbar shrinks.
    ClassicalLimit {
        /// free | stationary | coherent
        #[arg(long)]
        family: String,
        /// Comma-separated hbar values.
        #[arg(long)]
        hbars: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare spectra across orderings.
    GaugeCheck {
        #[arg(long)]
        hamiltonian: String,
        /// Comma-separated sigma values.
        #[arg(long)]
        sigmas: Option<String>,
        /// `identity` or `gaussian:ALPHA,BETA`; repeatable.
        #[arg(long = "smoother")]
        smoothers: Vec<String>,
        #[arg(long)]
        levels: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the JSON schema for config files.
    Schema,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    np: Option<usize>,
    /// Half-width of the x span.
    #[arg(long)]
    span: Option<f64>,
    /// Half-width of the p span.
    #[arg(long)]
    p_span: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Nonzero alpha or beta selects the Gaussian smoother.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated subset of csv, bin, dat.
    #[arg(long)]
    formats: Option<String>,
}

fn put<T: Into<Value>>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), v.into());
    }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

fn float_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    list(s)
        .iter()
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Schema(format!("{what}: {t:?} is not a number")))
        })
        .collect()
}

impl Common {
    fn document(&self, scenario: &str, params: Map<String, Value>) -> Result<Value, CliError> {
        let mut grid = Map::new();
        put(&mut grid, "nx", self.nx);
        put(&mut grid, "np", self.np);
        put(&mut grid, "x_span", self.span.map(|s| json!([-s, s])));
        put(&mut grid, "p_span", self.p_span.map(|s| json!([-s, s])));
        put(&mut grid, "hbar", self.hbar);
        let mut ordering = Map::new();
        put(&mut ordering, "sigma", self.sigma);
        let (a, b) = (self.alpha.unwrap_or(0.0), self.beta.unwrap_or(0.0));
        if a != 0.0 || b != 0.0 {
            ordering.insert("smoother".into(), "gaussian".into());
            ordering.insert("alpha".into(), a.into());
            ordering.insert("beta".into(), b.into());
        }
        let mut doc = Map::new();
        doc.insert("scenario".into(), scenario.into());
        doc.insert("grid".into(), grid.into());
        doc.insert("ordering".into(), ordering.into());
        doc.insert("params".into(), params.into());
        put(&mut doc, "output", self.out.as_ref().map(|p| p.display().to_string()));
        if let Some(f) = &self.formats {
            doc.insert("formats".into(), json!(list(f)));
        }
        Ok(doc.into())
    }
}

fn operand(s: &str) -> Result<Value, CliError> {
    if let Some(rest) = s.strip_prefix("gaussian:") {
        let v = float_list(rest, "gaussian operand")?;
        let [x0, p0, width] = v[..] else {
            return Err(CliError::Schema("gaussian operand needs X0,P0,WIDTH".into()));
        };
        return Ok(json!({ "gaussian": { "x0": x0, "p0": p0, "width": width } }));
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(json!({ "file": path }));
    }
    Ok(json!({ "poly": s.strip_prefix("poly:").unwrap_or(s) }))
}

fn smoother_entry(s: &str) -> Result<Value, CliError> {
    if s == "identity" {
        return Ok(json!({ "kind": "identity" }));
    }
    let rest = s
        .strip_prefix("gaussian:")
        .ok_or_else(|| CliError::Schema(format!("smoother {s:?}: expected identity or gaussian:A,B")))?;
    let v = float_list(rest, "smoother")?;
    let [alpha, beta] = v[..] else {
        return Err(CliError::Schema("gaussian smoother needs ALPHA,BETA".into()));
    };
    Ok(json!({ "kind": "gaussian", "alpha": alpha, "beta": beta }))
}

/// The config document a subcommand stands for, with its `--out` override.
fn document(cmd: Command) -> Result<(Value, Option<PathBuf>), CliError> {
    let mut p = Map::new();
    let doc = match cmd {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", config.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Schema(format!("{}: {e}", config.display())))?;
            return Ok((v, out));
        }
        Command::Schema => unreachable!("handled before dispatch"),
        Command::Starprod { f, g, symbolic, common } => {
            p.insert("f".into(), operand(&f)?);
            p.insert("g".into(), operand(&g)?);
            p.insert("symbolic".into(), symbolic.into());
            common.document("starprod", p)?
        }
        Command::Wigner { m, n, omega, common } => {
            p.insert("phi".into(), json!({ "hermite": { "n": m, "omega": omega } }));
            p.insert("psi".into(), json!({ "hermite": { "n": n, "omega": omega } }));
            common.document("wigner", p)?
        }
        Command::Spectrum { hamiltonian, levels, eigenfields, common } => {
            p.insert("hamiltonian".into(), hamiltonian.into());
            put(&mut p, "levels", levels);
            p.insert("eigenfields".into(), eigenfields.into());
            common.document("spectrum", p)?
        }
        Command::Evolve {
            scenario,
            hamiltonian,
            method,
            order,
            dt,
            steps,
            every,
            observables,
            x0,
            p0,
            delta_p,
            omega,
            width,
            common,
        } => {
            p.insert("system".into(), scenario.into());
            put(&mut p, "hamiltonian", hamiltonian);
            put(&mut p, "method", method);
            put(&mut p, "order", order);
            p.insert("dt".into(), dt.into());
            p.insert("steps".into(), steps.into());
            put(&mut p, "snapshot_every", every);
            put(&mut p, "observables", observables.map(|o| json!(list(&o))));
            put(&mut p, "x0", x0);
            put(&mut p, "p0", p0);
            put(&mut p, "delta_p", delta_p);
            put(&mut p, "omega", omega);
            put(&mut p, "width", width);
            common.document("evolve", p)?
        }
        Command::Oracle { state, m, n, omega, p0, delta_p, t, x_bar, p_bar, common } => {
            p.insert("state".into(), state.into());
            put(&mut p, "m", m);
            put(&mut p, "n", n);
            put(&mut p, "omega", omega);
            put(&mut p, "p0", p0);
            put(&mut p, "delta_p", delta_p);
            put(&mut p, "t", t);
            put(&mut p, "x_bar", x_bar);
            put(&mut p, "p_bar", p_bar);
            common.document("oracle", p)?
        }
        Command::ClassicalLimit { family, hbars, n, common } => {
            p.insert("family".into(), family.into());
            if let Some(h) = hbars {
                p.insert("hbars".into(), json!(float_list(&h, "hbars")?));
            }
            put(&mut p, "n", n);
            common.document("classical-limit", p)?
        }
        Command::GaugeCheck { hamiltonian, sigmas, smoothers, levels, common } => {
            p.insert("hamiltonian".into(), hamiltonian.into());
            if let Some(s) = sigmas {
                p.insert("sigmas".into(), json!(float_list(&s, "sigmas")?));
            }
            if !smoothers.is_empty() {
                let entries = smoothers.iter().map(|s| smoother_entry(s)).collect::<Result<Vec<_>, _>>()?;
                p.insert("smoothers".into(), entries.into());
            }
            put(&mut p, "levels", levels);
            common.document("gauge-check", p)?
        }
    };
    Ok((doc, None))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PSQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Schema(format!("PSQ_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

/// Hash of the config with the output directory removed, so that the same
/// scenario run into two directories yields the same manifest.
fn config_hash(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let mut c = cfg.clone();
    c.output = PathBuf::new();
    Ok(sha256_hex(c.canonical()?.as_bytes()))
}

fn run(cmd: Command) -> Result<(), CliError> {
    let (doc, out_override) = document(cmd)?;
    let mut cfg = ScenarioConfig::from_value(doc)?;
    if let Some(out) = out_override {
        cfg.output = out;
    }
    configure_threads()?;
    let artifacts = scenarios::execute(&cfg)?;
    let kind = serde_json::to_value(cfg.scenario).expect("scenario name");
    let manifest = artifacts.manifest(kind.as_str().unwrap_or_default(), &config_hash(&cfg)?);
    artifacts.write(Path::new(&cfg.output), &manifest)?;
    for name in artifacts.names() {
        println!("{}", cfg.output.join(name).display());
    }
    println!("{}", cfg.output.join(output::MANIFEST).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!(
            "psq {} (library {}, field format {})",
            env!("CARGO_PKG_VERSION"),
            psq_core::VERSION,
            psq_core::io::FORMAT_VERSION
        );
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("psq: no subcommand given; see `psq --help`");
        return ExitCode::from(2);
    };
    if let Command::Schema = cmd {
        print!("{SCHEMA}");
        return ExitCode::SUCCESS;
    }
    match run(cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

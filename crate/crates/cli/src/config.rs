//! Scenario configuration: the JSON document accepted by `psq run`, its
//! defaults and the range checks mirrored in `schema/scenario.schema.json`.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Starprod,
    Symbolic,
    Wigner,
    Spectrum,
    Evolve,
    Oracle,
    ClassicalLimit,
    GaugeCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
    Dat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub ordering: OrderingBlock,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_output() -> PathBuf {
    PathBuf::from("psq-out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Bin]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub nx: usize,
    pub np: usize,
    pub x_span: [f64; 2],
    pub p_span: [f64; 2],
    pub hbar: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            nx: 128,
            np: 128,
            x_span: [-8.0, 8.0],
            p_span: [-8.0, 8.0],
            hbar: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SmootherKind {
    #[default]
    Identity,
    Gaussian,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderingBlock {
    pub sigma: f64,
    pub smoother: SmootherKind,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for OrderingBlock {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            smoother: SmootherKind::Identity,
            alpha: 0.0,
            beta: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Operand {
    Poly(String),
    Gaussian { x0: f64, p0: f64, width: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarprodParams {
    pub f: Operand,
    pub g: Operand,
    #[serde(default)]
    pub symbolic: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum WaveSpec {
    Hermite {
        n: usize,
        #[serde(default = "one")]
        omega: f64,
    },
    Gaussian {
        x0: f64,
        p0: f64,
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerParams {
    pub phi: WaveSpec,
    #[serde(default)]
    pub psi: Option<WaveSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub hamiltonian: String,
    #[serde(default = "five")]
    pub levels: usize,
    #[serde(default)]
    pub eigenfields: bool,
}

fn five() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Free,
    Oscillator,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    SplitStep,
    MatrixExponential,
    PhaseSpaceRk4,
    LiouvilleRk4,
    StarExponential,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub system: System,
    #[serde(default)]
    pub hamiltonian: Option<String>,
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "twelve")]
    pub order: usize,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub p0: f64,
    /// Momentum spread of the free packet.
    #[serde(default = "half")]
    pub delta_p: f64,
    #[serde(default = "one")]
    pub omega: f64,
    /// Position spread of the custom Gaussian.
    #[serde(default = "inv_sqrt2")]
    pub width: f64,
}

fn default_method() -> MethodName {
    MethodName::SplitStep
}

fn twelve() -> usize {
    12
}

fn half() -> f64 {
    0.5
}

fn inv_sqrt2() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

fn default_observables() -> Vec<String> {
    ["x", "p", "x2", "p2", "H"].map(String::from).to_vec()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleState {
    Ho,
    Ladder,
    Ground,
    FreeGaussian,
    Coherent,
    PlaneWave,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    pub state: OracleState,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub p0: f64,
    #[serde(default = "half")]
    pub delta_p: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub x_bar: f64,
    #[serde(default)]
    pub p_bar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Free,
    Stationary,
    Coherent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLimitParams {
    pub family: Family,
    #[serde(default = "default_hbars")]
    pub hbars: Vec<f64>,
    /// Center and width of the Gaussian test function.
    #[serde(default = "default_center")]
    pub test_center: [f64; 2],
    #[serde(default = "three")]
    pub test_width: f64,
    #[serde(default = "two")]
    pub n: usize,
    #[serde(default = "one")]
    pub p0: f64,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "one")]
    pub x_bar: f64,
    #[serde(default = "half")]
    pub p_bar: f64,
}

fn default_hbars() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_center() -> [f64; 2] {
    [0.4, -0.3]
}

fn three() -> f64 {
    3.0
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmootherEntry {
    pub kind: SmootherKind,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeCheckParams {
    pub hamiltonian: String,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_smoothers")]
    pub smoothers: Vec<SmootherEntry>,
    #[serde(default = "five")]
    pub levels: usize,
}

fn default_sigmas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_smoothers() -> Vec<SmootherEntry> {
    vec![SmootherEntry {
        kind: SmootherKind::Identity,
        alpha: 0.0,
        beta: 0.0,
    }]
}

/// A configuration with its scenario block parsed.
#[derive(Clone, Debug)]
pub enum Scenario {
    Starprod(StarprodParams),
    Wigner(WignerParams),
    Spectrum(SpectrumParams),
    Evolve(EvolveParams),
    Oracle(OracleParams),
    ClassicalLimit(ClassicalLimitParams),
    GaugeCheck(GaugeCheckParams),
}

fn parse_params<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Schema(format!("params: {e}")))
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Schema(what()))
    }
}

fn finite(v: f64, name: &str) -> Result<(), CliError> {
    check(v.is_finite(), || format!("{name} must be finite"))
}

fn power_of_two(n: usize, name: &str) -> Result<(), CliError> {
    check(n.is_power_of_two() && (8..=4096).contains(&n), || {
        format!("{name} = {n} must be a power of two in [8, 4096]")
    })
}

fn span(s: [f64; 2], name: &str) -> Result<(), CliError> {
    finite(s[0], name)?;
    finite(s[1], name)?;
    check(s[0] < s[1], || format!("{name} must satisfy min < max"))
}

fn smoother_range(kind: SmootherKind, alpha: f64, beta: f64) -> Result<(), CliError> {
    check(kind == SmootherKind::Gaussian || (alpha == 0.0 && beta == 0.0), || {
        "alpha and beta need the gaussian smoother".into()
    })?;
    finite(alpha, "alpha")?;
    finite(beta, "beta")?;
    check(alpha.abs() <= 10.0 && beta.abs() <= 10.0, || {
        "alpha and beta must lie in [-10, 10]".into()
    })
}

impl ScenarioConfig {
    pub fn from_value(v: Value) -> Result<Self, CliError> {
        let cfg: ScenarioConfig =
            serde_json::from_value(v).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text of the configuration, with defaults filled in, used for
    /// the manifest hash.
    pub fn canonical(&self) -> Result<String, CliError> {
        let params = match self.scenario()? {
            Scenario::Starprod(p) => serde_json::to_value(p),
            Scenario::Wigner(p) => serde_json::to_value(p),
            Scenario::Spectrum(p) => serde_json::to_value(p),
            Scenario::Evolve(p) => serde_json::to_value(p),
            Scenario::Oracle(p) => serde_json::to_value(p),
            Scenario::ClassicalLimit(p) => serde_json::to_value(p),
            Scenario::GaugeCheck(p) => serde_json::to_value(p),
        };
        let mut c = self.clone();
        c.params = params.expect("params serialise");
        Ok(serde_json::to_string_pretty(&c).expect("config serialises"))
    }

    fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        power_of_two(g.nx, "grid.nx")?;
        power_of_two(g.np, "grid.np")?;
        span(g.x_span, "grid.x_span")?;
        span(g.p_span, "grid.p_span")?;
        check(g.hbar.is_finite() && g.hbar > 0.0, || "grid.hbar must be positive".into())?;
        let o = &self.ordering;
        check((0.0..=1.0).contains(&o.sigma), || "ordering.sigma must lie in [0, 1]".into())?;
        smoother_range(o.smoother, o.alpha, o.beta)?;
        check(!self.formats.is_empty(), || "formats must not be empty".into())?;
        for (i, f) in self.formats.iter().enumerate() {
            check(!self.formats[..i].contains(f), || format!("format {f:?} listed twice"))?;
        }
        check(self.params.is_object(), || "params must be an object".into())?;
        self.scenario().map(|_| ())
    }

    /// The scenario block, parsed and range-checked.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let p = &self.params;
        Ok(match self.scenario {
            ScenarioKind::Starprod | ScenarioKind::Symbolic => {
                let mut s: StarprodParams = parse_params(p)?;
                if self.scenario == ScenarioKind::Symbolic {
                    s.symbolic = true;
                }
                for op in [&s.f, &s.g] {
                    if let Operand::Gaussian { x0, p0, width } = op {
                        finite(*x0, "x0")?;
                        finite(*p0, "p0")?;
                        check(*width > 0.0 && width.is_finite(), || "width must be positive".into())?;
                    }
                }
                if s.symbolic {
                    check(
                        matches!((&s.f, &s.g), (Operand::Poly(_), Operand::Poly(_))),
                        || "symbolic products need two polynomial operands".into(),
                    )?;
                }
                Scenario::Starprod(s)
            }
            ScenarioKind::Wigner => {
                let w: WignerParams = parse_params(p)?;
                for spec in std::iter::once(&w.phi).chain(w.psi.as_ref()) {
                    match spec {
                        WaveSpec::Hermite { n, omega } => {
                            check(*n <= 64, || "hermite index must be at most 64".into())?;
                            check(*omega > 0.0 && omega.is_finite(), || "omega must be positive".into())?;
                        }
                        WaveSpec::Gaussian { x0, p0, width } => {
                            finite(*x0, "x0")?;
                            finite(*p0, "p0")?;
                            check(*width > 0.0 && width.is_finite(), || "width must be positive".into())?;
                        }
                    }
                }
                Scenario::Wigner(w)
            }
            ScenarioKind::Spectrum => {
                let s: SpectrumParams = parse_params(p)?;
                check((1..=64).contains(&s.levels), || "levels must lie in [1, 64]".into())?;
                check(self.grid.nx <= 1024, || "spectrum needs grid.nx <= 1024".into())?;
                Scenario::Spectrum(s)
            }
            ScenarioKind::Evolve => {
                let e: EvolveParams = parse_params(p)?;
                check(e.dt > 0.0 && e.dt.is_finite(), || "dt must be positive".into())?;
                check((1..=1_000_000).contains(&e.steps), || "steps must lie in [1, 1000000]".into())?;
                check((1..=20).contains(&e.order), || "order must lie in [1, 20]".into())?;
                check(e.delta_p > 0.0 && e.omega > 0.0 && e.width > 0.0, || {
                    "delta_p, omega and width must be positive".into()
                })?;
                finite(e.x0, "x0")?;
                finite(e.p0, "p0")?;
                check(
                    (e.system == System::Custom) == e.hamiltonian.is_some(),
                    || "hamiltonian is required for, and only for, the custom system".into(),
                )?;
                check(!e.observables.is_empty(), || "observables must not be empty".into())?;
                Scenario::Evolve(e)
            }
            ScenarioKind::Oracle => {
                let o: OracleParams = parse_params(p)?;
                check(o.omega > 0.0 && o.delta_p > 0.0, || "omega and delta_p must be positive".into())?;
                check(o.m <= 12 && o.n <= 12, || "indices must be at most 12".into())?;
                for (v, name) in [(o.p0, "p0"), (o.t, "t"), (o.x_bar, "x_bar"), (o.p_bar, "p_bar")] {
                    finite(v, name)?;
                }
                Scenario::Oracle(o)
            }
            ScenarioKind::ClassicalLimit => {
                let c: ClassicalLimitParams = parse_params(p)?;
                check(!c.hbars.is_empty(), || "hbars must not be empty".into())?;
                check(c.hbars.iter().all(|h| *h > 0.0 && h.is_finite()), || "hbars must be positive".into())?;
                check(c.test_width > 0.0, || "test_width must be positive".into())?;
                check(c.n <= 12, || "n must be at most 12".into())?;
                Scenario::ClassicalLimit(c)
            }
            ScenarioKind::GaugeCheck => {
                let g: GaugeCheckParams = parse_params(p)?;
                check(!g.sigmas.is_empty() && !g.smoothers.is_empty(), || {
                    "sigmas and smoothers must not be empty".into()
                })?;
                check(g.sigmas.iter().all(|s| (0.0..=1.0).contains(s)), || "sigmas must lie in [0, 1]".into())?;
                for s in &g.smoothers {
                    smoother_range(s.kind, s.alpha, s.beta)?;
                }
                check((1..=64).contains(&g.levels), || "levels must lie in [1, 64]".into())?;
                Scenario::GaugeCheck(g)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_json(text: &str) -> Result<ScenarioConfig, CliError> {
        ScenarioConfig::from_value(serde_json::from_str(text).unwrap())
    }

    #[test]
    fn defaults_fill_missing_blocks() {
        let cfg = from_json(
            r#"{"scenario": "spectrum", "params": {"hamiltonian": "p^2/2 + x^2/2"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid.nx, 128);
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Bin]);
        match cfg.scenario().unwrap() {
            Scenario::Spectrum(s) => assert_eq!(s.levels, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_form_fills_parameter_defaults() {
        let a = from_json(r#"{"scenario": "spectrum", "params": {"hamiltonian": "x^2"}}"#).unwrap();
        let b = from_json(
            r#"{"scenario": "spectrum", "params": {"hamiltonian": "x^2", "levels": 5, "eigenfields": false}}"#,
        )
        .unwrap();
        assert_eq!(a.canonical().unwrap(), b.canonical().unwrap());
    }

    #[test]
    fn unknown_keys_and_ranges_are_schema_errors() {
        for bad in [
            r#"{"scenario": "spectrum", "params": {"hamiltonian": "x", "levelz": 3}}"#,
            r#"{"scenario": "spectrum", "grid": {"nx": 100}, "params": {"hamiltonian": "x"}}"#,
            r#"{"scenario": "warp", "params": {}}"#,
            r#"{"scenario": "evolve", "params": {"system": "free", "dt": -1, "steps": 3}}"#,
            r#"{"scenario": "evolve", "params": {"system": "custom", "dt": 0.1, "steps": 3}}"#,
            r#"{"scenario": "wigner", "ordering": {"sigma": 1.5}, "params": {"phi": {"hermite": {"n": 0}}}}"#,
        ] {
            assert!(matches!(from_json(bad), Err(CliError::Schema(_))), "{bad}");
        }
    }

    #[test]
    fn schema_file_lists_every_scenario() {
        let schema: Value = serde_json::from_str(SCHEMA).unwrap();
        let names = schema["properties"]["scenario"]["enum"].as_array().unwrap();
        for kind in [
            "starprod",
            "symbolic",
            "wigner",
            "spectrum",
            "evolve",
            "oracle",
            "classical-limit",
            "gauge-check",
        ] {
            assert!(names.iter().any(|n| n == kind), "{kind}");
            let parsed: ScenarioKind = serde_json::from_value(Value::String(kind.into())).unwrap();
            assert_eq!(serde_json::to_value(parsed).unwrap(), kind);
        }
    }
}

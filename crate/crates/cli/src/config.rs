//! JSON run configuration: schema, defaults and validation.

use std::path::{Path, PathBuf};

use fredholm_core::fpt::BoundaryShape;
use fredholm_core::{Density, Grid1D, GridFunction, KernelSpec, StoppingRule, TabulatedKernel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Mixdens,
    Fpt,
    Demo,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Mixdens => "mixdens",
            Command::Fpt => "fpt",
            Command::Demo => "demo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keyword {
    #[serde(rename = "auto", alias = "rule-of-thumb")]
    Auto,
}

/// A number, or `"auto"` for a value derived at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Keyword(Keyword),
}

impl Param {
    pub const AUTO: Param = Param::Keyword(Keyword::Auto);

    pub fn value(&self) -> Option<f64> {
        match self {
            Param::Value(v) => Some(*v),
            Param::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridConfig {
    pub fn uniform(min: f64, max: f64, nodes: usize) -> Self {
        Self { min, max, nodes, spacing: Spacing::Uniform }
    }

    pub fn build(&self) -> fredholm_core::Result<Grid1D> {
        match self.spacing {
            Spacing::Uniform => Grid1D::uniform(self.min, self.max, self.nodes),
            Spacing::Geometric => Grid1D::geometric(self.min, self.max, self.nodes),
        }
    }

    fn check(&self, field: &str, errors: &mut Vec<String>) {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            errors.push(format!("{field}: min must be below max (got min = {}, max = {})", self.min, self.max));
        }
        if self.nodes < 2 {
            errors.push(format!("{field}: nodes must be at least 2 (got {})", self.nodes));
        }
        if self.spacing == Spacing::Geometric && !(self.min > 0.0) {
            errors.push(format!("{field}: geometric spacing needs min > 0"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    ExponentialRate,
    NormalLocation {
        sigma: Param,
    },
    NormalScale,
    Tabulated {
        path: PathBuf,
        #[serde(default)]
        density_in_x: bool,
    },
    Reflected {
        inner: Box<KernelConfig>,
    },
    Difference {
        plus: Box<KernelConfig>,
        minus: Box<KernelConfig>,
    },
}

impl KernelConfig {
    /// `auto` sigma resolves to `auto_sigma`.
    pub fn build(&self, auto_sigma: Option<f64>) -> anyhow::Result<KernelSpec> {
        Ok(match self {
            KernelConfig::ExponentialRate => KernelSpec::ExponentialRate,
            KernelConfig::NormalLocation { sigma } => {
                let sigma = sigma
                    .value()
                    .or(auto_sigma)
                    .ok_or_else(|| anyhow::anyhow!("sigma = \"auto\" is only available for mixdens"))?;
                KernelSpec::NormalLocation { sigma }
            }
            KernelConfig::NormalScale => KernelSpec::NormalScale,
            KernelConfig::Tabulated { path, density_in_x } => {
                let mut table = TabulatedKernel::read_csv(path)
                    .map_err(|e| anyhow::anyhow!("reading kernel table {}: {e}", path.display()))?;
                table.density_in_x = *density_in_x;
                KernelSpec::Tabulated(std::sync::Arc::new(table))
            }
            KernelConfig::Reflected { inner } => KernelSpec::Reflected(Box::new(inner.build(auto_sigma)?)),
            KernelConfig::Difference { plus, minus } => {
                KernelSpec::difference(plus.build(auto_sigma)?, minus.build(auto_sigma)?)
            }
        })
    }

    /// Replaces `auto` sigma by a number.
    pub fn resolved(&self, sigma_value: f64) -> KernelConfig {
        match self {
            KernelConfig::NormalLocation { sigma: Param::Keyword(_) } => {
                KernelConfig::NormalLocation { sigma: Param::Value(sigma_value) }
            }
            KernelConfig::Reflected { inner } => {
                KernelConfig::Reflected { inner: Box::new(inner.resolved(sigma_value)) }
            }
            KernelConfig::Difference { plus, minus } => KernelConfig::Difference {
                plus: Box::new(plus.resolved(sigma_value)),
                minus: Box::new(minus.resolved(sigma_value)),
            },
            other => other.clone(),
        }
    }

    pub fn has_auto_sigma(&self) -> bool {
        match self {
            KernelConfig::NormalLocation { sigma } => sigma.value().is_none(),
            KernelConfig::Reflected { inner } => inner.has_auto_sigma(),
            KernelConfig::Difference { plus, minus } => plus.has_auto_sigma() || minus.has_auto_sigma(),
            _ => false,
        }
    }

    fn check(&self, field: &str, allow_auto: bool, errors: &mut Vec<String>) {
        match self {
            KernelConfig::NormalLocation { sigma } => match sigma {
                Param::Value(s) if !(*s > 0.0) => errors.push(format!("{field}.sigma must be positive (got {s})")),
                Param::Keyword(_) if !allow_auto => {
                    errors.push(format!("{field}.sigma = \"auto\" is only available for mixdens"))
                }
                _ => {}
            },
            KernelConfig::Tabulated { path, .. } => check_file(&format!("{field}.path"), path, errors),
            KernelConfig::Reflected { inner } => inner.check(&format!("{field}.inner"), allow_auto, errors),
            KernelConfig::Difference { plus, minus } => {
                plus.check(&format!("{field}.plus"), allow_auto, errors);
                minus.check(&format!("{field}.minus"), allow_auto, errors);
            }
            _ => {}
        }
    }
}

fn check_file(field: &str, path: &Path, errors: &mut Vec<String>) {
    if !path.is_file() {
        errors.push(format!("{field}: file {} does not exist", path.display()));
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingConfig {
    #[serde(default = "StoppingConfig::default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub tol_div: f64,
    #[serde(default = "StoppingConfig::default_tol_diff")]
    pub tol_diff: f64,
}

impl StoppingConfig {
    fn default_max_iter() -> usize {
        500
    }

    fn default_tol_diff() -> f64 {
        1e-5
    }

    pub fn fixed(max_iter: usize) -> Self {
        Self { max_iter, tol_div: 0.0, tol_diff: 0.0 }
    }

    pub fn rule(&self) -> StoppingRule {
        StoppingRule { max_iter: self.max_iter, tol_div: self.tol_div, tol_diff: self.tol_diff }
    }
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self { max_iter: Self::default_max_iter(), tol_div: 0.0, tol_diff: Self::default_tol_diff() }
    }
}

/// Where the right-hand side f comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    /// A closed-form function tabulated on the x-grid.
    Density {
        density: Density,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// `node,value` CSV, interpolated onto the x-grid.
    Csv { path: PathBuf },
    /// f = ∫ k(·, θ) p(θ) dθ by quadrature from the configured `truth`.
    MixtureOfTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformConfig {
    #[default]
    None,
    NormalizeKernel,
    Shift {
        t: Param,
    },
    Split {
        t: Param,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub kernel: KernelConfig,
    pub x_grid: GridConfig,
    pub theta_grid: GridConfig,
    pub target: TargetConfig,
    /// Known solution, used for `mixture-of-truth` targets and error reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Density>,
    /// Initial guess, normalized on the θ-grid; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Density>,
    #[serde(default)]
    pub transform: TransformConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Csv { path: PathBuf },
    Scenario { name: String, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Kde,
    Em,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixdensConfig {
    pub data: DataConfig,
    pub kernel: KernelConfig,
    #[serde(default = "auto")]
    pub bandwidth: Param,
    /// Multiple of the bandwidth used when the kernel sigma is `auto`.
    #[serde(default = "half")]
    pub sigma_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<GridConfig>,
    #[serde(default)]
    pub method: Method,
}

fn auto() -> Param {
    Param::AUTO
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Sqrt,
    Zero,
    Power {
        gamma: f64,
    },
    /// `node,value` CSV of h(t) starting at (0, 0).
    Tabulated {
        path: PathBuf,
    },
}

impl BoundaryConfig {
    pub fn shape(&self) -> anyhow::Result<BoundaryShape> {
        Ok(match self {
            BoundaryConfig::Sqrt => BoundaryShape::Sqrt,
            BoundaryConfig::Zero => BoundaryShape::Zero,
            BoundaryConfig::Power { gamma } => BoundaryShape::Power { gamma: *gamma },
            BoundaryConfig::Tabulated { path } => BoundaryShape::Tabulated(std::sync::Arc::new(
                GridFunction::read_csv(path)
                    .map_err(|e| anyhow::anyhow!("reading boundary {}: {e}", path.display()))?,
            )),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "McSettings::default_n")]
    pub n: usize,
    #[serde(default = "yes")]
    pub resample_each_iteration: bool,
}

impl McSettings {
    fn default_n() -> usize {
        5000
    }
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n: Self::default_n(), resample_each_iteration: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub paths: usize,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "yes")]
    pub bridge_correction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FptConfig {
    pub a: f64,
    pub b: f64,
    pub boundary: BoundaryConfig,
    #[serde(default = "FptConfig::default_grid")]
    pub theta_grid: GridConfig,
    /// Initial guess for p̃, normalized on the grid.
    #[serde(default = "FptConfig::default_p0")]
    pub p0: Density,
    #[serde(default)]
    pub mc: McSettings,
    /// Also write a renormalized copy of p.
    #[serde(default)]
    pub renormalize_output: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulationSettings>,
}

impl FptConfig {
    fn default_grid() -> GridConfig {
        GridConfig::uniform(0.05, 50.0, 1000)
    }

    fn default_p0() -> Density {
        Density::Exponential { rate: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoRequest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stopping: StoppingConfig,
    #[serde(default = "yes")]
    pub renormalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixdens: Option<MixdensConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpt: Option<FptConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoRequest>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            stopping: StoppingConfig::default(),
            renormalize: true,
            out: None,
            solve: None,
            mixdens: None,
            fpt: None,
            demo: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Every semantic problem with the configuration.
    pub fn check(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let s = &self.stopping;
        if !(s.tol_div >= 0.0) {
            errors.push(format!("stopping.tol_div must be non-negative (got {})", s.tol_div));
        }
        if !(s.tol_diff >= 0.0) {
            errors.push(format!("stopping.tol_diff must be non-negative (got {})", s.tol_diff));
        }
        let section = |present: bool, name: &str, errors: &mut Vec<String>| {
            if !present {
                errors.push(format!("command `{}` needs a `{name}` section", self.command.as_str()));
            }
        };
        match self.command {
            Command::Solve => section(self.solve.is_some(), "solve", &mut errors),
            Command::Mixdens => section(self.mixdens.is_some(), "mixdens", &mut errors),
            Command::Fpt => section(self.fpt.is_some(), "fpt", &mut errors),
            Command::Demo => section(self.demo.is_some(), "demo", &mut errors),
        }
        if let Some(c) = &self.solve {
            c.kernel.check("solve.kernel", false, &mut errors);
            c.x_grid.check("solve.x_grid", &mut errors);
            c.theta_grid.check("solve.theta_grid", &mut errors);
            match &c.target {
                TargetConfig::Csv { path } => check_file("solve.target.path", path, &mut errors),
                TargetConfig::MixtureOfTruth if c.truth.is_none() => {
                    errors.push("solve.target: mixture-of-truth needs solve.truth".into())
                }
                _ => {}
            }
            match c.transform {
                TransformConfig::Shift { t } | TransformConfig::Split { t } => {
                    if let Param::Value(t) = t {
                        if !(t > 0.0) {
                            errors.push(format!("solve.transform.t must be positive (got {t})"));
                        }
                    }
                }
                _ => {}
            }
            if matches!(c.transform, TransformConfig::Split { .. })
                && !matches!(c.kernel, KernelConfig::Difference { .. })
            {
                errors.push("solve.transform: split needs a difference kernel".into());
            }
        }
        if let Some(c) = &self.mixdens {
            c.kernel.check("mixdens.kernel", true, &mut errors);
            match &c.data {
                DataConfig::Csv { path } => check_file("mixdens.data.path", path, &mut errors),
                DataConfig::Scenario { name, n } => {
                    if !fredholm_core::mixing::SCENARIO_NAMES.contains(&name.as_str()) {
                        errors.push(format!(
                            "mixdens.data.name: unknown scenario `{name}` (expected one of {})",
                            fredholm_core::mixing::SCENARIO_NAMES.join(", ")
                        ));
                    }
                    if *n < 2 {
                        errors.push(format!("mixdens.data.n must be at least 2 (got {n})"));
                    }
                }
            }
            if let Param::Value(h) = c.bandwidth {
                if !(h > 0.0) {
                    errors.push(format!("mixdens.bandwidth must be positive (got {h})"));
                }
            }
            if !(c.sigma_factor > 0.0) {
                errors.push(format!("mixdens.sigma_factor must be positive (got {})", c.sigma_factor));
            }
            if let Some(g) = &c.theta_grid {
                g.check("mixdens.theta_grid", &mut errors);
            }
            if let Some(g) = &c.x_grid {
                g.check("mixdens.x_grid", &mut errors);
            }
        }
        if let Some(c) = &self.fpt {
            if !(c.a > 0.0) {
                errors.push(format!("fpt.a must be positive (got {})", c.a));
            }
            if !(c.b >= 0.0) {
                errors.push(format!("fpt.b must be non-negative (got {})", c.b));
            }
            match &c.boundary {
                BoundaryConfig::Power { gamma } if !(*gamma > 0.0 && *gamma <= 0.5) => {
                    errors.push(format!("fpt.boundary.gamma must be in (0, 0.5] (got {gamma})"))
                }
                BoundaryConfig::Tabulated { path } => check_file("fpt.boundary.path", path, &mut errors),
                _ => {}
            }
            c.theta_grid.check("fpt.theta_grid", &mut errors);
            if !(c.theta_grid.min > 0.0) {
                errors.push("fpt.theta_grid: min must be positive".into());
            }
            if c.mc.n == 0 {
                errors.push("fpt.mc.n must be at least 1".into());
            }
            if let Some(sim) = &c.simulate {
                if sim.paths == 0 {
                    errors.push("fpt.simulate.paths must be at least 1".into());
                }
                if !(sim.dt > 0.0) || !(sim.t_max > sim.dt) {
                    errors.push("fpt.simulate: need dt > 0 and t_max > dt".into());
                }
            }
        }
        if let Some(d) = &self.demo {
            if !crate::demos::DEMO_NAMES.contains(&d.name.as_str()) {
                errors.push(format!(
                    "demo.name: unknown demo `{}` (expected one of {})",
                    d.name,
                    crate::demos::DEMO_NAMES.join(", ")
                ));
            }
        }
        errors
    }
}

/// Parses and validates configuration text, collecting every problem found.
pub fn validate_config(raw: &str) -> Result<RunConfig, Vec<String>> {
    if raw.trim().is_empty() {
        return Err(vec!["missing command".into()]);
    }
    let value: serde_json::Value =
        serde_json::from_str(raw).map_err(|e| vec![format!("line {}, column {}: {e}", e.line(), e.column())])?;
    if value.get("command").is_none() {
        return Err(vec!["missing command".into()]);
    }
    let config: RunConfig = serde_json::from_str(raw).map_err(|e| vec![format!("{e}")])?;
    let errors = config.check();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_SOLVE: &str = r#"{
        "command": "solve",
        "solve": {
            "kernel": {"type": "normal-location", "sigma": 0.1},
            "x_grid": {"min": -1, "max": 2, "nodes": 301},
            "theta_grid": {"min": 0, "max": 1, "nodes": 101},
            "target": {"source": "density", "density": {"type": "beta", "a": 2, "b": 2}}
        }
    }"#;

    #[test]
    fn empty_input_is_missing_command() {
        assert_eq!(validate_config("").unwrap_err(), vec!["missing command".to_string()]);
        assert_eq!(validate_config("{}").unwrap_err(), vec!["missing command".to_string()]);
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = validate_config("{\n\"command\": \"solve\",,\n}").unwrap_err();
        assert!(err[0].starts_with("line 2"), "{err:?}");
    }

    #[test]
    fn defaults_are_materialized() {
        let cfg = validate_config(MINIMAL_SOLVE).unwrap();
        assert!(cfg.renormalize);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.stopping.tol_diff, 1e-5);
        assert_eq!(cfg.stopping.max_iter, 500);
        let echoed: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(echoed["renormalize"], true);
        assert_eq!(echoed["seed"], 0);
        assert_eq!(echoed["stopping"]["tol_diff"], 1e-5);
        assert_eq!(echoed["solve"]["transform"]["kind"], "none");
        assert_eq!(validate_config(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn all_errors_are_collected() {
        let raw = r#"{
            "command": "solve",
            "stopping": {"tol_diff": -1},
            "solve": {
                "kernel": {"type": "normal-location", "sigma": -0.1},
                "x_grid": {"min": 2, "max": 1, "nodes": 301},
                "theta_grid": {"min": 0, "max": 1, "nodes": 1},
                "target": {"source": "mixture-of-truth"},
                "transform": {"kind": "split", "t": 50}
            }
        }"#;
        let errors = validate_config(raw).unwrap_err();
        let joined = errors.join("\n");
        for needle in
            ["tol_diff", "solve.kernel.sigma", "solve.x_grid", "solve.theta_grid", "truth", "difference kernel"]
        {
            assert!(joined.contains(needle), "missing {needle} in {joined}");
        }
        assert_eq!(errors.len(), 6);
    }

    #[test]
    fn missing_section_and_unknown_names() {
        let errors = validate_config(r#"{"command": "fpt"}"#).unwrap_err();
        assert_eq!(errors, vec!["command `fpt` needs a `fpt` section".to_string()]);
        let errors = validate_config(r#"{"command": "demo", "demo": {"name": "nope"}}"#).unwrap_err();
        assert!(errors[0].contains("unknown demo"));
        let errors = validate_config(
            r#"{"command": "mixdens", "mixdens": {"data": {"source": "csv", "path": "/no/such/file.csv"},
                "kernel": {"type": "normal-location", "sigma": "auto"}}}"#,
        )
        .unwrap_err();
        assert!(errors[0].contains("does not exist"));
    }

    #[test]
    fn params_accept_numbers_and_auto() {
        let p: Param = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(p, Param::AUTO);
        let p: Param = serde_json::from_str("\"rule-of-thumb\"").unwrap();
        assert_eq!(p, Param::AUTO);
        let p: Param = serde_json::from_str("0.25").unwrap();
        assert_eq!(p.value(), Some(0.25));
        assert!(serde_json::from_str::<Param>("\"often\"").is_err());
    }

    #[test]
    fn auto_sigma_resolution() {
        let k = KernelConfig::Difference {
            plus: Box::new(KernelConfig::NormalLocation { sigma: Param::AUTO }),
            minus: Box::new(KernelConfig::Reflected {
                inner: Box::new(KernelConfig::NormalLocation { sigma: Param::AUTO }),
            }),
        };
        assert!(k.has_auto_sigma());
        let r = k.resolved(0.3);
        assert!(!r.has_auto_sigma());
        assert_eq!(r.build(None).unwrap(), KernelSpec::antisymmetric_normal(0.3));
    }
}

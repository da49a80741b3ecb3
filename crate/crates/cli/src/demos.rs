//! Named presets that expand into complete run configurations.

use anyhow::{anyhow, bail};
use fredholm_core::Density;

use crate::config::{
    BoundaryConfig, Command, DataConfig, DemoRequest, FptConfig, GridConfig, KernelConfig, McSettings, Method,
    MixdensConfig, Param, RunConfig, SimulationSettings, SolveConfig, StoppingConfig, TargetConfig, TransformConfig,
};

pub const DEMO_NAMES: [&str; 11] = [
    "pareto",
    "galaxy",
    "deconv-1",
    "deconv-2",
    "scale-1",
    "scale-2",
    "fpt-sqrt",
    "signed-1",
    "signed-2",
    "genkernel-1",
    "genkernel-2",
];

/// Demos that run without external input.
pub const SELF_CONTAINED_DEMOS: [&str; 10] = [
    "pareto",
    "deconv-1",
    "deconv-2",
    "scale-1",
    "scale-2",
    "fpt-sqrt",
    "signed-1",
    "signed-2",
    "genkernel-1",
    "genkernel-2",
];

pub const DEFAULT_SHIFT: f64 = 50.0;
pub const SCENARIO_SAMPLE_SIZE: usize = 300;

const SIGMA: f64 = 0.05;

fn location() -> KernelConfig {
    KernelConfig::NormalLocation { sigma: Param::Value(SIGMA) }
}

fn beta(a: f64, b: f64) -> (f64, Density) {
    (1.0, Density::beta(a, b))
}

fn neg_beta(a: f64, b: f64) -> (f64, Density) {
    (-1.0, Density::beta(a, b))
}

/// The true solution of a signed demo.
pub fn signed_truth(name: &str) -> Option<Density> {
    Some(match name {
        "signed-1" => Density::combination([beta(2.0, 5.0), neg_beta(4.0, 1.0)], 0.0),
        "signed-2" => Density::combination([beta(10.0, 1.0), neg_beta(1.0, 10.0)], 0.0),
        "genkernel-1" => Density::combination([beta(2.0, 3.0), neg_beta(3.0, 2.0)], 0.0),
        "genkernel-2" => Density::combination([beta(2.0, 7.0), beta(3.0, 4.0)], -1.0),
        _ => return None,
    })
}

/// Expands a demo into a full configuration whose command is the underlying
/// solver. The request itself is kept in the `demo` section.
pub fn demo_config(request: &DemoRequest) -> anyhow::Result<RunConfig> {
    let name = request.name.as_str();
    if request.t.is_some() && !(name.starts_with("signed") || name.starts_with("genkernel")) {
        bail!("--t only applies to the signed-* and genkernel-* demos");
    }
    if request.data.is_some() && name != "galaxy" {
        bail!("--data only applies to the galaxy demo");
    }
    let mut config = match name {
        "pareto" => {
            let mut c = RunConfig::new(Command::Solve);
            c.stopping = StoppingConfig::fixed(200);
            c.solve = Some(SolveConfig {
                kernel: KernelConfig::ExponentialRate,
                x_grid: GridConfig::uniform(0.0, 20.0, 4001),
                theta_grid: GridConfig::uniform(0.025, 50.0, 2001),
                target: TargetConfig::Density { density: Density::Pareto { a: 5.0 }, normalize: true },
                truth: Some(Density::Gamma { shape: 5.0, rate: 1.0 }),
                p0: Some(Density::HalfCauchy { scale: 1.0 }),
                transform: TransformConfig::None,
            });
            c
        }
        "galaxy" => {
            let path = request.data.clone().ok_or_else(|| anyhow!("demo galaxy needs --data <csv>"))?;
            let mut c = RunConfig::new(Command::Mixdens);
            c.stopping = StoppingConfig::fixed(25);
            c.mixdens = Some(MixdensConfig {
                data: DataConfig::Csv { path },
                kernel: KernelConfig::NormalLocation { sigma: Param::AUTO },
                bandwidth: Param::AUTO,
                sigma_factor: 0.5,
                theta_grid: None,
                x_grid: None,
                method: Method::Kde,
            });
            c
        }
        "deconv-1" | "deconv-2" | "scale-1" | "scale-2" => {
            let mut c = RunConfig::new(Command::Mixdens);
            let kernel = if name.starts_with("deconv") { location() } else { KernelConfig::NormalScale };
            c.mixdens = Some(MixdensConfig {
                data: DataConfig::Scenario { name: name.to_string(), n: SCENARIO_SAMPLE_SIZE },
                kernel,
                bandwidth: Param::AUTO,
                sigma_factor: 0.5,
                theta_grid: None,
                x_grid: None,
                method: Method::Kde,
            });
            c
        }
        "fpt-sqrt" => {
            let mut c = RunConfig::new(Command::Fpt);
            c.stopping = StoppingConfig::fixed(200);
            c.fpt = Some(FptConfig {
                a: 1.0,
                b: 0.1,
                boundary: BoundaryConfig::Sqrt,
                theta_grid: GridConfig::uniform(0.05, 50.0, 1000),
                p0: Density::Exponential { rate: 0.01 },
                mc: McSettings::default(),
                renormalize_output: false,
                simulate: Some(SimulationSettings { paths: 100_000, dt: 1e-3, t_max: 50.0, bridge_correction: true }),
            });
            c
        }
        "signed-1" | "signed-2" | "genkernel-1" | "genkernel-2" => {
            let t = request.t.unwrap_or(DEFAULT_SHIFT);
            let mut c = RunConfig::new(Command::Solve);
            let signed = name.starts_with("signed");
            c.stopping = StoppingConfig::fixed(if signed { 10 } else { 5 });
            let (kernel, x_grid, transform) = if signed {
                (location(), GridConfig::uniform(-0.5, 1.5, 801), TransformConfig::Shift { t: Param::Value(t) })
            } else {
                let kernel = KernelConfig::Difference {
                    plus: Box::new(location()),
                    minus: Box::new(KernelConfig::Reflected { inner: Box::new(location()) }),
                };
                (kernel, GridConfig::uniform(-1.5, 1.5, 1201), TransformConfig::Split { t: Param::Value(t) })
            };
            c.solve = Some(SolveConfig {
                kernel,
                x_grid,
                theta_grid: GridConfig::uniform(0.0, 1.0, 401),
                target: TargetConfig::MixtureOfTruth,
                truth: signed_truth(name),
                p0: None,
                transform,
            });
            c
        }
        other => bail!("unknown demo `{other}` (expected one of {})", DEMO_NAMES.join(", ")),
    };
    config.demo = Some(request.clone());
    Ok(config)
}

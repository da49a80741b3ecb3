//! Command-line arguments and their merge into a run configuration.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::config::{
    validate_config, Command, DataConfig, DemoRequest, KernelConfig, Method, MixdensConfig, Param, RunConfig,
    TransformConfig,
};
use crate::ConfigErrors;

#[derive(Debug, Parser)]
#[command(name = "fredholm-kit", version, about = "Multiplicative solver for Fredholm equations of the first kind")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Solve f = ∫ k p dθ for a configured kernel and right-hand side.
    Solve(Overrides),
    /// Estimate a mixing density from observations.
    Mixdens(Overrides),
    /// Hitting-time density of Brownian motion for a boundary a + b·h(t).
    Fpt(Overrides),
    /// Run a named preset.
    Demo {
        /// One of the names printed by `--list`.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol_diff: Option<f64>,
    #[arg(long)]
    pub tol_div: Option<f64>,
    /// Shift for the shift and split transforms.
    #[arg(long)]
    pub t: Option<f64>,
    /// Observations CSV (first column).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// exponential-rate, normal-location or normal-scale.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Location kernel sd, or `auto`.
    #[arg(long, value_parser = parse_param)]
    pub sigma: Option<Param>,
    /// KDE bandwidth, or `auto`.
    #[arg(long, value_parser = parse_param)]
    pub bandwidth: Option<Param>,
    /// kde or em.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Scenario sample size (mixdens) or Monte Carlo samples per iteration (fpt).
    #[arg(long)]
    pub n: Option<usize>,
    /// Simulated paths for the fpt cross-check.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Skip the fpt simulation.
    #[arg(long)]
    pub no_simulate: bool,
}

pub fn parse_param(s: &str) -> Result<Param, String> {
    match s {
        "auto" | "rule-of-thumb" => Ok(Param::AUTO),
        _ => s.parse::<f64>().map(Param::Value).map_err(|_| format!("expected a number or `auto`, got `{s}`")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "kde" => Ok(Method::Kde),
        "em" => Ok(Method::Em),
        _ => Err(format!("expected `kde` or `em`, got `{s}`")),
    }
}

fn kernel_from_name(name: &str, sigma: Option<Param>) -> anyhow::Result<KernelConfig> {
    Ok(match name {
        "exponential-rate" => KernelConfig::ExponentialRate,
        "normal-location" => KernelConfig::NormalLocation { sigma: sigma.unwrap_or(Param::AUTO) },
        "normal-scale" => KernelConfig::NormalScale,
        other => bail!("unknown kernel `{other}` (expected exponential-rate, normal-location or normal-scale)"),
    })
}

pub fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    validate_config(&raw).map_err(|errors| ConfigErrors(errors).into())
}

/// Builds the configuration for one invocation: the file (or a flag-only
/// skeleton), demo expansion, then the flag overrides.
pub fn prepare(command: Command, demo_name: Option<&str>, o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut config = match &o.config {
        Some(path) => {
            let c = read_config(path)?;
            let compatible = c.command == command || (command == Command::Demo && c.demo.is_some());
            if !compatible {
                bail!("{} holds a `{}` configuration, not `{}`", path.display(), c.command.as_str(), command.as_str());
            }
            if demo_name.is_some() {
                bail!("give either a demo name or --config, not both");
            }
            c
        }
        None => skeleton(command, demo_name, o)?,
    };
    if config.command == Command::Demo {
        let request = config.demo.as_mut().expect("demo skeleton");
        if let Some(t) = o.t {
            request.t = Some(t);
        }
        if let Some(data) = &o.data {
            request.data = Some(data.clone());
        }
        let seed = config.seed;
        config = crate::demos::demo_config(request)?;
        config.seed = seed;
        apply(&mut config, &Overrides { t: None, data: None, ..o.clone() })?;
    } else {
        apply(&mut config, o)?;
    }
    let errors = config.check();
    if !errors.is_empty() {
        return Err(ConfigErrors(errors).into());
    }
    Ok(config)
}

fn skeleton(command: Command, demo_name: Option<&str>, o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut c = RunConfig::new(command);
    match command {
        Command::Demo => {
            let name = demo_name.ok_or_else(|| anyhow!("demo needs a name; see `fredholm-kit demo --list`"))?;
            c.demo = Some(DemoRequest { name: name.to_string(), data: None, t: None });
        }
        Command::Mixdens => {
            let path = o.data.clone().ok_or_else(|| anyhow!("mixdens needs --config or --data"))?;
            let kernel = kernel_from_name(o.kernel.as_deref().unwrap_or("normal-location"), o.sigma)?;
            c.mixdens = Some(MixdensConfig {
                data: DataConfig::Csv { path },
                kernel,
                bandwidth: Param::AUTO,
                sigma_factor: 0.5,
                theta_grid: None,
                x_grid: None,
                method: Method::Kde,
            });
        }
        Command::Solve | Command::Fpt => bail!("{} needs --config", command.as_str()),
    }
    Ok(c)
}

/// Applies flag overrides to a concrete (non-demo) configuration.
pub fn apply(config: &mut RunConfig, o: &Overrides) -> anyhow::Result<()> {
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(n) = o.max_iter {
        config.stopping.max_iter = n;
    }
    if let Some(v) = o.tol_diff {
        config.stopping.tol_diff = v;
    }
    if let Some(v) = o.tol_div {
        config.stopping.tol_div = v;
    }
    if let Some(out) = &o.out {
        config.out = Some(out.clone());
    }
    if let Some(t) = o.t {
        let solve = config.solve.as_mut().ok_or_else(|| anyhow!("--t applies to solve runs"))?;
        solve.transform = match solve.transform {
            TransformConfig::Shift { .. } => TransformConfig::Shift { t: Param::Value(t) },
            TransformConfig::Split { .. } => TransformConfig::Split { t: Param::Value(t) },
            _ => bail!("--t needs a shift or split transform"),
        };
    }
    if let Some(m) = config.mixdens.as_mut() {
        if let Some(data) = &o.data {
            m.data = DataConfig::Csv { path: data.clone() };
        }
        if let Some(name) = &o.kernel {
            m.kernel = kernel_from_name(name, o.sigma)?;
        } else if let Some(sigma) = o.sigma {
            match &mut m.kernel {
                KernelConfig::NormalLocation { sigma: s } => *s = sigma,
                _ => bail!("--sigma needs a normal-location kernel"),
            }
        }
        if let Some(h) = o.bandwidth {
            m.bandwidth = h;
        }
        if let Some(method) = o.method {
            m.method = method;
        }
        if let Some(n) = o.n {
            match &mut m.data {
                DataConfig::Scenario { n: size, .. } => *size = n,
                DataConfig::Csv { .. } => bail!("--n sets the scenario sample size"),
            }
        }
    } else if o.kernel.is_some() || o.sigma.is_some() || o.bandwidth.is_some() || o.method.is_some() || o.data.is_some()
    {
        bail!("--data, --kernel, --sigma, --bandwidth and --method apply to mixdens runs");
    }
    if let Some(f) = config.fpt.as_mut() {
        if let Some(n) = o.n {
            f.mc.n = n;
        }
        if o.no_simulate {
            f.simulate = None;
        }
        if let Some(paths) = o.paths {
            f.simulate.as_mut().ok_or_else(|| anyhow!("--paths needs a simulate section"))?.paths = paths;
        }
    } else if o.paths.is_some() || o.no_simulate || (o.n.is_some() && config.mixdens.is_none()) {
        bail!("--n, --paths and --no-simulate apply to mixdens or fpt runs");
    }
    Ok(())
}

/// Machine-readable error report.
pub fn error_json(error: &anyhow::Error) -> serde_json::Value {
    match error.downcast_ref::<ConfigErrors>() {
        Some(ConfigErrors(list)) => serde_json::json!({ "error": "config", "messages": list }),
        None => serde_json::json!({
            "error": "run",
            "messages": error.chain().map(|e| e.to_string()).collect::<Vec<_>>(),
        }),
    }
}

//! Resolution of defaults, execution and output writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use fredholm_core::fpt::{self, BoundarySpec, FptProblem, McConfig, SimulationConfig};
use fredholm_core::mixing::{self, Bandwidth, KdeConfig, MixingScenario, SampleData};
use fredholm_core::solver::{mixture, solve_with};
use fredholm_core::transforms::{self, Shift};
use fredholm_core::{
    l1_distance, normalize_to_density, Density, Grid1D, GridFunction, KernelMatrix, KernelSpec, SolverOptions,
    SolverResult, Termination,
};
use serde::Serialize;

use crate::config::{
    Command, DataConfig, GridConfig, KernelConfig, Method, MixdensConfig, Param, RunConfig, SolveConfig, TargetConfig,
    TransformConfig,
};
use crate::demos::demo_config;

/// Contents of `diagnostics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demo: Option<String>,
    pub iterations: usize,
    pub termination: Termination,
    pub divergence_history: Vec<f64>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    pub mass_diagnostics: BTreeMap<String, f64>,
    pub extras: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub resolved: RunConfig,
    pub diagnostics: Diagnostics,
    /// Tabulated results, written as `<name>.csv`.
    pub functions: BTreeMap<String, GridFunction>,
    /// Other CSV files, by file name.
    pub tables: BTreeMap<String, String>,
}

impl RunOutput {
    pub fn function(&self, name: &str) -> Option<&GridFunction> {
        self.functions.get(name)
    }

    /// Every CSV file this run writes, by file name.
    pub fn csv_files(&self) -> BTreeMap<String, String> {
        let mut files: BTreeMap<String, String> =
            self.functions.iter().map(|(name, f)| (format!("{name}.csv"), f.to_csv_string())).collect();
        files.extend(self.tables.iter().map(|(k, v)| (k.clone(), v.clone())));
        files
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut files = self.csv_files();
        files.insert("run_config.json".into(), self.resolved.to_json());
        let mut diagnostics = serde_json::to_string_pretty(&self.diagnostics)?;
        diagnostics.push('\n');
        files.insert("diagnostics.json".into(), diagnostics);
        for (name, contents) in files {
            let path = dir.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn tabulate(grid: &Arc<Grid1D>, density: &Density) -> GridFunction {
    GridFunction::from_fn(grid.clone(), |x| density.eval(x))
}

/// The scenario behind a `scenario` data source.
fn scenario(data: &DataConfig) -> anyhow::Result<Option<MixingScenario>> {
    Ok(match data {
        DataConfig::Scenario { name, n } => Some(MixingScenario::builtin(name, *n)?),
        DataConfig::Csv { .. } => None,
    })
}

fn load_data(data: &DataConfig, seed: u64) -> anyhow::Result<(SampleData, Option<MixingScenario>)> {
    match data {
        DataConfig::Csv { path } => {
            let sample = SampleData::read_csv(path).with_context(|| format!("reading data {}", path.display()))?;
            Ok((sample, None))
        }
        DataConfig::Scenario { .. } => {
            let s = scenario(data)?.expect("scenario source");
            Ok((mixing::sample_scenario(&s, seed)?, Some(s)))
        }
    }
}

fn grid_config(grid: &Grid1D) -> GridConfig {
    GridConfig::uniform(grid.min(), grid.max(), grid.len())
}

/// Nodes of the default θ-grid when the data do not come from a scenario.
pub const DEFAULT_THETA_NODES: usize = 401;

/// Materializes every default and `auto` value. Resolving a resolved
/// configuration returns it unchanged.
pub fn resolve(config: &RunConfig) -> anyhow::Result<RunConfig> {
    let mut out = match config.command {
        Command::Demo => {
            let request = config.demo.as_ref().ok_or_else(|| anyhow!("command `demo` needs a `demo` section"))?;
            let mut expanded = demo_config(request)?;
            expanded.seed = config.seed;
            expanded.out = config.out.clone();
            expanded
        }
        _ => config.clone(),
    };
    let errors = out.check();
    if !errors.is_empty() {
        return Err(crate::ConfigErrors(errors).into());
    }
    match out.command {
        Command::Solve => {
            let c = out.solve.as_mut().expect("checked");
            let theta = c.theta_grid.build()?;
            if c.p0.is_none() {
                c.p0 = Some(Density::Uniform { min: theta.min(), max: theta.max() });
            }
            if let TransformConfig::Shift { t: Param::Keyword(_) } | TransformConfig::Split { t: Param::Keyword(_) } =
                c.transform
            {
                let x = Arc::new(c.x_grid.build()?);
                let kernel = c.kernel.build(None)?;
                let f = target(c, &kernel, &x, &Arc::new(theta))?;
                let t = Param::Value(Shift::Auto.resolve(&f)?);
                c.transform = match c.transform {
                    TransformConfig::Shift { .. } => TransformConfig::Shift { t },
                    _ => TransformConfig::Split { t },
                };
            }
        }
        Command::Mixdens => {
            let seed = out.seed;
            let c = out.mixdens.as_mut().expect("checked");
            resolve_mixdens(c, seed)?;
        }
        Command::Fpt | Command::Demo => {}
    }
    Ok(out)
}

fn resolve_mixdens(c: &mut MixdensConfig, seed: u64) -> anyhow::Result<()> {
    if let DataConfig::Csv { path } = &c.data {
        let canonical = std::fs::canonicalize(path).with_context(|| format!("resolving {}", path.display()))?;
        c.data = DataConfig::Csv { path: canonical };
    }
    let (data, scenario) = load_data(&c.data, seed)?;
    let h = match c.bandwidth {
        Param::Value(h) => h,
        Param::Keyword(_) => mixing::rule_of_thumb_bandwidth(&data)?,
    };
    c.bandwidth = Param::Value(h);
    let sigma = c.sigma_factor * h;
    if c.kernel.has_auto_sigma() {
        c.kernel = c.kernel.resolved(sigma);
    }
    let location = match &c.kernel {
        KernelConfig::NormalLocation { sigma } => Some(sigma.value().expect("resolved")),
        _ => None,
    };
    if c.theta_grid.is_none() {
        c.theta_grid = Some(match (&scenario, location) {
            (Some(s), _) => grid_config(&s.theta_grid),
            (None, Some(_)) => GridConfig::uniform(data.min() - 3.0 * h, data.max() + 3.0 * h, DEFAULT_THETA_NODES),
            (None, None) => bail!("mixdens.theta_grid is required for this kernel with csv data"),
        });
    }
    if c.x_grid.is_none() {
        c.x_grid = Some(match (&scenario, location) {
            (Some(s), _) => grid_config(&s.x_grid),
            (None, Some(sigma)) => {
                let theta = c.theta_grid.expect("set above");
                grid_config(&mixing::default_x_grid(&data, h, sigma, (theta.min, theta.max), 801)?)
            }
            (None, None) => grid_config(&mixing::default_x_grid(&data, h, 0.0, (data.min(), data.max()), 1601)?),
        });
    }
    Ok(())
}

/// The right-hand side tabulated on the x-grid.
fn target(c: &SolveConfig, kernel: &KernelSpec, x: &Arc<Grid1D>, theta: &Arc<Grid1D>) -> anyhow::Result<GridFunction> {
    Ok(match &c.target {
        TargetConfig::Density { density, normalize } => {
            let f = tabulate(x, density);
            if *normalize {
                normalize_to_density(&f)?
            } else {
                f
            }
        }
        TargetConfig::Csv { path } => {
            let g = GridFunction::read_csv(path).with_context(|| format!("reading target {}", path.display()))?;
            GridFunction::from_fn(x.clone(), |v| g.interpolate(v))
        }
        TargetConfig::MixtureOfTruth => {
            let truth = c.truth.as_ref().ok_or_else(|| anyhow!("mixture-of-truth needs a truth"))?;
            let k = KernelMatrix::build(kernel, x.clone(), theta.clone())?;
            mixture(&k, &tabulate(theta, truth))?
        }
    })
}

struct Collector {
    functions: BTreeMap<String, GridFunction>,
    tables: BTreeMap<String, String>,
    timings: BTreeMap<String, f64>,
    mass: BTreeMap<String, f64>,
    extras: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Self {
            functions: BTreeMap::new(),
            tables: BTreeMap::new(),
            timings: BTreeMap::new(),
            mass: BTreeMap::new(),
            extras: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, f: GridFunction) {
        self.functions.insert(name.to_string(), f);
    }

    fn finish(self, resolved: RunConfig, result: &SolverResult, started: Instant) -> RunOutput {
        let mut timings = self.timings;
        timings.insert("total".into(), ms(started));
        let mut warnings = result.warnings.clone();
        warnings.extend(self.warnings);
        let diagnostics = Diagnostics {
            command: resolved.command.as_str().to_string(),
            demo: resolved.demo.as_ref().map(|d| d.name.clone()),
            iterations: result.iterations,
            termination: result.termination,
            divergence_history: result.divergence_history.clone(),
            warnings,
            timings_ms: timings,
            mass_diagnostics: self.mass,
            extras: self.extras,
        };
        RunOutput { resolved, diagnostics, functions: self.functions, tables: self.tables }
    }
}

/// Resolves and runs a configuration without touching the output directory.
pub fn execute(config: &RunConfig) -> anyhow::Result<RunOutput> {
    let started = Instant::now();
    let resolved = resolve(config)?;
    match resolved.command {
        Command::Solve => run_solve(resolved, started),
        Command::Mixdens => run_mixdens(resolved, started),
        Command::Fpt => run_fpt(resolved, started),
        Command::Demo => unreachable!("demos are expanded by resolve"),
    }
}

/// Runs a configuration and writes its artifacts to `dir`.
pub fn run(config: &RunConfig, dir: &Path) -> anyhow::Result<RunOutput> {
    let output = execute(config)?;
    output.write(dir)?;
    Ok(output)
}

/// The output directory: explicit, then configured, then `runs/<name>`.
pub fn output_dir(config: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(dir) = explicit {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.out {
        return dir.clone();
    }
    let name = match &config.demo {
        Some(d) => d.name.clone(),
        None => config.command.as_str().to_string(),
    };
    Path::new("runs").join(name)
}

fn run_solve(resolved: RunConfig, started: Instant) -> anyhow::Result<RunOutput> {
    let c = resolved.solve.clone().expect("checked");
    let rule = resolved.stopping.rule();
    let options = SolverOptions { renormalize: resolved.renormalize };
    let mut out = Collector::new();

    let t = Instant::now();
    let x = Arc::new(c.x_grid.build()?);
    let theta = Arc::new(c.theta_grid.build()?);
    let kernel = c.kernel.build(None)?;
    let f = target(&c, &kernel, &x, &theta)?;
    let p0 = normalize_to_density(&tabulate(&theta, c.p0.as_ref().expect("resolved")))?;
    let truth = c.truth.as_ref().map(|d| tabulate(&theta, d));
    out.timings.insert("setup".into(), ms(t));

    let t = Instant::now();
    let (result, p, fitted) = match c.transform {
        TransformConfig::None => {
            let k = Arc::new(KernelMatrix::build(&kernel, x.clone(), theta.clone())?);
            let problem = fredholm_core::ProblemSpec::new(k, f.clone(), p0)?;
            let result = solve_with(&problem, &rule, options)?;
            let (p, fitted) = (result.p_final.clone(), result.f_final.clone());
            (result, p, fitted)
        }
        TransformConfig::NormalizeKernel | TransformConfig::Shift { .. } => {
            let k = KernelMatrix::build(&kernel, x.clone(), theta.clone())?;
            let tp = match c.transform {
                TransformConfig::NormalizeKernel => transforms::normalize_kernel_transform(&k, &f, &p0)?,
                TransformConfig::Shift { t } => {
                    transforms::shift_transform(&k, &f, Shift::Fixed(t.value().expect("resolved")))?
                }
                _ => unreachable!(),
            };
            let result = solve_with(&tp.canonical, &rule, options)?;
            let recovered = transforms::recover(&tp, &result)?;
            out.warnings.extend(recovered.warnings);
            out.extras.insert("shift".into(), tp.shift);
            out.extras.insert("mass_scale".into(), tp.mass_scale);
            out.put("canonical_p", result.p_final.clone());
            let fitted = mixture(&k, &recovered.p)?;
            (result, recovered.p, fitted)
        }
        TransformConfig::Split { t } => {
            let KernelSpec::Difference { plus, minus } = &kernel else {
                bail!("split needs a difference kernel");
            };
            let kp = KernelMatrix::build(plus, x.clone(), theta.clone())?;
            let km = KernelMatrix::build(minus, x.clone(), theta.clone())?;
            let tp = transforms::split_kernel_transform(&kp, &km, &f, Shift::Fixed(t.value().expect("resolved")))?;
            let result = solve_with(&tp.canonical, &rule, options)?;
            let recovered = transforms::recover(&tp, &result)?;
            out.warnings.extend(recovered.warnings);
            out.extras.insert("shift".into(), tp.shift);
            out.extras.insert("mass_scale".into(), tp.mass_scale);
            if let Some(d) = recovered.discrepancy_l1 {
                out.extras.insert("split_discrepancy_l1".into(), d);
            }
            out.put("canonical_p", result.p_final.clone());
            let plus_part = mixture(&kp, &recovered.p)?;
            let minus_part = mixture(&km, &recovered.p)?;
            let fitted = plus_part
                .with_values(plus_part.values().iter().zip(minus_part.values()).map(|(a, b)| a - b).collect())?;
            (result, recovered.p, fitted)
        }
    };
    out.timings.insert("solve".into(), ms(t));

    out.mass.insert("p_mass".into(), p.integral());
    out.mass.insert("target_mass".into(), f.integral());
    out.mass.insert("mixture_mass".into(), fitted.integral());
    out.mass.insert("l1_mixture_target".into(), l1_distance(&fitted, &f)?);
    if let Some(truth) = truth {
        out.mass.insert("l1_to_truth".into(), l1_distance(&p, &truth)?);
        out.put("truth", truth);
    }
    out.put("p", p);
    out.put("mixture", fitted);
    out.put("target", f);
    Ok(out.finish(resolved, &result, started))
}

fn run_mixdens(resolved: RunConfig, started: Instant) -> anyhow::Result<RunOutput> {
    let c = resolved.mixdens.clone().expect("checked");
    let rule = resolved.stopping.rule();
    let options = SolverOptions { renormalize: resolved.renormalize };
    let mut out = Collector::new();

    let t = Instant::now();
    let (data, scenario) = load_data(&c.data, resolved.seed)?;
    let h = c.bandwidth.value().expect("resolved");
    let kernel = c.kernel.build(None)?;
    let theta = Arc::new(c.theta_grid.expect("resolved").build()?);
    let x = Arc::new(c.x_grid.expect("resolved").build()?);
    out.timings.insert("setup".into(), ms(t));

    let t = Instant::now();
    let (result, kde) = match c.method {
        Method::Kde => {
            let config = KdeConfig { bandwidth: Bandwidth::Fixed(h), x_grid: x.clone() };
            let fit = mixing::estimate_mixing_with(&data, &kernel, theta.clone(), &config, &rule, options)?;
            (fit.result, fit.kde)
        }
        Method::Em => {
            let result = mixing::estimate_mixing_em(&data, &kernel, theta.clone(), x.clone(), &rule, options)?;
            (result, normalize_to_density(&mixing::kde_with_bandwidth(&data, h, x.clone()))?)
        }
    };
    out.timings.insert("solve".into(), ms(t));

    out.extras.insert("bandwidth".into(), h);
    out.extras.insert("n".into(), data.len() as f64);
    if let KernelSpec::NormalLocation { sigma } = kernel {
        out.extras.insert("sigma".into(), sigma);
    }
    out.mass.insert("p_mass".into(), result.p_final.integral());
    out.mass.insert("mixture_mass".into(), result.f_final.integral());
    out.mass.insert("l1_mixture_kde".into(), l1_distance(&result.f_final, &kde)?);
    if let Some(s) = scenario {
        if fredholm_core::grid::same_grid(&s.theta_grid, &theta) {
            out.mass.insert("l1_to_truth".into(), l1_distance(&result.p_final, &s.true_mixing)?);
        }
        out.put("truth_mixture", s.true_mixture()?);
        out.put("truth_mixing", s.true_mixing);
    }
    let mut sample = String::from("value\n");
    for v in data.observations() {
        sample.push_str(&format!("{v:.16e}\n"));
    }
    out.tables.insert("data.csv".into(), sample);
    out.put("p", result.p_final.clone());
    out.put("mixture", result.f_final.clone());
    out.put("kde", kde);
    Ok(out.finish(resolved, &result, started))
}

fn run_fpt(resolved: RunConfig, started: Instant) -> anyhow::Result<RunOutput> {
    let c = resolved.fpt.clone().expect("checked");
    let rule = resolved.stopping.rule();
    let mut out = Collector::new();

    let boundary = BoundarySpec::new(c.a, c.b, c.boundary.shape()?)?;
    let theta = Arc::new(c.theta_grid.build()?);
    let p0 = normalize_to_density(&tabulate(&theta, &c.p0))?;
    let mc = McConfig { n: c.mc.n, seed: resolved.seed, resample_each_iteration: c.mc.resample_each_iteration };
    let problem = FptProblem::new(boundary.clone(), theta.clone(), mc, p0)?;

    let t = Instant::now();
    let result = fpt::solve_fpt(&problem, &rule)?;
    out.timings.insert("solve".into(), ms(t));
    out.warnings.extend(result.warnings.iter().cloned());

    out.mass.insert("p_mass".into(), result.mass);
    if c.b == 0.0 || matches!(boundary.shape, fpt::BoundaryShape::Zero) {
        let levy = tabulate(&theta, &Density::Levy { a: c.a });
        out.mass.insert("l1_to_levy".into(), l1_distance(&result.p, &levy)?);
        out.put("levy", levy);
    }
    if let Some(sim) = c.simulate {
        let t = Instant::now();
        let config = SimulationConfig {
            paths: sim.paths,
            dt: sim.dt,
            t_max: sim.t_max,
            seed: resolved.seed,
            bridge_correction: sim.bridge_correction,
        };
        let simulation = fpt::simulate_fpt(&boundary, &config)?;
        out.timings.insert("simulate".into(), ms(t));
        out.extras.insert("sup_cdf_distance".into(), simulation.sup_distance(fpt::grid_cdf(&result.p)));
        out.extras.insert("censored_fraction".into(), 1.0 - simulation.correction_factor());
        out.warnings.extend(simulation.warnings.iter().cloned());
        out.tables.insert("simulation.csv".into(), simulation.to_csv_string());
    }
    let target_grid = result.tilde.f_final.grid().clone();
    let rhs = fpt::fpt_rhs(&boundary);
    out.put("target", normalize_to_density(&GridFunction::from_fn(target_grid, |x| rhs.pdf(x)))?);
    out.put("mixture", result.tilde.f_final.clone());
    out.put("tilde_p", result.tilde.p_final.clone());
    if c.renormalize_output {
        out.put("p_normalized", normalize_to_density(&result.p)?);
    }
    out.put("p", result.p.clone());
    Ok(out.finish(resolved, &result.tilde, started))
}

//! Mixing-density estimation from data: Gaussian kernel density estimates,
//! the plug-in solve, the EM alternative and simulation scenarios.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::grid::{normalize_to_density, Grid1D, GridFunction};
use crate::kernels::{KernelMatrix, KernelSpec};
use crate::solver::{
    solve_empirical, solve_with, ObservationMatrix, ProblemSpec, SolverOptions, SolverResult, StoppingRule,
};
use crate::special::normal_pdf;

/// A univariate sample with at least two finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleData {
    observations: Vec<f64>,
}

impl SampleData {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 observations, got {}", observations.len())));
        }
        if let Some(i) = observations.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("observation {i} is not finite")));
        }
        Ok(Self { observations })
    }

    /// One value per line, optionally preceded by a header; only the first
    /// comma-separated column is read.
    pub fn from_csv_reader(reader: impl std::io::BufRead) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let cell = line.split(',').next().unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if lineno == 0 => continue,
                Err(_) => return Err(Error::Parse { line: lineno + 1, message: format!("cannot parse `{cell}`") }),
            }
        }
        Self::new(values)
    }

    pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.observations.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.observations.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.observations.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.observations.iter().map(|x| (x - m).powi(2)).sum();
        (ss / (self.len() - 1) as f64).sqrt()
    }

    /// Quantile by linear interpolation between order statistics
    /// (Hyndman–Fan type 7).
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.observations.clone();
        sorted.sort_by(f64::total_cmp);
        let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }

    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    RuleOfThumb,
}

impl Bandwidth {
    pub fn resolve(&self, data: &SampleData) -> Result<f64> {
        match *self {
            Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
            Bandwidth::Fixed(h) => Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
            Bandwidth::RuleOfThumb => rule_of_thumb_bandwidth(data),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    pub x_grid: Arc<Grid1D>,
}

/// 0.9·min(sd, IQR/1.34)·n^{−1/5}; falls back to sd when the IQR is zero.
pub fn rule_of_thumb_bandwidth(data: &SampleData) -> Result<f64> {
    let sd = data.sd();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let iqr = data.iqr() / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    Ok(0.9 * spread * (data.len() as f64).powf(-0.2))
}

/// f^h(x) = (nh)^{−1}·Σ φ((x − X_i)/h) on the configured grid, not
/// renormalized.
pub fn kde(data: &SampleData, config: &KdeConfig) -> Result<GridFunction> {
    let h = config.bandwidth.resolve(data)?;
    Ok(kde_with_bandwidth(data, h, config.x_grid.clone()))
}

pub fn kde_with_bandwidth(data: &SampleData, h: f64, x_grid: Arc<Grid1D>) -> GridFunction {
    let scale = 1.0 / (data.len() as f64 * h);
    GridFunction::from_fn(x_grid, |x| scale * data.observations.iter().map(|xi| normal_pdf((x - xi) / h)).sum::<f64>())
}

/// Uniform x-grid covering the data (and `[cover_min, cover_max]`) with a
/// margin of 4·max(h, spread) + 0.1 on each side.
pub fn default_x_grid(data: &SampleData, h: f64, spread: f64, cover: (f64, f64), nodes: usize) -> Result<Grid1D> {
    let pad = 4.0 * h.max(spread) + 0.1;
    Grid1D::uniform(data.min().min(cover.0) - pad, data.max().max(cover.1) + pad, nodes)
}

#[derive(Debug, Clone)]
pub struct MixingFit {
    pub result: SolverResult,
    /// The kernel estimate used as target, renormalized on the grid.
    pub kde: GridFunction,
    pub bandwidth: f64,
}

/// Kernel estimate of f, then the multiplicative solve from a uniform start.
pub fn estimate_mixing(
    data: &SampleData,
    kernel: &KernelSpec,
    theta_grid: Arc<Grid1D>,
    kde_config: &KdeConfig,
    rule: &StoppingRule,
) -> Result<MixingFit> {
    estimate_mixing_with(data, kernel, theta_grid, kde_config, rule, SolverOptions::default())
}

pub fn estimate_mixing_with(
    data: &SampleData,
    kernel: &KernelSpec,
    theta_grid: Arc<Grid1D>,
    kde_config: &KdeConfig,
    rule: &StoppingRule,
    options: SolverOptions,
) -> Result<MixingFit> {
    let bandwidth = kde_config.bandwidth.resolve(data)?;
    let f = normalize_to_density(&kde_with_bandwidth(data, bandwidth, kde_config.x_grid.clone()))?;
    let k = Arc::new(KernelMatrix::build(kernel, kde_config.x_grid.clone(), theta_grid.clone())?);
    let problem = ProblemSpec::new(k, f.clone(), GridFunction::uniform_density(theta_grid))?;
    let result = solve_with(&problem, rule, options)?;
    Ok(MixingFit { result, kde: f, bandwidth })
}

/// EM on the observations directly; the fitted mixture is tabulated on
/// `x_grid` for output.
pub fn estimate_mixing_em(
    data: &SampleData,
    kernel: &KernelSpec,
    theta_grid: Arc<Grid1D>,
    x_grid: Arc<Grid1D>,
    rule: &StoppingRule,
    options: SolverOptions,
) -> Result<SolverResult> {
    let obs = ObservationMatrix::build(kernel, data.observations(), theta_grid.clone())?;
    let display = KernelMatrix::build(kernel, x_grid, theta_grid.clone())?;
    solve_empirical(&obs, &display, GridFunction::uniform_density(theta_grid), rule, options)
}

/// Inverse CDF of a tabulated density, treating it as piecewise linear
/// between nodes. `u` is in [0, 1].
pub fn inverse_cdf(p: &GridFunction, u: f64) -> f64 {
    let nodes = p.grid().nodes();
    let values = p.values();
    let cum = p.cumulative();
    let target = u.clamp(0.0, 1.0) * cum[cum.len() - 1];
    let k = cum.partition_point(|&c| c <= target).clamp(1, cum.len() - 1) - 1;
    let r = target - cum[k];
    let dx = nodes[k + 1] - nodes[k];
    let (a, b) = ((values[k + 1] - values[k]) / (2.0 * dx), values[k]);
    // solves a·s² + b·s = r in a cancellation-free form
    let disc = (b * b + 4.0 * a * r).max(0.0);
    let s = if b + disc.sqrt() > 0.0 { 2.0 * r / (b + disc.sqrt()) } else { 0.0 };
    (nodes[k] + s.clamp(0.0, dx)).min(nodes[k + 1])
}

#[derive(Debug, Clone)]
pub struct MixingScenario {
    pub name: String,
    pub kernel: KernelSpec,
    pub true_mixing: GridFunction,
    pub n: usize,
    pub theta_grid: Arc<Grid1D>,
    pub x_grid: Arc<Grid1D>,
}

pub const SCENARIO_NAMES: [&str; 4] = ["deconv-1", "deconv-2", "scale-1", "scale-2"];

impl MixingScenario {
    pub fn new(
        name: impl Into<String>,
        kernel: KernelSpec,
        truth: &Density,
        n: usize,
        theta_grid: Arc<Grid1D>,
        x_grid: Arc<Grid1D>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("scenario sample size must be at least 2, got {n}")));
        }
        let true_mixing = normalize_to_density(&GridFunction::from_fn(theta_grid.clone(), |t| truth.eval(t)))?;
        Ok(Self { name: name.into(), kernel, true_mixing, n, theta_grid, x_grid })
    }

    /// The built-in scenarios: location deconvolution with σ = 0.05 and a
    /// smooth or bimodal truth, and normal scale mixtures with an
    /// inverse-gamma or exponential truth.
    pub fn builtin(name: &str, n: usize) -> Result<Self> {
        let unit = || Grid1D::uniform(0.0, 1.0, 401).map(Arc::new);
        let positive = || Grid1D::uniform(0.01, 10.0, 401).map(Arc::new);
        let location = KernelSpec::NormalLocation { sigma: 0.05 };
        match name {
            "deconv-1" => Self::new(
                name,
                location,
                &Density::beta(5.0, 5.0),
                n,
                unit()?,
                Arc::new(Grid1D::uniform(-0.5, 1.5, 801)?),
            ),
            "deconv-2" => Self::new(
                name,
                location,
                &Density::combination(
                    [(1.0, Density::Normal { mean: 0.3, sd: 0.1 }), (2.0, Density::Normal { mean: 0.7, sd: 0.1 })],
                    0.0,
                ),
                n,
                unit()?,
                Arc::new(Grid1D::uniform(-0.5, 1.5, 801)?),
            ),
            "scale-1" => Self::new(
                name,
                KernelSpec::NormalScale,
                &Density::InverseGamma { shape: 2.0, scale: 1.0 },
                n,
                positive()?,
                Arc::new(Grid1D::uniform(-16.0, 16.0, 1601)?),
            ),
            "scale-2" => Self::new(
                name,
                KernelSpec::NormalScale,
                &Density::Exponential { rate: 5.0 },
                n,
                positive()?,
                Arc::new(Grid1D::uniform(-16.0, 16.0, 1601)?),
            ),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario `{other}`; expected one of {}",
                SCENARIO_NAMES.join(", ")
            ))),
        }
    }

    /// The mixture ∫ k(·, θ) p(θ) dθ of the true mixing density on the
    /// scenario x-grid.
    pub fn true_mixture(&self) -> Result<GridFunction> {
        let k = KernelMatrix::build(&self.kernel, self.x_grid.clone(), self.theta_grid.clone())?;
        crate::solver::mixture(&k, &self.true_mixing)
    }
}

/// θ_i by inverse CDF of the tabulated truth, then X_i from k(·, θ_i). All
/// draws come from one ChaCha stream seeded with `seed`.
pub fn sample_scenario(scenario: &MixingScenario, seed: u64) -> Result<SampleData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let theta = inverse_cdf(&scenario.true_mixing, rng.gen::<f64>());
        out.push(scenario.kernel.sample(theta, &mut rng)?);
    }
    SampleData::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l1_distance;
    use crate::solver::{mixture, Termination, MONOTONE_SLACK};

    fn grid(min: f64, max: f64, n: usize) -> Arc<Grid1D> {
        Arc::new(Grid1D::uniform(min, max, n).unwrap())
    }

    #[test]
    fn sample_data_validation() {
        assert!(SampleData::new(vec![1.0]).is_err());
        assert!(SampleData::new(vec![1.0, f64::NAN]).is_err());
        let d = SampleData::from_csv_reader("velocity\n1\n2\n\n3\n4\n".as_bytes()).unwrap();
        assert_eq!(d.observations(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(SampleData::from_csv_reader("1\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn type7_quantiles() {
        // R: quantile(c(1, 2, 4, 7, 11), c(.25, .75)) gives 2 and 7
        let d = SampleData::new(vec![7.0, 1.0, 11.0, 2.0, 4.0]).unwrap();
        assert_eq!(d.quantile(0.25), 2.0);
        assert_eq!(d.quantile(0.75), 7.0);
        // R: quantile(1:4, .1) gives 1.3
        let d = SampleData::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((d.quantile(0.1) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn two_point_kde() {
        let d = SampleData::new(vec![-1.0, 1.0]).unwrap();
        let f = kde(&d, &KdeConfig { bandwidth: Bandwidth::Fixed(1.0), x_grid: grid(-1.0, 1.0, 3) }).unwrap();
        assert!((f.values()[1] - normal_pdf(1.0)).abs() < 1e-15);
        assert!((f.values()[1] - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn repeated_value_kde_is_normal() {
        let d = SampleData::new(vec![0.3; 5]).unwrap();
        let f = kde(&d, &KdeConfig { bandwidth: Bandwidth::Fixed(0.2), x_grid: grid(-1.0, 1.0, 41) }).unwrap();
        let normal = Density::Normal { mean: 0.3, sd: 0.2 };
        for (x, v) in f.grid().nodes().iter().zip(f.values()) {
            assert!((v - normal.eval(*x)).abs() < 1e-14);
        }
        assert_eq!(rule_of_thumb_bandwidth(&d), Err(Error::DegenerateSample));
    }

    #[test]
    fn bandwidth_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base: Vec<f64> = (0..300).map(|_| rng.gen::<f64>()).collect();
        let d = SampleData::new(base.clone()).unwrap();
        let h = rule_of_thumb_bandwidth(&d).unwrap();
        let scaled = SampleData::new(base.iter().map(|x| 3.5 * x).collect()).unwrap();
        assert!((rule_of_thumb_bandwidth(&scaled).unwrap() - 3.5 * h).abs() < 1e-12);

        // 32 copies leave sd and IQR nearly unchanged; correct for the n − 1 in sd
        let big: Vec<f64> = base.iter().cycle().take(300 * 32).copied().collect();
        let big = SampleData::new(big).unwrap();
        let ratio = rule_of_thumb_bandwidth(&big).unwrap() / h;
        assert!((ratio - 0.5).abs() < 0.01, "{ratio}");

        // idealized standard-normal spread
        assert!((0.9 * 300f64.powf(-0.2) - 0.287).abs() < 1e-3);
    }

    #[test]
    fn inverse_cdf_exact_for_linear_density() {
        let g = grid(0.0, 1.0, 2);
        let p = GridFunction::new(g, vec![0.0, 2.0]).unwrap();
        // F(x) = x², so F⁻¹(u) = √u
        for &u in &[0.0, 0.1, 0.25, 0.5, 0.99, 1.0] {
            assert!((inverse_cdf(&p, u) - u.sqrt()).abs() < 1e-14);
        }
        let flat = GridFunction::new(grid(2.0, 4.0, 5), vec![0.5; 5]).unwrap();
        assert!((inverse_cdf(&flat, 0.3) - 2.6).abs() < 1e-14);
    }

    #[test]
    fn point_mass_scenario_mean() {
        let theta = grid(0.0, 1.0, 101);
        let mut values = vec![0.0; 101];
        values[40] = 1.0 / theta.weights()[40];
        let s = MixingScenario {
            name: "hot".into(),
            kernel: KernelSpec::NormalLocation { sigma: 0.05 },
            true_mixing: GridFunction::new(theta, values).unwrap(),
            n: 5000,
            theta_grid: grid(0.0, 1.0, 101),
            x_grid: grid(-0.5, 1.5, 201),
        };
        let d = sample_scenario(&s, 3).unwrap();
        assert!((d.mean() - 0.4).abs() < 0.01);
        assert_eq!(d, sample_scenario(&s, 3).unwrap());
    }

    #[test]
    fn two_bump_histogram_matches_mixture() {
        let s = MixingScenario::builtin("deconv-2", 10_000).unwrap();
        let d = sample_scenario(&s, 7).unwrap();
        let f = s.true_mixture().unwrap();
        // histogram on 40 bins of [-0.25, 1.25] against the bin averages of f
        let (lo, hi, bins) = (-0.25, 1.25, 40);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in d.observations() {
            if x >= lo && x < hi {
                counts[((x - lo) / width) as usize] += 1;
            }
        }
        let fine = GridFunction::from_fn(grid(lo, hi, 1501), |x| f.interpolate(x));
        let mut l1 = 0.0;
        for (b, &c) in counts.iter().enumerate() {
            let a = lo + b as f64 * width;
            let sub = GridFunction::from_fn(grid(a, a + width, 41), |x| fine.interpolate(x));
            let hist = c as f64 / (d.len() as f64 * width);
            l1 += (hist - sub.integral() / width).abs() * width;
        }
        assert!(l1 < 0.1, "{l1}");
    }

    #[test]
    fn kde_close_to_truth_and_mass() {
        let s = MixingScenario::builtin("deconv-1", 300).unwrap();
        let d = sample_scenario(&s, 0).unwrap();
        let h = rule_of_thumb_bandwidth(&d).unwrap();
        let xs = Arc::new(default_x_grid(&d, h, 0.0, (d.min(), d.max()), 801).unwrap());
        let f = kde(&d, &KdeConfig { bandwidth: Bandwidth::RuleOfThumb, x_grid: xs.clone() }).unwrap();
        assert!(f.min_value() >= 0.0);
        let mass = f.integral();
        assert!((0.99..=1.0 + 1e-9).contains(&mass), "{mass}");
        let truth = GridFunction::from_fn(xs, |x| s.true_mixture().unwrap().interpolate(x));
        assert!(l1_distance(&f, &truth).unwrap() < 0.15);
    }

    #[test]
    fn point_mass_mode_is_recovered() {
        let theta = grid(0.0, 1.0, 101);
        let mut values = vec![0.0; 101];
        values[63] = 1.0 / theta.weights()[63];
        let s = MixingScenario {
            name: "hot".into(),
            kernel: KernelSpec::NormalLocation { sigma: 0.05 },
            true_mixing: GridFunction::new(theta.clone(), values).unwrap(),
            n: 1000,
            theta_grid: theta.clone(),
            x_grid: grid(-0.5, 1.5, 801),
        };
        let d = sample_scenario(&s, 5).unwrap();
        let cfg = KdeConfig { bandwidth: Bandwidth::RuleOfThumb, x_grid: s.x_grid.clone() };
        let fit = estimate_mixing(&d, &s.kernel, theta.clone(), &cfg, &StoppingRule::default()).unwrap();
        let p = &fit.result.p_final;
        let mode = (0..p.len()).max_by(|&a, &b| p.values()[a].total_cmp(&p.values()[b])).unwrap();
        assert!((mode as i64 - 63).abs() <= 1, "mode at {mode}");
    }

    #[test]
    fn deconvolution_fit_is_monotone() {
        let s = MixingScenario::builtin("deconv-2", 300).unwrap();
        let d = sample_scenario(&s, 2).unwrap();
        let h = rule_of_thumb_bandwidth(&d).unwrap();
        let xs = Arc::new(default_x_grid(&d, h, 0.05, (0.0, 1.0), 801).unwrap());
        let cfg = KdeConfig { bandwidth: Bandwidth::Fixed(h), x_grid: xs };
        let fit = estimate_mixing(&d, &s.kernel, s.theta_grid.clone(), &cfg, &StoppingRule::default()).unwrap();
        assert_eq!(fit.result.termination, Termination::DiffBelowTol);
        assert!(fit.result.iterations < 100);
        for w in fit.result.divergence_history.windows(2) {
            assert!(w[1] <= w[0] + MONOTONE_SLACK);
        }
        assert!(fit.result.p_final.is_density(1e-12));
        let again = mixture(
            &KernelMatrix::build(&s.kernel, cfg.x_grid.clone(), s.theta_grid.clone()).unwrap(),
            &fit.result.p_final,
        )
        .unwrap();
        assert_eq!(again, fit.result.f_final);
    }

    #[test]
    fn em_route_runs() {
        let s = MixingScenario::builtin("deconv-2", 300).unwrap();
        let d = sample_scenario(&s, 4).unwrap();
        let r = estimate_mixing_em(
            &d,
            &s.kernel,
            s.theta_grid.clone(),
            s.x_grid.clone(),
            &StoppingRule::max_iter(30),
            SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 30);
        for w in r.divergence_history.windows(2) {
            assert!(w[1] <= w[0] + MONOTONE_SLACK);
        }
    }

    #[test]
    fn unknown_scenario() {
        assert!(MixingScenario::builtin("nope", 10).is_err());
        assert!(MixingScenario::builtin("scale-1", 1).is_err());
        for name in SCENARIO_NAMES {
            let s = MixingScenario::builtin(name, 50).unwrap();
            assert!(s.true_mixing.is_density(1e-12));
        }
    }
}

//! First-passage-time densities of Brownian motion over a boundary
//! a + b·h(t): the truncated-normal Fredholm formulation solved with
//! Monte Carlo x-integration, the back-transform to the hitting-time
//! density, and a path-simulation oracle.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{kl_divergence, normalize_to_density, same_grid, Grid1D, GridFunction};
use crate::kernels::{FptColumn, KernelMatrix, KernelSpec};
use crate::solver::{iterate, mixture, SolverResult, StoppingRule};
use crate::special::{normal_cdf, sqrt_2pi};

/// The time profile h of the boundary a + b·h(t).
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryShape {
    /// h(t) = √t
    Sqrt,
    /// h ≡ 0, a constant level a.
    Zero,
    /// h(t) = t^γ with γ in (0, 1/2].
    Power { gamma: f64 },
    /// Linear interpolation of a table starting at h(0) = 0; held constant
    /// past the last node.
    Tabulated(Arc<GridFunction>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub a: f64,
    pub b: f64,
    pub shape: BoundaryShape,
}

impl BoundarySpec {
    pub fn new(a: f64, b: f64, shape: BoundaryShape) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("boundary level a must be positive, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("boundary slope b must be non-negative, got {b}")));
        }
        match &shape {
            BoundaryShape::Power { gamma } if !(*gamma > 0.0 && *gamma <= 0.5) => {
                return Err(Error::InvalidArgument(format!("power boundary needs gamma in (0, 1/2], got {gamma}")));
            }
            BoundaryShape::Tabulated(table) => {
                if table.grid().min() != 0.0 || table.values()[0] != 0.0 {
                    return Err(Error::InvalidArgument("tabulated boundary must start at h(0) = 0".into()));
                }
            }
            _ => {}
        }
        Ok(Self { a, b, shape })
    }

    pub fn h(&self, t: f64) -> f64 {
        match &self.shape {
            BoundaryShape::Sqrt => t.max(0.0).sqrt(),
            BoundaryShape::Zero => 0.0,
            BoundaryShape::Power { gamma } => t.max(0.0).powf(*gamma),
            BoundaryShape::Tabulated(table) => {
                if t >= table.grid().max() {
                    table.values()[table.len() - 1]
                } else {
                    table.interpolate(t)
                }
            }
        }
    }

    /// The boundary a + b·h(t).
    pub fn level(&self, t: f64) -> f64 {
        self.a + self.b * self.h(t)
    }

    /// Nodes t where h(t) > √t, which the Fredholm formulation excludes.
    pub fn bound_violations(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes().iter().copied().filter(|&t| self.h(t) > t.max(0.0).sqrt() * (1.0 + 1e-12)).collect()
    }
}

/// The truncated-normal kernel for this boundary.
pub fn fpt_kernel(boundary: &BoundarySpec) -> KernelSpec {
    KernelSpec::TruncatedNormalFpt(boundary.clone())
}

/// The right-hand side a·e^{−ax}, x > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialTarget {
    pub rate: f64,
}

impl ExponentialTarget {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * x).exp()
        }
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let exp = Exp::new(self.rate).expect("positive rate");
        (0..n).map(|_| exp.sample(rng)).collect()
    }
}

pub fn fpt_rhs(boundary: &BoundarySpec) -> ExponentialTarget {
    ExponentialTarget { rate: boundary.a }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Samples per iteration.
    pub n: usize,
    pub seed: u64,
    pub resample_each_iteration: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n: 5000, seed: 0, resample_each_iteration: true }
    }
}

#[derive(Debug, Clone)]
pub struct FptProblem {
    pub boundary: BoundarySpec,
    pub theta_grid: Arc<Grid1D>,
    pub mc: McConfig,
    pub p0: GridFunction,
}

impl FptProblem {
    pub fn new(boundary: BoundarySpec, theta_grid: Arc<Grid1D>, mc: McConfig, p0: GridFunction) -> Result<Self> {
        if theta_grid.min() <= 0.0 {
            return Err(Error::InvalidProblem("hitting-time grid must be strictly positive".into()));
        }
        if mc.n == 0 {
            return Err(Error::InvalidProblem("need at least one Monte Carlo sample".into()));
        }
        if !same_grid(p0.grid(), &theta_grid) {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = p0.values().iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidProblem(format!("initial guess must be strictly positive, found {v}")));
        }
        Ok(Self { boundary, theta_grid, mc, p0 })
    }

    /// The exponential draws used at iteration `iteration` (counted from 1).
    /// Each iteration reads its own ChaCha stream, so draws do not depend on
    /// how many iterations ran before.
    pub fn samples(&self, iteration: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.mc.seed);
        let stream = if self.mc.resample_each_iteration { iteration as u64 } else { 0 };
        rng.set_stream(stream);
        fpt_rhs(&self.boundary).sample_n(self.mc.n, &mut rng)
    }

    fn columns(&self) -> Vec<FptColumn> {
        self.theta_grid.nodes().iter().map(|&t| FptColumn::new(&self.boundary, t)).collect()
    }
}

/// k(X_i, θ_j) for one batch of samples, row-major by sample.
struct SampleKernel {
    n_theta: usize,
    entries: Vec<f64>,
}

impl SampleKernel {
    fn new(samples: &[f64], columns: &[FptColumn]) -> Self {
        let n_theta = columns.len();
        let mut entries = vec![0.0; samples.len() * n_theta];
        entries.par_chunks_mut(n_theta).zip(samples).for_each(|(row, &x)| {
            for (slot, col) in row.iter_mut().zip(columns) {
                *slot = col.eval(x);
            }
        });
        Self { n_theta, entries }
    }

    fn update(&self, samples: &[f64], p_prev: &GridFunction) -> Result<GridFunction> {
        let weighted: Vec<f64> = p_prev.values().iter().zip(p_prev.grid().weights()).map(|(p, w)| p * w).collect();
        let fm: Vec<f64> =
            self.entries.par_chunks_exact(self.n_theta).map(|row| crate::kernels::dot(row, &weighted)).collect();
        if let Some(index) = fm.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::MixtureVanishedAtSample { index, x: samples[index] });
        }
        let inv: Vec<f64> = fm.iter().map(|v| 1.0 / v).collect();
        let mut factor = vec![0.0; self.n_theta];
        factor.par_chunks_mut(128).enumerate().for_each(|(b, block)| {
            let j0 = b * 128;
            for (row, c) in self.entries.chunks_exact(self.n_theta).zip(&inv) {
                let len = block.len();
                for (o, k) in block.iter_mut().zip(&row[j0..j0 + len]) {
                    *o += c * k;
                }
            }
        });
        let n = samples.len() as f64;
        let values: Vec<f64> = p_prev.values().iter().zip(&factor).map(|(p, c)| p * c / n).collect();
        let out = p_prev.with_values(values)?;
        normalize_to_density(&out)
    }
}

/// One Monte Carlo step: p_prev(θ_j) times the sample average of
/// k(X_i, θ_j)/f_m(X_i), with f_m by trapezoid quadrature over the θ-grid,
/// then renormalized.
pub fn mc_update_step(problem: &FptProblem, p_prev: &GridFunction, iteration: usize) -> Result<GridFunction> {
    if !same_grid(p_prev.grid(), &problem.theta_grid) {
        return Err(Error::GridMismatch);
    }
    let samples = problem.samples(iteration);
    SampleKernel::new(&samples, &problem.columns()).update(&samples, p_prev)
}

/// p(θ) = √θ·p̃(θ) / (a·√(2π)·e^{b²h²/(2θ)}·Ψ(−b·h/√θ)).
pub fn untransform(boundary: &BoundarySpec, tilde_p: &GridFunction) -> GridFunction {
    let grid = tilde_p.grid().clone();
    let values = grid
        .nodes()
        .iter()
        .zip(tilde_p.values())
        .map(|(&t, &v)| {
            let bh = boundary.b * boundary.h(t);
            // Ψ(−z) = Φ(z)
            let denom = boundary.a * sqrt_2pi() * (0.5 * bh * bh / t).exp() * normal_cdf(bh / t.sqrt());
            t.sqrt() * v / denom
        })
        .collect();
    GridFunction::new(grid, values).expect("same grid")
}

#[derive(Debug, Clone)]
pub struct FptResult {
    /// The iteration on the transformed density p̃.
    pub tilde: SolverResult,
    /// Hitting-time density on the θ-grid, not renormalized.
    pub p: GridFunction,
    /// Quadrature mass of `p`.
    pub mass: f64,
    pub warnings: Vec<String>,
}

/// Nodes in the x-grid used to tabulate a·e^{−ax} on [0, 20/a] for the
/// divergence diagnostic.
pub const DIAGNOSTIC_X_NODES: usize = 2001;

pub fn solve_fpt(problem: &FptProblem, rule: &StoppingRule) -> Result<FptResult> {
    let mut warnings = Vec::new();
    let violations = problem.boundary.bound_violations(&problem.theta_grid);
    if !violations.is_empty() {
        warnings.push(format!(
            "boundary exceeds sqrt(t) at {} grid nodes (first at t = {})",
            violations.len(),
            violations[0]
        ));
    }
    let target = fpt_rhs(&problem.boundary);
    let x_grid = Arc::new(Grid1D::uniform(0.0, 20.0 / target.rate, DIAGNOSTIC_X_NODES)?);
    let f_tab = normalize_to_density(&GridFunction::from_fn(x_grid.clone(), |x| target.pdf(x)))?;
    let diag = KernelMatrix::build(&fpt_kernel(&problem.boundary), x_grid, problem.theta_grid.clone())?;
    let objective = |p: &GridFunction| -> Result<(f64, GridFunction)> {
        let f_m = mixture(&diag, p)?;
        Ok((kl_divergence(&f_tab, &f_m)?, f_m))
    };

    let columns = problem.columns();
    let fixed = if problem.mc.resample_each_iteration {
        None
    } else {
        let samples = problem.samples(0);
        let kernel = SampleKernel::new(&samples, &columns);
        Some((samples, kernel))
    };
    let step = |m: usize, p: &GridFunction, _: &GridFunction| -> Result<GridFunction> {
        match &fixed {
            Some((samples, kernel)) => kernel.update(samples, p),
            None => {
                let samples = problem.samples(m);
                SampleKernel::new(&samples, &columns).update(&samples, p)
            }
        }
    };
    let mut tilde = iterate(problem.p0.clone(), rule, step, objective)?;
    warnings.append(&mut tilde.warnings);
    let p = untransform(&problem.boundary, &tilde.p_final);
    let mass = p.integral();
    if !(0.9..=1.1).contains(&mass) {
        warnings.push(format!("hitting-time density has mass {mass:.4} on the grid"));
    }
    Ok(FptResult { tilde, p, mass, warnings })
}

/// P(T ≤ t) for the level-a hitting time of standard Brownian motion.
pub fn levy_cdf(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        2.0 * crate::special::normal_sf(a / t.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub paths: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Also count crossings between grid times using the Brownian-bridge
    /// crossing probability exp(−2·d0·d1/dt).
    pub bridge_correction: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { paths: 100_000, dt: 1e-3, t_max: 50.0, seed: 0, bridge_correction: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Per-path hitting time, `None` if censored at t_max.
    pub times: Vec<Option<f64>>,
    pub t_max: f64,
    pub warnings: Vec<String>,
}

impl SimulationResult {
    pub fn paths(&self) -> usize {
        self.times.len()
    }

    pub fn censored(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    /// Fraction of paths that hit before t_max.
    pub fn correction_factor(&self) -> f64 {
        1.0 - self.censored() as f64 / self.paths() as f64
    }

    /// Sorted observed hitting times.
    pub fn sorted_hits(&self) -> Vec<f64> {
        let mut hits: Vec<f64> = self.times.iter().flatten().copied().collect();
        hits.sort_by(f64::total_cmp);
        hits
    }

    /// Empirical P(T ≤ t) over all paths; censored paths count as not yet hit.
    pub fn cdf(&self, t: f64) -> f64 {
        let hits = self.times.iter().flatten().filter(|&&h| h <= t).count();
        hits as f64 / self.paths() as f64
    }

    /// sup_t |F_emp(t) − cdf(t)| over [0, t_max], evaluated on both sides of
    /// every jump of the empirical CDF.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.paths() as f64;
        let mut worst: f64 = 0.0;
        for (k, &t) in self.sorted_hits().iter().enumerate() {
            let c = cdf(t);
            worst = worst.max((c - k as f64 / n).abs()).max((c - (k + 1) as f64 / n).abs());
        }
        let tail = self.cdf(self.t_max);
        worst.max((cdf(self.t_max) - tail).abs())
    }

    /// `time,censored` rows; censored paths carry t_max.
    pub fn to_csv_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("time,censored\n");
        for t in &self.times {
            let _ = match t {
                Some(t) => writeln!(out, "{t:.16e},0"),
                None => writeln!(out, "{:.16e},1", self.t_max),
            };
        }
        out
    }
}

/// Euler simulation of standard Brownian paths up to the first time
/// B(t) ≥ a + b·h(t). Path k uses ChaCha stream k of `seed`, so results do
/// not depend on the thread count.
pub fn simulate_fpt(boundary: &BoundarySpec, config: &SimulationConfig) -> Result<SimulationResult> {
    if !(config.dt > 0.0) || !(config.t_max > config.dt) || config.paths == 0 {
        return Err(Error::InvalidArgument("simulation needs dt > 0, t_max > dt and at least one path".into()));
    }
    let steps = (config.t_max / config.dt).round() as usize;
    let dt = config.t_max / steps as f64;
    let sd = dt.sqrt();
    let levels: Vec<f64> = (0..=steps).map(|s| boundary.level(s as f64 * dt)).collect();
    let times: Vec<Option<f64>> = (0..config.paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(path as u64);
            let mut b = 0.0;
            for s in 1..=steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let next = b + sd * z;
                let t = s as f64 * dt;
                if next >= levels[s] {
                    return Some(t);
                }
                if config.bridge_correction {
                    let d0 = levels[s - 1] - b;
                    let d1 = levels[s] - next;
                    let cross = (-2.0 * d0 * d1 / dt).exp();
                    if cross > 1e-12 && rng.gen::<f64>() < cross {
                        return Some(t);
                    }
                }
                b = next;
            }
            None
        })
        .collect();
    let mut result = SimulationResult { times, t_max: config.t_max, warnings: Vec::new() };
    let frac = result.censored() as f64 / result.paths() as f64;
    if frac > 0.05 {
        result.warnings.push(format!("{:.1}% of paths censored at t_max = {}", 100.0 * frac, config.t_max));
    }
    Ok(result)
}

/// Piecewise-linear CDF of a density on a θ-grid, zero before the first
/// node and constant past the last.
pub fn grid_cdf(p: &GridFunction) -> impl Fn(f64) -> f64 + '_ {
    let cumulative = GridFunction::new(p.grid().clone(), p.cumulative()).expect("same grid");
    move |t| {
        if t < cumulative.grid().min() {
            0.0
        } else if t >= cumulative.grid().max() {
            cumulative.values()[cumulative.len() - 1]
        } else {
            cumulative.interpolate(t)
        }
    }
}

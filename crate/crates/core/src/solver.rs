//! The multiplicative fixed-point iteration, its empirical (EM) variant,
//! the additive baseline and the iteration driver.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{kl_divergence, same_grid, Grid1D, GridFunction};
use crate::kernels::{KernelMatrix, KernelSpec};

/// Slack allowed before a divergence increase is reported.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Columns whose x-mass deviates from one by more than this are reported.
pub const MASS_DEFICIT_THRESHOLD: f64 = 1e-3;

/// A density-form problem: find p on the θ-grid with ∫ k(·, θ) p(θ) dθ = f.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kernel_matrix: Arc<KernelMatrix>,
    pub f: GridFunction,
    pub p0: GridFunction,
}

impl ProblemSpec {
    pub fn new(kernel_matrix: Arc<KernelMatrix>, f: GridFunction, p0: GridFunction) -> Result<Self> {
        if !same_grid(f.grid(), kernel_matrix.x_grid()) || !same_grid(p0.grid(), kernel_matrix.theta_grid()) {
            return Err(Error::GridMismatch);
        }
        if !kernel_matrix.non_negative() {
            return Err(Error::InvalidProblem("kernel has negative entries; apply a split transform".into()));
        }
        if let Some((j, v)) = p0.values().iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "initial guess must be strictly positive, found {v} at node {j}"
            )));
        }
        if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeValue { index, value });
        }
        let mass = f.integral();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidProblem(format!("target must have unit mass, found {mass}")));
        }
        Ok(Self { kernel_matrix, f, p0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iter: usize,
    /// Stop once D_m < tol_div; zero disables.
    pub tol_div: f64,
    /// Stop once D_{m−1} − D_m < tol_diff; zero disables.
    pub tol_diff: f64,
}

impl StoppingRule {
    pub fn max_iter(max_iter: usize) -> Self {
        Self { max_iter, tol_div: 0.0, tol_diff: 0.0 }
    }

    pub fn with_tol_diff(max_iter: usize, tol_diff: f64) -> Self {
        Self { max_iter, tol_div: 0.0, tol_diff }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_div >= 0.0) || !(self.tol_diff >= 0.0) {
            return Err(Error::InvalidArgument("stopping tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { max_iter: 500, tol_div: 0.0, tol_diff: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxIter,
    DivergenceBelowTol,
    DiffBelowTol,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Rescale every iterate to unit quadrature mass.
    pub renormalize: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { renormalize: true }
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub p_final: GridFunction,
    pub f_final: GridFunction,
    /// D_0, D_1, …, one entry per completed iteration plus the start.
    pub divergence_history: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

/// f_m(x_i) = Σ_j v_j·k(x_i, θ_j)·p(θ_j).
pub fn mixture(kernel_matrix: &KernelMatrix, p: &GridFunction) -> Result<GridFunction> {
    crate::kernels::mixture_of(kernel_matrix, p)
}

fn renormalized(p: &GridFunction, values: Vec<f64>, renormalize: bool) -> Result<GridFunction> {
    let out = p.with_values(values)?;
    if !renormalize {
        return Ok(out);
    }
    let mass = out.integral();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass(mass));
    }
    Ok(out.map(|v| v / mass))
}

/// One multiplicative step: p·Σ_i w_i k(x_i, ·) f(x_i)/f_prev(x_i), renormalized.
pub fn update_step(problem: &ProblemSpec, p_prev: &GridFunction, f_prev: &GridFunction) -> Result<GridFunction> {
    update_step_with(problem, p_prev, f_prev, SolverOptions::default())
}

pub fn update_step_with(
    problem: &ProblemSpec,
    p_prev: &GridFunction,
    f_prev: &GridFunction,
    options: SolverOptions,
) -> Result<GridFunction> {
    let k = &problem.kernel_matrix;
    if !same_grid(p_prev.grid(), k.theta_grid()) || !same_grid(f_prev.grid(), k.x_grid()) {
        return Err(Error::GridMismatch);
    }
    let mut ratio = Vec::with_capacity(k.n_x());
    for (index, (&f, &fm)) in problem.f.values().iter().zip(f_prev.values()).enumerate() {
        if f == 0.0 {
            ratio.push(0.0);
        } else if fm <= 0.0 {
            return Err(Error::MixtureVanishes { index });
        } else {
            ratio.push(f / fm);
        }
    }
    let factor = k.apply_transpose(&ratio);
    let values = p_prev.values().iter().zip(&factor).map(|(p, c)| p * c).collect();
    renormalized(p_prev, values, options.renormalize)
}

/// The classical additive step p + ∫ k (f − f_prev) dx. It is neither
/// clipped nor renormalized.
pub fn additive_update_step(
    problem: &ProblemSpec,
    p_prev: &GridFunction,
    f_prev: &GridFunction,
) -> Result<GridFunction> {
    let k = &problem.kernel_matrix;
    if !same_grid(p_prev.grid(), k.theta_grid()) || !same_grid(f_prev.grid(), k.x_grid()) {
        return Err(Error::GridMismatch);
    }
    let residual: Vec<f64> = problem.f.values().iter().zip(f_prev.values()).map(|(a, b)| a - b).collect();
    let correction = k.apply_transpose(&residual);
    p_prev.with_values(p_prev.values().iter().zip(&correction).map(|(p, c)| p + c).collect())
}

/// Kernel values k(X_i, θ_j) at observed data points rather than on an
/// x-grid. Row-major: `entries[i * n_theta + j]`.
#[derive(Debug, Clone)]
pub struct ObservationMatrix {
    theta_grid: Arc<Grid1D>,
    observations: Vec<f64>,
    entries: Vec<f64>,
}

impl ObservationMatrix {
    pub fn build(kernel: &KernelSpec, observations: &[f64], theta_grid: Arc<Grid1D>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("no observations".into()));
        }
        let mut entries = Vec::with_capacity(observations.len() * theta_grid.len());
        for (i, &x) in observations.iter().enumerate() {
            for (j, &theta) in theta_grid.nodes().iter().enumerate() {
                let v =
                    kernel.evaluate(x, theta).map_err(|e| Error::KernelMatrixEntry { i, j, source: Box::new(e) })?;
                entries.push(v);
            }
        }
        if entries.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidProblem("kernel has negative entries".into()));
        }
        Ok(Self { theta_grid, observations: observations.to_vec(), entries })
    }

    pub fn theta_grid(&self) -> &Arc<Grid1D> {
        &self.theta_grid
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.entries.chunks_exact(self.theta_grid.len())
    }

    /// The mixture evaluated at each observation.
    pub fn mixture_at_observations(&self, p: &GridFunction) -> Result<Vec<f64>> {
        if !same_grid(p.grid(), &self.theta_grid) {
            return Err(Error::GridMismatch);
        }
        let weighted: Vec<f64> = p.values().iter().zip(self.theta_grid.weights()).map(|(a, b)| a * b).collect();
        Ok(self.rows().map(|row| crate::kernels::dot(row, &weighted)).collect())
    }
}

/// Σ_i log f_p(X_i).
pub fn log_likelihood(matrix: &ObservationMatrix, p: &GridFunction) -> Result<f64> {
    let fx = matrix.mixture_at_observations(p)?;
    if let Some(index) = fx.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroLikelihood { index });
    }
    Ok(fx.iter().map(|v| v.ln()).sum())
}

/// One EM step on the θ-grid: p·(1/n)·Σ_i k(X_i, ·)/f_prev(X_i), renormalized.
pub fn empirical_update_step(matrix: &ObservationMatrix, p_prev: &GridFunction) -> Result<GridFunction> {
    empirical_update_step_with(matrix, p_prev, SolverOptions::default())
}

pub fn empirical_update_step_with(
    matrix: &ObservationMatrix,
    p_prev: &GridFunction,
    options: SolverOptions,
) -> Result<GridFunction> {
    let fx = matrix.mixture_at_observations(p_prev)?;
    let n = fx.len() as f64;
    let mut factor = vec![0.0; matrix.theta_grid.len()];
    for (index, (row, &fv)) in matrix.rows().zip(&fx).enumerate() {
        if !(fv > 0.0) {
            return Err(Error::ZeroLikelihood { index });
        }
        for (o, k) in factor.iter_mut().zip(row) {
            *o += k / fv;
        }
    }
    let values = p_prev.values().iter().zip(&factor).map(|(p, c)| p * c / n).collect();
    renormalized(p_prev, values, options.renormalize)
}

/// Shared iteration driver: `step` maps p_{m−1} to p_m, `objective` returns
/// the monitored functional D_m and the mixture f_m for an iterate.
pub fn iterate<S, O>(p0: GridFunction, rule: &StoppingRule, mut step: S, objective: O) -> Result<SolverResult>
where
    S: FnMut(usize, &GridFunction, &GridFunction) -> Result<GridFunction>,
    O: Fn(&GridFunction) -> Result<(f64, GridFunction)>,
{
    rule.validate()?;
    let (d0, mut f_m) = objective(&p0)?;
    let mut history = vec![d0];
    let mut p = p0;
    let mut termination = Termination::MaxIter;
    let mut increases: Vec<(usize, f64)> = Vec::new();
    if rule.tol_div > 0.0 && d0 < rule.tol_div {
        termination = Termination::DivergenceBelowTol;
    } else {
        for m in 1..=rule.max_iter {
            p = step(m, &p, &f_m)?;
            let (d, f_next) = objective(&p)?;
            f_m = f_next;
            let prev = history[history.len() - 1];
            history.push(d);
            if d > prev + MONOTONE_SLACK {
                increases.push((m, d - prev));
            }
            if rule.tol_div > 0.0 && d < rule.tol_div {
                termination = Termination::DivergenceBelowTol;
                break;
            }
            if rule.tol_diff > 0.0 && prev - d < rule.tol_diff {
                termination = Termination::DiffBelowTol;
                break;
            }
        }
    }
    let mut warnings = Vec::new();
    if let Some(&(first, delta)) = increases.first() {
        let worst = increases.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        warnings.push(format!(
            "divergence increased at {} iterations (first at iteration {first} by {delta:.3e}, largest {worst:.3e})",
            increases.len()
        ));
    }
    Ok(SolverResult {
        p_final: p,
        f_final: f_m,
        iterations: history.len() - 1,
        divergence_history: history,
        termination,
        warnings,
    })
}

pub fn solve(problem: &ProblemSpec, rule: &StoppingRule) -> Result<SolverResult> {
    solve_with(problem, rule, SolverOptions::default())
}

pub fn solve_with(problem: &ProblemSpec, rule: &StoppingRule, options: SolverOptions) -> Result<SolverResult> {
    let k = &problem.kernel_matrix;
    let objective = |p: &GridFunction| -> Result<(f64, GridFunction)> {
        let f_m = mixture(k, p)?;
        Ok((kl_divergence(&problem.f, &f_m)?, f_m))
    };
    let mut result =
        iterate(problem.p0.clone(), rule, |_, p, f_m| update_step_with(problem, p, f_m, options), objective)?;
    let mut warnings = k.mass_deficit_warnings(MASS_DEFICIT_THRESHOLD);
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}

/// EM iteration on observed data. The monitored functional is the average
/// negative log-likelihood; `display` tabulates the fitted mixture on an
/// x-grid for output.
pub fn solve_empirical(
    matrix: &ObservationMatrix,
    display: &KernelMatrix,
    p0: GridFunction,
    rule: &StoppingRule,
    options: SolverOptions,
) -> Result<SolverResult> {
    if !same_grid(display.theta_grid(), matrix.theta_grid()) {
        return Err(Error::GridMismatch);
    }
    let n = matrix.observations().len() as f64;
    let objective = |p: &GridFunction| -> Result<(f64, GridFunction)> {
        Ok((-log_likelihood(matrix, p)? / n, mixture(display, p)?))
    };
    iterate(p0, rule, |_, p, _| empirical_update_step_with(matrix, p, options), objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Density;
    use crate::grid::{l1_distance, normalize_to_density};
    use rand::SeedableRng;

    fn grid(min: f64, max: f64, n: usize) -> Arc<Grid1D> {
        Arc::new(Grid1D::uniform(min, max, n).unwrap())
    }

    /// Pareto(5) target with the exponential-rate kernel at reduced size.
    fn pareto_problem(nx: usize, nt: usize) -> ProblemSpec {
        let xs = grid(0.0, 20.0, nx);
        let ts = grid(0.025, 50.0, nt);
        let k = Arc::new(KernelMatrix::build(&KernelSpec::ExponentialRate, xs.clone(), ts.clone()).unwrap());
        let f = normalize_to_density(&GridFunction::from_fn(xs, |x| Density::Pareto { a: 5.0 }.eval(x))).unwrap();
        let p0 =
            normalize_to_density(&GridFunction::from_fn(ts, |t| Density::HalfCauchy { scale: 1.0 }.eval(t))).unwrap();
        ProblemSpec::new(k, f, p0).unwrap()
    }

    #[test]
    fn problem_validation() {
        let p = pareto_problem(101, 51);
        let bad_p0 = p.p0.map(|_| 0.0);
        assert!(matches!(
            ProblemSpec::new(p.kernel_matrix.clone(), p.f.clone(), bad_p0),
            Err(Error::InvalidProblem(_))
        ));
        let bad_f = p.f.map(|v| 2.0 * v);
        assert!(ProblemSpec::new(p.kernel_matrix.clone(), bad_f, p.p0.clone()).is_err());
        assert!(matches!(
            ProblemSpec::new(p.kernel_matrix.clone(), p.p0.clone(), p.p0.clone()),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn mixture_of_gamma_is_pareto() {
        let xs = grid(0.0, 20.0, 201);
        let ts = grid(0.0, 50.0, 2001);
        let inner = Arc::new(Grid1D::new(ts.nodes()[1..].to_vec()).unwrap());
        // θ = 0 is outside the kernel domain, but Gamma(5,1) vanishes there
        let k = KernelMatrix::build(&KernelSpec::ExponentialRate, xs.clone(), inner.clone()).unwrap();
        let p = GridFunction::from_fn(inner, |t| Density::Gamma { shape: 5.0, rate: 1.0 }.eval(t));
        let f = mixture(&k, &p).unwrap();
        assert!((f.values()[10] - 0.078125).abs() < 1e-4, "{}", f.values()[10]);
    }

    #[test]
    fn uniform_mixture_is_flat() {
        let g = grid(0.0, 1.0, 1001);
        let k = KernelMatrix::build(&KernelSpec::NormalLocation { sigma: 0.05 }, g.clone(), g.clone()).unwrap();
        let f = mixture(&k, &GridFunction::uniform_density(g.clone())).unwrap();
        // closed form Φ((1 − x)/σ) − Φ(−x/σ)
        use crate::special::normal_cdf;
        for (x, v) in g.nodes().iter().zip(f.values()) {
            if (0.2..=0.8).contains(x) {
                let exact = normal_cdf((1.0 - x) / 0.05) - normal_cdf(-x / 0.05);
                assert!((v - exact).abs() < 1e-6, "{x}: {v} vs {exact}");
                assert!((v - 1.0).abs() < 4e-5);
            }
        }
    }

    #[test]
    fn point_mass_mixture_is_column() {
        let xs = grid(-1.0, 2.0, 61);
        let ts = grid(0.0, 1.0, 11);
        let k = KernelMatrix::build(&KernelSpec::NormalLocation { sigma: 0.2 }, xs, ts.clone()).unwrap();
        let mut values = vec![0.0; 11];
        values[4] = 1.0 / ts.weights()[4];
        let f = mixture(&k, &GridFunction::new(ts, values).unwrap()).unwrap();
        for i in 0..61 {
            assert!((f.values()[i] - k.get(i, 4)).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_solution_is_fixed_point() {
        let p = pareto_problem(201, 101);
        let k = p.kernel_matrix.clone();
        let masses = k.column_masses();
        let normalized = Arc::new(k.scale_columns(&masses).unwrap());
        let truth = normalize_to_density(&GridFunction::from_fn(k.theta_grid().clone(), |t| {
            Density::Gamma { shape: 5.0, rate: 1.0 }.eval(t)
        }))
        .unwrap();
        let f = mixture(&normalized, &truth).unwrap();
        let problem = ProblemSpec::new(normalized, f.clone(), p.p0.clone()).unwrap();
        let next = update_step(&problem, &truth, &f).unwrap();
        for (a, b) in next.values().iter().zip(truth.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn theta_independent_kernel_keeps_p() {
        let xs = grid(0.0, 5.0, 101);
        let ts = grid(1.0, 2.0, 21);
        let f = normalize_to_density(&GridFunction::from_fn(xs.clone(), |x| (-x).exp())).unwrap();
        let mut entries = Vec::new();
        for &v in f.values() {
            entries.extend(std::iter::repeat(v).take(21));
        }
        let k = Arc::new(KernelMatrix::from_entries(xs, ts.clone(), entries, true).unwrap());
        let p0 = normalize_to_density(&GridFunction::from_fn(ts, |t| t * t)).unwrap();
        let problem = ProblemSpec::new(k.clone(), f, p0.clone()).unwrap();
        let f0 = mixture(&k, &p0).unwrap();
        let p1 = update_step(&problem, &p0, &f0).unwrap();
        for (a, b) in p1.values().iter().zip(p0.values()) {
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn vanishing_mixture_is_an_error() {
        let p = pareto_problem(101, 51);
        let zero = p.f.map(|_| 0.0);
        assert!(matches!(update_step(&p, &p.p0, &zero), Err(Error::MixtureVanishes { index: 0 })));
    }

    #[test]
    fn zero_iterations_returns_start() {
        let p = pareto_problem(101, 51);
        let r = solve(&p, &StoppingRule::max_iter(0)).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.divergence_history.len(), 1);
        assert_eq!(r.p_final, p.p0);
        assert_eq!(r.termination, Termination::MaxIter);
    }

    #[test]
    fn pareto_small_is_monotone_and_mass_preserving() {
        let p = pareto_problem(801, 401);
        let k = p.kernel_matrix.clone();
        let mut cur = p.p0.clone();
        for _ in 0..50 {
            let f = mixture(&k, &cur).unwrap();
            cur = update_step(&p, &cur, &f).unwrap();
            assert!((cur.integral() - 1.0).abs() < 1e-12);
            assert!(cur.min_value() >= 0.0);
        }
        let r = solve(&p, &StoppingRule::max_iter(100)).unwrap();
        assert_eq!(r.divergence_history.len(), 101);
        for w in r.divergence_history.windows(2) {
            assert!(w[1] <= w[0] + MONOTONE_SLACK);
        }
        assert!(r.divergence_history[100] < r.divergence_history[0]);
        assert!(r.warnings.iter().any(|w| w.contains("x-mass deficit")));
    }

    #[test]
    fn tol_diff_terminates() {
        let p = pareto_problem(401, 201);
        let r = solve(&p, &StoppingRule::with_tol_diff(10_000, 1e-4)).unwrap();
        assert_eq!(r.termination, Termination::DiffBelowTol);
        let n = r.divergence_history.len();
        assert!(r.divergence_history[n - 2] - r.divergence_history[n - 1] < 1e-4);
        let r = solve(&p, &StoppingRule { max_iter: 10_000, tol_div: 0.05, tol_diff: 0.0 }).unwrap();
        assert_eq!(r.termination, Termination::DivergenceBelowTol);
        assert!(*r.divergence_history.last().unwrap() < 0.05);
    }

    #[test]
    fn additive_fixed_point_and_negativity() {
        let p = pareto_problem(401, 201);
        let k = p.kernel_matrix.clone();
        let f0 = mixture(&k, &p.p0).unwrap();
        let fake = ProblemSpec { f: f0.clone(), ..p.clone() };
        assert_eq!(additive_update_step(&fake, &p.p0, &f0).unwrap(), p.p0);

        let uniform = GridFunction::uniform_density(k.theta_grid().clone());
        let mut cur = uniform;
        let mut negative = false;
        for _ in 0..20 {
            let f = mixture(&k, &cur).unwrap();
            cur = additive_update_step(&p, &cur, &f).unwrap();
            negative |= cur.min_value() < 0.0;
        }
        assert!(negative);
    }

    fn two_bump_sample(n: usize, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = KernelSpec::NormalLocation { sigma: 0.05 };
        (0..n)
            .map(|_| {
                let centre = if rng.gen::<bool>() { 0.3 } else { 0.7 };
                let theta = k.sample(centre, &mut rng).unwrap();
                k.sample(theta, &mut rng).unwrap()
            })
            .collect()
    }

    #[test]
    fn em_single_observation_is_posterior() {
        let ts = grid(0.0, 1.0, 51);
        let k = KernelSpec::NormalLocation { sigma: 0.1 };
        let m = ObservationMatrix::build(&k, &[0.4], ts.clone()).unwrap();
        let p0 = normalize_to_density(&GridFunction::from_fn(ts.clone(), |t| 1.0 + t)).unwrap();
        let p1 = empirical_update_step(&m, &p0).unwrap();
        let posterior =
            normalize_to_density(&GridFunction::from_fn(ts, |t| (1.0 + t) * k.evaluate(0.4, t).unwrap())).unwrap();
        assert!(l1_distance(&p1, &posterior).unwrap() < 1e-12);
    }

    #[test]
    fn em_log_likelihood_monotone_and_fixed_point() {
        let data = two_bump_sample(300, 11);
        let ts = grid(0.0, 1.0, 201);
        let m = ObservationMatrix::build(&KernelSpec::NormalLocation { sigma: 0.05 }, &data, ts.clone()).unwrap();
        let mut p = GridFunction::uniform_density(ts);
        let mut ll = log_likelihood(&m, &p).unwrap();
        for _ in 0..50 {
            p = empirical_update_step(&m, &p).unwrap();
            let next = log_likelihood(&m, &p).unwrap();
            assert!(next >= ll - 1e-10, "{next} < {ll}");
            ll = next;
        }
    }

    #[test]
    fn em_fixed_point() {
        // with two support points the maximizer is interior and EM converges linearly
        let data = two_bump_sample(300, 5);
        let ts = Arc::new(Grid1D::new(vec![0.3, 0.7]).unwrap());
        let m = ObservationMatrix::build(&KernelSpec::NormalLocation { sigma: 0.05 }, &data, ts.clone()).unwrap();
        let mut p = GridFunction::uniform_density(ts);
        for _ in 0..5_000 {
            p = empirical_update_step(&m, &p).unwrap();
        }
        let again = empirical_update_step(&m, &p).unwrap();
        for (a, b) in again.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn em_zero_likelihood() {
        let m = ObservationMatrix::build(&KernelSpec::ExponentialRate, &[-1.0], grid(0.5, 1.0, 11)).unwrap();
        let err = empirical_update_step(&m, &GridFunction::uniform_density(m.theta_grid().clone())).unwrap_err();
        assert_eq!(err, Error::ZeroLikelihood { index: 0 });
    }
}

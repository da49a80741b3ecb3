//! Kernel families k(x, θ) and precomputed kernel matrices.

use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fpt::BoundarySpec;
use crate::grid::{Grid1D, GridFunction};
use crate::special::{normal_cdf, normal_pdf};

/// Evaluation contract for a two-argument kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// θ·e^{−θx} on x ≥ 0, θ > 0.
    ExponentialRate,
    /// φ((x − θ)/σ)/σ.
    NormalLocation { sigma: f64 },
    /// Centered normal density in x with variance θ > 0.
    NormalScale,
    /// Normal density with mean b·h(θ)/θ and variance 1/θ, truncated to
    /// x ≥ 0 and renormalized.
    TruncatedNormalFpt(BoundarySpec),
    /// User-supplied table, bilinearly interpolated.
    Tabulated(Arc<TabulatedKernel>),
    /// k(x, θ) = inner(x, −θ).
    Reflected(Box<KernelSpec>),
    /// plus(x, θ) − minus(x, θ).
    Difference { plus: Box<KernelSpec>, minus: Box<KernelSpec> },
}

impl KernelSpec {
    pub fn difference(plus: KernelSpec, minus: KernelSpec) -> Self {
        KernelSpec::Difference { plus: Box::new(plus), minus: Box::new(minus) }
    }

    /// φ_σ(x − θ) − φ_σ(x + θ).
    pub fn antisymmetric_normal(sigma: f64) -> Self {
        Self::difference(
            KernelSpec::NormalLocation { sigma },
            KernelSpec::Reflected(Box::new(KernelSpec::NormalLocation { sigma })),
        )
    }

    /// Each θ-section integrates to one over x.
    pub fn density_in_x(&self) -> bool {
        match self {
            KernelSpec::ExponentialRate
            | KernelSpec::NormalLocation { .. }
            | KernelSpec::NormalScale
            | KernelSpec::TruncatedNormalFpt(_) => true,
            KernelSpec::Tabulated(t) => t.density_in_x,
            KernelSpec::Reflected(inner) => inner.density_in_x(),
            KernelSpec::Difference { .. } => false,
        }
    }

    pub fn non_negative(&self) -> bool {
        match self {
            KernelSpec::Tabulated(t) => t.values.iter().all(|&v| v >= 0.0),
            KernelSpec::Reflected(inner) => inner.non_negative(),
            KernelSpec::Difference { .. } => false,
            _ => true,
        }
    }

    pub fn evaluate(&self, x: f64, theta: f64) -> Result<f64> {
        let domain = |reason: &str| Error::KernelDomain { x, theta, reason: reason.to_string() };
        if !x.is_finite() || !theta.is_finite() {
            return Err(domain("non-finite argument"));
        }
        match self {
            KernelSpec::ExponentialRate => {
                if theta <= 0.0 {
                    return Err(domain("exponential rate must be positive"));
                }
                Ok(if x < 0.0 { 0.0 } else { theta * (-theta * x).exp() })
            }
            KernelSpec::NormalLocation { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(domain("sigma must be positive"));
                }
                Ok(normal_pdf((x - theta) / sigma) / sigma)
            }
            KernelSpec::NormalScale => {
                if theta <= 0.0 {
                    return Err(domain("variance must be positive"));
                }
                let sd = theta.sqrt();
                Ok(normal_pdf(x / sd) / sd)
            }
            KernelSpec::TruncatedNormalFpt(boundary) => {
                if theta <= 0.0 {
                    return Err(domain("hitting time must be positive"));
                }
                Ok(FptColumn::new(boundary, theta).eval(x))
            }
            KernelSpec::Tabulated(table) => table.evaluate(x, theta),
            KernelSpec::Reflected(inner) => inner.evaluate(x, -theta),
            KernelSpec::Difference { plus, minus } => Ok(plus.evaluate(x, theta)? - minus.evaluate(x, theta)?),
        }
    }

    /// Draws X from k(·, θ). Only defined for the built-in density kernels.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        match self {
            KernelSpec::ExponentialRate => {
                let exp = Exp::new(theta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                Ok(exp.sample(rng))
            }
            KernelSpec::NormalLocation { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                Ok(theta + sigma * z)
            }
            KernelSpec::NormalScale => {
                if theta <= 0.0 {
                    return Err(Error::InvalidArgument("variance must be positive".into()));
                }
                let z: f64 = StandardNormal.sample(rng);
                Ok(theta.sqrt() * z)
            }
            KernelSpec::TruncatedNormalFpt(boundary) => {
                if theta <= 0.0 {
                    return Err(Error::InvalidArgument("hitting time must be positive".into()));
                }
                let col = FptColumn::new(boundary, theta);
                // the mean is non-negative, so acceptance is at least 1/2
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = col.mean + z / col.root_theta;
                    if x >= 0.0 {
                        return Ok(x);
                    }
                }
            }
            other => Err(Error::InvalidArgument(format!("cannot sample from kernel {other:?}"))),
        }
    }
}

/// One θ-section of the truncated-normal FPT kernel with its constants
/// precomputed: √θ·φ((x − μ)√θ) / Φ(μ√θ) on x ≥ 0, μ = b·h(θ)/θ.
#[derive(Debug, Clone, Copy)]
pub struct FptColumn {
    pub mean: f64,
    pub root_theta: f64,
    scale: f64,
}

impl FptColumn {
    pub fn new(boundary: &BoundarySpec, theta: f64) -> Self {
        let mean = boundary.b * boundary.h(theta) / theta;
        let root_theta = theta.sqrt();
        // Ψ(−b·h/√θ) = Φ(μ√θ)
        let mass = normal_cdf(mean * root_theta);
        Self { mean, root_theta, scale: root_theta / mass }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.scale * normal_pdf((x - self.mean) * self.root_theta)
    }
}

/// Kernel given as a table on an (x, θ) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    pub x_grid: Grid1D,
    pub theta_grid: Grid1D,
    /// Row-major x-by-θ: `values[i * n_theta + j] = k(x_i, θ_j)`.
    pub values: Vec<f64>,
    pub density_in_x: bool,
}

impl TabulatedKernel {
    pub fn new(x_grid: Grid1D, theta_grid: Grid1D, values: Vec<f64>, density_in_x: bool) -> Result<Self> {
        let expected = x_grid.len() * theta_grid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite kernel table entry at {i}")));
        }
        Ok(Self { x_grid, theta_grid, values, density_in_x })
    }

    /// CSV layout: the first row holds a corner label followed by the
    /// x-nodes; every following row starts with a θ-node followed by
    /// k(x_i, θ) for each x-node in order.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut x_nodes: Option<Vec<f64>> = None;
        let mut theta_nodes = Vec::new();
        let mut by_theta: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse { line: lineno + 1, message: format!("cannot parse `{s}`") })
            };
            match &x_nodes {
                None => {
                    let xs = cells[1..].iter().map(|c| parse(c)).collect::<Result<Vec<_>>>()?;
                    x_nodes = Some(xs);
                }
                Some(xs) => {
                    if cells.len() != xs.len() + 1 {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            message: format!("expected {} cells, found {}", xs.len() + 1, cells.len()),
                        });
                    }
                    theta_nodes.push(parse(cells[0])?);
                    by_theta.push(cells[1..].iter().map(|c| parse(c)).collect::<Result<Vec<_>>>()?);
                }
            }
        }
        let x_nodes = x_nodes.ok_or(Error::Parse { line: 1, message: "empty kernel table".into() })?;
        let (nx, nt) = (x_nodes.len(), theta_nodes.len());
        let mut values = vec![0.0; nx * nt];
        for (j, row) in by_theta.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                values[i * nt + j] = *v;
            }
        }
        Self::new(Grid1D::new(x_nodes)?, Grid1D::new(theta_nodes)?, values, false)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    fn evaluate(&self, x: f64, theta: f64) -> Result<f64> {
        let locate = |grid: &Grid1D, v: f64| -> Option<(usize, f64)> {
            let nodes = grid.nodes();
            if v < nodes[0] || v > nodes[nodes.len() - 1] {
                return None;
            }
            let pos = nodes.partition_point(|&n| n <= v).clamp(1, nodes.len() - 1);
            let t = (v - nodes[pos - 1]) / (nodes[pos] - nodes[pos - 1]);
            Some((pos - 1, t))
        };
        let outside = || Error::KernelDomain { x, theta, reason: "outside tabulated range".into() };
        let (i, tx) = locate(&self.x_grid, x).ok_or_else(outside)?;
        let (j, tt) = locate(&self.theta_grid, theta).ok_or_else(outside)?;
        let nt = self.theta_grid.len();
        let at = |i: usize, j: usize| self.values[i * nt + j];
        let lower = at(i, j) * (1.0 - tt) + at(i, j + 1) * tt;
        let upper = at(i + 1, j) * (1.0 - tt) + at(i + 1, j + 1) * tt;
        Ok(lower * (1.0 - tx) + upper * tx)
    }
}

const TRANSPOSE_BLOCK: usize = 128;

/// Dense matrix `entries[i][j] = k(x_i, θ_j)` over fixed grids.
///
/// Products with vectors are parallel over output entries, but each output
/// entry is summed sequentially in index order, so results are reproducible
/// bit for bit regardless of thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    x_grid: Arc<Grid1D>,
    theta_grid: Arc<Grid1D>,
    entries: Vec<f64>,
    density_in_x: bool,
    non_negative: bool,
}

impl KernelMatrix {
    pub fn build(kernel: &KernelSpec, x_grid: Arc<Grid1D>, theta_grid: Arc<Grid1D>) -> Result<Self> {
        let nt = theta_grid.len();
        let mut entries = vec![0.0; x_grid.len() * nt];
        entries.par_chunks_mut(nt).enumerate().try_for_each(|(i, row)| -> Result<()> {
            let x = x_grid.nodes()[i];
            for (j, (slot, &theta)) in row.iter_mut().zip(theta_grid.nodes()).enumerate() {
                *slot =
                    kernel.evaluate(x, theta).map_err(|e| Error::KernelMatrixEntry { i, j, source: Box::new(e) })?;
            }
            Ok(())
        })?;
        let non_negative = entries.iter().all(|&v| v >= 0.0);
        Ok(Self { x_grid, theta_grid, entries, density_in_x: kernel.density_in_x(), non_negative })
    }

    pub fn from_entries(
        x_grid: Arc<Grid1D>,
        theta_grid: Arc<Grid1D>,
        entries: Vec<f64>,
        density_in_x: bool,
    ) -> Result<Self> {
        let expected = x_grid.len() * theta_grid.len();
        if entries.len() != expected {
            return Err(Error::LengthMismatch { expected, found: entries.len() });
        }
        let non_negative = entries.iter().all(|&v| v >= 0.0);
        Ok(Self { x_grid, theta_grid, entries, density_in_x, non_negative })
    }

    pub fn x_grid(&self) -> &Arc<Grid1D> {
        &self.x_grid
    }

    pub fn theta_grid(&self) -> &Arc<Grid1D> {
        &self.theta_grid
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn n_x(&self) -> usize {
        self.x_grid.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn density_in_x(&self) -> bool {
        self.density_in_x
    }

    pub fn non_negative(&self) -> bool {
        self.non_negative
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_theta() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nt = self.n_theta();
        &self.entries[i * nt..(i + 1) * nt]
    }

    /// Trapezoid mass over x of column j.
    pub fn column_mass(&self, j: usize) -> f64 {
        let w = self.x_grid.weights();
        (0..self.n_x()).map(|i| w[i] * self.get(i, j)).sum()
    }

    pub fn column_masses(&self) -> Vec<f64> {
        let nt = self.n_theta();
        let mut out = vec![0.0; nt];
        for (row, w) in self.entries.chunks_exact(nt).zip(self.x_grid.weights()) {
            for (o, k) in out.iter_mut().zip(row) {
                *o += w * k;
            }
        }
        out
    }

    /// Trapezoid mass over θ of each row, ∫ k(x_i, θ) dθ.
    pub fn row_masses(&self) -> Vec<f64> {
        let v = self.theta_grid.weights();
        self.entries.chunks_exact(self.n_theta()).map(|row| dot(row, v)).collect()
    }

    /// out_i = Σ_j v_j·k(x_i, θ_j)·p_j
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = p.iter().zip(self.theta_grid.weights()).map(|(a, b)| a * b).collect();
        self.entries.par_chunks_exact(self.n_theta()).map(|row| dot(row, &weighted)).collect()
    }

    /// out_j = Σ_i w_i·k(x_i, θ_j)·r_i
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        let nt = self.n_theta();
        let coeffs: Vec<f64> = self.x_grid.weights().iter().zip(r).map(|(w, ri)| w * ri).collect();
        let mut out = vec![0.0; nt];
        out.par_chunks_mut(TRANSPOSE_BLOCK).enumerate().for_each(|(b, block)| {
            let j0 = b * TRANSPOSE_BLOCK;
            for (row, &c) in self.entries.chunks_exact(nt).zip(&coeffs) {
                if c == 0.0 {
                    continue;
                }
                let len = block.len();
                for (o, k) in block.iter_mut().zip(&row[j0..j0 + len]) {
                    *o += c * k;
                }
            }
        });
        out
    }

    /// Divides column j by `factors[j]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.n_theta() {
            return Err(Error::LengthMismatch { expected: self.n_theta(), found: factors.len() });
        }
        let mut entries = self.entries.clone();
        for row in entries.chunks_exact_mut(self.n_theta()) {
            for (k, f) in row.iter_mut().zip(factors) {
                *k /= f;
            }
        }
        Self::from_entries(self.x_grid.clone(), self.theta_grid.clone(), entries, true)
    }

    /// Side-by-side columns of `self` then `other` over a combined θ-grid.
    pub fn hstack(&self, other: &KernelMatrix, theta_grid: Arc<Grid1D>) -> Result<Self> {
        if !crate::grid::same_grid(&self.x_grid, &other.x_grid) {
            return Err(Error::GridMismatch);
        }
        if theta_grid.len() != self.n_theta() + other.n_theta() {
            return Err(Error::LengthMismatch { expected: self.n_theta() + other.n_theta(), found: theta_grid.len() });
        }
        let mut entries = Vec::with_capacity(self.n_x() * theta_grid.len());
        for i in 0..self.n_x() {
            entries.extend_from_slice(self.row(i));
            entries.extend_from_slice(other.row(i));
        }
        Self::from_entries(self.x_grid.clone(), theta_grid, entries, false)
    }

    /// Columns whose x-mass misses one by more than `threshold`, reported
    /// for density kernels tabulated on truncated x-grids.
    pub fn mass_deficit_warnings(&self, threshold: f64) -> Vec<String> {
        if !self.density_in_x {
            return Vec::new();
        }
        let masses = self.column_masses();
        let bad: Vec<(usize, f64)> =
            masses.iter().copied().enumerate().filter(|(_, m)| (1.0 - m).abs() > threshold).collect();
        if bad.is_empty() {
            return Vec::new();
        }
        let (worst_j, worst_m) = bad.iter().copied().fold((0usize, 1.0f64), |acc, (j, m)| {
            if (1.0 - m).abs() > (1.0 - acc.1).abs() {
                (j, m)
            } else {
                acc
            }
        });
        vec![format!(
            "{} of {} kernel columns have x-mass deficit above {threshold:e}; worst theta = {} with mass {worst_m:.6}",
            bad.len(),
            masses.len(),
            self.theta_grid.nodes()[worst_j]
        )]
    }
}

/// Dot product with eight interleaved partial sums, so the loop vectorizes
/// while the summation order stays fixed.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (a8, b8) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (a8.remainder(), b8.remainder());
    for (x, y) in a8.zip(b8) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Column mass of column j (free-function form).
pub fn column_mass(matrix: &KernelMatrix, j: usize) -> f64 {
    matrix.column_mass(j)
}

/// The mixture ∫ k(·, θ) p(θ) dθ tabulated on the matrix x-grid.
pub fn mixture_of(matrix: &KernelMatrix, p: &GridFunction) -> Result<GridFunction> {
    if !crate::grid::same_grid(p.grid(), matrix.theta_grid()) {
        return Err(Error::GridMismatch);
    }
    GridFunction::new(matrix.x_grid().clone(), matrix.apply(p.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpt::BoundaryShape;
    use std::f64::consts::PI;

    fn grid(min: f64, max: f64, n: usize) -> Arc<Grid1D> {
        Arc::new(Grid1D::uniform(min, max, n).unwrap())
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(KernelSpec::ExponentialRate.evaluate(0.0, 2.0).unwrap(), 2.0);
        let height = KernelSpec::NormalLocation { sigma: 0.05 }.evaluate(0.3, 0.3).unwrap();
        assert!((height - 1.0 / (0.05 * (2.0 * PI).sqrt())).abs() < 1e-12);
        assert!((height - 7.978_845_608).abs() < 1e-8);
        let diff = KernelSpec::antisymmetric_normal(0.05);
        assert_eq!(diff.evaluate(0.0, 0.0).unwrap(), 0.0);
        assert!(!diff.density_in_x());
        assert!(!diff.non_negative());
    }

    #[test]
    fn domain_violations() {
        assert!(matches!(KernelSpec::ExponentialRate.evaluate(1.0, 0.0), Err(Error::KernelDomain { .. })));
        assert!(KernelSpec::NormalScale.evaluate(1.0, -1.0).is_err());
        assert!(KernelSpec::NormalLocation { sigma: 0.0 }.evaluate(1.0, 1.0).is_err());
        let err = KernelMatrix::build(&KernelSpec::ExponentialRate, grid(0.0, 1.0, 3), grid(-1.0, 1.0, 3)).unwrap_err();
        assert!(matches!(err, Error::KernelMatrixEntry { i: 0, j: 0, .. }));
    }

    #[test]
    fn difference_is_exact() {
        let plus = KernelSpec::NormalLocation { sigma: 0.1 };
        let minus = KernelSpec::Reflected(Box::new(plus.clone()));
        let d = KernelSpec::difference(plus.clone(), minus.clone());
        for &(x, t) in &[(0.1, 0.2), (-0.3, 0.7), (0.5, 0.5)] {
            let expect = plus.evaluate(x, t).unwrap() - minus.evaluate(x, t).unwrap();
            assert_eq!(d.evaluate(x, t).unwrap(), expect);
        }
    }

    #[test]
    fn small_matrix_matches_evaluate() {
        let k = KernelSpec::NormalScale;
        let m = KernelMatrix::build(&k, grid(-1.0, 1.0, 2), grid(0.5, 2.0, 2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let x = m.x_grid().nodes()[i];
                let t = m.theta_grid().nodes()[j];
                assert_eq!(m.get(i, j), k.evaluate(x, t).unwrap());
            }
        }
    }

    #[test]
    fn exponential_column_mass() {
        let theta = Arc::new(Grid1D::new(vec![0.5, 1.0, 2.0]).unwrap());
        let m = KernelMatrix::build(&KernelSpec::ExponentialRate, grid(0.0, 20.0, 2001), theta).unwrap();
        assert!((m.column_mass(1) - 1.0).abs() < 1e-4);
        // trapezoid overshoot for e^{-x}, h = 0.01 is h²/12
        assert!((m.column_mass(1) - (1.0 - (-20.0f64).exp())).abs() < 1e-5 + 1e-4 * 0.0 + 1e-5);
    }

    #[test]
    fn normal_location_symmetric_matrix() {
        let g = grid(0.0, 1.0, 201);
        let m = KernelMatrix::build(&KernelSpec::NormalLocation { sigma: 0.05 }, g.clone(), g).unwrap();
        for i in 0..201 {
            for j in 0..201 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn normal_location_column_masses() {
        let theta = Arc::new(Grid1D::new(vec![0.0, 0.5]).unwrap());
        let m = KernelMatrix::build(&KernelSpec::NormalLocation { sigma: 0.05 }, grid(0.0, 1.0, 201), theta).unwrap();
        assert!((column_mass(&m, 1) - 1.0).abs() < 1e-12);
        assert!((column_mass(&m, 0) - 0.5).abs() < 1e-5);
        let warnings = m.mass_deficit_warnings(1e-3);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("1 of 2"));
    }

    #[test]
    fn fpt_columns_have_unit_mass() {
        let boundary = BoundarySpec::new(1.0, 0.1, BoundaryShape::Sqrt).unwrap();
        let kernel = KernelSpec::TruncatedNormalFpt(boundary.clone());
        for &theta in &[0.05, 1.0, 5.0, 25.0, 50.0] {
            let col = FptColumn::new(&boundary, theta);
            let hi = col.mean + 10.0 / col.root_theta;
            let xs = grid(0.0, hi, 20_001);
            let f = GridFunction::from_fn(xs, |x| kernel.evaluate(x, theta).unwrap());
            assert!((f.integral() - 1.0).abs() < 1e-6, "theta {theta}: {}", f.integral());
        }
    }

    #[test]
    fn fpt_kernel_b_to_zero_is_half_normal() {
        let boundary = BoundarySpec::new(1.0, 0.0, BoundaryShape::Sqrt).unwrap();
        let k = KernelSpec::TruncatedNormalFpt(boundary);
        let theta: f64 = 4.0;
        for &x in &[0.0, 0.2, 1.0] {
            let half_normal = 2.0 * theta.sqrt() * normal_pdf(x * theta.sqrt());
            assert!((k.evaluate(x, theta).unwrap() - half_normal).abs() < 1e-14);
        }
    }

    #[test]
    fn fpt_kernel_truncated_mean() {
        // mean of a normal truncated below at 0: μ + sd·φ(α)/Φ(α), α = μ/sd
        let boundary = BoundarySpec::new(1.0, 0.1, BoundaryShape::Sqrt).unwrap();
        let kernel = KernelSpec::TruncatedNormalFpt(boundary.clone());
        let theta = 25.0;
        let col = FptColumn::new(&boundary, theta);
        let xs = grid(0.0, col.mean + 12.0 / col.root_theta, 40_001);
        let mean = GridFunction::from_fn(xs, |x| x * kernel.evaluate(x, theta).unwrap()).integral();
        let sd = 1.0 / col.root_theta;
        let alpha = col.mean / sd;
        let expected = col.mean + sd * normal_pdf(alpha) / normal_cdf(alpha);
        assert!((mean - expected).abs() < 1e-7, "{mean} vs {expected}");
    }

    #[test]
    fn tabulated_round_trip_and_csv() {
        let csv = "x\\theta,0.0,1.0,2.0\n0.5,1,2,3\n1.5,4,5,6\n";
        let t = TabulatedKernel::from_csv_reader(csv.as_bytes()).unwrap();
        let k = KernelSpec::Tabulated(Arc::new(t));
        assert_eq!(k.evaluate(1.0, 0.5).unwrap(), 2.0);
        assert_eq!(k.evaluate(2.0, 1.5).unwrap(), 6.0);
        assert_eq!(k.evaluate(1.5, 1.0).unwrap(), 4.0);
        assert_eq!(k.evaluate(1.0, 1.0).unwrap(), 3.5);
        assert!(k.evaluate(3.0, 1.0).is_err());
        assert!(k.non_negative());
        let m = KernelMatrix::build(&k, grid(0.0, 2.0, 3), Arc::new(Grid1D::new(vec![0.5, 1.5]).unwrap())).unwrap();
        assert_eq!(m.entries(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn products_agree_with_loops() {
        let m = KernelMatrix::build(&KernelSpec::NormalLocation { sigma: 0.3 }, grid(-1.0, 2.0, 13), grid(0.0, 1.0, 7))
            .unwrap();
        let p: Vec<f64> = (0..7).map(|j| 1.0 + j as f64).collect();
        let r: Vec<f64> = (0..13).map(|i| (i as f64).sin()).collect();
        let a = m.apply(&p);
        let b = m.apply_transpose(&r);
        for i in 0..13 {
            let e: f64 = (0..7).map(|j| m.theta_grid().weights()[j] * m.get(i, j) * p[j]).sum();
            assert!((a[i] - e).abs() < 1e-12);
        }
        for j in 0..7 {
            let e: f64 = (0..13).map(|i| m.x_grid().weights()[i] * m.get(i, j) * r[i]).sum();
            assert!((b[j] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_means() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mean = |k: &KernelSpec, t: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            (0..n).map(|_| k.sample(t, rng).unwrap()).sum::<f64>() / n as f64
        };
        assert!((mean(&KernelSpec::ExponentialRate, 2.0, &mut rng) - 0.5).abs() < 0.02);
        assert!((mean(&KernelSpec::NormalLocation { sigma: 0.05 }, 0.7, &mut rng) - 0.7).abs() < 0.002);
        assert!(mean(&KernelSpec::NormalScale, 1.0, &mut rng).abs() < 0.03);
        assert!(KernelSpec::antisymmetric_normal(0.1).sample(0.5, &mut rng).is_err());
    }
}

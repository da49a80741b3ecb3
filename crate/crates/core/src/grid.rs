//! One-dimensional grids, trapezoidal quadrature and divergence functionals
//! on tabulated functions.
//!
//! Every function of one variable in this crate is a [`GridFunction`]: a
//! vector of values tied to a shared [`Grid1D`]. Integrals, divergences and
//! distances are all computed with the grid's own trapezoid weights, and two
//! functions can only be compared when they live on the same grid.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Ordered quadrature nodes with their trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid1D {
    /// Builds a grid from strictly increasing finite nodes (at least two).
    /// Non-uniform spacing is allowed.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        validate_nodes(&nodes)?;
        let weights = trapezoid_weights(&nodes);
        Ok(Self { nodes, weights })
    }

    /// `n` equally spaced nodes from `min` to `max` inclusive.
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::InvalidGrid(format!("need finite min < max, got [{min}, {max}]")));
        }
        let step = (max - min) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|j| min + step * j as f64).collect();
        nodes[n - 1] = max;
        Self::new(nodes)
    }

    /// `n` log-equally spaced nodes from `min` to `max` (both positive).
    pub fn geometric(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min > 0.0) {
            return Err(Error::InvalidGrid(format!("geometric grid needs min > 0, got {min}")));
        }
        let log_grid = Self::uniform(min.ln(), max.ln(), n)?;
        let mut nodes: Vec<f64> = log_grid.nodes.iter().map(|v| v.exp()).collect();
        nodes[0] = min;
        nodes[n - 1] = max;
        Self::new(nodes)
    }

    /// Concatenates independent segments into one grid. Each segment keeps
    /// its own trapezoid weights; no quadrature weight spans the gap between
    /// consecutive segments. Nodes must stay strictly increasing across joins.
    pub fn from_segments(segments: &[&Grid1D]) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidGrid("no segments".into()));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in segments {
            if let (Some(&last), Some(&first)) = (nodes.last(), seg.nodes.first()) {
                if first <= last {
                    return Err(Error::InvalidGrid(format!(
                        "segment starting at {first} overlaps previous segment ending at {last}"
                    )));
                }
            }
            nodes.extend_from_slice(&seg.nodes);
            weights.extend_from_slice(&seg.weights);
        }
        Ok(Self { nodes, weights })
    }

    /// Same nodes translated by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.nodes.iter().map(|x| x + offset).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the node closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let pos = self.nodes.partition_point(|&n| n < x);
        if pos == 0 {
            0
        } else if pos == self.nodes.len() {
            pos - 1
        } else if (self.nodes[pos] - x) < (x - self.nodes[pos - 1]) {
            pos
        } else {
            pos - 1
        }
    }
}

fn validate_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {}", nodes.len())));
    }
    for (j, x) in nodes.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::InvalidGrid(format!("node {j} is not finite")));
        }
    }
    for (j, pair) in nodes.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at index {}: {} <= {}",
                j + 1,
                pair[1],
                pair[0]
            )));
        }
    }
    Ok(())
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut w = vec![0.0; m];
    w[0] = 0.5 * (nodes[1] - nodes[0]);
    w[m - 1] = 0.5 * (nodes[m - 1] - nodes[m - 2]);
    for j in 1..m - 1 {
        w[j] = 0.5 * (nodes[j + 1] - nodes[j - 1]);
    }
    w
}

/// Real values tabulated on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid1D>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    /// The uniform density on the grid's span.
    pub fn uniform_density(grid: Arc<Grid1D>) -> Self {
        let total: f64 = grid.weights().iter().sum();
        Self::constant(grid, 1.0 / total)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: Arc::clone(&self.grid), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values)
    }

    pub fn integral(&self) -> f64 {
        trapezoid_integrate(self)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Non-negative everywhere with quadrature mass within `tol` of one.
    pub fn is_density(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= 0.0 && v.is_finite()) && (self.integral() - 1.0).abs() <= tol
    }

    /// Cumulative trapezoid integral from the first node, one value per node.
    pub fn cumulative(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut out = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for j in 1..nodes.len() {
            acc += 0.5 * (nodes[j] - nodes[j - 1]) * (self.values[j] + self.values[j - 1]);
            out.push(acc);
        }
        out
    }

    /// Piecewise-linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let nodes = self.grid.nodes();
        if x < nodes[0] || x > nodes[nodes.len() - 1] {
            return 0.0;
        }
        let pos = nodes.partition_point(|&n| n <= x);
        if pos == 0 {
            return self.values[0];
        }
        if pos == nodes.len() {
            return self.values[nodes.len() - 1];
        }
        let (x0, x1) = (nodes[pos - 1], nodes[pos]);
        let t = (x - x0) / (x1 - x0);
        self.values[pos - 1] * (1.0 - t) + self.values[pos] * t
    }

    /// Two-column CSV (`node,value`) with 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(48 * self.values.len() + 16);
        out.push_str("node,value\n");
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{x:.16e},{v:.16e}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_csv_string().as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Parses the two-column CSV format. A non-numeric first line is taken
    /// as a header. The nodes define a fresh trapezoid grid.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut cols = trimmed.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Parse { line: lineno + 1, message: "expected two columns".into() }),
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    nodes.push(x);
                    values.push(v);
                }
                _ if lineno == 0 => continue,
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("cannot parse `{trimmed}` as two numbers"),
                    })
                }
            }
        }
        let grid = Arc::new(Grid1D::new(nodes)?);
        Self::new(grid, values)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

/// True when both functions refer to the same grid (by identity or value).
pub fn same_grid(a: &Grid1D, b: &Grid1D) -> bool {
    std::ptr::eq(a, b) || a == b
}

fn check_shared(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if same_grid(&f.grid, &g.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Σ_j w_j·v_j with the grid's trapezoid weights.
pub fn trapezoid_integrate(f: &GridFunction) -> f64 {
    f.grid.weights().iter().zip(&f.values).map(|(w, v)| w * v).sum()
}

/// Quadrature of `f·log(f/g)` with 0·log(0/g) = 0.
///
/// `f` must be non-negative; `f > 0` where `g <= 0` is a support violation.
pub fn kl_divergence(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_shared(f, g)?;
    let mut total = 0.0;
    for (index, ((w, &fv), &gv)) in f.grid.weights().iter().zip(&f.values).zip(&g.values).enumerate() {
        if fv < 0.0 {
            return Err(Error::NegativeValue { index, value: fv });
        }
        if fv == 0.0 {
            continue;
        }
        if gv <= 0.0 {
            return Err(Error::SupportViolation { index });
        }
        total += w * fv * (fv / gv).ln();
    }
    Ok(total)
}

/// Quadrature of |f − g|.
pub fn l1_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_shared(f, g)?;
    Ok(f.grid.weights().iter().zip(&f.values).zip(&g.values).map(|((w, a), b)| w * (a - b).abs()).sum())
}

/// Divides by the trapezoid integral so the result has unit mass on the
/// same weights.
pub fn normalize_to_density(f: &GridFunction) -> Result<GridFunction> {
    if let Some((index, &value)) = f.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    let mass = trapezoid_integrate(f);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass(mass));
    }
    Ok(f.map(|v| v / mass))
}

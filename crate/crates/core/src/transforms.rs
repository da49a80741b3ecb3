//! Reductions of general first-kind equations to the density form the
//! multiplicative solver needs, and the maps back.
//!
//! Every reduction ends in the same canonical problem: a kernel whose
//! columns have unit x-mass, a unit-mass non-negative target and a positive
//! start. With column masses c_j, shift t and mass scale M, a canonical
//! solution q maps back through p̃ = M·q/c and p = p̃ − t. A split kernel
//! additionally folds the doubled θ-domain back onto the original one.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{l1_distance, same_grid, Grid1D, GridFunction};
use crate::kernels::KernelMatrix;
use crate::solver::{ProblemSpec, SolverResult};

/// Columns with x-mass at or below this are rejected.
pub const MIN_COLUMN_MASS: f64 = 1e-300;

/// Split solutions whose halves disagree by more than this fraction of ‖p‖₁
/// are flagged.
pub const SPLIT_DISCREPANCY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    Fixed(f64),
    /// 50·max(1, sup|f|)
    Auto,
}

impl Shift {
    pub fn resolve(&self, f: &GridFunction) -> Result<f64> {
        let t = match *self {
            Shift::Fixed(t) => t,
            Shift::Auto => 50.0 * f.max_abs().max(1.0),
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("shift must be positive, got {t}")));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    NormalizeKernel,
    Shift(Shift),
    /// Split k = k⁺ − k⁻ then shift.
    SplitKernel(Shift),
}

#[derive(Debug, Clone)]
pub struct SplitInfo {
    pub original_grid: Arc<Grid1D>,
    pub doubled_grid: Arc<Grid1D>,
}

#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub canonical: ProblemSpec,
    /// x-masses of the (possibly doubled) kernel before normalization.
    pub column_masses: Vec<f64>,
    /// Quadrature mass of the shifted target.
    pub mass_scale: f64,
    /// Zero when no shift was applied.
    pub shift: f64,
    pub split: Option<SplitInfo>,
}

#[derive(Debug, Clone)]
pub struct Recovered {
    pub p: GridFunction,
    /// ‖(s − t) − (t − s')‖₁ between the two halves of a split solution.
    pub discrepancy_l1: Option<f64>,
    pub warnings: Vec<String>,
}

/// With `allow_empty`, columns without mass stay zero and are left out of
/// the solution; otherwise they are an error.
fn normalized_columns(k: &KernelMatrix, allow_empty: bool) -> Result<(KernelMatrix, Vec<f64>)> {
    if !k.non_negative() {
        return Err(Error::InvalidProblem("kernel must be non-negative; use the split transform".into()));
    }
    let masses = k.column_masses();
    if let Some((index, &mass)) = masses.iter().enumerate().find(|(_, m)| !(**m > MIN_COLUMN_MASS)) {
        if !allow_empty || !(mass >= 0.0) {
            return Err(Error::DegenerateColumn { index, mass });
        }
    }
    let factors: Vec<f64> = masses.iter().map(|&m| if is_active(m) { m } else { 1.0 }).collect();
    Ok((k.scale_columns(&factors)?, masses))
}

fn is_active(mass: f64) -> bool {
    mass > MIN_COLUMN_MASS
}

fn canonical_target(target: Vec<f64>, x_grid: &Arc<Grid1D>) -> Result<(GridFunction, f64)> {
    let g = GridFunction::new(x_grid.clone(), target)?;
    let mass = g.integral();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass(mass));
    }
    Ok((g.map(|v| v / mass), mass))
}

/// Divide each kernel column by its x-mass c_j. The canonical start is
/// c·p0 renormalized.
pub fn normalize_kernel_transform(
    kernel_matrix: &KernelMatrix,
    f: &GridFunction,
    p0: &GridFunction,
) -> Result<TransformedProblem> {
    if !same_grid(f.grid(), kernel_matrix.x_grid()) || !same_grid(p0.grid(), kernel_matrix.theta_grid()) {
        return Err(Error::GridMismatch);
    }
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    let (normalized, masses) = normalized_columns(kernel_matrix, false)?;
    let (target, mass_scale) = canonical_target(f.values().to_vec(), kernel_matrix.x_grid())?;
    let start = p0.with_values(p0.values().iter().zip(&masses).map(|(p, c)| p * c).collect())?;
    let start = crate::grid::normalize_to_density(&start)?;
    Ok(TransformedProblem {
        canonical: ProblemSpec::new(Arc::new(normalized), target, start)?,
        column_masses: masses,
        mass_scale,
        shift: 0.0,
        split: None,
    })
}

fn shifted_problem(
    kernel_matrix: &KernelMatrix,
    f: &GridFunction,
    t: f64,
    split: Option<SplitInfo>,
) -> Result<TransformedProblem> {
    if !same_grid(f.grid(), kernel_matrix.x_grid()) {
        return Err(Error::GridMismatch);
    }
    let rows = kernel_matrix.row_masses();
    let mut target = Vec::with_capacity(rows.len());
    for (index, (fv, r)) in f.values().iter().zip(&rows).enumerate() {
        let value = fv + t * r;
        if value < 0.0 {
            return Err(Error::ShiftTooSmall { index, value });
        }
        target.push(value);
    }
    let (normalized, masses) = normalized_columns(kernel_matrix, split.is_some())?;
    let (target, mass_scale) = canonical_target(target, kernel_matrix.x_grid())?;
    let start = GridFunction::uniform_density(kernel_matrix.theta_grid().clone());
    Ok(TransformedProblem {
        canonical: ProblemSpec::new(Arc::new(normalized), target, start)?,
        column_masses: masses,
        mass_scale,
        shift: t,
        split,
    })
}

/// Solve for p + t instead of p: f̃ = f + t·∫k dθ.
pub fn shift_transform(kernel_matrix: &KernelMatrix, f: &GridFunction, t: Shift) -> Result<TransformedProblem> {
    let t = t.resolve(f)?;
    shifted_problem(kernel_matrix, f, t, None)
}

/// The θ-grid doubled for a split kernel: the original nodes followed by a
/// copy translated past the end by one domain length plus one spacing.
pub fn doubled_grid(original: &Grid1D) -> Result<Grid1D> {
    let gap = original.nodes()[1] - original.nodes()[0];
    let second = original.shifted(original.max() - original.min() + gap)?;
    Grid1D::from_segments(&[original, &second])
}

/// Rewrite ∫(k⁺ − k⁻)p dθ as ∫k⁺·p + ∫k⁻·(−p) over a doubled θ-domain, then
/// shift.
pub fn split_kernel_transform(
    k_plus: &KernelMatrix,
    k_minus: &KernelMatrix,
    f: &GridFunction,
    t: Shift,
) -> Result<TransformedProblem> {
    if !same_grid(k_plus.theta_grid(), k_minus.theta_grid()) {
        return Err(Error::GridMismatch);
    }
    if !k_plus.non_negative() || !k_minus.non_negative() {
        return Err(Error::InvalidProblem("split parts must both be non-negative".into()));
    }
    let t = t.resolve(f)?;
    let original = k_plus.theta_grid().clone();
    let doubled = Arc::new(doubled_grid(&original)?);
    let stacked = k_plus.hstack(k_minus, doubled.clone())?;
    shifted_problem(&stacked, f, t, Some(SplitInfo { original_grid: original, doubled_grid: doubled }))
}

impl TransformedProblem {
    /// Maps a solution of the original equation to the canonical one.
    pub fn to_canonical(&self, p: &GridFunction) -> Result<GridFunction> {
        let shifted: Vec<f64> = match &self.split {
            None => {
                if !same_grid(p.grid(), self.canonical.p0.grid()) {
                    return Err(Error::GridMismatch);
                }
                p.values().iter().map(|v| v + self.shift).collect()
            }
            Some(info) => {
                if !same_grid(p.grid(), &info.original_grid) {
                    return Err(Error::GridMismatch);
                }
                let first = p.values().iter().map(|v| v + self.shift);
                let second = p.values().iter().map(|v| self.shift - v);
                first.chain(second).collect()
            }
        };
        let values = shifted.iter().zip(&self.column_masses).map(|(s, c)| s * c / self.mass_scale).collect();
        self.canonical.p0.with_values(values)
    }

    /// Maps a canonical solution back to the original equation.
    pub fn recover_function(&self, q: &GridFunction) -> Result<Recovered> {
        if !same_grid(q.grid(), self.canonical.p0.grid()) {
            return Err(Error::GridMismatch);
        }
        let s: Vec<f64> = q
            .values()
            .iter()
            .zip(&self.column_masses)
            .map(|(v, &c)| if is_active(c) { self.mass_scale * v / c } else { 0.0 })
            .collect();
        let Some(info) = &self.split else {
            let p = q.with_values(s.iter().map(|v| v - self.shift).collect())?;
            return Ok(Recovered { p, discrepancy_l1: None, warnings: Vec::new() });
        };
        let m = info.original_grid.len();
        let t = self.shift;
        let (first, second) = s.split_at(m);
        let (c_first, c_second) = self.column_masses.split_at(m);
        let mut p_values = Vec::with_capacity(m);
        let mut delta = Vec::with_capacity(m);
        for j in 0..m {
            let (a, b) = (first[j] - t, t - second[j]);
            // a half whose kernel column vanishes carries no information
            let (p, d) = match (is_active(c_first[j]), is_active(c_second[j])) {
                (true, true) => (0.5 * (a + b), a - b),
                (true, false) => (a, 0.0),
                (false, true) => (b, 0.0),
                (false, false) => (0.0, 0.0),
            };
            p_values.push(p);
            delta.push(d);
        }
        let p = GridFunction::new(info.original_grid.clone(), p_values)?;
        let delta = GridFunction::new(info.original_grid.clone(), delta)?;
        let zero = GridFunction::constant(info.original_grid.clone(), 0.0);
        let delta_l1 = l1_distance(&delta, &zero)?;
        let p_l1 = l1_distance(&p, &zero)?;
        let mut warnings = Vec::new();
        if delta_l1 > SPLIT_DISCREPANCY_LIMIT * p_l1 {
            warnings.push(format!(
                "inconsistent split solution: halves disagree by {delta_l1:.4e} against solution norm {p_l1:.4e}"
            ));
        }
        Ok(Recovered { p, discrepancy_l1: Some(delta_l1), warnings })
    }
}

pub fn recover(transformed: &TransformedProblem, solved: &SolverResult) -> Result<Recovered> {
    transformed.recover_function(&solved.p_final)
}

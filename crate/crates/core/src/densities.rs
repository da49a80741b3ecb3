//! Closed-form reference densities used by the demos, the configuration
//! language and the tests.

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::special::{normal_pdf, INV_SQRT_2PI};

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// A univariate function given in closed form. Most variants are
/// probability densities; `Combination` allows signed functions such as
/// `b(2,5) − b(4,1)` or `b(2,7) + b(3,4) − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Density {
    Uniform {
        min: f64,
        max: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    InverseGamma {
        shape: f64,
        scale: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// a·(x+1)^−(a+1) on x > 0.
    Pareto {
        a: f64,
    },
    HalfCauchy {
        scale: f64,
    },
    /// Level-a first hitting time of standard Brownian motion:
    /// a·t^−3/2·φ(a/√t).
    Levy {
        a: f64,
    },
    /// Σ weight·density + constant.
    Combination {
        terms: Vec<WeightedDensity>,
        #[serde(default)]
        constant: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDensity {
    pub weight: f64,
    pub density: Density,
}

impl Density {
    pub fn beta(a: f64, b: f64) -> Self {
        Density::Beta { a, b }
    }

    /// Σ weights·densities + constant.
    pub fn combination(terms: impl IntoIterator<Item = (f64, Density)>, constant: f64) -> Self {
        Density::Combination {
            terms: terms.into_iter().map(|(weight, density)| WeightedDensity { weight, density }).collect(),
            constant,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Uniform { min, max } => {
                if x >= *min && x <= *max {
                    1.0 / (max - min)
                } else {
                    0.0
                }
            }
            Density::Normal { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            Density::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Density::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && *shape > 1.0) {
                    0.0
                } else {
                    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(*shape)).exp()
                }
            }
            Density::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (shape * scale.ln() - (shape + 1.0) * x.ln() - scale / x - ln_gamma(*shape)).exp()
                }
            }
            Density::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                if x == 0.0 {
                    return if *a < 1.0 {
                        f64::INFINITY
                    } else if *a == 1.0 {
                        (-ln_beta(*a, *b)).exp()
                    } else {
                        0.0
                    };
                }
                if x == 1.0 {
                    return if *b < 1.0 {
                        f64::INFINITY
                    } else if *b == 1.0 {
                        (-ln_beta(*a, *b)).exp()
                    } else {
                        0.0
                    };
                }
                ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(*a, *b)).exp()
            }
            Density::Pareto { a } => {
                if x < 0.0 {
                    0.0
                } else {
                    a * (x + 1.0).powf(-(a + 1.0))
                }
            }
            Density::HalfCauchy { scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    2.0 / (PI * scale * (1.0 + (x / scale).powi(2)))
                }
            }
            Density::Levy { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    a * x.powf(-1.5) * INV_SQRT_2PI * (-0.5 * a * a / x).exp()
                }
            }
            Density::Combination { terms, constant } => {
                constant + terms.iter().map(|t| t.weight * t.density.eval(x)).sum::<f64>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, GridFunction};
    use std::sync::Arc;

    fn mass(d: &Density, lo: f64, hi: f64, n: usize) -> f64 {
        let g = Arc::new(Grid1D::uniform(lo, hi, n).unwrap());
        GridFunction::from_fn(g, |x| d.eval(x)).integral()
    }

    #[test]
    fn unit_mass() {
        let cases = [
            (Density::Normal { mean: 0.3, sd: 0.2 }, -3.0, 3.0),
            (Density::Exponential { rate: 2.0 }, 0.0, 40.0),
            (Density::Gamma { shape: 5.0, rate: 1.0 }, 0.0, 60.0),
            (Density::InverseGamma { shape: 3.0, scale: 1.0 }, 1e-6, 400.0),
            (Density::beta(2.0, 5.0), 0.0, 1.0),
            (Density::beta(4.0, 1.0), 0.0, 1.0),
            (Density::beta(1.0, 10.0), 0.0, 1.0),
        ];
        for (d, lo, hi) in cases {
            let m = mass(&d, lo, hi, 400_001);
            assert!((m - 1.0).abs() < 1e-4, "{d:?}: {m}");
        }
    }

    #[test]
    fn point_values() {
        assert!((Density::Pareto { a: 5.0 }.eval(1.0) - 5.0 / 64.0).abs() < 1e-15);
        assert!((Density::beta(4.0, 1.0).eval(1.0) - 4.0).abs() < 1e-12);
        assert!((Density::beta(1.0, 10.0).eval(0.0) - 10.0).abs() < 1e-9);
        assert!((Density::HalfCauchy { scale: 1.0 }.eval(0.0) - 2.0 / PI).abs() < 1e-15);
        let c = Density::combination([(1.0, Density::beta(2.0, 7.0)), (1.0, Density::beta(3.0, 4.0))], -1.0);
        assert!((c.eval(1.0) + 1.0).abs() < 1e-15);
    }
}

//! Exposure constraint sets and the consumption band.
//!
//! Only sets with closed-form projections are supported: the full space, the
//! nonnegative orthant (no short selling) and axis-aligned boxes.

use nalgebra::DVector;

use crate::error::{Error, Result, ValidationIssue};

#[derive(Debug, Clone, PartialEq)]
pub enum ExposureSet {
    FullSpace,
    NonnegativeOrthant,
    /// Bounds may be infinite.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
}

impl ExposureSet {
    pub fn boxed(lower: impl Into<Vec<f64>>, upper: impl Into<Vec<f64>>) -> Self {
        ExposureSet::Box {
            lower: DVector::from_vec(lower.into()),
            upper: DVector::from_vec(upper.into()),
        }
    }

    pub fn validate(&self, dim: usize) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if let ExposureSet::Box { lower, upper } = self {
            if lower.len() != dim || upper.len() != dim {
                issues.push(ValidationIssue::DimensionMismatch(format!(
                    "box bounds have {}/{} entries, expected {dim}",
                    lower.len(),
                    upper.len()
                )));
                return issues;
            }
            for (index, (&l, &u)) in lower.iter().zip(upper.iter()).enumerate() {
                if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                    issues.push(ValidationIssue::NonFinite(format!("box bound {index}")));
                } else if l > u {
                    issues.push(ValidationIssue::InvalidBox {
                        index,
                        lower: l,
                        upper: u,
                    });
                }
            }
        }
        issues
    }

    /// Cones are invariant under positive diagonal scaling.
    pub fn is_cone(&self) -> bool {
        matches!(self, ExposureSet::FullSpace | ExposureSet::NonnegativeOrthant)
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        (self.project(v) - v).amax() <= tol
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            ExposureSet::FullSpace => v.clone(),
            ExposureSet::NonnegativeOrthant => v.map(|x| x.max(0.0)),
            ExposureSet::Box { lower, upper } => DVector::from_iterator(
                v.len(),
                v.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(&x, (&l, &u))| x.max(l).min(u)),
            ),
        }
    }

    /// Squared Euclidean distance to the set.
    pub fn distance_sq(&self, v: &DVector<f64>) -> f64 {
        match self {
            ExposureSet::FullSpace => 0.0,
            _ => (v - self.project(v)).norm_squared(),
        }
    }

    /// The image of the set under `diag(√d)`.
    pub fn scale(&self, d: &DVector<f64>) -> Result<ExposureSet> {
        if let Some((index, &value)) = d.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::NonpositiveScale { index, value });
        }
        Ok(match self {
            ExposureSet::FullSpace => ExposureSet::FullSpace,
            ExposureSet::NonnegativeOrthant => ExposureSet::NonnegativeOrthant,
            ExposureSet::Box { lower, upper } => {
                let root = d.map(f64::sqrt);
                ExposureSet::Box {
                    lower: lower.component_mul(&root),
                    upper: upper.component_mul(&root),
                }
            }
        })
    }
}

/// Consumption-rate band `[lower, upper]`; `upper = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionBand {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl ConsumptionBand {
    pub const UNCONSTRAINED: ConsumptionBand = ConsumptionBand {
        lower: 0.0,
        upper: None,
    };

    pub fn new(lower: f64, upper: Option<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn validate(&self) -> Vec<ValidationIssue> {
        let ok =
            self.lower >= 0.0 && self.lower.is_finite() && self.upper.is_none_or(|u| u > self.lower && !u.is_nan());
        if ok {
            Vec::new()
        } else {
            vec![ValidationIssue::InvalidConsumptionBand {
                lower: self.lower,
                upper: self.upper,
            }]
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.lower == 0.0 && self.upper.is_none()
    }

    /// `median(lower, raw, upper)`.
    pub fn clamp(&self, raw: f64) -> f64 {
        let c = raw.max(self.lower);
        match self.upper {
            Some(u) => c.min(u),
            None => c,
        }
    }

    /// Lower end `1/c̄` of the band for the value curve (0 when unbounded).
    pub fn level_floor(&self) -> f64 {
        self.upper.map_or(0.0, |u| 1.0 / u)
    }

    /// Upper end `1/c̲` of the band for the value curve (∞ when the floor is 0).
    pub fn level_ceiling(&self) -> f64 {
        if self.lower > 0.0 {
            1.0 / self.lower
        } else {
            f64::INFINITY
        }
    }

    /// `clamp(y, 1/c̄, 1/c̲)`, the denominator of the consumption ratio.
    pub fn clamp_level(&self, y: f64) -> f64 {
        y.min(self.level_ceiling()).max(self.level_floor())
    }

    /// `g(y) = y / clamp(y, 1/c̄, 1/c̲)`; equals `c*·y`.
    pub fn consumption_ratio(&self, y: f64) -> f64 {
        y / self.clamp_level(y)
    }
}

pub fn project(set: &ExposureSet, v: &DVector<f64>) -> DVector<f64> {
    set.project(v)
}

pub fn distance_sq(set: &ExposureSet, v: &DVector<f64>) -> f64 {
    set.distance_sq(v)
}

pub fn scale_set(set: &ExposureSet, d: &DVector<f64>) -> Result<ExposureSet> {
    set.scale(d)
}

pub fn clamp_consumption(band: &ConsumptionBand, raw: f64) -> f64 {
    band.clamp(raw)
}

//! Financial-market primitives: rates, drifts, the volatility matrix, and the
//! utility parameters of a power-utility investor.
//!
//! Everything downstream works with two derived objects, the covariance
//! `Σ = σσᵀ` and the market price of risk `θ = σᵀΣ⁻¹(μ − r·1)`.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result, ValidationIssue};

/// Smallest admissible eigenvalue of the covariance matrix.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// A deterministic per-year scalar, either constant or piecewise constant.
///
/// For the piecewise form `knots[i]` is the time at which `values[i]` starts
/// to apply; `knots[0]` must be 0 and knots must be strictly increasing.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Piecewise { knots: Vec<f64>, values: Vec<f64> },
}

impl Schedule {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Piecewise { knots, values } => {
                // last knot <= t
                let idx = knots.partition_point(|&k| k <= t).saturating_sub(1);
                values[idx]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }

    fn check(&self, what: &str, issues: &mut Vec<ValidationIssue>) {
        match self {
            Schedule::Constant(v) => {
                if !v.is_finite() {
                    issues.push(ValidationIssue::NonFinite(what.to_owned()));
                }
            }
            Schedule::Piecewise { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    issues.push(ValidationIssue::InvalidSchedule(format!(
                        "{what}: {} knots for {} values",
                        knots.len(),
                        values.len()
                    )));
                    return;
                }
                if knots[0] != 0.0 {
                    issues.push(ValidationIssue::InvalidSchedule(format!(
                        "{what}: first knot must be 0"
                    )));
                }
                if knots.windows(2).any(|w| w[1] <= w[0]) {
                    issues.push(ValidationIssue::InvalidSchedule(format!(
                        "{what}: knots must be strictly increasing"
                    )));
                }
                if knots.iter().chain(values).any(|v| !v.is_finite()) {
                    issues.push(ValidationIssue::NonFinite(what.to_owned()));
                }
            }
        }
    }
}

impl From<f64> for Schedule {
    fn from(v: f64) -> Self {
        Schedule::Constant(v)
    }
}

/// Market and preference parameters. `μ` and `σ` are time-constant; `r` and
/// `ρ` may be piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    /// Investment horizon `T` in years.
    pub horizon: f64,
    pub rate: Schedule,
    pub discount: Schedule,
    /// Expected returns of the `m` risky assets.
    pub drift: DVector<f64>,
    /// `m × n` volatility matrix.
    pub volatility: DMatrix<f64>,
    pub risk_aversion: f64,
    pub bequest_weight: f64,
    pub initial_wealth: f64,
}

impl MarketModel {
    pub fn assets(&self) -> usize {
        self.volatility.nrows()
    }

    pub fn factors(&self) -> usize {
        self.volatility.ncols()
    }

    /// `Σ = σσᵀ`, rejected when its smallest eigenvalue is at or below
    /// [`SINGULARITY_THRESHOLD`].
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let sigma = &self.volatility * self.volatility.transpose();
        let min_eigenvalue = min_eigenvalue(&sigma);
        if !(min_eigenvalue > SINGULARITY_THRESHOLD) {
            return Err(Error::SingularCovariance { min_eigenvalue });
        }
        Ok(sigma)
    }

    /// The `n × m` loading `σᵀΣ⁻¹` mapping excess returns to `θ`.
    pub fn risk_loading(&self) -> Result<DMatrix<f64>> {
        let sigma = self.covariance()?;
        let chol = sigma
            .cholesky()
            .ok_or(Error::SingularCovariance { min_eigenvalue: 0.0 })?;
        // (Σ⁻¹σ)ᵀ = σᵀΣ⁻¹ since Σ is symmetric
        Ok(chol.solve(&self.volatility).transpose())
    }

    /// Excess-return vector `B(t) = μ − r(t)·1`.
    pub fn risk_premium(&self, t: f64) -> DVector<f64> {
        let r = self.rate.at(t);
        self.drift.map(|mu| mu - r)
    }

    /// Market price of risk at `t = 0`.
    pub fn market_price_of_risk(&self) -> Result<DVector<f64>> {
        self.market_price_of_risk_at(0.0)
    }

    pub fn market_price_of_risk_at(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.risk_loading()? * self.risk_premium(t))
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Per-factor ambiguity-aversion weights `η`; `H = diag(η)` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityProfile {
    pub eta: DVector<f64>,
}

impl AmbiguityProfile {
    pub fn new(eta: impl Into<Vec<f64>>) -> Self {
        Self {
            eta: DVector::from_vec(eta.into()),
        }
    }

    pub fn neutral(factors: usize) -> Self {
        Self {
            eta: DVector::zeros(factors),
        }
    }

    pub fn is_neutral(&self) -> bool {
        self.eta.iter().all(|&e| e == 0.0)
    }

    /// Diagonal of `I + H/γ`.
    pub fn scale(&self, gamma: f64) -> DVector<f64> {
        self.eta.map(|e| 1.0 + e / gamma)
    }
}

/// Collects every violated invariant; an empty list means the inputs are usable.
pub fn validate(model: &MarketModel, profile: &AmbiguityProfile) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let gamma = model.risk_aversion;
    if gamma == 1.0 {
        issues.push(ValidationIssue::LogUtilityExcluded);
    } else if !(gamma > 0.0) || !gamma.is_finite() {
        issues.push(ValidationIssue::NonpositiveRiskAversion(gamma));
    }
    if !(model.bequest_weight > 0.0) || !model.bequest_weight.is_finite() {
        issues.push(ValidationIssue::NonpositiveBequestWeight(model.bequest_weight));
    }
    if !(model.initial_wealth > 0.0) || !model.initial_wealth.is_finite() {
        issues.push(ValidationIssue::NonpositiveInitialWealth(model.initial_wealth));
    }
    if !(model.horizon > 0.0) || !model.horizon.is_finite() {
        issues.push(ValidationIssue::NonpositiveHorizon(model.horizon));
    }
    model.rate.check("rate", &mut issues);
    model.discount.check("discount", &mut issues);

    let (m, n) = (model.assets(), model.factors());
    if model.drift.len() != m {
        issues.push(ValidationIssue::DimensionMismatch(format!(
            "drift has {} entries, volatility has {m} rows",
            model.drift.len()
        )));
    }
    if profile.eta.len() != n {
        issues.push(ValidationIssue::DimensionMismatch(format!(
            "eta has {} entries, volatility has {n} columns",
            profile.eta.len()
        )));
    }
    if m == 0 || n == 0 {
        issues.push(ValidationIssue::DimensionMismatch("empty volatility matrix".into()));
    } else if m > n {
        issues.push(ValidationIssue::MoreAssetsThanFactors { assets: m, factors: n });
    }
    let finite = model.drift.iter().chain(model.volatility.iter()).all(|v| v.is_finite());
    if !finite {
        issues.push(ValidationIssue::NonFinite("drift/volatility".into()));
    } else if m > 0 && n > 0 && m <= n {
        if let Err(Error::SingularCovariance { min_eigenvalue }) = model.covariance() {
            issues.push(ValidationIssue::SingularCovariance { min_eigenvalue });
        }
    }

    for (index, &value) in profile.eta.iter().enumerate() {
        if value < 0.0 {
            issues.push(ValidationIssue::NegativeAmbiguityWeight { index, value });
        } else if !value.is_finite() {
            issues.push(ValidationIssue::NonFinite(format!("eta[{index}]")));
        }
    }
    issues
}

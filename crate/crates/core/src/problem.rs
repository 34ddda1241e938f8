//! A validated robust investment-consumption problem: market, ambiguity
//! weights and constraints, with the derived quantities cached.

use nalgebra::{DMatrix, DVector};

use crate::constraints::{ConsumptionBand, ExposureSet};
use crate::error::{Error, Result};
use crate::market::{validate, AmbiguityProfile, MarketModel};

#[derive(Debug, Clone)]
pub struct RobustProblem {
    market: MarketModel,
    ambiguity: AmbiguityProfile,
    exposure: ExposureSet,
    band: ConsumptionBand,
    loading: DMatrix<f64>,
    scale: DVector<f64>,
    scaled_set: ExposureSet,
}

impl RobustProblem {
    pub fn new(
        market: MarketModel,
        ambiguity: AmbiguityProfile,
        exposure: ExposureSet,
        band: ConsumptionBand,
    ) -> Result<Self> {
        let mut issues = validate(&market, &ambiguity);
        issues.extend(exposure.validate(market.factors()));
        issues.extend(band.validate());
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        let loading = market.risk_loading()?;
        let scale = ambiguity.scale(market.risk_aversion);
        let scaled_set = exposure.scale(&scale)?;
        Ok(Self {
            market,
            ambiguity,
            exposure,
            band,
            loading,
            scale,
            scaled_set,
        })
    }

    pub fn market(&self) -> &MarketModel {
        &self.market
    }

    pub fn ambiguity(&self) -> &AmbiguityProfile {
        &self.ambiguity
    }

    pub fn eta(&self) -> &DVector<f64> {
        &self.ambiguity.eta
    }

    pub fn exposure(&self) -> &ExposureSet {
        &self.exposure
    }

    pub fn band(&self) -> &ConsumptionBand {
        &self.band
    }

    pub fn gamma(&self) -> f64 {
        self.market.risk_aversion
    }

    pub fn horizon(&self) -> f64 {
        self.market.horizon
    }

    /// `β^{1/γ}`, the common terminal value of every curve.
    pub fn terminal_level(&self) -> f64 {
        self.market.bequest_weight.powf(1.0 / self.gamma())
    }

    /// Diagonal of `I + H/γ`.
    pub fn scale(&self) -> &DVector<f64> {
        &self.scale
    }

    /// The exposure set seen through `(I + H/γ)^{1/2}`.
    pub fn scaled_set(&self) -> &ExposureSet {
        &self.scaled_set
    }

    pub fn theta(&self, t: f64) -> DVector<f64> {
        &self.loading * self.market.risk_premium(t)
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.market.rate.at(t)
    }

    pub fn discount(&self, t: f64) -> f64 {
        self.market.discount.at(t)
    }

    /// Same market and constraints with every ambiguity weight set to zero.
    pub fn neutral(&self) -> Self {
        let ambiguity = AmbiguityProfile::neutral(self.market.factors());
        Self {
            scale: ambiguity.scale(self.gamma()),
            scaled_set: self.exposure.clone(),
            ambiguity,
            ..self.clone()
        }
    }

    pub fn with_ambiguity(&self, ambiguity: AmbiguityProfile) -> Result<Self> {
        Self::new(self.market.clone(), ambiguity, self.exposure.clone(), self.band)
    }

    pub fn with_exposure(&self, exposure: ExposureSet) -> Result<Self> {
        Self::new(self.market.clone(), self.ambiguity.clone(), exposure, self.band)
    }

    pub fn with_band(&self, band: ConsumptionBand) -> Result<Self> {
        Self::new(self.market.clone(), self.ambiguity.clone(), self.exposure.clone(), band)
    }
}

//! The reference two-asset, three-factor market and its constraint cases.

use nalgebra::{DMatrix, DVector};

use crate::constraints::{ConsumptionBand, ExposureSet};
use crate::error::Result;
use crate::market::{AmbiguityProfile, MarketModel};
use crate::problem::RobustProblem;

pub fn reference_market(gamma: f64) -> MarketModel {
    MarketModel {
        horizon: 3.0,
        rate: 0.05.into(),
        discount: 0.015.into(),
        drift: DVector::from_vec(vec![0.09, 0.11]),
        volatility: DMatrix::from_row_slice(2, 3, &[0.050, 0.066, 0.082, 0.058, 0.0740, 0.090]),
        risk_aversion: gamma,
        bequest_weight: 1.0,
        initial_wealth: 1.0,
    }
}

pub fn reference_ambiguity() -> AmbiguityProfile {
    AmbiguityProfile::new(vec![1.0, 3.0, 5.0])
}

pub fn reference_problem(gamma: f64, exposure: ExposureSet, band: ConsumptionBand) -> Result<RobustProblem> {
    RobustProblem::new(reference_market(gamma), reference_ambiguity(), exposure, band)
}

/// One row of the constraint-case table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCase {
    pub name: String,
    pub short_selling: bool,
    pub band: ConsumptionBand,
}

impl ConstraintCase {
    pub fn exposure(&self) -> ExposureSet {
        if self.short_selling {
            ExposureSet::FullSpace
        } else {
            ExposureSet::NonnegativeOrthant
        }
    }
}

/// Cases C1..C5 and the unconstrained NC, in that order.
pub fn constraint_cases() -> Vec<ConstraintCase> {
    let case = |name: &str, short_selling, lower, upper| ConstraintCase {
        name: name.to_string(),
        short_selling,
        band: ConsumptionBand::new(lower, upper),
    };
    vec![
        case("C1", false, 0.0, Some(1.0)),
        case("C2", false, 0.2, None),
        case("C3", false, 0.0, None),
        case("C4", true, 0.0, Some(1.0)),
        case("C5", true, 0.2, None),
        case("NC", true, 0.0, None),
    ]
}

/// The four exposure scenarios (ambiguity on/off × short selling on/off),
/// all with an unconstrained consumption band.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureScenario {
    pub name: &'static str,
    pub ambiguity: bool,
    pub short_selling: bool,
}

pub fn exposure_scenarios() -> Vec<ExposureScenario> {
    vec![
        ExposureScenario {
            name: "case1",
            ambiguity: true,
            short_selling: true,
        },
        ExposureScenario {
            name: "case2",
            ambiguity: false,
            short_selling: true,
        },
        ExposureScenario {
            name: "case3",
            ambiguity: true,
            short_selling: false,
        },
        ExposureScenario {
            name: "case4",
            ambiguity: false,
            short_selling: false,
        },
    ]
}

impl ExposureScenario {
    pub fn problem(&self, gamma: f64) -> Result<RobustProblem> {
        let ambiguity = if self.ambiguity {
            reference_ambiguity()
        } else {
            AmbiguityProfile::neutral(3)
        };
        let exposure = if self.short_selling {
            ExposureSet::FullSpace
        } else {
            ExposureSet::NonnegativeOrthant
        };
        RobustProblem::new(
            reference_market(gamma),
            ambiguity,
            exposure,
            ConsumptionBand::UNCONSTRAINED,
        )
    }
}

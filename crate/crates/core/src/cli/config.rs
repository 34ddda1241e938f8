//! Scenario files (TOML).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::constraints::{ConsumptionBand, ExposureSet};
use crate::error::{Error, Result};
use crate::market::{AmbiguityProfile, MarketModel, Schedule};
use crate::problem::RobustProblem;
use crate::scenarios::{constraint_cases, ConstraintCase};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: MarketSection,
    pub ambiguity: AmbiguitySection,
    #[serde(default)]
    pub constraints: ConstraintSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub horizon: f64,
    pub rate: Schedule,
    pub discount: Schedule,
    pub drift: Vec<f64>,
    /// One row per asset.
    pub volatility: Vec<Vec<f64>>,
    pub risk_aversion: f64,
    #[serde(default = "one")]
    pub bequest_weight: f64,
    #[serde(default = "one")]
    pub initial_wealth: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguitySection {
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExposureKind {
    #[default]
    Full,
    Orthant,
    Box,
}

/// Exposure set and consumption band. A missing or infinite ceiling means
/// no upper bound on consumption.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    #[serde(default)]
    pub exposure: ExposureKind,
    pub box_lower: Option<Vec<f64>>,
    pub box_upper: Option<Vec<f64>>,
    #[serde(default)]
    pub consumption_floor: f64,
    pub consumption_ceiling: Option<f64>,
}

impl ConstraintSection {
    pub fn exposure_set(&self) -> Result<ExposureSet> {
        Ok(match self.exposure {
            ExposureKind::Full => ExposureSet::FullSpace,
            ExposureKind::Orthant => ExposureSet::NonnegativeOrthant,
            ExposureKind::Box => match (&self.box_lower, &self.box_upper) {
                (Some(l), Some(u)) => ExposureSet::boxed(l.clone(), u.clone()),
                _ => return Err(Error::Config("exposure = \"box\" needs box_lower and box_upper".into())),
            },
        })
    }

    pub fn band(&self) -> ConsumptionBand {
        ConsumptionBand::new(
            self.consumption_floor,
            self.consumption_ceiling.filter(|c| *c != f64::INFINITY),
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    3000
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { steps: default_steps() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_sim_steps")]
    pub steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
    #[serde(default)]
    pub control_variate: bool,
    #[serde(default)]
    pub cases: Vec<CaseOverride>,
}

fn default_paths() -> usize {
    50_000
}

fn default_sim_steps() -> usize {
    600
}

fn default_seed() -> u64 {
    42
}

fn yes() -> bool {
    true
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            steps: default_sim_steps(),
            seed: default_seed(),
            antithetic: true,
            control_variate: false,
            cases: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default)]
    pub cases: Vec<CaseOverride>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub index: Option<usize>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// A named case that overrides parts of the base scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseOverride {
    pub name: String,
    pub exposure: Option<ExposureKind>,
    pub box_lower: Option<Vec<f64>>,
    pub box_upper: Option<Vec<f64>>,
    pub consumption_floor: Option<f64>,
    pub consumption_ceiling: Option<f64>,
    pub eta: Option<Vec<f64>>,
}

impl CaseOverride {
    fn apply(&self, base: &ConstraintSection) -> ConstraintSection {
        ConstraintSection {
            exposure: self.exposure.unwrap_or(base.exposure),
            box_lower: self.box_lower.clone().or_else(|| base.box_lower.clone()),
            box_upper: self.box_upper.clone().or_else(|| base.box_upper.clone()),
            consumption_floor: self.consumption_floor.unwrap_or(base.consumption_floor),
            consumption_ceiling: match (self.consumption_floor, self.consumption_ceiling) {
                (_, Some(c)) => Some(c),
                // a case that sets only the floor has no ceiling
                (Some(_), None) => None,
                (None, None) => base.consumption_ceiling,
            },
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn market_model(&self) -> Result<MarketModel> {
        let m = &self.market;
        let rows = m.volatility.len();
        let cols = m.volatility.first().map_or(0, Vec::len);
        if m.volatility.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("volatility rows have different lengths".into()));
        }
        let flat: Vec<f64> = m.volatility.iter().flatten().copied().collect();
        Ok(MarketModel {
            horizon: m.horizon,
            rate: m.rate.clone(),
            discount: m.discount.clone(),
            drift: DVector::from_vec(m.drift.clone()),
            volatility: DMatrix::from_row_slice(rows, cols, &flat),
            risk_aversion: m.risk_aversion,
            bequest_weight: m.bequest_weight,
            initial_wealth: m.initial_wealth,
        })
    }

    pub fn problem(&self) -> Result<RobustProblem> {
        RobustProblem::new(
            self.market_model()?,
            AmbiguityProfile::new(self.ambiguity.eta.clone()),
            self.constraints.exposure_set()?,
            self.constraints.band(),
        )
    }

    fn case_problem(&self, case: &CaseOverride) -> Result<RobustProblem> {
        let constraints = case.apply(&self.constraints);
        let eta = case.eta.clone().unwrap_or_else(|| self.ambiguity.eta.clone());
        RobustProblem::new(
            self.market_model()?,
            AmbiguityProfile::new(eta),
            constraints.exposure_set()?,
            constraints.band(),
        )
    }

    /// Constraint cases for the comparison suite; the reference table when
    /// none are configured.
    pub fn compare_cases(&self) -> Result<Vec<ConstraintCase>> {
        if self.compare.cases.is_empty() {
            return Ok(constraint_cases());
        }
        self.compare
            .cases
            .iter()
            .map(|c| {
                let section = c.apply(&self.constraints);
                let short_selling = match section.exposure {
                    ExposureKind::Full => true,
                    ExposureKind::Orthant => false,
                    ExposureKind::Box => {
                        return Err(Error::Config(format!(
                            "comparison case {} must use exposure \"full\" or \"orthant\"",
                            c.name
                        )))
                    }
                };
                if c.eta.is_some() {
                    return Err(Error::Config(format!(
                        "comparison case {} may not override eta",
                        c.name
                    )));
                }
                Ok(ConstraintCase {
                    name: c.name.clone(),
                    short_selling,
                    band: section.band(),
                })
            })
            .collect()
    }

    /// Named problems for the Monte Carlo check; the base scenario alone
    /// when none are configured.
    pub fn simulate_cases(&self) -> Result<Vec<(String, RobustProblem)>> {
        if self.simulate.cases.is_empty() {
            return Ok(vec![("base".to_string(), self.problem()?)]);
        }
        self.simulate
            .cases
            .iter()
            .map(|c| Ok((c.name.clone(), self.case_problem(c)?)))
            .collect()
    }
}

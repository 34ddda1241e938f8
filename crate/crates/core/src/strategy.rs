//! Optimal and sub-optimal strategies, value function and utility loss, plus
//! the comparative-statics suites over constraint cases and ambiguity weights.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::constraints::{ConsumptionBand, ExposureSet};
use crate::detsolve::{solve_curves, SolutionCurves, TimeGrid};
use crate::error::{Error, Result};
use crate::market::AmbiguityProfile;
use crate::problem::RobustProblem;
use crate::scenarios::ConstraintCase;

/// Slack for pointwise ordering and monotonicity assertions.
pub const ORDER_SLACK: f64 = 1e-8;

/// Tolerance on the utility-loss range.
pub const LOSS_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySnapshot {
    pub t: f64,
    pub p_star: DVector<f64>,
    pub c_star: f64,
    pub phi_star: DVector<f64>,
    /// Value at unit wealth.
    pub value: f64,
    pub loss: f64,
}

fn inner_target(theta: &DVector<f64>, eta: &DVector<f64>, gamma: f64, y: f64, z: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(theta.len(), |i, _| {
        let d = 1.0 + eta[i] / gamma;
        (theta[i] / gamma + (1.0 - eta[i] / (1.0 - gamma)) * z[i] / y) / d.sqrt()
    })
}

/// Robust optimal exposure `p*`; `scaled_set` is the auxiliary set.
pub fn optimal_exposure(
    theta: &DVector<f64>,
    eta: &DVector<f64>,
    gamma: f64,
    scaled_set: &ExposureSet,
    y: f64,
    z: &DVector<f64>,
) -> DVector<f64> {
    let projected = scaled_set.project(&inner_target(theta, eta, gamma, y, z));
    DVector::from_fn(theta.len(), |i, _| projected[i] / (1.0 + eta[i] / gamma).sqrt())
}

pub fn optimal_consumption(y: f64, band: &ConsumptionBand) -> f64 {
    band.clamp(1.0 / y)
}

/// Worst-case distortion `φ* = −H[(γ/(1−γ)) z/y + p*]`.
pub fn optimal_distortion(
    theta: &DVector<f64>,
    eta: &DVector<f64>,
    gamma: f64,
    scaled_set: &ExposureSet,
    y: f64,
    z: &DVector<f64>,
) -> DVector<f64> {
    let p = optimal_exposure(theta, eta, gamma, scaled_set, y, z);
    DVector::from_fn(theta.len(), |i, _| -eta[i] * (gamma / (1.0 - gamma) * z[i] / y + p[i]))
}

/// Closed form under a short-selling ban: `p* = θ⁺/(γ + η)`,
/// `φ* = (1/d − 1)θ⁺` with `d = 1 + η/γ`.
pub fn no_short_sale_strategy(theta: &DVector<f64>, eta: &DVector<f64>, gamma: f64) -> (DVector<f64>, DVector<f64>) {
    let pos = theta.map(|v| v.max(0.0));
    let p = DVector::from_fn(theta.len(), |i, _| pos[i] / (gamma + eta[i]));
    let phi = DVector::from_fn(theta.len(), |i, _| (1.0 / (1.0 + eta[i] / gamma) - 1.0) * pos[i]);
    (p, phi)
}

/// Worst-case distortion faced by the investor who ignores ambiguity and
/// holds the neutral exposure projected onto `neutral_set`.
#[allow(clippy::too_many_arguments)]
pub fn suboptimal_distortion(
    theta: &DVector<f64>,
    eta: &DVector<f64>,
    gamma: f64,
    neutral_set: &ExposureSet,
    ytilde: f64,
    ztilde: &DVector<f64>,
    y0: f64,
    z0: &DVector<f64>,
) -> DVector<f64> {
    let p0 = neutral_set.project(&(theta / gamma + z0 / y0));
    DVector::from_fn(theta.len(), |i, _| {
        -gamma * eta[i] / (1.0 - gamma) * ztilde[i] / ytilde - eta[i] * p0[i]
    })
}

/// `V = x^{1−γ} y^γ / (1−γ)`.
pub fn value_function(x: f64, y: f64, gamma: f64) -> f64 {
    x.powf(1.0 - gamma) * y.powf(gamma) / (1.0 - gamma)
}

/// `L = 1 − (Ỹ/Y)^{γ/(1−γ)}`, checked against `[0, 1]` up to [`LOSS_SLACK`].
pub fn utility_loss(y: f64, ytilde: f64, gamma: f64) -> Result<f64> {
    let value = 1.0 - (ytilde / y).powf(gamma / (1.0 - gamma));
    if !(-LOSS_SLACK..=1.0 + LOSS_SLACK).contains(&value) {
        return Err(Error::LossOutOfRange { value });
    }
    Ok(value)
}

/// Strategy at grid node `k` of solved curves (deterministic case, `z = 0`).
pub fn snapshot(problem: &RobustProblem, curves: &SolutionCurves, k: usize) -> Result<StrategySnapshot> {
    let t = curves.grid.node(k);
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let z = DVector::zeros(theta.len());
    let y = curves.y[k];
    Ok(StrategySnapshot {
        t,
        p_star: optimal_exposure(&theta, problem.eta(), gamma, problem.scaled_set(), y, &z),
        c_star: optimal_consumption(y, problem.band()),
        phi_star: optimal_distortion(&theta, problem.eta(), gamma, problem.scaled_set(), y, &z),
        value: value_function(1.0, y, gamma),
        loss: utility_loss(y, curves.ytilde[k], gamma)?,
    })
}

/// Node-wise consumption, unit-wealth value and loss for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseCurves {
    pub name: String,
    pub curves: SolutionCurves,
    pub c_star: Vec<f64>,
    pub value: Vec<f64>,
    pub loss: Vec<f64>,
}

impl CaseCurves {
    pub fn from_problem(name: impl Into<String>, problem: &RobustProblem, grid: &TimeGrid) -> Result<Self> {
        let curves = solve_curves(problem, grid)?;
        let gamma = problem.gamma();
        let c_star = curves
            .y
            .iter()
            .map(|&y| optimal_consumption(y, problem.band()))
            .collect();
        let value = curves.y.iter().map(|&y| value_function(1.0, y, gamma)).collect();
        let loss = curves
            .y
            .iter()
            .zip(&curves.ytilde)
            .map(|(&y, &yt)| utility_loss(y, yt, gamma))
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.into(),
            curves,
            c_star,
            value,
            loss,
        })
    }
}

/// Outcome of one pointwise inequality `lhs(t) ≤ rhs(t) + slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub label: String,
    pub holds: bool,
    /// Largest `lhs − rhs` over the grid and where it occurs.
    pub worst_gap: f64,
    pub worst_t: f64,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
}

impl PropertyCheck {
    fn pointwise(label: String, nodes: &[f64], lhs: &[f64], rhs: &[f64]) -> Self {
        let mut worst = (f64::NEG_INFINITY, 0usize);
        for k in 0..nodes.len() {
            let gap = lhs[k] - rhs[k];
            if gap > worst.0 || gap.is_nan() {
                worst = (gap, k);
            }
        }
        let k = worst.1;
        Self {
            label,
            holds: worst.0 <= ORDER_SLACK,
            worst_gap: worst.0,
            worst_t: nodes[k],
            worst_lhs: lhs[k],
            worst_rhs: rhs[k],
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: max gap {:e} at t = {} ({} vs {})",
            if self.holds { "PASS" } else { "FAIL" },
            self.label,
            self.worst_gap,
            self.worst_t,
            self.worst_lhs,
            self.worst_rhs
        )
    }
}

#[derive(Debug, Clone)]
pub struct CaseSuite {
    pub gamma: f64,
    pub cases: Vec<CaseCurves>,
    pub orderings: Vec<PropertyCheck>,
}

impl CaseSuite {
    pub fn all_hold(&self) -> bool {
        self.orderings.iter().all(|c| c.holds)
    }

    /// First violated inequality as an error.
    pub fn ensure(&self) -> Result<()> {
        match self.orderings.iter().find(|c| !c.holds) {
            Some(c) => Err(Error::OrderingViolation {
                inequality: c.label.clone(),
                t: c.worst_t,
                lhs: c.worst_lhs,
                rhs: c.worst_rhs,
            }),
            None => Ok(()),
        }
    }

    pub fn case(&self, name: &str) -> Option<&CaseCurves> {
        self.cases.iter().find(|c| c.name == name)
    }
}

enum Quantity {
    Consumption,
    Value,
}

/// `(quantity, smaller, larger)` triples that must hold for this `γ`.
fn case_orderings(gamma: f64) -> Vec<(&'static str, Quantity, &'static str, &'static str)> {
    use Quantity::*;
    let high = gamma > 1.0;
    let (ci, ciii) = if high { ("(i)", "(iii)") } else { ("(i')", "(iii')") };
    let ord = |a, b| if high { (a, b) } else { (b, a) };
    let mut out = Vec::new();
    for (a, b) in [("C1", "C4"), ("C2", "C5"), ("C3", "NC")] {
        let (lo, hi) = ord(a, b);
        out.push((ci, Consumption, lo, hi));
    }
    for (a, b) in [("C1", "C4"), ("C2", "C5"), ("C3", "NC")] {
        out.push(("(ii)", Value, a, b));
    }
    for (a, b) in [("C3", "C1"), ("C2", "C3"), ("NC", "C4"), ("C5", "NC")] {
        let (lo, hi) = ord(a, b);
        out.push((ciii, Value, lo, hi));
    }
    out
}

/// Solves every constraint case with the shared market and ambiguity weights
/// and checks the pointwise orderings between cases. Orderings whose cases are
/// absent from `cases` are skipped.
pub fn run_case_suite(base: &RobustProblem, cases: &[ConstraintCase], grid: &TimeGrid) -> Result<CaseSuite> {
    let solved = cases
        .par_iter()
        .map(|case| {
            let problem = RobustProblem::new(
                base.market().clone(),
                base.ambiguity().clone(),
                case.exposure(),
                case.band,
            )?;
            CaseCurves::from_problem(case.name.clone(), &problem, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let nodes = grid.nodes();
    let find = |name: &str| solved.iter().find(|c| c.name == name);
    let mut orderings = Vec::new();
    for (tag, quantity, lo, hi) in case_orderings(base.gamma()) {
        let (Some(a), Some(b)) = (find(lo), find(hi)) else {
            continue;
        };
        let (sym, lhs, rhs) = match quantity {
            Quantity::Consumption => ("c*", &a.c_star, &b.c_star),
            Quantity::Value => ("V", &a.value, &b.value),
        };
        let label = format!("{tag} {sym}_{lo} <= {sym}_{hi}");
        orderings.push(PropertyCheck::pointwise(label, &nodes, lhs, rhs));
    }
    Ok(CaseSuite {
        gamma: base.gamma(),
        cases: solved,
        orderings,
    })
}

#[derive(Debug, Clone)]
pub struct EtaSweep {
    pub gamma: f64,
    pub index: usize,
    pub values: Vec<f64>,
    pub cases: Vec<CaseCurves>,
    pub checks: Vec<PropertyCheck>,
}

impl EtaSweep {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.holds) {
            Some(c) => Err(Error::MonotonicityViolation {
                property: c.label.clone(),
                t: c.worst_t,
                from: c.worst_lhs,
                to: c.worst_rhs,
            }),
            None => Ok(()),
        }
    }
}

/// Varies `η[index]` over `values`, keeping the other weights fixed, and checks
/// that `c*` moves against `η` for `γ > 1` (with it for `γ < 1`) and that the
/// value never increases. Requires the short-selling ban.
pub fn eta_sweep(base: &RobustProblem, index: usize, values: &[f64], grid: &TimeGrid) -> Result<EtaSweep> {
    if *base.exposure() != ExposureSet::NonnegativeOrthant {
        return Err(Error::InvalidArgument(
            "ambiguity sweep requires the no-short-selling constraint".into(),
        ));
    }
    if index >= base.eta().len() {
        return Err(Error::InvalidArgument(format!(
            "sweep index {index} out of range for {} factors",
            base.eta().len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cases = sorted
        .par_iter()
        .map(|&v| {
            let mut eta = base.eta().clone();
            eta[index] = v;
            let problem = base.with_ambiguity(AmbiguityProfile { eta })?;
            CaseCurves::from_problem(format!("eta{index}={v}"), &problem, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let nodes = grid.nodes();
    let gamma = base.gamma();
    let mut checks = Vec::new();
    for w in 0..cases.len().saturating_sub(1) {
        let (a, b) = (&cases[w], &cases[w + 1]);
        let (from, to) = (sorted[w], sorted[w + 1]);
        let c_check = if gamma > 1.0 {
            PropertyCheck::pointwise(
                format!("c* nonincreasing in eta[{index}]: {from} -> {to}"),
                &nodes,
                &b.c_star,
                &a.c_star,
            )
        } else {
            PropertyCheck::pointwise(
                format!("c* nondecreasing in eta[{index}]: {from} -> {to}"),
                &nodes,
                &a.c_star,
                &b.c_star,
            )
        };
        checks.push(c_check);
        checks.push(PropertyCheck::pointwise(
            format!("V nonincreasing in eta[{index}]: {from} -> {to}"),
            &nodes,
            &b.value,
            &a.value,
        ));
    }
    Ok(EtaSweep {
        gamma,
        index,
        values: sorted,
        cases,
        checks,
    })
}

//! Deterministic-coefficient value curves.
//!
//! With deterministic coefficients the martingale parts of the value BSDEs
//! vanish and the curves `Y`, `Y₀` and `Ỹ` solve backward ODEs. `Y` and `Y₀`
//! are integrated directly; `Ỹ` goes through `u = Ỹ^γ`, which turns the
//! Bernoulli equation into a linear one. The BSDE drivers are exposed as point
//! evaluators with the martingale component passed in.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::RobustProblem;

/// Uniform grid `t_k = kT/N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Grid(format!("need at least 2 steps, got {steps}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `t_N` is exactly `T`.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCurves {
    pub grid: TimeGrid,
    /// Robust value curve.
    pub y: Vec<f64>,
    /// Ambiguity-neutral value curve.
    pub y0: Vec<f64>,
    /// Value curve of the investor who ignores ambiguity.
    pub ytilde: Vec<f64>,
}

/// `Q(t)`; evaluates `Q₀(t)` when the problem is ambiguity-neutral.
pub fn q_coefficient(problem: &RobustProblem, t: f64) -> f64 {
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let d = problem.scale();
    let weighted: f64 = theta.iter().zip(d.iter()).map(|(th, di)| th * th / di).sum();
    let base = -problem.discount(t) + (1.0 - gamma) * problem.rate(t) + (1.0 - gamma) / (2.0 * gamma) * weighted;
    let target = DVector::from_iterator(
        theta.len(),
        theta.iter().zip(d.iter()).map(|(th, di)| th / (gamma * di.sqrt())),
    );
    base / gamma - 0.5 * (1.0 - gamma) * problem.scaled_set().distance_sq(&target)
}

/// Exposure the ambiguity-neutral investor holds in the deterministic case.
fn neutral_exposure(problem: &RobustProblem, theta: &DVector<f64>) -> DVector<f64> {
    problem.exposure().project(&(theta / problem.gamma()))
}

/// `Q̃(t)` given the ambiguity-neutral curve value `Y₀(t)`.
pub fn qtilde_coefficient(problem: &RobustProblem, y0_at_t: f64, t: f64) -> f64 {
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let p = neutral_exposure(problem, &theta);
    let k = problem.band().clamp_level(y0_at_t);
    let quad: f64 = p.iter().zip(problem.scale().iter()).map(|(pi, di)| pi * di * pi).sum();
    let base = -problem.discount(t) + (1.0 - gamma) * problem.rate(t);
    (1.0 - gamma) * (-1.0 / k - 0.5 * gamma * quad + base / (1.0 - gamma) + p.dot(&theta))
}

fn check_positive(curve: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        Some(node) => Err(Error::PositivityLoss {
            curve,
            node,
            value: values[node],
        }),
        None => Ok(()),
    }
}

/// Classical RK4 from `t_N` back to `t_0` for `−v' = rhs(t, v)`.
fn rk4_backward(grid: &TimeGrid, terminal: f64, mut rhs: impl FnMut(usize, f64, f64) -> f64) -> Vec<f64> {
    let n = grid.steps();
    let h = grid.dt();
    let mut out = vec![0.0; n + 1];
    out[n] = terminal;
    for k in (0..n).rev() {
        let (t1, t0) = (grid.node(k + 1), grid.node(k));
        let tm = 0.5 * (t0 + t1);
        let v = out[k + 1];
        // half-step index: 2k+2 at t_{k+1}, 2k+1 at the midpoint, 2k at t_k
        let k1 = rhs(2 * (k + 1), t1, v);
        let k2 = rhs(2 * k + 1, tm, v + 0.5 * h * k1);
        let k3 = rhs(2 * k + 1, tm, v + 0.5 * h * k2);
        let k4 = rhs(2 * k, t0, v + h * k3);
        out[k] = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out
}

/// Solves `−Y' = g(Y) + Q(t)Y`, `Y(T) = β^{1/γ}`, where `g(Y) = c*·Y` is the
/// clamped consumption ratio. Pass [`RobustProblem::neutral`] for `Y₀`.
pub fn integrate_y(problem: &RobustProblem, grid: &TimeGrid) -> Result<Vec<f64>> {
    let band = *problem.band();
    let constant = problem.market().rate.is_constant() && problem.market().discount.is_constant();
    let q_const = q_coefficient(problem, 0.0);
    let y = rk4_backward(grid, problem.terminal_level(), |_, t, y| {
        let q = if constant { q_const } else { q_coefficient(problem, t) };
        band.consumption_ratio(y) + q * y
    });
    check_positive("Y", &y)?;
    Ok(y)
}

/// Values of a node curve at every half-step, by 4-point Lagrange
/// interpolation; index `2k` is node `k`, index `2k+1` is `t_k + Δt/2`.
fn half_step_samples(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = Vec::with_capacity(2 * n + 1);
    for k in 0..=n {
        out.push(values[k]);
        if k == n {
            break;
        }
        if n < 3 {
            out.push(0.5 * (values[k] + values[k + 1]));
            continue;
        }
        let start = k.saturating_sub(1).min(n - 3);
        let x = k as f64 + 0.5 - start as f64;
        let mut acc = 0.0;
        for i in 0..4 {
            let mut w = 1.0;
            for j in 0..4 {
                if i != j {
                    w *= (x - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += w * values[start + i];
        }
        out.push(acc);
    }
    out
}

fn validate_curve(grid: &TimeGrid, y0: &[f64]) -> Result<()> {
    if y0.len() != grid.len() {
        return Err(Error::Grid(format!(
            "curve has {} nodes, grid has {}",
            y0.len(),
            grid.len()
        )));
    }
    check_positive("Y0", y0)
}

/// Solves the Bernoulli equation `−Ỹ' = (1/γ)[(Ỹ/K)^{1−γ} + Q̃Ỹ]` through its
/// linear form `−u' = K^{γ−1} + Q̃u`, `u = Ỹ^γ`.
pub fn integrate_ytilde(problem: &RobustProblem, y0: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    validate_curve(grid, y0)?;
    let gamma = problem.gamma();
    let band = *problem.band();
    let y0_half = half_step_samples(y0);
    let u = rk4_backward(grid, problem.market().bequest_weight, |stage, t, u| {
        let y0t = y0_half[stage];
        let k = band.clamp_level(y0t);
        k.powf(gamma - 1.0) + qtilde_coefficient(problem, y0t, t) * u
    });
    check_positive("Ytilde", &u)?;
    Ok(u.into_iter().map(|v| v.powf(1.0 / gamma)).collect())
}

/// `I[k] = ∫_{t_k}^T f` for node samples `f`: composite Simpson over pairs
/// counted from `T`, plus a 3-point one-interval rule at odd distance.
pub(crate) fn cumulative_from_end(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    for k in (0..n).rev() {
        out[k] = if (n - k).is_multiple_of(2) {
            out[k + 2] + h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2])
        } else if k + 2 <= n {
            out[k + 1] + h / 12.0 * (5.0 * f[k] + 8.0 * f[k + 1] - f[k + 2])
        } else {
            out[k + 1] + h / 12.0 * (-f[k - 1] + 8.0 * f[k] + 5.0 * f[k + 1])
        };
    }
    out
}

/// Explicit solution of the Bernoulli equation evaluated by quadrature.
pub fn closed_form_ytilde(problem: &RobustProblem, y0: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    validate_curve(grid, y0)?;
    let gamma = problem.gamma();
    let h = grid.dt();
    let qt: Vec<f64> = (0..grid.len())
        .map(|k| qtilde_coefficient(problem, y0[k], grid.node(k)))
        .collect();
    let a = cumulative_from_end(&qt, h);
    let weight: Vec<f64> = (0..grid.len())
        .map(|k| problem.band().clamp_level(y0[k]).powf(gamma - 1.0) * (-a[k]).exp())
        .collect();
    let b = cumulative_from_end(&weight, h);
    let beta = problem.market().bequest_weight;
    let u: Vec<f64> = a.iter().zip(&b).map(|(ak, bk)| ak.exp() * (beta + bk)).collect();
    check_positive("Ytilde", &u)?;
    Ok(u.into_iter().map(|v| v.powf(1.0 / gamma)).collect())
}

/// All three curves on one grid.
pub fn solve_curves(problem: &RobustProblem, grid: &TimeGrid) -> Result<SolutionCurves> {
    let y = integrate_y(problem, grid)?;
    let y0 = integrate_y(&problem.neutral(), grid)?;
    let ytilde = integrate_ytilde(problem, &y0, grid)?;
    Ok(SolutionCurves {
        grid: *grid,
        y,
        y0,
        ytilde,
    })
}

/// Robust BSDE driver `f(t, y, z)`.
pub fn driver_f(problem: &RobustProblem, t: f64, y: f64, z: &DVector<f64>) -> f64 {
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let d = problem.scale();
    let eta = problem.eta();
    let mut weighted = 0.0;
    let mut linear = 0.0;
    let mut quadratic = 0.0;
    let mut target = DVector::zeros(theta.len());
    for i in 0..theta.len() {
        weighted += theta[i] * theta[i] / d[i];
        linear += theta[i] * (1.0 / d[i] - gamma) * z[i];
        quadratic += eta[i] / d[i] * z[i] * z[i];
        target[i] = (theta[i] / gamma + (1.0 - eta[i] / (1.0 - gamma)) * z[i] / y) / d[i].sqrt();
    }
    let base = -problem.discount(t) + (1.0 - gamma) * problem.rate(t) + (1.0 - gamma) / (2.0 * gamma) * weighted;
    problem.band().consumption_ratio(y) + base / gamma * y + linear / gamma
        - quadratic / (2.0 * gamma * (1.0 - gamma) * y)
        - 0.5 * (1.0 - gamma) * problem.scaled_set().distance_sq(&target) * y
}

/// Ambiguity-neutral driver `f₀(t, y, z)`.
pub fn driver_f0(problem: &RobustProblem, t: f64, y: f64, z: &DVector<f64>) -> f64 {
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let base =
        -problem.discount(t) + (1.0 - gamma) * problem.rate(t) + (1.0 - gamma) / (2.0 * gamma) * theta.norm_squared();
    let target = &theta / gamma + z / y;
    problem.band().consumption_ratio(y) + base / gamma * y + (1.0 - gamma) / gamma * theta.dot(z)
        - 0.5 * (1.0 - gamma) * problem.exposure().distance_sq(&target) * y
}

/// Driver `f̃(t, ỹ, z̃)` of the investor who follows the ambiguity-neutral
/// strategy under the worst-case measure.
pub fn driver_ftilde(
    problem: &RobustProblem,
    t: f64,
    ytilde: f64,
    ztilde: &DVector<f64>,
    y0: f64,
    z0: &DVector<f64>,
) -> f64 {
    let gamma = problem.gamma();
    let theta = problem.theta(t);
    let d = problem.scale();
    let eta = problem.eta();
    let p = problem.exposure().project(&(&theta / gamma + z0 / y0));
    let ratio = ytilde / problem.band().clamp_level(y0);
    let consumption = (1.0 - gamma) / gamma * (-ratio + ratio.powf(1.0 - gamma) / (1.0 - gamma));
    let mut quad = 0.0;
    let mut cross = 0.0;
    let mut penalty = 0.0;
    for i in 0..theta.len() {
        quad += p[i] * d[i] * p[i];
        cross += p[i] * (theta[i] / gamma + ztilde[i] / ytilde * (1.0 - eta[i] / (1.0 - gamma)));
        penalty += (1.0 + gamma * eta[i] / ((1.0 - gamma) * (1.0 - gamma))) * ztilde[i] * ztilde[i];
    }
    consumption - 0.5 * (1.0 - gamma) * quad * ytilde
        + (-problem.discount(t) + (1.0 - gamma) * problem.rate(t)) / gamma * ytilde
        + (1.0 - gamma) * cross * ytilde
        - 0.5 * (1.0 - gamma) * penalty / ytilde
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConsumptionBand, ExposureSet};
    use crate::market::{AmbiguityProfile, MarketModel};
    use crate::scenarios::{self, reference_problem};
    use nalgebra::{DMatrix, DVector};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(3.0, n).unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = grid(7);
        assert_eq!(g.node(7), 3.0);
        assert_eq!(g.nodes().len(), 8);
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn q_oracle_values() {
        // 40-digit evaluations
        let cases = [
            (4.0, ExposureSet::FullSpace, -2.156676845651455, -3.09758544921875),
            (
                4.0,
                ExposureSet::NonnegativeOrthant,
                -1.763226143973214,
                -2.212321370442708,
            ),
            (0.9, ExposureSet::FullSpace, 0.7445285491223905, 2.001290830761317),
            (
                0.9,
                ExposureSet::NonnegativeOrthant,
                0.6556131363137485,
                1.418400902349108,
            ),
        ];
        for (gamma, set, q, q0) in cases {
            let p = reference_problem(gamma, set, ConsumptionBand::UNCONSTRAINED).unwrap();
            assert!((q_coefficient(&p, 0.0) - q).abs() < 1e-10);
            assert!((q_coefficient(&p.neutral(), 0.0) - q0).abs() < 1e-10);
        }
    }

    fn flat_market(premium: f64, r: f64, rho: f64, gamma: f64) -> MarketModel {
        MarketModel {
            horizon: 3.0,
            rate: r.into(),
            discount: rho.into(),
            drift: DVector::from_vec(vec![r + premium]),
            volatility: DMatrix::from_element(1, 1, 0.2),
            risk_aversion: gamma,
            bequest_weight: 1.0,
            initial_wealth: 1.0,
        }
    }

    #[test]
    fn zero_coefficient_is_linear_in_time() {
        let p = RobustProblem::new(
            flat_market(0.0, 0.0, 0.0, 3.0),
            AmbiguityProfile::neutral(1),
            ExposureSet::FullSpace,
            ConsumptionBand::UNCONSTRAINED,
        )
        .unwrap();
        assert_eq!(q_coefficient(&p, 0.0), 0.0);
        let g = grid(300);
        let y = integrate_y(&p, &g).unwrap();
        for (k, v) in y.iter().enumerate() {
            assert!((v - (1.0 + 3.0 - g.node(k))).abs() < 1e-8);
        }
    }

    fn linear_solution(q: f64, beta_root: f64, tau: f64) -> f64 {
        beta_root * (q * tau).exp() + ((q * tau).exp() - 1.0) / q
    }

    #[test]
    fn constant_coefficient_matches_analytic() {
        for (gamma, set) in [(4.0, ExposureSet::NonnegativeOrthant), (0.9, ExposureSet::FullSpace)] {
            let p = reference_problem(gamma, set, ConsumptionBand::UNCONSTRAINED).unwrap();
            let q = q_coefficient(&p, 0.0);
            let g = grid(3000);
            let y = integrate_y(&p, &g).unwrap();
            for k in 0..=3000 {
                let exact = linear_solution(q, 1.0, 3.0 - g.node(k));
                assert!((y[k] - exact).abs() < 1e-8, "{k}: {} vs {exact}", y[k]);
            }
        }
    }

    #[test]
    fn empirical_order_is_four() {
        let p = reference_problem(0.9, ExposureSet::FullSpace, ConsumptionBand::UNCONSTRAINED).unwrap();
        let y0 = |n| integrate_y(&p, &grid(n)).unwrap()[0];
        let (a, b, c) = (y0(10), y0(20), y0(40));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order > 3.5, "order {order}");
    }

    #[test]
    fn terminal_values_are_exact() {
        let mut m = scenarios::reference_market(4.0);
        m.bequest_weight = 2.5;
        let p = RobustProblem::new(
            m,
            scenarios::reference_ambiguity(),
            ExposureSet::NonnegativeOrthant,
            ConsumptionBand::new(0.2, Some(1.0)),
        )
        .unwrap();
        let c = solve_curves(&p, &grid(50)).unwrap();
        let root = 2.5f64.powf(0.25);
        assert_eq!(c.y[50], root);
        assert_eq!(c.y0[50], root);
        assert!((c.ytilde[50] - root).abs() < 1e-15);
    }

    #[test]
    fn neutral_bernoulli_reproduces_y0() {
        for gamma in [4.0, 0.9] {
            let p = reference_problem(gamma, ExposureSet::FullSpace, ConsumptionBand::UNCONSTRAINED)
                .unwrap()
                .neutral();
            let c = solve_curves(&p, &grid(3000)).unwrap();
            for k in 0..=3000 {
                assert!((c.ytilde[k] - c.y[k]).abs() < 1e-6);
                assert!((c.y0[k] - c.y[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cumulative_quadrature_exactness() {
        let cumulative = cumulative_from_end(&[2.0; 11], 0.1);
        for (k, v) in cumulative.iter().enumerate() {
            assert!((v - 2.0 * 0.1 * (10 - k) as f64).abs() < 1e-14);
        }
        // pairs from the end are Simpson (exact for cubics), the odd
        // remainder is exact for quadratics
        let cubic: Vec<f64> = (0..=10).map(|k| (k as f64 * 0.1).powi(3)).collect();
        let c = cumulative_from_end(&cubic, 0.1);
        for k in (0..=10).step_by(2) {
            let t = k as f64 * 0.1;
            assert!((c[k] - (1.0 - t.powi(4)) / 4.0).abs() < 1e-14);
        }
        let quad: Vec<f64> = (0..=9).map(|k| (k as f64 * 0.1).powi(2)).collect();
        let c = cumulative_from_end(&quad, 0.1);
        for k in 0..=9 {
            let t = k as f64 * 0.1;
            assert!((c[k] - (0.9f64.powi(3) - t.powi(3)) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_flat_integrand() {
        // θ = 0, r = 0 and a ceiling of 0.01 pin K = 100; ρ = 0.03 cancels Q̃
        let p = RobustProblem::new(
            flat_market(0.0, 0.0, 0.03, 4.0),
            AmbiguityProfile::new(vec![1.0]),
            ExposureSet::FullSpace,
            ConsumptionBand::new(0.0, Some(0.01)),
        )
        .unwrap();
        let g = grid(30);
        let y0 = integrate_y(&p.neutral(), &g).unwrap();
        assert!(y0.iter().all(|&v| v < 100.0));
        assert!(qtilde_coefficient(&p, y0[0], 0.0).abs() < 1e-15);
        let closed = closed_form_ytilde(&p, &y0, &g).unwrap();
        let stepped = integrate_ytilde(&p, &y0, &g).unwrap();
        for k in 0..=30 {
            let want = (1.0 + 100f64.powi(3) * (3.0 - g.node(k))).powf(0.25);
            assert!((closed[k] - want).abs() < 1e-10 * want);
            assert!((stepped[k] - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn bernoulli_forms_agree() {
        for gamma in [4.0, 0.9] {
            for case in scenarios::constraint_cases() {
                let p = reference_problem(gamma, case.exposure(), case.band).unwrap();
                let g = grid(3000);
                let y0 = integrate_y(&p.neutral(), &g).unwrap();
                let a = integrate_ytilde(&p, &y0, &g).unwrap();
                let b = closed_form_ytilde(&p, &y0, &g).unwrap();
                let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(worst < 1e-6, "{} gamma {gamma}: {worst:e}", case.name);
            }
        }
    }

    #[test]
    fn orthant_curve_dominates_for_high_risk_aversion() {
        for gamma in [4.0, 0.9] {
            let g = grid(600);
            let orth = integrate_y(
                &reference_problem(gamma, ExposureSet::NonnegativeOrthant, ConsumptionBand::UNCONSTRAINED).unwrap(),
                &g,
            )
            .unwrap();
            let full = integrate_y(
                &reference_problem(gamma, ExposureSet::FullSpace, ConsumptionBand::UNCONSTRAINED).unwrap(),
                &g,
            )
            .unwrap();
            for (a, b) in orth.iter().zip(&full) {
                if gamma > 1.0 {
                    assert!(a >= &(b - 1e-12));
                } else {
                    assert!(a <= &(b + 1e-12));
                }
            }
        }
    }

    #[test]
    fn positivity_loss_reported() {
        let g = grid(10);
        let bad = vec![1.0; 10];
        let p = reference_problem(4.0, ExposureSet::FullSpace, ConsumptionBand::UNCONSTRAINED).unwrap();
        assert!(matches!(integrate_ytilde(&p, &bad, &g), Err(Error::Grid(_))));
        let mut neg = vec![1.0; 11];
        neg[3] = -1.0;
        assert!(matches!(
            closed_form_ytilde(&p, &neg, &g),
            Err(Error::PositivityLoss { node: 3, .. })
        ));
    }

    #[test]
    fn qtilde_zero_premium_reduction() {
        for gamma in [4.0, 0.9] {
            let p = RobustProblem::new(
                flat_market(0.0, 0.03, 0.02, gamma),
                AmbiguityProfile::new(vec![2.0]),
                ExposureSet::FullSpace,
                ConsumptionBand::new(0.1, Some(2.0)),
            )
            .unwrap();
            for y0 in [0.3, 1.0, 20.0] {
                let k = p.band().clamp_level(y0);
                let want = (1.0 - gamma) * (-1.0 / k + (-0.02 + (1.0 - gamma) * 0.03) / (1.0 - gamma));
                assert!((qtilde_coefficient(&p, y0, 0.0) - want).abs() < 1e-14);
            }
        }
    }

    /// Straight matrix transcriptions of the three drivers.
    mod oracle {
        use super::*;

        pub fn parts(p: &RobustProblem) -> (f64, DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
            let gamma = p.gamma();
            let h = DMatrix::from_diagonal(p.eta());
            let n = h.nrows();
            let a = DMatrix::identity(n, n) + &h / gamma;
            (gamma, p.theta(0.0), h, a)
        }

        fn ratio(p: &RobustProblem, y: f64, level: f64) -> f64 {
            let c_lo = p.band().lower;
            let inv_lo = if c_lo > 0.0 { 1.0 / c_lo } else { f64::INFINITY };
            let inv_hi = p.band().upper.map_or(0.0, |u| 1.0 / u);
            y / level.min(inv_lo).max(inv_hi)
        }

        pub fn f(p: &RobustProblem, y: f64, z: &DVector<f64>) -> f64 {
            let (gamma, theta, h, a) = parts(p);
            let n = theta.len();
            let a_inv = a.clone().try_inverse().unwrap();
            let a_inv_half = a.map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
            let eye = DMatrix::identity(n, n);
            let (r, rho) = (p.rate(0.0), p.discount(0.0));
            let inner = &a_inv_half * (&theta / gamma + (&eye - &h / (1.0 - gamma)) * z / y);
            let dist = (&inner - p.scaled_set().project(&inner)).norm_squared();
            ratio(p, y, y)
                + (1.0 / gamma)
                    * (-rho
                        + (1.0 - gamma) * r
                        + (1.0 - gamma) / (2.0 * gamma) * (theta.transpose() * &a_inv * &theta)[(0, 0)])
                    * y
                + (1.0 / gamma) * (theta.transpose() * (&a_inv - &eye * gamma) * z)[(0, 0)]
                - 1.0 / (2.0 * gamma * (1.0 - gamma)) * (z.transpose() * &a_inv * &h * z)[(0, 0)] / y
                - (1.0 - gamma) / 2.0 * dist * y
        }

        pub fn f0(p: &RobustProblem, y: f64, z: &DVector<f64>) -> f64 {
            let (gamma, theta, _, _) = parts(p);
            let (r, rho) = (p.rate(0.0), p.discount(0.0));
            let v = &theta / gamma + z / y;
            let dist = (&v - p.exposure().project(&v)).norm_squared();
            ratio(p, y, y)
                + (1.0 / gamma) * (-rho + (1.0 - gamma) * r + (1.0 - gamma) / (2.0 * gamma) * theta.dot(&theta)) * y
                + (1.0 - gamma) / gamma * theta.dot(z)
                - (1.0 - gamma) / 2.0 * dist * y
        }

        pub fn ftilde(p: &RobustProblem, yt: f64, zt: &DVector<f64>, y0: f64, z0: &DVector<f64>) -> f64 {
            let (gamma, theta, h, a) = parts(p);
            let n = theta.len();
            let eye = DMatrix::identity(n, n);
            let (r, rho) = (p.rate(0.0), p.discount(0.0));
            let proj = p.exposure().project(&(&theta / gamma + z0 / y0));
            let q = ratio(p, yt, y0);
            let m = &eye - &h / (1.0 - gamma);
            (1.0 - gamma) / gamma * (-q + q.powf(1.0 - gamma) / (1.0 - gamma))
                - (1.0 - gamma) / 2.0 * (proj.transpose() * &a * &proj)[(0, 0)] * yt
                + (1.0 / gamma) * (-rho + (1.0 - gamma) * r) * yt
                + (1.0 - gamma) * (proj.transpose() * (&theta / gamma + &m * zt / yt))[(0, 0)] * yt
                - (1.0 - gamma) / 2.0
                    * (zt.transpose() * (&eye + &h * (gamma / ((1.0 - gamma) * (1.0 - gamma)))) * zt)[(0, 0)]
                    / yt
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn driver_problems() -> Vec<RobustProblem> {
        let mut out = Vec::new();
        for gamma in [4.0, 0.9] {
            for case in scenarios::constraint_cases() {
                out.push(reference_problem(gamma, case.exposure(), case.band).unwrap());
            }
        }
        out
    }

    #[test]
    fn driver_reductions_at_zero_z() {
        let z = DVector::zeros(3);
        for p in driver_problems() {
            let neutral = p.neutral();
            for y in [0.05, 0.4, 1.0, 3.7, 25.0] {
                let g = p.band().consumption_ratio(y);
                let f = driver_f(&p, 0.0, y, &z);
                assert!(rel(f, g + q_coefficient(&p, 0.0) * y) < 1e-12);
                let f0 = driver_f0(&p, 0.0, y, &z);
                assert!(rel(f0, g + q_coefficient(&neutral, 0.0) * y) < 1e-12);
                for y0 in [0.3, 2.0] {
                    let k = p.band().clamp_level(y0);
                    let want = ((y / k).powf(1.0 - p.gamma()) + qtilde_coefficient(&p, y0, 0.0) * y) / p.gamma();
                    assert!(rel(driver_ftilde(&p, 0.0, y, &z, y0, &z), want) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn drivers_match_matrix_transcription() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for p in driver_problems() {
            for _ in 0..50 {
                let y: f64 = rng.random_range(0.05..10.0);
                let y0: f64 = rng.random_range(0.05..10.0);
                let z = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let z0 = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let scale = |v: f64| v.abs().max(1.0);
                let a = driver_f(&p, 0.0, y, &z);
                assert!((a - oracle::f(&p, y, &z)).abs() < 1e-10 * scale(a));
                let a = driver_f0(&p, 0.0, y, &z);
                assert!((a - oracle::f0(&p, y, &z)).abs() < 1e-10 * scale(a));
                let a = driver_ftilde(&p, 0.0, y, &z, y0, &z0);
                assert!((a - oracle::ftilde(&p, y, &z, y0, &z0)).abs() < 1e-10 * scale(a));
            }
        }
    }

    #[test]
    fn neutral_driver_equals_f0() {
        let z = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        for p in driver_problems() {
            let n = p.neutral();
            for y in [0.5, 2.0] {
                assert!(rel(driver_f(&n, 0.0, y, &z), driver_f0(&n, 0.0, y, &z)) < 1e-12);
            }
        }
    }
}

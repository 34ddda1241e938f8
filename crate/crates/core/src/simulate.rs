//! Monte Carlo check of the value function.
//!
//! Wealth is simulated directly under the worst-case measure with a log-Euler
//! step, so paths stay positive by construction. Every path (or antithetic
//! pair) owns a ChaCha stream keyed by its index, which makes results
//! independent of how work is split across threads.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::detsolve::{solve_curves, TimeGrid};
use crate::error::{Error, Result};
use crate::problem::RobustProblem;
use crate::strategy::{optimal_consumption, optimal_distortion, optimal_exposure, value_function};

/// Paths simulated per parallel work unit.
const CHUNK: usize = 4096;

/// Pass threshold on the z-score.
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    /// Paths `2j` and `2j+1` share noise with opposite signs.
    pub antithetic: bool,
    /// Also report the martingale control-variate estimate.
    pub control_variate: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, grid: TimeGrid, seed: u64) -> Self {
        Self {
            n_paths,
            grid,
            seed,
            antithetic: true,
            control_variate: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("need at least one path".into()));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::InvalidArgument(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }
}

/// Strategy sampled on the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyCurves {
    pub exposure: Vec<DVector<f64>>,
    pub consumption: Vec<f64>,
    pub distortion: Vec<DVector<f64>>,
}

impl StrategyCurves {
    /// Time-constant exposure and distortion with a consumption curve.
    pub fn constant(exposure: DVector<f64>, consumption: Vec<f64>, distortion: DVector<f64>) -> Self {
        let n = consumption.len();
        Self {
            exposure: vec![exposure; n],
            consumption,
            distortion: vec![distortion; n],
        }
    }

    /// Robust optimal strategy from the value curve `y` on `grid`.
    pub fn optimal(problem: &RobustProblem, y: &[f64], grid: &TimeGrid) -> Self {
        let gamma = problem.gamma();
        let mut out = Self {
            exposure: Vec::with_capacity(grid.len()),
            consumption: Vec::with_capacity(grid.len()),
            distortion: Vec::with_capacity(grid.len()),
        };
        for (k, &yk) in y.iter().enumerate() {
            let theta = problem.theta(grid.node(k));
            let z = DVector::zeros(theta.len());
            out.exposure.push(optimal_exposure(
                &theta,
                problem.eta(),
                gamma,
                problem.scaled_set(),
                yk,
                &z,
            ));
            out.consumption.push(optimal_consumption(yk, problem.band()));
            out.distortion.push(optimal_distortion(
                &theta,
                problem.eta(),
                gamma,
                problem.scaled_set(),
                yk,
                &z,
            ));
        }
        out
    }

    fn check(&self, grid: &TimeGrid, factors: usize) -> Result<()> {
        let n = grid.len();
        if self.exposure.len() != n || self.consumption.len() != n || self.distortion.len() != n {
            return Err(Error::Grid("strategy curves do not match the simulation grid".into()));
        }
        if self.exposure.iter().chain(&self.distortion).any(|v| v.len() != factors) {
            return Err(Error::InvalidArgument(format!(
                "strategy vectors must have {factors} entries"
            )));
        }
        Ok(())
    }
}

/// Simulated wealth for a contiguous range of path indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub first_path: usize,
    pub n_paths: usize,
    pub steps: usize,
    pub antithetic: bool,
    /// Row-major `n_paths × (steps + 1)`.
    wealth: Vec<f64>,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.steps + 1;
        &self.wealth[i * w..(i + 1) * w]
    }

    pub fn terminal(&self) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[self.steps]).collect()
    }

    pub fn min_wealth(&self) -> f64 {
        self.wealth.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Per-step log-wealth drift `(r + pᵀ(θ+φ) − c̄ − |p|²/2)` with the
/// trapezoid average `c̄` of consumption over the step.
fn log_drifts(problem: &RobustProblem, strategy: &StrategyCurves, grid: &TimeGrid) -> Vec<f64> {
    (0..grid.steps())
        .map(|k| {
            let t = grid.node(k);
            let p = &strategy.exposure[k];
            let drift = problem.theta(t) + &strategy.distortion[k];
            let c = 0.5 * (strategy.consumption[k] + strategy.consumption[k + 1]);
            problem.rate(t) + p.dot(&drift) - c - 0.5 * p.norm_squared()
        })
        .collect()
}

/// Simulates paths `first..first + count`.
pub fn simulate_range(
    problem: &RobustProblem,
    strategy: &StrategyCurves,
    sim: &SimConfig,
    first: usize,
    count: usize,
) -> Result<PathBatch> {
    sim.check()?;
    let n = problem.market().factors();
    strategy.check(&sim.grid, n)?;
    if sim.antithetic && (first % 2 == 1 || count % 2 == 1) {
        return Err(Error::InvalidArgument(
            "antithetic batches must cover whole pairs".into(),
        ));
    }
    let grid = &sim.grid;
    let steps = grid.steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let drifts = log_drifts(problem, strategy, grid);
    let x0 = problem.market().initial_wealth;
    let mut wealth = vec![0.0; count * (steps + 1)];
    let mut noise = vec![0.0; steps * n];
    for local in 0..count {
        let path = first + local;
        let sign = if sim.antithetic && path % 2 == 1 { -1.0 } else { 1.0 };
        // the even path of an antithetic pair regenerates the stream
        if !sim.antithetic || path.is_multiple_of(2) || local == 0 {
            let stream = if sim.antithetic { path / 2 } else { path };
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
            rng.set_stream(stream as u64);
            for v in noise.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
        let row = &mut wealth[local * (steps + 1)..(local + 1) * (steps + 1)];
        let mut log_x = x0.ln();
        row[0] = x0;
        for k in 0..steps {
            let p = &strategy.exposure[k];
            let shock: f64 = (0..n).map(|j| p[j] * noise[k * n + j]).sum();
            log_x += drifts[k] * dt + sign * sqrt_dt * shock;
            row[k + 1] = log_x.exp();
        }
    }
    Ok(PathBatch {
        first_path: first,
        n_paths: count,
        steps,
        antithetic: sim.antithetic,
        wealth,
    })
}

pub fn simulate_wealth(problem: &RobustProblem, strategy: &StrategyCurves, sim: &SimConfig) -> Result<PathBatch> {
    simulate_range(problem, strategy, sim, 0, sim.n_paths)
}

/// Mean and standard error over independent samples (pair means when
/// antithetic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Per-path pieces of the penalized objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSamples {
    pub objective: Vec<f64>,
    /// Zero-mean martingale correction; subtract from `objective`.
    pub control: Vec<f64>,
}

/// Evaluates, path by path, the discounted consumption and bequest utility
/// plus the entropy penalty `½ φᵀH⁻¹φ · X^{1−γ} Y^γ`, integrated in time by
/// the trapezoid rule. Factors with zero ambiguity weight carry no penalty.
pub fn objective_samples(
    problem: &RobustProblem,
    batch: &PathBatch,
    value_curve: &[f64],
    strategy: &StrategyCurves,
    grid: &TimeGrid,
) -> Result<ObjectiveSamples> {
    if value_curve.len() != grid.len() || batch.steps != grid.steps() {
        return Err(Error::Grid("value curve, batch and grid disagree".into()));
    }
    let gamma = problem.gamma();
    let one = 1.0 - gamma;
    let steps = grid.steps();
    let dt = grid.dt();
    let eta = problem.eta();
    let rho: Vec<f64> = (0..grid.len()).map(|k| problem.discount(grid.node(k))).collect();
    let to_end = cumulative_from_end_trapezoid(&rho, dt);
    let discount: Vec<f64> = to_end.iter().map(|a| (a - to_end[0]).exp()).collect();
    let penalty: Vec<f64> = (0..grid.len())
        .map(|k| {
            let phi = &strategy.distortion[k];
            let quad: f64 = (0..eta.len())
                .filter(|&i| eta[i] > 0.0)
                .map(|i| phi[i] * phi[i] / eta[i])
                .sum();
            0.5 * quad * value_curve[k].powf(gamma)
        })
        .collect();
    let consumption: Vec<f64> = strategy.consumption.iter().map(|c| c.powf(one) / one).collect();
    let drifts = log_drifts(problem, strategy, grid);
    let growth: Vec<f64> = (0..steps)
        .map(|k| (one * drifts[k] * dt + 0.5 * one * one * strategy.exposure[k].norm_squared() * dt).exp())
        .collect();
    let weight: Vec<f64> = (0..grid.len())
        .map(|k| discount[k] * value_curve[k].powf(gamma) / one)
        .collect();
    let beta = problem.market().bequest_weight;

    let mut objective = Vec::with_capacity(batch.n_paths);
    let mut control = Vec::with_capacity(batch.n_paths);
    for i in 0..batch.n_paths {
        let path = batch.path(i);
        let mut acc = 0.0;
        let mut cv = 0.0;
        let mut prev = 0.0;
        let mut prev_pow = 0.0;
        for k in 0..=steps {
            let xp = path[k].powf(one);
            let cur = discount[k] * (consumption[k] * xp + penalty[k] * xp);
            if k > 0 {
                acc += 0.5 * dt * (prev + cur);
                cv += weight[k] * (xp - growth[k - 1] * prev_pow);
            }
            prev = cur;
            prev_pow = xp;
        }
        acc += discount[steps] * beta * prev_pow / one;
        objective.push(acc);
        control.push(cv);
    }
    Ok(ObjectiveSamples { objective, control })
}

/// `∫_{t_k}^T f` by the trapezoid rule.
fn cumulative_from_end_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    for k in (0..n).rev() {
        out[k] = out[k + 1] + 0.5 * h * (f[k] + f[k + 1]);
    }
    out
}

/// Collapses per-path samples into independent ones (pair means when the
/// batch is antithetic).
fn independent(samples: &[f64], antithetic: bool) -> Vec<f64> {
    if antithetic {
        samples.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    } else {
        samples.to_vec()
    }
}

pub fn estimate_objective(
    problem: &RobustProblem,
    batch: &PathBatch,
    value_curve: &[f64],
    strategy: &StrategyCurves,
    grid: &TimeGrid,
) -> Result<Estimate> {
    let s = objective_samples(problem, batch, value_curve, strategy, grid)?;
    Ok(Estimate::from_samples(&independent(&s.objective, batch.antithetic)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub estimate: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z: f64,
    pub paths: usize,
    pub passed: bool,
    /// Control-variate estimate and its standard error, when requested.
    pub controlled: Option<Estimate>,
    pub min_wealth: f64,
}

impl ConsistencyReport {
    pub fn ensure(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::ConsistencyFailure {
                estimate: self.estimate,
                stderr: self.stderr,
                analytic: self.analytic,
                z: self.z,
                paths: self.paths,
            })
        }
    }

    pub fn controlled_z(&self) -> Option<f64> {
        self.controlled.map(|e| (e.mean - self.analytic) / e.stderr)
    }
}

/// Simulates the robust optimal strategy under its worst-case measure and
/// compares the estimated objective with `V(0, x₀)`.
pub fn check_value_consistency(problem: &RobustProblem, sim: &SimConfig) -> Result<ConsistencyReport> {
    sim.check()?;
    let grid = sim.grid;
    let curves = solve_curves(problem, &grid)?;
    let strategy = StrategyCurves::optimal(problem, &curves.y, &grid);
    let starts: Vec<usize> = (0..sim.n_paths).step_by(CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&first| {
            let count = CHUNK.min(sim.n_paths - first);
            let batch = simulate_range(problem, &strategy, sim, first, count)?;
            let s = objective_samples(problem, &batch, &curves.y, &strategy, &grid)?;
            Ok((s, batch.min_wealth()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut objective = Vec::with_capacity(sim.n_paths);
    let mut corrected = Vec::with_capacity(sim.n_paths);
    let mut min_wealth = f64::INFINITY;
    for (s, m) in &parts {
        objective.extend_from_slice(&s.objective);
        corrected.extend(s.objective.iter().zip(&s.control).map(|(o, c)| o - c));
        min_wealth = min_wealth.min(*m);
    }
    let plain = Estimate::from_samples(&independent(&objective, sim.antithetic));
    let analytic = value_function(problem.market().initial_wealth, curves.y[0], problem.gamma());
    let z = if plain.stderr > 0.0 {
        (plain.mean - analytic) / plain.stderr
    } else if (plain.mean - analytic).abs() <= 1e-12 * analytic.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(plain.mean - analytic)
    };
    let controlled = sim
        .control_variate
        .then(|| Estimate::from_samples(&independent(&corrected, sim.antithetic)));
    Ok(ConsistencyReport {
        estimate: plain.mean,
        stderr: plain.stderr,
        analytic,
        z,
        paths: sim.n_paths,
        passed: z.abs() <= Z_LIMIT,
        controlled,
        min_wealth,
    })
}

//! Lloyd-like deployment optimizers.
//!
//! Each outer iteration computes the power-minimizing cells, takes the
//! gradient of the average power on those frozen cells and backtracks the
//! step size until the re-assigned average power strictly decreases. Lloyd-A
//! keeps one shared height, Lloyd-B moves every height independently.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::{average_power, gradients, DensityField, DensityWeights};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::power::PowerParams;
use crate::tessellation::{assign_cells, AssignmentGrid, Deployment, RegionGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Common flight height.
    A,
    /// Independent flight heights.
    B,
}

/// How Lloyd-A turns the per-UAV height derivatives into one shared step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SharedHeightStep {
    /// Sum of the derivatives, the exact derivative with respect to the
    /// common height.
    #[default]
    Sum,
    /// Mean of the derivatives.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydConfig {
    pub variant: Variant,
    pub shared_height_step: SharedHeightStep,
    pub initial_step: f64,
    /// Stop once the relative decrease of an outer iteration is at most this.
    pub stop_threshold: f64,
    pub max_outer_iterations: usize,
    pub max_halvings: usize,
    pub rng_seed: u64,
}

impl LloydConfig {
    /// Defaults scaled to the region: initial step of a tenth of its diameter.
    pub fn for_region(variant: Variant, region: &Polygon) -> Self {
        Self {
            variant,
            shared_height_step: SharedHeightStep::Sum,
            initial_step: 0.1 * region.diameter(),
            stop_threshold: 1e-5,
            max_outer_iterations: 500,
            max_halvings: 40,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0) {
            return Err(Error::domain("initial step must be positive"));
        }
        if !(self.stop_threshold >= 0.0 && self.stop_threshold.is_finite()) {
            return Err(Error::domain("stop threshold must be finite and nonnegative"));
        }
        if self.max_outer_iterations == 0 || self.max_halvings == 0 {
            return Err(Error::domain("iteration limits must be positive"));
        }
        Ok(())
    }
}

/// Grid, density weights and power model of one optimization problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Arc<RegionGrid>,
    pub weights: DensityWeights,
    pub params: PowerParams,
}

impl Problem {
    pub fn new(region: &Polygon, grid_n: usize, density: &DensityField, params: PowerParams) -> Result<Self> {
        let grid = Arc::new(RegionGrid::new(region, grid_n)?);
        let weights = DensityWeights::new(density, &grid)?;
        Ok(Self {
            grid,
            weights,
            params,
        })
    }

    /// Same grid and density under a different power model.
    pub fn with_params(&self, params: PowerParams) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            weights: self.weights.clone(),
            params,
        }
    }

    pub fn region(&self) -> &Polygon {
        self.grid.region()
    }

    pub fn assign(&self, deployment: &Deployment) -> Result<AssignmentGrid> {
        assign_cells(deployment, &self.grid, &self.params)
    }

    /// Average power with freshly assigned cells.
    pub fn power(&self, deployment: &Deployment) -> Result<f64> {
        let cells = self.assign(deployment)?;
        Ok(average_power(deployment, &cells, &self.weights, &self.params)?.total)
    }
}

/// Result of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub deployment: Deployment,
    pub power: f64,
    pub previous_power: f64,
    pub accepted: bool,
    /// Number of times the step size was halved before acceptance.
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Average power before the first and after every outer iteration.
    pub power_trace: Vec<f64>,
    /// Lowest UAV height before the first and after every outer iteration.
    pub min_height_trace: Vec<f64>,
    pub final_deployment: Deployment,
    pub iterations: usize,
    pub converged: bool,
    pub height_std: f64,
}

impl RunReport {
    pub fn final_power(&self) -> f64 {
        *self.power_trace.last().expect("trace starts with the initial power")
    }
}

fn check_feasible(deployment: &Deployment, params: &PowerParams) -> Result<()> {
    if deployment.min_height() < params.h_min() {
        return Err(Error::domain(format!(
            "height {} below the minimum {}",
            deployment.min_height(),
            params.h_min()
        )));
    }
    Ok(())
}

/// One Lloyd iteration: gradient on the current cells, then backtracking.
pub fn lloyd_step(deployment: &Deployment, config: &LloydConfig, problem: &Problem) -> Result<StepOutcome> {
    config.validate()?;
    check_feasible(deployment, &problem.params)?;
    let cells = problem.assign(deployment)?;
    let grads = gradients(deployment, &cells, &problem.weights, &problem.params)?;
    let p_old = grads.report.total;
    let unchanged = |halvings| StepOutcome {
        deployment: deployment.clone(),
        power: p_old,
        previous_power: p_old,
        accepted: false,
        halvings,
    };

    let flat = grads.position.iter().all(|g| g.x == 0.0 && g.y == 0.0)
        && grads.height.iter().all(|&g| g == 0.0);
    if flat {
        return Ok(unchanged(0));
    }

    let height_dir: Vec<f64> = match config.variant {
        Variant::A => {
            let sum: f64 = grads.height.iter().sum();
            let g = match config.shared_height_step {
                SharedHeightStep::Sum => sum,
                SharedHeightStep::Mean => sum / deployment.len() as f64,
            };
            vec![g; deployment.len()]
        }
        Variant::B => grads.height.clone(),
    };
    let region = problem.region();
    let h_min = problem.params.h_min();

    let mut t = config.initial_step;
    for halvings in 0..=config.max_halvings {
        let ground = deployment
            .ground
            .iter()
            .zip(&grads.position)
            .map(|(p, g)| region.project(*p - *g * t))
            .collect();
        let heights = deployment
            .heights
            .iter()
            .zip(&height_dir)
            .map(|(h, g)| h_min.max(h - t * g))
            .collect();
        let proposal = Deployment::new(ground, heights)?;
        let p_new = problem.power(&proposal)?;
        if p_new < p_old {
            return Ok(StepOutcome {
                deployment: proposal,
                power: p_new,
                previous_power: p_old,
                accepted: true,
                halvings,
            });
        }
        t /= 2.0;
    }
    Ok(unchanged(config.max_halvings))
}

/// Iterate [`lloyd_step`] until the relative improvement drops to the stop
/// threshold or the iteration cap is hit.
pub fn optimize(initial: &Deployment, config: &LloydConfig, problem: &Problem) -> Result<RunReport> {
    config.validate()?;
    let mut deployment = initial.clone();
    if config.variant == Variant::A {
        let h = deployment.mean_height();
        deployment.heights.iter_mut().for_each(|x| *x = h);
    }
    check_feasible(&deployment, &problem.params)?;

    let mut power_trace = vec![problem.power(&deployment)?];
    let mut min_height_trace = vec![deployment.min_height()];
    let mut converged = false;
    for _ in 0..config.max_outer_iterations {
        let step = lloyd_step(&deployment, config, problem)?;
        deployment = step.deployment;
        power_trace.push(step.power);
        min_height_trace.push(deployment.min_height());
        let improvement = (step.previous_power - step.power) / step.previous_power;
        if !(improvement > config.stop_threshold) {
            converged = true;
            break;
        }
    }
    Ok(RunReport {
        iterations: power_trace.len() - 1,
        height_std: deployment.height_std(),
        power_trace,
        min_height_trace,
        final_deployment: deployment,
        converged,
    })
}

/// Seeded random start: ground points uniform in the region, heights uniform
/// on `(0, box_height]` raised to the minimum height.
pub fn random_deployment(
    n: usize,
    region: &Polygon,
    box_height: f64,
    h_min: f64,
    rng: &mut impl Rng,
) -> Result<Deployment> {
    if n == 0 {
        return Err(Error::domain("need at least one UAV"));
    }
    if !(box_height > 0.0) {
        return Err(Error::domain("initial height box must be positive"));
    }
    let bb = region.bbox();
    let mut ground = Vec::with_capacity(n);
    while ground.len() < n {
        let p = Point::new(
            bb.min.x + rng.gen::<f64>() * bb.width(),
            bb.min.y + rng.gen::<f64>() * bb.height(),
        );
        if region.contains(p) {
            ground.push(p);
        }
    }
    let heights = (0..n)
        .map(|_| h_min.max(box_height * (1.0 - rng.gen::<f64>())))
        .collect();
    Deployment::new(ground, heights)
}

/// Generator for restart `index` of a multi-start run with master `seed`.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartReport {
    pub best: RunReport,
    pub best_index: usize,
    pub final_powers: Vec<f64>,
    pub mean_power: f64,
    pub std_power: f64,
}

/// Run [`optimize`] from `restarts` seeded random starts and keep the best.
pub fn multi_start(
    n: usize,
    restarts: usize,
    seed: u64,
    config: &LloydConfig,
    problem: &Problem,
    box_height: f64,
) -> Result<MultiStartReport> {
    multi_start_with(n, restarts, seed, problem, box_height, |init| optimize(init, config, problem))
}

/// Like [`multi_start`] with a caller-supplied optimizer per start. Restart
/// `i` draws its start from [`restart_rng`]`(seed, i)`; ties on the final
/// power go to the lowest restart index.
pub fn multi_start_with<F>(
    n: usize,
    restarts: usize,
    seed: u64,
    problem: &Problem,
    box_height: f64,
    run: F,
) -> Result<MultiStartReport>
where
    F: Fn(&Deployment) -> Result<RunReport> + Sync,
{
    if restarts == 0 {
        return Err(Error::domain("need at least one restart"));
    }
    let runs: Vec<RunReport> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(seed, i);
            let init = random_deployment(n, problem.region(), box_height, problem.params.h_min(), &mut rng)?;
            run(&init)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(runs))
}

fn summarize(runs: Vec<RunReport>) -> MultiStartReport {
    let final_powers: Vec<f64> = runs.iter().map(RunReport::final_power).collect();
    let best_index = final_powers
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p < final_powers[best] { i } else { best });
    let k = final_powers.len() as f64;
    let mean_power = final_powers.iter().sum::<f64>() / k;
    let std_power = (final_powers.iter().map(|p| (p - mean_power).powi(2)).sum::<f64>() / k).sqrt();
    let best = runs.into_iter().nth(best_index).expect("index from the same list");
    MultiStartReport {
        best,
        best_index,
        final_powers,
        mean_power,
        std_power,
    }
}

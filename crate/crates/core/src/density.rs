//! User densities on the assignment grid and the cell integrals of the average
//! transmit power and its gradients.
//!
//! All integrals use the midpoint rule on the same grid that defines cell
//! ownership, so the minimum inside the power integral and the integration
//! domain always agree.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::power::{Exponent, PowerParams};
use crate::tessellation::{AssignmentGrid, Deployment, RegionGrid, CHUNK};

/// Largest tolerated deviation of the grid mass from one.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// One isotropic Gaussian bump of a mixture density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Point,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityField {
    /// Constant density `1 / area` over the region.
    Uniform,
    /// `Σ A_k / (2π (sσ_k)²) · exp(-‖ω - c_k‖² / (2 (sσ_k)²))` with scale `s`.
    GaussianMixture {
        components: Vec<MixtureComponent>,
        sigma_scale: f64,
    },
}

impl DensityField {
    /// Three-bump mixture used for the non-uniform 1000 m × 1000 m scenarios.
    pub fn reference_mixture(sigma_scale: f64) -> Self {
        let comp = |weight, x, y, sigma| MixtureComponent {
            weight,
            mean: Point::new(x, y),
            sigma,
        };
        DensityField::GaussianMixture {
            components: vec![
                comp(0.5, 300.0, 300.0, 1.5),
                comp(0.25, 600.0, 700.0, 1.0),
                comp(0.25, 750.0, 250.0, 2.0),
            ],
            sigma_scale,
        }
    }

    fn validate(&self) -> Result<()> {
        if let DensityField::GaussianMixture {
            components,
            sigma_scale,
        } = self
        {
            if components.is_empty() {
                return Err(Error::domain("mixture needs at least one component"));
            }
            if !(*sigma_scale > 0.0) {
                return Err(Error::domain("sigma scale must be positive"));
            }
            for c in components {
                if !(c.weight >= 0.0) || !(c.sigma > 0.0) {
                    return Err(Error::domain(
                        "mixture weights must be nonnegative and sigmas positive",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Unnormalized density at `p`; `region_area` serves the uniform case.
    pub fn raw(&self, p: Point, region_area: f64) -> f64 {
        match self {
            DensityField::Uniform => 1.0 / region_area,
            DensityField::GaussianMixture {
                components,
                sigma_scale,
            } => components
                .iter()
                .map(|c| {
                    let var = (c.sigma * sigma_scale).powi(2);
                    c.weight / (2.0 * PI * var) * (-p.dist_sq(c.mean) / (2.0 * var)).exp()
                })
                .sum(),
        }
    }
}

/// Quadrature weights `λ(ω_i)·ΔA` for the in-region grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityWeights {
    weights: Vec<f64>,
    cell_area: f64,
}

impl DensityWeights {
    /// Evaluate `field` on `grid` and renormalize so the weights sum to one.
    pub fn new(field: &DensityField, grid: &RegionGrid) -> Result<Self> {
        field.validate()?;
        let area = grid.region().area();
        let cell_area = grid.spec().cell_area();
        let mut weights: Vec<f64> = grid.points().map(|p| field.raw(p, area) * cell_area).collect();
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Unnormalized { mass });
        }
        for w in &mut weights {
            *w /= mass;
        }
        Ok(Self { weights, cell_area })
    }

    /// Use caller-supplied weights as they are.
    pub fn from_raw(weights: Vec<f64>, cell_area: f64) -> Self {
        Self { weights, cell_area }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Density value (per unit area) at sample `i`.
    pub fn density_at(&self, i: usize) -> f64 {
        self.weights[i] / self.cell_area
    }

    pub(crate) fn check(&self, grid: &RegionGrid) -> Result<()> {
        if self.weights.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} density weights for {} grid points",
                self.weights.len(),
                grid.len()
            )));
        }
        let mass = self.mass();
        if !((mass - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::Unnormalized { mass });
        }
        Ok(())
    }
}

/// Average power and its split over cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub total: f64,
    pub per_cell: Vec<f64>,
    /// Share of users that are served; below one only for disk-coverage baselines.
    pub coverage_fraction: f64,
}

/// Analytic derivatives of the average power on frozen cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub position: Vec<Point>,
    pub height: Vec<f64>,
    pub report: PowerReport,
}

#[derive(Clone)]
struct CellSums {
    /// Σ w·s^(γ-1)
    s_gm1: Vec<f64>,
    /// Σ w·s^γ
    s_g: Vec<f64>,
    /// Σ w·(p - ω)·s^(γ-1)
    lever: Vec<Point>,
}

impl CellSums {
    fn zeros(n: usize) -> Self {
        Self {
            s_gm1: vec![0.0; n],
            s_g: vec![0.0; n],
            lever: vec![Point::default(); n],
        }
    }

    fn absorb(&mut self, other: &CellSums) {
        for n in 0..self.s_g.len() {
            self.s_gm1[n] += other.s_gm1[n];
            self.s_g[n] += other.s_g[n];
            self.lever[n] = self.lever[n] + other.lever[n];
        }
    }
}

fn check_inputs(
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
) -> Result<()> {
    if assignment.sites() != deployment.len() {
        return Err(Error::domain(format!(
            "assignment has {} cells but deployment {} UAVs",
            assignment.sites(),
            deployment.len()
        )));
    }
    weights.check(assignment.grid())
}

fn cell_sums(
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
    params: &PowerParams,
    with_lever: bool,
) -> CellSums {
    let n = deployment.len();
    let grid = assignment.grid();
    let exp = Exponent::new(params.gamma() - 1.0);
    let h_sq: Vec<f64> = deployment.heights.iter().map(|h| h * h).collect();
    let ground = &deployment.ground;

    let partials: Vec<CellSums> = assignment
        .owners()
        .par_chunks(CHUNK)
        .zip(grid.xs().par_chunks(CHUNK))
        .zip(grid.ys().par_chunks(CHUNK))
        .zip(weights.as_slice().par_chunks(CHUNK))
        .map(|(((owners, xs), ys), ws)| {
            let mut acc = CellSums::zeros(n);
            for i in 0..owners.len() {
                let o = owners[i] as usize;
                let p = ground[o];
                let dx = p.x - xs[i];
                let dy = p.y - ys[i];
                let s = dx * dx + dy * dy + h_sq[o];
                let w = ws[i];
                let sg = exp.pow(s) * w;
                acc.s_gm1[o] += sg;
                acc.s_g[o] += sg * s;
                if with_lever {
                    acc.lever[o].x += dx * sg;
                    acc.lever[o].y += dy * sg;
                }
            }
            acc
        })
        .collect();

    let mut total = CellSums::zeros(n);
    for part in &partials {
        total.absorb(part);
    }
    total
}

fn report_from(sums: &CellSums, deployment: &Deployment, params: &PowerParams) -> PowerReport {
    let scale = params.scale();
    let per_cell: Vec<f64> = sums
        .s_g
        .iter()
        .zip(&deployment.heights)
        .map(|(s, h)| scale * s / h.powf(params.kappa()))
        .collect();
    PowerReport {
        total: per_cell.iter().sum(),
        per_cell,
        coverage_fraction: 1.0,
    }
}

/// Average transmit power of the deployment on the given cells.
pub fn average_power(
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
    params: &PowerParams,
) -> Result<PowerReport> {
    check_inputs(deployment, assignment, weights)?;
    let sums = cell_sums(deployment, assignment, weights, params, false);
    Ok(report_from(&sums, deployment, params))
}

/// Position and height derivatives of the average power for every UAV.
pub fn gradients(
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
    params: &PowerParams,
) -> Result<Gradients> {
    check_inputs(deployment, assignment, weights)?;
    let sums = cell_sums(deployment, assignment, weights, params, true);
    let (gamma, kappa, scale) = (params.gamma(), params.kappa(), params.scale());
    let mut position = Vec::with_capacity(deployment.len());
    let mut height = Vec::with_capacity(deployment.len());
    for (n, &h) in deployment.heights.iter().enumerate() {
        let hk = h.powf(kappa);
        position.push(sums.lever[n] * (2.0 * gamma * scale / hk));
        let dh = scale / (hk * h) * (2.0 * gamma * h * h * sums.s_gm1[n] - kappa * sums.s_g[n]);
        height.push(dh);
    }
    Ok(Gradients {
        position,
        height,
        report: report_from(&sums, deployment, params),
    })
}

/// `∂P̄/∂p_n` on frozen cells; zero for an empty cell.
pub fn position_gradient(
    n: usize,
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
    params: &PowerParams,
) -> Result<Point> {
    if n >= deployment.len() {
        return Err(Error::domain("UAV index out of range"));
    }
    Ok(gradients(deployment, assignment, weights, params)?.position[n])
}

/// `∂P̄/∂h_n` on frozen cells; zero for an empty cell.
pub fn height_gradient(
    n: usize,
    deployment: &Deployment,
    assignment: &AssignmentGrid,
    weights: &DensityWeights,
    params: &PowerParams,
) -> Result<f64> {
    if n >= deployment.len() {
        return Err(Error::domain("UAV index out of range"));
    }
    Ok(gradients(deployment, assignment, weights, params)?.height[n])
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::Polygon;
    use crate::tessellation::assign_cells;

    fn setup(n: usize) -> (Arc<RegionGrid>, DensityWeights) {
        let grid = Arc::new(RegionGrid::new(&Polygon::square(1.0).unwrap(), n).unwrap());
        let w = DensityWeights::new(&DensityField::Uniform, &grid).unwrap();
        (grid, w)
    }

    #[test]
    fn uniform_density_value() {
        let grid = RegionGrid::new(&Polygon::square(1000.0).unwrap(), 64).unwrap();
        let w = DensityWeights::new(&DensityField::Uniform, &grid).unwrap();
        for i in [0, 100, grid.len() - 1] {
            assert!((w.density_at(i) - 1e-6).abs() < 1e-18);
        }
        assert!((w.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_weights_rejected() {
        let (grid, _) = setup(8);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::new(0.5, 0.5)], vec![1.0]).unwrap();
        let a = assign_cells(&d, &grid, &p).unwrap();
        let bad = DensityWeights::from_raw(vec![1.0; grid.len()], grid.spec().cell_area());
        assert!(matches!(
            average_power(&d, &a, &bad, &p),
            Err(Error::Unnormalized { .. })
        ));
    }

    #[test]
    fn duplicate_uav_adds_nothing() {
        let (grid, w) = setup(64);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let one = Deployment::new(vec![Point::new(0.4, 0.6)], vec![0.7]).unwrap();
        let two = Deployment::new(vec![Point::new(0.4, 0.6); 2], vec![0.7; 2]).unwrap();
        let p1 = average_power(&one, &assign_cells(&one, &grid, &p).unwrap(), &w, &p).unwrap();
        let p2 = average_power(&two, &assign_cells(&two, &grid, &p).unwrap(), &w, &p).unwrap();
        assert!((p1.total - p2.total).abs() < 1e-14 * p1.total);
        assert_eq!(p2.per_cell[1], 0.0);
    }

    #[test]
    fn centered_uav_has_zero_position_gradient() {
        let (grid, w) = setup(64);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::new(0.5, 0.5)], vec![1.0]).unwrap();
        let a = assign_cells(&d, &grid, &p).unwrap();
        let g = position_gradient(0, &d, &a, &w, &p).unwrap();
        assert!(g.norm() < 1e-12, "{g:?}");
    }

    #[test]
    fn empty_cell_has_zero_gradients() {
        let (grid, w) = setup(64);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(
            vec![Point::new(0.1, 0.2), Point::new(0.6, 0.6)],
            vec![0.5, 2.3],
        )
        .unwrap();
        let a = assign_cells(&d, &grid, &p).unwrap();
        assert_eq!(position_gradient(1, &d, &a, &w, &p).unwrap(), Point::default());
        assert_eq!(height_gradient(1, &d, &a, &w, &p).unwrap(), 0.0);
    }

    #[test]
    fn power_grows_with_height_far_above_optimum() {
        let (grid, w) = setup(32);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::new(0.5, 0.5)], vec![20.0]).unwrap();
        let a = assign_cells(&d, &grid, &p).unwrap();
        assert!(height_gradient(0, &d, &a, &w, &p).unwrap() > 0.0);
    }

    #[test]
    fn mixture_mass_is_renormalized() {
        let grid = RegionGrid::new(&Polygon::square(1000.0).unwrap(), 128).unwrap();
        let w = DensityWeights::new(&DensityField::reference_mixture(100.0), &grid).unwrap();
        assert!((w.mass() - 1.0).abs() < 1e-12);
        // the narrowest bump has the highest peak
        let near = grid
            .points()
            .enumerate()
            .min_by(|a, b| {
                a.1.dist_sq(Point::new(600.0, 700.0))
                    .total_cmp(&b.1.dist_sq(Point::new(600.0, 700.0)))
            })
            .unwrap()
            .0;
        let max = (0..grid.len()).map(|i| w.density_at(i)).fold(0.0, f64::max);
        assert_eq!(w.density_at(near), max);
    }
}

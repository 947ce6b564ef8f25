//! Cell ownership under the minimum-transmit-power rule.
//!
//! Comparing `(d² + h²)^γ / h^κ` across UAVs is equivalent to comparing the
//! affine keys `a·d² + b` with `a = h^(-κ/γ)` and `b = h²·a`, so bisectors are
//! circles (unequal heights) or lines (equal heights). Cells are stored as
//! argmin rasters; the analytic [`DominanceRegion`] is kept for verification.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point, Polygon};
use crate::power::PowerParams;

/// Grid points are processed in fixed-size chunks so that parallel reductions
/// combine partial results in a fixed order.
pub(crate) const CHUNK: usize = 8192;

/// Relative height difference below which two UAVs count as equally high.
pub const EQUAL_HEIGHT_RTOL: f64 = 1e-12;

/// Ground positions and flight heights of `N` UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub ground: Vec<Point>,
    pub heights: Vec<f64>,
}

impl Deployment {
    pub fn new(ground: Vec<Point>, heights: Vec<f64>) -> Result<Self> {
        if ground.is_empty() {
            return Err(Error::domain("deployment needs at least one UAV"));
        }
        if ground.len() != heights.len() {
            return Err(Error::domain(format!(
                "{} ground positions but {} heights",
                ground.len(),
                heights.len()
            )));
        }
        if let Some(h) = heights.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
            return Err(Error::domain(format!("UAV height must be positive, got {h}")));
        }
        Ok(Self { ground, heights })
    }

    /// All UAVs at one height.
    pub fn with_common_height(ground: Vec<Point>, h: f64) -> Result<Self> {
        let heights = vec![h; ground.len()];
        Self::new(ground, heights)
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn mean_height(&self) -> f64 {
        self.heights.iter().sum::<f64>() / self.heights.len() as f64
    }

    /// Population standard deviation of the heights.
    pub fn height_std(&self) -> f64 {
        let mean = self.mean_height();
        let var = self
            .heights
            .iter()
            .map(|h| (h - mean) * (h - mean))
            .sum::<f64>()
            / self.heights.len() as f64;
        var.sqrt()
    }

    pub fn min_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Multiply every coordinate and height by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.ground.iter().map(|p| *p * s).collect(),
            self.heights.iter().map(|h| h * s).collect(),
        )
    }
}

/// `(h_n / h_m)^(κ/γ)`.
pub fn height_ratio(h_n: f64, h_m: f64, params: &PowerParams) -> Result<f64> {
    if !(h_n > 0.0) || !(h_m > 0.0) {
        return Err(Error::domain("heights must be positive"));
    }
    let gamma = params.gamma();
    if !(gamma > 0.0) {
        return Err(Error::domain("combined exponent must be positive"));
    }
    Ok((h_n / h_m).powf(params.kappa() / gamma))
}

/// Set of ground points where UAV `n` needs no more power than UAV `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DominanceRegion {
    /// `{ω : normal · ω ≤ offset}`; the bisector of two equally high UAVs.
    HalfPlane { normal: Point, offset: f64 },
    /// `n` is lower than `m`: closed disk.
    Disk { center: Point, radius: f64 },
    /// `n` is higher than `m`: complement of the open disk.
    DiskComplement { center: Point, radius: f64 },
}

impl DominanceRegion {
    /// Membership with an absolute slack `tol` on the defining inequality.
    pub fn contains(&self, w: Point, tol: f64) -> bool {
        match *self {
            DominanceRegion::HalfPlane { normal, offset } => normal.dot(w) <= offset + tol,
            DominanceRegion::Disk { center, radius } => w.dist_sq(center) <= radius * radius + tol,
            DominanceRegion::DiskComplement { center, radius } => {
                w.dist_sq(center) >= radius * radius - tol
            }
        }
    }

    /// Bounding circle for the disk kinds.
    pub fn circle(&self) -> Option<(Point, f64)> {
        match *self {
            DominanceRegion::HalfPlane { .. } => None,
            DominanceRegion::Disk { center, radius }
            | DominanceRegion::DiskComplement { center, radius } => Some((center, radius)),
        }
    }
}

fn heights_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUAL_HEIGHT_RTOL * a.max(b)
}

/// Dominance region of UAV `n` over UAV `m`.
pub fn dominance_region(
    n: usize,
    m: usize,
    deployment: &Deployment,
    params: &PowerParams,
) -> Result<DominanceRegion> {
    if n == m {
        return Err(Error::domain("dominance region needs two distinct UAVs"));
    }
    if n >= deployment.len() || m >= deployment.len() {
        return Err(Error::domain("UAV index out of range"));
    }
    if !params.is_directional() {
        return Err(Error::domain(
            "circular bisectors require kappa >= 1 and gamma >= (1 + kappa) / 2",
        ));
    }
    let (p_n, p_m) = (deployment.ground[n], deployment.ground[m]);
    let (h_n, h_m) = (deployment.heights[n], deployment.heights[m]);

    if heights_equal(h_n, h_m) {
        let normal = p_m - p_n;
        let offset = (p_m.norm_sq() - p_n.norm_sq()) / 2.0;
        return Ok(DominanceRegion::HalfPlane { normal, offset });
    }

    let ratio = height_ratio(h_n, h_m, params)?;
    let one_minus = 1.0 - ratio;
    let center = (p_n - p_m * ratio) * (1.0 / one_minus);
    let spread = ratio * p_n.dist_sq(p_m) / (one_minus * one_minus);
    let lift = h_n * h_n * (ratio.powf(1.0 - 2.0 * params.gamma() / params.kappa()) - 1.0) / one_minus;
    let radius = (spread + lift).sqrt();

    Ok(if h_n < h_m {
        DominanceRegion::Disk { center, radius }
    } else {
        DominanceRegion::DiskComplement { center, radius }
    })
}

/// Regular raster of cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// `nx × ny` cells covering `bbox`.
    pub fn over(bbox: BBox, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self {
            origin: bbox.min,
            dx: bbox.width() / nx as f64,
            dy: bbox.height() / ny as f64,
            nx,
            ny,
        })
    }

    /// Midpoint of cell `(ix, iy)`.
    #[inline]
    pub fn center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin.x + (ix as f64 + 0.5) * self.dx,
            self.origin.y + (iy as f64 + 0.5) * self.dy,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn cell_diameter(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// Midpoint-rule sample points of a target region.
#[derive(Debug, Clone)]
pub struct RegionGrid {
    spec: GridSpec,
    region: Polygon,
    xs: Vec<f64>,
    ys: Vec<f64>,
    raster_index: Vec<usize>,
}

impl RegionGrid {
    /// `n × n` raster over the bounding box of `region`, masked to the region.
    pub fn new(region: &Polygon, n: usize) -> Result<Self> {
        let spec = GridSpec::over(region.bbox(), n, n)?;
        Self::with_spec(region, spec)
    }

    pub fn with_spec(region: &Polygon, spec: GridSpec) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut raster_index = Vec::new();
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                let c = spec.center(ix, iy);
                if region.contains(c) {
                    xs.push(c.x);
                    ys.push(c.y);
                    raster_index.push(iy * spec.nx + ix);
                }
            }
        }
        if xs.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(Self {
            spec,
            region: region.clone(),
            xs,
            ys,
            raster_index,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn region(&self) -> &Polygon {
        &self.region
    }

    /// Number of in-region sample points.
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point {
        Point::new(self.xs[i], self.ys[i])
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.xs.iter().zip(&self.ys).map(|(&x, &y)| Point::new(x, y))
    }

    pub(crate) fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Position of sample `i` in the full `nx × ny` raster (row-major, `y` up).
    pub fn raster_index(&self, i: usize) -> usize {
        self.raster_index[i]
    }
}

/// Index of the power-minimizing UAV for every in-region grid point.
#[derive(Debug, Clone)]
pub struct AssignmentGrid {
    grid: Arc<RegionGrid>,
    owner: Vec<u32>,
    sites: usize,
}

impl AssignmentGrid {
    pub fn grid(&self) -> &Arc<RegionGrid> {
        &self.grid
    }

    /// Owner per in-region sample, aligned with [`RegionGrid::point`].
    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    /// Number of UAVs the assignment was computed for.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Owner for every raster cell; `None` outside the region.
    pub fn owner_raster(&self) -> Vec<Option<u32>> {
        let spec = self.grid.spec();
        let mut raster = vec![None; spec.nx * spec.ny];
        for (i, &o) in self.owner.iter().enumerate() {
            raster[self.grid.raster_index(i)] = Some(o);
        }
        raster
    }
}

/// Per-UAV affine key coefficients `(a_n, b_n)`.
pub(crate) fn site_keys(deployment: &Deployment, params: &PowerParams) -> Vec<(f64, f64)> {
    let e = -params.kappa() / params.gamma();
    deployment
        .heights
        .iter()
        .map(|&h| {
            let a = h.powf(e);
            (a, h * h * a)
        })
        .collect()
}

/// Assign every grid point to the UAV that needs the least transmit power.
/// Ties go to the smallest index.
pub fn assign_cells(
    deployment: &Deployment,
    grid: &Arc<RegionGrid>,
    params: &PowerParams,
) -> Result<AssignmentGrid> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(params.gamma() > 0.0) {
        return Err(Error::domain("combined exponent must be positive"));
    }
    let keys = site_keys(deployment, params);
    let ground = &deployment.ground;
    let mut owner = vec![0u32; grid.len()];
    owner
        .par_chunks_mut(CHUNK)
        .zip(grid.xs().par_chunks(CHUNK).zip(grid.ys().par_chunks(CHUNK)))
        .for_each(|(out, (xs, ys))| {
            for ((o, &x), &y) in out.iter_mut().zip(xs).zip(ys) {
                let mut best = f64::INFINITY;
                let mut arg = 0u32;
                for (n, (p, &(a, b))) in ground.iter().zip(&keys).enumerate() {
                    let dx = x - p.x;
                    let dy = y - p.y;
                    let k = a * (dx * dx + dy * dy) + b;
                    if k < best {
                        best = k;
                        arg = n as u32;
                    }
                }
                *o = arg;
            }
        });
    Ok(AssignmentGrid {
        grid: Arc::clone(grid),
        owner,
        sites: deployment.len(),
    })
}

/// Share of in-region grid points owned by each UAV.
pub fn cell_area_fractions(assignment: &AssignmentGrid) -> Vec<f64> {
    let mut counts = vec![0usize; assignment.sites];
    for &o in &assignment.owner {
        counts[o as usize] += 1;
    }
    let total = assignment.owner.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::tx_power;

    fn unit_grid(n: usize) -> Arc<RegionGrid> {
        Arc::new(RegionGrid::new(&Polygon::square(1.0).unwrap(), n).unwrap())
    }

    #[test]
    fn height_ratio_examples() {
        let p = PowerParams::normalized(2.0, 2.0, 0.01).unwrap();
        assert_eq!(height_ratio(5.0, 5.0, &p).unwrap(), 1.0);
        assert!((height_ratio(1.0, 4.0, &p).unwrap() - 0.25).abs() < 1e-15);
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let r = height_ratio(0.5, 2.3, &p).unwrap();
        assert!((r - (0.5f64 / 2.3).powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((r - 0.361_544).abs() < 1e-6);
        assert!(height_ratio(0.0, 1.0, &p).is_err());
    }

    #[test]
    fn equal_heights_give_bisector() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::with_common_height(
            vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0)],
            1.0,
        )
        .unwrap();
        match dominance_region(0, 1, &d, &p).unwrap() {
            DominanceRegion::HalfPlane { normal, offset } => {
                assert_eq!(normal, Point::new(2.0, 0.0));
                // boundary passes through the midpoint (1, 0)
                assert_eq!(normal.dot(Point::new(1.0, 0.0)), offset);
            }
            other => panic!("expected half-plane, got {other:?}"),
        }
    }

    #[test]
    fn coincident_ground_points_give_positive_radius() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::default(); 2], vec![1.0, 2.0]).unwrap();
        let region = dominance_region(0, 1, &d, &p).unwrap();
        let DominanceRegion::Disk { center, radius } = region else {
            panic!("lower UAV must dominate a disk, got {region:?}");
        };
        assert_eq!(center, Point::default());
        let hnm = 2f64.powf(-2.0 / 3.0);
        let want = ((hnm.powf(1.0 - 3.0) - 1.0) / (1.0 - hnm)).sqrt();
        assert!((radius - want).abs() < 1e-14);
        // equal power on the circle
        let w = Point::new(radius, 0.0);
        let a = tx_power(w, Point::default(), 1.0, &p).unwrap();
        let b = tx_power(w, Point::default(), 2.0, &p).unwrap();
        assert!((a - b).abs() / a < 1e-12);

        let flipped = dominance_region(1, 0, &d, &p).unwrap();
        assert!(matches!(flipped, DominanceRegion::DiskComplement { .. }));
    }

    #[test]
    fn dominance_requires_directional_antenna() {
        let p = PowerParams::normalized(2.0, 0.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::default(); 2], vec![1.0, 2.0]).unwrap();
        assert!(dominance_region(0, 1, &d, &p).is_err());
    }

    #[test]
    fn single_uav_owns_everything() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::new(0.3, 0.3)], vec![0.5]).unwrap();
        let a = assign_cells(&d, &unit_grid(64), &p).unwrap();
        assert!(a.owners().iter().all(|&o| o == 0));
        assert_eq!(cell_area_fractions(&a), vec![1.0]);
    }

    #[test]
    fn symmetric_pair_splits_at_bisector() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::with_common_height(
            vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)],
            0.4,
        )
        .unwrap();
        let grid = unit_grid(64);
        let a = assign_cells(&d, &grid, &p).unwrap();
        for (i, &o) in a.owners().iter().enumerate() {
            let x = grid.point(i).x;
            assert_eq!(o, if x < 0.5 { 0 } else { 1 });
        }
        assert_eq!(cell_area_fractions(&a), vec![0.5, 0.5]);
    }

    #[test]
    fn four_symmetric_uavs_share_equally() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let ground = vec![
            Point::new(0.5, 0.25),
            Point::new(0.75, 0.5),
            Point::new(0.5, 0.75),
            Point::new(0.25, 0.5),
        ];
        let d = Deployment::with_common_height(ground, 0.3).unwrap();
        let n = 128;
        let a = assign_cells(&d, &unit_grid(n), &p).unwrap();
        // points on the diagonals are ties; allow one grid row of slack
        let tol = 1.0 / n as f64;
        for f in cell_area_fractions(&a) {
            assert!((f - 0.25).abs() <= tol, "{f}");
        }
    }

    #[test]
    fn empty_cell_example() {
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(
            vec![Point::new(0.1, 0.2), Point::new(0.6, 0.6)],
            vec![0.5, 2.3],
        )
        .unwrap();
        let a = assign_cells(&d, &unit_grid(128), &p).unwrap();
        assert!(cell_area_fractions(&a)[1] < 1e-3);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let sq = Polygon::square(1.0).unwrap();
        assert!(matches!(RegionGrid::new(&sq, 0), Err(Error::EmptyGrid)));
    }

    #[test]
    fn raster_round_trip_marks_outside_cells() {
        let tri = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let grid = Arc::new(RegionGrid::new(&tri, 16).unwrap());
        let p = PowerParams::normalized(2.0, 1.0, 0.01).unwrap();
        let d = Deployment::new(vec![Point::new(0.2, 0.2)], vec![0.5]).unwrap();
        let a = assign_cells(&d, &grid, &p).unwrap();
        let raster = a.owner_raster();
        assert_eq!(raster.iter().filter(|o| o.is_some()).count(), grid.len());
        // top-right corner cell lies outside the triangle
        assert_eq!(raster[16 * 16 - 1], None);
    }
}

//! Comparison deployments: omni-antenna Lloyd (KSS) and circle-packing
//! layouts with beamwidth-matched heights (MSBD).

use std::path::Path;

use crate::density::{average_power, PowerReport};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::lloyd::{optimize, LloydConfig, Problem, RunReport, Variant};
use crate::tessellation::{Deployment, RegionGrid};

/// Relative slack when checking that disks do not overlap.
const OVERLAP_RTOL: f64 = 1e-9;

/// Equal-radius disks used as MSBD ground cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub source: String,
}

fn parse_err(source: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_num(s: &str, source: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(source, line, format!("not a number: `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(source, line, "value must be finite"));
    }
    Ok(v)
}

impl Packing {
    pub fn new(centers: Vec<Point>, radius: f64, source: impl Into<String>) -> Result<Self> {
        let p = Self {
            centers,
            radius,
            source: source.into(),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!("packing radius must be positive, got {}", self.radius)));
        }
        let min_sq = (2.0 * self.radius * (1.0 - OVERLAP_RTOL)).powi(2);
        for (i, a) in self.centers.iter().enumerate() {
            for (j, b) in self.centers.iter().enumerate().skip(i + 1) {
                if a.dist_sq(*b) < min_sq {
                    return Err(Error::domain(format!("disks {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Error unless every disk lies inside `region`.
    pub fn check_within(&self, region: &Polygon) -> Result<()> {
        let slack = self.radius * (1.0 - OVERLAP_RTOL);
        for (i, c) in self.centers.iter().enumerate() {
            if !region.contains(*c) || region.boundary_distance(*c) < slack {
                return Err(Error::domain(format!("disk {i} leaves the region")));
            }
        }
        Ok(())
    }

    /// Parse `radius,<r>` followed by one `x,y` row per disk. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut radius = None;
        let mut centers = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| parse_err(source, line_no, "expected two comma-separated fields"))?;
            if radius.is_none() {
                if a.trim() != "radius" {
                    return Err(parse_err(source, line_no, "first row must be `radius,<r>`"));
                }
                radius = Some(parse_num(b, source, line_no)?);
                continue;
            }
            centers.push(Point::new(parse_num(a, source, line_no)?, parse_num(b, source, line_no)?));
        }
        let radius = radius.ok_or_else(|| parse_err(source, 0, "missing `radius` row"))?;
        Self::new(centers, radius, source).map_err(|e| parse_err(source, 0, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("radius,{}\n", self.radius);
        for c in &self.centers {
            out.push_str(&format!("{},{}\n", c.x, c.y));
        }
        out
    }
}

fn lattice_centers(region: &Polygon, r: f64, limit: usize) -> Vec<Point> {
    let bb = region.bbox();
    let row_gap = 3f64.sqrt() * r;
    let mut out = Vec::new();
    let mut row = 0usize;
    let mut y = bb.min.y + r;
    while y <= bb.max.y - r && out.len() < limit {
        let mut x = bb.min.x + r + if row % 2 == 1 { r } else { 0.0 };
        while x <= bb.max.x - r && out.len() < limit {
            let c = Point::new(x, y);
            if region.contains(c) && region.boundary_distance(c) >= r * (1.0 - OVERLAP_RTOL) {
                out.push(c);
            }
            x += 2.0 * r;
        }
        row += 1;
        y = bb.min.y + r + row as f64 * row_gap;
    }
    out
}

/// Largest-radius hexagonal-lattice packing of `n` equal disks found by
/// bisection on the radius. Used when no packing file is supplied.
pub fn hex_lattice_packing(region: &Polygon, n: usize) -> Result<Packing> {
    if n == 0 {
        return Err(Error::domain("need at least one disk"));
    }
    let bb = region.bbox();
    let mut hi = 0.5 * bb.width().min(bb.height());
    let mut lo = (region.area() / (2.0 * 3f64.sqrt() * n as f64)).sqrt() / 4.0;
    while lattice_centers(region, lo, n).len() < n {
        lo /= 2.0;
        if lo < 1e-12 * hi {
            return Err(Error::domain("region too thin for a lattice packing"));
        }
    }
    if lattice_centers(region, hi, n).len() >= n {
        lo = hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if lattice_centers(region, mid, n).len() >= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Packing::new(lattice_centers(region, lo, n), lo, "hex-lattice")
}

/// Lloyd-B with the omni-directional objective, followed by lowering every
/// UAV to the minimum height. Without a gain term the power grows with the
/// height, so the final adjustment never increases it; it is recorded as one
/// extra iteration.
pub fn kss_optimize(initial: &Deployment, config: &LloydConfig, problem: &Problem) -> Result<RunReport> {
    if problem.params.kappa() != 0.0 {
        return Err(Error::domain("the omni-directional baseline needs kappa = 0"));
    }
    let config = LloydConfig {
        variant: Variant::B,
        ..*config
    };
    let mut run = optimize(initial, &config, problem)?;
    let h_min = problem.params.h_min();
    if run.final_deployment.heights.iter().any(|&h| h != h_min) {
        let lowered = Deployment::with_common_height(run.final_deployment.ground.clone(), h_min)?;
        run.power_trace.push(problem.power(&lowered)?);
        run.min_height_trace.push(h_min);
        run.iterations += 1;
        run.height_std = 0.0;
        run.final_deployment = lowered;
    }
    Ok(run)
}

/// Packing centres with the common height at which the half-power cone
/// just reaches the disk rim.
pub fn msbd_deploy(packing: &Packing, theta_hpbw_deg: f64) -> Result<Deployment> {
    if !(theta_hpbw_deg > 0.0 && theta_hpbw_deg < 180.0) {
        return Err(Error::domain(format!("beamwidth must lie in (0, 180), got {theta_hpbw_deg}")));
    }
    let h = packing.radius / (theta_hpbw_deg.to_radians() / 2.0).tan();
    Deployment::with_common_height(packing.centers.clone(), h)
}

/// Share of in-region grid points inside some disk.
pub fn disk_coverage_fraction(packing: &Packing, grid: &RegionGrid) -> f64 {
    let r_sq = packing.radius * packing.radius;
    let covered = grid
        .points()
        .filter(|p| packing.centers.iter().any(|c| c.dist_sq(*p) <= r_sq))
        .count();
    covered as f64 / grid.len() as f64
}

/// Average power of `deployment` under the problem's power model, with
/// freshly assigned cells.
pub fn cross_evaluate(deployment: &Deployment, problem: &Problem) -> Result<PowerReport> {
    let cells = problem.assign(deployment)?;
    average_power(deployment, &cells, &problem.weights, &problem.params)
}

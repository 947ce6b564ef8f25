//! Experiment descriptions in a flat `key = value` text format.
//!
//! Units are part of the key names. Lists are comma separated, `#` starts a
//! comment line. Parsing fills in every default, so writing a parsed
//! scenario back out lists all keys explicitly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::lloyd::{LloydConfig, SharedHeightStep, Variant};
use crate::power::{hpbw_degrees, PowerMode, PowerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    LloydA,
    LloydB,
    Kss,
    Msbd,
    Analytic,
    BruteForce,
    Sweep,
}

/// Deployment methods that can appear in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LloydA,
    LloydB,
    Kss,
    Msbd,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LloydA => "lloyd-a",
            Experiment::LloydB => "lloyd-b",
            Experiment::Kss => "kss",
            Experiment::Msbd => "msbd",
            Experiment::Analytic => "analytic",
            Experiment::BruteForce => "brute-force",
            Experiment::Sweep => "sweep",
        }
    }

    pub fn method(self) -> Option<Method> {
        match self {
            Experiment::LloydA => Some(Method::LloydA),
            Experiment::LloydB => Some(Method::LloydB),
            Experiment::Kss => Some(Method::Kss),
            Experiment::Msbd => Some(Method::Msbd),
            _ => None,
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "lloyd-a" => Experiment::LloydA,
            "lloyd-b" => Experiment::LloydB,
            "kss" => Experiment::Kss,
            "msbd" => Experiment::Msbd,
            "analytic" => Experiment::Analytic,
            "brute-force" => Experiment::BruteForce,
            "sweep" => Experiment::Sweep,
            _ => return Err(format!("unknown experiment `{s}`")),
        })
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LloydA => "lloyd-a",
            Method::LloydB => "lloyd-b",
            Method::Kss => "kss",
            Method::Msbd => "msbd",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::LloydA => Some(Variant::A),
            Method::LloydB | Method::Kss => Some(Variant::B),
            Method::Msbd => None,
        }
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.parse::<Experiment>()?.method() {
            Some(m) => Ok(m),
            None => Err(format!("`{s}` is not a deployment method")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    /// `[0, width] × [0, height]`.
    Rect { width: f64, height: f64 },
    Vertices(Vec<Point>),
}

impl RegionSpec {
    pub fn polygon(&self) -> Result<Polygon> {
        match self {
            RegionSpec::Rect { width, height } => Polygon::rectangle(0.0, 0.0, *width, *height),
            RegionSpec::Vertices(v) => Polygon::new(v.clone()),
        }
    }

    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s.contains(':') {
            let pts = s
                .split_whitespace()
                .map(|pair| {
                    let (x, y) = pair.split_once(':').ok_or(format!("bad vertex `{pair}`"))?;
                    Ok(Point::new(num(x)?, num(y)?))
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            return Ok(RegionSpec::Vertices(pts));
        }
        let (w, h) = match s.split_once('x') {
            Some((w, h)) => (num(w)?, num(h)?),
            None => {
                let side = num(s)?;
                (side, side)
            }
        };
        Ok(RegionSpec::Rect { width: w, height: h })
    }

    fn write(&self) -> String {
        match self {
            RegionSpec::Rect { width, height } => format!("{width}x{height}"),
            RegionSpec::Vertices(v) => v.iter().map(|p| format!("{}:{}", p.x, p.y)).collect::<Vec<_>>().join(" "),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Uniform,
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub experiment: Experiment,
    pub region: RegionSpec,
    pub n_uavs: Vec<usize>,
    pub density: DensityKind,
    pub sigma_scale: f64,
    pub alpha: f64,
    pub kappa: f64,
    /// Antenna exponent used to evaluate and compare deployments.
    pub eval_kappa: f64,
    pub h_min_m: f64,
    pub beta0: f64,
    pub power_mode: PowerMode,
    pub restarts: usize,
    pub seed: u64,
    pub grid: usize,
    pub init_height_m: f64,
    /// Initial step `δ` of the backtracking search, in the units of
    /// position per unit of power gradient.
    pub step_size: f64,
    pub shared_height_step: SharedHeightStep,
    pub stop_threshold: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub packing_file: Option<PathBuf>,
    pub hpbw_deg: f64,
    pub brute_force_samples: usize,
    pub analytic_gammas: Vec<u32>,
    /// Empty means every integer κ in `[1, 2γ−1]`.
    pub analytic_kappas: Vec<f64>,
    pub analytic_areas_m2: Vec<f64>,
    pub sweep_methods: Vec<Method>,
    pub out_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "experiment",
    "region_m",
    "n_uavs",
    "density",
    "sigma_scale",
    "alpha",
    "kappa",
    "eval_kappa",
    "h_min_m",
    "beta0",
    "power_mode",
    "restarts",
    "seed",
    "grid",
    "init_height_m",
    "step_size",
    "shared_height_step",
    "stop_threshold",
    "max_iterations",
    "max_halvings",
    "packing_file",
    "hpbw_deg",
    "brute_force_samples",
    "analytic_gammas",
    "analytic_kappas",
    "analytic_areas_m2",
    "sweep_methods",
    "out_dir",
];

fn num(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: `{}`", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("value must be finite".into())
    }
}

fn list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| format!("bad list entry `{t}`")))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

struct Fields {
    map: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn get<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => parse(&v).map(Some).map_err(|reason| Error::field(key, reason)),
        }
    }

    fn scalar<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.get(key, |v| v.parse::<T>().map_err(|_| format!("cannot parse `{v}`")))
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.get(key, num)
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::field(field, format!("must be positive, got {v}")))
    }
}

fn nonzero(field: &str, v: usize) -> Result<usize> {
    if v > 0 {
        Ok(v)
    } else {
        Err(Error::field(field, "must be at least 1"))
    }
}

impl Scenario {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::UnknownKey(k.to_string()));
            }
            if map.insert(k.to_string(), (idx + 1, v.trim().to_string())).is_some() {
                return Err(parse_err(format!("duplicate key `{k}`")));
            }
        }
        let mut f = Fields { map };

        let experiment: Experiment = f
            .get("experiment", |v| v.parse())?
            .ok_or_else(|| Error::MissingField("experiment".into()))?;
        let region = f
            .get("region_m", RegionSpec::parse)?
            .ok_or_else(|| Error::MissingField("region_m".into()))?;
        let polygon = region.polygon().map_err(|e| Error::field("region_m", e.to_string()))?;
        let needs_n = !matches!(experiment, Experiment::Analytic | Experiment::BruteForce);
        let n_uavs: Vec<usize> = f.get("n_uavs", list)?.unwrap_or_default();
        if needs_n && n_uavs.is_empty() {
            return Err(Error::MissingField("n_uavs".into()));
        }
        if n_uavs.contains(&0) {
            return Err(Error::field("n_uavs", "every entry must be at least 1"));
        }
        let density = f
            .get("density", |v| match v {
                "uniform" => Ok(DensityKind::Uniform),
                "mixture" => Ok(DensityKind::Mixture),
                _ => Err(format!("expected `uniform` or `mixture`, got `{v}`")),
            })?
            .unwrap_or(DensityKind::Uniform);
        let sigma_scale = positive("sigma_scale", f.real("sigma_scale")?.unwrap_or(1.0))?;
        let alpha = f.real("alpha")?.unwrap_or(2.0);
        if alpha < 1.0 {
            return Err(Error::field("alpha", "path-loss exponent must be at least 1"));
        }
        let kappa = f.real("kappa")?.unwrap_or(1.0);
        if kappa < 0.0 {
            return Err(Error::field("kappa", "antenna exponent must be nonnegative"));
        }
        if matches!(experiment, Experiment::LloydA | Experiment::LloydB) && kappa < 1.0 {
            return Err(Error::field("kappa", "directional optimizers need kappa >= 1"));
        }
        let eval_kappa = f.real("eval_kappa")?.unwrap_or(kappa);
        if eval_kappa < 0.0 {
            return Err(Error::field("eval_kappa", "antenna exponent must be nonnegative"));
        }
        let h_min_m = positive("h_min_m", f.real("h_min_m")?.unwrap_or(1.0))?;
        let beta0 = positive("beta0", f.real("beta0")?.unwrap_or(1.0))?;
        let power_mode = f
            .get("power_mode", |v| match v {
                "normalized" => Ok(PowerMode::Normalized),
                "physical" => Ok(PowerMode::Physical),
                _ => Err(format!("expected `normalized` or `physical`, got `{v}`")),
            })?
            .unwrap_or_default();
        let restarts = nonzero("restarts", f.scalar("restarts")?.unwrap_or(1))?;
        let seed = f.scalar("seed")?.unwrap_or(0);
        let grid = nonzero("grid", f.scalar("grid")?.unwrap_or(256))?;
        let bb = polygon.bbox();
        let side = bb.width().max(bb.height());
        let init_height_m = positive("init_height_m", f.real("init_height_m")?.unwrap_or(0.1 * side))?;
        let step_size = positive("step_size", f.real("step_size")?.unwrap_or(0.1 * polygon.diameter()))?;
        let shared_height_step = f
            .get("shared_height_step", |v| match v {
                "sum" => Ok(SharedHeightStep::Sum),
                "mean" => Ok(SharedHeightStep::Mean),
                _ => Err(format!("expected `sum` or `mean`, got `{v}`")),
            })?
            .unwrap_or_default();
        let stop_threshold = f.real("stop_threshold")?.unwrap_or(1e-5);
        if !(stop_threshold >= 0.0 && stop_threshold.is_finite()) {
            return Err(Error::field("stop_threshold", "must be finite and nonnegative"));
        }
        let max_iterations = nonzero("max_iterations", f.scalar("max_iterations")?.unwrap_or(500))?;
        let max_halvings = nonzero("max_halvings", f.scalar("max_halvings")?.unwrap_or(40))?;
        let packing_file = f.take("packing_file").filter(|s| !s.is_empty()).map(PathBuf::from);
        let hpbw_deg = match f.real("hpbw_deg")? {
            Some(v) => v,
            None => hpbw_degrees(kappa.max(1.0)).map_err(|e| Error::field("hpbw_deg", e.to_string()))?,
        };
        if !(hpbw_deg > 0.0 && hpbw_deg < 180.0) {
            return Err(Error::field("hpbw_deg", "beamwidth must lie in (0, 180)"));
        }
        let brute_force_samples = f.scalar("brute_force_samples")?.unwrap_or(5000);
        if brute_force_samples < 2 {
            return Err(Error::field("brute_force_samples", "need at least two samples"));
        }
        let analytic_gammas: Vec<u32> = f.get("analytic_gammas", list)?.unwrap_or_else(|| vec![1, 2, 3]);
        if analytic_gammas.is_empty() || analytic_gammas.iter().any(|g| !(1..=3).contains(g)) {
            return Err(Error::field("analytic_gammas", "entries must lie in 1..=3"));
        }
        let analytic_kappas: Vec<f64> = f.get("analytic_kappas", list)?.unwrap_or_default();
        if analytic_kappas.iter().any(|k| !(*k >= 1.0 && k.is_finite())) {
            return Err(Error::field("analytic_kappas", "entries must be at least 1"));
        }
        let analytic_areas_m2: Vec<f64> = f.get("analytic_areas_m2", list)?.unwrap_or_else(|| vec![1.0]);
        if analytic_areas_m2.is_empty() || analytic_areas_m2.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::field("analytic_areas_m2", "entries must be positive"));
        }
        let sweep_methods: Vec<Method> = f.get("sweep_methods", list)?.unwrap_or_else(|| vec![Method::LloydB]);
        if sweep_methods.is_empty() {
            return Err(Error::field("sweep_methods", "need at least one method"));
        }
        if experiment == Experiment::Sweep
            && kappa < 1.0
            && sweep_methods.iter().any(|m| matches!(m, Method::LloydA | Method::LloydB))
        {
            return Err(Error::field("kappa", "directional optimizers need kappa >= 1"));
        }
        let out_dir = PathBuf::from(f.take("out_dir").unwrap_or_else(|| "out".into()));

        debug_assert!(f.map.is_empty());
        Ok(Self {
            experiment,
            region,
            n_uavs,
            density,
            sigma_scale,
            alpha,
            kappa,
            eval_kappa,
            h_min_m,
            beta0,
            power_mode,
            restarts,
            seed,
            grid,
            init_height_m,
            step_size,
            shared_height_step,
            stop_threshold,
            max_iterations,
            max_halvings,
            packing_file,
            hpbw_deg,
            brute_force_samples,
            analytic_gammas,
            analytic_kappas,
            analytic_areas_m2,
            sweep_methods,
            out_dir,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical text with every key, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("experiment", self.experiment.name().into());
        put("region_m", self.region.write());
        put("n_uavs", join(&self.n_uavs));
        put(
            "density",
            match self.density {
                DensityKind::Uniform => "uniform",
                DensityKind::Mixture => "mixture",
            }
            .into(),
        );
        put("sigma_scale", self.sigma_scale.to_string());
        put("alpha", self.alpha.to_string());
        put("kappa", self.kappa.to_string());
        put("eval_kappa", self.eval_kappa.to_string());
        put("h_min_m", self.h_min_m.to_string());
        put("beta0", self.beta0.to_string());
        put(
            "power_mode",
            match self.power_mode {
                PowerMode::Normalized => "normalized",
                PowerMode::Physical => "physical",
            }
            .into(),
        );
        put("restarts", self.restarts.to_string());
        put("seed", self.seed.to_string());
        put("grid", self.grid.to_string());
        put("init_height_m", self.init_height_m.to_string());
        put("step_size", self.step_size.to_string());
        put(
            "shared_height_step",
            match self.shared_height_step {
                SharedHeightStep::Sum => "sum",
                SharedHeightStep::Mean => "mean",
            }
            .into(),
        );
        put("stop_threshold", self.stop_threshold.to_string());
        put("max_iterations", self.max_iterations.to_string());
        put("max_halvings", self.max_halvings.to_string());
        put(
            "packing_file",
            self.packing_file.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        put("hpbw_deg", self.hpbw_deg.to_string());
        put("brute_force_samples", self.brute_force_samples.to_string());
        put("analytic_gammas", join(&self.analytic_gammas));
        put("analytic_kappas", join(&self.analytic_kappas));
        put("analytic_areas_m2", join(&self.analytic_areas_m2));
        put(
            "sweep_methods",
            self.sweep_methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
        );
        put("out_dir", self.out_dir.display().to_string());
        out
    }

    pub fn polygon(&self) -> Result<Polygon> {
        self.region.polygon()
    }

    pub fn density_field(&self) -> DensityField {
        match self.density {
            DensityKind::Uniform => DensityField::Uniform,
            DensityKind::Mixture => DensityField::reference_mixture(self.sigma_scale),
        }
    }

    /// Power model with antenna exponent `kappa`.
    pub fn params_with_kappa(&self, kappa: f64) -> Result<PowerParams> {
        Ok(PowerParams::new(self.alpha, kappa, self.beta0, self.h_min_m)?.with_mode(self.power_mode))
    }

    pub fn params(&self) -> Result<PowerParams> {
        self.params_with_kappa(self.kappa)
    }

    pub fn lloyd_config(&self, variant: Variant) -> LloydConfig {
        LloydConfig {
            variant,
            shared_height_step: self.shared_height_step,
            initial_step: self.step_size,
            stop_threshold: self.stop_threshold,
            max_outer_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
            rng_seed: self.seed,
        }
    }

    /// `(γ, κ)` pairs of the analytic and brute-force tables.
    pub fn analytic_pairs(&self) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        for &g in &self.analytic_gammas {
            let top = 2.0 * g as f64 - 1.0;
            if self.analytic_kappas.is_empty() {
                out.extend((1..=(2 * g - 1)).map(|k| (g, k as f64)));
            } else {
                out.extend(self.analytic_kappas.iter().filter(|&&k| k <= top).map(|&k| (g, k)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::parse("experiment = lloyd-b\nregion_m = 10\nn_uavs = 8\n", "t").unwrap();
        assert_eq!(s.n_uavs, vec![8]);
        assert_eq!(s.region, RegionSpec::Rect { width: 10.0, height: 10.0 });
        assert_eq!(s.alpha, 2.0);
        assert_eq!(s.kappa, 1.0);
        assert_eq!(s.hpbw_deg, 120.0);
        assert_eq!(s.grid, 256);
        assert_eq!(s.restarts, 1);
        assert_eq!(s.stop_threshold, 1e-5);
        assert!((s.step_size - 0.1 * 200f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn directional_optimizer_needs_kappa_one() {
        let e = Scenario::parse("experiment = lloyd-a\nregion_m = 10\nn_uavs = 8\nkappa = 0\n", "t").unwrap_err();
        assert!(matches!(&e, Error::InvalidField { field, .. } if field == "kappa"));
        assert!(e.is_validation());
        assert!(Scenario::parse("experiment = kss\nregion_m = 10\nn_uavs = 8\nkappa = 0\n", "t").is_ok());
    }

    #[test]
    fn structured_errors() {
        assert!(matches!(
            Scenario::parse("experiment = lloyd-b\nn_uavs = 3\n", "t"),
            Err(Error::MissingField(f)) if f == "region_m"
        ));
        assert!(matches!(
            Scenario::parse("experiment = lloyd-b\nregion_m = 1\nn_uavs = 3\ncolour = red\n", "t"),
            Err(Error::UnknownKey(k)) if k == "colour"
        ));
        assert!(matches!(
            Scenario::parse("experiment = lloyd-b\nregion_m = 1\nn_uavs = 3\nh_min_m = -1\n", "t"),
            Err(Error::InvalidField { field, .. }) if field == "h_min_m"
        ));
        assert!(matches!(
            Scenario::parse("experiment lloyd-b\n", "t"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn reference_setup_parses() {
        let text = "experiment = sweep\nregion_m = 1000x1000\nn_uavs = 10,20,30,40,50,60,70,80,90,100\n\
                    density = uniform\nalpha = 2\nkappa = 1\nh_min_m = 25\nrestarts = 100\ninit_height_m = 100\n";
        let s = Scenario::parse(text, "t").unwrap();
        assert_eq!(s.n_uavs.len(), 10);
        assert_eq!(s.h_min_m, 25.0);
        assert_eq!(s.restarts, 100);
        assert_eq!(s.polygon().unwrap().area(), 1e6);
    }

    #[test]
    fn round_trip() {
        let text = "experiment = sweep\nregion_m = 0:0 4:0 4:3 0:3\nn_uavs = 3,5\ndensity = mixture\n\
                    sigma_scale = 0.1\nsweep_methods = lloyd-a,kss,msbd\nanalytic_kappas = 1.5\n\
                    packing_file = packs/p5.csv\npower_mode = physical\nshared_height_step = mean\n";
        let s = Scenario::parse(text, "t").unwrap();
        let again = Scenario::parse(&s.to_text(), "t").unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_text(), again.to_text());
    }

    #[test]
    fn analytic_pairs_default_to_integer_range() {
        let s = Scenario::parse("experiment = analytic\nregion_m = 1\n", "t").unwrap();
        assert_eq!(s.analytic_pairs().len(), 1 + 3 + 5);
    }
}

//! Scenario execution and artifact layout.
//!
//! Every run writes its tables into the scenario's output directory followed
//! by `manifest.txt`, which records the tool version, the seed, digests of
//! all outputs and inputs, and the canonical scenario text.

use std::path::PathBuf;

use crate::analytic::{
    brute_force_height, optimal_average_power, printed_average_power, printed_scaling_factor,
    solve_common_height_closed, solve_common_height_numeric,
};
use crate::baselines::{cross_evaluate, disk_coverage_fraction, hex_lattice_packing, kss_optimize, msbd_deploy, Packing};
use crate::density::average_power;
use crate::error::Result;
use crate::export::{cell_map_ppm, sha256_hex, write_atomic, Csv};
use crate::lloyd::{multi_start, multi_start_with, Problem, RunReport};
use crate::power::PowerMode;
use crate::scenario::{Experiment, Method, Scenario};
use crate::tessellation::{cell_area_fractions, Deployment};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Outcome of one deployment method at one fleet size.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub n: usize,
    pub deployment: Deployment,
    /// Best run of the optimizer; `None` for packing layouts.
    pub run: Option<RunReport>,
    /// Final power under the method's own objective.
    pub train_power: f64,
    pub mean_train_power: f64,
    pub std_train_power: f64,
    /// Power under the evaluation antenna exponent.
    pub eval_power: f64,
    pub coverage_fraction: f64,
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }
}

fn f(v: f64) -> String {
    v.to_string()
}

/// Grid, density and the training and evaluation power models of a scenario.
pub struct Problems {
    pub train: Problem,
    pub omni: Problem,
    pub eval: Problem,
}

impl Problems {
    pub fn new(s: &Scenario) -> Result<Self> {
        let train = Problem::new(&s.polygon()?, s.grid, &s.density_field(), s.params()?)?;
        let omni = train.with_params(s.params_with_kappa(0.0)?);
        let eval = train.with_params(s.params_with_kappa(s.eval_kappa)?);
        Ok(Self { train, omni, eval })
    }
}

fn packing_for(s: &Scenario, problems: &Problems, n: usize) -> Result<Packing> {
    match &s.packing_file {
        Some(path) => {
            let p = Packing::read(path)?;
            p.check_within(problems.train.region())?;
            if p.centers.len() != n {
                return Err(crate::error::Error::field(
                    "packing_file",
                    format!("holds {} disks but n_uavs = {n}", p.centers.len()),
                ));
            }
            Ok(p)
        }
        None => hex_lattice_packing(problems.train.region(), n),
    }
}

/// Run one deployment method for `n` UAVs.
pub fn run_method(s: &Scenario, problems: &Problems, method: Method, n: usize) -> Result<MethodResult> {
    let box_h = s.init_height_m;
    let (deployment, run, train_power, mean, std, coverage) = match method {
        Method::LloydA | Method::LloydB => {
            let config = s.lloyd_config(method.variant().expect("optimizer"));
            let ms = multi_start(n, s.restarts, s.seed, &config, &problems.train, box_h)?;
            let d = ms.best.final_deployment.clone();
            (d, Some(ms.best.clone()), ms.best.final_power(), ms.mean_power, ms.std_power, 1.0)
        }
        Method::Kss => {
            let config = s.lloyd_config(method.variant().expect("optimizer"));
            let omni = &problems.omni;
            let ms = multi_start_with(n, s.restarts, s.seed, omni, box_h, |init| kss_optimize(init, &config, omni))?;
            let d = ms.best.final_deployment.clone();
            (d, Some(ms.best.clone()), ms.best.final_power(), ms.mean_power, ms.std_power, 1.0)
        }
        Method::Msbd => {
            let packing = packing_for(s, problems, n)?;
            let d = msbd_deploy(&packing, s.hpbw_deg)?;
            let p = problems.train.power(&d)?;
            let coverage = disk_coverage_fraction(&packing, &problems.train.grid);
            (d, None, p, p, 0.0, coverage)
        }
    };
    let eval_power = cross_evaluate(&deployment, &problems.eval)?.total;
    Ok(MethodResult {
        method,
        n,
        deployment,
        run,
        train_power,
        mean_train_power: mean,
        std_train_power: std,
        eval_power,
        coverage_fraction: coverage,
    })
}

const SUMMARY_HEADER: &[&str] = &[
    "method",
    "n",
    "restarts",
    "power_train",
    "mean_power_train",
    "std_power_train",
    "eval_kappa",
    "power_eval",
    "height_std_m",
    "mean_height_m",
    "min_height_m",
    "iterations",
    "converged",
    "coverage_fraction",
];

fn summary_row(s: &Scenario, r: &MethodResult) -> Vec<String> {
    let (iterations, converged) = match &r.run {
        Some(run) => (run.iterations.to_string(), run.converged.to_string()),
        None => ("0".into(), "true".into()),
    };
    vec![
        r.method.name().into(),
        r.n.to_string(),
        if r.run.is_some() { s.restarts } else { 1 }.to_string(),
        f(r.train_power),
        f(r.mean_train_power),
        f(r.std_train_power),
        f(s.eval_kappa),
        f(r.eval_power),
        f(r.deployment.height_std()),
        f(r.deployment.mean_height()),
        f(r.deployment.min_height()),
        iterations,
        converged,
        f(r.coverage_fraction),
    ]
}

fn method_artifacts(out: &mut Artifacts, problems: &Problems, r: &MethodResult) -> Result<()> {
    let prefix = format!("{}_n{}", r.method.name(), r.n);
    if let Some(run) = &r.run {
        let mut t = Csv::new(&["iteration", "power", "min_height_m"]);
        for (i, (p, h)) in run.power_trace.iter().zip(&run.min_height_trace).enumerate() {
            t.row(&[i.to_string(), f(*p), f(*h)]);
        }
        out.add(format!("{prefix}_trace.csv"), t.into_bytes());
    }
    let mut t = Csv::new(&["uav", "x_m", "y_m", "h_m"]);
    for (i, (p, h)) in r.deployment.ground.iter().zip(&r.deployment.heights).enumerate() {
        t.row(&[i.to_string(), f(p.x), f(p.y), f(*h)]);
    }
    out.add(format!("{prefix}_deployment.csv"), t.into_bytes());

    let cells = problems.eval.assign(&r.deployment)?;
    let report = average_power(&r.deployment, &cells, &problems.eval.weights, &problems.eval.params)?;
    let fractions = cell_area_fractions(&cells);
    let mut t = Csv::new(&["uav", "area_fraction", "power_eval"]);
    for (i, (a, p)) in fractions.iter().zip(&report.per_cell).enumerate() {
        t.row(&[i.to_string(), f(*a), f(*p)]);
    }
    out.add(format!("{prefix}_cells.csv"), t.into_bytes());
    out.add(format!("{prefix}_cellmap.ppm"), cell_map_ppm(&cells, &r.deployment));
    Ok(())
}

fn deployment_tables(s: &Scenario, out: &mut Artifacts, methods: &[Method], table: &str) -> Result<()> {
    let problems = Problems::new(s)?;
    let mut summary = Csv::new(SUMMARY_HEADER);
    for &method in methods {
        for &n in &s.n_uavs {
            let r = run_method(s, &problems, method, n)?;
            summary.row(&summary_row(s, &r));
            method_artifacts(out, &problems, &r)?;
        }
    }
    out.add(table, summary.into_bytes());
    Ok(())
}

const ANALYTIC_HEADER: &[&str] = &[
    "gamma",
    "kappa",
    "area_m2",
    "c",
    "c_printed",
    "c_numeric",
    "h_star_m",
    "p_bar_normalized",
    "p_bar_physical",
    "p_bar_printed_physical",
    "printed_over_exact",
];

/// Table of optimal common heights and powers. The printed-form columns
/// reproduce the closed-form statement literally; `printed_over_exact`
/// differs from one wherever that statement disagrees with the moment
/// integrals.
pub fn analytic_table(s: &Scenario) -> Result<Vec<u8>> {
    let mut t = Csv::new(ANALYTIC_HEADER);
    for &area in &s.analytic_areas_m2 {
        for (g, k) in s.analytic_pairs() {
            let sol = solve_common_height_closed(g, k, area)?;
            let num = solve_common_height_numeric(g as f64, k, area, 1e-14)?;
            let exact_phys = optimal_average_power(g, k, area, PowerMode::Physical)?;
            let printed_phys = printed_average_power(g, k, area, PowerMode::Physical)?;
            t.row(&[
                g.to_string(),
                f(k),
                f(area),
                f(sol.c_factor),
                f(printed_scaling_factor(g, k)?),
                f(num.c_factor),
                f(sol.h_star),
                f(optimal_average_power(g, k, area, PowerMode::Normalized)?),
                f(exact_phys),
                f(printed_phys),
                f(printed_phys / exact_phys),
            ]);
        }
    }
    Ok(t.into_bytes())
}

/// Single-cell brute-force heights next to the closed forms.
pub fn brute_force_table(s: &Scenario) -> Result<Vec<u8>> {
    let mut t = Csv::new(&["gamma", "kappa", "alpha", "area_m2", "samples", "h_brute_m", "h_closed_m", "rel_gap"]);
    for &area in &s.analytic_areas_m2 {
        for (g, k) in s.analytic_pairs() {
            let alpha = 2.0 * g as f64 - k;
            let hb = brute_force_height(area, k, alpha, s.brute_force_samples)?;
            let hc = solve_common_height_closed(g, k, area)?.h_star;
            t.row(&[
                g.to_string(),
                f(k),
                f(alpha),
                f(area),
                s.brute_force_samples.to_string(),
                f(hb),
                f(hc),
                f((hb - hc).abs() / hc),
            ]);
        }
    }
    Ok(t.into_bytes())
}

fn manifest(s: &Scenario, files: &[(String, Vec<u8>)]) -> Result<Vec<u8>> {
    let scenario = s.to_text();
    let mut m = String::new();
    m.push_str(&format!("tool = {TOOL_VERSION}\n"));
    m.push_str(&format!("experiment = {}\n", s.experiment.name()));
    m.push_str(&format!("seed = {}\n", s.seed));
    m.push_str(&format!("scenario_sha256 = {}\n", sha256_hex(scenario.as_bytes())));
    if let Some(p) = &s.packing_file {
        let bytes = std::fs::read(p).map_err(|e| crate::error::Error::io(p, e))?;
        m.push_str(&format!("packing_sha256 = {}\n", sha256_hex(&bytes)));
    }
    m.push_str("\n[outputs]\n");
    for (name, bytes) in files {
        m.push_str(&format!("{} {}\n", sha256_hex(bytes), name));
    }
    m.push_str("\n[scenario]\n");
    m.push_str(&scenario);
    Ok(m.into_bytes())
}

/// Run the scenario's experiment and write its artifacts.
pub fn run_experiment(s: &Scenario) -> Result<RunOutcome> {
    let mut out = Artifacts { files: Vec::new() };
    match s.experiment {
        Experiment::Analytic => out.add("analytic.csv", analytic_table(s)?),
        Experiment::BruteForce => out.add("brute_force.csv", brute_force_table(s)?),
        Experiment::Sweep => deployment_tables(s, &mut out, &s.sweep_methods, "sweep.csv")?,
        e => {
            let method = e.method().expect("deployment experiment");
            deployment_tables(s, &mut out, &[method], "summary.csv")?;
        }
    }
    let manifest = manifest(s, &out.files)?;
    out.add("manifest.txt", manifest);
    for (name, bytes) in &out.files {
        write_atomic(&s.out_dir.join(name), bytes)?;
    }
    Ok(RunOutcome {
        out_dir: s.out_dir.clone(),
        files: out.files.into_iter().map(|(n, _)| n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str, dir: &std::path::Path) -> Scenario {
        let mut s = Scenario::parse(text, "t").unwrap();
        s.out_dir = dir.to_path_buf();
        s
    }

    #[test]
    fn analytic_rows_match_closed_forms() {
        let dir = tempfile::tempdir().unwrap();
        let s = scenario("experiment = analytic\nregion_m = 1\n", dir.path());
        let outcome = run_experiment(&s).unwrap();
        assert_eq!(outcome.files, vec!["analytic.csv", "manifest.txt"]);
        let text = std::fs::read_to_string(dir.path().join("analytic.csv")).unwrap();
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        let c: f64 = first[3].parse().unwrap();
        assert_eq!(c, solve_common_height_closed(1, 1.0, 1.0).unwrap().c_factor);
        let ratio: f64 = first[10].parse().unwrap();
        assert!((ratio - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let text = "experiment = lloyd-b\nregion_m = 1\nn_uavs = 3\nh_min_m = 0.05\ngrid = 32\nrestarts = 2\nseed = 5\n";
        let sa = scenario(text, a.path());
        let sb = scenario(text, b.path());
        let files = run_experiment(&sa).unwrap().files;
        run_experiment(&sb).unwrap();
        for name in files.iter().filter(|n| *n != "manifest.txt") {
            assert_eq!(
                std::fs::read(a.path().join(name)).unwrap(),
                std::fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn msbd_summary_reports_partial_coverage() {
        let dir = tempfile::tempdir().unwrap();
        let s = scenario(
            "experiment = msbd\nregion_m = 1\nn_uavs = 1\nh_min_m = 0.05\ngrid = 128\n",
            dir.path(),
        );
        run_experiment(&s).unwrap();
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let coverage: f64 = row[13].parse().unwrap();
        assert!((coverage - std::f64::consts::FRAC_PI_4).abs() < 5e-3);
        let h: f64 = row[9].parse().unwrap();
        assert!((h - 0.5 / 3f64.sqrt()).abs() < 1e-12);
    }
}

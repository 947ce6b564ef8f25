//! Optimal common heights over congruent hexagonal cells.
//!
//! A regular hexagon of area `H` centred at the origin splits into twelve
//! right triangles `{0 ≤ φ ≤ π/6, 0 ≤ ρ ≤ r / cos φ}` with inradius
//! `r = sqrt(H / (2√3))`. All hexagon integrals below are twelve times the
//! corresponding triangle integral.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::power::{directivity, PowerMode};
use crate::quadrature::GaussLegendre;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const OUTER_NODES: usize = 64;
const INNER_NODES: usize = 16;

/// Polar moments `∫_Δ ‖ω‖^ε dω` of the fundamental triangle, `ε = 0, 2, 4, 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexMoments {
    pub area: f64,
    pub m0: f64,
    pub m2: f64,
    pub m4: f64,
    pub m6: f64,
}

impl HexMoments {
    /// `m_{2j}` for `j = 0..=3`.
    pub fn even(&self, j: usize) -> f64 {
        [self.m0, self.m2, self.m4, self.m6][j]
    }
}

fn check_area(area: f64) -> Result<()> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::domain(format!("hexagon area must be positive, got {area}")));
    }
    Ok(())
}

pub fn hex_moments(area: f64) -> Result<HexMoments> {
    check_area(area)?;
    let h = area;
    Ok(HexMoments {
        area,
        m0: h / 12.0,
        m2: 5.0 * h * h / (216.0 * SQRT3),
        m4: 7.0 * h.powi(3) / 2430.0,
        m6: 83.0 * h.powi(4) / (72.0 * 35.0 * 27.0 * SQRT3),
    })
}

pub fn inradius(area: f64) -> f64 {
    (area / (2.0 * SQRT3)).sqrt()
}

pub fn circumradius(area: f64) -> f64 {
    2.0 * inradius(area) / SQRT3
}

/// `∫_Δ ‖ω‖^ε dω` by two-dimensional Gauss-Legendre quadrature.
pub fn triangle_moment(eps: f64, area: f64) -> Result<f64> {
    check_area(area)?;
    let r = inradius(area);
    let outer = GaussLegendre::new(OUTER_NODES);
    let inner = GaussLegendre::new(INNER_NODES);
    Ok(outer.integrate(0.0, PI / 6.0, |phi| {
        inner.integrate(0.0, r / phi.cos(), |rho| rho.powf(eps) * rho)
    }))
}

/// `∫_Δ F(ρ_max(φ)) dφ` where `F` is a closed-form radial antiderivative.
fn triangle_radial(area: f64, radial: impl Fn(f64) -> f64) -> f64 {
    let r = inradius(area);
    GaussLegendre::new(OUTER_NODES).integrate(0.0, PI / 6.0, |phi| radial(r / phi.cos()))
}

/// Hexagon integral of `(‖ω‖² + z)^e`.
fn hex_shifted_power(area: f64, z: f64, e: f64) -> f64 {
    // ∫_0^ρ t (t² + z)^e dt = ((ρ² + z)^{e+1} − z^{e+1}) / (2(e+1))
    let base = z.powf(e + 1.0);
    12.0 * triangle_radial(area, |rho| ((rho * rho + z).powf(e + 1.0) - base) / (2.0 * (e + 1.0)))
}

/// Height condition `g_γ(z)` over a hexagon of area `H`.
pub fn height_condition(gamma: f64, kappa: f64, area: f64, z: f64) -> f64 {
    2.0 * gamma / kappa * z * hex_shifted_power(area, z, gamma - 1.0) - hex_shifted_power(area, z, gamma)
}

/// Normalized average power of one UAV at height `h` above the centre of its
/// hexagonal cell, averaged over the cell.
pub fn hex_cell_power(gamma: f64, kappa: f64, area: f64, h: f64) -> f64 {
    hex_shifted_power(area, h * h, gamma) / (area * h.powf(kappa))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonHeightSolution {
    pub gamma: f64,
    pub kappa: f64,
    pub area: f64,
    /// Squared optimal height.
    pub z: f64,
    pub h_star: f64,
    /// `h_star / sqrt(area)`.
    pub c_factor: f64,
    /// Normalized optimal average power at `h_star`.
    pub p_bar_star: f64,
}

impl CommonHeightSolution {
    fn from_z(gamma: f64, kappa: f64, area: f64, z: f64) -> Self {
        let h_star = z.sqrt();
        Self {
            gamma,
            kappa,
            area,
            z,
            h_star,
            c_factor: h_star / area.sqrt(),
            p_bar_star: hex_cell_power(gamma, kappa, area, h_star),
        }
    }
}

fn check_range(gamma: f64, kappa: f64) -> Result<()> {
    if !(kappa >= 1.0 && kappa <= 2.0 * gamma - 1.0) {
        return Err(Error::domain(format!(
            "kappa = {kappa} outside [1, {}] for gamma = {gamma}",
            2.0 * gamma - 1.0
        )));
    }
    Ok(())
}

fn integer_gamma(gamma: u32) -> Result<()> {
    if !(1..=3).contains(&gamma) {
        return Err(Error::domain(format!("closed forms exist for gamma in 1..=3, got {gamma}")));
    }
    Ok(())
}

fn cbrt_real(x: f64) -> f64 {
    x.cbrt()
}

/// Coefficients `[a3, a2, a1, a0]` of the cubic height condition for `γ = 3`.
fn cubic_coefficients(kappa: f64, m: &HexMoments) -> [f64; 4] {
    [
        (6.0 / kappa - 1.0) * m.m0,
        (12.0 / kappa - 3.0) * m.m2,
        (6.0 / kappa - 3.0) * m.m4,
        -m.m6,
    ]
}

/// Depressed-cubic `(p, q)` with the substitution `z = t − a2 / (3 a3)`.
fn depressed(coef: [f64; 4]) -> (f64, f64, f64) {
    let [a3, a2, a1, a0] = coef;
    let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    (p, q, b / 3.0)
}

/// `q²/4 + p³/27` of the `γ = 3` cubic on a unit-area hexagon; positive
/// means exactly one real root.
pub fn cubic_discriminant(kappa: f64) -> f64 {
    let m = hex_moments(1.0).expect("unit area");
    let (p, q, _) = depressed(cubic_coefficients(kappa, &m));
    q * q / 4.0 + p.powi(3) / 27.0
}

/// Optimal common height from the polynomial height condition.
pub fn solve_common_height_closed(gamma: u32, kappa: f64, area: f64) -> Result<CommonHeightSolution> {
    integer_gamma(gamma)?;
    let g = gamma as f64;
    check_range(g, kappa)?;
    let m = hex_moments(area)?;
    let z = match gamma {
        1 => kappa / (2.0 - kappa) * m.m2 / m.m0,
        2 => {
            let a = (4.0 - kappa) / kappa * m.m0;
            let b = (4.0 - 2.0 * kappa) / kappa * m.m2;
            let c = -m.m4;
            (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
        }
        _ => {
            let (p, q, shift) = depressed(cubic_coefficients(kappa, &m));
            let disc = q * q / 4.0 + p.powi(3) / 27.0;
            if !(disc > 0.0) {
                return Err(Error::domain(format!("cubic discriminant {disc} is not positive")));
            }
            let s = disc.sqrt();
            cbrt_real(-q / 2.0 + s) + cbrt_real(-q / 2.0 - s) - shift
        }
    };
    Ok(CommonHeightSolution::from_z(g, kappa, area, z))
}

/// Scaling factor `c(γ, κ)` as printed with the auxiliary `u(κ)`, `v(κ)`.
pub fn printed_scaling_factor(gamma: u32, kappa: f64) -> Result<f64> {
    integer_gamma(gamma)?;
    check_range(gamma as f64, kappa)?;
    let k = kappa;
    let lead = 5.0 / (18.0 * SQRT3);
    let c2 = match gamma {
        1 => lead,
        2 => lead * (((172.0 - 43.0 * k) * k / 125.0 + 4.0).sqrt() - (2.0 - k)) / (4.0 - k),
        _ => {
            let u = (143360.0 - 16728.0 * k - 444.0 * k * k + 37.0 * k.powi(3)) / 4375.0;
            let v = 12.0 * (6.0 - k) / 4375.0
                * (3.0f64 / 5.0).sqrt()
                * (6607552.0 + 659680.0 * k + 103387.0 * k * k - 108408.0 * k.powi(3) + 9034.0 * k.powi(4)).sqrt();
            lead * (cbrt_real(u - v) + cbrt_real(u + v) - (4.0 - k)) / (6.0 - k)
        }
    };
    Ok(c2.sqrt())
}

/// Root of the height condition by bracketing and bisection, for real `γ`.
pub fn solve_common_height_numeric(gamma: f64, kappa: f64, area: f64, tol: f64) -> Result<CommonHeightSolution> {
    check_area(area)?;
    if !(kappa > 0.0 && 2.0 * gamma / kappa > 1.0) {
        return Err(Error::domain(format!("need 2γ/κ > 1, got γ = {gamma}, κ = {kappa}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let g = |z: f64| height_condition(gamma, kappa, area, z);
    let limit = 1e12 * area;
    let mut lo = 0.0;
    let mut hi = area;
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(Error::BracketNotFound { limit });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol * hi {
            break;
        }
    }
    Ok(CommonHeightSolution::from_z(gamma, kappa, area, 0.5 * (lo + hi)))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Optimal average power at the closed-form height, from the exact moment
/// expansion `(12/H) Σ_j C(γ,j) z^{γ−j} m_{2j} / h^κ`. Physical mode divides
/// by the directivity (unit link constant).
pub fn optimal_average_power(gamma: u32, kappa: f64, area: f64, mode: PowerMode) -> Result<f64> {
    let sol = solve_common_height_closed(gamma, kappa, area)?;
    let m = hex_moments(area)?;
    let sum: f64 = (0..=gamma)
        .map(|j| binomial(gamma, j) * sol.z.powi((gamma - j) as i32) * m.even(j as usize))
        .sum();
    let p = 12.0 / area * sum / sol.h_star.powf(kappa);
    Ok(match mode {
        PowerMode::Normalized => p,
        PowerMode::Physical => p / directivity(kappa)?,
    })
}

/// Optimal average power as printed in the closed-form statement, evaluated
/// at the closed-form `c(γ, κ)`. These expressions carry a single power of
/// the height in the denominator and the `γ = 1` form uses a different
/// prefactor, so they are reported next to [`optimal_average_power`] rather
/// than used for computation.
pub fn printed_average_power(gamma: u32, kappa: f64, area: f64, mode: PowerMode) -> Result<f64> {
    let c = solve_common_height_closed(gamma, kappa, area)?.c_factor;
    let (poly, expo) = match gamma {
        1 => ((2.0 / (9.0 * SQRT3)).sqrt(), 0.5),
        2 => (14.0 / (405.0 * c) + 5.0 * c / (9.0 * SQRT3) + c.powi(3), 1.5),
        _ => (
            83.0 / (195.0 * 27.0 * c) + 14.0 * c / 135.0 + 5.0 * c.powi(3) / (9.0 * SQRT3) + c.powi(5),
            2.5,
        ),
    };
    let p = poly * area.powf(expo);
    Ok(match mode {
        PowerMode::Normalized => p,
        PowerMode::Physical => p / directivity(kappa)?,
    })
}

/// `sqrt(10 H / (9√3))`: the normalized `γ = 1` optimum derived from the moments.
pub fn gamma1_power_from_moments(area: f64) -> f64 {
    (10.0 * area / (9.0 * SQRT3)).sqrt()
}

/// Height minimizing the single-cell hexagon power over `samples` evenly
/// spaced heights on `(0, 2R]`. Ties resolve to the lowest height.
pub fn brute_force_height(area: f64, kappa: f64, alpha: f64, samples: usize) -> Result<f64> {
    check_area(area)?;
    if samples < 2 {
        return Err(Error::domain("need at least two height samples"));
    }
    if !(alpha >= 1.0 && kappa >= 0.0) {
        return Err(Error::domain("need alpha >= 1 and kappa >= 0"));
    }
    let gamma = (alpha + kappa) / 2.0;
    let top = 2.0 * circumradius(area);
    let step = top / samples as f64;
    let powers: Vec<f64> = (1..=samples)
        .into_par_iter()
        .map(|i| hex_cell_power(gamma, kappa, area, i as f64 * step))
        .collect();
    let best = powers
        .iter()
        .enumerate()
        .fold(0, |b, (i, &p)| if p < powers[b] { i } else { b });
    Ok((best + 1) as f64 * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn moments_match_quadrature() {
        for area in [1.0, 100.0, 1e4] {
            let m = hex_moments(area).unwrap();
            for (j, eps) in [0.0, 2.0, 4.0, 6.0].into_iter().enumerate() {
                let q = triangle_moment(eps, area).unwrap();
                assert!(rel(q, m.even(j)) < 1e-12, "H={area} eps={eps}: {q} vs {}", m.even(j));
            }
        }
    }

    #[test]
    fn m0_of_area_twelve_is_one() {
        assert_eq!(hex_moments(12.0).unwrap().m0, 1.0);
        assert!(hex_moments(0.0).is_err());
    }

    #[test]
    fn gamma_one_closed_form() {
        let s = solve_common_height_closed(1, 1.0, 1.0).unwrap();
        let c1 = (5.0 / (18.0 * SQRT3)).sqrt();
        assert!(rel(s.c_factor, c1) < 1e-14);
        assert!((s.c_factor - 0.400_468_569).abs() < 1e-9);
    }

    #[test]
    fn gamma_two_kappa_two() {
        // linear term vanishes: z² = m4 / m0 · κ/(4−κ) on H=1
        let s = solve_common_height_closed(2, 2.0, 1.0).unwrap();
        let z = (14.0f64 / 405.0).sqrt();
        assert!(rel(s.z, z) < 1e-14);
        assert!((s.h_star - 0.431_189_575_872).abs() < 1e-11);
    }

    #[test]
    fn closed_and_numeric_agree() {
        for gamma in 1..=3u32 {
            for k in 1..=(2 * gamma - 1) {
                let kappa = k as f64;
                let c = solve_common_height_closed(gamma, kappa, 1.0).unwrap();
                let n = solve_common_height_numeric(gamma as f64, kappa, 1.0, 1e-15).unwrap();
                assert!(rel(n.c_factor, c.c_factor) < 1e-10, "γ={gamma} κ={kappa}");
                assert!(height_condition(gamma as f64, kappa, 1.0, c.z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn printed_scaling_factors_match() {
        for gamma in 1..=3u32 {
            for k in 1..=(2 * gamma - 1) {
                let kappa = k as f64;
                let c = solve_common_height_closed(gamma, kappa, 1.0).unwrap().c_factor;
                let p = printed_scaling_factor(gamma, kappa).unwrap();
                assert!(rel(p, c) < 1e-10, "γ={gamma} κ={kappa}: {p} vs {c}");
            }
        }
    }

    #[test]
    fn kappa_out_of_range() {
        assert!(solve_common_height_closed(2, 4.0, 1.0).is_err());
        assert!(solve_common_height_closed(1, 0.5, 1.0).is_err());
        assert!(solve_common_height_closed(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn fractional_gamma_root() {
        let s = solve_common_height_numeric(1.5, 1.0, 1.0, 1e-14).unwrap();
        assert!(height_condition(1.5, 1.0, 1.0, s.z * 0.99) < 0.0);
        assert!(height_condition(1.5, 1.0, 1.0, s.z * 1.01) > 0.0);
    }

    #[test]
    fn gamma_one_power() {
        let p = optimal_average_power(1, 1.0, 1.0, PowerMode::Normalized).unwrap();
        assert!(rel(p, gamma1_power_from_moments(1.0)) < 1e-14);
        assert!((p - 0.800_937).abs() < 1e-6);
        let phys = optimal_average_power(1, 1.0, 1.0, PowerMode::Physical).unwrap();
        assert!(rel(phys * 4.0, p) < 1e-14);
    }

    #[test]
    fn moment_power_matches_radial_quadrature() {
        for (gamma, kappa) in [(1u32, 1.0), (2, 1.0), (2, 3.0), (3, 2.0), (3, 5.0)] {
            let s = solve_common_height_closed(gamma, kappa, 7.0).unwrap();
            let p = optimal_average_power(gamma, kappa, 7.0, PowerMode::Normalized).unwrap();
            assert!(rel(p, s.p_bar_star) < 1e-12);
        }
    }

    #[test]
    fn printed_gamma_two_power_is_exact_for_kappa_one() {
        let a = optimal_average_power(2, 1.0, 3.0, PowerMode::Normalized).unwrap();
        let b = printed_average_power(2, 1.0, 3.0, PowerMode::Normalized).unwrap();
        assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn brute_force_close_to_closed_form() {
        let h = brute_force_height(1.0, 1.0, 1.0, 5000).unwrap();
        let c = solve_common_height_closed(1, 1.0, 1.0).unwrap().h_star;
        assert!(rel(h, c) < 0.02);
        let h = brute_force_height(1.0, 1.0, 3.0, 5000).unwrap();
        let c = solve_common_height_closed(2, 1.0, 1.0).unwrap().h_star;
        assert!(rel(h, c) < 0.02);
    }

    #[test]
    fn discriminant_positive_on_kappa_range() {
        for i in 0..=400 {
            let k = 1.0 + 4.0 * i as f64 / 400.0;
            assert!(cubic_discriminant(k) > 0.0, "κ={k}");
        }
    }
}

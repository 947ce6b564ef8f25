//! Closed-form link quantities: antenna directivity and beamwidth, the combined
//! link constant, the required user transmit power and the regularized
//! line-of-sight attenuation.

use std::f64::consts::{LN_10, PI};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Whether powers carry the physical prefactor `1 / (β0 · D0(κ))`.
///
/// Deployments are invariant under positive scaling of the objective, so the
/// optimizers run in normalized mode. Physical mode is required whenever
/// powers for different antenna exponents are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    #[default]
    Normalized,
    Physical,
}

/// Exponents and constants of the user-to-UAV power model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams {
    alpha: f64,
    kappa: f64,
    beta0: f64,
    h_min: f64,
    mode: PowerMode,
}

impl PowerParams {
    pub fn new(alpha: f64, kappa: f64, beta0: f64, h_min: f64) -> Result<Self> {
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("path-loss exponent must be >= 1, got {alpha}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::domain(format!("antenna exponent must be >= 0, got {kappa}")));
        }
        if !(beta0 > 0.0) || !beta0.is_finite() {
            return Err(Error::domain(format!("link constant must be positive, got {beta0}")));
        }
        if !(h_min > 0.0) || !h_min.is_finite() {
            return Err(Error::domain(format!("minimum height must be positive, got {h_min}")));
        }
        Ok(Self {
            alpha,
            kappa,
            beta0,
            h_min,
            mode: PowerMode::Normalized,
        })
    }

    /// Normalized-mode parameters with `β0 = 1`.
    pub fn normalized(alpha: f64, kappa: f64, h_min: f64) -> Result<Self> {
        Self::new(alpha, kappa, 1.0, h_min)
    }

    pub fn with_mode(mut self, mode: PowerMode) -> Self {
        self.mode = mode;
        self
    }

    /// Same link, different antenna exponent.
    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Ok(Self::new(self.alpha, kappa, self.beta0, self.h_min)?.with_mode(self.mode))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn mode(&self) -> PowerMode {
        self.mode
    }

    /// Combined exponent `(α + κ) / 2`.
    pub fn gamma(&self) -> f64 {
        (self.alpha + self.kappa) / 2.0
    }

    /// Precondition under which dominance boundaries are circles or lines.
    pub fn is_directional(&self) -> bool {
        self.kappa >= 1.0 && self.gamma() >= (1.0 + self.kappa) / 2.0
    }

    /// Multiplier applied to `(d² + h²)^γ / h^κ`.
    pub fn scale(&self) -> f64 {
        match self.mode {
            PowerMode::Normalized => 1.0,
            PowerMode::Physical => {
                1.0 / (self.beta0 * directivity(self.kappa).expect("kappa validated"))
            }
        }
    }
}

/// Link-budget inputs that fold into the constant `β0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub bandwidth_hz: f64,
    pub bitrate_bps: f64,
    pub noise_power_w: f64,
    pub antenna_const: f64,
    pub tx_gain: f64,
    pub ref_distance_m: f64,
    pub shadow_sigma_db: f64,
}

impl LinkBudget {
    /// Minimum received power for the target bitrate (Shannon bound).
    pub fn min_rx_power(&self) -> Result<f64> {
        let spectral = self.bitrate_bps / self.bandwidth_hz;
        let p0 = (spectral.exp2() - 1.0) * self.noise_power_w;
        if !p0.is_finite() {
            return Err(Error::domain(format!(
                "bitrate/bandwidth = {spectral} overflows the required power"
            )));
        }
        Ok(p0)
    }

    /// Mean linear power of log-normal shadowing with the given dB spread.
    pub fn shadowing_gain(&self) -> f64 {
        (self.shadow_sigma_db * self.shadow_sigma_db * LN_10 * LN_10 / 200.0).exp()
    }
}

/// Parameters of the sigmoid line-of-sight probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosParams {
    /// Midpoint elevation in degrees, `0 < a < 90`.
    pub a: f64,
    /// Steepness, `b > 0`.
    pub b: f64,
    /// Extra NLoS attenuation in `(0, 1]`.
    pub beta_nlos: f64,
}

/// Peak gain over an isotropic radiator, `4π / Ω_A(κ)`.
///
/// The cosine pattern without back lobe has `Ω_A = 2π / (κ + 1)`. The
/// isotropic case `κ = 0` radiates into the full sphere and has directivity 1.
pub fn directivity(kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) {
        return Err(Error::domain(format!("antenna exponent must be >= 0, got {kappa}")));
    }
    if kappa == 0.0 {
        Ok(1.0)
    } else {
        Ok(2.0 * (kappa + 1.0))
    }
}

/// Half-power beamwidth of the `cos^κ` pattern in degrees.
pub fn hpbw_degrees(kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) {
        return Err(Error::domain(format!(
            "beamwidth is defined for antenna exponent >= 1, got {kappa}"
        )));
    }
    let half = (-1.0 / kappa).exp2().acos();
    // round off the last-ulp error of acos so that exact angles stay exact
    Ok((2.0 * half.to_degrees() * 1e12).round() / 1e12)
}

/// Combined link constant `β0(α) = K·Gtx·d0^α·σψ² / P0`.
pub fn link_beta0(budget: &LinkBudget, alpha: f64) -> Result<f64> {
    let b = budget;
    let positive = [
        ("bandwidth", b.bandwidth_hz),
        ("bitrate", b.bitrate_bps),
        ("noise power", b.noise_power_w),
        ("antenna constant", b.antenna_const),
        ("transmit gain", b.tx_gain),
        ("reference distance", b.ref_distance_m),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !(b.shadow_sigma_db >= 0.0) {
        return Err(Error::domain("shadowing spread must be nonnegative"));
    }
    let p0 = b.min_rx_power()?;
    let beta0 = b.antenna_const * b.tx_gain * b.ref_distance_m.powf(alpha) * b.shadowing_gain() / p0;
    if !beta0.is_finite() {
        return Err(Error::domain("link constant overflows"));
    }
    Ok(beta0)
}

/// Transmit power a user at `user` needs to reach the UAV above `uav_ground`
/// at height `h`.
pub fn tx_power(user: Point, uav_ground: Point, h: f64, params: &PowerParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("UAV height must be positive, got {h}")));
    }
    let s = user.dist_sq(uav_ground) + h * h;
    Ok(params.scale() * s.powf(params.gamma()) / h.powf(params.kappa()))
}

/// Probability-weighted LoS/NLoS attenuation at the given elevation (radians).
pub fn regularized_los(elevation_rad: f64, p: &LosParams) -> Result<f64> {
    if !(0.0..=PI / 2.0).contains(&elevation_rad) {
        return Err(Error::domain(format!(
            "elevation must lie in [0, π/2], got {elevation_rad}"
        )));
    }
    if !(p.a > 0.0 && p.a < 90.0) || !(p.b > 0.0) || !(p.beta_nlos > 0.0 && p.beta_nlos <= 1.0) {
        return Err(Error::domain("LoS parameters out of range"));
    }
    let e = p.a * (-p.b * (elevation_rad.to_degrees() - p.a)).exp();
    Ok((1.0 + p.beta_nlos * e) / (1.0 + e))
}

/// `s^e` with cheap paths for integer and half-integer exponents, which cover
/// every integer pair `(α, κ)`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Exponent {
    Int(i32),
    Half(i32),
    Real(f64),
}

impl Exponent {
    pub(crate) fn new(e: f64) -> Self {
        let twice = 2.0 * e;
        if e == e.round() && e.abs() < 64.0 {
            Exponent::Int(e as i32)
        } else if twice == twice.round() && e.abs() < 64.0 {
            Exponent::Half((e - 0.5).round() as i32)
        } else {
            Exponent::Real(e)
        }
    }

    #[inline]
    pub(crate) fn pow(self, s: f64) -> f64 {
        match self {
            Exponent::Int(k) => s.powi(k),
            Exponent::Half(k) => s.powi(k) * s.sqrt(),
            Exponent::Real(e) => s.powf(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_budget() -> LinkBudget {
        LinkBudget {
            bandwidth_hz: 1.0e6,
            bitrate_bps: 1.0e6,
            noise_power_w: 1.0,
            antenna_const: 1.0,
            tx_gain: 1.0,
            ref_distance_m: 1.0,
            shadow_sigma_db: 0.0,
        }
    }

    #[test]
    fn directivity_values() {
        assert_eq!(directivity(0.0).unwrap(), 1.0);
        assert_eq!(directivity(1.0).unwrap(), 4.0);
        assert_eq!(directivity(2.0).unwrap(), 6.0);
        assert!(directivity(-0.5).is_err());
    }

    #[test]
    fn hpbw_values() {
        assert_eq!(hpbw_degrees(1.0).unwrap(), 120.0);
        assert_eq!(hpbw_degrees(2.0).unwrap(), 90.0);
        assert!(hpbw_degrees(1.0e6).unwrap() < 0.2);
        assert!(hpbw_degrees(0.5).is_err());
    }

    #[test]
    fn beta0_trivial_budgets() {
        assert!((link_beta0(&unit_budget(), 2.0).unwrap() - 1.0).abs() < 1e-15);
        let far = LinkBudget {
            ref_distance_m: 2.0,
            ..unit_budget()
        };
        assert!((link_beta0(&far, 2.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn beta0_shadowing_matches_lognormal_expectation() {
        // E[10^(ψ/10)] for ψ ~ N(0, 10²), by trapezoid quadrature over ±12σ.
        let sigma: f64 = 10.0;
        let n = 200_000;
        let lo = -12.0 * sigma;
        let step = 24.0 * sigma / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let psi = lo + i as f64 * step;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let pdf = (-psi * psi / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma);
            acc += w * 10f64.powf(psi / 10.0) * pdf;
        }
        let oracle = acc * step;
        let budget = LinkBudget {
            shadow_sigma_db: sigma,
            ..unit_budget()
        };
        let beta0 = link_beta0(&budget, 2.0).unwrap();
        assert!((beta0 - oracle).abs() / oracle < 1e-9, "{beta0} vs {oracle}");
        assert!((beta0 - 14.167_6).abs() < 1e-3);
    }

    #[test]
    fn beta0_overflow_is_domain_error() {
        let b = LinkBudget {
            bitrate_bps: 1.0e12,
            bandwidth_hz: 1.0,
            ..unit_budget()
        };
        assert!(matches!(link_beta0(&b, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tx_power_examples() {
        let p = PowerParams::normalized(2.0, 1.0, 0.1).unwrap();
        let o = Point::new(0.0, 0.0);
        assert!((tx_power(o, o, 2.0, &p).unwrap() - 4.0).abs() < 1e-12);

        let p = PowerParams::normalized(2.0, 2.0, 0.1).unwrap();
        assert!((tx_power(Point::new(1.0, 0.0), o, 1.0, &p).unwrap() - 4.0).abs() < 1e-12);

        let p = PowerParams::normalized(1.0, 1.0, 0.1).unwrap();
        assert!((tx_power(Point::new(3.0, 4.0), o, 1.0, &p).unwrap() - 26.0).abs() < 1e-12);

        assert!(tx_power(o, o, 0.0, &p).is_err());
    }

    #[test]
    fn physical_mode_divides_by_directivity() {
        let p = PowerParams::new(2.0, 1.0, 2.0, 0.1)
            .unwrap()
            .with_mode(PowerMode::Physical);
        let o = Point::new(0.0, 0.0);
        // h^α / (β0 · D0) = 4 / 8
        assert!((tx_power(o, o, 2.0, &p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn los_examples() {
        let p = LosParams {
            a: 10.0,
            b: 0.1,
            beta_nlos: 0.1,
        };
        let v = regularized_los(10f64.to_radians(), &p).unwrap();
        assert!((v - 2.0 / 11.0).abs() < 1e-12);

        let flat = LosParams { beta_nlos: 1.0, ..p };
        for deg in [0.0, 15.0, 45.0, 90.0] {
            assert!((regularized_los(f64::to_radians(deg), &flat).unwrap() - 1.0).abs() < 1e-15);
        }

        let steep = LosParams { b: 5.0, ..p };
        assert!((regularized_los(PI / 2.0, &steep).unwrap() - 1.0).abs() < 1e-12);
        assert!(regularized_los(-0.1, &p).is_err());
    }

    #[test]
    fn exponent_fast_paths_agree_with_powf() {
        for e in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.75, 1.3] {
            let ex = Exponent::new(e);
            for s in [0.01, 0.7, 3.0, 1234.5] {
                let want = f64::powf(s, e);
                assert!((ex.pow(s) - want).abs() <= 1e-13 * want.abs().max(1.0), "{e} {s}");
            }
        }
    }
}

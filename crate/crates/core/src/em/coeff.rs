//! Fresnel and finite-slab reflection coefficients, and reflection loss in dB.

use std::f64::consts::{FRAC_PI_2, LN_10, PI};

use num_complex::Complex64;

use super::material::{relative_permittivity, ComplexPermittivity, MaterialParams};
use super::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Roughness coefficient obtained by least squares against the 100 GHz wood and
/// plaster reference reflection-loss curves (see [`fit_roughness_kappa`]).
pub const FITTED_KAPPA: f64 = 7.087;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarization {
    Te,
    Tm,
    /// Average of TE and TM power.
    #[default]
    Unpolarized,
}

/// Paired TE/TM complex amplitude reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexReflection {
    pub te: Complex64,
    pub tm: Complex64,
}

impl ComplexReflection {
    pub const ZERO: Self = Self { te: Complex64::new(0.0, 0.0), tm: Complex64::new(0.0, 0.0) };

    /// Reflected power fraction for the given polarization.
    pub fn power(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::Te => self.te.norm_sqr(),
            Polarization::Tm => self.tm.norm_sqr(),
            Polarization::Unpolarized => 0.5 * (self.te.norm_sqr() + self.tm.norm_sqr()),
        }
    }

    /// Coefficient magnitude in dB (`10·log10` of the power, i.e. `20·log10|r|`).
    /// Zero reflection maps to `-inf`.
    pub fn db(&self, pol: Polarization) -> f64 {
        10.0 * self.power(pol).log10()
    }

    pub fn te_db(&self) -> f64 {
        self.db(Polarization::Te)
    }

    pub fn tm_db(&self) -> f64 {
        self.db(Polarization::Tm)
    }
}

fn check_angle(theta_i: f64) -> Result<()> {
    if !(theta_i.is_finite() && (0.0..FRAC_PI_2).contains(&theta_i)) {
        return Err(Error::invalid(format!("incident angle must be in [0, pi/2) rad, got {theta_i}")));
    }
    Ok(())
}

/// `√(η − sin²θ)` on the principal branch (non-negative real part).
fn transverse_root(eta: Complex64, theta_i: f64) -> Complex64 {
    let s = (eta - theta_i.sin().powi(2)).sqrt();
    if s.re < 0.0 {
        -s
    } else {
        s
    }
}

/// Reflection off a half-space (slab thick enough that internal echoes vanish).
pub fn fresnel_thick(eta: ComplexPermittivity, theta_i: f64) -> Result<ComplexReflection> {
    check_angle(theta_i)?;
    let eta = eta.to_complex();
    let cos = theta_i.cos();
    let s = transverse_root(eta, theta_i);
    let te = (cos - s) / (cos + s);
    let tm = (eta * cos - s) / (eta * cos + s);
    Ok(ComplexReflection { te, tm })
}

/// Reflection off a slab of thickness `h_m` including all internal multiple reflections.
pub fn slab_coefficient(eta: ComplexPermittivity, theta_i: f64, h_m: f64, f_ghz: f64) -> Result<ComplexReflection> {
    check_angle(theta_i)?;
    if !(h_m.is_finite() && h_m >= 0.0) {
        return Err(Error::invalid(format!("thickness must be >= 0 m, got {h_m}")));
    }
    if !(f_ghz.is_finite() && f_ghz > 0.0) {
        return Err(Error::invalid(format!("frequency must be > 0 GHz, got {f_ghz}")));
    }
    if h_m == 0.0 {
        return Ok(ComplexReflection::ZERO);
    }
    let thick = fresnel_thick(eta, theta_i)?;
    let q = slab_phase(eta, theta_i, h_m, f_ghz);
    // exp(-j2q); Im(q) < 0 for lossy media so this decays with thickness.
    let echo = (Complex64::new(0.0, -2.0) * q).exp();
    let one = Complex64::new(1.0, 0.0);
    let combine = |r: Complex64| r * (one - echo) / (one - r * r * echo);
    Ok(ComplexReflection { te: combine(thick.te), tm: combine(thick.tm) })
}

/// Electrical thickness `q = 2π·h·f/c₀ · √(η − sin²θ)` with `f` converted to Hz.
pub fn slab_phase(eta: ComplexPermittivity, theta_i: f64, h_m: f64, f_ghz: f64) -> Complex64 {
    let k0 = 2.0 * PI * f_ghz * 1e9 / SPEED_OF_LIGHT;
    transverse_root(eta.to_complex(), theta_i) * (k0 * h_m)
}

/// Thickness over which the internal echo power decays by a factor `e`.
pub fn echo_decay_length(eta: ComplexPermittivity, theta_i: f64, f_ghz: f64) -> f64 {
    let k0 = 2.0 * PI * f_ghz * 1e9 / SPEED_OF_LIGHT;
    let s = transverse_root(eta.to_complex(), theta_i);
    1.0 / (2.0 * k0 * s.im.abs())
}

/// Specular attenuation factor `exp(−κ·(σ·cosθ/λ)²)` for a rough surface.
pub fn roughness_factor(sigma_m: f64, theta_i: f64, f_ghz: f64, kappa: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / (f_ghz * 1e9);
    (-kappa * (sigma_m * theta_i.cos() / wavelength).powi(2)).exp()
}

/// Reflection loss (positive dB) of a thick surface, unpolarized.
pub fn reflection_loss(mat: &MaterialParams, f_ghz: f64, theta_i: f64, kappa: f64) -> Result<f64> {
    reflection_loss_polarized(mat, f_ghz, theta_i, kappa, Polarization::Unpolarized)
}

pub fn reflection_loss_polarized(
    mat: &MaterialParams,
    f_ghz: f64,
    theta_i: f64,
    kappa: f64,
    pol: Polarization,
) -> Result<f64> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::invalid(format!("roughness kappa must be >= 0, got {kappa}")));
    }
    let eta = relative_permittivity(mat, f_ghz)?;
    let r = fresnel_thick(eta, theta_i)?;
    let smooth = -10.0 * r.power(pol).log10();
    let rho = roughness_factor(mat.roughness_sigma, theta_i, f_ghz, kappa);
    Ok((smooth - 20.0 * rho.log10()).max(0.0))
}

/// One observed reflection loss used for fitting the roughness coefficient.
#[derive(Debug, Clone)]
pub struct RlObservation {
    pub material: MaterialParams,
    pub f_ghz: f64,
    pub theta_i: f64,
    pub rl_db: f64,
}

/// Least-squares roughness coefficient for a set of observed reflection losses.
///
/// The roughness term adds `κ·(20/ln10)·(σcosθ/λ)²` dB to the smooth-surface loss,
/// so the fit is linear in `κ` and solved in closed form. The result is clamped at 0.
pub fn fit_roughness_kappa(observations: &[RlObservation]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for obs in observations {
        let smooth = reflection_loss(&obs.material, obs.f_ghz, obs.theta_i, 0.0)?;
        let wavelength = SPEED_OF_LIGHT / (obs.f_ghz * 1e9);
        let g = 20.0 / LN_10 * (obs.material.roughness_sigma * obs.theta_i.cos() / wavelength).powi(2);
        num += g * (obs.rl_db - smooth);
        den += g * g;
    }
    if den == 0.0 {
        return Err(Error::invalid("no observation has a non-zero roughness term"));
    }
    Ok((num / den).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn normal_incidence_real_glass() {
        let r = fresnel_thick(ComplexPermittivity::lossless(6.27), 0.0).unwrap();
        let expected = (1.0 - 6.27_f64.sqrt()) / (1.0 + 6.27_f64.sqrt());
        assert!((r.te.re - expected).abs() < 1e-15);
        assert!((expected + 0.429_2).abs() < 1e-4);
        assert!((r.tm + r.te).norm() < 1e-12);
    }

    #[test]
    fn no_contrast_no_reflection() {
        for t in [0.0, 0.3, 1.2, 1.5] {
            let r = fresnel_thick(ComplexPermittivity::VACUUM, t).unwrap();
            assert!(r.te.norm() < 1e-12 && r.tm.norm() < 1e-12);
        }
    }

    #[test]
    fn angle_domain_is_half_open() {
        let eta = ComplexPermittivity::lossless(2.0);
        assert!(fresnel_thick(eta, FRAC_PI_2).is_err());
        assert!(fresnel_thick(eta, -1e-9).is_err());
        assert!(fresnel_thick(eta, FRAC_PI_2 - 1e-9).is_ok());
    }

    #[test]
    fn zero_thickness_slab_is_transparent() {
        let eta = relative_permittivity(&MaterialParams::glass(), 100.0).unwrap();
        assert_eq!(slab_coefficient(eta, 0.4, 0.0, 100.0).unwrap(), ComplexReflection::ZERO);
        assert!(slab_coefficient(eta, 0.4, -1e-3, 100.0).is_err());
        assert!(ComplexReflection::ZERO.te_db().is_infinite());
    }

    #[test]
    fn thick_slab_converges_to_half_space() {
        let eta = relative_permittivity(&MaterialParams::wood(), 100.0).unwrap();
        let thick = fresnel_thick(eta, 0.0).unwrap();
        let at = |h: f64| {
            let r = slab_coefficient(eta, 0.0, h, 100.0).unwrap();
            (r.te - thick.te).norm()
        };
        assert!(at(0.05) < at(0.005));
        assert!(at(10.0) < 1e-15);
    }

    #[test]
    fn table_anchor_values() {
        let rl = |m: &MaterialParams, a: f64| reflection_loss(m, 100.0, deg(a), 0.0).unwrap();
        assert!((rl(&MaterialParams::glass(), 0.0) - 7.34).abs() < 0.005);
        assert!((rl(&MaterialParams::glass(), 80.0) - 3.63).abs() < 0.005);
        assert!((rl(&MaterialParams::wood(), 80.0) - 4.31).abs() < 0.005);
    }

    #[test]
    fn roughness_adds_loss() {
        let wood = MaterialParams::wood();
        let smooth = reflection_loss(&wood, 100.0, 0.0, 0.0).unwrap();
        let rough = reflection_loss(&wood, 100.0, 0.0, FITTED_KAPPA).unwrap();
        assert!(rough > smooth + 1.0);
        let glass = MaterialParams::glass();
        assert_eq!(
            reflection_loss(&glass, 100.0, 0.2, FITTED_KAPPA).unwrap(),
            reflection_loss(&glass, 100.0, 0.2, 0.0).unwrap()
        );
        assert!(reflection_loss(&wood, 100.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn per_polarization_losses_bracket_unpolarized() {
        let g = MaterialParams::glass();
        let t = deg(50.0);
        let te = reflection_loss_polarized(&g, 100.0, t, 0.0, Polarization::Te).unwrap();
        let tm = reflection_loss_polarized(&g, 100.0, t, 0.0, Polarization::Tm).unwrap();
        let un = reflection_loss(&g, 100.0, t, 0.0).unwrap();
        assert!(te < un && un < tm);
    }
}

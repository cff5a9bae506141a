//! Porous-material characteristics, layer impedances and absorption.
//!
//! Everything here follows the `e^{+jωt}` time convention: lossy
//! wavenumbers have a non-positive imaginary part.

use crate::error::{Error, Result};
use crate::num::{cabs2, ccot, cplx, is_finite_c, j, principal_sqrt, real, Cplx, Real};

/// Properties of the ambient air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirProperties<T> {
    /// Density, kg/m³.
    pub rho0: T,
    /// Speed of sound, m/s.
    pub c0: T,
    /// Dynamic viscosity, Pa·s.
    pub eta: T,
    /// Ratio of specific heats.
    pub gamma: T,
    /// Static pressure, Pa.
    pub p0: T,
    /// Prandtl number.
    pub prandtl: T,
}

impl<T: Real> Default for AirProperties<T> {
    fn default() -> Self {
        Self {
            rho0: T::lit(1.21),
            c0: T::lit(343.0),
            eta: T::lit(1.81e-5),
            gamma: T::lit(1.41),
            p0: T::lit(101_325.0),
            prandtl: T::lit(0.71),
        }
    }
}

impl<T: Real> AirProperties<T> {
    /// Default air with the given density and sound speed.
    pub fn with_density_and_speed(rho0: T, c0: T) -> Result<Self> {
        let air = Self {
            rho0,
            c0,
            ..Self::default()
        };
        air.validate()?;
        Ok(air)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho0", self.rho0),
            ("c0", self.c0),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("p0", self.p0),
            ("prandtl", self.prandtl),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::invalid(format!("air property {name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Characteristic impedance of air, `ρ0·c0`.
    pub fn impedance(&self) -> T {
        self.rho0 * self.c0
    }

    /// Air wavenumber at frequency `f_hz`.
    pub fn wavenumber(&self, f_hz: T) -> T {
        T::two_pi() * f_hz / self.c0
    }
}

/// Macroscopic parameters of a rigid-backed porous layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorousMaterial<T> {
    /// Static airflow resistivity, N·s/m⁴.
    pub sigma: T,
    /// Open porosity.
    pub phi: T,
    /// Tortuosity.
    pub alpha_inf: T,
    /// Viscous characteristic length, m.
    pub lambda: T,
    /// Thermal characteristic length, m.
    pub lambda_prime: T,
    /// Layer thickness, m.
    pub thickness: T,
}

impl<T: Real> PorousMaterial<T> {
    pub fn new(sigma: T, phi: T, alpha_inf: T, lambda: T, lambda_prime: T, thickness: T) -> Result<Self> {
        let m = Self {
            sigma,
            phi,
            alpha_inf,
            lambda,
            lambda_prime,
            thickness,
        };
        m.validate()?;
        Ok(m)
    }

    /// PET fibrous absorber, 5 cm.
    pub fn pet() -> Self {
        Self {
            sigma: T::lit(4683.0),
            phi: T::lit(0.90),
            alpha_inf: T::lit(1.00),
            lambda: T::lit(362.1e-6),
            lambda_prime: T::lit(362.2e-6),
            thickness: T::lit(0.050),
        }
    }

    /// Melamine foam, 3.37 cm.
    pub fn melamine() -> Self {
        Self {
            sigma: T::lit(12_200.0),
            phi: T::lit(0.98),
            alpha_inf: T::lit(1.01),
            lambda: T::lit(115.0e-6),
            lambda_prime: T::lit(116.0e-6),
            thickness: T::lit(0.0337),
        }
    }

    pub fn with_thickness(mut self, thickness: T) -> Self {
        self.thickness = thickness;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma,
            self.phi,
            self.alpha_inf,
            self.lambda,
            self.lambda_prime,
            self.thickness,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("porous material parameters must be finite"));
        }
        if self.sigma <= T::zero() {
            return Err(Error::invalid("flow resistivity must be positive"));
        }
        if !(self.phi > T::zero() && self.phi <= T::one()) {
            return Err(Error::invalid("porosity must lie in (0, 1]"));
        }
        if self.alpha_inf < T::one() {
            return Err(Error::invalid("tortuosity must be >= 1"));
        }
        if !(self.lambda > T::zero() && self.lambda <= self.lambda_prime) {
            return Err(Error::invalid("need 0 < viscous length <= thermal length"));
        }
        if self.thickness <= T::zero() {
            return Err(Error::invalid("layer thickness must be positive"));
        }
        Ok(())
    }
}

/// Complex equivalent-fluid properties of a porous medium at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicProps<T> {
    pub rho_p: Cplx<T>,
    pub kappa: Cplx<T>,
    pub k_p: Cplx<T>,
    pub z_p: Cplx<T>,
    pub omega: T,
}

/// Slotted panel on top of a Helmholtz absorber cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlottedPanel<T> {
    /// Panel thickness, m.
    pub t: T,
    /// Slit width, m.
    pub w: T,
    /// Perforation ratio.
    pub theta: T,
}

impl<T: Real> SlottedPanel<T> {
    pub fn new(t: T, w: T, theta: T) -> Result<Self> {
        let p = Self { t, w, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > T::zero() && self.t.is_finite()) || !(self.w > T::zero() && self.w.is_finite()) {
            return Err(Error::invalid("panel thickness and slit width must be positive"));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::invalid("perforation ratio must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Flow-distortion end correction `F(Θ) = 1 − 1.25Θ`.
    pub fn end_correction_factor(&self) -> T {
        T::one() - T::lit(1.25) * self.theta
    }
}

/// Johnson–Champoux–Allard complex density and bulk modulus, plus the
/// derived wavenumber and characteristic impedance.
pub fn jca_characteristic<T: Real>(
    mat: &PorousMaterial<T>,
    air: &AirProperties<T>,
    omega: T,
) -> Result<CharacteristicProps<T>> {
    if !omega.is_finite() || omega <= T::zero() {
        return Err(Error::invalid(format!("angular frequency must be positive, got {omega}")));
    }
    mat.validate()?;
    air.validate()?;

    let one = real(T::one());
    let jw = cplx(T::zero(), omega);
    let PorousMaterial {
        sigma,
        phi,
        alpha_inf,
        lambda,
        lambda_prime,
        ..
    } = *mat;
    let AirProperties {
        rho0,
        eta,
        gamma,
        p0,
        prandtl,
        ..
    } = *air;

    // dynamic density
    let visc = principal_sqrt(
        one + cplx(
            T::zero(),
            T::lit(4.0) * alpha_inf * alpha_inf * eta * rho0 * omega / (sigma * sigma * lambda * lambda * phi * phi),
        ),
    );
    let rho_p = (one + visc * (sigma * phi) / (jw * (rho0 * alpha_inf))) * (rho0 * alpha_inf);

    // dynamic bulk modulus
    let lp2 = lambda_prime * lambda_prime;
    let therm = principal_sqrt(one + cplx(T::zero(), omega * rho0 * prandtl * lp2 / (T::lit(16.0) * eta)));
    let inner = one + therm * (T::lit(8.0) * eta) / (jw * (prandtl * rho0 * lp2));
    let kappa = real(gamma * p0) / (real(gamma) - real(gamma - T::one()) / inner);

    let k_p = principal_sqrt(rho_p / kappa) * omega;
    let z_p = principal_sqrt(kappa * rho_p);
    if !(is_finite_c(k_p) && is_finite_c(z_p)) {
        return Err(Error::Singularity("non-finite equivalent-fluid properties".into()));
    }
    Ok(CharacteristicProps {
        rho_p,
        kappa,
        k_p,
        z_p,
        omega,
    })
}

/// Plane-wave surface impedance of a rigid-backed layer at incidence `theta`.
pub fn plane_wave_surface_impedance<T: Real>(props: &CharacteristicProps<T>, d: T, theta: T, k0: T) -> Result<Cplx<T>> {
    if !(d > T::zero() && d.is_finite()) {
        return Err(Error::invalid("layer thickness must be positive"));
    }
    if !(theta >= T::zero() && theta < T::frac_pi_2()) {
        return Err(Error::invalid("incidence angle must lie in [0, π/2)"));
    }
    let k_pz = layer_normal_wavenumber(props.k_p, theta, k0);
    layer_impedance(props.z_p, props.k_p, k_pz, d)
}

fn layer_normal_wavenumber<T: Real>(k_p: Cplx<T>, theta: T, k0: T) -> Cplx<T> {
    if theta == T::zero() {
        return k_p;
    }
    let kx = k0 * theta.sin();
    let k_pz = principal_sqrt(k_p * k_p - real(kx * kx));
    if k_pz.im > T::zero() {
        -k_pz
    } else {
        k_pz
    }
}

fn layer_impedance<T: Real>(z_p: Cplx<T>, k_p: Cplx<T>, k_pz: Cplx<T>, d: T) -> Result<Cplx<T>> {
    let arg = k_pz * d;
    let tol = T::eps().sqrt();
    let cot = ccot(arg, tol)
        .ok_or_else(|| Error::Singularity(format!("cot(k_pz·d) evaluated at a pole, k_pz·d = {arg}")))?;
    Ok(-j::<T>() * z_p * (k_p / k_pz) * cot)
}

/// Absorption coefficient from a surface impedance normalised by `ρ0·c0`.
///
/// The raw value is returned; clipping to `[0, 1]` is left to reporting.
pub fn absorption_from_impedance<T: Real>(zs_normalized: Cplx<T>, theta: T) -> Result<T> {
    if !is_finite_c(zs_normalized) {
        return Err(Error::invalid("normalised impedance must be finite"));
    }
    let zc = zs_normalized * theta.cos();
    let one = real(T::one());
    let den = zc + one;
    if cabs2(den) == T::zero() {
        return Err(Error::Singularity("Zs·cosθ = −1".into()));
    }
    let refl = (zc - one) / den;
    Ok(T::one() - cabs2(refl))
}

/// Normal-incidence surface impedance of a slotted-panel Helmholtz absorber
/// over a rigid-backed porous layer.
pub fn helmholtz_surface_impedance<T: Real>(
    panel: &SlottedPanel<T>,
    mat: &PorousMaterial<T>,
    air: &AirProperties<T>,
    omega: T,
) -> Result<Cplx<T>> {
    panel.validate()?;
    let props = jca_characteristic(mat, air, omega)?;
    let sin_pt = (T::pi() * panel.theta).sin();
    if !(sin_pt > T::zero()) {
        return Err(Error::Singularity("sin(πΘ) <= 0 in the end-correction logarithm".into()));
    }
    let rho0 = air.rho0;
    let eta = air.eta;
    let theta = panel.theta;

    // viscous slit term
    let sqrt_j = principal_sqrt(j::<T>());
    let x = sqrt_j * (panel.w * (rho0 * omega / (T::lit(4.0) * eta)).sqrt());
    let ratio = crate::num::ctanh(x) / x;
    let mass = cplx(T::zero(), omega * rho0 * panel.t / theta) / (real(T::one()) - ratio);
    let resist = real(T::lit(4.0) * (T::lit(2.0) * rho0 * eta * omega).sqrt() / theta);
    let psi = cplx(
        T::zero(),
        T::lit(0.936) * omega * rho0 * panel.w * panel.end_correction_factor() / T::lit(2.0) * sin_pt.ln() / theta,
    );
    let z_h = mass + resist - psi;

    let porous = layer_impedance(props.z_p, props.k_p, props.k_p, mat.thickness)?;
    Ok(z_h + porous)
}

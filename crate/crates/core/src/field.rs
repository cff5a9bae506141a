//! Exact field of a monopole above a rigid-backed, non-locally reacting
//! porous layer, evaluated through its Sommerfeld integral.
//!
//! The wavenumber integral is taken in `κ = k/k0` on `[0, κ_max]`. The
//! branch point of `ν0 = sqrt(k² − k0²)` at `κ = 1` is removed by the
//! substitutions `κ = 1 − t²` below it and `κ = 1 + t²` above it, which
//! turn the square-root behaviour into a smooth factor `t`. Clusters of
//! break points around `κ = 1` and `κ = |k_p|/k0` seed the adaptive
//! integrator.

use nalgebra::{DMatrix, Point3};
use rayon::prelude::*;

use crate::bessel::j0;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::greens::monopole;
use crate::integrate::{integrate_panels, AdaptiveOptions};
use crate::material::{absorption_from_impedance, jca_characteristic, AirProperties, PorousMaterial};
use crate::measurement::MeasurementSet;
use crate::num::{cabs, cexp, cplx, ctanh, is_finite_c, principal_sqrt, real, Cplx, Real};

/// Monopole over a porous layer, with the frequencies of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T: Real> {
    pub air: AirProperties<T>,
    pub source: Point3<T>,
    /// Complex source strength `s̃`.
    pub strength: Cplx<T>,
    pub material: PorousMaterial<T>,
    /// Strictly increasing, Hz.
    pub frequencies: Vec<T>,
}

impl<T: Real> Scene<T> {
    pub fn new(
        air: AirProperties<T>,
        source: Point3<T>,
        strength: Cplx<T>,
        material: PorousMaterial<T>,
        frequencies: Vec<T>,
    ) -> Result<Self> {
        let scene = Self {
            air,
            source,
            strength,
            material,
            frequencies,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// 50 mm PET with the source 1.05 m above its surface.
    pub fn pet(frequencies: Vec<T>) -> Result<Self> {
        Self::new(
            AirProperties::default(),
            Point3::new(T::zero(), T::zero(), T::lit(1.05)),
            real(T::one()),
            PorousMaterial::pet(),
            frequencies,
        )
    }

    /// 33.7 mm melamine; the source is 1.1 m above the rigid backing.
    pub fn melamine(frequencies: Vec<T>) -> Result<Self> {
        let mat = PorousMaterial::<T>::melamine();
        Self::new(
            AirProperties::default(),
            Point3::new(T::zero(), T::zero(), T::lit(1.1) - mat.thickness),
            real(T::one()),
            mat,
            frequencies,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.air.validate()?;
        self.material.validate()?;
        if !(self.source.z > T::zero() && self.source.x.is_finite() && self.source.y.is_finite()) {
            return Err(Error::invalid("source must lie strictly above the surface"));
        }
        if !is_finite_c(self.strength) {
            return Err(Error::invalid("source strength must be finite"));
        }
        check_frequencies(&self.frequencies)
    }
}

pub(crate) fn check_frequencies<T: Real>(f: &[T]) -> Result<()> {
    if f.iter().any(|&x| !(x > T::zero() && x.is_finite())) {
        return Err(Error::invalid("frequencies must be positive and finite"));
    }
    if f.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Pressure and normal velocity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample<T: Real> {
    pub position: Point3<T>,
    pub pressure: Cplx<T>,
    /// z-component of particle velocity (positive away from the surface).
    pub velocity_z: Cplx<T>,
    pub frequency: T,
    /// Integrator error estimates for `p` and `∂p/∂z`.
    pub integration_error: [T; 2],
}

impl<T: Real> FieldSample<T> {
    /// `p/(−u_z)`: impedance seen by a wave travelling into the surface.
    pub fn surface_impedance(&self) -> Cplx<T> {
        -self.pressure / self.velocity_z
    }
}

/// Controls for the wavenumber integral.
#[derive(Debug, Clone, Copy)]
pub struct SommerfeldOptions<T> {
    /// Upper limit in `κ = k/k0`.
    pub kappa_max: T,
    /// Break points on each side of a candidate singular point.
    pub cluster_points: usize,
    /// Largest break-point offset from a candidate point, in `κ`.
    pub cluster_halfwidth: T,
    pub integrator: AdaptiveOptions<T>,
}

impl<T: Real> Default for SommerfeldOptions<T> {
    fn default() -> Self {
        Self {
            kappa_max: T::lit(10.0),
            cluster_points: 25,
            cluster_halfwidth: T::lit(0.05),
            integrator: AdaptiveOptions::default(),
        }
    }
}

/// Per-frequency quantities shared by every receiver.
#[derive(Debug, Clone, Copy)]
struct Layer<T: Real> {
    f: T,
    k0: T,
    rho0: T,
    rho_p: Cplx<T>,
    k_p: Cplx<T>,
    d: T,
}

impl<T: Real> Layer<T> {
    fn new(scene: &Scene<T>, f: T) -> Result<Self> {
        if !(f > T::zero() && f.is_finite()) {
            return Err(Error::invalid(format!("frequency must be positive, got {f}")));
        }
        let omega = T::two_pi() * f;
        let props = jca_characteristic(&scene.material, &scene.air, omega)?;
        Ok(Self {
            f,
            k0: omega / scene.air.c0,
            rho0: scene.air.rho0,
            rho_p: props.rho_p,
            k_p: props.k_p,
            d: scene.material.thickness,
        })
    }
}

fn break_points<T: Real>(centres: &[T], opts: &SommerfeldOptions<T>) -> Vec<T> {
    let mut pts = Vec::with_capacity(centres.len() * (2 * opts.cluster_points + 1));
    for &c in centres {
        pts.push(c);
        let mut off = opts.cluster_halfwidth;
        for _ in 0..opts.cluster_points {
            pts.push(c - off);
            pts.push(c + off);
            off /= T::lit(2.0);
        }
    }
    pts
}

/// Edges in `t` for one side of the branch point. `to_t` returns `None` for
/// points belonging to the other side.
fn edges<T: Real>(candidates: &[T], t_max: T, to_t: impl Fn(T) -> Option<T>) -> Vec<T> {
    let mut e: Vec<T> = candidates
        .iter()
        .filter_map(|&k| to_t(k))
        .filter(|&t| t > T::zero() && t < t_max)
        .collect();
    e.push(T::zero());
    e.push(t_max);
    e.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
    e.dedup();
    e
}

/// Integral term of the pressure and its receiver-height derivative.
fn reflected_integral<T: Real>(
    layer: &Layer<T>,
    r: T,
    h: T,
    opts: &SommerfeldOptions<T>,
) -> Result<([Cplx<T>; 2], [T; 2])> {
    if !(opts.kappa_max > T::one()) {
        return Err(Error::invalid("kappa_max must exceed 1"));
    }
    let Layer {
        k0, rho0, rho_p, k_p, d, ..
    } = *layer;
    let two = T::lit(2.0);
    let kp2 = k_p * k_p;
    let kernel = |kappa: T, nu0: Cplx<T>, jac: T| -> [Cplx<T>; 2] {
        let k = kappa * k0;
        let nu1 = principal_sqrt(real(k * k) - kp2);
        let den = nu0 * rho_p + nu1 * ctanh(nu1 * d) * rho0;
        let v = rho_p * cexp(-nu0 * h) / den * (two * k * j0(k * r) * k0 * jac);
        [v, -nu0 * v]
    };

    let candidates = break_points(&[T::one(), (k_p.re.hypot(k_p.im)) / k0], opts);

    // κ = 1 − t², t ∈ [0, 1]
    let below = edges(&candidates, T::one(), |k| (k < T::one()).then(|| (T::one() - k).sqrt()));
    let f_below = |t: T| {
        let nu0 = cplx(T::zero(), k0 * t * (two - t * t).sqrt());
        kernel(T::one() - t * t, nu0, two * t)
    };
    // κ = 1 + t², t ∈ [0, sqrt(κ_max − 1)]
    let t_max = (opts.kappa_max - T::one()).sqrt();
    let above = edges(&candidates, t_max, |k| (k > T::one()).then(|| (k - T::one()).sqrt()));
    let f_above = |t: T| {
        let nu0 = real(k0 * t * (two + t * t).sqrt());
        kernel(T::one() + t * t, nu0, two * t)
    };

    let fail = |e: crate::integrate::NotConverged<T, 2>| {
        let (err, tol) = e.worst_component();
        Error::NonConvergence {
            frequency_hz: layer.f.to_f64_lossy(),
            error_estimate: err.to_f64_lossy(),
            tolerance: tol.to_f64_lossy(),
        }
    };
    let a = integrate_panels(f_below, &below, &opts.integrator).map_err(fail)?;
    let b = integrate_panels(f_above, &above, &opts.integrator).map_err(fail)?;
    let val = [a.value[0] + b.value[0], a.value[1] + b.value[1]];
    if !(is_finite_c(val[0]) && is_finite_c(val[1])) {
        return Err(Error::Singularity("non-finite Sommerfeld integrand".into()));
    }
    Ok((val, [a.error[0] + b.error[0], a.error[1] + b.error[1]]))
}

fn field_at<T: Real>(
    scene: &Scene<T>,
    layer: &Layer<T>,
    rec: &Point3<T>,
    opts: &SommerfeldOptions<T>,
) -> Result<FieldSample<T>> {
    if !(rec.z >= T::zero() && rec.x.is_finite() && rec.y.is_finite()) {
        return Err(Error::invalid("receiver must lie on or above the surface"));
    }
    let src = &scene.source;
    let dx = rec.x - src.x;
    let dy = rec.y - src.y;
    let r2 = dx * dx + dy * dy;
    let h = src.z + rec.z;
    let k0 = layer.k0;
    let (g1, dg1) = monopole(r2, real(rec.z - src.z), k0, T::zero())?;
    let (g2, dg2) = monopole(r2, real(h), k0, T::zero())?;
    let (int, err) = reflected_integral(layer, r2.sqrt(), h, opts)?;
    let s = scene.strength;
    let p = s * (g1 - g2 + int[0]);
    let dpdz = s * (dg1 - dg2 + int[1]);
    let u = -dpdz / cplx(T::zero(), k0 * scene.air.rho0 * scene.air.c0);
    let scale = cabs(s);
    Ok(FieldSample {
        position: *rec,
        pressure: p,
        velocity_z: u,
        frequency: layer.f,
        integration_error: [err[0] * scale, err[1] * scale],
    })
}

/// Pressure and z-velocity at `rec` and frequency `f`.
pub fn sommerfeld_field<T: Real>(
    scene: &Scene<T>,
    rec: &Point3<T>,
    f: T,
    opts: &SommerfeldOptions<T>,
) -> Result<FieldSample<T>> {
    let layer = Layer::new(scene, f)?;
    field_at(scene, &layer, rec, opts)
}

pub fn sommerfeld_pressure<T: Real>(scene: &Scene<T>, rec: &Point3<T>, f: T, opts: &SommerfeldOptions<T>) -> Result<Cplx<T>> {
    Ok(sommerfeld_field(scene, rec, f, opts)?.pressure)
}

pub fn sommerfeld_velocity_z<T: Real>(
    scene: &Scene<T>,
    rec: &Point3<T>,
    f: T,
    opts: &SommerfeldOptions<T>,
) -> Result<Cplx<T>> {
    Ok(sommerfeld_field(scene, rec, f, opts)?.velocity_z)
}

/// Field at every point for every scene frequency, as a points × frequencies
/// matrix. Evaluated in parallel; errors carry receiver and frequency.
pub fn field_matrix<T: Real>(
    scene: &Scene<T>,
    points: &[Point3<T>],
    opts: &SommerfeldOptions<T>,
) -> Result<DMatrix<FieldSample<T>>> {
    scene.validate()?;
    let layers: Vec<Layer<T>> = scene
        .frequencies
        .iter()
        .map(|&f| Layer::new(scene, f).map_err(|e| e.at_frequency(f.to_f64_lossy())))
        .collect::<Result<_>>()?;
    let m = points.len();
    let cells: Vec<FieldSample<T>> = (0..m * layers.len())
        .into_par_iter()
        .map(|idx| {
            let (col, row) = (idx / m, idx % m);
            field_at(scene, &layers[col], &points[row], opts).map_err(|e| Error::AtReceiver {
                receiver: row,
                frequency_hz: layers[col].f.to_f64_lossy(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_vec(m, layers.len(), cells))
}

/// Noise-free pressures at the array for every scene frequency.
pub fn simulate_measurement<T: Real>(
    scene: &Scene<T>,
    array: &ArrayGeometry<T>,
    opts: &SommerfeldOptions<T>,
) -> Result<MeasurementSet<T>> {
    if array.points.iter().any(|p| !(p.z > T::zero())) {
        return Err(Error::invalid("array points must lie above the surface"));
    }
    let samples = field_matrix(scene, &array.points, opts)?;
    MeasurementSet::new(array.clone(), scene.frequencies.clone(), samples.map(|s| s.pressure))
}

/// Surface impedance `p/(−u_z)` of the exact field at the origin.
pub fn spherical_reference_impedance<T: Real>(scene: &Scene<T>, f: T, opts: &SommerfeldOptions<T>) -> Result<Cplx<T>> {
    let origin = Point3::new(T::zero(), T::zero(), T::zero());
    Ok(sommerfeld_field(scene, &origin, f, opts)?.surface_impedance())
}

/// Normal-incidence absorption from [`spherical_reference_impedance`].
pub fn spherical_reference_alpha<T: Real>(scene: &Scene<T>, f: T, opts: &SommerfeldOptions<T>) -> Result<T> {
    let z = spherical_reference_impedance(scene, f, opts)?;
    absorption_from_impedance(z / scene.air.impedance(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{greens_free, greens_free_dz, image_of};

    fn rel(a: Cplx<f64>, b: Cplx<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn pet() -> Scene<f64> {
        Scene::pet(vec![1000.0]).unwrap()
    }

    fn opts() -> SommerfeldOptions<f64> {
        SommerfeldOptions::default()
    }

    #[test]
    fn oracle_fixtures() {
        let s = pet();
        let cases = [
            (
                1000.0,
                Point3::new(0.0, 0.0, 0.013),
                Cplx::new(4.3547770523142515e-01, -4.7987034938148421e-01),
                Cplx::new(-3.5689649517923862e-03, -2.9463584680150290e-04),
            ),
            (
                250.0,
                Point3::new(0.1, -0.2, 0.042),
                Cplx::new(7.3772483076687911e-01, 1.4553280882400776e+00),
                Cplx::new(1.4130172936840082e-03, -1.4797282664876443e-03),
            ),
            (
                500.0,
                Point3::new(0.0, 0.0, 0.0),
                Cplx::new(-1.1869872292258037e+00, 9.4704569295647623e-01),
                Cplx::new(1.7953130471838295e-03, 1.2244157375711109e-03),
            ),
        ];
        for (f, rec, p, u) in cases {
            let fs = sommerfeld_field(&s, &rec, f, &opts()).unwrap();
            assert!(rel(fs.pressure, p) < 1e-5, "p at {f} Hz: {} vs {p}", fs.pressure);
            assert!(rel(fs.velocity_z, u) < 1e-5, "u at {f} Hz: {} vs {u}", fs.velocity_z);
        }
    }

    #[test]
    fn rigid_limit() {
        let mut s = pet();
        s.material.thickness = 1e-9;
        for (f, rec) in [(125.0, Point3::new(0.05, 0.0, 0.013)), (2000.0, Point3::new(-0.2, 0.3, 0.042))] {
            let k0 = s.air.wavenumber(f);
            let want = greens_free(&s.source, &rec, k0).unwrap() + greens_free(&image_of(&s.source), &rec, k0).unwrap();
            let p = sommerfeld_pressure(&s, &rec, f, &opts()).unwrap();
            assert!(rel(p, want) < 1e-4, "{p} vs {want}");
        }
        let at_surface = sommerfeld_field(&s, &Point3::new(0.03, 0.01, 0.0), 800.0, &opts()).unwrap();
        assert!(at_surface.velocity_z.norm() * s.air.impedance() / at_surface.pressure.norm() < 1e-3);
    }

    #[test]
    fn axisymmetry_and_reciprocity() {
        let s = pet();
        let a = sommerfeld_pressure(&s, &Point3::new(0.12, -0.07, 0.02), 700.0, &opts()).unwrap();
        let b = sommerfeld_pressure(&s, &Point3::new(-0.12, 0.07, 0.02), 700.0, &opts()).unwrap();
        assert!(rel(a, b) < 1e-10);

        let mut low = pet();
        low.source = Point3::new(0.0, 0.0, 0.3);
        let mut high = pet();
        high.source = Point3::new(0.0, 0.0, 0.05);
        let pa = sommerfeld_pressure(&low, &Point3::new(0.2, 0.0, 0.05), 900.0, &opts()).unwrap();
        let pb = sommerfeld_pressure(&high, &Point3::new(0.2, 0.0, 0.3), 900.0, &opts()).unwrap();
        assert!(rel(pa, pb) < 1e-8, "{pa} vs {pb}");
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let s = pet();
        for (f, x, z) in [(300.0, 0.05, 0.02), (1500.0, -0.1, 0.013)] {
            let h = 1e-5;
            let pp = sommerfeld_pressure(&s, &Point3::new(x, 0.02, z + h), f, &opts()).unwrap();
            let pm = sommerfeld_pressure(&s, &Point3::new(x, 0.02, z - h), f, &opts()).unwrap();
            let k0 = s.air.wavenumber(f);
            let fd = -(pp - pm) / (2.0 * h) / Cplx::new(0.0, k0 * s.air.impedance());
            let u = sommerfeld_velocity_z(&s, &Point3::new(x, 0.02, z), f, &opts()).unwrap();
            assert!(rel(u, fd) < 1e-3, "{u} vs {fd}");
        }
    }

    #[test]
    fn free_field_far_field_velocity() {
        let src = Point3::new(0.0, 0.0, 0.0);
        let k0 = 2.0 * std::f64::consts::PI * 3000.0 / 343.0;
        for angle in [0.0_f64, 0.4, 1.0] {
            let r = 200.0 / k0;
            let rec = Point3::new(r * angle.sin(), 0.0, -r * angle.cos());
            let p = greens_free(&src, &rec, k0).unwrap();
            let u = -greens_free_dz(&src, &rec, k0).unwrap() / Cplx::new(0.0, k0);
            let ratio = (u / p).norm();
            assert!((ratio - angle.cos()).abs() < 0.01 * angle.cos().max(0.1), "angle {angle}: {ratio}");
        }
    }

    #[test]
    fn truncation_tail_is_negligible() {
        let s = pet();
        let wide = SommerfeldOptions {
            kappa_max: 20.0,
            ..opts()
        };
        for f in [100.0, 1000.0, 4000.0] {
            let layer = Layer::new(&s, f).unwrap();
            let h = s.source.z;
            let r = 0.05_f64.hypot(0.05);
            let (a, _) = reflected_integral(&layer, r, h, &opts()).unwrap();
            let (b, _) = reflected_integral(&layer, r, h, &wide).unwrap();
            assert!(rel(a[0], b[0]) < 1e-6, "f = {f}");
        }
    }

    #[test]
    fn halving_tolerance_within_error_estimate() {
        let s = pet();
        let rec = Point3::new(0.07, 0.0, 0.042);
        let base = sommerfeld_field(&s, &rec, 630.0, &opts()).unwrap();
        let mut tight = opts();
        tight.integrator.rel_tol /= 2.0;
        let fine = sommerfeld_field(&s, &rec, 630.0, &tight).unwrap();
        assert!((base.pressure - fine.pressure).norm() <= base.integration_error[0].max(1e-300));
    }

    #[test]
    fn surface_impedance_sign() {
        let z = spherical_reference_impedance(&pet(), 500.0, &opts()).unwrap();
        assert!(z.re > 0.0);
        let a = spherical_reference_alpha(&pet(), 500.0, &opts()).unwrap();
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn simulate_is_pointwise() {
        let s = Scene::pet(vec![400.0, 1200.0]).unwrap();
        let arr = crate::geometry::standard_array::<f64>(3).unwrap();
        let m = simulate_measurement(&s, &arr, &opts()).unwrap();
        assert_eq!(m.pressures.shape(), (6, 2));
        for (i, rec) in arr.points.iter().enumerate() {
            let p = sommerfeld_pressure(&s, rec, 1200.0, &opts()).unwrap();
            assert_eq!(m.pressures[(i, 1)], p);
        }
        let dup = ArrayGeometry::new(vec![arr.points[0], arr.points[0]], "dup").unwrap();
        let md = simulate_measurement(&s, &dup, &opts()).unwrap();
        assert_eq!(md.pressures.row(0), md.pressures.row(1));
    }

    #[test]
    fn invalid_inputs() {
        let s = pet();
        assert!(sommerfeld_pressure(&s, &Point3::new(0.0, 0.0, -0.01), 100.0, &opts()).is_err());
        assert!(sommerfeld_pressure(&s, &s.source, 100.0, &opts()).is_err());
        assert!(sommerfeld_pressure(&s, &Point3::new(0.0, 0.0, 0.01), 0.0, &opts()).is_err());
        assert!(Scene::pet(vec![200.0, 100.0]).is_err());
        let mut bad = pet();
        bad.source.z = 0.0;
        assert!(bad.validate().is_err());
        let starved = SommerfeldOptions {
            integrator: AdaptiveOptions {
                max_panels: 2,
                ..AdaptiveOptions::default()
            },
            cluster_points: 0,
            ..opts()
        };
        match sommerfeld_pressure(&s, &Point3::new(0.3, 0.0, 0.01), 3000.0, &starved) {
            Err(Error::NonConvergence { frequency_hz, .. }) => assert_eq!(frequency_hz, 3000.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn single_precision_runs() {
        let s = Scene::<f32>::pet(vec![500.0]).unwrap();
        let p = sommerfeld_pressure(&s, &Point3::new(0.0, 0.0, 0.0), 500.0, &SommerfeldOptions::default()).unwrap();
        let want = Cplx::new(-1.1869872292258037e+00_f32, 9.4704569295647623e-01);
        assert!((p - want).norm() / want.norm() < 1e-3, "{p}");
    }
}

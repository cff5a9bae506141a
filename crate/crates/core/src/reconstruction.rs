//! Surface field reconstruction from estimated source amplitudes, averaged
//! surface impedance and absorption.

use nalgebra::{DMatrix, DVector, Point3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::inverse::{estimate_sources, FrequencySolution, SourceModel};
use crate::material::{
    absorption_from_impedance, jca_characteristic, plane_wave_surface_impedance, AirProperties, PorousMaterial,
};
use crate::measurement::MeasurementSet;
use crate::num::{cabs, cabs2, cplx, Cplx, Real};

/// Reconstructed pressure and z-velocity on a set of surface points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldReconstruction<T: Real> {
    pub points: Vec<Point3<T>>,
    pub p_re: Vec<Cplx<T>>,
    pub uz_re: Vec<Cplx<T>>,
    pub frequency: T,
}

fn check_len<T: Real>(model: &SourceModel<T>, s: &DVector<Cplx<T>>) -> Result<()> {
    if s.len() != model.n_columns() {
        return Err(Error::Dimension(format!(
            "{} amplitudes for a {} model with {} columns",
            s.len(),
            model.label(),
            model.n_columns()
        )));
    }
    Ok(())
}

/// `G_re s̃` at `points`.
pub fn reconstruct_pressure<T: Real>(
    model: &SourceModel<T>,
    s_tilde: &DVector<Cplx<T>>,
    k0: T,
    points: &[Point3<T>],
) -> Result<Vec<Cplx<T>>> {
    check_len(model, s_tilde)?;
    let g = model.kernel(points, k0)?.g;
    Ok((g * s_tilde).iter().copied().collect())
}

/// `−(∂G_re/∂z) s̃ / (j k0 ρ0 c0)` at `points`.
pub fn reconstruct_velocity_z<T: Real>(
    model: &SourceModel<T>,
    s_tilde: &DVector<Cplx<T>>,
    k0: T,
    points: &[Point3<T>],
    air: &AirProperties<T>,
) -> Result<Vec<Cplx<T>>> {
    check_len(model, s_tilde)?;
    let dg = model.kernel_dz(points, k0)?.g;
    let scale = -(cplx(T::zero(), k0 * air.impedance())).inv();
    Ok((dg * s_tilde).iter().map(|&v| v * scale).collect())
}

/// Mean of the pointwise ratios `p/u`, with `u` the velocity into the surface.
pub fn surface_impedance_avg<T: Real>(p_re: &[Cplx<T>], u_re: &[Cplx<T>]) -> Result<Cplx<T>> {
    if p_re.len() != u_re.len() || p_re.is_empty() {
        return Err(Error::Dimension("pressure and velocity must be equal-length and non-empty".into()));
    }
    let mut sum = cplx(T::zero(), T::zero());
    for (k, (&p, &u)) in p_re.iter().zip(u_re).enumerate() {
        if !(cabs(u).to_f64_lossy() >= 1e-300) {
            return Err(Error::Singularity(format!("zero velocity at surface point {k}")));
        }
        sum += p / u;
    }
    Ok(sum / T::from_usize(p_re.len()).unwrap())
}

/// `‖x_re − x_true‖² / ‖x_true‖²`.
pub fn nmse<T: Real>(x_re: &[Cplx<T>], x_true: &[Cplx<T>]) -> Result<T> {
    if x_re.len() != x_true.len() {
        return Err(Error::Dimension(format!("{} vs {} entries", x_re.len(), x_true.len())));
    }
    let den = x_true.iter().fold(T::zero(), |a, &z| a + cabs2(z));
    if !(den > T::zero()) {
        return Err(Error::invalid("reference field is zero"));
    }
    let num = x_re.iter().zip(x_true).fold(T::zero(), |a, (&x, &y)| a + cabs2(x - y));
    Ok(num / den)
}

/// `1 − |s̃_image/s̃_source|²` from a two-column solution.
pub fn ism_alpha_reflection<T: Real>(s_tilde: &DVector<Cplx<T>>) -> Result<T> {
    if s_tilde.len() != 2 {
        return Err(Error::Dimension(format!("expected 2 amplitudes, got {}", s_tilde.len())));
    }
    if cabs(s_tilde[0]) == T::zero() {
        return Err(Error::Singularity("source amplitude is zero".into()));
    }
    Ok(T::one() - cabs2(s_tilde[1] / s_tilde[0]))
}

/// Normal-incidence absorption of a rigid-backed layer under plane waves.
pub fn plane_wave_alpha<T: Real>(mat: &PorousMaterial<T>, air: &AirProperties<T>, f: T) -> Result<T> {
    let omega = T::two_pi() * f;
    let props = jca_characteristic(mat, air, omega)?;
    let z = plane_wave_surface_impedance(&props, mat.thickness, T::zero(), omega / air.c0)?;
    absorption_from_impedance(z / air.impedance(), T::zero())
}

/// Everything produced at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyEstimate<T: Real> {
    pub solution: FrequencySolution<T>,
    pub field: FieldReconstruction<T>,
    pub zs_avg: Cplx<T>,
    /// Unclipped.
    pub alpha: T,
    pub nmse_p: Option<T>,
    pub nmse_uz: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionResult<T: Real> {
    pub scheme: String,
    pub frequencies: Vec<T>,
    /// One entry per frequency; failures do not stop the others.
    pub estimates: Vec<Result<FrequencyEstimate<T>>>,
}

impl<T: Real> AbsorptionResult<T> {
    pub fn alpha(&self) -> Vec<Option<T>> {
        self.estimates.iter().map(|e| e.as_ref().ok().map(|e| e.alpha)).collect()
    }

    pub fn nmse_p(&self) -> Vec<Option<T>> {
        self.estimates.iter().map(|e| e.as_ref().ok().and_then(|e| e.nmse_p)).collect()
    }
}

/// Inverts each frequency, reconstructs `p` and `u_z` on `grid`, averages
/// the impedance and converts it to absorption at normal incidence.
///
/// `truth`, when given, holds the exact field on `grid` (points ×
/// frequencies) and is used for the NMSE columns.
pub fn absorption_pipeline<T: Real>(
    meas: &MeasurementSet<T>,
    model: &SourceModel<T>,
    air: &AirProperties<T>,
    grid: &[Point3<T>],
    truth: Option<&DMatrix<FieldSample<T>>>,
) -> Result<AbsorptionResult<T>> {
    air.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("reconstruction grid is empty"));
    }
    if let Some(t) = truth {
        if t.shape() != (grid.len(), meas.frequencies.len()) {
            return Err(Error::Dimension(format!(
                "truth field is {:?}, expected ({}, {})",
                t.shape(),
                grid.len(),
                meas.frequencies.len()
            )));
        }
    }
    let solutions = estimate_sources(meas, model, air.c0);
    let estimates = solutions
        .into_par_iter()
        .enumerate()
        .map(|(col, sol)| {
            let sol = sol?;
            let f = sol.frequency;
            reconstruct_one(sol, model, air, grid, truth.map(|t| (t, col))).map_err(|e| Error::AtFrequency {
                frequency_hz: f.to_f64_lossy(),
                source: Box::new(e),
            })
        })
        .collect();
    Ok(AbsorptionResult {
        scheme: model.label(),
        frequencies: meas.frequencies.clone(),
        estimates,
    })
}

fn reconstruct_one<T: Real>(
    solution: FrequencySolution<T>,
    model: &SourceModel<T>,
    air: &AirProperties<T>,
    grid: &[Point3<T>],
    truth: Option<(&DMatrix<FieldSample<T>>, usize)>,
) -> Result<FrequencyEstimate<T>> {
    let s = &solution.solve.s_tilde;
    let p = reconstruct_pressure(model, s, solution.k0, grid)?;
    let u = reconstruct_velocity_z(model, s, solution.k0, grid, air)?;
    let inward: Vec<_> = u.iter().map(|&v| -v).collect();
    let zs_avg = surface_impedance_avg(&p, &inward)?;
    let alpha = absorption_from_impedance(zs_avg / air.impedance(), T::zero())?;
    let (nmse_p, nmse_uz) = match truth {
        Some((t, col)) => {
            let tp: Vec<_> = t.column(col).iter().map(|x| x.pressure).collect();
            let tu: Vec<_> = t.column(col).iter().map(|x| x.velocity_z).collect();
            (Some(nmse(&p, &tp)?), Some(nmse(&u, &tu)?))
        }
        None => (None, None),
    };
    Ok(FrequencyEstimate {
        field: FieldReconstruction {
            points: grid.to_vec(),
            p_re: p,
            uz_re: u,
            frequency: solution.frequency,
        },
        solution,
        zs_avg,
        alpha,
        nmse_p,
        nmse_uz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{standard_array, ReconstructionGrid};
    use crate::greens::{greens_free, image_of};
    use crate::quadrature::{QuadratureRule, Scheme};
    use nalgebra::ComplexField;

    fn src() -> Point3<f64> {
        Point3::new(0.0, 0.0, 1.05)
    }

    fn models() -> Vec<SourceModel<f64>> {
        let mut v = vec![SourceModel::ism(src()).unwrap()];
        for s in [Scheme::Midpoint, Scheme::Legendre, Scheme::Laguerre] {
            v.push(SourceModel::dcism(src(), QuadratureRule::for_scheme(s, 12, 30.0).unwrap()).unwrap());
        }
        v
    }

    fn amplitudes(n: usize) -> DVector<Cplx<f64>> {
        DVector::from_fn(n, |i, _| Cplx::new(1.0 / (1.0 + i as f64), 0.3 * (i as f64).sin()))
    }

    #[test]
    fn single_source_gives_free_field() {
        let m = &models()[2];
        let mut s = DVector::from_element(m.n_columns(), Cplx::new(0.0, 0.0));
        s[0] = Cplx::new(1.0, 0.0);
        let grid = ReconstructionGrid::<f64>::default().points;
        let p = reconstruct_pressure(m, &s, 7.0, &grid).unwrap();
        for (pt, v) in grid.iter().zip(&p) {
            assert_eq!(*v, greens_free(&src(), pt, 7.0).unwrap());
        }
        assert!(reconstruct_pressure(m, &DVector::from_element(3, Cplx::new(1.0, 0.0)), 7.0, &grid).is_err());
    }

    #[test]
    fn rigid_amplitudes_double_pressure_and_cancel_velocity() {
        let far = Point3::new(0.0, 0.0, 500.0);
        let m = SourceModel::ism(far).unwrap();
        let s = DVector::from_element(2, Cplx::new(1.0, 0.0));
        let grid = ReconstructionGrid::<f64>::default().points;
        let k0 = 5.0;
        let p = reconstruct_pressure(&m, &s, k0, &grid).unwrap();
        let direct = greens_free(&far, &grid[220], k0).unwrap();
        assert!((p[220].norm() / direct.norm() - 2.0).abs() < 1e-6);
        let u = reconstruct_velocity_z(&m, &s, k0, &grid, &AirProperties::default()).unwrap();
        let z0 = AirProperties::<f64>::default().impedance();
        for (pu, pp) in u.iter().zip(&p) {
            assert!(pu.norm() * z0 / pp.norm() < 1e-6);
        }
    }

    #[test]
    fn overhead_monopole_velocity() {
        let m = SourceModel::ism(src()).unwrap();
        let s = DVector::from_vec(vec![Cplx::new(1.0, 0.0), Cplx::new(0.0, 0.0)]);
        let centre = [Point3::new(0.0, 0.0, 0.0)];
        let air = AirProperties::default();
        let k0 = 3.0;
        let p = reconstruct_pressure(&m, &s, k0, &centre).unwrap()[0];
        let u = reconstruct_velocity_z(&m, &s, k0, &centre, &air).unwrap()[0];
        let want = -p * (Cplx::new(1.0, 0.0) + Cplx::new(0.0, k0 * 1.05).inv()) / air.impedance();
        assert!((u - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn velocity_matches_pressure_gradient() {
        let air = AirProperties::default();
        let k0 = 2.0 * std::f64::consts::PI * 800.0 / 343.0;
        let grid = ReconstructionGrid::<f64>::default().points;
        let h = 1e-5;
        let up: Vec<_> = grid.iter().map(|p| Point3::new(p.x, p.y, p.z + h)).collect();
        let dn: Vec<_> = grid.iter().map(|p| Point3::new(p.x, p.y, p.z - h)).collect();
        for m in models() {
            let s = amplitudes(m.n_columns());
            let u = reconstruct_velocity_z(&m, &s, k0, &grid, &air).unwrap();
            let pp = reconstruct_pressure(&m, &s, k0, &up).unwrap();
            let pm = reconstruct_pressure(&m, &s, k0, &dn).unwrap();
            let scale = -Cplx::new(0.0, k0 * air.impedance()).inv();
            for i in 0..grid.len() {
                let fd = (pp[i] - pm[i]) / (2.0 * h) * scale;
                assert!((u[i] - fd).norm() <= 1e-4 * u[i].norm(), "{} point {i}", m.label());
            }
        }
    }

    #[test]
    fn reconstruction_is_linear() {
        let grid = ReconstructionGrid::<f64>::default().points;
        for m in models() {
            let n = m.n_columns();
            let s1 = amplitudes(n);
            let s2 = DVector::from_fn(n, |i, _| Cplx::new(0.2 * i as f64, -1.0));
            let (a, b) = (Cplx::new(0.7, -2.0), Cplx::new(-1.5, 0.25));
            let mix = &s1 * a + &s2 * b;
            let r = reconstruct_pressure(&m, &mix, 4.0, &grid).unwrap();
            let r1 = reconstruct_pressure(&m, &s1, 4.0, &grid).unwrap();
            let r2 = reconstruct_pressure(&m, &s2, 4.0, &grid).unwrap();
            for i in 0..grid.len() {
                let want = r1[i] * a + r2[i] * b;
                assert!((r[i] - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn impedance_average_and_nmse() {
        let p = vec![Cplx::new(2.0, 1.0); 4];
        let u = vec![Cplx::new(0.5, 0.0); 4];
        assert_eq!(surface_impedance_avg(&p, &u).unwrap(), Cplx::new(4.0, 2.0));
        assert_eq!(surface_impedance_avg(&p[..1], &u[..1]).unwrap(), Cplx::new(4.0, 2.0));
        assert!(surface_impedance_avg(&p, &[Cplx::new(0.0, 0.0); 4]).is_err());
        let x = vec![Cplx::new(1.0, -1.0), Cplx::new(0.5, 2.0)];
        assert_eq!(nmse(&x, &x).unwrap(), 0.0);
        assert_eq!(nmse(&[Cplx::new(0.0, 0.0); 2], &x).unwrap(), 1.0);
        let twice: Vec<_> = x.iter().map(|z| z * 2.0).collect();
        assert!((nmse(&twice, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&x, &[Cplx::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn reflection_absorption() {
        let v = |a: Cplx<f64>, b: Cplx<f64>| DVector::from_vec(vec![a, b]);
        let one = Cplx::new(1.0, 0.0);
        assert_eq!(ism_alpha_reflection(&v(one, Cplx::new(0.0, 0.0))).unwrap(), 1.0);
        assert_eq!(ism_alpha_reflection(&v(one, one)).unwrap(), 0.0);
        assert!((ism_alpha_reflection(&v(one, Cplx::new(0.0, 0.5))).unwrap() - 0.75).abs() < 1e-15);
        assert!(ism_alpha_reflection(&v(Cplx::new(0.0, 0.0), one)).is_err());
    }

    #[test]
    fn rigid_scene_pipeline_absorbs_nothing() {
        let arr = standard_array::<f64>(1).unwrap();
        let freqs = vec![200.0, 800.0, 2500.0];
        let air = AirProperties::default();
        let p = DMatrix::from_fn(arr.len(), freqs.len(), |i, j| {
            let k0 = 2.0 * std::f64::consts::PI * freqs[j] / air.c0;
            greens_free(&src(), &arr.points[i], k0).unwrap() + greens_free(&image_of(&src()), &arr.points[i], k0).unwrap()
        });
        let meas = MeasurementSet::new(arr, freqs, p).unwrap();
        let grid = ReconstructionGrid::default().points;
        for m in models() {
            let res = absorption_pipeline(&meas, &m, &air, &grid, None).unwrap();
            for a in res.alpha() {
                assert!(a.unwrap().abs() < 0.05, "{}: {a:?}", m.label());
            }
        }
    }

    #[test]
    fn pipeline_records_failures_per_frequency() {
        let arr = standard_array::<f64>(3).unwrap();
        let p = DMatrix::from_fn(arr.len(), 2, |i, j| if j == 0 { Cplx::new(0.0, 0.0) } else { Cplx::new(1.0 + i as f64, 0.0) });
        let meas = MeasurementSet::new(arr, vec![300.0, 600.0], p).unwrap();
        let grid = ReconstructionGrid::default().points;
        let res = absorption_pipeline(&meas, &models()[0], &AirProperties::default(), &grid, None).unwrap();
        assert!(res.estimates[0].is_err());
        assert!(res.estimates[1].is_ok());
    }

    #[test]
    fn plane_wave_reference() {
        let a = plane_wave_alpha(&PorousMaterial::<f64>::pet(), &AirProperties::default(), 1000.0).unwrap();
        assert!(a > 0.0 && a < 1.0);
    }
}

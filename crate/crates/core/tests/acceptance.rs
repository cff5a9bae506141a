//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p cisim --test acceptance -- --nocapture` to see
//! every line.

use std::sync::OnceLock;
use std::time::Instant;

use cisim::field::{
    field_matrix, simulate_measurement, sommerfeld_pressure, spherical_reference_alpha, FieldSample,
};
use cisim::geometry::{standard_array, ReconstructionGrid};
use cisim::greens::{greens_free, image_of};
use cisim::inverse::{SourceModel, SvdSystem};
use cisim::measurement::{add_noise, octave_band_centres, MeasurementSet};
use cisim::quadrature::{gauss_laguerre, gauss_legendre, QuadratureRule, Scheme};
use cisim::reconstruction::{absorption_pipeline, plane_wave_alpha, reconstruct_pressure, reconstruct_velocity_z};
use cisim::{Scene64, SommerfeldOptions, C64};
use nalgebra::{DMatrix, DVector, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SNR_DB: f64 = 30.0;
const SEEDS: [u64; 3] = [1, 2, 3];

fn report(id: u32, pass: bool, detail: impl AsRef<str>) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:2}: {tag}  {}", detail.as_ref());
    assert!(pass, "criterion {id} failed: {}", detail.as_ref());
}

fn bands() -> Vec<f64> {
    octave_band_centres(6, 100.0, 4000.0).unwrap()
}

fn opts() -> SommerfeldOptions<f64> {
    SommerfeldOptions::default()
}

fn gle25() -> SourceModel<f64> {
    let rule = QuadratureRule::for_scheme(Scheme::Legendre, 25, 30.0).unwrap();
    SourceModel::dcism(Scene64::pet(vec![1.0]).unwrap().source, rule).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Clean measurement, exact surface field and spherical-wave reference for a
/// scene over the 1/6-octave band axis.
struct Study {
    scene: Scene64,
    clean: MeasurementSet<f64>,
    grid: ReconstructionGrid<f64>,
    truth: DMatrix<FieldSample<f64>>,
    reference: Vec<f64>,
}

impl Study {
    fn new(scene: Scene64) -> Self {
        let array = standard_array(0).unwrap();
        let clean = simulate_measurement(&scene, &array, &opts()).unwrap();
        let grid = ReconstructionGrid::default();
        let truth = field_matrix(&scene, &grid.points, &opts()).unwrap();
        let reference = scene
            .frequencies
            .iter()
            .map(|&f| spherical_reference_alpha(&scene, f, &opts()).unwrap())
            .collect();
        Self {
            scene,
            clean,
            grid,
            truth,
            reference,
        }
    }

    /// Per-frequency mean over the noise seeds of `(α, NMSE_p)`.
    fn seed_mean(&self, meas: &MeasurementSet<f64>, model: &SourceModel<f64>) -> (Vec<f64>, Vec<f64>) {
        let nf = self.scene.frequencies.len();
        let (mut alpha, mut nmse) = (vec![0.0; nf], vec![0.0; nf]);
        for seed in SEEDS {
            let noisy = add_noise(meas, SNR_DB, seed).unwrap();
            let res = absorption_pipeline(&noisy, model, &self.scene.air, &self.grid.points, Some(&self.truth)).unwrap();
            for (i, e) in res.estimates.iter().enumerate() {
                let e = e.as_ref().unwrap();
                alpha[i] += e.alpha / SEEDS.len() as f64;
                nmse[i] += e.nmse_p.unwrap() / SEEDS.len() as f64;
            }
        }
        (alpha, nmse)
    }
}

fn pet_study() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| Study::new(Scene64::pet(bands()).unwrap()))
}

fn pet_dcism() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| {
        let s = pet_study();
        s.seed_mean(&s.clean, &gle25())
    })
}

#[test]
fn c01_rigid_limit_matches_image_pair() {
    let start = Instant::now();
    let mut scene = Scene64::pet(vec![1000.0]).unwrap();
    scene.material.thickness = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rec = Point3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.005..0.3),
        );
        let f = rng.random_range(100.0..4000.0);
        let k0 = scene.air.wavenumber(f);
        let want = scene.strength
            * (greens_free(&scene.source, &rec, k0).unwrap() + greens_free(&image_of(&scene.source), &rec, k0).unwrap());
        let got = sommerfeld_pressure(&scene, &rec, f, &opts()).unwrap();
        worst = worst.max(rel(got, want));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst < 1e-4 && secs < 30.0,
        format!("max relative error {worst:.2e} (< 1e-4), {secs:.1} s (< 30 s)"),
    );
}

#[test]
fn c02_dcism_pressure_nmse() {
    let (_, nmse) = pet_dcism();
    let f = &pet_study().scene.frequencies;
    let (i, worst) = nmse.iter().enumerate().fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    report(
        2,
        nmse.iter().all(|&v| v < 0.02),
        format!("DCISM-GLE worst seed-mean NMSE_p {worst:.2e} at {:.0} Hz (< 0.02)", f[i]),
    );
}

#[test]
fn c03_ism_error_above_900_hz() {
    let s = pet_study();
    let model = SourceModel::ism(s.scene.source).unwrap();
    let (_, nmse) = s.seed_mean(&s.clean, &model);
    let high: Vec<f64> = s
        .scene
        .frequencies
        .iter()
        .zip(&nmse)
        .filter(|(&f, _)| f > 900.0)
        .map(|(_, &v)| v)
        .collect();
    let above = high.iter().filter(|&&v| v > 0.05).count();
    let max = high.iter().cloned().fold(0.0, f64::max);
    report(
        3,
        above as f64 >= 0.8 * high.len() as f64,
        format!(
            "ISM NMSE_p > 0.05 at {above}/{} centres above 900 Hz (need 80%), max {max:.2e}",
            high.len()
        ),
    );
}

#[test]
fn c04_absorption_matches_spherical_reference() {
    let s = pet_study();
    let (alpha, _) = pet_dcism();
    let f = &s.scene.frequencies;
    let worst = f
        .iter()
        .zip(alpha.iter().zip(&s.reference))
        .filter(|(&f, _)| f >= 250.0)
        .map(|(_, (a, r))| (a - r).abs())
        .fold(0.0, f64::max);
    let plane_gap = f
        .iter()
        .zip(&s.reference)
        .filter(|(&f, _)| f < 1000.0)
        .map(|(&f, r)| (plane_wave_alpha(&s.scene.material, &s.scene.air, f).unwrap() - r).abs())
        .fold(0.0, f64::max);
    report(
        4,
        worst <= 0.05 && plane_gap > 0.05,
        format!("max |Δα| above 250 Hz {worst:.3} (<= 0.05); plane vs spherical gap below 1 kHz {plane_gap:.3} (> 0.05)"),
    );
}

#[test]
fn c05_active_source_count() {
    let scene = Scene64::pet(vec![500.0, 1000.0]).unwrap();
    let clean = simulate_measurement(&scene, &standard_array(0).unwrap(), &opts()).unwrap();
    let mut counts = Vec::new();
    for scheme in [Scheme::Legendre, Scheme::Laguerre] {
        let rule = QuadratureRule::for_scheme(scheme, 25, 30.0).unwrap();
        let model = SourceModel::dcism(scene.source, rule).unwrap();
        for col in 0..2 {
            let k0 = scene.air.wavenumber(scene.frequencies[col]);
            let g = model.kernel(&clean.array.points, k0).unwrap().g;
            let mut per_seed = Vec::new();
            for seed in SEEDS {
                let p = add_noise(&clean, SNR_DB, seed).unwrap().column(col);
                let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let unit: Vec<C64> = p.iter().map(|z| z / norm).collect();
                let sys = SvdSystem::new(&g, &unit).unwrap();
                let sol = sys.solve(sys.lcurve().unwrap().lambda).unwrap();
                per_seed.push(sol.active_sources(1e-7));
            }
            let mean = per_seed.iter().sum::<usize>() as f64 / per_seed.len() as f64;
            counts.push((scheme.tag(), scene.frequencies[col], per_seed, mean));
        }
    }
    let line = counts
        .iter()
        .map(|(t, f, n, m)| format!("{t}@{f:.0}Hz={n:?} mean {m:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(5, counts.iter().all(|c| c.3 >= 6.0), format!("sources with |s| > 1e-7 per seed: {line} (need mean >= 6)"));
}

fn poly_integral(coef: &[f64], rule: &QuadratureRule<f64>) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * coef.iter().rev().fold(0.0, |acc, &c| acc * x + c))
        .sum()
}

#[test]
fn c06_quadrature_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for n in [2, 5, 10, 25] {
        let rule = gauss_legendre::<f64>(n).unwrap();
        for _ in 0..20 {
            let coef: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let exact: f64 = coef.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, c)| 2.0 * c / (k + 1) as f64).sum();
            let scale: f64 = coef.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
            worst = worst.max((poly_integral(&coef, &rule) - exact).abs() / scale);
        }
    }
    for n in [1, 2, 5] {
        let rule = gauss_laguerre::<f64>(n).unwrap();
        for _ in 0..20 {
            let coef: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut fact = 1.0;
            let mut exact = 0.0;
            let mut scale = 0.0;
            for (k, c) in coef.iter().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                exact += c * fact;
                scale += c.abs() * fact;
            }
            worst = worst.max((poly_integral(&coef, &rule) - exact).abs() / f64::max(scale, 1.0));
        }
    }
    report(6, worst < 1e-12, format!("max scaled error {worst:.2e} (< 1e-12)"));
}

#[test]
fn c07_tikhonov_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let q = rng.random_range(1..=30);
        let m = rng.random_range(q..=40);
        let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let g = DMatrix::from_fn(m, q, |_, _| c());
        let p: Vec<C64> = (0..m).map(|_| c()).collect();
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let s = SvdSystem::new(&g, &p).unwrap().solve(lambda).unwrap().s_tilde;
        let gh = g.adjoint();
        let lhs = &gh * &g + DMatrix::identity(q, q) * C64::new(lambda * lambda, 0.0);
        let oracle = lhs.lu().solve(&(gh * DVector::from_vec(p))).unwrap();
        worst = worst.max((&s - &oracle).norm() / oracle.norm());
    }
    report(7, worst < 1e-8, format!("max relative difference {worst:.2e} over 50 systems (< 1e-8)"));
}

#[test]
fn c08_velocity_matches_pressure_gradient() {
    let scene = Scene64::pet(vec![1000.0]).unwrap();
    let k0 = scene.air.wavenumber(1000.0);
    let grid = ReconstructionGrid::<f64>::default();
    let h = 1e-5;
    let shift = |dz: f64| -> Vec<Point3<f64>> { grid.points.iter().map(|p| Point3::new(p.x, p.y, p.z + dz)).collect() };
    let (up, down) = (shift(h), shift(-h));
    let mut models = vec![SourceModel::ism(scene.source).unwrap()];
    for scheme in [Scheme::Midpoint, Scheme::Legendre, Scheme::Laguerre] {
        let rule = QuadratureRule::for_scheme(scheme, 25, 30.0).unwrap();
        models.push(SourceModel::dcism(scene.source, rule).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in &models {
        let s = DVector::from_fn(model.n_columns(), |i, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.5f64.powi(i as i32)
        });
        let u = reconstruct_velocity_z(model, &s, k0, &grid.points, &scene.air).unwrap();
        let pu = reconstruct_pressure(model, &s, k0, &up).unwrap();
        let pd = reconstruct_pressure(model, &s, k0, &down).unwrap();
        let scale = -C64::new(0.0, k0 * scene.air.impedance()).inv();
        let worst = u
            .iter()
            .zip(pu.iter().zip(&pd))
            .map(|(&u, (&a, &b))| rel((a - b) / (2.0 * h) * scale, u))
            .fold(0.0, f64::max);
        ok &= worst < 1e-4;
        lines.push(format!("{} {worst:.1e}", model.label()));
    }
    report(8, ok, format!("max pointwise relative error on 21x21 grid: {} (< 1e-4)", lines.join(", ")));
}

#[test]
fn c09_model_matched_recovery() {
    let scene = Scene64::pet(vec![500.0]).unwrap();
    let k0 = scene.air.wavenumber(500.0);
    let rule = QuadratureRule::for_scheme(Scheme::Legendre, 4, 1.0).unwrap();
    let model = SourceModel::dcism(scene.source, rule).unwrap();
    let g = model.kernel(&standard_array::<f64>(0).unwrap().points, k0).unwrap().g;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s_true = DVector::from_fn(model.n_columns(), |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p: Vec<C64> = (&g * &s_true).iter().copied().collect();
    let sys = SvdSystem::new(&g, &p).unwrap();
    let pick = sys.lcurve().unwrap();
    let lambda = if pick.degenerate { 0.0 } else { pick.lambda };
    let err = |l: f64| (&sys.solve(l).unwrap().s_tilde - &s_true).norm() / s_true.norm();
    let (mut used, mut e) = (lambda, err(lambda));
    if e >= 1e-6 && lambda > 0.0 {
        used = 0.0;
        e = err(0.0);
    }
    let sv = sys.singular_values();
    report(
        9,
        e < 1e-6,
        format!(
            "relative error {e:.2e} at lambda {used:.1e} (L-curve {:.1e}, condition {:.1e}) (< 1e-6)",
            pick.lambda,
            sv[0] / sv[sv.len() - 1]
        ),
    );
}

#[test]
fn c10_melamine_array_study() {
    let study = Study::new(Scene64::melamine(bands()).unwrap());
    let full = standard_array::<f64>(0).unwrap();
    let f = &study.scene.frequencies;
    let model = {
        let rule = QuadratureRule::for_scheme(Scheme::Legendre, 25, 30.0).unwrap();
        SourceModel::dcism(study.scene.source, rule).unwrap()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let mut anomaly = String::new();
    for id in 0..=3u8 {
        let sub = standard_array::<f64>(id).unwrap();
        let rows = full.indices_of(&sub, 1e-9).unwrap();
        let meas = study.clean.select_rows(&rows, sub.label.clone()).unwrap();
        let (alpha, _) = study.seed_mean(&meas, &model);
        let (f_min, tol) = if id <= 1 { (250.0, 0.05) } else { (500.0, 0.1) };
        let (mut worst, mut at) = (0.0, 0.0);
        for ((&fc, a), r) in f.iter().zip(&alpha).zip(&study.reference) {
            if fc > f_min && (a - r).abs() > worst {
                worst = (a - r).abs();
                at = fc;
            }
        }
        ok &= worst <= tol;
        parts.push(format!("array {id} max |Δα| {worst:.3} at {at:.0} Hz (<= {tol})"));
        if id == 2 {
            let near: Vec<String> = f
                .iter()
                .zip(alpha.iter().zip(&study.reference))
                .filter(|(&fc, _)| (1500.0..=2600.0).contains(&fc))
                .map(|(fc, (a, r))| format!("{fc:.0}:{:+.3}", a - r))
                .collect();
            anomaly = near.join(" ");
        }
    }
    println!("criterion 10: array 2 Δα near 2 kHz (logged only): {anomaly}");
    report(10, ok, parts.join("; "));
}

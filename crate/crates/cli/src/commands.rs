use std::path::{Path, PathBuf};

use cisim::field::{field_matrix, simulate_measurement, spherical_reference_alpha};
use cisim::geometry::standard_array;
use cisim::inverse::ColumnKind;
use cisim::material::{absorption_from_impedance, helmholtz_surface_impedance};
use cisim::measurement::add_noise;
use cisim::reconstruction::{absorption_pipeline, plane_wave_alpha};
use cisim::{QuadratureRule, Scene64, Scheme, SommerfeldOptions};

use crate::config::{ExperimentConfig, ReferenceKind};
use crate::error::CliError;
use crate::table::{self, header, num, read_absorption, AbsorptionRows, Table, ABSORPTION_HEADER};

pub const MEASUREMENT_FILE: &str = "measurement.csv";

/// Amplitudes below this fraction of `‖p‖` count as inactive.
const ACTIVE_THRESHOLD: f64 = 1e-7;

pub struct Context {
    pub config: ExperimentConfig,
    /// Directory relative paths in the config resolve against.
    pub base: PathBuf,
    pub out: PathBuf,
}

impl Context {
    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// The forward model covers a bare porous layer only.
fn forward_scene(cfg: &ExperimentConfig) -> Result<Scene64, CliError> {
    if cfg.scene.panel.is_some() {
        return Err(CliError::Config(
            "the field simulation has no panel model; the panel only feeds the plane-wave reference".into(),
        ));
    }
    cfg.scene()
}

pub fn simulate(ctx: &Context) -> Result<PathBuf, CliError> {
    let cfg = &ctx.config;
    let scene = forward_scene(cfg)?;
    let array = cfg.array(&ctx.base)?;
    let mut meas = simulate_measurement(&scene, &array, &SommerfeldOptions::default())?;
    if let Some(noise) = &cfg.noise {
        meas = add_noise(&meas, noise.snr_db, noise.seed)?;
    }
    let path = ctx.out_file(MEASUREMENT_FILE);
    table::write_measurement(&path, &cfg.hash(), &meas)?;
    eprintln!(
        "simulated {} receivers x {} frequencies -> {}",
        meas.array.len(),
        meas.frequencies.len(),
        path.display()
    );
    Ok(path)
}

/// Number of frequencies that failed, summed over schemes.
pub fn invert(ctx: &Context, measurement: &Path, with_nmse: bool) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let meas = table::read_measurement(measurement)?;
    let mut scene = if with_nmse { forward_scene(cfg)? } else { cfg.scene()? };
    scene.frequencies = meas.frequencies.clone();
    let grid = cfg.grid()?;
    let truth = if with_nmse {
        Some(field_matrix(&scene, &grid.points, &SommerfeldOptions::default())?)
    } else {
        None
    };
    let hash = cfg.hash();
    let mut failures = 0;
    for sc in &cfg.schemes {
        let model = sc.model(scene.source)?;
        let stem = sc.stem();
        let result = absorption_pipeline(&meas, &model, &scene.air, &grid.points, truth.as_ref())?;

        let mut abs = Table::create(&ctx.out_file(&format!("absorption_{stem}.csv")), &hash, &header(&ABSORPTION_HEADER))?;
        let mut diag = Table::create(
            &ctx.out_file(&format!("diagnostics_{stem}.csv")),
            &hash,
            &header(&[
                "f_hz",
                "lambda",
                "residual_norm",
                "solution_norm",
                "sigma_max",
                "sigma_min",
                "n_active_sources",
                "lcurve_degenerate",
                "error",
            ]),
        )?;
        let mut src = Table::create(
            &ctx.out_file(&format!("sources_{stem}.csv")),
            &hash,
            &header(&["f_hz", "index", "kind", "xi", "abs_s"]),
        )?;
        let kinds = model.column_kinds();
        for (col, (f, est)) in result.frequencies.iter().zip(&result.estimates).enumerate() {
            let f = num(*f);
            let est = match est {
                Ok(e) => e,
                Err(e) => {
                    failures += 1;
                    eprintln!("warning: {stem}: {e}");
                    let nan = num(f64::NAN);
                    abs.row(&[&f, &nan, &nan, &nan, &nan, &nan, &nan, &nan, &stem])?;
                    diag.row(&[&f, &nan, &nan, &nan, &nan, &nan, "0", "", &e.to_string()])?;
                    continue;
                }
            };
            let sol = &est.solution.solve;
            let opt = |x: Option<f64>| num(x.unwrap_or(f64::NAN));
            abs.row(&[
                f.clone(),
                num(est.zs_avg.re),
                num(est.zs_avg.im),
                num(est.alpha),
                num(est.alpha.clamp(0.0, 1.0)),
                opt(est.nmse_p),
                opt(est.nmse_uz),
                num(sol.lambda),
                stem.clone(),
            ])?;
            let p_norm = meas.pressures.column(col).norm();
            let sv = &sol.singular_values;
            diag.row(&[
                f.clone(),
                num(sol.lambda),
                num(sol.residual_norm),
                num(sol.solution_norm),
                num(sv.first().copied().unwrap_or(f64::NAN)),
                num(sv.last().copied().unwrap_or(f64::NAN)),
                sol.active_sources(ACTIVE_THRESHOLD * p_norm).to_string(),
                est.solution.lcurve.degenerate.to_string(),
                String::new(),
            ])?;
            for (i, (s, kind)) in sol.s_tilde.iter().zip(&kinds).enumerate() {
                let (name, xi) = match kind {
                    ColumnKind::Source => ("source", f64::NAN),
                    ColumnKind::Image => ("image", f64::NAN),
                    ColumnKind::ComplexNode { xi, .. } => ("complex", *xi),
                };
                src.row(&[f.clone(), i.to_string(), name.to_string(), num(xi), num(s.norm())])?;
            }
        }
        abs.finish()?;
        diag.finish()?;
        src.finish()?;
        eprintln!("{stem}: {} frequencies -> {}", result.frequencies.len(), ctx.out.display());
    }
    Ok(failures)
}

/// Plane- and spherical-wave reference absorption for the configured scene.
fn references(cfg: &ExperimentConfig, scene: &Scene64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let panel = cfg.panel()?;
    let mut plane = Vec::new();
    let mut spherical = Vec::new();
    for &f in &scene.frequencies {
        let a = match &panel {
            Some(p) => {
                let z = helmholtz_surface_impedance(p, &scene.material, &scene.air, 2.0 * std::f64::consts::PI * f)?;
                absorption_from_impedance(z / scene.air.impedance(), 0.0)?
            }
            None => plane_wave_alpha(&scene.material, &scene.air, f)?,
        };
        plane.push(a);
        spherical.push(match panel {
            Some(_) => f64::NAN,
            None => spherical_reference_alpha(scene, f, &SommerfeldOptions::default())?,
        });
    }
    Ok((plane, spherical))
}

fn same_axis(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
}

/// Verdict for one results file against the reference curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub scheme: String,
    pub max_abs_dalpha: f64,
    pub f_at_max: f64,
    pub pass: bool,
}

pub fn compare(ctx: &Context, results: &[PathBuf], reference_file: Option<&Path>) -> Result<Vec<Verdict>, CliError> {
    let cfg = &ctx.config;
    let files: Vec<PathBuf> = if results.is_empty() {
        cfg.schemes
            .iter()
            .map(|s| ctx.out_file(&format!("absorption_{}.csv", s.stem())))
            .collect()
    } else {
        results.to_vec()
    };
    let runs: Vec<AbsorptionRows> = files.iter().map(|p| read_absorption(p)).collect::<Result<_, _>>()?;
    let axis = runs[0].frequencies.clone();
    for (r, p) in runs.iter().zip(&files) {
        if !same_axis(&r.frequencies, &axis) {
            return Err(CliError::Config(format!("{}: frequency axis differs from {}", p.display(), files[0].display())));
        }
    }
    let external = reference_file.map(read_absorption).transpose()?;
    if let Some(e) = &external {
        if !same_axis(&e.frequencies, &axis) {
            return Err(CliError::Config("reference file has a different frequency axis".into()));
        }
    }

    let mut scene = cfg.scene()?;
    scene.frequencies = axis.clone();
    let (plane, spherical) = references(cfg, &scene)?;
    let (reference, ref_name) = match (&external, cfg.compare.reference) {
        (Some(e), _) => (e.alpha.clone(), format!("file:{}", e.scheme)),
        (None, ReferenceKind::Plane) => (plane.clone(), "plane".to_string()),
        (None, ReferenceKind::Spherical) => {
            if cfg.scene.panel.is_some() {
                return Err(CliError::Config("spherical reference needs a porous scene without a panel".into()));
            }
            (spherical.clone(), "spherical".to_string())
        }
    };

    let hash = cfg.hash();
    let mut head = header(&["f_hz", "alpha_plane", "alpha_spherical", "alpha_reference"]);
    for r in &runs {
        head.push(format!("alpha_{}", r.scheme));
        head.push(format!("dalpha_{}", r.scheme));
        head.push(format!("nmse_p_{}", r.scheme));
    }
    let mut merged = Table::create(&ctx.out_file("comparison.csv"), &hash, &head)?;
    for (i, f) in axis.iter().enumerate() {
        let mut row = vec![num(*f), num(plane[i]), num(spherical[i]), num(reference[i])];
        for r in &runs {
            row.push(num(r.alpha[i]));
            row.push(num(r.alpha[i] - reference[i]));
            row.push(num(r.nmse_p[i]));
        }
        merged.row(&row)?;
    }
    merged.finish()?;

    let (tol, f_min) = (cfg.compare.tolerance, cfg.compare.f_min_hz);
    let mut summary = Table::create(
        &ctx.out_file("summary.csv"),
        &hash,
        &header(&["scheme", "reference", "f_min_hz", "tolerance", "max_abs_dalpha", "f_at_max_hz", "verdict"]),
    )?;
    let mut verdicts = Vec::new();
    for r in &runs {
        let mut v = Verdict {
            scheme: r.scheme.clone(),
            max_abs_dalpha: 0.0,
            f_at_max: f64::NAN,
            pass: true,
        };
        for (i, &f) in axis.iter().enumerate().filter(|(_, &f)| f >= f_min) {
            let d = (r.alpha[i] - reference[i]).abs();
            // a NaN estimate fails the check
            if !(d <= v.max_abs_dalpha) {
                v.max_abs_dalpha = if d.is_nan() { f64::INFINITY } else { d };
                v.f_at_max = f;
            }
        }
        v.pass = v.max_abs_dalpha <= tol;
        let word = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{word} {}: max |dalpha| {:.4} at {} Hz vs {ref_name} (tolerance {tol}, f >= {f_min} Hz)",
            v.scheme,
            v.max_abs_dalpha,
            num(v.f_at_max)
        );
        summary.row(&[
            v.scheme.clone(),
            ref_name.clone(),
            num(f_min),
            num(tol),
            num(v.max_abs_dalpha),
            num(v.f_at_max),
            word.to_string(),
        ])?;
        verdicts.push(v);
    }
    summary.finish()?;
    Ok(verdicts)
}

pub fn arrays(id: Option<u8>, out: Option<&Path>) -> Result<(), CliError> {
    let ids: Vec<u8> = match id {
        Some(i) => vec![i],
        None => (0..=3).collect(),
    };
    for i in ids {
        let a = standard_array::<f64>(i).map_err(|e| CliError::Config(e.to_string()))?;
        let span = |f: fn(&cisim::Point3<f64>) -> f64| {
            let v = a.points.iter().map(f);
            let lo = v.clone().fold(f64::INFINITY, f64::min);
            let hi = v.fold(f64::NEG_INFINITY, f64::max);
            format!("[{lo:.3}, {hi:.3}]")
        };
        println!(
            "array {i}: {:3} receivers  x {}  y {}  z {}",
            a.len(),
            span(|p| p.x),
            span(|p| p.y),
            span(|p| p.z)
        );
        if let Some(dir) = out {
            let path = dir.join(format!("array_{i}.csv"));
            let mut t = Table::create(&path, "none", &header(&["x_m", "y_m", "z_m"]))?;
            for p in &a.points {
                t.row(&[num(p.x), num(p.y), num(p.z)])?;
            }
            t.finish()?;
        }
    }
    Ok(())
}

pub fn quad(scheme: Scheme, n: usize, b: f64) -> Result<(), CliError> {
    let rule = QuadratureRule::for_scheme(scheme, n, b).map_err(|e| CliError::Config(e.to_string()))?;
    let jac = rule.jacobian();
    println!("index,xi,weight,scaled_weight");
    for (i, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        println!("{i},{},{},{}", num(*x), num(*w), num(jac * w));
    }
    Ok(())
}

/// Noise-free pressures straight from the forward model, used by tests.
#[cfg(test)]
pub(crate) fn direct(cfg: &ExperimentConfig) -> cisim::Measurement64 {
    let scene = cfg.scene().unwrap();
    simulate_measurement(&scene, &cfg.array(Path::new(".")).unwrap(), &SommerfeldOptions::default()).unwrap()
}

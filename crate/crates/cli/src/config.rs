//! Experiment configuration file.
//!
//! All physical quantities are SI with the unit in the key name. Unknown keys
//! are rejected so that typos surface as configuration errors.

use std::path::{Path, PathBuf};

use cisim::geometry::{build_reconstruction_grid, standard_array};
use cisim::measurement::octave_band_centres;
use cisim::{
    AirProperties, Array64, Grid64, LineUnits, Model64, Point3, PorousMaterial, QuadratureRule, Scene64, Scheme,
    SlottedPanel, C64,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

const MAX_FREQUENCY_HZ: f64 = 20_000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    pub schemes: Vec<SchemeConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub compare: CompareConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Pet,
    Melamine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// Sample and source placement used for anything not given explicitly.
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub air: Option<AirConfig>,
    #[serde(default)]
    pub source_m: Option<[f64; 3]>,
    /// `[re, im]`, kg/s².
    #[serde(default)]
    pub source_strength: Option<[f64; 2]>,
    #[serde(default)]
    pub material: Option<MaterialConfig>,
    /// Slotted panel over the porous layer; only used for plane-wave references.
    #[serde(default)]
    pub panel: Option<PanelConfig>,
    #[serde(default)]
    pub frequencies_hz: Option<Vec<f64>>,
    #[serde(default)]
    pub band: Option<BandConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirConfig {
    pub rho0_kg_m3: f64,
    pub c0_m_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// Flow resistivity, N·s/m⁴.
    pub sigma: f64,
    pub phi: f64,
    pub alpha_inf: f64,
    pub lambda_um: f64,
    pub lambda_prime_um: f64,
    pub thickness_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub t_m: f64,
    pub w_m: f64,
    pub theta_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    /// Bands per octave, e.g. 6 for 1/6-octave.
    pub fraction: u32,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArrayConfig {
    Id { id: u8 },
    Points { points_m: Vec<[f64; 3]> },
    File { file: PathBuf },
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig::Id { id: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "ISM")]
    Ism,
    #[serde(rename = "MP")]
    Mp,
    #[serde(rename = "GLE")]
    Gle,
    #[serde(rename = "GLA")]
    Gla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UnitsConfig {
    /// Line coordinate in metres.
    #[default]
    #[serde(rename = "m")]
    Metres,
    /// Line coordinate scaled by `1/k0`.
    #[serde(rename = "k0")]
    Wavenumber,
}

fn default_n() -> usize {
    25
}

fn default_b() -> f64 {
    30.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default)]
    pub units: UnitsConfig,
}

impl SchemeConfig {
    /// File-name stem, unique within a validated config.
    pub fn stem(&self) -> String {
        match self.kind {
            SchemeKind::Ism => "ism".into(),
            k => {
                let tag = match k {
                    SchemeKind::Mp => "mp",
                    SchemeKind::Gle => "gle",
                    _ => "gla",
                };
                let mut s = format!("dcism-{tag}-n{}", self.n);
                if k != SchemeKind::Gla {
                    s += &format!("-b{}", self.b);
                }
                if self.units == UnitsConfig::Wavenumber {
                    s += "-k0";
                }
                s
            }
        }
    }

    pub fn model(&self, source: Point3<f64>) -> cisim::Result<Model64> {
        let scheme = match self.kind {
            SchemeKind::Ism => return Model64::ism(source),
            SchemeKind::Mp => Scheme::Midpoint,
            SchemeKind::Gle => Scheme::Legendre,
            SchemeKind::Gla => Scheme::Laguerre,
        };
        let units = match self.units {
            UnitsConfig::Metres => LineUnits::Metres,
            UnitsConfig::Wavenumber => LineUnits::Wavenumber,
        };
        Ok(Model64::dcism(source, QuadratureRule::for_scheme(scheme, self.n, self.b)?)?.with_units(units))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub side_m: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { side_m: 0.10, n: 21 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    #[default]
    Spherical,
    Plane,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default)]
    pub reference: ReferenceKind,
    /// Largest accepted `|Δα|`.
    pub tolerance: f64,
    /// Frequencies below this are reported but not judged.
    pub f_min_hz: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceKind::Spherical,
            tolerance: 0.05,
            f_min_hz: 250.0,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schemes.is_empty() {
            return Err(bad("at least one scheme is required"));
        }
        let mut stems: Vec<String> = self.schemes.iter().map(SchemeConfig::stem).collect();
        stems.sort();
        if stems.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("schemes must be distinct"));
        }
        for s in &self.schemes {
            if s.kind != SchemeKind::Ism && s.n == 0 {
                return Err(bad("scheme order n must be at least 1"));
            }
            if !(s.b > 0.0 && s.b.is_finite()) {
                return Err(bad("scheme upper limit b must be positive"));
            }
        }
        if let Some(noise) = &self.noise {
            if noise.snr_db.is_nan() {
                return Err(bad("snr_db must be a number"));
            }
        }
        let f = self.frequencies()?;
        if f.iter().any(|&x| !(x > 0.0 && x <= MAX_FREQUENCY_HZ)) {
            return Err(bad(format!("frequencies must lie in (0, {MAX_FREQUENCY_HZ}] Hz")));
        }
        self.scene()?;
        self.grid()?;
        self.compare_tolerance()?;
        Ok(())
    }

    fn compare_tolerance(&self) -> Result<(), CliError> {
        let c = &self.compare;
        if !(c.tolerance >= 0.0 && c.f_min_hz >= 0.0) {
            return Err(bad("compare tolerance and f_min_hz must be non-negative"));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Result<Vec<f64>, CliError> {
        match (&self.scene.frequencies_hz, &self.scene.band) {
            (Some(f), None) => {
                if f.is_empty() {
                    return Err(bad("frequency list is empty"));
                }
                Ok(f.clone())
            }
            (None, Some(b)) => octave_band_centres(b.fraction, b.f_lo_hz, b.f_hi_hz).map_err(|e| bad(e.to_string())),
            _ => Err(bad("give exactly one of scene.frequencies_hz and scene.band")),
        }
    }

    pub fn material(&self) -> Result<PorousMaterial<f64>, CliError> {
        match (&self.scene.material, self.scene.preset) {
            (Some(m), _) => PorousMaterial::new(
                m.sigma,
                m.phi,
                m.alpha_inf,
                m.lambda_um / 1e6,
                m.lambda_prime_um / 1e6,
                m.thickness_m,
            )
            .map_err(|e| bad(e.to_string())),
            (None, Some(Preset::Pet)) => Ok(PorousMaterial::pet()),
            (None, Some(Preset::Melamine)) => Ok(PorousMaterial::melamine()),
            (None, None) => Err(bad("scene needs a material or a preset")),
        }
    }

    pub fn panel(&self) -> Result<Option<SlottedPanel<f64>>, CliError> {
        self.scene
            .panel
            .as_ref()
            .map(|p| SlottedPanel::new(p.t_m, p.w_m, p.theta_ratio).map_err(|e| bad(e.to_string())))
            .transpose()
    }

    pub fn scene(&self) -> Result<Scene64, CliError> {
        let freqs = self.frequencies()?;
        let material = self.material()?;
        self.panel()?;
        let mut scene = match self.scene.preset {
            Some(Preset::Melamine) => Scene64::melamine(freqs),
            _ => Scene64::pet(freqs),
        }
        .map_err(|e| bad(e.to_string()))?;
        scene.material = material;
        if let Some(a) = &self.scene.air {
            scene.air = AirProperties::with_density_and_speed(a.rho0_kg_m3, a.c0_m_s).map_err(|e| bad(e.to_string()))?;
        }
        if let Some([x, y, z]) = self.scene.source_m {
            scene.source = Point3::new(x, y, z);
        }
        if let Some([re, im]) = self.scene.source_strength {
            scene.strength = C64::new(re, im);
        }
        scene.validate().map_err(|e| bad(e.to_string()))?;
        Ok(scene)
    }

    /// Resolves the array, reading a geometry file relative to `base`.
    pub fn array(&self, base: &Path) -> Result<Array64, CliError> {
        match &self.array {
            ArrayConfig::Id { id } => standard_array(*id).map_err(|e| bad(e.to_string())),
            ArrayConfig::Points { points_m } => {
                let pts = points_m.iter().map(|&[x, y, z]| Point3::new(x, y, z)).collect();
                Array64::new(pts, "custom").map_err(|e| bad(e.to_string()))
            }
            ArrayConfig::File { file } => {
                let path = base.join(file);
                let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
                Array64::read_csv(f, path.display().to_string()).map_err(|e| bad(e.to_string()))
            }
        }
    }

    pub fn grid(&self) -> Result<Grid64, CliError> {
        build_reconstruction_grid(self.grid.side_m, self.grid.n).map_err(|e| bad(e.to_string()))
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

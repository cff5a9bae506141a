//! Microphone arrays and the surface reconstruction grid.
//!
//! Points are ordered with x as the outer loop and y as the inner loop,
//! lower layer first.

use std::io::{Read, Write};

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::num::Real;

/// Height of the lower microphone layer above the sample, m.
pub const DEFAULT_Z_LOW: f64 = 0.013;
/// Separation between the two microphone layers, m.
pub const DEFAULT_LAYER_GAP: f64 = 0.029;

/// Ordered receiver coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T: Real> {
    pub points: Vec<Point3<T>>,
    pub label: String,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn new(points: Vec<Point3<T>>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("array must contain at least one point"));
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(Error::invalid("array coordinates must be finite"));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps only the points accepted by `keep`, preserving order.
    pub fn subset(&self, label: impl Into<String>, keep: impl Fn(&Point3<T>) -> bool) -> Result<Self> {
        Self::new(self.points.iter().copied().filter(|p| keep(p)).collect(), label)
    }

    /// Indices in `self` of the points of `other`, matched within `tol`.
    pub fn indices_of(&self, other: &ArrayGeometry<T>, tol: T) -> Option<Vec<usize>> {
        other
            .points
            .iter()
            .map(|q| self.points.iter().position(|p| (p - q).norm() <= tol))
            .collect()
    }

    /// Writes `x_m,y_m,z_m` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x_m", "y_m", "z_m"])?;
        for p in &self.points {
            wtr.write_record([
                p.x.to_f64_lossy().to_string(),
                p.y.to_f64_lossy().to_string(),
                p.z.to_f64_lossy().to_string(),
            ])?;
        }
        wtr.flush()
    }

    /// Reads the format produced by [`ArrayGeometry::write_csv`]. Lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(r: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::invalid(format!("geometry csv row {i}: {e}")))?;
            if rec.len() < 3 {
                return Err(Error::invalid(format!("geometry csv row {i}: expected 3 columns")));
            }
            let mut xyz = [T::zero(); 3];
            for (k, v) in xyz.iter_mut().enumerate() {
                let f: f64 = rec[k]
                    .parse()
                    .map_err(|e| Error::invalid(format!("geometry csv row {i}: {e}")))?;
                *v = T::lit(f);
            }
            points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        }
        Self::new(points, label)
    }
}

fn lattice<T: Real>(span: (T, T), n: usize, axis: &str) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::invalid(format!("{axis} count must be >= 1")));
    }
    if !(span.0.is_finite() && span.1.is_finite()) {
        return Err(Error::invalid(format!("{axis} span must be finite")));
    }
    if n == 1 {
        return Ok(vec![(span.0 + span.1) / T::lit(2.0)]);
    }
    if !(span.1 > span.0) {
        return Err(Error::invalid(format!("degenerate {axis} span with {n} points")));
    }
    let step = (span.1 - span.0) / T::from_usize(n - 1).unwrap();
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                span.1
            } else {
                span.0 + step * T::from_usize(i).unwrap()
            }
        })
        .collect())
}

/// Regular `nx × ny` lattice repeated at `z_low` and `z_low + layer_gap`.
pub fn build_double_layer_array<T: Real>(
    x_span: (T, T),
    y_span: (T, T),
    nx: usize,
    ny: usize,
    z_low: T,
    layer_gap: T,
) -> Result<ArrayGeometry<T>> {
    if !(z_low > T::zero()) {
        return Err(Error::invalid("lower layer must lie above the surface"));
    }
    if !(layer_gap >= T::zero()) {
        return Err(Error::invalid("layer gap must be non-negative"));
    }
    let xs = lattice(x_span, nx, "x")?;
    let ys = lattice(y_span, ny, "y")?;
    let mut points = Vec::with_capacity(2 * nx * ny);
    for z in [z_low, z_low + layer_gap] {
        for &x in &xs {
            for &y in &ys {
                points.push(Point3::new(x, y, z));
            }
        }
    }
    ArrayGeometry::new(points, format!("double layer {nx}x{ny}"))
}

/// Array 0: 11 × 12 lattice over 0.57 × 0.65 m, two layers, 264 points.
fn array0<T: Real>() -> ArrayGeometry<T> {
    let mut a = build_double_layer_array(
        (T::lit(-0.285), T::lit(0.285)),
        (T::lit(-0.325), T::lit(0.325)),
        11,
        12,
        T::lit(DEFAULT_Z_LOW),
        T::lit(DEFAULT_LAYER_GAP),
    )
    .expect("array 0 parameters are valid");
    a.label = "Array 0".into();
    a
}

/// The four measurement arrays.
///
/// Arrays 1–3 are the Array 0 lattice points inside the nominal x/y spans,
/// with each span widened by a quarter of the lattice pitch so that the
/// nominal apertures (quoted to the nearest 5 mm) select the intended rows.
pub fn standard_array<T: Real>(id: u8) -> Result<ArrayGeometry<T>> {
    let base = array0::<T>();
    let (x_span, y_span) = match id {
        0 => return Ok(base),
        1 => ((-0.055, 0.055), (-0.150, 0.150)),
        2 => ((0.0, 0.055), (0.0, 0.150)),
        3 => ((0.0, 0.0), (0.0, 0.150)),
        _ => return Err(Error::invalid(format!("unknown array id {id} (expected 0..=3)"))),
    };
    let x_tol = T::lit(0.25 * 0.570 / 10.0);
    let y_tol = T::lit(0.25 * 0.650 / 11.0);
    let inside = |v: T, span: (f64, f64), tol: T| v >= T::lit(span.0) - tol && v <= T::lit(span.1) + tol;
    base.subset(format!("Array {id}"), |p| inside(p.x, x_span, x_tol) && inside(p.y, y_span, y_tol))
}

/// Regular `nx × ny` lattice on the surface `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionGrid<T: Real> {
    pub points: Vec<Point3<T>>,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Real> ReconstructionGrid<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n × n` grid centred at the origin covering `side × side` at `z = 0`.
pub fn build_reconstruction_grid<T: Real>(side: T, n: usize) -> Result<ReconstructionGrid<T>> {
    if !(side >= T::zero() && side.is_finite()) {
        return Err(Error::invalid("grid side must be non-negative"));
    }
    let half = side / T::lit(2.0);
    let axis = if n > 1 && side == T::zero() {
        return Err(Error::invalid("zero side with more than one point"));
    } else {
        lattice((-half, half), n, "grid")?
    };
    let mut points = Vec::with_capacity(n * n);
    for &x in &axis {
        for &y in &axis {
            points.push(Point3::new(x, y, T::zero()));
        }
    }
    Ok(ReconstructionGrid { points, nx: n, ny: n })
}

impl<T: Real> Default for ReconstructionGrid<T> {
    /// 10 × 10 cm, 21 × 21 points.
    fn default() -> Self {
        build_reconstruction_grid(T::lit(0.10), 21).expect("default grid is valid")
    }
}

//! Measured (or simulated) pressures and additive sensor noise.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::check_frequencies;
use crate::geometry::ArrayGeometry;
use crate::num::{cabs2, cplx, Cplx, Real};

/// Complex pressures, receivers × frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T: Real> {
    pub array: ArrayGeometry<T>,
    pub frequencies: Vec<T>,
    pub pressures: DMatrix<Cplx<T>>,
}

impl<T: Real> MeasurementSet<T> {
    pub fn new(array: ArrayGeometry<T>, frequencies: Vec<T>, pressures: DMatrix<Cplx<T>>) -> Result<Self> {
        check_frequencies(&frequencies)?;
        if pressures.shape() != (array.len(), frequencies.len()) {
            return Err(Error::Dimension(format!(
                "pressure matrix is {:?}, expected ({}, {})",
                pressures.shape(),
                array.len(),
                frequencies.len()
            )));
        }
        Ok(Self {
            array,
            frequencies,
            pressures,
        })
    }

    /// Pressures at frequency index `col`.
    pub fn column(&self, col: usize) -> Vec<Cplx<T>> {
        self.pressures.column(col).iter().copied().collect()
    }

    /// Restricts the set to the rows in `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize], label: impl Into<String>) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.array.len()) {
            return Err(Error::Dimension(format!("row {bad} out of range")));
        }
        let points = rows.iter().map(|&r| self.array.points[r]).collect();
        let array = ArrayGeometry::new(points, label)?;
        let p = self.pressures.select_rows(rows);
        Self::new(array, self.frequencies.clone(), p)
    }
}

/// Centre frequencies `1000·2^{n/fraction}` of the fractional-octave bands
/// that overlap `[f_lo, f_hi]`.
///
/// A band spans `f_c·2^{±1/(2·fraction)}`, so the 1/6-octave bands covering
/// 100 Hz to 4 kHz start at 99.2 Hz.
pub fn octave_band_centres<T: Real>(fraction: u32, f_lo: T, f_hi: T) -> Result<Vec<T>> {
    let (lo, hi) = (f_lo.to_f64_lossy(), f_hi.to_f64_lossy());
    if fraction == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid("octave bands need fraction > 0 and 0 < f_lo <= f_hi"));
    }
    let b = fraction as f64;
    let half = 2f64.powf(0.5 / b);
    let first = (b * (lo / half / 1000.0).log2()).ceil() as i64;
    let last = (b * (hi * half / 1000.0).log2()).floor() as i64;
    Ok((first..=last)
        .map(|n| 1000.0 * 2f64.powf(n as f64 / b))
        .filter(|&fc| fc * half >= lo && fc / half <= hi)
        .map(T::lit)
        .collect())
}

/// Adds circular complex Gaussian noise at `snr_db` per frequency column.
///
/// Noise power for a column is its mean signal power divided by
/// `10^{snr_db/10}`. An infinite SNR returns the data unchanged. Draws are
/// taken column by column from a single seeded stream.
pub fn add_noise<T: Real>(data: &MeasurementSet<T>, snr_db: T, seed: u64) -> Result<MeasurementSet<T>> {
    if snr_db != snr_db || !snr_db.is_finite() && snr_db < T::zero() {
        return Err(Error::invalid("SNR must be a number above -inf"));
    }
    let mut out = data.clone();
    if !snr_db.is_finite() {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = data.pressures.nrows();
    let ratio = 10f64.powf(snr_db.to_f64_lossy() / 10.0);
    for mut col in out.pressures.column_iter_mut() {
        let power = col.iter().map(|&z| cabs2(z).to_f64_lossy()).sum::<f64>() / m as f64;
        let sd = (power / ratio / 2.0).sqrt();
        for z in col.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += cplx(T::lit(re * sd), T::lit(im * sd));
        }
    }
    Ok(out)
}

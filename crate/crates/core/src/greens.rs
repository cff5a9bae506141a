//! Free-space monopole Green's functions, real and complex-image sources.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::num::{cabs, cexp, cplx, principal_sqrt, real, Cplx, Real};

/// Monopole field `e^{shift − j k0 R}/R` and its derivative with respect to
/// the receiver height, for `R² = r² + w²` with a (possibly complex)
/// vertical offset `w` whose z-derivative is one.
pub(crate) fn monopole<T: Real>(r2: T, w: Cplx<T>, k0: T, shift: T) -> Result<(Cplx<T>, Cplx<T>)> {
    let radius = principal_sqrt(real(r2) + w * w);
    let mag = cabs(radius);
    if !(mag > T::zero()) {
        return Err(Error::Singularity("receiver coincides with a source".into()));
    }
    if w.im != T::zero() && radius.re <= T::lit(1e-12) * mag {
        return Err(Error::Singularity(format!("complex distance {radius} on the branch cut")));
    }
    let phase = cexp(cplx(shift, T::zero()) - cplx(T::zero(), k0) * radius);
    let g = if radius.im == T::zero() {
        phase * (T::one() / radius.re)
    } else {
        phase / radius
    };
    let dg = -(w * (cplx(T::zero(), k0) * radius + real(T::one())) * g) / (radius * radius);
    Ok((g, dg))
}

fn horizontal2<T: Real>(a: &Point3<T>, b: &Point3<T>) -> T {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// `e^{−j k0 R}/R` between two points.
pub fn greens_free<T: Real>(src: &Point3<T>, rec: &Point3<T>, k0: T) -> Result<Cplx<T>> {
    Ok(monopole(horizontal2(src, rec), real(rec.z - src.z), k0, T::zero())?.0)
}

/// Derivative of [`greens_free`] with respect to the receiver's z coordinate.
pub fn greens_free_dz<T: Real>(src: &Point3<T>, rec: &Point3<T>, k0: T) -> Result<Cplx<T>> {
    Ok(monopole(horizontal2(src, rec), real(rec.z - src.z), k0, T::zero())?.1)
}

/// Mirror image of `src` in the plane `z = 0`.
pub fn image_of<T: Real>(src: &Point3<T>) -> Point3<T> {
    Point3::new(src.x, src.y, -src.z)
}

/// Field of an image source at complex depth `−z_s + jq` (below the
/// surface, shifted along the imaginary axis), returned with its receiver
/// z-derivative. `R_c = sqrt(r² + (z_s + z_m − jq)²)` on the branch with
/// positive real part.
pub fn complex_image_greens<T: Real>(src: &Point3<T>, rec: &Point3<T>, q: T, k0: T) -> Result<(Cplx<T>, Cplx<T>)> {
    monopole(horizontal2(src, rec), cplx(src.z + rec.z, -q), k0, T::zero())
}

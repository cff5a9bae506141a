//! Bessel function of the first kind, order zero, for real arguments.

use crate::num::Real;

/// `J0(x)`.
///
/// Power series below a precision-dependent crossover, Hankel asymptotic
/// expansion above it. Accurate to a few ulps times the crossover
/// cancellation (about 1e-12 absolute in `f64`).
pub fn j0<T: Real>(x: T) -> T {
    let x = x.abs();
    if x <= crossover::<T>() {
        series(x)
    } else {
        hankel(x)
    }
}

fn crossover<T: Real>() -> T {
    // the asymptotic remainder at x is about exp(-2x); the series loses
    // about x/ln(10) digits to cancellation. Balance the two.
    let digits = -T::eps().ln();
    (digits / T::lit(3.0)).max(T::lit(8.0))
}

fn series<T: Real>(x: T) -> T {
    let q = -(x * x) / T::lit(4.0);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = T::one();
    for _ in 0..200 {
        term *= q / (k * k);
        sum += term;
        if term.abs() <= sum.abs() * T::eps() * T::lit(0.5) && term.abs() < T::eps() {
            break;
        }
        k += T::one();
    }
    sum
}

fn hankel<T: Real>(x: T) -> T {
    // J0(x) = sqrt(2/(πx)) [P cos(x − π/4) − Q sin(x − π/4)]
    let mut p = T::zero();
    let mut q = T::zero();
    let mut a = T::one();
    let mut prev = T::max_value().unwrap_or(T::lit(f64::MAX));
    let eight_x = T::lit(8.0) * x;
    for k in 0..60usize {
        let mag = a.abs();
        if mag > prev {
            break;
        }
        prev = mag;
        // P = 1 − a2 + a4 − …, Q = −a1 + a3 − …
        let alt = if (k / 2) % 2 == 0 { T::one() } else { -T::one() };
        if k % 2 == 0 {
            p += alt * a;
        } else {
            q -= alt * a;
        }
        if mag < T::eps() * T::lit(0.1) {
            break;
        }
        let kk = T::from_usize(2 * k + 1).unwrap();
        a *= kk * kk / (T::from_usize(k + 1).unwrap() * eight_x);
    }
    let phase = reduce_phase(x);
    (T::lit(2.0) / (T::pi() * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}

/// `x − π/4` reduced modulo 2π.
fn reduce_phase<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let r = x - (x / two_pi).floor() * two_pi;
    r - T::frac_pi_4()
}

//! Mid-point, Gauss–Legendre and Gauss–Laguerre rules for the complex
//! image line.
//!
//! Gauss nodes come from the eigenvalues of the Jacobi matrix and are then
//! polished by Newton steps on the three-term recurrence, which also yields
//! the derivative needed for the weights.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::num::Real;

/// Largest Gauss–Laguerre order accepted.
pub const MAX_LAGUERRE_ORDER: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Midpoint,
    Legendre,
    Laguerre,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Midpoint => "MP",
            Scheme::Legendre => "GLE",
            Scheme::Laguerre => "GLA",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MP" | "MIDPOINT" => Ok(Scheme::Midpoint),
            "GLE" | "LEGENDRE" => Ok(Scheme::Legendre),
            "GLA" | "LAGUERRE" => Ok(Scheme::Laguerre),
            _ => Err(Error::invalid(format!("unknown quadrature scheme '{s}'"))),
        }
    }
}

/// Nodes and weights. `b` is `None` on the reference interval and for
/// Laguerre rules.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub scheme: Scheme,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub b: Option<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Factor multiplying every weight in the kernel: `b/2` for mapped
    /// finite-interval rules, one otherwise.
    pub fn jacobian(&self) -> T {
        match (self.scheme, self.b) {
            (Scheme::Laguerre, _) | (_, None) => T::one(),
            (_, Some(b)) => b / T::lit(2.0),
        }
    }

    /// Builds the rule for `scheme` ready for use on the image line: finite
    /// rules are mapped onto `(0, b)`; `b` is ignored for Laguerre.
    pub fn for_scheme(scheme: Scheme, n: usize, b: T) -> Result<Self> {
        match scheme {
            Scheme::Midpoint => map_to_interval(&midpoint(n)?, b),
            Scheme::Legendre => map_to_interval(&gauss_legendre(n)?, b),
            Scheme::Laguerre => gauss_laguerre(n),
        }
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("quadrature order must be at least 1"))
    } else {
        Ok(())
    }
}

fn jacobi_eigenvalues<T: Real>(diag: impl Fn(usize) -> T, off: impl Fn(usize) -> T, n: usize) -> Vec<T> {
    let mut m = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag(i);
        if i + 1 < n {
            let b = off(i + 1);
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
    }
    let mut x: Vec<T> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    x
}

/// `(P_n(x), P_n'(x))`.
fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize(k).unwrap();
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize(n).unwrap();
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// `(L_n(x), L_n'(x))`.
fn laguerre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut l0 = T::one();
    let mut l1 = T::one() - x;
    for k in 1..n {
        let kf = T::from_usize(k).unwrap();
        let l2 = ((T::lit(2.0) * kf + T::one() - x) * l1 - kf * l0) / (kf + T::one());
        l0 = l1;
        l1 = l2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize(n).unwrap();
    let dl = nf * (l1 - l0) / x;
    (l1, dl)
}

fn newton<T: Real>(mut x: T, f: impl Fn(T) -> (T, T)) -> T {
    for _ in 0..4 {
        let (v, d) = f(x);
        if d == T::zero() {
            break;
        }
        let step = v / d;
        x -= step;
        if step.abs() <= T::eps() * x.abs().max(T::one()) {
            break;
        }
    }
    x
}

/// Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    check_order(n)?;
    let raw = jacobi_eigenvalues(
        |_| T::zero(),
        |k| {
            let kf = T::from_usize(k).unwrap();
            kf / (T::lit(4.0) * kf * kf - T::one()).sqrt()
        },
        n,
    );
    let mut nodes: Vec<T> = raw.into_iter().map(|x| newton(x, |x| legendre(n, x))).collect();
    // enforce exact symmetry, which the eigen-solver only gives to rounding
    for i in 0..n / 2 {
        let a = (nodes[n - 1 - i] - nodes[i]) / T::lit(2.0);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, d) = legendre(n, x);
            T::lit(2.0) / ((T::one() - x * x) * d * d)
        })
        .collect();
    Ok(QuadratureRule {
        scheme: Scheme::Legendre,
        nodes,
        weights,
        b: None,
    })
}

/// Panel-centre rule on `[−1, 1]` with weights `2/N`.
pub fn midpoint<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    check_order(n)?;
    let nf = T::from_usize(n).unwrap();
    let nodes = (0..n)
        .map(|i| (T::from_usize(2 * i + 1).unwrap() - nf) / nf)
        .collect();
    Ok(QuadratureRule {
        scheme: Scheme::Midpoint,
        nodes,
        weights: vec![T::lit(2.0) / nf; n],
        b: None,
    })
}

/// Gauss–Laguerre rule for `∫₀^∞ f(q) e^{−q} dq`.
pub fn gauss_laguerre<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    check_order(n)?;
    if n > MAX_LAGUERRE_ORDER {
        return Err(Error::invalid(format!(
            "Gauss-Laguerre order {n} exceeds {MAX_LAGUERRE_ORDER}"
        )));
    }
    let raw = jacobi_eigenvalues(
        |k| T::from_usize(2 * k + 1).unwrap(),
        |k| T::from_usize(k).unwrap(),
        n,
    );
    let nodes: Vec<T> = raw.into_iter().map(|x| newton(x, |x| laguerre(n, x))).collect();
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, d) = laguerre(n, x);
            T::one() / (x * d * d)
        })
        .collect();
    Ok(QuadratureRule {
        scheme: Scheme::Laguerre,
        nodes,
        weights,
        b: None,
    })
}

/// Maps a reference rule onto `(0, b)` via `ξ = (b/2)ξ′ + b/2`. Weights are
/// left untouched; the `b/2` Jacobian is reported by [`QuadratureRule::jacobian`].
pub fn map_to_interval<T: Real>(rule: &QuadratureRule<T>, b: T) -> Result<QuadratureRule<T>> {
    if !(b > T::zero() && b.is_finite()) {
        return Err(Error::invalid("interval length b must be positive"));
    }
    if rule.scheme == Scheme::Laguerre || rule.b.is_some() {
        return Err(Error::invalid("only reference-interval rules can be mapped"));
    }
    let half = b / T::lit(2.0);
    Ok(QuadratureRule {
        scheme: rule.scheme,
        nodes: rule.nodes.iter().map(|&x| half * x + half).collect(),
        weights: rule.weights.clone(),
        b: Some(b),
    })
}

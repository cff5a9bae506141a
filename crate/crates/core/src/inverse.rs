//! Image-source kernels and the regularised inverse problem.
//!
//! The measured pressures are modelled as `p = G s̃`, where the columns of
//! `G` are the fields of the real source, its mirror image and (for the
//! complex-image model) a quadrature-discretised line of images at complex
//! depths. `s̃` is recovered by Tikhonov regularisation with the parameter
//! chosen at the corner of the L-curve.

use nalgebra::{DMatrix, DVector, Point3, SVD};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greens::{image_of, monopole};
use crate::measurement::MeasurementSet;
use crate::num::{cabs, cabs2, cplx, is_finite_c, real, Cplx, Real};
use crate::quadrature::{QuadratureRule, Scheme};

/// How the reflected field is represented.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind<T> {
    /// Source plus one real image.
    Ism,
    /// Source, real image and a line of complex images at the rule's nodes.
    Dcism(QuadratureRule<T>),
}

/// Units of the complex-image line coordinate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineUnits {
    /// `q` is a length in metres: images sit at depth `−z_s + jq`.
    #[default]
    Metres,
    /// `q` is measured in units of `1/k0`: images sit at `−z_s + jq/k0`,
    /// so every node decays like `e^{−q}` whatever the frequency.
    Wavenumber,
}

/// Source position and reflection model; everything needed to build a
/// kernel for any set of points and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel<T: Real> {
    pub source: Point3<T>,
    pub kind: ModelKind<T>,
    pub units: LineUnits,
}

/// Role of one kernel column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnKind<T> {
    Source,
    Image,
    /// Complex image at depth offset `xi`; `prefactor` multiplies its Green's function.
    ComplexNode { xi: T, weight: T, prefactor: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T: Real> {
    pub g: DMatrix<Cplx<T>>,
    pub columns: Vec<ColumnKind<T>>,
    pub label: String,
    pub k0: T,
    pub source: Point3<T>,
    pub image: Point3<T>,
}

impl<T: Real> SourceModel<T> {
    pub fn ism(source: Point3<T>) -> Result<Self> {
        Self::new(source, ModelKind::Ism)
    }

    pub fn dcism(source: Point3<T>, rule: QuadratureRule<T>) -> Result<Self> {
        Self::new(source, ModelKind::Dcism(rule))
    }

    pub fn new(source: Point3<T>, kind: ModelKind<T>) -> Result<Self> {
        if !(source.z > T::zero() && source.x.is_finite() && source.y.is_finite()) {
            return Err(Error::invalid("source must lie strictly above the surface"));
        }
        if let ModelKind::Dcism(rule) = &kind {
            if rule.nodes.is_empty() || rule.nodes.len() != rule.weights.len() {
                return Err(Error::invalid("quadrature rule must have matching, non-empty nodes and weights"));
            }
            if rule.scheme != Scheme::Laguerre && rule.b.is_none() {
                return Err(Error::invalid("finite-interval rules must be mapped onto (0, b) first"));
            }
        }
        Ok(Self {
            source,
            kind,
            units: LineUnits::default(),
        })
    }

    pub fn with_units(mut self, units: LineUnits) -> Self {
        self.units = units;
        self
    }

    /// `ISM`, `DCISM-GLE` and so on.
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Ism => "ISM".into(),
            ModelKind::Dcism(rule) => format!("DCISM-{}", rule.scheme),
        }
    }

    /// Number of columns `Q`.
    pub fn n_columns(&self) -> usize {
        match &self.kind {
            ModelKind::Ism => 2,
            ModelKind::Dcism(rule) => 2 + rule.order(),
        }
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind<T>> {
        let mut cols = vec![ColumnKind::Source, ColumnKind::Image];
        if let ModelKind::Dcism(rule) = &self.kind {
            let jac = rule.jacobian();
            for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
                cols.push(ColumnKind::ComplexNode {
                    xi,
                    weight: w,
                    prefactor: jac * w,
                });
            }
        }
        cols
    }

    fn laguerre(&self) -> bool {
        matches!(&self.kind, ModelKind::Dcism(r) if r.scheme == Scheme::Laguerre)
    }

    /// Kernel entry and its z-derivative for one point and column.
    fn entry(&self, col: &ColumnKind<T>, p: &Point3<T>, k0: T) -> Result<(Cplx<T>, Cplx<T>)> {
        let s = &self.source;
        let dx = p.x - s.x;
        let dy = p.y - s.y;
        let r2 = dx * dx + dy * dy;
        match *col {
            ColumnKind::Source => monopole(r2, real(p.z - s.z), k0, T::zero()),
            ColumnKind::Image => monopole(r2, real(p.z + s.z), k0, T::zero()),
            ColumnKind::ComplexNode { xi, prefactor, .. } => {
                // Laguerre weights assume an e^{−q} factor, which is put back
                // into the exponent so overflow shows up as a non-finite entry.
                let shift = if self.laguerre() { xi } else { T::zero() };
                let depth = match self.units {
                    LineUnits::Metres => xi,
                    LineUnits::Wavenumber => xi / k0,
                };
                let (g, dg) = monopole(r2, cplx(p.z + s.z, -depth), k0, shift)?;
                Ok((g * prefactor, dg * prefactor))
            }
        }
    }

    fn build(&self, points: &[Point3<T>], k0: T, derivative: bool) -> Result<KernelMatrix<T>> {
        if !(k0 > T::zero() && k0.is_finite()) {
            return Err(Error::invalid("wavenumber must be positive"));
        }
        let cols = self.column_kinds();
        let mut g = DMatrix::from_element(points.len(), cols.len(), real(T::zero()));
        for (j, col) in cols.iter().enumerate() {
            for (i, p) in points.iter().enumerate() {
                let (v, dv) = self.entry(col, p, k0)?;
                let x = if derivative { dv } else { v };
                if !is_finite_c(x) {
                    return Err(Error::Divergence(format!(
                        "column {j} is not finite at point {i} (k0 = {k0}); reduce the quadrature order"
                    )));
                }
                g[(i, j)] = x;
            }
        }
        Ok(KernelMatrix {
            g,
            columns: cols,
            label: self.label(),
            k0,
            source: self.source,
            image: image_of(&self.source),
        })
    }

    /// Green's-function matrix at `points`.
    pub fn kernel(&self, points: &[Point3<T>], k0: T) -> Result<KernelMatrix<T>> {
        self.build(points, k0, false)
    }

    /// Matrix of z-derivatives of the kernel entries at `points`.
    pub fn kernel_dz(&self, points: &[Point3<T>], k0: T) -> Result<KernelMatrix<T>> {
        self.build(points, k0, true)
    }
}

/// Two-column image-source kernel.
pub fn build_ism_kernel<T: Real>(source: &Point3<T>, points: &[Point3<T>], k0: T) -> Result<KernelMatrix<T>> {
    SourceModel::ism(*source)?.kernel(points, k0)
}

/// Complex-image kernel with `2 + N` columns.
pub fn build_dcism_kernel<T: Real>(
    source: &Point3<T>,
    points: &[Point3<T>],
    k0: T,
    rule: &QuadratureRule<T>,
) -> Result<KernelMatrix<T>> {
    SourceModel::dcism(*source, rule.clone())?.kernel(points, k0)
}

/// Estimated amplitudes and diagnostics for one regularisation parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T: Real> {
    pub s_tilde: DVector<Cplx<T>>,
    pub lambda: T,
    pub residual_norm: T,
    pub solution_norm: T,
    /// Non-increasing.
    pub singular_values: Vec<T>,
}

impl<T: Real> SolveResult<T> {
    /// Number of amplitudes with magnitude above `threshold`.
    pub fn active_sources(&self, threshold: T) -> usize {
        self.s_tilde.iter().filter(|z| cabs(**z) > threshold).count()
    }
}

/// SVD of a kernel together with the data projected onto its left singular
/// vectors, so that many regularisation parameters can be tried cheaply.
#[derive(Debug, Clone)]
pub struct SvdSystem<T: Real> {
    g: DMatrix<Cplx<T>>,
    p: DVector<Cplx<T>>,
    u: DMatrix<Cplx<T>>,
    sigma: Vec<T>,
    v: DMatrix<Cplx<T>>,
    beta: Vec<Cplx<T>>,
    /// Squared norm of the data component outside the range of `U`.
    perp2: T,
}

impl<T: Real> SvdSystem<T> {
    pub fn new(g: &DMatrix<Cplx<T>>, p: &[Cplx<T>]) -> Result<Self> {
        let (m, q) = g.shape();
        if m == 0 || q == 0 {
            return Err(Error::Dimension("empty kernel".into()));
        }
        if p.len() != m {
            return Err(Error::Dimension(format!("data has {} entries, kernel has {m} rows", p.len())));
        }
        if !g.iter().all(|z| is_finite_c(*z)) || !p.iter().all(|z| is_finite_c(*z)) {
            return Err(Error::Svd("non-finite kernel or data".into()));
        }
        let mut svd = SVD::try_new(g.clone(), true, true, T::eps(), 0)
            .ok_or_else(|| Error::Svd("iteration did not converge".into()))?;
        svd.sort_by_singular_values();
        let u = svd.u.ok_or_else(|| Error::Svd("missing U".into()))?;
        let v = svd.v_t.ok_or_else(|| Error::Svd("missing V".into()))?.adjoint();
        let sigma: Vec<T> = svd.singular_values.iter().copied().collect();
        let pv = DVector::from_column_slice(p);
        let beta_v = u.adjoint() * &pv;
        let perp = &pv - &u * &beta_v;
        let perp2 = perp.iter().fold(T::zero(), |a, z| a + cabs2(*z));
        Ok(Self {
            g: g.clone(),
            p: pv,
            u,
            sigma,
            v,
            beta: beta_v.iter().copied().collect(),
            perp2,
        })
    }

    pub fn singular_values(&self) -> &[T] {
        &self.sigma
    }

    pub fn u(&self) -> &DMatrix<Cplx<T>> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<Cplx<T>> {
        &self.v
    }

    /// Tikhonov solution `V diag(σ/(σ²+λ²)) Uᴴ p`. With `λ = 0`, components
    /// with zero singular value are dropped.
    pub fn solve(&self, lambda: T) -> Result<SolveResult<T>> {
        if !(lambda >= T::zero() && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        let l2 = lambda * lambda;
        let coeff: DVector<Cplx<T>> = DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().zip(&self.beta).map(|(&s, &b)| {
                let den = s * s + l2;
                if den > T::zero() {
                    b * (s / den)
                } else {
                    real(T::zero())
                }
            }),
        );
        let s_tilde = &self.v * coeff;
        let resid = &self.g * &s_tilde - &self.p;
        Ok(SolveResult {
            residual_norm: resid.norm(),
            solution_norm: s_tilde.norm(),
            s_tilde,
            lambda,
            singular_values: self.sigma.clone(),
        })
    }

    /// Signed curvature of the L-curve `(½ ln‖r‖², ½ ln‖s̃‖²)` at `λ > 0`,
    /// positive at a corner traversed with increasing `λ`.
    pub fn curvature(&self, lambda: T) -> T {
        let two = T::lit(2.0);
        let l2 = lambda * lambda;
        let (mut x, mut x1, mut x2) = (T::zero(), T::zero(), T::zero());
        let (mut r, mut r1, mut r2) = (self.perp2, T::zero(), T::zero());
        for (&s, &b) in self.sigma.iter().zip(&self.beta) {
            let b2 = cabs2(b);
            let s2 = s * s;
            let den = s2 + l2;
            if !(den > T::zero()) {
                continue;
            }
            let f = s2 / den;
            let c = l2 / den;
            let fp = -two * f * c / lambda;
            let fpp = two * f * c * (T::lit(3.0) - T::lit(4.0) * f) / l2;
            if s > T::zero() {
                let a = b2 / s2;
                x += a * f * f;
                x1 += a * two * f * fp;
                x2 += a * two * (fp * fp + f * fpp);
            }
            r += b2 * c * c;
            r1 -= b2 * two * c * fp;
            r2 += b2 * two * (fp * fp - c * fpp);
        }
        let xi1 = r1 / (two * r);
        let xi2 = (r2 * r - r1 * r1) / (two * r * r);
        let eta1 = x1 / (two * x);
        let eta2 = (x2 * x - x1 * x1) / (two * x * x);
        let den = (xi1 * xi1 + eta1 * eta1).powf(T::lit(1.5));
        let k = (xi1 * eta2 - xi2 * eta1) / den;
        if k.is_finite() {
            k
        } else {
            T::min_value().unwrap_or(-T::one())
        }
    }

    /// Regularisation parameter at the L-curve corner.
    ///
    /// Curvature is scanned on [`LCURVE_POINTS`] log-spaced values over
    /// `[σ_lo·1e-4, σ_max·1e2]`, with `σ_lo` the smallest singular value
    /// floored at `σ_max·ε`. The best grid point (smallest `λ` on ties) is
    /// refined by golden-section search between its neighbours.
    pub fn lcurve(&self) -> Result<LCurvePick<T>> {
        let pnorm2 = self.p.iter().fold(T::zero(), |a, z| a + cabs2(*z));
        if !(pnorm2 > T::zero()) {
            return Err(Error::invalid("L-curve needs a non-zero data vector"));
        }
        let smax = self.sigma.first().copied().unwrap_or(T::zero());
        if !(smax > T::zero()) {
            return Err(Error::Svd("kernel has no non-zero singular value".into()));
        }
        let smin = self.sigma.last().copied().unwrap_or(smax);
        let lo = smin.max(smax * T::eps()) * T::lit(1e-4);
        let hi = smax * T::lit(1e2);
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let n = LCURVE_POINTS;
        let grid: Vec<T> = (0..n)
            .map(|i| ln_lo + (ln_hi - ln_lo) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap())
            .collect();
        let kap: Vec<T> = grid.iter().map(|&t| self.curvature(t.exp())).collect();
        let mut best = 0;
        for i in 1..n {
            if kap[i] > kap[best] {
                best = i;
            }
        }
        let flat = kap.iter().all(|&k| (k - kap[0]).abs() <= T::eps() * kap[0].abs().max(T::one()));
        if best == 0 || best == n - 1 || flat {
            return Ok(LCurvePick {
                lambda: grid[best].exp(),
                curvature: kap[best],
                degenerate: true,
            });
        }
        // golden-section search on ln λ
        let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.curvature(c.exp()), self.curvature(d.exp()));
        for _ in 0..60 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.curvature(c.exp());
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.curvature(d.exp());
            }
        }
        let (t, k) = if fc >= fd { (c, fc) } else { (d, fd) };
        let (t, k) = if k >= kap[best] { (t, k) } else { (grid[best], kap[best]) };
        Ok(LCurvePick {
            lambda: t.exp(),
            curvature: k,
            degenerate: false,
        })
    }
}

/// Number of grid points in the L-curve scan.
pub const LCURVE_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCurvePick<T> {
    pub lambda: T,
    pub curvature: T,
    /// Set when the maximum sits at the edge of the scan or the curve is flat.
    pub degenerate: bool,
}

pub fn tikhonov_solve<T: Real>(kernel: &KernelMatrix<T>, p: &[Cplx<T>], lambda: T) -> Result<SolveResult<T>> {
    SvdSystem::new(&kernel.g, p)?.solve(lambda)
}

pub fn lcurve_lambda<T: Real>(kernel: &KernelMatrix<T>, p: &[Cplx<T>]) -> Result<LCurvePick<T>> {
    SvdSystem::new(&kernel.g, p)?.lcurve()
}

/// Result of the inversion at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySolution<T: Real> {
    pub frequency: T,
    pub k0: T,
    pub solve: SolveResult<T>,
    pub lcurve: LCurvePick<T>,
}

/// Inverts every frequency of `meas` independently with the L-curve choice
/// of `λ`. Failures are kept per frequency.
pub fn estimate_sources<T: Real>(
    meas: &MeasurementSet<T>,
    model: &SourceModel<T>,
    c0: T,
) -> Vec<Result<FrequencySolution<T>>> {
    (0..meas.frequencies.len())
        .into_par_iter()
        .map(|col| {
            let f = meas.frequencies[col];
            solve_frequency(meas, model, c0, col).map_err(|e| Error::AtFrequency {
                frequency_hz: f.to_f64_lossy(),
                source: Box::new(e),
            })
        })
        .collect()
}

fn solve_frequency<T: Real>(
    meas: &MeasurementSet<T>,
    model: &SourceModel<T>,
    c0: T,
    col: usize,
) -> Result<FrequencySolution<T>> {
    let f = meas.frequencies[col];
    let k0 = T::two_pi() * f / c0;
    let kernel = model.kernel(&meas.array.points, k0)?;
    let sys = SvdSystem::new(&kernel.g, &meas.column(col))?;
    let pick = sys.lcurve()?;
    Ok(FrequencySolution {
        frequency: f,
        k0,
        solve: sys.solve(pick.lambda)?,
        lcurve: pick,
    })
}

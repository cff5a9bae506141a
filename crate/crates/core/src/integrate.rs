//! Globally adaptive Gauss–Kronrod (7/15) integration of vector-valued
//! complex integrands over a union of panels.
//!
//! The caller supplies break points (candidate singular points); the
//! integrator starts from those panels and repeatedly bisects whichever
//! panel carries the largest normalised error.

use std::collections::BinaryHeap;

use crate::num::{cabs, Cplx, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate_panels`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Maximum number of live panels before giving up.
    pub max_panels: usize,
}

impl<T: Real> Default for AdaptiveOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::eps().sqrt() * T::lit(1e-2),
            abs_tol: T::eps() * T::lit(1e-4),
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T, const N: usize> {
    pub value: [Cplx<T>; N],
    /// Per-component error estimate.
    pub error: [T; N],
    pub evaluations: usize,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NotConverged<T, const N: usize> {
    pub partial: Integral<T, N>,
    pub tolerance: [T; N],
}

impl<T: Real, const N: usize> NotConverged<T, N> {
    /// Largest ratio of estimated error to tolerance over components.
    pub fn worst_component(&self) -> (T, T) {
        let mut worst = (T::zero(), T::one());
        let mut ratio = T::zero();
        for c in 0..N {
            let r = self.partial.error[c] / self.tolerance[c];
            if r > ratio {
                ratio = r;
                worst = (self.partial.error[c], self.tolerance[c]);
            }
        }
        worst
    }
}

struct Panel<T, const N: usize> {
    a: T,
    b: T,
    value: [Cplx<T>; N],
    error: [T; N],
    priority: T,
}

impl<T: Real, const N: usize> PartialEq for Panel<T, N> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<T: Real, const N: usize> Eq for Panel<T, N> {}
impl<T: Real, const N: usize> PartialOrd for Panel<T, N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real, const N: usize> Ord for Panel<T, N> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority
            .partial_cmp(&other.priority)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(std::cmp::Ordering::Equal))
    }
}

fn kronrod<T: Real, const N: usize, F>(f: &F, a: T, b: T) -> ([Cplx<T>; N], [T; N])
where
    F: Fn(T) -> [Cplx<T>; N],
{
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let zero = Cplx::new(T::zero(), T::zero());
    let mut k = [zero; N];
    let mut g = [zero; N];

    let fc = f(mid);
    for c in 0..N {
        k[c] = fc[c] * T::lit(WGK[7]);
        g[c] = fc[c] * T::lit(WG[3]);
    }
    for i in 0..7 {
        let dx = half * T::lit(XGK[i]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        let wk = T::lit(WGK[i]);
        for c in 0..N {
            let s = f1[c] + f2[c];
            k[c] += s * wk;
            if i % 2 == 1 {
                g[c] += s * T::lit(WG[i / 2]);
            }
        }
    }
    let mut err = [T::zero(); N];
    for c in 0..N {
        k[c] *= half;
        g[c] *= half;
        err[c] = cabs(k[c] - g[c]);
    }
    (k, err)
}

/// Integrates `f` over `[edges[0], edges[last]]`, with the interior edges
/// as initial panel boundaries. `edges` must be non-decreasing; zero-width
/// panels are dropped.
pub fn integrate_panels<T: Real, const N: usize, F>(
    f: F,
    edges: &[T],
    opts: &AdaptiveOptions<T>,
) -> Result<Integral<T, N>, NotConverged<T, N>>
where
    F: Fn(T) -> [Cplx<T>; N],
{
    let zero = Cplx::new(T::zero(), T::zero());
    let mut heap: BinaryHeap<Panel<T, N>> = BinaryHeap::new();
    let mut total = [zero; N];
    let mut total_err = [T::zero(); N];
    let mut evaluations = 0usize;

    for w in edges.windows(2) {
        if !(w[1] > w[0]) {
            continue;
        }
        let (v, e) = kronrod(&f, w[0], w[1]);
        evaluations += 15;
        for c in 0..N {
            total[c] += v[c];
            total_err[c] += e[c];
        }
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            priority: T::zero(),
        });
    }

    let tolerance = |total: &[Cplx<T>; N]| {
        let mut t = [T::zero(); N];
        for c in 0..N {
            t[c] = opts.abs_tol.max(opts.rel_tol * cabs(total[c]));
        }
        t
    };
    let priority = |e: &[T; N], tol: &[T; N]| {
        let mut p = T::zero();
        for c in 0..N {
            p = p.max(e[c] / tol[c]);
        }
        p
    };

    // re-key the initial panels now that the total is known
    let tol0 = tolerance(&total);
    let mut panels: Vec<_> = heap.into_vec();
    for p in &mut panels {
        p.priority = priority(&p.error, &tol0);
    }
    let mut heap = BinaryHeap::from(panels);

    loop {
        let tol = tolerance(&total);
        let converged = (0..N).all(|c| total_err[c] <= tol[c]);
        let result = |heap: &BinaryHeap<Panel<T, N>>| Integral {
            value: total,
            error: total_err,
            evaluations,
            panels: heap.len(),
        };
        if converged {
            return Ok(result(&heap));
        }
        if heap.len() >= opts.max_panels {
            return Err(NotConverged {
                partial: result(&heap),
                tolerance: tol,
            });
        }
        let Some(worst) = heap.pop() else {
            return Ok(result(&heap));
        };
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(mid > worst.a && mid < worst.b) {
            // interval exhausted at machine precision
            return Err(NotConverged {
                partial: result(&heap),
                tolerance: tol,
            });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        for c in 0..N {
            total[c] += v1[c] + v2[c] - worst.value[c];
            total_err[c] += e1[c] + e2[c] - worst.error[c];
        }
        let tol = tolerance(&total);
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            priority: priority(&e1, &tol),
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            priority: priority(&e2, &tol),
        });
    }
}

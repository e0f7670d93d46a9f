//! Small numerical kernels shared by the physics modules: adaptive
//! Gauss–Kronrod quadrature, golden-section maximisation and monotone
//! bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [0, 1]; odd indices are the embedded 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_682_837_259_910,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub rel: f64,
    pub abs: f64,
    /// Upper bound on the number of subintervals kept in the work list.
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-30,
            max_intervals: 2000,
        }
    }
}

impl QuadTolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// `false` when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive 21-point Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// error drops below `max(abs, rel * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    if b < a {
        let q = integrate(f, b, a, tol);
        return Quadrature {
            value: -q.value,
            ..q
        };
    }

    let (value, err) = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;

    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            // re-sum before giving up so drift in the running totals does not leak out
            let (v, e) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
            return Quadrature {
                value: v,
                abs_error: e,
                evaluations,
                converged: false,
            };
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval collapsed to adjacent floats
            heap.push(worst);
            break;
        }
        let (lv, le) = gk21(&f, worst.a, mid);
        let (rv, re) = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            err: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            err: re,
        });
    }

    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    Quadrature {
        value,
        abs_error,
        evaluations,
        converged: abs_error <= tol.abs.max(tol.rel * value.abs()) * 1.0000001,
    }
}

/// Integral of `f` over `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: QuadTolerance) -> Quadrature {
    integrate(
        |t: f64| {
            let s = 1.0 - t;
            let x = a + t / s;
            let v = f(x) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Iterates until `done(lo, hi)` reports the bracket is narrow enough, or
/// `max_iter` is reached. The best point evaluated is returned, so the
/// result is never worse than either interior probe.
pub fn golden_max<F, D>(f: F, mut lo: f64, mut hi: f64, done: D, max_iter: usize) -> Maximum
where
    F: Fn(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while iterations < max_iter && !done(lo, hi) {
        iterations += 1;
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        Maximum {
            x: x1,
            value: f1,
            iterations,
        }
    } else {
        Maximum {
            x: x2,
            value: f2,
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BisectError {
    #[error("function is not monotone non-decreasing on the bracket (f({x}) = {value} outside [{lo_value}, {hi_value}])")]
    NotMonotone {
        x: f64,
        value: f64,
        lo_value: f64,
        hi_value: f64,
    },
    #[error("target {target} is not bracketed by [{lo_value}, {hi_value}]")]
    NotBracketed {
        target: f64,
        lo_value: f64,
        hi_value: f64,
    },
}

/// Geometric bisection for the smallest `x` in `[lo, hi]` (both > 0) with
/// `f(x) >= target`, for a non-decreasing `f`.
///
/// Stops when `hi / lo - 1 <= rel_width`. Every midpoint value is checked
/// against the bracket values so a non-monotone `f` is reported instead of
/// silently producing a wrong root.
pub fn bisect_log<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    rel_width: f64,
) -> Result<f64, BisectError> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !(f_lo < target && f_hi >= target) {
        return Err(BisectError::NotBracketed {
            target,
            lo_value: f_lo,
            hi_value: f_hi,
        });
    }
    while hi / lo - 1.0 > rel_width {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v < f_lo || v > f_hi {
            return Err(BisectError::NotMonotone {
                x: mid,
                value: v,
                lo_value: f_lo,
                hi_value: f_hi,
            });
        }
        if v >= target {
            hi = mid;
            f_hi = v;
        } else {
            lo = mid;
            f_lo = v;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gk21_is_exact_for_polynomials() {
        // both embedded rules are exact here, so one pass suffices
        let q = integrate(|x| x.powi(18), 0.0, 1.0, QuadTolerance::default());
        assert_relative_eq!(q.value, 1.0 / 19.0, max_relative = 1e-14);
        assert_eq!(q.evaluations, 21);
        let q = integrate(|x| x.powi(30), 0.0, 1.0, QuadTolerance::default());
        assert_relative_eq!(q.value, 1.0 / 31.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrands() {
        let w = 1e-3;
        let q = integrate(
            |x| w / (PI * (x * x + w * w)),
            -1.0,
            1.0,
            QuadTolerance::relative(1e-10),
        );
        let exact = 2.0 / PI * (1.0 / w).atan();
        assert!(q.converged);
        assert_relative_eq!(q.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn reversed_bounds_negate() {
        let q = integrate(f64::sin, PI, 0.0, QuadTolerance::default());
        assert_relative_eq!(q.value, -2.0, max_relative = 1e-12);
    }

    #[test]
    fn semi_infinite_exponential() {
        let q = integrate_to_infinity(|x| (-x).exp(), 0.0, QuadTolerance::relative(1e-12));
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let m = golden_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, |a, b| b - a < 1e-9, 200);
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn bisect_log_finds_threshold() {
        let root = bisect_log(|x| x * x, 1e-30, 1.0, 0.25, 1e-12).unwrap();
        assert_relative_eq!(root, 0.5, max_relative = 1e-11);
    }

    #[test]
    fn bisect_log_reports_non_monotone() {
        // dips below the lower-bracket value in the interior
        let f = |x: f64| if (1e-6..1e-2).contains(&x) { -5.0 } else { x };
        let err = bisect_log(f, 1e-12, 1.0, 0.5, 1e-10).unwrap_err();
        assert!(matches!(err, BisectError::NotMonotone { .. }));
    }

    #[test]
    fn bisect_log_requires_bracket() {
        let err = bisect_log(|x| x, 1e-3, 1.0, 2.0, 1e-10).unwrap_err();
        assert!(matches!(err, BisectError::NotBracketed { .. }));
    }
}

//! Globally adaptive Gauss–Kronrod (10/21-point) integration of vector-valued integrands.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Nodes and weights as published with QUADPACK (qk21).
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
    0.123_491_976_262_065_851_077_208_067_073_209,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, at XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSettings {
    /// Target for the summed absolute error estimate (largest component).
    pub tolerance: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub subdivisions: usize,
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Segment<N> {}

impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(center);
    for c in 0..N {
        k[c] = WGK[10] * fc[c];
    }
    for (j, (&x, &wk)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let lo = f(center - half * x);
        let hi = f(center + half * x);
        for c in 0..N {
            let sum = lo[c] + hi[c];
            k[c] += wk * sum;
            if j % 2 == 1 {
                g[c] += WG[j / 2] * sum;
            }
        }
    }
    let mut error = 0.0f64;
    for c in 0..N {
        k[c] *= half;
        g[c] *= half;
        error = error.max((k[c] - g[c]).abs());
    }
    Segment {
        a,
        b,
        value: k,
        error,
    }
}

/// Integrates `f` over `[a, b]`, starting from the segments cut at `breakpoints`
/// (points outside `(a, b)` are ignored) and bisecting the worst segment until
/// the summed error estimate drops below the tolerance.
pub fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    settings: &AdaptiveSettings,
) -> Result<Integral<N>> {
    if !(settings.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be > 0"));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid("interval", format!("[{a}, {b}] is not a finite interval")));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap: BinaryHeap<Segment<N>> =
        edges.windows(2).map(|e| kronrod(&f, e[0], e[1])).collect();
    // Segments too short to split further keep their error but leave the heap.
    let mut settled: Vec<Segment<N>> = Vec::new();
    let min_width = 64.0 * f64::EPSILON * (b - a).abs().max(a.abs()).max(b.abs());
    let mut subdivisions = 0;

    let total_error = |heap: &BinaryHeap<Segment<N>>, settled: &[Segment<N>]| -> f64 {
        heap.iter().chain(settled).map(|s| s.error).sum()
    };

    while total_error(&heap, &settled) > settings.tolerance {
        if subdivisions >= settings.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if worst.b - worst.a < min_width {
            settled.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        subdivisions += 1;
    }

    let error = total_error(&heap, &settled);
    if error > settings.tolerance {
        return Err(Error::QuadratureNonConvergence {
            achieved: error,
            tolerance: settings.tolerance,
            subdivisions,
        });
    }
    let mut segments: Vec<Segment<N>> = heap.into_vec();
    segments.extend(settled);
    // Sum left to right so the result does not depend on heap order.
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    for s in &segments {
        for c in 0..N {
            value[c] += s.value[c];
        }
    }
    Ok(Integral {
        value,
        error,
        subdivisions,
    })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    settings: &AdaptiveSettings,
) -> Result<(f64, f64)> {
    let r = integrate(|x| [f(x)], a, b, breakpoints, settings)?;
    Ok((r.value[0], r.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn settings(tolerance: f64) -> AdaptiveSettings {
        AdaptiveSettings {
            tolerance,
            max_subdivisions: 2000,
        }
    }

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = integrate_scalar(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], &settings(1e-12)).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn trig_and_kink() {
        let (v, _) = integrate_scalar(|x| x.sin(), 0.0, PI, &[], &settings(1e-12)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // |x - 0.3| on [0, 1] without telling the integrator where the kink is.
        let (v, _) = integrate_scalar(|x| (x - 0.3).abs(), 0.0, 1.0, &[], &settings(1e-10)).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn vector_components_share_a_mesh() {
        let r = integrate(|x| [1.0, x, x.sqrt()], 0.0, 1.0, &[0.5], &settings(1e-9)).unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-14);
        assert!((r.value[1] - 0.5).abs() < 1e-14);
        assert!((r.value[2] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn step_with_breakpoint_converges_immediately() {
        let r = integrate(|x| [if x < 0.25 { 1.0 } else { 0.0 }], 0.0, 1.0, &[0.25], &settings(1e-12)).unwrap();
        assert_eq!(r.subdivisions, 0);
        assert!((r.value[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reports_non_convergence() {
        let s = AdaptiveSettings {
            tolerance: 1e-14,
            max_subdivisions: 3,
        };
        match integrate_scalar(|x| 1.0 / x.sqrt(), 0.0, 1.0, &[], &s) {
            Err(Error::QuadratureNonConvergence { achieved, subdivisions, .. }) => {
                assert!(achieved > 1e-14);
                assert_eq!(subdivisions, 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(integrate_scalar(|x| x, 1.0, 0.0, &[], &settings(1e-8)).is_err());
        assert!(integrate_scalar(|x| x, 0.0, 1.0, &[], &settings(0.0)).is_err());
    }
}

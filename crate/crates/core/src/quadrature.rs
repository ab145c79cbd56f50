//! Gauss–Kronrod adaptive integration and Gauss–Legendre composite rules.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15 panel: returns (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<const N: usize, F>(f: &F, a: f64, b: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for n in 0..N {
        k[n] = WGK[7] * fc[n];
        g[n] = WG[3] * fc[n];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for n in 0..N {
        k[n] *= h;
        g[n] *= h;
        err[n] = (k[n] - g[n]).abs();
    }
    (k, err)
}

/// Result of an adaptive integration, including the final panel partition.
#[derive(Debug, Clone)]
pub struct Adaptive<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub panels: Vec<(f64, f64)>,
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod integration of a vector-valued integrand.
///
/// The panel with the largest error (max over components) is bisected until
/// the total error is below `tol · max(1, max_n |I_n|)`.
pub fn integrate<const N: usize, F>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<Adaptive<N>>
where
    F: Fn(f64) -> [f64; N],
{
    let make = |a: f64, b: f64| {
        let (value, err) = gk15(&f, a, b);
        let err = err.iter().cloned().fold(0.0, f64::max);
        Panel { a, b, value, err }
    };
    let mut heap = BinaryHeap::new();
    // a few initial panels so that localized features are seen
    let init = 4;
    let h = (b - a) / init as f64;
    for i in 0..init {
        heap.push(make(a + i as f64 * h, a + (i + 1) as f64 * h));
    }
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in heap.iter() {
            for n in 0..N {
                total[n] += p.value[n];
            }
            err += p.err;
        }
        let scale = total.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if err <= tol * scale {
            let mut panels: Vec<(f64, f64)> = heap.iter().map(|p| (p.a, p.b)).collect();
            panels.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Ok(Adaptive { value: total, error: err, panels });
        }
        if heap.len() >= max_panels {
            return Err(Error::NumericAccuracy(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {err:e} after {max_panels} panels"
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::NumericAccuracy(format!(
                "adaptive quadrature cannot bisect panel near {mid}"
            )));
        }
        heap.push(make(worst.a, mid));
        heap.push(make(mid, worst.b));
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, tol, 4096).map(|r| r.value[0])
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A composite rule: flat list of nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre of the given order on every panel.
    pub fn composite(panels: &[(f64, f64)], order: usize) -> Rule {
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for &(a, b) in panels {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(c + h * xi);
                rule.weights.push(h * wi);
            }
        }
        rule
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

//! Special functions: complete elliptic integral of the second kind, the
//! Bessel function J₀ with its Hankel expansion, the generalized exponential
//! integral E_ν on the closed right half-plane, and the gamma function.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Complete elliptic integral of the second kind in the parameter convention,
/// `E(m) = ∫₀^{π/2} √(1 − m sin²φ) dφ`, for `m ∈ [0, 1]`.
///
/// Arithmetic-geometric mean iteration; converges quadratically.
pub fn elliptic_e(m: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&m), "parameter out of range: {m}");
    if m >= 1.0 {
        return 1.0;
    }
    if m <= 0.0 {
        return FRAC_PI_2;
    }
    let mut a = 1.0;
    let mut g = (1.0 - m).sqrt();
    // Σ 2^{n-1} c_n² with c₀² = m
    let mut sum = 0.5 * m;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - g);
        let a_next = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = a_next;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    FRAC_PI_2 / a * (1.0 - sum)
}

/// Coefficients `a_k` of the Hankel expansion
/// `H₀⁽¹⁾(z) ~ √(2/πz) e^{i(z−π/4)} Σ_k i^k a_k z^{−k}`.
pub fn hankel_j0_coefficients(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut a = 1.0;
    for k in 0..count {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= -odd * odd / (k as f64 * 8.0);
        }
        out.push(a);
    }
    out
}

const J0_SERIES_MAX: f64 = 8.0;
const J0_ASYMPTOTIC_MIN: f64 = 30.0;

/// Bessel function of the first kind of order zero.
///
/// Power series for |x| ≤ 8, Miller backward recurrence up to |x| = 30, and
/// the Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= J0_SERIES_MAX {
        j0_series(x)
    } else if x < J0_ASYMPTOTIC_MIN {
        j0_miller(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    // start well above x so that J_N is negligible; N even
    let mut n = (x as usize) + 40;
    if n % 2 == 1 {
        n += 1;
    }
    let mut j_next = 0.0; // J_{k+1}
    let mut j_k = 1e-30; // J_k
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=n).rev() {
        let j_prev = 2.0 * k as f64 / x * j_k - j_next;
        j_next = j_k;
        j_k = j_prev;
        if j_k.abs() > 1e200 {
            j_k *= 1e-200;
            j_next *= 1e-200;
            norm *= 1e-200;
        }
        // j_k now holds J_{k-1}
        let order = k - 1;
        if order == 0 {
            j0 = j_k;
            norm += j_k;
        } else if order % 2 == 0 {
            norm += 2.0 * j_k;
        }
    }
    j0 / norm
}

fn j0_asymptotic(x: f64) -> f64 {
    let series = hankel_series(x, 1.0);
    let phase = Complex64::from_polar(1.0, x - FRAC_PI_4);
    (2.0 / (PI * x)).sqrt() * (phase * series).re
}

/// `Σ_k (σ i)^k a_k / z^k`, truncated at the smallest term.
fn hankel_series(z: f64, sigma: f64) -> Complex64 {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut a = 1.0;
    let mut zpow = 1.0;
    let mut ipow = Complex64::new(1.0, 0.0);
    let step = Complex64::new(0.0, sigma);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= -odd * odd / (k as f64 * 8.0);
        zpow *= z;
        ipow *= step;
        let mag = (a / zpow).abs();
        if mag > last {
            break;
        }
        sum += ipow * (a / zpow);
        last = mag;
        if mag < 1e-18 {
            break;
        }
    }
    sum
}

/// Gamma function for real arguments (Lanczos, g = 7, with reflection).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Generalized exponential integral `E_ν(z) = ∫₁^∞ e^{−zt} t^{−ν} dt` for
/// `ν > 0` and `Re z ≥ 0`.
///
/// Continued fraction (modified Lentz) for |z| > 2, power series otherwise.
/// Returns infinity at `z = 0` when `ν ≤ 1`.
pub fn expint(nu: f64, z: Complex64) -> Complex64 {
    debug_assert!(nu > 0.0);
    debug_assert!(z.re >= -1e-12);
    let r = z.norm();
    if r == 0.0 {
        return if nu > 1.0 {
            Complex64::new(1.0 / (nu - 1.0), 0.0)
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    if r > 2.0 {
        expint_continued_fraction(nu, z)
    } else if (nu - nu.round()).abs() < 1e-12 {
        expint_series_integer(nu.round() as u32, z)
    } else {
        expint_series(nu, z)
    }
}

fn expint_continued_fraction(nu: f64, z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + nu;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..20_000 {
        let fi = i as f64;
        let an = -fi * (nu - 1.0 + fi);
        b += 2.0;
        d = (d * an + b).inv();
        c = b + c.inv() * an;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

fn expint_series(nu: f64, z: Complex64) -> Complex64 {
    let lead = z.powf(nu - 1.0) * gamma(1.0 - nu);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0); // (−z)^k / k!
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            zk *= -z / kf;
        }
        let term = zk / (1.0 - nu + kf);
        sum += term;
        if k > 4 && term.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    lead - sum
}

fn expint_series_integer(n: u32, z: Complex64) -> Complex64 {
    let n1 = (n - 1) as usize;
    let mut psi = -EULER_GAMMA;
    for m in 1..n {
        psi += 1.0 / m as f64;
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0); // (−z)^k / k!
    let mut lead = Complex64::new(0.0, 0.0);
    for k in 0..200usize {
        if k > 0 {
            zk *= -z / k as f64;
        }
        if k == n1 {
            lead = zk * (psi - z.ln());
            continue;
        }
        let term = zk / (k as f64 - n1 as f64);
        sum += term;
        if k > n1 + 4 && term.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    lead - sum
}

//! Numerical oracles written independently of `thzsec`, used to check it.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
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

/// Composite Gauss-Legendre: `panels` equal panels, `n` nodes each.
pub fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + h / 2.0;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(c + xi * h / 2.0);
        }
    }
    acc * h / 2.0
}

/// Mutual information of a binary-input Poisson channel by direct summation
/// over photon counts, bits. Input 1 with probability `q` gives mean
/// `s + n`, input 0 gives mean `n`.
pub fn poisson_channel_mi(s: f64, n: f64, q: f64) -> f64 {
    let on = s + n;
    // tail beyond k_max holds < 1e-12 of either distribution
    let k_max = (on + 12.0 * on.sqrt() + 40.0).ceil() as usize;
    let (mut p1, mut p0) = ((-on).exp(), (-n).exp());
    let mut mi = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            p1 *= on / k as f64;
            p0 *= n / k as f64;
        }
        let py = q * p1 + (1.0 - q) * p0;
        if p1 > 0.0 {
            mi += q * p1 * (p1 / py).log2();
        }
        if p0 > 0.0 {
            mi += (1.0 - q) * p0 * (p0 / py).log2();
        }
    }
    mi
}

/// Wyner direct-detection expression written out term by term.
pub fn wyner_mi(s: f64, n: f64, q: f64) -> f64 {
    let xl = |x: f64| if x == 0.0 { 0.0 } else { x * x.log2() };
    q * xl(s + n) + (1.0 - q) * xl(n) - xl(q * s + n)
}

/// Standard normal CDF by integrating the density (no erfc).
pub fn normal_cdf_by_quadrature(z: f64) -> f64 {
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
    if z >= 0.0 {
        0.5 + gl_integrate(pdf, 0.0, z, 40, 200)
    } else {
        0.5 - gl_integrate(pdf, z, 0.0, 40, 200)
    }
}

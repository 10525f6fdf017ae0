//! Reference implementations used only by tests. None of these call into
//! the crate's numerical code.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Φ(x) from the all-positive series
/// `erf(y) = 2/√π · e^{−y²} · Σ 2ⁿ y^{2n+1} / (1·3·…·(2n+1))`,
/// which has no cancellation for moderate |y|.
pub fn phi(x: f64) -> f64 {
    let y = x.abs() / std::f64::consts::SQRT_2;
    let mut term = y;
    let mut sum = y;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * y * y / (2.0 * n + 1.0);
        sum += term;
    }
    let erf = 2.0 / PI.sqrt() * (-y * y).exp() * sum;
    if x >= 0.0 {
        0.5 + 0.5 * erf
    } else {
        0.5 - 0.5 * erf
    }
}

/// Φ⁻¹(p) by bisection on [`phi`].
pub fn phi_inv(p: f64) -> f64 {
    let (mut lo, mut hi) = (-8.0_f64, 8.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Composite trapezoid rule for `f` over `[a, b]` with `n` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Composite Simpson rule, `n` even.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Posterior mean and variance of θ by grid integration of
/// likelihood × prior over `[-5, 5]`.
pub fn grid_posterior(xs: &[f64], sigma: f64, m0: f64, tau: f64) -> (f64, f64) {
    let log_density = |theta: f64| {
        let ll: f64 = xs
            .iter()
            .map(|x| -(x - theta) * (x - theta) / (2.0 * sigma * sigma))
            .sum();
        ll - (theta - m0) * (theta - m0) / (2.0 * tau)
    };
    // shift by the log density at the mode-ish point to avoid underflow
    let n = 1_000_000;
    let (a, b) = (-5.0, 5.0);
    let peak = (0..=1000)
        .map(|i| log_density(a + (b - a) * i as f64 / 1000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let w = |t: f64| (log_density(t) - peak).exp();
    let z = trapezoid(w, a, b, n);
    let mean = trapezoid(|t| t * w(t), a, b, n) / z;
    let var = trapezoid(|t| (t - mean) * (t - mean) * w(t), a, b, n) / z;
    (mean, var)
}

/// Small deterministic generator (xorshift64*) with Box–Muller normals,
/// independent of the crate's ChaCha substreams.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let v = self.0.wrapping_mul(0x2545_f491_4f6c_dd1d);
        ((v >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let (u1, u2) = (self.uniform(), self.uniform());
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

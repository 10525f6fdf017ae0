//! Numerical primitives shared by every module: correctly rounded summation
//! and the standard normal distribution.
//!
//! Summation is exact (Shewchuk partials with a final half-even correction),
//! so any permutation of the same inputs yields the same bits. That is what
//! lets posterior summaries stay bit-identical under reordering and lets the
//! parallel paths agree with the sequential ones.

use std::f64::consts::SQRT_2;

use libm::erfc;
use statrs::function::erf::erfc_inv;

/// Running exact sum of a sequence of finite `f64` values.
///
/// [`ExactSum::value`] returns the correctly rounded sum of everything
/// added so far, so prefix sums can be read off incrementally.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            partials: Vec::with_capacity(capacity),
        }
    }

    pub fn clear(&mut self) {
        self.partials.clear();
    }

    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, values: I) {
        for v in values {
            self.add(v);
        }
    }

    /// Correctly rounded value of the accumulated sum.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // half-even rounding across the remaining partials
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of `values`.
pub fn exact_sum(values: &[f64]) -> f64 {
    let mut acc = ExactSum::with_capacity(4);
    acc.extend(values.iter().copied());
    acc.value()
}

/// Standard normal CDF Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for `p` in (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        upper_critical_value(1.0 - p)
    } else {
        -upper_critical_value(p)
    }
}

/// Upper-tail critical value `z` with `1 − Φ(z) = alpha`.
///
/// Evaluated through the tail so small `alpha` keeps full precision. The
/// series inverse is polished with one Halley step against `erfc`.
pub fn upper_critical_value(alpha: f64) -> f64 {
    if !(alpha > 0.0 && alpha < 1.0) {
        return SQRT_2 * erfc_inv(2.0 * alpha);
    }
    let z = SQRT_2 * erfc_inv(2.0 * alpha);
    // f(z) = Q(z) − α, Q' = −φ, Q'' = zφ
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let err = 0.5 * erfc(z / SQRT_2) - alpha;
    let step = err / density;
    z + step / (1.0 + 0.5 * z * step)
}

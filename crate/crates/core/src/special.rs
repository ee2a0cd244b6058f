//! Overflow-safe factorials.

use std::sync::OnceLock;

/// Largest `n` for which `n!` is finite in double precision.
pub const MAX_EXACT_FACTORIAL: usize = 170;

fn factorial_table() -> &'static [f64; MAX_EXACT_FACTORIAL + 1] {
    static TABLE: OnceLock<[f64; MAX_EXACT_FACTORIAL + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; MAX_EXACT_FACTORIAL + 1];
        for k in 1..=MAX_EXACT_FACTORIAL {
            t[k] = t[k - 1] * k as f64;
        }
        t
    })
}

fn ln_factorial_table() -> &'static [f64; MAX_EXACT_FACTORIAL + 1] {
    static TABLE: OnceLock<[f64; MAX_EXACT_FACTORIAL + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let f = factorial_table();
        let mut t = [0.0; MAX_EXACT_FACTORIAL + 1];
        for (dst, v) in t.iter_mut().zip(f.iter()) {
            *dst = v.ln();
        }
        t
    })
}

/// `n!` as a double, infinite beyond 170.
pub fn factorial(n: usize) -> f64 {
    factorial_table().get(n).copied().unwrap_or(f64::INFINITY)
}

/// `ln n!`. Tabulated up to 170, Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n <= MAX_EXACT_FACTORIAL {
        return ln_factorial_table()[n];
    }
    // ln Γ(x) for x = n + 1 > 171; the series is converged to machine
    // precision after the 1/x⁷ term at these arguments.
    let x = (n + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

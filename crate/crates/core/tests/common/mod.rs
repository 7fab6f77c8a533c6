//! Independent numerical oracles shared by the integration tests. None of
//! them reuse the crate's own quadrature or search code.
#![allow(dead_code, clippy::too_many_arguments)]

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Golden-section search for the maximizer of a unimodal function.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for a sign change of `f` on `[a, b]`, `f(a) > 0 ≥ f(b)`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    assert!(f(a) > 0.0 && f(b) <= 0.0, "no sign change on [{a}, {b}]");
    while b - a > tol {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Absorbing-receiver hit rate written out from the model definition.
pub fn hit_rate(t: f64, d: f64, r: f64, diff: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    r / (d + r) * d / (4.0 * std::f64::consts::PI * diff * t.powi(3)).sqrt()
        * (-d * d / (4.0 * diff * t)).exp()
}

/// Passive-receiver point probability written out from the model definition.
pub fn passive_point(t: f64, d: f64, r: f64, diff: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let v = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    v / (4.0 * std::f64::consts::PI * diff * t).powf(1.5) * (-(d + r).powi(2) / (4.0 * diff * t)).exp()
}

/// Defaults: d = r = 5 µm, D = 79.4 µm²/s.
pub const D_ABS: (f64, f64, f64) = (5e-6, 5e-6, 79.4e-12);
/// Defaults: d = 10 µm, r = 5 µm, D = 79.4 µm²/s.
pub const D_PAS: (f64, f64, f64) = (10e-6, 5e-6, 79.4e-12);

//! Independent reference computations.
//!
//! Nothing in here shares a code path with the production routines it is used
//! to check: quadrature instead of closed forms, Runge-Kutta instead of the
//! explicit profile, bisection instead of the analytic inverse, finite
//! differences instead of Hermite factors.

/// Classical fourth-order Runge-Kutta for a scalar autonomous ODE `y' = f(y)`.
pub fn rk4(f: impl Fn(f64) -> f64, y0: f64, t_end: f64, step: f64) -> f64 {
    let steps = (t_end / step).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
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
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Quadrature over `[a, b]` split at geometrically spaced breakpoints, for
/// integrands that vary over many decades.
pub fn geometric_quadrature(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut breaks = vec![a];
    let mut x = a.max(1e-3);
    if x > a {
        breaks.push(x);
    }
    while x * 2.0 < b {
        x *= 2.0;
        breaks.push(x);
    }
    breaks.push(b);
    breaks
        .windows(2)
        .map(|w| {
            let scale = (f(w[0]).abs() + f(w[1]).abs()) * (w[1] - w[0]);
            adaptive_simpson(f, w[0], w[1], rel_tol * scale.max(f64::MIN_POSITIVE))
        })
        .sum()
}

/// Solves `g(x) = target` for increasing `g` on `[lo, hi]` by bisection.
pub fn bisect_increasing(g: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Central-difference derivative of order `n` with step `h`.
pub fn central_difference(f: &impl Fn(f64) -> f64, x: f64, n: u32, h: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + (0.5 * n as f64 - k as f64) * h);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc / h.powi(n as i32)
}

/// Romberg-style Richardson extrapolation of an even-power error expansion,
/// given a difference operator `d(h)` evaluated at `h, h/2, h/4, ...`.
pub fn richardson(d: impl Fn(f64) -> f64, h: f64, levels: usize) -> f64 {
    let mut table: Vec<f64> = (0..levels).map(|k| d(h / 2f64.powi(k as i32))).collect();
    for j in 1..levels {
        let factor = 4f64.powi(j as i32);
        for k in (j..levels).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    table[levels - 1]
}

/// Mixed partial derivative of a function of several variables by nested
/// central differences, Richardson extrapolated.
pub fn mixed_partial(f: &impl Fn(&[f64]) -> f64, x: &[f64], orders: &[u32], h: f64, levels: usize) -> f64 {
    fn nested(f: &impl Fn(&[f64]) -> f64, point: &mut Vec<f64>, orders: &[u32], axis: usize, h: f64) -> f64 {
        if axis == orders.len() {
            return f(point);
        }
        let n = orders[axis];
        if n == 0 {
            return nested(f, point, orders, axis + 1, h);
        }
        let centre = point[axis];
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            point[axis] = centre + (0.5 * n as f64 - k as f64) * h;
            acc += sign * binom * nested(f, point, orders, axis + 1, h);
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        point[axis] = centre;
        acc / h.powi(n as i32)
    }
    richardson(
        |step| {
            let mut point = x.to_vec();
            nested(f, &mut point, orders, 0, step)
        },
        h,
        levels,
    )
}

/// Heat-kernel value from its definition, written without the crate's kernel code.
pub fn heat_kernel_reference(x: &[f64], t: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * std::f64::consts::PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

//! Smooth monotone transition functions and numerical Hölder seminorms.

/// `ψ(t) = exp(−1/t)` for `t > 0`, zero otherwise.
fn psi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 on `(−∞, 0]`, 1 on `[1, ∞)`, nondecreasing and C^∞.
pub fn v(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = psi(t);
        a / (a + psi(1.0 - t))
    }
}

/// Smooth plateau: 1 on `[0, 1/4]`, 0 on `[1/2, ∞)`, nonincreasing and C^∞.
pub fn u(s: f64) -> f64 {
    1.0 - v(4.0 * s - 1.0)
}

/// Hölder seminorm of a one-dimensional function on `[a, b]`, estimated on a
/// uniform grid of `points` nodes.
///
/// For `β ≤ 1` this is `sup |f(x) − f(y)| / |x − y|^β`; for `β ∈ (1, 2]` it is
/// the `(β − 1)`-seminorm of a central-difference derivative.
pub fn holder_seminorm<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, beta: f64, points: usize) -> f64 {
    let step = (b - a) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| a + step * i as f64).collect();
    let (vals, exponent): (Vec<f64>, f64) = if beta <= 1.0 {
        (xs.iter().map(|&x| f(x)).collect(), beta)
    } else {
        let h = step * 1e-3;
        (xs.iter().map(|&x| (f(x + h) - f(x - h)) / (2.0 * h)).collect(), beta - 1.0)
    };
    let mut best: f64 = 0.0;
    for i in 0..points {
        for j in i + 1..points {
            let gap = (xs[j] - xs[i]).powf(exponent);
            best = best.max((vals[j] - vals[i]).abs() / gap);
        }
    }
    best
}

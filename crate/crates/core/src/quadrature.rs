//! Gauss-Legendre rules and adaptive Gauss-Kronrod integration.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
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
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    (
        x.iter().map(|&t| c + r * t).collect(),
        w.iter().map(|&t| r * t).collect(),
    )
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kr = fc * WGK[7];
    let mut gs = fc * WG[3];
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kr += WGK[j] * s;
        if j % 2 == 1 {
            gs += WG[j / 2] * s;
        }
    }
    (kr * r, ((kr - gs) * r).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive 15-point Gauss-Kronrod on [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    integrate_breaks(&mut f, &[a, b], abs_tol, rel_tol, 2000)
}

/// Adaptive Gauss-Kronrod seeded with the given breakpoints.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral {
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        segs.push((w[0], w[1], v, e));
    }
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Integral { value: total, error: err, converged: true };
        }
        if segs.len() >= max_intervals {
            return Integral { value: total, error: err, converged: false };
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (a, b, _, _) = segs[i];
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            let total: f64 = segs.iter().map(|s| s.2).sum();
            return Integral { value: total, error: err, converged: false };
        }
        let (v1, e1) = gk15(f, a, m);
        let (v2, e2) = gk15(f, m, b);
        segs[i] = (a, m, v1, e1);
        segs.push((m, b, v2, e2));
    }
}

/// Composite Gauss rule on [a, b] with geometric grading toward `a`.
///
/// The first subinterval has length `ratio^(levels-1)` times the last one.
pub fn graded_rule(a: f64, b: f64, levels: usize, ratio: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cuts = vec![b];
    let mut x = b;
    for _ in 0..levels.saturating_sub(1) {
        x = a + (x - a) * ratio;
        cuts.push(x);
    }
    cuts.push(a);
    cuts.reverse();
    let (gx, gw) = gauss_legendre(points);
    let mut nodes = Vec::with_capacity(levels * points);
    let mut weights = Vec::with_capacity(levels * points);
    for w in cuts.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let r = 0.5 * (w[1] - w[0]);
        for (t, wt) in gx.iter().zip(&gw) {
            nodes.push(c + r * t);
            weights.push(r * wt);
        }
    }
    (nodes, weights)
}

//! BDF-k convolution quadrature, plain and with initial correction.

use crate::mesh_fem::Mesh;
use crate::spectral_reference::{ProblemSpec, TimeFactor};
use crate::stepping::{convolution_march, FemScheme, SpaceDisc, StepError, Trajectory};
use serde::Serialize;

/// Reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };

    pub fn new(num: i64, den: i64) -> Self {
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Self { num: s * num / g, den: s * den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

const fn r(num: i64, den: i64) -> Rational {
    Rational { num, den }
}

/// Exact coefficients p_0..p_k of delta(z) = sum_{j=1}^k (1 - z)^j / j.
pub fn bdf_symbol(k: usize) -> Vec<Rational> {
    assert!((1..=6).contains(&k), "BDF order must be in 1..=6");
    let lcm = 60;
    let mut num = vec![0i64; k + 1];
    for j in 1..=k as i64 {
        let mut binom = 1i64;
        for i in 0..=j {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            num[i as usize] += sign * binom * (lcm / j);
            binom = binom * (j - i) / (i + 1);
        }
    }
    num.into_iter().map(|n| Rational::new(n, lcm)).collect()
}

/// Coefficients of delta(z)^alpha.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqWeights {
    pub alpha: f64,
    pub k: usize,
    pub b: Vec<f64>,
}

/// Weights b_0..b_n via the power recurrence.
pub fn cq_weights(alpha: f64, k: usize, n: usize) -> CqWeights {
    let p: Vec<f64> = bdf_symbol(k).into_iter().map(Rational::to_f64).collect();
    let mut w = Vec::with_capacity(n + 1);
    w.push(p[0].powf(alpha));
    for m in 1..=n {
        let mut s = 0.0;
        for j in 1..=m.min(k) {
            s += ((alpha + 1.0) * j as f64 - m as f64) * p[j] * w[m - j];
        }
        w.push(s / (m as f64 * p[0]));
    }
    CqWeights { alpha, k, b: w }
}

/// Starting-step correction coefficients a_n^(k) and b_{l,n}^(k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionTable {
    pub k: usize,
    /// a[n-1] for n = 1..k-1.
    pub a: Vec<Rational>,
    /// b[l-1][n-1] for l = 1..k-2, n = 1..k-1.
    pub b: Vec<Vec<Rational>>,
}

const A_TABLE: [&[Rational]; 5] = [
    &[r(1, 2)],
    &[r(11, 12), r(-5, 12)],
    &[r(31, 24), r(-7, 6), r(3, 8)],
    &[r(1181, 720), r(-177, 80), r(341, 240), r(-251, 720)],
    &[r(2837, 1440), r(-2543, 720), r(17, 5), r(-1201, 720), r(95, 288)],
];

const Z: Rational = Rational::ZERO;

const B_TABLE: [&[&[Rational]]; 4] = [
    &[&[r(1, 12), Z]],
    &[&[r(1, 6), r(-1, 12), Z], &[Z, Z, Z]],
    &[
        &[r(59, 240), r(-29, 120), r(19, 240), Z],
        &[r(1, 240), r(-1, 240), Z, Z],
        &[r(1, 720), Z, Z, Z],
    ],
    &[
        &[r(77, 240), r(-7, 15), r(73, 240), r(-3, 40), Z],
        &[r(1, 96), r(-1, 60), r(1, 160), Z, Z],
        &[r(-1, 360), r(1, 720), Z, Z, Z],
        &[Z, Z, Z, Z, Z],
    ],
];

impl CorrectionTable {
    pub fn new(k: usize) -> Self {
        assert!((1..=6).contains(&k), "BDF order must be in 1..=6");
        if k == 1 {
            return Self::zero(1);
        }
        let a = A_TABLE[k - 2].to_vec();
        let b = if k >= 3 { B_TABLE[k - 3].iter().map(|row| row.to_vec()).collect() } else { Vec::new() };
        Self { k, a, b }
    }

    /// Same shape, all entries zero.
    pub fn zero(k: usize) -> Self {
        let n = k.saturating_sub(1);
        Self { k, a: vec![Z; n], b: vec![vec![Z; n]; k.saturating_sub(2)] }
    }

    pub fn a(&self, n: usize) -> f64 {
        self.a.get(n.wrapping_sub(1)).map_or(0.0, |x| x.to_f64())
    }

    pub fn b(&self, l: usize, n: usize) -> f64 {
        self.b
            .get(l.wrapping_sub(1))
            .and_then(|row| row.get(n.wrapping_sub(1)))
            .map_or(0.0, |x| x.to_f64())
    }
}

/// Right-hand-side builder for one CQ run; exposed so corrections can be inspected step by step.
#[derive(Debug, Clone)]
pub struct CqRhs {
    tau: f64,
    table: CorrectionTable,
    /// -A v + M f(0)
    start: Vec<f64>,
    /// M f^(l)(0), l = 1..k-2
    derivs: Vec<Vec<f64>>,
}

impl CqRhs {
    pub fn new(disc: &SpaceDisc, v: &[f64], tau: f64, table: CorrectionTable) -> Result<Self, StepError> {
        let k = table.k;
        let active = table.a.iter().chain(table.b.iter().flatten()).any(|x| x.num != 0);
        if !active {
            return Ok(Self { tau, table, start: Vec::new(), derivs: Vec::new() });
        }
        for l in 0..k {
            disc.source_derivative(l).map_err(|e| {
                StepError::Precondition(format!("corrected BDF{k} needs {} bounded source derivatives at 0: {e}", k - 1))
            })?;
        }
        let mut start: Vec<f64> = disc.stiff.apply(v).iter().map(|x| -x).collect();
        for (s, f) in start.iter_mut().zip(disc.source_derivative(0)?) {
            *s += f;
        }
        let derivs = (1..k.saturating_sub(1)).map(|l| disc.source_derivative(l)).collect::<Result<_, _>>()?;
        Ok(Self { tau, table, start, derivs })
    }

    pub fn fill(&self, disc: &SpaceDisc, n: usize, out: &mut [f64]) {
        disc.add_source(n as f64 * self.tau, 1.0, out);
        if n + 1 > self.table.k || self.start.is_empty() {
            return;
        }
        let a = self.table.a(n);
        if a != 0.0 {
            for (o, s) in out.iter_mut().zip(&self.start) {
                *o += a * s;
            }
        }
        for (l, d) in self.derivs.iter().enumerate() {
            let c = self.table.b(l + 1, n) * self.tau.powi(l as i32 + 1);
            if c != 0.0 {
                for (o, x) in out.iter_mut().zip(d) {
                    *o += c * x;
                }
            }
        }
    }
}

/// CQ run over [0, t_final] with N steps, with an explicit correction table.
pub fn solve_cq_with(
    disc: &SpaceDisc,
    alpha: f64,
    v: &[f64],
    t_final: f64,
    steps: usize,
    table: CorrectionTable,
) -> Result<Trajectory, StepError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(StepError::Precondition(format!("alpha = {alpha} outside (0, 1]")));
    }
    if steps == 0 {
        return Err(StepError::Precondition("need at least one step".into()));
    }
    let k = table.k;
    let tau = t_final / steps as f64;
    let scale = tau.powf(-alpha);
    let omega: Vec<f64> = cq_weights(alpha, k, steps).b.into_iter().map(|b| b * scale).collect();
    let rhs = CqRhs::new(disc, v, tau, table)?;
    let label = format!("bdf{k}");
    convolution_march(disc, v, &omega, steps, tau, &label, |n, out| {
        rhs.fill(disc, n, out);
        Ok(())
    })
}

/// Plain or corrected BDF-k CQ for a problem on a given mesh.
pub fn solve_cq(
    spec: &ProblemSpec,
    mesh: Mesh,
    fem: FemScheme,
    v_h: &[f64],
    k: usize,
    steps: usize,
    corrected: bool,
) -> Result<Trajectory, StepError> {
    if !(1..=6).contains(&k) {
        return Err(StepError::Precondition(format!("BDF order {k} outside 1..=6")));
    }
    if corrected {
        for term in &spec.source {
            if let TimeFactor::Power { gamma, .. } = term.time {
                if gamma != gamma.floor() && gamma < (k - 1) as f64 {
                    return Err(StepError::Precondition(format!(
                        "corrected BDF{k} needs a C^{} source; t^{gamma} is not",
                        k - 1
                    )));
                }
            }
        }
    }
    let disc = SpaceDisc::new(spec, mesh, fem)?;
    let table = if corrected { CorrectionTable::new(k) } else { CorrectionTable::zero(k) };
    solve_cq_with(&disc, spec.alpha, v_h, spec.t_final, steps, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fem::MeshKind;
    use crate::spectral_reference::{InitialData, SeparableTerm, SpatialFactor};
    use crate::stepping::{initial_vector, VhRule};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn symbol_examples() {
        assert_eq!(bdf_symbol(1), vec![Rational::new(1, 1), Rational::new(-1, 1)]);
        assert_eq!(bdf_symbol(2), vec![Rational::new(3, 2), Rational::new(-2, 1), Rational::new(1, 2)]);
        for k in 1..=6 {
            let s = bdf_symbol(k);
            let total: f64 = s.iter().map(|x| x.to_f64()).sum();
            assert!(total.abs() < 1e-15);
            let h: f64 = (1..=k).map(|j| 1.0 / j as f64).sum();
            assert!((s[0].to_f64() - h).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_examples() {
        let w = cq_weights(0.5, 1, 3).b;
        for (a, b) in w.iter().zip([1.0, -0.5, -0.125, -0.0625]) {
            assert!((a - b).abs() < 1e-15);
        }
        for k in 1..=6 {
            let w = cq_weights(1.0, k, 10).b;
            let s = bdf_symbol(k);
            for (j, x) in w.iter().enumerate() {
                let want = s.get(j).map_or(0.0, |r| r.to_f64());
                assert!((x - want).abs() < 1e-13, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn backward_euler_weights_are_binomials() {
        for &a in &[0.25, 0.5, 0.75] {
            let w = cq_weights(a, 1, 1000).b;
            let mut b = 1.0;
            for (j, x) in w.iter().enumerate() {
                if j > 0 {
                    b *= -(a - j as f64 + 1.0) / j as f64;
                }
                assert!((x - b).abs() <= 1e-13, "a={a} j={j}");
            }
        }
    }

    // Cauchy integral on |z| = rho with the trapezoidal rule.
    fn contour_weights(alpha: f64, k: usize, n: usize) -> Vec<f64> {
        let rho: f64 = 0.95;
        let l = 1 << 14;
        let mut out = vec![0.0; n + 1];
        for q in 0..l {
            let th = 2.0 * std::f64::consts::PI * q as f64 / l as f64;
            let z = Complex64::from_polar(rho, th);
            let mut d = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                d += (Complex64::new(1.0, 0.0) - z).powu(j as u32) / j as f64;
            }
            let da = d.powf(alpha);
            for (m, o) in out.iter_mut().enumerate() {
                *o += (da * Complex64::from_polar(1.0, -(m as f64) * th)).re;
            }
        }
        out.iter().enumerate().map(|(m, x)| x / l as f64 / rho.powi(m as i32)).collect()
    }

    #[test]
    fn weights_match_contour_oracle() {
        for k in 2..=6 {
            for &a in &[0.3, 0.7] {
                let w = cq_weights(a, k, 60).b;
                let c = contour_weights(a, k, 60);
                for j in 0..=60 {
                    assert!((w[j] - c[j]).abs() < 1e-11, "k={k} a={a} j={j}: {} {}", w[j], c[j]);
                }
            }
        }
    }

    #[test]
    fn partial_sums_decay() {
        for k in 1..=6 {
            let w = cq_weights(0.5, k, 10_000).b;
            let mut s = 0.0;
            let mut prev = f64::INFINITY;
            for (n, x) in w.iter().enumerate() {
                s += x;
                if n >= 2 * k {
                    assert!(s.abs() < prev, "k={k} n={n}");
                    prev = s.abs();
                }
            }
            assert!(s.abs() < 0.02);
        }
    }

    #[test]
    fn correction_table_matches_rationals() {
        let t = CorrectionTable::new(3);
        assert_eq!(t.a[0], Rational::new(11, 12));
        assert_eq!(t.a[1], Rational::new(-5, 12));
        assert_eq!(t.b(1, 1), 1.0 / 12.0);
        assert_eq!(CorrectionTable::new(6).a[2], Rational::new(17, 5));
        assert_eq!(CorrectionTable::new(5).b(3, 1), 1.0 / 720.0);
        assert_eq!(CorrectionTable::new(2).a(1), 0.5);
        assert_eq!(CorrectionTable::new(4).b(2, 2), 0.0);
        // Correcting the starting steps preserves consistency: sum of a_n is the constant-data defect.
        for k in 2..=6 {
            let t = CorrectionTable::new(k);
            assert_eq!(t.a.len(), k - 1);
            assert_eq!(t.b.len(), k - 2);
        }
    }

    fn sine_problem(alpha: f64, source: Vec<SeparableTerm>) -> ProblemSpec {
        ProblemSpec { domain: MeshKind::Interval, alpha, t_final: 1.0, initial: InitialData::SineMode { m: 1, n: 0 }, source }
    }

    fn scalar_cq(alpha: f64, k: usize, lambda: f64, u0: f64, t: f64, n: usize, corrected: bool) -> Vec<f64> {
        let tau = t / n as f64;
        let w: Vec<f64> = cq_weights(alpha, k, n).b.iter().map(|b| b * tau.powf(-alpha)).collect();
        let table = if corrected { CorrectionTable::new(k) } else { CorrectionTable::zero(k) };
        let mut wv = vec![0.0];
        for m in 1..=n {
            let mut h = 0.0;
            for j in 1..m {
                h += w[j] * wv[m - j];
            }
            let r = -lambda * u0 * (1.0 + table.a(m)) - h;
            wv.push(r / (w[0] + lambda));
        }
        wv.iter().map(|x| x + u0).collect()
    }

    #[test]
    fn single_mode_matches_scalar_recursion() {
        let mesh = Mesh::interval(16);
        let spec = sine_problem(0.4, vec![]);
        let v = initial_vector(&mesh, &spec.initial, VhRule::L2).unwrap();
        let h = mesh.h;
        let c = (std::f64::consts::PI * h).cos();
        let lam = 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
        for k in [1, 3, 5] {
            for corrected in [false, true] {
                let tr = solve_cq(&spec, mesh, FemScheme::Sg, &v.coeffs, k, 40, corrected).unwrap();
                let s = scalar_cq(0.4, k, lam, 1.0, 1.0, 40, corrected);
                for n in 0..=40 {
                    for (a, b) in tr.state(n).iter().zip(&v.coeffs) {
                        assert!((a - s[n] * b).abs() < 1e-12, "k={k} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let mesh = Mesh::interval(8);
        let mut spec = sine_problem(0.5, vec![]);
        spec.initial = InitialData::Zero;
        let tr = solve_cq(&spec, mesh, FemScheme::Sg, &vec![0.0; 7], 4, 20, true).unwrap();
        assert!(tr.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rhs_differs_only_in_starting_steps() {
        let mesh = Mesh::interval(8);
        let spec = sine_problem(0.5, vec![SeparableTerm { time: TimeFactor::ExpMinusOne { c: 1.0 }, space: SpatialFactor::Bubble1D }]);
        let disc = SpaceDisc::new(&spec, mesh, FemScheme::Sg).unwrap();
        let v = initial_vector(&mesh, &spec.initial, VhRule::Ritz).unwrap();
        for k in 2..=6 {
            let plain = CqRhs::new(&disc, &v.coeffs, 0.01, CorrectionTable::zero(k)).unwrap();
            let corr = CqRhs::new(&disc, &v.coeffs, 0.01, CorrectionTable::new(k)).unwrap();
            for n in 1..=20 {
                let mut a = vec![0.0; 7];
                let mut b = vec![0.0; 7];
                plain.fill(&disc, n, &mut a);
                corr.fill(&disc, n, &mut b);
                if n >= k {
                    assert_eq!(a, b);
                } else {
                    assert_ne!(a, b);
                }
            }
        }
        let p = solve_cq_with(&disc, 0.5, &v.coeffs, 1.0, 30, CorrectionTable::zero(3)).unwrap();
        let q = solve_cq(&spec, mesh, FemScheme::Sg, &v.coeffs, 3, 30, false).unwrap();
        assert_eq!(p.data, q.data);
    }

    #[test]
    fn rejects_rough_sources_when_corrected() {
        let mesh = Mesh::interval(8);
        let spec = sine_problem(0.5, vec![SeparableTerm { time: TimeFactor::Power { c: 1.0, gamma: -0.2 }, space: SpatialFactor::Bubble1D }]);
        let v = vec![0.0; 7];
        assert!(matches!(solve_cq(&spec, mesh, FemScheme::Sg, &v, 2, 10, true), Err(StepError::Precondition(_))));
        assert!(solve_cq(&spec, mesh, FemScheme::Sg, &v, 2, 10, false).is_ok());
    }

    #[test]
    fn near_one_approaches_backward_euler_heat() {
        let mesh = Mesh::interval(20);
        let spec = ProblemSpec { alpha: 0.999, t_final: 0.1, initial: InitialData::XSin2PiX, ..sine_problem(0.999, vec![]) };
        let v = initial_vector(&mesh, &spec.initial, VhRule::Ritz).unwrap();
        let tr = solve_cq(&spec, mesh, FemScheme::Sg, &v.coeffs, 1, 100, false).unwrap();
        let disc = SpaceDisc::new(&spec, mesh, FemScheme::Sg).unwrap();
        let tau = 0.001;
        let fac = crate::mesh_fem::SpdFactor::new(&disc.mass.combine(1.0 / tau, &disc.stiff, 1.0)).unwrap();
        let mut u = v.coeffs.clone();
        for _ in 0..100 {
            let r: Vec<f64> = disc.mass.apply(&u).iter().map(|x| x / tau).collect();
            u = fac.solve(&r).unwrap();
        }
        let diff: Vec<f64> = u.iter().zip(tr.last()).map(|(a, b)| a - b).collect();
        let rel = disc.mass.quad_form(&diff).sqrt() / disc.mass.quad_form(&u).sqrt();
        assert!(rel < 0.01, "{rel}");
    }

    proptest! {
        #[test]
        fn backward_euler_scalar_decay(a in 0.05f64..0.95, lam in 0.1f64..1000.0) {
            let u = scalar_cq(a, 1, lam, 1.0, 1.0, 200, false);
            for n in 1..u.len() {
                prop_assert!(u[n] > 0.0 && u[n] < u[n - 1]);
            }
        }
    }
}

//! L1 scheme for the Caputo derivative, plain and with first-step correction.

use crate::mesh_fem::Mesh;
use crate::mittag_leffler::rgamma;
use crate::spectral_reference::ProblemSpec;
use crate::stepping::{convolution_march, FemScheme, SpaceDisc, StepError, Trajectory};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Weights {
    pub alpha: f64,
    pub b: Vec<f64>,
}

/// b_j = ((j+1)^(1-a) - j^(1-a)) / Gamma(2-a), j = 0..n-1.
pub fn l1_weights(alpha: f64, n: usize) -> L1Weights {
    let e = 1.0 - alpha;
    let c = rgamma(2.0 - alpha);
    let b = (0..n)
        .map(|j| {
            let j = j as f64;
            // (j+1)^e - j^e without cancellation for large j.
            let d = if j == 0.0 { 1.0 } else { j.powf(e) * (e * (1.0 / j).ln_1p()).exp_m1() };
            c * d
        })
        .collect();
    L1Weights { alpha, b }
}

impl L1Weights {
    /// Convolution kernel d_0 = b_0, d_j = b_j - b_{j-1} acting on U - U^0.
    pub fn kernel(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.b.len() + 1);
        d.push(self.b[0]);
        for j in 1..self.b.len() {
            d.push(self.b[j] - self.b[j - 1]);
        }
        d
    }
}

/// tau^-a [b_0 U^n - b_{n-1} U^0 + sum_{j=1}^{n-1} (b_j - b_{j-1}) U^{n-j}] for a history U^0..U^n.
pub fn l1_apply(history: &[&[f64]], weights: &L1Weights, tau: f64) -> Vec<f64> {
    let n = history.len() - 1;
    assert!(n >= 1 && weights.b.len() >= n, "need U^0..U^n and n weights");
    let b = &weights.b;
    let s = tau.powf(-weights.alpha);
    let mut out: Vec<f64> = history[n].iter().zip(history[0]).map(|(u, u0)| b[0] * u - b[n - 1] * u0).collect();
    for j in 1..n {
        let c = b[j] - b[j - 1];
        for (o, u) in out.iter_mut().zip(history[n - j]) {
            *o += c * u;
        }
    }
    out.iter_mut().for_each(|x| *x *= s);
    out
}

/// L1 run over [0, t_final] with N steps.
pub fn solve_l1_with(
    disc: &SpaceDisc,
    alpha: f64,
    v: &[f64],
    t_final: f64,
    steps: usize,
    corrected: bool,
) -> Result<Trajectory, StepError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StepError::Precondition(format!("alpha = {alpha} outside (0, 1)")));
    }
    if steps == 0 {
        return Err(StepError::Precondition("need at least one step".into()));
    }
    let tau = t_final / steps as f64;
    let s = tau.powf(-alpha);
    let mut omega: Vec<f64> = l1_weights(alpha, steps).kernel().into_iter().map(|x| x * s).collect();
    omega.push(0.0);
    let start = if corrected {
        for l in 0..2 {
            disc.source_derivative(l).map_err(|e| StepError::Precondition(format!("corrected L1 needs f(0), f'(0): {e}")))?;
        }
        let mut st: Vec<f64> = disc.stiff.apply(v).iter().map(|x| -0.5 * x).collect();
        for (a, f) in st.iter_mut().zip(disc.source_derivative(0)?) {
            *a += 0.5 * f;
        }
        Some(st)
    } else {
        None
    };
    let label = if corrected { "l1c" } else { "l1" };
    convolution_march(disc, v, &omega, steps, tau, label, |n, out| {
        disc.add_source(n as f64 * tau, 1.0, out);
        if let (1, Some(st)) = (n, &start) {
            for (o, x) in out.iter_mut().zip(st) {
                *o += x;
            }
        }
        Ok(())
    })
}

/// Plain or corrected L1 for a problem on a given mesh.
pub fn solve_l1(
    spec: &ProblemSpec,
    mesh: Mesh,
    fem: FemScheme,
    v_h: &[f64],
    steps: usize,
    corrected: bool,
) -> Result<Trajectory, StepError> {
    let disc = SpaceDisc::new(spec, mesh, fem)?;
    solve_l1_with(&disc, spec.alpha, v_h, spec.t_final, steps, corrected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mittag_leffler::{gamma_fn, mlf, MlfParams};
    use crate::spectral_reference::InitialData;
    use crate::mesh_fem::MeshKind;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        let w = l1_weights(0.5, 3).b;
        assert!((w[0] - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((w[0] - 1.128379).abs() < 1e-6);
        assert!((w[1] - (2f64.sqrt() - 1.0) / gamma_fn(1.5).unwrap()).abs() < 1e-15);
        assert!((w[1] - 0.467390).abs() < 1e-6);
        for &a in &[0.1, 0.5, 0.9] {
            let w = l1_weights(a, 10_001).b;
            assert!((w[0] * gamma_fn(2.0 - a).unwrap() - 1.0).abs() < 1e-14);
            assert!(w.windows(2).all(|p| p[1] < p[0] && p[1] > 0.0));
        }
    }

    #[test]
    fn apply_examples() {
        let w = l1_weights(0.3, 5);
        let c = [2.0, -1.0];
        let hist: Vec<&[f64]> = vec![&c; 6];
        assert!(l1_apply(&hist, &w, 0.1).iter().all(|x| x.abs() < 1e-14));
        let u0 = [1.0];
        let u1 = [3.0];
        let one = l1_apply(&[&u0, &u1], &w, 0.1);
        assert!((one[0] - 0.1f64.powf(-0.3) * w.b[0] * 2.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn exact_on_piecewise_linear(a in 0.05f64..0.95, tau in 0.001f64..0.5, n in 1usize..200, slopes in proptest::collection::vec(-3.0f64..3.0, 200)) {
            // u piecewise linear with given slopes; Caputo derivative by exact integration per interval.
            let w = l1_weights(a, n);
            let mut u = vec![0.7];
            for j in 0..n {
                let next = u[j] + slopes[j] * tau;
                u.push(next);
            }
            let hist: Vec<[f64; 1]> = u.iter().map(|x| [*x]).collect();
            let refs: Vec<&[f64]> = hist.iter().map(|x| &x[..]).collect();
            let got = l1_apply(&refs, &w, tau)[0];
            let tn = n as f64 * tau;
            let mut want = 0.0;
            for j in 0..n {
                let (s0, s1) = (j as f64 * tau, (j + 1) as f64 * tau);
                want += slopes[j] * ((tn - s0).powf(1.0 - a) - (tn - s1).powf(1.0 - a)) / gamma_fn(2.0 - a).unwrap();
            }
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{} {}", got, want);
        }
    }

    #[test]
    fn exact_on_linear_time() {
        for &a in &[0.2, 0.5, 0.8] {
            let tau = 0.01;
            let w = l1_weights(a, 50);
            let hist: Vec<[f64; 1]> = (0..=50).map(|j| [j as f64 * tau]).collect();
            let refs: Vec<&[f64]> = hist.iter().map(|x| &x[..]).collect();
            let t: f64 = 0.5;
            let want = t.powf(1.0 - a) / gamma_fn(2.0 - a).unwrap();
            assert!((l1_apply(&refs, &w, tau)[0] - want).abs() < 1e-12);
        }
    }

    fn scalar_l1(a: f64, lam: f64, t: f64, n: usize, corrected: bool) -> Vec<f64> {
        let tau = t / n as f64;
        let d: Vec<f64> = l1_weights(a, n).kernel().iter().map(|x| x * tau.powf(-a)).collect();
        let mut w = vec![0.0];
        for m in 1..=n {
            let mut h = 0.0;
            for j in 1..m {
                h += d[j] * w[m - j];
            }
            let mut r = -lam - h;
            if corrected && m == 1 {
                r -= 0.5 * lam;
            }
            w.push(r / (d[0] + lam));
        }
        w.iter().map(|x| x + 1.0).collect()
    }

    #[test]
    fn scalar_decay_is_monotone() {
        for &lam in &[1.0, 10.0, 100.0] {
            for &a in &[0.3, 0.7] {
                let u = scalar_l1(a, lam, 1.0, 1000, false);
                for n in 1..u.len() {
                    assert!(u[n] > 0.0 && u[n] < u[n - 1]);
                }
            }
        }
    }

    fn pairwise_rates(a: f64, corrected: bool) -> Vec<f64> {
        let lam = 1.0;
        let exact = mlf(MlfParams::new(a, 1.0).unwrap(), -lam).unwrap();
        let errs: Vec<f64> = (0..6)
            .map(|i| {
                let n = 500 << i;
                (scalar_l1(a, lam, 1.0, n, corrected)[n] - exact).abs()
            })
            .collect();
        errs.windows(2).map(|p| (p[0] / p[1]).log2()).collect()
    }

    #[test]
    fn scalar_accuracy_orders() {
        for &a in &[0.3, 0.5, 0.7] {
            let p = pairwise_rates(a, false);
            assert!(p.iter().all(|r| (r - 1.0).abs() < 0.1), "plain a={a}: {p:?}");
        }
        for &a in &[0.5, 0.7] {
            let q = pairwise_rates(a, true);
            assert!(q.iter().all(|r| (r - (2.0 - a)).abs() < 0.1), "corrected a={a}: {q:?}");
        }
        // Small alpha approaches 2 - alpha only slowly.
        let q = pairwise_rates(0.3, true);
        assert!(q.windows(2).all(|w| w[1] > w[0]), "{q:?}");
        assert!(*q.last().unwrap() > 1.6 && *q.last().unwrap() < 1.7);
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = ProblemSpec { domain: MeshKind::Interval, alpha: 0.5, t_final: 1.0, initial: InitialData::Zero, source: vec![] };
        let tr = solve_l1(&spec, Mesh::interval(8), FemScheme::Sg, &vec![0.0; 7], 20, true).unwrap();
        assert!(tr.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn march_matches_scalar_recursion() {
        let mesh = Mesh::interval(16);
        let spec = ProblemSpec { domain: MeshKind::Interval, alpha: 0.6, t_final: 1.0, initial: InitialData::SineMode { m: 1, n: 0 }, source: vec![] };
        let v = crate::stepping::initial_vector(&mesh, &spec.initial, crate::stepping::VhRule::L2).unwrap();
        let h = mesh.h;
        let c = (std::f64::consts::PI * h).cos();
        let lam = 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
        for corrected in [false, true] {
            let tr = solve_l1(&spec, mesh, FemScheme::Sg, &v.coeffs, 30, corrected).unwrap();
            let s = scalar_l1(0.6, lam, 1.0, 30, corrected);
            for n in 0..=30 {
                for (a, b) in tr.state(n).iter().zip(&v.coeffs) {
                    assert!((a - s[n] * b).abs() < 1e-12);
                }
            }
        }
    }
}

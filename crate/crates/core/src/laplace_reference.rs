//! Semidiscrete solution by numerical Laplace inversion on hyperbolic contours.
//!
//! u_h(t) = (1/2 pi i) int e^{zt} (z^a M + A)^{-1} (z^{a-1} M v + sum_i G_i(z) b_i) dz,
//! with one contour per decade window of t and the trapezoid rule in the contour parameter.

use crate::linalg::{BandLdl, BandMatrix};
use crate::mesh_fem::SparseOperator;
use crate::mittag_leffler::gamma_fn;
use crate::spacetime_pg::TimeReference;
use crate::spectral_reference::TimeFactor;
use crate::stepping::{SpaceDisc, StepError};
use num_complex::Complex64;
use rayon::prelude::*;

/// Contour z(u) = mu (1 + sin(iu - phi)), mu = MU * K / t1, step H / K, nodes u_0..u_K.
const PHI: f64 = 1.05;
const MU: f64 = 1.2;
const H: f64 = 3.4;
pub const DEFAULT_NODES: usize = 30;
const WINDOW: f64 = 10.0;

#[derive(Debug, Clone)]
struct Window {
    lo: f64,
    z: Vec<Complex64>,
    /// Rows Im Y_k then Re Y_k, each of length dof.
    y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LaplaceReference {
    dof: usize,
    t_lo: f64,
    t_hi: f64,
    windows: Vec<Window>,
}

fn transform(g: &TimeFactor, z: Complex64) -> Result<Complex64, StepError> {
    Ok(match *g {
        TimeFactor::Constant { c } => c / z,
        TimeFactor::Power { c, gamma } => {
            let gf = gamma_fn(gamma + 1.0).map_err(|e| StepError::Precondition(e.to_string()))?;
            c * gf * z.powf(-gamma - 1.0)
        }
        TimeFactor::ExpMinusOne { c } => c / (z * (z - 1.0)),
    })
}

fn complex_pencil(mass: &SparseOperator, stiff: &SparseOperator, s: Complex64) -> BandMatrix<Complex64> {
    let p = mass.bandwidth().max(stiff.bandwidth());
    let mut b = BandMatrix::zeros(mass.dim, p);
    for (op, f) in [(mass, s), (stiff, Complex64::new(1.0, 0.0))] {
        for i in 0..op.dim {
            for k in op.row_ptr[i]..op.row_ptr[i + 1] {
                let j = op.cols[k];
                if j <= i {
                    b.add(i, j, f * op.vals[k]);
                }
            }
        }
    }
    b
}

impl LaplaceReference {
    /// Covers t in [t_lo, t_hi] for u_h with initial value `v` and the sources of `disc`.
    pub fn new(disc: &SpaceDisc, alpha: f64, v: &[f64], t_lo: f64, t_hi: f64, nodes: usize) -> Result<Self, StepError> {
        let d = disc.dof();
        if v.len() != d {
            return Err(StepError::Precondition("initial vector has the wrong length".into()));
        }
        if !(t_lo > 0.0 && t_hi >= t_lo) {
            return Err(StepError::Precondition("need 0 < t_lo <= t_hi".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) || nodes < 4 {
            return Err(StepError::Precondition("bad contour setup".into()));
        }
        let mv = disc.mass.apply(v);
        let has_v = v.iter().any(|x| *x != 0.0);
        let mut windows = Vec::new();
        let mut hi = t_hi;
        loop {
            let lo = hi / WINDOW;
            windows.push(Self::window(disc, alpha, &mv, has_v, lo, hi, nodes)?);
            if lo <= t_lo {
                break;
            }
            hi = lo;
        }
        Ok(Self { dof: d, t_lo, t_hi, windows })
    }

    fn window(
        disc: &SpaceDisc,
        alpha: f64,
        mv: &[f64],
        has_v: bool,
        lo: f64,
        hi: f64,
        nodes: usize,
    ) -> Result<Window, StepError> {
        let d = disc.dof();
        let pole = disc.loads.iter().any(|(g, _)| matches!(g, TimeFactor::ExpMinusOne { .. }));
        // A pole at z = 1 close to the contour needs extra nodes on the top windows.
        let nodes = if pole && MU * nodes as f64 / hi < 100.0 { nodes * 3 / 2 } else { nodes };
        let kf = nodes as f64;
        let mu = MU * kf / hi;
        let h = H / kf;
        if pole && mu * (1.0 - PHI.sin()) < 2.0 {
            return Err(StepError::Precondition("contour does not clear the pole at z = 1; shorten T".into()));
        }
        let i = Complex64::new(0.0, 1.0);
        let pts: Vec<(Complex64, Complex64, f64)> = (0..=nodes)
            .map(|k| {
                let u = k as f64 * h;
                let arg = i * u - PHI;
                let w = if k == 0 { 1.0 } else { 2.0 };
                (mu * (1.0 + arg.sin()), mu * i * arg.cos(), w * h / (2.0 * std::f64::consts::PI))
            })
            .collect();
        let solved: Result<Vec<Vec<Complex64>>, StepError> = pts
            .par_iter()
            .map(|&(z, dz, w)| {
                let za = z.powf(alpha);
                let mut rhs = vec![Complex64::new(0.0, 0.0); d];
                if has_v {
                    let s = za / z;
                    for (r, m) in rhs.iter_mut().zip(mv) {
                        *r += s * m;
                    }
                }
                for (g, load) in &disc.loads {
                    let s = transform(g, z)?;
                    for (r, l) in rhs.iter_mut().zip(load) {
                        *r += s * l;
                    }
                }
                let fac = BandLdl::factor(&complex_pencil(&disc.mass, &disc.stiff, za))
                    .map_err(|b| StepError::Precondition(format!("complex pencil breakdown at row {}", b.row)))?;
                fac.solve_in_place(&mut rhs);
                let f = w * dz;
                Ok(rhs.into_iter().map(|x| x * f).collect())
            })
            .collect();
        let solved = solved?;
        let nk = nodes + 1;
        let mut y = vec![0.0; 2 * nk * d];
        for (k, s) in solved.iter().enumerate() {
            for (j, x) in s.iter().enumerate() {
                y[k * d + j] = x.im;
                y[(nk + k) * d + j] = x.re;
            }
        }
        Ok(Window { lo, z: pts.iter().map(|p| p.0).collect(), y })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    fn fill_window(&self, w: &Window, times: &[f64], out: &mut [f64]) {
        let d = self.dof;
        let nk = w.z.len();
        let mut coef = vec![0.0; times.len() * 2 * nk];
        for (r, &t) in times.iter().enumerate() {
            for (k, z) in w.z.iter().enumerate() {
                let e = (z * t).exp();
                coef[r * 2 * nk + k] = e.re;
                coef[r * 2 * nk + nk + k] = e.im;
            }
        }
        unsafe {
            matrixmultiply::dgemm(
                times.len(),
                2 * nk,
                d,
                1.0,
                coef.as_ptr(),
                2 * nk as isize,
                1,
                w.y.as_ptr(),
                d as isize,
                1,
                0.0,
                out.as_mut_ptr(),
                d as isize,
                1,
            );
        }
    }
}

impl TimeReference for LaplaceReference {
    fn dof(&self) -> usize {
        self.dof
    }

    fn fill_states(&self, times: &[f64], out: &mut [f64]) -> Result<(), StepError> {
        let d = self.dof;
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.windows.len()];
        for (i, &t) in times.iter().enumerate() {
            if !(t >= self.t_lo * (1.0 - 1e-12) && t <= self.t_hi * (1.0 + 1e-12)) {
                return Err(StepError::Precondition(format!("t = {t:e} outside the contour windows")));
            }
            let wi = self.windows.iter().position(|w| t >= w.lo).unwrap_or(self.windows.len() - 1);
            groups[wi].push(i);
        }
        let mut buf = Vec::new();
        for (w, idx) in self.windows.iter().zip(&groups) {
            if idx.is_empty() {
                continue;
            }
            let ts: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            buf.resize(ts.len() * d, 0.0);
            self.fill_window(w, &ts, &mut buf);
            for (r, &i) in idx.iter().enumerate() {
                out[i * d..(i + 1) * d].copy_from_slice(&buf[r * d..(r + 1) * d]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fem::{Mesh, MeshKind};
    use crate::spectral_reference::{
        semidiscrete_exact_1d, DiscreteEigen, InitialData, ProblemSpec, SeparableTerm, SpatialFactor,
    };
    use crate::stepping::{initial_vector, FemScheme, VhRule};

    fn spec(alpha: f64, initial: InitialData, source: Vec<SeparableTerm>) -> ProblemSpec {
        ProblemSpec { domain: MeshKind::Interval, alpha, t_final: 1.0, initial, source }
    }

    fn check(s: &ProblemSpec, t_lo: f64, tol: f64) {
        let mesh = Mesh::interval(20);
        let disc = SpaceDisc::new(s, mesh, FemScheme::Sg).unwrap();
        let v = initial_vector(&mesh, &s.initial, VhRule::L2).unwrap();
        let r = LaplaceReference::new(&disc, s.alpha, &v.coeffs, t_lo, 1.0, DEFAULT_NODES).unwrap();
        let times: Vec<f64> = (0..=40).map(|j| t_lo * (1.0 / t_lo).powf(j as f64 / 40.0)).collect();
        let mut out = vec![0.0; times.len() * disc.dof()];
        r.fill_states(&times, &mut out).unwrap();
        let eig = DiscreteEigen::new(&disc.mass, &disc.stiff).unwrap();
        let sources: Vec<(TimeFactor, Vec<f64>)> = disc.loads.clone();
        let want_at = |t: f64| {
            if sources.is_empty() {
                semidiscrete_exact_1d(s, &disc.mass, &disc.stiff, &v, t).unwrap().coeffs
            } else {
                eig.solve(s.alpha, &v.coeffs, &sources, t).unwrap()
            }
        };
        let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        for (i, &t) in times.iter().enumerate() {
            let want = want_at(t);
            let got = &out[i * disc.dof()..(i + 1) * disc.dof()];
            // Accuracy is relative to the solution size over the enclosing decade.
            let scale = sup(&want).max(sup(&want_at((10.0 * t).min(1.0))));
            let err = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= tol * scale.max(1e-300), "t={t:e}: err {err:e} scale {scale:e}");
        }
    }

    #[test]
    fn matches_eigen_expansion_for_initial_data() {
        for &a in &[0.3, 0.7] {
            check(&spec(a, InitialData::XSin2PiX, vec![]), 1e-6, 1e-9);
        }
    }

    #[test]
    fn matches_eigen_expansion_for_sources() {
        let terms = |g| vec![SeparableTerm { time: g, space: SpatialFactor::XSin2PiX }];
        for &a in &[0.3, 0.5, 0.7] {
            check(&spec(a, InitialData::Zero, terms(TimeFactor::Power { c: 1.0, gamma: -0.2 })), 1e-7, 1e-9);
            check(&spec(a, InitialData::Zero, terms(TimeFactor::Constant { c: 2.0 })), 1e-7, 1e-9);
            check(&spec(a, InitialData::Zero, terms(TimeFactor::ExpMinusOne { c: 1.0 })), 1e-7, 1e-9);
        }
    }

    #[test]
    fn rejects_times_outside_windows() {
        let s = spec(0.5, InitialData::Zero, vec![SeparableTerm { time: TimeFactor::Constant { c: 1.0 }, space: SpatialFactor::Constant { value: 1.0 } }]);
        let mesh = Mesh::interval(4);
        let disc = SpaceDisc::new(&s, mesh, FemScheme::Sg).unwrap();
        let r = LaplaceReference::new(&disc, 0.5, &[0.0; 3], 1e-3, 1.0, 16).unwrap();
        let mut out = vec![0.0; 3];
        assert!(r.fill_states(&[1e-5], &mut out).is_err());
        assert!(r.fill_states(&[2.0], &mut out).is_err());
        assert!(r.fill_states(&[0.5], &mut out).is_ok());
    }
}

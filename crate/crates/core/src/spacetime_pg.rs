//! Space-time Petrov-Galerkin scheme with fractionalized piecewise-constant trial functions.
//!
//! Trial basis phi_n(t) = (t - t_{n-1})^a on [t_{n-1}, T], test functions piecewise constant
//! in time. Testing against the indicator of each step gives a lower-triangular march.

use crate::mesh_fem::{eval_grid_function, GridFunction, Mesh, SparseOperator, SpdFactor};
use crate::mittag_leffler::gamma_fn;
use crate::quadrature::graded_rule;
use crate::spectral_reference::ProblemSpec;
use crate::stepping::{FemScheme, SpaceDisc, StepError, Trajectory};

/// c_m = ((m+1)^(a+1) - m^(a+1)) / (a+1).
pub fn pg_factors(alpha: f64, n: usize) -> Vec<f64> {
    let e = alpha + 1.0;
    (0..n)
        .map(|m| {
            let m = m as f64;
            if m == 0.0 {
                1.0 / e
            } else {
                m.powf(e) * (e * (1.0 / m).ln_1p()).exp_m1() / e
            }
        })
        .collect()
}

/// Assembled time-stepping system.
#[derive(Debug, Clone)]
pub struct PgSystem {
    pub alpha: f64,
    pub tau: f64,
    pub steps: usize,
    pub disc: SpaceDisc,
    pub c: Vec<f64>,
    /// F_1..F_N, row-major.
    pub rhs: Vec<f64>,
}

impl PgSystem {
    pub fn rhs(&self, n: usize) -> &[f64] {
        let d = self.disc.dof();
        &self.rhs[(n - 1) * d..n * d]
    }

    pub fn rhs_mut(&mut self, n: usize) -> &mut [f64] {
        let d = self.disc.dof();
        &mut self.rhs[(n - 1) * d..n * d]
    }

    pub fn mass_factor(&self) -> f64 {
        gamma_fn(self.alpha + 1.0).expect("alpha in (0,1)") * self.tau
    }
}

pub fn pg_assemble(spec: &ProblemSpec, mesh: Mesh, fem: FemScheme, steps: usize) -> Result<PgSystem, StepError> {
    spec.validate().map_err(|e| StepError::Precondition(e.to_string()))?;
    if !spec.initial.is_zero() {
        return Err(StepError::Precondition("the space-time scheme needs zero initial data".into()));
    }
    if steps == 0 {
        return Err(StepError::Precondition("need at least one step".into()));
    }
    let disc = SpaceDisc::new(spec, mesh, fem)?;
    let d = disc.dof();
    let tau = spec.t_final / steps as f64;
    let mut rhs = vec![0.0; steps * d];
    for n in 1..=steps {
        let (a, b) = ((n - 1) as f64 * tau, n as f64 * tau);
        let row = &mut rhs[(n - 1) * d..n * d];
        for (g, load) in &disc.loads {
            let s = g.integral(a, b);
            for (r, l) in row.iter_mut().zip(load) {
                *r += s * l;
            }
        }
    }
    Ok(PgSystem { alpha: spec.alpha, tau, steps, disc, c: pg_factors(spec.alpha, steps), rhs })
}

/// Coefficients U_1..U_N of the fractional basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PgTrajectory {
    pub mesh: Mesh,
    pub alpha: f64,
    pub tau: f64,
    pub steps: usize,
    pub dof: usize,
    pub coeffs: Vec<f64>,
}

pub fn pg_solve(sys: &PgSystem) -> Result<PgTrajectory, StepError> {
    let d = sys.disc.dof();
    let (n_steps, tau, a) = (sys.steps, sys.tau, sys.alpha);
    let gm = sys.mass_factor();
    let st = tau.powf(a + 1.0);
    let lhs = sys.disc.mass.combine(gm, &sys.disc.stiff, st * sys.c[0]);
    let fac = SpdFactor::new(&lhs)?;
    let mut u = vec![0.0; n_steps * d];
    let mut running = vec![0.0; d];
    let mut hist = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for n in 1..=n_steps {
        hist.iter_mut().for_each(|x| *x = 0.0);
        for k in 1..n {
            let c = sys.c[n - k];
            for (h, x) in hist.iter_mut().zip(&u[(k - 1) * d..k * d]) {
                *h += c * x;
            }
        }
        buf.copy_from_slice(sys.rhs(n));
        sys.disc.mass.matvec_add(-gm, &running, &mut buf);
        sys.disc.stiff.matvec_add(-st, &hist, &mut buf);
        fac.solve_in_place(&mut buf)?;
        for (r, x) in running.iter_mut().zip(&buf) {
            *r += x;
        }
        u[(n - 1) * d..n * d].copy_from_slice(&buf);
    }
    Ok(PgTrajectory { mesh: sys.disc.mesh, alpha: a, tau, steps: n_steps, dof: d, coeffs: u })
}

impl PgTrajectory {
    pub fn t_final(&self) -> f64 {
        self.tau * self.steps as f64
    }

    pub fn coeff(&self, k: usize) -> &[f64] {
        &self.coeffs[(k - 1) * self.dof..k * self.dof]
    }

    /// Nodal field u(t) = sum_{t_{k-1} < t} U_k (t - t_{k-1})^a.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dof];
        self.fill_states(&[t], &mut out);
        out
    }

    /// Row-major states at many times through one matrix product.
    pub fn fill_states(&self, times: &[f64], out: &mut [f64]) {
        let (nt, nk, d) = (times.len(), self.steps, self.dof);
        assert_eq!(out.len(), nt * d);
        let mut phi = vec![0.0; nt * nk];
        for (i, &t) in times.iter().enumerate() {
            for k in 1..=nk {
                let s = t - (k - 1) as f64 * self.tau;
                if s <= 0.0 {
                    break;
                }
                phi[i * nk + k - 1] = s.powf(self.alpha);
            }
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        if nt == 0 || nk == 0 || d == 0 {
            return;
        }
        unsafe {
            matrixmultiply::dgemm(
                nt,
                nk,
                d,
                1.0,
                phi.as_ptr(),
                nk as isize,
                1,
                self.coeffs.as_ptr(),
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

/// Values of the discrete solution at spatial points and time t.
pub fn pg_evaluate(traj: &PgTrajectory, points: &[(f64, f64)], t: f64) -> Vec<f64> {
    let g = GridFunction::new(traj.mesh, traj.state_at(t));
    points.iter().map(|&(x, y)| eval_grid_function(&g, x, y)).collect()
}

/// A semidiscrete solution that can be sampled at arbitrary times in (0, T].
pub trait TimeReference: Sync {
    fn dof(&self) -> usize;
    /// Row-major states at `times`.
    fn fill_states(&self, times: &[f64], out: &mut [f64]) -> Result<(), StepError>;
}

impl TimeReference for PgTrajectory {
    fn dof(&self) -> usize {
        self.dof
    }
    fn fill_states(&self, times: &[f64], out: &mut [f64]) -> Result<(), StepError> {
        PgTrajectory::fill_states(self, times, out);
        Ok(())
    }
}

/// Fine-step trajectory read between grid points by local cubic interpolation.
#[derive(Debug, Clone)]
pub struct CubicReference {
    pub traj: Trajectory,
}

impl TimeReference for CubicReference {
    fn dof(&self) -> usize {
        self.traj.dof
    }

    fn fill_states(&self, times: &[f64], out: &mut [f64]) -> Result<(), StepError> {
        let (n, d, tau) = (self.traj.steps(), self.traj.dof, self.traj.tau);
        if n < 3 {
            return Err(StepError::Precondition("cubic interpolation needs at least three steps".into()));
        }
        for (i, &t) in times.iter().enumerate() {
            let x = t / tau;
            if !(x >= 0.0 && x <= n as f64 * (1.0 + 1e-12)) {
                return Err(StepError::Precondition(format!("t = {t} outside the reference window")));
            }
            let j0 = (x.floor() as usize).saturating_sub(1).min(n - 3);
            let s = x - j0 as f64;
            let w = [
                -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
                s * (s - 2.0) * (s - 3.0) / 2.0,
                -s * (s - 1.0) * (s - 3.0) / 2.0,
                s * (s - 1.0) * (s - 2.0) / 6.0,
            ];
            let row = &mut out[i * d..(i + 1) * d];
            row.iter_mut().for_each(|v| *v = 0.0);
            for (m, wm) in w.iter().enumerate() {
                for (r, u) in row.iter_mut().zip(self.traj.state(j0 + m)) {
                    *r += wm * u;
                }
            }
        }
        Ok(())
    }
}

/// Graded composite Gauss rule applied on every time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeQuadRule {
    pub levels: usize,
    pub ratio: f64,
    pub points: usize,
}

impl Default for TimeQuadRule {
    fn default() -> Self {
        Self { levels: 4, ratio: 0.1, points: 6 }
    }
}

impl TimeQuadRule {
    pub fn doubled(&self) -> Self {
        Self { points: 2 * self.points, ..*self }
    }

    /// Smallest node the rule produces on a step of length tau.
    pub fn smallest_node(&self, tau: f64) -> f64 {
        let (x, _) = graded_rule(0.0, tau, self.levels, self.ratio, self.points);
        x[0]
    }
}

/// Base and doubled-density estimates of the L2(Q_T) error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgError {
    pub value: f64,
    pub doubled: f64,
    pub rel_change: f64,
}

pub const QUAD_SELF_CHECK: f64 = 1e-3;

fn l2qt_squared(
    traj: &PgTrajectory,
    reference: &dyn TimeReference,
    mass: &SparseOperator,
    rule: TimeQuadRule,
) -> Result<f64, StepError> {
    let d = traj.dof;
    let (x0, w0) = graded_rule(0.0, traj.tau, rule.levels, rule.ratio, rule.points);
    let per = x0.len();
    let chunk = (512 / per).max(1);
    let mut times = Vec::with_capacity(chunk * per);
    let mut weights = Vec::with_capacity(chunk * per);
    let mut ours = Vec::new();
    let mut theirs = Vec::new();
    let mut total = 0.0;
    let mut n0 = 1;
    while n0 <= traj.steps {
        let n1 = (n0 + chunk - 1).min(traj.steps);
        times.clear();
        weights.clear();
        for n in n0..=n1 {
            let t0 = (n - 1) as f64 * traj.tau;
            times.extend(x0.iter().map(|x| t0 + x));
            weights.extend_from_slice(&w0);
        }
        ours.resize(times.len() * d, 0.0);
        theirs.resize(times.len() * d, 0.0);
        traj.fill_states(&times, &mut ours);
        reference.fill_states(&times, &mut theirs)?;
        for (i, w) in weights.iter().enumerate() {
            let e = &mut ours[i * d..(i + 1) * d];
            for (a, b) in e.iter_mut().zip(&theirs[i * d..(i + 1) * d]) {
                *a -= b;
            }
            total += w * mass.quad_form(e);
        }
        n0 = n1 + 1;
    }
    Ok(total)
}

/// L2(Q_T) distance between a PG solution and a semidiscrete reference, spatial norm through `mass`.
pub fn pg_l2qt_error(
    traj: &PgTrajectory,
    reference: &dyn TimeReference,
    mass: &SparseOperator,
    rule: TimeQuadRule,
) -> Result<PgError, StepError> {
    if reference.dof() != traj.dof || mass.dim != traj.dof {
        return Err(StepError::Precondition("reference, mass and trajectory dimensions differ".into()));
    }
    let value = l2qt_squared(traj, reference, mass, rule)?.max(0.0).sqrt();
    let doubled = l2qt_squared(traj, reference, mass, rule.doubled())?.max(0.0).sqrt();
    let rel_change = if doubled > 0.0 { (value - doubled).abs() / doubled } else { value };
    if rel_change >= QUAD_SELF_CHECK {
        return Err(StepError::Precondition(format!(
            "time quadrature self-check failed: {value:.6e} vs {doubled:.6e}"
        )));
    }
    Ok(PgError { value, doubled, rel_change })
}
